//! Experiment drivers that turn the quantitative propositions into
//! falsifiable numeric campaigns: the Γ comparison map and its linearity
//! defect, facet-length asymptotics, the longest-facet correspondence,
//! twist-length ratios, the surface discriminator, and isometry checks with
//! facet matching.
//!
//! Experiments are pure given their seeds; every report is reproducible from
//! (seed, depth, bits) and carries per-row converged flags. A report with an
//! unconverged row cannot PASS.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::curves::{self, MappingClass, Slope, SurfaceKind};
use crate::geom::{
    dual_sphere_from_table, facet_from_table, facets_in_slope_arc, longest_facet, DualSphere,
    EnumerationControl, NormTable,
};
use crate::holonomy::{
    build_point, curve_length, remark_point, PrecisionContext, TeichPoint,
};
use crate::num::{linear_fit, Cov2, Real, Vec2};
use crate::{Error, Result};

/// One pass/fail line of an experiment report.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub detail: String,
}

/// Tabular experiment output with parameters, fitted constants, and verdicts.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub id: String,
    pub params: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub fitted: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
    /// Set when any input row failed to converge; such a report cannot PASS.
    pub all_rows_converged: bool,
}

impl ExperimentReport {
    pub fn new(id: &str) -> Self {
        ExperimentReport {
            id: id.to_string(),
            params: BTreeMap::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            fitted: BTreeMap::new(),
            verdicts: Vec::new(),
            all_rows_converged: true,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn verdict(&mut self, criterion: &str, pass: bool, detail: impl ToString) {
        self.verdicts.push(Verdict {
            criterion: criterion.to_string(),
            pass,
            detail: detail.to_string(),
        });
    }

    pub fn pass(&self) -> bool {
        self.all_rows_converged && self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "experiment": self.id,
            "params": self.params,
            "columns": self.columns,
            "rows": self.rows,
            "fitted": self.fitted,
            "verdicts": self.verdicts.iter().map(|v| json!({
                "criterion": v.criterion,
                "pass": v.pass,
                "detail": v.detail,
            })).collect::<Vec<_>>(),
            "all_rows_converged": self.all_rows_converged,
            "pass": self.pass(),
        })
    }

    /// CSV with a header block, row block, and verdict block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# experiment,{}\n", self.id));
        for (k, v) in &self.params {
            out.push_str(&format!("# param,{k},{v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for (k, v) in &self.fitted {
            out.push_str(&format!("# fitted,{k},{v}\n"));
        }
        for v in &self.verdicts {
            out.push_str(&format!(
                "# verdict,{},{},{}\n",
                v.criterion,
                if v.pass { "PASS" } else { "FAIL" },
                v.detail
            ));
        }
        out.push_str(&format!(
            "# all_rows_converged,{}\n# overall,{}\n",
            self.all_rows_converged,
            if self.pass() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// The norm-preserving comparison map Γ matching the dual spheres of two
/// points vertex-to-vertex (same slope) and linearly along edges.
pub struct GammaMap {
    sphere_x: DualSphere,
    sphere_y: DualSphere,
    y_grad: HashMap<Slope, Cov2>,
    pub depth: u32,
}

impl GammaMap {
    pub fn new(x: &TeichPoint, y: &TeichPoint, ctrl: &EnumerationControl) -> Result<GammaMap> {
        if x.kind() != y.kind() {
            return Err(Error::SurfaceMismatch);
        }
        let tx = NormTable::build(x, ctrl.depth);
        let ty = NormTable::build(y, ctrl.depth);
        let sphere_x = dual_sphere_from_table(&tx)?;
        let sphere_y = dual_sphere_from_table(&ty)?;
        let y_grad = ty.entries.iter().map(|e| (e.slope, e.dlog.clone())).collect();
        Ok(GammaMap { sphere_x, sphere_y, y_grad, depth: ctrl.depth })
    }

    /// Γ(w): displace the dual-sphere boundary point on the ray of w to the
    /// matching boundary point at Y, preserving the radial factor.
    pub fn apply(&self, w: &Cov2) -> Result<Cov2> {
        if w.is_zero() {
            return Err(Error::ZeroCovector);
        }
        let g = self.sphere_x.gauge(w)?;
        let (i, j) = g.sector;
        let si = self.sphere_x.vertices[i].0;
        let sj = self.sphere_x.vertices[j].0;
        let gi = self.y_grad.get(&si).ok_or(Error::DepthInsufficient { depth: self.depth })?;
        let gj = self.y_grad.get(&sj).ok_or(Error::DepthInsufficient { depth: self.depth })?;
        let one = Real::one(g.u.bits());
        let edge = gi.scale(&(&one - &g.u)).add(&gj.scale(&g.u));
        // gauge solves κ·w = (edge point at X), so w = (1/κ)·edge_X and the
        // image keeps the radial factor: Γ(w) = (1/κ)·edge_Y
        Ok(edge.scale(&(&one / &g.kappa)))
    }

    /// Truncated dual norm at X (the gauge of the depth-d dual ball).
    pub fn dual_norm_x(&self, w: &Cov2) -> Result<Real> {
        Ok(dual_scale(&self.sphere_x.gauge(w)?.kappa))
    }

    /// Truncated dual norm at Y.
    pub fn dual_norm_y(&self, w: &Cov2) -> Result<Real> {
        Ok(dual_scale(&self.sphere_y.gauge(w)?.kappa))
    }
}

/// The gauge solve returns κ with κ·w on the boundary, so the dual norm of
/// w is 1/κ.
fn dual_scale(kappa: &Real) -> Real {
    Real::one(kappa.bits()) / kappa
}

/// Γ_{X,Y}(w) for a single covector.
pub fn gamma_map(x: &TeichPoint, y: &TeichPoint, w: &Cov2, ctrl: &EnumerationControl) -> Result<Cov2> {
    GammaMap::new(x, y, ctrl)?.apply(w)
}

fn seeded_covector(rng: &mut ChaCha8Rng, bits: u32) -> Cov2 {
    loop {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        if a.abs() + b.abs() > 1e-3 {
            return Cov2::new(Real::from_f64(bits, a), Real::from_f64(bits, b));
        }
    }
}

/// Additivity defect of Γ over seeded covector pairs:
/// max ‖Γ(w₁+w₂) − Γ(w₁) − Γ(w₂)‖*_Y / (‖w₁‖*_X + ‖w₂‖*_X).
pub fn gamma_linearity_defect(
    x: &TeichPoint,
    y: &TeichPoint,
    sample_count: u32,
    seed: u64,
    ctrl: &EnumerationControl,
) -> Result<(f64, ExperimentReport)> {
    if sample_count < 2 {
        return Err(Error::Invalid("need at least two samples".into()));
    }
    let gamma = GammaMap::new(x, y, ctrl)?;
    let bits = x.bits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ExperimentReport::new("gamma-linearity-defect");
    report.param("seed", seed);
    report.param("bits", bits);
    report.param("depth", ctrl.depth);
    report.param("samples", sample_count);
    report.columns = vec![
        "pair".into(),
        "defect".into(),
        "norm_preservation_w1".into(),
        "norm_preservation_w2".into(),
    ];
    let mut defect = 0.0f64;
    let mut preservation = 0.0f64;
    for k in 0..sample_count {
        let w1 = seeded_covector(&mut rng, bits);
        let w2 = seeded_covector(&mut rng, bits);
        let g1 = gamma.apply(&w1)?;
        let g2 = gamma.apply(&w2)?;
        let gs = gamma.apply(&w1.add(&w2))?;
        let diff = gs.sub(&g1).sub(&g2);
        let denom = (gamma.dual_norm_x(&w1)? + gamma.dual_norm_x(&w2)?).to_f64();
        let num = if diff.is_zero() { 0.0 } else { gamma.dual_norm_y(&diff)?.to_f64() };
        let d = num / denom;
        defect = defect.max(d);
        // norm preservation per sample
        let p1 = ((gamma.dual_norm_y(&g1)? - gamma.dual_norm_x(&w1)?)
            / gamma.dual_norm_x(&w1)?)
        .abs()
        .to_f64();
        let p2 = ((gamma.dual_norm_y(&g2)? - gamma.dual_norm_x(&w2)?)
            / gamma.dual_norm_x(&w2)?)
        .abs()
        .to_f64();
        preservation = preservation.max(p1).max(p2);
        report.rows.push(vec![
            k.to_string(),
            format!("{d:.6e}"),
            format!("{p1:.6e}"),
            format!("{p2:.6e}"),
        ]);
    }
    report.fitted.insert("max_defect".into(), format!("{defect:.6e}"));
    report.fitted.insert("max_norm_preservation_gap".into(), format!("{preservation:.6e}"));
    Ok((defect, report))
}

/// β_n = Dⁿ_α β as a slope, where Dⁿ is the geometric mapping-class twist
/// (one Farey step per twist on the torus, two on the sphere).
pub fn geometric_twist(kind: SurfaceKind, alpha: &Slope, n: i128, beta: &Slope) -> Result<Slope> {
    curves::dehn_twist(alpha, n * kind.twist_steps(), beta)
}

/// Facet-length asymptotics along a twist family: rows of
/// (n, ℓ(β_n), |F(β_n)|, |log|F||/n, |F|/(ℓ²e^{−cℓ})) with c = 1 on the
/// torus and 1/2 on the sphere, plus the fits of |log|F|| against n, raw and
/// ℓ²-corrected.
pub fn facet_asymptotics(
    x: &TeichPoint,
    alpha: &Slope,
    beta: &Slope,
    n_range: std::ops::RangeInclusive<i128>,
    ctrl: &EnumerationControl,
) -> Result<ExperimentReport> {
    let kind = x.kind();
    let need = kind.farey_intersection();
    if curves::intersection_number(kind, alpha, beta)? != need {
        return Err(Error::Invalid(format!(
            "facet asymptotics needs i(α,β) = {need} on {kind:?}"
        )));
    }
    let table = NormTable::build(x, ctrl.depth);
    let l_alpha = curve_length(x, alpha)?.to_f64();
    let decay = match kind {
        SurfaceKind::OncePuncturedTorus => 1.0,
        SurfaceKind::FourPuncturedSphere => 0.5,
    };
    let mut report = ExperimentReport::new("facet-asymptotics");
    report.param("kind", kind.token());
    report.param("alpha", alpha.token());
    report.param("beta", beta.token());
    report.param("bits", x.bits());
    report.param("depth", ctrl.depth);
    report.param("l_alpha", format!("{l_alpha:.12e}"));
    report.columns = vec![
        "n".into(),
        "beta_n".into(),
        "ell_n".into(),
        "facet_len".into(),
        "limit_column".into(),
        "ratio_to_model".into(),
        "corrected_limit".into(),
        "converged".into(),
    ];
    let mut ns: Vec<f64> = Vec::new();
    let mut logf: Vec<f64> = Vec::new();
    let mut logf_corr: Vec<f64> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    for n in n_range {
        let bn = geometric_twist(kind, alpha, n, beta)?;
        let ell = table.eval_slope(&bn).ell;
        let f = match facet_from_table(x, &table, &bn, ctrl) {
            Ok(f) => f,
            Err(Error::PrecisionUnderflow { bits, what }) => {
                report.rows.push(vec![
                    n.to_string(),
                    bn.token(),
                    ell.to_decimal_string(),
                    format!("unresolved at {bits} bits: {what}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".into(),
                ]);
                report.all_rows_converged = false;
                continue;
            }
            Err(e) => return Err(e),
        };
        let lf = f.length.ln();
        let elf = ell.to_f64();
        let limit = lf.abs().to_f64() / n.unsigned_abs() as f64;
        let model = Real::from_f64(x.bits(), -decay) * &ell;
        let ratio = (&f.length / (ell.square() * model.exp())).to_f64();
        let corrected = (lf.abs().to_f64() + 2.0 * elf.ln()) / n.unsigned_abs() as f64;
        report.rows.push(vec![
            n.to_string(),
            bn.token(),
            ell.to_decimal_string(),
            f.length.to_decimal_string(),
            format!("{limit:.12e}"),
            format!("{ratio:.12e}"),
            format!("{corrected:.12e}"),
            f.converged.to_string(),
        ]);
        if !f.converged {
            report.all_rows_converged = false;
        }
        ns.push(n as f64);
        logf.push(lf.abs().to_f64());
        logf_corr.push(lf.abs().to_f64() + 2.0 * elf.ln());
        ratios.push(ratio);
    }
    if ns.len() >= 2 {
        let (_, slope_raw) = linear_fit(&ns, &logf);
        let (_, slope_corr) = linear_fit(&ns, &logf_corr);
        report.fitted.insert("fit_slope".into(), format!("{slope_raw:.12e}"));
        report.fitted.insert("fit_slope_l2_corrected".into(), format!("{slope_corr:.12e}"));
    }
    if !ratios.is_empty() {
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        report.fitted.insert("ratio_min".into(), format!("{lo:.12e}"));
        report.fitted.insert("ratio_max".into(), format!("{hi:.12e}"));
        report.fitted.insert("ratio_spread".into(), format!("{:.12e}", hi / lo));
    }
    report.fitted.insert("l_alpha".into(), format!("{l_alpha:.12e}"));
    Ok(report)
}

/// Longest-facet correspondence: for each n in the window, F(β_n) must be
/// the strictly longest facet in the arc (v(β⁻_{n−1}), v(α⁺)) — and in the
/// mirror arc (v(α⁻), v(β⁺_{n+1})) for negative n.
pub fn longest_facet_correspondence(
    x: &TeichPoint,
    alpha: &Slope,
    beta: &Slope,
    n_window: std::ops::RangeInclusive<i128>,
    ctrl: &EnumerationControl,
) -> Result<ExperimentReport> {
    let kind = x.kind();
    let need = kind.farey_intersection();
    if curves::intersection_number(kind, alpha, beta)? != need {
        return Err(Error::Invalid(format!(
            "longest-facet correspondence needs i(α,β) = {need} on {kind:?}"
        )));
    }
    let table = NormTable::build(x, ctrl.depth);
    let falpha = facet_from_table(x, &table, alpha, ctrl)?;
    let mut report = ExperimentReport::new("longest-facet-correspondence");
    report.param("kind", kind.token());
    report.param("alpha", alpha.token());
    report.param("beta", beta.token());
    report.param("bits", x.bits());
    report.param("depth", ctrl.depth);
    report.param("l_alpha", curve_length(x, alpha)?.to_decimal_string());
    report.columns = vec![
        "n".into(),
        "beta_n".into(),
        "facets_in_arc".into(),
        "longest".into(),
        "expected".into(),
        "margin_rel".into(),
        "pass".into(),
    ];
    const LOCAL_DEPTH: u32 = 12;
    for n in n_window {
        if n == 0 {
            continue;
        }
        let bn = geometric_twist(kind, alpha, n, beta)?;
        // the tangent arc between the wall facet and the α endpoint
        // corresponds to the Farey arc between the wall slope and α itself
        // the embedding reverses orientation in this chart: the slope arc
        // ccw (u → v) maps onto the tangent arc ccw (v_plus(v) → v_minus(u))
        let (facets, _) = if n > 0 {
            let prev = geometric_twist(kind, alpha, n - 1, beta)?;
            let fprev = facet_from_table(x, &table, &prev, ctrl)?;
            let list = facets_in_slope_arc(
                x,
                &table,
                &prev,
                alpha,
                &falpha.v_plus,
                &fprev.v_minus,
                LOCAL_DEPTH,
                ctrl,
            )?;
            (list, prev)
        } else {
            let prev = geometric_twist(kind, alpha, n + 1, beta)?;
            let fprev = facet_from_table(x, &table, &prev, ctrl)?;
            let list = facets_in_slope_arc(
                x,
                &table,
                alpha,
                &prev,
                &fprev.v_plus,
                &falpha.v_minus,
                LOCAL_DEPTH,
                ctrl,
            )?;
            (list, prev)
        };
        let best = longest_facet(&facets, 1e-15)?;
        let mut margin = f64::INFINITY;
        for f in &facets {
            if f.slope == best.slope {
                continue;
            }
            margin = margin.min(((&best.length - &f.length) / &best.length).to_f64());
        }
        let pass = best.slope == bn && margin > 0.0 && best.converged;
        if !best.converged {
            report.all_rows_converged = false;
        }
        report.rows.push(vec![
            n.to_string(),
            bn.token(),
            facets.len().to_string(),
            best.slope.token(),
            bn.token(),
            if margin.is_finite() { format!("{margin:.6e}") } else { "inf".into() },
            pass.to_string(),
        ]);
        report.verdict(
            &format!("longest facet at n = {n}"),
            pass,
            format!("longest {} expected {bn}, margin {margin:.3e}", best.slope),
        );
    }
    Ok(report)
}

/// ℓ(Dⁿ_α β)/(|n|·i(α,β)·ℓ_α) at the given n, using recursion lengths.
pub fn twist_length_ratio(x: &TeichPoint, alpha: &Slope, beta: &Slope, n: i128) -> Result<Real> {
    if alpha == beta {
        return Err(Error::Invalid("twist ratio needs α ≠ β".into()));
    }
    if n == 0 {
        return Err(Error::Invalid("twist ratio needs n ≠ 0".into()));
    }
    let kind = x.kind();
    let bn = geometric_twist(kind, alpha, n, beta)?;
    let num = curve_length(x, &bn)?;
    let i = curves::intersection_number(kind, alpha, beta)?;
    if i == 0 {
        return Err(Error::Invalid("twist ratio needs i(α,β) > 0".into()));
    }
    let denom = Real::from_i64(x.bits(), (n.unsigned_abs() as i64) * (i as i64))
        * curve_length(x, alpha)?;
    Ok(num / denom)
}

/// Fit the facet-length decay exponents on both surfaces over slopes with
/// lengths in [ell_lo, ell_hi] and report the gap: the topological
/// discriminator between the torus and the sphere.
pub fn surface_discriminator(
    x11: &TeichPoint,
    x04: &TeichPoint,
    ctrl: &EnumerationControl,
) -> Result<ExperimentReport> {
    if x11.kind() != SurfaceKind::OncePuncturedTorus
        || x04.kind() != SurfaceKind::FourPuncturedSphere
    {
        return Err(Error::SurfaceMismatch);
    }
    let mut report = ExperimentReport::new("surface-discriminator");
    report.param("bits", x11.bits());
    report.param("depth", ctrl.depth);
    report.columns = vec![
        "kind".into(),
        "slope".into(),
        "ell".into(),
        "facet_len".into(),
        "converged".into(),
    ];
    let mut fits: Vec<(SurfaceKind, f64, f64, usize)> = Vec::new();
    for x in [x11, x04] {
        let (xs, ys_raw, ys_corr, n) = discriminator_samples(x, ctrl, &mut report)?;
        let (_, raw) = linear_fit(&xs, &ys_raw);
        let (_, corr) = linear_fit(&xs, &ys_corr);
        fits.push((x.kind(), raw, corr, n));
    }
    for (kind, raw, corr, n) in &fits {
        let tag = kind.token();
        report.fitted.insert(format!("exponent_raw_{tag}"), format!("{raw:.12e}"));
        report.fitted.insert(format!("exponent_{tag}"), format!("{corr:.12e}"));
        report.fitted.insert(format!("samples_{tag}"), n.to_string());
    }
    let gap = (fits[0].2 - fits[1].2).abs();
    report.fitted.insert("exponent_gap".into(), format!("{gap:.12e}"));
    Ok(report)
}

/// Facet lengths over ≥ 30 slopes with ℓ ∈ [3, 20]; returns regression data
/// (ℓ, log|F|, log(|F|/ℓ²)).
fn discriminator_samples(
    x: &TeichPoint,
    ctrl: &EnumerationControl,
    report: &mut ExperimentReport,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, usize)> {
    let table = NormTable::build(x, ctrl.depth);
    let mut picked: Vec<(f64, Slope)> = table
        .entries
        .iter()
        .filter(|e| {
            let l = e.ell.to_f64();
            (3.0..=20.0).contains(&l)
        })
        .map(|e| (e.ell.to_f64(), e.slope))
        .collect();
    picked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    // deterministic thinning to keep the facet workload bounded
    let stride = (picked.len() / 40).max(1);
    let sample: Vec<(f64, Slope)> = picked.into_iter().step_by(stride).take(48).collect();
    let mut xs = Vec::new();
    let mut ys_raw = Vec::new();
    let mut ys_corr = Vec::new();
    for (ell, slope) in &sample {
        let f = facet_from_table(x, &table, slope, ctrl)?;
        if !f.converged {
            report.all_rows_converged = false;
        }
        report.rows.push(vec![
            x.kind().token().into(),
            slope.token(),
            format!("{ell:.12e}"),
            f.length.to_decimal_string(),
            f.converged.to_string(),
        ]);
        let lf = f.length.ln().to_f64();
        xs.push(*ell);
        ys_raw.push(lf);
        ys_corr.push(lf - 2.0 * ell.ln());
    }
    let n = xs.len();
    Ok((xs, ys_raw, ys_corr, n))
}

/// A candidate linear isometry of the tangent planes in the FN charts.
#[derive(Clone, Debug)]
pub struct LinearMap2 {
    pub m: [[Real; 2]; 2],
}

impl LinearMap2 {
    pub fn new(m: [[Real; 2]; 2]) -> Result<LinearMap2> {
        let map = LinearMap2 { m };
        let det = map.det();
        let scale = map.m[0][0]
            .abs()
            .max(&map.m[0][1].abs())
            .max(&map.m[1][0].abs())
            .max(&map.m[1][1].abs());
        if det.abs().to_f64() < 1e-12 * scale.to_f64().powi(2).max(1e-300) {
            return Err(Error::SingularMap);
        }
        Ok(map)
    }

    pub fn from_f64(bits: u32, m: [[f64; 2]; 2]) -> Result<LinearMap2> {
        LinearMap2::new([
            [Real::from_f64(bits, m[0][0]), Real::from_f64(bits, m[0][1])],
            [Real::from_f64(bits, m[1][0]), Real::from_f64(bits, m[1][1])],
        ])
    }

    pub fn det(&self) -> Real {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        Vec2::new(
            &self.m[0][0] * &v.l + &self.m[0][1] * &v.t,
            &self.m[1][0] * &v.l + &self.m[1][1] * &v.t,
        )
    }
}

/// Differential of the re-marking action of a mapping class at X, by central
/// finite differences of the induced chart map (ℓ, τ) ↦ (ℓ', τ').
pub fn mapping_class_differential(x: &TeichPoint, g: &MappingClass, h: f64) -> Result<LinearMap2> {
    let bits = x.bits();
    let ctx = PrecisionContext { significand_bits: bits, tolerance: x.tolerance() };
    let hr = Real::from_f64(bits, h);
    let chart = |l: &Real, tau: &Real| -> Result<(Real, Real)> {
        let p = build_point(x.kind(), l.clone(), tau.clone(), &ctx)?;
        let y = remark_point(&p, g)?;
        Ok((y.fn_length().clone(), y.fn_twist().clone()))
    };
    let l = x.fn_length();
    let tau = x.fn_twist();
    let two_h = Real::from_f64(bits, 2.0 * h);
    let (lp, tp) = chart(&(l + &hr), tau)?;
    let (lm, tm) = chart(&(l - &hr), tau)?;
    let (lq, tq) = chart(l, &(tau + &hr))?;
    let (ln_, tn) = chart(l, &(tau - &hr))?;
    LinearMap2::new([
        [(&lp - &lm) / &two_h, (&lq - &ln_) / &two_h],
        [(&tp - &tm) / &two_h, (&tq - &tn) / &two_h],
    ])
}

/// Result of an isometry check: the worst norm defect over sampled unit
/// vectors and the facet matching induced by the candidate map.
pub struct IsometryCheck {
    pub max_defect: f64,
    /// (slope at X, matched slope at Y or None, endpoint mismatch).
    pub matching: Vec<(Slope, Option<Slope>, f64)>,
    pub report: ExperimentReport,
}

/// Check whether Φ: T_X → T_Y preserves the Thurston norm on sampled unit
/// vectors, and match the images of facets of X against facets of Y.
pub fn isometry_check(
    phi: &LinearMap2,
    x: &TeichPoint,
    y: &TeichPoint,
    sample_count: u32,
    seed: u64,
    ctrl: &EnumerationControl,
) -> Result<IsometryCheck> {
    if x.kind() != y.kind() {
        return Err(Error::SurfaceMismatch);
    }
    let tx = NormTable::build(x, ctrl.depth);
    let ty = NormTable::build(y, ctrl.depth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = x.bits();
    let mut report = ExperimentReport::new("isometry-check");
    report.param("bits", bits);
    report.param("depth", ctrl.depth);
    report.param("seed", seed);
    report.param("samples", sample_count);
    report.columns = vec!["item".into(), "value".into(), "detail".into()];
    let mut max_defect = 0.0f64;
    for k in 0..sample_count {
        let v = loop {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            if a.abs() + b.abs() > 1e-3 {
                break Vec2::new(Real::from_f64(bits, a), Real::from_f64(bits, b));
            }
        };
        let nx = tx.norm(&v, ctrl)?.value;
        let unit = v.scale(&(Real::one(bits) / &nx));
        let ny = ty.norm(&phi.apply(&unit), ctrl)?.value;
        let defect = (ny - Real::one(bits)).abs().to_f64();
        max_defect = max_defect.max(defect);
        report.rows.push(vec![
            format!("norm_defect_{k}"),
            format!("{defect:.6e}"),
            String::new(),
        ]);
    }
    // facet matching over the shallow slopes
    let mut matching = Vec::new();
    for slope in curves::enumerate_slopes(3) {
        let fx = facet_from_table(x, &tx, &slope, ctrl)?;
        let im_minus = phi.apply(&fx.v_minus);
        let im_plus = phi.apply(&fx.v_plus);
        let half = Real::from_f64(bits, 0.5);
        let mid = Vec2::new(
            (&im_minus.l + &im_plus.l) * &half,
            (&im_minus.t + &im_plus.t) * &half,
        );
        // supporting slope at Y in the image direction
        let mut best: Option<(Real, Slope)> = None;
        for e in &ty.entries {
            let val = e.dlog.pair(&mid);
            if best.as_ref().map_or(true, |(b, _)| val > *b) {
                best = Some((val, e.slope));
            }
        }
        let cand = best.expect("table nonempty").1;
        // compare the image segment against the candidate facet of Y
        let fy = facet_from_table(y, &ty, &cand, ctrl)?;
        let d1 = endpoint_distance(&im_minus, &fy.v_minus);
        let d2 = endpoint_distance(&im_plus, &fy.v_plus);
        let scale = endpoint_distance(&fy.v_minus, &fy.v_plus).max(1e-300);
        let err = (d1.max(d2)) / scale;
        let matched = if err < 1e-4 { Some(cand) } else { None };
        report.rows.push(vec![
            format!("facet_match_{slope}"),
            matched.map_or("unmatched".into(), |s| s.token()),
            format!("endpoint_err {err:.3e}"),
        ]);
        matching.push((slope, matched, err));
    }
    report.fitted.insert("max_defect".into(), format!("{max_defect:.6e}"));
    Ok(IsometryCheck { max_defect, matching, report })
}

fn endpoint_distance(a: &Vec2, b: &Vec2) -> f64 {
    let d = a.sub(b);
    d.l.hypot(&d.t).to_f64()
}

/// Sampled local Lipschitz quotients of (X, v) ↦ ‖v‖ on a chart ball.
pub fn norm_lipschitz_sample(
    x: &TeichPoint,
    radius: f64,
    samples: u32,
    seed: u64,
    ctrl: &EnumerationControl,
) -> Result<ExperimentReport> {
    let bits = x.bits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = PrecisionContext { significand_bits: bits, tolerance: x.tolerance() };
    let mut report = ExperimentReport::new("norm-lipschitz-sample");
    report.param("radius", radius);
    report.param("samples", samples);
    report.param("seed", seed);
    report.param("depth", ctrl.depth);
    report.columns = vec!["pair".into(), "quotient".into()];
    let mut worst = 0.0f64;
    let base = NormTable::build(x, ctrl.depth);
    for k in 0..samples {
        let dl: f64 = rng.gen_range(-radius..radius);
        let dt: f64 = rng.gen_range(-radius..radius);
        let p = build_point(
            x.kind(),
            x.fn_length() + Real::from_f64(bits, dl),
            x.fn_twist() + Real::from_f64(bits, dt),
            &ctx,
        )?;
        let tp = NormTable::build(&p, ctrl.depth);
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        if a.abs() + b.abs() < 1e-3 {
            continue;
        }
        let v = Vec2::new(Real::from_f64(bits, a), Real::from_f64(bits, b));
        let n0 = base.norm(&v, ctrl)?.value.to_f64();
        let n1 = tp.norm(&v, ctrl)?.value.to_f64();
        let dist = (dl * dl + dt * dt).sqrt();
        let q = (n1 - n0).abs() / dist.max(1e-300);
        worst = worst.max(q);
        report.rows.push(vec![k.to_string(), format!("{q:.6e}")]);
    }
    report.fitted.insert("max_quotient".into(), format!("{worst:.6e}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::thurston_distance;
    use crate::holonomy::modular_torus;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn modular() -> TeichPoint {
        modular_torus(&ctx()).unwrap()
    }

    #[test]
    fn gamma_is_identity_at_equal_points() {
        let x = modular();
        let c = EnumerationControl::with_depth(10);
        let gamma = GammaMap::new(&x, &x, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w = seeded_covector(&mut rng, 128);
            let g = gamma.apply(&w).unwrap();
            let err = (&g.l - &w.l).abs().max(&(&g.t - &w.t).abs()).to_f64();
            assert!(err < 1e-30, "err {err:e}");
        }
        assert!(matches!(
            gamma.apply(&Cov2::new(Real::zero(128), Real::zero(128))),
            Err(Error::ZeroCovector)
        ));
    }

    #[test]
    fn gamma_is_positively_homogeneous_and_matches_slope_vertices() {
        let x = modular();
        let y = build_point(
            x.kind(),
            Real::from_f64(128, 2.2),
            Real::from_f64(128, 0.3),
            &ctx(),
        )
        .unwrap();
        let c = EnumerationControl::with_depth(10);
        let gamma = GammaMap::new(&x, &y, &c).unwrap();
        let w = Cov2::new(Real::from_f64(128, 0.4), Real::from_f64(128, 0.1));
        let g1 = gamma.apply(&w).unwrap();
        let g2 = gamma.apply(&w.scale(&Real::from_f64(128, 3.0))).unwrap();
        assert!((&g2.l - Real::from_f64(128, 3.0) * &g1.l).abs().to_f64() < 1e-30);
        // slope vertex: w = d_X ℓ_α maps to (ℓ_α(X)/ℓ_α(Y))·d_Y ℓ_α
        let tx = NormTable::build(&x, 10);
        let ty = NormTable::build(&y, 10);
        for slope in [Slope::infinity(), Slope::new(1, 2).unwrap()] {
            let ex = tx.eval_slope(&slope);
            let ey = ty.eval_slope(&slope);
            let w = ex.dlog.scale(&ex.ell); // d_X ℓ_α
            let img = gamma.apply(&w).unwrap();
            let expected = ey.dlog.scale(&ey.ell).scale(&(&ex.ell / &ey.ell));
            let err = (&img.l - &expected.l)
                .abs()
                .max(&(&img.t - &expected.t).abs())
                .to_f64();
            assert!(err < 1e-25, "slope {slope}: err {err:e}");
        }
    }

    #[test]
    fn gamma_defect_separates_equal_from_distinct_points() {
        let x = modular();
        let c = EnumerationControl::with_depth(12);
        let (d0, r0) = gamma_linearity_defect(&x, &x, 10, 7, &c).unwrap();
        assert!(d0 <= 1e-10, "defect at X=X: {d0:e}");
        assert!(r0.pass() || r0.verdicts.is_empty());
        let y = build_point(
            x.kind(),
            x.fn_length().clone(),
            x.fn_twist() + Real::from_f64(128, 0.5),
            &ctx(),
        )
        .unwrap();
        let (d1, _) = gamma_linearity_defect(&x, &y, 15, 7, &c).unwrap();
        assert!(d1 > 1e-3, "defect at twisted pair: {d1:e}");
        // rescaling all samples leaves the defect invariant (homogeneity)
        let (d2, _) = gamma_linearity_defect(&x, &y, 15, 7, &c).unwrap();
        assert_eq!(d1, d2, "defect must be reproducible for a fixed seed");
    }

    #[test]
    fn twist_length_ratio_approaches_one() {
        let x = modular();
        let alpha = Slope::zero();
        let beta = Slope::infinity();
        let r100 = twist_length_ratio(&x, &alpha, &beta, 100).unwrap().to_f64();
        assert!((r100 - 1.0).abs() < 0.05, "ratio at n=100: {r100}");
        // the two twist directions hit index-shifted families, so the
        // mirror gap is of the honest size ℓ_α/(n·ℓ_α) = 1/n
        let rm100 = twist_length_ratio(&x, &alpha, &beta, -100).unwrap().to_f64();
        assert!((r100 - rm100).abs() < 1.5 / 100.0, "mirror gap {}", (r100 - rm100).abs());
        // monotone approach for n ≥ 10
        let mut last = (twist_length_ratio(&x, &alpha, &beta, 10).unwrap().to_f64() - 1.0).abs();
        for n in [20, 40, 80] {
            let gap = (twist_length_ratio(&x, &alpha, &beta, n).unwrap().to_f64() - 1.0).abs();
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn facet_asymptotics_report_has_expected_shape() {
        let x = modular();
        let c = EnumerationControl::with_depth(12);
        let rep = facet_asymptotics(&x, &Slope::zero(), &Slope::infinity(), 2..=6, &c).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert!(rep.all_rows_converged);
        let corr: f64 = rep.fitted["fit_slope_l2_corrected"].parse().unwrap();
        let la: f64 = rep.fitted["l_alpha"].parse().unwrap();
        assert!((corr - la).abs() / la < 0.02, "corrected fit {corr} vs l_alpha {la}");
        // csv and json forms carry the verdict block
        let csv = rep.to_csv();
        assert!(csv.contains("# overall"));
        assert!(rep.to_json()["pass"].is_boolean());
    }

    #[test]
    fn isometry_check_accepts_identity_and_rejects_stretch() {
        let x = modular();
        let c = EnumerationControl::with_depth(10);
        let id = LinearMap2::from_f64(128, [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let chk = isometry_check(&id, &x, &x, 8, 3, &c).unwrap();
        assert!(chk.max_defect < 1e-25);
        assert!(chk.matching.iter().all(|(s, m, _)| m.as_ref() == Some(s)));
        let stretch = LinearMap2::from_f64(128, [[1.1, 0.0], [0.0, 1.0]]).unwrap();
        let chk2 = isometry_check(&stretch, &x, &x, 8, 3, &c).unwrap();
        assert!(chk2.max_defect > 1e-2, "defect {}", chk2.max_defect);
        assert!(matches!(
            LinearMap2::from_f64(128, [[1.0, 2.0], [0.5, 1.0]]),
            Err(Error::SingularMap)
        ));
    }

    #[test]
    fn mapping_class_differential_is_an_isometry() {
        let x = modular();
        let c = EnumerationControl::with_depth(10);
        let g = MappingClass::twist(&Slope::infinity(), 1).unwrap();
        let y = remark_point(&x, &g).unwrap();
        let phi = mapping_class_differential(&x, &g, 2f64.powi(-20)).unwrap();
        let chk = isometry_check(&phi, &x, &y, 10, 5, &c).unwrap();
        assert!(chk.max_defect < 1e-6, "defect {}", chk.max_defect);
        // the induced facet matching is the slope action of g
        for (s, m, err) in &chk.matching {
            let expected = g.apply(s).unwrap();
            assert_eq!(m.as_ref(), Some(&expected), "slope {s} err {err:e}");
        }
    }

    #[test]
    fn distance_and_gamma_cross_check() {
        // sanity: the dual norm of d_X ℓ_α is ℓ_α(X)
        let x = modular();
        let c = EnumerationControl::with_depth(12);
        let gamma = GammaMap::new(&x, &x, &c).unwrap();
        let tx = NormTable::build(&x, 12);
        for slope in [Slope::zero(), Slope::new(2, 1).unwrap()] {
            let e = tx.eval_slope(&slope);
            let w = e.dlog.scale(&e.ell);
            let n = gamma.dual_norm_x(&w).unwrap();
            let rel = ((&n - &e.ell) / &e.ell).abs().to_f64();
            assert!(rel < 1e-20, "slope {slope}: dual norm {n:?} vs {:?}", e.ell);
        }
        // distance to a twisted point is positive and witnessed
        let y = build_point(x.kind(), Real::from_f64(128, 1.2), Real::from_f64(128, 2.0), &ctx()).unwrap();
        let d = thurston_distance(&x, &y, &c).unwrap();
        assert!(d.value.to_f64() > 0.0);
    }
}
