//! The runnable acceptance suite: eleven quantitative checks with pinned
//! tolerances, each reporting one PASS/FAIL line. `selftest` in the CLI and
//! the `acceptance` integration test both call [`run_all`].
//!
//! Check 3 (the facet-length limit surrogate at n = 12) is a known,
//! documented red: the ℓ² prefactor in the facet-length law makes the
//! finite-n surrogate sit outside its stated tolerance; the ℓ²-corrected
//! diagnostics included in its details confirm the underlying limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curves::{self, MappingClass, Slope, SurfaceKind};
use crate::geom::{
    dual_sphere, facet_from_table, facets_in_arc_from_table, in_open_arc, integrate_stretch,
    thurston_distance, EnumerationControl, NormTable, StretchSign,
};
use crate::holonomy::{build_point, curve_length, modular_torus, remark_point, symmetric_sphere,
    PrecisionContext, TeichPoint};
use crate::lab::{
    facet_asymptotics, gamma_linearity_defect, isometry_check, longest_facet_correspondence,
    mapping_class_differential, surface_discriminator, twist_length_ratio, LinearMap2,
};
use crate::num::{Real, Vec2};
use crate::Result;

/// Suite-wide knobs; the pinned per-criterion tolerances live in the code.
#[derive(Clone, Copy, Debug)]
pub struct AcceptanceConfig {
    pub bits: u32,
    pub depth: u32,
    pub seed: u64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig { bits: 128, depth: 14, seed: 7 }
    }
}

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:2} — {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.index,
            self.name,
            self.details
        )
    }
}

const NAMES: [&str; 11] = [
    "metric/norm consistency",
    "dual convexity and facet disjointness",
    "facet-length limit at n = 12",
    "two-sided facet bounds",
    "exponent discriminator",
    "stretch law",
    "gamma rigidity probe",
    "twist-length asymptotics",
    "longest-facet correspondence",
    "isometry detection",
    "combinatorial exactness",
];

pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionResult> {
    (1..=11).map(|i| run_one(i, cfg)).collect()
}

pub fn run_one(index: usize, cfg: &AcceptanceConfig) -> CriterionResult {
    let out = match index {
        1 => criterion_1(cfg),
        2 => criterion_2(cfg),
        3 => criterion_3(cfg),
        4 => criterion_4(cfg),
        5 => criterion_5(cfg),
        6 => criterion_6(cfg),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        9 => criterion_9(cfg),
        10 => criterion_10(cfg),
        11 => criterion_11(cfg),
        _ => Err(crate::Error::Invalid(format!("no criterion {index}"))),
    };
    match out {
        Ok((pass, details)) => CriterionResult { index, name: NAMES[index - 1], pass, details },
        Err(e) => CriterionResult {
            index,
            name: NAMES[index - 1],
            pass: false,
            details: format!("error: {e}"),
        },
    }
}

type Check = Result<(bool, String)>;

fn ctx(bits: u32) -> PrecisionContext {
    PrecisionContext::with_bits(bits)
}

/// 1. |‖v‖ − d(X, X+tv)/t| / ‖v‖ ≤ 1e−4 at t = 1e−6 for 20 seeded vectors.
fn criterion_1(cfg: &AcceptanceConfig) -> Check {
    const TOL: f64 = 1e-4;
    const T: f64 = 1e-6;
    let x = modular_torus(&ctx(cfg.bits))?;
    let ctrl = EnumerationControl::with_depth(cfg.depth);
    let table = NormTable::build(&x, cfg.depth);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x01);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let v = loop {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            if a.abs() + b.abs() > 1e-2 {
                break Vec2::new(Real::from_f64(cfg.bits, a), Real::from_f64(cfg.bits, b));
            }
        };
        let n = table.norm(&v, &ctrl)?.value.to_f64();
        let y = build_point(
            x.kind(),
            x.fn_length() + Real::from_f64(cfg.bits, T) * &v.l,
            x.fn_twist() + Real::from_f64(cfg.bits, T) * &v.t,
            &ctx(cfg.bits),
        )?;
        let d = thurston_distance(&x, &y, &ctrl)?.value.to_f64();
        worst = worst.max((d / T - n).abs() / n.abs());
    }
    Ok((worst <= TOL, format!("worst relative gap {worst:.3e} (tolerance {TOL:.0e})")))
}

/// 2. Dual-sphere convexity sweep at depth 12 on both surfaces; facet
/// intervals pairwise disjoint on resolvable samples.
fn criterion_2(cfg: &AcceptanceConfig) -> Check {
    const DEPTH: u32 = 12;
    let ctrl = EnumerationControl::with_depth(DEPTH);
    let mut details = Vec::new();
    let mut pass = true;
    for (kind, x) in [
        (SurfaceKind::OncePuncturedTorus, modular_torus(&ctx(cfg.bits))?),
        (SurfaceKind::FourPuncturedSphere, symmetric_sphere(&ctx(cfg.bits))?),
    ] {
        let sphere = dual_sphere(&x, &ctrl)?;
        let min_cross = sphere.min_normalized_cross();
        let convex = min_cross > -1e-20;
        pass &= convex;
        // disjointness of facet intervals over moderate-length curves, where
        // the separating gaps stay above the precision floor
        let table = NormTable::build(&x, DEPTH);
        let base = facet_from_table(&x, &table, &Slope::infinity(), &ctrl)?;
        let list = facets_in_arc_from_table(&x, &table, &base.v_plus, &base.v_minus, &ctrl)?;
        let short: Vec<_> = list
            .iter()
            .filter(|f| table.eval_slope(&f.slope).ell.to_f64() < 12.0)
            .collect();
        let mut disjoint = short.len() >= 6;
        for w in short.windows(2) {
            disjoint &= in_open_arc(&w[0].v_plus, &base.v_minus, &w[1].v_minus);
        }
        pass &= disjoint;
        details.push(format!(
            "{}: min normalized cross {min_cross:.2e}, {} sampled facets disjoint: {disjoint}",
            kind.token(),
            short.len()
        ));
    }
    Ok((pass, details.join("; ")))
}

/// 3. S₁,₁ modular torus, α = (0,1), β = (1,0), 256 bits: the limit
/// surrogate |log|F(β_n)||/n within 10% of ℓ_α at n = 12 and the [6,12] fit
/// slope within 5%. Known red; see the ℓ²-corrected diagnostics.
fn criterion_3(cfg: &AcceptanceConfig) -> Check {
    const BITS: u32 = 256;
    const LIMIT_TOL: f64 = 0.10;
    const FIT_TOL: f64 = 0.05;
    let x = modular_torus(&ctx(BITS))?;
    let ctrl = EnumerationControl::with_depth(cfg.depth.min(12));
    let rep = facet_asymptotics(&x, &Slope::zero(), &Slope::infinity(), 6..=12, &ctrl)?;
    let l_alpha: f64 = rep.fitted["l_alpha"].parse().unwrap_or(f64::NAN);
    let limit_col: f64 = rep
        .rows
        .iter()
        .find(|r| r[0] == "12")
        .and_then(|r| r[4].parse().ok())
        .unwrap_or(f64::NAN);
    let fit: f64 = rep.fitted["fit_slope"].parse().unwrap_or(f64::NAN);
    let fit_corr: f64 = rep.fitted["fit_slope_l2_corrected"].parse().unwrap_or(f64::NAN);
    let limit_ok = (limit_col - l_alpha).abs() / l_alpha <= LIMIT_TOL;
    let fit_ok = (fit - l_alpha).abs() / l_alpha <= FIT_TOL;
    let pass = limit_ok && fit_ok && rep.all_rows_converged;
    Ok((
        pass,
        format!(
            "limit column at n=12: {limit_col:.4} vs ℓ_α {l_alpha:.4} (need 10%); \
             fit slope {fit:.4} (need 5%); ℓ²-corrected fit {fit_corr:.4} \
             [{:.2}% off ℓ_α]",
            100.0 * (fit_corr - l_alpha).abs() / l_alpha
        ),
    ))
}

/// 4. |F|/(ℓ²e^{−ℓ}) on S₁,₁ and |F|/(ℓ²e^{−ℓ/2}) on S₀,₄ over ≥ 30 slopes
/// with ℓ ∈ [3, 20]: max/min spread ≤ 10.
fn criterion_4(cfg: &AcceptanceConfig) -> Check {
    const SPREAD_TOL: f64 = 10.0;
    let ctrl = EnumerationControl::with_depth(cfg.depth.min(12));
    let mut details = Vec::new();
    let mut pass = true;
    for (x, decay) in [
        (modular_torus(&ctx(cfg.bits))?, 1.0f64),
        (symmetric_sphere(&ctx(cfg.bits))?, 0.5f64),
    ] {
        let table = NormTable::build(&x, ctrl.depth);
        let mut picked: Vec<(f64, Slope)> = table
            .entries
            .iter()
            .filter(|e| (3.0..=20.0).contains(&e.ell.to_f64()))
            .map(|e| (e.ell.to_f64(), e.slope))
            .collect();
        picked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let stride = (picked.len() / 40).max(1);
        let sample: Vec<_> = picked.into_iter().step_by(stride).take(48).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut count = 0usize;
        for (ell, slope) in &sample {
            let f = facet_from_table(&x, &table, slope, &ctrl)?;
            let model = Real::from_f64(cfg.bits, *ell * decay);
            let ratio = (&f.length / (table.eval_slope(slope).ell.square() * (-model).exp())).to_f64();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            count += 1;
        }
        let spread = hi / lo;
        pass &= count >= 30 && spread <= SPREAD_TOL;
        details.push(format!(
            "{}: {} slopes, ratio ∈ [{lo:.3}, {hi:.3}], spread {spread:.2}",
            x.kind().token(),
            count
        ));
    }
    Ok((pass, details.join("; ")))
}

/// 5. Fitted decay exponents within 10% of −1 (S₁,₁) and −1/2 (S₀,₄),
/// with a gap above 0.3.
fn criterion_5(cfg: &AcceptanceConfig) -> Check {
    const EXP_TOL: f64 = 0.10;
    const GAP_MIN: f64 = 0.3;
    let x11 = modular_torus(&ctx(cfg.bits))?;
    let x04 = symmetric_sphere(&ctx(cfg.bits))?;
    let ctrl = EnumerationControl::with_depth(cfg.depth.min(12));
    let rep = surface_discriminator(&x11, &x04, &ctrl)?;
    let e11: f64 = rep.fitted["exponent_s11"].parse().unwrap_or(f64::NAN);
    let e04: f64 = rep.fitted["exponent_s04"].parse().unwrap_or(f64::NAN);
    let gap: f64 = rep.fitted["exponent_gap"].parse().unwrap_or(f64::NAN);
    let ok11 = (e11 + 1.0).abs() <= EXP_TOL;
    let ok04 = (e04 + 0.5).abs() <= EXP_TOL * 0.5;
    let pass = ok11 && ok04 && gap > GAP_MIN && rep.all_rows_converged;
    Ok((
        pass,
        format!("exponents: s11 {e11:.4} (target −1), s04 {e04:.4} (target −0.5), gap {gap:.3}"),
    ))
}

/// 6. ℓ_α(X_t) = eᵗ·ℓ_α(X) within 1e−6 relative at t ∈ {0.1, 0.3, 0.5};
/// 20 other slopes grow strictly slower than eᵗ.
fn criterion_6(cfg: &AcceptanceConfig) -> Check {
    const RATIO_TOL: f64 = 1e-6;
    let x = modular_torus(&ctx(cfg.bits))?;
    let alpha = Slope::infinity();
    // facet endpoints converge along the fan chains; a coarse global table
    // suffices for the field and keeps the integration fast
    let ctrl_ode = EnumerationControl::with_depth(8);
    let la0 = curve_length(&x, &alpha)?;
    let mut worst_ratio = 0.0f64;
    let mut cur = x.clone();
    let mut t_done = 0.0f64;
    for (t_target, steps) in [(0.1, 6u32), (0.3, 10), (0.5, 10)] {
        let seg = t_target - t_done;
        cur = integrate_stretch(&cur, &alpha, StretchSign::Plus, seg, steps, &ctrl_ode)?;
        t_done = t_target;
        let ratio = (curve_length(&cur, &alpha)? / &la0).to_f64();
        worst_ratio = worst_ratio.max((ratio / t_target.exp() - 1.0).abs());
    }
    let mut margin_ok = true;
    let mut min_margin = f64::INFINITY;
    let e_t = 0.5f64.exp();
    let mut checked = 0;
    for beta in curves::enumerate_slopes(4) {
        if beta == alpha {
            continue;
        }
        if checked >= 20 {
            break;
        }
        checked += 1;
        let r = (curve_length(&cur, &beta)? / curve_length(&x, &beta)?).to_f64();
        let margin = e_t - r;
        min_margin = min_margin.min(margin);
        margin_ok &= margin > 0.0;
    }
    let pass = worst_ratio <= RATIO_TOL && margin_ok;
    Ok((
        pass,
        format!(
            "worst |ratio/eᵗ − 1| = {worst_ratio:.3e} (tolerance 1e-6); \
             {checked} other slopes strictly below eᵗ, min margin {min_margin:.3e}"
        ),
    ))
}

/// 7. Γ defect ≤ 1e−10 on 5 coincident pairs, > 1e−3 on 15 distinct pairs;
/// norm preservation within 1e−8 throughout.
fn criterion_7(cfg: &AcceptanceConfig) -> Check {
    const EQ_TOL: f64 = 1e-10;
    const NEQ_MIN: f64 = 1e-3;
    const PRESERVE_TOL: f64 = 1e-8;
    let ctrl = EnumerationControl::with_depth(cfg.depth.min(12));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x07);
    let sample_point = |rng: &mut ChaCha8Rng| -> Result<TeichPoint> {
        let l: f64 = rng.gen_range(1.2..3.5);
        let tau: f64 = rng.gen_range(-1.5..1.5);
        build_point(
            SurfaceKind::OncePuncturedTorus,
            Real::from_f64(cfg.bits, l),
            Real::from_f64(cfg.bits, tau),
            &ctx(cfg.bits),
        )
    };
    let mut max_preserve = 0.0f64;
    let mut max_eq_defect = 0.0f64;
    for k in 0..5 {
        let x = sample_point(&mut rng)?;
        let (d, rep) = gamma_linearity_defect(&x, &x, 6, cfg.seed + k, &ctrl)?;
        max_eq_defect = max_eq_defect.max(d);
        let p: f64 = rep.fitted["max_norm_preservation_gap"].parse().unwrap_or(f64::NAN);
        max_preserve = max_preserve.max(p);
    }
    let mut min_neq_defect = f64::INFINITY;
    for k in 0..15 {
        let x = sample_point(&mut rng)?;
        let dl: f64 = rng.gen_range(0.2..0.8);
        let dt: f64 = rng.gen_range(0.3..1.0);
        let y = build_point(
            x.kind(),
            x.fn_length() + Real::from_f64(cfg.bits, dl),
            x.fn_twist() + Real::from_f64(cfg.bits, dt),
            &ctx(cfg.bits),
        )?;
        let (d, rep) = gamma_linearity_defect(&x, &y, 8, cfg.seed + 100 + k, &ctrl)?;
        min_neq_defect = min_neq_defect.min(d);
        let p: f64 = rep.fitted["max_norm_preservation_gap"].parse().unwrap_or(f64::NAN);
        max_preserve = max_preserve.max(p);
    }
    let pass =
        max_eq_defect <= EQ_TOL && min_neq_defect > NEQ_MIN && max_preserve <= PRESERVE_TOL;
    Ok((
        pass,
        format!(
            "coincident defect ≤ {max_eq_defect:.2e} (tol 1e-10); distinct defect ≥ \
             {min_neq_defect:.2e} (need > 1e-3); norm preservation ≤ {max_preserve:.2e}"
        ),
    ))
}

/// 8. ℓ(Dⁿ_αβ)/(|n|·i(α,β)·ℓ_α) at n = 100 within 5% of 1 on both surfaces.
fn criterion_8(cfg: &AcceptanceConfig) -> Check {
    const TOL: f64 = 0.05;
    let mut details = Vec::new();
    let mut pass = true;
    for x in [modular_torus(&ctx(cfg.bits))?, symmetric_sphere(&ctx(cfg.bits))?] {
        let r = twist_length_ratio(&x, &Slope::zero(), &Slope::infinity(), 100)?.to_f64();
        pass &= (r - 1.0).abs() <= TOL;
        details.push(format!("{}: ratio {r:.5}", x.kind().token()));
    }
    Ok((pass, details.join("; ")))
}

/// 9. Longest-facet correspondence with positive margins for n ∈ [3, 8] on
/// points with ℓ_α ≥ 8, both surfaces, including the mirror windows.
fn criterion_9(cfg: &AcceptanceConfig) -> Check {
    const BITS: u32 = 320;
    let ctrl = EnumerationControl::with_depth(cfg.depth.min(12));
    let mut details = Vec::new();
    let mut pass = true;
    for (kind, l, tau) in [
        (SurfaceKind::OncePuncturedTorus, 8.5, 0.3),
        (SurfaceKind::FourPuncturedSphere, 8.2, 0.5),
    ] {
        let x = build_point(kind, Real::from_f64(BITS, l), Real::from_f64(BITS, tau), &ctx(BITS))?;
        let alpha = Slope::infinity();
        let beta = Slope::zero();
        let rep = longest_facet_correspondence(&x, &alpha, &beta, 3..=8, &ctrl)?;
        let rep_mirror = longest_facet_correspondence(&x, &alpha, &beta, -8..=-3, &ctrl)?;
        let ok = rep.pass() && rep_mirror.pass();
        pass &= ok;
        details.push(format!(
            "{}: forward {} rows {}, mirror {} rows {}",
            kind.token(),
            rep.rows.len(),
            if rep.pass() { "PASS" } else { "FAIL" },
            rep_mirror.rows.len(),
            if rep_mirror.pass() { "PASS" } else { "FAIL" }
        ));
    }
    Ok((pass, details.join("; ")))
}

/// 10. Mapping-class differentials pass with defect ≤ 1e−6 and facet
/// matching equal to the slope action for 6 classes; diag(1.1, 1) is
/// rejected with defect > 1e−2.
fn criterion_10(cfg: &AcceptanceConfig) -> Check {
    const ISO_TOL: f64 = 1e-6;
    const REJECT_MIN: f64 = 1e-2;
    let ctrl = EnumerationControl::with_depth(cfg.depth.min(12));
    let h = 2f64.powi(-20);
    let mut pass = true;
    let mut details = Vec::new();
    let mut class_count = 0;
    for x in [modular_torus(&ctx(cfg.bits))?, symmetric_sphere(&ctx(cfg.bits))?] {
        let t_a = MappingClass::twist(&Slope::infinity(), 1)?;
        let t_b = MappingClass::twist(&Slope::zero(), -1)?;
        let classes = [t_a, t_b, t_a.compose(&t_b)?];
        for g in classes {
            class_count += 1;
            let y = remark_point(&x, &g)?;
            let phi = mapping_class_differential(&x, &g, h)?;
            let chk = isometry_check(&phi, &x, &y, 10, cfg.seed ^ 0x0a, &ctrl)?;
            let mut matching_ok = true;
            for (s, m, _) in &chk.matching {
                matching_ok &= m.as_ref() == Some(&g.apply(s)?);
            }
            let ok = chk.max_defect <= ISO_TOL && matching_ok;
            pass &= ok;
            details.push(format!(
                "{} {:?}: defect {:.2e}, matching {}",
                x.kind().token(),
                g.entries(),
                chk.max_defect,
                if matching_ok { "= slope action" } else { "mismatch" }
            ));
        }
    }
    // the non-isometry must be rejected
    let x = modular_torus(&ctx(cfg.bits))?;
    let stretch = LinearMap2::from_f64(cfg.bits, [[1.1, 0.0], [0.0, 1.0]])?;
    let chk = isometry_check(&stretch, &x, &x, 10, cfg.seed ^ 0x0b, &ctrl)?;
    let rejected = chk.max_defect > REJECT_MIN;
    pass &= rejected && class_count == 6;
    details.push(format!("diag(1.1,1) defect {:.2e} (must exceed 1e-2)", chk.max_defect));
    Ok((pass, details.join("; ")))
}

/// 11. Exact combinatorics at depth 10: twist group law, conjugation
/// compatibility, Stern–Brocot determinants, and Farey connectivity.
fn criterion_11(_cfg: &AcceptanceConfig) -> Check {
    let slopes = curves::enumerate_slopes(10);
    let pick = |i: usize| slopes[(i * 2654435761) % slopes.len()];
    // twist group law and axis-intersection preservation, exact
    for i in 0..100 {
        let axis = pick(i);
        let target = pick(i + 7);
        let n = (i as i128 % 41) - 20;
        let m = ((i * 13) as i128 % 41) - 20;
        let once = curves::dehn_twist(&axis, n + m, &target)?;
        let twice = curves::dehn_twist(&axis, n, &curves::dehn_twist(&axis, m, &target)?)?;
        if once != twice || curves::dehn_twist(&axis, 0, &target)? != target {
            return Ok((false, format!("group law failed at axis {axis}, target {target}")));
        }
        for kind in [SurfaceKind::OncePuncturedTorus, SurfaceKind::FourPuncturedSphere] {
            if curves::intersection_number(kind, &axis, &once)?
                != curves::intersection_number(kind, &axis, &target)?
            {
                return Ok((false, format!("axis intersection changed at {axis}, {target}")));
            }
        }
    }
    // conjugation compatibility (orientation-reversing classes flip the
    // twist direction)
    let gs = [
        MappingClass::new([[0, 1], [-1, 0]])?,
        MappingClass::new([[1, 1], [0, 1]])?,
        MappingClass::new([[2, 1], [1, 1]])?,
        MappingClass::new([[1, 0], [0, -1]])?,
        MappingClass::new([[5, 2], [2, 1]])?,
    ];
    for (k, g) in gs.iter().enumerate() {
        for i in 0..10 {
            let alpha = pick(3 * i + k);
            let beta = pick(5 * i + 2 * k + 1);
            let n = (i as i128) - 5;
            let lhs = g.apply(&curves::dehn_twist(&alpha, n, &beta)?)?;
            let rhs =
                curves::dehn_twist(&g.apply(&alpha)?, n * g.det(), &g.apply(&beta)?)?;
            if lhs != rhs {
                return Ok((false, format!("conjugation failed for {g:?} at ({alpha}, {beta})")));
            }
        }
    }
    // Stern–Brocot neighbors have determinant ±1, exactly
    let mut det_ok = true;
    curves::walk_slopes(10, |s, _| {
        if let Some((u, v)) = curves::farey_parents(&s) {
            det_ok &= u.det_with(&s).map(|d| d.abs() == 1).unwrap_or(false);
            det_ok &= v.det_with(&s).map(|d| d.abs() == 1).unwrap_or(false);
        }
    });
    if !det_ok {
        return Ok((false, "Stern–Brocot determinant check failed".into()));
    }
    // Farey connectivity for both kinds at depths 1..=10
    for depth in 1..=10 {
        for kind in [SurfaceKind::OncePuncturedTorus, SurfaceKind::FourPuncturedSphere] {
            if !curves::farey_graph(kind, depth)?.is_connected() {
                return Ok((false, format!("{} graph disconnected at depth {depth}", kind.token())));
            }
        }
    }
    Ok((true, "group law, conjugation, determinants, connectivity: all exact".into()))
}
