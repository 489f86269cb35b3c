//! Holonomy representations from Fenchel–Nielsen coordinates and hyperbolic
//! lengths of slope curves.
//!
//! A marked structure is encoded by the pair (ℓ, τ): ℓ is the hyperbolic
//! length of the base curve (slope ∞), τ the twist measured in length units
//! along it (a full Dehn twist shifts τ by ℓ). Generators:
//!
//! - S₁,₁: A = diag(e^{ℓ/2}, e^{−ℓ/2}) and B(τ) with tr[A,B] = −2
//!   (one-cusped torus; the commutator is the puncture).
//! - S₀,₄: two pairs of pants, each with two cusps and one boundary of
//!   length ℓ, mirrored across the axis of the base curve and glued with
//!   twist τ. The four peripherals P₁…P₄ are parabolic and multiply to the
//!   identity.
//!
//! Slope-curve traces satisfy the Farey edge recursion
//! tr(u⊕v) = tr(u)·tr(v) − tr(u⊖v) on S₁,₁ and
//! tr(u⊕v) = 8 − tr(u)·tr(v) − tr(u⊖v) on S₀,₄ (all peripheral traces 2);
//! both are validated against explicit word-holonomy products in the tests.
//! Lengths are ℓ_s = 2·arccosh(|tr|/2); gradients come from running the same
//! recursion over forward-mode jets in (ℓ, τ).

use serde::{Deserialize, Serialize};

use crate::curves::{self, CurveWord, Gen, MappingClass, Slope, SurfaceKind};
use crate::num::{Cov2, Jet, Mat2, Real, Scalar};
use crate::{Error, Result};

/// Working precision plus the relative tolerance for construction invariants.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PrecisionContext {
    pub significand_bits: u32,
    /// Relative tolerance for holonomy invariants (default 2⁻⁶⁴).
    pub tolerance: f64,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext { significand_bits: 128, tolerance: 2.0f64.powi(-64) }
    }
}

impl PrecisionContext {
    pub fn with_bits(bits: u32) -> Self {
        PrecisionContext { significand_bits: bits, ..Default::default() }
    }
}

/// Traces of the four root slopes (1,0), (0,1), (1,1), (−1,1).
#[derive(Clone, Debug)]
pub struct RootTraces<S> {
    pub x: S,
    pub y: S,
    pub z_pos: S,
    pub z_neg: S,
}

fn half<S: Scalar>(v: &S) -> S {
    v.mul(&v.constant(0.5))
}

/// S₁,₁ generators A, B(τ) in closed form.
fn s11_generators<S: Scalar>(l: &S, tau: &S) -> [Mat2<S>; 2] {
    let zero = l.constant(0.0);
    let hl = half(l);
    let ht = half(tau);
    let a = Mat2([
        [hl.exp(), zero.clone()],
        [zero.clone(), hl.neg().exp()],
    ]);
    let sh = hl.sinh();
    let coth = hl.cosh().div(&sh);
    let e = ht.exp();
    let em = ht.neg().exp();
    let inv_sh = l.constant(1.0).div(&sh);
    let b = Mat2([
        [coth.mul(&e), e.mul(&inv_sh)],
        [em.mul(&inv_sh), coth.mul(&em)],
    ]);
    [a, b]
}

/// S₀,₄ peripheral generators P₁…P₄ in closed form.
fn s04_generators<S: Scalar>(l: &S, tau: &S) -> [Mat2<S>; 4] {
    let quarter = half(&half(l));
    let c = quarter.cosh();
    let s = quarter.sinh();
    let e1 = quarter.exp();
    let em1 = quarter.neg().exp();
    let e3 = l.constant(0.75).mul(l).exp();
    let em3 = l.constant(-0.75).mul(l).exp();
    let two_s = s.add(&s);
    let p1 = Mat2([
        [s.add(&c).div(&s), c.div(&s)],
        [c.div(&s).neg(), s.sub(&c).div(&s)],
    ]);
    let p2 = Mat2([
        [e1.div(&s), em1.add(&em3).div(&two_s)],
        [e1.add(&e3).div(&two_s).neg(), em1.div(&s).neg()],
    ]);
    // mirror across the base axis (conjugation by diag(1,−1)) and twist by τ
    let ht = half(tau);
    let th = ht.exp();
    let thm = ht.neg().exp();
    let twist_conj = |m: &Mat2<S>| -> Mat2<S> {
        // T · D m D · T⁻¹ with T = diag(e^{τ/2}, e^{−τ/2}), D = diag(1,−1)
        let a = &m.0;
        Mat2([
            [a[0][0].clone(), a[0][1].neg().mul(&th).mul(&th)],
            [a[1][0].neg().mul(&thm).mul(&thm), a[1][1].clone()],
        ])
    };
    let p3 = twist_conj(&p2.inv_unimodular());
    let p4 = twist_conj(&p1.inv_unimodular());
    [p1, p2, p3, p4]
}

/// Root traces as functions of (ℓ, τ), generic over plain values or jets.
pub fn root_traces<S: Scalar>(kind: SurfaceKind, l: &S, tau: &S) -> RootTraces<S> {
    match kind {
        SurfaceKind::OncePuncturedTorus => {
            let two = l.constant(2.0);
            let hl = half(l);
            let ht = half(tau);
            let x = two.mul(&hl.cosh());
            let coth2 = two.mul(&hl.cosh()).div(&hl.sinh());
            let y = coth2.mul(&ht.cosh());
            let z_pos = coth2.mul(&half(&l.add(tau)).cosh());
            let z_neg = coth2.mul(&half(&tau.sub(l)).cosh());
            RootTraces { x, y, z_pos, z_neg }
        }
        SurfaceKind::FourPuncturedSphere => {
            let g = s04_generators(l, tau);
            let x = g[0].mul(&g[1]).trace();
            let y = g[1].mul(&g[2]).trace();
            let z_neg = g[2].mul(&g[0]).trace();
            let z_pos = l.constant(8.0).sub(&x.mul(&y)).sub(&z_neg);
            RootTraces { x, y, z_pos, z_neg }
        }
    }
}

/// Farey edge recursion for the trace of a mediant.
pub fn trace_rule<S: Scalar>(kind: SurfaceKind, tu: &S, tv: &S, tother: &S) -> S {
    match kind {
        SurfaceKind::OncePuncturedTorus => tu.mul(tv).sub(tother),
        SurfaceKind::FourPuncturedSphere => tu.constant(8.0).sub(&tu.mul(tv)).sub(tother),
    }
}

/// Length of a curve with holonomy trace t: 2·arccosh(|t|/2).
pub fn length_of_trace<S: Scalar>(t: &S) -> S {
    let two = t.constant(2.0);
    two.mul(&half(&t.abs()).acosh())
}

/// A marked hyperbolic structure with cached holonomy generators.
#[derive(Clone, Debug)]
pub struct TeichPoint {
    kind: SurfaceKind,
    bits: u32,
    tolerance: f64,
    ell: Real,
    tau: Real,
    generators: Vec<Mat2<Real>>,
    roots: RootTraces<Real>,
}

impl TeichPoint {
    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Fenchel–Nielsen length of the base curve (slope ∞).
    pub fn fn_length(&self) -> &Real {
        &self.ell
    }

    /// Fenchel–Nielsen twist, in length units along the base curve.
    pub fn fn_twist(&self) -> &Real {
        &self.tau
    }

    pub fn base_curve(&self) -> Slope {
        Slope::infinity()
    }

    pub fn generators(&self) -> &[Mat2<Real>] {
        &self.generators
    }

    pub fn root_traces(&self) -> &RootTraces<Real> {
        &self.roots
    }

    /// Same marked structure at a different working precision.
    pub fn with_bits(&self, bits: u32) -> Result<TeichPoint> {
        build_point(
            self.kind,
            self.ell.with_bits(bits),
            self.tau.with_bits(bits),
            &PrecisionContext { significand_bits: bits, tolerance: self.tolerance },
        )
    }

    /// JSON form `{"kind","l","tau","bits"}` with decimal-string reals.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.token(),
            "l": self.ell.to_decimal_string(),
            "tau": self.tau.to_decimal_string(),
            "bits": self.bits,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<TeichPoint> {
        let kind = v["kind"]
            .as_str()
            .and_then(SurfaceKind::from_token)
            .ok_or_else(|| Error::Parse("bad kind".into()))?;
        let bits = v["bits"].as_u64().ok_or_else(|| Error::Parse("bad bits".into()))? as u32;
        let l = v["l"]
            .as_str()
            .and_then(|s| Real::parse_decimal(bits, s))
            .ok_or_else(|| Error::Parse("bad l".into()))?;
        let tau = v["tau"]
            .as_str()
            .and_then(|s| Real::parse_decimal(bits, s))
            .ok_or_else(|| Error::Parse("bad tau".into()))?;
        build_point(kind, l, tau, &PrecisionContext::with_bits(bits))
    }
}

fn check_near(bits: u32, what: &str, residual: &Real, scale: f64, tol: f64) -> Result<()> {
    if residual.abs().to_f64() > tol * scale.max(1.0) {
        return Err(Error::PrecisionUnderflow { bits, what: format!("{what}: residual {residual:?}") });
    }
    Ok(())
}

/// Construct a marked point and verify the construction invariants.
pub fn build_point(kind: SurfaceKind, ell: Real, tau: Real, ctx: &PrecisionContext) -> Result<TeichPoint> {
    if ctx.significand_bits < 53 {
        return Err(Error::Invalid("significand_bits must be at least 53".into()));
    }
    if !ell.is_finite() || !(ell > Real::zero(ell.bits())) {
        return Err(Error::NonPositiveLength);
    }
    if !tau.is_finite() {
        return Err(Error::Invalid("twist must be finite".into()));
    }
    let bits = ctx.significand_bits;
    let tol = ctx.tolerance;
    let l = ell.with_bits(bits);
    let t = tau.with_bits(bits);
    let one = Real::one(bits);
    let two = Real::from_f64(bits, 2.0);

    let generators: Vec<Mat2<Real>> = match kind {
        SurfaceKind::OncePuncturedTorus => s11_generators(&l, &t).to_vec(),
        SurfaceKind::FourPuncturedSphere => s04_generators(&l, &t).to_vec(),
    };
    for g in &generators {
        check_near(bits, "generator determinant", &(g.det() - &one), 1.0, tol)?;
    }
    match kind {
        SurfaceKind::OncePuncturedTorus => {
            let a = &generators[0];
            let b = &generators[1];
            let comm = a.mul(b).mul(&a.inv_unimodular().mul(&b.inv_unimodular()));
            check_near(bits, "commutator trace + 2", &(comm.trace() + &two), 1.0, tol)?;
        }
        SurfaceKind::FourPuncturedSphere => {
            let prod = generators[0].mul(&generators[1]).mul(&generators[2].mul(&generators[3]));
            // product must be ±I
            let sign = prod.0[0][0].signum_f64();
            for i in 0..2 {
                for j in 0..2 {
                    let target = Real::from_f64(bits, if i == j { sign } else { 0.0 });
                    check_near(bits, "peripheral product", &(&prod.0[i][j] - &target), 1.0, tol)?;
                }
            }
            for g in &generators {
                check_near(bits, "peripheral trace", &(g.trace().abs() - &two), 1.0, tol)?;
            }
        }
    }
    let roots = root_traces(kind, &l, &t);
    // base-curve length must reproduce ℓ
    let recovered = length_of_trace(&roots.x);
    check_near(bits, "base length recovery", &(&recovered - &l), l.to_f64().abs(), tol)?;

    Ok(TeichPoint { kind, bits, tolerance: tol, ell: l, tau: t, generators, roots })
}

/// The maximally symmetric once-punctured torus: ℓ = 2·arccosh(3/2) and the
/// twist at which the three depth-1 slope curves share the trace 3.
pub fn modular_torus(ctx: &PrecisionContext) -> Result<TeichPoint> {
    let bits = ctx.significand_bits;
    let l = Real::from_f64(bits, 1.5).acosh() * Real::from_f64(bits, 2.0);
    let tau = -&l * Real::from_f64(bits, 0.5);
    build_point(SurfaceKind::OncePuncturedTorus, l, tau, ctx)
}

/// The maximally symmetric four-punctured sphere: the three depth-1 slope
/// curves share the trace −7 (ℓ = 2·arccosh(7/2), twist solved exactly).
pub fn symmetric_sphere(ctx: &PrecisionContext) -> Result<TeichPoint> {
    let bits = ctx.significand_bits;
    let l = Real::from_f64(bits, 3.5).acosh() * Real::from_f64(bits, 2.0);
    let ly = l.clone(); // target length of the (0,1) curve
    let (tp, tm) = solve_twist_for_crossing_length(SurfaceKind::FourPuncturedSphere, &l, &ly)?;
    // both twists give y-trace −7; pick the one that also symmetrizes (−1,1)
    for tau in [tp, tm] {
        let pt = build_point(SurfaceKind::FourPuncturedSphere, l.clone(), tau, ctx)?;
        let zn = length_of_trace(&pt.roots.z_neg);
        if (&zn - &l).abs().to_f64() < 1e-9 * l.to_f64() {
            return Ok(pt);
        }
    }
    Err(Error::Invalid("symmetric sphere twist not found".into()))
}

/// Solve for the twists ±τ at which the (0,1) curve has the given length,
/// at base length ℓ. Uses the exact trace profiles: on S₁,₁ the (0,1) trace
/// is 2·coth(ℓ/2)·cosh(τ/2); on S₀,₄ it is a(ℓ)·cosh(τ) + b(ℓ).
pub fn solve_twist_for_crossing_length(
    kind: SurfaceKind,
    l: &Real,
    target_len: &Real,
) -> Result<(Real, Real)> {
    let bits = l.bits();
    let one = Real::one(bits);
    let two = Real::from_f64(bits, 2.0);
    let target_tr = &two * half(target_len).cosh();
    match kind {
        SurfaceKind::OncePuncturedTorus => {
            let hl = half(l);
            let coth2 = &two * hl.cosh() / hl.sinh();
            let arg = &target_tr / &coth2;
            if arg < one {
                return Err(Error::Invalid(format!(
                    "no twist attains crossing length {target_len:?} at base length {l:?}"
                )));
            }
            let tau = &two * arg.acosh();
            Ok((tau.clone(), -tau))
        }
        SurfaceKind::FourPuncturedSphere => {
            // y(τ) = a·cosh(τ) + b exactly; fit from two evaluations
            let zero = Real::zero(bits);
            let y0 = root_traces(kind, l, &zero).y;
            let y1 = root_traces(kind, l, &one).y;
            let a = (&y1 - &y0) / (one.cosh() - &one);
            let b = &y0 - &a;
            // slope-curve traces are negative in this construction
            let arg = (-&target_tr - &b) / &a;
            if arg < one {
                return Err(Error::Invalid(format!(
                    "no twist attains crossing length {target_len:?} at base length {l:?}"
                )));
            }
            let tau = arg.acosh();
            Ok((tau.clone(), -tau))
        }
    }
}

/// Trace of the slope curve, walking the Stern–Brocot path with the Farey
/// recursion. Generic over plain values and jets.
pub fn trace_of_slope<S: Scalar>(kind: SurfaceKind, roots: &RootTraces<S>, s: &Slope) -> S {
    if *s == Slope::infinity() {
        return roots.x.clone();
    }
    if *s == Slope::zero() {
        return roots.y.clone();
    }
    let (mut u, mut v, mut tu, mut tv, mut to) = if s.p() >= 0 {
        ((0i128, 1i128), (1i128, 0i128), roots.y.clone(), roots.x.clone(), roots.z_neg.clone())
    } else {
        ((1i128, 0i128), (0i128, -1i128), roots.x.clone(), roots.y.clone(), roots.z_pos.clone())
    };
    loop {
        let m = (u.0 + v.0, u.1 + v.1);
        let tm = trace_rule(kind, &tu, &tv, &to);
        let sm = Slope::normalize(m.0, m.1).expect("mediant nonzero");
        if sm == *s {
            return tm;
        }
        if sm.det_with(s).expect("path entries small") > 0 {
            v = m;
            to = tv;
            tv = tm;
        } else {
            u = m;
            to = tu;
            tu = tm;
        }
    }
}

/// Stream every slope to the given Stern–Brocot depth with its trace.
/// Visits the two roots at depth 0, then each mediant at its own depth,
/// depth-first; the visit order is deterministic.
pub fn walk_traces<S: Scalar, F: FnMut(Slope, u32, &S)>(
    kind: SurfaceKind,
    roots: &RootTraces<S>,
    depth: u32,
    mut f: F,
) {
    f(Slope::zero(), 0, &roots.y);
    f(Slope::infinity(), 0, &roots.x);
    struct Frame<S> {
        u: (i128, i128),
        v: (i128, i128),
        tu: S,
        tv: S,
        to: S,
        level: u32,
    }
    let mut stack: Vec<Frame<S>> = vec![
        Frame {
            u: (1, 0),
            v: (0, -1),
            tu: roots.x.clone(),
            tv: roots.y.clone(),
            to: roots.z_pos.clone(),
            level: 1,
        },
        Frame {
            u: (0, 1),
            v: (1, 0),
            tu: roots.y.clone(),
            tv: roots.x.clone(),
            to: roots.z_neg.clone(),
            level: 1,
        },
    ];
    while let Some(fr) = stack.pop() {
        if fr.level > depth {
            continue;
        }
        let m = (fr.u.0 + fr.v.0, fr.u.1 + fr.v.1);
        let tm = trace_rule(kind, &fr.tu, &fr.tv, &fr.to);
        let sm = Slope::normalize(m.0, m.1).expect("mediant nonzero");
        f(sm, fr.level, &tm);
        stack.push(Frame {
            u: fr.u,
            v: m,
            tu: fr.tu.clone(),
            tv: tm.clone(),
            to: fr.tv.clone(),
            level: fr.level + 1,
        });
        stack.push(Frame {
            u: m,
            v: fr.v,
            tu: tm,
            tv: fr.tv,
            to: fr.tu,
            level: fr.level + 1,
        });
    }
}

/// Stream every slope to the given depth with its traces at two points of
/// the same kind (one synchronized walk; the visit order matches
/// [`walk_traces`]).
pub fn walk_traces2<S: Scalar, F: FnMut(Slope, u32, &S, &S)>(
    kind: SurfaceKind,
    roots_a: &RootTraces<S>,
    roots_b: &RootTraces<S>,
    depth: u32,
    mut f: F,
) {
    f(Slope::zero(), 0, &roots_a.y, &roots_b.y);
    f(Slope::infinity(), 0, &roots_a.x, &roots_b.x);
    struct Frame<S> {
        u: (i128, i128),
        v: (i128, i128),
        t: [(S, S, S); 2],
        level: u32,
    }
    let mut stack: Vec<Frame<S>> = vec![
        Frame {
            u: (1, 0),
            v: (0, -1),
            t: [
                (roots_a.x.clone(), roots_a.y.clone(), roots_a.z_pos.clone()),
                (roots_b.x.clone(), roots_b.y.clone(), roots_b.z_pos.clone()),
            ],
            level: 1,
        },
        Frame {
            u: (0, 1),
            v: (1, 0),
            t: [
                (roots_a.y.clone(), roots_a.x.clone(), roots_a.z_neg.clone()),
                (roots_b.y.clone(), roots_b.x.clone(), roots_b.z_neg.clone()),
            ],
            level: 1,
        },
    ];
    while let Some(fr) = stack.pop() {
        if fr.level > depth {
            continue;
        }
        let m = (fr.u.0 + fr.v.0, fr.u.1 + fr.v.1);
        let tm: Vec<S> = fr.t.iter().map(|(tu, tv, to)| trace_rule(kind, tu, tv, to)).collect();
        let sm = Slope::normalize(m.0, m.1).expect("mediant nonzero");
        f(sm, fr.level, &tm[0], &tm[1]);
        let mk = |k: usize, left: bool| -> (S, S, S) {
            let (tu, tv, to) = (&fr.t[k].0, &fr.t[k].1, &fr.t[k].2);
            let _ = to;
            if left {
                (tu.clone(), tm[k].clone(), tv.clone())
            } else {
                (tm[k].clone(), tv.clone(), tu.clone())
            }
        };
        stack.push(Frame {
            u: fr.u,
            v: m,
            t: [mk(0, true), mk(1, true)],
            level: fr.level + 1,
        });
        stack.push(Frame {
            u: m,
            v: fr.v,
            t: [mk(0, false), mk(1, false)],
            level: fr.level + 1,
        });
    }
}

/// Stream the Stern–Brocot subtree strictly inside the Farey arc (u, v)
/// with traces, to `depth` mediant levels. The bounds must be Farey
/// neighbors; they are not emitted themselves.
pub fn walk_arc_traces<S: Scalar, F: FnMut(Slope, u32, &S)>(
    kind: SurfaceKind,
    roots: &RootTraces<S>,
    u: &Slope,
    v: &Slope,
    depth: u32,
    mut f: F,
) -> Result<()> {
    if u.det_with(v)?.abs() != 1 {
        return Err(Error::Invalid(format!("({u}, {v}) is not a Farey arc")));
    }
    // raw representatives with det(u_raw, v_raw) = −1, so that componentwise
    // sums are the arc mediants
    let mut u_raw = (u.p(), u.q());
    let v_raw = (v.p(), v.q());
    if u_raw.0 * v_raw.1 - u_raw.1 * v_raw.0 == 1 {
        u_raw = (-u_raw.0, -u_raw.1);
    }
    let tu = trace_of_slope(kind, roots, u);
    let tv = trace_of_slope(kind, roots, v);
    // flip partner of the edge (u, v), away from the arc interior
    let diff = Slope::normalize(u_raw.0 - v_raw.0, u_raw.1 - v_raw.1)?;
    let to = trace_of_slope(kind, roots, &diff);
    struct Frame<S> {
        u: (i128, i128),
        v: (i128, i128),
        tu: S,
        tv: S,
        to: S,
        level: u32,
    }
    let mut stack =
        vec![Frame { u: u_raw, v: v_raw, tu, tv, to, level: 1 }];
    while let Some(fr) = stack.pop() {
        if fr.level > depth {
            continue;
        }
        let m = (fr.u.0 + fr.v.0, fr.u.1 + fr.v.1);
        let tm = trace_rule(kind, &fr.tu, &fr.tv, &fr.to);
        let sm = Slope::normalize(m.0, m.1).expect("mediant nonzero");
        f(sm, fr.level, &tm);
        stack.push(Frame {
            u: fr.u,
            v: m,
            tu: fr.tu.clone(),
            tv: tm.clone(),
            to: fr.tv.clone(),
            level: fr.level + 1,
        });
        stack.push(Frame { u: m, v: fr.v, tu: tm, tv: fr.tv, to: fr.tu, level: fr.level + 1 });
    }
    Ok(())
}

/// Walks the fan of Farey neighbors of a fixed slope α in one twist
/// direction, producing each neighbor with its trace. Neighbors of α are
/// exactly the twist orbit D^k_α of either Farey parent.
pub struct FanWalker<S> {
    kind: SurfaceKind,
    alpha: Slope,
    t_alpha: S,
    cur: Slope,
    t_cur: S,
    t_prev: S,
    direction: i128,
}

impl<S: Scalar> FanWalker<S> {
    /// Start at the Farey parent `start` of α, walking so that the first step
    /// moves away from the other parent `prev`.
    pub fn new(
        kind: SurfaceKind,
        roots: &RootTraces<S>,
        alpha: &Slope,
        start: &Slope,
        prev: &Slope,
        direction: i128,
    ) -> FanWalker<S> {
        FanWalker {
            kind,
            alpha: *alpha,
            t_alpha: trace_of_slope(kind, roots, alpha),
            cur: *start,
            t_cur: trace_of_slope(kind, roots, start),
            t_prev: trace_of_slope(kind, roots, prev),
            direction,
        }
    }

    pub fn current(&self) -> (&Slope, &S) {
        (&self.cur, &self.t_cur)
    }

    /// Step to the next Farey neighbor of α along this side of the fan.
    pub fn advance(&mut self) -> Result<(Slope, S)> {
        let next = curves::dehn_twist(&self.alpha, self.direction, &self.cur)?;
        let t_next = trace_rule(self.kind, &self.t_alpha, &self.t_cur, &self.t_prev);
        self.t_prev = std::mem::replace(&mut self.t_cur, t_next.clone());
        self.cur = next;
        Ok((next, t_next))
    }
}

/// The two fan seeds around α: (start, prev, direction) per side, where
/// direction is the twist exponent stepping away from `prev`.
pub fn fan_seeds(alpha: &Slope) -> Result<[(Slope, Slope, i128); 2]> {
    let (a, b) = match curves::farey_parents(alpha) {
        Some(p) => p,
        None => {
            if *alpha == Slope::zero() {
                (Slope::infinity(), Slope::new(-1, 1)?)
            } else {
                (Slope::zero(), Slope::new(-1, 1)?)
            }
        }
    };
    // direction that moves a away from b: D^e_alpha(a) != b
    let e = if curves::dehn_twist(alpha, 1, &a)? == b { -1 } else { 1 };
    Ok([(a, b, e), (b, a, -e)])
}

/// Hyperbolic length of the slope curve on X.
pub fn curve_length(x: &TeichPoint, s: &Slope) -> Result<Real> {
    let t = trace_of_slope(x.kind, &x.roots, s);
    let two = Real::from_f64(x.bits, 2.0);
    if t.abs() < two {
        return Err(Error::HolonomyCorrupt(s.token()));
    }
    Ok(length_of_trace(&t))
}

/// Length together with its differential d_Xℓ_s in the (ℓ, τ) chart.
pub fn length_with_gradient(x: &TeichPoint, s: &Slope) -> Result<(Real, Cov2)> {
    let roots = root_traces(x.kind, &Jet::seed_l(&x.ell), &Jet::seed_t(&x.tau));
    let t = trace_of_slope(x.kind, &roots, s);
    if t.v.abs() < Real::from_f64(x.bits, 2.0) {
        return Err(Error::HolonomyCorrupt(s.token()));
    }
    let len = length_of_trace(&t);
    Ok((len.v, Cov2::new(len.dl, len.dt)))
}

/// d_Xℓ_s: the differential of the length function of s at X.
pub fn length_gradient(x: &TeichPoint, s: &Slope) -> Result<Cov2> {
    Ok(length_with_gradient(x, s)?.1)
}

/// Trace table over all slopes to the given depth, computed by the Farey
/// recursion. Entries are in a deterministic walk order.
pub fn trace_table(x: &TeichPoint, depth: u32) -> Vec<(Slope, Real)> {
    let mut out = Vec::with_capacity(2usize << depth);
    walk_traces(x.kind, &x.roots, depth, |s, _, t| out.push((s, t.clone())));
    out
}

/// CSV export of a trace table: `slope,trace,length`.
pub fn trace_table_csv(table: &[(Slope, Real)]) -> String {
    let mut out = String::from("slope,trace,length\n");
    for (s, t) in table {
        let len = length_of_trace(t);
        out.push_str(&format!("{},{},{}\n", s.token(), t.to_decimal_string(), len.to_decimal_string()));
    }
    out
}

/// Holonomy matrix of a curve word (the matrix-product oracle for traces).
pub fn word_holonomy(x: &TeichPoint, w: &CurveWord) -> Mat2<Real> {
    let mut m = Mat2::identity_like(&x.ell);
    for &(g, e) in &w.0 {
        let idx = match (x.kind, g) {
            (SurfaceKind::OncePuncturedTorus, Gen::A) => 0,
            (SurfaceKind::OncePuncturedTorus, Gen::B) => 1,
            (SurfaceKind::FourPuncturedSphere, Gen::P1) => 0,
            (SurfaceKind::FourPuncturedSphere, Gen::P2) => 1,
            (SurfaceKind::FourPuncturedSphere, Gen::P3) => 2,
            (SurfaceKind::FourPuncturedSphere, Gen::P4) => 3,
            _ => panic!("letter {g:?} does not belong to {:?}", x.kind),
        };
        let gen = &x.generators[idx];
        let gm = if e > 0 { gen.clone() } else { gen.inv_unimodular() };
        m = m.mul(&gm);
    }
    m
}

/// Trace of the slope curve via the explicit word holonomy (oracle path).
pub fn trace_via_word(x: &TeichPoint, s: &Slope) -> Real {
    word_holonomy(x, &curves::curve_word(x.kind, s)).trace()
}

/// The re-marked point g·X: the unique (ℓ', τ') with
/// ℓ_s(g·X) = ℓ_{g⁻¹s}(X) for every slope s.
pub fn remark_point(x: &TeichPoint, g: &MappingClass) -> Result<TeichPoint> {
    let ginv = g.inverse();
    let pre = |s: Slope| -> Result<Slope> { ginv.apply(&s) };
    let l_new = curve_length(x, &pre(Slope::infinity())?)?;
    let ly = curve_length(x, &pre(Slope::zero())?)?;
    let lz = curve_length(x, &pre(Slope::new(1, 1)?)?)?;
    let (tp, tm) = solve_twist_for_crossing_length(x.kind, &l_new, &ly)?;
    let ctx = PrecisionContext { significand_bits: x.bits, tolerance: x.tolerance };
    let mut best: Option<(Real, TeichPoint)> = None;
    for tau in [tp, tm] {
        let cand = build_point(x.kind, l_new.clone(), tau, &ctx)?;
        let z = curve_length(&cand, &Slope::new(1, 1)?)?;
        let err = (&z - &lz).abs();
        if best.as_ref().map_or(true, |(e, _)| err < *e) {
            best = Some((err, cand));
        }
    }
    let (err, point) = best.expect("two candidates");
    let scale = lz.to_f64().abs().max(1.0);
    if err.to_f64() > 1e-20 * scale {
        return Err(Error::Invalid(format!(
            "re-marking failed: (1,1)-length residual {err:?} for class {g:?}"
        )));
    }
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx128() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn modular_torus_is_found_by_the_root_finder() {
        // oracle: solve tr_{(0,1)}(τ) = tr_{(1,1)}(τ) by bisection, then check
        // the closed-form constructor agrees and the traces are (3,3,3)
        let bits = 128;
        let l = Real::from_f64(bits, 1.5).acosh() * Real::from_f64(bits, 2.0);
        let f = |tau: f64| -> f64 {
            let r = root_traces(
                SurfaceKind::OncePuncturedTorus,
                &l,
                &Real::from_f64(bits, tau),
            );
            (r.y - r.z_pos).to_f64()
        };
        let (mut lo, mut hi) = (-2.0f64, 0.0f64);
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let tau_solved = 0.5 * (lo + hi);
        let x = modular_torus(&ctx128()).unwrap();
        assert!((tau_solved - x.fn_twist().to_f64()).abs() < 1e-12);
        let r = x.root_traces();
        for t in [&r.x, &r.y, &r.z_pos] {
            assert!((t.to_f64() - 3.0).abs() < 1e-30);
        }
        assert!((r.z_neg.to_f64() - 6.0).abs() < 1e-30);
    }

    #[test]
    fn modular_length_matches_arccosh_three_halves() {
        let x = modular_torus(&ctx128()).unwrap();
        let l = curve_length(&x, &Slope::infinity()).unwrap();
        assert!((l.to_f64() - 1.9248473002384139).abs() < 1e-15);
    }

    #[test]
    fn symmetric_sphere_has_three_equal_traces() {
        let x = symmetric_sphere(&ctx128()).unwrap();
        let r = x.root_traces();
        assert!((r.x.to_f64() + 7.0).abs() < 1e-30);
        assert!((r.y.to_f64() + 7.0).abs() < 1e-30);
        assert!((r.z_neg.to_f64() + 7.0).abs() < 1e-30);
        assert!((r.z_pos.to_f64() + 34.0).abs() < 1e-28);
    }

    #[test]
    fn build_point_validates_inputs() {
        let c = ctx128();
        assert!(matches!(
            build_point(SurfaceKind::OncePuncturedTorus, Real::from_f64(128, -1.0), Real::zero(128), &c),
            Err(Error::NonPositiveLength)
        ));
        assert!(matches!(
            build_point(SurfaceKind::OncePuncturedTorus, Real::from_f64(128, 0.0), Real::zero(128), &c),
            Err(Error::NonPositiveLength)
        ));
        let nan = Real::from_f64(128, f64::NAN);
        assert!(build_point(SurfaceKind::FourPuncturedSphere, Real::one(128), nan, &c).is_err());
    }

    #[test]
    fn sphere_peripherals_are_parabolic_at_assorted_points() {
        for (l, tau) in [(3.0, 0.0), (0.7, 2.3), (9.5, -4.1)] {
            let x = build_point(
                SurfaceKind::FourPuncturedSphere,
                Real::from_f64(128, l),
                Real::from_f64(128, tau),
                &ctx128(),
            )
            .unwrap();
            for g in x.generators() {
                assert!((g.trace().abs().to_f64() - 2.0).abs() < 1e-30);
            }
        }
    }

    #[test]
    fn recursion_matches_word_holonomy_oracle() {
        for (kind, l, tau) in [
            (SurfaceKind::OncePuncturedTorus, 1.7, 0.33),
            (SurfaceKind::OncePuncturedTorus, 3.9, -2.2),
            (SurfaceKind::FourPuncturedSphere, 3.1, 0.47),
            (SurfaceKind::FourPuncturedSphere, 1.2, -1.9),
        ] {
            let x = build_point(kind, Real::from_f64(128, l), Real::from_f64(128, tau), &ctx128()).unwrap();
            let mut worst = 0.0f64;
            walk_traces(kind, x.root_traces(), 8, |s, _, t| {
                let oracle = trace_via_word(&x, &s);
                let rel = (t - &oracle).abs().to_f64() / oracle.abs().to_f64().max(1.0);
                worst = worst.max(rel);
            });
            assert!(worst < 1e-30, "{kind:?} at ({l},{tau}): worst rel {worst:e}");
        }
    }

    #[test]
    fn depth_one_table_on_modular_torus_and_mediant_recursion() {
        let x = modular_torus(&ctx128()).unwrap();
        let table = trace_table(&x, 1);
        let get = |p: i128, q: i128| {
            table
                .iter()
                .find(|(s, _)| *s == Slope::new(p, q).unwrap())
                .map(|(_, t)| t.to_f64())
                .unwrap()
        };
        assert!((get(1, 0) - 3.0).abs() < 1e-25);
        assert!((get(0, 1) - 3.0).abs() < 1e-25);
        assert!((get(1, 1) - 3.0).abs() < 1e-25);
        // mediant of a (3, 3) edge against the opposite 3: 3·3 − 3 = 6
        assert!((get(-1, 1) - 6.0).abs() < 1e-25);
        // next level from the pair (3, 6) against 3: 3·6 − 3 = 15
        let deep = trace_table(&x, 2);
        let t15 = deep
            .iter()
            .find(|(s, _)| *s == Slope::new(-1, 2).unwrap() || *s == Slope::new(-2, 1).unwrap())
            .map(|(_, t)| t.to_f64())
            .unwrap();
        assert!((t15 - 15.0).abs() < 1e-24, "got {t15}");
    }

    #[test]
    fn table_entries_match_two_cosh_half_length() {
        let x = build_point(
            SurfaceKind::FourPuncturedSphere,
            Real::from_f64(128, 2.4),
            Real::from_f64(128, 0.9),
            &ctx128(),
        )
        .unwrap();
        for (s, t) in trace_table(&x, 6) {
            let l = curve_length(&x, &s).unwrap();
            let back = (half(&l)).cosh() * Real::from_f64(128, 2.0);
            let rel = (&back - &t.abs()).abs().to_f64() / back.to_f64();
            assert!(rel < 1e-35);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        for (kind, l, tau) in [
            (SurfaceKind::OncePuncturedTorus, 2.1, 0.6),
            (SurfaceKind::FourPuncturedSphere, 3.4, -0.8),
        ] {
            let bits = 192;
            let ctx = PrecisionContext::with_bits(bits);
            let h = 2.0f64.powi(-30);
            let hr = Real::from_f64(bits, h);
            let x = build_point(kind, Real::from_f64(bits, l), Real::from_f64(bits, tau), &ctx).unwrap();
            let xp = build_point(kind, Real::from_f64(bits, l) + &hr, Real::from_f64(bits, tau), &ctx).unwrap();
            let xm = build_point(kind, Real::from_f64(bits, l) - &hr, Real::from_f64(bits, tau), &ctx).unwrap();
            let yp = build_point(kind, Real::from_f64(bits, l), Real::from_f64(bits, tau) + &hr, &ctx).unwrap();
            let ym = build_point(kind, Real::from_f64(bits, l), Real::from_f64(bits, tau) - &hr, &ctx).unwrap();
            let two_h = Real::from_f64(bits, 2.0 * h);
            let mut count = 0;
            walk_traces(kind, x.root_traces(), 5, |s, _, _| {
                count += 1;
                if count % 3 != 0 {
                    return;
                }
                let g = length_gradient(&x, &s).unwrap();
                let dl = (curve_length(&xp, &s).unwrap() - curve_length(&xm, &s).unwrap()) / &two_h;
                let dt = (curve_length(&yp, &s).unwrap() - curve_length(&ym, &s).unwrap()) / &two_h;
                let rel_l = (&g.l - &dl).abs().to_f64() / dl.abs().to_f64().max(1e-30);
                let rel_t = (&g.t - &dt).abs().to_f64() / dt.abs().to_f64().max(g.l.to_f64());
                assert!(rel_l < 1e-8 && rel_t < 1e-8, "{kind:?} {s:?}: {rel_l:e} {rel_t:e}");
            });
            assert!(count > 30);
        }
    }

    #[test]
    fn base_curve_gradient_is_unit_in_ell() {
        let x = modular_torus(&ctx128()).unwrap();
        let g = length_gradient(&x, &Slope::infinity()).unwrap();
        assert!((g.l.to_f64() - 1.0).abs() < 1e-30);
        assert!(g.t.to_f64().abs() < 1e-30);
    }

    #[test]
    fn marking_periodicity_full_twist() {
        // ℓ_β(build(ℓ, τ+ℓ)) = ℓ_{D¹_base β}(build(ℓ, τ)) with the full twist
        // being 1 Farey step on the torus and 2 on the sphere.
        for (kind, l, tau) in [
            (SurfaceKind::OncePuncturedTorus, 1.9, 0.21),
            (SurfaceKind::FourPuncturedSphere, 2.8, -0.6),
        ] {
            let ctx = ctx128();
            let x = build_point(kind, Real::from_f64(128, l), Real::from_f64(128, tau), &ctx).unwrap();
            let shifted = build_point(
                kind,
                Real::from_f64(128, l),
                Real::from_f64(128, tau) + x.fn_length(),
                &ctx,
            )
            .unwrap();
            let steps = kind.twist_steps();
            for beta in curves::enumerate_slopes(4) {
                let image = curves::dehn_twist(&Slope::infinity(), steps, &beta).unwrap();
                let a = curve_length(&shifted, &beta).unwrap();
                let b = curve_length(&x, &image).unwrap();
                let rel = (&a - &b).abs().to_f64() / b.to_f64();
                assert!(rel < 1e-30, "{kind:?} β = {beta:?}: rel {rel:e}");
            }
        }
    }

    #[test]
    fn twisted_lengths_increase_in_twist_magnitude() {
        let x = modular_torus(&ctx128()).unwrap();
        let axis = Slope::zero();
        let beta = Slope::infinity();
        let mut last = 0.0;
        for n in 2..10 {
            let l = curve_length(&x, &curves::dehn_twist(&axis, n, &beta).unwrap())
                .unwrap()
                .to_f64();
            assert!(l > last, "length not increasing at n = {n}");
            last = l;
        }
    }

    #[test]
    fn remark_by_base_twist_shifts_tau_by_ell() {
        for (kind, l, tau) in [
            (SurfaceKind::OncePuncturedTorus, 2.3, 0.4),
            (SurfaceKind::FourPuncturedSphere, 3.2, 1.1),
        ] {
            let ctx = ctx128();
            let x = build_point(kind, Real::from_f64(128, l), Real::from_f64(128, tau), &ctx).unwrap();
            let steps = kind.twist_steps();
            let g = MappingClass::twist(&Slope::infinity(), steps).unwrap();
            let y = remark_point(&x, &g).unwrap();
            // lengths agree with the pullback on a sample of slopes
            let ginv = g.inverse();
            for s in curves::enumerate_slopes(3) {
                let a = curve_length(&y, &s).unwrap();
                let b = curve_length(&x, &ginv.apply(&s).unwrap()).unwrap();
                let rel = (&a - &b).abs().to_f64() / b.to_f64();
                assert!(rel < 1e-25, "{kind:?} slope {s:?} rel {rel:e}");
            }
            // and τ moved by ±ℓ
            let dt = (y.fn_twist() - x.fn_twist()).abs();
            let rel = (&dt - x.fn_length()).abs().to_f64() / l;
            assert!(rel < 1e-25, "{kind:?}: twist shift {dt:?}");
        }
    }

    #[test]
    fn point_json_roundtrip() {
        let x = build_point(
            SurfaceKind::FourPuncturedSphere,
            Real::from_f64(128, 2.7),
            Real::from_f64(128, -0.3),
            &ctx128(),
        )
        .unwrap();
        let v = x.to_json();
        let y = TeichPoint::from_json(&v).unwrap();
        assert_eq!(x.kind(), y.kind());
        assert!((x.fn_length() - y.fn_length()).abs().to_f64() < 1e-36);
        assert!((x.fn_twist() - y.fn_twist()).abs().to_f64() < 1e-36);
    }
}
