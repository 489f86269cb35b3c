//! Exact combinatorics of simple closed curves on the once-punctured torus
//! and the four-punctured sphere: slopes, Stern–Brocot enumeration, geometric
//! intersection numbers, Dehn twists, mapping classes, and curve words in the
//! fundamental group.
//!
//! Slopes are primitive integer pairs (p, q) in the canonical form q > 0, or
//! (1, 0) for slope ∞. Entries are `i128` with checked arithmetic; overflow
//! surfaces as [`Error::SlopeOverflow`] rather than wrapping.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Which of the two exceptional surfaces an object lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceKind {
    /// S₁,₁ — once-punctured torus.
    OncePuncturedTorus,
    /// S₀,₄ — four-punctured sphere.
    FourPuncturedSphere,
}

impl SurfaceKind {
    /// Geometric intersection number of a pair of Farey-neighbor curves.
    pub fn farey_intersection(self) -> i128 {
        match self {
            SurfaceKind::OncePuncturedTorus => 1,
            SurfaceKind::FourPuncturedSphere => 2,
        }
    }

    /// Elementary Farey steps that make up one full Dehn twist along a slope
    /// curve: 1 on the torus, 2 on the sphere (where a single Farey step is
    /// the slope action of a half twist, which is not modelled).
    pub fn twist_steps(self) -> i128 {
        match self {
            SurfaceKind::OncePuncturedTorus => 1,
            SurfaceKind::FourPuncturedSphere => 2,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            SurfaceKind::OncePuncturedTorus => "s11",
            SurfaceKind::FourPuncturedSphere => "s04",
        }
    }

    pub fn from_token(s: &str) -> Option<SurfaceKind> {
        match s {
            "s11" => Some(SurfaceKind::OncePuncturedTorus),
            "s04" => Some(SurfaceKind::FourPuncturedSphere),
            _ => None,
        }
    }
}

/// Isotopy class of an essential simple closed curve, encoded as a primitive
/// rational class (p, q).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slope {
    p: i128,
    q: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn ck_add(a: i128, b: i128) -> Result<i128, Error> {
    a.checked_add(b).ok_or(Error::SlopeOverflow)
}

fn ck_mul(a: i128, b: i128) -> Result<i128, Error> {
    a.checked_mul(b).ok_or(Error::SlopeOverflow)
}

impl Slope {
    /// Canonicalize an integer pair: divide by the gcd and fix the sign so
    /// that q > 0, or (1, 0) for slope ∞. Rejects (0, 0).
    pub fn normalize(p: i128, q: i128) -> Result<Slope, Error> {
        if p == 0 && q == 0 {
            return Err(Error::ZeroSlopeInput);
        }
        let g = gcd(p, q);
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 || (q == 0 && p < 0) {
            p = -p;
            q = -q;
        }
        Ok(Slope { p, q })
    }

    pub fn new(p: i128, q: i128) -> Result<Slope, Error> {
        Slope::normalize(p, q)
    }

    pub fn p(&self) -> i128 {
        self.p
    }

    pub fn q(&self) -> i128 {
        self.q
    }

    /// The ∞ slope (1, 0); the base curve of every Fenchel–Nielsen chart here.
    pub fn infinity() -> Slope {
        Slope { p: 1, q: 0 }
    }

    pub fn zero() -> Slope {
        Slope { p: 0, q: 1 }
    }

    /// |p·s − q·r|: geometric intersection number on S₁,₁.
    pub fn det_with(&self, o: &Slope) -> Result<i128, Error> {
        Ok(ck_mul(self.p, o.q)?.checked_sub(ck_mul(self.q, o.p)?).ok_or(Error::SlopeOverflow)?)
    }

    /// Serialized form "p/q", with "1/0" for ∞.
    pub fn token(&self) -> String {
        format!("{}/{}", self.p, self.q)
    }

    pub fn from_token(s: &str) -> Result<Slope, Error> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("bad slope token {s:?}")))?;
        let p = p
            .trim()
            .parse::<i128>()
            .map_err(|_| Error::Parse(format!("bad slope numerator {p:?}")))?;
        let q = q
            .trim()
            .parse::<i128>()
            .map_err(|_| Error::Parse(format!("bad slope denominator {q:?}")))?;
        Slope::normalize(p, q)
    }

    /// Arc class realizing the circular order 0/1 < 1/2 < 1/1 < 1/0 < −1/1 < −1/2 < 0/1.
    fn arc_class(&self) -> u8 {
        if self.q == 0 {
            1
        } else if self.p >= 0 {
            0
        } else {
            2
        }
    }

    pub fn circular_cmp(&self, o: &Slope) -> Ordering {
        self.arc_class().cmp(&o.arc_class()).then_with(|| {
            // same arc, q > 0 on both: compare p/q exactly
            match self.p.checked_mul(o.q).zip(o.p.checked_mul(self.q)) {
                Some((a, b)) => a.cmp(&b),
                None => (self.p as f64 / self.q as f64)
                    .partial_cmp(&(o.p as f64 / o.q as f64))
                    .unwrap_or(Ordering::Equal),
            }
        })
    }
}

impl fmt::Debug for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// Geometric intersection number of two slope curves.
pub fn intersection_number(kind: SurfaceKind, a: &Slope, b: &Slope) -> Result<i128, Error> {
    let d = a.det_with(b)?.abs();
    Ok(match kind {
        SurfaceKind::OncePuncturedTorus => d,
        SurfaceKind::FourPuncturedSphere => 2 * d,
    })
}

/// n-th Dehn-twist slope action along `axis`: normalize((I + n·K)·target)
/// with K(a,b) = [[−ab, a²], [−b², ab]].
pub fn dehn_twist(axis: &Slope, n: i128, target: &Slope) -> Result<Slope, Error> {
    // (I + nK)·v = v + n·det(axis, v)·axis
    let d = axis.det_with(target)?;
    let k = ck_mul(n, d)?;
    Slope::normalize(
        ck_add(target.p, ck_mul(k, axis.p)?)?,
        ck_add(target.q, ck_mul(k, axis.q)?)?,
    )
}

/// A mapping class as an integer 2×2 matrix with det ±1, taken up to sign.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct MappingClass {
    m: [[i128; 2]; 2],
}

impl MappingClass {
    pub fn new(m: [[i128; 2]; 2]) -> Result<MappingClass, Error> {
        let det = m[0][0]
            .checked_mul(m[1][1])
            .and_then(|x| Some(x - m[0][1].checked_mul(m[1][0])?))
            .ok_or(Error::SlopeOverflow)?;
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(det));
        }
        Ok(MappingClass { m: Self::canonical(m) })
    }

    /// Up-to-sign representative: first nonzero entry in row-major order positive.
    fn canonical(m: [[i128; 2]; 2]) -> [[i128; 2]; 2] {
        let flat = [m[0][0], m[0][1], m[1][0], m[1][1]];
        for v in flat {
            if v != 0 {
                if v < 0 {
                    return [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]];
                }
                break;
            }
        }
        m
    }

    pub fn identity() -> MappingClass {
        MappingClass { m: [[1, 0], [0, 1]] }
    }

    pub fn entries(&self) -> [[i128; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> i128 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// The twist Dⁿ along `axis` as a mapping class.
    pub fn twist(axis: &Slope, n: i128) -> Result<MappingClass, Error> {
        let (a, b) = (axis.p, axis.q);
        MappingClass::new([
            [ck_add(1, ck_mul(n, ck_mul(-a, b)?)?)?, ck_mul(n, ck_mul(a, a)?)?],
            [ck_mul(n, ck_mul(-b, b)?)?, ck_add(1, ck_mul(n, ck_mul(a, b)?)?)?],
        ])
    }

    pub fn compose(&self, o: &MappingClass) -> Result<MappingClass, Error> {
        let a = &self.m;
        let b = &o.m;
        let e = |i: usize, j: usize| -> Result<i128, Error> {
            ck_add(ck_mul(a[i][0], b[0][j])?, ck_mul(a[i][1], b[1][j])?)
        };
        MappingClass::new([[e(0, 0)?, e(0, 1)?], [e(1, 0)?, e(1, 1)?]])
    }

    pub fn inverse(&self) -> MappingClass {
        let m = self.m;
        let det = self.det();
        // adjugate over det; det = ±1
        let adj = [[m[1][1] * det, -m[0][1] * det], [-m[1][0] * det, m[0][0] * det]];
        MappingClass { m: Self::canonical(adj) }
    }

    /// Projective action on slopes.
    pub fn apply(&self, s: &Slope) -> Result<Slope, Error> {
        Slope::normalize(
            ck_add(ck_mul(self.m[0][0], s.p)?, ck_mul(self.m[0][1], s.q)?)?,
            ck_add(ck_mul(self.m[1][0], s.p)?, ck_mul(self.m[1][1], s.q)?)?,
        )
    }
}

/// Apply a mapping class to a slope.
pub fn mapping_class_apply(g: &MappingClass, s: &Slope) -> Result<Slope, Error> {
    g.apply(s)
}

/// Depth-first walk of the Stern–Brocot structure on the circle of slopes.
///
/// The two root arcs are ((0,1), (1,0)) (non-negative slopes) and
/// ((1,0), (0,−1)) (negative slopes, recorded in canonical form). The walk
/// visits the two roots at depth 0 and each mediant at the depth of the level
/// that introduced it, in depth-first order within each arc.
pub fn walk_slopes<F: FnMut(Slope, u32)>(depth: u32, mut f: F) {
    f(Slope::zero(), 0);
    f(Slope::infinity(), 0);
    // raw vectors; only normalized at emission
    let mut stack: Vec<((i128, i128), (i128, i128), u32)> = vec![((1, 0), (0, -1), 1), ((0, 1), (1, 0), 1)];
    while let Some((u, v, d)) = stack.pop() {
        if d > depth {
            continue;
        }
        let m = (u.0 + v.0, u.1 + v.1);
        let s = Slope::normalize(m.0, m.1).expect("mediant of primitive pair is nonzero");
        f(s, d);
        stack.push(((u.0, u.1), m, d + 1));
        stack.push((m, (v.0, v.1), d + 1));
    }
}

/// All canonical slopes within the Stern–Brocot depth bound, sorted by the
/// circular order of p/q in ℝ ∪ {∞}.
pub fn enumerate_slopes(depth: u32) -> Vec<Slope> {
    let mut v = Vec::with_capacity(2usize << depth);
    walk_slopes(depth, |s, _| v.push(s));
    v.sort_by(|a, b| a.circular_cmp(b));
    v
}

/// Filter an enumeration by denominator bound |q| ≤ max_q (and |p| ≤ max_q).
pub fn filter_by_denominator(slopes: &[Slope], max_q: i128) -> Vec<Slope> {
    slopes
        .iter()
        .copied()
        .filter(|s| s.q.abs() <= max_q && s.p.abs() <= max_q)
        .collect()
}

/// Farey parents of a non-root slope: the arc (u, v) whose mediant it is.
/// Roots (0,1) and (1,0) have no parents.
pub fn farey_parents(s: &Slope) -> Option<(Slope, Slope)> {
    if *s == Slope::zero() || *s == Slope::infinity() {
        return None;
    }
    let (mut u, mut v) = if s.p >= 0 && s.q > 0 {
        ((0i128, 1i128), (1i128, 0i128))
    } else {
        ((1i128, 0i128), (0i128, -1i128))
    };
    loop {
        let m = (u.0 + v.0, u.1 + v.1);
        let sm = Slope::normalize(m.0, m.1).expect("mediant nonzero");
        if sm == *s {
            return Some((
                Slope::normalize(u.0, u.1).expect("parent nonzero"),
                Slope::normalize(v.0, v.1).expect("parent nonzero"),
            ));
        }
        // descend toward s; det(m, s) > 0 means s sits in the earlier sub-arc
        if sm.det_with(s).expect("parent search stays small") > 0 {
            v = m;
        } else {
            u = m;
        }
    }
}

/// Path of arcs from the root to `s` in its Stern–Brocot tree; each entry is
/// the (u, v) arc whose mediant was taken. Empty for the two roots.
pub fn stern_brocot_path(s: &Slope) -> Vec<((i128, i128), (i128, i128))> {
    let mut path = Vec::new();
    if *s == Slope::zero() || *s == Slope::infinity() {
        return path;
    }
    let (mut u, mut v) = if s.p >= 0 && s.q > 0 {
        ((0i128, 1i128), (1i128, 0i128))
    } else {
        ((1i128, 0i128), (0i128, -1i128))
    };
    loop {
        path.push((u, v));
        let m = (u.0 + v.0, u.1 + v.1);
        let sm = Slope::normalize(m.0, m.1).expect("mediant nonzero");
        if sm == *s {
            return path;
        }
        let d = sm.det_with(s).expect("path search stays small");
        if d > 0 {
            v = m;
        } else {
            u = m;
        }
    }
}

/// Curve-word letters. On S₁,₁ the free generators are A, B; on S₀,₄ the
/// peripheral generators P₁…P₄ (words are stored over P₁, P₂, P₃ with P₄
/// eliminated through the relation P₁P₂P₃P₄ = 1).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gen {
    A,
    B,
    P1,
    P2,
    P3,
    P4,
}

impl Gen {
    fn label(self) -> &'static str {
        match self {
            Gen::A => "A",
            Gen::B => "B",
            Gen::P1 => "P1",
            Gen::P2 => "P2",
            Gen::P3 => "P3",
            Gen::P4 => "P4",
        }
    }
}

/// Cyclically reduced word in the fundamental group; letters with ±1 exponents.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CurveWord(pub Vec<(Gen, i8)>);

impl CurveWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn freely_reduce(mut letters: Vec<(Gen, i8)>) -> Vec<(Gen, i8)> {
        loop {
            let mut out: Vec<(Gen, i8)> = Vec::with_capacity(letters.len());
            let mut changed = false;
            for x in letters {
                match out.last() {
                    Some(&(g, e)) if g == x.0 && e == -x.1 => {
                        out.pop();
                        changed = true;
                    }
                    _ => out.push(x),
                }
            }
            letters = out;
            if !changed {
                return letters;
            }
        }
    }

    /// Freely and cyclically reduce; cyclic reduction keeps the conjugacy class.
    pub fn reduced(letters: Vec<(Gen, i8)>) -> CurveWord {
        let mut w = Self::freely_reduce(letters);
        while w.len() >= 2 {
            let first = w[0];
            let last = *w.last().expect("nonempty");
            if first.0 == last.0 && first.1 == -last.1 {
                w.remove(0);
                w.pop();
                w = Self::freely_reduce(w);
            } else {
                break;
            }
        }
        CurveWord(w)
    }

    pub fn inverse(&self) -> CurveWord {
        CurveWord(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    pub fn concat(&self, o: &CurveWord) -> CurveWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        CurveWord(Self::freely_reduce(v))
    }
}

impl fmt::Display for CurveWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let mut first = true;
        for &(g, e) in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            if e == 1 {
                f.write_str(g.label())?;
            } else {
                write!(f, "{}^-1", g.label())?;
            }
        }
        Ok(())
    }
}

fn word_s11(s: &Slope) -> CurveWord {
    let a = CurveWord(vec![(Gen::A, 1)]);
    let b = CurveWord(vec![(Gen::B, 1)]);
    if *s == Slope::infinity() {
        return a;
    }
    if *s == Slope::zero() {
        return b;
    }
    // walk mediants with word rule w(u ⊕ v) = w(v)·w(u)
    let (mut u, mut v, mut wu, mut wv) = if s.p >= 0 && s.q > 0 {
        ((0i128, 1i128), (1i128, 0i128), b, a)
    } else {
        ((1i128, 0i128), (0i128, -1i128), a, b.inverse())
    };
    loop {
        let m = (u.0 + v.0, u.1 + v.1);
        let wm = wv.concat(&wu);
        let sm = Slope::normalize(m.0, m.1).expect("mediant nonzero");
        if sm == *s {
            return CurveWord::reduced(wm.0);
        }
        if sm.det_with(s).expect("word search stays small") > 0 {
            v = m;
            wv = wm;
        } else {
            u = m;
            wu = wm;
        }
    }
}

/// Conjugate the letters in `targets` by `by`ⁿ (a twist automorphism piece),
/// then reduce cyclically.
fn conj_letters(w: &CurveWord, targets: &[Gen], by: &CurveWord, n: i128) -> CurveWord {
    if n == 0 {
        return w.clone();
    }
    let byn = {
        let step = if n > 0 { by.clone() } else { by.inverse() };
        let mut acc = CurveWord(vec![]);
        for _ in 0..n.unsigned_abs() {
            acc = acc.concat(&step);
        }
        acc
    };
    let byn_inv = byn.inverse();
    let mut out: Vec<(Gen, i8)> = Vec::new();
    for &(g, e) in &w.0 {
        if targets.contains(&g) {
            out.extend_from_slice(&byn.0);
            out.push((g, e));
            out.extend_from_slice(&byn_inv.0);
        } else {
            out.push((g, e));
        }
    }
    CurveWord::reduced(out)
}

/// Substitute P₄ = (P₁P₂P₃)⁻¹ and reduce.
fn eliminate_p4(w: &CurveWord) -> CurveWord {
    let p4 = vec![(Gen::P3, -1i8), (Gen::P2, -1i8), (Gen::P1, -1i8)];
    let mut out: Vec<(Gen, i8)> = Vec::new();
    for &(g, e) in &w.0 {
        if g == Gen::P4 {
            if e == 1 {
                out.extend_from_slice(&p4);
            } else {
                out.extend(p4.iter().rev().map(|&(g, e)| (g, -e)));
            }
        } else {
            out.push((g, e));
        }
    }
    CurveWord::reduced(out)
}

/// Full-twist automorphism along (1,0) on π₁(S₀,₄): conjugates P₃, P₄ by
/// (P₁P₂)ⁿ. Slope action [[1, 2n], [0, 1]].
fn s04_twist_a(w: &CurveWord, n: i128) -> CurveWord {
    conj_letters(w, &[Gen::P3, Gen::P4], &CurveWord(vec![(Gen::P1, 1), (Gen::P2, 1)]), n)
}

/// Full-twist automorphism along (0,1): conjugates P₁, P₄ by (P₂P₃)ⁿ.
/// Slope action [[1, 0], [−2n, 1]].
fn s04_twist_b(w: &CurveWord, n: i128) -> CurveWord {
    conj_letters(w, &[Gen::P1, Gen::P4], &CurveWord(vec![(Gen::P2, 1), (Gen::P3, 1)]), n)
}

fn word_s04(s: &Slope) -> CurveWord {
    // roots for the three parity classes mod 2
    if *s == Slope::infinity() {
        return CurveWord(vec![(Gen::P1, 1), (Gen::P2, 1)]);
    }
    if *s == Slope::zero() {
        return CurveWord(vec![(Gen::P2, 1), (Gen::P3, 1)]);
    }
    if (s.p, s.q) == (1, 1) {
        return eliminate_p4(&CurveWord(vec![(Gen::P2, 1), (Gen::P4, 1)]));
    }
    if (s.p, s.q) == (-1, 1) {
        return CurveWord(vec![(Gen::P3, 1), (Gen::P1, 1)]);
    }
    // even continued fraction: full twists act by [[1,±2],[0,1]] and [[1,0],[∓2,1]]
    fn round_div(a: i128, b: i128) -> i128 {
        // nearest integer to a/b, ties away from zero
        let m = (a.abs() + b.abs() / 2) / b.abs();
        if (a < 0) ^ (b < 0) {
            -m
        } else {
            m
        }
    }
    let (p, q) = (s.p, s.q);
    if p.abs() > q.abs() && q != 0 {
        let n = round_div(p, 2 * q);
        if n != 0 {
            let inner = Slope::normalize(p - 2 * n * q, q).expect("reduction keeps primitivity");
            return CurveWord::reduced(s04_twist_a(&word_s04(&inner), n).0);
        }
    }
    if p != 0 {
        let n = round_div(q, 2 * p);
        if n != 0 {
            let inner = Slope::normalize(p, q - 2 * n * p).expect("reduction keeps primitivity");
            return CurveWord::reduced(s04_twist_b(&word_s04(&inner), -n).0);
        }
    }
    // |p| = |q| would have matched a root; |p| or |q| ≤ 1 handled above
    unreachable!("even continued fraction terminates on a parity root")
}

/// Deterministic word of the slope curve in π₁ under the fixed construction
/// convention: Stern–Brocot concatenation on S₁,₁ (word(1,0) = A,
/// word(0,1) = B, mediant concatenates), full-twist automorphisms over the
/// peripheral generators on S₀,₄.
pub fn curve_word(kind: SurfaceKind, s: &Slope) -> CurveWord {
    match kind {
        SurfaceKind::OncePuncturedTorus => word_s11(s),
        SurfaceKind::FourPuncturedSphere => word_s04(s),
    }
}

/// Farey graph restricted to `enumerate_slopes(depth)`: edge between two
/// slopes iff their intersection number is 1 (S₁,₁) or 2 (S₀,₄).
#[derive(Clone, Debug, Serialize)]
pub struct FareyGraph {
    pub kind: SurfaceKind,
    pub depth: u32,
    pub vertices: Vec<Slope>,
    /// Index pairs into `vertices`, i < j.
    pub edges: Vec<(usize, usize)>,
}

pub fn farey_graph(kind: SurfaceKind, depth: u32) -> Result<FareyGraph, Error> {
    let vertices = enumerate_slopes(depth);
    let target = kind.farey_intersection();
    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            if intersection_number(kind, &vertices[i], &vertices[j])? == target {
                edges.push((i, j));
            }
        }
    }
    Ok(FareyGraph { kind, depth, vertices, edges })
}

impl FareyGraph {
    /// Breadth-first connectivity check.
    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == n
    }

    /// JSON export: `{"vertices": ["p/q", ...], "edges": [["p/q","r/s"], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.vertices.iter().map(|s| s.token()).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|&(i, j)| {
                [self.vertices[i].token(), self.vertices[j].token()]
            }).collect::<Vec<_>>(),
        })
    }
}

/// Distinct slopes, deterministic order, for sampling-style tests.
pub fn slope_set(depth: u32) -> BTreeSet<Slope> {
    enumerate_slopes(depth).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_reduces_and_canonicalizes() {
        assert_eq!(Slope::normalize(2, 4).unwrap(), Slope::new(1, 2).unwrap());
        assert_eq!(Slope::normalize(-1, -1).unwrap(), Slope::new(1, 1).unwrap());
        assert_eq!(Slope::normalize(3, 0).unwrap(), Slope::infinity());
        assert!(matches!(Slope::normalize(0, 0), Err(Error::ZeroSlopeInput)));
        // idempotent
        let s = Slope::normalize(-6, 4).unwrap();
        assert_eq!(Slope::normalize(s.p(), s.q()).unwrap(), s);
    }

    #[test]
    fn enumerate_depth_zero_and_one() {
        let d0 = enumerate_slopes(0);
        assert_eq!(d0, vec![Slope::zero(), Slope::infinity()]);
        let d1 = enumerate_slopes(1);
        assert_eq!(
            d1,
            vec![
                Slope::zero(),
                Slope::new(1, 1).unwrap(),
                Slope::infinity(),
                Slope::new(-1, 1).unwrap(),
            ]
        );
    }

    #[test]
    fn enumeration_grows_strictly_and_is_unique() {
        let mut last = 0;
        for d in 0..=10 {
            let v = enumerate_slopes(d);
            let set: BTreeSet<_> = v.iter().copied().collect();
            assert_eq!(set.len(), v.len(), "duplicates at depth {d}");
            assert!(v.len() > last);
            last = v.len();
        }
        assert_eq!(last, 2usize << 10);
    }

    #[test]
    fn intersection_numbers_match_farey_axioms() {
        let s11 = SurfaceKind::OncePuncturedTorus;
        let s04 = SurfaceKind::FourPuncturedSphere;
        let zero = Slope::zero();
        let inf = Slope::infinity();
        assert_eq!(intersection_number(s11, &zero, &inf).unwrap(), 1);
        assert_eq!(intersection_number(s04, &zero, &inf).unwrap(), 2);
        assert_eq!(intersection_number(s11, &zero, &zero).unwrap(), 0);
        // symmetric
        let a = Slope::new(3, 5).unwrap();
        let b = Slope::new(2, 7).unwrap();
        assert_eq!(
            intersection_number(s11, &a, &b).unwrap(),
            intersection_number(s11, &b, &a).unwrap()
        );
    }

    #[test]
    fn dehn_twist_examples() {
        let axis = Slope::zero();
        let inf = Slope::infinity();
        assert_eq!(dehn_twist(&axis, 5, &axis).unwrap(), axis);
        assert_eq!(dehn_twist(&axis, 1, &inf).unwrap(), Slope::new(-1, 1).unwrap());
    }

    #[test]
    fn dehn_twist_group_law_and_axis_intersection() {
        let kind = SurfaceKind::OncePuncturedTorus;
        let slopes = enumerate_slopes(5);
        let pick = |i: usize| slopes[(i * 37) % slopes.len()];
        for i in 0..40 {
            let axis = pick(i);
            let target = pick(i + 11);
            let n = (i as i128 % 41) - 20;
            let m = ((i * 7) as i128 % 41) - 20;
            let once = dehn_twist(&axis, n + m, &target).unwrap();
            let twice = dehn_twist(&axis, n, &dehn_twist(&axis, m, &target).unwrap()).unwrap();
            assert_eq!(once, twice, "group law at axis {axis:?} target {target:?}");
            assert_eq!(dehn_twist(&axis, 0, &target).unwrap(), target);
            assert_eq!(
                intersection_number(kind, &axis, &once).unwrap(),
                intersection_number(kind, &axis, &target).unwrap(),
                "twist changed intersection with axis"
            );
        }
    }

    #[test]
    fn conjugation_compatibility_with_twists() {
        // g(Dⁿ_α β) = Dⁿ_{g(α)} g(β) for sampled g with det ±1
        let gs = [
            MappingClass::new([[0, 1], [-1, 0]]).unwrap(),
            MappingClass::new([[1, 1], [0, 1]]).unwrap(),
            MappingClass::new([[2, 1], [1, 1]]).unwrap(),
            MappingClass::new([[1, 0], [0, -1]]).unwrap(), // det -1
            MappingClass::new([[3, 2], [1, 1]]).unwrap(),
        ];
        let slopes = enumerate_slopes(4);
        for (k, g) in gs.iter().enumerate() {
            for i in 0..10 {
                let alpha = slopes[(i * 13 + k) % slopes.len()];
                let beta = slopes[(i * 29 + 3 * k + 1) % slopes.len()];
                let n = (i as i128) - 5;
                // det −1 classes reverse twist orientation
                let n_image = n * g.det();
                let lhs = g.apply(&dehn_twist(&alpha, n, &beta).unwrap()).unwrap();
                let rhs = dehn_twist(&g.apply(&alpha).unwrap(), n_image, &g.apply(&beta).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "g = {g:?}, α = {alpha:?}, β = {beta:?}, n = {n}");
            }
        }
    }

    #[test]
    fn mapping_class_examples() {
        let id = MappingClass::identity();
        let s = Slope::new(3, 7).unwrap();
        assert_eq!(id.apply(&s).unwrap(), s);
        let rot = MappingClass::new([[0, 1], [-1, 0]]).unwrap();
        assert_eq!(rot.apply(&Slope::infinity()).unwrap(), Slope::zero());
        assert!(matches!(
            MappingClass::new([[2, 0], [0, 1]]),
            Err(Error::NotUnimodular(2))
        ));
    }

    #[test]
    fn farey_edges_and_connectivity() {
        let g11 = farey_graph(SurfaceKind::OncePuncturedTorus, 3).unwrap();
        let zero_idx = g11.vertices.iter().position(|s| *s == Slope::zero()).unwrap();
        let inf_idx = g11.vertices.iter().position(|s| *s == Slope::infinity()).unwrap();
        let has_edge = |g: &FareyGraph, i: usize, j: usize| {
            let (i, j) = (i.min(j), i.max(j));
            g.edges.contains(&(i, j))
        };
        assert!(has_edge(&g11, zero_idx, inf_idx));
        let half_idx = g11.vertices.iter().position(|s| *s == Slope::new(1, 2).unwrap()).unwrap();
        assert!(has_edge(&g11, zero_idx, half_idx), "(0,1)-(1,2) must be a Farey edge");
        for d in 1..=8 {
            assert!(farey_graph(SurfaceKind::OncePuncturedTorus, d).unwrap().is_connected());
            assert!(farey_graph(SurfaceKind::FourPuncturedSphere, d).unwrap().is_connected());
        }
    }

    #[test]
    fn stern_brocot_neighbors_have_unit_determinant() {
        walk_slopes(9, |s, _| {
            if let Some((u, v)) = farey_parents(&s) {
                assert_eq!(u.det_with(&s).unwrap().abs(), 1);
                assert_eq!(v.det_with(&s).unwrap().abs(), 1);
                assert_eq!(u.det_with(&v).unwrap().abs(), 1);
            }
        });
    }

    #[test]
    fn word_construction_conventions() {
        let t = SurfaceKind::OncePuncturedTorus;
        assert_eq!(curve_word(t, &Slope::infinity()).to_string(), "A");
        assert_eq!(curve_word(t, &Slope::zero()).to_string(), "B");
        assert_eq!(curve_word(t, &Slope::new(1, 1).unwrap()).to_string(), "A B");
        assert_eq!(curve_word(t, &Slope::new(2, 1).unwrap()).to_string(), "A A B");
        assert_eq!(curve_word(t, &Slope::new(1, 2).unwrap()).to_string(), "A B B");
        let s = SurfaceKind::FourPuncturedSphere;
        assert_eq!(curve_word(s, &Slope::infinity()).to_string(), "P1 P2");
        assert_eq!(curve_word(s, &Slope::zero()).to_string(), "P2 P3");
        // words are cyclically reduced and deterministic
        for slope in enumerate_slopes(6) {
            let w1 = curve_word(s, &slope);
            let w2 = curve_word(s, &slope);
            assert_eq!(w1, w2);
            let r = CurveWord::reduced(w1.0.clone());
            assert_eq!(r, w1, "word for {slope:?} not cyclically reduced");
        }
    }

    #[test]
    fn slope_token_roundtrip() {
        for s in enumerate_slopes(6) {
            assert_eq!(Slope::from_token(&s.token()).unwrap(), s);
        }
    }
}
