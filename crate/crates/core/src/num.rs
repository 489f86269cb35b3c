//! Multiprecision scalars, two-parameter jets for forward-mode derivatives,
//! and small linear-algebra helpers used throughout the crate.
//!
//! [`Real`] wraps an MPFR float; every binary operation is carried out at the
//! larger precision of its operands. [`Jet`] pairs a value with its partial
//! derivatives with respect to the two Fenchel–Nielsen chart coordinates
//! (ℓ, τ), so holonomy built generically over [`Scalar`] yields exact length
//! gradients in one pass.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::CompleteRound;
use rug::Float;

/// Arbitrary-precision real number with value-level precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Real(Float);

impl Real {
    pub fn from_f64(bits: u32, v: f64) -> Self {
        Real(Float::with_val(bits, v))
    }

    pub fn from_u64(bits: u32, v: u64) -> Self {
        Real(Float::with_val(bits, v))
    }

    pub fn from_i64(bits: u32, v: i64) -> Self {
        Real(Float::with_val(bits, v))
    }

    pub fn zero(bits: u32) -> Self {
        Real(Float::with_val(bits, 0))
    }

    pub fn one(bits: u32) -> Self {
        Real(Float::with_val(bits, 1))
    }

    /// Parse a decimal string at the given precision.
    pub fn parse_decimal(bits: u32, s: &str) -> Option<Self> {
        Float::parse(s).ok().map(|p| Real(Float::with_val(bits, p)))
    }

    /// Decimal string carrying the full precision of the value (round-trips).
    pub fn to_decimal_string(&self) -> String {
        // ceil(bits * log10(2)) + 2 guard digits
        let digits = (self.0.prec() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
        self.0.to_string_radix(10, Some(digits))
    }

    pub fn bits(&self) -> u32 {
        self.0.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    fn prec2(&self, o: &Real) -> u32 {
        self.0.prec().max(o.0.prec())
    }

    pub fn abs(&self) -> Real {
        Real(self.0.clone().abs())
    }

    pub fn sqrt(&self) -> Real {
        Real(self.0.sqrt_ref().complete(self.0.prec()))
    }

    pub fn exp(&self) -> Real {
        Real(self.0.exp_ref().complete(self.0.prec()))
    }

    pub fn ln(&self) -> Real {
        Real(self.0.ln_ref().complete(self.0.prec()))
    }

    pub fn cosh(&self) -> Real {
        Real(self.0.cosh_ref().complete(self.0.prec()))
    }

    pub fn sinh(&self) -> Real {
        Real(self.0.sinh_ref().complete(self.0.prec()))
    }

    pub fn acosh(&self) -> Real {
        Real(self.0.acosh_ref().complete(self.0.prec()))
    }

    pub fn square(&self) -> Real {
        Real(self.0.square_ref().complete(self.0.prec()))
    }

    /// Euclidean norm of (self, o).
    pub fn hypot(&self, o: &Real) -> Real {
        Real(self.0.hypot_ref(&o.0).complete(self.prec2(o)))
    }

    pub fn min(&self, o: &Real) -> Real {
        if self <= o {
            self.clone()
        } else {
            o.clone()
        }
    }

    pub fn max(&self, o: &Real) -> Real {
        if self >= o {
            self.clone()
        } else {
            o.clone()
        }
    }

    pub fn signum_f64(&self) -> f64 {
        if self.0.is_sign_negative() {
            -1.0
        } else {
            1.0
        }
    }

    /// Convert to a different precision (rounding to nearest on narrowing).
    pub fn with_bits(&self, bits: u32) -> Real {
        let mut f = self.0.clone();
        f.set_prec_round(bits, Round::Nearest);
        Real(f)
    }

    pub fn total_cmp(&self, o: &Real) -> Ordering {
        self.0.partial_cmp(&o.0).unwrap_or(Ordering::Equal)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e}", self.0.to_f64())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

macro_rules! real_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                Real(Float::with_val(self.prec2(rhs), &self.0 $op &rhs.0))
            }
        }
        impl $trait<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                $trait::$method(&self, &rhs)
            }
        }
        impl $trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                $trait::$method(&self, rhs)
            }
        }
        impl $trait<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                $trait::$method(self, &rhs)
            }
        }
    };
}

real_binop!(Add, add, +);
real_binop!(Sub, sub, -);
real_binop!(Mul, mul, *);
real_binop!(Div, div, /);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real((-&self.0).complete(self.0.prec()))
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

/// Scalar interface shared by plain reals and jets so holonomy can be built
/// once and differentiated for free.
pub trait Scalar: Clone + Send + Sync {
    fn bits(&self) -> u32;
    /// A constant (zero derivatives for jets) at this scalar's precision.
    fn constant(&self, v: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn exp(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sinh(&self) -> Self;
    /// Inverse hyperbolic cosine; argument must be ≥ 1.
    fn acosh(&self) -> Self;
    fn abs(&self) -> Self;
    /// Primal (value) part.
    fn value(&self) -> &Real;
}

impl Scalar for Real {
    fn bits(&self) -> u32 {
        Real::bits(self)
    }

    fn constant(&self, v: f64) -> Self {
        Real::from_f64(self.bits(), v)
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }

    fn sub(&self, o: &Self) -> Self {
        self - o
    }

    fn mul(&self, o: &Self) -> Self {
        self * o
    }

    fn div(&self, o: &Self) -> Self {
        self / o
    }

    fn neg(&self) -> Self {
        -self
    }

    fn exp(&self) -> Self {
        Real::exp(self)
    }

    fn cosh(&self) -> Self {
        Real::cosh(self)
    }

    fn sinh(&self) -> Self {
        Real::sinh(self)
    }

    fn acosh(&self) -> Self {
        Real::acosh(self)
    }

    fn abs(&self) -> Self {
        Real::abs(self)
    }

    fn value(&self) -> &Real {
        self
    }
}

/// Forward-mode jet: value plus partials with respect to the Fenchel–Nielsen
/// chart coordinates (∂/∂ℓ, ∂/∂τ).
#[derive(Clone, Debug)]
pub struct Jet {
    pub v: Real,
    pub dl: Real,
    pub dt: Real,
}

impl Jet {
    pub fn constant_at(bits: u32, v: f64) -> Jet {
        Jet {
            v: Real::from_f64(bits, v),
            dl: Real::zero(bits),
            dt: Real::zero(bits),
        }
    }

    /// Seed for the ℓ coordinate: value ℓ, ∂/∂ℓ = 1.
    pub fn seed_l(l: &Real) -> Jet {
        Jet {
            v: l.clone(),
            dl: Real::one(l.bits()),
            dt: Real::zero(l.bits()),
        }
    }

    /// Seed for the τ coordinate: value τ, ∂/∂τ = 1.
    pub fn seed_t(t: &Real) -> Jet {
        Jet {
            v: t.clone(),
            dl: Real::zero(t.bits()),
            dt: Real::one(t.bits()),
        }
    }

    fn chain(&self, v: Real, dv: Real) -> Jet {
        Jet {
            dl: &dv * &self.dl,
            dt: &dv * &self.dt,
            v,
        }
    }
}

impl Scalar for Jet {
    fn bits(&self) -> u32 {
        self.v.bits()
    }

    fn constant(&self, v: f64) -> Self {
        Jet::constant_at(self.v.bits(), v)
    }

    fn add(&self, o: &Self) -> Self {
        Jet {
            v: &self.v + &o.v,
            dl: &self.dl + &o.dl,
            dt: &self.dt + &o.dt,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Jet {
            v: &self.v - &o.v,
            dl: &self.dl - &o.dl,
            dt: &self.dt - &o.dt,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        Jet {
            v: &self.v * &o.v,
            dl: &self.dl * &o.v + &self.v * &o.dl,
            dt: &self.dt * &o.v + &self.v * &o.dt,
        }
    }

    fn div(&self, o: &Self) -> Self {
        let v = &self.v / &o.v;
        Jet {
            dl: (&self.dl - &v * &o.dl) / &o.v,
            dt: (&self.dt - &v * &o.dt) / &o.v,
            v,
        }
    }

    fn neg(&self) -> Self {
        Jet {
            v: -&self.v,
            dl: -&self.dl,
            dt: -&self.dt,
        }
    }

    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e.clone(), e)
    }

    fn cosh(&self) -> Self {
        self.chain(self.v.cosh(), self.v.sinh())
    }

    fn sinh(&self) -> Self {
        self.chain(self.v.sinh(), self.v.cosh())
    }

    fn acosh(&self) -> Self {
        let one = Real::one(self.v.bits());
        let d = &one / (&self.v * &self.v - &one).sqrt();
        self.chain(self.v.acosh(), d)
    }

    fn abs(&self) -> Self {
        if self.v.is_sign_negative() {
            Scalar::neg(self)
        } else {
            self.clone()
        }
    }

    fn value(&self) -> &Real {
        &self.v
    }
}

/// 2×2 matrix over a scalar type; determinant-one matrices throughout.
#[derive(Clone, Debug)]
pub struct Mat2<S>(pub [[S; 2]; 2]);

impl<S: Scalar> Mat2<S> {
    pub fn mul(&self, o: &Mat2<S>) -> Mat2<S> {
        let a = &self.0;
        let b = &o.0;
        let e = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
        Mat2([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    /// Inverse assuming det = 1.
    pub fn inv_unimodular(&self) -> Mat2<S> {
        let a = &self.0;
        Mat2([
            [a[1][1].clone(), a[0][1].neg()],
            [a[1][0].neg(), a[0][0].clone()],
        ])
    }

    pub fn trace(&self) -> S {
        self.0[0][0].add(&self.0[1][1])
    }

    pub fn det(&self) -> S {
        self.0[0][0].mul(&self.0[1][1]).sub(&self.0[0][1].mul(&self.0[1][0]))
    }

    pub fn identity_like(s: &S) -> Mat2<S> {
        let one = s.constant(1.0);
        let zero = s.constant(0.0);
        Mat2([[one.clone(), zero.clone()], [zero, one]])
    }
}

/// Tangent vector in the Fenchel–Nielsen chart (δℓ, δτ).
#[derive(Clone, Debug)]
pub struct Vec2 {
    pub l: Real,
    pub t: Real,
}

/// Cotangent vector in the Fenchel–Nielsen chart.
#[derive(Clone, Debug)]
pub struct Cov2 {
    pub l: Real,
    pub t: Real,
}

impl Vec2 {
    pub fn new(l: Real, t: Real) -> Self {
        Vec2 { l, t }
    }

    pub fn add(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.l + &o.l, &self.t + &o.t)
    }

    pub fn sub(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.l - &o.l, &self.t - &o.t)
    }

    pub fn scale(&self, k: &Real) -> Vec2 {
        Vec2::new(&self.l * k, &self.t * k)
    }

    pub fn is_zero(&self) -> bool {
        self.l.to_f64() == 0.0 && self.t.to_f64() == 0.0
    }
}

impl Cov2 {
    pub fn new(l: Real, t: Real) -> Self {
        Cov2 { l, t }
    }

    /// Pairing ⟨covector, vector⟩ in the fixed chart.
    pub fn pair(&self, v: &Vec2) -> Real {
        &self.l * &v.l + &self.t * &v.t
    }

    pub fn add(&self, o: &Cov2) -> Cov2 {
        Cov2::new(&self.l + &o.l, &self.t + &o.t)
    }

    pub fn sub(&self, o: &Cov2) -> Cov2 {
        Cov2::new(&self.l - &o.l, &self.t - &o.t)
    }

    pub fn scale(&self, k: &Real) -> Cov2 {
        Cov2::new(&self.l * k, &self.t * k)
    }

    pub fn cross(&self, o: &Cov2) -> Real {
        &self.l * &o.t - &self.t * &o.l
    }

    pub fn is_zero(&self) -> bool {
        self.l.to_f64() == 0.0 && self.t.to_f64() == 0.0
    }
}

/// Least-squares line fit; returns (intercept, slope).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (sy / n - slope * sx / n, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_roundtrips_through_decimal_strings() {
        let x = Real::from_f64(128, 1.0) / Real::from_f64(128, 3.0);
        let s = x.to_decimal_string();
        let y = Real::parse_decimal(128, &s).unwrap();
        let err = (&x - &y).abs();
        assert!(err < Real::from_f64(128, 1e-37), "err = {err:?}");
    }

    #[test]
    fn jet_matches_finite_differences() {
        let bits = 128;
        let l = Real::from_f64(bits, 1.7);
        let t = Real::from_f64(bits, 0.33);
        // f(l, t) = cosh(l) * exp(t) + acosh(1 + l^2)
        let f = |l: &Jet, t: &Jet| -> Jet {
            let one = l.constant(1.0);
            l.cosh().mul(&t.exp()).add(&one.add(&l.mul(l)).acosh())
        };
        let jl = Jet::seed_l(&l);
        let jt = Jet::seed_t(&t);
        let out = f(&jl, &jt);
        let h = 1e-20_f64;
        let hr = Real::from_f64(bits, h);
        let fv = |l: &Real, t: &Real| -> Real {
            let one = Real::one(bits);
            l.cosh() * t.exp() + (&one + &(l * l)).acosh()
        };
        let dl = (fv(&(&l + &hr), &t) - fv(&(&l - &hr), &t)) / (Real::from_f64(bits, 2.0 * h));
        let dt = (fv(&l, &(&t + &hr)) - fv(&l, &(&t - &hr))) / (Real::from_f64(bits, 2.0 * h));
        assert!((&out.dl - &dl).abs().to_f64() < 1e-15);
        assert!((&out.dt - &dt).abs().to_f64() < 1e-15);
    }

    #[test]
    fn mat2_inverse_of_unimodular() {
        let bits = 96;
        let m = Mat2([
            [Real::from_f64(bits, 2.0), Real::from_f64(bits, 3.0)],
            [Real::from_f64(bits, 1.0), Real::from_f64(bits, 2.0)],
        ]);
        let p = m.mul(&m.inv_unimodular());
        assert!((p.0[0][0].to_f64() - 1.0).abs() < 1e-25);
        assert!(p.0[0][1].to_f64().abs() < 1e-25);
    }
}
