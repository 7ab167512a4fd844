//! Numeric scalar abstraction shared by plain reals, nested dual numbers and
//! truncated Taylor jets.
//!
//! Every closed-form quantity in the crate (metric components, frames, level-set
//! functions, shape operators) is written once against [`Scalar`]. Evaluating it
//! at `f64` gives the value; evaluating it at [`Dual<T>`] gives one directional
//! derivative on top of whatever `T` already carries. Nesting duals is how
//! derivatives of derived fields are obtained without finite differences.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(v: f64) -> Self;

    /// The order-0 real part, used for branch decisions (domain checks,
    /// Gram-Schmidt thresholds) so that all derivative layers take the same branch.
    fn re(&self) -> f64;

    /// True when every stored component (value and all derivative parts) is finite.
    fn all_finite(&self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    /// Real power for a positive base, `exp(y ln x)`.
    fn powf(self, y: Self) -> Self {
        (y * self.ln()).exp()
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, y: Self) -> Self {
        f64::powf(self, y)
    }
}

/// Forward-mode dual number `re + du·ε` with `ε² = 0` over any inner scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub du: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, du: T) -> Self {
        Self { re, du }
    }

    pub fn constant(re: T) -> Self {
        Self { re, du: T::zero() }
    }

    /// Chain rule helper: value `f(re)` with derivative `f'(re)`.
    fn chain(self, value: T, slope: T) -> Self {
        Self { re: value, du: self.du * slope }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.du + o.du)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.du - o.du)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.du * o.re + self.re * o.du)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.re;
        let q = self.re * inv;
        Self::new(q, (self.du - q * o.du) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.du)
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Self::new(self.re + o, self.du)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Self::new(self.re - o, self.du)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Self::new(self.re * o, self.du * o)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Self::new(self.re / o, self.du / o)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Self::constant(T::from_f64(v))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn all_finite(&self) -> bool {
        self.re.all_finite() && self.du.all_finite()
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, t * t + 1.0)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::one() / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::one() / (s * 2.0))
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            _ => self.chain(self.re.powi(n), self.re.powi(n - 1) * n as f64),
        }
    }
}

/// Seeds a point `q + ε·dir` one dual level above `T`.
pub fn seed<T: Scalar>(q: &[T], dir: &[T]) -> Vec<Dual<T>> {
    q.iter().zip(dir).map(|(&a, &b)| Dual::new(a, b)).collect()
}

/// Lifts a point to the next dual level with zero derivative part.
pub fn lift<T: Scalar>(q: &[T]) -> Vec<Dual<T>> {
    q.iter().map(|&a| Dual::constant(a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_duals_give_mixed_second_derivative() {
        // f(x, y) = x^2 y at (3, 2): d/dx d/dy = 2x = 6
        let x = Dual::new(Dual::new(3.0, 1.0), Dual::new(0.0, 0.0));
        let y = Dual::new(Dual::new(2.0, 0.0), Dual::new(1.0, 0.0));
        let f = x * x * y;
        assert_eq!(f.re.re, 18.0);
        assert_eq!(f.du.du, 6.0);
    }

    #[test]
    fn elementary_functions_match_analytic_derivatives() {
        let x = Dual::new(0.7_f64, 1.0);
        assert!((x.sin().du - 0.7_f64.cos()).abs() < 1e-15);
        assert!((x.tan().du - 1.0 / 0.7_f64.cos().powi(2)).abs() < 1e-14);
        assert!((x.ln().du - 1.0 / 0.7).abs() < 1e-15);
        assert!((x.sqrt().du - 0.5 / 0.7_f64.sqrt()).abs() < 1e-15);
        assert!((x.powi(-2).du + 2.0 / 0.7_f64.powi(3)).abs() < 1e-12);
        assert!((x.powf(Dual::constant(1.5)).du - 1.5 * 0.7_f64.sqrt()).abs() < 1e-14);
    }
}
