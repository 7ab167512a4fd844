//! Differentiation engine: scalar and vector fields over the global chart,
//! directional derivatives along fields, Lie brackets and metric gradients.
//!
//! Fields are generic over [`Scalar`] so that the same closed form can be
//! evaluated on plain reals or on nested dual numbers. A derivative along a
//! vector *field* is itself a field ([`Directional`]), so `X(X(f))` is obtained by
//! nesting rather than by freezing `X` at the base point.

mod fd;
mod jet;
mod scalar;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fd::{default_step, richardson, STEP_ORDER1, STEP_ORDER2, STEP_ORDER3};
pub use jet::Jet3;
pub use scalar::{lift, seed, Dual, Scalar};

use crate::linalg;
use crate::model::{Model, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffError {
    #[error("non-finite evaluation near {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("derivative order {0} not supported (expected 1..=3)")]
    UnsupportedOrder(usize),
}

/// Which derivative path a computation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Nested dual numbers through closed forms; exact to roundoff.
    #[default]
    Jet,
    /// Central differences with Richardson extrapolation.
    Fd,
}

impl Strategy {
    /// Derivative mode for a computation whose deepest derivative has the given order.
    pub fn mode(self, order: usize) -> DiffMode {
        match self {
            Strategy::Jet => DiffMode::Jet,
            Strategy::Fd => DiffMode::FiniteDifference { step: default_step(order) },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Jet => "jet",
            Strategy::Fd => "fd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiffMode {
    Jet,
    FiniteDifference { step: f64 },
}

pub trait ScalarField: Sync {
    fn eval<T: Scalar>(&self, q: &[T]) -> T;
}

pub trait VectorField: Sync {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T>;
}

impl<F: ScalarField> ScalarField for &F {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        (**self).eval(q)
    }
}

impl<F: VectorField> VectorField for &F {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        (**self).eval(q)
    }
}

/// A vector field with constant coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantField(pub Vec<f64>);

impl VectorField for ConstantField {
    fn eval<T: Scalar>(&self, _q: &[T]) -> Vec<T> {
        linalg::from_f64(&self.0)
    }
}

/// The coordinate function `q ↦ q[index]`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate(pub usize);

impl ScalarField for Coordinate {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        q[self.0]
    }
}

/// Pointwise product of two scalar fields.
pub struct Product<F, G>(pub F, pub G);

impl<F: ScalarField, G: ScalarField> ScalarField for Product<F, G> {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        self.0.eval(q) * self.1.eval(q)
    }
}

/// Derivative of `f` at `q` along the frozen vector `dir`.
pub fn derive_scalar<T: Scalar, F: ScalarField>(f: &F, q: &[T], dir: &[T], mode: DiffMode) -> T {
    match mode {
        DiffMode::Jet => f.eval(&seed(q, dir)).du,
        DiffMode::FiniteDifference { step } => {
            let at = |t: f64| f.eval(&linalg::axpy(q, T::from_f64(t), dir));
            fd_combine(&|t| vec![at(t)], step)[0]
        }
    }
}

/// Value and derivative of a vector field at `q` along the frozen vector `dir`.
pub fn derive_vector<T: Scalar, V: VectorField>(
    v: &V,
    q: &[T],
    dir: &[T],
    mode: DiffMode,
) -> (Vec<T>, Vec<T>) {
    match mode {
        DiffMode::Jet => {
            let out = v.eval(&seed(q, dir));
            (out.iter().map(|d| d.re).collect(), out.iter().map(|d| d.du).collect())
        }
        DiffMode::FiniteDifference { step } => {
            let at = |t: f64| v.eval(&linalg::axpy(q, T::from_f64(t), dir));
            (v.eval(q), fd_combine(&at, step))
        }
    }
}

/// Richardson-extrapolated central first difference of `g` at 0, evaluated in `T`.
fn fd_combine<T: Scalar>(g: &dyn Fn(f64) -> Vec<T>, h: f64) -> Vec<T> {
    let d = |s: f64| {
        let (a, b) = (g(s), g(-s));
        a.iter().zip(&b).map(|(&x, &y)| (x - y) / (2.0 * s)).collect::<Vec<T>>()
    };
    let coarse = d(h);
    let fine = d(0.5 * h);
    fine.iter().zip(&coarse).map(|(&f, &c)| (f * 4.0 - c) / 3.0).collect()
}

/// `X(f)` as a scalar field in its own right.
pub struct Directional<F, X> {
    pub f: F,
    pub x: X,
    pub mode: DiffMode,
}

impl<F, X> Directional<F, X> {
    pub fn new(f: F, x: X, mode: DiffMode) -> Self {
        Self { f, x, mode }
    }
}

impl<F: ScalarField, X: VectorField> ScalarField for Directional<F, X> {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        let dir = self.x.eval(q);
        derive_scalar(&self.f, q, &dir, self.mode)
    }
}

/// `[X, Y] = X(Y) − Y(X)` componentwise.
pub struct LieBracket<X, Y> {
    pub x: X,
    pub y: Y,
    pub mode: DiffMode,
}

impl<X, Y> LieBracket<X, Y> {
    pub fn new(x: X, y: Y, mode: DiffMode) -> Self {
        Self { x, y, mode }
    }
}

impl<X: VectorField, Y: VectorField> VectorField for LieBracket<X, Y> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let xv = self.x.eval(q);
        let yv = self.y.eval(q);
        let (_, dy) = derive_vector(&self.y, q, &xv, self.mode);
        let (_, dx) = derive_vector(&self.x, q, &yv, self.mode);
        linalg::sub(&dy, &dx)
    }
}

fn finite_or_err(v: f64, p: &Point) -> Result<f64, DiffError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DiffError::NonFinite { point: p.coords().to_vec() })
    }
}

/// `X^k(f)(p)` for `k = 1..=3`, nesting the field derivative `k` times.
pub fn directional_derivative<F: ScalarField, X: VectorField>(
    f: &F,
    x: &X,
    p: &Point,
    order: usize,
    strategy: Strategy,
) -> Result<f64, DiffError> {
    let q = p.coords();
    let mode = strategy.mode(order);
    let v = match order {
        1 => Directional::new(f, x, mode).eval(q),
        2 => Directional::new(Directional::new(f, x, mode), x, mode).eval(q),
        3 => Directional::new(Directional::new(Directional::new(f, x, mode), x, mode), x, mode)
            .eval(q),
        k => return Err(DiffError::UnsupportedOrder(k)),
    };
    finite_or_err(v, p)
}

/// Derivatives `d^k/dt^k f(p + t·dir)|₀` for `k = 0..=order` along a frozen line.
pub fn line_derivatives<F: ScalarField>(
    f: &F,
    dir: &[f64],
    p: &Point,
    order: usize,
) -> Result<Vec<f64>, DiffError> {
    if order > 3 {
        return Err(DiffError::UnsupportedOrder(order));
    }
    let q: Vec<Jet3> = p
        .coords()
        .iter()
        .zip(dir)
        .map(|(&a, &b)| Jet3::from_coefficients([a, b, 0.0, 0.0]))
        .collect();
    let jet = f.eval(&q);
    (0..=order).map(|k| finite_or_err(jet.derivative(k), p)).collect()
}

/// `[X, Y]` at `p` in coordinate components.
pub fn lie_bracket<X: VectorField, Y: VectorField>(
    x: &X,
    y: &Y,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    LieBracket::new(x, y, strategy.mode(1))
        .eval(p.coords())
        .into_iter()
        .map(|v| finite_or_err(v, p))
        .collect()
}

/// `grad f = Σ e_a(f) e_a` over the adapted orthonormal frame.
pub fn metric_gradient<F: ScalarField>(
    model: &Model,
    f: &F,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    let q = p.coords();
    let mode = strategy.mode(1);
    let mut grad = vec![0.0; q.len()];
    for a in 0..model.dim() {
        let e = model.frame_vector::<f64>(q, a);
        let ef = finite_or_err(derive_scalar(f, q, &e, mode), p)?;
        grad = linalg::axpy(&grad, ef, &e);
    }
    Ok(grad)
}

/// Coordinate differential `(∂_i f)` at a generic point.
pub fn differential<T: Scalar, F: ScalarField>(f: &F, q: &[T]) -> Vec<T> {
    (0..q.len())
        .map(|i| f.eval(&seed(q, &linalg::basis(q.len(), i))).du)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Poly;
    impl ScalarField for Poly {
        fn eval<T: Scalar>(&self, q: &[T]) -> T {
            q[0] * q[0] * q[1] + q[2].sin() * q[0]
        }
    }

    #[test]
    fn order_two_along_constant_field_matches_line_derivative() {
        let p = Point::new(vec![0.3, -1.1, 0.7]).unwrap();
        let dir = vec![0.2, 0.5, -1.0];
        let x = ConstantField(dir.clone());
        let nested = directional_derivative(&Poly, &x, &p, 2, Strategy::Jet).unwrap();
        let line = line_derivatives(&Poly, &dir, &p, 2).unwrap();
        assert!((nested - line[2]).abs() < 1e-13);
    }

    #[test]
    fn unsupported_order_is_rejected() {
        let p = Point::new(vec![0.0; 3]).unwrap();
        let err = directional_derivative(&Poly, &ConstantField(vec![1.0, 0.0, 0.0]), &p, 4, Strategy::Jet);
        assert_eq!(err, Err(DiffError::UnsupportedOrder(4)));
    }

    struct Singular;
    impl ScalarField for Singular {
        fn eval<T: Scalar>(&self, q: &[T]) -> T {
            T::one() / q[0]
        }
    }

    #[test]
    fn singular_field_reports_non_finite() {
        let p = Point::new(vec![0.0, 1.0, 2.0]).unwrap();
        let r = directional_derivative(&Singular, &ConstantField(vec![1.0, 0.0, 0.0]), &p, 1, Strategy::Jet);
        assert!(matches!(r, Err(DiffError::NonFinite { .. })));
    }
}
