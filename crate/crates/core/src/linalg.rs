//! Small generic vector helpers for coordinate-component vectors.

use crate::diffcalc::Scalar;

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Scalar>(s: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| s * x).collect()
}

/// `a + s·b`
pub fn axpy<T: Scalar>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn zeros<T: Scalar>(n: usize) -> Vec<T> {
    vec![T::zero(); n]
}

pub fn basis<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    (0..n).map(|k| if k == i { T::one() } else { T::zero() }).collect()
}

pub fn to_f64<T: Scalar>(a: &[T]) -> Vec<f64> {
    a.iter().map(|x| x.re()).collect()
}

pub fn from_f64<T: Scalar>(a: &[f64]) -> Vec<T> {
    a.iter().map(|&x| T::from_f64(x)).collect()
}

/// Euclidean max-norm of a plain vector.
pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
