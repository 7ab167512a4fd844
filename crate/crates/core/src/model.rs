//! The model Sasakian space form ℝ^{2m+1}(−3).
//!
//! Coordinates are ordered `(x₁..x_m, y₁..y_m, z)`. The structure is
//!
//! ```text
//! η = ½(dz − Σ yᵢ dxᵢ),   ξ = 2∂z,   g = η⊗η + ¼ Σ (dxᵢ² + dyᵢ²)
//! φ∂xᵢ = −∂yᵢ,   φ∂yᵢ = ∂xᵢ + yᵢ∂z,   φ∂z = 0
//! ```
//!
//! with the orthonormal frame `eᵢ = 2(∂xᵢ + yᵢ∂z)`, `e_{m+i} = −2∂yᵢ`, `e_{2m+1} = ξ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffcalc::{Scalar, VectorField};
use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point must have odd length 2m+1 with m >= 1, got {0}")]
    BadPointLength(usize),
    #[error("point coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("m must be at least 1")]
    ZeroM,
    #[error("c = {0} is formula-only; the realized metric has c = -3")]
    FormulaOnly(f64),
    #[error("vector is parallel to xi or zero; the phi-section is degenerate")]
    DegeneratePlane,
    #[error("vector is not orthogonal to xi (eta = {0:e})")]
    NotHorizontal(f64),
}

/// A point of the global chart of ℝ^{2m+1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, ModelError> {
        let n = coords.len();
        if n < 3 || n % 2 == 0 {
            return Err(ModelError::BadPointLength(n));
        }
        if let Some(index) = coords.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { index });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn m(&self) -> usize {
        (self.coords.len() - 1) / 2
    }
}

/// Dimension and φ-sectional curvature of a Sasakian space form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormParams {
    pub m: usize,
    pub c: f64,
}

impl SpaceFormParams {
    pub fn new(m: usize, c: f64) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::ZeroM);
        }
        Ok(Self { m, c })
    }

    /// The realized model `ℝ^{2m+1}(−3)`.
    pub fn model(m: usize) -> Result<Self, ModelError> {
        Self::new(m, -3.0)
    }

    pub fn is_realized(&self) -> bool {
        self.c == -3.0
    }

    /// The metric model for these parameters; fails for formula-only `c`.
    pub fn realize(&self) -> Result<Model, ModelError> {
        if !self.is_realized() {
            return Err(ModelError::FormulaOnly(self.c));
        }
        Model::new(self.m)
    }

    pub fn structure_at(&self, p: &Point) -> Result<StructureTensors, ModelError> {
        self.realize()?.structure_at(p)
    }

    pub fn adapted_frame_at(&self, p: &Point) -> Result<AdaptedFrame, ModelError> {
        self.realize()?.adapted_frame_at(p)
    }
}

/// The realized metric model. `phi_sign` is `+1` except in fault-injection runs,
/// where flipping it breaks the contact-metric identities on purpose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Model {
    m: usize,
    phi_sign: f64,
}

impl Model {
    pub fn new(m: usize) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::ZeroM);
        }
        Ok(Self { m, phi_sign: 1.0 })
    }

    /// Same model with `φ` replaced by `−φ`.
    pub fn with_flipped_phi(self) -> Self {
        Self { phi_sign: -self.phi_sign, ..self }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn params(&self) -> SpaceFormParams {
        SpaceFormParams { m: self.m, c: -3.0 }
    }

    pub fn check(&self, p: &Point) -> Result<(), ModelError> {
        if p.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), got: p.dim() });
        }
        Ok(())
    }

    fn z(&self) -> usize {
        2 * self.m
    }

    pub fn eta<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let mut w = linalg::zeros(self.dim());
        for i in 0..self.m {
            w[i] = -q[self.m + i] * 0.5;
        }
        w[self.z()] = T::from_f64(0.5);
        w
    }

    pub fn eta_of<T: Scalar>(&self, q: &[T], v: &[T]) -> T {
        let mut s = v[self.z()];
        for i in 0..self.m {
            s -= q[self.m + i] * v[i];
        }
        s * 0.5
    }

    pub fn xi<T: Scalar>(&self) -> Vec<T> {
        let mut v = linalg::zeros(self.dim());
        v[self.z()] = T::from_f64(2.0);
        v
    }

    pub fn inner<T: Scalar>(&self, q: &[T], u: &[T], v: &[T]) -> T {
        let mut flat = T::zero();
        for a in 0..2 * self.m {
            flat += u[a] * v[a];
        }
        self.eta_of(q, u) * self.eta_of(q, v) + flat * 0.25
    }

    pub fn norm<T: Scalar>(&self, q: &[T], v: &[T]) -> T {
        self.inner(q, v, v).sqrt()
    }

    /// `g(v, ·)` as a covector.
    pub fn lower<T: Scalar>(&self, q: &[T], v: &[T]) -> Vec<T> {
        let e = self.eta_of(q, v);
        let mut w = linalg::scale(e, &self.eta(q));
        for a in 0..2 * self.m {
            w[a] += v[a] * 0.25;
        }
        w
    }

    pub fn metric<T: Scalar>(&self, q: &[T]) -> Vec<Vec<T>> {
        (0..self.dim()).map(|i| self.lower(q, &linalg::basis(self.dim(), i))).collect()
    }

    /// `g⁻¹ = Σ e_a e_aᵀ` from the orthonormal frame.
    pub fn inverse_metric<T: Scalar>(&self, q: &[T]) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut inv = vec![linalg::zeros::<T>(n); n];
        for a in 0..n {
            let e = self.frame_vector(q, a);
            for i in 0..n {
                for j in 0..n {
                    inv[i][j] += e[i] * e[j];
                }
            }
        }
        inv
    }

    /// `g⁻¹ ω`
    pub fn raise<T: Scalar>(&self, q: &[T], w: &[T]) -> Vec<T> {
        let mut v = linalg::zeros(self.dim());
        for a in 0..self.dim() {
            let e = self.frame_vector(q, a);
            let c = w.iter().zip(&e).fold(T::zero(), |s, (&x, &y)| s + x * y);
            v = linalg::axpy(&v, c, &e);
        }
        v
    }

    pub fn phi<T: Scalar>(&self, q: &[T], v: &[T]) -> Vec<T> {
        let m = self.m;
        let mut out = linalg::zeros(self.dim());
        let mut zc = T::zero();
        for i in 0..m {
            out[i] = v[m + i] * self.phi_sign;
            out[m + i] = -v[i] * self.phi_sign;
            zc += q[m + i] * v[m + i];
        }
        out[self.z()] = zc * self.phi_sign;
        out
    }

    /// Matrix of φ in coordinates, `phi[i][j] = (φ∂_j)^i`.
    pub fn phi_matrix<T: Scalar>(&self, q: &[T]) -> Vec<Vec<T>> {
        let n = self.dim();
        let cols: Vec<Vec<T>> = (0..n).map(|j| self.phi(q, &linalg::basis(n, j))).collect();
        (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
    }

    pub fn frame_vector<T: Scalar>(&self, q: &[T], a: usize) -> Vec<T> {
        let m = self.m;
        let mut e = linalg::zeros(self.dim());
        if a < m {
            e[a] = T::from_f64(2.0);
            e[self.z()] = q[m + a] * 2.0;
        } else if a < 2 * m {
            e[a] = T::from_f64(-2.0);
        } else {
            e[self.z()] = T::from_f64(2.0);
        }
        e
    }

    pub fn frame<T: Scalar>(&self, q: &[T]) -> Vec<Vec<T>> {
        (0..self.dim()).map(|a| self.frame_vector(q, a)).collect()
    }

    /// Components of `v` in the adapted frame, `g(v, e_a)`.
    pub fn frame_components<T: Scalar>(&self, q: &[T], v: &[T]) -> Vec<T> {
        (0..self.dim()).map(|a| self.inner(q, v, &self.frame_vector(q, a))).collect()
    }

    pub fn structure_at(&self, p: &Point) -> Result<StructureTensors, ModelError> {
        self.check(p)?;
        let q = p.coords();
        let n = self.dim();
        let to_mat = |rows: Vec<Vec<f64>>| DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(StructureTensors {
            g: to_mat(self.metric(q)),
            phi: to_mat(self.phi_matrix(q)),
            eta: DVector::from_vec(self.eta(q)),
            xi: DVector::from_vec(self.xi()),
        })
    }

    pub fn adapted_frame_at(&self, p: &Point) -> Result<AdaptedFrame, ModelError> {
        self.check(p)?;
        Ok(AdaptedFrame { m: self.m, vectors: self.frame(p.coords()) })
    }
}

/// `(g, φ, η, ξ)` in coordinate components at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTensors {
    pub g: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub eta: DVector<f64>,
    pub xi: DVector<f64>,
}

impl StructureTensors {
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.g * v)[(0, 0)]
    }

    /// Leading principal minors of `g`, all positive iff `g` is positive definite.
    pub fn leading_minors(&self) -> Vec<f64> {
        (1..=self.g.nrows())
            .map(|k| self.g.view((0, 0), (k, k)).into_owned().determinant())
            .collect()
    }

    /// Max-abs entry of `φ² + I − ξ⊗η`.
    pub fn phi_squared_residual(&self) -> f64 {
        let n = self.g.nrows();
        let r = &self.phi * &self.phi + DMatrix::identity(n, n) - &self.xi * self.eta.transpose();
        r.amax()
    }

    pub fn eta_xi_residual(&self) -> f64 {
        (self.eta.dot(&self.xi) - 1.0).abs()
    }

    /// Max-abs entry of `η ∘ φ` and of `φξ`.
    pub fn eta_phi_residual(&self) -> f64 {
        let a = (self.eta.transpose() * &self.phi).amax();
        let b = (&self.phi * &self.xi).amax();
        a.max(b)
    }

    /// Max-abs entry of `φᵀ g φ − g + η ηᵀ`.
    pub fn compatibility_residual(&self) -> f64 {
        let r = self.phi.transpose() * &self.g * &self.phi - &self.g + &self.eta * self.eta.transpose();
        r.amax()
    }
}

/// Frame-component vectors always carry which frame they refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameTag {
    Coordinate,
    Adapted,
    SurfaceAdapted,
    ExamplePlane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub frame: FrameTag,
    pub components: Vec<f64>,
}

/// The adapted orthonormal frame evaluated at a point, in coordinate components.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedFrame {
    pub m: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl AdaptedFrame {
    pub fn xi(&self) -> &[f64] {
        &self.vectors[2 * self.m]
    }
}

/// The frame field `e_index` of the model.
#[derive(Clone, Copy, Debug)]
pub struct FrameField {
    pub model: Model,
    pub index: usize,
}

impl VectorField for FrameField {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.model.frame_vector(q, self.index)
    }
}

/// `Σ c_a e_a` with constant coefficients; a smooth extension of any vector at a point.
#[derive(Clone, Debug)]
pub struct FrameCombination {
    pub model: Model,
    pub coeffs: Vec<f64>,
}

impl FrameCombination {
    /// The extension of `v` (given at `p`) with frame coefficients frozen at `p`.
    pub fn extending(model: Model, p: &Point, v: &[f64]) -> Self {
        Self { model, coeffs: model.frame_components(p.coords(), v) }
    }
}

impl VectorField for FrameCombination {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let mut out = linalg::zeros(self.model.dim());
        for (a, &c) in self.coeffs.iter().enumerate() {
            out = linalg::axpy(&out, T::from_f64(c), &self.model.frame_vector(q, a));
        }
        out
    }
}

/// `φX` as a field.
pub struct PhiOf<X> {
    pub model: Model,
    pub x: X,
}

impl<X: VectorField> VectorField for PhiOf<X> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.model.phi(q, &self.x.eval(q))
    }
}

/// A vector field with polynomial coordinate components of degree ≤ 2, used by
/// property tests and sweeps as a generic non-frame field.
#[derive(Clone, Debug)]
pub struct QuadraticField {
    /// `v^i(q) = a[i] + Σ_j b[i][j] q_j + Σ_j c[i][j] q_j²`
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl QuadraticField {
    pub fn random<R: rand::Rng>(n: usize, rng: &mut R) -> Self {
        let row = |rng: &mut R| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let a = row(rng);
        let b = (0..n).map(|_| row(rng)).collect();
        let c = (0..n).map(|_| row(rng)).collect();
        Self { a, b, c }
    }
}

impl VectorField for QuadraticField {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        (0..self.a.len())
            .map(|i| {
                let mut s = T::from_f64(self.a[i]);
                for (j, &qj) in q.iter().enumerate() {
                    s += qj * self.b[i][j] + qj * qj * self.c[i][j];
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_structure() {
        let s = SpaceFormParams::model(1).unwrap().structure_at(&Point::new(vec![0.0; 3]).unwrap()).unwrap();
        assert_eq!(s.eta.as_slice(), &[0.0, 0.0, 0.5]);
        assert_eq!(s.xi.as_slice(), &[0.0, 0.0, 2.0]);
        assert_eq!(s.g[(2, 2)], 0.25);
        assert_eq!(s.eta_xi_residual(), 0.0);
    }

    #[test]
    fn frame_at_unit_y() {
        let f = Model::new(1).unwrap().adapted_frame_at(&Point::new(vec![0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(f.vectors[0], vec![2.0, 0.0, 2.0]);
        assert_eq!(f.vectors[1], vec![0.0, -2.0, 0.0]);
        assert_eq!(f.xi(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn metric_is_positive_definite() {
        let s = Model::new(1).unwrap().structure_at(&Point::new(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        // g = [[1/4 + y²/4, 0, −y/4], [0, 1/4, 0], [−y/4, 0, 1/4]] at y = 2
        let expected = [[1.25, 0.0, -0.5], [0.0, 0.25, 0.0], [-0.5, 0.0, 0.25]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.g[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
        let minors = s.leading_minors();
        assert!(minors.iter().all(|&d| d > 0.0));
        assert!((minors[2] - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn phi_formula_matches_frame_pairing() {
        // φ(X∂x + Y∂y + Z∂z) = Y∂x − X∂y + Yy∂z
        let model = Model::new(1).unwrap();
        let q = [0.3, -0.7, 1.1];
        let v = [1.5, -2.0, 0.4];
        let phi = model.phi(&q, &v);
        assert_eq!(phi, vec![v[1], -v[0], v[1] * q[1]]);
    }

    #[test]
    fn errors() {
        assert_eq!(Point::new(vec![0.0; 4]), Err(ModelError::BadPointLength(4)));
        assert!(matches!(Point::new(vec![0.0, f64::NAN, 0.0]), Err(ModelError::NonFinite { index: 1 })));
        assert_eq!(SpaceFormParams::new(0, -3.0), Err(ModelError::ZeroM));
        let p = Point::new(vec![0.0; 5]).unwrap();
        assert!(matches!(Model::new(1).unwrap().structure_at(&p), Err(ModelError::DimensionMismatch { .. })));
        assert_eq!(SpaceFormParams::new(1, 1.0).unwrap().realize(), Err(ModelError::FormulaOnly(1.0)));
    }
}
