//! Levi-Civita and Tanaka-Webster connections of the model, torsion, the
//! exterior derivative of η and frame connection coefficients.
//!
//! A connection is determined pointwise by `(X, Y, dY(X))`, so every connection
//! here implements [`Connection::combine`] and [`Covariant`] turns it into a
//! vector field that can itself be differentiated again.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffcalc::{
    derive_vector, seed, DiffError, DiffMode, Directional, LieBracket, Scalar, ScalarField, Strategy,
    VectorField,
};
use crate::linalg;
use crate::model::{FrameField, Model, PhiOf, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("frame is not orthonormal (residual {0:e})")]
    NotOrthonormal(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionKind {
    LeviCivita,
    TanakaWebsterContact,
    TanakaWebsterSasakian,
}

pub trait Connection: Sync {
    fn kind(&self) -> ConnectionKind;
    fn model(&self) -> Model;
    /// `∇_x Y` at `q` given `y = Y(q)` and `dy = dY(x)`.
    fn combine<T: Scalar>(&self, q: &[T], x: &[T], y: &[T], dy: &[T]) -> Vec<T>;
}

impl<C: Connection> Connection for &C {
    fn kind(&self) -> ConnectionKind {
        (**self).kind()
    }
    fn model(&self) -> Model {
        (**self).model()
    }
    fn combine<T: Scalar>(&self, q: &[T], x: &[T], y: &[T], dy: &[T]) -> Vec<T> {
        (**self).combine(q, x, y, dy)
    }
}

/// `Γ^k_ij` of the model metric, `gamma[k][i][j]`, from dual-differentiated `g`.
pub fn christoffel<T: Scalar>(model: &Model, q: &[T]) -> Vec<Vec<Vec<T>>> {
    let n = model.dim();
    // dg[l][i][j] = ∂_l g_ij
    let dg: Vec<Vec<Vec<T>>> = (0..n)
        .map(|l| {
            model
                .metric(&seed(q, &linalg::basis(n, l)))
                .into_iter()
                .map(|row| row.into_iter().map(|d| d.du).collect())
                .collect()
        })
        .collect();
    let ginv = model.inverse_metric(q);
    let mut gamma = vec![vec![vec![T::zero(); n]; n]; n];
    for i in 0..n {
        for j in i..n {
            let lower: Vec<T> = (0..n).map(|l| (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]) * 0.5).collect();
            for k in 0..n {
                let mut s = T::zero();
                for l in 0..n {
                    s += ginv[k][l] * lower[l];
                }
                gamma[k][i][j] = s;
                gamma[k][j][i] = s;
            }
        }
    }
    gamma
}

fn contract<T: Scalar>(gamma: &[Vec<Vec<T>>], x: &[T], y: &[T]) -> Vec<T> {
    gamma
        .iter()
        .map(|gk| {
            let mut s = T::zero();
            for (i, row) in gk.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    s += c * x[i] * y[j];
                }
            }
            s
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct LeviCivita {
    pub model: Model,
}

impl Connection for LeviCivita {
    fn kind(&self) -> ConnectionKind {
        ConnectionKind::LeviCivita
    }
    fn model(&self) -> Model {
        self.model
    }
    fn combine<T: Scalar>(&self, q: &[T], x: &[T], y: &[T], dy: &[T]) -> Vec<T> {
        linalg::add(dy, &contract(&christoffel(&self.model, q), x, y))
    }
}

/// `∇̂_X Y = ∇_X Y + (X(η(Y)) − η(∇_X Y))ξ − η(Y)∇_Xξ + η(X)φY` built on Levi-Civita.
#[derive(Clone, Copy, Debug)]
pub struct TanakaWebsterContact {
    pub model: Model,
}

impl Connection for TanakaWebsterContact {
    fn kind(&self) -> ConnectionKind {
        ConnectionKind::TanakaWebsterContact
    }
    fn model(&self) -> Model {
        self.model
    }
    fn combine<T: Scalar>(&self, q: &[T], x: &[T], y: &[T], dy: &[T]) -> Vec<T> {
        let model = &self.model;
        let gamma = christoffel(model, q);
        let lc = linalg::add(dy, &contract(&gamma, x, y));
        let xi = model.xi::<T>();
        // X(η(Y)) = (∂_X η)(Y) + η(dY(X))
        let deta: Vec<T> = model.eta(&seed(q, x)).iter().map(|d| d.du).collect();
        let x_eta_y = y.iter().zip(&deta).fold(T::zero(), |s, (&a, &b)| s + a * b) + model.eta_of(q, dy);
        let nabla_x_xi = contract(&gamma, x, &xi);
        let mut out = linalg::axpy(&lc, x_eta_y - model.eta_of(q, &lc), &xi);
        out = linalg::axpy(&out, -model.eta_of(q, y), &nabla_x_xi);
        linalg::axpy(&out, model.eta_of(q, x), &model.phi(q, y))
    }
}

/// `∇*_X Y = ∇̄_X Y + g(X,φY)ξ + η(Y)φX + η(X)φY`
#[derive(Clone, Copy, Debug)]
pub struct TanakaWebsterSasakian {
    pub model: Model,
}

impl Connection for TanakaWebsterSasakian {
    fn kind(&self) -> ConnectionKind {
        ConnectionKind::TanakaWebsterSasakian
    }
    fn model(&self) -> Model {
        self.model
    }
    fn combine<T: Scalar>(&self, q: &[T], x: &[T], y: &[T], dy: &[T]) -> Vec<T> {
        let model = &self.model;
        let lc = linalg::add(dy, &contract(&christoffel(model, q), x, y));
        let phi_y = model.phi(q, y);
        let mut out = linalg::axpy(&lc, model.inner(q, x, &phi_y), &model.xi());
        out = linalg::axpy(&out, model.eta_of(q, y), &model.phi(q, x));
        linalg::axpy(&out, model.eta_of(q, x), &phi_y)
    }
}

/// `∇_X Y` as a vector field.
pub struct Covariant<C, X, Y> {
    pub conn: C,
    pub x: X,
    pub y: Y,
    pub mode: DiffMode,
}

impl<C, X, Y> Covariant<C, X, Y> {
    pub fn new(conn: C, x: X, y: Y, mode: DiffMode) -> Self {
        Self { conn, x, y, mode }
    }
}

impl<C: Connection, X: VectorField, Y: VectorField> VectorField for Covariant<C, X, Y> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let xv = self.x.eval(q);
        let (yv, dy) = derive_vector(&self.y, q, &xv, self.mode);
        self.conn.combine(q, &xv, &yv, &dy)
    }
}

fn finite(v: Vec<f64>, p: &Point) -> Result<Vec<f64>, DiffError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(DiffError::NonFinite { point: p.coords().to_vec() })
    }
}

pub fn covariant_derivative<C: Connection, X: VectorField, Y: VectorField>(
    conn: &C,
    x: &X,
    y: &Y,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    finite(Covariant::new(conn, x, y, strategy.mode(1)).eval(p.coords()), p)
}

pub fn levi_civita<X: VectorField, Y: VectorField>(
    model: &Model,
    x: &X,
    y: &Y,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    covariant_derivative(&LeviCivita { model: *model }, x, y, p, strategy)
}

pub fn tanaka_webster_contact<X: VectorField, Y: VectorField>(
    model: &Model,
    x: &X,
    y: &Y,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    covariant_derivative(&TanakaWebsterContact { model: *model }, x, y, p, strategy)
}

pub fn tanaka_webster_sasakian<X: VectorField, Y: VectorField>(
    model: &Model,
    x: &X,
    y: &Y,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    covariant_derivative(&TanakaWebsterSasakian { model: *model }, x, y, p, strategy)
}

/// The model's ξ as a field.
#[derive(Clone, Copy, Debug)]
pub struct XiField(pub Model);

impl VectorField for XiField {
    fn eval<T: Scalar>(&self, _q: &[T]) -> Vec<T> {
        self.0.xi()
    }
}

/// `g(X, Y)` as a scalar field.
pub struct InnerField<X, Y> {
    pub model: Model,
    pub x: X,
    pub y: Y,
}

impl<X: VectorField, Y: VectorField> ScalarField for InnerField<X, Y> {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        self.model.inner(q, &self.x.eval(q), &self.y.eval(q))
    }
}

/// `η(Y)` as a scalar field.
pub struct EtaOf<Y> {
    pub model: Model,
    pub y: Y,
}

impl<Y: VectorField> ScalarField for EtaOf<Y> {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        self.model.eta_of(q, &self.y.eval(q))
    }
}

/// `max_X |∇_X ξ + φX|_g` over the adapted frame.
pub fn kcontact_check(model: &Model, p: &Point, strategy: Strategy) -> Result<f64, DiffError> {
    let mut worst: f64 = 0.0;
    for a in 0..model.dim() {
        let x = FrameField { model: *model, index: a };
        worst = worst.max(kcontact_residual(model, &x, p, strategy)?);
    }
    Ok(worst)
}

/// `|∇_X ξ + φX|_g` for any field `X`.
pub fn kcontact_residual<X: VectorField>(model: &Model, x: &X, p: &Point, strategy: Strategy) -> Result<f64, DiffError> {
    let q = p.coords();
    let d = levi_civita(model, x, &XiField(*model), p, strategy)?;
    let r = linalg::add(&d, &model.phi(q, &x.eval(q)));
    Ok(model.norm(q, &r))
}

/// `|(∇_Xφ)Y − g(X,Y)ξ + η(Y)X|_g` for fields `X`, `Y`.
pub fn sasakian_residual<X: VectorField, Y: VectorField>(
    model: &Model,
    x: &X,
    y: &Y,
    p: &Point,
    strategy: Strategy,
) -> Result<f64, DiffError> {
    let q = p.coords();
    let phi_y = PhiOf { model: *model, x: y };
    let a = levi_civita(model, x, &phi_y, p, strategy)?;
    let b = model.phi(q, &levi_civita(model, x, y, p, strategy)?);
    let (xv, yv) = (x.eval(q), y.eval(q));
    let mut r = linalg::sub(&a, &b);
    r = linalg::axpy(&r, -model.inner(q, &xv, &yv), &model.xi());
    r = linalg::axpy(&r, model.eta_of(q, &yv), &xv);
    Ok(model.norm(q, &r))
}

/// Max of [`sasakian_residual`] over adapted-frame pairs.
pub fn sasakian_check(model: &Model, p: &Point, strategy: Strategy) -> Result<f64, DiffError> {
    let mut worst: f64 = 0.0;
    for a in 0..model.dim() {
        for b in 0..model.dim() {
            let x = FrameField { model: *model, index: a };
            let y = FrameField { model: *model, index: b };
            worst = worst.max(sasakian_residual(model, &x, &y, p, strategy)?);
        }
    }
    Ok(worst)
}

/// `|Z g(X,Y) − g(∇_Z X, Y) − g(X, ∇_Z Y)|`
pub fn metricity_residual<C: Connection, X: VectorField, Y: VectorField, Z: VectorField>(
    conn: &C,
    x: &X,
    y: &Y,
    z: &Z,
    p: &Point,
    strategy: Strategy,
) -> Result<f64, DiffError> {
    let model = conn.model();
    let q = p.coords();
    let mode = strategy.mode(1);
    let lhs = Directional::new(InnerField { model, x, y }, z, mode).eval(q);
    let dzx = covariant_derivative(conn, z, x, p, strategy)?;
    let dzy = covariant_derivative(conn, z, y, p, strategy)?;
    let r = lhs - model.inner(q, &dzx, &y.eval(q)) - model.inner(q, &x.eval(q), &dzy);
    if !r.is_finite() {
        return Err(DiffError::NonFinite { point: q.to_vec() });
    }
    Ok(r.abs())
}

/// `|(∇_Z η)(Y)| = |Z η(Y) − η(∇_Z Y)|`
pub fn eta_parallel_residual<C: Connection, Y: VectorField, Z: VectorField>(
    conn: &C,
    y: &Y,
    z: &Z,
    p: &Point,
    strategy: Strategy,
) -> Result<f64, DiffError> {
    let model = conn.model();
    let q = p.coords();
    let lhs = Directional::new(EtaOf { model, y }, z, strategy.mode(1)).eval(q);
    let d = covariant_derivative(conn, z, y, p, strategy)?;
    Ok((lhs - model.eta_of(q, &d)).abs())
}

/// `|∇_Z ξ|_g`
pub fn xi_parallel_residual<C: Connection, Z: VectorField>(
    conn: &C,
    z: &Z,
    p: &Point,
    strategy: Strategy,
) -> Result<f64, DiffError> {
    let model = conn.model();
    let d = covariant_derivative(conn, z, &XiField(model), p, strategy)?;
    Ok(model.norm(p.coords(), &d))
}

/// `T(X,Y) = ∇_X Y − ∇_Y X − [X,Y]`
pub fn torsion<C: Connection, X: VectorField, Y: VectorField>(
    conn: &C,
    x: &X,
    y: &Y,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    let a = covariant_derivative(conn, x, y, p, strategy)?;
    let b = covariant_derivative(conn, y, x, p, strategy)?;
    let br = LieBracket::new(x, y, strategy.mode(1)).eval(p.coords());
    finite(linalg::sub(&linalg::sub(&a, &b), &br), p)
}

/// Normalisation of the exterior derivative of a 1-form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DEtaConvention {
    /// `dη(X,Y) = ½(Xη(Y) − Yη(X) − η([X,Y]))`
    Half,
    /// `dη(X,Y) = Xη(Y) − Yη(X) − η([X,Y])`
    Full,
}

impl DEtaConvention {
    pub fn factor(self) -> f64 {
        match self {
            DEtaConvention::Half => 0.5,
            DEtaConvention::Full => 1.0,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            DEtaConvention::Half => "half: d\u{3b7}(X,Y) = 1/2 (X\u{3b7}(Y) - Y\u{3b7}(X) - \u{3b7}([X,Y]))",
            DEtaConvention::Full => "full: d\u{3b7}(X,Y) = X\u{3b7}(Y) - Y\u{3b7}(X) - \u{3b7}([X,Y])",
        }
    }
}

pub fn deta<X: VectorField, Y: VectorField>(
    model: &Model,
    x: &X,
    y: &Y,
    p: &Point,
    convention: DEtaConvention,
    strategy: Strategy,
) -> Result<f64, DiffError> {
    let q = p.coords();
    let mode = strategy.mode(1);
    let xy = Directional::new(EtaOf { model: *model, y }, x, mode).eval(q);
    let yx = Directional::new(EtaOf { model: *model, y: x }, y, mode).eval(q);
    let br = LieBracket::new(x, y, mode).eval(q);
    let v = convention.factor() * (xy - yx - model.eta_of(q, &br));
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DiffError::NonFinite { point: q.to_vec() })
    }
}

/// Max over adapted-frame pairs of `|dη(e_a,e_b) − g(e_a, φe_b)|`.
pub fn deta_residual(model: &Model, p: &Point, convention: DEtaConvention, strategy: Strategy) -> Result<f64, DiffError> {
    let q = p.coords();
    let mut worst: f64 = 0.0;
    for a in 0..model.dim() {
        for b in 0..model.dim() {
            let x = FrameField { model: *model, index: a };
            let y = FrameField { model: *model, index: b };
            let d = deta(model, &x, &y, p, convention, strategy)?;
            let rhs = model.inner(q, &x.eval(q), &model.phi(q, &y.eval(q)));
            worst = worst.max((d - rhs).abs());
        }
    }
    Ok(worst)
}

/// Picks the convention under which `dη(X,Y) = g(X,φY)` holds at a reference point.
pub fn adjudicate_deta(model: &Model) -> DEtaConvention {
    let p = Point::new((0..model.dim()).map(|i| 0.3 + 0.1 * i as f64).collect()).expect("valid reference point");
    let half = deta_residual(model, &p, DEtaConvention::Half, Strategy::Jet).unwrap_or(f64::INFINITY);
    let full = deta_residual(model, &p, DEtaConvention::Full, Strategy::Jet).unwrap_or(f64::INFINITY);
    if half <= full {
        DEtaConvention::Half
    } else {
        DEtaConvention::Full
    }
}

/// `|T(X,Y) − 2dη(X,Y)ξ|_g` under the given convention.
pub fn tw_torsion_residual<C: Connection, X: VectorField, Y: VectorField>(
    conn: &C,
    x: &X,
    y: &Y,
    p: &Point,
    convention: DEtaConvention,
    strategy: Strategy,
) -> Result<f64, DiffError> {
    let model = conn.model();
    let t = torsion(conn, x, y, p, strategy)?;
    let d = deta(&model, x, y, p, convention, strategy)?;
    let r = linalg::axpy(&t, -2.0 * d, &model.xi());
    Ok(model.norm(p.coords(), &r))
}

/// `ω[i][j][k] = g(∇_{e_i} e_j, e_k)` for an orthonormal tangent frame. With `conn`
/// Levi-Civita this equals the coefficient of the induced connection, since
/// pairing with a tangent `e_k` discards the normal part.
pub fn frame_connection_coeffs<C: Connection, F: VectorField>(
    conn: &C,
    frame: &[F],
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<Vec<Vec<f64>>>, ConnectionError> {
    let model = conn.model();
    let q = p.coords();
    let legs: Vec<Vec<f64>> = frame.iter().map(|e| e.eval(q)).collect();
    let mut ortho: f64 = 0.0;
    for (i, a) in legs.iter().enumerate() {
        for (j, b) in legs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((model.inner(q, a, b) - target).abs());
        }
    }
    if !(ortho <= 1e-8) {
        return Err(ConnectionError::NotOrthonormal(ortho));
    }
    let mut omega = Vec::with_capacity(frame.len());
    for ei in frame {
        let mut row = Vec::with_capacity(frame.len());
        for ej in frame {
            let d = covariant_derivative(conn, ei, ej, p, strategy)?;
            row.push(legs.iter().map(|ek| model.inner(q, &d, ek)).collect());
        }
        omega.push(row);
    }
    Ok(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcalc::ConstantField;

    fn frame(model: Model, i: usize) -> FrameField {
        FrameField { model, index: i }
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn levi_civita_table_m1() {
        let model = Model::new(1).unwrap();
        let p = Point::new(vec![0.4, -1.3, 2.0]).unwrap();
        let q = p.coords();
        let e = |i| model.frame_vector::<f64>(q, i);
        let lc = |a, b| levi_civita(&model, &frame(model, a), &frame(model, b), &p, Strategy::Jet).unwrap();
        let neg = |v: Vec<f64>| linalg::scale(-1.0, &v);
        assert!(close(&lc(0, 1), &e(2), 1e-12));
        assert!(close(&lc(1, 0), &neg(e(2)), 1e-12));
        assert!(close(&lc(0, 2), &neg(e(1)), 1e-12));
        assert!(close(&lc(2, 0), &neg(e(1)), 1e-12));
        assert!(close(&lc(1, 2), &e(0), 1e-12));
        assert!(close(&lc(2, 1), &e(0), 1e-12));
    }

    #[test]
    fn deta_convention_is_half() {
        assert_eq!(adjudicate_deta(&Model::new(1).unwrap()), DEtaConvention::Half);
        assert_eq!(adjudicate_deta(&Model::new(2).unwrap()), DEtaConvention::Half);
    }

    #[test]
    fn tanaka_webster_kills_xi_and_forms_agree() {
        let model = Model::new(1).unwrap();
        let p = Point::new(vec![0.1, 0.7, -0.2]).unwrap();
        let x = ConstantField(vec![0.3, -1.0, 0.5]);
        let y = ConstantField(vec![1.0, 0.2, -0.4]);
        let a = tanaka_webster_contact(&model, &x, &y, &p, Strategy::Jet).unwrap();
        let b = tanaka_webster_sasakian(&model, &x, &y, &p, Strategy::Jet).unwrap();
        assert!(close(&a, &b, 1e-12));
        let d = tanaka_webster_contact(&model, &x, &XiField(model), &p, Strategy::Jet).unwrap();
        assert!(linalg::max_abs(&d) < 1e-13);
    }

    #[test]
    fn frame_coefficients_are_antisymmetric() {
        let model = Model::new(1).unwrap();
        let p = Point::new(vec![0.5, 0.5, 0.5]).unwrap();
        let legs: Vec<FrameField> = (0..3).map(|i| frame(model, i)).collect();
        let w = frame_connection_coeffs(&LeviCivita { model }, &legs, &p, Strategy::Jet).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((w[i][j][k] + w[i][k][j]).abs() < 1e-12);
                }
            }
        }
        let bad = [ConstantField(vec![1.0, 0.0, 0.0])];
        assert!(matches!(
            frame_connection_coeffs(&LeviCivita { model }, &bad, &p, Strategy::Jet),
            Err(ConnectionError::NotOrthonormal(_))
        ));
    }
}
