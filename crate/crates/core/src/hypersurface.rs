//! Level-set hypersurfaces `M = f⁻¹(v)` of the model.
//!
//! Every surface quantity is a field on an open set of the ambient space: at a
//! point `q` it is computed on the level set `f⁻¹(f(q))` through `q`. This gives
//! smooth extensions of `N`, `h`, `H` and the tangent frame, so they can be
//! differentiated again without building a chart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::connections::{christoffel, Connection, Covariant, LeviCivita};
use crate::diffcalc::{
    differential, lift, seed, Directional, DiffError, DiffMode, Dual, Scalar, ScalarField, Strategy, VectorField,
};
use crate::linalg;
use crate::model::{FrameTag, Model, Point, Tagged};

/// Below this `g`-norm the gradient of `f` is treated as vanishing.
pub const REGULARITY_THRESHOLD: f64 = 1e-8;
/// `|f(p) − v|` accepted as "on the surface".
pub const PROJECTION_TOLERANCE: f64 = 1e-10;
/// Projection iteration cap and search radius along the gradient line.
pub const PROJECTION_MAX_STEPS: usize = 50;
pub const PROJECTION_MAX_T: f64 = 10.0;
/// Gate on `|g(ξ, N)|` for the tangency-dependent theory.
pub const TANGENCY_GATE: f64 = 1e-8;
/// Relative residual below which a Gram-Schmidt candidate is dropped.
const FRAME_REJECT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypersurfaceError {
    #[error("gradient vanishes at {point:?}")]
    DegenerateGradient { point: Vec<f64> },
    #[error("projection did not converge from {start:?} (last residual {residual:e})")]
    NoConvergence { start: Vec<f64>, residual: f64 },
    #[error("tangent frame is rank deficient at {point:?}")]
    FrameRankDeficient { point: Vec<f64> },
    #[error("vector is not tangent to the surface (|g(X,N)| = {0:e})")]
    NotTangent(f64),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

#[derive(Clone, Debug)]
pub struct LevelSurface<F> {
    pub model: Model,
    pub f: F,
    pub level: f64,
    /// `+1` or `−1`; multiplies the unit normal.
    pub orientation: f64,
}

impl<F: ScalarField> LevelSurface<F> {
    pub fn new(model: Model, f: F, level: f64) -> Self {
        Self { model, f, level, orientation: 1.0 }
    }

    pub fn with_orientation(mut self, orientation: f64) -> Self {
        self.orientation = orientation.signum();
        self
    }

    pub fn value<T: Scalar>(&self, q: &[T]) -> T {
        self.f.eval(q)
    }

    /// `grad f = g⁻¹ df`
    pub fn gradient<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.model.raise(q, &differential(&self.f, q))
    }

    pub fn normal<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let grad = self.gradient(q);
        let len = self.model.norm(q, &grad);
        linalg::scale(T::from_f64(self.orientation) / len, &grad)
    }

    /// `V = −φN`
    pub fn v_field<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        linalg::scale(T::from_f64(-1.0), &self.model.phi(q, &self.normal(q)))
    }

    /// Tangential projection `v − g(v,N)N`.
    pub fn project<T: Scalar>(&self, q: &[T], v: &[T]) -> Vec<T> {
        let n = self.normal(q);
        self.project_with(q, &n, v)
    }

    fn project_with<T: Scalar>(&self, q: &[T], n: &[T], v: &[T]) -> Vec<T> {
        linalg::axpy(v, -self.model.inner(q, v, n), n)
    }

    /// `∇̄_X N` for a frozen vector `x`.
    pub fn normal_derivative<T: Scalar>(&self, q: &[T], x: &[T]) -> Vec<T> {
        let dn: Vec<T> = self.normal(&seed(q, x)).iter().map(|d: &Dual<T>| d.du).collect();
        let n = self.normal(q);
        let lc = LeviCivita { model: self.model };
        lc.combine(q, x, &n, &dn)
    }

    /// Shape operator `AX = −(∇̄_X N)ᵀ`.
    pub fn shape_apply<T: Scalar>(&self, q: &[T], x: &[T]) -> Vec<T> {
        let d = self.normal_derivative(q, x);
        linalg::scale(T::from_f64(-1.0), &self.project(q, &d))
    }

    /// `h = trace A / 2m = −div N / 2m`
    pub fn mean_curvature<T: Scalar>(&self, q: &[T]) -> T {
        let n = self.model.dim();
        let nv = self.normal(q);
        let gamma = christoffel(&self.model, q);
        let mut div = T::zero();
        for i in 0..n {
            div += self.normal(&seed(q, &linalg::basis(n, i)))[i].du;
            for j in 0..n {
                div += gamma[i][i][j] * nv[j];
            }
        }
        -div / (2.0 * self.model.m() as f64)
    }

    /// Orthonormal tangent frame: `2m − 2` legs spanning `D` (in `φ`-pairs), then
    /// the unit `ξᵀ` leg and the unit `V` leg. `None` on rank deficiency.
    pub fn tangent_frame<T: Scalar>(&self, q: &[T]) -> Option<Vec<Vec<T>>> {
        let model = &self.model;
        let n = self.normal(q);
        let unit = |v: Vec<T>| -> Option<Vec<T>> {
            let len = model.norm(q, &v);
            if !(len.re() > REGULARITY_THRESHOLD) {
                return None;
            }
            Some(linalg::scale(T::one() / len, &v))
        };
        let orth = |v: &[T], basis: &[Vec<T>]| -> Vec<T> {
            let mut u = v.to_vec();
            for b in basis {
                u = linalg::axpy(&u, -model.inner(q, &u, b), b);
            }
            u
        };
        let xi_t = unit(self.project_with(q, &n, &model.xi()))?;
        let v = unit(orth(&self.v_field(q), std::slice::from_ref(&xi_t)))?;
        let mut basis = vec![xi_t, v];
        let dim = model.dim();
        for k in 0..dim {
            if basis.len() >= 2 * model.m() {
                break;
            }
            let cand = self.project_with(q, &n, &linalg::basis(dim, k));
            let scale = model.norm(q, &cand).re();
            let u = orth(&cand, &basis);
            if model.norm(q, &u).re() <= FRAME_REJECT * scale.max(1e-300) {
                continue;
            }
            let u = unit(u)?;
            let w = unit(orth(&model.phi(q, &u), &basis).into_iter().collect::<Vec<T>>())?;
            let w = unit(orth(&w, std::slice::from_ref(&u)))?;
            basis.push(u);
            basis.push(w);
        }
        if basis.len() != 2 * model.m() {
            return None;
        }
        basis.rotate_left(2);
        Some(basis)
    }

    /// Index of the `ξ` leg and of the `V` leg in [`Self::tangent_frame`].
    pub fn xi_leg(&self) -> usize {
        2 * self.model.m() - 2
    }

    pub fn v_leg(&self) -> usize {
        2 * self.model.m() - 1
    }

    /// `|g(ξ, N)|`
    pub fn xi_tangency(&self, q: &[f64]) -> f64 {
        self.model.inner(q, &self.model.xi(), &self.normal(q)).abs()
    }

    /// Newton iteration for `t ↦ f(q + t·grad f(q)) − v` along the gradient line.
    pub fn project_to_surface(&self, q: &Point) -> Result<Point, HypersurfaceError> {
        self.model.check(q).map_err(|_| HypersurfaceError::DegenerateGradient { point: q.coords().to_vec() })?;
        let start = q.coords();
        let dir = self.gradient(start);
        if !(self.model.norm(start, &dir) > REGULARITY_THRESHOLD) {
            return Err(HypersurfaceError::DegenerateGradient { point: start.to_vec() });
        }
        let mut t = 0.0;
        let mut residual = f64::INFINITY;
        for _ in 0..PROJECTION_MAX_STEPS {
            let at = linalg::axpy(
                &lift(start),
                Dual::new(t, 1.0),
                &linalg::from_f64::<Dual<f64>>(&dir),
            );
            let val = self.f.eval(&at) - self.level;
            residual = val.re;
            if residual.abs() <= PROJECTION_TOLERANCE {
                break;
            }
            if !(val.du.abs() > 1e-300) || !val.re.is_finite() {
                break;
            }
            t -= val.re / val.du;
            if t.abs() > PROJECTION_MAX_T || !t.is_finite() {
                break;
            }
        }
        let p = linalg::axpy(start, t, &dir);
        let final_residual = (self.f.eval(&p) - self.level).abs();
        if !(final_residual <= PROJECTION_TOLERANCE) || t.abs() > PROJECTION_MAX_T {
            return Err(HypersurfaceError::NoConvergence { start: start.to_vec(), residual: residual.abs() });
        }
        let p = Point::new(p).map_err(|_| HypersurfaceError::NoConvergence { start: start.to_vec(), residual })?;
        if !(self.model.norm(p.coords(), &self.gradient(p.coords())) > REGULARITY_THRESHOLD) {
            return Err(HypersurfaceError::DegenerateGradient { point: p.coords().to_vec() });
        }
        Ok(p)
    }

    pub fn normal_and_v(&self, p: &Point) -> Result<(Vec<f64>, Vec<f64>), HypersurfaceError> {
        let q = p.coords();
        if !(self.model.norm(q, &self.gradient(q)) > REGULARITY_THRESHOLD) {
            return Err(HypersurfaceError::DegenerateGradient { point: q.to_vec() });
        }
        Ok((self.normal(q), self.v_field(q)))
    }

    /// Geometry at a point on the surface.
    pub fn shape_operator(&self, p: &Point) -> Result<HypersurfacePointData, HypersurfaceError> {
        let q = p.coords();
        let (n, v) = self.normal_and_v(p)?;
        let frame = self
            .tangent_frame(q)
            .filter(|f| f.iter().flatten().all(|x| x.is_finite()))
            .ok_or_else(|| HypersurfaceError::FrameRankDeficient { point: q.to_vec() })?;
        let a = self.shape_matrix(q, &frame);
        let h = self.mean_curvature(q);
        let trace: f64 = (0..a.len()).map(|i| a[i][i]).sum();
        let data = HypersurfacePointData {
            p: p.clone(),
            level_residual: (self.f.eval(q) - self.level).abs(),
            n_norm: self.model.norm(q, &n),
            v_norm: self.model.norm(q, &v),
            normal: n,
            v,
            a,
            h,
            h_from_trace: trace / (2 * self.model.m()) as f64,
            frame,
            xi_tangency: self.xi_tangency(q),
        };
        if !data.all_finite() {
            return Err(DiffError::NonFinite { point: q.to_vec() }.into());
        }
        Ok(data)
    }

    /// `A_ab = g(A e_a, e_b)` in a given tangent frame.
    pub fn shape_matrix(&self, q: &[f64], frame: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let applied: Vec<Vec<f64>> = frame.iter().map(|e| self.shape_apply(q, e)).collect();
        applied
            .iter()
            .map(|ae| frame.iter().map(|eb| self.model.inner(q, ae, eb)).collect())
            .collect()
    }

    fn tangent_check(&self, q: &[f64], x: &[f64]) -> Result<(), HypersurfaceError> {
        let r = self.model.inner(q, x, &self.normal(q)).abs();
        let scale = self.model.norm(q, x).max(1.0);
        if r > 1e-8 * scale {
            return Err(HypersurfaceError::NotTangent(r));
        }
        Ok(())
    }

    /// Induced connection `∇_X Y = (∇̄_X Y)ᵀ` for fields tangent along the surface.
    pub fn intrinsic_covariant<X: VectorField, Y: VectorField>(
        &self,
        x: &X,
        y: &Y,
        p: &Point,
        strategy: Strategy,
    ) -> Result<Vec<f64>, HypersurfaceError> {
        let q = p.coords();
        self.tangent_check(q, &x.eval(q))?;
        self.tangent_check(q, &y.eval(q))?;
        let v = Intrinsic::new(self, x, y, strategy.mode(1)).eval(q);
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(DiffError::NonFinite { point: q.to_vec() }.into())
        }
    }

    /// `Δu = −Σ_α (e_α(e_α u) − (∇_{e_α} e_α) u)` with `Δ = −trace ∇²`.
    pub fn surface_scalar_laplacian<U: ScalarField>(
        &self,
        u: &U,
        p: &Point,
        strategy: Strategy,
    ) -> Result<f64, HypersurfaceError> {
        let q = p.coords();
        let outer = strategy.mode(2);
        let inner = strategy.mode(1);
        let mut sum = 0.0;
        for a in 0..2 * self.model.m() {
            let leg = FrameLeg { surface: self, index: a };
            let second = Directional::new(Directional::new(u, &leg, inner), &leg, outer).eval(q);
            let nab = Intrinsic::new(self, &leg, &leg, inner);
            let corr = Directional::new(u, &nab, inner).eval(q);
            sum += second - corr;
        }
        if !sum.is_finite() {
            return Err(DiffError::NonFinite { point: q.to_vec() }.into());
        }
        Ok(-sum)
    }

    /// `grad_M u`: tangential part of the metric gradient of the extended field.
    pub fn surface_gradient<U: ScalarField>(&self, u: &U, q: &[f64]) -> Vec<f64> {
        let grad = self.model.raise(q, &differential(u, q));
        self.project(q, &grad)
    }

    /// Seeded uniform draws in `[−r, r]^{2m+1}` projected onto the surface, in draw order.
    pub fn sample(&self, count: usize, seed_value: u64, radius: f64) -> Vec<Result<Point, HypersurfaceError>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
        let starts: Vec<Point> = (0..count)
            .map(|_| {
                let c = (0..self.model.dim()).map(|_| rng.gen_range(-radius..radius)).collect();
                Point::new(c).expect("finite draw")
            })
            .collect();
        starts.par_iter().map(|q| self.project_to_surface(q)).collect()
    }
}

/// Pointwise geometry of a level-set hypersurface.
#[derive(Clone, Debug, PartialEq)]
pub struct HypersurfacePointData {
    pub p: Point,
    pub level_residual: f64,
    pub normal: Vec<f64>,
    pub n_norm: f64,
    pub v: Vec<f64>,
    pub v_norm: f64,
    /// `A` in the adapted frame; rows and columns follow `frame`.
    pub a: Vec<Vec<f64>>,
    /// `−div N / 2m`
    pub h: f64,
    /// `trace A / 2m` from the matrix; agrees with `h`.
    pub h_from_trace: f64,
    pub frame: Vec<Vec<f64>>,
    pub xi_tangency: f64,
}

impl HypersurfacePointData {
    fn all_finite(&self) -> bool {
        self.a.iter().flatten().all(|v| v.is_finite())
            && self.h.is_finite()
            && self.normal.iter().chain(&self.v).all(|v| v.is_finite())
    }

    pub fn is_gated(&self) -> bool {
        self.xi_tangency <= TANGENCY_GATE
    }

    /// `max |A − Aᵀ|`
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.a.len();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                r = r.max((self.a[i][j] - self.a[j][i]).abs());
            }
        }
        r
    }

    /// `|A|²` (Frobenius, orthonormal frame)
    pub fn a_squared(&self) -> f64 {
        self.a.iter().flatten().map(|v| v * v).sum()
    }

    /// `A` as a frame-tagged row-major list.
    pub fn tagged_a(&self) -> Tagged {
        Tagged { frame: FrameTag::SurfaceAdapted, components: self.a.iter().flatten().copied().collect() }
    }
}

/// Leg `index` of the adapted tangent frame as a field.
pub struct FrameLeg<'a, F> {
    pub surface: &'a LevelSurface<F>,
    pub index: usize,
}

impl<F: ScalarField> VectorField for FrameLeg<'_, F> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        match self.surface.tangent_frame(q) {
            Some(mut f) => f.swap_remove(self.index),
            None => vec![T::from_f64(f64::NAN); q.len()],
        }
    }
}

pub struct NormalField<'a, F> {
    pub surface: &'a LevelSurface<F>,
}

impl<F: ScalarField> VectorField for NormalField<'_, F> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.surface.normal(q)
    }
}

pub struct VField<'a, F> {
    pub surface: &'a LevelSurface<F>,
}

impl<F: ScalarField> VectorField for VField<'_, F> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.surface.v_field(q)
    }
}

pub struct MeanCurvatureField<'a, F> {
    pub surface: &'a LevelSurface<F>,
}

impl<F: ScalarField> ScalarField for MeanCurvatureField<'_, F> {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        self.surface.mean_curvature(q)
    }
}

/// Mean curvature vector `H = hN`.
pub struct HField<'a, F> {
    pub surface: &'a LevelSurface<F>,
}

impl<F: ScalarField> VectorField for HField<'_, F> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let h = self.surface.mean_curvature(q);
        linalg::scale(h, &self.surface.normal(q))
    }
}

/// `AX` as a field.
pub struct ShapeApplied<'a, F, X> {
    pub surface: &'a LevelSurface<F>,
    pub x: X,
}

impl<F: ScalarField, X: VectorField> VectorField for ShapeApplied<'_, F, X> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.surface.shape_apply(q, &self.x.eval(q))
    }
}

/// Induced connection `(∇̄_X Y)ᵀ` as a field.
pub struct Intrinsic<'a, F, X, Y> {
    pub surface: &'a LevelSurface<F>,
    pub x: X,
    pub y: Y,
    pub mode: DiffMode,
}

impl<'a, F, X, Y> Intrinsic<'a, F, X, Y> {
    pub fn new(surface: &'a LevelSurface<F>, x: X, y: Y, mode: DiffMode) -> Self {
        Self { surface, x, y, mode }
    }
}

impl<F: ScalarField, X: VectorField, Y: VectorField> VectorField for Intrinsic<'_, F, X, Y> {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let lc = LeviCivita { model: self.surface.model };
        let d = Covariant::new(lc, &self.x, &self.y, self.mode).eval(q);
        self.surface.project(q, &d)
    }
}

/// The explicit frame used for the worked plane example `x + z = 0` (m = 1):
/// `E₁ = −e₂`, `E₂ = (−e₁ + (1+y)e₃)/√((1+y)² + 1)`.
pub fn example_plane_frame(model: &Model, q: &[f64]) -> Vec<Vec<f64>> {
    let e = model.frame(q);
    let s = 1.0 + q[1];
    let r = (s * s + 1.0).sqrt();
    let e1 = linalg::scale(-1.0, &e[1]);
    let e2 = linalg::scale(1.0 / r, &linalg::axpy(&linalg::scale(-1.0, &e[0]), s, &e[2]));
    vec![e1, e2]
}

/// `q(y) = (1 − (y+1)²)/((1+y)² + 1)`
pub fn example_plane_q(y: f64) -> f64 {
    let s = 1.0 + y;
    (1.0 - s * s) / (s * s + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Plane;
    impl ScalarField for Plane {
        fn eval<T: Scalar>(&self, q: &[T]) -> T {
            q[0] + q[2]
        }
    }

    struct Circle;
    impl ScalarField for Circle {
        fn eval<T: Scalar>(&self, q: &[T]) -> T {
            q[0] * q[0] + q[2] * q[2]
        }
    }

    struct Paraboloid;
    impl ScalarField for Paraboloid {
        fn eval<T: Scalar>(&self, q: &[T]) -> T {
            q[0] * q[0] + q[1] * q[1] * 2.0 + q[0] * q[1]
        }
    }

    fn m1() -> Model {
        Model::new(1).unwrap()
    }

    #[test]
    fn projection_cases() {
        let s = LevelSurface::new(m1(), Plane, 0.0);
        let p = s.project_to_surface(&Point::new(vec![1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!((p.coords()[0] + p.coords()[2]).abs() <= 1e-10);
        let c = LevelSurface::new(m1(), Circle, 1.0);
        let p = c.project_to_surface(&Point::new(vec![2.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!((p.coords()[0] - 1.0).abs() < 1e-12 && p.coords()[2].abs() < 1e-12);
        let err = c.project_to_surface(&Point::new(vec![0.0, 0.3, 0.0]).unwrap());
        assert!(matches!(err, Err(HypersurfaceError::DegenerateGradient { .. })));
    }

    #[test]
    fn plane_normal_at_origin() {
        let model = m1();
        let s = LevelSurface::new(model, Plane, 0.0);
        let q = [0.0, 0.0, 0.0];
        let n = s.normal(&q);
        let e = model.frame(&q);
        let expected = linalg::scale(1.0 / 2f64.sqrt(), &linalg::add(&e[0], &e[2]));
        assert!(n.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn plane_shape_operator_in_example_frame() {
        let model = m1();
        let s = LevelSurface::new(model, Plane, 0.0);
        for &y in &[-3.0, -1.5, -0.2, 0.0, 1.0, 2.5] {
            let q = [0.3, y, -0.3];
            let a = s.shape_matrix(&q, &example_plane_frame(&model, &q));
            let qv = example_plane_q(y);
            assert!(a[0][0].abs() < 1e-12 && a[1][1].abs() < 1e-12, "y={y} a={a:?}");
            assert!((a[0][1] - qv).abs() < 1e-12 && (a[1][0] - qv).abs() < 1e-12, "y={y} a={a:?}");
        }
    }

    #[test]
    fn frozen_oracle_values_for_quadric() {
        // values from an independent symbolic computation
        let s = LevelSurface::new(m1(), Paraboloid, 2.12);
        let p = Point::new(vec![0.6, 0.8, 0.3]).unwrap();
        let d = s.shape_operator(&p).unwrap();
        assert!((d.h - (-0.374819797355537)).abs() < 1e-12);
        assert!((d.h_from_trace - d.h).abs() < 1e-12);
        assert!((d.a_squared() - 2.56195952195859).abs() < 1e-12);
        let lap = s.surface_scalar_laplacian(&MeanCurvatureField { surface: &s }, &p, Strategy::Jet).unwrap();
        assert!((lap - 1.15678666758602).abs() < 1e-11, "lap = {lap}");
    }
}
