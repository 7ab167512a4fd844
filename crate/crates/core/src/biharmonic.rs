//! Tanaka-Webster biharmonicity of level-set hypersurfaces, evaluated two ways:
//! the normal/tangent split of the bitension in terms of `h`, `A` and `grad h`,
//! and the bitension `τ₂* = −Δ*H − Σ R*(e_α,H)e_α` computed directly from the
//! Tanaka-Webster connection.
//!
//! Codimension-one reductions: `H = hN`, `Δ^⊥H = (Δ^⊥h)N`,
//! `trace B(·, A_H ·) = h|A|²N`, `trace A_{∇^⊥H} = A grad h`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connections::{Connection, Covariant, LeviCivita, TanakaWebsterSasakian};
use crate::curvature::CurvatureError;
use crate::diffcalc::{DiffError, ScalarField, Strategy, VectorField};
use crate::hypersurface::{
    FrameLeg, HField, HypersurfaceError, HypersurfacePointData, Intrinsic, LevelSurface, MeanCurvatureField,
};
use crate::linalg;
use crate::model::{Point, SpaceFormParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiharmonicError {
    #[error("xi is not tangent at this point (|g(xi,N)| = {0:e})")]
    NotGated(f64),
    #[error(transparent)]
    Surface(#[from] HypersurfaceError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("empty sample set")]
    NoSamples,
}

/// Sign convention of the normal Laplacian in the normal equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalLaplacian {
    /// `Δ^⊥h = −Δ_M h = +trace ∇²h`; the form that matches the direct bitension.
    PositiveTrace,
    /// `Δ^⊥h = Δ_M h = −trace ∇²h`, the literal reading of the stated sign convention.
    NegativeTrace,
}

/// The convention used by the split route.
pub const NORMAL_LAPLACIAN: NormalLaplacian = NormalLaplacian::PositiveTrace;

/// Ingredients of the split at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitTerms {
    pub h: f64,
    /// `Δ_M h` with `Δ = −trace ∇²`
    pub laplacian_h: f64,
    pub a_squared: f64,
    /// `grad_M h`, coordinates
    pub grad_h: Vec<f64>,
    /// `A grad h`, coordinates
    pub a_grad_h: Vec<f64>,
}

pub fn split_terms<F: ScalarField>(
    s: &LevelSurface<F>,
    data: &HypersurfacePointData,
    strategy: Strategy,
) -> Result<SplitTerms, BiharmonicError> {
    let q = data.p.coords();
    let hf = MeanCurvatureField { surface: s };
    let laplacian_h = s.surface_scalar_laplacian(&hf, &data.p, strategy)?;
    let grad_h = s.surface_gradient(&hf, q);
    let a_grad_h = s.shape_apply(q, &grad_h);
    Ok(SplitTerms { h: data.h, laplacian_h, a_squared: data.a_squared(), grad_h, a_grad_h })
}

impl SplitTerms {
    /// `Δ^⊥h − h|A|² − l h` under the given convention.
    pub fn normal_expression(&self, l: f64, convention: NormalLaplacian) -> f64 {
        let lap = match convention {
            NormalLaplacian::PositiveTrace => -self.laplacian_h,
            NormalLaplacian::NegativeTrace => self.laplacian_h,
        };
        lap - self.h * self.a_squared - l * self.h
    }

    /// `A grad h + g(grad h, V)ξ − η(grad h)V`, the part of the tangent equation not
    /// proportional to `h grad h`.
    pub fn tangent_structure<F: ScalarField>(&self, s: &LevelSurface<F>, q: &[f64]) -> Vec<f64> {
        let model = &s.model;
        let v = s.v_field(q);
        let mut t = linalg::axpy(&self.a_grad_h, model.inner(q, &self.grad_h, &v), &model.xi());
        t = linalg::axpy(&t, -model.eta_of(q, &self.grad_h), &v);
        t
    }

    /// `A grad h + m h grad h + g(grad h, V)ξ − η(grad h)V`
    pub fn tangent_vector<F: ScalarField>(&self, s: &LevelSurface<F>, q: &[f64]) -> Vec<f64> {
        let m = s.model.m() as f64;
        linalg::axpy(&self.tangent_structure(s, q), m * self.h, &self.grad_h)
    }
}

/// Residuals of both routes at one accepted point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiharmonicResidual {
    pub point: Vec<f64>,
    pub h: f64,
    pub gated: bool,
    /// `|Δ^⊥h − h|A|² − l h|` under [`NORMAL_LAPLACIAN`]; `None` off the gate.
    pub normal_residual: Option<f64>,
    /// Signed normal expression under [`NORMAL_LAPLACIAN`].
    pub normal_expression: Option<f64>,
    /// Signed normal expression under the literal convention.
    pub normal_expression_literal: Option<f64>,
    /// `g`-norm of the tangent equation; `None` off the gate.
    pub tangent_residual: Option<f64>,
    /// `|τ₂*|_g`
    pub direct_residual: f64,
    /// `g(τ₂*, N)`
    pub direct_normal: f64,
    pub k_used: f64,
    pub l_used: f64,
}

/// `Δ^C H = −Σ_α (∇^C_{e_α}∇^C_{e_α} H − ∇^C_{∇_{e_α}e_α} H)` with the induced
/// connection in the correction slot.
pub fn rough_laplacian_h<F: ScalarField, C: Connection>(
    s: &LevelSurface<F>,
    conn: &C,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, BiharmonicError> {
    let q = p.coords();
    let outer = strategy.mode(2);
    let inner = strategy.mode(1);
    let hf = HField { surface: s };
    let mut sum = linalg::zeros(s.model.dim());
    for a in 0..2 * s.model.m() {
        let leg = FrameLeg { surface: s, index: a };
        let second = Covariant::new(conn, &leg, Covariant::new(conn, &leg, &hf, inner), outer).eval(q);
        let nab = Intrinsic::new(s, &leg, &leg, inner);
        let corr = Covariant::new(conn, &nab, &hf, inner).eval(q);
        sum = linalg::add(&sum, &linalg::sub(&second, &corr));
    }
    let out = linalg::scale(-1.0, &sum);
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(DiffError::NonFinite { point: q.to_vec() }.into())
    }
}

/// `τ₂* = −Δ*H − Σ_α R*(e_α, H)e_α`
pub fn direct_bitension<F: ScalarField>(
    s: &LevelSurface<F>,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, BiharmonicError> {
    let tw = TanakaWebsterSasakian { model: s.model };
    let lap = rough_laplacian_h(s, &tw, p, strategy)?;
    let (trace, _) = crate::curvature::trace_tw_curvature(s, p, strategy)?;
    Ok(linalg::scale(-1.0, &linalg::add(&lap, &trace)))
}

/// `τ₂*` split along `N`, `ξ`, `V` and the remaining `D` part (norm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitensionComponents {
    pub normal: f64,
    pub xi: f64,
    pub v: f64,
    pub d_norm: f64,
}

pub fn bitension_components<F: ScalarField>(s: &LevelSurface<F>, q: &[f64], tau: &[f64]) -> BitensionComponents {
    let model = &s.model;
    let n = s.normal(q);
    let v = s.v_field(q);
    let vn = model.norm(q, &v);
    let xi = model.xi::<f64>();
    let normal = model.inner(q, tau, &n);
    let mut rest = linalg::axpy(tau, -normal, &n);
    let xc = model.inner(q, &rest, &xi);
    rest = linalg::axpy(&rest, -xc, &xi);
    let vc = model.inner(q, &rest, &v) / (vn * vn);
    rest = linalg::axpy(&rest, -vc, &v);
    BitensionComponents { normal, xi: xc, v: vc * vn, d_norm: model.norm(q, &rest) }
}

/// Both routes at a point; the split is evaluated only when `ξ` is tangent.
pub fn evaluate<F: ScalarField>(
    s: &LevelSurface<F>,
    data: &HypersurfacePointData,
    k_used: f64,
    strategy: Strategy,
) -> Result<(BiharmonicResidual, Vec<f64>, Option<SplitTerms>), BiharmonicError> {
    let q = data.p.coords();
    let l_used = k_used - 2.0;
    let tau = direct_bitension(s, &data.p, strategy)?;
    let gated = data.is_gated();
    let terms = if gated { Some(split_terms(s, data, strategy)?) } else { None };
    let normal_expression = terms.as_ref().map(|t| t.normal_expression(l_used, NORMAL_LAPLACIAN));
    let res = BiharmonicResidual {
        point: q.to_vec(),
        h: data.h,
        gated,
        normal_residual: normal_expression.map(f64::abs),
        normal_expression,
        normal_expression_literal: terms
            .as_ref()
            .map(|t| t.normal_expression(l_used, NormalLaplacian::NegativeTrace)),
        tangent_residual: terms.as_ref().map(|t| s.model.norm(q, &t.tangent_vector(s, q))),
        direct_residual: s.model.norm(q, &tau),
        direct_normal: s.model.inner(q, &tau, &s.normal(q)),
        k_used,
        l_used,
    };
    Ok((res, tau, terms))
}

/// Split residuals; fails off the tangency gate.
pub fn theorem_split_residual<F: ScalarField>(
    s: &LevelSurface<F>,
    p: &Point,
    k_used: f64,
    strategy: Strategy,
) -> Result<BiharmonicResidual, BiharmonicError> {
    let data = s.shape_operator(p)?;
    if !data.is_gated() {
        return Err(BiharmonicError::NotGated(data.xi_tangency));
    }
    Ok(evaluate(s, &data, k_used, strategy)?.0)
}

/// `|Δ*H − (ΔH + 2g(grad h,V)ξ − 2η(grad h)V − 2H)|_g` with `Δ` from Levi-Civita.
pub fn laplacian_relation_check<F: ScalarField>(s: &LevelSurface<F>, p: &Point, strategy: Strategy) -> Result<f64, BiharmonicError> {
    let q = p.coords();
    let model = s.model;
    let tw = TanakaWebsterSasakian { model };
    let lc = LeviCivita { model };
    let lhs = rough_laplacian_h(s, &tw, p, strategy)?;
    let lap = rough_laplacian_h(s, &lc, p, strategy)?;
    let grad_h = s.surface_gradient(&MeanCurvatureField { surface: s }, q);
    let v = s.v_field(q);
    let hvec = HField { surface: s }.eval(q);
    let mut rhs = linalg::axpy(&lap, 2.0 * model.inner(q, &grad_h, &v), &model.xi());
    rhs = linalg::axpy(&rhs, -2.0 * model.eta_of(q, &grad_h), &v);
    rhs = linalg::axpy(&rhs, -2.0, &hvec);
    Ok(model.norm(q, &linalg::sub(&lhs, &rhs)))
}

/// `(|h(Aξ + V)|_g, |Aξ + V|_g)`; requires `ξ` tangent.
pub fn ah_xi_check<F: ScalarField>(s: &LevelSurface<F>, data: &HypersurfacePointData) -> Result<(f64, f64), BiharmonicError> {
    if !data.is_gated() {
        return Err(BiharmonicError::NotGated(data.xi_tangency));
    }
    let q = data.p.coords();
    let r = linalg::add(&s.shape_apply(q, &s.model.xi()), &data.v);
    let n = s.model.norm(q, &r);
    Ok((data.h.abs() * n, n))
}

/// Least-squares fit `τ_t ≈ a·U + b·(h grad h)` over samples, with
/// `U = A grad h + g(grad h,V)ξ − η(grad h)V`. The tangent-equation factor is `b/a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentFactorFit {
    pub samples: usize,
    pub a: f64,
    pub b: f64,
    pub factor: f64,
    /// Largest residual norm of the fit.
    pub max_misfit: f64,
    /// `U` and `h grad h` were collinear on every sample, so `a` was pinned to
    /// [`TANGENT_STRUCTURE_COEFFICIENT`] and only `b` was fitted.
    pub a_fixed: bool,
}

/// Coefficient of `U` in the tangent part of `τ₂*`, as measured wherever the
/// two-parameter fit is well posed.
pub const TANGENT_STRUCTURE_COEFFICIENT: f64 = -2.0;

/// One sample for [`fit_tangent_factor`]: `(τ_t, U, h grad h)` as `g`-orthonormal components.
pub type TangentSample = (Vec<f64>, Vec<f64>, Vec<f64>);

pub fn fit_tangent_factor(samples: &[TangentSample]) -> Option<TangentFactorFit> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (mut uu, mut uw, mut ww, mut ut, mut wt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, u, w) in samples {
        uu += dot(u, u);
        uw += dot(u, w);
        ww += dot(w, w);
        ut += dot(u, t);
        wt += dot(w, t);
    }
    if samples.is_empty() || !(ww > 1e-300) {
        return None;
    }
    let det = uu * ww - uw * uw;
    let a_fixed = !(det.abs() > 1e-10 * uu * ww);
    let (a, b) = if a_fixed {
        let a = TANGENT_STRUCTURE_COEFFICIENT;
        (a, (wt - a * uw) / ww)
    } else {
        ((ut * ww - wt * uw) / det, (uu * wt - uw * ut) / det)
    };
    let max_misfit = samples
        .iter()
        .map(|(t, u, w)| {
            t.iter().zip(u).zip(w).map(|((t, u), w)| (t - a * u - b * w).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    Some(TangentFactorFit { samples: samples.len(), a, b, factor: b / a, max_misfit, a_fixed })
}

/// Tangent-fit sample at a gated point, in the adapted frame.
pub fn tangent_sample<F: ScalarField>(
    s: &LevelSurface<F>,
    data: &HypersurfacePointData,
    tau: &[f64],
    terms: &SplitTerms,
) -> TangentSample {
    let q = data.p.coords();
    let comps = |v: &[f64]| data.frame.iter().map(|e| s.model.inner(q, v, e)).collect::<Vec<f64>>();
    let u = terms.tangent_structure(s, q);
    let w = linalg::scale(terms.h, &terms.grad_h);
    (comps(tau), comps(&u), comps(&w))
}

/// Input to [`cmc_classifier`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmcSample {
    pub h: f64,
    pub a_squared: f64,
    pub biharmonic_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CmcVerdict {
    NotCmcBiharmonic,
    Minimal,
    ProperCmcConsistent { b_squared_plus_l: f64, c_exceeds_bound: bool },
    ProperCmcInconsistent { b_squared_plus_l: f64, c_exceeds_bound: bool },
}

impl CmcVerdict {
    pub fn describe(&self) -> String {
        match self {
            CmcVerdict::NotCmcBiharmonic => "not CMC-biharmonic at tested points".into(),
            CmcVerdict::Minimal => "minimal (h \u{2261} 0): trivially TW-biharmonic".into(),
            CmcVerdict::ProperCmcConsistent { c_exceeds_bound, .. } => format!(
                "consistent with proper CMC case (|B|^2 = -l); c above the proper-CMC bound: {c_exceeds_bound}"
            ),
            CmcVerdict::ProperCmcInconsistent { b_squared_plus_l, c_exceeds_bound } => format!(
                "proper CMC samples violate |B|^2 = -l (|B|^2 + l = {b_squared_plus_l:.3e}); c above the proper-CMC bound: {c_exceeds_bound}"
            ),
        }
    }
}

/// Classifies a sample set by constancy of `h` and the identity `|B|² = −l`.
pub fn cmc_classifier(
    params: &SpaceFormParams,
    samples: &[CmcSample],
    l: f64,
    tol: f64,
) -> Result<CmcVerdict, BiharmonicError> {
    if samples.is_empty() {
        return Err(BiharmonicError::NoSamples);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.h).sum::<f64>() / n;
    let stdev = (samples.iter().map(|s| (s.h - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !samples.iter().all(|s| s.biharmonic_ok) || stdev > tol {
        return Ok(CmcVerdict::NotCmcBiharmonic);
    }
    if samples.iter().all(|s| s.h.abs() <= tol) {
        return Ok(CmcVerdict::Minimal);
    }
    let worst = samples.iter().map(|s| s.a_squared + l).fold(0.0_f64, |w, v| if v.abs() > w.abs() { v } else { w });
    let c_exceeds_bound = params.c > crate::curvature::constants(params).cmc_bound;
    if worst.abs() <= 10.0 * tol {
        Ok(CmcVerdict::ProperCmcConsistent { b_squared_plus_l: worst, c_exceeds_bound })
    } else {
        Ok(CmcVerdict::ProperCmcInconsistent { b_squared_plus_l: worst, c_exceeds_bound })
    }
}

/// Samples needed before a surface verdict is issued.
pub const MIN_VERDICT_SAMPLES: usize = 30;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcalc::Scalar;
    use crate::model::Model;

    struct Quadric;
    impl ScalarField for Quadric {
        fn eval<T: Scalar>(&self, q: &[T]) -> T {
            q[0] * q[0] + q[1] * q[1] * 2.0 + q[0] * q[1]
        }
    }

    #[test]
    fn frozen_bitension_oracle() {
        // independent symbolic computation of τ₂* for this surface and point
        let s = LevelSurface::new(Model::new(1).unwrap(), Quadric, 2.12);
        let p = Point::new(vec![0.6, 0.8, 0.3]).unwrap();
        let tau = direct_bitension(&s, &p, Strategy::Jet).unwrap();
        let n = s.normal(p.coords());
        let normal = s.model.inner(p.coords(), &tau, &n);
        assert!((normal - (-0.946153113443481)).abs() < 1e-10, "normal = {normal}");
        let tangential = linalg::axpy(&tau, -normal, &n);
        let expected = [-0.538079263335637, 0.283199612281914, -0.430463410668509];
        for (a, b) in tangential.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{tangential:?}");
        }
    }

    #[test]
    fn cmc_verdicts() {
        let params = SpaceFormParams::model(1).unwrap();
        assert_eq!(cmc_classifier(&params, &[], 4.0, 1e-6), Err(BiharmonicError::NoSamples));
        let minimal = [CmcSample { h: 0.0, a_squared: 0.4, biharmonic_ok: true }; 3];
        assert_eq!(cmc_classifier(&params, &minimal, 4.0, 1e-6).unwrap(), CmcVerdict::Minimal);
        let fabricated = [CmcSample { h: 0.5, a_squared: 2.0, biharmonic_ok: true }; 3];
        assert!(matches!(
            cmc_classifier(&params, &fabricated, -2.0, 1e-6).unwrap(),
            CmcVerdict::ProperCmcConsistent { c_exceeds_bound: false, .. }
        ));
        let varying = [
            CmcSample { h: 0.5, a_squared: 2.0, biharmonic_ok: true },
            CmcSample { h: 0.7, a_squared: 2.0, biharmonic_ok: true },
        ];
        assert_eq!(cmc_classifier(&params, &varying, -2.0, 1e-6).unwrap(), CmcVerdict::NotCmcBiharmonic);
    }

    #[test]
    fn tangent_fit_recovers_coefficients() {
        let samples: Vec<TangentSample> = (0..5)
            .map(|i| {
                let u = vec![1.0 + i as f64, -0.5, 0.3 * i as f64];
                let w = vec![0.2, 1.0 - i as f64, 0.7];
                let t = u.iter().zip(&w).map(|(u, w)| -2.0 * u - 2.0 * w).collect();
                (t, u, w)
            })
            .collect();
        let fit = fit_tangent_factor(&samples).unwrap();
        assert!((fit.factor - 1.0).abs() < 1e-12 && (fit.a + 2.0).abs() < 1e-12);
    }
}
