//! Pointwise pseudo-Hopf analysis: the `(ξ, V)` block of the shape operator, its
//! eigen-angle `θ`, the `γ`/`β` algebra, the φ-pairing of `D`-eigenvalues, the
//! Codazzi residual and the mean-curvature dichotomies.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curvature::curvature_spaceform;
use crate::diffcalc::{ScalarField, Strategy, VectorField};
use crate::hypersurface::{FrameLeg, HypersurfaceError, HypersurfacePointData, Intrinsic, LevelSurface, ShapeApplied};
use crate::linalg;
use crate::model::Point;

/// Angles closer than this to `0` or `π/2` are outside the model's open interval.
pub const THETA_BOUNDARY: f64 = 1e-9;

/// Which sign reading of the `W₁` eigen-equation the measured block fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenConvention {
    /// `AW₁ = γ₁W₁` with `γ₁ = −tan θ`
    Direct,
    /// `AW₁ = −γ₁W₁`, i.e. `γ₁ = tan θ` for the stored eigenvalue
    Negated,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DPerpDecomposition {
    pub theta: f64,
    /// Eigenvalue on `W₁ = ξ cos θ + V sin θ`.
    pub gamma1: f64,
    /// Eigenvalue on `W₂ = −ξ sin θ + V cos θ`.
    pub gamma2: f64,
    /// `g(Aξ, V)`
    pub alpha: f64,
    /// `g(AV, V)`
    pub beta: f64,
    /// `g(Aξ, ξ)`
    pub a_xi_xi: f64,
    /// `g`-norm of the `D`-components of `Aξ` and `AV`.
    pub invariance_residual: f64,
    /// `W₁`, `W₂` in the `(ξ, V)` basis.
    pub w1: [f64; 2],
    pub w2: [f64; 2],
    pub out_of_model: bool,
    pub convention: EigenConvention,
}

impl DPerpDecomposition {
    /// `(|γ₁γ₂ + 1|, |β − (γ₁+γ₂)|)`
    pub fn gamma_residuals(&self) -> (f64, f64) {
        ((self.gamma1 * self.gamma2 + 1.0).abs(), (self.beta - (self.gamma1 + self.gamma2)).abs())
    }
}

/// Decomposes a `(ξ, V)` block given in that orthonormal basis.
pub fn decompose_block(block: [[f64; 2]; 2], invariance_residual: f64) -> DPerpDecomposition {
    let off = 0.5 * (block[0][1] + block[1][0]);
    let sym = DMatrix::from_row_slice(2, 2, &[block[0][0], off, off, block[1][1]]);
    let eig = SymmetricEigen::new(sym);
    // W₁ is the eigenvector that folds into the first quadrant
    let mut pick = None;
    for k in 0..2 {
        let mut v = [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]];
        if v[0] < 0.0 {
            v = [-v[0], -v[1]];
        }
        if v[1] >= 0.0 {
            pick = Some((k, v));
            break;
        }
    }
    let (k1, w1) = pick.unwrap_or((0, [1.0, 0.0]));
    let k2 = 1 - k1;
    let theta = w1[1].atan2(w1[0]);
    let gamma1 = eig.eigenvalues[k1];
    let gamma2 = eig.eigenvalues[k2];
    let out_of_model = !(theta > THETA_BOUNDARY && theta < std::f64::consts::FRAC_PI_2 - THETA_BOUNDARY);
    let t = theta.tan();
    let convention = if (gamma1 + t).abs() <= 1e-9 * (1.0 + t.abs()) {
        EigenConvention::Direct
    } else if (gamma1 - t).abs() <= 1e-9 * (1.0 + t.abs()) {
        EigenConvention::Negated
    } else {
        EigenConvention::Neither
    };
    DPerpDecomposition {
        theta,
        gamma1,
        gamma2,
        alpha: block[0][1],
        beta: block[1][1],
        a_xi_xi: block[0][0],
        invariance_residual,
        w1,
        w2: [-w1[1], w1[0]],
        out_of_model,
        convention,
    }
}

/// The `(ξ, V)` block with eigenvalue `γ₁` on `W₁(θ)` and `γ₂` on `W₂(θ)`.
pub fn reconstruct(theta: f64, gamma1: f64, gamma2: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [
        [gamma1 * c * c + gamma2 * s * s, (gamma1 - gamma2) * s * c],
        [(gamma1 - gamma2) * s * c, gamma1 * s * s + gamma2 * c * c],
    ]
}

/// `[[0, −1], [−1, β]]` with `β = cot θ − tan θ`.
pub fn model_block(theta: f64) -> [[f64; 2]; 2] {
    [[0.0, -1.0], [-1.0, 1.0 / theta.tan() - theta.tan()]]
}

/// Decomposition at a surface point. `ξ` must be tangent.
pub fn decompose<F: ScalarField>(
    s: &LevelSurface<F>,
    data: &HypersurfacePointData,
) -> Result<DPerpDecomposition, HypersurfaceError> {
    if !data.is_gated() {
        return Err(HypersurfaceError::NotTangent(data.xi_tangency));
    }
    if !(data.v_norm > 1e-8) {
        return Err(HypersurfaceError::FrameRankDeficient { point: data.p.coords().to_vec() });
    }
    let (ix, iv) = (s.xi_leg(), s.v_leg());
    let a = &data.a;
    let block = [[a[ix][ix], a[ix][iv]], [a[iv][ix], a[iv][iv]]];
    let mut leak = 0.0;
    for d in 0..ix {
        leak += a[ix][d].powi(2) + a[iv][d].powi(2);
    }
    Ok(decompose_block(block, leak.sqrt()))
}

/// `(|AV + ξ − (γ₁+γ₂)V|, |β − cos2θ/(cosθ sinθ)|)` in the block algebra.
pub fn av_identity_check(dec: &DPerpDecomposition, block: [[f64; 2]; 2]) -> (f64, f64) {
    let sum = dec.gamma1 + dec.gamma2;
    let av = [block[1][0], block[1][1]];
    let r = ((av[0] + 1.0).powi(2) + (av[1] - sum).powi(2)).sqrt();
    let th = dec.theta;
    let beta = (2.0 * th).cos() / (th.cos() * th.sin());
    (r, (dec.beta - beta).abs())
}

/// `λ̄ = (2βλ + c + 3)/(4λ − 2β)`; `None` when the denominator is below `1e−8`.
pub fn lambda_bar(lambda: f64, beta: f64, c: f64) -> Option<f64> {
    let den = 4.0 * lambda - 2.0 * beta;
    if den.abs() < 1e-8 {
        None
    } else {
        Some((2.0 * beta * lambda + c + 3.0) / den)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPairingOutcome {
    pub checked: usize,
    pub skipped: usize,
    pub max_residual: f64,
}

/// For eigenpairs of `a` lying in `D` (purity ≥ 1 − 1e−6), `max |AφX − λ̄φX|`.
/// `a` and `phi` are matrices in one orthonormal tangent frame whose `D`-legs are `d_legs`.
pub fn eigen_pairing_check(a: &DMatrix<f64>, phi: &DMatrix<f64>, d_legs: &[usize], c: f64, beta: f64) -> EigenPairingOutcome {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut out = EigenPairingOutcome { checked: 0, skipped: 0, max_residual: 0.0 };
    for k in 0..a.nrows() {
        let x = eig.eigenvectors.column(k).into_owned();
        let purity: f64 = d_legs.iter().map(|&i| x[i] * x[i]).sum::<f64>() / x.norm_squared();
        if purity < 1.0 - 1e-6 {
            continue;
        }
        let Some(lb) = lambda_bar(eig.eigenvalues[k], beta, c) else {
            out.skipped += 1;
            continue;
        };
        let px = phi * &x;
        let r = (a * &px - &px * lb).norm();
        out.checked += 1;
        out.max_residual = out.max_residual.max(r);
    }
    out
}

/// A fixture for `m` with `D`-legs `0..2m−2` in φ-pairs `(2i, 2i+1)`, `ξ` at `2m−2`
/// and `V` at `2m−1`: `A = diag(λᵢ, λ̄ᵢ) ⊕ [[0,−1],[−1,β]]`. Returns `(A, φ|_frame)`.
pub fn eigen_pairing_fixture(lambdas: &[f64], beta: f64, c: f64) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let n = 2 * lambdas.len() + 2;
    let mut a = DMatrix::zeros(n, n);
    let mut phi = DMatrix::zeros(n, n);
    for (i, &l) in lambdas.iter().enumerate() {
        a[(2 * i, 2 * i)] = l;
        a[(2 * i + 1, 2 * i + 1)] = lambda_bar(l, beta, c)?;
        // φu = w, φw = −u
        phi[(2 * i + 1, 2 * i)] = 1.0;
        phi[(2 * i, 2 * i + 1)] = -1.0;
    }
    let (ix, iv) = (n - 2, n - 1);
    a[(ix, iv)] = -1.0;
    a[(iv, ix)] = -1.0;
    a[(iv, iv)] = beta;
    Some((a, phi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodazziResidual {
    /// `g((∇_X A)Y − (∇_Y A)X, Z)`
    pub lhs: f64,
    /// `g(R̄(X,Y)Z, N)` from the closed-form curvature
    pub rhs: f64,
    /// `−(c−1)/4 · g(g(φX,Z)Y + 2g(φX,Y)Z − g(φY,Z)X, V)`
    pub rhs_display: f64,
    pub residual: f64,
    pub display_residual: f64,
}

/// `−(c−1)/4 · (g(φX,Z)g(Y,V) + 2g(φX,Y)g(Z,V) − g(φY,Z)g(X,V))`
pub fn codazzi_rhs_display<F: ScalarField>(s: &LevelSurface<F>, c: f64, q: &[f64], x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let model = &s.model;
    let v = s.v_field(q);
    let g = |a: &[f64], b: &[f64]| model.inner(q, a, b);
    let (px, py) = (model.phi(q, x), model.phi(q, y));
    -(c - 1.0) / 4.0 * (g(&px, z) * g(y, &v) + 2.0 * g(&px, y) * g(z, &v) - g(&py, z) * g(x, &v))
}

/// Codazzi residual for three legs of the adapted tangent frame.
pub fn codazzi_residual<F: ScalarField>(
    s: &LevelSurface<F>,
    legs: [usize; 3],
    p: &Point,
    strategy: Strategy,
) -> Result<CodazziResidual, HypersurfaceError> {
    let q = p.coords();
    let model = s.model;
    let mode = strategy.mode(2);
    let x = FrameLeg { surface: s, index: legs[0] };
    let y = FrameLeg { surface: s, index: legs[1] };
    let z = FrameLeg { surface: s, index: legs[2] };
    let nabla_a = |u: &FrameLeg<F>, w: &FrameLeg<F>| -> Vec<f64> {
        let d = Intrinsic::new(s, u, ShapeApplied { surface: s, x: w }, mode).eval(q);
        let inner = Intrinsic::new(s, u, w, mode).eval(q);
        linalg::sub(&d, &s.shape_apply(q, &inner))
    };
    let diff = linalg::sub(&nabla_a(&x, &y), &nabla_a(&y, &x));
    let (xv, yv, zv) = (x.eval(q), y.eval(q), z.eval(q));
    let lhs = model.inner(q, &diff, &zv);
    let st = model.structure_at(p).map_err(|_| HypersurfaceError::FrameRankDeficient { point: q.to_vec() })?;
    let r = curvature_spaceform(&model.params(), &xv, &yv, &zv, &st);
    let rhs = model.inner(q, &r, &s.normal(q));
    let rhs_display = codazzi_rhs_display(s, model.params().c, q, &xv, &yv, &zv);
    if !(lhs.is_finite() && rhs.is_finite()) {
        return Err(crate::diffcalc::DiffError::NonFinite { point: q.to_vec() }.into());
    }
    Ok(CodazziResidual {
        lhs,
        rhs,
        rhs_display,
        residual: (lhs - rhs).abs(),
        display_residual: (lhs - rhs_display).abs(),
    })
}

/// Direction class of `grad h` relative to `D ⊕ span{ξ, V}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradClass {
    Zero,
    D,
    DPerp,
    XiLine,
    Mixed,
}

/// Per-sample input to [`dichotomy_checks`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DichotomySample {
    pub h: f64,
    pub biharmonic_ok: bool,
    /// Components of `grad h`: norm of the `D` part, `ξ` and `V` coefficients.
    pub grad_d: f64,
    pub grad_xi: f64,
    pub grad_v: f64,
    pub gamma_sum: f64,
    pub m: usize,
}

impl DichotomySample {
    pub fn class(&self, tol: f64) -> GradClass {
        let norm = (self.grad_d.powi(2) + self.grad_xi.powi(2) + self.grad_v.powi(2)).sqrt();
        if norm <= tol {
            return GradClass::Zero;
        }
        let small = |v: f64| v.abs() <= tol * norm.max(1.0);
        match (small(self.grad_d), small(self.grad_xi), small(self.grad_v)) {
            (true, false, true) => GradClass::XiLine,
            (true, _, _) => GradClass::DPerp,
            (false, true, true) => GradClass::D,
            _ => GradClass::Mixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyVerdict {
    pub class: GradClass,
    /// `None` when no assertion applies to this sample.
    pub consistent: Option<bool>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub verdicts: Vec<DichotomyVerdict>,
    pub applicable: usize,
    pub inconsistent: usize,
}

impl DichotomyReport {
    pub fn vacuous(&self) -> bool {
        self.applicable == 0
    }
}

/// Applies the dichotomies to biharmonic samples by `grad h` direction.
pub fn dichotomy_checks(samples: &[DichotomySample], tol: f64) -> DichotomyReport {
    let verdicts: Vec<DichotomyVerdict> = samples
        .iter()
        .map(|s| {
            let class = s.class(tol);
            if !s.biharmonic_ok {
                return DichotomyVerdict { class, consistent: None, note: "not biharmonic at this point".into() };
            }
            match class {
                GradClass::XiLine => DichotomyVerdict {
                    class,
                    consistent: Some(false),
                    note: "grad h along xi must vanish (CMC), but |grad h| exceeds tolerance".into(),
                },
                GradClass::DPerp => {
                    let minimal = s.h.abs() <= tol;
                    let paired = (s.h + s.gamma_sum / s.m as f64).abs() <= tol;
                    DichotomyVerdict {
                        class,
                        consistent: Some(minimal || paired),
                        note: format!("h = {:.3e}, h + (g1+g2)/m = {:.3e}", s.h, s.h + s.gamma_sum / s.m as f64),
                    }
                }
                _ => DichotomyVerdict { class, consistent: None, note: "no assertion for this class".into() },
            }
        })
        .collect();
    let applicable = verdicts.iter().filter(|v| v.consistent.is_some()).count();
    let inconsistent = verdicts.iter().filter(|v| v.consistent == Some(false)).count();
    DichotomyReport { verdicts, applicable, inconsistent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_over_three_block() {
        let dec = decompose_block(model_block(PI / 3.0), 0.0);
        assert!((dec.gamma1 + 3f64.sqrt()).abs() < 1e-12);
        assert!((dec.gamma2 - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((dec.theta - PI / 3.0).abs() < 1e-12);
        assert_eq!(dec.convention, EigenConvention::Direct);
    }

    #[test]
    fn symmetric_angle() {
        let dec = decompose_block(model_block(PI / 4.0), 0.0);
        assert!((dec.gamma1 + 1.0).abs() < 1e-12 && (dec.gamma2 - 1.0).abs() < 1e-12);
        assert!(dec.beta.abs() < 1e-12);
        let (av, _) = av_identity_check(&dec, model_block(PI / 4.0));
        assert!(av < 1e-12);
    }

    #[test]
    fn beta_at_pi_over_six() {
        let dec = decompose_block(model_block(PI / 6.0), 0.0);
        assert!((dec.beta - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_out_of_model() {
        assert!(decompose_block([[1.0, 0.0], [0.0, 2.0]], 0.0).out_of_model);
        assert!(!decompose_block(model_block(0.4), 0.0).out_of_model);
    }

    #[test]
    fn lambda_bar_sample_and_skip() {
        assert_eq!(lambda_bar(1.0, 0.0, -3.0), Some(0.0));
        assert_eq!(lambda_bar(0.5, 1.0, -3.0), None);
    }

    #[test]
    fn violation_fixture_is_flagged() {
        let s = DichotomySample { h: 1.0, biharmonic_ok: true, grad_d: 0.0, grad_xi: 0.7, grad_v: 0.0, gamma_sum: 0.0, m: 1 };
        let r = dichotomy_checks(&[s], 1e-6);
        assert_eq!(r.inconsistent, 1);
        assert_eq!(r.verdicts[0].class, GradClass::XiLine);
    }
}
