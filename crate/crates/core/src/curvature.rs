//! Curvature: numeric `R(X,Y)Z` for any connection, the closed-form Sasakian
//! space-form tensor, the pointwise Tanaka-Webster formula, the traced
//! Tanaka-Webster curvature along a hypersurface and the constants `k`, `l`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connections::{Connection, Covariant, TanakaWebsterSasakian};
use crate::diffcalc::{DiffError, LieBracket, ScalarField, Strategy, VectorField};
use crate::hypersurface::{FrameLeg, HField, HypersurfaceError, LevelSurface};
use crate::linalg;
use crate::model::{FrameCombination, Model, ModelError, Point, SpaceFormParams, StructureTensors};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Surface(#[from] HypersurfaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureMethod {
    Numeric,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureValue {
    pub value: Vec<f64>,
    pub method: CurvatureMethod,
}

/// `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z` by nested field derivatives.
pub fn curvature_numeric<C: Connection, X: VectorField, Y: VectorField, Z: VectorField>(
    conn: &C,
    x: &X,
    y: &Y,
    z: &Z,
    p: &Point,
    strategy: Strategy,
) -> Result<Vec<f64>, DiffError> {
    let q = p.coords();
    let outer = strategy.mode(2);
    let inner = strategy.mode(1);
    let a = Covariant::new(conn, x, Covariant::new(conn, y, z, inner), outer).eval(q);
    let b = Covariant::new(conn, y, Covariant::new(conn, x, z, inner), outer).eval(q);
    let br = LieBracket::new(x, y, inner);
    let c = Covariant::new(conn, &br, z, inner).eval(q);
    let r = linalg::sub(&linalg::sub(&a, &b), &c);
    if r.iter().all(|v| v.is_finite()) {
        Ok(r)
    } else {
        Err(DiffError::NonFinite { point: q.to_vec() })
    }
}

/// Closed-form curvature of a Sasakian space form of φ-sectional curvature `c`:
///
/// ```text
/// R(X,Y)Z = (c+3)/4 {g(Y,Z)X − g(X,Z)Y}
///         + (c−1)/4 {η(X)η(Z)Y − η(Y)η(Z)X + g(X,Z)η(Y)ξ − g(Y,Z)η(X)ξ
///                    + g(φY,Z)φX − g(φX,Z)φY − 2g(φX,Y)φZ}
/// ```
pub fn curvature_spaceform(
    params: &SpaceFormParams,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    s: &StructureTensors,
) -> Vec<f64> {
    let c = params.c;
    let (x, y, z) = (DVector::from_column_slice(x), DVector::from_column_slice(y), DVector::from_column_slice(z));
    let g = |u: &DVector<f64>, v: &DVector<f64>| s.inner(u, v);
    let eta = |u: &DVector<f64>| s.eta.dot(u);
    let (px, py, pz) = (&s.phi * &x, &s.phi * &y, &s.phi * &z);
    let first = (&x * g(&y, &z) - &y * g(&x, &z)) * ((c + 3.0) / 4.0);
    let second = &y * (eta(&x) * eta(&z)) - &x * (eta(&y) * eta(&z)) + &s.xi * (g(&x, &z) * eta(&y))
        - &s.xi * (g(&y, &z) * eta(&x))
        + &px * g(&py, &z)
        - &py * g(&px, &z)
        - &pz * (2.0 * g(&px, &y));
    (first + second * ((c - 1.0) / 4.0)).as_slice().to_vec()
}

/// `R*(X,H)X = R̄(X,H)X − 3g(X,φH)φX − η²(X)φ²H` as stated for the model, with
/// `R̄` the closed-form space-form curvature.
pub fn tw_curvature_pointwise(model: &Model, x: &[f64], h: &[f64], p: &Point) -> Result<Vec<f64>, ModelError> {
    let s = model.structure_at(p)?;
    let q = p.coords();
    let rbar = curvature_spaceform(&model.params(), x, h, x, &s);
    let phi_h = model.phi(q, h);
    let mut out = linalg::axpy(&rbar, -3.0 * model.inner(q, x, &phi_h), &model.phi(q, x));
    let ex = model.eta_of(q, x);
    out = linalg::axpy(&out, -ex * ex, &model.phi(q, &phi_h));
    Ok(out)
}

/// Sectional curvature of `span{X, φX}` from the numeric Levi-Civita curvature.
pub fn phi_sectional_oracle(params: &SpaceFormParams, p: &Point, x: &[f64]) -> Result<f64, CurvatureError> {
    let model = params.realize()?;
    model.check(p)?;
    let q = p.coords();
    let len = model.norm(q, x);
    if !(len > 1e-12) {
        return Err(ModelError::DegeneratePlane.into());
    }
    let e = model.eta_of(q, x) / len;
    if e.abs() > 1e-12 {
        return Err(ModelError::NotHorizontal(e).into());
    }
    let phi_x = model.phi(q, x);
    let xf = FrameCombination::extending(model, p, x);
    let pf = FrameCombination::extending(model, p, &phi_x);
    let lc = crate::connections::LeviCivita { model };
    let r = curvature_numeric(&lc, &xf, &pf, &pf, p, Strategy::Jet)?;
    let num = model.inner(q, &r, x);
    let den = model.inner(q, x, x) * model.inner(q, &phi_x, &phi_x) - model.inner(q, x, &phi_x).powi(2);
    Ok(num / den)
}

/// `Σ_α R*(e_α, H)e_α` over the adapted tangent frame, and `g(·, N)/h` when `|h|` is
/// large enough for the ratio to mean anything.
pub fn trace_tw_curvature<F: ScalarField>(
    surface: &LevelSurface<F>,
    p: &Point,
    strategy: Strategy,
) -> Result<(Vec<f64>, Option<f64>), CurvatureError> {
    let model = surface.model;
    let q = p.coords();
    let tw = TanakaWebsterSasakian { model };
    let hf = HField { surface };
    let mut sum = linalg::zeros(model.dim());
    for a in 0..2 * model.m() {
        let leg = FrameLeg { surface, index: a };
        let r = curvature_numeric(&tw, &leg, &hf, &leg, p, strategy)?;
        sum = linalg::add(&sum, &r);
    }
    let n = surface.normal::<f64>(q);
    let h = surface.mean_curvature::<f64>(q);
    let k = if h.abs() >= 1e-10 { Some(model.inner(q, &sum, &n) / h) } else { None };
    Ok((sum, k))
}

/// `k` and `l` for a parameter pair, in both readings of the traced curvature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub m: usize,
    pub c: f64,
    /// `(15 − 6m − c(3+2m))/4`
    pub k_lemma: f64,
    /// `(7 − 6m − c(2m+3))/4`
    pub k_alt: f64,
    /// `(−(2m+3)c − 6m + 7)/4`
    pub l: f64,
    /// `(7 − 6m)/(2m+3)`
    pub cmc_bound: f64,
    /// `l − (k_lemma − 2)`, identically zero
    pub consistency: f64,
}

pub fn constants(params: &SpaceFormParams) -> Constants {
    let m = params.m as f64;
    let c = params.c;
    let k_lemma = (15.0 - 6.0 * m - c * (3.0 + 2.0 * m)) / 4.0;
    let k_alt = (7.0 - 6.0 * m - c * (2.0 * m + 3.0)) / 4.0;
    let l = (-(2.0 * m + 3.0) * c - 6.0 * m + 7.0) / 4.0;
    Constants {
        m: params.m,
        c,
        k_lemma,
        k_alt,
        l,
        cmc_bound: (7.0 - 6.0 * m) / (2.0 * m + 3.0),
        consistency: l - (k_lemma - 2.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KBranch {
    Lemma,
    Alt,
    #[default]
    Auto,
}

impl KBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            KBranch::Lemma => "lemma",
            KBranch::Alt => "alt",
            KBranch::Auto => "auto",
        }
    }
}

/// Outcome of comparing measured `k` values against the two candidate formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KAdjudication {
    pub samples: usize,
    pub measured_k: Option<f64>,
    pub spread: Option<f64>,
    pub constant: bool,
    pub k_lemma: f64,
    pub k_alt: f64,
    /// `"lemma"`, `"alt"`, or `"neither"`
    pub matched_branch: String,
    pub requested_branch: KBranch,
    pub k_used: f64,
    pub l_used: f64,
    pub finding: String,
}

/// Adjudicates from per-sample measurements (each from a point with `|h| > 1e−6`).
pub fn adjudicate_k(params: &SpaceFormParams, measured: &[f64], tol: f64, requested: KBranch) -> KAdjudication {
    let cst = constants(params);
    let (mean, spread) = if measured.is_empty() {
        (None, None)
    } else {
        let mean = measured.iter().sum::<f64>() / measured.len() as f64;
        let lo = measured.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = measured.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (Some(mean), Some(hi - lo))
    };
    let constant = spread.is_some_and(|s| s <= tol);
    let matched = match mean {
        Some(k) if constant && (k - cst.k_lemma).abs() <= tol && (k - cst.k_alt).abs() > tol => "lemma",
        Some(k) if constant && (k - cst.k_alt).abs() <= tol && (k - cst.k_lemma).abs() > tol => "alt",
        _ => "neither",
    };
    let k_used = match requested {
        KBranch::Lemma => cst.k_lemma,
        KBranch::Alt => cst.k_alt,
        KBranch::Auto => match matched {
            "lemma" => cst.k_lemma,
            "alt" => cst.k_alt,
            _ => mean.unwrap_or(cst.k_lemma),
        },
    };
    let finding = match mean {
        None => "no sample with |h| > 1e-6; measured k undefined".to_string(),
        Some(k) => format!(
            "measured k = {k:.9} (spread {:.3e} over {} samples); k_lemma = {}, k_alt = {}; matches {matched}",
            spread.unwrap_or(0.0),
            measured.len(),
            cst.k_lemma,
            cst.k_alt
        ),
    };
    KAdjudication {
        samples: measured.len(),
        measured_k: mean,
        spread,
        constant,
        k_lemma: cst.k_lemma,
        k_alt: cst.k_alt,
        matched_branch: matched.to_string(),
        requested_branch: requested,
        k_used,
        l_used: k_used - 2.0,
        finding,
    }
}
