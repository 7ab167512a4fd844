use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::curvature::K_SAMPLES_PER_SURFACE;
use super::{model_of, resolve_k, sample_surface, surface_of};
use crate::biharmonic::{split_terms, NORMAL_LAPLACIAN};
use crate::exprdsl::RunConfig;
use crate::hypersurface::{HypersurfacePointData, LevelSurface};
use crate::pseudohopf::{
    av_identity_check, codazzi_residual, decompose, decompose_block, eigen_pairing_check, eigen_pairing_fixture, model_block,
    dichotomy_checks, CodazziResidual, DPerpDecomposition, EigenConvention, DichotomySample,
};
use crate::exprdsl::Expr;
use crate::report::{CheckRow, ResidualReport};

pub const THETA_GRID: usize = 20;
pub const FIXTURE_TOLERANCE: f64 = 1e-9;
pub const CODAZZI_TOLERANCE: f64 = 1e-4;

/// `θ_i = (i + ½)·(π/2)/n`, strictly inside `(0, π/2)`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) * FRAC_PI_2 / n as f64).collect()
}

/// Block-algebra residuals on the `θ` grid.
#[derive(Clone, Debug, Default)]
pub struct FixtureResiduals {
    pub gamma_product: Vec<f64>,
    pub gamma_sum: Vec<f64>,
    pub beta_closed_form: Vec<f64>,
    pub av_identity: Vec<f64>,
    pub theta_recovered: Vec<f64>,
    pub eigen_pairing: Vec<f64>,
    pub eigen_pairing_checked: usize,
    pub eigen_pairing_skipped: usize,
}

/// Synthetic `(ξ,V)` blocks for each `θ`, and eigenvalue-pairing fixtures whose `D` block
/// pairs random `λ` with `λ̄` (`m_fixture − 1` pairs).
pub fn fixture_residuals(c: f64, m_fixture: usize, seed: u64) -> FixtureResiduals {
    let mut out = FixtureResiduals::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for theta in theta_grid(THETA_GRID) {
        let block = model_block(theta);
        let dec = decompose_block(block, 0.0);
        let (prod, sum) = dec.gamma_residuals();
        let (av, beta) = av_identity_check(&dec, block);
        out.gamma_product.push(prod);
        out.gamma_sum.push(sum);
        out.beta_closed_form.push(beta);
        out.av_identity.push(av);
        out.theta_recovered.push((dec.theta - theta).abs());

        let lambdas: Vec<f64> = (0..m_fixture.saturating_sub(1)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if let Some((a, phi)) = eigen_pairing_fixture(&lambdas, dec.beta, c) {
            let d_legs: Vec<usize> = (0..2 * lambdas.len()).collect();
            let r = eigen_pairing_check(&a, &phi, &d_legs, c, dec.beta);
            out.eigen_pairing.push(r.max_residual);
            out.eigen_pairing_checked += r.checked;
            out.eigen_pairing_skipped += r.skipped;
        } else {
            out.eigen_pairing_skipped += 1;
        }
    }
    out
}

struct Sample {
    dec: Option<DPerpDecomposition>,
    codazzi: Vec<CodazziResidual>,
    dichotomy: Option<DichotomySample>,
}

fn leg_triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            for z in 0..n {
                out.push([x, y, z]);
            }
        }
    }
    out
}

fn evaluate(s: &LevelSurface<Expr>, d: &HypersurfacePointData, cfg: &RunConfig, l: f64) -> Sample {
    let q = d.p.coords();
    let model = s.model;
    let dec = decompose(s, d).ok();
    let codazzi = leg_triples(d.frame.len())
        .into_iter()
        .filter_map(|legs| codazzi_residual(s, legs, &d.p, cfg.strategy).ok())
        .collect();
    let dichotomy = match (&dec, d.is_gated()) {
        (Some(dec), true) => split_terms(s, d, cfg.strategy).ok().map(|tm| {
            let tol = cfg.tolerances.second_order;
            let normal = tm.normal_expression(l, NORMAL_LAPLACIAN).abs();
            let tangent = model.norm(q, &tm.tangent_vector(s, q));
            let comps: Vec<f64> = d.frame.iter().map(|e| model.inner(q, &tm.grad_h, e)).collect();
            let (ix, iv) = (s.xi_leg(), s.v_leg());
            DichotomySample {
                h: tm.h,
                biharmonic_ok: normal <= tol && tangent <= tol,
                grad_d: comps[..ix].iter().map(|v| v * v).sum::<f64>().sqrt(),
                grad_xi: comps[ix],
                grad_v: comps[iv],
                gamma_sum: dec.gamma1 + dec.gamma2,
                m: model.m(),
            }
        }),
        _ => None,
    };
    Sample { dec, codazzi, dichotomy }
}

pub fn run(cfg: &RunConfig) -> ResidualReport {
    let model = model_of(cfg);
    let s = surface_of(cfg, model);
    let c = model.params().c;
    let mut report = ResidualReport::new("pseudohopf", cfg);
    let t = cfg.tolerances;
    let path = cfg.strategy.as_str();

    let fx = fixture_residuals(c, cfg.m.max(3), cfg.seed);
    report.push(CheckRow::new("fixture_gamma_product", &fx.gamma_product, FIXTURE_TOLERANCE, "algebra"));
    report.push(CheckRow::new("fixture_gamma_sum_is_beta", &fx.gamma_sum, FIXTURE_TOLERANCE, "algebra"));
    report.push(CheckRow::new("fixture_beta_closed_form", &fx.beta_closed_form, FIXTURE_TOLERANCE, "algebra"));
    report.push(CheckRow::new("fixture_av_identity", &fx.av_identity, FIXTURE_TOLERANCE, "algebra"));
    report.push(CheckRow::new("fixture_theta_recovered", &fx.theta_recovered, FIXTURE_TOLERANCE, "algebra"));
    report.push(CheckRow::new("fixture_eigen_pairing", &fx.eigen_pairing, FIXTURE_TOLERANCE, "algebra"));
    report.record("fixture_eigen_pairing_counts", &serde_json::json!({"checked": fx.eigen_pairing_checked, "skipped": fx.eigen_pairing_skipped}));
    let boundary = decompose_block([[1.0, 0.0], [0.0, 2.0]], 0.0);
    report.push(CheckRow::new("fixture_boundary_flagged", &[if boundary.out_of_model { 0.0 } else { 1.0 }], 0.0, "algebra"));

    let (k_used, adj) = resolve_k(cfg, K_SAMPLES_PER_SURFACE);
    if let Some((adj, _)) = adj {
        report.k_adjudication = Some(adj);
    }
    let (data, attempted) = sample_surface(&s, cfg.samples, cfg.seed);
    report.count(attempted, data.len());
    let samples: Vec<Sample> = data.par_iter().map(|d| evaluate(&s, d, cfg, k_used - 2.0)).collect();

    let decs: Vec<&DPerpDecomposition> = samples.iter().filter_map(|s| s.dec.as_ref()).collect();
    if !decs.is_empty() {
        let inv: Vec<f64> = decs.iter().map(|d| d.invariance_residual).collect();
        report.push(CheckRow::new("dperp_invariance", &inv, t.first_order, path).informational());
        let prod: Vec<f64> = decs.iter().map(|d| d.gamma_residuals().0).collect();
        report.push(CheckRow::new("gamma_product", &prod, t.first_order, path));
        let out = decs.iter().filter(|d| d.out_of_model).count();
        let count = |c: EigenConvention| decs.iter().filter(|d| d.convention == c).count();
        report.record(
            "decomposition",
            &serde_json::json!({
                "samples": decs.len(),
                "out_of_model": out,
                "convention_direct": count(EigenConvention::Direct),
                "convention_negated": count(EigenConvention::Negated),
                "convention_neither": count(EigenConvention::Neither),
            }),
        );
        let invariant = inv.iter().filter(|&&r| r <= t.first_order).count();
        report.verdicts.insert("pseudo_hopf".into(), format!("D-perp invariant at {invariant} of {} gated samples", decs.len()));
    } else {
        report.findings.push("xi is not tangent at any sample; D-perp decomposition not applicable".into());
    }

    let cod: Vec<&CodazziResidual> = samples.iter().flat_map(|s| s.codazzi.iter()).collect();
    report.push(CheckRow::new("codazzi", &cod.iter().map(|c| c.residual).collect::<Vec<_>>(), CODAZZI_TOLERANCE, path));
    report.push(
        CheckRow::new("codazzi_display_form", &cod.iter().map(|c| c.display_residual).collect::<Vec<_>>(), CODAZZI_TOLERANCE, path)
            .informational(),
    );

    let props: Vec<DichotomySample> = samples.iter().filter_map(|s| s.dichotomy).collect();
    let pr = dichotomy_checks(&props, t.first_order);
    if pr.vacuous() {
        report.verdicts.insert("gradient_dichotomies".into(), "vacuous: no biharmonic sample in an asserted gradient class".into());
    } else {
        let vals: Vec<f64> = pr
            .verdicts
            .iter()
            .filter_map(|v| v.consistent.map(|ok| if ok { 0.0 } else { 1.0 }))
            .collect();
        report.push(CheckRow::new("dichotomy_consistency", &vals, 0.5, path));
        report
            .verdicts
            .insert("gradient_dichotomies".into(), format!("{} applicable, {} inconsistent", pr.applicable, pr.inconsistent));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_exact() {
        let fx = fixture_residuals(-3.0, 3, 7);
        let worst = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
        assert_eq!(fx.gamma_product.len(), THETA_GRID);
        for v in [&fx.gamma_product, &fx.gamma_sum, &fx.beta_closed_form, &fx.av_identity, &fx.eigen_pairing] {
            assert!(worst(v) <= FIXTURE_TOLERANCE, "{v:?}");
        }
        assert!(fx.eigen_pairing_checked > 0);
    }

    #[test]
    fn grid_is_interior() {
        let g = theta_grid(THETA_GRID);
        assert!(g.iter().all(|&t| t > 0.0 && t < FRAC_PI_2));
    }
}
