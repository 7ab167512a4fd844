use rayon::prelude::*;

use super::{ambient_points, model_of};
use crate::connections::{
    adjudicate_deta, covariant_derivative, deta_residual, eta_parallel_residual, kcontact_check, metricity_residual,
    sasakian_check, torsion, tw_torsion_residual, xi_parallel_residual, Connection, DEtaConvention, LeviCivita,
    TanakaWebsterContact, TanakaWebsterSasakian,
};
use crate::diffcalc::{DiffError, Strategy};
use crate::exprdsl::RunConfig;
use crate::linalg;
use crate::model::{FrameField, Model, Point};
use crate::report::{CheckRow, ResidualReport};

#[derive(Default)]
struct Sample {
    phi_squared: f64,
    eta_xi: f64,
    eta_phi: f64,
    compatibility: f64,
    positive_definite: f64,
    contact_metric: f64,
    k_contact: f64,
    sasakian: f64,
    lc_metric: f64,
    lc_torsion: f64,
    tw_metric: f64,
    tw_eta: f64,
    tw_xi: f64,
    tw_torsion: f64,
    tw_agree: f64,
}

fn frame(model: &Model) -> Vec<FrameField> {
    (0..model.dim()).map(|index| FrameField { model: *model, index }).collect()
}

fn metricity<C: Connection>(conn: &C, p: &Point, strategy: Strategy) -> Result<f64, DiffError> {
    let f = frame(&conn.model());
    let mut worst: f64 = 0.0;
    for z in &f {
        for (i, x) in f.iter().enumerate() {
            for y in &f[i..] {
                worst = worst.max(metricity_residual(conn, x, y, z, p, strategy)?);
            }
        }
    }
    Ok(worst)
}

fn evaluate(model: &Model, p: &Point, conv: DEtaConvention, strategy: Strategy) -> Result<Sample, DiffError> {
    let q = p.coords();
    let st = model.structure_at(p).map_err(|_| DiffError::NonFinite { point: q.to_vec() })?;
    let f = frame(model);
    let lc = LeviCivita { model: *model };
    let twc = TanakaWebsterContact { model: *model };
    let tws = TanakaWebsterSasakian { model: *model };
    let mut s = Sample {
        phi_squared: st.phi_squared_residual(),
        eta_xi: st.eta_xi_residual(),
        eta_phi: st.eta_phi_residual(),
        compatibility: st.compatibility_residual(),
        positive_definite: if st.leading_minors().iter().all(|&d| d > 0.0) { 0.0 } else { 1.0 },
        contact_metric: deta_residual(model, p, conv, strategy)?,
        k_contact: kcontact_check(model, p, strategy)?,
        sasakian: sasakian_check(model, p, strategy)?,
        lc_metric: metricity(&lc, p, strategy)?,
        tw_metric: metricity(&tws, p, strategy)?,
        ..Sample::default()
    };
    for x in &f {
        s.tw_eta = f.iter().try_fold(s.tw_eta, |w, y| Ok::<_, DiffError>(w.max(eta_parallel_residual(&tws, y, x, p, strategy)?)))?;
        s.tw_xi = s.tw_xi.max(xi_parallel_residual(&tws, x, p, strategy)?);
        for y in &f {
            s.lc_torsion = s.lc_torsion.max(model.norm(q, &torsion(&lc, x, y, p, strategy)?));
            s.tw_torsion = s.tw_torsion.max(tw_torsion_residual(&tws, x, y, p, conv, strategy)?);
            let a = covariant_derivative(&twc, x, y, p, strategy)?;
            let b = covariant_derivative(&tws, x, y, p, strategy)?;
            s.tw_agree = s.tw_agree.max(model.norm(q, &linalg::sub(&a, &b)));
        }
    }
    Ok(s)
}

pub fn run(cfg: &RunConfig) -> ResidualReport {
    run_with_model(cfg, model_of(cfg))
}

/// The suite against an explicit model, so a deliberately broken structure can
/// be checked to fail.
pub fn run_with_model(cfg: &RunConfig, model: Model) -> ResidualReport {
    let mut report = ResidualReport::new("axioms", cfg);
    let conv = adjudicate_deta(&model);
    report.deta_convention = Some(conv.describe().to_string());
    let points = ambient_points(&model, cfg.samples, cfg.seed);
    let samples: Vec<Option<Sample>> =
        points.par_iter().map(|p| evaluate(&model, p, conv, cfg.strategy).ok()).collect();
    let ok: Vec<&Sample> = samples.iter().flatten().collect();
    report.count(points.len(), ok.len());

    let t = &cfg.tolerances;
    let path = cfg.strategy.as_str();
    let col = |f: fn(&Sample) -> f64| ok.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let rows = [
        ("phi_squared", col(|s| s.phi_squared), t.geometry, "closed-form"),
        ("eta_of_xi", col(|s| s.eta_xi), t.geometry, "closed-form"),
        ("eta_phi_annihilation", col(|s| s.eta_phi), t.geometry, "closed-form"),
        ("metric_compatibility", col(|s| s.compatibility), t.geometry, "closed-form"),
        ("metric_positive_definite", col(|s| s.positive_definite), t.geometry, "closed-form"),
        ("contact_metric", col(|s| s.contact_metric), t.first_order, path),
        ("k_contact", col(|s| s.k_contact), t.first_order, path),
        ("sasakian", col(|s| s.sasakian), t.first_order, path),
        ("levi_civita_metric", col(|s| s.lc_metric), t.first_order, path),
        ("levi_civita_torsion_free", col(|s| s.lc_torsion), t.first_order, path),
        ("tw_metric", col(|s| s.tw_metric), t.first_order, path),
        ("tw_eta_parallel", col(|s| s.tw_eta), t.first_order, path),
        ("tw_xi_parallel", col(|s| s.tw_xi), t.first_order, path),
        ("tw_torsion", col(|s| s.tw_torsion), t.first_order, path),
        ("tw_constructions_agree", col(|s| s.tw_agree), t.first_order, path),
    ];
    for (name, values, tol, path) in rows {
        report.push(CheckRow::new(name, &values, tol, path));
    }
    let failed: Vec<String> = report
        .failed_checks()
        .iter()
        .map(|row| format!("identity {} fails: max residual {:.3e} > {:.1e}", row.name, row.max, row.tolerance))
        .collect();
    report.findings.extend(failed);
    report
}
