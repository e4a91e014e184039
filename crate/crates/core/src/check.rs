//! Built-in invariant suite behind the `check` CLI command.
//!
//! `Quick` covers the L <= 4 oracles and exact identities and finishes in
//! well under a minute; `Full` adds L = 6 spot checks and the L = 2
//! adiabatic limit.

use crate::basis::{binomial, half_filled_sector};
use crate::hamiltonian::{build_drive, build_static, final_hamiltonian, HubbardParams};
use crate::pipeline::{run_point, PointContext, PointOptions};
use crate::propagator::{propagate, transition_matrix, PropagationConfig};
use crate::spectral::decompose;
use crate::thermo::{adiabatic_reference, equilibrium_state, evolved_state, trace_distance};
use crate::workstats::{build_distribution, mean_energy_crosscheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckLevel {
    Quick,
    Full,
}

pub struct CheckOutcome {
    pub name: &'static str,
    pub result: Result<(), String>,
}

/// Run the suite, streaming one PASS/FAIL line per check through `report`.
pub fn run_checks(level: CheckLevel, mut report: impl FnMut(&CheckOutcome)) -> usize {
    let mut failures = 0;
    let mut run = |name: &'static str, f: &dyn Fn() -> Result<(), String>| {
        let outcome = CheckOutcome {
            name,
            result: f(),
        };
        if outcome.result.is_err() {
            failures += 1;
        }
        report(&outcome);
    };

    run("sector-dimensions", &check_sector_dimensions);
    run("hermiticity", &check_hermiticity);
    run("dimer-analytic-spectrum", &check_dimer_spectrum);
    run("free-fermion-spectrum", &check_free_fermion_spectrum);
    run("drive-telescoping", &check_drive_telescoping);
    run("jarzynski-and-entropy-identity", &|| {
        check_identities(4, &[0.0, 5.0, 10.0], &[0.0, 1.0])
    });
    run("row-stochasticity-and-normalization", &|| {
        check_stochasticity(4, 3.0, 1.0)
    });
    run("mean-energy-crosscheck", &check_mean_energy);
    run("trace-distance-properties", &check_trace_distance);
    run("purity-conservation", &|| check_purity(2, 5.0, 1.0));

    if level == CheckLevel::Full {
        run("l6-stochasticity", &|| check_stochasticity(6, 5.0, 1.0));
        run("l6-identities", &|| check_identities(6, &[5.0], &[1.0]));
        run("l2-adiabatic-limit", &check_adiabatic_limit);
    }
    failures
}

fn fail(msg: String) -> Result<(), String> {
    Err(msg)
}

fn check_sector_dimensions() -> Result<(), String> {
    for l in [2usize, 4, 6, 8] {
        let b = half_filled_sector(l).map_err(|e| e.to_string())?;
        let want = binomial(l, l / 2).pow(2);
        if b.dim() != want {
            return fail(format!("L={l}: dim {} != {want}", b.dim()));
        }
    }
    Ok(())
}

fn check_hermiticity() -> Result<(), String> {
    let params = HubbardParams {
        l: 4,
        u: 7.3,
        ..Default::default()
    };
    let basis = half_filled_sector(4).map_err(|e| e.to_string())?;
    let h = build_static(&basis, &params).map_err(|e| e.to_string())?;
    let d = build_drive(&basis, &params).map_err(|e| e.to_string())?;
    let hf = final_hamiltonian(&h, &d);
    for (name, op) in [("static", &h), ("drive", &d), ("final", &hf)] {
        let defect = op.symmetry_defect();
        if defect > 0.0 {
            return fail(format!("{name} operator symmetry defect {defect:.3e}"));
        }
    }
    Ok(())
}

fn check_dimer_spectrum() -> Result<(), String> {
    let u = 6.0;
    let params = HubbardParams {
        l: 2,
        u,
        ..Default::default()
    };
    let basis = half_filled_sector(2).map_err(|e| e.to_string())?;
    let spec = decompose(&build_static(&basis, &params).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let root = (u * u + 16.0f64).sqrt();
    let mut want = [0.0, u, 0.5 * (u - root), 0.5 * (u + root)];
    want.sort_by(f64::total_cmp);
    for (e, w) in spec.eigenvalues.iter().zip(want) {
        if (e - w).abs() > 1e-10 {
            return fail(format!("dimer eigenvalue {e} != {w}"));
        }
    }
    Ok(())
}

fn check_free_fermion_spectrum() -> Result<(), String> {
    let l = 4;
    let params = HubbardParams {
        l,
        u: 0.0,
        ..Default::default()
    };
    let basis = half_filled_sector(l).map_err(|e| e.to_string())?;
    let spec = decompose(&build_static(&basis, &params).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let levels: Vec<f64> = (1..=l)
        .map(|k| -2.0 * (k as f64 * std::f64::consts::PI / (l as f64 + 1.0)).cos())
        .collect();
    let mut sums = Vec::new();
    for i in 0..l {
        for j in (i + 1)..l {
            for a in 0..l {
                for b in (a + 1)..l {
                    sums.push(levels[i] + levels[j] + levels[a] + levels[b]);
                }
            }
        }
    }
    sums.sort_by(f64::total_cmp);
    for (e, w) in spec.eigenvalues.iter().zip(sums) {
        if (e - w).abs() > 1e-9 {
            return fail(format!("free spectrum: {e} != {w}"));
        }
    }
    Ok(())
}

fn check_drive_telescoping() -> Result<(), String> {
    for l in [2usize, 4, 6, 8] {
        let params = HubbardParams {
            l,
            ..Default::default()
        };
        let drop = params.delta(l - 1) - params.delta(0);
        if (drop - params.a).abs() > 1e-12 {
            return fail(format!("L={l}: potential drop {drop} != A={}", params.a));
        }
    }
    Ok(())
}

fn check_identities(l: usize, us: &[f64], taus: &[f64]) -> Result<(), String> {
    for &u in us {
        let params = HubbardParams {
            l,
            u,
            ..Default::default()
        };
        let ctx = PointContext::build(&params).map_err(|e| e.to_string())?;
        for &tau in taus {
            let res = ctx
                .run_tau(tau, &PropagationConfig::default(), &PointOptions::default())
                .map_err(|e| e.to_string())?;
            let r = &res.record;
            if r.jarzynski_residual > 1e-8 {
                return fail(format!(
                    "L={l} U={u} tau={tau}: Jarzynski residual {:.3e}",
                    r.jarzynski_residual
                ));
            }
            let identity = params.beta * (r.mean_work - r.delta_f);
            if (r.sigma - identity).abs() > 1e-8 {
                return fail(format!(
                    "L={l} U={u} tau={tau}: sigma {:.6e} vs beta(<W>-dF) {:.6e}",
                    r.sigma, identity
                ));
            }
            if r.sigma < -1e-9 {
                return fail(format!("L={l} U={u} tau={tau}: sigma negative ({})", r.sigma));
            }
        }
    }
    Ok(())
}

fn check_stochasticity(l: usize, u: f64, tau: f64) -> Result<(), String> {
    let params = HubbardParams {
        l,
        u,
        tau,
        ..Default::default()
    };
    let ctx = PointContext::build(&params).map_err(|e| e.to_string())?;
    let prop = propagate(
        &ctx.spec0,
        &ctx.ens0,
        &ctx.h_static,
        &ctx.h_drive,
        tau,
        &PropagationConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let (table, _) = transition_matrix(&prop, &ctx.spec0, &ctx.spec_f);
    let defect = table.row_sum_defect();
    if defect > 1e-9 {
        return fail(format!("row sums off by {defect:.3e}"));
    }
    let dist = build_distribution(&table, 1e-9, 1e-14).map_err(|e| e.to_string())?;
    if dist.normalization_defect() > 1e-9 {
        return fail(format!(
            "P(W) normalization off by {:.3e}",
            dist.normalization_defect()
        ));
    }
    Ok(())
}

fn check_mean_energy() -> Result<(), String> {
    let params = HubbardParams {
        l: 4,
        u: 3.0,
        tau: 5.0,
        ..Default::default()
    };
    let ctx = PointContext::build(&params).map_err(|e| e.to_string())?;
    let prop = propagate(
        &ctx.spec0,
        &ctx.ens0,
        &ctx.h_static,
        &ctx.h_drive,
        params.tau,
        &PropagationConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let (table, _) = transition_matrix(&prop, &ctx.spec0, &ctx.spec_f);
    let (tpm, unitary) = mean_energy_crosscheck(&table, &prop, &ctx.h_final);
    if (tpm - unitary).abs() > 1e-8 * tpm.abs().max(1.0) {
        return fail(format!("<W> routes disagree: {tpm} vs {unitary}"));
    }
    Ok(())
}

fn check_trace_distance() -> Result<(), String> {
    let params = HubbardParams {
        l: 2,
        u: 4.0,
        tau: 1.0,
        ..Default::default()
    };
    let ctx = PointContext::build(&params).map_err(|e| e.to_string())?;
    let prop = propagate(
        &ctx.spec0,
        &ctx.ens0,
        &ctx.h_static,
        &ctx.h_drive,
        params.tau,
        &PropagationConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let rho = evolved_state(&prop).map_err(|e| e.to_string())?;
    let eq = equilibrium_state(&ctx.spec_f, &ctx.ens_f);
    let ad = adiabatic_reference(&ctx.ens0, &ctx.spec_f);
    let d1 = trace_distance(&rho, &eq).map_err(|e| e.to_string())?;
    let d2 = trace_distance(&eq, &rho).map_err(|e| e.to_string())?;
    if (d1 - d2).abs() > 1e-12 {
        return fail(format!("asymmetric trace distance: {d1} vs {d2}"));
    }
    let d3 = trace_distance(&rho, &ad).map_err(|e| e.to_string())?;
    let d4 = trace_distance(&ad, &eq).map_err(|e| e.to_string())?;
    if d1 > d3 + d4 + 1e-12 {
        return fail("triangle inequality violated".to_string());
    }
    for d in [d1, d3, d4] {
        if !(0.0..=1.0 + 1e-12).contains(&d) {
            return fail(format!("trace distance {d} outside [0,1]"));
        }
    }
    Ok(())
}

fn check_purity(l: usize, u: f64, tau: f64) -> Result<(), String> {
    let params = HubbardParams {
        l,
        u,
        tau,
        ..Default::default()
    };
    let ctx = PointContext::build(&params).map_err(|e| e.to_string())?;
    let prop = propagate(
        &ctx.spec0,
        &ctx.ens0,
        &ctx.h_static,
        &ctx.h_drive,
        tau,
        &PropagationConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let rho = evolved_state(&prop).map_err(|e| e.to_string())?;
    let rho0 = equilibrium_state(&ctx.spec0, &ctx.ens0);
    let drift = (rho.purity() - rho0.purity()).abs();
    if drift > 1e-9 {
        return fail(format!("purity drifted by {drift:.3e}"));
    }
    Ok(())
}

fn check_adiabatic_limit() -> Result<(), String> {
    let params = HubbardParams {
        l: 2,
        u: 5.0,
        tau: 1000.0,
        ..Default::default()
    };
    let res = run_point(
        &params,
        &PropagationConfig {
            tol_observable: 1e-6,
            ..Default::default()
        },
        &PointOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let d = res.record.d_adiab.expect("trace distances enabled");
    if d >= 1e-2 {
        return fail(format!("D_adiab = {d:.3e} at tau=1000/J"));
    }
    Ok(())
}
