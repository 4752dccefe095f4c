//! Subcommand pipelines producing output tables.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use super::output::{Cell, Table};
use super::{ExperimentConfig, GridSpec, Resource, Subcommand};
use crate::collective_spin::RotationSpec;
use crate::error::{Result, RspError};
use crate::rsp_protocol::{
    error_profile, fluctuating_spin_curve, ideal_spins, outcome_probabilities, run_outcome,
    run_protocol,
};
use crate::squeezing::{
    apply_frame_rotation, epr_minus, evolve_2a2s, fidelity, find_optimal_time, pair_variances,
    DiagonalPairState, PairPropagator, SqueezingRun,
};
use crate::wigner::{wigner_map, AngularState, SphereGrid};

pub(super) struct CommandOutput {
    pub table: Table,
    /// Replaces the generic JSON table layout when set.
    pub json: Option<Json>,
    pub tau_used: Option<f64>,
}

impl CommandOutput {
    fn table(table: Table, tau_used: Option<f64>) -> Self {
        Self {
            table,
            json: None,
            tau_used,
        }
    }
}

const LINE_POINTS: usize = 61;
const SWEEP_GRID: (usize, usize) = (61, 61);
const LINE_CUT_PHI: f64 = -PI / 4.0;

pub(super) fn run(c: &ExperimentConfig) -> Result<CommandOutput> {
    match c.subcommand {
        Subcommand::OptimalTime => optimal_time(c),
        Subcommand::Squeeze => squeeze(c),
        Subcommand::Protocol => protocol(c),
        Subcommand::ProbDist => prob_dist(c),
        Subcommand::SpinSweep => spin_sweep(c),
        Subcommand::WignerMap => wigner(c),
        Subcommand::ErrorSweep => error_sweep(c),
        Subcommand::Fluctuation => fluctuation(c),
    }
}

fn n_atoms(c: &ExperimentConfig) -> usize {
    c.n_atoms.expect("validated: n is required")
}

fn tau_or_optimal(c: &ExperimentConfig, n: usize) -> Result<f64> {
    match c.tau {
        Some(t) => Ok(t),
        None => Ok(find_optimal_time(n)?.0),
    }
}

fn resource(c: &ExperimentConfig) -> Result<(DiagonalPairState, Option<f64>)> {
    let n = n_atoms(c);
    match c.resource {
        Resource::Epr => Ok((epr_minus(n)?, None)),
        Resource::Squeezed => {
            let tau = tau_or_optimal(c, n)?;
            Ok((apply_frame_rotation(&evolve_2a2s(n, tau)?), Some(tau)))
        }
    }
}

/// `m` equally spaced points from `a` to `b` inclusive.
fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    let step = (b - a) / (m - 1) as f64;
    (0..m).map(|i| if i == m - 1 { b } else { a + i as f64 * step }).collect()
}

fn line_len(c: &ExperimentConfig) -> usize {
    match c.grid {
        Some(GridSpec::Line(m)) => m,
        _ => LINE_POINTS,
    }
}

/// Polar angles over `[0, pi]` and azimuths over `[0, 2 pi)`.
fn sphere_points(a: usize, b: usize) -> Vec<(f64, f64)> {
    let thetas = linspace(0.0, PI, a);
    thetas
        .iter()
        .flat_map(|&t| (0..b).map(move |j| (t, TAU * j as f64 / b as f64)))
        .collect()
}

fn optimal_time(c: &ExperimentConfig) -> Result<CommandOutput> {
    let n = n_atoms(c);
    let (tau, fid) = find_optimal_time(n)?;
    let mut table = Table::new(&["n", "tau_opt", "fidelity"]);
    table.push(vec![n.into(), tau.into(), fid.into()]);
    let json = table.first_row_object();
    Ok(CommandOutput {
        table,
        json: Some(json),
        tau_used: Some(tau),
    })
}

fn squeeze(c: &ExperimentConfig) -> Result<CommandOutput> {
    let n = n_atoms(c);
    let tau_max = match c.tau {
        Some(t) => t,
        None => 2.0 * find_optimal_time(n)?.0,
    };
    let prop = PairPropagator::balanced(n)?;
    let target = epr_minus(n)?;
    let taus = linspace(0.0, tau_max, line_len(c));
    let rows: Vec<Vec<Cell>> = taus
        .par_iter()
        .map(|&tau| {
            let run = SqueezingRun {
                n_atoms: n,
                tau,
                state: apply_frame_rotation(&prop.state(tau)),
                frame_rotated: true,
            };
            let v = pair_variances(&run)?;
            let f = fidelity(&run.state, &target)?;
            Ok(vec![tau.into(), f.into(), v.var_xp.into(), v.var_ym.into(), v.var_zm.into()])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["tau", "fidelity", "var_xp", "var_ym", "var_zm"]);
    table.rows = rows;
    Ok(CommandOutput::table(table, Some(tau_max)))
}

/// `(k, p, sx, sy, sz, e)` for every outcome at one direction.
fn outcome_rows(res: &DiagonalPairState, spec: RotationSpec) -> Result<Vec<[Cell; 6]>> {
    let n = res.n_alice();
    let outcomes = run_protocol(res, spec)?;
    let profile = error_profile(res, spec)?;
    Ok(outcomes
        .iter()
        .zip(&profile.errors)
        .map(|(o, e)| {
            let s = o.bob_spins.unwrap_or([f64::NAN; 3]);
            debug_assert!(o.k <= n);
            [
                o.k.into(),
                o.probability.into(),
                s[0].into(),
                s[1].into(),
                s[2].into(),
                e.unwrap_or(f64::NAN).into(),
            ]
        })
        .collect())
}

fn protocol(c: &ExperimentConfig) -> Result<CommandOutput> {
    let (res, tau) = resource(c)?;
    let spec = RotationSpec::new(c.theta.expect("required"), c.phi.expect("required"));
    let mut table = Table::new(&["k", "p", "sx", "sy", "sz", "e"]);
    for row in outcome_rows(&res, spec)? {
        table.push(row.to_vec());
    }
    Ok(CommandOutput::table(table, tau))
}

fn prob_dist(c: &ExperimentConfig) -> Result<CommandOutput> {
    let (res, tau) = resource(c)?;
    let thetas = linspace(0.0, PI, line_len(c));
    let probs: Vec<Vec<f64>> = thetas.par_iter().map(|&t| outcome_probabilities(&res, t)).collect();
    let mut table = Table::new(&["theta", "k", "p"]);
    for (t, ps) in thetas.iter().zip(probs) {
        for (k, p) in ps.into_iter().enumerate() {
            table.push(vec![(*t).into(), k.into(), p.into()]);
        }
    }
    Ok(CommandOutput::table(table, tau))
}

fn spin_sweep(c: &ExperimentConfig) -> Result<CommandOutput> {
    let (res, tau) = resource(c)?;
    let points: Vec<(f64, f64)> = match c.grid {
        Some(GridSpec::Sphere(a, b)) => sphere_points(a, b),
        Some(GridSpec::Line(m)) => {
            let phi = c.phi.unwrap_or(LINE_CUT_PHI);
            linspace(0.0, PI, m).into_iter().map(|t| (t, phi)).collect()
        }
        None => match c.phi {
            Some(phi) => linspace(0.0, PI, LINE_POINTS).into_iter().map(|t| (t, phi)).collect(),
            None => sphere_points(SWEEP_GRID.0, SWEEP_GRID.1),
        },
    };
    let blocks: Vec<Vec<Vec<Cell>>> = points
        .par_iter()
        .map(|&(theta, phi)| {
            let spec = RotationSpec::new(theta, phi);
            let rows = match c.k {
                Some(k) => {
                    let o = run_outcome(&res, spec, k)?;
                    let n = res.n_alice();
                    let s = o.bob_spins.unwrap_or([f64::NAN; 3]);
                    let ideal = ideal_spins(n, k, theta, phi);
                    let e = o.bob_spins.map_or(f64::NAN, |s| bloch_distance(&s, &ideal) / (2 * n) as f64);
                    vec![[
                        k.into(),
                        o.probability.into(),
                        s[0].into(),
                        s[1].into(),
                        s[2].into(),
                        e.into(),
                    ]]
                }
                None => outcome_rows(&res, spec)?,
            };
            Ok(rows
                .into_iter()
                .map(|r| {
                    let mut row = vec![theta.into(), phi.into()];
                    row.extend(r);
                    row
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["theta", "phi", "k", "p", "sx", "sy", "sz", "e"]);
    table.rows = blocks.into_iter().flatten().collect();
    Ok(CommandOutput::table(table, tau))
}

fn bloch_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn wigner(c: &ExperimentConfig) -> Result<CommandOutput> {
    let (res, tau) = resource(c)?;
    let k = c.k.expect("required");
    let spec = RotationSpec::new(c.theta.expect("required"), c.phi.expect("required"));
    let outcome = run_outcome(&res, spec, k)?;
    let state = outcome.bob_state.ok_or(RspError::ZeroProbability { k })?;
    let grid = match c.grid {
        Some(GridSpec::Sphere(a, b)) => SphereGrid::Uniform { n_theta: a, n_phi: b },
        _ => SphereGrid::plot_default(),
    };
    let map = wigner_map(&AngularState::from_ensemble(&state)?, grid)?;
    let mut table = Table::new(&["theta", "phi", "w"]);
    for (t, row) in map.theta_nodes.iter().zip(&map.values) {
        for (p, w) in map.phi_nodes.iter().zip(row) {
            table.push(vec![(*t).into(), (*p).into(), (*w).into()]);
        }
    }
    let nums = |v: &[f64]| v.iter().map(|&x| Cell::from(x).to_json()).collect::<Vec<_>>();
    let json = json!({
        "n": n_atoms(c),
        "k": k,
        "probability": Cell::from(outcome.probability).to_json(),
        "theta": nums(&map.theta_nodes),
        "phi": nums(&map.phi_nodes),
        "w": map.values.iter().map(|r| nums(r)).collect::<Vec<_>>(),
    });
    Ok(CommandOutput {
        table,
        json: Some(json),
        tau_used: tau,
    })
}

fn error_sweep(c: &ExperimentConfig) -> Result<CommandOutput> {
    let (res, tau) = resource(c)?;
    let points = match (c.theta, c.phi, c.grid) {
        (Some(t), Some(p), _) => vec![(t, p)],
        (_, _, Some(GridSpec::Sphere(a, b))) => sphere_points(a, b),
        _ => sphere_points(SWEEP_GRID.0, SWEEP_GRID.1),
    };
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(theta, phi)| {
            let profile = error_profile(&res, RotationSpec::new(theta, phi))?;
            let mut row = vec![theta.into(), phi.into(), profile.average().into()];
            if let Some(k_cut) = c.k_cut {
                let (e, keep) = match profile.postselected(k_cut) {
                    Ok(v) => v,
                    Err(RspError::EmptyPostSelection { .. }) => (f64::NAN, 0.0),
                    Err(e) => return Err(e),
                };
                row.push(e.into());
                row.push(keep.into());
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut table = if c.k_cut.is_some() {
        Table::new(&["theta", "phi", "e_avg", "e_ps", "p_keep"])
    } else {
        Table::new(&["theta", "phi", "e_avg"])
    };
    table.rows = rows;
    Ok(CommandOutput::table(table, tau))
}

fn fluctuation(c: &ExperimentConfig) -> Result<CommandOutput> {
    let fspec = c.fluctuation.clone().expect("validated");
    let n_bar = fspec.mean_atoms.round() as usize;
    let tau = match c.tau {
        Some(t) => t,
        None => find_optimal_time(n_bar.max(2))?.0,
    };
    let phi = c.phi.unwrap_or(LINE_CUT_PHI);
    let thetas = linspace(0.0, PI, line_len(c));
    let specs: Vec<RotationSpec> = thetas.iter().map(|&t| RotationSpec::new(t, phi)).collect();
    let curve = fluctuating_spin_curve(&fspec, &specs, tau)?;
    let mut table = Table::new(&[
        "theta", "sx", "sy", "sz", "ideal_sx", "ideal_sy", "ideal_sz", "skipped",
    ]);
    for (t, avg) in thetas.iter().zip(curve) {
        let ideal = match fspec.outcome_rule.outcome(n_bar) {
            Some(k) if n_bar > 0 => ideal_spins(n_bar, k, *t, phi).map(|s| s / n_bar as f64),
            _ => [f64::NAN; 3],
        };
        table.push(vec![
            (*t).into(),
            avg.spins[0].into(),
            avg.spins[1].into(),
            avg.spins[2].into(),
            ideal[0].into(),
            ideal[1].into(),
            ideal[2].into(),
            avg.skipped.into(),
        ]);
    }
    Ok(CommandOutput::table(table, Some(tau)))
}
