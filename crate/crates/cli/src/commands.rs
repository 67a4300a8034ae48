//! One function per subcommand, each producing a [`Report`].

use std::f64::consts::PI;

use serde_json::{json, Value};
use stm_core::bound_state::{find_levels, spectator, BoundStateProblem};
use stm_core::quadrature::{gauss_legendre, MomentumGrid};
use stm_core::scattering::{self, ElasticChannel};
use stm_core::twobody::{
    feshbach_a, tau, tau_inverse, tau_pole_residue, ChannelConfig, FeshbachParams,
};
use stm_core::universality::{self, SolverSettings};
use stm_core::wavefunction::{density_table, normalize, WaveFunction};
use stm_core::{bound_state, Error};

use crate::args::{Command, GridArgs};
use crate::emit::{Cell, Report};
use crate::CliError;

/// Presentation scaling of momenta (×s) and energies (×s²).
#[derive(Debug, Clone, Copy)]
pub struct Units(pub f64);

impl Units {
    fn p(self, v: f64) -> f64 {
        v * self.0
    }
    fn e(self, v: f64) -> f64 {
        v * self.0 * self.0
    }
}

fn grid_of(g: &GridArgs, n: usize, scale: f64) -> (usize, f64) {
    (g.grid_n.unwrap_or(n), g.map_scale.unwrap_or(scale))
}

pub fn dispatch(command: &Command, units: Units) -> Result<Report, CliError> {
    match command {
        Command::Spectrum {
            eps2,
            levels,
            grid,
            tolerance,
            min_binding,
        } => spectrum(*eps2, *levels, grid, *tolerance, *min_binding, units),
        Command::Spectator { eps2, level, grid } => spectator_cmd(*eps2, *level, grid, units),
        Command::Wavefunction {
            eps2,
            level,
            grid,
            q_n,
            q_map_scale,
        } => wavefunction(*eps2, *level, grid, *q_n, *q_map_scale, units),
        Command::Scatter { eps2, k, grid } => scatter(*eps2, k, grid, units),
        Command::ScalingCurve {
            eps2,
            level,
            grid,
            min_binding,
        } => scaling(eps2, *level, grid, *min_binding, units),
        Command::Threshold {
            level,
            grid,
            bracket_lo,
            bracket_hi,
        } => threshold(*level, grid, bracket_lo.zip(*bracket_hi), units),
        Command::Feshbach {
            abg,
            b0,
            delta_b,
            b,
        } => feshbach(*abg, *b0, *delta_b, b),
        Command::Selftest => selftest(),
    }
}

fn settings(
    grid: &GridArgs,
    n: usize,
    scale: f64,
    min_binding: Option<f64>,
    tolerance: Option<f64>,
) -> SolverSettings {
    let (grid_n, map_scale) = grid_of(grid, n, scale);
    let d = SolverSettings::default();
    SolverSettings {
        grid_n,
        map_scale,
        min_binding: min_binding.unwrap_or(d.min_binding),
        level_tolerance: tolerance.unwrap_or(d.level_tolerance),
        ..d
    }
}

fn spectrum(
    eps2: f64,
    levels: usize,
    grid: &GridArgs,
    tolerance: Option<f64>,
    min_binding: Option<f64>,
    u: Units,
) -> Result<Report, CliError> {
    let s = settings(grid, 300, 0.1, min_binding, tolerance);
    s.validate()?;
    let found = s.spectrum(eps2, levels)?;
    let config = json!({
        "eps2": eps2, "levels": levels, "grid_n": s.grid_n, "map_scale": s.map_scale,
        "tolerance": s.level_tolerance, "min_binding": s.min_binding, "unit_scale": u.0,
    });
    let binding: Vec<f64> = found.levels.iter().map(|&e| u.e(e)).collect();
    let rows = binding
        .iter()
        .enumerate()
        .map(|(i, &e)| vec![i.into(), e.into(), found.ratios.get(i).copied().into()])
        .collect();
    Ok(Report {
        command: "spectrum",
        config,
        columns: vec!["level", "binding_energy", "ratio_to_next"],
        rows,
        results: json!({
            "eps2": u.e(eps2),
            "levels": binding,
            "ratios": found.ratios,
            "window": [u.e(found.window.deepest), u.e(found.window.shallowest)],
            "diagnostic": found.diagnostic,
        }),
    })
}

fn level_table(
    eps2: f64,
    level: usize,
    grid: &GridArgs,
) -> Result<(bound_state::SpectatorTable, (usize, f64)), CliError> {
    let (n, scale) = grid_of(grid, 300, 0.1);
    let problem = BoundStateProblem::new(ChannelConfig::new(eps2)?, MomentumGrid::new(n, scale)?)?;
    let found = find_levels(&problem, level + 1)?;
    let Some(&binding) = found.levels.get(level) else {
        return Err(Error::NoBoundState.into());
    };
    Ok((spectator(binding, &problem)?, (n, scale)))
}

fn spectator_cmd(eps2: f64, level: usize, grid: &GridArgs, u: Units) -> Result<Report, CliError> {
    let (table, (n, scale)) = level_table(eps2, level, grid)?;
    let ys: Vec<f64> = table.nodes().iter().map(|&y| u.p(y)).collect();
    let rows = ys
        .iter()
        .zip(&table.values)
        .map(|(&y, &f)| vec![y.into(), f.into()])
        .collect();
    Ok(Report {
        command: "spectator",
        config: json!({"eps2": eps2, "level": level, "grid_n": n, "map_scale": scale, "unit_scale": u.0}),
        columns: vec!["y", "f"],
        rows,
        results: json!({
            "binding_energy": u.e(table.energy),
            "pivot": table.pivot,
            "residual": table.residual,
            "y": ys,
            "f": table.values,
        }),
    })
}

fn wavefunction(
    eps2: f64,
    level: usize,
    grid: &GridArgs,
    q_n: usize,
    q_map_scale: Option<f64>,
    u: Units,
) -> Result<Report, CliError> {
    let (table, (n, scale)) = level_table(eps2, level, grid)?;
    let q_scale = q_map_scale.unwrap_or_else(|| 1.5 * table.energy.sqrt());
    let qgrid = MomentumGrid::new(q_n, q_scale)?;
    let mut wf = WaveFunction::new(table)?;
    let raw_norm = normalize(&mut wf, &qgrid, &qgrid)?;
    let density = density_table(&wf, &qgrid, &qgrid)?;
    let qs: Vec<f64> = qgrid.nodes().to_vec();
    let f: Vec<f64> = qs.iter().map(|&q| wf.spectator(q)).collect();
    let rows = qs
        .iter()
        .zip(&f)
        .zip(&density)
        .map(|((&q, &fq), &d)| vec![u.p(q).into(), fq.into(), d.into()])
        .collect();
    Ok(Report {
        command: "wavefunction",
        config: json!({
            "eps2": eps2, "level": level, "grid_n": n, "map_scale": scale,
            "q_n": q_n, "q_map_scale": q_scale, "unit_scale": u.0,
        }),
        columns: vec!["q", "spectator", "density"],
        rows,
        results: json!({
            "binding_energy": u.e(wf.energy()),
            "unnormalized_norm": raw_norm,
            "spectator_scale": wf.scale(),
            "clamped_evaluations": wf.clamped_evaluations(),
            "q": qs.iter().map(|&q| u.p(q)).collect::<Vec<_>>(),
            "spectator": f,
            "density": density,
        }),
    })
}

fn scatter(eps2: f64, ks: &[f64], grid: &GridArgs, u: Units) -> Result<Report, CliError> {
    let (n, scale) = grid_of(grid, 200, 1.0);
    let cfg = ChannelConfig::new(eps2)?;
    let mesh = MomentumGrid::new(n, scale)?;
    let channels = ks
        .iter()
        .map(|&k| ElasticChannel::new(cfg, k))
        .collect::<stm_core::Result<Vec<_>>>()?;
    let solutions = {
        use rayon::prelude::*;
        channels
            .par_iter()
            .map(|ch| scattering::solve(ch, &mesh))
            .collect::<stm_core::Result<Vec<_>>>()?
    };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for sol in &solutions {
        let k = sol.channel.momentum();
        let h = sol.on_shell;
        let drift = sol.refinement_drift;
        rows.push(vec![
            u.p(k).into(),
            u.e(sol.channel.energy()).into(),
            h.re.into(),
            h.im.into(),
            sol.cross_section.into(),
            sol.low_energy_amplitude().into(),
            drift.into(),
        ]);
        results.push(json!({
            "k": u.p(k),
            "energy": u.e(sol.channel.energy()),
            "h_re": h.re,
            "h_im": h.im,
            "cross_section": sol.cross_section,
            "low_energy_amplitude": sol.low_energy_amplitude(),
            "refinement_drift": drift,
            "condition": sol.condition,
            "map_scale_used": sol.grid.map_scale(),
        }));
    }
    Ok(Report {
        command: "scatter",
        config: json!({"eps2": eps2, "k": ks, "grid_n": n, "map_scale": scale, "unit_scale": u.0}),
        columns: vec![
            "k",
            "energy",
            "h_re",
            "h_im",
            "cross_section",
            "low_energy_amplitude",
            "refinement_drift",
        ],
        rows,
        results: Value::Array(results),
    })
}

fn scaling(
    eps2s: &[f64],
    level: usize,
    grid: &GridArgs,
    min_binding: Option<f64>,
    u: Units,
) -> Result<Report, CliError> {
    let s = settings(grid, 200, 0.1, min_binding, None);
    let curve = universality::scaling_curve(eps2s, level, &s)?;
    let rows = curve
        .points
        .iter()
        .map(|p| {
            vec![
                u.e(p.eps2).into(),
                u.e(p.level_n_energy).into(),
                u.e(p.level_n1_energy).into(),
                p.x.into(),
                p.y.into(),
            ]
        })
        .collect();
    let points: Vec<Value> = curve
        .points
        .iter()
        .map(|p| {
            json!({"eps2": u.e(p.eps2), "level_N_energy": u.e(p.level_n_energy),
                   "level_N1_energy": u.e(p.level_n1_energy), "x": p.x, "y": p.y})
        })
        .collect();
    let skipped: Vec<Value> = curve
        .skipped
        .iter()
        .map(|(e, why)| json!({"eps2": u.e(*e), "reason": why}))
        .collect();
    Ok(Report {
        command: "scaling-curve",
        config: json!({
            "eps2": eps2s, "level": level, "grid_n": s.grid_n, "map_scale": s.map_scale,
            "min_binding": s.min_binding, "unit_scale": u.0,
        }),
        columns: vec!["eps2", "level_N_energy", "level_N1_energy", "x", "y"],
        rows,
        results: json!({"level": level, "points": points, "skipped": skipped}),
    })
}

fn threshold(
    level: usize,
    grid: &GridArgs,
    bracket: Option<(f64, f64)>,
    u: Units,
) -> Result<Report, CliError> {
    let s = settings(grid, 200, 0.1, None, None);
    let t = match bracket {
        Some(b) => universality::threshold_locate_in(level, &s, b)?,
        None => universality::threshold_locate(level, &s)?,
    };
    Ok(Report {
        command: "threshold",
        config: json!({
            "level": level, "grid_n": s.grid_n, "map_scale": s.map_scale,
            "bracket": bracket.map(|(a, b)| vec![a, b]), "threshold_tolerance": s.threshold_tolerance,
            "unit_scale": u.0,
        }),
        columns: vec!["level", "ratio", "eps2", "level_N_energy", "probes"],
        rows: vec![vec![
            level.into(),
            t.ratio.into(),
            u.e(t.eps2).into(),
            u.e(t.level_n_energy).into(),
            t.trace.len().into(),
        ]],
        results: json!({
            "level": level,
            "ratio": t.ratio,
            "eps2": u.e(t.eps2),
            "level_N_energy": u.e(t.level_n_energy),
            "bracket": [u.e(t.bracket.0), u.e(t.bracket.1)],
            "trace": t.trace.iter().map(|(e, present)| json!({"eps2": u.e(*e), "bound": present})).collect::<Vec<_>>(),
        }),
    })
}

fn feshbach(abg: f64, b0: f64, delta_b: f64, fields: &[f64]) -> Result<Report, CliError> {
    let p = FeshbachParams::new(abg, b0, delta_b)?;
    let values = fields
        .iter()
        .map(|&b| feshbach_a(b, &p))
        .collect::<stm_core::Result<Vec<_>>>()?;
    Ok(Report {
        command: "feshbach",
        config: json!({"abg": abg, "b0": b0, "delta_b": delta_b, "b": fields}),
        columns: vec!["b", "a"],
        rows: fields
            .iter()
            .zip(&values)
            .map(|(&b, &a)| vec![b.into(), a.into()])
            .collect(),
        results: json!({"b": fields, "a": values}),
    })
}

/// `(name, passed)` for each closed-form check.
pub fn selftest_checks() -> Vec<(&'static str, bool)> {
    let cfg = |e: f64| ChannelConfig::new(e).expect("valid eps2");
    let two_pi2 = 2.0 * PI * PI;
    let identity = MomentumGrid::new(32, 1.0)
        .and_then(|g| {
            BoundStateProblem::with_window(
                cfg(4.0),
                g,
                bound_state::EnergyWindow {
                    deepest: -8.0,
                    shallowest: -5.0,
                },
            )
        })
        .and_then(|p| bound_state::det_at(-1.0, &p));
    let fb = FeshbachParams::new(1.0, 100.0, 10.0).expect("finite");
    vec![
        (
            "tau_inverse vanishes on the dimer pole",
            [1e-4, 1.0, 1e4]
                .iter()
                .all(|&e| tau_inverse(-e, &cfg(e)).ok() == Some(0.0)),
        ),
        (
            "tau at unitarity",
            tau(-1.0, &cfg(0.0)).is_ok_and(|t| (t + 1.0 / two_pi2).abs() < 1e-16),
        ),
        (
            "tau pole is reported",
            matches!(tau(-1.0, &cfg(1.0)), Err(Error::DimerPole { .. })),
        ),
        (
            "tau residue",
            tau_pole_residue(&cfg(4.0)).is_ok_and(|r| (r - 2.0 / (PI * PI)).abs() < 1e-16),
        ),
        (
            "non-negative energy rejected",
            tau_inverse(0.0, &cfg(1.0)).is_err(),
        ),
        (
            "feshbach zero crossing",
            feshbach_a(90.0, &fb).ok() == Some(0.0),
        ),
        (
            "feshbach pole is reported",
            matches!(feshbach_a(100.0, &fb), Err(Error::ResonancePole { .. })),
        ),
        (
            "gauss-legendre weights sum to two",
            gauss_legendre(37).is_ok_and(|(_, w)| (w.iter().sum::<f64>() - 2.0).abs() < 1e-14),
        ),
        (
            "half-line map integrates a lorentzian",
            MomentumGrid::new(64, 1.0)
                .is_ok_and(|g| (g.integrate(|x| 1.0 / (1.0 + x * x)) - PI / 2.0).abs() < 1e-13),
        ),
        (
            "angular integral closed form",
            bound_state::angular_log(-2.0, 1.0, 1.0)
                .is_ok_and(|v| (v - (0.6f64).ln()).abs() < 1e-15),
        ),
        (
            "kernel vanishes at the subtraction point",
            identity.is_ok_and(|d| d.sign == 1.0 && d.log_magnitude == 0.0),
        ),
    ]
}

fn selftest() -> Result<Report, CliError> {
    let checks = selftest_checks();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let report = Report {
        command: "selftest",
        config: json!({}),
        columns: vec!["check", "passed"],
        rows: checks
            .iter()
            .map(|(n, p)| vec![Cell::Text((*n).into()), (*p).into()])
            .collect(),
        results: Value::Array(
            checks
                .iter()
                .map(|(n, p)| json!({"check": n, "passed": p}))
                .collect(),
        ),
    };
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(CliError::SelftestFailed(
            Box::new(report),
            failed.join("; "),
        ))
    }
}
