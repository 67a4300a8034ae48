//! Universal scaling of consecutive Efimov levels and the threshold at
//! which an excited level meets the atom–dimer cut.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound_state::{
    det_at, find_levels, BoundStateProblem, EfimovSpectrum, EnergyWindow, CUT_MARGIN,
    DEFAULT_LEVEL_TOLERANCE, DEFAULT_MIN_BINDING, SUBTRACTION_ENERGY,
};
use crate::error::{Error, Result};
use crate::quadrature::MomentumGrid;
use crate::twobody::ChannelConfig;

/// Scaling exponent for three identical bosons.
pub const EFIMOV_S: f64 = 1.006;

/// Threshold value `ε₂/ε₃⁽ᴺ⁾` at which level `N+1` reaches the cut.
pub const THRESHOLD_RATIO: f64 = 0.145;

/// `e^(2π/s)`: asymptotic ratio of consecutive binding energies.
pub fn efimov_ratio() -> f64 {
    (2.0 * std::f64::consts::PI / EFIMOV_S).exp()
}

/// `|ε₃⁽ᴺ⁾/ε₃⁽ᴺ⁺¹⁾ − e^(2π/s)|` for each ratio of a spectrum.
pub fn ratio_deviations(spectrum: &EfimovSpectrum) -> Vec<f64> {
    let target = efimov_ratio();
    spectrum.ratios.iter().map(|r| (r - target).abs()).collect()
}

/// Grid and search parameters shared by every solve of a scaling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub grid_n: usize,
    pub map_scale: f64,
    /// Shallowest binding searched at unitarity.
    pub min_binding: f64,
    /// Relative bisection tolerance on level energies.
    pub level_tolerance: f64,
    /// Relative bisection tolerance on ε₂ in the threshold search.
    pub threshold_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            grid_n: 200,
            map_scale: 0.1,
            min_binding: DEFAULT_MIN_BINDING,
            level_tolerance: DEFAULT_LEVEL_TOLERANCE,
            threshold_tolerance: 1e-7,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        MomentumGrid::new(self.grid_n, self.map_scale)?;
        if !(self.min_binding > 0.0 && self.min_binding < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "min_binding must lie in (0, 1), got {}",
                self.min_binding
            )));
        }
        for (name, t) in [
            ("level_tolerance", self.level_tolerance),
            ("threshold_tolerance", self.threshold_tolerance),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in (0, 1), got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::new(self.grid_n, self.map_scale)
    }

    /// Bound-state problem at `eps2` with the window running from the
    /// subtraction point to just below the cut.
    pub fn problem(&self, eps2: f64) -> Result<BoundStateProblem> {
        let cfg = ChannelConfig::new(eps2)?;
        let shallowest = -(eps2 * (1.0 + CUT_MARGIN)).max(self.min_binding);
        let window = EnergyWindow {
            deepest: SUBTRACTION_ENERGY,
            shallowest,
        };
        BoundStateProblem::with_window(cfg, self.grid()?, window)?
            .with_tolerance(self.level_tolerance)
    }

    pub fn spectrum(&self, eps2: f64, max_levels: usize) -> Result<EfimovSpectrum> {
        find_levels(&self.problem(eps2)?, max_levels)
    }
}

/// One point of the scaling plot for levels `N` and `N+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub eps2: f64,
    pub level_n_energy: f64,
    pub level_n1_energy: f64,
    /// `√(ε₂/ε₃⁽ᴺ⁾)`.
    pub x: f64,
    /// `√(ε₃⁽ᴺ⁺¹⁾/ε₃⁽ᴺ⁾)`.
    pub y: f64,
    pub level: usize,
    pub grid_n: usize,
    pub map_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub level: usize,
    /// Sorted by `x`.
    pub points: Vec<ScalingPoint>,
    /// ε₂ values without both levels, with the reason.
    pub skipped: Vec<(f64, String)>,
}

impl ScalingCurve {
    /// Linear interpolation of `y` at `x` inside the sampled range.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        let pts = &self.points;
        let i = pts.partition_point(|p| p.x < x);
        if i < pts.len() && pts[i].x == x {
            return Some(pts[i].y);
        }
        if i == 0 || i == pts.len() {
            return None;
        }
        let (a, b) = (pts[i - 1], pts[i]);
        Some(a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x))
    }
}

/// Runs a bound-state solve per ε₂ and collects the `(x, y)` pairs.
pub fn scaling_curve(
    eps2s: &[f64],
    level: usize,
    settings: &SolverSettings,
) -> Result<ScalingCurve> {
    settings.validate()?;
    if let Some(bad) = eps2s.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "eps2 must be non-negative, got {bad}"
        )));
    }
    let outcomes = eps2s
        .par_iter()
        .map(
            |&eps2| -> Result<std::result::Result<ScalingPoint, (f64, String)>> {
                let problem = match settings.problem(eps2) {
                    Ok(p) => p,
                    Err(Error::InvalidArgument(msg)) => return Ok(Err((eps2, msg))),
                    Err(e) => return Err(e),
                };
                let spectrum = find_levels(&problem, level + 2)?;
                if spectrum.levels.len() < level + 2 {
                    let reason = format!(
                        "found {} level(s), need {}",
                        spectrum.levels.len(),
                        level + 2
                    );
                    log::info!("eps2 = {eps2}: {reason}");
                    return Ok(Err((eps2, reason)));
                }
                let (en, en1) = (spectrum.levels[level], spectrum.levels[level + 1]);
                Ok(Ok(ScalingPoint {
                    eps2,
                    level_n_energy: en,
                    level_n1_energy: en1,
                    x: (eps2 / en).sqrt(),
                    y: (en1 / en).sqrt(),
                    level,
                    grid_n: settings.grid_n,
                    map_scale: settings.map_scale,
                }))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(p) => points.push(p),
            Err(s) => skipped.push(s),
        }
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.eps2.total_cmp(&b.eps2)));
    Ok(ScalingCurve {
        level,
        points,
        skipped,
    })
}

/// Outcome of the threshold search for level `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub level: usize,
    /// `ε₂/ε₃⁽ᴺ⁾` at the disappearance of level `N+1`.
    pub ratio: f64,
    pub eps2: f64,
    pub level_n_energy: f64,
    pub bracket: (f64, f64),
    /// `(ε₂, level N+1 present)` for every probe, in order.
    pub trace: Vec<(f64, bool)>,
}

/// Whether level `N+1` lies deeper than `ε₂(1 + CUT_MARGIN)`.
///
/// The determinant is exactly one at the subtraction point and changes sign
/// once per level, so its sign just below the cut counts levels mod 2.
/// Inside a valid bracket at most `N+2` levels exist.
fn excited_level_present(eps2: f64, level: usize, settings: &SolverSettings) -> Result<bool> {
    let problem = settings.problem(eps2)?;
    let sign = det_at(problem.window().shallowest, &problem)?.sign;
    if sign == 0.0 {
        return Ok(true);
    }
    let expected = if level.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign == expected)
}

fn trace_text(trace: &[(f64, bool)]) -> String {
    trace
        .iter()
        .map(|(e, present)| format!("{e:.6e}:{}", if *present { "bound" } else { "gone" }))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Default bracket: level `N+1` exists at `ε₂ = ε₃⁽ᴺ⁺¹⁾(0)` and is gone by
/// `ε₂ = ε₃⁽ᴺ⁾(0)/2`.
pub fn default_bracket(level: usize, settings: &SolverSettings) -> Result<(f64, f64)> {
    settings.validate()?;
    let spectrum = settings.spectrum(0.0, level + 2)?;
    if spectrum.levels.len() < level + 2 {
        return Err(Error::Threshold {
            trace: format!(
                "unitarity spectrum holds {} level(s), need {}",
                spectrum.levels.len(),
                level + 2
            ),
        });
    }
    Ok((spectrum.levels[level + 1], 0.5 * spectrum.levels[level]))
}

/// Locates `ε₂/ε₃⁽ᴺ⁾` at which level `N+1` meets the cut.
pub fn threshold_locate(level: usize, settings: &SolverSettings) -> Result<Threshold> {
    let bracket = default_bracket(level, settings)?;
    threshold_locate_in(level, settings, bracket)
}

/// As [`threshold_locate`] with an explicit ε₂ bracket `(present, gone)`.
pub fn threshold_locate_in(
    level: usize,
    settings: &SolverSettings,
    bracket: (f64, f64),
) -> Result<Threshold> {
    settings.validate()?;
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && lo < hi && hi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold bracket ({lo}, {hi}) must satisfy 0 < lo < hi < 1"
        )));
    }
    let mut trace = Vec::new();
    for e in [lo, hi] {
        trace.push((e, excited_level_present(e, level, settings)?));
    }
    if !(trace[0].1 && !trace[1].1) {
        return Err(Error::Threshold {
            trace: trace_text(&trace),
        });
    }
    while hi - lo > settings.threshold_tolerance * hi {
        let mid = (lo * hi).sqrt();
        let present = excited_level_present(mid, level, settings)?;
        trace.push((mid, present));
        if present {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps2 = (lo * hi).sqrt();
    let spectrum = settings.spectrum(eps2, level + 1)?;
    let Some(&level_n_energy) = spectrum.levels.get(level) else {
        return Err(Error::Threshold {
            trace: format!(
                "level {level} missing at eps2 = {eps2}; {}",
                trace_text(&trace)
            ),
        });
    };
    Ok(Threshold {
        level,
        ratio: eps2 / level_n_energy,
        eps2,
        level_n_energy,
        bracket,
        trace,
    })
}
