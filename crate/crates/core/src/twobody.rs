//! Renormalized zero-range two-body sector.
//!
//! Units: ħ = 1, all masses 1, momenta in units of the three-body
//! subtraction scale μ₍₃₎ and energies in units of μ₍₃₎². The pair reduced
//! mass is 1/2, so the `(2M)^{3/2}` factor of the dimer propagator is 1 and
//!
//! ```text
//! τ⁻¹(E) = 2π² (√ε₂ − √|E|),   E < 0.
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI_SQUARED: f64 = 2.0 * PI * PI;

/// `|τ⁻¹|` below this is treated as sitting on the dimer pole.
pub const POLE_GUARD: f64 = 1e-12;

/// Two-body input of a run: the dimer binding energy ε₂ ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    eps2: f64,
}

impl ChannelConfig {
    pub fn new(eps2: f64) -> Result<Self> {
        if !(eps2 >= 0.0 && eps2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "eps2 must be finite and non-negative, got {eps2}"
            )));
        }
        Ok(Self { eps2 })
    }

    /// Zero two-body binding: infinite scattering length.
    pub fn unitarity() -> Self {
        Self { eps2: 0.0 }
    }

    pub fn eps2(&self) -> f64 {
        self.eps2
    }
}

/// Inverse dimer propagator on the physical sheet below breakup.
pub fn tau_inverse(energy: f64, cfg: &ChannelConfig) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(Error::UnsupportedRegion { energy });
    }
    Ok(TWO_PI_SQUARED * (cfg.eps2.sqrt() - (-energy).sqrt()))
}

/// Dimer propagator `τ(E)`; errors on the pole at `E = −ε₂`.
pub fn tau(energy: f64, cfg: &ChannelConfig) -> Result<f64> {
    let inv = tau_inverse(energy, cfg)?;
    if inv.abs() < POLE_GUARD {
        return Err(Error::DimerPole {
            energy,
            distance: energy + cfg.eps2,
        });
    }
    Ok(1.0 / inv)
}

/// Residue `lim (E + ε₂) τ(E)` at the dimer pole, equal to `√ε₂ / π²`.
pub fn tau_pole_residue(cfg: &ChannelConfig) -> Result<f64> {
    if cfg.eps2 == 0.0 {
        return Err(Error::NoBoundState);
    }
    Ok(cfg.eps2.sqrt() / (PI * PI))
}

/// Parameters of an isolated magnetic Feshbach resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeshbachParams {
    /// Background scattering length.
    pub a_bg: f64,
    /// Resonance position.
    pub b0: f64,
    /// Width parameter ΔB.
    pub delta_b: f64,
}

impl FeshbachParams {
    pub fn new(a_bg: f64, b0: f64, delta_b: f64) -> Result<Self> {
        if !(a_bg.is_finite() && b0.is_finite() && delta_b.is_finite()) {
            return Err(Error::InvalidArgument(
                "Feshbach parameters must be finite".into(),
            ));
        }
        Ok(Self { a_bg, b0, delta_b })
    }
}

/// Scattering length `a(B) = a_bg (1 + ΔB / (B − B₀))`.
pub fn feshbach_a(field: f64, p: &FeshbachParams) -> Result<f64> {
    if !field.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "field must be finite, got {field}"
        )));
    }
    let detuning = field - p.b0;
    if detuning == 0.0 {
        return Err(Error::ResonancePole { field });
    }
    Ok(p.a_bg * (1.0 + p.delta_b / detuning))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(e: f64) -> ChannelConfig {
        ChannelConfig::new(e).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ChannelConfig::new(-1e-3).is_err());
        assert!(ChannelConfig::new(f64::INFINITY).is_err());
        assert!(ChannelConfig::new(f64::NAN).is_err());
        assert_eq!(ChannelConfig::unitarity().eps2(), 0.0);
    }

    #[test]
    fn tau_inverse_examples() {
        for e in [1e-4, 1.0, 1e4] {
            assert_eq!(tau_inverse(-e, &cfg(e)).unwrap(), 0.0);
        }
        assert_eq!(tau_inverse(-1.0, &cfg(0.0)).unwrap(), -TWO_PI_SQUARED);
        assert_eq!(tau_inverse(-1.0, &cfg(4.0)).unwrap(), TWO_PI_SQUARED);
    }

    #[test]
    fn non_negative_energy_is_unsupported() {
        assert_eq!(
            tau_inverse(0.0, &cfg(1.0)),
            Err(Error::UnsupportedRegion { energy: 0.0 })
        );
        assert!(tau(0.5, &cfg(1.0)).is_err());
    }

    #[test]
    fn tau_examples() {
        assert!((tau(-1.0, &cfg(0.0)).unwrap() + 1.0 / TWO_PI_SQUARED).abs() < 1e-18);
        assert!((tau(-1.0, &cfg(4.0)).unwrap() - 1.0 / TWO_PI_SQUARED).abs() < 1e-18);
        match tau(-1.0, &cfg(1.0)) {
            Err(Error::DimerPole { energy, distance }) => {
                assert_eq!(energy, -1.0);
                assert_eq!(distance, 0.0);
            }
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn sign_structure() {
        let c = cfg(0.3);
        assert!(tau_inverse(-0.1, &c).unwrap() > 0.0);
        assert!(tau_inverse(-0.5, &c).unwrap() < 0.0);
    }

    #[test]
    fn residue_examples() {
        assert!((tau_pole_residue(&cfg(1.0)).unwrap() - 1.0 / (PI * PI)).abs() < 1e-16);
        assert!((tau_pole_residue(&cfg(4.0)).unwrap() - 2.0 / (PI * PI)).abs() < 1e-16);
        assert_eq!(tau_pole_residue(&cfg(0.0)), Err(Error::NoBoundState));
    }

    #[test]
    fn feshbach_examples() {
        let flat = FeshbachParams::new(2.5, 10.0, 0.0).unwrap();
        for b in [-3.0, 9.0, 11.0, 1e6] {
            assert_eq!(feshbach_a(b, &flat).unwrap(), 2.5);
        }
        let p = FeshbachParams::new(1.0, 100.0, 10.0).unwrap();
        assert_eq!(feshbach_a(90.0, &p).unwrap(), 0.0);
        assert!((feshbach_a(1e12, &p).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(
            feshbach_a(100.0, &p),
            Err(Error::ResonancePole { field: 100.0 })
        );
        let above = feshbach_a(100.5, &p).unwrap() - p.a_bg;
        let below = feshbach_a(99.5, &p).unwrap() - p.a_bg;
        assert!(above * below < 0.0);
    }
}
