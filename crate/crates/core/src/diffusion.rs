//! Free 3-D diffusion from a point transmitter.
//!
//! The transmitter emits a constant-amplitude pulse train (`Q` molecules per
//! symbol of length `T_s`). Summing the heat-kernel response over the pulses
//! of a continuous release gives the time-dependent concentration, whose
//! `t → ∞` limit at the receiver distance is the enter rate `λ`.
//!
//! Argument order throughout is time first, then distance.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Pulse train of a continuously transmitting BCSK source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionProfile {
    /// Molecules per pulse.
    pub amplitude: f64,
    /// Pulse duration `T_s` (s).
    pub symbol_time: f64,
}

impl TransmissionProfile {
    pub fn new(amplitude: f64, symbol_time: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid("Q", "pulse amplitude must be positive"));
        }
        if !(symbol_time > 0.0 && symbol_time.is_finite()) {
            return Err(Error::invalid("Ts", "pulse duration must be positive"));
        }
        Ok(TransmissionProfile {
            amplitude,
            symbol_time,
        })
    }
}

/// One evaluation of `c(r, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationSample {
    /// Distance from the transmitter (µm).
    pub distance: f64,
    /// Time since release began (s).
    pub time: f64,
    pub value: f64,
}

/// Emitted amplitude at time `t`: `Q` strictly inside a symbol interval,
/// zero on the interval boundaries `j·T_s`.
pub fn transmission_profile(t: f64, profile: &TransmissionProfile) -> f64 {
    if t <= 0.0 || (t / profile.symbol_time).fract() == 0.0 {
        0.0
    } else {
        profile.amplitude
    }
}

/// Heat-kernel response `h(t, r)` to an instantaneous release of `Q`
/// molecules.
pub fn impulse_response(t: f64, r: f64, params: &SystemParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("impulse_response", format!("t must be positive, got {t}")));
    }
    if !(r >= 0.0) {
        return Err(Error::domain("impulse_response", format!("r must be non-negative, got {r}")));
    }
    let spread = 4.0 * params.diffusion * t;
    Ok(params.release / (PI * spread).powf(1.5) * (-r * r / spread).exp())
}

/// Concentration at distance `r` after `t` seconds of continuous release.
pub fn concentration(r: f64, t: f64, params: &SystemParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("concentration", format!("r must be positive, got {r}")));
    }
    if !(t > 0.0) {
        return Err(Error::domain("concentration", format!("t must be positive, got {t}")));
    }
    let arg = r / (4.0 * params.diffusion * t).sqrt();
    Ok(steady_concentration_at(r, params) * erfc(arg))
}

/// [`concentration`] packaged with its coordinates.
pub fn sample(r: f64, t: f64, params: &SystemParams) -> Result<ConcentrationSample> {
    Ok(ConcentrationSample {
        distance: r,
        time: t,
        value: concentration(r, t, params)?,
    })
}

/// `t → ∞` limit of [`concentration`], `Q/(4πDrΔt)`.
pub fn steady_concentration_at(r: f64, params: &SystemParams) -> f64 {
    params.release / (4.0 * PI * params.diffusion * r * params.step)
}

/// Complementary error function (libm, sub-ulp accurate).
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Enter rate `λ = Q/(4πDRΔt)` of molecules into the reception space.
pub fn enter_rate(params: &SystemParams) -> f64 {
    steady_concentration_at(params.distance, params)
}

/// Enter rate for a release rate `Q/Δt` (molecules/s), other parameters
/// taken from `params`.
pub fn enter_rate_for_release_rate(release_rate: f64, params: &SystemParams) -> f64 {
    release_rate / (4.0 * PI * params.diffusion * params.distance)
}
