//! Allowable release interval `[Q_min, Q_max]`.
//!
//! The lower bound is the release rate at which the steady-state occupancy
//! factor reaches `f` once the self-consistent rejection rate is accounted
//! for. It only exists for `f < f* = K⁺/(1 + K⁺)`. The upper bound is the
//! release rate at which the enter rate equals the reception capacity.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::params::{self, SystemParams};
use crate::queue;

/// Fraction of receptors activated at concentration `c`,
/// `K⁺C/(K⁺C + μ + γ)`.
pub fn occupancy_factor(c: f64, k_plus: f64, mu: f64, gamma: f64) -> Result<f64> {
    if !(c >= 0.0 && k_plus >= 0.0 && mu >= 0.0 && gamma >= 0.0) {
        return Err(Error::domain("occupancy_factor", "inputs must be non-negative"));
    }
    if c.is_infinite() {
        return Ok(1.0);
    }
    let bound = k_plus * c;
    let denom = bound + mu + gamma;
    if denom == 0.0 {
        return Err(Error::domain("occupancy_factor", "K+C + mu + gamma = 0"));
    }
    Ok(bound / denom)
}

/// Concentration needed for occupancy `f`: `f(μ + γ)/(K⁺(1 − f))`.
pub fn min_effective_concentration(f: f64, k_plus: f64, mu: f64, gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::domain("min_effective_concentration", format!("f must lie in [0, 1), got {f}")));
    }
    if !(k_plus > 0.0) {
        return Err(Error::domain("min_effective_concentration", "K+ must be positive"));
    }
    Ok(f * (mu + gamma) / (k_plus * (1.0 - f)))
}

/// Feasibility boundary `K⁺/(1 + K⁺)` of the lower bound.
pub fn f_star(k_plus: f64) -> f64 {
    k_plus / (1.0 + k_plus)
}

/// Lower bound on the release rate, `Q_min/Δt` (molecules/s):
/// `4πDRμ f(1 − f) / (K⁺(1 − f)² − f²/K⁺)`.
pub fn q_min_rate(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let (f, k) = (params.occupancy, params.binding_constant);
    let star = f_star(k);
    if f >= star {
        return Err(Error::Infeasible { f, f_star: star });
    }
    // K(1−f)² − f²/K = (K(1−f) − f)(K(1−f) + f)/K
    let open = 1.0 - f;
    let denom = (k * open - f) * (k * open + f) / k;
    let rate = geometry(params) * params.unbind_rate * f * open / denom;
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Numerical(format!("Q_min/dt = {rate} at f = {f}, f* = {star}")));
    }
    Ok(rate)
}

/// Lower bound with rejection ignored (`γ = 0`), `4πDR fμ/(K⁺(1 − f))`.
pub fn baseline_q_min_rate(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let f = params.occupancy;
    Ok(geometry(params) * f * params.unbind_rate / (params.binding_constant * (1.0 - f)))
}

/// Upper bound on the release rate, `Q_max/Δt = 4πDR·N_m`.
pub fn q_max_rate(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    Ok(geometry(params) * params::capacity(params)? as f64)
}

fn geometry(params: &SystemParams) -> f64 {
    4.0 * PI * params.diffusion * params.distance
}

/// Both bounds of the release interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoseBounds {
    /// `Q_min/Δt`; `None` when `f ≥ f*`.
    pub q_min_rate: Option<f64>,
    pub q_max_rate: f64,
    /// `Q_min` per step.
    pub q_min: Option<f64>,
    /// `Q_max` per step.
    pub q_max: f64,
    pub feasible: bool,
    pub f_star: f64,
}

/// Bounds for `params`; an infeasible `f` is reported, not raised.
pub fn dose_bounds(params: &SystemParams) -> Result<DoseBounds> {
    let q_max_rate = q_max_rate(params)?;
    let q_min_rate = match q_min_rate(params) {
        Ok(v) => Some(v),
        Err(Error::Infeasible { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(DoseBounds {
        q_min_rate,
        q_max_rate,
        q_min: q_min_rate.map(|r| r * params.step),
        q_max: q_max_rate * params.step,
        feasible: q_min_rate.is_some(),
        f_star: f_star(params.binding_constant),
    })
}

/// Where a release amount falls relative to the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoseVerdict {
    Below,
    Within,
    Above,
}

impl fmt::Display for DoseVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DoseVerdict::Below => "below: does not affect the target",
            DoseVerdict::Within => "within",
            DoseVerdict::Above => "above: would cause side effects",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoseAssessment {
    pub bounds: DoseBounds,
    /// The assessed release per step, `Q`.
    pub release: f64,
    pub verdict: DoseVerdict,
}

/// Places `params.Q` against `[Q_min, Q_max]`.
///
/// Fails when `f` is infeasible or when the interval is empty.
pub fn dose_interval(params: &SystemParams) -> Result<DoseAssessment> {
    let bounds = dose_bounds(params)?;
    let Some(q_min) = bounds.q_min else {
        return Err(Error::Infeasible {
            f: params.occupancy,
            f_star: bounds.f_star,
        });
    };
    if q_min > bounds.q_max {
        return Err(Error::EmptyInterval { q_min, q_max: bounds.q_max });
    }
    let q = params.release;
    let verdict = if q < q_min {
        DoseVerdict::Below
    } else if q > bounds.q_max {
        DoseVerdict::Above
    } else {
        DoseVerdict::Within
    };
    Ok(DoseAssessment {
        bounds,
        release: q,
        verdict,
    })
}

/// Occupancy factor reached when releasing at `release_rate` (molecules/s),
/// with the concentration taken as the enter rate and `γ` solved from it.
pub fn achieved_occupancy(release_rate: f64, params: &SystemParams) -> Result<f64> {
    let lambda = crate::diffusion::enter_rate_for_release_rate(release_rate, params);
    let gamma = queue::rejection_rate(lambda, params.unbind_rate);
    occupancy_factor(lambda, params.binding_constant, params.unbind_rate, gamma)
}
