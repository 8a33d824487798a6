//! System configuration and the reception-space capacity.
//!
//! Units are fixed: lengths `D`/`R` in µm, radii in nm, times in seconds,
//! rates in 1/s. The capacity only depends on radius ratios, so the nm/µm
//! split never mixes.
//!
//! The canonical config format is a flat JSON object:
//!
//! ```json
//! {
//!   "D_um2_per_s": 100, "R_um": 10, "Q": 1e8, "dt_s": 1e-4,
//!   "mu_per_s": 1000, "Kplus": 0.5, "Nr": 400,
//!   "Rr_nm": 2, "Re_nm": 2.3, "Ra_nm": 0.01,
//!   "alpha": 0.3, "f": 0.2
//! }
//! ```
//!
//! Every key is required and unknown keys are rejected.

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Config keys, in canonical order.
pub const CONFIG_KEYS: [&str; 12] = [
    "D_um2_per_s",
    "R_um",
    "Q",
    "dt_s",
    "mu_per_s",
    "Kplus",
    "Nr",
    "Rr_nm",
    "Re_nm",
    "Ra_nm",
    "alpha",
    "f",
];

/// Relative distance to an integer under which the capacity ratio is
/// snapped to that integer before flooring.
pub const CAPACITY_TIE_TOLERANCE: f64 = 1e-9;

/// Physical and protocol constants of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Diffusion coefficient `D` (µm²/s).
    pub diffusion: f64,
    /// Transmitter–receiver distance `R` (µm).
    pub distance: f64,
    /// Molecules released per step, `Q`.
    pub release: f64,
    /// Step size `Δt` (s).
    pub step: f64,
    /// Unbinding rate `μ` (1/s).
    pub unbind_rate: f64,
    /// Ligand–receptor binding constant `K⁺`.
    pub binding_constant: f64,
    /// Receptor count `N_r`.
    pub receptors: u32,
    /// Receiver radius `R_r` (nm).
    pub receiver_radius: f64,
    /// Reception-space radius `R_e` (nm).
    pub reception_radius: f64,
    /// Molecule radius `R_a` (nm).
    pub molecule_radius: f64,
    /// Share of rejections caused by active receptors.
    pub alpha: f64,
    /// Target occupancy factor `f`.
    pub occupancy: f64,
}

impl SystemParams {
    /// The reference operating point: D = 100, R = 10, Q = 1e8, Δt = 1e-4,
    /// μ = 1000/s, K⁺ = 0.5, N_r = 400, radii 2 / 2.3 / 0.01 nm, with
    /// α = 0.3 and f = 0.2.
    pub fn reference() -> Self {
        SystemParams {
            diffusion: 100.0,
            distance: 10.0,
            release: 1e8,
            step: 1e-4,
            unbind_rate: 1000.0,
            binding_constant: 0.5,
            receptors: 400,
            receiver_radius: 2.0,
            reception_radius: 2.3,
            molecule_radius: 0.01,
            alpha: 0.3,
            occupancy: 0.2,
        }
    }

    /// Checks every field invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        positive("D_um2_per_s", self.diffusion)?;
        positive("R_um", self.distance)?;
        positive("Q", self.release)?;
        positive("dt_s", self.step)?;
        finite("mu_per_s", self.unbind_rate)?;
        if self.unbind_rate < 0.0 {
            return Err(Error::invalid("mu_per_s", "must be non-negative"));
        }
        positive("Kplus", self.binding_constant)?;
        if self.receptors < 1 {
            return Err(Error::invalid("Nr", "must be at least 1"));
        }
        positive("Rr_nm", self.receiver_radius)?;
        finite("Re_nm", self.reception_radius)?;
        if self.reception_radius <= self.receiver_radius {
            return Err(Error::invalid("Re_nm", "Re must exceed Rr"));
        }
        positive("Ra_nm", self.molecule_radius)?;
        finite("alpha", self.alpha)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", "alpha must lie in [0, 1]"));
        }
        finite("f", self.occupancy)?;
        if self.occupancy <= 0.0 {
            return Err(Error::invalid("f", "f must be positive"));
        }
        if self.occupancy >= 1.0 {
            return Err(Error::invalid("f", "f must lie strictly below 1"));
        }
        Ok(())
    }

    /// Returns `self` if valid.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Serializes to the canonical config object.
    pub fn to_json(&self) -> String {
        let mut map = Map::new();
        for key in CONFIG_KEYS {
            let value = match key {
                "Nr" => Value::from(self.receptors),
                _ => Value::from(self.field(key)),
            };
            map.insert(key.to_string(), value);
        }
        serde_json::to_string_pretty(&Value::Object(map)).expect("finite config values")
    }

    fn field(&self, key: &str) -> f64 {
        match key {
            "D_um2_per_s" => self.diffusion,
            "R_um" => self.distance,
            "Q" => self.release,
            "dt_s" => self.step,
            "mu_per_s" => self.unbind_rate,
            "Kplus" => self.binding_constant,
            "Nr" => f64::from(self.receptors),
            "Rr_nm" => self.receiver_radius,
            "Re_nm" => self.reception_radius,
            "Ra_nm" => self.molecule_radius,
            "alpha" => self.alpha,
            "f" => self.occupancy,
            _ => unreachable!("unknown key {key}"),
        }
    }
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite"))
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be positive"))
    }
}

/// Parses and validates a config object.
pub fn load_params(source: &str) -> Result<SystemParams> {
    let value: Value = serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(Error::Parse("config must be a JSON object".into()));
    };
    if let Some(unknown) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Error::Parse(format!("unknown config key `{unknown}`")));
    }

    let num = |key: &'static str| -> Result<f64> {
        match map.get(key) {
            None => Err(Error::MissingKey(key)),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::invalid(key, format!("expected a number, got {v}"))),
        }
    };
    let receptors = match map.get("Nr") {
        None => return Err(Error::MissingKey("Nr")),
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| Error::invalid("Nr", format!("expected a positive integer, got {v}")))?,
    };

    SystemParams {
        diffusion: num("D_um2_per_s")?,
        distance: num("R_um")?,
        release: num("Q")?,
        step: num("dt_s")?,
        unbind_rate: num("mu_per_s")?,
        binding_constant: num("Kplus")?,
        receptors,
        receiver_radius: num("Rr_nm")?,
        reception_radius: num("Re_nm")?,
        molecule_radius: num("Ra_nm")?,
        alpha: num("alpha")?,
        occupancy: num("f")?,
    }
    .validated()
}

/// Maximum number of molecules in the reception space, `N_m`.
pub fn capacity(params: &SystemParams) -> Result<u64> {
    capacity_from_radii(
        params.reception_radius,
        params.receiver_radius,
        params.molecule_radius,
    )
}

/// `⌊(Re³ − Rr³)/Ra³⌋`, snapping ratios within [`CAPACITY_TIE_TOLERANCE`]
/// of an integer onto it first.
pub fn capacity_from_radii(reception: f64, receiver: f64, molecule: f64) -> Result<u64> {
    if !(molecule > 0.0 && receiver > 0.0 && reception > receiver) {
        return Err(Error::domain(
            "capacity",
            format!("need Re > Rr > 0 and Ra > 0, got Re={reception} Rr={receiver} Ra={molecule}"),
        ));
    }
    let (e, r) = (reception / molecule, receiver / molecule);
    // difference of cubes, factored to avoid cancellation between e³ and r³
    let ratio = (e - r) * (e * e + e * r + r * r);
    if !ratio.is_finite() || ratio >= u64::MAX as f64 {
        return Err(Error::domain("capacity", format!("ratio {ratio} out of range")));
    }
    let nearest = ratio.round();
    let snapped = if (ratio - nearest).abs() <= CAPACITY_TIE_TOLERANCE * nearest.max(1.0) {
        nearest
    } else {
        ratio.floor()
    };
    if snapped < 1.0 {
        return Err(Error::Capacity { ratio });
    }
    Ok(snapped as u64)
}
