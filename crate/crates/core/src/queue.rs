//! Queueing model of the reception space.
//!
//! Molecules arrive at constant rate `λ` and leave either by unbinding
//! (`μ_i`) or by rejection (`γ_i`), giving a finite birth-death chain on
//! `0..=N_m`. The single-receptor, single-slot case (M/M/1/1) closes on
//! itself: balancing enter and exit flow yields `γ² + μγ − λ² = 0`.

use crate::diffusion;
use crate::error::{Error, Result};
use crate::params::{self, SystemParams};

/// Chains with more states than this are refused unless the caller raises
/// the limit through [`ChainOptions`].
pub const DEFAULT_MAX_STATES: u64 = 10_000_000;

/// Rejection rate `γ`, the non-negative root of `γ² + μγ − λ² = 0`.
///
/// Evaluated as `2λ²/(√(μ² + 4λ²) + μ)`, which has no cancellation when
/// `μ ≫ λ`.
pub fn rejection_rate(lambda: f64, mu: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let root = mu.hypot(2.0 * lambda);
    2.0 * lambda * (lambda / (root + mu))
}

/// M/M/1/1 rejection probability `(γ + λ)/(μ + γ + λ)`.
pub fn rejection_probability(lambda: f64, mu: f64, gamma: f64) -> Result<f64> {
    check_rates("rejection_probability", lambda, mu, gamma)?;
    Ok((gamma + lambda) / (mu + gamma + lambda))
}

/// M/M/1/1 idle probability `(μ + γ)/(μ + γ + λ)`.
pub fn p0_single(lambda: f64, mu: f64, gamma: f64) -> Result<f64> {
    check_rates("p0_single", lambda, mu, gamma)?;
    Ok((mu + gamma) / (mu + gamma + lambda))
}

fn check_rates(op: &'static str, lambda: f64, mu: f64, gamma: f64) -> Result<()> {
    for (name, v) in [("lambda", lambda), ("mu", mu), ("gamma", gamma)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(op, format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    if mu + gamma + lambda == 0.0 {
        return Err(Error::domain(op, "mu + gamma + lambda = 0"));
    }
    Ok(())
}

/// Rejection rate of the receptor-only model, `γ′ = λ²/(μ + λ)`.
pub fn gamma_prime(lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda >= 0.0 && mu >= 0.0) {
        return Err(Error::domain("gamma_prime", "rates must be non-negative"));
    }
    if lambda + mu == 0.0 {
        return Err(Error::domain("gamma_prime", "mu + lambda = 0"));
    }
    Ok(lambda * (lambda / (mu + lambda)))
}

/// Splits `γ` into the active-receptor part `αγ` and the remainder.
pub fn split_gamma(gamma: f64, alpha: f64) -> (f64, f64) {
    let active = alpha * gamma;
    (active, gamma - active)
}

/// Triangular number `n(n+1)/2` as f64 (exact up to n ≈ 9.4e7).
fn triangular(n: u64) -> f64 {
    (u128::from(n) * (u128::from(n) + 1) / 2) as f64
}

/// State-dependent unbinding and rejection rates `(μ_i, γ_i)` for
/// `N_r` receptors, in closed form:
///
/// * `i ≤ N_r`: `μ_i = i(i+1)/2 · μ`, `γ_i = i(i+1)/2 · γ`
/// * `i > N_r`: `μ_i = N_r(N_r+1)/2 · μ`, `γ_i = ((N_r+1)i − N_r(N_r+1)/2) · γ`
pub fn state_rates(i: u64, receptors: u64, mu: f64, gamma: f64) -> Result<(f64, f64)> {
    if i == 0 {
        return Err(Error::StateOutOfRange { index: 0, max: u64::MAX });
    }
    if receptors == 0 {
        return Err(Error::invalid("Nr", "must be at least 1"));
    }
    if i <= receptors {
        let t = triangular(i);
        Ok((t * mu, t * gamma))
    } else {
        let plateau = triangular(receptors);
        let slope = (u128::from(receptors) + 1) * u128::from(i);
        let g = (slope - (u128::from(receptors) * (u128::from(receptors) + 1) / 2)) as f64;
        Ok((plateau * mu, g * gamma))
    }
}

/// Per-state death rates of a chain.
#[derive(Debug, Clone, PartialEq)]
pub enum DeathRates {
    /// Receptor model, evaluated per state on demand.
    Receptors { receptors: u64, mu: f64, gamma: f64 },
    /// Explicit `(μ_i, γ_i)` for `i = 1..=N_m`, stored at index `i − 1`.
    Table { mu: Vec<f64>, gamma: Vec<f64> },
}

/// A finite birth-death chain on states `0..=capacity`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    capacity: u64,
    lambda: f64,
    deaths: DeathRates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    /// Replaces `N_m` from the radii when set.
    pub capacity: Option<u64>,
    /// Replaces `N_r` from the params when set.
    pub receptors: Option<u64>,
    /// Replaces the enter rate from the diffusion model when set.
    pub lambda: Option<f64>,
    pub max_states: u64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            capacity: None,
            receptors: None,
            lambda: None,
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

impl ChainSpec {
    /// Receptor-model chain with `γ` derived from `(λ, μ)`.
    pub fn receptor(lambda: f64, mu: f64, receptors: u64, capacity: u64) -> Result<Self> {
        Self::receptor_with_limit(lambda, mu, receptors, capacity, DEFAULT_MAX_STATES)
    }

    pub fn receptor_with_limit(
        lambda: f64,
        mu: f64,
        receptors: u64,
        capacity: u64,
        max_states: u64,
    ) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain("build_chain", format!("lambda must be finite and non-negative, got {lambda}")));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::domain("build_chain", format!("mu must be finite and non-negative, got {mu}")));
        }
        if receptors == 0 {
            return Err(Error::invalid("Nr", "must be at least 1"));
        }
        check_size(capacity, max_states)?;
        let gamma = rejection_rate(lambda, mu);
        if mu == 0.0 && gamma == 0.0 {
            return Err(Error::AbsorbingChain { state: 1 });
        }
        Ok(ChainSpec {
            capacity,
            lambda,
            deaths: DeathRates::Receptors { receptors, mu, gamma },
        })
    }

    /// Chain with explicit per-state rates; `mu[i-1]`, `gamma[i-1]` belong to
    /// state `i`.
    pub fn from_rates(lambda: f64, mu: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if mu.len() != gamma.len() {
            return Err(Error::domain("from_rates", "mu and gamma tables differ in length"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain("from_rates", format!("lambda must be finite and non-negative, got {lambda}")));
        }
        let capacity = mu.len() as u64;
        check_size(capacity, DEFAULT_MAX_STATES)?;
        for (k, (&m, &g)) in mu.iter().zip(&gamma).enumerate() {
            if !(m >= 0.0 && g >= 0.0 && m.is_finite() && g.is_finite()) {
                return Err(Error::domain("from_rates", format!("state {} has invalid rates ({m}, {g})", k + 1)));
            }
            if m + g == 0.0 {
                return Err(Error::AbsorbingChain { state: k + 1 });
            }
        }
        Ok(ChainSpec {
            capacity,
            lambda,
            deaths: DeathRates::Table { mu, gamma },
        })
    }

    /// `N_m`, the highest state.
    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn state_count(&self) -> usize {
        self.capacity as usize + 1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn deaths(&self) -> &DeathRates {
        &self.deaths
    }

    /// Base `(μ, γ)` of a receptor-model chain.
    pub fn base_rates(&self) -> Option<(f64, f64)> {
        match self.deaths {
            DeathRates::Receptors { mu, gamma, .. } => Some((mu, gamma)),
            DeathRates::Table { .. } => None,
        }
    }

    /// `(μ_i, γ_i)` for `i` in `0..=N_m`; state 0 has no deaths.
    pub fn death_components(&self, i: usize) -> (f64, f64) {
        debug_assert!(i as u64 <= self.capacity);
        if i == 0 {
            return (0.0, 0.0);
        }
        match &self.deaths {
            DeathRates::Receptors { receptors, mu, gamma } => {
                state_rates(i as u64, *receptors, *mu, *gamma).expect("i >= 1 and Nr >= 1")
            }
            DeathRates::Table { mu, gamma } => (mu[i - 1], gamma[i - 1]),
        }
    }

    /// Checked variant of [`death_components`](Self::death_components) for
    /// `1 ≤ i ≤ N_m`.
    pub fn state_rates(&self, i: u64) -> Result<(f64, f64)> {
        if i == 0 || i > self.capacity {
            return Err(Error::StateOutOfRange { index: i, max: self.capacity });
        }
        Ok(self.death_components(i as usize))
    }

    pub fn death_rate(&self, i: usize) -> f64 {
        let (m, g) = self.death_components(i);
        m + g
    }

    /// Explicit-rate copy with every death rate multiplied by `factor`.
    pub fn scale_deaths(&self, factor: f64) -> Result<Self> {
        let (mu, gamma) = (1..self.state_count())
            .map(|i| {
                let (m, g) = self.death_components(i);
                (m * factor, g * factor)
            })
            .unzip();
        Self::from_rates(self.lambda, mu, gamma)
    }
}

fn check_size(capacity: u64, max_states: u64) -> Result<()> {
    if capacity == 0 {
        return Err(Error::domain("build_chain", "capacity must be at least 1"));
    }
    let states = capacity.saturating_add(1);
    if states > max_states {
        return Err(Error::ChainTooLarge { states, limit: max_states });
    }
    Ok(())
}

/// Chain for `params` with default options.
pub fn build_chain(params: &SystemParams) -> Result<ChainSpec> {
    build_chain_with(params, &ChainOptions::default())
}

pub fn build_chain_with(params: &SystemParams, opts: &ChainOptions) -> Result<ChainSpec> {
    params.validate()?;
    let capacity = match opts.capacity {
        Some(c) => c,
        None => params::capacity(params)?,
    };
    let receptors = opts.receptors.unwrap_or(u64::from(params.receptors));
    let lambda = opts.lambda.unwrap_or_else(|| diffusion::enter_rate(params));
    ChainSpec::receptor_with_limit(lambda, params.unbind_rate, receptors, capacity, opts.max_states)
}

/// All derived rates of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub capacity: u64,
}

impl RateSet {
    pub fn from_params(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let lambda = diffusion::enter_rate(params);
        let mu = params.unbind_rate;
        let gamma = rejection_rate(lambda, mu);
        let (gamma_a, gamma_b) = split_gamma(gamma, params.alpha);
        Ok(RateSet {
            lambda,
            mu,
            gamma,
            gamma_prime: gamma_prime(lambda, mu)?,
            gamma_a,
            gamma_b,
            capacity: params::capacity(params)?,
        })
    }
}

/// Stationary distribution of a chain with its flow metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// `P_0..=P_{N_m}`.
    pub probs: Vec<f64>,
    /// `P_{N_m}`, the probability an arrival is lost.
    pub blocking: f64,
    /// `Σ μ_i P_i`.
    pub unbind_throughput: f64,
    /// `Σ γ_i P_i`.
    pub reject_throughput: f64,
    pub lambda: f64,
}

impl SteadyState {
    /// Admitted arrival rate `λ(1 − P_{N_m})`.
    pub fn admitted_throughput(&self) -> f64 {
        self.lambda * (1.0 - self.blocking)
    }

    /// Share of admitted molecules that leave by rejection.
    pub fn rejection_fraction(&self) -> f64 {
        let out = self.unbind_throughput + self.reject_throughput;
        if out == 0.0 {
            0.0
        } else {
            self.reject_throughput / out
        }
    }

    pub fn mean_occupancy(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for (n, p) in self.probs.iter().enumerate() {
            acc.add(n as f64 * p);
        }
        acc.total()
    }
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Product-form stationary distribution
/// `P_n ∝ Π_{k=1..n} λ/d_k`, accumulated in log space and shifted by the
/// running maximum before exponentiating.
pub fn steady_state(chain: &ChainSpec) -> Result<SteadyState> {
    let states = chain.state_count();
    let lambda = chain.lambda();

    let mut probs = vec![0.0; states];
    if lambda == 0.0 {
        probs[0] = 1.0;
        return Ok(SteadyState {
            blocking: probs[states - 1],
            probs,
            unbind_throughput: 0.0,
            reject_throughput: 0.0,
            lambda,
        });
    }

    let log_lambda = lambda.ln();
    let mut log_w = Vec::with_capacity(states);
    log_w.push(0.0f64);
    let mut max = 0.0f64;
    for n in 1..states {
        let d = chain.death_rate(n);
        if !(d > 0.0) {
            return Err(Error::AbsorbingChain { state: n });
        }
        let next = log_w[n - 1] + (log_lambda - d.ln());
        if !next.is_finite() {
            return Err(Error::Numerical(format!("log weight of state {n} is {next}")));
        }
        max = max.max(next);
        log_w.push(next);
    }

    let mut norm = NeumaierSum::default();
    for (p, lw) in probs.iter_mut().zip(&log_w) {
        *p = (lw - max).exp();
        norm.add(*p);
    }
    let z = norm.total();
    if !(z >= 1.0 && z.is_finite()) {
        return Err(Error::Numerical(format!("normalizer {z} out of range")));
    }

    let mut unbind = NeumaierSum::default();
    let mut reject = NeumaierSum::default();
    for (n, p) in probs.iter_mut().enumerate() {
        *p /= z;
        if n > 0 && *p > 0.0 {
            let (m, g) = chain.death_components(n);
            unbind.add(m * *p);
            reject.add(g * *p);
        }
    }

    Ok(SteadyState {
        blocking: probs[states - 1],
        probs,
        unbind_throughput: unbind.total(),
        reject_throughput: reject.total(),
        lambda,
    })
}
