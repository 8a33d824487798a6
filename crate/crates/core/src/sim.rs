//! Exact event-driven simulation of the reception chain.
//!
//! Arrivals are a Poisson stream of rate `λ` in every state; an arrival that
//! finds `N_m` molecules present is lost (counted as blocked, state kept).
//! In state `n` the holding time is exponential with rate `λ + μ_n + γ_n`
//! and the event is picked in proportion to its rate.
//!
//! Replication `k` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream
//! `k`, so replications are independent of each other and of thread count.
//! Occupancy is time-weighted and excludes the first `warmup_events`.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::queue::{self, ChainOptions, ChainSpec, SteadyState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Arrival,
    Blocked,
    Unbind,
    Reject,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Arrival => "arrival",
            EventKind::Blocked => "blocked",
            EventKind::Unbind => "unbind",
            EventKind::Reject => "reject",
        })
    }
}

/// Event tallies. `arrivals` includes blocked arrivals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub arrivals: u64,
    pub blocked: u64,
    pub unbinds: u64,
    pub rejects: u64,
}

impl EventCounts {
    fn record(&mut self, kind: EventKind) {
        match kind {
            EventKind::Arrival => self.arrivals += 1,
            EventKind::Blocked => {
                self.arrivals += 1;
                self.blocked += 1;
            }
            EventKind::Unbind => self.unbinds += 1,
            EventKind::Reject => self.rejects += 1,
        }
    }

    fn merge(&mut self, other: &EventCounts) {
        self.arrivals += other.arrivals;
        self.blocked += other.blocked;
        self.unbinds += other.unbinds;
        self.rejects += other.rejects;
    }

    pub fn total(&self) -> u64 {
        self.arrivals + self.unbinds + self.rejects
    }

    /// `rejects / (rejects + unbinds + blocked)`.
    pub fn rejection_share_of_exits(&self) -> f64 {
        ratio(self.rejects, self.rejects + self.unbinds + self.blocked)
    }

    /// `rejects / arrivals`.
    pub fn rejection_share_of_arrivals(&self) -> f64 {
        ratio(self.rejects, self.arrivals)
    }

    /// `rejects / (rejects + unbinds)`, the empirical counterpart of
    /// [`SteadyState::rejection_fraction`].
    pub fn rejection_share_of_departures(&self) -> f64 {
        ratio(self.rejects, self.rejects + self.unbinds)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.mean += delta * other.count as f64 / n;
        self.count += other.count;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub chain: ChainSpec,
    /// Events per replication, blocked arrivals included.
    pub max_events: u64,
    pub warmup_events: u64,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    /// One replication with a 10% warmup.
    pub fn new(chain: ChainSpec, max_events: u64, seed: u64) -> Self {
        SimConfig {
            chain,
            max_events,
            warmup_events: max_events / 10,
            seed,
            replications: 1,
        }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_events <= self.warmup_events {
            return Err(Error::SimConfig(format!(
                "max_events ({}) must exceed warmup_events ({})",
                self.max_events, self.warmup_events
            )));
        }
        if self.replications == 0 {
            return Err(Error::SimConfig("at least one replication is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    /// Time-weighted post-warmup occupancy.
    pub occupancy: Vec<f64>,
    /// All events from time 0.
    pub counts: EventCounts,
    /// Post-warmup events only.
    pub steady_counts: EventCounts,
    pub final_state: usize,
    pub final_time: f64,
    /// Post-warmup observation window length.
    pub observed_time: f64,
    /// Post-warmup gaps between consecutive arrivals (blocked included).
    pub interarrival: Moments,
}

impl Replication {
    /// `arrivals − (unbinds + rejects + blocked + final_state)`; zero on
    /// every run.
    pub fn conservation_residual(&self) -> i128 {
        let c = &self.counts;
        i128::from(c.arrivals)
            - i128::from(c.unbinds)
            - i128::from(c.rejects)
            - i128::from(c.blocked)
            - self.final_state as i128
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Occupancy pooled over replications by observed time.
    pub occupancy: Vec<f64>,
    pub counts: EventCounts,
    pub steady_counts: EventCounts,
    pub interarrival: Moments,
    pub replications: Vec<Replication>,
    pub seed: u64,
}

impl SimResult {
    pub fn rejection_share_of_exits(&self) -> f64 {
        self.steady_counts.rejection_share_of_exits()
    }

    pub fn rejection_share_of_arrivals(&self) -> f64 {
        self.steady_counts.rejection_share_of_arrivals()
    }

    pub fn rejection_share_of_departures(&self) -> f64 {
        self.steady_counts.rejection_share_of_departures()
    }
}

/// One step of a recorded trajectory: the state entered at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub state: usize,
    pub kind: EventKind,
}

pub fn rng_for(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Runs all replications, in parallel, merged in index order.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let replications = (0..config.replications)
        .into_par_iter()
        .map(|k| run_replication(config, k, None))
        .collect::<Result<Vec<_>>>()?;

    let states = config.chain.state_count();
    let mut time = vec![0.0; states];
    let mut total_time = 0.0;
    let mut counts = EventCounts::default();
    let mut steady_counts = EventCounts::default();
    let mut interarrival = Moments::default();
    for rep in &replications {
        for (acc, p) in time.iter_mut().zip(&rep.occupancy) {
            *acc += p * rep.observed_time;
        }
        total_time += rep.observed_time;
        counts.merge(&rep.counts);
        steady_counts.merge(&rep.steady_counts);
        interarrival.merge(&rep.interarrival);
    }
    let occupancy = if total_time > 0.0 {
        normalize(time)
    } else {
        // frozen chains: every replication reports the same point mass
        replications[0].occupancy.clone()
    };

    Ok(SimResult {
        occupancy,
        counts,
        steady_counts,
        interarrival,
        replications,
        seed: config.seed,
    })
}

/// Single replication that also records every event.
pub fn simulate_trajectory(config: &SimConfig) -> Result<(Replication, Vec<TrajectoryEvent>)> {
    config.validate()?;
    let mut events = Vec::new();
    let rep = run_replication(config, 0, Some(&mut events))?;
    Ok((rep, events))
}

/// Writes `time,state,event_type` rows.
pub fn write_trajectory_csv<W: Write>(mut out: W, events: &[TrajectoryEvent]) -> io::Result<()> {
    writeln!(out, "time,state,event_type")?;
    for e in events {
        writeln!(out, "{:.16e},{},{}", e.time, e.state, e.kind)?;
    }
    Ok(())
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let mut sum = queue::NeumaierSum::default();
    for x in &v {
        sum.add(*x);
    }
    let z = sum.total();
    for x in &mut v {
        *x /= z;
    }
    v
}

fn run_replication(
    config: &SimConfig,
    index: usize,
    mut trace: Option<&mut Vec<TrajectoryEvent>>,
) -> Result<Replication> {
    let chain = &config.chain;
    let states = chain.state_count();
    let top = states - 1;
    let lambda = chain.lambda();
    let mut rng = rng_for(config.seed, index);

    let mut time_in = vec![0.0; states];
    let mut counts = EventCounts::default();
    let mut steady_counts = EventCounts::default();
    let mut interarrival = Moments::default();
    let mut last_arrival: Option<f64> = None;
    let mut state = 0usize;
    let mut now = 0.0f64;
    let mut observed = 0.0f64;

    if lambda == 0.0 {
        // nothing ever leaves the empty state
        time_in[0] = 1.0;
        return Ok(Replication {
            index,
            occupancy: time_in,
            counts,
            steady_counts,
            final_state: 0,
            final_time: 0.0,
            observed_time: 0.0,
            interarrival,
        });
    }

    for event in 0..config.max_events {
        let (mu_n, gamma_n) = chain.death_components(state);
        let total = lambda + mu_n + gamma_n;
        if !(total > 0.0) {
            return Err(Error::Deadlock { state });
        }
        let hold: f64 = rng.sample::<f64, _>(Exp1) / total;
        let steady = event >= config.warmup_events;
        if steady {
            time_in[state] += hold;
            observed += hold;
        }
        now += hold;

        let pick = rng.gen::<f64>() * total;
        let kind = if pick < lambda {
            if state == top {
                EventKind::Blocked
            } else {
                EventKind::Arrival
            }
        } else if pick < lambda + mu_n {
            EventKind::Unbind
        } else {
            EventKind::Reject
        };
        match kind {
            EventKind::Arrival => state += 1,
            EventKind::Unbind | EventKind::Reject => state -= 1,
            EventKind::Blocked => {}
        }

        counts.record(kind);
        if steady {
            steady_counts.record(kind);
            if matches!(kind, EventKind::Arrival | EventKind::Blocked) {
                if let Some(prev) = last_arrival {
                    interarrival.push(now - prev);
                }
                last_arrival = Some(now);
            }
        }
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(TrajectoryEvent {
                time: now,
                state,
                kind,
            });
        }
    }

    let occupancy = normalize(time_in);
    Ok(Replication {
        index,
        occupancy,
        counts,
        steady_counts,
        final_state: state,
        final_time: now,
        observed_time: observed,
        interarrival,
    })
}

/// Half the L1 distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = queue::NeumaierSum::default();
    for (a, b) in p.iter().zip(q) {
        acc.add((a - b).abs());
    }
    0.5 * acc.total()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Knobs and pass/fail thresholds for [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub chain: ChainOptions,
    pub events: u64,
    /// Defaults to 10% of `events`.
    pub warmup_events: Option<u64>,
    pub replications: usize,
    pub seed: u64,
    /// Multiplies every simulated death rate; 1.0 for a faithful run.
    pub death_scale: f64,
    /// Median per-replication total variation distance.
    pub tv_tolerance: f64,
    /// Relative error of the pooled rejection share of departures.
    pub rejection_tolerance: f64,
    /// Relative error of the mean arrival gap against `1/λ`.
    pub interarrival_mean_tolerance: f64,
    /// Relative error of the arrival-gap variance against `1/λ²`.
    pub interarrival_var_tolerance: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            chain: ChainOptions::default(),
            events: 1_000_000,
            warmup_events: None,
            replications: 8,
            seed: 0x5EED,
            death_scale: 1.0,
            tv_tolerance: 0.02,
            rejection_tolerance: 0.02,
            interarrival_mean_tolerance: 0.01,
            interarrival_var_tolerance: 0.03,
        }
    }
}

/// Analytic against empirical probability of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDeviation {
    pub state: usize,
    pub analytic: f64,
    pub empirical: f64,
    /// Standard error of `empirical` across replications.
    pub std_error: f64,
}

impl StateDeviation {
    pub fn deviation(&self) -> f64 {
        self.empirical - self.analytic
    }

    /// Deviation in standard errors; infinite for a nonzero deviation with
    /// zero spread.
    pub fn z_score(&self) -> f64 {
        let d = self.deviation();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub lambda: f64,
    pub capacity: u64,
    pub steady: SteadyState,
    pub sim: SimResult,
    /// Every state with nonzero analytic or empirical mass.
    pub states: Vec<StateDeviation>,
    pub tv_per_replication: Vec<f64>,
    pub tv_median: f64,
    pub tv_pooled: f64,
    pub analytic_rejection: f64,
    pub empirical_rejection: f64,
    pub interarrival_mean: f64,
    pub interarrival_variance: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// State with the largest |z|.
    pub fn worst_state(&self) -> Option<&StateDeviation> {
        self.states
            .iter()
            .max_by(|a, b| a.z_score().abs().total_cmp(&b.z_score().abs()))
    }

    /// `n,analytic,empirical,std_error,deviation` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,analytic,empirical,std_error,deviation")?;
        for s in &self.states {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.state,
                s.analytic,
                s.empirical,
                s.std_error,
                s.deviation()
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "chain: lambda={:.6e} N_m={} seed={}", self.lambda, self.capacity, self.sim.seed)?;
        writeln!(
            f,
            "events: {} arrivals ({} blocked), {} unbinds, {} rejects",
            self.sim.counts.arrivals, self.sim.counts.blocked, self.sim.counts.unbinds, self.sim.counts.rejects
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {}: {:.6e} (tolerance {:.3e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            )?;
        }
        if let Some(w) = self.worst_state() {
            writeln!(
                f,
                "worst state: n={} analytic={:.6e} empirical={:.6e} z={:.2}",
                w.state,
                w.analytic,
                w.empirical,
                w.z_score()
            )?;
        }
        write!(f, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

fn relative_error(value: f64, target: f64) -> f64 {
    if target == 0.0 {
        value.abs()
    } else {
        (value - target).abs() / target.abs()
    }
}

/// Simulates the chain of `params` and compares it with the analytic
/// steady state.
pub fn validate(params: &SystemParams, knobs: &ValidationConfig) -> Result<ValidationReport> {
    let chain = queue::build_chain_with(params, &knobs.chain)?;
    validate_chain(&chain, knobs)
}

/// [`validate`] for an explicit chain.
pub fn validate_chain(chain: &ChainSpec, knobs: &ValidationConfig) -> Result<ValidationReport> {
    let steady = queue::steady_state(chain)?;
    let simulated = if knobs.death_scale == 1.0 {
        chain.clone()
    } else {
        chain.scale_deaths(knobs.death_scale)?
    };
    let mut config = SimConfig::new(simulated, knobs.events, knobs.seed).with_replications(knobs.replications);
    if let Some(w) = knobs.warmup_events {
        config.warmup_events = w;
    }
    let sim = simulate(&config)?;

    let tv_per_replication: Vec<f64> = sim
        .replications
        .iter()
        .map(|r| total_variation(&r.occupancy, &steady.probs))
        .collect();
    let tv_median = median(&tv_per_replication);
    let tv_pooled = total_variation(&sim.occupancy, &steady.probs);

    let reps = sim.replications.len() as f64;
    let states: Vec<StateDeviation> = (0..chain.state_count())
        .filter(|&n| steady.probs[n] > 0.0 || sim.occupancy[n] > 0.0)
        .map(|n| {
            let mut m = Moments::default();
            for r in &sim.replications {
                m.push(r.occupancy[n]);
            }
            StateDeviation {
                state: n,
                analytic: steady.probs[n],
                empirical: m.mean,
                std_error: (m.variance() / reps).sqrt(),
            }
        })
        .collect();

    let lambda = chain.lambda();
    let analytic_rejection = steady.rejection_fraction();
    let empirical_rejection = sim.rejection_share_of_departures();
    let interarrival_mean = sim.interarrival.mean;
    let interarrival_variance = sim.interarrival.variance();

    let mut checks = vec![Check {
        name: "median total variation distance",
        value: tv_median,
        tolerance: knobs.tv_tolerance,
        passed: tv_median < knobs.tv_tolerance,
    }];
    if lambda > 0.0 {
        let rej = relative_error(empirical_rejection, analytic_rejection);
        let mean_err = relative_error(interarrival_mean, 1.0 / lambda);
        let var_err = relative_error(interarrival_variance, 1.0 / (lambda * lambda));
        checks.extend([
            Check {
                name: "rejection fraction relative error",
                value: rej,
                tolerance: knobs.rejection_tolerance,
                passed: rej <= knobs.rejection_tolerance,
            },
            Check {
                name: "interarrival mean relative error",
                value: mean_err,
                tolerance: knobs.interarrival_mean_tolerance,
                passed: mean_err <= knobs.interarrival_mean_tolerance,
            },
            Check {
                name: "interarrival variance relative error",
                value: var_err,
                tolerance: knobs.interarrival_var_tolerance,
                passed: var_err <= knobs.interarrival_var_tolerance,
            },
        ]);
    }

    Ok(ValidationReport {
        lambda,
        capacity: chain.capacity(),
        steady,
        sim,
        states,
        tv_per_replication,
        tv_median,
        tv_pooled,
        analytic_rejection,
        empirical_rejection,
        interarrival_mean,
        interarrival_variance,
        checks,
    })
}
