//! Table builders behind the `mcrx` subcommands.
//!
//! Every builder returns a [`Table`]; the binary only parses flags and
//! writes tables out. CSV output is comma-separated with LF line endings
//! and a header row; reals carry 17 significant digits.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::diffusion;
use crate::dosage;
use crate::error::{Error, Result};
use crate::params::{self, SystemParams};
use crate::queue::{self, ChainOptions, RateSet};
use crate::sim::{self, Moments, SimConfig, SimResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => write!(f, "{v:.16e}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Distance,
    Release,
    Mu,
    State,
    Occupancy,
    Alpha,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Distance => "R",
            SweepVar::Release => "Q",
            SweepVar::Mu => "mu",
            SweepVar::State => "i",
            SweepVar::Occupancy => "f",
            SweepVar::Alpha => "alpha",
        }
    }

    /// Copy of `params` with this variable set to `value`.
    pub fn apply(self, params: &SystemParams, value: f64) -> Result<SystemParams> {
        let mut p = *params;
        match self {
            SweepVar::Distance => p.distance = value,
            SweepVar::Release => p.release = value,
            SweepVar::Mu => p.unbind_rate = value,
            SweepVar::Occupancy => p.occupancy = value,
            SweepVar::Alpha => p.alpha = value,
            SweepVar::State => {
                return Err(Error::domain("sweep", "state index is not a system parameter"))
            }
        }
        p.validated()
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "R" => SweepVar::Distance,
            "Q" => SweepVar::Release,
            "mu" => SweepVar::Mu,
            "i" => SweepVar::State,
            "f" => SweepVar::Occupancy,
            "alpha" => SweepVar::Alpha,
            _ => return Err(sweep_err(format!("unknown sweep variable `{s}` (expected R, Q, mu, i, f, alpha)"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// `var=start:stop:steps[:log]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub scale: Scale,
}

fn sweep_err(msg: impl Into<String>) -> Error {
    Error::domain("sweep", msg)
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (var, range) = s
            .split_once('=')
            .ok_or_else(|| sweep_err(format!("expected var=start:stop:steps[:log], got `{s}`")))?;
        let var: SweepVar = var.trim().parse()?;
        let parts: Vec<&str> = range.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(sweep_err(format!("expected start:stop:steps[:log], got `{range}`")));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| sweep_err(format!("bad number `{t}`")));
        let start = num(parts[0])?;
        let stop = num(parts[1])?;
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| sweep_err(format!("bad step count `{}`", parts[2])))?;
        let scale = match parts.get(3).map(|t| t.trim()) {
            None | Some("lin") | Some("linear") => Scale::Linear,
            Some("log") => Scale::Log,
            Some(other) => return Err(sweep_err(format!("unknown scale `{other}`"))),
        };
        SweepSpec {
            var,
            start,
            stop,
            steps,
            scale,
        }
        .validated()
    }
}

impl SweepSpec {
    pub fn linear(var: SweepVar, start: f64, stop: f64, steps: usize) -> Result<Self> {
        SweepSpec {
            var,
            start,
            stop,
            steps,
            scale: Scale::Linear,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(sweep_err(format!("need start < stop, got {}..{}", self.start, self.stop)));
        }
        if self.steps < 2 {
            return Err(sweep_err("need at least 2 steps"));
        }
        if self.scale == Scale::Log && self.start <= 0.0 {
            return Err(sweep_err("log sweep needs a positive start"));
        }
        Ok(self)
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                let t = k as f64 / last;
                match self.scale {
                    Scale::Linear => self.start + t * (self.stop - self.start),
                    Scale::Log => (self.start.ln() + t * (self.stop / self.start).ln()).exp(),
                }
            })
            .map(|v| if v > self.stop { self.stop } else { v })
            .collect()
    }

    /// Values rounded to distinct non-negative integers, ascending.
    pub fn integer_values(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.values().into_iter().map(|v| v.round().max(0.0) as u64).collect();
        out.dedup();
        out
    }

    fn expect_one_of(&self, allowed: &[SweepVar], command: &str) -> Result<()> {
        if allowed.contains(&self.var) {
            Ok(())
        } else {
            let names: Vec<&str> = allowed.iter().map(|v| v.name()).collect();
            Err(sweep_err(format!(
                "`{command}` sweeps {}; got `{}`",
                names.join(", "),
                self.var.name()
            )))
        }
    }
}

/// Rates against R, Q, μ, or α:
/// `<var>,lambda,gamma,gamma_prime,gamma_minus_gamma_prime,gamma_a,gamma_b`.
pub fn cmd_rates(params: &SystemParams, sweep: &SweepSpec) -> Result<Table> {
    use SweepVar::*;
    sweep.expect_one_of(&[Distance, Release, Mu, Alpha], "rates")?;
    let mut table = Table::new([
        sweep.var.name(),
        "lambda",
        "gamma",
        "gamma_prime",
        "gamma_minus_gamma_prime",
        "gamma_a",
        "gamma_b",
    ]);
    for x in sweep.values() {
        let r = RateSet::from_params(&sweep.var.apply(params, x)?)?;
        table.push(vec![
            x.into(),
            r.lambda.into(),
            r.gamma.into(),
            r.gamma_prime.into(),
            (r.gamma - r.gamma_prime).into(),
            r.gamma_a.into(),
            r.gamma_b.into(),
        ]);
    }
    Ok(table)
}

/// `(μ_i, γ_i)` against state index for each receptor count:
/// `Nr,i,mu_i,gamma_i`.
pub fn cmd_state_rates(
    params: &SystemParams,
    sweep: &SweepSpec,
    receptor_counts: &[u64],
    capacity: Option<u64>,
) -> Result<Table> {
    sweep.expect_one_of(&[SweepVar::State], "state-rates")?;
    params.validate()?;
    let capacity = match capacity {
        Some(c) => c,
        None => params::capacity(params)?,
    };
    let indices = sweep.integer_values();
    if let Some(&i) = indices.iter().find(|&&i| i == 0 || i > capacity) {
        return Err(Error::StateOutOfRange { index: i, max: capacity });
    }
    let lambda = diffusion::enter_rate(params);
    let mu = params.unbind_rate;
    let gamma = queue::rejection_rate(lambda, mu);
    let defaults = [u64::from(params.receptors)];
    let counts = if receptor_counts.is_empty() { &defaults[..] } else { receptor_counts };

    let mut table = Table::new(["Nr", "i", "mu_i", "gamma_i"]);
    for &nr in counts {
        for &i in &indices {
            let (m, g) = queue::state_rates(i, nr, mu, gamma)?;
            table.push(vec![nr.into(), i.into(), m.into(), g.into()]);
        }
    }
    Ok(table)
}

/// Dosage bounds against R (one row per listed f) or against f:
/// `R,f,q_min_rate,q_max_rate,baseline_q_min_rate,baseline_gap,feasible`.
/// Infeasible rows leave the lower-bound columns empty.
pub fn cmd_bounds(params: &SystemParams, sweep: &SweepSpec, occupancies: &[f64]) -> Result<Table> {
    sweep.expect_one_of(&[SweepVar::Distance, SweepVar::Occupancy], "bounds")?;
    let mut points = Vec::new();
    match sweep.var {
        SweepVar::Distance => {
            let fs = if occupancies.is_empty() { vec![params.occupancy] } else { occupancies.to_vec() };
            for r in sweep.values() {
                let at_r = SweepVar::Distance.apply(params, r)?;
                for &f in &fs {
                    points.push(SweepVar::Occupancy.apply(&at_r, f)?);
                }
            }
        }
        _ => {
            for f in sweep.values() {
                points.push(SweepVar::Occupancy.apply(params, f)?);
            }
        }
    }

    let mut table = Table::new([
        "R",
        "f",
        "q_min_rate",
        "q_max_rate",
        "baseline_q_min_rate",
        "baseline_gap",
        "feasible",
    ]);
    for p in points {
        let b = dosage::dose_bounds(&p)?;
        let baseline = dosage::baseline_q_min_rate(&p)?;
        table.push(vec![
            p.distance.into(),
            p.occupancy.into(),
            b.q_min_rate.into(),
            b.q_max_rate.into(),
            baseline.into(),
            b.q_min_rate.map(|q| q - baseline).into(),
            b.feasible.into(),
        ]);
    }
    Ok(table)
}

/// One row per occupancy factor:
/// `f,f_star,feasible,q_min_rate,q_max_rate,q_min,q_max,Q,verdict`.
pub fn cmd_dose(params: &SystemParams, occupancies: &[f64]) -> Result<Table> {
    let fs = if occupancies.is_empty() { vec![params.occupancy] } else { occupancies.to_vec() };
    let mut table = Table::new(["f", "f_star", "feasible", "q_min_rate", "q_max_rate", "q_min", "q_max", "Q", "verdict"]);
    for f in fs {
        let p = SweepVar::Occupancy.apply(params, f)?;
        let a = dosage::dose_interval(&p)?;
        let b = a.bounds;
        table.push(vec![
            f.into(),
            b.f_star.into(),
            b.feasible.into(),
            b.q_min_rate.into(),
            b.q_max_rate.into(),
            b.q_min.into(),
            b.q_max.into(),
            a.release.into(),
            Cell::Text(a.verdict.to_string()),
        ]);
    }
    Ok(table)
}

/// Steady-state rows `n,p,mu_n,gamma_n` for every state with `P_n > 0`.
pub fn cmd_steady(params: &SystemParams, opts: &ChainOptions) -> Result<(Table, queue::SteadyState)> {
    let chain = queue::build_chain_with(params, opts)?;
    let ss = queue::steady_state(&chain)?;
    let mut table = Table::new(["n", "p", "mu_n", "gamma_n"]);
    for (n, &p) in ss.probs.iter().enumerate() {
        if p > 0.0 {
            let (m, g) = chain.death_components(n);
            table.push(vec![(n as u64).into(), p.into(), m.into(), g.into()]);
        }
    }
    Ok((table, ss))
}

/// Knobs shared by `simulate` and `validate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunKnobs {
    pub events: u64,
    pub warmup: Option<u64>,
    pub replications: usize,
    pub seed: u64,
}

/// Empirical occupancy rows `n,occupancy,std_error` for every visited
/// state.
pub fn cmd_simulate(params: &SystemParams, opts: &ChainOptions, knobs: &RunKnobs) -> Result<(Table, SimResult)> {
    let chain = queue::build_chain_with(params, opts)?;
    let mut config = SimConfig::new(chain, knobs.events, knobs.seed).with_replications(knobs.replications);
    if let Some(w) = knobs.warmup {
        config.warmup_events = w;
    }
    let result = sim::simulate(&config)?;
    let reps = result.replications.len() as f64;
    let mut table = Table::new(["n", "occupancy", "std_error"]);
    for (n, &p) in result.occupancy.iter().enumerate() {
        if p > 0.0 {
            let mut m = Moments::default();
            for r in &result.replications {
                m.push(r.occupancy[n]);
            }
            table.push(vec![(n as u64).into(), p.into(), (m.variance() / reps).sqrt().into()]);
        }
    }
    Ok((table, result))
}

/// Parses a CSV produced by this module into header and string cells.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}
