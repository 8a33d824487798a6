//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{balance_solve, gamma_multiplier_literal, logspace, mu_multiplier_literal, rel};
use mcrx::cli::{self, parse_csv, SweepSpec};
use mcrx::diffusion::{enter_rate, enter_rate_for_release_rate};
use mcrx::dosage::{self, f_star, occupancy_factor};
use mcrx::params::capacity;
use mcrx::queue::{gamma_prime, p0_single, rejection_probability, rejection_rate, state_rates};
use mcrx::sim::{self, ValidationConfig};
use mcrx::{steady_state, ChainSpec, Error, SystemParams};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn lambda_grid() -> Vec<f64> {
    logspace(1e-3, 1e9, 100)
}

fn mu_grid() -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend(logspace(1e-3, 1e6, 99));
    v
}

fn quadratic_root() -> Outcome {
    let mut worst_residual = 0.0f64;
    let mut worst_naive = 0.0f64;
    let mut pairs = 0;
    for &l in &lambda_grid() {
        for &m in &mu_grid() {
            pairs += 1;
            let g = rejection_rate(l, m);
            let scale = (g * g).max(m * g).max(l * l);
            let residual = (g * g + m * g - l * l).abs() / scale;
            worst_residual = worst_residual.max(residual);
            if m <= 100.0 * l {
                let naive = 0.5 * ((m * m + 4.0 * l * l).sqrt() - m);
                worst_naive = worst_naive.max(rel(g, naive));
            }
        }
    }
    outcome(
        pairs == 10_000 && worst_residual <= 1e-10 && worst_naive <= 1e-8,
        format!("{pairs} pairs, max residual {worst_residual:.2e} (tol 1e-10), max stable/naive gap {worst_naive:.2e} (tol 1e-8)"),
    )
}

fn single_slot_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for &l in &logspace(1e-2, 1e4, 25) {
        for &m in &logspace(1e-2, 1e4, 25) {
            let g = rejection_rate(l, m);
            let chain = ChainSpec::receptor(l, m, 1, 1).unwrap();
            let ss = steady_state(&chain).unwrap();
            let p0 = p0_single(l, m, g).unwrap();
            let p_rej = rejection_probability(l, m, g).unwrap();
            // admitted flow μ(1 − P_0) = λ(1 − P_rej); 1 − P_0 is P_1 here
            let busy = ss.probs[1];
            let p_rej_chain = 1.0 - m * busy / l;
            let identity = (m * busy - l * (1.0 - p_rej)).abs() / l;
            worst = worst
                .max((ss.probs[0] - p0).abs())
                .max((p_rej_chain - p_rej).abs())
                .max(identity);
        }
    }
    outcome(worst <= 1e-12, format!("max error {worst:.2e} (tol 1e-12)"))
}

fn gamma_dominance() -> Outcome {
    let mut violations = 0;
    let mut worst_converged = 0.0f64;
    for &l in &lambda_grid() {
        for &m in &mu_grid() {
            let g = rejection_rate(l, m);
            let gp = gamma_prime(l, m).unwrap();
            let equal_expected = l * m == 0.0;
            if equal_expected {
                if rel(g, gp) > 4.0 * f64::EPSILON {
                    violations += 1;
                }
            } else if g <= gp {
                violations += 1;
            }
            if m >= 100.0 * l {
                worst_converged = worst_converged.max((g - gp) / g);
            }
        }
    }
    outcome(
        violations == 0 && worst_converged < 0.01,
        format!("{violations} ordering violations, max relative gap at mu >= 100 lambda {worst_converged:.2e} (tol 1e-2)"),
    )
}

fn solver_vs_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let log_uniform = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-2.0..2.0));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let nm = rng.gen_range(1..=9usize);
        let lambda = log_uniform(&mut rng);
        let mu: Vec<f64> = (0..nm).map(|_| log_uniform(&mut rng)).collect();
        let gamma: Vec<f64> = (0..nm).map(|_| log_uniform(&mut rng)).collect();
        let chain = ChainSpec::from_rates(lambda, mu, gamma).unwrap();
        let ss = steady_state(&chain).unwrap();
        let direct = balance_solve(&chain);
        for (a, b) in ss.probs.iter().zip(&direct) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-10, format!("100 chains, max entry error {worst:.2e} (tol 1e-10)"))
}

fn simulation_agreement() -> Outcome {
    let started = Instant::now();
    let geometric_mu: Vec<f64> = vec![0.875; 100];
    let geometric_gamma: Vec<f64> = vec![0.375; 100];
    let chains = [
        ("Nr=1 Nm=2 lambda=mu=1", ChainSpec::receptor(1.0, 1.0, 1, 2).unwrap()),
        ("Nr=1 Nm=1 lambda=2 mu=1", ChainSpec::receptor(2.0, 1.0, 1, 1).unwrap()),
        ("Nr=3 Nm=10 lambda=20 mu=1", ChainSpec::receptor(20.0, 1.0, 3, 10).unwrap()),
        ("Nm=100 lambda=1 deaths=1.25", ChainSpec::from_rates(1.0, geometric_mu, geometric_gamma).unwrap()),
    ];
    let knobs = ValidationConfig::default();
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, chain) in &chains {
        let report = sim::validate_chain(chain, &knobs).unwrap();
        let rerun = sim::validate_chain(chain, &knobs).unwrap();
        let identical = report.sim == rerun.sim;
        let rej_err = (report.empirical_rejection - report.analytic_rejection).abs() / report.analytic_rejection;
        let ok = report.tv_median < 0.02 && rej_err <= 0.02 && identical;
        passed &= ok;
        parts.push(format!(
            "{name}: tv {:.4}, rejection err {:.4}, rerun {}",
            report.tv_median,
            rej_err,
            if identical { "identical" } else { "DIFFERS" }
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    passed &= elapsed < 60.0;
    parts.push(format!("{elapsed:.1}s for 4 chains with reruns"));
    outcome(passed, parts.join("; "))
}

fn state_rate_structure() -> Outcome {
    let mut mismatches = 0;
    let mu = 1000.0;
    let gamma = 333.0;
    for nr in [1u64, 7, 400, 1000, 2000] {
        for i in 1..=2000u64 {
            let (m, g) = state_rates(i, nr, mu, gamma).unwrap();
            if m != mu_multiplier_literal(i, nr) as f64 * mu || g != gamma_multiplier_literal(i, nr) as f64 * gamma {
                mismatches += 1;
            }
            if i > nr {
                let (m_prev, g_prev) = state_rates(i - 1, nr, mu, gamma).unwrap();
                if i > nr + 1 && m != m_prev {
                    mismatches += 1;
                }
                if i > nr + 1 && g - g_prev != (nr + 1) as f64 * gamma {
                    mismatches += 1;
                }
            }
        }
        if nr < 2000 {
            let plateau = state_rates(nr, nr, mu, gamma).unwrap().0;
            if state_rates(nr + 1, nr, mu, gamma).unwrap().0 != plateau {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over i = 1..2000 for 5 receptor counts"))
}

fn dosage_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let k = 10f64.powf(rng.gen_range(-1.0..1.0));
        let mut p = SystemParams::reference();
        p.binding_constant = k;
        p.occupancy = rng.gen_range(0.01..0.95) * f_star(k);
        p.unbind_rate = 10f64.powf(rng.gen_range(0.0..5.0));
        p.diffusion = 10f64.powf(rng.gen_range(0.0..3.0));
        p.distance = rng.gen_range(1.0..100.0);
        let q = dosage::q_min_rate(&p).unwrap();
        let lambda = enter_rate_for_release_rate(q, &p);
        let gamma = rejection_rate(lambda, p.unbind_rate);
        let f = occupancy_factor(lambda, k, p.unbind_rate, gamma).unwrap();
        worst = worst.max(rel(f, p.occupancy));
    }

    let mut linear_err = 0.0f64;
    let base = dosage::q_min_rate(&SystemParams::reference()).unwrap();
    for r in [1.0, 2.5, 10.0, 37.0, 100.0] {
        let mut p = SystemParams::reference();
        p.distance = r;
        linear_err = linear_err.max(rel(dosage::q_min_rate(&p).unwrap() / r, base / 10.0));
    }

    let p = SystemParams::reference();
    let nm = capacity(&p).unwrap() as f64;
    let qmax_err = rel(enter_rate_for_release_rate(dosage::q_max_rate(&p).unwrap(), &p), nm);

    let mut gate_errors = 0;
    for k in [0.1, 0.5, 1.0, 3.0, 10.0] {
        let star = f_star(k);
        let mut p = SystemParams::reference();
        p.binding_constant = k;
        for (f, expect_infeasible) in [(star, true), (star.next_up(), true), (0.99, true), (star * (1.0 - 1e-6), false)] {
            p.occupancy = f;
            let infeasible = matches!(dosage::q_min_rate(&p), Err(Error::Infeasible { .. }));
            if infeasible != expect_infeasible {
                gate_errors += 1;
            }
        }
        p.occupancy = star.next_down();
        if matches!(dosage::q_min_rate(&p), Err(Error::Infeasible { .. })) {
            gate_errors += 1;
        }
    }

    outcome(
        worst <= 1e-9 && linear_err <= 4.0 * f64::EPSILON && qmax_err <= 1e-12 && gate_errors == 0,
        format!(
            "fixed point max err {worst:.2e} (tol 1e-9), Q_min/R spread {linear_err:.2e}, enter_rate(Q_max) vs N_m {qmax_err:.2e} (tol 1e-12), {gate_errors} gate errors"
        ),
    )
}

fn column(text: &str, name: &str) -> Vec<String> {
    let (header, rows) = parse_csv(text);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("missing column {name}"));
    rows.into_iter().map(|r| r[k].clone()).collect()
}

fn numbers(text: &str, name: &str) -> Vec<f64> {
    column(text, name).iter().map(|c| c.parse().unwrap()).collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn sweep_trends() -> Outcome {
    let p = SystemParams::reference();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let by_r = cli::cmd_rates(&p, &"R=10:20:11".parse().unwrap()).unwrap().to_csv();
    check("lambda decreasing in R", strictly_decreasing(&numbers(&by_r, "lambda")));

    let by_q = cli::cmd_rates(&p, &"Q=1e6:1e9:13:log".parse().unwrap()).unwrap().to_csv();
    check("lambda increasing in Q", strictly_increasing(&numbers(&by_q, "lambda")));
    check("gamma increasing in Q", strictly_increasing(&numbers(&by_q, "gamma")));

    let by_mu = cli::cmd_rates(&p, &"mu=10:1e5:13:log".parse().unwrap()).unwrap().to_csv();
    let lam = numbers(&by_mu, "lambda");
    check("lambda constant in mu", lam.iter().all(|&l| l == lam[0]));
    check("gamma decreasing in mu", strictly_decreasing(&numbers(&by_mu, "gamma")));

    let sweep: SweepSpec = "i=1:2000:2000".parse().unwrap();
    let sr = cli::cmd_state_rates(&p, &sweep, &[400, 1000], None).unwrap().to_csv();
    let nr: Vec<u64> = column(&sr, "Nr").iter().map(|c| c.parse().unwrap()).collect();
    let idx: Vec<u64> = column(&sr, "i").iter().map(|c| c.parse().unwrap()).collect();
    let mu_i = numbers(&sr, "mu_i");
    let gamma_i = numbers(&sr, "gamma_i");
    let at = |n: u64, i: u64| {
        (0..nr.len())
            .find(|&k| nr[k] == n && idx[k] == i)
            .map(|k| (mu_i[k], gamma_i[k]))
            .unwrap()
    };
    check(
        "mu_i(Nr=1000) >= mu_i(Nr=400), strictly beyond 400",
        (1..=2000).all(|i| {
            let (a, b) = (at(400, i).0, at(1000, i).0);
            if i <= 400 { a == b } else { b > a }
        }),
    );
    for n in [400u64, 1000] {
        check("plateau beyond Nr", (n + 1..=2000).all(|i| at(n, i).0 == at(n, n).0));
        let gamma = rejection_rate(enter_rate(&p), p.unbind_rate);
        let slope = (n + 1) as f64 * gamma;
        check(
            "gamma_i affine beyond Nr",
            (n + 2..=2000).all(|i| rel(at(n, i).1 - at(n, i - 1).1, slope) <= 1e-9),
        );
    }

    let bounds = cli::cmd_bounds(&p, &"R=10:20:11".parse().unwrap(), &[0.1, 0.2, 0.3]).unwrap().to_csv();
    let rs = numbers(&bounds, "R");
    let fs = numbers(&bounds, "f");
    let qmin = numbers(&bounds, "q_min_rate");
    let qmax = numbers(&bounds, "q_max_rate");
    let gap = numbers(&bounds, "baseline_gap");
    for f in [0.1, 0.2, 0.3] {
        let rows: Vec<usize> = (0..rs.len()).filter(|&k| fs[k] == f).collect();
        let slope = qmin[rows[0]] / rs[rows[0]];
        check("Q_min linear in R", rows.iter().all(|&k| rel(qmin[k] / rs[k], slope) <= 1e-12));
    }
    let mut by_r: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
    for (k, r) in rs.iter().enumerate() {
        by_r.entry(r.to_bits()).or_default().push(k);
    }
    for rows in by_r.values() {
        check("Q_max independent of f", rows.iter().all(|&k| qmax[k] == qmax[rows[0]]));
        let gaps: Vec<f64> = rows.iter().map(|&k| gap[k]).collect();
        check("baseline gap positive", gaps.iter().all(|&g| g > 0.0));
        check("baseline gap increasing in f", strictly_increasing(&gaps));
    }

    let by_f = cli::cmd_bounds(&p, &"f=0.05:0.3:6".parse().unwrap(), &[]).unwrap().to_csv();
    let gaps = numbers(&by_f, "baseline_gap");
    check("baseline gap increasing along an f sweep", gaps.iter().all(|&g| g > 0.0) && strictly_increasing(&gaps));
    let infeasible = cli::cmd_bounds(&p, &"f=0.2:0.5:4".parse().unwrap(), &[]).unwrap().to_csv();
    check(
        "infeasible f rows flagged",
        column(&infeasible, "feasible") == ["true", "true", "false", "false"] && column(&infeasible, "q_min_rate")[3].is_empty(),
    );

    if failures.is_empty() {
        outcome(true, "rates, state-rates and bounds tables show every expected trend")
    } else {
        failures.dedup();
        outcome(false, format!("failed: {}", failures.join(", ")))
    }
}

fn spot_values() -> Outcome {
    let p = SystemParams::reference();
    // λ = 1e8 / (4π · 100 · 10 · 1e-4) = 1e8 / (0.4π)
    let lambda_oracle = 1e8 / (0.4 * PI);
    // 2.3³ − 2³ = 12.167 − 8 = 4.167 nm³ against 0.01³ = 1e-6 nm³
    let nm_oracle = 230u64.pow(3) - 200u64.pow(3);
    // 4π·(100·10)·1000·0.16 / (0.5·0.64 − 0.04/0.5) = 4π·1.6e5/0.24
    let qmin_oracle = 4.0 * PI * 1.6e5 / 0.24;
    let lambda = enter_rate(&p);
    let nm = capacity(&p).unwrap();
    let qmin = dosage::q_min_rate(&p).unwrap();
    let ok = rel(lambda, lambda_oracle) <= 1e-12
        && rel(lambda, 7.9577e7) <= 5e-5
        && nm == nm_oracle
        && nm == 4_167_000
        && rel(qmin, qmin_oracle) <= 1e-12
        && rel(qmin, 8.3776e6) <= 5e-5;
    outcome(ok, format!("lambda {lambda:.5e}, N_m {nm}, Q_min/dt {qmin:.5e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("quadratic root residual", quadratic_root),
        ("single-slot chain exactness", single_slot_exactness),
        ("gamma dominates gamma'", gamma_dominance),
        ("product form vs global balance", solver_vs_balance),
        ("simulation vs analytic steady state", simulation_agreement),
        ("state-rate structure", state_rate_structure),
        ("dosage fixed point and bounds", dosage_fixed_point),
        ("sweep table trends", sweep_trends),
        ("reference spot values", spot_values),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        println!(
            "{} {}. {name}: {} [{:.2}s]",
            if o.passed { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            started.elapsed().as_secs_f64()
        );
        if !o.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
