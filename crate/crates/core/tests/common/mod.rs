//! Independent reference computations. None of these call into the code
//! path they are used to check.
#![allow(dead_code)]

use mcrx::ChainSpec;
use nalgebra::{DMatrix, DVector};

/// erfc by a positive-term series (|x| ≤ 2.5) or a Lentz continued
/// fraction (|x| > 2.5).
pub fn erfc_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_oracle(-x);
    }
    let two_over_sqrt_pi = 2.0 / std::f64::consts::PI.sqrt();
    if x == 0.0 {
        return 1.0;
    }
    if x <= 2.5 {
        // erf(x) = 2/√π · e^{−x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= 2.0 * x * x / (2.0 * n + 1.0);
            sum += term;
            if term <= 1e-18 * sum {
                break;
            }
        }
        1.0 - two_over_sqrt_pi * (-x * x).exp() * sum
    } else {
        // erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / std::f64::consts::PI.sqrt() / f
    }
}

/// `Σ_{k=0}^{i} (i − k)·rate` for `i ≤ N_r`, `Σ_{k=0}^{N_r} (N_r − k)·rate`
/// beyond: the unbinding sum term by term.
pub fn mu_literal(i: u64, nr: u64, mu: f64) -> f64 {
    let (upper, base) = if i <= nr { (i, i) } else { (nr, nr) };
    (0..=upper).map(|k| (base - k) as f64 * mu).sum()
}

/// `Σ_{k=0}^{i} (i − k)·γ` for `i ≤ N_r`, `Σ_{k=0}^{N_r} (i − k)·γ` beyond.
pub fn gamma_literal(i: u64, nr: u64, gamma: f64) -> f64 {
    let upper = i.min(nr);
    (0..=upper).map(|k| (i - k) as f64 * gamma).sum()
}

/// Exact integer version of the literal sums (multiplier of the base rate).
pub fn mu_multiplier_literal(i: u64, nr: u64) -> u64 {
    let (upper, base) = if i <= nr { (i, i) } else { (nr, nr) };
    (0..=upper).map(|k| base - k).sum()
}

pub fn gamma_multiplier_literal(i: u64, nr: u64) -> u64 {
    (0..=i.min(nr)).map(|k| i - k).sum()
}

/// Stationary distribution from the full generator: solve `πQ = 0` with
/// one balance row replaced by `Σπ = 1`.
pub fn balance_solve(chain: &ChainSpec) -> Vec<f64> {
    let n = chain.state_count();
    let lambda = chain.lambda();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        if s + 1 < n {
            q[(s, s + 1)] = lambda;
        }
        if s > 0 {
            q[(s, s - 1)] = chain.death_rate(s);
        }
        let out: f64 = (0..n).filter(|&t| t != s).map(|t| q[(s, t)]).sum();
        q[(s, s)] = -out;
    }
    let mut a = q.transpose();
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).expect("nonsingular generator");
    x.iter().copied().collect()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp())
        .collect()
}
