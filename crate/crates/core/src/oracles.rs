//! Slow reference implementations used to check the fast kernels. Built for
//! this crate's tests and behind the `oracles` feature.

#![allow(clippy::excessive_precision)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;

fn density(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Phi(x) - 1/2` by the all-positive series `phi(x) sum x^{2n+1} / (2n+1)!!`.
fn central_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1.0;
        term *= x2 / (2.0 * n + 1.0);
        sum += term;
    }
    density(x) * sum
}

/// Upper tail `1 - Phi(x)` for `x >= 3` by the Laplace continued fraction,
/// evaluated with modified Lentz.
fn upper_tail_cf(x: f64) -> f64 {
    // Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...)))).
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64;
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
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    density(x) / f
}

/// `(Phi(x), 1 - Phi(x))`, each with small relative error.
pub fn norm_cdf_pair(x: f64) -> (f64, f64) {
    if x.abs() <= 3.0 {
        let c = central_series(x);
        (0.5 + c, 0.5 - c)
    } else if x > 0.0 {
        let q = upper_tail_cf(x);
        (1.0 - q, q)
    } else {
        let q = upper_tail_cf(-x);
        (q, 1.0 - q)
    }
}

/// Solves `Phi(x) = u` by bisection on `[-40, 40]`.
pub fn inv_norm_bisection(u: f64) -> f64 {
    bisect(u, -40.0, 40.0)
}

/// As [`inv_norm_bisection`], starting from `guess +- 1e-6` when that
/// bracket verifiably contains the root.
pub fn inv_norm_bisection_near(u: f64, guess: f64) -> f64 {
    let (lo, hi) = (guess - 1e-6, guess + 1e-6);
    if below(lo, u) && !below(hi, u) {
        bisect(u, lo, hi)
    } else {
        inv_norm_bisection(u)
    }
}

/// `Phi(x) < u`, compared on whichever tail keeps precision.
fn below(x: f64, u: f64) -> bool {
    let (p, q) = norm_cdf_pair(x);
    if u <= 0.5 {
        p < u
    } else {
        q > 1.0 - u
    }
}

fn bisect(u: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid, u) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard normal by Box-Muller, independent of the inverse CDF.
pub fn box_muller<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let a = 2.0 * std::f64::consts::PI * u2;
    (r * a.cos(), r * a.sin())
}

/// Mean and standard error of `n` draws of `g(Z)` for standard normal `Z`.
pub fn mc_normal_expectation(n: usize, seed: u64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut k = 0;
    while k < n {
        let (a, b) = box_muller(&mut rng);
        for z in [a, b] {
            if k < n {
                let v = g(z);
                sum += v;
                sum2 += v * v;
                k += 1;
            }
        }
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    (mean, (var / nf).sqrt())
}
