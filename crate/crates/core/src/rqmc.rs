//! Randomized QMC: linear scrambling plus digital shift, and `M`-replicate
//! estimates with their mean and standard error.

use std::time::Instant;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::lds::{GeneratingMatrix, GeneratingMatrixSet, Order, Point, Provenance};

/// Per-dimension lower-triangular unit-diagonal `L_i` and shift vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scramble {
    width: u32,
    /// `lower[i][j]` has bit `k` set iff `L_i[j][k] = 1`; bit `j` always set.
    lower: Vec<Vec<u32>>,
    shifts: Vec<u32>,
}

impl Scramble {
    /// `L_i = I`, no shift.
    pub fn identity(s: usize, w: u32) -> Self {
        Scramble {
            width: w,
            lower: vec![(0..w).map(|j| 1u32 << j).collect(); s],
            shifts: vec![0; s],
        }
    }

    pub fn new(width: u32, lower: Vec<Vec<u32>>, shifts: Vec<u32>) -> Result<Self> {
        if lower.len() != shifts.len() {
            return Err(invalid("one shift per scrambling matrix is required"));
        }
        for (i, l) in lower.iter().enumerate() {
            if l.len() != width as usize {
                return Err(invalid(format!("L_{} is not {width}x{width}", i + 1)));
            }
            for (j, &row) in l.iter().enumerate() {
                let allowed = if j == 31 {
                    u32::MAX
                } else {
                    (1u32 << (j + 1)) - 1
                };
                if row >> j & 1 != 1 || row & !allowed != 0 {
                    return Err(invalid(format!(
                        "L_{} row {} is not lower triangular with unit diagonal",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let mask = crate::lds::width_mask(width);
        if shifts.iter().any(|&v| v & !mask != 0) {
            return Err(invalid(format!("shift wider than {width} bits")));
        }
        Ok(Scramble {
            width,
            lower,
            shifts,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn lower(&self, i: usize) -> &[u32] {
        &self.lower[i]
    }

    pub fn shift(&self, i: usize) -> u32 {
        self.shifts[i]
    }
}

/// Draws `s` independent `(L_i, shift_i)` from `rng`.
pub fn sample_scramble<R: Rng + ?Sized>(rng: &mut R, s: usize, w: u32) -> Scramble {
    assert!((1..=32).contains(&w), "width {w} outside 1..=32");
    let mask = crate::lds::width_mask(w);
    let mut lower = Vec::with_capacity(s);
    let mut shifts = Vec::with_capacity(s);
    for _ in 0..s {
        let l = (0..w)
            .map(|j| {
                let strictly_lower = if j == 0 {
                    0
                } else {
                    rng.random::<u32>() & ((1u32 << j) - 1)
                };
                strictly_lower | 1 << j
            })
            .collect();
        lower.push(l);
        shifts.push(rng.random::<u32>() & mask);
    }
    Scramble {
        width: w,
        lower,
        shifts,
    }
}

/// `C_i <- L_i C_i`. Row `j` of the product is the XOR of rows `k <= j` of
/// `C_i` selected by row `j` of `L_i`.
pub fn apply_scramble(g: &GeneratingMatrixSet, sc: &Scramble) -> Result<GeneratingMatrixSet> {
    if g.width() != sc.width {
        return Err(invalid(format!(
            "scramble width {} does not match matrix width {}",
            sc.width,
            g.width()
        )));
    }
    if sc.dim() < g.dim() {
        return Err(invalid(format!(
            "scramble covers {} dimensions, matrix set has {}",
            sc.dim(),
            g.dim()
        )));
    }
    let matrices = g
        .matrices()
        .iter()
        .zip(&sc.lower)
        .map(|(c, l)| {
            let rows = l
                .iter()
                .map(|&lrow| {
                    let mut acc = 0u32;
                    let mut bits = lrow;
                    while bits != 0 {
                        acc ^= c.rows()[bits.trailing_zeros() as usize];
                        bits &= bits - 1;
                    }
                    acc
                })
                .collect();
            GeneratingMatrix::from_rows(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = match g.provenance() {
        p @ Provenance::Scrambled(_) => p.clone(),
        p => Provenance::Scrambled(Box::new(p.clone())),
    };
    GeneratingMatrixSet::new(matrices, g.polys().to_vec(), provenance)
}

/// Maps a raw `w`-bit value into `[2^{-(w+1)}, 1 - 2^{-(w+1)}]`.
#[inline]
pub fn clamp_unit(raw: u32, w: u32) -> f64 {
    let x = raw as f64 * (-(w as f64)).exp2();
    let eps = (-(w as f64) - 1.0).exp2();
    x.clamp(eps, 1.0 - eps)
}

/// Point `n` of an already scrambled set with the digital shift applied.
pub fn randomized_point(n: u64, scrambled: &GeneratingMatrixSet, sc: &Scramble) -> Result<Point> {
    if sc.dim() < scrambled.dim() || sc.width != scrambled.width() {
        return Err(invalid("scramble does not match the matrix set"));
    }
    let raw: Vec<u32> = scrambled
        .raw_point(n)?
        .into_iter()
        .zip(&sc.shifts)
        .map(|(v, &sh)| v ^ sh)
        .collect();
    let w = scrambled.width();
    let coords = raw.iter().map(|&v| clamp_unit(v, w)).collect();
    Ok(Point { raw, coords })
}

/// A function on `(0,1)^s`.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, u: &[f64]) -> f64;

    /// Evaluates `out.len()` points stored row-major in `points`.
    fn eval_batch(&self, points: &[f64], out: &mut [f64]) {
        let s = self.dim();
        for (u, o) in points.chunks_exact(s).zip(out.iter_mut()) {
            *o = self.eval(u);
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Integrand for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, u: &[f64]) -> f64 {
        (self.1)(u)
    }
}

/// Where the replicates draw their points from.
#[derive(Clone, Copy, Debug)]
pub enum PointSource<'a> {
    /// A digital net, randomized afresh for every replicate.
    Qmc(&'a GeneratingMatrixSet),
    /// Independent uniforms, `2^m` per replicate.
    MonteCarlo,
}

impl PointSource<'_> {
    pub fn label(&self) -> String {
        match self {
            PointSource::Qmc(g) => g.provenance().to_string(),
            PointSource::MonteCarlo => "mc".to_string(),
        }
    }
}

/// `M` replicate estimates `Q_1..Q_M`, their mean and standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSummary {
    pub generator: String,
    pub m: u32,
    pub seed: u64,
    pub replicates: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub seconds: f64,
}

impl EstimateSummary {
    /// `mean = (1/M) sum Q_l`, `stderr = sqrt(sum (Q_l - mean)^2 / (M (M-1)))`,
    /// both summed in replicate order.
    pub fn from_replicates(generator: String, m: u32, seed: u64, replicates: Vec<f64>) -> Self {
        let (mean, stderr) = mean_and_stderr(&replicates);
        EstimateSummary {
            generator,
            m,
            seed,
            replicates,
            mean,
            stderr,
            seconds: 0.0,
        }
    }

    pub fn reps(&self) -> usize {
        self.replicates.len()
    }

    pub fn log2_stderr(&self) -> f64 {
        self.stderr.log2()
    }
}

pub fn mean_and_stderr(q: &[f64]) -> (f64, f64) {
    let m = q.len() as f64;
    let mean = q.iter().sum::<f64>() / m;
    let ss: f64 = q.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (m * (m - 1.0))).sqrt())
}

/// Number of points handed to [`Integrand::eval_batch`] at once.
pub const BATCH: usize = 256;

/// Default number of randomizations.
pub const DEFAULT_REPS: usize = 100;

/// The RNG stream owned by replicate `l` (0-based) under master `seed`.
pub fn replicate_rng(seed: u64, l: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(l as u64);
    rng
}

/// Runs `reps` independent replicates of the `2^m`-point rule.
pub fn estimate<F: Integrand + ?Sized>(
    f: &F,
    source: PointSource<'_>,
    m: u32,
    reps: usize,
    seed: u64,
) -> Result<EstimateSummary> {
    if reps < 2 {
        return Err(invalid(format!(
            "at least 2 replicates are needed, got {reps}"
        )));
    }
    let s = f.dim();
    if let PointSource::Qmc(g) = source {
        if g.dim() < s {
            return Err(invalid(format!(
                "integrand needs {s} dimensions, generator has {}",
                g.dim()
            )));
        }
        if m > g.width() {
            return Err(invalid(format!("m={m} exceeds width {}", g.width())));
        }
    } else if m > 40 {
        return Err(invalid(format!("m={m} is too large for Monte Carlo")));
    }
    let start = Instant::now();
    let replicates = (0..reps)
        .into_par_iter()
        .map(|l| {
            let mut rng = replicate_rng(seed, l);
            match source {
                PointSource::Qmc(g) => qmc_replicate(f, g, m, l, &mut rng),
                PointSource::MonteCarlo => mc_replicate(f, m, l, &mut rng),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut summary = EstimateSummary::from_replicates(source.label(), m, seed, replicates);
    summary.seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}

fn check_finite(out: &[f64], indices: &[u64], l: usize) -> Result<()> {
    match out.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite {
            n: indices[k],
            replicate: l + 1,
            value: out[k],
        }),
        None => Ok(()),
    }
}

fn qmc_replicate<F: Integrand + ?Sized>(
    f: &F,
    g: &GeneratingMatrixSet,
    m: u32,
    l: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let s = f.dim();
    let g = g.truncated(s)?;
    let sc = sample_scramble(rng, s, g.width());
    let scrambled = apply_scramble(&g, &sc)?;
    let w = g.width();
    let mut block = scrambled.block(m, Order::Gray)?;
    let mut buf = vec![0.0; BATCH * s];
    let mut out = vec![0.0; BATCH];
    let mut idx = vec![0u64; BATCH];
    let mut sum = 0.0;
    loop {
        let mut filled = 0;
        while filled < BATCH {
            let Some(n) = block.advance() else { break };
            let row = &mut buf[filled * s..(filled + 1) * s];
            for ((x, &raw), &sh) in row.iter_mut().zip(block.raw()).zip(&sc.shifts) {
                *x = clamp_unit(raw ^ sh, w);
            }
            idx[filled] = n;
            filled += 1;
        }
        if filled == 0 {
            break;
        }
        f.eval_batch(&buf[..filled * s], &mut out[..filled]);
        check_finite(&out[..filled], &idx[..filled], l)?;
        sum += out[..filled].iter().sum::<f64>();
    }
    Ok(sum / (1u64 << m) as f64)
}

fn mc_replicate<F: Integrand + ?Sized>(
    f: &F,
    m: u32,
    l: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let s = f.dim();
    let total = 1u64 << m;
    let mut buf = vec![0.0; BATCH * s];
    let mut out = vec![0.0; BATCH];
    let mut idx = vec![0u64; BATCH];
    let mut sum = 0.0;
    let mut n = 0u64;
    while n < total {
        let filled = (total - n).min(BATCH as u64) as usize;
        for x in &mut buf[..filled * s] {
            *x = rng.sample(Open01);
        }
        for (k, slot) in idx[..filled].iter_mut().enumerate() {
            *slot = n + k as u64;
        }
        f.eval_batch(&buf[..filled * s], &mut out[..filled]);
        check_finite(&out[..filled], &idx[..filled], l)?;
        sum += out[..filled].iter().sum::<f64>();
        n += filled as u64;
    }
    Ok(sum / total as f64)
}
