//! Exact t-values of digital nets and of their projections.
//!
//! For blocks `C_1..C_k` (top-left `m x m` pieces of the generating
//! matrices) the net is a `(t, m, k)`-net with `t = m - rho`, where `rho` is
//! the largest `r` such that for every split `d_1 + .. + d_k = r` the first
//! `d_i` rows of each block are jointly linearly independent.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::f2::XorBasis;
use crate::lds::GeneratingMatrixSet;

/// Top-left `m x m` blocks of the selected dimensions (1-based).
pub fn project(g: &GeneratingMatrixSet, dims: &[usize], m: u32) -> Result<Vec<Vec<u32>>> {
    if m > g.width() {
        return Err(invalid(format!("m={m} exceeds width {}", g.width())));
    }
    for (k, &d) in dims.iter().enumerate() {
        if d == 0 || d > g.dim() {
            return Err(invalid(format!("dimension {d} outside 1..={}", g.dim())));
        }
        if dims[..k].contains(&d) {
            return Err(invalid(format!("dimension {d} listed twice")));
        }
    }
    Ok(dims
        .iter()
        .map(|&d| g.matrix(d - 1).leading_block(m))
        .collect())
}

fn check_blocks(blocks: &[Vec<u32>], m: u32) -> Result<()> {
    if blocks.is_empty() {
        return Err(invalid("at least one block is required"));
    }
    if m > 32 {
        return Err(invalid(format!("m={m} exceeds 32")));
    }
    let mask = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    for (i, b) in blocks.iter().enumerate() {
        if b.len() != m as usize || b.iter().any(|r| r & !mask != 0) {
            return Err(invalid(format!("block {} is not {m}x{m}", i + 1)));
        }
    }
    Ok(())
}

/// t-value of the net spanned by `blocks`; pairs go through the row-profile
/// shortcut, everything else through the composition enumeration.
pub fn t_value(blocks: &[Vec<u32>], m: u32) -> Result<u32> {
    match blocks {
        [a, b] => t_value_pair(a, b, m),
        _ => t_value_generic(blocks, m),
    }
}

/// Direct definition: test every composition of `r` for `r = 1, 2, ..`
/// until one is dependent.
pub fn t_value_generic(blocks: &[Vec<u32>], m: u32) -> Result<u32> {
    check_blocks(blocks, m)?;
    let k = blocks.len();
    let mut parts = vec![0u32; k];
    for r in 1..=m {
        if !all_compositions_independent(blocks, r, m, &mut parts, 0) {
            return Ok(m - (r - 1));
        }
    }
    Ok(0)
}

fn all_compositions_independent(
    blocks: &[Vec<u32>],
    remaining: u32,
    m: u32,
    parts: &mut [u32],
    pos: usize,
) -> bool {
    if pos + 1 == parts.len() {
        if remaining > m {
            return true; // no such composition
        }
        parts[pos] = remaining;
        let mut basis = XorBasis::default();
        return blocks.iter().zip(parts.iter()).all(|(b, &d)| {
            b[..d as usize]
                .iter()
                .all(|&row| basis.insert(u64::from(row)))
        });
    }
    for d in 0..=remaining.min(m) {
        parts[pos] = d;
        if !all_compositions_independent(blocks, remaining - d, m, parts, pos + 1) {
            return false;
        }
    }
    true
}

/// Two-block shortcut: for each `d_1` find the largest `h(d_1)` such that
/// the first `d_1` rows of `a` with the first `h(d_1)` rows of `b` are
/// independent; then `rho = min(m, min_{d_1} d_1 + h(d_1))`.
pub fn t_value_pair(a: &[u32], b: &[u32], m: u32) -> Result<u32> {
    check_blocks(&[a.to_vec(), b.to_vec()], m)?;
    let mut rho = m as i64;
    let mut prev_h = i64::MAX;
    for d1 in 0..=m as usize {
        let mut basis = XorBasis::default();
        let h: i64 = if a[..d1].iter().all(|&r| basis.insert(u64::from(r))) {
            b.iter()
                .take_while(|&&r| basis.insert(u64::from(r)))
                .count() as i64
        } else {
            -1
        };
        debug_assert!(h <= prev_h, "independence profile must not grow with d1");
        prev_h = h;
        rho = rho.min(d1 as i64 + h);
    }
    Ok(m - rho.max(0) as u32)
}

/// Smallest `t` such that every elementary dyadic box of volume `2^{t-m}`
/// holds exactly `2^t` of the `2^m` points, by direct counting. Test-scale
/// only: refuses `k > 3` or `m > 12`.
pub fn t_value_bruteforce(points: &[Vec<f64>], m: u32) -> Result<u32> {
    let k = points.first().map_or(0, Vec::len);
    if k == 0 || k > 3 || m > 12 {
        return Err(Error::Refused(format!(
            "brute-force t-value is limited to 1..=3 dimensions and m <= 12 (got k={k}, m={m})"
        )));
    }
    if points.len() != 1usize << m || points.iter().any(|p| p.len() != k) {
        return Err(invalid(format!(
            "expected exactly 2^{m} points of dimension {k}"
        )));
    }
    for t in 0..=m {
        if every_box_holds(points, m - t, 1u64 << t) {
            return Ok(t);
        }
    }
    unreachable!("t = m always holds")
}

fn every_box_holds(points: &[Vec<f64>], total: u32, expected: u64) -> bool {
    let k = points[0].len();
    let mut shape = vec![0u32; k];
    loop {
        if shape.iter().sum::<u32>() == total {
            let cells = 1usize << total;
            let mut counts = vec![0u64; cells];
            for p in points {
                let mut idx = 0usize;
                for (x, &d) in p.iter().zip(&shape) {
                    let cell = (x * (1u64 << d) as f64).floor() as usize;
                    idx = (idx << d) | cell;
                }
                counts[idx] += 1;
            }
            if counts.iter().any(|&c| c != expected) {
                return false;
            }
        }
        // odometer over shapes with entries 0..=total
        let mut pos = 0;
        loop {
            if pos == k {
                return true;
            }
            if shape[pos] < total {
                shape[pos] += 1;
                break;
            }
            shape[pos] = 0;
            pos += 1;
        }
    }
}

/// `t(i, s; m)` for all `1 <= i < s <= s_max` and their frequencies.
#[derive(Clone, Debug)]
pub struct TValueTable {
    pub generator: String,
    pub m: u32,
    pub s_max: usize,
    /// Flat, ordered by `s` then `i`.
    entries: Vec<u8>,
    /// `histogram[t]` = number of pairs with that t-value, `t = 0..=m`.
    pub histogram: Vec<u64>,
}

impl TValueTable {
    /// `t(i, s; m)` for `1 <= i < s <= s_max`.
    pub fn t(&self, i: usize, s: usize) -> u32 {
        assert!(
            1 <= i && i < s && s <= self.s_max,
            "pair ({i}, {s}) out of range"
        );
        self.entries[(s - 1) * (s - 2) / 2 + (i - 1)] as u32
    }

    /// `(i, s, t)` in the stored order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (2..=self.s_max).flat_map(move |s| (1..s).map(move |i| (i, s, self.t(i, s))))
    }

    pub fn total(&self) -> u64 {
        self.histogram.iter().sum()
    }

    /// Histogram without trailing zero bins.
    pub fn trimmed_histogram(&self) -> &[u64] {
        let end = self
            .histogram
            .iter()
            .rposition(|&c| c != 0)
            .map_or(0, |p| p + 1);
        &self.histogram[..end]
    }
}

/// Per-dimension data reused by every pair containing that dimension.
struct Prepared {
    rows: Vec<u32>,
    /// Rows of the inverse of the leading block, if it is nonsingular.
    inverse: Option<Vec<u32>>,
}

impl Prepared {
    fn new(block: Vec<u32>, m: u32) -> Self {
        let inverse = invert(&block, m);
        Prepared {
            rows: block,
            inverse,
        }
    }
}

/// Gauss–Jordan inverse of an `m x m` row-mask matrix.
fn invert(rows: &[u32], m: u32) -> Option<Vec<u32>> {
    let m = m as usize;
    let mut a: Vec<u32> = rows.to_vec();
    let mut inv: Vec<u32> = (0..m).map(|j| 1u32 << j).collect();
    for col in 0..m {
        let pivot = (col..m).find(|&r| a[r] >> col & 1 == 1)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..m {
            if r != col && a[r] >> col & 1 == 1 {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    Some(inv)
}

/// Pair t-value using a precomputed inverse of the first block: right
/// multiplication by `A^{-1}` turns the rows of `A` into unit vectors, so
/// independence with the first `d_1` rows of `A` reduces to dropping the
/// first `d_1` columns of `B A^{-1}`.
fn pair_t_fast(a_inv: &[u32], b: &[u32], m: u32) -> u32 {
    let mut reduced = [0u32; 32];
    for (dst, &row) in reduced.iter_mut().zip(b) {
        let mut acc = 0u32;
        let mut bits = row;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            acc ^= a_inv[v];
            bits &= bits - 1;
        }
        *dst = acc;
    }
    let reduced = &reduced[..m as usize];
    let mut best = m;
    let mut d1 = 0;
    while d1 < best {
        // only an h(d1) below best - d1 can lower the minimum
        let need = (best - d1) as usize;
        let keep = !((1u32 << d1) - 1);
        let mut basis = XorBasis::default();
        if let Some(h) = reduced[..need]
            .iter()
            .position(|&r| !basis.insert(u64::from(r & keep)))
        {
            best = d1 + h as u32;
        }
        d1 += 1;
    }
    m - best
}

/// Builds the frequency table of `t(i, s; m)` over all pairs of the first
/// `s_max` dimensions. Pairs are spread across the rayon pool.
pub fn pair_t_table(g: &GeneratingMatrixSet, m: u32, s_max: usize) -> Result<TValueTable> {
    if s_max < 2 || s_max > g.dim() {
        return Err(invalid(format!(
            "s_max={s_max} must lie in 2..={}",
            g.dim()
        )));
    }
    if m == 0 || m > g.width() {
        return Err(invalid(format!("m={m} must lie in 1..={}", g.width())));
    }
    let prepared: Vec<Prepared> = (0..s_max)
        .into_par_iter()
        .map(|i| Prepared::new(g.matrix(i).leading_block(m), m))
        .collect();
    let columns: Vec<Vec<u8>> = (2..=s_max)
        .into_par_iter()
        .map(|s| {
            let b = &prepared[s - 1];
            (1..s)
                .map(|i| {
                    let a = &prepared[i - 1];
                    let t = match &a.inverse {
                        Some(inv) => pair_t_fast(inv, &b.rows, m),
                        None => t_value_pair(&a.rows, &b.rows, m).expect("blocks are square"),
                    };
                    t as u8
                })
                .collect()
        })
        .collect();
    let mut histogram = vec![0u64; m as usize + 1];
    let mut entries = Vec::with_capacity(s_max * (s_max - 1) / 2);
    for col in columns {
        for &t in &col {
            histogram[t as usize] += 1;
        }
        entries.extend(col);
    }
    Ok(TValueTable {
        generator: g.provenance().to_string(),
        m,
        s_max,
        entries,
        histogram,
    })
}
