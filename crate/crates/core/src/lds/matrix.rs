use std::fmt;

use crate::error::{invalid, Result};
use crate::f2::{rank_of_masks, Poly2};

/// Which construction produced a matrix set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    NiederreiterNut,
    SobolJoeKuo08,
    SobolJoeKuo03,
    SobolFile(String),
    /// Hand-built matrices (tests, toy examples).
    Custom(String),
    Scrambled(Box<Provenance>),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::NiederreiterNut => f.write_str("niederreiter-nut"),
            Provenance::SobolJoeKuo08 => f.write_str("sobol-joekuo08"),
            Provenance::SobolJoeKuo03 => f.write_str("sobol-joekuo03"),
            Provenance::SobolFile(name) => write!(f, "sobol-file:{name}"),
            Provenance::Custom(name) => write!(f, "custom:{name}"),
            Provenance::Scrambled(inner) => write!(f, "{inner}+scrambled"),
        }
    }
}

/// One `w x w` generating matrix over F2.
///
/// `rows[j]` has bit `v` set iff `c_{j+1, v+1} = 1`: row `j` produces output
/// digit `j` (weight `2^{-j-1}`), column `v` consumes input digit `n_v`.
/// `columns[v]` is the same column packed as a `w`-bit integer with the
/// first output digit in the most significant position, which turns point
/// generation into an XOR of columns.
#[derive(Clone, PartialEq, Eq)]
pub struct GeneratingMatrix {
    rows: Vec<u32>,
    columns: Vec<u32>,
}

impl GeneratingMatrix {
    pub fn from_rows(rows: Vec<u32>) -> Result<Self> {
        let w = rows.len();
        if !(1..=32).contains(&w) {
            return Err(invalid(format!("matrix width {w} outside 1..=32")));
        }
        let mask = width_mask(w as u32);
        if let Some(j) = rows.iter().position(|&r| r & !mask != 0) {
            return Err(invalid(format!("row {} has bits beyond width {w}", j + 1)));
        }
        let columns = rows_to_columns(&rows);
        Ok(GeneratingMatrix { rows, columns })
    }

    pub fn from_columns(columns: Vec<u32>) -> Result<Self> {
        let w = columns.len();
        if !(1..=32).contains(&w) {
            return Err(invalid(format!("matrix width {w} outside 1..=32")));
        }
        let mask = width_mask(w as u32);
        if let Some(v) = columns.iter().position(|&c| c & !mask != 0) {
            return Err(invalid(format!(
                "column {} has bits beyond width {w}",
                v + 1
            )));
        }
        // transpose back: bit (w-1-j) of columns[v] is c_{j+1,v+1}
        let rows = (0..w)
            .map(|j| {
                columns
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c >> (w - 1 - j) & 1 == 1)
                    .fold(0u32, |acc, (v, _)| acc | 1 << v)
            })
            .collect();
        Ok(GeneratingMatrix { rows, columns })
    }

    pub fn identity(w: u32) -> Self {
        Self::from_rows((0..w).map(|j| 1u32 << j).collect()).expect("valid width")
    }

    pub fn width(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn columns(&self) -> &[u32] {
        &self.columns
    }

    /// Entry `c_{j,v}` with 1-based indices.
    pub fn entry(&self, j: usize, v: usize) -> bool {
        self.rows[j - 1] >> (v - 1) & 1 == 1
    }

    /// Top-left `m x m` block as row masks over the low `m` bits.
    pub fn leading_block(&self, m: u32) -> Vec<u32> {
        let mask = width_mask(m);
        self.rows[..m as usize].iter().map(|r| r & mask).collect()
    }

    /// Nonsingular upper triangular: unit diagonal, zeros below it.
    pub fn is_nut(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(j, &r)| r >> j & 1 == 1 && r & ((1u32 << j) - 1) == 0)
    }

    /// F2 rank of the top-left `m x m` block.
    pub fn leading_rank(&self, m: u32) -> usize {
        rank_of_masks(self.leading_block(m).into_iter().map(u64::from))
    }

    /// `self . digits(n)` as a `w`-bit integer, first digit most significant.
    #[inline]
    pub fn apply(&self, n: u64) -> u32 {
        let mut acc = 0u32;
        let mut rest = n;
        let mut v = 0;
        while rest != 0 {
            if rest & 1 == 1 {
                acc ^= self.columns[v];
            }
            rest >>= 1;
            v += 1;
        }
        acc
    }
}

impl fmt::Debug for GeneratingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.width();
        writeln!(f, "GeneratingMatrix {w}x{w}")?;
        for r in &self.rows {
            let s: String = (0..w)
                .map(|v| if r >> v & 1 == 1 { '1' } else { '0' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

pub(crate) fn width_mask(w: u32) -> u32 {
    if w >= 32 {
        u32::MAX
    } else {
        (1u32 << w) - 1
    }
}

fn rows_to_columns(rows: &[u32]) -> Vec<u32> {
    let w = rows.len();
    (0..w)
        .map(|v| {
            rows.iter()
                .enumerate()
                .filter(|(_, &r)| r >> v & 1 == 1)
                .fold(0u32, |acc, (j, _)| acc | 1 << (w - 1 - j))
        })
        .collect()
}

/// The generating matrices `C_1..C_s` of a digital sequence, truncated to
/// `w x w`, plus the polynomial assigned to each dimension.
#[derive(Clone, Debug)]
pub struct GeneratingMatrixSet {
    width: u32,
    matrices: Vec<GeneratingMatrix>,
    provenance: Provenance,
    polys: Vec<Poly2>,
}

/// A point of the sequence: raw `w`-bit integers and their values `v / 2^w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub raw: Vec<u32>,
    pub coords: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Natural,
    Gray,
}

impl GeneratingMatrixSet {
    pub fn new(
        matrices: Vec<GeneratingMatrix>,
        polys: Vec<Poly2>,
        provenance: Provenance,
    ) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(invalid("a matrix set needs at least one dimension"));
        };
        let width = first.width();
        if matrices.iter().any(|c| c.width() != width) {
            return Err(invalid("all generating matrices must share one width"));
        }
        if !polys.is_empty() && polys.len() != matrices.len() {
            return Err(invalid(format!(
                "{} polynomials for {} matrices",
                polys.len(),
                matrices.len()
            )));
        }
        Ok(GeneratingMatrixSet {
            width,
            matrices,
            provenance,
            polys,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Matrix of dimension `i`, 0-based (`C_{i+1}`).
    pub fn matrix(&self, i: usize) -> &GeneratingMatrix {
        &self.matrices[i]
    }

    pub fn matrices(&self) -> &[GeneratingMatrix] {
        &self.matrices
    }

    /// `p_i` per dimension; empty for hand-built sets.
    pub fn polys(&self) -> &[Poly2] {
        &self.polys
    }

    /// Degree `e_i` of dimension `i` (0-based), if a polynomial is attached.
    pub fn degree(&self, i: usize) -> Option<u32> {
        self.polys.get(i).and_then(|p| p.degree())
    }

    /// Keeps the first `s` dimensions.
    pub fn truncated(&self, s: usize) -> Result<Self> {
        if s == 0 || s > self.dim() {
            return Err(invalid(format!(
                "cannot truncate {} dimensions to {s}",
                self.dim()
            )));
        }
        Ok(GeneratingMatrixSet {
            width: self.width,
            matrices: self.matrices[..s].to_vec(),
            provenance: self.provenance.clone(),
            polys: self.polys.get(..s).map(<[_]>::to_vec).unwrap_or_default(),
        })
    }

    fn check_index(&self, n: u64) -> Result<()> {
        if self.width < 64 && n >> self.width != 0 {
            return Err(invalid(format!(
                "index {n} out of range for width {} (n < 2^{})",
                self.width, self.width
            )));
        }
        Ok(())
    }

    pub fn raw_point(&self, n: u64) -> Result<Vec<u32>> {
        self.check_index(n)?;
        Ok(self.matrices.iter().map(|c| c.apply(n)).collect())
    }

    /// Point `x_n`: coordinate `i` is `C_i digits(n)` read as a binary fraction.
    pub fn point(&self, n: u64) -> Result<Point> {
        let raw = self.raw_point(n)?;
        Ok(self.to_point(raw))
    }

    pub(crate) fn to_point(&self, raw: Vec<u32>) -> Point {
        let scale = self.scale();
        let coords = raw.iter().map(|&v| v as f64 * scale).collect();
        Point { raw, coords }
    }

    pub(crate) fn scale(&self) -> f64 {
        (-(self.width as f64)).exp2()
    }

    /// The first `2^m` points in natural or Gray-code order. Both orders
    /// produce the same set.
    pub fn block(&self, m: u32, order: Order) -> Result<Block<'_>> {
        if m > self.width {
            return Err(invalid(format!("m={m} exceeds width {}", self.width)));
        }
        Ok(Block {
            set: self,
            order,
            len: 1u64 << m,
            next: 0,
            state: vec![0; self.dim()],
        })
    }
}

/// Iterator over `2^m` points of a matrix set.
pub struct Block<'a> {
    set: &'a GeneratingMatrixSet,
    order: Order,
    len: u64,
    next: u64,
    state: Vec<u32>,
}

impl Block<'_> {
    /// Advances the raw state without allocating; returns the index `n` of
    /// the point now held in `raw()`.
    pub fn advance(&mut self) -> Option<u64> {
        if self.next >= self.len {
            return None;
        }
        let k = self.next;
        self.next += 1;
        match self.order {
            Order::Natural => {
                for (x, c) in self.state.iter_mut().zip(&self.set.matrices) {
                    *x = c.apply(k);
                }
                Some(k)
            }
            Order::Gray => {
                if k > 0 {
                    let bit = k.trailing_zeros() as usize;
                    for (x, c) in self.state.iter_mut().zip(&self.set.matrices) {
                        *x ^= c.columns[bit];
                    }
                }
                Some(k ^ (k >> 1))
            }
        }
    }

    pub fn raw(&self) -> &[u32] {
        &self.state
    }
}

impl Iterator for Block<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        self.advance()?;
        Some(self.set.to_point(self.state.clone()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.len - self.next) as usize;
        (left, Some(left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GeneratingMatrixSet {
        // C_1 = I, C_2 = [[1,1,0],[0,1,1],[0,0,1]] (rows as strings, column 1 first)
        let c1 = GeneratingMatrix::identity(3);
        let c2 = GeneratingMatrix::from_rows(vec![0b011, 0b110, 0b100]).unwrap();
        GeneratingMatrixSet::new(vec![c1, c2], vec![], Provenance::Custom("toy".into())).unwrap()
    }

    #[test]
    fn rows_and_columns_agree() {
        let c = GeneratingMatrix::from_rows(vec![0b011, 0b110, 0b100]).unwrap();
        let back = GeneratingMatrix::from_columns(c.columns().to_vec()).unwrap();
        assert_eq!(c, back);
        assert!(c.entry(1, 1) && c.entry(1, 2) && !c.entry(1, 3));
        assert!(c.is_nut());
    }

    #[test]
    fn origin_and_first_point() {
        let g = toy();
        assert_eq!(g.point(0).unwrap().coords, vec![0.0, 0.0]);
        assert_eq!(g.point(1).unwrap().coords[0], 0.5);
    }

    #[test]
    fn point_five_by_hand() {
        // n = 5 -> digits (1,0,1).
        // C_2 rows: (1,1,0).(1,0,1)=1, (0,1,1).(1,0,1)=1, (0,0,1).(1,0,1)=1 -> 0.111b
        // C_1: digits as-is -> 0.101b
        let p = toy().point(5).unwrap();
        assert_eq!(p.raw, vec![0b101, 0b111]);
        assert_eq!(p.coords, vec![0.625, 0.875]);
    }

    #[test]
    fn point_index_out_of_range() {
        assert!(toy().point(8).is_err());
    }

    #[test]
    fn gray_and_natural_blocks_are_the_same_set() {
        let g = toy();
        let mut a: Vec<Vec<u32>> = g.block(3, Order::Natural).unwrap().map(|p| p.raw).collect();
        let mut b: Vec<Vec<u32>> = g.block(3, Order::Gray).unwrap().map(|p| p.raw).collect();
        assert_eq!(a.len(), 8);
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(g.block(4, Order::Gray).is_err());
    }

    #[test]
    fn gray_block_reports_indices() {
        let g = toy();
        let mut blk = g.block(3, Order::Gray).unwrap();
        while let Some(n) = blk.advance() {
            assert_eq!(blk.raw(), g.raw_point(n).unwrap().as_slice());
        }
    }
}
