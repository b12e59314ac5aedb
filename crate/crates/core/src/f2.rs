//! Arithmetic over the two-element field: polynomials packed into machine
//! words, Laurent expansions of `g / p^u` at infinity, and bit-matrix rank.

use std::fmt;

use crate::error::{invalid, Result};

/// A polynomial over F2. Bit `k` of the mask is the coefficient of `x^k`.
///
/// The zero polynomial has no degree; [`Poly2::degree`] returns `None` for it.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly2(u64);

impl Poly2 {
    pub const ZERO: Poly2 = Poly2(0);
    pub const ONE: Poly2 = Poly2(1);
    pub const X: Poly2 = Poly2(0b10);

    pub const fn from_mask(mask: u64) -> Self {
        Poly2(mask)
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `x^k`.
    pub fn monomial(k: u32) -> Self {
        assert!(k < 64, "x^{k} does not fit in a 64-bit mask");
        Poly2(1 << k)
    }

    pub fn degree(self) -> Option<u32> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros())
    }

    /// Carry-less product. Panics if the product would not fit in 64 bits.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: Poly2) -> Poly2 {
        self.checked_mul(rhs)
            .expect("polynomial product exceeds degree 63")
    }

    pub fn checked_mul(self, rhs: Poly2) -> Option<Poly2> {
        match (self.degree(), rhs.degree()) {
            (None, _) | (_, None) => Some(Poly2::ZERO),
            (Some(a), Some(b)) if a + b > 63 => None,
            _ => Some(Poly2(clmul(self.0 as u128, rhs.0 as u128) as u64)),
        }
    }

    /// Quotient and remainder of long division by a nonzero divisor.
    pub fn div_rem(self, divisor: Poly2) -> (Poly2, Poly2) {
        let (q, r) = div_rem_wide(self.0 as u128, divisor.0 as u128);
        (Poly2(q as u64), Poly2(r as u64))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn rem(self, divisor: Poly2) -> Poly2 {
        self.div_rem(divisor).1
    }

    pub fn pow(self, e: u32) -> Poly2 {
        (0..e).fold(Poly2::ONE, |acc, _| acc.mul(self))
    }
}

impl std::ops::Add for Poly2 {
    type Output = Poly2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Poly2) -> Poly2 {
        Poly2(self.0 ^ rhs.0)
    }
}

impl std::ops::Mul for Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: Poly2) -> Poly2 {
        Poly2::mul(self, rhs)
    }
}

impl fmt::Debug for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly2({self})")
    }
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(deg) = self.degree() else {
            return f.write_str("0");
        };
        let mut first = true;
        for k in (0..=deg).rev().filter(|&k| self.0 >> k & 1 == 1) {
            if !first {
                f.write_str("+")?;
            }
            first = false;
            match k {
                0 => f.write_str("1")?,
                1 => f.write_str("x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        Ok(())
    }
}

pub(crate) fn clmul(a: u128, b: u128) -> u128 {
    let mut acc = 0u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn deg_wide(p: u128) -> u32 {
    127 - p.leading_zeros()
}

pub(crate) fn div_rem_wide(num: u128, den: u128) -> (u128, u128) {
    assert!(den != 0, "division by the zero polynomial");
    let dd = deg_wide(den);
    let mut q = 0u128;
    let mut r = num;
    while r != 0 && deg_wide(r) >= dd {
        let shift = deg_wide(r) - dd;
        q |= 1 << shift;
        r ^= den << shift;
    }
    (q, r)
}

/// Irreducibility by trial division against every polynomial of degree
/// `1..=deg(p)/2`.
pub fn is_irreducible(p: Poly2) -> Result<bool> {
    let deg = match p.degree() {
        Some(d) if d >= 1 => d,
        _ => {
            return Err(invalid(format!(
                "irreducibility needs degree >= 1, got {p}"
            )))
        }
    };
    for divisor in 2u64..(1u64 << (deg / 2 + 1)) {
        if p.rem(Poly2(divisor)).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The first `count` irreducible polynomials in ascending (degree, mask)
/// order. The list starts `x, x+1, x^2+x+1, x^3+x+1, x^3+x^2+1, ...`.
pub fn enumerate_irreducibles(count: usize) -> Vec<Poly2> {
    let mut out: Vec<Poly2> = Vec::with_capacity(count);
    let mut mask = 2u64;
    while out.len() < count {
        let p = Poly2(mask);
        let deg = p.degree().unwrap();
        let irreducible = deg == 1
            || (mask & 1 == 1
                && out
                    .iter()
                    .take_while(|q| q.degree().unwrap() <= deg / 2)
                    .all(|&q| !p.rem(q).is_zero()));
        if irreducible {
            out.push(p);
        }
        mask += 1;
    }
    out
}

/// Coefficients `a_1..a_w` of `g(x)/p(x)^u = sum_{v>=1} a_v x^{-v}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LaurentCoeffs {
    bits: u64,
    width: u32,
}

impl LaurentCoeffs {
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Coefficient of `x^{-v}`, `1 <= v <= width`.
    pub fn get(&self, v: u32) -> bool {
        assert!(
            (1..=self.width).contains(&v),
            "v={v} out of 1..={}",
            self.width
        );
        self.bits >> (v - 1) & 1 == 1
    }

    /// Bit `v-1` holds `a_v`, i.e. the layout of a generating-matrix row.
    pub fn as_row_mask(&self) -> u64 {
        self.bits
    }

    pub fn to_vec(&self) -> Vec<u8> {
        (1..=self.width).map(|v| self.get(v) as u8).collect()
    }
}

/// Expands `g / p^u` at infinity to `w` terms by long division of
/// `g * x^w` by `p^u`.
pub fn laurent_coeffs(g: Poly2, p: Poly2, u: u32, w: u32) -> Result<LaurentCoeffs> {
    let e = p
        .degree()
        .ok_or_else(|| invalid("Laurent expansion by the zero polynomial"))?;
    if u == 0 {
        return Err(invalid("Laurent expansion needs u >= 1"));
    }
    if !(1..=64).contains(&w) {
        return Err(invalid(format!("width {w} outside 1..=64")));
    }
    let pu_deg = u * e;
    if let Some(dg) = g.degree() {
        if dg >= pu_deg {
            return Err(invalid(format!(
                "deg(g)={dg} must be below deg(p^u)={pu_deg}"
            )));
        }
    }
    if pu_deg + w > 127 {
        return Err(invalid(format!(
            "deg(p^u)={pu_deg} with width {w} exceeds 128-bit division"
        )));
    }
    let pu = (0..u).fold(1u128, |acc, _| clmul(acc, p.0 as u128));
    let (q, _) = div_rem_wide((g.0 as u128) << w, pu);
    // q = sum_v a_v x^{w-v}
    let mut bits = 0u64;
    for v in 1..=w {
        if q >> (w - v) & 1 == 1 {
            bits |= 1 << (v - 1);
        }
    }
    Ok(LaurentCoeffs { bits, width: w })
}

/// One row of a bit matrix; bit `k` is column `k + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitRow {
    bits: u64,
    width: u32,
}

impl BitRow {
    pub fn new(bits: u64, width: u32) -> Self {
        assert!((1..=64).contains(&width));
        let mask = if width == 64 {
            u64::MAX
        } else {
            (1 << width) - 1
        };
        BitRow {
            bits: bits & mask,
            width,
        }
    }

    /// Parses `"1010"`, leftmost character = column 1.
    pub fn parse(s: &str) -> Result<Self> {
        let width = s.len() as u32;
        if !(1..=64).contains(&width) {
            return Err(invalid(format!("bit row {s:?} must have 1..=64 bits")));
        }
        let mut bits = 0u64;
        for (k, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1 << k,
                '0' => {}
                _ => return Err(invalid(format!("bad bit {c:?} in {s:?}"))),
            }
        }
        Ok(BitRow { bits, width })
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn width(&self) -> u32 {
        self.width
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.width)
            .map(|k| if self.bits >> k & 1 == 1 { '1' } else { '0' })
            .collect();
        write!(f, "BitRow({s})")
    }
}

/// Rank over F2. All rows must share one width.
pub fn rank(rows: &[BitRow]) -> usize {
    if let Some(first) = rows.first() {
        assert!(
            rows.iter().all(|r| r.width == first.width),
            "rank: rows have mixed widths"
        );
    }
    rank_of_masks(rows.iter().map(|r| r.bits))
}

pub(crate) fn rank_of_masks(rows: impl IntoIterator<Item = u64>) -> usize {
    let mut basis = XorBasis::default();
    rows.into_iter().filter(|&r| basis.insert(r)).count()
}

/// Linear span kept in echelon form keyed by each vector's highest bit.
#[derive(Clone, Debug)]
pub(crate) struct XorBasis {
    pivots: [u64; 64],
}

impl Default for XorBasis {
    fn default() -> Self {
        XorBasis { pivots: [0; 64] }
    }
}

impl XorBasis {
    /// Adds `v` to the span; false if it was already in it.
    #[inline]
    pub(crate) fn insert(&mut self, mut v: u64) -> bool {
        while v != 0 {
            let hb = 63 - v.leading_zeros() as usize;
            let p = self.pivots[hb];
            if p == 0 {
                self.pivots[hb] = v;
                return true;
            }
            v ^= p;
        }
        false
    }
}
