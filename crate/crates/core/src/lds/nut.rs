use std::path::Path;

use super::matrix::{GeneratingMatrix, GeneratingMatrixSet, Provenance};
use crate::error::{invalid, Error, Result};
use crate::f2::{clmul, div_rem_wide, enumerate_irreducibles, Poly2};

/// Niederreiter matrices with rows reordered into NUT form.
///
/// Dimension `i` uses the `i`-th irreducible `p_i` (degree `e_i`) and the
/// polynomials `g_{i,k} = x^{e_i-1-k}`. Row `j` (1-based) is the Laurent
/// expansion of `g_{i,k} / p_i^{Q+1}` where `j - 1 = Q e_i + k`.
pub fn build_niederreiter_nut(s: usize, w: u32) -> Result<GeneratingMatrixSet> {
    if s == 0 {
        return Err(invalid("dimension count must be at least 1"));
    }
    if !(1..=32).contains(&w) {
        return Err(invalid(format!("width {w} outside 1..=32")));
    }
    let polys = enumerate_irreducibles(s);
    let matrices = polys
        .iter()
        .map(|&p| nut_matrix(p, w))
        .collect::<Result<Vec<_>>>()?;
    GeneratingMatrixSet::new(matrices, polys, Provenance::NiederreiterNut)
}

fn nut_matrix(p: Poly2, w: u32) -> Result<GeneratingMatrix> {
    let e = p
        .degree()
        .filter(|&e| e >= 1)
        .ok_or_else(|| invalid("p must have degree >= 1"))?;
    let max_power = (w - 1) / e + 1;
    if max_power * e + w > 127 {
        return Err(invalid(format!("degree {e} too large for width {w}")));
    }
    let mut power = p.mask() as u128;
    let mut rows = Vec::with_capacity(w as usize);
    for j in 0..w {
        let (q, k) = (j / e, j % e);
        if q > 0 && k == 0 {
            power = clmul(power, p.mask() as u128);
        }
        let g = 1u128 << (e - 1 - k);
        let (quot, _) = div_rem_wide(g << w, power);
        // quot = sum_v a_v x^{w-v}; store a_v at bit v-1
        let mut row = 0u32;
        for v in 1..=w {
            if quot >> (w - v) & 1 == 1 {
                row |= 1 << (v - 1);
            }
        }
        rows.push(row);
    }
    GeneratingMatrix::from_rows(rows)
}

/// Reads a polynomial list (one bitmask per line, ascending dimension) and
/// reports the first dimension where it departs from our enumeration.
pub fn load_polynomial_list(path: &Path) -> Result<Vec<Poly2>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mask: u64 = t.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: format!("expected a polynomial bitmask, got {t:?}"),
        })?;
        out.push(Poly2::from_mask(mask));
    }
    Ok(out)
}

/// Index (0-based dimension) of the first disagreement, if any.
pub fn first_polynomial_mismatch(list: &[Poly2]) -> Option<usize> {
    let ours = enumerate_irreducibles(list.len());
    list.iter().zip(&ours).position(|(a, b)| a != b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2::laurent_coeffs;

    #[test]
    fn first_dimension_is_identity() {
        for w in [1, 5, 32] {
            let g = build_niederreiter_nut(1, w).unwrap();
            assert_eq!(g.matrix(0), &GeneratingMatrix::identity(w));
        }
    }

    #[test]
    fn second_dimension_rows_are_powers_of_one_over_x_plus_one() {
        let g = build_niederreiter_nut(2, 4).unwrap();
        let c2 = g.matrix(1);
        let p = Poly2::from_mask(0b11);
        for j in 1..=4u32 {
            let expect = laurent_coeffs(Poly2::ONE, p, j, 4).unwrap();
            assert_eq!(
                c2.rows()[j as usize - 1] as u64,
                expect.as_row_mask(),
                "row {j}"
            );
        }
        // 1/(x+1)^2 = 1/(x^2+1) = x^-2 + x^-4 + ...
        assert_eq!(c2.rows()[1], 0b1010);
    }

    #[test]
    fn row_rule_matches_generic_laurent_for_degree_three() {
        let g = build_niederreiter_nut(5, 12).unwrap();
        let p = g.polys()[4];
        assert_eq!(p, Poly2::from_mask(0b1101));
        for j in 1..=12u32 {
            let (q, k) = ((j - 1) / 3, (j - 1) % 3);
            let gk = Poly2::monomial(2 - k);
            let expect = laurent_coeffs(gk, p, q + 1, 12).unwrap();
            assert_eq!(
                g.matrix(4).rows()[j as usize - 1] as u64,
                expect.as_row_mask()
            );
        }
    }

    #[test]
    fn matrices_are_nut() {
        let g = build_niederreiter_nut(300, 32).unwrap();
        for (i, c) in g.matrices().iter().enumerate() {
            assert!(c.is_nut(), "dimension {}", i + 1);
        }
    }

    #[test]
    fn own_enumeration_has_no_mismatch() {
        let list = enumerate_irreducibles(50);
        assert_eq!(first_polynomial_mismatch(&list), None);
        let mut swapped = list.clone();
        swapped.swap(3, 4);
        assert_eq!(first_polynomial_mismatch(&swapped), Some(3));
    }
}
