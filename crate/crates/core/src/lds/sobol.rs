use std::path::Path;

use super::matrix::{GeneratingMatrix, GeneratingMatrixSet, Provenance};
use crate::error::{invalid, Error, Result};
use crate::f2::{is_irreducible, Poly2};

/// Initial direction integers for one dimension (`d >= 2`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionEntry {
    pub dim: usize,
    pub degree: u32,
    /// Interior coefficients of `p`, leading and constant terms dropped.
    pub a: u32,
    pub m: Vec<u64>,
}

impl DirectionEntry {
    /// `x^s + a_1 x^{s-1} + ... + a_{s-1} x + 1`.
    pub fn polynomial(&self) -> Poly2 {
        Poly2::from_mask((1u64 << self.degree) | (u64::from(self.a) << 1) | 1)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        let fail = |field: &str, msg: String| {
            Err(Error::Validation(format!("dimension {d}, {field}: {msg}")))
        };
        if self.degree == 0 || self.degree > 31 {
            return fail("s", format!("degree {} outside 1..=31", self.degree));
        }
        if self.degree > 1 && u64::from(self.a) >> (self.degree - 1) != 0 {
            return fail(
                "a",
                format!("{} needs more than s-1 = {} bits", self.a, self.degree - 1),
            );
        }
        if self.degree == 1 && self.a != 0 {
            return fail("a", format!("{} must be 0 for degree 1", self.a));
        }
        if self.m.len() != self.degree as usize {
            return fail(
                "m",
                format!(
                    "expected {} direction integers, found {}",
                    self.degree,
                    self.m.len()
                ),
            );
        }
        for (j, &mj) in self.m.iter().enumerate() {
            let j = j + 1;
            if mj % 2 == 0 {
                return fail(
                    &format!("m_{j}"),
                    format!("{mj}: direction integer must be odd"),
                );
            }
            if mj >> j != 0 {
                return fail(
                    &format!("m_{j}"),
                    format!("{mj}: direction integer must be < 2^{j}"),
                );
            }
        }
        let p = self.polynomial();
        if !is_irreducible(p)? {
            return fail("a", format!("polynomial {p} is reducible"));
        }
        Ok(())
    }
}

/// Direction numbers for dimensions `2..=entries.len()+1`; dimension 1 is
/// implicit (identity matrix).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionTable {
    pub entries: Vec<DirectionEntry>,
    pub provenance: Provenance,
}

impl DirectionTable {
    pub fn new(entries: Vec<DirectionEntry>, provenance: Provenance) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("no data rows".into()));
        }
        for (idx, e) in entries.iter().enumerate() {
            if e.dim != idx + 2 {
                return Err(Error::Validation(format!(
                    "dimension {}: missing dimension, found d={} where d={} was expected",
                    idx + 2,
                    e.dim,
                    idx + 2
                )));
            }
            e.validate()?;
        }
        Ok(DirectionTable {
            entries,
            provenance,
        })
    }

    /// Largest dimension count this table can build.
    pub fn max_dim(&self) -> usize {
        self.entries.len() + 1
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    /// Parses the Joe–Kuo text layout: optional header starting with `d`,
    /// then rows `d s a m_1 .. m_s`.
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || (entries.is_empty() && t.starts_with('d')) {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: source.to_path_buf(),
                line: idx + 1,
                msg,
            };
            let nums = t
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>()
                        .map_err(|_| parse_err(format!("not a nonnegative integer: {tok:?}")))
                })
                .collect::<Result<Vec<u64>>>()?;
            if nums.len() < 4 {
                return Err(parse_err(format!(
                    "expected `d s a m_1 .. m_s`, found {} fields",
                    nums.len()
                )));
            }
            let narrow = |v: u64, what: &str| {
                u32::try_from(v).map_err(|_| parse_err(format!("{what}={v} is too large")))
            };
            entries.push(DirectionEntry {
                dim: nums[0] as usize,
                degree: narrow(nums[1], "s")?,
                a: narrow(nums[2], "a")?,
                m: nums[3..].to_vec(),
            });
        }
        let name = source
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| source.display().to_string());
        DirectionTable::new(entries, Provenance::SobolFile(name))
    }
}

pub fn load_direction_file(path: &Path) -> Result<DirectionTable> {
    let text = std::fs::read_to_string(path)?;
    DirectionTable::parse(&text, path)
}

/// Sobol' matrices by the column recurrence driven by each primitive
/// polynomial; column `v` of `C_i` is `m_v / 2^v` truncated to `w` bits.
pub fn build_sobol_from_directions(
    table: &DirectionTable,
    s: usize,
    w: u32,
) -> Result<GeneratingMatrixSet> {
    if s == 0 {
        return Err(invalid("dimension count must be at least 1"));
    }
    if !(1..=32).contains(&w) {
        return Err(invalid(format!("width {w} outside 1..=32")));
    }
    if s > table.max_dim() {
        return Err(invalid(format!(
            "direction table covers {} dimensions, {s} requested",
            table.max_dim()
        )));
    }
    let mut matrices = vec![GeneratingMatrix::identity(w)];
    let mut polys = vec![Poly2::X];
    for entry in &table.entries[..s - 1] {
        let m = direction_integers(entry, w as usize);
        let columns = m
            .iter()
            .enumerate()
            .map(|(k, &mk)| (mk << (w as usize - 1 - k)) as u32)
            .collect();
        matrices.push(GeneratingMatrix::from_columns(columns)?);
        polys.push(entry.polynomial());
    }
    GeneratingMatrixSet::new(matrices, polys, table.provenance.clone())
}

/// `m_1..m_len`, extending the initial values with
/// `m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ .. ^ 2^{s-1} a_{s-1} m_{k-s+1} ^ 2^s m_{k-s} ^ m_{k-s}`.
pub(crate) fn direction_integers(entry: &DirectionEntry, len: usize) -> Vec<u64> {
    let s = entry.degree as usize;
    let mut m: Vec<u64> = entry.m.iter().copied().take(len).collect();
    for k in s..len {
        let mut next = m[k - s] ^ (m[k - s] << s);
        for t in 1..s {
            if entry.a >> (s - 1 - t) & 1 == 1 {
                next ^= m[k - t] << t;
            }
        }
        m.push(next);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str) -> Result<DirectionTable> {
        DirectionTable::parse(text, &PathBuf::from("test.txt"))
    }

    #[test]
    fn parses_first_published_rows() {
        let t = parse("d       s       a       m_i\n2 1 0 1\n3   2 1 1 3 \n").unwrap();
        assert_eq!(
            t.entries[0],
            DirectionEntry {
                dim: 2,
                degree: 1,
                a: 0,
                m: vec![1]
            }
        );
        assert_eq!(t.entries[1].polynomial(), Poly2::from_mask(0b111));
        assert_eq!(t.max_dim(), 3);
        assert_eq!(t.provenance, Provenance::SobolFile("test.txt".into()));
    }

    #[test]
    fn rejects_empty_even_and_gaps() {
        let e = parse("").unwrap_err().to_string();
        assert!(e.contains("no data rows"), "{e}");
        let e = parse("d s a m\n2 1 0 2\n").unwrap_err().to_string();
        assert!(e.contains("direction integer must be odd"), "{e}");
        let e = parse("2 1 0 1\n4 2 1 1 3\n").unwrap_err().to_string();
        assert!(
            e.contains("missing dimension") && e.contains("dimension 3"),
            "{e}"
        );
        let e = parse("2 2 1 1 5\n").unwrap_err().to_string();
        assert!(e.contains("m_2") && e.contains("< 2^2"), "{e}");
        let e = parse("2 2 0 1 3\n").unwrap_err().to_string();
        assert!(e.contains("reducible"), "{e}");
    }

    #[test]
    fn parse_error_carries_line_number() {
        match parse("d s a m\n2 1 0 1\n3 2 x 1 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn one_dimension_is_van_der_corput() {
        let t = parse("2 1 0 1\n").unwrap();
        let g = build_sobol_from_directions(&t, 1, 32).unwrap();
        let xs: Vec<f64> = (0..8).map(|n| g.point(n).unwrap().coords[0]).collect();
        assert_eq!(xs, [0.0, 0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875]);
    }

    #[test]
    fn toy_table_columns_by_hand() {
        // d=2: p = x+1, m_1 = 1: m_k = m_{k-1} ^ 2 m_{k-1} = 3 m_{k-1} (carry-less)
        //   m = 1, 3, 5, 15, 17, ...
        // d=3: p = x^2+x+1 (a=1), m = (1, 3): m_k = 2 m_{k-1} ^ 4 m_{k-2} ^ m_{k-2}
        //   m_3 = 6 ^ 4 ^ 1 = 3, m_4 = 6 ^ 12 ^ 3 = 9, m_5 = 18 ^ 12 ^ 3 = 29
        let t = parse("2 1 0 1\n3 2 1 1 3\n").unwrap();
        assert_eq!(direction_integers(&t.entries[0], 5), [1, 3, 5, 15, 17]);
        assert_eq!(direction_integers(&t.entries[1], 5), [1, 3, 3, 9, 29]);
        let g = build_sobol_from_directions(&t, 3, 5).unwrap();
        let c3 = g.matrix(2);
        // column v holds m_v / 2^v, first output digit on top
        assert_eq!(c3.columns(), &[0b10000, 0b11000, 0b01100, 0b10010, 0b11101]);
        assert!(g.matrices().iter().all(|c| c.is_nut()));
        // rank and point spot check: n=3 -> columns 1 ^ 2
        assert_eq!(g.raw_point(3).unwrap()[2], 0b10000 ^ 0b11000);
    }

    #[test]
    fn table_too_short_is_rejected() {
        let t = parse("2 1 0 1\n").unwrap();
        assert!(build_sobol_from_directions(&t, 3, 32).is_err());
    }
}
