//! Digital sequences over F2: generating matrices for Niederreiter (NUT) and
//! Sobol' sequences and point emission in natural or Gray-code order.

mod matrix;
mod nut;
mod sobol;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub(crate) use matrix::width_mask;
pub use matrix::{Block, GeneratingMatrix, GeneratingMatrixSet, Order, Point, Provenance};
pub use nut::{build_niederreiter_nut, first_polynomial_mismatch, load_polynomial_list};
pub use sobol::{build_sobol_from_directions, load_direction_file, DirectionEntry, DirectionTable};

use crate::error::{invalid, Result};

/// Bits per coordinate.
pub const DEFAULT_WIDTH: u32 = 32;

/// Largest dimension count supported by the built-in generators.
pub const MAX_DIM: usize = 21201;

/// Named generators accepted on the command line.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorId {
    NiederreiterNut,
    SobolJoeKuo08,
    SobolJoeKuo03,
    SobolFile(String),
}

impl GeneratorId {
    /// True when a direction-number file must be supplied.
    pub fn needs_file(&self) -> bool {
        !matches!(self, GeneratorId::NiederreiterNut)
    }

    fn provenance(&self) -> Provenance {
        match self {
            GeneratorId::NiederreiterNut => Provenance::NiederreiterNut,
            GeneratorId::SobolJoeKuo08 => Provenance::SobolJoeKuo08,
            GeneratorId::SobolJoeKuo03 => Provenance::SobolJoeKuo03,
            GeneratorId::SobolFile(name) => Provenance::SobolFile(name.clone()),
        }
    }

    /// Builds `s` dimensions at width `w`. Sobol' variants read `file`.
    pub fn build(&self, s: usize, w: u32, file: Option<&Path>) -> Result<GeneratingMatrixSet> {
        if s > MAX_DIM {
            return Err(invalid(format!(
                "at most {MAX_DIM} dimensions are supported, got {s}"
            )));
        }
        match self {
            GeneratorId::NiederreiterNut => build_niederreiter_nut(s, w),
            _ => {
                let path = file.ok_or_else(|| {
                    invalid(format!("generator {self} needs a direction file (--file)"))
                })?;
                let table = load_direction_file(path)?.with_provenance(self.provenance());
                build_sobol_from_directions(&table, s, w)
            }
        }
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.provenance().fmt(f)
    }
}

impl FromStr for GeneratorId {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "niederreiter-nut" => Ok(GeneratorId::NiederreiterNut),
            "sobol-joekuo08" => Ok(GeneratorId::SobolJoeKuo08),
            "sobol-joekuo03" => Ok(GeneratorId::SobolJoeKuo03),
            _ => match s.strip_prefix("sobol-file:") {
                Some(name) if !name.is_empty() => Ok(GeneratorId::SobolFile(name.to_string())),
                _ => Err(invalid(format!(
                    "unknown generator {s:?} (expected niederreiter-nut, sobol-joekuo08, \
                     sobol-joekuo03 or sobol-file:<name>)"
                ))),
            },
        }
    }
}
