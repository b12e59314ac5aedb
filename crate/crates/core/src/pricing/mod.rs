//! Option pricing integrands: the normal inverse CDF, Cholesky, PCA and
//! Brownian-bridge path constructions, and Asian, digital, basket and
//! Heston-Asian payoffs.

mod factor;
mod linalg;
mod normal;
mod products;

pub use factor::{
    bb_factor, bb_transform, cholesky_bm, cholesky_factor, covariance_bm, pca_factor, BridgePlan,
    Construction, PathFactor, FACTOR_TOL,
};
pub use linalg::{cholesky, symmetric_eigen, Matrix, SymmetricEigen, JACOBI_TOL};
pub use normal::{inv_norm, norm_cdf};
pub use products::{
    covariance_basket, digital_closed_form, heston_asian_payoff, AsianSpec, BasketSpec,
    DigitalSpec, HestonPath, HestonSpec, PayoffIntegrand, Product, ProductSpec,
};

use crate::error::Result;
use crate::rqmc::{estimate, EstimateSummary, PointSource};

/// Prices `spec` under `construction` with `reps` randomizations of a
/// `2^m`-point rule.
pub fn price(
    spec: &ProductSpec,
    construction: Construction,
    source: PointSource<'_>,
    m: u32,
    reps: usize,
    seed: u64,
) -> Result<EstimateSummary> {
    let f = spec.integrand(construction)?;
    estimate(&f, source, m, reps, seed)
}
