//! Path constructions: factors `A` with `A A^T = C` for Brownian and basket
//! covariances, and the Brownian bridge.

use std::fmt;
use std::str::FromStr;

use super::linalg::{cholesky, symmetric_eigen, Matrix};
use crate::error::{invalid, Error, Result};

/// Largest tolerated `max |A A^T - C|`.
pub const FACTOR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Construction {
    Standard,
    Bb,
    Pca,
}

impl Construction {
    pub const ALL: [Construction; 3] =
        [Construction::Standard, Construction::Bb, Construction::Pca];

    pub fn name(self) -> &'static str {
        match self {
            Construction::Standard => "standard",
            Construction::Bb => "bb",
            Construction::Pca => "pca",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Construction::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown construction {s:?} (expected standard, bb or pca)"
                ))
            })
    }
}

/// A factor `A` of the covariance `C` together with how it was obtained.
#[derive(Clone, Debug)]
pub struct PathFactor {
    a: Matrix,
    construction: Construction,
    covariance: Matrix,
}

impl PathFactor {
    /// Checks `max |A A^T - C| <= FACTOR_TOL`.
    pub fn new(a: Matrix, construction: Construction, covariance: Matrix) -> Result<Self> {
        if a.size() != covariance.size() {
            return Err(invalid("factor and covariance sizes differ"));
        }
        let f = PathFactor {
            a,
            construction,
            covariance,
        };
        let r = f.residual();
        if r.is_nan() || r > FACTOR_TOL {
            return Err(Error::Numerical(format!(
                "{construction} factor residual {r:e} exceeds {FACTOR_TOL:e}"
            )));
        }
        Ok(f)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.a.size()
    }

    /// `max |A A^T - C|`.
    pub fn residual(&self) -> f64 {
        self.a.gram().max_abs_diff(&self.covariance)
    }
}

fn check_steps(s: usize, dt: f64) -> Result<()> {
    if s == 0 {
        return Err(invalid("at least one time step is needed"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// `C[i][j] = min(t_i, t_j)` with `t_i = i dt`, `i = 1..s`.
pub fn covariance_bm(s: usize, dt: f64) -> Result<Matrix> {
    check_steps(s, dt)?;
    Ok(Matrix::from_fn(s, |i, j| (i.min(j) + 1) as f64 * dt))
}

/// `sqrt(dt)` times the lower-triangular matrix of ones.
pub fn cholesky_bm(s: usize, dt: f64) -> Result<PathFactor> {
    let c = covariance_bm(s, dt)?;
    let h = dt.sqrt();
    let a = Matrix::from_fn(s, |i, j| if j <= i { h } else { 0.0 });
    PathFactor::new(a, Construction::Standard, c)
}

/// Generic lower-triangular Cholesky factor of `c`.
pub fn cholesky_factor(c: &Matrix) -> Result<PathFactor> {
    let a = cholesky(c)?;
    PathFactor::new(a, Construction::Standard, c.clone())
}

/// `A = [sqrt(l_1) v_1, ..., sqrt(l_s) v_s]` with `l_1 >= ... >= l_s`.
pub fn pca_factor(c: &Matrix) -> Result<PathFactor> {
    let e = symmetric_eigen(c)?;
    if let Some(&l) = e.values.iter().find(|&&l| l < -1e-12) {
        return Err(Error::Numerical(format!("negative eigenvalue {l:e}")));
    }
    let roots: Vec<f64> = e.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let a = Matrix::from_fn(c.size(), |i, k| roots[k] * e.vectors[k][i]);
    PathFactor::new(a, Construction::Pca, c.clone())
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct BridgeStep {
    /// 1-based indices into the path; 0 is the origin `B_0 = 0`.
    target: usize,
    left: usize,
    right: usize,
    wl: f64,
    wr: f64,
    sd: f64,
}

/// Order in which a Brownian bridge fills the grid `t_i = i T / s`: the
/// terminal point first, then midpoints level by level (lower midpoint on
/// odd ranges).
#[derive(Clone, Debug, PartialEq)]
pub struct BridgePlan {
    s: usize,
    steps: Vec<BridgeStep>,
}

impl BridgePlan {
    pub fn new(s: usize, t: f64) -> Result<Self> {
        check_steps(s, t / s.max(1) as f64)?;
        let dt = t / s as f64;
        let mut steps = Vec::with_capacity(s);
        steps.push(BridgeStep {
            target: s,
            left: 0,
            right: s,
            wl: 0.0,
            wr: 0.0,
            sd: t.sqrt(),
        });
        let mut queue = std::collections::VecDeque::from([(0usize, s)]);
        while let Some((l, r)) = queue.pop_front() {
            if r - l < 2 {
                continue;
            }
            let m = (l + r) / 2;
            let (tl, tm, tr) = (l as f64 * dt, m as f64 * dt, r as f64 * dt);
            steps.push(BridgeStep {
                target: m,
                left: l,
                right: r,
                wl: (tr - tm) / (tr - tl),
                wr: (tm - tl) / (tr - tl),
                sd: ((tm - tl) * (tr - tm) / (tr - tl)).sqrt(),
            });
            queue.push_back((l, m));
            queue.push_back((m, r));
        }
        debug_assert_eq!(steps.len(), s);
        Ok(BridgePlan { s, steps })
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    /// Writes `B_{t_1}..B_{t_s}` into `path` from normals `z`.
    pub fn fill(&self, z: &[f64], path: &mut [f64]) {
        assert!(z.len() >= self.s && path.len() >= self.s);
        let at = |path: &[f64], i: usize| if i == 0 { 0.0 } else { path[i - 1] };
        let first = &self.steps[0];
        path[first.target - 1] = first.sd * z[0];
        for (st, &zk) in self.steps.iter().zip(z).skip(1) {
            let b = st.wl * at(path, st.left) + st.wr * at(path, st.right) + st.sd * zk;
            path[st.target - 1] = b;
        }
    }
}

/// Brownian path on `t_i = i T / s` from normals `z` by bridge construction.
pub fn bb_transform(z: &[f64], t: f64, s: usize) -> Result<Vec<f64>> {
    if z.len() != s {
        return Err(invalid(format!("expected {s} normals, got {}", z.len())));
    }
    let plan = BridgePlan::new(s, t)?;
    let mut path = vec![0.0; s];
    plan.fill(z, &mut path);
    Ok(path)
}

/// The linear map behind [`bb_transform`] as a factor of `covariance_bm`.
pub fn bb_factor(s: usize, t: f64) -> Result<PathFactor> {
    let plan = BridgePlan::new(s, t)?;
    let mut a = Matrix::zeros(s);
    let mut e = vec![0.0; s];
    let mut col = vec![0.0; s];
    for k in 0..s {
        e[k] = 1.0;
        plan.fill(&e, &mut col);
        e[k] = 0.0;
        for (i, &v) in col.iter().enumerate() {
            a[(i, k)] = v;
        }
    }
    PathFactor::new(a, Construction::Bb, covariance_bm(s, t / s as f64)?)
}
