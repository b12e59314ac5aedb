//! Option specifications, payoffs and the integrands handed to the estimator.

use std::fmt;
use std::str::FromStr;

use super::factor::{
    bb_factor, cholesky_bm, cholesky_factor, covariance_bm, pca_factor, BridgePlan, Construction,
    PathFactor,
};
use super::linalg::Matrix;
use super::normal::{inv_norm_unchecked, norm_cdf};
use crate::error::{invalid, Error, Result};
use crate::rqmc::Integrand;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}

fn steps(s: usize) -> Result<()> {
    if s == 0 {
        Err(invalid("s must be at least 1"))
    } else {
        Ok(())
    }
}

/// Arithmetic-average Asian call under Black-Scholes.
#[derive(Clone, Debug, PartialEq)]
pub struct AsianSpec {
    pub s: usize,
    pub t: f64,
    pub r: f64,
    pub sigma: f64,
    pub s0: f64,
    pub k: f64,
}

impl Default for AsianSpec {
    fn default() -> Self {
        AsianSpec {
            s: 360,
            t: 1.0,
            r: 0.1,
            sigma: 0.2,
            s0: 100.0,
            k: 100.0,
        }
    }
}

impl AsianSpec {
    pub fn dt(&self) -> f64 {
        self.t / self.s as f64
    }

    pub fn validate(&self) -> Result<()> {
        steps(self.s)?;
        positive("T", self.t)?;
        finite("r", self.r)?;
        positive("sigma", self.sigma)?;
        positive("S0", self.s0)?;
        positive("K", self.k)
    }
}

/// Average of the prices at the up-ticks of the path, undiscounted.
#[derive(Clone, Debug, PartialEq)]
pub struct DigitalSpec {
    pub s: usize,
    pub t: f64,
    pub r: f64,
    pub sigma: f64,
    pub s0: f64,
}

impl Default for DigitalSpec {
    fn default() -> Self {
        DigitalSpec {
            s: 128,
            t: 1.0,
            r: 0.045,
            sigma: 0.3,
            s0: 100.0,
        }
    }
}

impl DigitalSpec {
    pub fn dt(&self) -> f64 {
        self.t / self.s as f64
    }

    pub fn validate(&self) -> Result<()> {
        steps(self.s)?;
        positive("T", self.t)?;
        finite("r", self.r)?;
        positive("sigma", self.sigma)?;
        positive("S0", self.s0)
    }
}

/// `(1/s) sum_i S0 e^{r t_i} Phi((r/sigma + sigma/2) sqrt(dt))`.
pub fn digital_closed_form(spec: &DigitalSpec) -> Result<f64> {
    spec.validate()?;
    let dt = spec.dt();
    let p = norm_cdf((spec.r / spec.sigma + spec.sigma / 2.0) * dt.sqrt());
    let sum: f64 = (1..=spec.s)
        .map(|i| spec.s0 * (spec.r * i as f64 * dt).exp())
        .sum();
    Ok(sum * p / spec.s as f64)
}

/// Call on the equally weighted average of `s` correlated assets at `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasketSpec {
    pub s: usize,
    pub t: f64,
    pub r: f64,
    pub k: f64,
    pub sigma: Vec<f64>,
    pub rho: f64,
    pub s0: Vec<f64>,
}

impl Default for BasketSpec {
    fn default() -> Self {
        BasketSpec::uniform(128, 1.0, 0.1, 100.0, 0.2, 0.3, 100.0)
    }
}

impl BasketSpec {
    /// Every asset with the same volatility and spot.
    pub fn uniform(s: usize, t: f64, r: f64, k: f64, sigma: f64, rho: f64, s0: f64) -> Self {
        BasketSpec {
            s,
            t,
            r,
            k,
            sigma: vec![sigma; s],
            rho,
            s0: vec![s0; s],
        }
    }

    pub fn validate(&self) -> Result<()> {
        steps(self.s)?;
        positive("T", self.t)?;
        finite("r", self.r)?;
        positive("K", self.k)?;
        if self.sigma.len() != self.s || self.s0.len() != self.s {
            return Err(invalid(format!(
                "basket of {} assets needs {} volatilities and spots, got {} and {}",
                self.s,
                self.s,
                self.sigma.len(),
                self.s0.len()
            )));
        }
        for (i, (&v, &x)) in self.sigma.iter().zip(&self.s0).enumerate() {
            positive(&format!("sigma_{}", i + 1), v)?;
            positive(&format!("S0_{}", i + 1), x)?;
        }
        let lo = if self.s > 1 {
            -1.0 / (self.s - 1) as f64
        } else {
            -1.0
        };
        if !(self.rho > lo && self.rho < 1.0) {
            return Err(invalid(format!(
                "rho must lie in ({lo}, 1) for {} assets, got {}",
                self.s, self.rho
            )));
        }
        Ok(())
    }
}

/// `C[i][j] = T` on the diagonal and `rho T` elsewhere.
pub fn covariance_basket(spec: &BasketSpec) -> Result<Matrix> {
    spec.validate()?;
    let (t, rho) = (spec.t, spec.rho);
    Ok(Matrix::from_fn(
        spec.s,
        |i, j| if i == j { t } else { rho * t },
    ))
}

/// Arithmetic Asian call with Heston variance, Euler with full truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct HestonSpec {
    pub s: usize,
    pub t: f64,
    pub r: f64,
    pub k: f64,
    pub s0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub xi: f64,
    pub rho: f64,
    pub sigma0: f64,
}

impl Default for HestonSpec {
    fn default() -> Self {
        HestonSpec {
            s: 512,
            t: 0.5,
            r: 0.0,
            k: 100.0,
            s0: 100.0,
            kappa: 2.0,
            theta: 0.01,
            xi: 0.1,
            rho: 0.5,
            sigma0: 0.1,
        }
    }
}

impl HestonSpec {
    pub fn dt(&self) -> f64 {
        self.t / self.s as f64
    }

    pub fn validate(&self) -> Result<()> {
        steps(self.s)?;
        positive("T", self.t)?;
        finite("r", self.r)?;
        positive("K", self.k)?;
        positive("S0", self.s0)?;
        for (n, v) in [
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("xi", self.xi),
            ("sigma0", self.sigma0),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{n} must be non-negative, got {v}")));
            }
        }
        if !(self.rho >= -1.0 && self.rho <= 1.0) {
            return Err(invalid(format!(
                "rho must lie in [-1, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }

    /// `2 kappa theta > xi^2`.
    pub fn feller_holds(&self) -> bool {
        2.0 * self.kappa * self.theta > self.xi * self.xi
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.feller_holds() {
            w.push(format!(
                "Feller condition fails (2*kappa*theta = {} <= xi^2 = {}); variance may hit zero",
                2.0 * self.kappa * self.theta,
                self.xi * self.xi
            ));
        }
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Product {
    Asian,
    Digital,
    Basket,
    HestonAsian,
}

impl Product {
    pub const ALL: [Product; 4] = [
        Product::Asian,
        Product::Digital,
        Product::Basket,
        Product::HestonAsian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Product::Asian => "asian",
            Product::Digital => "digital",
            Product::Basket => "basket",
            Product::HestonAsian => "heston-asian",
        }
    }

    pub fn constructions(self) -> &'static [Construction] {
        match self {
            Product::Asian | Product::Digital => &Construction::ALL,
            Product::Basket => &[Construction::Standard, Construction::Pca],
            Product::HestonAsian => &[Construction::Standard],
        }
    }

    /// Usage error unless `c` applies to this product.
    pub fn check_construction(self, c: Construction) -> Result<()> {
        if self.constructions().contains(&c) {
            return Ok(());
        }
        let allowed: Vec<&str> = self.constructions().iter().map(|c| c.name()).collect();
        Err(invalid(format!(
            "construction {c} is not available for {self} (allowed: {})",
            allowed.join(", ")
        )))
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Product {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Product::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown product {s:?} (expected asian, digital, basket or heston-asian)"
                ))
            })
    }
}

/// A product together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ProductSpec {
    Asian(AsianSpec),
    Digital(DigitalSpec),
    Basket(BasketSpec),
    HestonAsian(HestonSpec),
}

impl ProductSpec {
    /// Default parameters for `p`.
    pub fn default_for(p: Product) -> Self {
        match p {
            Product::Asian => ProductSpec::Asian(AsianSpec::default()),
            Product::Digital => ProductSpec::Digital(DigitalSpec::default()),
            Product::Basket => ProductSpec::Basket(BasketSpec::default()),
            Product::HestonAsian => ProductSpec::HestonAsian(HestonSpec::default()),
        }
    }

    pub fn product(&self) -> Product {
        match self {
            ProductSpec::Asian(_) => Product::Asian,
            ProductSpec::Digital(_) => Product::Digital,
            ProductSpec::Basket(_) => Product::Basket,
            ProductSpec::HestonAsian(_) => Product::HestonAsian,
        }
    }

    /// Number of uniforms per path.
    pub fn dim(&self) -> usize {
        match self {
            ProductSpec::Asian(a) => a.s,
            ProductSpec::Digital(d) => d.s,
            ProductSpec::Basket(b) => b.s,
            ProductSpec::HestonAsian(h) => 2 * h.s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProductSpec::Asian(a) => a.validate(),
            ProductSpec::Digital(d) => d.validate(),
            ProductSpec::Basket(b) => b.validate(),
            ProductSpec::HestonAsian(h) => h.validate(),
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        match self {
            ProductSpec::HestonAsian(h) => h.warnings(),
            _ => Vec::new(),
        }
    }

    /// The factor used by `construction`, or `None` for Heston, which draws
    /// its increments directly.
    pub fn factor(&self, construction: Construction) -> Result<Option<PathFactor>> {
        self.validate()?;
        self.product().check_construction(construction)?;
        let brownian = |s: usize, t: f64| match construction {
            Construction::Standard => cholesky_bm(s, t / s as f64),
            Construction::Bb => bb_factor(s, t),
            Construction::Pca => pca_factor(&covariance_bm(s, t / s as f64)?),
        };
        Ok(Some(match self {
            ProductSpec::Asian(a) => brownian(a.s, a.t)?,
            ProductSpec::Digital(d) => brownian(d.s, d.t)?,
            ProductSpec::Basket(b) => {
                let c = covariance_basket(b)?;
                match construction {
                    Construction::Pca => pca_factor(&c)?,
                    _ => cholesky_factor(&c)?,
                }
            }
            ProductSpec::HestonAsian(_) => return Ok(None),
        }))
    }

    /// The integrand on `(0,1)^dim` for `construction`.
    pub fn integrand(&self, construction: Construction) -> Result<PayoffIntegrand> {
        let factor = self.factor(construction)?;
        let map = match (self, construction) {
            (ProductSpec::HestonAsian(_), _) => PathMap::Identity,
            (ProductSpec::Asian(_) | ProductSpec::Digital(_), Construction::Standard) => {
                let dt = match self {
                    ProductSpec::Asian(a) => a.dt(),
                    ProductSpec::Digital(d) => d.dt(),
                    _ => unreachable!(),
                };
                PathMap::CumSum(dt.sqrt())
            }
            (ProductSpec::Asian(a), Construction::Bb) => {
                PathMap::Bridge(BridgePlan::new(a.s, a.t)?)
            }
            (ProductSpec::Digital(d), Construction::Bb) => {
                PathMap::Bridge(BridgePlan::new(d.s, d.t)?)
            }
            _ => PathMap::Dense(factor.as_ref().expect("factor").a().transpose()),
        };
        Ok(PayoffIntegrand {
            spec: self.clone(),
            construction,
            map,
            factor,
            prep: Prepared::new(self),
        })
    }
}

/// How normals become the Brownian values the payoff needs.
#[derive(Clone, Debug)]
enum PathMap {
    /// `w_i = h (z_1 + ... + z_i)`.
    CumSum(f64),
    Bridge(BridgePlan),
    /// Holds `A^T` so a batch is `W = Z A^T` in one product.
    Dense(Matrix),
    Identity,
}

/// Per-step constants independent of the path.
#[derive(Clone, Debug)]
struct Prepared {
    /// `ln S0 + (r - sigma^2/2) t_i`, or per asset for the basket.
    log_drift: Vec<f64>,
    /// `sigma`, or per asset.
    vol: Vec<f64>,
    discount: f64,
}

impl Prepared {
    fn new(spec: &ProductSpec) -> Self {
        let grid = |s: usize, t: f64, r: f64, sigma: f64, s0: f64| -> Vec<f64> {
            let dt = t / s as f64;
            (1..=s)
                .map(|i| s0.ln() + (r - 0.5 * sigma * sigma) * i as f64 * dt)
                .collect()
        };
        match spec {
            ProductSpec::Asian(a) => Prepared {
                log_drift: grid(a.s, a.t, a.r, a.sigma, a.s0),
                vol: vec![a.sigma],
                discount: (-a.r * a.t).exp(),
            },
            ProductSpec::Digital(d) => Prepared {
                log_drift: grid(d.s, d.t, d.r, d.sigma, d.s0),
                vol: vec![d.sigma],
                discount: 1.0,
            },
            ProductSpec::Basket(b) => Prepared {
                log_drift: b
                    .sigma
                    .iter()
                    .zip(&b.s0)
                    .map(|(&v, &x)| x.ln() + (b.r - 0.5 * v * v) * b.t)
                    .collect(),
                vol: b.sigma.clone(),
                discount: (-b.r * b.t).exp(),
            },
            ProductSpec::HestonAsian(h) => Prepared {
                log_drift: Vec::new(),
                vol: Vec::new(),
                discount: (-h.r * h.t).exp(),
            },
        }
    }
}

/// A payoff as a function of uniforms: normals by inverse CDF, then the
/// construction's path map, then the payoff.
#[derive(Clone, Debug)]
pub struct PayoffIntegrand {
    spec: ProductSpec,
    construction: Construction,
    map: PathMap,
    factor: Option<PathFactor>,
    prep: Prepared,
}

impl PayoffIntegrand {
    pub fn spec(&self) -> &ProductSpec {
        &self.spec
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn factor(&self) -> Option<&PathFactor> {
        self.factor.as_ref()
    }

    /// Payoff from the Brownian values `w` (or the raw normals for Heston).
    fn payoff(&self, w: &[f64]) -> f64 {
        let p = &self.prep;
        match &self.spec {
            ProductSpec::Asian(a) => {
                let sigma = p.vol[0];
                let sum: f64 = p
                    .log_drift
                    .iter()
                    .zip(w)
                    .map(|(&d, &x)| (d + sigma * x).exp())
                    .sum();
                p.discount * (sum / a.s as f64 - a.k).max(0.0)
            }
            ProductSpec::Digital(d) => {
                let sigma = p.vol[0];
                let mut prev = d.s0.ln();
                let mut sum = 0.0;
                for (&dr, &x) in p.log_drift.iter().zip(w) {
                    let cur = dr + sigma * x;
                    if cur > prev {
                        sum += cur.exp();
                    }
                    prev = cur;
                }
                sum / d.s as f64
            }
            ProductSpec::Basket(b) => {
                let sum: f64 = p
                    .log_drift
                    .iter()
                    .zip(&p.vol)
                    .zip(w)
                    .map(|((&dr, &v), &x)| (dr + v * x).exp())
                    .sum();
                p.discount * (sum / b.s as f64 - b.k).max(0.0)
            }
            ProductSpec::HestonAsian(h) => heston_path_from_normals(w, h).payoff,
        }
    }
}

impl Integrand for PayoffIntegrand {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let mut out = [0.0];
        self.eval_batch(u, &mut out);
        out[0]
    }

    fn eval_batch(&self, points: &[f64], out: &mut [f64]) {
        let s = self.dim();
        let nb = out.len();
        assert_eq!(points.len(), nb * s, "batch shape");
        let z: Vec<f64> = points.iter().map(|&u| inv_norm_unchecked(u)).collect();
        match &self.map {
            PathMap::Identity => {
                for (zr, o) in z.chunks_exact(s).zip(out.iter_mut()) {
                    *o = self.payoff(zr);
                }
            }
            PathMap::CumSum(h) => {
                let mut w = vec![0.0; s];
                for (zr, o) in z.chunks_exact(s).zip(out.iter_mut()) {
                    let mut acc = 0.0;
                    for (wi, &zi) in w.iter_mut().zip(zr) {
                        acc += zi;
                        *wi = h * acc;
                    }
                    *o = self.payoff(&w);
                }
            }
            PathMap::Bridge(plan) => {
                let mut w = vec![0.0; s];
                for (zr, o) in z.chunks_exact(s).zip(out.iter_mut()) {
                    plan.fill(zr, &mut w);
                    *o = self.payoff(&w);
                }
            }
            PathMap::Dense(at) => {
                let mut w = vec![0.0; nb * s];
                if nb > 0 {
                    unsafe {
                        matrixmultiply::dgemm(
                            nb,
                            s,
                            s,
                            1.0,
                            z.as_ptr(),
                            s as isize,
                            1,
                            at.as_slice().as_ptr(),
                            s as isize,
                            1,
                            0.0,
                            w.as_mut_ptr(),
                            s as isize,
                            1,
                        );
                    }
                }
                for (wr, o) in w.chunks_exact(s).zip(out.iter_mut()) {
                    *o = self.payoff(wr);
                }
            }
        }
    }
}

/// One simulated Heston path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HestonPath {
    pub payoff: f64,
    /// True when the variance went negative at some step.
    pub truncated: bool,
}

/// Step `i` reads coordinates `2i-1` (variance driver) and `2i` (asset).
pub fn heston_asian_payoff(u: &[f64], spec: &HestonSpec) -> Result<HestonPath> {
    if u.len() != 2 * spec.s {
        return Err(invalid(format!(
            "expected {} coordinates, got {}",
            2 * spec.s,
            u.len()
        )));
    }
    let z = u
        .iter()
        .map(|&x| super::normal::inv_norm(x))
        .collect::<Result<Vec<f64>>>()?;
    Ok(heston_path_from_normals(&z, spec))
}

fn heston_path_from_normals(z: &[f64], h: &HestonSpec) -> HestonPath {
    let dt = h.dt();
    let sq_dt = dt.sqrt();
    let rho_bar = (1.0 - h.rho * h.rho).max(0.0).sqrt();
    let mut v = h.sigma0 * h.sigma0;
    let mut price = h.s0;
    let mut sum = 0.0;
    let mut truncated = false;
    for pair in z.chunks_exact(2) {
        let db1 = sq_dt * pair[0];
        let shock = h.rho * db1 + rho_bar * sq_dt * pair[1];
        let vp = v.max(0.0);
        let vol = vp.sqrt();
        v += h.kappa * (h.theta - vp) * dt + h.xi * vol * db1;
        truncated |= v < 0.0;
        price *= 1.0 + h.r * dt + vol * shock;
        sum += price;
    }
    HestonPath {
        payoff: (-h.r * h.t).exp() * (sum / h.s as f64 - h.k).max(0.0),
        truncated,
    }
}
