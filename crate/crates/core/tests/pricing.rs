//! Pricing runs against plain Monte Carlo oracles that simulate the models
//! directly with Box-Muller normals.

use lds_core::lds::{build_niederreiter_nut, GeneratingMatrixSet};
use lds_core::oracles::box_muller;
use lds_core::pricing::{
    heston_asian_payoff, price, AsianSpec, BasketSpec, Construction, DigitalSpec, HestonSpec,
    Product, ProductSpec,
};
use lds_core::rqmc::{estimate, EstimateSummary, PointSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nut(s: usize) -> GeneratingMatrixSet {
    build_niederreiter_nut(s, 32).unwrap()
}

/// Mean and standard error of `n` samples of `f(rng)`.
fn mc(n: usize, seed: u64, mut f: impl FnMut(&mut ChaCha8Rng) -> f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v = f(&mut rng);
        s1 += v;
        s2 += v * v;
    }
    let nf = n as f64;
    let mean = s1 / nf;
    (mean, ((s2 / nf - mean * mean) / (nf - 1.0)).sqrt())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    box_muller(rng).0
}

fn agrees(e: &EstimateSummary, (m, se): (f64, f64)) -> bool {
    (e.mean - m).abs() <= 4.0 * (e.stderr * e.stderr + se * se).sqrt()
}

#[test]
fn asian_smoke_at_full_size() {
    let spec = ProductSpec::default_for(Product::Asian);
    let e = price(
        &spec,
        Construction::Standard,
        PointSource::Qmc(&nut(360)),
        8,
        10,
        3,
    )
    .unwrap();
    assert!(e.stderr.is_finite() && e.stderr > 0.0);
    assert_eq!(e.reps(), 10);
}

#[test]
fn asian_matches_path_simulation() {
    let a = AsianSpec {
        s: 16,
        ..AsianSpec::default()
    };
    let oracle = mc(1 << 20, 11, |rng| {
        let dt = a.dt();
        let (mut x, mut sum) = (a.s0.ln(), 0.0);
        for _ in 0..a.s {
            x += (a.r - 0.5 * a.sigma * a.sigma) * dt + a.sigma * dt.sqrt() * normal(rng);
            sum += x.exp();
        }
        (-a.r * a.t).exp() * (sum / a.s as f64 - a.k).max(0.0)
    });
    let spec = ProductSpec::Asian(a);
    let g = nut(16);
    for c in Construction::ALL {
        let e = price(&spec, c, PointSource::Qmc(&g), 12, 40, 5).unwrap();
        assert!(
            agrees(&e, oracle),
            "{c}: {} +- {} vs {:?}",
            e.mean,
            e.stderr,
            oracle
        );
    }
}

#[test]
fn asian_constructions_rank_as_expected() {
    let spec = ProductSpec::Asian(AsianSpec {
        s: 64,
        ..AsianSpec::default()
    });
    let g = nut(64);
    let run = |c| price(&spec, c, PointSource::Qmc(&g), 12, 40, 8).unwrap();
    let (std, bb, pca) = (
        run(Construction::Standard),
        run(Construction::Bb),
        run(Construction::Pca),
    );
    assert!(pca.stderr < std.stderr && bb.stderr < std.stderr);
    let z = |a: &EstimateSummary, b: &EstimateSummary| {
        (a.mean - b.mean).abs() / (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
    };
    assert!(z(&std, &pca) < 4.0 && z(&std, &bb) < 4.0);
}

#[test]
fn digital_path_simulation_matches_closed_form() {
    let d = DigitalSpec::default();
    let v = lds_core::pricing::digital_closed_form(&d).unwrap();
    let oracle = mc(1 << 17, 12, |rng| {
        let dt = d.dt();
        let (mut x, mut sum) = (d.s0.ln(), 0.0);
        for _ in 0..d.s {
            let next = x + (d.r - 0.5 * d.sigma * d.sigma) * dt + d.sigma * dt.sqrt() * normal(rng);
            if next > x {
                sum += next.exp();
            }
            x = next;
        }
        sum / d.s as f64
    });
    assert!((oracle.0 - v).abs() <= 4.0 * oracle.1, "{oracle:?} vs {v}");
}

#[test]
fn digital_pca_is_worse_and_standard_beats_mc() {
    let spec = ProductSpec::default_for(Product::Digital);
    let g = nut(128);
    let std = price(
        &spec,
        Construction::Standard,
        PointSource::Qmc(&g),
        12,
        30,
        4,
    )
    .unwrap();
    let pca = price(&spec, Construction::Pca, PointSource::Qmc(&g), 12, 30, 4).unwrap();
    let mc = price(
        &spec,
        Construction::Standard,
        PointSource::MonteCarlo,
        12,
        30,
        4,
    )
    .unwrap();
    assert!(pca.stderr > std.stderr);
    assert!(std.stderr < mc.stderr);
    let v = lds_core::pricing::digital_closed_form(&DigitalSpec::default()).unwrap();
    assert!((std.mean - v).abs() <= 4.0 * std.stderr);
}

#[test]
fn basket_matches_factor_model_simulation() {
    let b = BasketSpec::default();
    // C = T (rho 11^T + (1 - rho) I): one common factor plus idiosyncratic noise.
    let oracle = mc(1 << 16, 13, |rng| {
        let y = normal(rng);
        let mut sum = 0.0;
        for i in 0..b.s {
            let w = b.t.sqrt() * (b.rho.sqrt() * y + (1.0 - b.rho).sqrt() * normal(rng));
            sum += b.s0[i] * ((b.r - 0.5 * b.sigma[i] * b.sigma[i]) * b.t + b.sigma[i] * w).exp();
        }
        (-b.r * b.t).exp() * (sum / b.s as f64 - b.k).max(0.0)
    });
    let spec = ProductSpec::Basket(b);
    let g = nut(128);
    let std = price(
        &spec,
        Construction::Standard,
        PointSource::Qmc(&g),
        11,
        30,
        6,
    )
    .unwrap();
    let pca = price(&spec, Construction::Pca, PointSource::Qmc(&g), 11, 30, 6).unwrap();
    assert!(
        agrees(&std, oracle),
        "{} +- {} vs {oracle:?}",
        std.mean,
        std.stderr
    );
    assert!(
        agrees(&pca, oracle),
        "{} +- {} vs {oracle:?}",
        pca.mean,
        pca.stderr
    );
}

#[test]
fn heston_matches_euler_simulation_and_rarely_truncates() {
    let h = HestonSpec {
        s: 64,
        ..HestonSpec::default()
    };
    let oracle = mc(1 << 16, 14, |rng| {
        let dt = h.dt();
        let (mut v, mut x, mut sum) = (h.sigma0 * h.sigma0, h.s0, 0.0);
        for _ in 0..h.s {
            let (z1, z2) = box_muller(rng);
            let vp = v.max(0.0);
            let db1 = dt.sqrt() * z1;
            let shock = h.rho * db1 + (1.0 - h.rho * h.rho).sqrt() * dt.sqrt() * z2;
            v += h.kappa * (h.theta - vp) * dt + h.xi * vp.sqrt() * db1;
            x *= 1.0 + h.r * dt + vp.sqrt() * shock;
            sum += x;
        }
        (-h.r * h.t).exp() * (sum / h.s as f64 - h.k).max(0.0)
    });
    let spec = ProductSpec::HestonAsian(h.clone());
    let e = price(
        &spec,
        Construction::Standard,
        PointSource::Qmc(&nut(128)),
        12,
        30,
        9,
    )
    .unwrap();
    assert!(
        agrees(&e, oracle),
        "{} +- {} vs {oracle:?}",
        e.mean,
        e.stderr
    );

    let full = HestonSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let paths = 10_000;
    let truncated = (0..paths)
        .filter(|_| {
            let u: Vec<f64> = (0..2 * full.s)
                .map(|_| rng.random_range(1e-12..1.0))
                .collect();
            heston_asian_payoff(&u, &full).unwrap().truncated
        })
        .count();
    assert!(
        truncated * 1000 < paths,
        "{truncated} of {paths} paths truncated"
    );
}

#[test]
fn replicates_do_not_depend_on_thread_count() {
    let spec = ProductSpec::Asian(AsianSpec {
        s: 32,
        ..AsianSpec::default()
    });
    let g = nut(32);
    let f = spec.integrand(Construction::Pca).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let three = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let a = one.install(|| estimate(&f, PointSource::Qmc(&g), 8, 12, 21).unwrap());
    let b = three.install(|| estimate(&f, PointSource::Qmc(&g), 8, 12, 21).unwrap());
    assert_eq!(a.replicates, b.replicates);
    let c = three.install(|| estimate(&f, PointSource::MonteCarlo, 8, 12, 21).unwrap());
    let d = one.install(|| estimate(&f, PointSource::MonteCarlo, 8, 12, 21).unwrap());
    assert_eq!(c.replicates, d.replicates);
}
