use std::path::PathBuf;
use std::process::{Command, Output};

fn jk08() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/new-joe-kuo-6.21201")
}

fn lds(args: &[&str]) -> Output {
    lds_env(args, &[])
}

fn lds_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lds"));
    cmd.args(args).env_remove("LDS_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run lds")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "lds failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows (after the `#` header and the column line).
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn leading_digits_are_a_permutation(rows: &[Vec<String>], col: usize, m: u32) -> bool {
    let mut seen: Vec<u64> = rows
        .iter()
        .map(|r| r[col].parse::<u64>().unwrap() >> (32 - m))
        .collect();
    seen.sort_unstable();
    seen == (0..1u64 << m).collect::<Vec<_>>()
}

#[test]
fn gen_points_form_a_net_in_each_coordinate() {
    for seed in [None, Some("7")] {
        let mut args = vec!["gen", "--dim", "3", "--m", "3"];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let out = stdout(&lds(&args));
        assert_eq!(
            out.lines().nth(1).unwrap(),
            "n,raw_1,raw_2,raw_3,x_1,x_2,x_3"
        );
        let r = rows(&out);
        assert_eq!(r.len(), 8);
        for col in 1..=3 {
            assert!(
                leading_digits_are_a_permutation(&r, col, 3),
                "seed {seed:?} column {col}"
            );
        }
        for row in &r {
            for v in &row[4..=6] {
                let x: f64 = v.parse().unwrap();
                let low = if seed.is_some() { x > 0.0 } else { x >= 0.0 };
                assert!(low && x < 1.0, "{x}");
            }
        }
    }
}

#[test]
fn gen_sobol_in_many_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    let file = jk08();
    let o = lds(&[
        "gen",
        "--generator",
        "sobol-joekuo08",
        "--file",
        file.to_str().unwrap(),
        "--dim",
        "1111",
        "--m",
        "10",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# lds gen generator=sobol-joekuo08 dim=1111 m=10"));
    let r = rows(&text);
    assert_eq!(r.len(), 1024);
    assert!(r.iter().all(|row| row.len() == 1 + 2 * 1111));
    assert!(leading_digits_are_a_permutation(&r, 1111, 10));
}

#[test]
fn missing_direction_file_is_a_config_error() {
    let o = lds(&[
        "gen",
        "--generator",
        "sobol-joekuo08",
        "--file",
        "/no/such/file",
        "--dim",
        "2",
        "--m",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--file"));
    let o = lds(&[
        "gen",
        "--generator",
        "sobol-joekuo08",
        "--dim",
        "2",
        "--m",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--file"));
}

#[test]
fn tvalue_histogram_and_pairs() {
    let out = stdout(&lds(&["tvalue", "--dim", "12", "--m-range", "2..8:2"]));
    let r = rows(&out);
    for m in ["2", "4", "6", "8"] {
        let total: u64 = r
            .iter()
            .filter(|row| row[1] == m)
            .map(|row| row[3].parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 66, "m={m}");
    }
    let pairs = stdout(&lds(&["tvalue", "--dim", "12", "--m", "8", "--pairs"]));
    let p = rows(&pairs);
    assert_eq!(p.len(), 66);
    for row in r.iter().filter(|row| row[1] == "8") {
        let n = p.iter().filter(|q| q[2] == row[2]).count() as u64;
        assert_eq!(n, row[3].parse::<u64>().unwrap());
    }
    let o = lds(&["tvalue", "--dim", "12", "--m", "6,8", "--pairs"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn price_grid_over_all_sources_is_reproducible() {
    let file = jk08();
    let alt = format!("alt={}", file.display());
    let jk = format!("sobol-joekuo08={}", file.display());
    let args = [
        "price",
        "--product",
        "asian",
        "--dim",
        "4",
        "--generator",
        "niederreiter-nut,sobol-joekuo08,sobol-file:alt,mc",
        "--file",
        &jk,
        "--file",
        &alt,
        "--m-range",
        "1..20",
        "--reps",
        "2",
        "--seed",
        "3",
        "--no-timing",
    ];
    let first = stdout(&lds(&args));
    let r = rows(&first);
    assert_eq!(r.len(), 80);
    assert_eq!(first.lines().nth(1).unwrap(), lds_cli::PRICE_COLUMNS);
    assert!(r.iter().all(|row| row[8] == "0"));
    let by = |g: &str| {
        r.iter()
            .filter(|row| row[0] == g)
            .map(|row| row[6..8].to_vec())
            .collect::<Vec<_>>()
    };
    assert_eq!(by("sobol-joekuo08"), by("sobol-file:alt"));
    assert_eq!(by("mc").len(), 20);
    let second = stdout(&lds_env(&args, &[("LDS_THREADS", "1")]));
    assert_eq!(first, second);
}

#[test]
fn invalid_product_construction_is_rejected() {
    let o = lds(&[
        "price",
        "--product",
        "heston-asian",
        "--construction",
        "pca",
        "--m",
        "4",
        "--reps",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("standard"));
    let o = lds(&[
        "price",
        "--product",
        "basket",
        "--construction",
        "bb",
        "--m",
        "4",
        "--reps",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = lds(&[
        "price",
        "--product",
        "asian",
        "--kappa",
        "1",
        "--m",
        "4",
        "--reps",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("digital.conf");
    std::fs::write(&cfg, "# small run\nsigma = 0.25\ndim = 16 # steps\n").unwrap();
    let out = stdout(&lds(&[
        "price",
        "--product",
        "digital",
        "--config",
        cfg.to_str().unwrap(),
        "--dim",
        "8",
        "--m",
        "6",
        "--reps",
        "4",
    ]));
    let header = out.lines().next().unwrap();
    assert!(
        header.contains("s=8 ") && header.contains("sigma=0.25"),
        "{header}"
    );

    std::fs::write(&cfg, "sigma = 0.25\nvolatility = 0.3\n").unwrap();
    let o = lds(&[
        "price",
        "--product",
        "digital",
        "--config",
        cfg.to_str().unwrap(),
        "--m",
        "4",
        "--reps",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn thread_count_must_be_positive() {
    for bad in ["0", "many"] {
        let o = lds_env(&["gen", "--dim", "2", "--m", "2"], &[("LDS_THREADS", bad)]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("LDS_THREADS"));
    }
}

#[test]
fn bad_grids_and_sources_are_config_errors() {
    for args in [
        vec!["tvalue", "--dim", "4", "--m-range", "5..2"],
        vec!["tvalue", "--dim", "4", "--m", "33"],
        vec!["tvalue", "--dim", "4", "--m", "4", "--generator", "mc"],
        vec![
            "price",
            "--product",
            "asian",
            "--generator",
            "mc",
            "--m",
            "31",
            "--reps",
            "2",
        ],
        vec!["price", "--product", "asian", "--m", "4", "--reps", "1"],
        vec!["price", "--product", "swaption", "--m", "4"],
    ] {
        assert_eq!(lds(&args).status.code(), Some(2), "{args:?}");
    }
}
