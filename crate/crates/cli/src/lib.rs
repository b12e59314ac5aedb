//! The `lds` command: point dumps, t-value tables and pricing runs as CSV.

pub mod args;

use std::fmt::Write as _;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use lds_core::lds::{GeneratingMatrixSet, GeneratorId, DEFAULT_WIDTH};
use lds_core::pricing::{
    price, AsianSpec, BasketSpec, Construction, DigitalSpec, HestonSpec, Product, ProductSpec,
};
use lds_core::rqmc::{
    apply_scramble, randomized_point, replicate_rng, sample_scramble, PointSource,
};
use lds_core::tvalue::pair_t_table;

pub use args::{Cli, Command, Common, GenArgs, MGrid, ParamFlags, PriceArgs, TvalueArgs};

/// m grid used when neither `--m` nor `--m-range` is given.
pub const DEFAULT_M_GRID: [u32; 6] = [10, 12, 14, 16, 18, 20];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, files or parameters; nothing was computed.
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Caps the rayon pool at `LDS_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("LDS_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!("LDS_THREADS must be a positive integer, got {v:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(runtime)
}

/// Runs the command, writing to `--out` or stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let out = match &cli.command {
        Command::Gen(a) => &a.common.out,
        Command::Tvalue(a) => &a.common.out,
        Command::Price(a) => &a.common.out,
    };
    match out {
        Some(path) => {
            // Validate before creating the file so a config error leaves no output.
            let plan = plan(cli)?;
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            execute(plan, &mut w)?;
            w.flush().map_err(runtime)
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            run_with(cli, &mut w)?;
            w.flush().map_err(runtime)
        }
    }
}

/// Runs the command, writing CSV to `sink` and ignoring `--out`.
pub fn run_with(cli: &Cli, sink: &mut dyn Write) -> Result<()> {
    execute(plan(cli)?, sink)
}

/// A validated command with every generator built.
enum Plan {
    Gen {
        header: String,
        set: GeneratingMatrixSet,
        m: u32,
        seed: Option<u64>,
    },
    Tvalue {
        header: String,
        sets: Vec<GeneratingMatrixSet>,
        s_max: usize,
        grid: Vec<u32>,
        pairs: bool,
    },
    Price {
        header: String,
        spec: ProductSpec,
        construction: Construction,
        sources: Vec<Option<GeneratingMatrixSet>>,
        grid: Vec<u32>,
        reps: usize,
        seed: u64,
        timing: bool,
    },
}

fn plan(cli: &Cli) -> Result<Plan> {
    match &cli.command {
        Command::Gen(a) => plan_gen(a),
        Command::Tvalue(a) => plan_tvalue(a),
        Command::Price(a) => plan_price(a),
    }
}

fn execute(plan: Plan, sink: &mut dyn Write) -> Result<()> {
    match plan {
        Plan::Gen {
            header,
            set,
            m,
            seed,
        } => write_gen(sink, &header, &set, m, seed),
        Plan::Tvalue {
            header,
            sets,
            s_max,
            grid,
            pairs,
        } => write_tvalue(sink, &header, &sets, s_max, &grid, pairs),
        Plan::Price {
            header,
            spec,
            construction,
            sources,
            grid,
            reps,
            seed,
            timing,
        } => write_price(
            sink,
            &header,
            &spec,
            construction,
            &sources,
            &grid,
            reps,
            seed,
            timing,
        ),
    }
}

/// `<generator>=<path>` or a bare path.
#[derive(Clone, Debug, PartialEq)]
enum FileArg {
    Keyed(String, PathBuf),
    Bare(PathBuf),
}

fn parse_file_arg(s: &str) -> FileArg {
    if let Some((k, v)) = s.split_once('=') {
        let plain = !k.is_empty()
            && k.chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | ':' | '.'));
        if plain && !v.is_empty() {
            return FileArg::Keyed(k.to_string(), PathBuf::from(v));
        }
    }
    FileArg::Bare(PathBuf::from(s))
}

type Resolved = Option<(GeneratorId, Option<PathBuf>)>;

/// Generators from `--generator`, each with its direction file; `None` is mc.
fn resolve_generators(common: &Common, allow_mc: bool) -> Result<Vec<Resolved>> {
    if common.generator.is_empty() {
        return Err(CliError::Config(
            "--generator needs at least one name".into(),
        ));
    }
    let mut ids = Vec::new();
    for name in &common.generator {
        let name = name.trim();
        if name == "mc" {
            if !allow_mc {
                return Err(CliError::Config(
                    "mc is only a point source for price".into(),
                ));
            }
            ids.push(None);
        } else {
            ids.push(Some(name.parse::<GeneratorId>().map_err(config)?));
        }
    }
    let files: Vec<FileArg> = common.files.iter().map(|s| parse_file_arg(s)).collect();
    let matches = |key: &str, id: &GeneratorId| match id {
        GeneratorId::SobolFile(name) => key == name || key == id.to_string(),
        _ => key == id.to_string(),
    };
    for f in &files {
        if let FileArg::Keyed(k, _) = f {
            if !ids
                .iter()
                .flatten()
                .any(|id| id.needs_file() && matches(k, id))
            {
                return Err(CliError::Config(format!(
                    "--file {k}=... matches no requested generator that reads a file"
                )));
            }
        }
    }
    let bare: Vec<&PathBuf> = files
        .iter()
        .filter_map(|f| match f {
            FileArg::Bare(p) => Some(p),
            _ => None,
        })
        .collect();
    let keyed_for = |id: &GeneratorId| {
        files.iter().find_map(|f| match f {
            FileArg::Keyed(k, p) if matches(k, id) => Some(p.clone()),
            _ => None,
        })
    };
    let unkeyed = ids
        .iter()
        .flatten()
        .filter(|id| id.needs_file() && keyed_for(id).is_none())
        .count();
    if bare.len() > 1 || (bare.len() == 1 && unkeyed != 1) {
        return Err(CliError::Config(
            "a bare --file path must belong to exactly one generator; use --file <generator>=<path>".into(),
        ));
    }
    Ok(ids
        .into_iter()
        .map(|id| {
            id.map(|id| {
                let file = if id.needs_file() {
                    keyed_for(&id).or_else(|| bare.first().map(|p| (*p).clone()))
                } else {
                    None
                };
                (id, file)
            })
        })
        .collect())
}

fn build(id: &GeneratorId, file: Option<&Path>, s: usize) -> Result<GeneratingMatrixSet> {
    if let Some(p) = file {
        if !p.is_file() {
            return Err(CliError::Config(format!(
                "--file {}: no such file",
                p.display()
            )));
        }
    }
    id.build(s, DEFAULT_WIDTH, file).map_err(config)
}

fn parse_grid(grid: &MGrid) -> Result<Vec<u32>> {
    let out = if let Some(r) = &grid.m_range {
        let bad = || CliError::Config(format!("--m-range expects LO..HI[:STEP], got {r:?}"));
        let (range, step) = match r.split_once(':') {
            Some((a, b)) => (a, b.trim().parse::<u32>().map_err(|_| bad())?),
            None => (r.as_str(), 1),
        };
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if step == 0 || lo > hi {
            return Err(bad());
        }
        (lo..=hi).step_by(step as usize).collect()
    } else if grid.m.is_empty() {
        DEFAULT_M_GRID.to_vec()
    } else {
        grid.m.clone()
    };
    if let Some(&m) = out.iter().find(|&&m| m == 0 || m > DEFAULT_WIDTH) {
        return Err(CliError::Config(format!(
            "m={m} must lie in 1..={DEFAULT_WIDTH}"
        )));
    }
    Ok(out)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn files_field(common: &Common) -> String {
    if common.files.is_empty() {
        "-".into()
    } else {
        common.files.join(";")
    }
}

fn plan_gen(a: &GenArgs) -> Result<Plan> {
    let gens = resolve_generators(&a.common, false)?;
    if gens.len() != 1 {
        return Err(CliError::Config("gen takes exactly one --generator".into()));
    }
    if a.dim == 0 {
        return Err(CliError::Config("--dim must be at least 1".into()));
    }
    if a.m > DEFAULT_WIDTH {
        return Err(CliError::Config(format!(
            "--m must be at most {DEFAULT_WIDTH}"
        )));
    }
    let (id, file) = gens.into_iter().next().flatten().expect("one generator");
    let set = build(&id, file.as_deref(), a.dim)?;
    let header = format!(
        "# lds gen generator={id} dim={} m={} seed={} file={} width={DEFAULT_WIDTH}",
        a.dim,
        a.m,
        a.seed.map_or("-".to_string(), |s| s.to_string()),
        files_field(&a.common)
    );
    Ok(Plan::Gen {
        header,
        set,
        m: a.m,
        seed: a.seed,
    })
}

fn write_gen(
    w: &mut dyn Write,
    header: &str,
    set: &GeneratingMatrixSet,
    m: u32,
    seed: Option<u64>,
) -> Result<()> {
    let s = set.dim();
    let mut line = String::from("n");
    (1..=s).for_each(|i| write!(line, ",raw_{i}").unwrap());
    (1..=s).for_each(|i| write!(line, ",x_{i}").unwrap());
    writeln!(w, "{header}\n{line}").map_err(runtime)?;
    let scrambled = match seed {
        Some(seed) => {
            let sc = sample_scramble(&mut replicate_rng(seed, 0), s, set.width());
            Some((apply_scramble(set, &sc).map_err(runtime)?, sc))
        }
        None => None,
    };
    for n in 0..1u64 << m {
        let p = match &scrambled {
            Some((g, sc)) => randomized_point(n, g, sc),
            None => set.point(n),
        }
        .map_err(runtime)?;
        line.clear();
        write!(line, "{n}").unwrap();
        p.raw.iter().for_each(|v| write!(line, ",{v}").unwrap());
        p.coords.iter().for_each(|v| write!(line, ",{v}").unwrap());
        writeln!(w, "{line}").map_err(runtime)?;
    }
    Ok(())
}

fn plan_tvalue(a: &TvalueArgs) -> Result<Plan> {
    let grid = parse_grid(&a.grid)?;
    if a.dim < 2 {
        return Err(CliError::Config(
            "--dim must be at least 2 for pairs".into(),
        ));
    }
    let gens = resolve_generators(&a.common, false)?;
    if a.pairs && (gens.len() != 1 || grid.len() != 1) {
        return Err(CliError::Config(
            "--pairs needs exactly one generator and one m".into(),
        ));
    }
    let sets = gens
        .into_iter()
        .flatten()
        .map(|(id, file)| build(&id, file.as_deref(), a.dim))
        .collect::<Result<Vec<_>>>()?;
    let header = format!(
        "# lds tvalue generator={} dim={} m={} pairs={} file={}",
        join(&a.common.generator),
        a.dim,
        join(&grid),
        a.pairs,
        files_field(&a.common)
    );
    Ok(Plan::Tvalue {
        header,
        sets,
        s_max: a.dim,
        grid,
        pairs: a.pairs,
    })
}

fn write_tvalue(
    w: &mut dyn Write,
    header: &str,
    sets: &[GeneratingMatrixSet],
    s_max: usize,
    grid: &[u32],
    pairs: bool,
) -> Result<()> {
    writeln!(w, "{header}").map_err(runtime)?;
    writeln!(
        w,
        "{}",
        if pairs {
            "i,s,t"
        } else {
            "generator,m,t,count"
        }
    )
    .map_err(runtime)?;
    for set in sets {
        for &m in grid {
            let table = pair_t_table(set, m, s_max).map_err(runtime)?;
            if pairs {
                for (i, s, t) in table.pairs() {
                    writeln!(w, "{i},{s},{t}").map_err(runtime)?;
                }
            } else {
                for (t, c) in table.trimmed_histogram().iter().enumerate() {
                    writeln!(w, "{},{m},{t},{c}", table.generator).map_err(runtime)?;
                }
            }
        }
    }
    Ok(())
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_param_file(path: &Path) -> Result<ParamFlags> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("--config {}: {e}", path.display())))?;
    let mut p = ParamFlags::default();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CliError::Config(format!("{}:{}: {msg}", path.display(), no + 1));
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = || {
            v.parse::<f64>()
                .map_err(|_| err(format!("{k}: not a number: {v:?}")))
        };
        match k {
            "dim" => {
                p.dim = Some(
                    v.parse()
                        .map_err(|_| err(format!("dim: not an integer: {v:?}")))?,
                )
            }
            "maturity" => p.maturity = Some(num()?),
            "rate" => p.rate = Some(num()?),
            "sigma" => p.sigma = Some(num()?),
            "spot" => p.spot = Some(num()?),
            "strike" => p.strike = Some(num()?),
            "rho" => p.rho = Some(num()?),
            "kappa" => p.kappa = Some(num()?),
            "theta" => p.theta = Some(num()?),
            "xi" => p.xi = Some(num()?),
            "sigma0" => p.sigma0 = Some(num()?),
            _ => return Err(err(format!("unknown parameter {k:?}"))),
        }
    }
    Ok(p)
}

/// Flags over file values.
fn merge(base: ParamFlags, over: &ParamFlags) -> ParamFlags {
    ParamFlags {
        dim: over.dim.or(base.dim),
        maturity: over.maturity.or(base.maturity),
        rate: over.rate.or(base.rate),
        sigma: over.sigma.or(base.sigma),
        spot: over.spot.or(base.spot),
        strike: over.strike.or(base.strike),
        rho: over.rho.or(base.rho),
        kappa: over.kappa.or(base.kappa),
        theta: over.theta.or(base.theta),
        xi: over.xi.or(base.xi),
        sigma0: over.sigma0.or(base.sigma0),
    }
}

/// Product spec with defaults overridden by `p`.
pub fn build_spec(product: Product, p: &ParamFlags) -> Result<ProductSpec> {
    let given: Vec<&str> = [
        ("maturity", p.maturity.is_some()),
        ("rate", p.rate.is_some()),
        ("sigma", p.sigma.is_some()),
        ("spot", p.spot.is_some()),
        ("strike", p.strike.is_some()),
        ("rho", p.rho.is_some()),
        ("kappa", p.kappa.is_some()),
        ("theta", p.theta.is_some()),
        ("xi", p.xi.is_some()),
        ("sigma0", p.sigma0.is_some()),
    ]
    .into_iter()
    .filter(|x| x.1)
    .map(|x| x.0)
    .collect();
    let allowed: &[&str] = match product {
        Product::Asian => &["maturity", "rate", "sigma", "spot", "strike"],
        Product::Digital => &["maturity", "rate", "sigma", "spot"],
        Product::Basket => &["maturity", "rate", "sigma", "spot", "strike", "rho"],
        Product::HestonAsian => &[
            "maturity", "rate", "spot", "strike", "rho", "kappa", "theta", "xi", "sigma0",
        ],
    };
    if let Some(k) = given.iter().find(|k| !allowed.contains(k)) {
        return Err(CliError::Config(format!(
            "{k} is not a parameter of {product}"
        )));
    }
    let spec = match product {
        Product::Asian => {
            let d = AsianSpec::default();
            ProductSpec::Asian(AsianSpec {
                s: p.dim.unwrap_or(d.s),
                t: p.maturity.unwrap_or(d.t),
                r: p.rate.unwrap_or(d.r),
                sigma: p.sigma.unwrap_or(d.sigma),
                s0: p.spot.unwrap_or(d.s0),
                k: p.strike.unwrap_or(d.k),
            })
        }
        Product::Digital => {
            let d = DigitalSpec::default();
            ProductSpec::Digital(DigitalSpec {
                s: p.dim.unwrap_or(d.s),
                t: p.maturity.unwrap_or(d.t),
                r: p.rate.unwrap_or(d.r),
                sigma: p.sigma.unwrap_or(d.sigma),
                s0: p.spot.unwrap_or(d.s0),
            })
        }
        Product::Basket => {
            let d = BasketSpec::default();
            ProductSpec::Basket(BasketSpec::uniform(
                p.dim.unwrap_or(d.s),
                p.maturity.unwrap_or(d.t),
                p.rate.unwrap_or(d.r),
                p.strike.unwrap_or(d.k),
                p.sigma.unwrap_or(d.sigma[0]),
                p.rho.unwrap_or(d.rho),
                p.spot.unwrap_or(d.s0[0]),
            ))
        }
        Product::HestonAsian => {
            let d = HestonSpec::default();
            ProductSpec::HestonAsian(HestonSpec {
                s: p.dim.unwrap_or(d.s),
                t: p.maturity.unwrap_or(d.t),
                r: p.rate.unwrap_or(d.r),
                k: p.strike.unwrap_or(d.k),
                s0: p.spot.unwrap_or(d.s0),
                kappa: p.kappa.unwrap_or(d.kappa),
                theta: p.theta.unwrap_or(d.theta),
                xi: p.xi.unwrap_or(d.xi),
                rho: p.rho.unwrap_or(d.rho),
                sigma0: p.sigma0.unwrap_or(d.sigma0),
            })
        }
    };
    spec.validate().map_err(config)?;
    Ok(spec)
}

/// `key=value` pairs describing every parameter of `spec`.
pub fn describe_spec(spec: &ProductSpec) -> String {
    match spec {
        ProductSpec::Asian(a) => format!(
            "s={} T={} r={} sigma={} S0={} K={}",
            a.s, a.t, a.r, a.sigma, a.s0, a.k
        ),
        ProductSpec::Digital(d) => format!(
            "s={} T={} r={} sigma={} S0={}",
            d.s, d.t, d.r, d.sigma, d.s0
        ),
        ProductSpec::Basket(b) => format!(
            "s={} T={} r={} K={} sigma={} rho={} S0={}",
            b.s,
            b.t,
            b.r,
            b.k,
            join(&b.sigma),
            b.rho,
            join(&b.s0)
        ),
        ProductSpec::HestonAsian(h) => format!(
            "s={} T={} r={} K={} S0={} kappa={} theta={} xi={} rho={} sigma0={}",
            h.s, h.t, h.r, h.k, h.s0, h.kappa, h.theta, h.xi, h.rho, h.sigma0
        ),
    }
}

fn plan_price(a: &PriceArgs) -> Result<Plan> {
    let product: Product = a.product.parse().map_err(config)?;
    let construction: Construction = a.construction.parse().map_err(config)?;
    product.check_construction(construction).map_err(config)?;
    let grid = parse_grid(&a.grid)?;
    if a.reps < 2 {
        return Err(CliError::Config("--reps must be at least 2".into()));
    }
    let file_params = match &a.config {
        Some(p) => read_param_file(p)?,
        None => ParamFlags::default(),
    };
    let spec = build_spec(product, &merge(file_params, &a.params))?;
    for warning in spec.warnings() {
        eprintln!("warning: {warning}");
    }
    let dim = spec.dim();
    let sources = resolve_generators(&a.common, true)?
        .into_iter()
        .map(|g| {
            g.map(|(id, file)| build(&id, file.as_deref(), dim))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    if sources.iter().any(Option::is_none) {
        if let Some(&m) = grid.iter().find(|&&m| m > 30) {
            return Err(CliError::Config(format!("m={m} is too large for mc")));
        }
    }
    let header = format!(
        "# lds price generator={} product={product} construction={construction} m={} reps={} seed={} timing={} file={} {}",
        join(&a.common.generator),
        join(&grid),
        a.reps,
        a.seed,
        !a.no_timing,
        files_field(&a.common),
        describe_spec(&spec)
    );
    Ok(Plan::Price {
        header,
        spec,
        construction,
        sources,
        grid,
        reps: a.reps,
        seed: a.seed,
        timing: !a.no_timing,
    })
}

/// Column names of the price summary.
pub const PRICE_COLUMNS: &str =
    "generator,product,construction,m,M,seed,qbar,stderr,seconds,log2_stderr";

#[allow(clippy::too_many_arguments)]
fn write_price(
    w: &mut dyn Write,
    header: &str,
    spec: &ProductSpec,
    construction: Construction,
    sources: &[Option<GeneratingMatrixSet>],
    grid: &[u32],
    reps: usize,
    seed: u64,
    timing: bool,
) -> Result<()> {
    writeln!(w, "{header}\n{PRICE_COLUMNS}").map_err(runtime)?;
    let product = spec.product();
    for src in sources {
        let source = match src {
            Some(g) => PointSource::Qmc(g),
            None => PointSource::MonteCarlo,
        };
        for &m in grid {
            let e = price(spec, construction, source, m, reps, seed).map_err(runtime)?;
            let secs = if timing { e.seconds } else { 0.0 };
            writeln!(
                w,
                "{},{product},{construction},{m},{reps},{seed},{},{},{secs},{}",
                e.generator,
                e.mean,
                e.stderr,
                e.log2_stderr()
            )
            .map_err(runtime)?;
            w.flush().map_err(runtime)?;
        }
    }
    Ok(())
}
