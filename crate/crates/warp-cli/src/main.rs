//! `warp` command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use warpops::domain::{check_feasibility, resample_even_to_odd, DomainSpec, FeasibilityReport};
use warpops::dual::dual_from_parts;
use warpops::error_analysis::{measure_norms_with, parse_grid, residual_norm, MeasureOptions, NormMethod};
use warpops::io::{self, Format};
use warpops::oracle;
use warpops::saf::{build_w_f_with, build_w_t_with};
use warpops::swf::{OperatorKind, OperatorMatrix, SwfOperator};
use warpops::symbolic::{dump_levels, CoeffTable, KernelOptions, DEFAULT_MAX_LEVEL};
use warpops::warp_map::{MapSpec, WarpMap};
use warpops::WarpError;

const EXIT_FAILURE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "warp", version, about = "Time and frequency warping operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Feasibility report for a map and domain.
    Check(CheckArgs),
    /// Warp a signal.
    Apply(ApplyArgs),
    /// Reconstruct a signal from its warped samples.
    Invert(InvertArgs),
    /// Write a dense operator matrix.
    Build(BuildArgs),
    /// Symbolic kernel tables.
    Kernel {
        #[command(subcommand)]
        command: KernelCommand,
    },
    /// Dense quadrature reference values.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Reconstruction error curves over a redundancy grid.
    Curves(CurvesArgs),
}

#[derive(Subcommand, Debug)]
enum KernelCommand {
    /// Exponent sequences and gamma polynomials up to a level.
    Dump {
        #[arg(long, default_value_t = 2)]
        level: usize,
        /// `sym` keeps `b` symbolic; otherwise a number or rational such as `1/2`.
        #[arg(long, default_value = "sym")]
        b: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// One entry `W(m, n)` of the continuous operator.
    Entry {
        #[arg(long)]
        map: String,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
    },
    /// The in-band block of the continuous operator.
    Matrix {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
        format: FormatArg,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Tw,
    Fw,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Swf,
    Saf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BuildMethodArg {
    Swf,
    Saf,
    Dual,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum InverseArg {
    Transpose,
    Invmap,
    Dual,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Binary => Format::Binary,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct DomainArgs {
    /// Map JSON file, or a built-in map type name.
    #[arg(long)]
    map: String,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "M")]
    m: usize,
    #[arg(long = "LN")]
    l_n: Option<usize>,
    #[arg(long = "LM")]
    l_m: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Tw)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Args, Debug, Clone, Copy)]
struct KernelArgs {
    #[arg(long = "kernel-tol", default_value_t = 1e-12)]
    kernel_tol: f64,
    /// Fixed kernel size instead of the tolerance rule.
    #[arg(long = "R")]
    r: Option<usize>,
    #[arg(long = "max-level", default_value_t = DEFAULT_MAX_LEVEL)]
    max_level: usize,
}

impl KernelArgs {
    fn options(&self) -> KernelOptions {
        KernelOptions { r: self.r, kernel_tol: self.kernel_tol, max_level: self.max_level }
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// `saf` also requires `J > 1` at every singularity.
    #[arg(long, value_enum, default_value_t = MethodArg::Saf)]
    method: MethodArg,
}

#[derive(Args, Debug)]
struct SignalArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Seed of a uniform real test signal in [-1, 1] used when `--in` is absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Saf)]
    method: MethodArg,
}

#[derive(Args, Debug)]
struct InvertArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    signal: SignalArgs,
    /// Original signal; the relative residual is reported when given.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Regenerates the seeded original as the reference.
    #[arg(long = "reference-seed")]
    reference_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = InverseArg::Dual)]
    method: InverseArg,
    /// Direct operator family that produced the warped samples.
    #[arg(long, value_enum, default_value_t = MethodArg::Saf)]
    direct: MethodArg,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, value_enum, default_value_t = BuildMethodArg::Saf)]
    method: BuildMethodArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct CurvesArgs {
    #[arg(long)]
    map: String,
    #[arg(long = "N")]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[arg(long, default_value = "1:0.25:10")]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long = "power-iteration")]
    power_iteration: bool,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Debug)]
enum Failure {
    Infeasible(Value),
    Error(String),
}

impl From<WarpError> for Failure {
    fn from(e: WarpError) -> Self {
        match e {
            WarpError::Infeasible(rep) => Failure::Infeasible(json!({ "feasibility": *rep, "error": rep.summary() })),
            other => Failure::Error(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.to_string())
    }
}

type CmdResult = Result<Value, Failure>;

fn load_map(arg: &str) -> Result<(WarpMap, Value), Failure> {
    let path = Path::new(arg);
    let text = if path.exists() {
        fs::read_to_string(path)?
    } else if arg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        json!({ "type": arg }).to_string()
    } else {
        return Err(Failure::Error(format!("map file {arg} not found")));
    };
    let spec: MapSpec = serde_json::from_str(&text).map_err(|e| Failure::Error(format!("map {arg}: {e}")))?;
    let map = spec.build()?;
    let desc = json!({
        "spec": spec,
        "sigma": map.sigma(),
        "singularities": map.singularities(),
        "max_dw": map.max_dw(),
        "min_dw": map.min_dw(),
    });
    Ok((map, desc))
}

fn resolve_spec(d: &DomainArgs, n: usize) -> Result<DomainSpec, Failure> {
    let spec = match d.mode {
        ModeArg::Tw => {
            if d.l_n.is_some() || d.l_m.is_some() {
                return Err(Failure::Error("--LN/--LM apply to --mode fw only".into()));
            }
            DomainSpec::time_warping(n, d.m)?
        }
        ModeArg::Fw => DomainSpec::frequency_warping(n, d.l_n.unwrap_or(n / 2), d.m, d.l_m.unwrap_or(d.m / 2))?,
    };
    if !(0.0..=1.0).contains(&d.b) {
        return Err(Failure::Error(format!("b = {} outside [0, 1]", d.b)));
    }
    Ok(spec)
}

fn require_n(d: &DomainArgs) -> Result<usize, Failure> {
    d.n.ok_or_else(|| Failure::Error("--N is required".into()))
}

fn header(map: &Value, spec: &DomainSpec, rep: &FeasibilityReport) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("map".into(), map.clone());
    m.insert("domain".into(), json!(spec));
    m.insert("feasibility".into(), json!(rep));
    m
}

fn random_signal(seed: u64, n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..=1.0), 0.0)).collect()
}

fn read_input(s: &SignalArgs, n: Option<usize>) -> Result<Vec<Complex64>, Failure> {
    match (&s.input, s.seed) {
        (Some(p), _) => Ok(io::read_signal(p)?),
        (None, Some(seed)) => {
            let n = n.ok_or_else(|| Failure::Error("--seed needs --N".into()))?;
            Ok(random_signal(seed, n))
        }
        (None, None) => Err(Failure::Error("give --in or --seed".into())),
    }
}

fn write_output(s: &SignalArgs, y: &[Complex64], out: &mut serde_json::Map<String, Value>) -> Result<(), Failure> {
    match &s.out {
        Some(p) => {
            io::write_signal(p, y, s.format.into())?;
            out.insert("output".into(), json!(p));
        }
        None => {
            out.insert("signal".into(), json!(y.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()));
        }
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs) -> CmdResult {
    let (map, desc) = load_map(&a.domain.map)?;
    let spec = resolve_spec(&a.domain, require_n(&a.domain)?)?;
    let rep = check_feasibility(&map, &spec);
    let ok = match a.method {
        MethodArg::Swf => rep.swf_feasible,
        MethodArg::Saf => rep.saf_feasible,
    };
    let mut out = header(&desc, &spec, &rep);
    out.insert("summary".into(), json!(rep.summary()));
    if ok {
        Ok(Value::Object(out))
    } else {
        Err(Failure::Infeasible(Value::Object(out)))
    }
}

fn direct_operator(map: &WarpMap, spec: &DomainSpec, b: f64, method: MethodArg, k: &KernelOptions) -> Result<OperatorMatrix, Failure> {
    let tw = spec.mode == warpops::domain::Mode::TimeWarping;
    Ok(match (method, tw) {
        (MethodArg::Swf, true) => SwfOperator::time(map, spec, b)?.to_matrix()?,
        (MethodArg::Swf, false) => SwfOperator::freq(map, spec, b)?.to_matrix()?,
        (MethodArg::Saf, true) => build_w_t_with(map, spec, b, k)?.op,
        (MethodArg::Saf, false) => build_w_f_with(map, spec, b, k)?.op,
    })
}

fn dual_operator(map: &WarpMap, spec: &DomainSpec, b: f64, k: &KernelOptions) -> Result<(OperatorMatrix, OperatorMatrix), Failure> {
    let tw = spec.mode == warpops::domain::Mode::TimeWarping;
    let build = |e: f64| if tw { build_w_t_with(map, spec, e, k) } else { build_w_f_with(map, spec, e, k) };
    let wb = build(b)?;
    let wbb = if b == 0.5 { wb.clone() } else { build(1.0 - b)? };
    let d = dual_from_parts(&wb, &wbb)?;
    Ok((wb.op, d))
}

/// Input length handling for time warping: even signals are resampled to odd length.
fn prepare_input(d: &DomainArgs, x: Vec<Complex64>) -> Result<(usize, Vec<Complex64>, bool), Failure> {
    let (x, resampled) = if d.mode == ModeArg::Tw && x.len() % 2 == 0 && d.n.is_none_or(|n| n == x.len() + 1) {
        (resample_even_to_odd(&x)?, true)
    } else {
        (x, false)
    };
    let n = d.n.unwrap_or(x.len());
    if n != x.len() {
        return Err(Failure::Error(format!("signal has {} samples, --N is {n}", x.len())));
    }
    Ok((n, x, resampled))
}

fn cmd_apply(a: &ApplyArgs) -> CmdResult {
    let (map, desc) = load_map(&a.domain.map)?;
    let (n, x, resampled) = prepare_input(&a.domain, read_input(&a.signal, a.domain.n)?)?;
    let spec = resolve_spec(&a.domain, n)?;
    let rep = check_feasibility(&map, &spec);
    let mut out = header(&desc, &spec, &rep);
    let k = a.domain.kernel.options();
    let y = match (a.method, spec.mode) {
        (MethodArg::Swf, warpops::domain::Mode::TimeWarping) => SwfOperator::time(&map, &spec, a.domain.b)?.apply(&x)?,
        (MethodArg::Swf, _) => SwfOperator::freq(&map, &spec, a.domain.b)?.apply(&x)?,
        (MethodArg::Saf, _) => direct_operator(&map, &spec, a.domain.b, MethodArg::Saf, &k)?.apply(&x),
    };
    out.insert("resampled".into(), json!(resampled));
    out.insert("input_samples".into(), json!(x.len()));
    out.insert("output_samples".into(), json!(y.len()));
    write_output(&a.signal, &y, &mut out)?;
    Ok(Value::Object(out))
}

fn cmd_invert(a: &InvertArgs) -> CmdResult {
    let (map, desc) = load_map(&a.domain.map)?;
    let n = require_n(&a.domain)?;
    let spec = resolve_spec(&a.domain, n)?;
    let rep = check_feasibility(&map, &spec);
    let mut out = header(&desc, &spec, &rep);
    let y = read_input(&a.signal, Some(spec.m()))?;
    if y.len() != spec.m() {
        return Err(Failure::Error(format!("signal has {} samples, --M is {}", y.len(), spec.m())));
    }
    let b = a.domain.b;
    let k = a.domain.kernel.options();
    let (direct, inverse) = match a.method {
        InverseArg::Transpose => {
            (direct_operator(&map, &spec, b, a.direct, &k)?, direct_operator(&map, &spec, 1.0 - b, a.direct, &k)?)
        }
        InverseArg::Invmap => {
            if spec.mode != warpops::domain::Mode::TimeWarping {
                return Err(Failure::Error("--method invmap needs --mode tw".into()));
            }
            (direct_operator(&map, &spec, b, MethodArg::Swf, &k)?, SwfOperator::time_invmap(&map, &spec, b)?.to_matrix()?)
        }
        InverseArg::Dual => dual_operator(&map, &spec, b, &k)?,
    };
    let x = inverse.apply_adjoint(&y);
    out.insert("operator_residual".into(), json!(residual_norm(&inverse.data, &direct.data, NormMethod::Svd)));
    let reference = match (&a.reference, a.reference_seed) {
        (Some(p), _) => Some(io::read_signal(p)?),
        (None, Some(seed)) => Some(random_signal(seed, n)),
        _ => None,
    };
    if let Some(r) = reference {
        if r.len() != x.len() {
            return Err(Failure::Error(format!("reference has {} samples, expected {}", r.len(), x.len())));
        }
        let num: f64 = r.iter().zip(&x).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = r.iter().map(|u| u.norm_sqr()).sum::<f64>().sqrt();
        out.insert("residual".into(), json!(if den > 0.0 { num / den } else { num }));
    }
    write_output(&a.signal, &x, &mut out)?;
    Ok(Value::Object(out))
}

fn cmd_build(a: &BuildArgs) -> CmdResult {
    let (map, desc) = load_map(&a.domain.map)?;
    let spec = resolve_spec(&a.domain, require_n(&a.domain)?)?;
    let rep = check_feasibility(&map, &spec);
    let mut out = header(&desc, &spec, &rep);
    let k = a.domain.kernel.options();
    let op = match a.method {
        BuildMethodArg::Swf => direct_operator(&map, &spec, a.domain.b, MethodArg::Swf, &k)?,
        BuildMethodArg::Saf => direct_operator(&map, &spec, a.domain.b, MethodArg::Saf, &k)?,
        BuildMethodArg::Dual => dual_operator(&map, &spec, a.domain.b, &k)?.1,
    };
    io::write_matrix(&a.out, &op, a.format.into(), Some(desc["spec"].clone()))?;
    out.insert("kind".into(), json!(op.kind));
    out.insert("rows".into(), json!(op.rows()));
    out.insert("cols".into(), json!(op.cols()));
    out.insert("output".into(), json!(a.out));
    Ok(Value::Object(out))
}

fn parse_rational(s: &str) -> Option<num_rational::BigRational> {
    use num_rational::BigRational;
    match s.split_once('/') {
        Some((p, q)) => {
            let p: num_bigint::BigInt = p.trim().parse().ok()?;
            let q: num_bigint::BigInt = q.trim().parse().ok()?;
            (q != num_bigint::BigInt::from(0)).then(|| BigRational::new(p, q))
        }
        None => s.trim().parse::<f64>().ok().and_then(BigRational::from_float),
    }
}

fn cmd_kernel(c: &KernelCommand) -> CmdResult {
    let KernelCommand::Dump { level, b, out } = c;
    let table = CoeffTable::shared_with(*level);
    let bv = if b == "sym" {
        None
    } else {
        Some(parse_rational(b).ok_or_else(|| Failure::Error(format!("invalid --b {b:?}")))?)
    };
    let mut dump = dump_levels(table, *level, bv.as_ref());
    dump["b"] = json!(b);
    if let Some(p) = out {
        fs::write(p, serde_json::to_string_pretty(&dump).expect("json"))?;
    }
    Ok(dump)
}

fn cmd_oracle(c: &OracleCommand) -> CmdResult {
    match c {
        OracleCommand::Entry { map, m, n, b } => {
            let (map, desc) = load_map(map)?;
            let v = oracle::w_entry(&map, *m, *n, *b);
            Ok(json!({ "map": desc, "m": m, "n": n, "b": b, "re": v.re, "im": v.im }))
        }
        OracleCommand::Matrix { domain, out, format } => {
            let (map, desc) = load_map(&domain.map)?;
            let spec = resolve_spec(domain, require_n(domain)?)?;
            let rep = check_feasibility(&map, &spec);
            let data = oracle::dense_in_band(&map, &spec, domain.b);
            let op = OperatorMatrix { data, spec, kind: OperatorKind::Oracle, b: domain.b };
            io::write_matrix(out, &op, (*format).into(), Some(desc["spec"].clone()))?;
            let mut o = header(&desc, &spec, &rep);
            o.insert("output".into(), json!(out));
            Ok(Value::Object(o))
        }
    }
}

fn cmd_curves(a: &CurvesArgs) -> CmdResult {
    let (map, desc) = load_map(&a.map)?;
    let grid = parse_grid(&a.grid)?;
    let opts = MeasureOptions {
        kernel: a.kernel.options(),
        norm: if a.power_iteration { NormMethod::Power } else { NormMethod::Svd },
    };
    let curve = measure_norms_with(&map, a.n, a.b, &grid, &opts)?;
    let mut out = serde_json::Map::new();
    out.insert("map".into(), desc);
    out.insert("coefficients".into(), json!(curve.coefficients));
    out.insert("missing".into(), json!(curve.points.iter().filter(|p| p.m.is_none()).map(|p| p.redundancy).collect::<Vec<_>>()));
    if let Some(p) = &a.out {
        match a.format {
            FormatArg::Csv => {
                let f = fs::File::create(p)?;
                curve.write_csv(std::io::BufWriter::new(f))?;
            }
            FormatArg::Json => fs::write(p, serde_json::to_string(&curve).expect("json"))?,
            FormatArg::Binary => return Err(Failure::Error("curves support csv and json output".into())),
        }
        out.insert("output".into(), json!(p));
    } else {
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        out.insert("csv".into(), json!(String::from_utf8(buf).expect("utf8")));
    }
    Ok(Value::Object(out))
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Apply(a) => cmd_apply(a),
        Command::Invert(a) => cmd_invert(a),
        Command::Build(a) => cmd_build(a),
        Command::Kernel { command } => cmd_kernel(command),
        Command::Oracle { command } => cmd_oracle(command),
        Command::Curves(a) => cmd_curves(a),
    }
}

fn emit(v: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Infeasible(v)) => {
            emit(&v);
            eprintln!("error: infeasible specification");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
