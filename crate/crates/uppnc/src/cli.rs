//! Command-line front end: network files, pipeline runs, method comparison,
//! convolution benchmarks and curve export.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curves::{equivalent, Curve};
use crate::error::{Error, Result};
use crate::flowcontrol::{
    backlog_bound, delay_bound, first_divergence, Analyzer, ArrivalSpec, NodeSpec, PipelineOptions,
    ProgressRecord, TandemSpec,
};
use crate::minimize::minimize;
use crate::minplus::{convolution, counters, reset_counters, set_parallel};
use crate::numerics::{format_rational, parse_rational, ExtendedRational, Rational};
use crate::oracles::{
    conv_oracle_eval, random_curve, random_equal_rate_pair, random_staircase_pair, random_times, sac_oracle_eval, OracleConfig,
    RandomCurveSpec, StaircaseSpec,
};
use crate::subadd::{check_dominance, conv_optimized, sac, ConvOptions, DominanceRelation};

type Ext = ExtendedRational;

/// Parsed network description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkFile {
    pub tandem: TandemSpec,
    pub arrival: Option<ArrivalSpec>,
}

/// Grammar, one directive per line, `#` starts a comment:
///
/// ```text
/// node <rate> <latency>
/// window <size|inf>
/// arrival <sigma> <rho>
/// ```
///
/// The k-th `window` line sits in front of node k+1 and must follow at least k
/// nodes. Windows that are never given stay open.
pub fn parse_network_str(text: &str) -> Result<NetworkFile> {
    let mut nodes = Vec::new();
    let mut windows = Vec::new();
    let mut arrival = None;
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let err = |msg: String| Error::ParseLine { line, msg };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let num = |s: &str| parse_rational(s).map_err(|_| err(format!("bad number {s:?}")));
        match (words[0], words.len()) {
            ("node", 3) => {
                let spec = NodeSpec::new(num(words[1])?, num(words[2])?).map_err(|e| err(e.to_string()))?;
                nodes.push(spec);
            }
            ("window", 2) => {
                if windows.len() >= nodes.len() {
                    return Err(err("window must follow the node it precedes".into()));
                }
                let w: Ext = words[1].parse().map_err(|_| err(format!("bad window {:?}", words[1])))?;
                if !w.is_plus_inf() && w <= Ext::zero() {
                    return Err(err("windows must be positive".into()));
                }
                windows.push(w);
            }
            ("arrival", 3) => {
                if arrival.is_some() {
                    return Err(err("arrival given twice".into()));
                }
                let spec = ArrivalSpec::new(num(words[1])?, num(words[2])?).map_err(|e| err(e.to_string()))?;
                arrival = Some(spec);
            }
            ("window", _) => return Err(err("window takes 1 argument".into())),
            (d @ ("node" | "arrival"), _) => return Err(err(format!("{d} takes 2 arguments"))),
            (other, _) => return Err(err(format!("unknown directive {other:?}"))),
        }
    }
    if nodes.is_empty() {
        return Err(Error::ParseLine { line: text.lines().count().max(1), msg: "no node given".into() });
    }
    if windows.len() >= nodes.len() {
        return Err(Error::ParseLine {
            line: text.lines().count(),
            msg: format!("{} windows for {} nodes", windows.len(), nodes.len()),
        });
    }
    windows.resize(nodes.len() - 1, Ext::PlusInf);
    Ok(NetworkFile { tandem: TandemSpec::new(nodes, windows)?, arrival })
}

pub fn parse_network(path: &Path) -> Result<NetworkFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_network_str(&text)
}

/// Process exit status for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::ParseLine { .. } => 2,
        Error::BudgetExceeded => 3,
        Error::Divergence(_) => 4,
        _ => 1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Approx,
}

#[derive(Clone, Debug, Args)]
pub struct Optimizations {
    /// Skip minimization after each pipeline step.
    #[arg(long, env = "UPPNC_NO_MINIMIZE")]
    pub no_minimize: bool,
    #[arg(long, env = "UPPNC_NO_DOMINANCE")]
    pub no_dominance: bool,
    #[arg(long, env = "UPPNC_NO_ASYMPTOTIC")]
    pub no_asymptotic: bool,
    #[arg(long, env = "UPPNC_NO_SELFCONV")]
    pub no_selfconv: bool,
    /// Seconds allowed per pipeline step; 0 disables the limit.
    #[arg(long, env = "UPPNC_BUDGET", default_value_t = 300)]
    pub budget: u64,
    /// Evaluate elementary convolutions on all cores.
    #[arg(long, env = "UPPNC_PARALLEL")]
    pub parallel: bool,
}

impl Default for Optimizations {
    fn default() -> Self {
        Optimizations {
            no_minimize: false,
            no_dominance: false,
            no_asymptotic: false,
            no_selfconv: false,
            budget: 300,
            parallel: false,
        }
    }
}

impl Optimizations {
    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            minimize: !self.no_minimize,
            conv: ConvOptions {
                dominance: !self.no_dominance,
                asymptotic: !self.no_asymptotic,
                selfconv: !self.no_selfconv,
            },
            step_budget: (self.budget > 0).then(|| Duration::from_secs(self.budget)),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "uppnc", version, about = "Exact analysis of window flow-controlled tandems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an end-to-end equivalent service curve.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Exact, env = "UPPNC_METHOD")]
        method: Method,
        #[command(flatten)]
        opts: Optimizations,
        /// Write the per-step records as CSV.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Write the resulting curve in text form.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Run both methods and report where they differ.
    Compare {
        file: PathBuf,
        #[command(flatten)]
        opts: Optimizations,
    },
    /// Time direct against optimized convolution of random staircase pairs.
    Bench {
        #[arg(long, env = "UPPNC_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Keep only trials of this class.
        #[arg(long, value_enum)]
        class: Option<BenchClass>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "UPPNC_PARALLEL")]
        parallel: bool,
    },
    /// Write a computed curve over `[0, horizon[` as CSV.
    Export {
        file: PathBuf,
        /// exact, approx, arrival, node:<i>, exact:<i> or approx:<i>
        #[arg(long)]
        curve: String,
        #[arg(long)]
        horizon: String,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: Optimizations,
    },
    /// Check convolution and closure against the brute-force evaluators.
    Verify {
        #[arg(long, env = "UPPNC_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

fn curve_summary(f: &Curve) -> String {
    format!(
        "T={} d={} c={} N={}",
        format_rational(f.transient()),
        format_rational(f.period()),
        format_rational(f.increment()),
        f.cardinality()
    )
}

fn records_csv(records: &[ProgressRecord]) -> String {
    let mut out = format!("{}\n", ProgressRecord::CSV_HEADER);
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub method: Method,
    pub curve: Curve,
    pub records: Vec<ProgressRecord>,
    pub delay: Option<Ext>,
    pub backlog: Option<Ext>,
}

impl Analysis {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let method = if self.method == Method::Exact { "exact" } else { "approx" };
        let _ = writeln!(out, "method: {method}");
        let _ = writeln!(out, "curve: {}", curve_summary(&self.curve));
        out.push_str(&records_csv(&self.records));
        if let (Some(d), Some(b)) = (&self.delay, &self.backlog) {
            let _ = writeln!(out, "delay bound: {d}");
            let _ = writeln!(out, "backlog bound: {b}");
        }
        out
    }
}

pub fn analyze(net: &NetworkFile, method: Method, options: PipelineOptions) -> Result<Analysis> {
    let mut analyzer = Analyzer::new(options);
    let curve = match method {
        Method::Exact => analyzer.exact_equivalent(&net.tandem)?,
        Method::Approx => analyzer.approx_equivalent(&net.tandem)?,
    };
    let (delay, backlog) = match &net.arrival {
        Some(a) => (Some(delay_bound(a, &curve)?), Some(backlog_bound(a, &curve)?)),
        None => (None, None),
    };
    Ok(Analysis { method, curve, records: analyzer.records, delay, backlog })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub label: String,
    pub equal: bool,
    /// First abscissa where the curves differ, with the exact and approximate values.
    pub divergence: Option<(Rational, Ext, Ext)>,
}

impl Verdict {
    fn between(label: String, exact: &Curve, approx: &Curve) -> Result<Verdict> {
        let equal = equivalent(exact, approx)?;
        let divergence = if equal { None } else { first_divergence(exact, approx)? };
        Ok(Verdict { label, equal, divergence })
    }

    fn render(&self) -> String {
        match (&self.equal, &self.divergence) {
            (true, _) => format!("{}: equal", self.label),
            (false, Some((t, e, a))) => {
                format!("{}: differ, first at t={} (exact {e}, approx {a})", self.label, format_rational(t))
            }
            (false, None) => format!("{}: differ", self.label),
        }
    }
}

pub fn compare(net: &NetworkFile, options: PipelineOptions) -> Result<Vec<Verdict>> {
    let t = &net.tandem;
    let mut analyzer = Analyzer::new(options);
    let exact_nodes = analyzer.exact_per_node(t)?;
    let mut verdicts = Vec::new();
    for i in 1..t.len() {
        let approx = analyzer.per_node_approx(t, i)?;
        verdicts.push(Verdict::between(format!("node {i}"), &exact_nodes[i - 1], &approx)?);
    }
    let exact = analyzer.exact_equivalent(t)?;
    let approx = analyzer.approx_equivalent(t)?;
    verdicts.push(Verdict::between("end-to-end".into(), &exact, &approx)?);
    Ok(verdicts)
}

/// Selects a curve by id; see [`Command::Export`].
pub fn select_curve(net: &NetworkFile, id: &str, options: PipelineOptions) -> Result<Curve> {
    let t = &net.tandem;
    let mut analyzer = Analyzer::new(options);
    let unknown = || Error::InvalidArgument(format!("unknown curve id {id:?}"));
    let (kind, index) = match id.split_once(':') {
        Some((k, i)) => (k, Some(i.parse::<usize>().map_err(|_| unknown())?)),
        None => (id, None),
    };
    match (kind, index) {
        ("exact", None) => analyzer.exact_equivalent(t),
        ("approx", None) => analyzer.approx_equivalent(t),
        ("arrival", None) => net
            .arrival
            .as_ref()
            .map(ArrivalSpec::curve)
            .ok_or_else(|| Error::InvalidArgument("the network file has no arrival line".into())),
        ("node", Some(i)) if (1..=t.len()).contains(&i) => Ok(t.nodes[i - 1].service_curve()),
        ("exact", Some(i)) => analyzer.per_node_exact(t, i),
        ("approx", Some(i)) => analyzer.per_node_approx(t, i),
        _ => Err(unknown()),
    }
}

/// Cut of `f` over `[0, horizon[` in the sequence CSV schema.
pub fn export_csv(f: &Curve, horizon: &Rational) -> Result<String> {
    if !horizon.is_positive() {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    Ok(f.cut_range(&Rational::from_integer(0.into()), horizon, false)?.merge_well_formed().to_csv())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchClass {
    /// One operand lies below the other everywhere.
    Dominance,
    /// One operand lies below the other from some time on.
    Asymptotic,
    /// Neither of the above.
    Neither,
}

impl BenchClass {
    pub fn of(f: &Curve, g: &Curve) -> Result<BenchClass> {
        Ok(match check_dominance(f, g)? {
            DominanceRelation::FirstDominates | DominanceRelation::SecondDominates => BenchClass::Dominance,
            DominanceRelation::AsymptoticFirstOverSecond(_) | DominanceRelation::AsymptoticSecondOverFirst(_) => {
                BenchClass::Asymptotic
            }
            DominanceRelation::Incomparable => BenchClass::Neither,
        })
    }

    fn name(self) -> &'static str {
        match self {
            BenchClass::Dominance => "dominance",
            BenchClass::Asymptotic => "asymptotic",
            BenchClass::Neither => "neither",
        }
    }
}

/// One convolution timing; every trial yields a `baseline` and an `optimized` row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub trial: usize,
    pub class: BenchClass,
    pub variant: &'static str,
    pub operands: (usize, usize),
    pub raw_cardinality: usize,
    pub minimized_cardinality: usize,
    pub elementary_convolutions: u64,
    pub branch: String,
    /// Whether the result matches the baseline of the same trial.
    pub equivalent: bool,
    pub elapsed: Duration,
}

impl BenchRecord {
    pub const CSV_HEADER: &'static str =
        "trial,class,variant,operand_f,operand_g,raw,minimized,elementary,branch,equivalent,elapsed_ns";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.class.name(),
            self.variant,
            self.operands.0,
            self.operands.1,
            self.raw_cardinality,
            self.minimized_cardinality,
            self.elementary_convolutions,
            self.branch,
            self.equivalent,
            self.elapsed.as_nanos()
        )
    }
}

/// Baseline and optimized rows for one operand pair.
pub fn bench_pair(trial: usize, class: BenchClass, f: &Curve, g: &Curve) -> Result<[BenchRecord; 2]> {
    let operands = (f.cardinality(), g.cardinality());
    reset_counters();
    let start = Instant::now();
    let direct = convolution(f, g)?;
    let direct_time = start.elapsed();
    let direct_count = counters().elementary_convolutions;
    let direct_min = minimize(&direct)?;

    let start = Instant::now();
    let (fast, trace) = conv_optimized(f, g, &ConvOptions::default())?;
    let fast_time = start.elapsed();
    let fast_min = minimize(&fast)?;
    let equal = equivalent(&fast_min, &direct_min)?;
    Ok([
        BenchRecord {
            trial,
            class,
            variant: "baseline",
            operands,
            raw_cardinality: direct.cardinality(),
            minimized_cardinality: direct_min.cardinality(),
            elementary_convolutions: direct_count,
            branch: "direct".into(),
            equivalent: true,
            elapsed: direct_time,
        },
        BenchRecord {
            trial,
            class,
            variant: "optimized",
            operands,
            raw_cardinality: fast.cardinality(),
            minimized_cardinality: fast_min.cardinality(),
            elementary_convolutions: trace.elementary_convolutions,
            branch: trace.branch.to_string(),
            equivalent: equal,
            elapsed: fast_time,
        },
    ])
}

/// `count` seeded trials, optionally restricted to one class.
pub fn bench(seed: u64, count: usize, only: Option<BenchClass>, spec: &StaircaseSpec) -> Result<Vec<BenchRecord>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * count);
    let mut trial = 0;
    let mut draws = 0usize;
    while trial < count {
        draws += 1;
        if draws > count.saturating_mul(1000) {
            return Err(Error::InvalidArgument("requested class is too rare for this generator".into()));
        }
        // independent draws almost never share a long-run rate, which incomparable pairs need
        let (f, g) = if draws % 2 == 0 {
            random_equal_rate_pair(&mut rng, spec)
        } else {
            random_staircase_pair(&mut rng, spec)
        };
        let class = BenchClass::of(&f, &g)?;
        if only.is_some_and(|c| c != class) {
            continue;
        }
        rows.extend(bench_pair(trial, class, &f, &g)?);
        trial += 1;
    }
    Ok(rows)
}

/// Mismatches between the library and the brute-force evaluators.
pub fn verify(seed: u64, pairs: usize, samples: usize) -> Result<(usize, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomCurveSpec::default();
    let mut checked = 0;
    let mut failures = Vec::new();
    for k in 0..pairs {
        let f = random_curve(&mut rng, &spec);
        let g = random_curve(&mut rng, &spec);
        let h = convolution(&f, &g)?;
        let horizon = (f.horizon() + g.horizon()) * Rational::from_integer(2.into());
        for t in random_times(&mut rng, &horizon, samples) {
            checked += 1;
            let expected = conv_oracle_eval(&f, &g, &t)?;
            if h.eval(&t) != expected {
                failures.push(format!("conv pair {k} at t={}: {} vs {expected}", format_rational(&t), h.eval(&t)));
            }
        }
    }
    let small = RandomCurveSpec { max_breakpoints: 3, denominators: vec![1, 2], ..Default::default() };
    let cfg = OracleConfig::default();
    for k in 0..pairs {
        let f = random_curve(&mut rng, &small);
        let closure = match sac(&f) {
            Ok(c) => c,
            Err(Error::Divergence(_)) => continue,
            Err(e) => return Err(e),
        };
        let horizon = f.horizon() * Rational::from_integer(3.into());
        for t in random_times(&mut rng, &horizon, samples) {
            let oracle = sac_oracle_eval(&f, &t, &cfg)?;
            if !oracle.stabilized {
                continue;
            }
            checked += 1;
            if closure.eval(&t) != oracle.value {
                failures.push(format!("closure {k} at t={}: {} vs {}", format_rational(&t), closure.eval(&t), oracle.value));
            }
        }
    }
    Ok((checked, failures))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Analyze { file, method, opts, records, curve_out } => {
            set_parallel(opts.parallel);
            let net = parse_network(&file)?;
            let analysis = analyze(&net, method, opts.pipeline_options())?;
            print!("{}", analysis.render());
            if let Some(path) = records {
                write_file(&path, &records_csv(&analysis.records))?;
            }
            if let Some(path) = curve_out {
                write_file(&path, &analysis.curve.to_text())?;
            }
        }
        Command::Compare { file, opts } => {
            set_parallel(opts.parallel);
            let net = parse_network(&file)?;
            for v in compare(&net, opts.pipeline_options())? {
                println!("{}", v.render());
            }
        }
        Command::Bench { seed, count, class, out, parallel } => {
            set_parallel(parallel);
            let rows = bench(seed, count, class, &StaircaseSpec::default())?;
            let mut csv = format!("{}\n", BenchRecord::CSV_HEADER);
            for r in &rows {
                csv.push_str(&r.csv_row());
                csv.push('\n');
            }
            write_file(&out, &csv)?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Export { file, curve, horizon, out, opts } => {
            set_parallel(opts.parallel);
            let net = parse_network(&file)?;
            let horizon = parse_rational(&horizon)?;
            let f = select_curve(&net, &curve, opts.pipeline_options())?;
            let csv = export_csv(&f, &horizon)?;
            match out {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Verify { seed, pairs, samples } => {
            let (checked, failures) = verify(seed, pairs, samples)?;
            for f in &failures {
                println!("mismatch: {f}");
            }
            println!("{checked} values checked, {} mismatches", failures.len());
            if !failures.is_empty() {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parses `args` (program name first) and runs the command; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
