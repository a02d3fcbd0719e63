//! Command-line front end. Exit codes: 0 ok, 1 inequality violated, 2 usage
//! or input error, 3 resource limit.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::bounds::{self, BoundReport};
use crate::cca::{check_main_theorem, check_thm12, optimal_strategy};
use crate::error::Error;
use crate::markov::{corollary9_check, lemma8_gap, random_doubly_stochastic, StationaryDist};
use crate::mc::chunk_rng;
use crate::perm::{ncpa_advantage, random_perm_dist, sep_security, PermDist};
use crate::prob::{format_rational, parse_rational, Dist, Metric, Rational};
use crate::report::{csv_table, to_json_line, ExperimentReport, Mode};
use crate::swapnot::{self, DpMode, DpOptions, DpValue, ShuffleParams};

#[derive(Parser, Debug)]
#[command(name = "permsec", version, about = "Indistinguishability metrics for random permutations and the swap-or-not shuffle")]
pub struct Cli {
    /// Seed for every randomized command (required by those commands).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Maximum number of joint states held by the exact DP.
    #[arg(long, global = true, default_value_t = swapnot::DEFAULT_BUDGET)]
    pub budget: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distance between two distributions given as JSON files.
    Distances {
        p: PathBuf,
        q: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricArg::Tv)]
        metric: MetricArg,
    },
    /// Exact nCPA, CCA or separation advantage of a permutation distribution.
    Advantage {
        perm: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long, value_enum)]
        kind: AdvantageKind,
        /// Where to write the optimal CCA strategy tree (JSON).
        #[arg(long)]
        strategy: Option<PathBuf>,
    },
    /// Check one family of inequalities on generated instances.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Swap-or-not shuffle experiments.
    Son {
        #[command(subcommand)]
        sub: SonCommand,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Tv,
    Sep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AdvantageKind {
    Ncpa,
    Cca,
    Sep,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 200)]
    pub instances: u64,
    /// Largest support of a generated distribution.
    #[arg(long, default_value_t = 6)]
    pub max_support: usize,
    #[arg(long, default_value_t = 9)]
    pub max_weight: u64,
}

#[derive(Subcommand, Debug)]
pub enum Suite {
    /// Time-reversal slack inequality on random doubly-stochastic pairs.
    Lemma8(ChainArgs),
    /// Separation of `QP̄` against the TV sum on random doubly-stochastic pairs.
    Cor9(ChainArgs),
    /// CCA advantage against separation security.
    Thm12 {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_delimiter = ',', default_value = "3,4")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        q: Vec<usize>,
    },
    /// CCA advantage of `X⁻¹∘Y` against `nCPA(X) + nCPA(Y)`.
    Main {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        max_q: usize,
    },
    /// DP point probabilities against the lower bound on a parameter grid.
    Thm22 {
        /// Triples `d:q:r` separated by commas; defaults to a built-in grid.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<String>,
    },
    /// Exact spanning probability against `1 - 2^(d-r)`.
    Span {
        #[arg(long, default_value_t = 2)]
        min_d: u32,
        #[arg(long, default_value_t = 8)]
        max_d: u32,
        #[arg(long, default_value_t = 12)]
        extra: usize,
    },
    /// Coupling soundness and the per-round collision rate.
    Coupling {
        #[arg(long, default_value_t = 6)]
        d: u32,
        #[arg(long, default_value_t = 4)]
        q: usize,
        #[arg(long, default_value_t = 20)]
        r: usize,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: u64,
    #[arg(long, default_value_t = 8)]
    pub max_m: usize,
    /// Permutation matrices per generated chain.
    #[arg(long, default_value_t = 3)]
    pub terms: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Process {
    Son,
    Tilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    ExactDyadic,
    Float64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SimulateKind {
    /// One coupled shuffle/tilde trajectory.
    Coupled,
    /// Conditional endpoint probability given a collision.
    Collision,
    /// One W-construction sample.
    W,
    /// Monte Carlo spanning probability.
    Span,
}

#[derive(Subcommand, Debug)]
pub enum SonCommand {
    /// Seeded sampling experiments on the shuffle and the tilde process
    Simulate {
        #[arg(long, value_enum, default_value_t = SimulateKind::Coupled)]
        kind: SimulateKind,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        r: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        xs: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        ys: Vec<u32>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Exact law of the tracked cards' joint positions.
    Exact {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        r: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        xs: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Process::Son)]
        process: Process,
        #[arg(long, value_enum, default_value_t = ModeArg::ExactDyadic)]
        mode: ModeArg,
    },
    /// Separation of the `q`-tuple images from uniform.
    Sep {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::ExactDyadic)]
        mode: ModeArg,
    },
    /// Monte Carlo advantage of the subspace distinguisher.
    Attack {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Every closed-form bound that applies to `(d, r, q)` and optionally `eps`.
    Bounds {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Rational in (0, 1), e.g. `1/16`.
        #[arg(long)]
        eps: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Output {
    text: String,
    violated: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, violated: false }
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 3;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out.text) {
                eprintln!("error: {e}");
                return 2;
            }
            i32::from(out.violated)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            if e.is_resource() {
                3
            } else {
                2
            }
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn need_seed(cli: &Cli) -> CliResult<u64> {
    cli.seed.ok_or_else(|| Failure::Usage("this command is randomized and needs --seed".into()))
}

fn read(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn render(cli: &Cli, report: &ExperimentReport) -> String {
    match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

#[derive(Deserialize)]
struct DistFile {
    weights: BTreeMap<String, String>,
}

/// Parses `{"weights": {"outcome": "num/den", ...}}`.
pub fn parse_dist_json(s: &str) -> crate::error::Result<Dist<String>> {
    let file: DistFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    let entries = file
        .weights
        .into_iter()
        .map(|(k, v)| parse_rational(&v).map(|w| (k, w)))
        .collect::<crate::error::Result<Vec<_>>>()?;
    Dist::new(entries)
}

fn dispatch(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Distances { p, q, metric } => {
            let pd = parse_dist_json(&read(p)?)?;
            let qd = parse_dist_json(&read(q)?)?;
            let m = match metric {
                MetricArg::Tv => Metric::Tv,
                MetricArg::Sep => Metric::Sep,
            };
            let v = m.eval(&pd, &qd)?;
            let report = ExperimentReport::exact(v.value())
                .param("metric", serde_json::to_value(m).unwrap())
                .param("p", p.display().to_string())
                .param("q", q.display().to_string());
            Ok(Output::ok(render(cli, &report)))
        }
        Command::Advantage { perm, q, kind, strategy } => {
            let x = PermDist::from_json(&read(perm)?)?;
            let (v, name) = match kind {
                AdvantageKind::Ncpa => (ncpa_advantage(&x, *q)?, "ncpa"),
                AdvantageKind::Sep => (sep_security(&x, *q)?, "sep"),
                AdvantageKind::Cca => {
                    let (v, tree) = optimal_strategy(&x, *q)?;
                    if let Some(path) = strategy {
                        std::fs::write(path, tree.to_json() + "\n")
                            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
                    }
                    (v, "cca")
                }
            };
            let report = ExperimentReport::exact(v.value())
                .param("kind", name)
                .param("n", x.n())
                .param("q", *q);
            Ok(Output::ok(render(cli, &report)))
        }
        Command::Verify { suite } => verify(cli, suite),
        Command::Son { sub } => son(cli, sub),
    }
}

/// Outcome of one generated instance in a sweep.
struct Check {
    slack: Rational,
    holds: bool,
    instance: Value,
}

fn sweep_report(suite: &str, seed: Option<u64>, checks: Vec<Check>) -> (ExperimentReport, bool) {
    let violations: Vec<&Check> = checks.iter().filter(|c| !c.holds).collect();
    let min = checks.iter().map(|c| &c.slack).min().cloned().unwrap_or_else(Rational::zero);
    let holds = violations.is_empty();
    let mut report = ExperimentReport::exact(&min)
        .param("suite", suite)
        .detail("checks", checks.len())
        .detail("violations", violations.len())
        .detail("holds", holds);
    report.seed = seed;
    if let Some(v) = violations.first() {
        report = report.detail("first_violation", &v.instance);
    }
    (report, !holds)
}

fn par_instances<T, F>(seed: u64, instances: u64, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut crate::mc::McRng) -> crate::error::Result<T> + Sync,
{
    let out: Vec<crate::error::Result<T>> = (0..instances)
        .into_par_iter()
        .map(|i| f(i, &mut chunk_rng(seed, i)))
        .collect();
    out.into_iter().collect::<crate::error::Result<Vec<_>>>().map_err(Failure::Lib)
}

fn verify(cli: &Cli, suite: &Suite) -> CliResult<Output> {
    let (report, violated) = match suite {
        Suite::Lemma8(args) | Suite::Cor9(args) => {
            let seed = need_seed(cli)?;
            let is_lemma = matches!(suite, Suite::Lemma8(_));
            if args.max_m == 0 {
                return Err(Failure::Usage("--max-m must be at least 1".into()));
            }
            let checks = par_instances(seed, args.instances, |_, rng| {
                use rand::Rng;
                let m = rng.gen_range(1..=args.max_m);
                let p = random_doubly_stochastic(m, args.terms, 10, rng);
                let q = random_doubly_stochastic(m, args.terms, 10, rng);
                let pi = StationaryDist::uniform(m);
                let instance = json!({"m": m, "p": p.to_csv(), "q": q.to_csv()});
                if is_lemma {
                    let r = lemma8_gap(&p, &q, &pi)?;
                    Ok(Check { slack: r.min_slack, holds: r.holds, instance })
                } else {
                    let r = corollary9_check(&p, &q, &pi)?;
                    Ok(Check { slack: r.tv_sum - r.sep.value(), holds: r.holds, instance })
                }
            })?;
            let (mut rep, v) = sweep_report(if is_lemma { "lemma8" } else { "cor9" }, Some(seed), checks);
            rep = rep.param("instances", args.instances).param("max_m", args.max_m).param("terms", args.terms);
            (rep, v)
        }
        Suite::Thm12 { sweep, n, q } => {
            let seed = need_seed(cli)?;
            if n.is_empty() {
                return Err(Failure::Usage("--n needs at least one size".into()));
            }
            let rows = par_instances(seed, sweep.instances, |i, rng| {
                let size = n[(i % n.len() as u64) as usize];
                let x = random_perm_dist(size, sweep.max_support, sweep.max_weight, rng);
                q.iter()
                    .map(|&qq| {
                        let r = check_thm12(&x, qq)?;
                        let instance = json!({"q": qq, "x": serde_json::from_str::<Value>(&x.to_json()).unwrap()});
                        Ok(Check { slack: r.sep.value() - r.cca.value(), holds: r.holds, instance })
                    })
                    .collect::<crate::error::Result<Vec<_>>>()
            })?;
            let (rep, v) = sweep_report("thm12", Some(seed), rows.into_iter().flatten().collect());
            (rep.param("instances", sweep.instances).param("n", n.clone()).param("q", q.clone()), v)
        }
        Suite::Main { sweep, n, max_q } => {
            let seed = need_seed(cli)?;
            let rows = par_instances(seed, sweep.instances, |_, rng| {
                let x = random_perm_dist(*n, sweep.max_support, sweep.max_weight, rng);
                let y = random_perm_dist(*n, sweep.max_support, sweep.max_weight, rng);
                (1..=*max_q)
                    .map(|qq| {
                        let r = check_main_theorem(&x, &y, qq)?;
                        let instance = json!({
                            "q": qq,
                            "x": serde_json::from_str::<Value>(&x.to_json()).unwrap(),
                            "y": serde_json::from_str::<Value>(&y.to_json()).unwrap(),
                        });
                        Ok(Check { slack: r.rhs - r.lhs.value(), holds: r.holds, instance })
                    })
                    .collect::<crate::error::Result<Vec<_>>>()
            })?;
            let (rep, v) = sweep_report("main", Some(seed), rows.into_iter().flatten().collect());
            (rep.param("instances", sweep.instances).param("n", *n).param("max_q", *max_q), v)
        }
        Suite::Span { min_d, max_d, extra } => {
            let mut checks = Vec::new();
            for d in (*min_d).max(1)..=*max_d {
                for r in d as usize..=d as usize + extra {
                    let exact = swapnot::span_probability(d, r);
                    let bound = bounds::bound_span(d, r)?;
                    checks.push(Check {
                        slack: exact.value() - &bound.value,
                        holds: *exact.value() >= bound.value,
                        instance: json!({"d": d, "r": r, "exact": format_rational(exact.value())}),
                    });
                }
            }
            let (rep, v) = sweep_report("span", None, checks);
            (rep.param("min_d", *min_d).param("max_d", *max_d).param("extra", *extra), v)
        }
        Suite::Thm22 { grid } => verify_thm22(cli, grid)?,
        Suite::Coupling { d, q, r, runs } => {
            let seed = need_seed(cli)?;
            let params = ShuffleParams::new(*d, *r)?;
            let xs: Vec<u32> = (0..*q as u32).collect();
            let s = swapnot::coupling_experiment(&params, &xs, *runs, seed)?;
            let holds = s.violations == 0 && s.rate_within_3_sigma;
            let mut rep = ExperimentReport::new(Mode::Mc, json!(s.collision_rate.estimate))
                .param("d", *d)
                .param("q", *q)
                .param("r", *r)
                .param("suite", "coupling")
                .mc(seed, *runs, s.collision_rate.ci95)
                .detail("summary", &s)
                .detail("holds", holds);
            rep.trials = Some(*runs);
            (rep, !holds)
        }
    };
    Ok(Output { text: render(cli, &report), violated })
}

const DEFAULT_THM22_GRID: &[(u32, usize, usize)] = &[
    (2, 1, 3),
    (3, 1, 4),
    (4, 1, 6),
    (5, 1, 8),
    (6, 1, 9),
    (6, 2, 8),
    (7, 2, 12),
    (7, 2, 13),
];

fn parse_triple(s: &str) -> CliResult<(u32, usize, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Failure::Usage(format!("grid entry {s:?} is not d:q:r"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok((
        parts[0].trim().parse().map_err(|_| bad())?,
        parts[1].trim().parse().map_err(|_| bad())?,
        parts[2].trim().parse().map_err(|_| bad())?,
    ))
}

fn verify_thm22(cli: &Cli, grid: &[String]) -> CliResult<(ExperimentReport, bool)> {
    let triples: Vec<(u32, usize, usize)> = if grid.is_empty() {
        DEFAULT_THM22_GRID.to_vec()
    } else {
        grid.iter().map(|s| parse_triple(s)).collect::<CliResult<_>>()?
    };
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for (d, q, r) in triples {
        let bound = bounds::bound_thm22_lower(d, r, q)?;
        if bound.vacuous {
            skipped.push(json!({"d": d, "q": q, "r": r}));
            continue;
        }
        let params = ShuffleParams::new(d, r)?;
        let exact_fits = r as u64 * (u64::from(d) + q as u64) <= 127;
        let opts = DpOptions {
            mode: if exact_fits { DpMode::ExactDyadic } else { DpMode::Float64 },
            budget: cli.budget,
        };
        for xs in swapnot::affine_representatives(d, q) {
            let (ys, min) = swapnot::evolve_son_joint(&params, &xs, &opts)?.min_distinct();
            let (slack, holds) = match &min {
                DpValue::Exact(p) => (p - &bound.value, *p >= bound.value),
                DpValue::Float(p) => {
                    let gap = p - bound.value_f64();
                    // float slack is reported on the f64 scale
                    (Rational::from_float(gap).unwrap_or_else(Rational::zero), gap >= -1e-9)
                }
            };
            checks.push(Check {
                slack,
                holds,
                instance: json!({"d": d, "q": q, "r": r, "xs": xs, "ys": ys, "min": min, "bound": format_rational(&bound.value)}),
            });
        }
    }
    let (rep, v) = sweep_report("thm22", None, checks);
    Ok((rep.detail("vacuous_skipped", skipped), v))
}

fn dp_mode(m: ModeArg) -> DpMode {
    match m {
        ModeArg::ExactDyadic => DpMode::ExactDyadic,
        ModeArg::Float64 => DpMode::Float64,
    }
}

fn report_mode(m: DpMode) -> Mode {
    match m {
        DpMode::ExactDyadic => Mode::ExactDyadic,
        DpMode::Float64 => Mode::Float64,
    }
}

fn dp_json(v: &DpValue) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn son(cli: &Cli, sub: &SonCommand) -> CliResult<Output> {
    let report = match sub {
        SonCommand::Simulate { kind, d, r, xs, ys, trials } => {
            let seed = need_seed(cli)?;
            let params = ShuffleParams::new(*d, *r)?;
            let base = |mode, value| {
                ExperimentReport::new(mode, value)
                    .param("d", *d)
                    .param("r", *r)
                    .param("kind", format!("{kind:?}").to_lowercase())
            };
            match kind {
                SimulateKind::Coupled => {
                    let s = swapnot::coupled_sample(&params, xs, seed)?;
                    let mut rep = base(Mode::Mc, json!(s.log.is_empty()))
                        .param("xs", xs.clone())
                        .detail("sample", &s);
                    rep.seed = Some(seed);
                    rep.trials = Some(1);
                    rep
                }
                SimulateKind::W => {
                    let s = swapnot::w_construction_sample(&params, xs, seed)?;
                    let mut rep = base(Mode::Mc, json!(s.positions)).param("xs", xs.clone()).detail("sample", &s);
                    rep.seed = Some(seed);
                    rep.trials = Some(1);
                    rep
                }
                SimulateKind::Collision => {
                    if xs.len() != 2 || ys.len() != 2 {
                        return Err(Failure::Usage("collision needs --xs a,b and --ys c,e".into()));
                    }
                    let e = swapnot::conditional_collision_estimate(&params, (xs[0], xs[1]), (ys[0], ys[1]), *trials, seed)?;
                    let bound = bounds::bound_collision(*d, *r)?;
                    base(Mode::Mc, json!(e.estimate))
                        .param("xs", xs.clone())
                        .param("ys", ys.clone())
                        .mc(seed, *trials, e.ci95)
                        .detail("accepted", e.accepted)
                        .detail("hits", e.hits)
                        .detail("bound", &bound)
                }
                SimulateKind::Span => {
                    let e = swapnot::span_probability_mc(*d, *r, *trials, seed)?;
                    let exact = swapnot::span_probability(*d, *r);
                    base(Mode::Mc, json!(e.estimate))
                        .mc(seed, *trials, e.ci95)
                        .detail("exact", format_rational(exact.value()))
                }
            }
        }
        SonCommand::Exact { d, r, xs, process, mode } => {
            let params = ShuffleParams::new(*d, *r)?;
            let opts = DpOptions { mode: dp_mode(*mode), budget: cli.budget };
            let joint = match process {
                Process::Son => swapnot::evolve_son_joint(&params, xs, &opts)?,
                Process::Tilde => swapnot::evolve_tilde_joint(&params, xs, &opts)?,
            };
            if cli.format == Format::Csv {
                return Ok(Output::ok(joint.to_csv()));
            }
            let (ys, min) = joint.min_distinct();
            let mut rep = ExperimentReport::new(report_mode(opts.mode), dp_json(&min))
                .param("d", *d)
                .param("r", *r)
                .param("xs", xs.clone())
                .param("process", format!("{process:?}").to_lowercase())
                .detail("argmin_distinct", ys);
            if joint.len() <= 4096 {
                let law: BTreeMap<String, Value> = (0..joint.len())
                    .map(|i| {
                        let ys = joint.decode(i);
                        let key = ys.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
                        (key, dp_json(&joint.value(&ys)))
                    })
                    .collect();
                rep = rep.detail("law", law);
            }
            rep
        }
        SonCommand::Sep { d, r, q, mode } => {
            let params = ShuffleParams::new(*d, *r)?;
            let opts = DpOptions { mode: dp_mode(*mode), budget: cli.budget };
            let v = swapnot::sep_from_uniform(&params, *q, &opts)?;
            ExperimentReport::new(report_mode(opts.mode), dp_json(&v))
                .param("d", *d)
                .param("r", *r)
                .param("q", *q)
        }
        SonCommand::Attack { d, r, q, trials } => {
            let seed = need_seed(cli)?;
            let params = ShuffleParams::new(*d, *r)?;
            let a = swapnot::subspace_attack(&params, *q, *trials, seed)?;
            ExperimentReport::new(Mode::Mc, json!(a.advantage_estimate))
                .param("d", *d)
                .param("r", *r)
                .param("q", *q)
                .mc(seed, *trials, a.ci95)
                .detail("shuffle_fires", a.shuffle_fires)
                .detail("uniform_fires", a.uniform_fires)
        }
        SonCommand::Bounds { d, r, q, eps } => return son_bounds(cli, *d, *r, *q, eps.as_deref()),
    };
    Ok(Output::ok(render(cli, &report)))
}

fn son_bounds(cli: &Cli, d: u32, r: usize, q: usize, eps: Option<&str>) -> CliResult<Output> {
    let mut reports: Vec<BoundReport> = vec![
        bounds::bound_span(d, r)?,
        bounds::bound_collision(d, r)?,
        bounds::bound_w_pair(d, r)?,
        bounds::bound_w_joint(d, r, q)?,
        bounds::bound_thm22_lower(d, r, q)?,
    ];
    let mut params = None;
    if let Some(e) = eps {
        let e = parse_rational(e)?;
        reports.push(bounds::bound_thm23_cca(&e)?);
        params = Some(bounds::thm23_params(d, &e)?);
    }
    let text = match cli.format {
        Format::Json => {
            #[derive(serde::Serialize)]
            struct BoundsOut<'a> {
                bounds: &'a [BoundReport],
                #[serde(skip_serializing_if = "Option::is_none")]
                thm23_params: Option<bounds::Thm23Params>,
            }
            to_json_line(&BoundsOut { bounds: &reports, thm23_params: params })
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|b| {
                    vec![
                        b.name.clone(),
                        serde_json::to_string(&b.inputs).unwrap(),
                        format_rational(&b.value),
                        b.vacuous.to_string(),
                    ]
                })
                .collect();
            csv_table(&["name", "inputs", "value", "vacuous"], &rows)
        }
    };
    Ok(Output::ok(text))
}
