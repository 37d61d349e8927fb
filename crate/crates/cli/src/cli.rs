//! Argument parsing and dispatch for the `rpts` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rpts_core::ftnet::PreserverKind;
use rpts_core::generators::{generate, GeneratorSpec};
use rpts_core::graph::bfs_distances;
use rpts_core::labels::{query, DistanceLabel};
use rpts_core::tiebreak::{certify_tie_free, PerturbConfig};
use rpts_core::verify::CheckMode;
use rpts_core::{perturb_tie_free, UndirectedGraph};

use crate::error::{io_err, CliError, CliResult, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION_FAILED};
use crate::experiment::{load_config, run_experiment};
use crate::io::{parse_faults, parse_sources, read_graph, write_file, write_json};
use crate::pipeline::{
    congest_spt_pipeline, congest_sxs_pipeline, labels_pipeline, lb_pipeline, preserver_pipeline,
    spanner_pipeline, spanner_stats, srp_pipeline, verify_pipeline, LbParams, Property,
};

#[derive(Debug, Parser)]
#[command(name = "rpts", version, about = "Restorable tiebreaking and fault-tolerant network design")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Check the output against brute-force oracles; exit 1 on failure.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Main output path (stdout when omitted; a directory for `labels build`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a graph in the edge-list format.
    Gen(GenArgs),
    /// Draw a tie-free antisymmetric perturbation and dump it.
    Reweight(ReweightArgs),
    /// Subset replacement paths.
    Srp(SrpArgs),
    /// Fault-tolerant distance preserver.
    Preserver(PreserverArgs),
    /// Fault-tolerant +4 additive spanner.
    Spanner(SpannerArgs),
    /// Fault-tolerant distance labels.
    #[command(subcommand)]
    Labels(LabelsCommand),
    /// Lower-bound graph family.
    #[command(subcommand)]
    Lb(LbCommand),
    /// CONGEST simulation.
    Congest(CongestArgs),
    /// Property checkers.
    Verify(VerifyArgs),
    /// Run a TOML experiment config.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Gnp,
    Cycle,
    Path,
    Star,
    Complete,
    Grid,
    Tree,
    LbFamily,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub f: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReweightArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Per-arc bound; defaults to n^3.
    #[arg(long)]
    pub bound: Option<i64>,
}

#[derive(Debug, Args)]
pub struct SrpArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Comma-separated, e.g. "0,5,9".
    #[arg(long)]
    pub sources: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Sxv,
    Sxs,
}

#[derive(Debug, Args)]
pub struct PreserverArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "sxs")]
    pub kind: KindArg,
    /// Fault budget.
    #[arg(long, default_value_t = 1)]
    pub f: usize,
    #[arg(long)]
    pub sources: String,
    /// Stats sidecar; defaults to `<out>.stats.json`.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpannerArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub f: usize,
    /// Number of centers, or AUTO.
    #[arg(long, default_value = "AUTO")]
    pub sigma: String,
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LabelsCommand {
    /// Write one label file per vertex into the `--out` directory.
    Build {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1)]
        f: usize,
    },
    /// Distance between `s` and `t` avoiding `--fail`, from two label files.
    Query {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        t: usize,
        /// e.g. "0-1,2-3".
        #[arg(long, default_value = "")]
        fail: String,
        /// Graph to check the answer against with `--verify`.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LbCommand {
    /// `G_f(d)`, or `G*` when `--sigma` is given.
    Gen {
        #[arg(long)]
        f: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        sigma: Option<usize>,
        /// Size of `X` in `G*` (default: the leaf count).
        #[arg(long)]
        x_count: Option<usize>,
        /// Total vertex count of `G*`, instead of `--x-count`.
        #[arg(long)]
        n: Option<usize>,
        /// Weights file, lines `u v num den`.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CongestMode {
    Spt,
    Sxs,
}

#[derive(Debug, Args)]
pub struct CongestArgs {
    #[arg(value_enum)]
    pub mode: CongestMode,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub sources: String,
    /// Metrics JSON {rounds, max_edge_msgs_per_round, total_msgs, D, ...}.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub property: Vec<Property>,
    #[arg(long, default_value_t = 2)]
    pub f_max: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = rpts_core::verify::DEFAULT_SAMPLES)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(&cli) {
        Ok(Some(false)) => {
            eprintln!("verification failed");
            EXIT_VERIFICATION_FAILED
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &impl serde::Serialize) -> CliResult<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
            Ok(())
        }
    }
}

fn sidecar(out: Option<&Path>, explicit: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        out.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".stats.json");
            PathBuf::from(s)
        })
    })
}

fn load(path: &Path) -> CliResult<Arc<UndirectedGraph>> {
    Ok(Arc::new(read_graph(path)?))
}

fn label_path(dir: &Path, v: usize) -> PathBuf {
    dir.join(format!("{v}.label"))
}

fn need<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{what}")))
}

/// Runs a parsed command; `Some(pass)` when verification ran.
pub fn run(cli: &Cli) -> CliResult<Option<bool>> {
    let out = cli.out.as_deref();
    let seed = cli.seed;
    match &cli.command {
        Command::Gen(a) => {
            let spec = match a.kind {
                GenKind::Gnp => GeneratorSpec::Gnp {
                    n: need(a.n, "n")?,
                    p: need(a.p, "p")?,
                },
                GenKind::Cycle => GeneratorSpec::Cycle { n: need(a.n, "n")? },
                GenKind::Path => GeneratorSpec::Path { n: need(a.n, "n")? },
                GenKind::Star => GeneratorSpec::Star { n: need(a.n, "n")? },
                GenKind::Complete => GeneratorSpec::Complete { n: need(a.n, "n")? },
                GenKind::Tree => GeneratorSpec::Tree { n: need(a.n, "n")? },
                GenKind::Grid => GeneratorSpec::Grid {
                    rows: need(a.rows, "rows")?,
                    cols: need(a.cols, "cols")?,
                },
                GenKind::LbFamily => GeneratorSpec::LbFamily {
                    f: need(a.f, "f")?,
                    d: need(a.d, "d")?,
                },
            };
            emit(out, &generate(&spec, seed)?.to_edge_list())?;
            Ok(None)
        }
        Command::Reweight(a) => {
            let g = load(&a.graph)?;
            let mut cfg = PerturbConfig::new(seed);
            if let Some(b) = a.bound {
                cfg = cfg.with_bound(b);
            }
            let rpts = perturb_tie_free(g, cfg)?;
            let verified = if cli.verify {
                Some(certify_tie_free(rpts.perturbed()).is_ok())
            } else {
                None
            };
            emit(out, &rpts.perturbed().dump())?;
            Ok(verified)
        }
        Command::Srp(a) => {
            let g = load(&a.graph)?;
            let (result, outcome) = srp_pipeline(g, &parse_sources(&a.sources)?, seed, cli.verify)?;
            emit_json(out, &result)?;
            Ok(outcome.verified)
        }
        Command::Preserver(a) => {
            let g = load(&a.graph)?;
            let kind = match a.kind {
                KindArg::Sxv => PreserverKind::Sxv,
                KindArg::Sxs => PreserverKind::Sxs,
            };
            let (p, outcome) =
                preserver_pipeline(g, kind, a.f, &parse_sources(&a.sources)?, seed, cli.verify)?;
            emit(out, &p.subgraph.to_edge_list())?;
            if let Some(path) = sidecar(out, a.stats.as_deref()) {
                write_json(&path, &p.stats)?;
            }
            if let Some(r) = outcome.report.get("verification").filter(|v| !v.is_null()) {
                eprintln!("{r}");
            }
            Ok(outcome.verified)
        }
        Command::Spanner(a) => {
            let g = load(&a.graph)?;
            let sigma = if a.sigma.eq_ignore_ascii_case("auto") {
                None
            } else {
                Some(a.sigma.parse().map_err(|_| {
                    CliError::Usage(format!("--sigma must be AUTO or a count, got {:?}", a.sigma))
                })?)
            };
            let (sp, outcome) = spanner_pipeline(g, a.f, sigma, seed, cli.verify)?;
            emit(out, &sp.subgraph.to_edge_list())?;
            if let Some(path) = sidecar(out, a.stats.as_deref()) {
                write_json(&path, &spanner_stats(&sp))?;
            }
            if let Some(r) = outcome.report.get("verification").filter(|v| !v.is_null()) {
                eprintln!("{r}");
            }
            Ok(outcome.verified)
        }
        Command::Labels(LabelsCommand::Build { graph, f }) => {
            let dir = need(out, "out")?;
            let g = load(graph)?;
            let (labels, outcome) = labels_pipeline(g, *f, seed, cli.verify)?;
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            for l in &labels {
                write_file(&label_path(dir, l.owner), l.encode())?;
            }
            println!("{}", serde_json::to_string_pretty(&outcome.report).expect("reports serialize"));
            Ok(outcome.verified)
        }
        Command::Labels(LabelsCommand::Query {
            dir,
            s,
            t,
            fail,
            graph,
        }) => {
            let read = |v: usize| -> CliResult<DistanceLabel> {
                let p = label_path(dir, v);
                let bytes = fs::read(&p).map_err(io_err(&p))?;
                Ok(DistanceLabel::decode(&bytes)?)
            };
            let (a, b) = (read(*s)?, read(*t)?);
            let g = graph.as_deref().map(read_graph).transpose()?;
            let faults = parse_faults(fail, g.as_ref())?;
            let d = query(&a, &b, &faults)?;
            let verified = match (&g, cli.verify) {
                (Some(g), true) => Some(bfs_distances(g, *s, &faults)[*t] == d),
                (None, true) => return Err(CliError::Usage("--verify needs --graph".into())),
                _ => None,
            };
            emit(out, &format!("{d}\n"))?;
            Ok(verified)
        }
        Command::Lb(LbCommand::Gen {
            f,
            d,
            sigma,
            x_count,
            n,
            weights,
        }) => {
            let p = LbParams {
                f: *f,
                d: *d,
                sigma: *sigma,
                x_count: *x_count,
                target_n: *n,
            };
            let (lb, outcome) = lb_pipeline(&p, cli.verify)?;
            emit(out, &lb.graph.to_edge_list())?;
            if let Some(path) = weights {
                let text = lb.weights_file().ok_or_else(|| {
                    CliError::Usage("weights exist only for G*; pass --sigma".into())
                })?;
                write_file(path, text)?;
            }
            eprintln!("{}", serde_json::to_string_pretty(&outcome.report).expect("reports serialize"));
            Ok(outcome.verified)
        }
        Command::Congest(a) => {
            let g = load(&a.graph)?;
            let sources = parse_sources(&a.sources)?;
            let (metrics, verified) = match a.mode {
                CongestMode::Spt => {
                    let (m, o) = congest_spt_pipeline(g, &sources, seed, cli.verify)?;
                    (m, o.verified)
                }
                CongestMode::Sxs => {
                    let (p, m, o) = congest_sxs_pipeline(g, &sources, seed, cli.verify)?;
                    if let Some(path) = out {
                        write_file(path, p.subgraph.to_edge_list())?;
                    }
                    (m, o.verified)
                }
            };
            match &a.metrics {
                Some(path) => write_json(path, &metrics)?,
                None => println!("{}", serde_json::to_string_pretty(&metrics).expect("metrics serialize")),
            }
            Ok(verified)
        }
        Command::Verify(a) => {
            let g = a.graph.as_deref().map(load).transpose()?;
            let mode = match a.mode {
                ModeArg::Auto => CheckMode::Auto,
                ModeArg::Exhaustive => CheckMode::Exhaustive,
                ModeArg::Sampled => CheckMode::Sampled {
                    samples: a.samples,
                    seed,
                },
            };
            let (reports, outcome) = verify_pipeline(g, &a.property, a.f_max, mode, seed)?;
            emit_json(out, &json!({ "reports": reports }))?;
            // Property checks always verify.
            Ok(outcome.verified)
        }
        Command::Experiment(a) => {
            let cfg = load_config(&a.config)?;
            let base = a.config.parent().unwrap_or(Path::new("."));
            let summary = run_experiment(&cfg, base)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            Ok(Some(summary.all_verified))
        }
    }
}
