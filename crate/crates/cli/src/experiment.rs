//! TOML-configured experiments: one pipeline over a graph or a sweep of
//! generated graphs, written as `report.json` plus `table.csv`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rpts_core::ftnet::PreserverKind;
use rpts_core::generators::{generate, GeneratorSpec};
use rpts_core::verify::CheckMode;
use rpts_core::UndirectedGraph;

use crate::error::{io_err, CliError, CliResult};
use crate::io::{read_graph, write_file, write_json};
use crate::pipeline::{
    congest_spt_pipeline, congest_sxs_pipeline, labels_pipeline, lb_pipeline, preserver_pipeline,
    spanner_pipeline, srp_pipeline, verify_pipeline, LbParams, Outcome, Property,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentCommand {
    Srp,
    Preserver,
    Spanner,
    Labels,
    Lb,
    CongestSpt,
    CongestSxs,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    /// Edge-list file, relative to the config file.
    File(PathBuf),
    Generator(GeneratorSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Overrides the generator's `n`; empty keeps it.
    #[serde(default)]
    pub n: Vec<usize>,
    /// Instances per `n`, seeded `seed, seed + 1, ...`.
    #[serde(default = "one")]
    pub seeds: u64,
    /// For `gnp`: use `p = avg_degree / n`.
    #[serde(default)]
    pub avg_degree: Option<f64>,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub f: Option<usize>,
    pub sources: Option<Vec<usize>>,
    /// Draw this many sources per instance instead of listing them.
    pub source_count: Option<usize>,
    pub kind: Option<PreserverKind>,
    pub sigma: Option<usize>,
    pub d: Option<usize>,
    pub x_count: Option<usize>,
    pub target_n: Option<usize>,
    #[serde(default)]
    pub properties: Vec<Property>,
    pub f_max: Option<usize>,
    pub mode: Option<ModeSpec>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Relative to the config file.
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub command: ExperimentCommand,
    pub seed: u64,
    #[serde(default)]
    pub verify: bool,
    /// Not needed for `lb`, or for `verify` with only the C4 property.
    #[serde(default)]
    pub graph: Option<GraphSource>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub params: Params,
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub instances: usize,
    /// No enabled verification failed.
    pub all_verified: bool,
    pub report: PathBuf,
    pub table: PathBuf,
}

struct Instance {
    n: Option<usize>,
    seed: u64,
}

fn resize(spec: &GeneratorSpec, n: usize, avg_degree: Option<f64>) -> CliResult<GeneratorSpec> {
    Ok(match spec {
        GeneratorSpec::Gnp { p, .. } => GeneratorSpec::Gnp {
            n,
            p: avg_degree.map_or(*p, |c| (c / n as f64).min(1.0)),
        },
        GeneratorSpec::Cycle { .. } => GeneratorSpec::Cycle { n },
        GeneratorSpec::Path { .. } => GeneratorSpec::Path { n },
        GeneratorSpec::Star { .. } => GeneratorSpec::Star { n },
        GeneratorSpec::Complete { .. } => GeneratorSpec::Complete { n },
        GeneratorSpec::Tree { .. } => GeneratorSpec::Tree { n },
        other => {
            return Err(CliError::Config(format!(
                "cannot sweep n over generator {other:?}"
            )))
        }
    })
}

fn instance_graph(cfg: &ExperimentConfig, base: &Path, inst: &Instance) -> CliResult<Option<Arc<UndirectedGraph>>> {
    let g = match &cfg.graph {
        None => return Ok(None),
        Some(GraphSource::File(path)) => read_graph(&base.join(path))?,
        Some(GraphSource::Generator(spec)) => {
            let spec = match inst.n {
                Some(n) => resize(spec, n, cfg.sweep.as_ref().and_then(|s| s.avg_degree))?,
                None => spec.clone(),
            };
            generate(&spec, inst.seed)?
        }
    };
    Ok(Some(Arc::new(g)))
}

fn sources_for(p: &Params, n: usize, seed: u64) -> CliResult<Vec<usize>> {
    match (&p.sources, p.source_count) {
        (Some(s), None) => Ok(s.clone()),
        (None, Some(k)) => {
            if k == 0 || k > n {
                return Err(CliError::Config(format!("source_count {k} out of range for n = {n}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = sample(&mut rng, n, k).into_vec();
            s.sort_unstable();
            Ok(s)
        }
        (None, None) => Ok(vec![0]),
        (Some(_), Some(_)) => Err(CliError::Config(
            "give at most one of sources and source_count".into(),
        )),
    }
}

fn check_mode(p: &Params, seed: u64) -> CheckMode {
    match p.mode.unwrap_or(ModeSpec::Auto) {
        ModeSpec::Auto => CheckMode::Auto,
        ModeSpec::Exhaustive => CheckMode::Exhaustive,
        ModeSpec::Sampled => CheckMode::Sampled {
            samples: p.samples.unwrap_or(rpts_core::verify::DEFAULT_SAMPLES),
            seed,
        },
    }
}

fn need_graph(g: Option<Arc<UndirectedGraph>>) -> CliResult<Arc<UndirectedGraph>> {
    g.ok_or_else(|| CliError::Config("this command needs a [graph] section".into()))
}

fn run_instance(cfg: &ExperimentConfig, base: &Path, inst: &Instance) -> CliResult<Outcome> {
    let g = instance_graph(cfg, base, inst)?;
    let p = &cfg.params;
    let seed = inst.seed;
    let verify = cfg.verify;
    let sources = |g: &UndirectedGraph| sources_for(p, g.n(), seed);
    Ok(match cfg.command {
        ExperimentCommand::Srp => {
            let g = need_graph(g)?;
            let s = sources(&g)?;
            srp_pipeline(g, &s, seed, verify)?.1
        }
        ExperimentCommand::Preserver => {
            let g = need_graph(g)?;
            let s = sources(&g)?;
            let kind = p.kind.unwrap_or(PreserverKind::Sxs);
            preserver_pipeline(g, kind, p.f.unwrap_or(1), &s, seed, verify)?.1
        }
        ExperimentCommand::Spanner => {
            spanner_pipeline(need_graph(g)?, p.f.unwrap_or(1), p.sigma, seed, verify)?.1
        }
        ExperimentCommand::Labels => labels_pipeline(need_graph(g)?, p.f.unwrap_or(1), seed, verify)?.1,
        ExperimentCommand::Lb => {
            let lp = LbParams {
                f: p.f.unwrap_or(1),
                d: p.d.ok_or_else(|| CliError::Config("lb needs params.d".into()))?,
                sigma: p.sigma,
                x_count: p.x_count,
                target_n: p.target_n,
            };
            lb_pipeline(&lp, verify)?.1
        }
        ExperimentCommand::CongestSpt => {
            let g = need_graph(g)?;
            let s = sources(&g)?;
            congest_spt_pipeline(g, &s, seed, verify)?.1
        }
        ExperimentCommand::CongestSxs => {
            let g = need_graph(g)?;
            let s = sources(&g)?;
            congest_sxs_pipeline(g, &s, seed, verify)?.2
        }
        ExperimentCommand::Verify => {
            let mode = check_mode(p, seed);
            verify_pipeline(g, &p.properties, p.f_max.unwrap_or(2), mode, seed)?.1
        }
    })
}

/// Runs every instance (in parallel), then writes the report and the table
/// in instance order, so reruns of the same config are byte-identical.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> CliResult<ExperimentSummary> {
    let sweep = cfg.sweep.clone().unwrap_or(Sweep {
        n: Vec::new(),
        seeds: 1,
        avg_degree: None,
    });
    let sizes: Vec<Option<usize>> = if sweep.n.is_empty() {
        vec![None]
    } else {
        sweep.n.iter().copied().map(Some).collect()
    };
    let instances: Vec<Instance> = sizes
        .iter()
        .flat_map(|&n| {
            (0..sweep.seeds).map(move |i| Instance {
                n,
                seed: cfg.seed.wrapping_add(i),
            })
        })
        .collect();
    let outcomes = instances
        .par_iter()
        .map(|inst| run_instance(cfg, base, inst))
        .collect::<CliResult<Vec<Outcome>>>()?;

    let dir = base.join(&cfg.output.dir);
    let report_path = dir.join("report.json");
    let table_path = dir.join("table.csv");
    let all_verified = outcomes.iter().all(|o| o.verified != Some(false));
    let records: Vec<Value> = instances
        .iter()
        .zip(&outcomes)
        .map(|(inst, o)| json!({ "seed": inst.seed, "n": inst.n, "result": o.report }))
        .collect();
    write_json(
        &report_path,
        &json!({
            "name": cfg.name,
            "command": cfg.command,
            "seed": cfg.seed,
            "verify": cfg.verify,
            "all_verified": all_verified,
            "instances": records,
        }),
    )?;
    write_file(&table_path, table(&outcomes)?)?;
    Ok(ExperimentSummary {
        instances: outcomes.len(),
        all_verified,
        report: report_path,
        table: table_path,
    })
}

fn table(outcomes: &[Outcome]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    if let Some(first) = outcomes.first() {
        w.write_record(first.row.iter().map(|(k, _)| *k)).map_err(csv_err)?;
    }
    for o in outcomes {
        w.write_record(o.row.iter().map(|(_, v)| v.as_str())).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv: {e}")))
}

pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    ExperimentConfig::from_toml(&text)
}
