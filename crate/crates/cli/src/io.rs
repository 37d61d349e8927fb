//! File helpers and the small list syntaxes used on the command line.

use std::fs;
use std::path::Path;

use rpts_core::{load_graph, Edge, FaultSet, UndirectedGraph};

use crate::error::{io_err, CliError, CliResult};

pub fn read_graph(path: &Path) -> CliResult<UndirectedGraph> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(load_graph(&text)?)
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_file(path, text)
}

/// `"0,5,9"`; whitespace around items is ignored.
pub fn parse_sources(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("bad vertex {s:?} in source list")))
        })
        .collect()
}

/// `"u-v,u-v"`, checked against `g` when given.
pub fn parse_faults(text: &str, g: Option<&UndirectedGraph>) -> CliResult<FaultSet> {
    let mut edges = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let e: Edge = item
            .parse()
            .map_err(|_| CliError::Usage(format!("bad edge {item:?}; expected u-v")))?;
        edges.push(e);
    }
    Ok(match g {
        Some(g) => FaultSet::new(g, edges)?,
        None => FaultSet::from_edges(edges),
    })
}

pub fn check_sources(g: &UndirectedGraph, sources: &[usize]) -> CliResult<()> {
    if sources.is_empty() {
        return Err(CliError::Usage("at least one source is required".into()));
    }
    for &s in sources {
        g.check_vertex(s)?;
    }
    Ok(())
}
