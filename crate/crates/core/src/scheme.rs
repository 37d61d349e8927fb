//! A common interface over tiebreaking schemes so the property checkers and
//! the overlay constructions work for the perturbed scheme, hand-built
//! tables and the weighted lower-bound scheme alike.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{bfs_distances, path_edges, Distance, Edge, FaultSet, UndirectedGraph};
use crate::sssp::ShortestPathTree;
use crate::tiebreak::Rpts;

/// Read access to a rooted tree of selected paths.
pub trait ParentTree: Send + Sync {
    fn root(&self) -> usize;
    fn parent_of(&self, v: usize) -> Option<usize>;
    fn hops_to(&self, v: usize) -> Distance;
}

impl<W: Copy + Send + Sync> ParentTree for ShortestPathTree<W> {
    fn root(&self) -> usize {
        self.source()
    }

    fn parent_of(&self, v: usize) -> Option<usize> {
        self.parent(v)
    }

    fn hops_to(&self, v: usize) -> Distance {
        self.hops(v)
    }
}

/// All paths a scheme selects out of one source under one fault set.
#[derive(Clone)]
pub enum SourcePaths {
    Tree(Arc<dyn ParentTree>),
    Table {
        source: usize,
        paths: Arc<Vec<Option<Vec<usize>>>>,
    },
}

impl SourcePaths {
    pub fn source(&self) -> usize {
        match self {
            SourcePaths::Tree(t) => t.root(),
            SourcePaths::Table { source, .. } => *source,
        }
    }

    pub fn path_to(&self, t: usize) -> Option<Vec<usize>> {
        match self {
            SourcePaths::Tree(tree) => {
                let len = tree.hops_to(t).finite()? as usize;
                let mut path = vec![0; len + 1];
                let mut cur = t;
                for slot in path.iter_mut().rev() {
                    *slot = cur;
                    if let Some(p) = tree.parent_of(cur) {
                        cur = p;
                    }
                }
                Some(path)
            }
            SourcePaths::Table { paths, .. } => paths[t].clone(),
        }
    }

    pub fn hops_to(&self, t: usize) -> Distance {
        match self {
            SourcePaths::Tree(tree) => tree.hops_to(t),
            SourcePaths::Table { paths, .. } => match &paths[t] {
                Some(p) => Distance::Finite(p.len() as u32 - 1),
                None => Distance::Unreachable,
            },
        }
    }

    /// Union of the edges of every selected path.
    pub fn edges(&self, n: usize) -> Vec<Edge> {
        match self {
            SourcePaths::Tree(tree) => (0..n)
                .filter_map(|v| tree.parent_of(v).map(|p| Edge::new(p, v)))
                .collect(),
            SourcePaths::Table { paths, .. } => {
                let set: BTreeSet<Edge> = paths
                    .iter()
                    .flatten()
                    .flat_map(|p| path_edges(p).collect::<Vec<_>>())
                    .collect();
                set.into_iter().collect()
            }
        }
    }
}

/// A replacement-path tiebreaking scheme `pi(s, t | F)`.
pub trait TiebreakingScheme: Sync {
    fn graph(&self) -> &UndirectedGraph;

    /// Selected paths from `source` in `G \ F`. Fails with
    /// [`Error::TieDetected`] when the scheme cannot pick a unique path.
    fn paths_from(&self, source: usize, faults: &FaultSet) -> Result<SourcePaths>;

    fn path(&self, s: usize, t: usize, faults: &FaultSet) -> Result<Option<Vec<usize>>> {
        Ok(self.paths_from(s, faults)?.path_to(t))
    }
}

impl TiebreakingScheme for Rpts {
    fn graph(&self) -> &UndirectedGraph {
        Rpts::graph(self)
    }

    fn paths_from(&self, source: usize, faults: &FaultSet) -> Result<SourcePaths> {
        Ok(SourcePaths::Tree(self.spt(source, faults)?))
    }
}

/// The lexicographically smallest shortest `s -> t` path in `G \ F`.
pub fn lexicographic_path(
    g: &UndirectedGraph,
    s: usize,
    t: usize,
    faults: &FaultSet,
) -> Option<Vec<usize>> {
    let to_t = bfs_distances(g, t, faults);
    let mut d = to_t[s].finite()?;
    let mut path = vec![s];
    let mut cur = s;
    while d > 0 {
        cur = *g
            .neighbors(cur)
            .iter()
            .find(|&&w| !faults.contains(cur, w) && to_t[w] == Distance::Finite(d - 1))
            .expect("a BFS predecessor exists");
        path.push(cur);
        d -= 1;
    }
    Some(path)
}

/// A scheme given by an explicit table of fault-free paths.
///
/// Under a nonempty fault set the table path is kept when it survives and
/// the lexicographically smallest replacement path is used otherwise.
#[derive(Clone, Debug)]
pub struct ExplicitScheme {
    graph: Arc<UndirectedGraph>,
    table: HashMap<(usize, usize), Vec<usize>>,
}

impl ExplicitScheme {
    /// Starts from lexicographically smallest shortest paths for every pair.
    pub fn lexicographic(graph: Arc<UndirectedGraph>) -> Self {
        let mut table = HashMap::new();
        let empty = FaultSet::empty();
        for s in 0..graph.n() {
            for t in 0..graph.n() {
                if let Some(p) = lexicographic_path(&graph, s, t, &empty) {
                    table.insert((s, t), p);
                }
            }
        }
        ExplicitScheme { graph, table }
    }

    /// Overrides `pi(s, t)`; the path must be a shortest `s -> t` path.
    pub fn set_path(&mut self, path: Vec<usize>) -> Result<()> {
        let (s, t) = (path[0], *path.last().expect("nonempty"));
        let d = bfs_distances(&self.graph, s, &FaultSet::empty())[t];
        if !self.graph.is_simple_path(&path) || d != Distance::Finite(path.len() as u32 - 1) {
            return Err(Error::PathNotShortest {
                hops: path.len() - 1,
                distance: d.to_string(),
            });
        }
        self.table.insert((s, t), path);
        Ok(())
    }

    /// Sets `pi(s, t) = path` and `pi(t, s) = reverse(path)`.
    pub fn set_symmetric(&mut self, path: Vec<usize>) -> Result<()> {
        let mut rev = path.clone();
        rev.reverse();
        self.set_path(path)?;
        self.set_path(rev)
    }

    pub fn table_path(&self, s: usize, t: usize) -> Option<&[usize]> {
        self.table.get(&(s, t)).map(Vec::as_slice)
    }
}

impl TiebreakingScheme for ExplicitScheme {
    fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    fn paths_from(&self, source: usize, faults: &FaultSet) -> Result<SourcePaths> {
        self.graph.check_vertex(source)?;
        let paths = (0..self.graph.n())
            .map(|t| match self.table.get(&(source, t)) {
                Some(p) if faults.avoided_by(p) => Some(p.clone()),
                _ if faults.is_empty() => None,
                _ => lexicographic_path(&self.graph, source, t, faults),
            })
            .collect();
        Ok(SourcePaths::Table {
            source,
            paths: Arc::new(paths),
        })
    }
}

/// True if `pi(s, t | F)` is the reverse of `pi(t, s | F)` for every pair.
pub fn is_symmetric<S: TiebreakingScheme + ?Sized>(scheme: &S, faults: &FaultSet) -> Result<bool> {
    let n = scheme.graph().n();
    let all: Vec<SourcePaths> = (0..n)
        .map(|s| scheme.paths_from(s, faults))
        .collect::<Result<_>>()?;
    for s in 0..n {
        for t in 0..n {
            let forward = all[s].path_to(t);
            let backward = all[t].path_to(s).map(|mut p| {
                p.reverse();
                p
            });
            if forward != backward {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
