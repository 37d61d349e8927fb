//! Simple undirected unweighted graphs, fault sets and BFS.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, ParseError, Result};

/// An undirected edge stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    /// Normalizes the endpoint order. Panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loop {a}-{a}");
        if a < b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    pub fn has_endpoint(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }

    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.u, self.v)
    }
}

impl FromStr for Edge {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, b) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| format!("expected `u-v`, got `{s}`"))?;
        let a: usize = a.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
        let b: usize = b.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
        if a == b {
            return Err(format!("`{s}` is a self-loop"));
        }
        Ok(Edge::new(a, b))
    }
}

/// Hop distance, with an explicit sentinel for disconnected pairs.
///
/// `Unreachable` compares greater than every finite distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(u32),
    Unreachable,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Unreachable => None,
        }
    }

    pub fn is_reachable(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    /// Adds a finite amount; unreachable stays unreachable.
    pub fn plus(self, k: u32) -> Distance {
        match self {
            Distance::Finite(d) => Distance::Finite(d + k),
            Distance::Unreachable => Distance::Unreachable,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Unreachable => write!(f, "unreachable"),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.finite().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<u32>::deserialize(deserializer)? {
            Some(d) => Distance::Finite(d),
            None => Distance::Unreachable,
        })
    }
}

/// A set of failed edges, kept sorted so it can serve as a cache key.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaultSet {
    edges: Vec<Edge>,
}

impl FaultSet {
    pub fn empty() -> Self {
        FaultSet { edges: Vec::new() }
    }

    /// Builds a fault set, checking that every member is an edge of `g`.
    pub fn new(g: &UndirectedGraph, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let edges = edges.into_iter().collect::<Vec<_>>();
        for e in &edges {
            if !g.has_edge(e.u, e.v) {
                return Err(Error::NotAnEdge(*e));
            }
        }
        Ok(Self::from_edges(edges))
    }

    /// Builds a fault set without validating membership in a graph.
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        FaultSet { edges }
    }

    pub fn single(e: Edge) -> Self {
        FaultSet { edges: vec![e] }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        let e = Edge::new(a, b);
        self.edges.iter().any(|x| *x == e)
    }

    #[inline]
    pub fn contains_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn with(&self, e: Edge) -> FaultSet {
        let mut edges = self.edges.clone();
        if let Err(pos) = edges.binary_search(&e) {
            edges.insert(pos, e);
        }
        FaultSet { edges }
    }

    pub fn union(&self, other: &FaultSet) -> FaultSet {
        FaultSet::from_edges(self.edges.iter().chain(other.edges.iter()).copied())
    }

    /// All proper subsets, largest first, then lexicographic.
    pub fn proper_subsets(&self) -> Vec<FaultSet> {
        let k = self.edges.len();
        let mut out: Vec<FaultSet> = (0u32..(1u32 << k) - 1)
            .map(|mask| {
                FaultSet::from_edges(
                    (0..k)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| self.edges[i]),
                )
            })
            .collect();
        out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        out
    }

    /// True if the path (as a vertex sequence) uses no edge of the set.
    pub fn avoided_by(&self, path: &[usize]) -> bool {
        self.edges.is_empty() || path.windows(2).all(|w| !self.contains(w[0], w[1]))
    }
}

impl fmt::Display for FaultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for FaultSet {
    type Err = String;

    /// Parses `"u-v,u-v"`; the empty string is the empty set.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(FaultSet::empty());
        }
        let edges = s
            .split(',')
            .map(str::parse)
            .collect::<std::result::Result<Vec<Edge>, _>>()?;
        Ok(FaultSet::from_edges(edges))
    }
}

/// A simple undirected unweighted graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl UndirectedGraph {
    pub fn empty(n: usize) -> Self {
        UndirectedGraph {
            n,
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    /// Builds a graph, rejecting self-loops, duplicates and out-of-range ids.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (line, (u, v)) in pairs.into_iter().enumerate() {
            let line = line + 1;
            for x in [u, v] {
                if x >= n {
                    return Err(ParseError::VertexOutOfRange { line, vertex: x, n }.into());
                }
            }
            if u == v {
                return Err(ParseError::SelfLoop { line, vertex: u }.into());
            }
            if !seen.insert(Edge::new(u, v)) {
                return Err(ParseError::DuplicateEdge { line, u, v }.into());
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(UndirectedGraph {
            n,
            adj,
            edges: seen.into_iter().collect(),
        })
    }

    /// Builds the subgraph of `0..n` spanned by an edge set (duplicates merged).
    pub fn from_edge_set(n: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        let set: BTreeSet<Edge> = edges.into_iter().collect();
        let mut adj = vec![Vec::new(); n];
        for e in &set {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        UndirectedGraph {
            n,
            adj,
            edges: set.into_iter().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edges in sorted order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Position of `e` in the sorted edge list.
    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    pub fn is_subgraph_of(&self, other: &UndirectedGraph) -> bool {
        self.n == other.n && self.edges.iter().all(|e| other.has_edge(e.u, e.v))
    }

    /// True if consecutive vertices are adjacent and no vertex repeats.
    pub fn is_simple_path(&self, path: &[usize]) -> bool {
        let mut seen = BTreeSet::new();
        path.iter().all(|&v| v < self.n && seen.insert(v))
            && path.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    /// Serializes into the edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m());
        for e in &self.edges {
            out.push_str(&format!("{} {}\n", e.u, e.v));
        }
        out
    }
}

impl FromStr for UndirectedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        load_graph(s)
    }
}

/// Parses the edge-list format: a header `n m` followed by `m` lines `u v`.
/// Lines starting with `#` and blank lines are ignored.
pub fn load_graph(text: &str) -> Result<UndirectedGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut pairs = Vec::new();
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(ParseError::Malformed {
                line: line_no,
                reason: format!("expected two integers, got `{line}`"),
            }
            .into());
        }
        let parse = |tok: &str| {
            tok.parse::<usize>().map_err(|_| ParseError::Malformed {
                line: line_no,
                reason: format!("`{tok}` is not a nonnegative integer"),
            })
        };
        let a = parse(fields[0])?;
        let b = parse(fields[1])?;
        if header.is_none() {
            header = Some((a, b));
        } else {
            pairs.push((a, b));
            lines.push(line_no);
        }
    }
    let (n, m) = header.ok_or(ParseError::Malformed {
        line: 0,
        reason: "missing `n m` header".into(),
    })?;
    if pairs.len() != m {
        return Err(ParseError::EdgeCountMismatch {
            declared: m,
            found: pairs.len(),
        }
        .into());
    }
    // Re-map positional line numbers in errors to real file lines.
    UndirectedGraph::from_edges(n, pairs).map_err(|e| match e {
        Error::Parse(p) => Error::Parse(relabel_line(p, &lines)),
        other => other,
    })
}

fn relabel_line(err: ParseError, lines: &[usize]) -> ParseError {
    let fix = |l: usize| lines.get(l.wrapping_sub(1)).copied().unwrap_or(l);
    match err {
        ParseError::VertexOutOfRange { line, vertex, n } => ParseError::VertexOutOfRange {
            line: fix(line),
            vertex,
            n,
        },
        ParseError::DuplicateEdge { line, u, v } => ParseError::DuplicateEdge {
            line: fix(line),
            u,
            v,
        },
        ParseError::SelfLoop { line, vertex } => ParseError::SelfLoop {
            line: fix(line),
            vertex,
        },
        other => other,
    }
}

/// Unweighted distances from `s` in `G \ F`.
pub fn bfs_distances(g: &UndirectedGraph, s: usize, faults: &FaultSet) -> Vec<Distance> {
    bfs_tree(g, s, faults).0
}

/// BFS from `s` in `G \ F`, returning distances and the lowest-id BFS parent.
pub fn bfs_tree(
    g: &UndirectedGraph,
    s: usize,
    faults: &FaultSet,
) -> (Vec<Distance>, Vec<Option<usize>>) {
    let mut dist = vec![Distance::Unreachable; g.n()];
    let mut parent = vec![None; g.n()];
    let mut queue = VecDeque::new();
    dist[s] = Distance::Finite(0);
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].finite().expect("queued vertices are reached");
        for &v in g.neighbors(u) {
            if dist[v].is_reachable() || faults.contains(u, v) {
                continue;
            }
            dist[v] = Distance::Finite(du + 1);
            parent[v] = Some(u);
            queue.push_back(v);
        }
    }
    (dist, parent)
}

/// Hop distance between two vertices in `G \ F`.
pub fn distance(g: &UndirectedGraph, s: usize, t: usize, faults: &FaultSet) -> Distance {
    bfs_distances(g, s, faults)[t]
}

/// Largest finite eccentricity over all vertices.
pub fn diameter(g: &UndirectedGraph) -> u32 {
    (0..g.n())
        .flat_map(|s| bfs_distances(g, s, &FaultSet::empty()))
        .filter_map(Distance::finite)
        .max()
        .unwrap_or(0)
}

/// Every fault set of size `min_size..=max_size` over `edges`, in
/// lexicographic order of the sorted edge lists.
pub fn fault_sets(edges: &[Edge], min_size: usize, max_size: usize) -> Vec<FaultSet> {
    fn rec(
        edges: &[Edge],
        start: usize,
        current: &mut Vec<Edge>,
        min_size: usize,
        max_size: usize,
        out: &mut Vec<FaultSet>,
    ) {
        if current.len() >= min_size {
            out.push(FaultSet::from_edges(current.iter().copied()));
        }
        if current.len() == max_size {
            return;
        }
        for i in start..edges.len() {
            current.push(edges[i]);
            rec(edges, i + 1, current, min_size, max_size, out);
            current.pop();
        }
    }
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    rec(&sorted, 0, &mut Vec::new(), min_size, max_size, &mut out);
    out
}

/// Number of fault sets `fault_sets` would produce, saturating.
pub fn count_fault_sets(m: usize, min_size: usize, max_size: usize) -> u128 {
    let mut total: u128 = 0;
    for k in min_size..=max_size.min(m) {
        let mut c: u128 = 1;
        for i in 0..k {
            c = c * (m - i) as u128 / (i + 1) as u128;
        }
        total = total.saturating_add(c);
    }
    total
}

/// Edges of a vertex sequence.
pub fn path_edges(path: &[usize]) -> impl Iterator<Item = Edge> + '_ {
    path.windows(2).map(|w| Edge::new(w[0], w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> UndirectedGraph {
        load_graph("4 4\n0 1\n1 2\n2 3\n3 0").unwrap()
    }

    fn path4() -> UndirectedGraph {
        UndirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn loads_c4() {
        let g = c4();
        assert_eq!(g.n(), 4);
        assert_eq!(g.m(), 4);
        assert_eq!(g.neighbors(0), &[1, 3]);
        assert_eq!(g.neighbors(2), &[1, 3]);
        for e in g.edges() {
            assert!(g.neighbors(e.u).contains(&e.v));
            assert!(g.neighbors(e.v).contains(&e.u));
        }
    }

    #[test]
    fn rejects_self_loop() {
        let err = load_graph("2 1\n0 0").unwrap_err();
        assert_eq!(
            err,
            Error::Parse(ParseError::SelfLoop { line: 2, vertex: 0 })
        );
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = load_graph("3 2\n0 1\n0 1").unwrap_err();
        assert_eq!(
            err,
            Error::Parse(ParseError::DuplicateEdge { line: 3, u: 0, v: 1 })
        );
        // The reversed orientation is the same undirected edge.
        assert!(matches!(
            load_graph("3 2\n0 1\n1 0"),
            Err(Error::Parse(ParseError::DuplicateEdge { .. }))
        ));
    }

    #[test]
    fn rejects_out_of_range_and_garbage() {
        assert!(matches!(
            load_graph("3 1\n0 3"),
            Err(Error::Parse(ParseError::VertexOutOfRange { vertex: 3, .. }))
        ));
        assert!(matches!(
            load_graph("3 1\n0 x"),
            Err(Error::Parse(ParseError::Malformed { line: 2, .. }))
        ));
        assert!(matches!(
            load_graph("3 1\n0 1 2"),
            Err(Error::Parse(ParseError::Malformed { .. }))
        ));
        assert!(matches!(
            load_graph("3 2\n0 1"),
            Err(Error::Parse(ParseError::EdgeCountMismatch { declared: 2, found: 1 }))
        ));
        assert!(load_graph("").is_err());
    }

    #[test]
    fn comments_are_ignored() {
        let g = load_graph("# a triangle\n3 3\n0 1\n# mid\n1 2\n\n2 0\n").unwrap();
        assert_eq!(g.m(), 3);
        let err = load_graph("# c\n2 1\n\n1 1").unwrap_err();
        assert_eq!(err, Error::Parse(ParseError::SelfLoop { line: 4, vertex: 1 }));
    }

    #[test]
    fn bfs_on_c4() {
        let g = c4();
        let u = |d| Distance::Finite(d);
        assert_eq!(
            bfs_distances(&g, 0, &FaultSet::empty()),
            vec![u(0), u(1), u(2), u(1)]
        );
        // Brute force: with {0,1} gone the only route to 1 is 0-3-2-1.
        assert_eq!(
            bfs_distances(&g, 0, &FaultSet::single(Edge::new(0, 1))),
            vec![u(0), u(3), u(2), u(1)]
        );
    }

    #[test]
    fn bfs_bridge_disconnects() {
        let g = path4();
        let d = bfs_distances(&g, 0, &FaultSet::single(Edge::new(1, 2)));
        assert_eq!(
            d,
            vec![
                Distance::Finite(0),
                Distance::Finite(1),
                Distance::Unreachable,
                Distance::Unreachable
            ]
        );
    }

    #[test]
    fn unreachable_sorts_last() {
        assert!(Distance::Unreachable > Distance::Finite(u32::MAX));
        assert!(Distance::Finite(2) < Distance::Finite(3));
    }

    #[test]
    fn fault_set_enumeration_is_lexicographic() {
        let g = c4();
        let sets = fault_sets(g.edges(), 1, 2);
        assert_eq!(sets.len() as u128, count_fault_sets(4, 1, 2));
        assert_eq!(sets.len(), 4 + 6);
        assert_eq!(sets[0].edges(), &[Edge::new(0, 1)]);
        assert_eq!(sets[1].edges(), &[Edge::new(0, 1), Edge::new(0, 3)]);
        let with_empty = fault_sets(g.edges(), 0, 1);
        assert!(with_empty[0].is_empty());
        assert_eq!(with_empty.len(), 5);
    }

    #[test]
    fn fault_set_parsing_and_subsets() {
        let f: FaultSet = "2-1, 0-3".parse().unwrap();
        assert_eq!(f.edges(), &[Edge::new(0, 3), Edge::new(1, 2)]);
        assert_eq!(f.to_string(), "{0-3,1-2}");
        let subs = f.proper_subsets();
        assert_eq!(subs.len(), 3);
        assert_eq!(subs[0].len(), 1);
        assert!(subs[2].is_empty());
        assert!("".parse::<FaultSet>().unwrap().is_empty());
        assert!("1-1".parse::<FaultSet>().is_err());
        assert!(FaultSet::new(&c4(), [Edge::new(0, 2)]).is_err());
    }

    #[test]
    fn round_trips_edge_list() {
        let g = c4();
        assert_eq!(load_graph(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn diameter_of_cycle() {
        assert_eq!(diameter(&c4()), 2);
        assert_eq!(diameter(&path4()), 3);
    }
}
