//! Fault-tolerant distance labels: each vertex stores its single-source
//! overlay preserver, and two labels answer a distance query under faults.

use integer_encoding::VarInt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ftnet::{build_sxv_preserver, OverlayConfig};
use crate::graph::{bfs_distances, Distance, Edge, FaultSet, UndirectedGraph};
use crate::scheme::TiebreakingScheme;

const MAGIC: &[u8; 4] = b"RPL1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceLabel {
    pub owner: usize,
    pub n: usize,
    /// Faults tolerated by the stored overlay; queries accept one more.
    pub f: usize,
    /// Sorted.
    pub edges: Vec<Edge>,
}

fn ceil_log2(n: usize) -> u32 {
    n.max(2).next_power_of_two().trailing_zeros()
}

impl DistanceLabel {
    /// `|edges| * 2 * ceil(log2 n)`.
    pub fn nominal_bits(&self) -> u64 {
        self.edges.len() as u64 * 2 * ceil_log2(self.n) as u64
    }

    /// Size of the serialized form.
    pub fn size_bits(&self) -> u64 {
        self.encode().len() as u64 * 8
    }

    /// Header `RPL1, owner, n, f, |edges|` followed by the sorted edges with
    /// delta-coded endpoints, all as LEB128 varints.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        for x in [self.owner, self.n, self.f, self.edges.len()] {
            out.extend((x as u64).encode_var_vec());
        }
        let (mut pu, mut pv) = (0usize, 0usize);
        for e in &self.edges {
            let du = e.u - pu;
            let dv = if du == 0 { e.v - pv } else { e.v - e.u };
            out.extend((du as u64).encode_var_vec());
            out.extend((dv as u64).encode_var_vec());
            (pu, pv) = (e.u, e.v);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<DistanceLabel> {
        let corrupt = |why: &str| Error::InvalidParameter(format!("corrupt label: {why}"));
        let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| corrupt("bad magic"))?;
        let mut pos = 0;
        let mut next = || -> Result<usize> {
            let (x, len) = u64::decode_var(&rest[pos..]).ok_or_else(|| corrupt("truncated"))?;
            pos += len;
            usize::try_from(x).map_err(|_| corrupt("value overflow"))
        };
        let (owner, n, f, count) = (next()?, next()?, next()?, next()?);
        let mut edges = Vec::with_capacity(count.min(1 << 20));
        let (mut pu, mut pv) = (0usize, 0usize);
        for _ in 0..count {
            let (du, dv) = (next()?, next()?);
            let u = pu + du;
            let v = if du == 0 { pv + dv } else { u + dv };
            if v <= u || v >= n || (du == 0 && dv == 0 && !edges.is_empty()) {
                return Err(corrupt("edge out of order or range"));
            }
            edges.push(Edge { u, v });
            (pu, pv) = (u, v);
        }
        if owner >= n {
            return Err(corrupt("owner out of range"));
        }
        Ok(DistanceLabel { owner, n, f, edges })
    }
}

/// `label(s)` = edges of the `f`-fault `{s} x V` overlay preserver.
pub fn build_labels<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    f: usize,
    cfg: &OverlayConfig,
) -> Result<Vec<DistanceLabel>> {
    let n = scheme.graph().n();
    (0..n)
        .into_par_iter()
        .map(|s| {
            let p = build_sxv_preserver(scheme, &[s], f, cfg)?;
            Ok(DistanceLabel {
                owner: s,
                n,
                f,
                edges: p.edges().to_vec(),
            })
        })
        .collect()
}

/// `dist(s, t)` in `(label_s + label_t) \ F`; exact for `|F| <= f + 1`.
pub fn query(a: &DistanceLabel, b: &DistanceLabel, faults: &FaultSet) -> Result<Distance> {
    if a.n != b.n || a.f != b.f {
        return Err(Error::InvalidParameter(
            "labels come from different constructions".into(),
        ));
    }
    if faults.len() > a.f + 1 {
        return Err(Error::BudgetViolation {
            given: faults.len(),
            supported: a.f + 1,
        });
    }
    let union = UndirectedGraph::from_edge_set(a.n, a.edges.iter().chain(&b.edges).copied());
    Ok(bfs_distances(&union, a.owner, faults)[b.owner])
}
