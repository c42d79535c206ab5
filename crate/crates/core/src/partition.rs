//! Contiguous vertex-range partitioning with boundary send lists.
//!
//! Partition `p` owns the vertex range `[lo_p, hi_p)` and every edge whose
//! destination falls in that range (the edges it must aggregate). For each
//! ordered pair `(p, q)` the send list holds the vertices owned by `p` that
//! source at least one of `q`'s local edges — the rows `p` has to ship to
//! `q` during a message-passing step, one row per boundary vertex rather
//! than one per edge.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Graph;

/// Error from partitioning.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PartError {
    #[error("cannot partition into zero parts")]
    ZeroParts,
}

/// CSC of one partition: row `i` describes local destination `lo + i`.
/// Sources and edge ids stay global.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalCsc {
    pub offsets: Vec<usize>,
    pub sources: Vec<usize>,
    pub edge_ids: Vec<usize>,
}

impl LocalCsc {
    pub fn num_edges(&self) -> usize {
        self.sources.len()
    }
}

/// A graph split into contiguous vertex ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionedGraph {
    num_vertices: usize,
    num_edges: usize,
    ranges: Vec<(usize, usize)>,
    locals: Vec<LocalCsc>,
    /// `send_lists[p][q]`: ascending vertex ids owned by `p` and needed by
    /// `q`. Diagonal entries are empty.
    send_lists: Vec<Vec<Vec<usize>>>,
}

/// Split `g` into `parts` contiguous vertex ranges whose sizes differ by at
/// most one: the first `n mod parts` ranges get the extra vertex. `parts`
/// may exceed the vertex count, leaving empty ranges.
pub fn partition_contiguous(g: &Graph, parts: usize) -> Result<PartitionedGraph, PartError> {
    if parts == 0 {
        return Err(PartError::ZeroParts);
    }
    let n = g.num_vertices();
    let base = n / parts;
    let extra = n % parts;
    let mut ranges = Vec::with_capacity(parts);
    let mut lo = 0usize;
    for p in 0..parts {
        let size = base + usize::from(p < extra);
        ranges.push((lo, lo + size));
        lo += size;
    }

    let owner = |v: usize| owner_of(v, n, parts);

    let mut locals = Vec::with_capacity(parts);
    let mut needed: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); parts]; parts];
    for (q, &(lo, hi)) in ranges.iter().enumerate() {
        let mut offsets = Vec::with_capacity(hi - lo + 1);
        let mut sources = Vec::new();
        let mut edge_ids = Vec::new();
        offsets.push(0);
        for v in lo..hi {
            for (src, id) in g.in_edges(v) {
                sources.push(src);
                edge_ids.push(id);
                let p = owner(src);
                if p != q {
                    needed[p][q].push(src);
                }
            }
            offsets.push(sources.len());
        }
        locals.push(LocalCsc {
            offsets,
            sources,
            edge_ids,
        });
    }
    for row in &mut needed {
        for list in row.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
    }

    Ok(PartitionedGraph {
        num_vertices: n,
        num_edges: g.num_edges(),
        ranges,
        locals,
        send_lists: needed,
    })
}

/// Owner of vertex `v` under the contiguous split of `n` vertices into
/// `parts` ranges.
pub fn owner_of(v: usize, n: usize, parts: usize) -> usize {
    let base = n / parts;
    let extra = n % parts;
    let boundary = extra * (base + 1);
    if v < boundary {
        v / (base + 1)
    } else {
        extra + (v - boundary) / base
    }
}

impl PartitionedGraph {
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_parts(&self) -> usize {
        self.ranges.len()
    }

    pub fn range(&self, p: usize) -> (usize, usize) {
        self.ranges[p]
    }

    pub fn part_size(&self, p: usize) -> usize {
        let (lo, hi) = self.ranges[p];
        hi - lo
    }

    pub fn owner(&self, v: usize) -> usize {
        owner_of(v, self.num_vertices, self.ranges.len())
    }

    pub fn local_csc(&self, p: usize) -> &LocalCsc {
        &self.locals[p]
    }

    pub fn send_list(&self, from: usize, to: usize) -> &[usize] {
        &self.send_lists[from][to]
    }

    /// Total boundary rows shipped per message-passing step:
    /// sum of |send_lists[p][q]| over all ordered pairs p != q.
    pub fn total_boundary_rows(&self) -> usize {
        let mut total = 0;
        for p in 0..self.num_parts() {
            for q in 0..self.num_parts() {
                if p != q {
                    total += self.send_lists[p][q].len();
                }
            }
        }
        total
    }
}
