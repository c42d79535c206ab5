//! Graph ingestion and CSR+CSC storage with stable edge ids.
//!
//! Edges are directed `src -> dst` and keep the id assigned at load time
//! (their 0-based position among non-comment lines). The CSC side stores,
//! per destination, the in-edges sorted by ascending edge id — that order is
//! the deterministic aggregation order everything downstream relies on.

use alloc::string::String;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

/// Error from parsing an edge-list text stream.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: expected \"src<TAB>dst\", got {content:?}")]
    BadLine { line: usize, content: String },
    #[error("line {line}: vertex id overflows the platform word")]
    IdOverflow { line: usize },
}

/// Error from graph construction.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("edge {edge} endpoint {vertex} out of range for {num_vertices} vertices")]
    EndpointOutOfRange {
        edge: usize,
        vertex: usize,
        num_vertices: usize,
    },
}

/// Parse `src<TAB>dst` lines into an edge list.
///
/// Lines starting with `#` and blank lines are skipped; edge ids are the
/// 0-based position among the parsed edges. Vertex ids must be nonnegative
/// integers that fit a usize.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>, ParseError> {
    let mut edges = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split('\t');
        let (src, dst) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(ParseError::BadLine {
                    line,
                    content: trimmed.to_string(),
                })
            }
        };
        let parse = |field: &str| -> Result<usize, ParseError> {
            if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseError::BadLine {
                    line,
                    content: trimmed.to_string(),
                });
            }
            field
                .parse::<usize>()
                .map_err(|_| ParseError::IdOverflow { line })
        };
        edges.push((parse(src)?, parse(dst)?));
    }
    Ok(edges)
}

/// Directed graph in CSR (out-edges) and CSC (in-edges) form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    num_edges: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<usize>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
    /// Original edge id of each CSC slot.
    in_edge_id: Vec<usize>,
}

impl Graph {
    /// Build from an edge list. Duplicate edges are kept as parallel edges;
    /// dropping them would silently change aggregation results.
    pub fn build(edges: &[(usize, usize)], num_vertices: usize) -> Result<Graph, GraphError> {
        for (edge, &(src, dst)) in edges.iter().enumerate() {
            let bad = if src >= num_vertices {
                Some(src)
            } else if dst >= num_vertices {
                Some(dst)
            } else {
                None
            };
            if let Some(vertex) = bad {
                return Err(GraphError::EndpointOutOfRange {
                    edge,
                    vertex,
                    num_vertices,
                });
            }
        }
        let num_edges = edges.len();

        let mut out_offsets = vec![0usize; num_vertices + 1];
        let mut in_offsets = vec![0usize; num_vertices + 1];
        for &(src, dst) in edges {
            out_offsets[src + 1] += 1;
            in_offsets[dst + 1] += 1;
        }
        for i in 1..=num_vertices {
            out_offsets[i] += out_offsets[i - 1];
            in_offsets[i] += in_offsets[i - 1];
        }

        let mut out_targets = vec![0usize; num_edges];
        let mut in_sources = vec![0usize; num_edges];
        let mut in_edge_id = vec![0usize; num_edges];
        let mut out_fill = out_offsets.clone();
        let mut in_fill = in_offsets.clone();
        // Filling in edge-id order makes each CSC destination's slots sorted
        // by ascending edge id.
        for (id, &(src, dst)) in edges.iter().enumerate() {
            out_targets[out_fill[src]] = dst;
            out_fill[src] += 1;
            in_sources[in_fill[dst]] = src;
            in_edge_id[in_fill[dst]] = id;
            in_fill[dst] += 1;
        }

        Ok(Graph {
            num_vertices,
            num_edges,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            in_edge_id,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn out_offsets(&self) -> &[usize] {
        &self.out_offsets
    }

    pub fn out_targets(&self) -> &[usize] {
        &self.out_targets
    }

    pub fn in_offsets(&self) -> &[usize] {
        &self.in_offsets
    }

    pub fn in_sources(&self) -> &[usize] {
        &self.in_sources
    }

    pub fn in_edge_ids(&self) -> &[usize] {
        &self.in_edge_id
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    /// In-edges of `v` as `(source, edge id)` pairs, ascending by edge id.
    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let lo = self.in_offsets[v];
        let hi = self.in_offsets[v + 1];
        (lo..hi).map(move |slot| (self.in_sources[slot], self.in_edge_id[slot]))
    }

    /// Reconstruct the edge list in ascending edge-id order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = vec![(0usize, 0usize); self.num_edges];
        for v in 0..self.num_vertices {
            for (src, id) in self.in_edges(v) {
                edges[id] = (src, v);
            }
        }
        edges
    }

    /// True if some edge `v -> v` exists.
    pub fn has_self_loop(&self, v: usize) -> bool {
        self.in_edges(v).any(|(src, _)| src == v)
    }
}

/// Append one self-loop per vertex that lacks one. New edges get fresh ids
/// after all original ids, in ascending vertex order; the operation is
/// idempotent on the edge multiset.
pub fn add_self_loops(g: &Graph) -> Graph {
    let mut edges = g.edge_list();
    for v in 0..g.num_vertices() {
        if !g.has_self_loop(v) {
            edges.push((v, v));
        }
    }
    Graph::build(&edges, g.num_vertices()).expect("endpoints unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple_edges() {
        let edges = parse_edge_list("0\t1\n1\t2\n").unwrap();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn parse_skips_comments_and_accepts_self_loops() {
        let edges = parse_edge_list("# comment\n0\t0\n").unwrap();
        assert_eq!(edges, vec![(0, 0)]);
    }

    #[test]
    fn parse_rejects_comma_lines_with_line_number() {
        let err = parse_edge_list("0,1\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::BadLine {
                line: 1,
                content: "0,1".into()
            }
        );
    }

    #[test]
    fn parse_reports_overflow() {
        let big = "99999999999999999999999999";
        let err = parse_edge_list(&alloc::format!("0\t{big}\n")).unwrap_err();
        assert_eq!(err, ParseError::IdOverflow { line: 1 });
    }

    #[test]
    fn triangle_degrees() {
        let g = Graph::build(&[(0, 1), (1, 2), (2, 0)], 3).unwrap();
        for v in 0..3 {
            assert_eq!(g.out_degree(v), 1);
            assert_eq!(g.in_degree(v), 1);
        }
        assert_eq!(g.edge_list(), vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn empty_graph() {
        let g = Graph::build(&[], 3).unwrap();
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.out_offsets(), &[0, 0, 0, 0]);
        assert_eq!(g.in_offsets(), &[0, 0, 0, 0]);
    }

    #[test]
    fn endpoint_out_of_range() {
        let err = Graph::build(&[(0, 5)], 3).unwrap_err();
        assert_eq!(
            err,
            GraphError::EndpointOutOfRange {
                edge: 0,
                vertex: 5,
                num_vertices: 3
            }
        );
    }

    #[test]
    fn csc_matches_brute_force_adjacency() {
        let mut rng = crate::rng::Lcg64::new(99);
        let n = 50;
        let edges: Vec<(usize, usize)> =
            (0..200).map(|_| (rng.below(n), rng.below(n))).collect();
        let g = Graph::build(&edges, n).unwrap();

        for v in 0..n {
            // Brute-force scan of the raw list.
            let expected: Vec<(usize, usize)> = edges
                .iter()
                .enumerate()
                .filter(|(_, &(_, dst))| dst == v)
                .map(|(id, &(src, _))| (src, id))
                .collect();
            let got: Vec<(usize, usize)> = g.in_edges(v).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn csc_edge_ids_ascending_per_destination() {
        let mut rng = crate::rng::Lcg64::new(7);
        let n = 30;
        let edges: Vec<(usize, usize)> =
            (0..150).map(|_| (rng.below(n), rng.below(n))).collect();
        let g = Graph::build(&edges, n).unwrap();
        for v in 0..n {
            let ids: Vec<usize> = g.in_edges(v).map(|(_, id)| id).collect();
            assert!(ids.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn self_loops_added_once() {
        let triangle = Graph::build(&[(0, 1), (1, 2), (2, 0)], 3).unwrap();
        let looped = add_self_loops(&triangle);
        assert_eq!(looped.num_edges(), 6);

        let partial = Graph::build(&[(0, 0), (1, 0)], 2).unwrap();
        let filled = add_self_loops(&partial);
        assert_eq!(filled.num_edges(), 3); // only vertex 1 gained a loop

        let mut once = add_self_loops(&triangle).edge_list();
        let mut twice = add_self_loops(&add_self_loops(&triangle)).edge_list();
        once.sort_unstable();
        twice.sort_unstable();
        assert_eq!(once, twice);
    }
}
