//! Named feature storage for vertices and edges, instrumented with a
//! data-read counter.
//!
//! The counter exists to make the lazy-plan contract observable: building a
//! plan must not read feature data, so tests assert the counter is still
//! zero after construction and only moves during execution. Metadata lookups
//! (shape, existence) are not data reads and do not count.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use core::sync::atomic::{AtomicU64, Ordering};

use crate::matrix::Matrix;

/// Whether a feature is per-vertex or per-edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scope {
    Vertex,
    Edge,
}

impl Scope {
    pub fn name(self) -> &'static str {
        match self {
            Scope::Vertex => "vertex",
            Scope::Edge => "edge",
        }
    }
}

impl core::fmt::Display for Scope {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Error from feature store operations.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("{} feature \"{name}\" not found", scope.name())]
    NotFound { scope: Scope, name: String },
    #[error("{} feature \"{name}\" already attached", scope.name())]
    Duplicate { scope: Scope, name: String },
    #[error("{} feature \"{name}\" has {got} rows, scope cardinality is {expected}", scope.name())]
    RowMismatch {
        scope: Scope,
        name: String,
        expected: usize,
        got: usize,
    },
}

/// Feature matrices keyed by name, split by scope.
#[derive(Debug, Default)]
pub struct FeatureStore {
    num_vertices: usize,
    num_edges: usize,
    vertex: BTreeMap<String, Matrix>,
    edge: BTreeMap<String, Matrix>,
    data_reads: AtomicU64,
}

impl Clone for FeatureStore {
    fn clone(&self) -> Self {
        FeatureStore {
            num_vertices: self.num_vertices,
            num_edges: self.num_edges,
            vertex: self.vertex.clone(),
            edge: self.edge.clone(),
            data_reads: AtomicU64::new(0),
        }
    }
}

impl FeatureStore {
    /// Store for a graph with `num_vertices` vertices and `num_edges` edges.
    pub fn new(num_vertices: usize, num_edges: usize) -> Self {
        FeatureStore {
            num_vertices,
            num_edges,
            ..Default::default()
        }
    }

    pub fn for_graph(g: &crate::graph::Graph) -> Self {
        FeatureStore::new(g.num_vertices(), g.num_edges())
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    fn cardinality(&self, scope: Scope) -> usize {
        match scope {
            Scope::Vertex => self.num_vertices,
            Scope::Edge => self.num_edges,
        }
    }

    fn map(&self, scope: Scope) -> &BTreeMap<String, Matrix> {
        match scope {
            Scope::Vertex => &self.vertex,
            Scope::Edge => &self.edge,
        }
    }

    /// Attach a feature. The row count must match the scope cardinality and
    /// the name must be new within the scope.
    pub fn attach(&mut self, scope: Scope, name: &str, values: Matrix) -> Result<(), StoreError> {
        let expected = self.cardinality(scope);
        if values.rows() != expected {
            return Err(StoreError::RowMismatch {
                scope,
                name: name.to_string(),
                expected,
                got: values.rows(),
            });
        }
        let map = match scope {
            Scope::Vertex => &mut self.vertex,
            Scope::Edge => &mut self.edge,
        };
        if map.contains_key(name) {
            return Err(StoreError::Duplicate {
                scope,
                name: name.to_string(),
            });
        }
        map.insert(name.to_string(), values);
        Ok(())
    }

    /// Read a feature's data. Counts as a data read.
    pub fn get(&self, scope: Scope, name: &str) -> Result<&Matrix, StoreError> {
        match self.map(scope).get(name) {
            Some(m) => {
                self.data_reads.fetch_add(1, Ordering::Relaxed);
                Ok(m)
            }
            None => Err(StoreError::NotFound {
                scope,
                name: name.to_string(),
            }),
        }
    }

    /// Shape metadata without touching the data (not counted as a read).
    pub fn shape_of(&self, scope: Scope, name: &str) -> Option<(usize, usize)> {
        self.map(scope).get(name).map(|m| m.shape())
    }

    pub fn contains(&self, scope: Scope, name: &str) -> bool {
        self.map(scope).contains_key(name)
    }

    /// Feature names in a scope, sorted.
    pub fn names(&self, scope: Scope) -> impl Iterator<Item = &str> {
        self.map(scope).keys().map(|s| s.as_str())
    }

    /// Number of data reads since construction (or since the last reset).
    pub fn data_reads(&self) -> u64 {
        self.data_reads.load(Ordering::Relaxed)
    }

    pub fn reset_data_reads(&self) {
        self.data_reads.store(0, Ordering::Relaxed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let mut store = FeatureStore::new(3, 0);
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        store.attach(Scope::Vertex, "input", m.clone()).unwrap();
        assert_eq!(store.get(Scope::Vertex, "input").unwrap(), &m);
    }

    #[test]
    fn row_mismatch_is_rejected() {
        let mut store = FeatureStore::new(3, 2);
        let err = store
            .attach(Scope::Edge, "w", Matrix::zeros(3, 1))
            .unwrap_err();
        assert_eq!(
            err,
            StoreError::RowMismatch {
                scope: Scope::Edge,
                name: "w".into(),
                expected: 2,
                got: 3
            }
        );
    }

    #[test]
    fn missing_feature_names_scope_and_name() {
        let store = FeatureStore::new(1, 0);
        let err = store.get(Scope::Vertex, "xyz").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("vertex") && msg.contains("xyz"), "{msg}");
    }

    #[test]
    fn duplicate_attach_is_rejected() {
        let mut store = FeatureStore::new(1, 0);
        store
            .attach(Scope::Vertex, "x", Matrix::zeros(1, 1))
            .unwrap();
        let err = store
            .attach(Scope::Vertex, "x", Matrix::zeros(1, 1))
            .unwrap_err();
        assert!(matches!(err, StoreError::Duplicate { .. }));
    }

    #[test]
    fn reads_are_counted_but_metadata_is_not() {
        let mut store = FeatureStore::new(1, 0);
        store
            .attach(Scope::Vertex, "x", Matrix::zeros(1, 4))
            .unwrap();
        assert_eq!(store.data_reads(), 0);
        assert_eq!(store.shape_of(Scope::Vertex, "x"), Some((1, 4)));
        assert!(store.contains(Scope::Vertex, "x"));
        assert_eq!(store.data_reads(), 0);
        store.get(Scope::Vertex, "x").unwrap();
        store.get(Scope::Vertex, "x").unwrap();
        assert_eq!(store.data_reads(), 2);
    }
}
