//! Deterministic synthetic graph and feature generators.

use std::collections::HashSet;

use gasline_core::matrix::Matrix;
use gasline_core::rng::Lcg64;

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("erdos_renyi: {requested} edges exceed the {max} distinct pairs of {n} vertices")]
    TooManyEdges {
        requested: usize,
        max: usize,
        n: usize,
    },
    #[error("graph needs at least one vertex")]
    Empty,
}

/// G(n, m): exactly `m` distinct directed non-loop edges, uniform via
/// seeded rejection sampling.
pub fn erdos_renyi(n: usize, m: usize, seed: u64) -> Result<Vec<(usize, usize)>, GenError> {
    if n == 0 {
        return Err(GenError::Empty);
    }
    let max = n * (n - 1);
    if m > max {
        return Err(GenError::TooManyEdges {
            requested: m,
            max,
            n,
        });
    }
    let mut rng = Lcg64::new(seed);
    let mut seen = HashSet::with_capacity(m * 2);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.below(n);
        let v = rng.below(n);
        if u != v && seen.insert((u, v)) {
            edges.push((u, v));
        }
    }
    Ok(edges)
}

/// Preferential attachment: vertex `v` sends `min(v, k)` edges to targets
/// drawn degree-proportionally from the attachment pool, `k` chosen so the
/// edge count lands near `m`. In-degree concentrates on early vertices,
/// giving the heavy-tailed distribution the sampling comparisons rely on.
pub fn power_law(n: usize, m: usize, seed: u64) -> Result<Vec<(usize, usize)>, GenError> {
    if n == 0 {
        return Err(GenError::Empty);
    }
    let k = if n <= 1 {
        0
    } else {
        (m + n / 2) / (n - 1)
    }
    .max(1);
    let mut rng = Lcg64::new(seed);
    let mut pool: Vec<usize> = vec![0];
    let mut edges = Vec::with_capacity(k * n);
    for v in 1..n {
        for _ in 0..k.min(v) {
            let target = pool[rng.below(pool.len())];
            edges.push((v, target));
            pool.push(target);
        }
        pool.push(v);
    }
    Ok(edges)
}

/// Uniform features in `[-1, 1)`, deterministic per seed.
pub fn random_features(rows: usize, width: usize, seed: u64) -> Matrix {
    let mut rng = Lcg64::new(seed);
    let data = (0..rows * width).map(|_| rng.symmetric_f32(1.0)).collect();
    Matrix::from_vec(rows, width, data).expect("sized")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erdos_renyi_is_deterministic_and_simple() {
        let a = erdos_renyi(30, 120, 7).unwrap();
        let b = erdos_renyi(30, 120, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 120);
        let set: HashSet<_> = a.iter().collect();
        assert_eq!(set.len(), 120);
        assert!(a.iter().all(|&(u, v)| u != v));
    }

    #[test]
    fn erdos_renyi_rejects_impossible_density() {
        assert!(matches!(
            erdos_renyi(3, 7, 0).unwrap_err(),
            GenError::TooManyEdges { max: 6, .. }
        ));
    }

    #[test]
    fn power_law_has_heavy_in_degree_tail() {
        let n = 1000;
        let edges = power_law(n, 10 * n, 42).unwrap();
        let mut indeg = vec![0usize; n];
        for &(_, dst) in &edges {
            indeg[dst] += 1;
        }
        let mut sorted = indeg.clone();
        sorted.sort_unstable();
        let median = sorted[n / 2];
        let max = *sorted.last().unwrap();
        assert!(
            max >= 10 * median.max(1),
            "max {max} vs median {median}"
        );
    }

    #[test]
    fn power_law_edge_count_is_near_target() {
        let edges = power_law(10_000, 100_000, 1).unwrap();
        let m = edges.len() as f64;
        assert!((m - 100_000.0).abs() / 100_000.0 < 0.05, "{m}");
    }
}
