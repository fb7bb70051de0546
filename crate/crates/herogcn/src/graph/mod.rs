//! Attributed graphs: adjacency plus per-node attribute vectors.
//!
//! Provides symmetric adjacency normalization, KNN-graph construction for
//! datasets that ship without edges, degree/modularity quantities, and a
//! stochastic block model generator for small-scale end-to-end tests.

mod io;
mod sbm;

pub use io::{load_attributes, load_edge_list, load_labels};
pub use sbm::{sbm_generate, SbmParams};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Undirected simple graph with an `n x d` attribute matrix.
///
/// Edges are stored once with `i < j`; duplicates and self-loops in the
/// input are dropped (with a warning for duplicates).
#[derive(Clone, Debug)]
pub struct AttributedGraph<F> {
    n: usize,
    edges: Vec<(usize, usize)>,
    attributes: Tensor<F>,
    degrees: Vec<usize>,
}

impl<F: Real> AttributedGraph<F> {
    /// Build a graph over `attributes.rows()` nodes from unordered pairs.
    pub fn new(attributes: Tensor<F>, raw_edges: &[(usize, usize)]) -> Result<Self> {
        let n = attributes.rows();
        if n == 0 {
            return Err(Error::Config("graph must have at least one node".into()));
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        let mut self_loops = 0usize;
        for &(a, b) in raw_edges {
            if a >= n || b >= n {
                return Err(Error::Config(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                self_loops += 1;
                continue;
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        if before != edges.len() {
            log::warn!("deduplicated {} duplicate edge(s)", before - edges.len());
        }
        if self_loops > 0 {
            log::warn!("dropped {self_loops} self-loop(s)");
        }
        let mut degrees = vec![0usize; n];
        for &(a, b) in &edges {
            degrees[a] += 1;
            degrees[b] += 1;
        }
        Ok(AttributedGraph {
            n,
            edges,
            attributes,
            degrees,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges, `m`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` pairs with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn attributes(&self) -> &Tensor<F> {
        &self.attributes
    }

    pub fn attribute_dim(&self) -> usize {
        self.attributes.cols()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.degrees[node]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Dense adjacency matrix A (zero diagonal).
    pub fn adjacency(&self) -> Tensor<F> {
        let mut a = Tensor::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a.set(i, j, F::one());
            a.set(j, i, F::one());
        }
        a
    }

    /// Modularity matrix `B = A - d d^T / 2m`.
    ///
    /// Errors when the graph has no edges, where the null model is undefined.
    pub fn modularity_matrix(&self) -> Result<Tensor<F>> {
        let m = self.edge_count();
        if m == 0 {
            return Err(Error::Domain {
                op: "modularity_matrix",
                detail: "graph has no edges".to_string(),
            });
        }
        let two_m = F::of(2.0 * m as f64);
        let mut b = self.adjacency();
        for i in 0..self.n {
            let di = F::of(self.degrees[i] as f64);
            for j in 0..self.n {
                let dj = F::of(self.degrees[j] as f64);
                let v = b.get(i, j) - di * dj / two_m;
                b.set(i, j, v);
            }
        }
        Ok(b)
    }

    /// Replace the attribute matrix (same node count required).
    pub fn with_attributes(mut self, attributes: Tensor<F>) -> Result<Self> {
        if attributes.rows() != self.n {
            return Err(Error::shape(
                "with_attributes",
                (self.n, self.attribute_dim()),
                attributes.shape(),
            ));
        }
        self.attributes = attributes;
        Ok(self)
    }
}

/// `A_hat = D~^{-1/2} (A + I) D~^{-1/2}`, dense and symmetric.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency<F> {
    matrix: Tensor<F>,
}

impl<F: Real> NormalizedAdjacency<F> {
    pub fn matrix(&self) -> &Tensor<F> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Tensor<F> {
        self.matrix
    }
}

/// Symmetric normalization with self-loops; isolated nodes get `A_hat_ii = 1`.
pub fn normalize<F: Real>(graph: &AttributedGraph<F>) -> NormalizedAdjacency<F> {
    let n = graph.node_count();
    // D~_ii = degree + 1 accounts for the added self-loop.
    let inv_sqrt: Vec<F> = (0..n)
        .map(|i| F::of(1.0 / ((graph.degree(i) + 1) as f64).sqrt()))
        .collect();
    let mut matrix = Tensor::zeros(n, n);
    for i in 0..n {
        matrix.set(i, i, inv_sqrt[i] * inv_sqrt[i]);
    }
    for &(i, j) in graph.edges() {
        let v = inv_sqrt[i] * inv_sqrt[j];
        matrix.set(i, j, v);
        matrix.set(j, i, v);
    }
    NormalizedAdjacency { matrix }
}

/// Connect each node to its `k` most cosine-similar peers, then symmetrize
/// by union. Ties break toward the lower node index; zero-norm rows have
/// similarity 0 against everything.
pub fn knn_graph<F: Real>(attributes: &Tensor<F>, k: usize) -> Result<AttributedGraph<F>> {
    let n = attributes.rows();
    if k == 0 {
        return Err(Error::Config("knn_graph requires k >= 1".into()));
    }
    if k >= n {
        return Err(Error::Config(format!(
            "knn_graph requires k < n, got k={k} with n={n}"
        )));
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| {
            attributes
                .row(i)
                .iter()
                .map(|v| v.as_f64() * v.as_f64())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut edges = Vec::with_capacity(n * k);
    for i in 0..n {
        let mut scored: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, cosine(attributes, &norms, i, j)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        for &(j, _) in scored.iter().take(k) {
            edges.push((i, j));
        }
    }
    AttributedGraph::new(attributes.clone(), &edges)
}

fn cosine<F: Real>(attributes: &Tensor<F>, norms: &[f64], i: usize, j: usize) -> f64 {
    if norms[i] == 0.0 || norms[j] == 0.0 {
        return 0.0;
    }
    let dot: f64 = attributes
        .row(i)
        .iter()
        .zip(attributes.row(j))
        .map(|(a, b)| a.as_f64() * b.as_f64())
        .sum();
    dot / (norms[i] * norms[j])
}
