//! Graph views and attribute views of a multi-view attributed graph, and
//! their normalized Laplacians.
//!
//! A graph view is a simple weighted graph; an attribute view is a dense
//! feature matrix turned into a KNN graph by cosine similarity. Either way
//! the view contributes a normalized Laplacian L = I - D^{-1/2} A D^{-1/2}
//! whose spectrum lies in [0, 2].

use crate::linalg::{LinalgError, SparseSymMatrix};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ViewError {
    #[error("view {view} has {got} nodes, dataset has {expected}")]
    DimensionMismatch {
        view: usize,
        expected: usize,
        got: usize,
    },

    #[error("adjacency has a nonpositive or diagonal entry at ({row},{col})")]
    BadAdjacencyEntry { row: usize, col: usize },

    #[error("attribute matrix contains a non-finite value at ({row},{col})")]
    NonFiniteAttribute { row: usize, col: usize },

    #[error("knn requires 1 <= K < n, got K={k} with n={n}")]
    BadKnnCount { k: usize, n: usize },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A simple weighted graph: symmetric adjacency, positive weights, zero
/// diagonal.
#[derive(Debug, Clone)]
pub struct GraphView {
    adjacency: SparseSymMatrix,
}

impl GraphView {
    pub fn new(adjacency: SparseSymMatrix) -> Result<Self, ViewError> {
        for i in 0..adjacency.n() {
            let (cols, vals) = adjacency.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if i == j || !(v > 0.0) {
                    return Err(ViewError::BadAdjacencyEntry { row: i, col: j });
                }
            }
        }
        Ok(Self { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn adjacency(&self) -> &SparseSymMatrix {
        &self.adjacency
    }

    /// Weighted degree of node a.
    pub fn degree(&self, a: usize) -> f64 {
        let (_, vals) = self.adjacency.row(a);
        vals.iter().sum()
    }

    /// Sum of all weighted degrees.
    pub fn volume(&self) -> f64 {
        (0..self.n()).map(|a| self.degree(a)).sum()
    }
}

/// Dense n-by-d attribute matrix, row-major.
#[derive(Debug, Clone)]
pub struct AttributeView {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl AttributeView {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self, ViewError> {
        assert_eq!(values.len(), n * d);
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ViewError::NonFiniteAttribute {
                    row: idx / d,
                    col: idx % d,
                });
            }
        }
        Ok(Self { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a * self.d..(a + 1) * self.d]
    }
}

/// Which view a Laplacian came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewSource {
    /// Index among the graph views.
    Graph(usize),
    /// Index among the attribute views.
    Attribute(usize),
}

/// Normalized Laplacian of one view; spectrum in [0, 2], diagonal 1.
#[derive(Debug, Clone)]
pub struct ViewLaplacian {
    matrix: SparseSymMatrix,
    source: ViewSource,
}

impl ViewLaplacian {
    pub fn from_parts(matrix: SparseSymMatrix, source: ViewSource) -> Self {
        Self { matrix, source }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &SparseSymMatrix {
        &self.matrix
    }

    pub fn source(&self) -> ViewSource {
        self.source
    }
}

/// L = I - D^{-1/2} A D^{-1/2}.
///
/// Nodes of degree zero take D^{-1/2} = 0, which leaves their diagonal
/// entry at 1 and keeps the spectrum inside [0, 2].
pub fn normalized_laplacian(g: &GraphView) -> ViewLaplacian {
    normalized_laplacian_tagged(g, ViewSource::Graph(0))
}

fn normalized_laplacian_tagged(g: &GraphView, source: ViewSource) -> ViewLaplacian {
    let n = g.n();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|a| {
            let d = g.degree(a);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut entries: Vec<(usize, usize, f64)> = (0..n).map(|a| (a, a, 1.0)).collect();
    for a in 0..n {
        let (cols, vals) = g.adjacency().row(a);
        for (&b, &w) in cols.iter().zip(vals) {
            if b > a {
                entries.push((a, b, -w * (inv_sqrt_deg[a] * inv_sqrt_deg[b])));
            }
        }
    }
    let matrix = SparseSymMatrix::from_entries(n, entries).expect("valid adjacency");
    ViewLaplacian::from_parts(matrix, source)
}

/// Result of KNN graph construction; nodes with zero-norm attribute rows
/// contribute no edges and are reported as a count.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub graph: GraphView,
    pub zero_norm_rows: usize,
}

/// Exact K-nearest-neighbor graph under cosine similarity.
///
/// Each node links to the K other nodes with the highest similarity; ties
/// at the cutoff go to the lower node index. Pairs with similarity <= 0 are
/// dropped, and the directed lists are symmetrized by union. Zero-norm rows
/// become isolated nodes.
pub fn knn_graph(x: &AttributeView, k: usize) -> Result<KnnGraph, ViewError> {
    let n = x.n();
    if k < 1 || k >= n {
        return Err(ViewError::BadKnnCount { k, n });
    }
    let norms: Vec<f64> = (0..n)
        .map(|a| x.row(a).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let zero_norm_rows = norms.iter().filter(|&&v| v == 0.0).count();

    // Per-node top-K lists; rows are independent so the parallel result is
    // bit-identical to the serial one.
    let neighbor_lists: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|a| {
            if norms[a] == 0.0 {
                return Vec::new();
            }
            let ra = x.row(a);
            let mut sims: Vec<(usize, f64)> = Vec::with_capacity(n - 1);
            for b in 0..n {
                if b == a || norms[b] == 0.0 {
                    continue;
                }
                let dot: f64 = ra.iter().zip(x.row(b)).map(|(p, q)| p * q).sum();
                let sim = dot / (norms[a] * norms[b]);
                if sim > 0.0 {
                    sims.push((b, sim));
                }
            }
            sims.sort_by(|l, r| {
                r.1.partial_cmp(&l.1)
                    .unwrap()
                    .then_with(|| l.0.cmp(&r.0))
            });
            sims.truncate(k);
            sims
        })
        .collect();

    // Union symmetrization: keep each unordered pair once. Cosine is
    // symmetric and both directions compute bit-identical values.
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut chosen: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
    for (a, list) in neighbor_lists.iter().enumerate() {
        for &(b, sim) in list {
            let key = (a.min(b), a.max(b));
            if chosen.insert(key) {
                edges.push((key.0, key.1, sim));
            }
        }
    }
    let adjacency = SparseSymMatrix::from_entries(n, edges)?;
    Ok(KnnGraph {
        graph: GraphView::new(adjacency)?,
        zero_norm_rows,
    })
}

/// A multi-view attributed graph: p graph views and q attribute views over
/// one node set, plus the target cluster count.
#[derive(Debug, Clone)]
pub struct MvagDataset {
    pub n: usize,
    pub k: usize,
    pub graph_views: Vec<GraphView>,
    pub attribute_views: Vec<AttributeView>,
    /// Per-attribute-view override of the KNN neighbor count.
    pub attribute_knn: Vec<Option<usize>>,
    pub labels: Option<Vec<usize>>,
}

impl MvagDataset {
    pub fn r(&self) -> usize {
        self.graph_views.len() + self.attribute_views.len()
    }
}

/// Builds the r view Laplacians in view order: graph views first, then
/// attribute views through their KNN graphs.
pub fn build_view_laplacians(ds: &MvagDataset, k: usize) -> Result<Vec<ViewLaplacian>, ViewError> {
    let mut out = Vec::with_capacity(ds.r());
    for (i, g) in ds.graph_views.iter().enumerate() {
        if g.n() != ds.n {
            return Err(ViewError::DimensionMismatch {
                view: i,
                expected: ds.n,
                got: g.n(),
            });
        }
        out.push(normalized_laplacian_tagged(g, ViewSource::Graph(i)));
    }
    for (j, x) in ds.attribute_views.iter().enumerate() {
        if x.n() != ds.n {
            return Err(ViewError::DimensionMismatch {
                view: ds.graph_views.len() + j,
                expected: ds.n,
                got: x.n(),
            });
        }
        let kj = ds.attribute_knn.get(j).copied().flatten().unwrap_or(k);
        let knn = knn_graph(x, kj)?;
        out.push(normalized_laplacian_tagged(
            &knn.graph,
            ViewSource::Attribute(j),
        ));
    }
    Ok(out)
}
