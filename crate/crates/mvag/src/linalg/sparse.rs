//! Symmetric sparse matrices in compressed row storage.
//!
//! Both triangles are stored so that row access covers the full
//! neighborhood of a node. Column indices are strictly increasing
//! within each row and the two stored copies of every off-diagonal
//! entry are bit-identical.

use super::LinalgError;
use crate::objective::WeightVector;

/// n-by-n symmetric sparse matrix, compressed row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from a list of entries. Each unordered pair {i,j} appears at
    /// most once; the mirrored entry is stored automatically. Diagonal
    /// entries are given as (i, i, v).
    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, LinalgError> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: i.max(j) + 1,
                });
            }
            per_row[i].push((j, v));
            if i != j {
                per_row[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in per_row.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            for pair in row.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(LinalgError::DuplicateEntry {
                        row: i,
                        col: pair[0].0,
                    });
                }
            }
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds directly from CSR arrays that already store both triangles.
    /// Verifies structural symmetry with bit-identical mirrored values.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        assert_eq!(row_ptr.len(), n + 1);
        assert_eq!(col_idx.len(), values.len());
        let m = Self {
            n,
            row_ptr,
            col_idx,
            values,
        };
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(LinalgError::DuplicateEntry { row: i, col: w[1] });
                }
            }
            for (&j, &v) in cols.iter().zip(vals) {
                match m.get(j, i) {
                    Some(mirror) if mirror.to_bits() == v.to_bits() => {}
                    _ => return Err(LinalgError::Asymmetric { row: i, col: j }),
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row i.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Stored entry at (i, j), if present.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|p| vals[p])
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// x^T A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_acc += v * x[j];
            }
            acc += x[i] * row_acc;
        }
        acc
    }

    /// Dense copy, for small instances and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i][j] = v;
            }
        }
        d
    }

    /// Iterates over stored entries of the lower triangle plus diagonal
    /// (i >= j), in row order.
    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .filter(move |(&j, _)| j <= i)
                .map(move |(&j, &v)| (i, j, v))
        })
    }
}

/// Weighted sum of view Laplacians over the union sparsity pattern.
///
/// Entries that cancel numerically are kept as explicit stored zeros; no
/// drop tolerance is applied, so the pattern depends only on the inputs.
pub fn aggregate(
    laplacians: &[crate::views::ViewLaplacian],
    w: &WeightVector,
) -> Result<SparseSymMatrix, LinalgError> {
    assert!(!laplacians.is_empty(), "no view Laplacians given");
    if w.len() != laplacians.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: laplacians.len(),
            got: w.len(),
        });
    }
    let n = laplacians[0].n();
    for l in laplacians {
        if l.n() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: l.n(),
            });
        }
    }

    let mats: Vec<&SparseSymMatrix> = laplacians.iter().map(|l| l.matrix()).collect();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    // Union pattern row by row; accumulate in view order for determinism.
    let mut acc: Vec<f64> = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut seen: Vec<bool> = vec![false; n];
    for i in 0..n {
        touched.clear();
        for (m, &wi) in mats.iter().zip(w.as_slice()) {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if !seen[j] {
                    seen[j] = true;
                    acc[j] = 0.0;
                    touched.push(j);
                }
                acc[j] += wi * v;
            }
        }
        touched.sort_unstable();
        for &j in &touched {
            col_idx.push(j);
            values.push(acc[j]);
            seen[j] = false;
        }
        row_ptr.push(col_idx.len());
    }
    // Mirrored accumulation visits views in the same order on both sides,
    // so the result stays bit-symmetric and from_csr cannot fail.
    SparseSymMatrix::from_csr(n, row_ptr, col_idx, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::views::{GraphView, ViewLaplacian, ViewSource};

    fn lap_from_entries(n: usize, entries: &[(usize, usize, f64)]) -> ViewLaplacian {
        let m = SparseSymMatrix::from_entries(n, entries.iter().copied()).unwrap();
        ViewLaplacian::from_parts(m, ViewSource::Graph(0))
    }

    #[test]
    fn builds_and_mirrors() {
        let m = SparseSymMatrix::from_entries(3, [(0, 1, 2.0), (1, 2, -0.5), (0, 0, 1.0)]).unwrap();
        assert_eq!(m.nnz(), 5);
        assert_eq!(m.get(1, 0), Some(2.0));
        assert_eq!(m.get(2, 1), Some(-0.5));
        assert_eq!(m.get(0, 2), None);
    }

    #[test]
    fn rejects_duplicates() {
        let r = SparseSymMatrix::from_entries(2, [(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(matches!(r, Err(LinalgError::DuplicateEntry { .. })));
    }

    #[test]
    fn matvec_matches_dense() {
        let m =
            SparseSymMatrix::from_entries(3, [(0, 1, 1.0), (1, 2, 3.0), (2, 2, -1.0)]).unwrap();
        let d = m.to_dense();
        let x = [1.0, -2.0, 0.5];
        let mut y = [0.0; 3];
        m.matvec(&x, &mut y);
        for i in 0..3 {
            let want: f64 = (0..3).map(|j| d[i][j] * x[j]).sum();
            assert!((y[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn aggregate_of_identical_views_is_identity() {
        let l = lap_from_entries(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, -1.0)]);
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        let s = aggregate(&[l.clone(), l.clone()], &w).unwrap();
        for i in 0..2 {
            let (cols, vals) = s.row(i);
            let (c0, v0) = l.matrix().row(i);
            assert_eq!(cols, c0);
            for (a, b) in vals.iter().zip(v0) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn aggregate_one_hot_keeps_bits_and_explicit_zeros() {
        let a = lap_from_entries(3, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, -0.75)]);
        let b = lap_from_entries(3, &[(1, 1, 1.0), (2, 2, 1.0), (1, 2, -0.25)]);
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let s = aggregate(&[a.clone(), b], &w).unwrap();
        // a's pattern keeps a's bits
        assert_eq!(s.get(0, 1).unwrap().to_bits(), (-0.75f64).to_bits());
        assert_eq!(s.get(0, 0).unwrap().to_bits(), 1.0f64.to_bits());
        // b-only pattern becomes explicit zeros
        assert_eq!(s.get(1, 2).unwrap(), 0.0);
        assert_eq!(s.get(2, 2).unwrap(), 0.0);
        assert_eq!(s.nnz(), 7);
    }

    #[test]
    fn aggregate_dimension_mismatch() {
        let a = lap_from_entries(2, &[(0, 1, -1.0), (0, 0, 1.0), (1, 1, 1.0)]);
        let w = WeightVector::new(vec![1.0]).unwrap();
        assert!(matches!(
            aggregate(&[a], &WeightVector::new(vec![0.5, 0.5]).unwrap()),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        let b = lap_from_entries(3, &[(0, 0, 1.0)]);
        assert!(matches!(
            aggregate(&[lap_from_entries(2, &[(0, 0, 1.0)]), b], &WeightVector::new(vec![0.5, 0.5]).unwrap()),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        let _ = w;
    }
}
