//! Compressed sparse row matrices.

use nalgebra::DMatrix;

/// Something that can be applied to a vector.
pub trait LinearOperator {
    fn size(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `r = b - A x`.
    fn residual(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        self.apply(x, r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    }
}

/// Square sparse matrix in CSR layout with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside a {n}x{n} matrix");
            rows[r].push((c, v));
        }
        Self::from_rows(n, rows)
    }

    fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            n: d.len(),
            indptr: (0..=d.len()).collect(),
            indices: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// `alpha * self + beta * other`.
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let rows = (0..self.n)
            .map(|r| {
                let (c1, v1) = self.row(r);
                let (c2, v2) = other.row(r);
                c1.iter()
                    .zip(v1)
                    .map(|(&c, &v)| (c, alpha * v))
                    .chain(c2.iter().zip(v2).map(|(&c, &v)| (c, beta * v)))
                    .collect()
            })
            .collect();
        Self::from_rows(self.n, rows)
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `self * D(d)`, i.e. column `j` scaled by `d[j]`.
    pub fn scale_columns(&self, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for (v, &c) in out.values.iter_mut().zip(&out.indices) {
            *v *= d[c];
        }
        out
    }

    /// `D(d) * self`.
    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.n {
            for p in out.indptr[r]..out.indptr[r + 1] {
                out.values[p] *= d[r];
            }
        }
        out
    }

    /// Sparse product `self * other` (Gustavson's row-wise algorithm).
    pub fn mul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut acc = vec![0.0; n];
        let mut marker = vec![usize::MAX; n];
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..n {
            let start = indices.len();
            let (ca, va) = self.row(r);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&c, &b) in cb.iter().zip(vb) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = 0.0;
                        indices.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            indices[start..].sort_unstable();
            values.extend(indices[start..].iter().map(|&c| acc[c]));
            indptr.push(indices.len());
        }
        CsrMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets = (0..self.n).flat_map(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (c, r, v))
        });
        CsrMatrix::from_triplets(self.n, triplets)
    }

    /// Largest `|r - c|` over the stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|r| self.row(r).0.iter().map(move |&c| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d[(r, c)] += v;
            }
        }
        d
    }
}

impl LinearOperator for CsrMatrix {
    fn size(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
