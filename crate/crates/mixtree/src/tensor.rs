//! Dense tensors, matricization views, and the algebraic operators on them:
//! tensor product (plain and generalized), mode permutation, matricization,
//! Kronecker product, and mode alignment.
//!
//! Layout is row-major with the last index fastest, so matricizing with the
//! full index set is a straight reshape of the flat data.

use crate::error::{Error, Result};
use crate::modes::ModeSet;
use crate::scalar::{BinaryOp, Scalar, ScalarKind};

/// Order-N dense tensor. Order 0 is allowed and holds exactly one entry.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<Scalar>,
}

/// A tensor arranged as a matrix (row-major flat data).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixView {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Scalar>,
}

fn check_same_kind(a: ScalarKind, b: ScalarKind) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ScalarKindMismatch(a, b))
    }
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<Scalar>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch("zero-length mode".into()));
        }
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} need {} entries, got {}",
                dims,
                expected,
                data.len()
            )));
        }
        if data.is_empty() {
            return Err(Error::DimensionMismatch(
                "tensor must hold at least one entry".into(),
            ));
        }
        let kind = data[0].kind();
        if data.iter().any(|s| s.kind() != kind) {
            return Err(Error::ScalarKindMismatch(kind, ScalarKind::F64));
        }
        Ok(DenseTensor { dims, data })
    }

    /// Order-0 tensor holding one scalar.
    pub fn scalar(value: Scalar) -> Self {
        DenseTensor {
            dims: Vec::new(),
            data: vec![value],
        }
    }

    pub fn zeros(kind: ScalarKind, dims: Vec<usize>) -> Self {
        let len: usize = dims.iter().product();
        DenseTensor {
            dims,
            data: vec![Scalar::zero(kind); len.max(1)],
        }
    }

    pub fn from_ints(dims: Vec<usize>, values: &[i64]) -> Result<Self> {
        Self::new(dims, values.iter().map(|&v| Scalar::from_int(v)).collect())
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kind(&self) -> ScalarKind {
        self.data[0].kind()
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn get_flat(&self, flat: usize) -> &Scalar {
        &self.data[flat]
    }

    /// Decode a flat offset into a 0-based multi-index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        idx
    }

    /// Flat offset of a 0-based multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.dims[k]);
            flat = flat * self.dims[k] + i;
        }
        flat
    }

    pub fn entry(&self, idx: &[usize]) -> &Scalar {
        &self.data[self.flat_index(idx)]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// Elementwise sum; dims and scalar kinds must agree.
    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "cannot add tensors with dims {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        check_same_kind(self.kind(), other.kind())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data,
        })
    }

    /// `self += w * t` entrywise; dims must agree.
    pub fn add_scaled(&mut self, w: &Scalar, t: &DenseTensor) -> Result<()> {
        if self.dims != t.dims {
            return Err(Error::DimensionMismatch(format!(
                "cannot accumulate dims {:?} into {:?}",
                t.dims, self.dims
            )));
        }
        for (acc, x) in self.data.iter_mut().zip(&t.data) {
            acc.add_mul_assign(w, x)?;
        }
        Ok(())
    }

    /// Scale every entry by `w`.
    pub fn scale(&self, w: &Scalar) -> Result<DenseTensor> {
        let data = self
            .data
            .iter()
            .map(|x| w.mul(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data,
        })
    }

    /// Outer product: dims concatenate, entry = product of the paired entries.
    pub fn tensor_product(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.tensor_product_with(other, BinaryOp::Product)
    }

    /// Generalized outer product with a commutative binary operator applied
    /// entrywise in place of multiplication.
    pub fn tensor_product_with(&self, other: &DenseTensor, g: BinaryOp) -> Result<DenseTensor> {
        check_same_kind(self.kind(), other.kind())?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(g.apply(a, b)?);
            }
        }
        Ok(DenseTensor { dims, data })
    }

    /// Rearrange modes: `result[d_1..d_N] = self[d_{sigma(1)}..d_{sigma(N)}]`
    /// with `sigma` given 0-based. Equivalently, mode `j` of `self` becomes
    /// mode `sigma[j]` of the result.
    pub fn mode_permute(&self, sigma: &[usize]) -> Result<DenseTensor> {
        let n = self.dims.len();
        if sigma.len() != n {
            return Err(Error::InvalidPermutation(format!(
                "permutation length {} does not match order {}",
                sigma.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        for &s in sigma {
            if s >= n || seen[s] {
                return Err(Error::InvalidPermutation(format!(
                    "not a bijection on 0..{n}: {sigma:?}"
                )));
            }
            seen[s] = true;
        }
        if sigma.iter().enumerate().all(|(j, &s)| j == s) {
            return Ok(self.clone());
        }
        let mut dims = vec![0; n];
        for j in 0..n {
            dims[sigma[j]] = self.dims[j];
        }
        let total = self.data.len();
        let mut data = Vec::with_capacity(total);
        let mut ridx = vec![0usize; n];
        let mut sidx = vec![0usize; n];
        for flat in 0..total {
            let mut rem = flat;
            for k in (0..n).rev() {
                ridx[k] = rem % dims[k];
                rem /= dims[k];
            }
            for j in 0..n {
                sidx[j] = ridx[sigma[j]];
            }
            data.push(self.entry(&sidx).clone());
        }
        Ok(DenseTensor { dims, data })
    }

    /// Permute modes so that the given per-mode labels come out ascending:
    /// result mode `k` carries the data of the mode holding the k-th smallest
    /// label.
    pub fn align_to_sorted_modes(&self, mode_labels: &[usize]) -> Result<DenseTensor> {
        let n = self.dims.len();
        if mode_labels.len() != n {
            return Err(Error::InvalidPermutation(format!(
                "{} labels for order-{} tensor",
                mode_labels.len(),
                n
            )));
        }
        let mut sigma = vec![0usize; n];
        for j in 0..n {
            let lbl = mode_labels[j];
            let mut rank = 0;
            for (k, &other) in mode_labels.iter().enumerate() {
                if other == lbl && k != j {
                    return Err(Error::InvalidPermutation(format!(
                        "duplicate mode label {lbl}"
                    )));
                }
                if other < lbl {
                    rank += 1;
                }
            }
            sigma[j] = rank;
        }
        self.mode_permute(&sigma)
    }

    /// Matricize with respect to `index_set`: rows are indexed by the modes
    /// in the set (ascending), columns by the complement. The empty set gives
    /// a single row, the full set a single column.
    pub fn matricize(&self, index_set: &ModeSet) -> Result<MatrixView> {
        let n = self.dims.len();
        if n == 0 {
            return Err(Error::InvalidIndexSet(
                "cannot matricize an order-0 tensor".into(),
            ));
        }
        if let Some(max) = index_set.max() {
            if max > n {
                return Err(Error::InvalidIndexSet(format!(
                    "index {max} out of range for order {n}"
                )));
            }
        }
        let row_modes: Vec<usize> = index_set.iter().map(|j| j - 1).collect();
        let col_modes: Vec<usize> = (0..n).filter(|k| !index_set.contains(k + 1)).collect();

        let rows: usize = row_modes.iter().map(|&k| self.dims[k]).product();
        let cols: usize = col_modes.iter().map(|&k| self.dims[k]).product();

        // strides within the row/column index groups (last mode fastest)
        let mut row_strides = vec![0usize; row_modes.len()];
        let mut acc = 1;
        for t in (0..row_modes.len()).rev() {
            row_strides[t] = acc;
            acc *= self.dims[row_modes[t]];
        }
        let mut col_strides = vec![0usize; col_modes.len()];
        let mut acc = 1;
        for t in (0..col_modes.len()).rev() {
            col_strides[t] = acc;
            acc *= self.dims[col_modes[t]];
        }

        let mut data = vec![Scalar::zero(self.kind()); rows * cols];
        let mut idx = vec![0usize; n];
        for flat in 0..self.data.len() {
            let mut rem = flat;
            for k in (0..n).rev() {
                idx[k] = rem % self.dims[k];
                rem /= self.dims[k];
            }
            let mut row = 0;
            for (t, &k) in row_modes.iter().enumerate() {
                row += idx[k] * row_strides[t];
            }
            let mut col = 0;
            for (t, &k) in col_modes.iter().enumerate() {
                col += idx[k] * col_strides[t];
            }
            data[row * cols + col] = self.data[flat].clone();
        }
        Ok(MatrixView { rows, cols, data })
    }
}

impl MatrixView {
    pub fn new(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(MatrixView { rows, cols, data })
    }

    pub fn from_rows_int(rows: &[&[i64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            data.extend(row.iter().map(|&v| Scalar::from_int(v)));
        }
        MatrixView::new(r, c, data)
    }

    pub fn identity(n: usize, kind: ScalarKind) -> Self {
        let mut data = vec![Scalar::zero(kind); n * n];
        for i in 0..n {
            data[i * n + i] = Scalar::one(kind);
        }
        MatrixView {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn kind(&self) -> ScalarKind {
        self.data[0].kind()
    }

    pub fn at(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    /// Plain matrix product.
    pub fn matmul(&self, other: &MatrixView) -> Result<MatrixView> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        check_same_kind(self.kind(), other.kind())?;
        let mut data = vec![Scalar::zero(self.kind()); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    data[i * other.cols + j].add_mul_assign(a, other.at(k, j))?;
                }
            }
        }
        MatrixView::new(self.rows, other.cols, data)
    }

    /// Kronecker product: entry `A_ij * B_kl` lands at row `(i-1)*rows(B)+k`,
    /// column `(j-1)*cols(B)+l` (1-based).
    pub fn kronecker(&self, other: &MatrixView) -> Result<MatrixView> {
        check_same_kind(self.kind(), other.kind())?;
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![Scalar::zero(self.kind()); rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.at(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let r = i * other.rows + k;
                        let c = j * other.cols + l;
                        data[r * cols + c] = a.mul(other.at(k, l))?;
                    }
                }
            }
        }
        MatrixView::new(rows, cols, data)
    }
}
