//! Dense D-mode tensors and the multilinear primitives built on them.
//!
//! Storage is row-major (last index fastest). Mode arguments are 1-based:
//! `matricize(&x, 1)` unfolds along the first mode. Unfoldings use the
//! forward cyclic column ordering: for mode `d` the column index of
//! `(i_1, …, i_D)` is the mixed-radix rank of `(i_{d+1}, …, i_D, i_1, …, i_{d-1})`
//! with `i_{d+1}` varying fastest.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Mode sizes `n_1, …, n_D` of a tensor with `D ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidShape(format!(
                "need at least 2 modes, got {}",
                dims.len()
            )));
        }
        if let Some(d) = dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidShape(format!("mode {} has size 0", d + 1)));
        }
        dims.iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidShape("element count overflows".into()))?;
        Ok(Self(dims))
    }

    /// Cubic shape `n × ⋯ × n` with `order` modes.
    pub fn cubic(n: usize, order: usize) -> Result<Self> {
        Self::new(vec![n; order])
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    /// Number of modes `D`.
    #[inline]
    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Size of a mode given 1-based.
    pub fn dim(&self, mode: usize) -> Result<usize> {
        check_mode(mode, self.order())?;
        Ok(self.0[mode - 1])
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_cubic(&self) -> bool {
        self.0.iter().all(|&n| n == self.0[0])
    }

    /// Row-major strides (0-based offsets).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.order()];
        for k in (0..self.order() - 1).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1];
        }
        strides
    }

    /// Number of columns of the mode-`mode` unfolding.
    pub fn unfolding_cols(&self, mode: usize) -> Result<usize> {
        Ok(self.numel() / self.dim(mode)?)
    }

    /// Same shape with one mode resized.
    pub fn with_dim(&self, mode: usize, size: usize) -> Result<Shape> {
        check_mode(mode, self.order())?;
        let mut dims = self.0.clone();
        dims[mode - 1] = size;
        Shape::new(dims)
    }

    /// Column stride of every mode inside the mode-`mode` unfolding; the
    /// entry for `mode` itself is 0.
    fn unfolding_strides(&self, mode: usize) -> Vec<usize> {
        let order = self.order();
        let d = mode - 1;
        let mut strides = vec![0; order];
        let mut acc = 1;
        for t in 1..order {
            let m = (d + t) % order;
            strides[m] = acc;
            acc *= self.0[m];
        }
        strides
    }
}

pub(crate) fn check_mode(mode: usize, order: usize) -> Result<()> {
    if mode == 0 || mode > order {
        Err(Error::ModeOutOfRange { mode, order })
    } else {
        Ok(())
    }
}

/// Dense real tensor with row-major data.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} needs {} entries, got {}",
                shape.dims(),
                shape.numel(),
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_raw(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.numel());
        Self { shape, data }
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.numel();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Tensor with `diag[i]` at `(i, i, …, i)` and zeros elsewhere.
    pub fn diagonal(shape: Shape, diag: &[f64]) -> Result<Self> {
        let min = *shape.dims().iter().min().expect("non-empty shape");
        if diag.len() > min {
            return Err(Error::ShapeMismatch(format!(
                "diagonal of length {} does not fit shape {:?}",
                diag.len(),
                shape.dims()
            )));
        }
        let step: usize = shape.strides().iter().sum();
        let mut data = vec![0.0; shape.numel()];
        for (i, &v) in diag.iter().enumerate() {
            data[i * step] = v;
        }
        Self::new(shape, data)
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.order()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Entry at a 0-based multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        let off: usize = index
            .iter()
            .zip(self.shape.strides())
            .map(|(i, s)| i * s)
            .sum();
        self.data[off]
    }

    pub fn frobenius(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn scale(&self, c: f64) -> DenseTensor {
        Self::from_raw(
            self.shape.clone(),
            self.data.iter().map(|x| c * x).collect(),
        )
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        same_shape(self, other)?;
        Ok(Self::from_raw(
            self.shape.clone(),
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        same_shape(self, other)?;
        Ok(Self::from_raw(
            self.shape.clone(),
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &DenseTensor) -> Result<DenseTensor> {
        same_shape(self, other)?;
        Ok(Self::from_raw(
            self.shape.clone(),
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn same_shape(x: &DenseTensor, y: &DenseTensor) -> Result<()> {
    if x.shape != y.shape {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            x.shape.dims(),
            y.shape.dims()
        )));
    }
    Ok(())
}

/// Entrywise scalar product `Σ x_i y_i`.
pub fn inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    same_shape(x, y)?;
    Ok(dot(&x.data, &y.data))
}

pub fn frobenius(x: &DenseTensor) -> f64 {
    x.frobenius()
}

/// Walks every element in storage order, yielding `(offset, row, column)` of
/// the mode-`mode` unfolding.
fn for_each_unfolding_position(shape: &Shape, mode: usize, mut f: impl FnMut(usize, usize, usize)) {
    let dims = shape.dims();
    let order = dims.len();
    let d = mode - 1;
    let cstride = shape.unfolding_strides(mode);
    let mut idx = vec![0usize; order];
    let mut col = 0usize;
    for off in 0..shape.numel() {
        f(off, idx[d], col);
        // odometer increment, last index fastest
        for k in (0..order).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                col += cstride[k];
                break;
            }
            col -= (dims[k] - 1) * cstride[k];
            idx[k] = 0;
        }
    }
}

/// Mode-`mode` unfolding `X_(d)` with `n_d` rows.
pub fn matricize(x: &DenseTensor, mode: usize) -> Result<Matrix> {
    let rows = x.shape.dim(mode)?;
    let cols = x.shape.numel() / rows;
    let mut out = vec![0.0; x.data.len()];
    for_each_unfolding_position(&x.shape, mode, |off, r, c| {
        out[r * cols + c] = x.data[off];
    });
    Ok(Matrix::from_raw(rows, cols, out))
}

/// Folds a mode-`mode` unfolding back into a tensor of `shape`; the adjoint
/// (and inverse) of [`matricize`].
pub fn tensorize(m: &Matrix, mode: usize, shape: &Shape) -> Result<DenseTensor> {
    let rows = shape.dim(mode)?;
    let cols = shape.numel() / rows;
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::ShapeMismatch(format!(
            "mode-{mode} unfolding of {:?} is {rows}x{cols}, got {}x{}",
            shape.dims(),
            m.rows(),
            m.cols()
        )));
    }
    let src = m.data();
    let mut out = vec![0.0; shape.numel()];
    for_each_unfolding_position(shape, mode, |off, r, c| {
        out[off] = src[r * cols + c];
    });
    Ok(DenseTensor::from_raw(shape.clone(), out))
}

/// `X ×_d M`: contracts mode `mode` of `x` with the columns of `m`, so the
/// result has `m.rows()` in that mode.
pub fn mode_mul(x: &DenseTensor, mode: usize, m: &Matrix) -> Result<DenseTensor> {
    let n = x.shape.dim(mode)?;
    if m.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "mode-{mode} product needs {n} matrix columns, got {}",
            m.cols()
        )));
    }
    let out_shape = x.shape.with_dim(mode, m.rows())?;
    let dims = x.shape.dims();
    let inner_len: usize = dims[mode..].iter().product();
    let outer_len: usize = dims[..mode - 1].iter().product();
    let new_n = m.rows();
    let mut out = vec![0.0; out_shape.numel()];
    for o in 0..outer_len {
        let src = &x.data[o * n * inner_len..(o + 1) * n * inner_len];
        let dst = &mut out[o * new_n * inner_len..(o + 1) * new_n * inner_len];
        for r in 0..new_n {
            let dst_row = &mut dst[r * inner_len..(r + 1) * inner_len];
            for (i, &a) in m.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (t, &s) in dst_row
                    .iter_mut()
                    .zip(&src[i * inner_len..(i + 1) * inner_len])
                {
                    *t += a * s;
                }
            }
        }
    }
    Ok(DenseTensor::from_raw(out_shape, out))
}

/// `X ×_1 U¹ ×_2 ⋯ ×_D U^D`, one factor per mode applied in mode order.
pub fn multi_mode_mul(x: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != x.order() {
        return Err(Error::ShapeMismatch(format!(
            "{} factors for a {}-mode tensor",
            factors.len(),
            x.order()
        )));
    }
    let mut acc = x.clone();
    for (d, f) in factors.iter().enumerate() {
        acc = mode_mul(&acc, d + 1, f)?;
    }
    Ok(acc)
}

/// Applies the transpose of every factor: `X ×_1 U¹ᵀ ⋯ ×_D U^Dᵀ`.
pub fn multi_mode_mul_transposed(x: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let transposed: Vec<Matrix> = factors.iter().map(Matrix::transpose).collect();
    multi_mode_mul(x, &transposed)
}

/// Rank-one tensor `v¹ ⊗ ⋯ ⊗ v^D`.
pub fn outer(vectors: &[Vec<f64>]) -> Result<DenseTensor> {
    let shape = Shape::new(vectors.iter().map(Vec::len).collect())?;
    let mut data = vec![1.0];
    for v in vectors {
        data = data
            .iter()
            .flat_map(|&a| v.iter().map(move |&b| a * b))
            .collect();
    }
    DenseTensor::new(shape, data)
}

fn require_cubic(x: &DenseTensor) -> Result<()> {
    if x.shape.is_cubic() {
        Ok(())
    } else {
        Err(Error::NotCubic(x.shape.dims().to_vec()))
    }
}

/// Offsets of `x` read through every index permutation: `perm_offsets[p][off]`
/// is the offset of the element whose indices are those of `off` permuted by `p`.
fn permuted_offsets(shape: &Shape) -> Vec<Vec<usize>> {
    let order = shape.order();
    let strides = shape.strides();
    let dims = shape.dims();
    let perms: Vec<Vec<usize>> = (0..order).permutations(order).collect();
    let mut out = vec![Vec::with_capacity(shape.numel()); perms.len()];
    let mut idx = vec![0usize; order];
    for _ in 0..shape.numel() {
        for (p, perm) in perms.iter().enumerate() {
            let off: usize = perm.iter().zip(&strides).map(|(&k, s)| idx[k] * s).sum();
            out[p].push(off);
        }
        for k in (0..order).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Whether a cubic tensor is invariant under every index permutation, up to
/// `tol · max(1, ‖X‖_F)`.
pub fn is_symmetric(x: &DenseTensor, tol: f64) -> Result<bool> {
    require_cubic(x)?;
    let bound = tol * x.frobenius().max(1.0);
    let worst = permuted_offsets(&x.shape)
        .iter()
        .flat_map(|offs| {
            offs.iter()
                .enumerate()
                .map(|(off, &p)| (x.data[off] - x.data[p]).abs())
        })
        .fold(0.0, f64::max);
    Ok(worst <= bound)
}

/// Average of a cubic tensor over all `D!` index permutations.
pub fn symmetrize(x: &DenseTensor) -> Result<DenseTensor> {
    require_cubic(x)?;
    let perms = permuted_offsets(&x.shape);
    let count = perms.len() as f64;
    let data = (0..x.data.len())
        .map(|off| perms.iter().map(|p| x.data[p[off]]).sum::<f64>() / count)
        .collect();
    Ok(DenseTensor::from_raw(x.shape.clone(), data))
}
