//! Orthogonally decomposable (odeco) tensors
//! `X = Σ_i α_i · u_i¹ ⊗ ⋯ ⊗ u_i^D` with positive weights and per-mode
//! orthonormal column families.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    column_orthonormality_defect, complete_orthonormal, random_orthogonal_with, svd,
};
use crate::matrix::Matrix;
use crate::random::stream_rng;
use crate::spectral::Hosvd;
use crate::tensor::{outer, DenseTensor, Shape};

/// Tolerance on `|FᵀF − I|` accepted by [`make_odeco`].
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Validated odeco representation. Weights are strictly positive and sorted
/// descending; factor `d` is `n_d × r` with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct OdecoRep {
    shape: Shape,
    alphas: Vec<f64>,
    factors: Vec<Matrix>,
}

impl OdecoRep {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.alphas.len()
    }

    /// Weights zero-padded to the smallest mode size.
    pub fn padded_alphas(&self) -> Vec<f64> {
        let min = *self.shape.dims().iter().min().expect("non-empty shape");
        let mut a = self.alphas.clone();
        a.resize(min, 0.0);
        a
    }

    /// Same frame, new weights (validated and re-sorted as in [`make_odeco`]).
    pub fn with_weights(&self, alphas: Vec<f64>) -> Result<OdecoRep> {
        make_odeco(alphas, self.factors.clone(), self.shape.clone())
    }

    /// Same frame and ordering, all weights multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<OdecoRep> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale must be positive, got {c}"
            )));
        }
        Ok(OdecoRep {
            shape: self.shape.clone(),
            alphas: self.alphas.iter().map(|a| c * a).collect(),
            factors: self.factors.clone(),
        })
    }

    /// Each factor completed to a square orthogonal matrix.
    pub fn completed_factors(&self) -> Vec<Matrix> {
        self.factors
            .iter()
            .zip(self.shape.dims())
            .map(|(f, &n)| {
                let cols: Vec<Vec<f64>> = (0..f.cols()).map(|c| f.column(c)).collect();
                Matrix::from_columns(&complete_orthonormal(&cols, n)).expect("square basis")
            })
            .collect()
    }
}

/// Validates and normalizes an odeco representation.
///
/// Zero weights are dropped together with their columns; negative or
/// non-finite weights, non-orthonormal columns and ranks above `min_d n_d`
/// are rejected.
pub fn make_odeco(alphas: Vec<f64>, factors: Vec<Matrix>, shape: Shape) -> Result<OdecoRep> {
    let order = shape.order();
    if factors.len() != order {
        return Err(Error::ShapeMismatch(format!(
            "{} factors for a {order}-mode shape",
            factors.len()
        )));
    }
    let r = alphas.len();
    for (d, (f, &n)) in factors.iter().zip(shape.dims()).enumerate() {
        if f.rows() != n || f.cols() != r {
            return Err(Error::ShapeMismatch(format!(
                "factor {} is {}x{}, expected {n}x{r}",
                d + 1,
                f.rows(),
                f.cols()
            )));
        }
    }
    if let Some((index, &value)) = alphas
        .iter()
        .enumerate()
        .find(|(_, a)| !a.is_finite() || **a < 0.0)
    {
        return Err(Error::NonPositiveWeight { index, value });
    }
    let keep: Vec<usize> = (0..r).filter(|&i| alphas[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    let max = *shape.dims().iter().min().expect("non-empty shape");
    if keep.len() > max {
        return Err(Error::RankTooLarge {
            rank: keep.len(),
            max,
        });
    }
    let mut order_idx = keep;
    order_idx.sort_by(|&a, &b| alphas[b].total_cmp(&alphas[a]));
    let sorted_alphas: Vec<f64> = order_idx.iter().map(|&i| alphas[i]).collect();
    let mut sorted_factors = Vec::with_capacity(order);
    for (d, f) in factors.iter().enumerate() {
        let cols: Vec<Vec<f64>> = order_idx.iter().map(|&i| f.column(i)).collect();
        let m = Matrix::from_columns(&cols)?;
        let deviation = column_orthonormality_defect(&m);
        if deviation > ORTHONORMALITY_TOL {
            return Err(Error::NonOrthonormal {
                mode: d + 1,
                deviation,
            });
        }
        sorted_factors.push(m);
    }
    Ok(OdecoRep {
        shape,
        alphas: sorted_alphas,
        factors: sorted_factors,
    })
}

/// `Σ_i α_i · u_i¹ ⊗ ⋯ ⊗ u_i^D`.
pub fn to_dense(rep: &OdecoRep) -> DenseTensor {
    weighted_sum(rep, rep.alphas())
}

/// `Σ_i w_i · u_i¹ ⊗ ⋯ ⊗ u_i^D` on the frame of `rep` (any real weights).
pub(crate) fn weighted_sum(rep: &OdecoRep, weights: &[f64]) -> DenseTensor {
    debug_assert_eq!(weights.len(), rep.rank());
    let mut acc = DenseTensor::zeros(rep.shape.clone());
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let vecs: Vec<Vec<f64>> = rep.factors.iter().map(|f| f.column(i)).collect();
        let term = outer(&vecs).expect("shape matches factors");
        acc = acc.axpy(w, &term).expect("same shape");
    }
    acc
}

/// HOSVD read directly off the representation: diagonal core of the padded
/// weights and completed factors.
pub fn odeco_hosvd(rep: &OdecoRep) -> Hosvd {
    let core = DenseTensor::diagonal(rep.shape.clone(), rep.alphas()).expect("rank fits shape");
    Hosvd {
        core,
        factors: rep.completed_factors(),
    }
}

fn random_weights<R: Rng + ?Sized>(rng: &mut R, r: usize) -> Vec<f64> {
    let mut a: Vec<f64> = (0..r)
        .map(|_| rng.sample::<f64, _>(StandardNormal).abs() + 0.1)
        .collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

fn first_columns(q: &Matrix, r: usize) -> Matrix {
    let cols: Vec<Vec<f64>> = (0..r).map(|c| q.column(c)).collect();
    Matrix::from_columns(&cols).expect("r columns")
}

pub fn random_odeco_with<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &Shape,
    r: usize,
) -> Result<OdecoRep> {
    let max = *shape.dims().iter().min().expect("non-empty shape");
    if r == 0 || r > max {
        return Err(Error::RankTooLarge { rank: r, max });
    }
    let alphas = random_weights(rng, r);
    let factors = shape
        .dims()
        .iter()
        .map(|&n| first_columns(&random_orthogonal_with(rng, n), r))
        .collect();
    make_odeco(alphas, factors, shape.clone())
}

/// Random odeco tensor: weights are sorted `|N(0,1)| + 0.1`, factors the
/// first `r` columns of Haar orthogonal matrices.
pub fn random_odeco(shape: &Shape, r: usize, seed: u64) -> Result<OdecoRep> {
    random_odeco_with(&mut stream_rng(seed, 0), shape, r)
}

pub fn random_symmetric_odeco_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    order: usize,
    r: usize,
) -> Result<OdecoRep> {
    let shape = Shape::cubic(n, order)?;
    if r == 0 || r > n {
        return Err(Error::RankTooLarge { rank: r, max: n });
    }
    let alphas = random_weights(rng, r);
    let shared = first_columns(&random_orthogonal_with(rng, n), r);
    make_odeco(alphas, vec![shared; order], shape)
}

/// Odeco tensor sharing one factor across all modes, hence symmetric.
pub fn random_symmetric_odeco(n: usize, order: usize, r: usize, seed: u64) -> Result<OdecoRep> {
    random_symmetric_odeco_with(&mut stream_rng(seed, 0), n, order, r)
}

/// Odeco representation of a matrix (`D = 2`) from its SVD, keeping the
/// nonzero singular triplets.
pub fn odeco_from_matrix(m: &Matrix) -> Result<OdecoRep> {
    let res = svd(m)?;
    let scale = res.singular_values.first().copied().unwrap_or(0.0);
    let r = res
        .singular_values
        .iter()
        .take_while(|&&s| s > 1e-14 * scale)
        .count();
    let left: Vec<Vec<f64>> = (0..r).map(|c| res.u.column(c)).collect();
    let right: Vec<Vec<f64>> = (0..r).map(|c| res.vt.row(c).to_vec()).collect();
    make_odeco(
        res.singular_values[..r].to_vec(),
        vec![Matrix::from_columns(&left)?, Matrix::from_columns(&right)?],
        Shape::new(vec![m.rows(), m.cols()])?,
    )
}
