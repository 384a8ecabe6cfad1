//! HOSVD, mode spectra and Schatten-(p,q) tensor norms.
//!
//! The mode-`d` spectrum of `X` is the vector of singular values of the
//! unfolding `X_(d)`, sorted descending and zero-padded to length `n_d`. The
//! Schatten-(p,q) norm is `λ·(Σ_d ‖σ^(d)(X)‖_p^q)^{1/q}` on those raw spectra;
//! the nuclear norm is the case `p = q = 1`, `λ = 1/D`.

use crate::error::{Error, Result};
use crate::linalg::{self, singular_values_of_rows};
use crate::matrix::Matrix;
use crate::norms::mixed_norm;
use crate::tensor::{
    check_mode, matricize, multi_mode_mul, multi_mode_mul_transposed, DenseTensor,
};

/// Tucker form `X = core ×_1 U¹ ⋯ ×_D U^D` with square orthogonal factors
/// taken from the left singular vectors of each unfolding.
#[derive(Clone, Debug, PartialEq)]
pub struct Hosvd {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl Hosvd {
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        multi_mode_mul(&self.core, &self.factors)
    }
}

/// Per-mode spectra `σ^(1), …, σ^(D)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpectra {
    pub per_mode: Vec<Vec<f64>>,
}

impl ModeSpectra {
    pub fn order(&self) -> usize {
        self.per_mode.len()
    }

    /// Largest entrywise deviation between any mode spectrum and the first,
    /// compared over the common prefix length.
    pub fn max_cross_mode_deviation(&self) -> f64 {
        let first = &self.per_mode[0];
        self.per_mode
            .iter()
            .skip(1)
            .flat_map(|s| s.iter().zip(first).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// `σ_E(X) = (σ^(1), …, σ^(D)) / √D`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedSpectrum {
    pub per_mode: Vec<Vec<f64>>,
}

/// Exponents and scale of a Schatten-(p,q) norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchattenParams {
    p: f64,
    q: f64,
    lambda: f64,
}

impl SchattenParams {
    pub fn new(p: f64, q: f64, lambda: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must be in [1, ∞), got {p}"
            )));
        }
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "q must be in [1, ∞), got {q}"
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and positive, got {lambda}"
            )));
        }
        Ok(Self { p, q, lambda })
    }

    /// `p = q = 1`, `λ = 1/D`.
    pub fn nuclear(order: usize) -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            lambda: 1.0 / order as f64,
        }
    }

    /// Default scale: `1/D` for `p = q = 1`, otherwise 1.
    pub fn with_auto_lambda(p: f64, q: f64, order: usize) -> Result<Self> {
        let lambda = if p == 1.0 && q == 1.0 {
            1.0 / order as f64
        } else {
            1.0
        };
        Self::new(p, q, lambda)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.p, self.q, lambda)
    }
}

/// HOSVD of a dense tensor. Factors are the left singular matrices of the
/// unfoldings; the core is `X ×_1 U¹ᵀ ⋯ ×_D U^Dᵀ`.
pub fn hosvd(x: &DenseTensor) -> Result<Hosvd> {
    let factors = (1..=x.order())
        .map(|d| Ok(linalg::svd(&matricize(x, d)?)?.u))
        .collect::<Result<Vec<_>>>()?;
    let core = multi_mode_mul_transposed(x, &factors)?;
    Ok(Hosvd { core, factors })
}

/// Singular values of `X_(d)`, descending, zero-padded to `n_d`.
pub fn mode_spectrum(x: &DenseTensor, mode: usize) -> Result<Vec<f64>> {
    check_mode(mode, x.order())?;
    let unfolding = matricize(x, mode)?;
    let (n, cols) = (unfolding.rows(), unfolding.cols());
    let mut s = if n <= cols {
        singular_values_of_rows(unfolding.into_data(), n, cols)?
    } else {
        singular_values_of_rows(unfolding.transpose().into_data(), cols, n)?
    };
    s.resize(n, 0.0);
    Ok(s)
}

pub fn all_mode_spectra(x: &DenseTensor) -> Result<ModeSpectra> {
    let per_mode = (1..=x.order())
        .map(|d| mode_spectrum(x, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeSpectra { per_mode })
}

pub fn combined_from_spectra(spectra: &ModeSpectra) -> CombinedSpectrum {
    let c = 1.0 / (spectra.order() as f64).sqrt();
    CombinedSpectrum {
        per_mode: spectra
            .per_mode
            .iter()
            .map(|s| s.iter().map(|x| c * x).collect())
            .collect(),
    }
}

pub fn combined_spectrum(x: &DenseTensor) -> Result<CombinedSpectrum> {
    Ok(combined_from_spectra(&all_mode_spectra(x)?))
}

/// Schatten-(p,q) norm evaluated on precomputed mode spectra.
pub fn schatten_from_spectra(spectra: &ModeSpectra, params: &SchattenParams) -> f64 {
    params.lambda * mixed_norm(&spectra.per_mode, params.p, params.q)
}

pub fn schatten_norm(x: &DenseTensor, params: &SchattenParams) -> Result<f64> {
    Ok(schatten_from_spectra(&all_mode_spectra(x)?, params))
}

/// `(1/D)·Σ_d ‖σ^(d)(X)‖_1`.
pub fn nuclear_norm(x: &DenseTensor) -> Result<f64> {
    schatten_norm(x, &SchattenParams::nuclear(x.order()))
}

/// For each mode, the largest off-diagonal magnitude of `C_(d)·C_(d)ᵀ`
/// where `C` is the HOSVD core; zero for an exactly all-orthogonal core.
pub fn core_orthogonality_report(h: &Hosvd) -> Result<Vec<f64>> {
    (1..=h.core.order())
        .map(|d| {
            let g = matricize(&h.core, d)?.gram_rows();
            let n = g.rows();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        worst = worst.max(g.get(i, j).abs());
                    }
                }
            }
            Ok(worst)
        })
        .collect()
}
