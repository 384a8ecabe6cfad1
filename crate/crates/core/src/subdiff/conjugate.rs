//! Fenchel conjugate of the tensor norm: analytic value through the
//! combined spectrum, and a direct numerical search.

use rand::Rng;
use rand_distr::StandardNormal;

use super::tuple::{conjugate_value_tuple, ConjugateValue, SpectralTuple};
use crate::error::{Error, Result};
use crate::random::{gaussian_tensor_with, stream_rng};
use crate::spectral::{
    all_mode_spectra, combined_from_spectra, hosvd, schatten_norm, SchattenParams,
};
use crate::tensor::{inner, outer, DenseTensor};

/// Parameters of the tuple function `g` with `N = g ∘ σ_E`: same
/// exponents, scale `λ√D`.
pub fn matched_tuple_params(params: &SchattenParams, order: usize) -> SchattenParams {
    params
        .with_lambda(params.lambda() * (order as f64).sqrt())
        .expect("positive scale")
}

/// `N*(X) = g*(σ_E(X))`.
pub fn tensor_conjugate_value(x: &DenseTensor, params: &SchattenParams) -> Result<ConjugateValue> {
    let combined = combined_from_spectra(&all_mode_spectra(x)?);
    let t = SpectralTuple::new(combined.per_mode)?;
    Ok(conjugate_value_tuple(
        &t,
        &matched_tuple_params(params, x.order()),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateEstimate {
    /// Largest `⟨X,Y⟩ − N(Y)` seen, including `Y = 0`.
    pub max_sampled: f64,
    /// The `Y` attaining `max_sampled` (unit Frobenius norm unless zero).
    pub certificate: DenseTensor,
    pub evaluations: usize,
    pub analytic: ConjugateValue,
}

const INITIAL_STEP: f64 = 0.5;
const MIN_STEP: f64 = 1e-7;
/// Each climb may spend at most this fraction of the total budget.
const CLIMB_SHARE: usize = 10;

struct Search<'a> {
    x: &'a DenseTensor,
    params: &'a SchattenParams,
    budget: usize,
    stop_above: f64,
    evaluations: usize,
    best: f64,
    best_y: DenseTensor,
}

impl Search<'_> {
    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget || self.best >= self.stop_above
    }

    fn eval(&mut self, y: &DenseTensor) -> Result<f64> {
        self.evaluations += 1;
        let h = inner(self.x, y)? - schatten_norm(y, self.params)?;
        if h > self.best {
            self.best = h;
            self.best_y = y.clone();
        }
        Ok(h)
    }

    /// Hill climbing on the unit sphere from `start`, alternating
    /// coordinate and random directions and halving the step after a full
    /// round without progress.
    fn climb<R: Rng>(&mut self, start: DenseTensor, rng: &mut R) -> Result<()> {
        let n = start.frobenius();
        if n == 0.0 || self.exhausted() {
            return Ok(());
        }
        let stop = self.evaluations + (self.budget / CLIMB_SHARE).max(1);
        let mut y = start.scale(1.0 / n);
        let mut hy = self.eval(&y)?;
        let numel = y.data().len();
        let mut step = INITIAL_STEP;
        let mut fails = 0;
        let mut k = 0usize;
        while step > MIN_STEP && self.evaluations < stop && !self.exhausted() {
            let dir = if k.is_multiple_of(2) {
                let mut e = vec![0.0; numel];
                e[(k / 2) % numel] = 1.0;
                e
            } else {
                (0..numel)
                    .map(|_| rng.sample(StandardNormal))
                    .collect::<Vec<f64>>()
            };
            k += 1;
            let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let data: Vec<f64> = y
                    .data()
                    .iter()
                    .zip(&dir)
                    .map(|(a, d)| a + sign * step * d / dn)
                    .collect();
                let cand = DenseTensor::new(y.shape().clone(), data)?;
                let cn = cand.frobenius();
                if cn == 0.0 {
                    continue;
                }
                let cand = cand.scale(1.0 / cn);
                let hc = self.eval(&cand)?;
                if hc > hy {
                    y = cand;
                    hy = hc;
                    improved = true;
                    break;
                }
                if self.exhausted() {
                    break;
                }
            }
            if improved {
                fails = 0;
            } else {
                fails += 1;
                if fails >= 2 * numel {
                    step *= 0.5;
                    fails = 0;
                }
            }
        }
        Ok(())
    }
}

/// Numerical search for `sup_Y ⟨X,Y⟩ − N(Y)` over the unit sphere plus
/// `Y = 0`. Since the objective is positively homogeneous, a positive value
/// certifies `N*(X) = +∞`.
///
/// Starts are `X/‖X‖`, the rank-one tensor of the leading HOSVD vectors
/// (signed so that it pairs nonnegatively with `X`), and
/// then seeded Gaussian tensors until `budget` evaluations are spent.
pub fn estimate_tensor_conjugate(
    x: &DenseTensor,
    params: &SchattenParams,
    budget: usize,
    seed: u64,
) -> Result<ConjugateEstimate> {
    estimate_tensor_conjugate_until(x, params, budget, seed, f64::INFINITY)
}

/// [`estimate_tensor_conjugate`] that stops once a value of at least
/// `stop_above` is found.
pub fn estimate_tensor_conjugate_until(
    x: &DenseTensor,
    params: &SchattenParams,
    budget: usize,
    seed: u64,
    stop_above: f64,
) -> Result<ConjugateEstimate> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let analytic = tensor_conjugate_value(x, params)?;
    let mut search = Search {
        x,
        params,
        budget,
        stop_above,
        evaluations: 1,
        best: 0.0,
        best_y: DenseTensor::zeros(x.shape().clone()),
    };
    let mut rng = stream_rng(seed, 0);
    if x.frobenius() > 0.0 {
        search.climb(x.clone(), &mut rng)?;
        let h = hosvd(x)?;
        let leading: Vec<Vec<f64>> = h.factors.iter().map(|f| f.column(0)).collect();
        let rank_one = outer(&leading)?;
        let sign = if inner(x, &rank_one)? < 0.0 {
            -1.0
        } else {
            1.0
        };
        search.climb(rank_one.scale(sign), &mut rng)?;
    }
    while !search.exhausted() {
        let start = gaussian_tensor_with(&mut rng, x.shape());
        search.climb(start, &mut rng)?;
    }
    Ok(ConjugateEstimate {
        max_sampled: search.best,
        certificate: search.best_y,
        evaluations: search.evaluations,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odeco::{random_odeco, to_dense};
    use crate::subdiff::membership::dual_norm_value;
    use crate::tensor::Shape;

    #[test]
    fn zero_tensor() {
        let z = DenseTensor::zeros(Shape::cubic(2, 3).unwrap());
        let est = estimate_tensor_conjugate(&z, &SchattenParams::nuclear(3), 500, 0).unwrap();
        assert_eq!(est.max_sampled, 0.0);
        assert_eq!(est.certificate.max_abs(), 0.0);
        assert_eq!(est.analytic, ConjugateValue::Zero);
        assert!(est.evaluations >= 500);
    }

    #[test]
    fn analytic_value_agrees_with_dual_bound() {
        let rep = random_odeco(&Shape::cubic(3, 3).unwrap(), 3, 5).unwrap();
        let x = to_dense(&rep);
        for pr in [
            SchattenParams::nuclear(3),
            SchattenParams::new(3.0, 2.0, 1.0).unwrap(),
        ] {
            let v = dual_norm_value(&x, &pr).unwrap();
            assert_eq!(
                tensor_conjugate_value(&x.scale(0.99 / v), &pr).unwrap(),
                ConjugateValue::Zero
            );
            assert_eq!(
                tensor_conjugate_value(&x.scale(1.01 / v), &pr).unwrap(),
                ConjugateValue::Infinite
            );
        }
    }

    #[test]
    fn inside_and_outside_the_dual_ball() {
        let rep = random_odeco(&Shape::cubic(3, 3).unwrap(), 3, 6).unwrap();
        let x = to_dense(&rep);
        let pr = SchattenParams::new(2.0, 1.0, 1.0).unwrap();
        let v = dual_norm_value(&x, &pr).unwrap();
        let inside = estimate_tensor_conjugate(&x.scale(0.9 / v), &pr, 3000, 1).unwrap();
        assert!(inside.max_sampled <= 1e-6);
        let outside =
            estimate_tensor_conjugate_until(&x.scale(1.1 / v), &pr, 3000, 1, 1e-3).unwrap();
        assert!(outside.max_sampled >= 1e-3);
        assert!(outside.evaluations < 3000);
        let h = inner(&x.scale(1.1 / v), &outside.certificate).unwrap()
            - schatten_norm(&outside.certificate, &pr).unwrap();
        assert_eq!(h, outside.max_sampled);
    }

    #[test]
    fn deterministic() {
        let x = to_dense(&random_odeco(&Shape::cubic(2, 3).unwrap(), 2, 1).unwrap());
        let pr = SchattenParams::nuclear(3);
        let a = estimate_tensor_conjugate(&x, &pr, 400, 3).unwrap();
        let b = estimate_tensor_conjugate(&x, &pr, 400, 3).unwrap();
        assert_eq!(a, b);
        assert!(estimate_tensor_conjugate(&x, &pr, 0, 3).is_err());
    }
}
