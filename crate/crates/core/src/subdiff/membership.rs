//! Tensor subgradients at odeco points and their certification.

use rand::Rng;
use rayon::prelude::*;

use super::tuple::{dual_vector_maximizer, DualExponents};
use crate::error::{Error, Result};
use crate::linalg::random_orthogonal_with;
use crate::odeco::{random_odeco_with, to_dense, weighted_sum, OdecoRep};
use crate::random::{gaussian_tensor_with, random_symmetric_with, stream_rng};
use crate::spectral::{all_mode_spectra, schatten_from_spectra, ModeSpectra, SchattenParams};
use crate::tensor::{inner, multi_mode_mul, DenseTensor};
use crate::vonneumann::vn_from_spectra;

/// Weights `τ = λ·D^{1/q}·v*` of the canonical subgradient, where `v*` is
/// the dual maximizer of the weights of `x`.
pub fn subgrad_weights(x: &OdecoRep, params: &SchattenParams) -> Result<Vec<f64>> {
    let v = dual_vector_maximizer(x.alphas(), params.p())?.vector;
    let c = params.lambda() * (x.shape().order() as f64).powf(1.0 / params.q());
    Ok(v.into_iter().map(|t| c * t).collect())
}

/// Canonical subgradient `Σ_i τ_i · u_i¹ ⊗ ⋯ ⊗ u_i^D` of the Schatten-(p,q)
/// norm at an odeco tensor, built on the frame of `x`.
pub fn subgrad_schatten(x: &OdecoRep, params: &SchattenParams) -> Result<DenseTensor> {
    Ok(weighted_sum(x, &subgrad_weights(x, params)?))
}

pub(crate) fn dual_value_from_spectra(spectra: &ModeSpectra, params: &SchattenParams) -> f64 {
    DualExponents::of(params).mixed_norm(&spectra.per_mode)
        / (params.lambda() * spectra.order() as f64)
}

/// `B_{p*,q*}(σ(Y)) / (λD)`. A value `≤ 1` implies `Y` lies in the dual unit
/// ball of the norm; the bound is attained when `Y` is odeco.
pub fn dual_norm_value(y: &DenseTensor, params: &SchattenParams) -> Result<f64> {
    Ok(dual_value_from_spectra(&all_mode_spectra(y)?, params))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    /// Von Neumann equality or the pairing identity fails; `Y` is not a
    /// subgradient.
    RejectedExact,
    /// Only the dual bound fails. The bound is sufficient, not necessary, so
    /// `Y` may still be a subgradient.
    RejectedConservative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipCertificate {
    /// `⟨σ^(d)(X), σ^(d)(Y)⟩ − ⟨X, Y⟩` per mode.
    pub vn_gaps: Vec<f64>,
    /// `|⟨X, Y⟩ − N(X)|`.
    pub pairing_residual: f64,
    pub dual_norm_value: f64,
    pub norm_value: f64,
    /// `‖X‖_F·‖Y‖_F`; gaps and the pairing residual are compared against
    /// `tol·scale`.
    pub scale: f64,
    pub tol: f64,
    pub accepted: bool,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Tests `Y ∈ ∂N(X)`: Von Neumann equality in every mode, `⟨X,Y⟩ = N(X)`,
/// and the dual bound `dual_norm_value(Y) ≤ 1 + tol`.
pub fn check_membership(
    x: &DenseTensor,
    y: &DenseTensor,
    params: &SchattenParams,
    tol: f64,
) -> Result<MembershipCertificate> {
    let ip = inner(x, y)?;
    let sx = all_mode_spectra(x)?;
    let sy = all_mode_spectra(y)?;
    let scale = x.frobenius() * y.frobenius();
    let vn = vn_from_spectra(ip, scale, &sx, &sy, tol);
    let norm_value = schatten_from_spectra(&sx, params);
    let pairing_residual = (ip - norm_value).abs();
    let dual = dual_value_from_spectra(&sy, params);

    let max_gap = vn.per_mode_gap.iter().copied().fold(f64::MIN, f64::max);
    let vn_ok = max_gap <= tol * scale;
    let pairing_ok = pairing_residual <= tol * scale;
    let dual_ok = dual <= 1.0 + tol;
    let verdict = if !(vn_ok && pairing_ok) {
        Verdict::RejectedExact
    } else if !dual_ok {
        Verdict::RejectedConservative
    } else {
        Verdict::Accepted
    };
    let mut notes = vec![
        format!(
            "von Neumann equality: {} (max gap {max_gap:.3e})",
            pass(vn_ok)
        ),
        format!(
            "pairing <X,Y> = N(X): {} (residual {pairing_residual:.3e})",
            pass(pairing_ok)
        ),
        format!("dual bound <= 1: {} (value {dual:.6})", pass(dual_ok)),
    ];
    if verdict == Verdict::RejectedConservative {
        notes.push(
            "dual bound is sufficient but not necessary; rejection may be conservative".into(),
        );
    }
    Ok(MembershipCertificate {
        vn_gaps: vn.per_mode_gap,
        pairing_residual,
        dual_norm_value: dual,
        norm_value,
        scale,
        tol,
        accepted: verdict == Verdict::Accepted,
        verdict,
        notes,
    })
}

const TRIAL_KINDS: u64 = 8;

fn unit_gaussian<R: Rng + ?Sized>(rng: &mut R, x: &DenseTensor) -> DenseTensor {
    let g = gaussian_tensor_with(rng, x.shape());
    let n = g.frobenius();
    if n > 0.0 {
        g.scale(1.0 / n)
    } else {
        g
    }
}

/// Trial point `trial` for the sampling oracle. Kinds cycle through
/// Gaussian, `c·X`, rotated `X`, `X` plus small noise, symmetric Gaussian,
/// random odeco, `X` plus large noise, and zero.
fn trial_tensor(x: &DenseTensor, size: f64, trial: u64, seed: u64) -> Result<DenseTensor> {
    let mut rng = stream_rng(seed, trial);
    let magnitude = size * rng.random_range(0.05..3.0);
    let y = match trial % TRIAL_KINDS {
        0 => unit_gaussian(&mut rng, x).scale(magnitude),
        1 => x.scale(rng.random_range(0.0..3.0)),
        2 => {
            let frames: Vec<_> = x
                .shape()
                .dims()
                .iter()
                .map(|&n| random_orthogonal_with(&mut rng, n))
                .collect();
            multi_mode_mul(x, &frames)?.scale(rng.random_range(0.2..2.0))
        }
        3 => x.axpy(1e-3 * size, &unit_gaussian(&mut rng, x))?,
        4 if x.shape().is_cubic() => {
            let s = random_symmetric_with(&mut rng, x.shape().dims()[0], x.order())?;
            let n = s.frobenius().max(f64::MIN_POSITIVE);
            s.scale(magnitude / n)
        }
        4 => unit_gaussian(&mut rng, x).scale(magnitude),
        5 => {
            let max = *x.shape().dims().iter().min().expect("non-empty shape");
            let r = rng.random_range(1..=max);
            let o = to_dense(&random_odeco_with(&mut rng, x.shape(), r)?);
            o.scale(magnitude / o.frobenius())
        }
        6 => x.axpy(0.3 * size, &unit_gaussian(&mut rng, x))?,
        _ => DenseTensor::zeros(x.shape().clone()),
    };
    Ok(y)
}

/// Minimum of `N(Y) − N(X) − ⟨G, Y − X⟩` over seeded trial points `Y`.
/// Nonnegative (up to rounding) exactly when the sampled points do not
/// refute `G ∈ ∂N(X)`.
pub fn subgradient_inequality_test(
    x: &DenseTensor,
    g: &DenseTensor,
    params: &SchattenParams,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let cases = [(g.clone(), *params)];
    Ok(subgradient_inequality_test_multi(x, &cases, trials, seed)?[0])
}

/// [`subgradient_inequality_test`] for several `(G, params)` pairs sharing
/// the same trial points. Trials run in parallel; each draws from its own
/// stream of `seed`, so the result does not depend on scheduling.
pub fn subgradient_inequality_test_multi(
    x: &DenseTensor,
    cases: &[(DenseTensor, SchattenParams)],
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let sx = all_mode_spectra(x)?;
    let base = cases
        .iter()
        .map(|(g, params)| Ok((schatten_from_spectra(&sx, params), inner(g, x)?)))
        .collect::<Result<Vec<_>>>()?;
    let size = match x.frobenius() {
        n if n > 0.0 => n,
        _ => 1.0,
    };
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let y = trial_tensor(x, size, t, seed)?;
            let sy = all_mode_spectra(&y)?;
            cases
                .iter()
                .zip(&base)
                .map(|((g, params), &(nx, gx))| {
                    Ok(schatten_from_spectra(&sy, params) - nx - (inner(g, &y)? - gx))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .try_reduce(
            || vec![f64::INFINITY; cases.len()],
            |a, b| Ok(a.iter().zip(&b).map(|(u, v)| u.min(*v)).collect()),
        )
}
