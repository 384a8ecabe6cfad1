//! The tuple function `f(s_1,…,s_D) = λ·(Σ_d ‖s_d‖_p^q)^{1/q}` and its
//! subdifferential.

use crate::error::{Error, Result};
use crate::matrix::dot;
use crate::norms::{conjugate_exponent, lp_norm, mixed_norm};
use crate::spectral::{ModeSpectra, SchattenParams};

/// Relative slack on the dual-ball boundary in [`conjugate_value_tuple`].
const BOUNDARY_TOL: f64 = 1e-12;

/// Hölder conjugates `p* = p/(p−1)` and `q* = q/(q−1)` (`1 ↦ ∞`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualExponents {
    pub p_star: f64,
    pub q_star: f64,
}

impl DualExponents {
    pub fn of(params: &SchattenParams) -> Self {
        Self {
            p_star: conjugate_exponent(params.p()),
            q_star: conjugate_exponent(params.q()),
        }
    }

    /// `(Σ_d ‖g_d‖_{p*}^{q*})^{1/q*}`, a max over `d` when `q* = ∞`.
    pub fn mixed_norm(&self, blocks: &[Vec<f64>]) -> f64 {
        mixed_norm(blocks, self.p_star, self.q_star)
    }
}

/// Which unit-`p*` vectors besides the canonical one also maximize
/// `⟨v, s⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum Admissible {
    /// The maximizer is unique.
    Unique,
    /// `p = 1`: the listed (0-based) coordinates, where `s_j = 0`, may take
    /// any value in `[−1, 1]`.
    FreeCoordinates(Vec<usize>),
    /// `s = 0`: every vector of the unit `p*` ball is admissible.
    AnyUnitVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualMaximizer {
    pub vector: Vec<f64>,
    pub admissible: Admissible,
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "exponent must be in [1, ∞), got {p}"
        )))
    }
}

fn check_nonnegative(s: &[f64]) -> Result<()> {
    for (index, &value) in s.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite(index));
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    Ok(())
}

/// Maximizer of `⟨v, s⟩` over `‖v‖_{p*} = 1` for `s ≥ 0`.
///
/// For `p > 1` this is `v_j = (s_j/‖s‖_p)^{p−1}`. For `p = 1` the canonical
/// choice is the all-ones vector. For `s = 0` it is `e_1`.
pub fn dual_vector_maximizer(s: &[f64], p: f64) -> Result<DualMaximizer> {
    check_exponent(p)?;
    if s.is_empty() {
        return Err(Error::InvalidShape("empty vector".into()));
    }
    check_nonnegative(s)?;
    let norm = lp_norm(s, p);
    if norm == 0.0 {
        let mut vector = vec![0.0; s.len()];
        vector[0] = 1.0;
        return Ok(DualMaximizer {
            vector,
            admissible: Admissible::AnyUnitVector,
        });
    }
    if p == 1.0 {
        let free: Vec<usize> = (0..s.len()).filter(|&j| s[j] == 0.0).collect();
        return Ok(DualMaximizer {
            vector: vec![1.0; s.len()],
            admissible: if free.is_empty() {
                Admissible::Unique
            } else {
                Admissible::FreeCoordinates(free)
            },
        });
    }
    let vector = if p == 2.0 {
        s.iter().map(|x| x / norm).collect()
    } else {
        s.iter().map(|x| (x / norm).powf(p - 1.0)).collect()
    };
    Ok(DualMaximizer {
        vector,
        admissible: Admissible::Unique,
    })
}

/// `D` finite vectors, one per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTuple {
    modes: Vec<Vec<f64>>,
}

impl SpectralTuple {
    pub fn new(modes: Vec<Vec<f64>>) -> Result<Self> {
        if modes.is_empty() || modes.iter().any(Vec::is_empty) {
            return Err(Error::InvalidShape(
                "tuple needs at least one non-empty mode".into(),
            ));
        }
        let mut offset = 0;
        for m in &modes {
            if let Some(i) = m.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(offset + i));
            }
            offset += m.len();
        }
        Ok(Self { modes })
    }

    pub fn from_spectra(spectra: &ModeSpectra) -> Self {
        Self {
            modes: spectra.per_mode.clone(),
        }
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn order(&self) -> usize {
        self.modes.len()
    }

    pub fn scale(&self, c: f64) -> SpectralTuple {
        Self {
            modes: self
                .modes
                .iter()
                .map(|m| m.iter().map(|x| c * x).collect())
                .collect(),
        }
    }

    /// `Σ_d ⟨a_d, b_d⟩`.
    pub fn inner(&self, other: &SpectralTuple) -> Result<f64> {
        self.same_layout(other)?;
        Ok(self
            .modes
            .iter()
            .zip(&other.modes)
            .map(|(a, b)| dot(a, b))
            .sum())
    }

    fn same_layout(&self, other: &SpectralTuple) -> Result<()> {
        let lens = |t: &SpectralTuple| t.modes.iter().map(Vec::len).collect::<Vec<_>>();
        if lens(self) != lens(other) {
            return Err(Error::ShapeMismatch(format!(
                "tuple layouts {:?} vs {:?}",
                lens(self),
                lens(other)
            )));
        }
        Ok(())
    }

    fn check_nonnegative(&self) -> Result<()> {
        let mut offset = 0;
        for m in &self.modes {
            check_nonnegative(m).map_err(|e| match e {
                Error::NegativeEntry { index, value } => Error::NegativeEntry {
                    index: offset + index,
                    value,
                },
                other => other,
            })?;
            offset += m.len();
        }
        Ok(())
    }
}

/// `λ·(Σ_d ‖s_d‖_p^q)^{1/q}`.
pub fn schatten_value_tuple(t: &SpectralTuple, params: &SchattenParams) -> f64 {
    params.lambda() * mixed_norm(&t.modes, params.p(), params.q())
}

/// Canonical element `g_d = λ·w*_d·v*_d` of `∂f(t)` and the freedom around
/// it.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleSubgradient {
    pub canonical: SpectralTuple,
    /// Admissibility of each `v*_d`. A mode with `s_d = 0` reports
    /// [`Admissible::AnyUnitVector`]; its block may be any vector of the
    /// ball `λ·w*_d·B_{p*}` and is set to 0 canonically.
    pub per_mode: Vec<Admissible>,
    /// Admissibility of `w*`. [`Admissible::AnyUnitVector`] means `t = 0`
    /// and the whole dual ball `λ·B` is the subdifferential.
    pub weights: Admissible,
}

pub fn tuple_subgradient(t: &SpectralTuple, params: &SchattenParams) -> Result<TupleSubgradient> {
    t.check_nonnegative()?;
    let (p, q, lambda) = (params.p(), params.q(), params.lambda());
    let maximizers = t
        .modes
        .iter()
        .map(|s| dual_vector_maximizer(s, p))
        .collect::<Result<Vec<_>>>()?;
    let omega: Vec<f64> = t.modes.iter().map(|s| lp_norm(s, p)).collect();
    let w = dual_vector_maximizer(&omega, q)?;
    let modes = maximizers
        .iter()
        .zip(&omega)
        .zip(&w.vector)
        .map(|((m, &om), &wd)| {
            if om == 0.0 {
                vec![0.0; m.vector.len()]
            } else {
                m.vector.iter().map(|v| lambda * wd * v).collect()
            }
        })
        .collect();
    Ok(TupleSubgradient {
        canonical: SpectralTuple { modes },
        per_mode: maximizers.into_iter().map(|m| m.admissible).collect(),
        weights: w.admissible,
    })
}

/// `g ∈ ∂f(t)`: `⟨g, t⟩ = f(t)` within `tol·max(1, f(t))` and the mixed
/// dual norm of `g` is at most `λ(1 + tol)`.
pub fn tuple_membership(
    t: &SpectralTuple,
    g: &SpectralTuple,
    params: &SchattenParams,
    tol: f64,
) -> Result<bool> {
    t.check_nonnegative()?;
    let pairing = t.inner(g)?;
    let value = schatten_value_tuple(t, params);
    let dual = DualExponents::of(params).mixed_norm(&g.modes);
    Ok((pairing - value).abs() <= tol * value.max(1.0) && dual <= params.lambda() * (1.0 + tol))
}

/// Value of a norm's conjugate: the indicator of its dual unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjugateValue {
    Zero,
    Infinite,
}

impl ConjugateValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ConjugateValue::Zero => 0.0,
            ConjugateValue::Infinite => f64::INFINITY,
        }
    }
}

/// `f*(g)`: zero when the mixed dual norm of `g` is at most `λ`.
pub fn conjugate_value_tuple(g: &SpectralTuple, params: &SchattenParams) -> ConjugateValue {
    let dual = DualExponents::of(params).mixed_norm(&g.modes);
    if dual <= params.lambda() * (1.0 + BOUNDARY_TOL) {
        ConjugateValue::Zero
    } else {
        ConjugateValue::Infinite
    }
}
