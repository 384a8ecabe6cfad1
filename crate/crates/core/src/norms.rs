//! Vector ℓ_p and mixed ℓ_{p,q} norms with the `p = ∞` convention.

/// Hölder conjugate `p/(p−1)`, with `1 ↦ ∞` and `∞ ↦ 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `‖v‖_p` for `p ∈ [1, ∞]`, scaled internally to avoid overflow.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 || p.is_infinite() {
        return max;
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    if p == 2.0 {
        return max * v.iter().map(|x| (x / max).powi(2)).sum::<f64>().sqrt();
    }
    max * v
        .iter()
        .map(|x| (x.abs() / max).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `(Σ_d ‖v_d‖_p^q)^{1/q}`, i.e. the ℓ_q norm of the per-block ℓ_p norms.
pub fn mixed_norm(blocks: &[Vec<f64>], p: f64, q: f64) -> f64 {
    let inner: Vec<f64> = blocks.iter().map(|b| lp_norm(b, p)).collect();
    lp_norm(&inner, q)
}
