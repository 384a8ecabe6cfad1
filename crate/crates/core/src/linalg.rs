//! Dense SVD and orthogonality helpers.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration that orthogonalizes the
//! rows of the wide orientation of the input. It is accurate to high relative
//! precision on the small matrices produced by tensor unfoldings and needs no
//! external LAPACK.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 60;

/// Full SVD `M = U · Σ · Vt` with square orthogonal `U` (m×m) and `Vt` (n×n).
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Matrix,
    /// Length `min(m, n)`, descending, nonnegative.
    pub singular_values: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    /// `U · Σ · Vt`.
    pub fn reconstruct(&self) -> Matrix {
        let (m, n) = (self.u.rows(), self.vt.rows());
        let mut us = self.u.clone();
        for r in 0..m {
            for c in 0..m {
                let s = self.singular_values.get(c).copied().unwrap_or(0.0);
                us.set(r, c, us.get(r, c) * s);
            }
        }
        // U·Σ is m×m with zero columns past min(m,n); pad Σ to m×n implicitly.
        let mut out = vec![0.0; m * n];
        let k = self.singular_values.len();
        for r in 0..m {
            for c in 0..k {
                let a = us.get(r, c);
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out[r * n..(r + 1) * n].iter_mut().zip(self.vt.row(c)) {
                    *o += a * b;
                }
            }
        }
        Matrix::from_raw(m, n, out)
    }
}

/// One-sided Jacobi on the rows of a row-major `k × len` block. On return the
/// rows are mutually orthogonal (relative criterion); if `rot` is given it is
/// updated so that `a_out = rot · a_in` when it starts as the identity.
fn jacobi_rows(a: &mut [f64], k: usize, len: usize, mut rot: Option<&mut [f64]>) -> Result<()> {
    if k < 2 {
        return Ok(());
    }
    let total: f64 = dot(a, a).sqrt();
    if total == 0.0 {
        return Ok(());
    }
    let tol = f64::EPSILON * (len as f64).sqrt();
    let negligible = (k.max(len) as f64) * f64::EPSILON * total;
    let negligible_sq = negligible * negligible;
    let mut norms: Vec<f64> = (0..k)
        .map(|i| dot(&a[i * len..(i + 1) * len], &a[i * len..(i + 1) * len]))
        .collect();

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k - 1 {
            for j in i + 1..k {
                let (alpha, beta) = (norms[i], norms[j]);
                if alpha <= negligible_sq || beta <= negligible_sq {
                    continue;
                }
                let (head, tail) = a.split_at_mut(j * len);
                let ai = &mut head[i * len..(i + 1) * len];
                let aj = &mut tail[..len];
                let gamma = dot(ai, aj);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(ai, aj, c, s);
                norms[i] = dot(ai, ai);
                norms[j] = dot(aj, aj);
                if let Some(r) = rot.as_deref_mut() {
                    let (rh, rt) = r.split_at_mut(j * k);
                    rotate(&mut rh[i * k..(i + 1) * k], &mut rt[..k], c, s);
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    // report the worst remaining relative off-diagonal
    let mut residual: f64 = 0.0;
    for i in 0..k - 1 {
        for j in i + 1..k {
            let (alpha, beta) = (norms[i], norms[j]);
            if alpha <= negligible_sq || beta <= negligible_sq {
                continue;
            }
            let gamma = dot(&a[i * len..(i + 1) * len], &a[j * len..(j + 1) * len]);
            residual = residual.max(gamma.abs() / (alpha * beta).sqrt());
        }
    }
    Err(Error::SvdNoConvergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (p, q) = (*a, *b);
        *a = c * p - s * q;
        *b = s * p + c * q;
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Orthogonalizes the rows of the wide matrix `a` (`k ≤ len`). Returns the
/// accumulated rotation `R` (k×k, rows sorted), the row norms (descending)
/// and the normalized rows (`None` where the row is negligible).
struct RowDecomposition {
    rot: Vec<Vec<f64>>,
    norms: Vec<f64>,
    directions: Vec<Option<Vec<f64>>>,
}

fn decompose_rows(mut a: Vec<f64>, k: usize, len: usize) -> Result<RowDecomposition> {
    let mut rot = vec![0.0; k * k];
    for i in 0..k {
        rot[i * k + i] = 1.0;
    }
    let total = dot(&a, &a).sqrt();
    jacobi_rows(&mut a, k, len, Some(&mut rot))?;
    let norms: Vec<f64> = (0..k)
        .map(|i| dot(&a[i * len..(i + 1) * len], &a[i * len..(i + 1) * len]).sqrt())
        .collect();
    let negligible = (k.max(len) as f64) * f64::EPSILON * total;
    let order = descending_order(&norms);
    let mut out = RowDecomposition {
        rot: Vec::with_capacity(k),
        norms: Vec::with_capacity(k),
        directions: Vec::with_capacity(k),
    };
    for &i in &order {
        out.rot.push(rot[i * k..(i + 1) * k].to_vec());
        out.norms.push(norms[i]);
        out.directions.push(if norms[i] > negligible {
            Some(
                a[i * len..(i + 1) * len]
                    .iter()
                    .map(|x| x / norms[i])
                    .collect(),
            )
        } else {
            None
        });
    }
    Ok(out)
}

/// Fills the `None` slots of `vectors` (length-`n` unit vectors) and appends
/// more until there are `n`, producing an orthonormal basis whose given
/// entries are kept verbatim.
fn fill_basis(vectors: Vec<Option<Vec<f64>>>, n: usize) -> Vec<Vec<f64>> {
    let known: Vec<Vec<f64>> = vectors.iter().flatten().cloned().collect();
    let mut extra = complete_orthonormal(&known, n)
        .into_iter()
        .skip(known.len());
    let mut out: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|v| v.unwrap_or_else(|| extra.next().expect("enough complement vectors")))
        .collect();
    out.extend(extra);
    out
}

/// Singular value decomposition by one-sided Jacobi.
///
/// Singular values come out descending (stable order for ties) and each left
/// singular vector is signed so that its first entry above `1e-12` in
/// magnitude is positive.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    let (rows, cols) = (m.rows(), m.cols());
    let wide = rows <= cols;
    let (k, len, data) = if wide {
        (rows, cols, m.data().to_vec())
    } else {
        (cols, rows, m.transpose().into_data())
    };
    let dec = decompose_rows(data, k, len)?;
    // wide: M = Rᵀ·diag(σ)·W with W the normalized rows, so U = Rᵀ, Vt = W.
    // tall: Mᵀ = Rᵀ·diag(σ)·W, so U = Wᵀ and Vt = R.
    let short_side: Vec<Vec<f64>> = dec.rot;
    let long_side = fill_basis(dec.directions, len);
    let (mut u_cols, mut vt_rows) = if wide {
        (short_side, long_side)
    } else {
        (long_side, short_side)
    };
    for (i, col) in u_cols.iter_mut().enumerate() {
        let first = col.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(0.0);
        if first < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
            if i < k {
                vt_rows[i].iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let u = Matrix::from_columns(&u_cols)?;
    let vt = Matrix::from_raw(cols, cols, vt_rows.concat());
    Ok(SvdResult {
        u,
        singular_values: dec.norms,
        vt,
    })
}

/// Singular values only, descending, length `min(m, n)`.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if m.rows() <= m.cols() {
        singular_values_of_rows(m.data().to_vec(), m.rows(), m.cols())
    } else {
        singular_values_of_rows(m.transpose().into_data(), m.cols(), m.rows())
    }
}

/// Singular values of a row-major `k × len` block with `k ≤ len`.
pub(crate) fn singular_values_of_rows(mut a: Vec<f64>, k: usize, len: usize) -> Result<Vec<f64>> {
    jacobi_rows(&mut a, k, len, None)?;
    let mut s: Vec<f64> = (0..k)
        .map(|i| dot(&a[i * len..(i + 1) * len], &a[i * len..(i + 1) * len]).sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `‖M·Mᵀ − I‖_F ≤ tol` for square `M`.
pub fn is_orthogonal(m: &Matrix, tol: f64) -> Result<bool> {
    Ok(orthogonality_defect(m)? <= tol)
}

/// `‖M·Mᵀ − I‖_F` for square `M`.
pub fn orthogonality_defect(m: &Matrix) -> Result<f64> {
    if m.rows() != m.cols() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(m.gram_rows().sub(&Matrix::identity(m.rows()))?.frobenius())
}

/// Largest entry of `|Mᵀ·M − I|` for a matrix that should have orthonormal
/// columns.
pub fn column_orthonormality_defect(m: &Matrix) -> f64 {
    m.transpose()
        .gram_rows()
        .sub(&Matrix::identity(m.cols()))
        .expect("square")
        .max_abs()
}

/// Householder reflectors of a column set: reflector `j` acts on entries
/// `j..n` and is stored as `(v, beta)` with `H = I − beta·v·vᵀ`.
fn householder_reflectors(columns: &[Vec<f64>], n: usize) -> (Vec<(Vec<f64>, f64)>, Vec<f64>) {
    let mut work: Vec<Vec<f64>> = columns.to_vec();
    let mut reflectors = Vec::with_capacity(columns.len());
    let mut diag = Vec::with_capacity(columns.len());
    for j in 0..columns.len().min(n) {
        let x = &work[j][j..];
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            reflectors.push((vec![0.0; n - j], 0.0));
            diag.push(0.0);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
        for col in work.iter_mut().skip(j) {
            let seg = &mut col[j..];
            let f = beta * dot(&v, seg);
            seg.iter_mut().zip(&v).for_each(|(s, vi)| *s -= f * vi);
        }
        reflectors.push((v, beta));
        diag.push(alpha);
    }
    (reflectors, diag)
}

/// `H_0 ⋯ H_{k−1} · e_c`.
fn apply_reflectors(reflectors: &[(Vec<f64>, f64)], mut x: Vec<f64>) -> Vec<f64> {
    for (j, (v, beta)) in reflectors.iter().enumerate().rev() {
        let seg = &mut x[j..];
        let f = beta * dot(v, seg);
        seg.iter_mut().zip(v).for_each(|(s, vi)| *s -= f * vi);
    }
    x
}

/// Extends orthonormal vectors in `R^n` to an orthonormal basis via
/// Householder QR. The given vectors are returned first, unchanged.
pub fn complete_orthonormal(columns: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    assert!(columns.len() <= n, "more vectors than dimensions");
    let (reflectors, _) = householder_reflectors(columns, n);
    let mut out = columns.to_vec();
    for c in columns.len()..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        out.push(apply_reflectors(&reflectors, e));
    }
    out
}

/// Haar-distributed orthogonal matrix from a seeded Gaussian sample.
pub fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    random_orthogonal_with(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Haar orthogonal matrix drawn from `rng`: Householder QR of a Gaussian
/// matrix with the signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    assert!(n > 0, "dimension must be positive");
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let (reflectors, diag) = householder_reflectors(&columns, n);
    let q_cols: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            let col = apply_reflectors(&reflectors, e);
            if diag[c] < 0.0 {
                col.into_iter().map(|x| -x).collect()
            } else {
                col
            }
        })
        .collect();
    Matrix::from_columns(&q_cols).expect("well-formed columns")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::new(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| rng.sample(StandardNormal))
                .collect(),
        )
        .unwrap()
    }

    fn check_invariants(m: &Matrix, res: &SvdResult) {
        assert!(is_orthogonal(&res.u, 1e-12).unwrap(), "U not orthogonal");
        assert!(is_orthogonal(&res.vt, 1e-12).unwrap(), "Vt not orthogonal");
        let err = res.reconstruct().sub(m).unwrap().frobenius();
        assert!(
            err <= 1e-10 * m.frobenius().max(f64::MIN_POSITIVE),
            "reconstruction {err:e}"
        );
        assert!(res.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(res.singular_values.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn diagonal_matrix() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let res = svd(&m).unwrap();
        assert_eq!(res.singular_values, vec![3.0, 1.0]);
        assert_eq!(res.u, Matrix::identity(2));
        assert_eq!(res.vt, Matrix::identity(2));
    }

    #[test]
    fn zero_matrix() {
        let m = Matrix::zeros(2, 3);
        let res = svd(&m).unwrap();
        assert_eq!(res.singular_values, vec![0.0, 0.0]);
        check_invariants(&m, &res);
    }

    #[test]
    fn random_wide_and_tall() {
        for (seed, (r, c)) in [(4, 7), (7, 4), (1, 5), (5, 1), (6, 6), (3, 12)]
            .into_iter()
            .enumerate()
        {
            let m = gaussian(r, c, seed as u64);
            let res = svd(&m).unwrap();
            check_invariants(&m, &res);
            let fro2: f64 = res.singular_values.iter().map(|s| s * s).sum();
            assert!((fro2 - m.frobenius().powi(2)).abs() <= 1e-10 * fro2);
            let st = singular_values(&m.transpose()).unwrap();
            for (a, b) in st.iter().zip(&res.singular_values) {
                assert!((a - b).abs() <= 1e-10 * res.singular_values[0]);
            }
        }
    }

    #[test]
    fn rank_deficient_needs_completion() {
        // rank one 4x3 matrix
        let u = [1.0, 2.0, -1.0, 0.5];
        let v = [0.3, -2.0, 1.0];
        let data: Vec<f64> = u
            .iter()
            .flat_map(|a| v.iter().map(move |b| a * b))
            .collect();
        let m = Matrix::new(4, 3, data).unwrap();
        let res = svd(&m).unwrap();
        check_invariants(&m, &res);
        assert!(res.singular_values[1] < 1e-14 * res.singular_values[0]);
    }

    #[test]
    fn sign_convention_and_determinism() {
        let m = gaussian(3, 5, 11);
        let a = svd(&m).unwrap();
        let b = svd(&m).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.vt, b.vt);
        for c in 0..3 {
            let col = a.u.column(c);
            let first = col.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn orthogonality_examples() {
        assert!(is_orthogonal(&Matrix::identity(3), 1e-15).unwrap());
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = Matrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        assert!(is_orthogonal(&r, 1e-12).unwrap());
        let shear = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(!is_orthogonal(&shear, 1e-6).unwrap());
        assert!(matches!(
            is_orthogonal(&Matrix::zeros(2, 3), 1.0),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn random_orthogonal_contract() {
        let one = random_orthogonal(1, 5);
        assert_eq!(one.get(0, 0).abs(), 1.0);
        for n in 1..8 {
            let q = random_orthogonal(n, n as u64);
            assert!(is_orthogonal(&q, 1e-12).unwrap());
        }
        assert_eq!(random_orthogonal(5, 42), random_orthogonal(5, 42));
        assert_ne!(random_orthogonal(5, 42), random_orthogonal(5, 43));
    }

    #[test]
    fn completion_keeps_given_vectors() {
        let q = random_orthogonal(5, 3);
        let given: Vec<Vec<f64>> = (0..2).map(|c| q.column(c)).collect();
        let basis = complete_orthonormal(&given, 5);
        assert_eq!(&basis[..2], &given[..]);
        let m = Matrix::from_columns(&basis).unwrap();
        assert!(is_orthogonal(&m, 1e-13).unwrap());
        let empty = complete_orthonormal(&[], 3);
        assert!(is_orthogonal(&Matrix::from_columns(&empty).unwrap(), 1e-15).unwrap());
    }
}
