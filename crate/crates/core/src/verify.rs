//! Batch verification of the library's numerical contracts.
//!
//! [`run_verification`] checks ten property suites on seeded random
//! instances and reports one entry per suite. Every suite draws from its
//! own random streams of the seed, so the report is a pure function of
//! `(seed, quick)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::io::{odeco_from_json, odeco_to_json, tensor_from_json, tensor_to_json, Sig17};
use crate::linalg::{orthogonality_defect, random_orthogonal_with};
use crate::matrix::{dot, Matrix};
use crate::norms::{conjugate_exponent, lp_norm};
use crate::odeco::{
    make_odeco, odeco_from_matrix, random_odeco_with, random_symmetric_odeco_with, to_dense,
    OdecoRep,
};
use crate::random::{gaussian_tensor_with, random_symmetric_with, stream_rng};
use crate::spectral::{
    all_mode_spectra, core_orthogonality_report, hosvd, nuclear_norm, schatten_norm, SchattenParams,
};
use crate::subdiff::{
    check_membership, dual_norm_value, dual_vector_maximizer, estimate_tensor_conjugate,
    estimate_tensor_conjugate_until, subgrad_schatten, subgradient_inequality_test,
    subgradient_inequality_test_multi,
};
use crate::tensor::{inner, matricize, multi_mode_mul, tensorize, DenseTensor, Shape};
use crate::vonneumann::{check_equality_via_structure, vn_report};

/// Outcome of one property suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed `value / limit` over the bounded checks.
    pub worst_ratio: Sig17,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub quick: bool,
    pub passed: usize,
    pub failed: usize,
    pub criteria: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    worst_ratio: f64,
    first_failure: Option<String>,
}

impl Tally {
    fn bound(&mut self, value: f64, limit: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        let ratio = if limit > 0.0 {
            value / limit
        } else if value > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio.is_nan() || ratio > self.worst_ratio {
            self.worst_ratio = ratio;
        }
        if value.is_nan() || value > limit {
            self.fail(what);
        }
    }

    fn flag(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.fail(what);
        }
    }

    fn fail(&mut self, what: impl FnOnce() -> String) {
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(what());
        }
    }

    fn error(&mut self, e: crate::error::Error) {
        self.checks += 1;
        self.fail(|| format!("error: {e}"));
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.failures += other.failures;
        if other.worst_ratio.is_nan() || other.worst_ratio > self.worst_ratio {
            self.worst_ratio = other.worst_ratio;
        }
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
        self
    }

    fn finish(self, id: usize, name: &'static str) -> CriterionResult {
        CriterionResult {
            id,
            name,
            passed: self.failures == 0 && self.checks > 0,
            checks: self.checks,
            failures: self.failures,
            worst_ratio: Sig17(self.worst_ratio),
            first_failure: self.first_failure,
        }
    }
}

/// Independent streams per suite and instance.
fn rng_for(seed: u64, suite: u64, instance: u64) -> ChaCha8Rng {
    stream_rng(
        seed.wrapping_add(suite.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        instance,
    )
}

fn run_instances<F>(suite: u64, seed: u64, count: usize, f: F) -> Tally
where
    F: Fn(&mut ChaCha8Rng, &mut Tally, usize) -> Result<()> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut tally = Tally::default();
            let mut rng = rng_for(seed, suite, i as u64);
            if let Err(e) = f(&mut rng, &mut tally, i) {
                tally.error(e);
            }
            tally
        })
        .reduce(Tally::default, Tally::merge)
}

fn random_shape<R: Rng + ?Sized>(rng: &mut R, order: usize, max: usize) -> Shape {
    Shape::new((0..order).map(|_| rng.random_range(1..=max)).collect()).expect("valid dims")
}

/// Shape with `D ∈ 2..=4` and every dimension in `1..=4`.
fn any_shape<R: Rng + ?Sized>(rng: &mut R) -> Shape {
    let order = rng.random_range(2..=4);
    random_shape(rng, order, 4)
}

fn gaussian_of_order<R: Rng + ?Sized>(rng: &mut R, order: usize) -> DenseTensor {
    let shape = random_shape(rng, order, 4);
    gaussian_tensor_with(rng, &shape)
}

/// Random odeco tensor on `shape` with rank uniform in `1..=min_d n_d`.
fn odeco_any_rank<R: Rng + ?Sized>(rng: &mut R, shape: &Shape) -> Result<OdecoRep> {
    let max = *shape.dims().iter().min().expect("non-empty shape");
    let r = rng.random_range(1..=max);
    random_odeco_with(rng, shape, r)
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let t = gaussian_tensor_with(rng, &Shape::new(vec![rows, cols]).expect("valid dims"));
    Matrix::new(rows, cols, t.into_data()).expect("finite")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// The five parameter families, with `λ = 1/D` for the `p = 1` ones.
pub fn standard_params(order: usize) -> Vec<SchattenParams> {
    let d = 1.0 / order as f64;
    [
        (1.0, 1.0, d),
        (2.0, 2.0, 1.0),
        (3.0, 2.0, 1.0),
        (2.0, 1.0, 1.0),
        (1.0, 2.0, d),
    ]
    .iter()
    .map(|&(p, q, l)| SchattenParams::new(p, q, l).expect("valid parameters"))
    .collect()
}

struct Sizes {
    adjoint_per_order: usize,
    hosvd: usize,
    spectra_each: usize,
    triples: usize,
    norm_instances: usize,
    vn_pairs: usize,
    vn_constructed: usize,
    maximizer_vectors: usize,
    subgrad_points: usize,
    subgrad_trials: usize,
    matrices: usize,
    conjugate_each: usize,
    conjugate_budget: usize,
    round_trips: usize,
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Self {
                adjoint_per_order: 20,
                hosvd: 40,
                spectra_each: 20,
                triples: 200,
                norm_instances: 20,
                vn_pairs: 1000,
                vn_constructed: 20,
                maximizer_vectors: 1,
                subgrad_points: 20,
                subgrad_trials: 1000,
                matrices: 10,
                conjugate_each: 4,
                conjugate_budget: 10_000,
                round_trips: 20,
            }
        } else {
            Self {
                adjoint_per_order: 100,
                hosvd: 200,
                spectra_each: 100,
                triples: 1000,
                norm_instances: 100,
                vn_pairs: 10_000,
                vn_constructed: 100,
                maximizer_vectors: 3,
                subgrad_points: 200,
                subgrad_trials: 10_000,
                matrices: 50,
                conjugate_each: 50,
                conjugate_budget: 100_000,
                round_trips: 100,
            }
        }
    }
}

fn adjointness(seed: u64, s: &Sizes) -> CriterionResult {
    let tally = run_instances(1, seed, 3 * s.adjoint_per_order, |rng, t, i| {
        let order = 2 + i % 3;
        let x = gaussian_of_order(rng, order);
        let d = rng.random_range(1..=order);
        let n = x.shape().dims()[d - 1];
        let m = random_matrix(rng, n, x.shape().unfolding_cols(d)?);
        let lhs = matricize(&x, d)?.inner(&m)?;
        let rhs = inner(&x, &tensorize(&m, d, x.shape())?)?;
        let scale = x.frobenius() * m.frobenius();
        t.bound((lhs - rhs).abs(), 1e-12 * scale, || {
            format!("adjoint gap {lhs} vs {rhs}")
        });
        let back = tensorize(&matricize(&x, d)?, d, x.shape())?;
        t.flag(back == x, || {
            format!("round trip changed a {:?} tensor", x.shape().dims())
        });
        Ok(())
    });
    tally.finish(1, "matricize/tensorize adjointness and round trip")
}

fn hosvd_suite(seed: u64, s: &Sizes) -> CriterionResult {
    let tally = run_instances(2, seed, s.hosvd, |rng, t, i| {
        let x = gaussian_of_order(rng, 2 + i % 3);
        let h = hosvd(&x)?;
        let fx = x.frobenius();
        let err = h.reconstruct()?.sub(&x)?.frobenius();
        t.bound(err, 1e-10 * fx, || format!("reconstruction error {err:e}"));
        for f in &h.factors {
            let dev = orthogonality_defect(f)?;
            t.bound(dev, 1e-12, || format!("factor orthogonality {dev:e}"));
        }
        for off in core_orthogonality_report(&h)? {
            t.bound(off, 1e-10 * fx * fx, || {
                format!("core off-diagonal {off:e}")
            });
        }
        Ok(())
    });
    tally.finish(
        2,
        "HOSVD reconstruction, orthogonality and all-orthogonal core",
    )
}

fn equal_spectra(seed: u64, s: &Sizes) -> CriterionResult {
    let tally = run_instances(3, seed, 2 * s.spectra_each, |rng, t, i| {
        let n = rng.random_range(2..=4);
        let order = rng.random_range(2..=4);
        let x = if i % 2 == 0 {
            random_symmetric_with(rng, n, order)?
        } else {
            let r = rng.random_range(1..=n);
            to_dense(&random_odeco_with(rng, &Shape::cubic(n, order)?, r)?)
        };
        let dev = all_mode_spectra(&x)?.max_cross_mode_deviation();
        t.bound(dev, 1e-10 * x.frobenius(), || {
            format!("cross-mode deviation {dev:e}")
        });
        Ok(())
    });
    tally.finish(3, "equal mode spectra for symmetric and odeco tensors")
}

fn random_params<R: Rng + ?Sized>(rng: &mut R) -> SchattenParams {
    let p = if rng.random_bool(0.25) {
        1.0
    } else {
        rng.random_range(1.0..4.0)
    };
    let q = if rng.random_bool(0.25) {
        1.0
    } else {
        rng.random_range(1.0..4.0)
    };
    SchattenParams::new(p, q, rng.random_range(0.1..2.0)).expect("valid parameters")
}

fn norm_identities(seed: u64, s: &Sizes) -> CriterionResult {
    let fro = run_instances(4, seed, s.norm_instances, |rng, t, i| {
        let order = 2 + i % 3;
        let x = gaussian_of_order(rng, order);
        let n = schatten_norm(&x, &SchattenParams::new(2.0, 2.0, 1.0)?)?;
        let expect = (order as f64).sqrt() * x.frobenius();
        t.bound(rel(n, expect), 1e-12, || {
            format!("Schatten-(2,2) {n} vs {expect}")
        });

        let shape = random_shape(rng, order, 4);
        let rep = odeco_any_rank(rng, &shape)?;
        let nuc = nuclear_norm(&to_dense(&rep))?;
        let sum: f64 = rep.alphas().iter().sum();
        t.bound(rel(nuc, sum), 1e-10, || {
            format!("odeco nuclear norm {nuc} vs {sum}")
        });
        Ok(())
    });
    let tri = run_instances(104, seed, s.triples, |rng, t, _| {
        let shape = any_shape(rng);
        let [x, y, z] = [(); 3].map(|_| gaussian_tensor_with(rng, &shape));
        let pr = random_params(rng);
        let a = schatten_norm(&x.sub(&z)?, &pr)?;
        let b = schatten_norm(&x.sub(&y)?, &pr)? + schatten_norm(&y.sub(&z)?, &pr)?;
        t.bound(a - b, 1e-10 * b.max(1.0), || {
            format!("triangle violated: {a} > {b} for {pr:?}")
        });
        Ok(())
    });
    fro.merge(tri)
        .finish(4, "norm identities and triangle inequality")
}

/// Pair sharing the frame of a random odeco `X`, with weights ordered like
/// those of `X`.
fn shared_frame_pair<R: Rng + ?Sized>(rng: &mut R) -> Result<(OdecoRep, OdecoRep)> {
    let order = rng.random_range(2..=4);
    let shape = random_shape(rng, order, 4);
    let rep = odeco_any_rank(rng, &shape)?;
    let mut beta: Vec<f64> = (0..rep.rank())
        .map(|_| rng.random_range(0.1..3.0))
        .collect();
    beta.sort_by(|a, b| b.total_cmp(a));
    let other = make_odeco(beta, rep.factors().to_vec(), shape)?;
    Ok((rep, other))
}

fn von_neumann(seed: u64, s: &Sizes) -> CriterionResult {
    let random = run_instances(5, seed, s.vn_pairs, |rng, t, _| {
        let shape = any_shape(rng);
        let x = gaussian_tensor_with(rng, &shape);
        let y = gaussian_tensor_with(rng, &shape);
        let r = vn_report(&x, &y, 1e-10)?;
        let worst = r.per_mode_gap.iter().copied().fold(f64::INFINITY, f64::min);
        t.bound(-worst, 1e-10 * r.scale, || {
            format!("negative gap {worst:e}")
        });
        Ok(())
    });
    let shared = run_instances(105, seed, s.vn_constructed, |rng, t, _| {
        let (a, b) = shared_frame_pair(rng)?;
        let (x, y) = (to_dense(&a), to_dense(&b));
        let s = check_equality_via_structure(&x, &y, &a.completed_factors(), 1e-9)?;
        t.flag(s.holds, || "shared-frame structure not detected".into());
        t.flag(s.vn.equality, || {
            "shared-frame pair without equality".into()
        });
        Ok(())
    });
    let rotated = run_instances(205, seed, s.vn_constructed, |rng, t, _| {
        // unit dimensions would let a rotation act as a sign flip only
        let order = rng.random_range(2..=4);
        let shape = Shape::new((0..order).map(|_| rng.random_range(2..=4)).collect())?;
        let x = to_dense(&odeco_any_rank(rng, &shape)?);
        let frames: Vec<Matrix> = shape
            .dims()
            .iter()
            .map(|&n| random_orthogonal_with(rng, n))
            .collect();
        let y = multi_mode_mul(&x, &frames)?;
        t.flag(!vn_report(&x, &y, 1e-8)?.equality, || {
            "rotated pair reported equality".into()
        });
        Ok(())
    });
    random
        .merge(shared)
        .merge(rotated)
        .finish(5, "Von Neumann inequality and equality structure")
}

/// Best `⟨v, s⟩` over a grid of the nonnegative part of the unit
/// `p*`-sphere: all but one coordinate range over multiples of `step` in
/// `[0, 1]` and the remaining one is solved for, for every choice of the
/// solved coordinate.
fn grid_dual_value(s: &[f64], p: f64, step: f64) -> f64 {
    let ps = conjugate_exponent(p);
    let m = (1.0 / step).round() as usize;
    let n = s.len();
    let mut best = f64::MIN;
    let mut idx = vec![0usize; n - 1];
    let mut v = vec![0.0; n];
    for solved in 0..n {
        idx.iter_mut().for_each(|k| *k = 0);
        loop {
            let mut others = idx.iter().map(|&k| k as f64 / m as f64);
            let mut mass = 0.0;
            for (j, slot) in v.iter_mut().enumerate() {
                if j != solved {
                    let x = others.next().expect("n − 1 coordinates");
                    *slot = x;
                    mass += x.powf(ps);
                }
            }
            let feasible = if ps.is_infinite() {
                v[solved] = 1.0;
                true
            } else if mass <= 1.0 {
                v[solved] = (1.0 - mass).powf(1.0 / ps);
                true
            } else {
                false
            };
            if feasible {
                best = best.max(dot(&v, s));
            }
            // odometer over the grid coordinates
            let mut pos = 0;
            while pos < idx.len() && idx[pos] == m {
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
            idx[pos] += 1;
        }
    }
    best
}

fn dual_maximizer_suite(seed: u64, s: &Sizes) -> CriterionResult {
    let mut tally = Tally::default();
    let mut rng = rng_for(seed, 6, 0);
    for n in [2, 3] {
        for p in [1.0, 1.5, 2.0, 3.0] {
            for _ in 0..s.maximizer_vectors {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
                match dual_vector_maximizer(&v, p) {
                    Ok(m) => {
                        let got = dot(&m.vector, &v);
                        let grid = grid_dual_value(&v, p, 1e-3);
                        t_bound_pair(&mut tally, got, grid, &v, p);
                        let unit = lp_norm(&m.vector, conjugate_exponent(p));
                        tally.bound((unit - 1.0).abs(), 1e-12, || {
                            format!("‖v*‖ = {unit} for p = {p}")
                        });
                    }
                    Err(e) => tally.error(e),
                }
            }
        }
    }
    tally.finish(6, "dual maximizer against a grid search")
}

fn t_bound_pair(t: &mut Tally, got: f64, grid: f64, v: &[f64], p: f64) {
    t.bound((got - grid).abs(), 1e-3, || {
        format!("pairing {got} vs grid {grid} at s = {v:?}, p = {p}")
    });
}

fn random_odeco_point<R: Rng + ?Sized>(rng: &mut R, i: usize) -> Result<OdecoRep> {
    let order = 2 + i % 2;
    let n = rng.random_range(2..=4);
    if (i / 2).is_multiple_of(2) {
        let r = rng.random_range(1..=n);
        random_symmetric_odeco_with(rng, n, order, r)
    } else {
        let shape = random_shape(rng, order, 4);
        odeco_any_rank(rng, &shape)
    }
}

fn subgradient_soundness(seed: u64, s: &Sizes) -> CriterionResult {
    let trials = s.subgrad_trials;
    let tally = run_instances(7, seed, s.subgrad_points, |rng, t, i| {
        let rep = random_odeco_point(rng, i)?;
        let x = to_dense(&rep);
        let params = standard_params(x.order());
        let mut cases = Vec::with_capacity(params.len());
        for pr in &params {
            let g = subgrad_schatten(&rep, pr)?;
            let c = check_membership(&x, &g, pr, 1e-9)?;
            t.flag(c.accepted, || {
                format!("certificate rejected for {pr:?}: {:?}", c.notes)
            });
            let doubled = check_membership(&x, &g.scale(2.0), pr, 1e-9)?;
            t.flag(!doubled.accepted, || format!("2G accepted for {pr:?}"));
            cases.push((g, *pr));
        }
        let slacks = subgradient_inequality_test_multi(&x, &cases, trials, rng.random())?;
        for (slack, pr) in slacks.iter().zip(&params) {
            t.bound(-slack, 1e-9, || {
                format!("subgradient inequality slack {slack:e} for {pr:?}")
            });
        }
        Ok(())
    });
    tally.finish(
        7,
        "subgradient construction, certificate and sampling oracle",
    )
}

/// Orthogonal polar factor `U·Vᵀ` of a nonsingular square matrix by the
/// Newton iteration `Q ← (Q + Q^{-T})/2`.
fn polar_factor(m: &Matrix) -> Option<Matrix> {
    let mut q = m.clone();
    for _ in 0..100 {
        let inv_t = invert(&q)?.transpose();
        let next_data: Vec<f64> = q
            .data()
            .iter()
            .zip(inv_t.data())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let next = Matrix::new(q.rows(), q.cols(), next_data).ok()?;
        let change = next.sub(&q).ok()?.max_abs();
        q = next;
        if change < 1e-15 {
            break;
        }
    }
    Some(q)
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = m.row(i).to_vec();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c] == 0.0 {
            return None;
        }
        a.swap(c, piv);
        let d = a[c][c];
        a[c].iter_mut().for_each(|x| *x /= d);
        let pivot_row = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c && row[c] != 0.0 {
                let f = row[c];
                row.iter_mut()
                    .zip(&pivot_row)
                    .for_each(|(x, p)| *x -= f * p);
            }
        }
    }
    Matrix::from_rows(&a.into_iter().map(|r| r[n..].to_vec()).collect::<Vec<_>>()).ok()
}

fn matrix_reduction(seed: u64, s: &Sizes) -> CriterionResult {
    let tally = run_instances(8, seed, s.matrices, |rng, t, _| {
        let m = random_matrix(rng, 4, 4);
        let rep = odeco_from_matrix(&m)?;
        t.flag(rep.rank() == 4, || "matrix not full rank".into());
        let g = subgrad_schatten(&rep, &SchattenParams::nuclear(2))?;
        let Some(polar) = polar_factor(&m) else {
            t.flag(false, || "polar iteration failed".into());
            return Ok(());
        };
        let err = g
            .data()
            .iter()
            .zip(polar.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        t.bound(err, 1e-10, || {
            format!("subgradient differs from U·Vᵀ by {err:e}")
        });
        Ok(())
    });
    tally.finish(8, "matrix case reduces to U·Vᵀ")
}

fn conjugate_consistency(seed: u64, s: &Sizes) -> CriterionResult {
    let budget = s.conjugate_budget;
    let tally = run_instances(9, seed, 2 * s.conjugate_each, |rng, t, i| {
        let shape = Shape::cubic(3, 3)?;
        let rep = odeco_any_rank(rng, &shape)?;
        let pr = standard_params(3)[(i / 2) % 5];
        let x = to_dense(&rep);
        let v = dual_norm_value(&x, &pr)?;
        if i % 2 == 0 {
            let e = estimate_tensor_conjugate(&x.scale(0.9 / v), &pr, budget, rng.random())?;
            t.bound(e.max_sampled, 1e-6, || {
                format!("inside point reached {:e} for {pr:?}", e.max_sampled)
            });
        } else {
            let e = estimate_tensor_conjugate_until(
                &x.scale(1.1 / v),
                &pr,
                budget,
                rng.random(),
                1e-3,
            )?;
            t.flag(e.max_sampled >= 1e-3, || {
                format!("outside point only reached {:e} for {pr:?}", e.max_sampled)
            });
        }
        Ok(())
    });
    tally.finish(9, "conjugate: zero inside the dual ball, unbounded outside")
}

fn serialization(seed: u64, s: &Sizes) -> CriterionResult {
    let tally = run_instances(10, seed, s.round_trips, |rng, t, i| {
        let shape = any_shape(rng);
        let scale = 10f64.powi(rng.random_range(-300..300));
        let x = gaussian_tensor_with(rng, &shape).scale(scale);
        let back = tensor_from_json(&tensor_to_json(&x))?;
        let exact = x
            .data()
            .iter()
            .zip(back.data())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        t.flag(exact && back.shape() == x.shape(), || {
            "tensor round trip not bit-exact".into()
        });
        let rep = odeco_any_rank(rng, &shape)?;
        t.flag(odeco_from_json(&odeco_to_json(&rep))? == rep, || {
            "odeco round trip changed data".into()
        });

        // repeated sampling with one seed is bit-identical
        if i < 4 {
            let g = subgrad_schatten(&rep, &SchattenParams::nuclear(shape.order()))?;
            let y = to_dense(&rep);
            let pr = SchattenParams::nuclear(shape.order());
            let a = subgradient_inequality_test(&y, &g, &pr, 64, i as u64)?;
            let b = subgradient_inequality_test(&y, &g, &pr, 64, i as u64)?;
            t.flag(a.to_bits() == b.to_bits(), || {
                "sampling not reproducible".into()
            });
        }
        Ok(())
    });
    tally.finish(10, "JSON round trip and reproducibility")
}

/// Runs all suites. `quick` shrinks instance counts and budgets.
pub fn run_verification(seed: u64, quick: bool) -> VerifyReport {
    let sizes = Sizes::new(quick);
    let suites: [fn(u64, &Sizes) -> CriterionResult; 10] = [
        adjointness,
        hosvd_suite,
        equal_spectra,
        norm_identities,
        von_neumann,
        dual_maximizer_suite,
        subgradient_soundness,
        matrix_reduction,
        conjugate_consistency,
        serialization,
    ];
    let criteria: Vec<CriterionResult> = suites.iter().map(|f| f(seed, &sizes)).collect();
    let passed = criteria.iter().filter(|c| c.passed).count();
    VerifyReport {
        seed,
        quick,
        passed,
        failed: criteria.len() - passed,
        criteria,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_of_orthogonal_is_itself() {
        let q = crate::linalg::random_orthogonal(4, 3);
        let p = polar_factor(&q).unwrap();
        assert!(p.sub(&q).unwrap().max_abs() < 1e-14);
        let m = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -3.0]]).unwrap();
        let p = polar_factor(&m).unwrap();
        let want = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(p.sub(&want).unwrap().max_abs() < 1e-15);
        assert!(invert(&Matrix::zeros(2, 2)).is_none());
    }

    #[test]
    fn grid_oracle_matches_closed_form() {
        let s = [2.0, 1.0];
        assert!((grid_dual_value(&s, 2.0, 1e-3) - 5f64.sqrt()).abs() < 1e-5);
        assert_eq!(grid_dual_value(&s, 1.0, 1e-3), 3.0);
        assert!((grid_dual_value(&[1.0, 2.0, 2.0], 2.0, 1e-2) - 3.0).abs() < 1e-3);
        assert!((grid_dual_value(&s, 3.0, 1e-3) - 9f64.cbrt()).abs() < 1e-5);
    }

    #[test]
    fn tally_bookkeeping() {
        let mut t = Tally::default();
        t.bound(0.5, 1.0, || unreachable!());
        t.bound(2.0, 1.0, || "too big".into());
        t.flag(false, || "second".into());
        let r = t.finish(1, "x");
        assert!(!r.passed);
        assert_eq!((r.checks, r.failures), (3, 2));
        assert_eq!(r.worst_ratio, Sig17(2.0));
        assert_eq!(r.first_failure.as_deref(), Some("too big"));
    }
}
