use nalgebra::DMatrix;
use proptest::prelude::*;

use tenspec::linalg::{random_orthogonal, singular_values, svd};
use tenspec::norms::{conjugate_exponent, lp_norm};
use tenspec::odeco::{
    make_odeco, odeco_from_matrix, random_odeco, random_symmetric_odeco, to_dense,
};
use tenspec::random::{gaussian_tensor, random_symmetric};
use tenspec::spectral::{all_mode_spectra, hosvd, mode_spectrum, nuclear_norm, schatten_norm};
use tenspec::subdiff::{
    check_membership, conjugate_value_tuple, dual_vector_maximizer, subgrad_schatten,
    subgradient_inequality_test_multi, tuple_membership, tuple_subgradient, ConjugateValue,
    DualExponents, SpectralTuple,
};
use tenspec::tensor::{
    inner, is_symmetric, matricize, mode_mul, multi_mode_mul, symmetrize, tensorize,
};
use tenspec::verify::standard_params;
use tenspec::vonneumann::{check_equality_via_structure, vn_report};
use tenspec::{DenseTensor, Matrix, OdecoRep, SchattenParams, Shape};

fn shape_strategy(max_order: usize) -> impl Strategy<Value = Shape> {
    prop::collection::vec(1usize..=4, 2..=max_order).prop_map(|d| Shape::new(d).unwrap())
}

fn cubic_strategy() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=4, 2usize..=4)
}

fn params_strategy() -> impl Strategy<Value = SchattenParams> {
    let exponent = prop_oneof![Just(1.0), 1.0f64..4.0];
    (exponent.clone(), exponent, 0.1f64..3.0)
        .prop_map(|(p, q, l)| SchattenParams::new(p, q, l).unwrap())
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let t = gaussian_tensor(&Shape::new(vec![rows, cols]).unwrap(), seed);
    Matrix::new(rows, cols, t.into_data()).unwrap()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn rank_for(shape: &Shape, pick: usize) -> usize {
    1 + pick % shape.dims().iter().min().unwrap()
}

fn odeco_point(shape: &Shape, pick: usize, seed: u64, symmetric: bool) -> OdecoRep {
    if symmetric {
        let n = shape.dims()[0];
        random_symmetric_odeco(n, shape.order(), 1 + pick % n, seed).unwrap()
    } else {
        random_odeco(shape, rank_for(shape, pick), seed).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn matricize_is_adjoint_to_tensorize(shape in shape_strategy(4), seed in any::<u64>(), mode_pick in 0usize..4) {
        let x = gaussian_tensor(&shape, seed);
        let d = 1 + mode_pick % shape.order();
        let m = gaussian_matrix(shape.dims()[d - 1], shape.unfolding_cols(d).unwrap(), seed ^ 1);
        let lhs = matricize(&x, d).unwrap().inner(&m).unwrap();
        let rhs = inner(&x, &tensorize(&m, d, &shape).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * x.frobenius() * m.frobenius());
        prop_assert_eq!(tensorize(&matricize(&x, d).unwrap(), d, &shape).unwrap(), x);
        prop_assert_eq!(matricize(&tensorize(&m, d, &shape).unwrap(), d).unwrap(), m);
    }

    #[test]
    fn mode_product_factors_through_unfolding(shape in shape_strategy(4), seed in any::<u64>(), mode_pick in 0usize..4, rows in 1usize..=4) {
        let x = gaussian_tensor(&shape, seed);
        let d = 1 + mode_pick % shape.order();
        let m = gaussian_matrix(rows, shape.dims()[d - 1], seed ^ 2);
        let lhs = matricize(&mode_mul(&x, d, &m).unwrap(), d).unwrap();
        let rhs = m.matmul(&matricize(&x, d).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius() <= 1e-12 * rhs.frobenius().max(1e-300));
    }

    #[test]
    fn orthogonal_products_preserve_norm_and_spectra(shape in shape_strategy(4), seed in any::<u64>()) {
        let x = gaussian_tensor(&shape, seed);
        let q: Vec<Matrix> = shape.dims().iter().enumerate().map(|(i, &n)| random_orthogonal(n, seed.wrapping_add(i as u64))).collect();
        let y = multi_mode_mul(&x, &q).unwrap();
        prop_assert!((y.frobenius() - x.frobenius()).abs() <= 1e-12 * x.frobenius());
        for d in 1..=shape.order() {
            let (a, b) = (mode_spectrum(&x, d).unwrap(), mode_spectrum(&y, d).unwrap());
            prop_assert!(max_diff(&a, &b) <= 1e-10 * x.frobenius());
        }
    }

    #[test]
    fn symmetrize_is_a_linear_projection((n, order) in cubic_strategy(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let shape = Shape::cubic(n, order).unwrap();
        let (x, y) = (gaussian_tensor(&shape, seed), gaussian_tensor(&shape, seed ^ 3));
        let sx = symmetrize(&x).unwrap();
        prop_assert!(is_symmetric(&sx, 1e-12).unwrap());
        prop_assert!(symmetrize(&sx).unwrap().sub(&sx).unwrap().max_abs() <= 1e-14 * (1.0 + sx.max_abs()));
        let lhs = symmetrize(&x.scale(a).axpy(b, &y).unwrap()).unwrap();
        let rhs = sx.scale(a).axpy(b, &symmetrize(&y).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn singular_values_match_an_independent_svd(rows in 1usize..=6, cols in 1usize..=6, seed in any::<u64>()) {
        let m = gaussian_matrix(rows, cols, seed);
        let ours = singular_values(&m).unwrap();
        let oracle = sorted_desc(to_na(&m).singular_values().iter().copied().collect());
        prop_assert!(max_diff(&ours, &oracle) <= 1e-10 * (1.0 + oracle[0]));
        let energy: f64 = ours.iter().map(|s| s * s).sum();
        prop_assert!((energy - m.frobenius().powi(2)).abs() <= 1e-10 * energy.max(1e-300));
        prop_assert!(max_diff(&singular_values(&m.transpose()).unwrap(), &ours) <= 1e-10 * (1.0 + ours[0]));
        let res = svd(&m).unwrap();
        prop_assert!(res.reconstruct().sub(&m).unwrap().frobenius() <= 1e-12 * (1.0 + m.frobenius()));
    }

    #[test]
    fn singular_values_ignore_permutations_and_signs(n in 1usize..=5, seed in any::<u64>(), perm_seed in any::<u64>()) {
        let m = gaussian_matrix(n, n, seed);
        // signed permutation matrices from a shuffled index list
        let mut idx: Vec<usize> = (0..n).collect();
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let rows: Vec<Vec<f64>> = (0..n).map(|i| {
            let mut r = vec![0.0; n];
            r[idx[i]] = if (perm_seed >> i) & 1 == 1 { -1.0 } else { 1.0 };
            r
        }).collect();
        let p = Matrix::from_rows(&rows).unwrap();
        let pmq = p.matmul(&m).unwrap().matmul(&p.transpose()).unwrap();
        let (a, b) = (singular_values(&m).unwrap(), singular_values(&pmq).unwrap());
        prop_assert!(max_diff(&a, &b) <= 1e-10 * (1.0 + a[0]));
    }

    #[test]
    fn schatten_norm_is_a_norm(shape in shape_strategy(4), seed in any::<u64>(), params in params_strategy(), c in -5.0f64..5.0) {
        let [x, y, z] = [0u64, 1, 2].map(|k| gaussian_tensor(&shape, seed.wrapping_add(k)));
        let n = |t: &DenseTensor| schatten_norm(t, &params).unwrap();
        let (lhs, rhs) = (n(&x.sub(&z).unwrap()), n(&x.sub(&y).unwrap()) + n(&y.sub(&z).unwrap()));
        prop_assert!(lhs <= rhs + 1e-10 * rhs.max(1.0));
        prop_assert!((n(&x.scale(c)) - c.abs() * n(&x)).abs() <= 1e-12 * n(&x).max(1.0) * c.abs().max(1.0));
    }

    #[test]
    fn symmetric_and_odeco_tensors_have_equal_mode_spectra((n, order) in cubic_strategy(), seed in any::<u64>(), pick in 0usize..4) {
        let sym = random_symmetric(n, order, seed).unwrap();
        prop_assert!(all_mode_spectra(&sym).unwrap().max_cross_mode_deviation() <= 1e-10 * sym.frobenius());
        let shape = Shape::cubic(n, order).unwrap();
        let o = to_dense(&random_odeco(&shape, rank_for(&shape, pick), seed).unwrap());
        prop_assert!(all_mode_spectra(&o).unwrap().max_cross_mode_deviation() <= 1e-10 * o.frobenius());
    }

    #[test]
    fn hosvd_of_a_nonnegative_diagonal(n in 1usize..=4, order in 2usize..=4, raw in prop::collection::vec(0.0f64..5.0, 4)) {
        let diag = sorted_desc(raw[..n].to_vec());
        let x = DenseTensor::diagonal(Shape::cubic(n, order).unwrap(), &diag).unwrap();
        let h = hosvd(&x).unwrap();
        for d in 1..=order {
            prop_assert!(max_diff(&mode_spectrum(&x, d).unwrap(), &diag) <= 1e-12 * (1.0 + diag[0]));
        }
        prop_assert!(h.reconstruct().unwrap().sub(&x).unwrap().max_abs() <= 1e-12 * (1.0 + diag[0]));
    }

    #[test]
    fn odeco_norm_identities(shape in shape_strategy(4), seed in any::<u64>(), pick in 0usize..4, params in params_strategy()) {
        let rep = random_odeco(&shape, rank_for(&shape, pick), seed).unwrap();
        let x = to_dense(&rep);
        let sum: f64 = rep.alphas().iter().sum();
        prop_assert!((nuclear_norm(&x).unwrap() - sum).abs() <= 1e-10 * sum);
        let expect = params.lambda() * (shape.order() as f64).powf(1.0 / params.q()) * lp_norm(rep.alphas(), params.p());
        prop_assert!((schatten_norm(&x, &params).unwrap() - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn odeco_representation_fingerprints(shape in shape_strategy(3), seed in any::<u64>(), pick in 0usize..4, bump in 0.01f64..1.0) {
        let rep = random_odeco(&shape, rank_for(&shape, pick), seed).unwrap();
        let x = to_dense(&rep);
        // reversing the columns gives the same representation after re-sorting
        let r = rep.rank();
        let rev: Vec<Matrix> = rep.factors().iter().map(|f| {
            Matrix::from_columns(&(0..r).rev().map(|c| f.column(c)).collect::<Vec<_>>()).unwrap()
        }).collect();
        let again = make_odeco(rep.alphas().iter().rev().copied().collect(), rev, shape.clone()).unwrap();
        prop_assert_eq!(again.alphas(), rep.alphas());
        prop_assert!(to_dense(&again).sub(&x).unwrap().max_abs() <= 1e-14 * (1.0 + x.max_abs()));
        // a changed weight shows up in the spectra and in the pairing with X
        let mut alphas = rep.alphas().to_vec();
        alphas[0] += bump;
        let other = to_dense(&rep.with_weights(alphas).unwrap());
        let gap = mode_spectrum(&other, 1).unwrap()[0] - mode_spectrum(&x, 1).unwrap()[0];
        prop_assert!((gap - bump).abs() <= 1e-10 * (1.0 + bump));
        prop_assert!(inner(&other, &x).unwrap() > inner(&x, &x).unwrap());
    }

    #[test]
    fn von_neumann_gaps_are_nonnegative(shape in shape_strategy(4), seed in any::<u64>()) {
        let x = gaussian_tensor(&shape, seed);
        let y = gaussian_tensor(&shape, seed ^ 0xABCD);
        let r = vn_report(&x, &y, 1e-10).unwrap();
        prop_assert!(r.per_mode_gap.iter().all(|&g| g >= -1e-10 * r.scale));
    }

    #[test]
    fn nonnegative_multiples_attain_equality(shape in shape_strategy(4), seed in any::<u64>(), c in 0.0f64..4.0) {
        let x = gaussian_tensor(&shape, seed);
        let y = x.scale(c);
        prop_assert!(vn_report(&x, &y, 1e-10).unwrap().equality);
        let frames = hosvd(&x).unwrap().factors;
        let s = check_equality_via_structure(&x, &y, &frames, 1e-9).unwrap();
        prop_assert!(s.holds);
        for b in &s.structure.blocks {
            prop_assert!((b.proportionality.constant() - c).abs() <= 1e-9 * (1.0 + c) || b.residual == 0.0);
        }
    }

    #[test]
    fn structure_implies_equality(shape in shape_strategy(4), seed in any::<u64>(), pick in 0usize..4, beta in prop::collection::vec(0.0f64..3.0, 4)) {
        let rep = random_odeco(&shape, rank_for(&shape, pick), seed).unwrap();
        let x = to_dense(&rep);
        let weights = beta[..rep.rank()].to_vec();
        let y = if weights.iter().all(|&w| w == 0.0) {
            DenseTensor::zeros(shape.clone())
        } else {
            // weights in arbitrary order: both outcomes must stay consistent
            let cols: Vec<usize> = (0..rep.rank()).collect();
            let mut acc = DenseTensor::zeros(shape.clone());
            for (&i, &w) in cols.iter().zip(&weights) {
                let vecs: Vec<Vec<f64>> = rep.factors().iter().map(|f| f.column(i)).collect();
                acc = acc.axpy(w, &tenspec::tensor::outer(&vecs).unwrap()).unwrap();
            }
            acc
        };
        let s = check_equality_via_structure(&x, &y, &rep.completed_factors(), 1e-9).unwrap();
        if s.holds {
            prop_assert!(s.vn.equality);
        }
    }

    #[test]
    fn matrix_case_is_the_classical_trace_inequality(rows in 1usize..=5, cols in 1usize..=5, seed in any::<u64>()) {
        let (a, b) = (gaussian_matrix(rows, cols, seed), gaussian_matrix(rows, cols, seed ^ 9));
        let ta = DenseTensor::new(Shape::new(vec![rows, cols]).unwrap(), a.data().to_vec()).unwrap();
        let tb = DenseTensor::new(Shape::new(vec![rows, cols]).unwrap(), b.data().to_vec()).unwrap();
        let r = vn_report(&ta, &tb, 1e-10).unwrap();
        let sa = sorted_desc(to_na(&a).singular_values().iter().copied().collect());
        let sb = sorted_desc(to_na(&b).singular_values().iter().copied().collect());
        let classical: f64 = sa.iter().zip(&sb).map(|(x, y)| x * y).sum();
        let trace = (to_na(&a).transpose() * to_na(&b)).trace();
        prop_assert!((r.inner - trace).abs() <= 1e-12 * r.scale);
        for bound in &r.per_mode_bound {
            prop_assert!((bound - classical).abs() <= 1e-10 * r.scale);
        }
        prop_assert!(trace <= classical + 1e-10 * r.scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_subgradients_are_certified(n in 2usize..=4, order in 2usize..=3, seed in any::<u64>(), pick in 0usize..4, symmetric in any::<bool>(), dims in prop::collection::vec(1usize..=4, 3)) {
        let shape = if symmetric { Shape::cubic(n, order).unwrap() } else { Shape::new(dims[..order].to_vec()).unwrap() };
        let rep = odeco_point(&shape, pick, seed, symmetric);
        let x = to_dense(&rep);
        let params = standard_params(order);
        let mut cases = Vec::new();
        for pr in &params {
            let g = subgrad_schatten(&rep, pr).unwrap();
            let c = check_membership(&x, &g, pr, 1e-9).unwrap();
            prop_assert!(c.accepted, "{:?} {:?}", pr, c.notes);
            let nx = schatten_norm(&x, pr).unwrap();
            prop_assert!((inner(&g, &x).unwrap() - nx).abs() <= 1e-10 * nx);
            prop_assert!(!check_membership(&x, &g.scale(2.0), pr, 1e-9).unwrap().accepted);
            cases.push((g, *pr));
        }
        for slack in subgradient_inequality_test_multi(&x, &cases, 300, seed).unwrap() {
            prop_assert!(slack >= -1e-9);
        }
    }

    #[test]
    fn matrix_subgradient_is_the_polar_factor(n in 1usize..=5, seed in any::<u64>()) {
        let m = gaussian_matrix(n, n, seed);
        let rep = odeco_from_matrix(&m).unwrap();
        prop_assume!(rep.rank() == n);
        let g = subgrad_schatten(&rep, &SchattenParams::nuclear(2)).unwrap();
        let svd = to_na(&m).svd(true, true);
        let polar = svd.u.unwrap() * svd.v_t.unwrap();
        let err = g.data().iter().zip(polar.transpose().as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10, "max deviation {err:e}");
    }

    #[test]
    fn membership_is_scale_covariant(shape in shape_strategy(3), seed in any::<u64>(), pick in 0usize..4, c in 0.05f64..20.0, kind in 0usize..4, params_pick in 0usize..5) {
        let rep = random_odeco(&shape, rank_for(&shape, pick), seed).unwrap();
        let x = to_dense(&rep);
        let pr = standard_params(shape.order())[params_pick];
        let g = subgrad_schatten(&rep, &pr).unwrap();
        let y = match kind {
            0 => g.clone(),
            1 => g.scale(1.5),
            2 => gaussian_tensor(&shape, seed ^ 5),
            _ => g.axpy(1e-3, &gaussian_tensor(&shape, seed ^ 6)).unwrap(),
        };
        let a = check_membership(&x, &y, &pr, 1e-9).unwrap();
        let b = check_membership(&x.scale(c), &y, &pr, 1e-9).unwrap();
        prop_assert_eq!(a.accepted, b.accepted);
        for cert in [&a, &b] {
            if cert.accepted {
                prop_assert!(cert.vn_gaps.iter().all(|&gap| gap <= cert.tol * cert.scale));
                prop_assert!(cert.pairing_residual <= cert.tol * cert.scale);
                prop_assert!(cert.dual_norm_value <= 1.0 + cert.tol);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dual_maximizer_attains_the_primal_norm(s in prop::collection::vec(0.0f64..5.0, 1..=6), p in prop_oneof![Just(1.0), Just(2.0), 1.0f64..6.0]) {
        let m = dual_vector_maximizer(&s, p).unwrap();
        let norm = lp_norm(&s, p);
        let pairing: f64 = m.vector.iter().zip(&s).map(|(a, b)| a * b).sum();
        prop_assert!((pairing - norm).abs() <= 1e-12 * norm.max(1.0));
        prop_assert!((lp_norm(&m.vector, conjugate_exponent(p)) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn tuple_subgradients_are_members(modes in prop::collection::vec(prop::collection::vec(0.0f64..4.0, 1..=4), 1..=4), params in params_strategy(), c in 0.0f64..3.0) {
        let t = SpectralTuple::new(modes).unwrap();
        let g = tuple_subgradient(&t, &params).unwrap();
        prop_assert!(tuple_membership(&t, &g.canonical, &params, 1e-10).unwrap());
        prop_assert!(tuple_membership(&t.scale(c), &g.canonical, &params, 1e-10).unwrap() || c == 0.0 && g.canonical.modes().iter().flatten().all(|&v| v == 0.0));
        let dual = DualExponents::of(&params).mixed_norm(g.canonical.modes());
        prop_assert!(dual <= params.lambda() * (1.0 + 1e-12));
        prop_assert_eq!(conjugate_value_tuple(&g.canonical, &params), ConjugateValue::Zero);
        if dual > 0.0 {
            prop_assert_eq!(conjugate_value_tuple(&g.canonical.scale(1.01 * params.lambda() / dual), &params), ConjugateValue::Infinite);
        }
    }
}
