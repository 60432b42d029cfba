use std::collections::BTreeMap;

use hamsfl::continuation::{residual, ContinuationConfig};
use hamsfl::family::{builtin_with_params, eigen_envelope, near_integer};
use hamsfl::fourier::{h_half_inner, q_form};
use hamsfl::linalg::sorted_eigenvalues;
use hamsfl::spectral_flow::{sfl_partition, FnPath, PolynomialPath, SflConfig, SubPath};
use hamsfl::{builtin, delta, ComparisonKind, ComparisonPath, FourierVector, Layout, OperatorPath};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn symmetric(values: &[f64], d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |i, j| values[i * d + j]);
    (&m + m.transpose()) * 0.5
}

fn min_abs(m: &DMatrix<f64>) -> f64 {
    sorted_eigenvalues(m).unwrap().iter().fold(f64::INFINITY, |a, e| a.min(e.abs()))
}

fn path_strategy(d: usize) -> impl Strategy<Value = PolynomialPath<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3 * d * d).prop_map(move |v| {
        let coeffs = (0..3).map(|c| symmetric(&v[c * d * d..(c + 1) * d * d], d) * (1.0 + c as f64)).collect();
        PolynomialPath::new(-1.0, 1.0, coeffs).unwrap()
    })
}

fn ends_ok<P: OperatorPath<f64>>(p: &P, points: &[f64]) -> bool {
    points.iter().all(|&x| min_abs(&p.eval(x).unwrap()) > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_is_additive_under_concatenation(p in path_strategy(4), mid in -0.8f64..0.8) {
        prop_assume!(ends_ok(&p, &[-1.0, mid, 1.0]));
        let cfg = SflConfig::default();
        let left = sfl_partition(&SubPath::new(&p, -1.0, mid).unwrap(), &cfg).unwrap();
        let right = sfl_partition(&SubPath::new(&p, mid, 1.0).unwrap(), &cfg).unwrap();
        prop_assert_eq!(sfl_partition(&p, &cfg).unwrap(), left + right);
    }

    #[test]
    fn flow_is_additive_under_direct_sums(p in path_strategy(3), q in path_strategy(2)) {
        prop_assume!(ends_ok(&p, &[-1.0, 1.0]) && ends_ok(&q, &[-1.0, 1.0]));
        let cfg = SflConfig::default();
        let (pc, qc) = (p.clone(), q.clone());
        let sum = FnPath::new(-1.0, 1.0, move |x| {
            let (a, b) = (pc.eval(x).unwrap(), qc.eval(x).unwrap());
            let mut m = DMatrix::zeros(5, 5);
            m.view_mut((0, 0), (3, 3)).copy_from(&a);
            m.view_mut((3, 3), (2, 2)).copy_from(&b);
            m
        })
        .unwrap();
        prop_assert_eq!(
            sfl_partition(&sum, &cfg).unwrap(),
            sfl_partition(&p, &cfg).unwrap() + sfl_partition(&q, &cfg).unwrap()
        );
    }

    #[test]
    fn reversal_negates_the_flow(p in path_strategy(4)) {
        prop_assume!(ends_ok(&p, &[-1.0, 1.0]));
        let cfg = SflConfig::default();
        let pc = p.clone();
        let rev = FnPath::new(-1.0, 1.0, move |x| pc.eval(-x).unwrap()).unwrap();
        prop_assert_eq!(sfl_partition(&rev, &cfg).unwrap(), -sfl_partition(&p, &cfg).unwrap());
    }

    #[test]
    fn flow_is_invariant_under_endpoint_fixed_homotopy(p in path_strategy(3), w in prop::collection::vec(-1.0f64..1.0, 9), s in 0.0f64..3.0) {
        prop_assume!(ends_ok(&p, &[-1.0, 1.0]));
        let bump = symmetric(&w, 3) * s;
        let pc = p.clone();
        let deformed = FnPath::new(-1.0, 1.0, move |x| pc.eval(x).unwrap() + &bump * (1.0 - x * x)).unwrap();
        let cfg = SflConfig::default();
        prop_assert_eq!(sfl_partition(&deformed, &cfg).unwrap(), sfl_partition(&p, &cfg).unwrap());
    }

    #[test]
    fn comparison_flow_matches_delta(bm in -3.5f64..3.5, ap in -3.5f64..3.5, n in 1usize..=2) {
        prop_assume!(!near_integer(bm, 1e-3) && !near_integer(ap, 1e-3));
        let lines = hamsfl::family::comparison_lines(bm, bm, ap, ap, 0.0, 1.0).unwrap();
        let path = ComparisonPath::new(ComparisonKind::M, lines, n, 9).unwrap();
        prop_assert_eq!(sfl_partition(&path, &SflConfig::default()).unwrap(), 2 * n as i64 * delta(bm, ap));
    }

    #[test]
    fn envelope_bounds_every_sample(amp in 0.0f64..0.5, split in -1.0f64..1.0, lambda in -2.0f64..2.0, t in 0.0f64..6.28) {
        let params = BTreeMap::from([("amplitude".to_string(), amp), ("split".to_string(), split)]);
        let fam = builtin_with_params::<f64>("wiggle", &params).unwrap();
        let env = eigen_envelope(&fam.hessian, lambda, 64).unwrap();
        let values = sorted_eigenvalues(&fam.hessian.eval(lambda, t)).unwrap();
        prop_assert!(env.alpha <= values[0] + 1e-9);
        prop_assert!(values[values.len() - 1] <= env.beta + 1e-9);
    }

    #[test]
    fn orthonormal_coordinates_carry_the_half_norm(x in prop::collection::vec(-1.0f64..1.0, 14)) {
        let layout = Layout::new(1, 3).unwrap();
        let v = DVector::from_vec(x);
        let u = FourierVector::from_orthonormal(layout, &v).unwrap();
        prop_assert!((h_half_inner(&u, &u).unwrap() - v.norm_squared()).abs() < 1e-12);
        let q = hamsfl::fourier::q_matrix::<f64>(layout);
        prop_assert!((q_form(&u, &u).unwrap() - v.dot(&(&q * &v))).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn residual_jacobian_is_symmetric(x in prop::collection::vec(-0.5f64..0.5, 14), lambda in -2.0f64..2.0) {
        let fam = builtin::<f64>("quartic").unwrap();
        let cfg = ContinuationConfig { k: 3, ..Default::default() };
        let layout = cfg.layout(1).unwrap();
        let grid = cfg.grid().unwrap();
        let x = DVector::from_vec(x);
        let h = 1e-5;
        let dim = layout.dim();
        let mut jac = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut e = DVector::zeros(dim);
            e[c] = h;
            let up = FourierVector::from_orthonormal(layout, &(&x + &e)).unwrap();
            let dn = FourierVector::from_orthonormal(layout, &(&x - &e)).unwrap();
            let col = (residual(&fam, lambda, &up, &grid).unwrap() - residual(&fam, lambda, &dn, &grid).unwrap()) / (2.0 * h);
            jac.set_column(c, &col);
        }
        prop_assert!((&jac - jac.transpose()).amax() <= 1e-6 * jac.amax().max(1.0));
    }
}

#[test]
fn single_precision_flow() {
    let p = FnPath::<f32>::new(-1.0, 1.0, |l| DMatrix::from_diagonal(&DVector::from_column_slice(&[l, 1.0 - l * l * 0.25])))
        .unwrap();
    assert_eq!(sfl_partition(&p, &SflConfig::default()).unwrap(), 1);
    let ramp = builtin::<f32>("scalar_ramp").unwrap();
    let grid = hamsfl::TimeGrid::<f32>::for_assembly(4, 0);
    let path = hamsfl::HessianPath::new(ramp.hessian, 4, grid, 0.3, 2.5).unwrap();
    assert_eq!(sfl_partition(&path, &SflConfig::default()).unwrap(), 4);
}
