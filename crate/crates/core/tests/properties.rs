use std::sync::Arc;

use proptest::prelude::*;
use proxqn::dataset::{parse_libsvm, Dataset, LibsvmOptions};
use proxqn::hessian::model_value;
use proxqn::oracles::random_lbfgs_model;
use proxqn::problem::{l1_value, prox_l1_scaled_identity, soft_threshold, CompositeProblem};
use proxqn::subsolver::CdWorkspace;

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (2usize..8, 2usize..12).prop_flat_map(|(n_features, n_points)| {
        let row = proptest::collection::btree_map(0..n_features, -5.0f64..5.0, 0..=n_features)
            .prop_map(|m| m.into_iter().filter(|(_, v)| *v != 0.0).collect::<Vec<_>>());
        (
            proptest::collection::vec(row, n_points),
            proptest::collection::vec(prop::bool::ANY, n_points),
        )
            .prop_map(move |(rows, signs)| {
                let labels = signs.into_iter().map(|s| if s { 1.0 } else { -1.0 }).collect();
                Dataset::from_rows(n_features, rows, labels).unwrap()
            })
    })
}

fn fixed_opts(n_features: usize) -> LibsvmOptions {
    LibsvmOptions {
        positive_label: Some("+1".into()),
        n_features: Some(n_features),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn libsvm_round_trip(data in dataset_strategy()) {
        let text = data.to_libsvm_string();
        let back = parse_libsvm(&text, &fixed_opts(data.n_features())).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn line_order_does_not_change_the_objective(data in dataset_strategy(), seed in 0u64..1000) {
        let text = data.to_libsvm_string();
        let mut lines: Vec<&str> = text.lines().collect();
        let shift = (seed as usize) % lines.len();
        lines.rotate_left(shift);
        lines.reverse();
        let shuffled = parse_libsvm(&lines.join("\n"), &fixed_opts(data.n_features())).unwrap();
        let w: Vec<f64> = (0..data.n_features()).map(|j| ((j as u64 + seed) as f64).sin()).collect();
        let a = CompositeProblem::logistic(Arc::new(data), 1e-3).unwrap();
        let b = CompositeProblem::logistic(Arc::new(shuffled), 1e-3).unwrap();
        let (fa, fb) = (a.value(&w), b.value(&w));
        prop_assert!((fa - fb).abs() <= 1e-12 * fa.abs().max(1.0));
    }

    #[test]
    fn logistic_loss_is_midpoint_convex(
        data in dataset_strategy(),
        x in proptest::collection::vec(-3.0f64..3.0, 8),
        y in proptest::collection::vec(-3.0f64..3.0, 8),
    ) {
        let n = data.n_features();
        let p = CompositeProblem::logistic(Arc::new(data), 0.0).unwrap();
        let (x, y) = (&x[..n], &y[..n]);
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        let lhs = p.f(&mid);
        let rhs = 0.5 * (p.f(x) + p.f(y));
        prop_assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn prox_satisfies_optimality(
        v in proptest::collection::vec(-10.0f64..10.0, 1..20),
        mu in 0.01f64..10.0,
        lambda in 0.0f64..5.0,
    ) {
        let p = prox_l1_scaled_identity(&v, mu, lambda).unwrap();
        for (&pj, &vj) in p.iter().zip(&v) {
            if pj == 0.0 {
                prop_assert!(vj.abs() <= mu * lambda * (1.0 + 1e-12));
            } else {
                let r = (pj - vj) / mu + lambda * pj.signum();
                prop_assert!(r.abs() <= 1e-10 * (1.0 + vj.abs() / mu));
            }
        }
    }

    #[test]
    fn soft_threshold_is_nonexpansive(a in -10.0f64..10.0, b in -10.0f64..10.0, tau in 0.0f64..5.0) {
        prop_assert!((soft_threshold(a, tau) - soft_threshold(b, tau)).abs() <= (a - b).abs() + 1e-15);
    }

    #[test]
    fn coordinate_steps_never_increase_the_model(seed in 0u64..500, lambda in 0.0f64..1.0) {
        let n = 12;
        let h = random_lbfgs_model(n, 3, seed);
        let grad: Vec<f64> = (0..n).map(|i| ((i as u64 * 7 + seed) as f64).cos()).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i as u64 + 3 * seed) as f64).sin()).collect();
        let q = |u: &[f64]| model_value(&h, u, &v, 0.0, &grad, l1_value(u, lambda)).unwrap();
        let mut ws = CdWorkspace::new(&h, &grad, &v, lambda).unwrap();
        let mut prev = q(ws.point());
        for step in 0..200 {
            ws.step((step * 5 + seed as usize) % n).unwrap();
            let now = q(ws.point());
            prop_assert!(now <= prev + 1e-12 * prev.abs().max(1.0));
            prev = now;
        }
    }
}
