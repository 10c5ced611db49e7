mod support;

use evoscore_core::smo::{dual_objective, kkt_satisfied, train_smo, SmoParams, SparseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::qp_oracle::Problem;

struct Case {
    x: Vec<Vec<f64>>,
    labels: Vec<bool>,
    c: f64,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let n = rng.random_range(2..=6);
    let d = rng.random_range(1..=3);
    let c = [0.1, 1.0, 10.0][rng.random_range(0..3)];
    let x = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    labels[0] = true;
    labels[1] = false;
    Case { x, labels, c }
}

fn sparse(x: &[Vec<f64>]) -> Vec<SparseVector> {
    x.iter().map(|row| SparseVector::from_dense(row)).collect()
}

fn decision(w: &[f64], b: f64, x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b
}

#[test]
fn dual_objective_matches_oracle_on_random_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case_no in 0..240 {
        let case = random_case(&mut rng);
        let dim = case.x[0].len();
        let vectors = sparse(&case.x);
        let params = SmoParams { c: case.c, ..SmoParams::default() };
        let clf = train_smo(&vectors, &case.labels, dim, &params).unwrap();
        let oracle = Problem::new(case.x.clone(), &case.labels, case.c).solve();

        let ours = dual_objective(clf.alphas(), &vectors, &case.labels);
        assert!(
            (ours - oracle.objective).abs() <= 1e-3,
            "case {case_no}: smo {ours} vs oracle {}",
            oracle.objective
        );
        assert!(clf.converged(), "case {case_no} did not converge");
        assert!(kkt_satisfied(&clf, &vectors, &case.labels, params.kkt_tolerance), "case {case_no}");
        for (i, xi) in case.x.iter().enumerate() {
            let expected = decision(&oracle.weights, oracle.bias, xi) > 0.0;
            assert_eq!(clf.predict(&vectors[i]).unwrap(), expected, "case {case_no} point {i}");
        }
    }
}

#[test]
fn four_point_example_decision_values() {
    let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![2.0, 0.0], vec![2.0, 1.0]];
    let labels = [false, false, true, true];
    let vectors = sparse(&x);
    let clf = train_smo(&vectors, &labels, 2, &SmoParams { c: 10.0, ..SmoParams::default() }).unwrap();
    let oracle = Problem::new(x.clone(), &labels, 10.0).solve();
    // hard-margin solution: w = (1, 0), b = -1
    assert!((oracle.weights[0] - 1.0).abs() < 1e-6 && oracle.weights[1].abs() < 1e-6);
    for (xi, v) in x.iter().zip(&vectors) {
        let got = clf.decision_value(v).unwrap();
        assert!((got - decision(&oracle.weights, oracle.bias, xi)).abs() < 1e-3, "{xi:?}: {got}");
    }
}

#[test]
fn trained_alphas_are_dual_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let case = random_case(&mut rng);
        let vectors = sparse(&case.x);
        let params = SmoParams { c: case.c, ..SmoParams::default() };
        let clf = train_smo(&vectors, &case.labels, case.x[0].len(), &params).unwrap();
        let mut balance = 0.0;
        for (&a, &l) in clf.alphas().iter().zip(&case.labels) {
            assert!((-1e-9..=case.c + 1e-9).contains(&a));
            balance += if l { a } else { -a };
        }
        assert!(balance.abs() <= 1e-9, "Σαy = {balance}");
        let mut w = vec![0.0; case.x[0].len()];
        for ((&a, &l), xi) in clf.alphas().iter().zip(&case.labels).zip(&case.x) {
            for (wk, xk) in w.iter_mut().zip(xi) {
                *wk += if l { a } else { -a } * xk;
            }
        }
        for (a, b) in w.iter().zip(clf.weights()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn training_is_bit_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let x: Vec<Vec<f64>> = (0..200).map(|_| (0..20).map(|_| f64::from(rng.random_range(0..3u8))).collect()).collect();
    let labels: Vec<bool> = x.iter().map(|r| r[0] + r[1] > r[2] + 1.0 || rng.random_bool(0.05)).collect();
    let vectors = sparse(&x);
    let a = train_smo(&vectors, &labels, 20, &SmoParams::default()).unwrap();
    let b = train_smo(&vectors, &labels, 20, &SmoParams::default()).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(a.alphas(), b.alphas());
}

#[test]
fn separable_data_with_large_c_is_fit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let normal: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = Vec::new();
        let mut labels = Vec::new();
        while x.len() < 30 {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = decision(&normal, 0.3, &p);
            if s.abs() > 0.2 {
                labels.push(s > 0.0);
                x.push(p);
            }
        }
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        let vectors = sparse(&x);
        let params = SmoParams { c: 1e3, ..SmoParams::default() };
        let clf = train_smo(&vectors, &labels, d, &params).unwrap();
        for (v, &l) in vectors.iter().zip(&labels) {
            assert_eq!(clf.predict(v).unwrap(), l);
        }
    }
}

