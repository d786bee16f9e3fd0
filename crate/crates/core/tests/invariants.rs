use std::sync::Arc;

use penopt::exec;
use penopt::linalg::{factor_general, factor_hermitian, SparseComplexMatrix};
use penopt::models::{sampling_operator, source_vector, ForwardModel, Grid1D, Grid2D, Helmholtz, Parabolic1D};
use penopt::objectives::{penalty_objective, reduced_objective, EvalLevel, Experiment, ExperimentSet, Problem, Regularizer};
use penopt::optim::{minimize, reconcile_solves, select_lambda_initial, Formulation, LambdaStage, OptConfig};
use penopt::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn experiments(model: &dyn ForwardModel, sources: &[Vec<f64>], receivers: &[Vec<f64>], m_true: &[f64]) -> ExperimentSet {
    let grid = model.grid();
    let p = Arc::new(sampling_operator(&grid, receivers).unwrap().matrix);
    let a = penopt::augmented::ReducedSystem::factor(model.assemble(m_true).unwrap()).unwrap();
    ExperimentSet::new(
        sources
            .iter()
            .map(|s| {
                let q = source_vector(&grid, s, c(1.0 / grid.cell_measure(), 0.0)).unwrap();
                let d = p.mul_vec(&a.solve(&q));
                Experiment { q, p: p.clone(), d }
            })
            .collect(),
    )
}

fn parabolic(n: usize, k: usize) -> (Problem, Vec<f64>) {
    let model = Arc::new(Parabolic1D::new(Grid1D::new(n).unwrap(), 10.0 * std::f64::consts::PI));
    let truth: Vec<f64> = model.model_coordinates().iter().map(|x| 1.0 + (-10.0 * (x[0] - 0.5).powi(2)).exp()).collect();
    let src: Vec<Vec<f64>> = (0..k).map(|j| vec![j as f64 / (k - 1).max(1) as f64]).collect();
    let set = experiments(model.as_ref(), &src, &[vec![0.0], vec![1.0]], &truth);
    let reg = Regularizer::for_model(model.as_ref(), 1e-4).unwrap();
    (Problem::new(model, set, reg).unwrap(), truth)
}

fn helmholtz(n: usize, k: usize) -> (Problem, Vec<f64>) {
    let model = Arc::new(Helmholtz::new_2d(Grid2D::new(n, n, [0.0, 1.0, 0.0, 1.0]).unwrap(), 12.0));
    let truth: Vec<f64> = model.model_coordinates().iter().map(|x| 1.0 + 0.3 * (-15.0 * ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2))).exp()).collect();
    let src: Vec<Vec<f64>> = (0..k).map(|j| vec![0.0, (j as f64 + 0.5) / k as f64]).collect();
    let rec: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, (i as f64 + 0.5) / 6.0]).collect();
    let set = experiments(model.as_ref(), &src, &rec, &truth);
    let reg = Regularizer::for_model(model.as_ref(), 1e-4).unwrap();
    (Problem::new(model, set, reg).unwrap(), truth)
}

fn single(p: &Problem, k: usize) -> Problem {
    let e = p.experiments.iter().nth(k).unwrap().clone();
    Problem { experiments: ExperimentSet::new(vec![e]), reg: Regularizer::none(p.model_dim()), ..p.clone() }
}

#[test]
fn multi_experiment_gradient_is_sum_of_parts() {
    for (p, truth) in [parabolic(21, 3), helmholtz(9, 3)] {
        let m: Vec<f64> = truth.iter().map(|t| 0.9 * t).collect();
        let lambda = select_lambda_initial(&p, &m, 1.0).unwrap();
        let full = reduced_objective(&p, &m, EvalLevel::Gradient).unwrap();
        let fullp = penalty_objective(&p, &m, lambda, EvalLevel::Gradient).unwrap();
        let mut g = p.reg.gradient(&m);
        let mut gp = g.clone();
        for k in 0..p.experiments.len() {
            let s = single(&p, k);
            for (o, x) in g.iter_mut().zip(reduced_objective(&s, &m, EvalLevel::Gradient).unwrap().gradient) {
                *o += x;
            }
            for (o, x) in gp.iter_mut().zip(penalty_objective(&s, &m, lambda, EvalLevel::Gradient).unwrap().gradient) {
                *o += x;
            }
        }
        let scale = g.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for (a, b) in full.gradient.iter().zip(&g).chain(fullp.gradient.iter().zip(&gp)) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let (p, truth) = helmholtz(11, 4);
    let m0 = vec![1.0; truth.len()];
    let cfg = OptConfig { max_iter: 5, lambda_schedule: vec![LambdaStage { lambda_scaled: 1.0, max_iter: 5 }], ..OptConfig::default() };
    let par = minimize(&p, Formulation::Penalty, &m0, &cfg, Some(&truth)).unwrap();
    let seq = exec::sequential(|| minimize(&p, Formulation::Penalty, &m0, &cfg, Some(&truth)).unwrap());
    assert_eq!(par.m, seq.m);
    assert_eq!(par.records, seq.records);
    assert!(reconcile_solves(&par.records));
}

#[test]
fn penalty_value_increases_towards_reduced() {
    let (p, truth) = parabolic(21, 2);
    let m: Vec<f64> = truth.iter().map(|t| 0.8 * t + 0.1).collect();
    let red = reduced_objective(&p, &m, EvalLevel::Value).unwrap().value;
    let scale = select_lambda_initial(&p, &m, 1.0).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for lt in [0.1, 1.0, 10.0, 100.0, 1000.0] {
        let v = penalty_objective(&p, &m, lt * scale, EvalLevel::Value).unwrap().value;
        assert!(v > prev && v <= red * (1.0 + 1e-12));
        prev = v;
    }
}

fn random_banded(n: usize, bw: usize, seed: &[f64]) -> SparseComplexMatrix {
    let mut t = vec![];
    let mut s = seed.iter().cycle();
    for i in 0..n {
        for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
            let v = c(*s.next().unwrap(), *s.next().unwrap());
            t.push((i, j, if i == j { v + c(4.0 * bw as f64 + 1.0, 0.0) } else { v }));
        }
    }
    SparseComplexMatrix::from_triplets(n, n, t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn banded_lu_solves(n in 2usize..40, bw in 0usize..4, vals in prop::collection::vec(-1.0f64..1.0, 16)) {
        let a = random_banded(n, bw, &vals);
        let b: Vec<Complex64> = (0..n).map(|i| c(i as f64 - 3.0, 1.0)).collect();
        let f = factor_general(&a).unwrap();
        let x = f.solve(&b);
        let r: f64 = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(r <= 1e-12 * (1.0 + b.iter().map(|z| z.norm()).fold(0.0, f64::max)));
        let y = f.solve_adjoint(&b);
        let r: f64 = a.adjoint_mul_vec(&y).iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(r <= 1e-11 * (1.0 + b.iter().map(|z| z.norm()).fold(0.0, f64::max)));
    }

    #[test]
    fn hermitian_factor_of_gram(n in 2usize..30, bw in 0usize..3, vals in prop::collection::vec(-1.0f64..1.0, 16)) {
        let g = random_banded(n, bw, &vals).gram();
        let b: Vec<Complex64> = (0..n).map(|i| c(1.0, i as f64)).collect();
        let x = factor_hermitian(&g).unwrap().solve(&b);
        let r: f64 = g.mul_vec(&x).iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(r <= 1e-10 * b.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }

    #[test]
    fn adjoint_identity(n in 1usize..25, bw in 0usize..3, vals in prop::collection::vec(-1.0f64..1.0, 16)) {
        let a = random_banded(n, bw, &vals);
        let x: Vec<Complex64> = (0..n).map(|i| c((i as f64).sin(), 0.5)).collect();
        let y: Vec<Complex64> = (0..n).map(|i| c(1.0, (i as f64).cos())).collect();
        let lhs = dot(&a.mul_vec(&x), &y);
        let rhs = dot(&x, &a.adjoint_mul_vec(&y));
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn penalty_never_exceeds_reduced(scale in 0.5f64..1.5, tilt in -0.3f64..0.3, lt in 0.01f64..100.0) {
        let (p, truth) = parabolic(15, 2);
        let n = truth.len() as f64;
        let m: Vec<f64> = truth.iter().enumerate().map(|(i, t)| scale * t * (1.0 + tilt * (i as f64 / n - 0.5))).collect();
        let red = reduced_objective(&p, &m, EvalLevel::Value).unwrap().value;
        let lambda = select_lambda_initial(&p, &m, lt).unwrap();
        let pen = penalty_objective(&p, &m, lambda, EvalLevel::Value).unwrap().value;
        prop_assert!(pen <= red * (1.0 + 1e-10) + 1e-300);
    }

    #[test]
    fn solve_counts(k in 1usize..4, lt in 0.1f64..10.0) {
        let (p, truth) = parabolic(11, k);
        let lambda = select_lambda_initial(&p, &truth, lt).unwrap();
        prop_assert_eq!(reduced_objective(&p, &truth, EvalLevel::Value).unwrap().pde_solves, k);
        prop_assert_eq!(reduced_objective(&p, &truth, EvalLevel::Gradient).unwrap().pde_solves, 2 * k);
        prop_assert_eq!(penalty_objective(&p, &truth, lambda, EvalLevel::Gradient).unwrap().pde_solves, k);
    }
}
