use approx::assert_abs_diff_eq;
use ebic_core::solvers::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_problem(n: usize, p: usize, seed: u64) -> Standardized {
    let mut r = rng(seed);
    let x = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
    let mut y = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
    for j in 0..p.min(3) {
        y.axpy(1.5 - j as f64, &x.column(j), 1.0);
    }
    Standardized::new(&x, &y).unwrap()
}

/// Lasso by accelerated projected gradient on the split `β = u − v`,
/// `u, v ≥ 0`, where the penalty becomes linear.
fn projected_gradient_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Vec<f64> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let gram = x.transpose() * x / nf;
    let xty = x.transpose() * y / nf;
    let lip = 2.0 * gram.symmetric_eigenvalues().max();
    let step = 1.0 / lip;
    let grad = |w: &DVector<f64>| {
        let beta = w.rows(0, p) - w.rows(p, p);
        let g = &gram * beta - &xty;
        let mut out = DVector::zeros(2 * p);
        for j in 0..p {
            out[j] = g[j] + lambda;
            out[p + j] = -g[j] + lambda;
        }
        out
    };
    let mut w = DVector::zeros(2 * p);
    let mut z = w.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let next = (&z - grad(&z) * step).map(|v| v.max(0.0));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &w) * ((t - 1.0) / t_next);
        w = next;
        t = t_next;
    }
    (0..p).map(|j| w[j] - w[p + j]).collect()
}

#[test]
fn zero_above_lambda_max() {
    let s = random_problem(40, 8, 1);
    let lmax = lambda_max(&s.x, &s.y);
    for penalty in [PenaltySpec::lasso(), PenaltySpec::scad(3.7).unwrap()] {
        let res = coordinate_descent(&s.x, &s.y, penalty, lmax * 1.0001, None, &CdOptions::default()).unwrap();
        assert_eq!(res.coefficients.nnz(), 0);
        assert_eq!(kkt_residual(&s.x, &s.y, &res.coefficients.to_dense(), &penalty, lmax * 1.0001), 0.0);
    }
}

#[test]
fn orthogonal_design_closed_form() {
    let n = 64;
    let mut r = rng(2);
    let mut g = DMatrix::from_fn(n, 6, |_, _| r.sample::<f64, _>(StandardNormal));
    g.column_mut(0).fill(1.0);
    let q = g.qr().q();
    let x = q.columns(1, 5).into_owned() * (n as f64).sqrt();
    let y = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
    let y = &y - DVector::from_element(n, y.mean());
    let lambda = 0.05;
    let res = coordinate_descent(&x, &y, PenaltySpec::lasso(), lambda, None, &CdOptions::default()).unwrap();
    let beta = res.coefficients.to_dense();
    for j in 0..5 {
        let z = x.column(j).dot(&y) / n as f64;
        assert_abs_diff_eq!(beta[j], soft_threshold(z, lambda), epsilon = 1e-10);
    }
}

#[test]
fn objective_never_increases_per_sweep() {
    for seed in 0..20 {
        let s = random_problem(50, 15, seed);
        let lambda = 0.1 * lambda_max(&s.x, &s.y);
        let mut cd = CoordinateDescent::new(&s.x, &s.y, PenaltySpec::lasso(), lambda, None).unwrap();
        let all: Vec<usize> = (0..15).collect();
        let mut last = cd.objective();
        for _ in 0..200 {
            let change = cd.sweep(&all);
            let obj = cd.objective();
            assert!(obj <= last + 1e-13, "seed {seed}: {obj} > {last}");
            last = obj;
            if change == 0.0 {
                break;
            }
        }
    }
}

#[test]
fn lasso_matches_projected_gradient_oracle() {
    for seed in 0..10 {
        let p = 4 + (seed as usize % 9);
        let s = random_problem(50, p, 100 + seed);
        let lambda = 0.05 * lambda_max(&s.x, &s.y) * (1.0 + seed as f64);
        let lasso = PenaltySpec::lasso();
        let res = coordinate_descent(&s.x, &s.y, lasso, lambda, None, &CdOptions::default()).unwrap();
        assert!(res.converged);
        let ours = penalized_objective(&s.x, &s.y, &res.coefficients.to_dense(), &lasso, lambda);
        let oracle = projected_gradient_lasso(&s.x, &s.y, lambda);
        let theirs = penalized_objective(&s.x, &s.y, &oracle, &lasso, lambda);
        assert!((ours - theirs).abs() < 1e-8, "p={p}: {ours} vs {theirs}");
    }
}

#[test]
fn solution_beats_local_perturbations() {
    let s = random_problem(20, 4, 7);
    let lambda = 0.1 * lambda_max(&s.x, &s.y);
    let lasso = PenaltySpec::lasso();
    let beta = coordinate_descent(&s.x, &s.y, lasso, lambda, None, &CdOptions::default())
        .unwrap()
        .coefficients
        .to_dense();
    let best = penalized_objective(&s.x, &s.y, &beta, &lasso, lambda);
    let mut r = rng(8);
    for _ in 0..10_000 {
        let trial: Vec<f64> = beta.iter().map(|b| b + 1e-3 * (2.0 * r.random::<f64>() - 1.0)).collect();
        assert!(penalized_objective(&s.x, &s.y, &trial, &lasso, lambda) >= best - 1e-15);
    }
}

#[test]
fn kkt_detects_perturbation() {
    let s = random_problem(50, 10, 9);
    let lambda = 0.1 * lambda_max(&s.x, &s.y);
    let lasso = PenaltySpec::lasso();
    let res = coordinate_descent(&s.x, &s.y, lasso, lambda, None, &CdOptions::default()).unwrap();
    let mut beta = res.coefficients.to_dense();
    assert!(kkt_residual(&s.x, &s.y, &beta, &lasso, lambda) < 1e-6);
    let j = res.coefficients.entries[0].0;
    beta[j] += 0.1;
    assert!(kkt_residual(&s.x, &s.y, &beta, &lasso, lambda) > 1e-3);
}

#[test]
fn scad_small_lambda_recovers_ols() {
    let s = random_problem(60, 6, 10);
    let scad = PenaltySpec::scad(3.7).unwrap();
    let res = coordinate_descent(&s.x, &s.y, scad, 1e-6, None, &CdOptions::default()).unwrap();
    let ols = (s.x.transpose() * &s.x).cholesky().unwrap().solve(&(s.x.transpose() * &s.y));
    for (a, b) in res.coefficients.to_dense().iter().zip(ols.iter()) {
        assert_abs_diff_eq!(*a, *b, epsilon = 1e-4);
    }
}

#[test]
fn scad_solution_is_stationary() {
    let s = random_problem(80, 20, 11);
    let scad = PenaltySpec::scad(3.7).unwrap();
    let lambda = 0.2 * lambda_max(&s.x, &s.y);
    let res = coordinate_descent(&s.x, &s.y, scad, lambda, None, &CdOptions::default()).unwrap();
    assert!(res.converged);
    assert!(kkt_residual(&s.x, &s.y, &res.coefficients.to_dense(), &scad, lambda) < 1e-6);
}

#[test]
fn rejects_unstandardized_and_nonfinite_inputs() {
    let x = DMatrix::from_element(5, 2, 3.0);
    let y = DVector::from_element(5, 1.0);
    assert!(coordinate_descent(&x, &y, PenaltySpec::lasso(), 0.1, None, &CdOptions::default()).is_err());
    let mut s = random_problem(20, 3, 1);
    s.y[0] = f64::NAN;
    assert!(coordinate_descent(&s.x, &s.y, PenaltySpec::lasso(), 0.1, None, &CdOptions::default()).is_err());
    assert!(PenaltySpec::scad(2.0).is_err());
    assert!(scad_threshold(1.0, 1.0, 1.5).is_err());
}

#[test]
fn path_basics() {
    let s = random_problem(60, 30, 12);
    for penalty in [PenaltySpec::lasso(), PenaltySpec::scad(3.7).unwrap()] {
        let cfg = PathConfig::for_sample_size(60);
        let path = lambda_path(&s.x, &s.y, penalty, &cfg).unwrap();
        assert!(path.supports[0].is_empty());
        assert_abs_diff_eq!(path.lambdas[0], lambda_max(&s.x, &s.y));
        assert!(path.lambdas.windows(2).all(|w| w[0] > w[1]));
        assert!(path.supports.iter().all(|s| s.len() <= 30));
        assert!(path.converged.iter().all(|&c| c));
    }
    let single = PathConfig {
        num_lambdas: 1,
        ..PathConfig::for_sample_size(60)
    };
    let path = lambda_path(&s.x, &s.y, PenaltySpec::lasso(), &single).unwrap();
    assert_eq!(path.len(), 1);
    assert!(path.supports[0].is_empty());
}

#[test]
fn path_stops_before_support_cap() {
    let s = random_problem(60, 40, 13);
    let cfg = PathConfig {
        max_support: 5,
        ..PathConfig::for_sample_size(60)
    };
    let path = lambda_path(&s.x, &s.y, PenaltySpec::lasso(), &cfg).unwrap();
    assert!(path.supports.iter().all(|s| s.len() <= 5));
    let full = lambda_path(&s.x, &s.y, PenaltySpec::lasso(), &PathConfig::for_sample_size(60)).unwrap();
    assert!(full.len() > path.len());
    assert_eq!(&full.lambdas[..path.len()], &path.lambdas[..]);
}

/// Lasso supports can shed a feature as `λ` falls, so only the trend is
/// checked: nearly every step along the path keeps or grows the support.
#[test]
fn path_supports_mostly_grow() {
    let (mut growing, mut steps) = (0, 0);
    for seed in 0..50 {
        let s = random_problem(50, 20, 500 + seed);
        let path = lambda_path(&s.x, &s.y, PenaltySpec::lasso(), &PathConfig::for_sample_size(50)).unwrap();
        for w in path.supports.windows(2) {
            steps += 1;
            growing += usize::from(w[0].len() <= w[1].len());
        }
    }
    assert!(growing * 10 >= steps * 9, "{growing}/{steps}");
}

#[test]
fn refined_path_keeps_grid_and_adds_supports() {
    let s = random_problem(80, 40, 14);
    let scad = PenaltySpec::scad(3.7).unwrap();
    let base = PathConfig::for_sample_size(80);
    let plain = lambda_path(&s.x, &s.y, scad, &base).unwrap();
    let refined = lambda_path(
        &s.x,
        &s.y,
        scad,
        &PathConfig {
            refine_depth: 6,
            refine_budget: 500,
            ..base
        },
    )
    .unwrap();
    assert!(refined.lambdas.windows(2).all(|w| w[0] > w[1]));
    for l in &plain.lambdas {
        assert!(refined.lambdas.contains(l));
    }
    let distinct = |p: &PathResult| {
        let mut v = p.supports.clone();
        v.dedup();
        v.len()
    };
    assert!(distinct(&refined) >= distinct(&plain));
    let jumps = |p: &PathResult| {
        p.supports
            .windows(2)
            .filter(|w| w[0].len() + w[1].len() - 2 * w[0].intersection_len(&w[1]) > 1)
            .count()
    };
    assert!(jumps(&refined) <= jumps(&plain));
}

#[test]
fn standardization_round_trip() {
    let mut r = rng(15);
    let x = DMatrix::from_fn(30, 4, |_, j| 2.0 + j as f64 + 3.0 * r.sample::<f64, _>(StandardNormal));
    let beta = [1.0, -2.0, 0.5, 0.0];
    let y = &x * DVector::from_column_slice(&beta) + DVector::from_element(30, 4.0);
    let s = Standardized::new(&x, &y).unwrap();
    for j in 0..4 {
        assert_abs_diff_eq!(s.x.column(j).sum(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.x.column(j).norm_squared() / 30.0, 1.0, epsilon = 1e-12);
    }
    let ols = (s.x.transpose() * &s.x).cholesky().unwrap().solve(&(s.x.transpose() * &s.y));
    let (intercept, slopes) = s.to_original(ols.as_slice());
    assert_abs_diff_eq!(intercept, 4.0, epsilon = 1e-9);
    for (a, b) in slopes.iter().zip(beta) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
    }
}

#[test]
fn sparse_vec_round_trip() {
    let dense = vec![0.0, 1.5, 0.0, -2.0];
    let sv = SparseVec::from_dense(&dense);
    assert_eq!(sv.nnz(), 2);
    assert_eq!(sv.to_dense(), dense);
    assert_eq!(sv.support().indices(), &[1, 3]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lasso_solves_certify(seed in any::<u64>(), p in 2usize..30, frac in 0.01f64..0.9) {
        let s = random_problem(50, p, seed);
        let lambda = frac * lambda_max(&s.x, &s.y);
        let lasso = PenaltySpec::lasso();
        let res = coordinate_descent(&s.x, &s.y, lasso, lambda, None, &CdOptions::default()).unwrap();
        prop_assert!(res.converged);
        prop_assert!(kkt_residual(&s.x, &s.y, &res.coefficients.to_dense(), &lasso, lambda) < 1e-6);
    }

    #[test]
    fn warm_start_reaches_same_lasso_objective(seed in any::<u64>(), frac in 0.05f64..0.9) {
        let s = random_problem(40, 12, seed);
        let lasso = PenaltySpec::lasso();
        let lambda = frac * lambda_max(&s.x, &s.y);
        let cold = coordinate_descent(&s.x, &s.y, lasso, lambda, None, &CdOptions::default()).unwrap();
        let warm_from: Vec<f64> = (0..12).map(|j| j as f64 * 0.1).collect();
        let warm = coordinate_descent(&s.x, &s.y, lasso, lambda, Some(&warm_from), &CdOptions::default()).unwrap();
        let a = penalized_objective(&s.x, &s.y, &cold.coefficients.to_dense(), &lasso, lambda);
        let b = penalized_objective(&s.x, &s.y, &warm.coefficients.to_dense(), &lasso, lambda);
        prop_assert!((a - b).abs() < 1e-9);
    }
}
