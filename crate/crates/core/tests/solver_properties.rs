mod common;

use common::*;
use mmv_imaging::solver::{
    cv_spgl1, group_norm_12, group_norm_inf2, newton_root_bpsigma, pareto_value_and_slope, project_group_l1,
    spg_solve_lstau, GroupStructure, SensingOperator, SolveStatus, SolverConfig,
};
use mmv_imaging::{CMatrix, Complex64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, n: usize, p: usize, g: usize) -> (ChaCha8Rng, CMatrix, GroupStructure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = random_matrix(&mut rng, g * n, p);
    (rng, j, GroupStructure::new(g, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_matches_kkt_oracle(seed in any::<u64>(), n in 1usize..=40, p in 1usize..=5, g in 1usize..=2, frac in 0.0f64..1.5) {
        let (mut rng, j, groups) = instance(seed, n, p, g);
        let tau = frac * group_norm_12(&j, groups);
        let x = project_group_l1(&j, groups, tau).unwrap();
        let oracle = kkt_projection(&j, groups, tau);
        prop_assert!((&x - &oracle).norm() <= 1e-6);
        prop_assert!(group_norm_12(&x, groups) <= tau + 1e-9);
        prop_assert!(variational_gap(&mut rng, &j, &x, groups, tau, 20) <= 1e-9 * (1.0 + j.norm_squared()));
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), n in 1usize..=30, p in 1usize..=4, g in 1usize..=2, frac in 0.0f64..1.0) {
        let (_, j, groups) = instance(seed, n, p, g);
        let tau = frac * group_norm_12(&j, groups);
        let once = project_group_l1(&j, groups, tau).unwrap();
        let twice = project_group_l1(&once, groups, tau).unwrap();
        prop_assert!((&once - &twice).norm() <= 1e-12 * (1.0 + once.norm()));
    }

    #[test]
    fn pair_groups_project_like_wide_rows(seed in any::<u64>(), n in 1usize..=30, p in 1usize..=5, frac in 0.0f64..1.2) {
        let (_, j, groups) = instance(seed, n, p, 2);
        let tau = frac * group_norm_12(&j, groups);
        let direct = project_group_l1(&j, groups, tau).unwrap();
        let wide = project_group_l1(&pairs_to_wide(&j), GroupStructure::new(1, n).unwrap(), tau).unwrap();
        prop_assert!((&direct - &wide_to_pairs(&wide)).norm() <= 1e-12 * (1.0 + j.norm()));
    }

    #[test]
    fn holder_inequality(seed in any::<u64>(), n in 1usize..=20, p in 1usize..=4, g in 1usize..=2) {
        let (mut rng, a, groups) = instance(seed, n, p, g);
        let b = random_matrix(&mut rng, g * n, p);
        let ip: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        prop_assert!(ip.abs() <= group_norm_12(&a, groups) * group_norm_inf2(&b, groups) * (1.0 + 1e-12));
    }

    #[test]
    fn spg_on_identity_is_the_projection(seed in any::<u64>(), n in 2usize..=20, p in 1usize..=4, g in 1usize..=2, frac in 0.05f64..0.95) {
        let (_, y, groups) = instance(seed, n, p, g);
        let phi = CMatrix::identity(g * n, g * n);
        let op = SensingOperator::new(&phi, None, p).unwrap();
        let tau = frac * group_norm_12(&y, groups);
        let r = spg_solve_lstau(&op, &y, &CMatrix::zeros(g * n, p), tau, groups, &tight_config()).unwrap();
        let x = project_group_l1(&y, groups, tau).unwrap();
        prop_assert!((&r.j - &x).norm() <= 1e-6);
    }
}

fn random_problem(seed: u64, q: usize, n: usize, p: usize) -> (CMatrix, CMatrix, GroupStructure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = random_matrix(&mut rng, q, n);
    let y = random_matrix(&mut rng, q, p);
    (phi, y, GroupStructure::new(1, n).unwrap())
}

#[test]
fn spg_iterates_stay_feasible_and_obey_the_nonmonotone_rule() {
    for seed in 0..10 {
        let (phi, y, groups) = random_problem(seed, 20, 30, 3);
        let op = SensingOperator::new(&phi, None, 3).unwrap();
        let tau = 0.3 * group_norm_12(&op.adjoint(&y), groups) / phi.norm();
        let cfg = SolverConfig { gap_tol: 1e-9, ..SolverConfig::default() };
        let r = spg_solve_lstau(&op, &y, &CMatrix::zeros(30, 3), tau, groups, &cfg).unwrap();
        assert!(group_norm_12(&r.j, groups) <= tau + 1e-9);
        let mut past = vec![y.norm_squared()];
        for it in &r.trace.iterations {
            let reference = past.iter().rev().take(cfg.history).copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(it.r_rec * it.r_rec <= reference * (1.0 + 1e-12), "seed {seed} iteration {}", it.iteration);
            past.push(it.r_rec * it.r_rec);
        }
    }
}

#[test]
fn pareto_slope_matches_finite_differences() {
    for seed in 0..5 {
        let (phi, y, groups) = random_problem(100 + seed, 20, 30, 2);
        let op = SensingOperator::new(&phi, None, 2).unwrap();
        let full = newton_root_bpsigma(&op, &y, 0.0, groups, &tight_config()).unwrap();
        let tau = 0.5 * full.tau;
        let h = 1e-4 * tau;
        let j = spg_solve_lstau(&op, &y, &CMatrix::zeros(30, 2), tau, groups, &tight_config()).unwrap().j;
        let (_, slope) = pareto_value_and_slope(&op, &y, &j, groups).unwrap();
        let slope = slope.unwrap();
        let fd = (pareto_value(&op, &y, tau + h, groups) - pareto_value(&op, &y, tau - h, groups)) / (2.0 * h);
        assert!((slope - fd).abs() <= 1e-2 * fd.abs(), "seed {seed}: {slope} vs {fd}");
    }
}

#[test]
fn newton_path_is_monotone_and_hits_sigma() {
    for seed in 0..6 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let phi = random_matrix(&mut rng, 30, 60);
        let mut j = CMatrix::zeros(60, 3);
        for _ in 0..5 {
            let row = rng.random_range(0..60);
            j.row_mut(row).copy_from(&random_matrix(&mut rng, 1, 3));
        }
        let clean = &phi * &j;
        let u = random_matrix(&mut rng, 30, 3) * Complex64::new(0.05 * clean.norm() / 30f64.sqrt(), 0.0);
        let y = &clean + &u;
        let sigma = u.norm();
        let groups = GroupStructure::new(1, 60).unwrap();
        let op = SensingOperator::new(&phi, None, 3).unwrap();
        let r = newton_root_bpsigma(&op, &y, sigma, groups, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.residual_norm() - sigma).abs() <= 1e-5 * y.norm(), "seed {seed}");
        for w in r.trace.pareto.windows(2) {
            assert!(w[1].phi < w[0].phi, "phi must decrease");
            assert!(w[1].tau >= w[0].tau, "tau must not decrease");
        }
    }
}

#[test]
fn newton_tau_matches_a_sweep() {
    let (phi, y, groups) = random_problem(77, 12, 20, 2);
    let op = SensingOperator::new(&phi, None, 2).unwrap();
    let sigma = 0.4 * y.norm();
    let r = newton_root_bpsigma(&op, &y, sigma, groups, &tight_config()).unwrap();
    let swept = tau_sweep_root(&op, &y, sigma, groups, 3.0 * r.tau, 60);
    assert!((r.tau - swept).abs() <= 1e-3 * swept, "{} vs {swept}", r.tau);
}

#[test]
fn scaling_the_data_scales_the_solution() {
    let (phi, y, groups) = random_problem(9, 20, 40, 3);
    let op = SensingOperator::new(&phi, None, 3).unwrap();
    let sigma = 0.3 * y.norm();
    let base = newton_root_bpsigma(&op, &y, sigma, groups, &SolverConfig::default()).unwrap();
    for c in [7.3, 1e-3] {
        let scaled = newton_root_bpsigma(&op, &(&y * Complex64::new(c, 0.0)), c * sigma, groups, &SolverConfig::default()).unwrap();
        let diff = (&scaled.j / Complex64::new(c, 0.0) - &base.j).norm();
        assert!(diff <= 1e-9 * base.j.norm(), "c = {c}: {diff}");
    }
}

#[test]
fn cross_validation_on_clean_data_matches_exact_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (q, n, p) = (60, 80, 4);
    let phi = random_matrix(&mut rng, q, n).unscale((q as f64).sqrt());
    let mut j = CMatrix::zeros(n, p);
    for row in [3, 17, 40, 41, 66] {
        j.row_mut(row).copy_from(&random_matrix(&mut rng, 1, p));
    }
    let y = &phi * &j;
    let groups = GroupStructure::new(1, n).unwrap();
    let cv_rows: Vec<usize> = (0..q).step_by(5).collect();
    let mut fit = vec![true; q * p];
    let mut cv = vec![false; q * p];
    for c in 0..p {
        for &r in &cv_rows {
            fit[c * q + r] = false;
            cv[c * q + r] = true;
        }
    }
    let cfg = SolverConfig { max_iter: 5000, ..tight_config() };
    let res = cv_spgl1(&phi, &y, fit, &cv, groups, &cfg).unwrap();
    let op = SensingOperator::new(&phi, None, p).unwrap();
    let exact = newton_root_bpsigma(&op, &y, 0.0, groups, &tight_config()).unwrap();
    let diff = (&res.j - &exact.j).norm() / exact.j.norm();
    assert!(diff <= 1e-6, "{diff}");
    let n_opt = res.trace.n_opt.unwrap();
    let first = res.trace.iterations[0].r_cv;
    let at_opt = res.trace.iterations[n_opt - 1].r_cv;
    assert!(at_opt < 1e-6 * first);
}

#[test]
fn planted_support_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = 0;
    for _ in 0..10 {
        let (support, err) = planted_recovery(&mut rng, 40, 100, 5, 10);
        if support && err <= 1e-4 {
            ok += 1;
        }
    }
    assert!(ok >= 9, "{ok}/10");
}
