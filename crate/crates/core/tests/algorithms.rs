use dcnmf::algorithms::{
    fit_baseline, fit_constrained, fit_minvol_kl, fit_sparse_sphere_kl, fit_ssnmf, mean_row_sparsity,
    SolverOptions, SparsitySchedule,
};
use dcnmf::constraints::{sphere_columns, ConstraintSet, LinearConstraint};
use dcnmf::synth::{synth_simplex, synth_sparse, NoiseModel};
use dcnmf::Error;

fn opts(beta: f64, iters: usize) -> SolverOptions {
    SolverOptions {
        beta,
        max_iters: iters,
        ..SolverOptions::default()
    }
}

#[test]
fn ssnmf_descends_and_stays_on_simplex() {
    let data = synth_simplex(12, 3, 40, NoiseModel::GammaMultiplicative, 0.1, 3).unwrap();
    for beta in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let fit = fit_ssnmf(&data.v, 3, &opts(beta, 80)).unwrap();
        assert!(fit.trace.monotone_violations(1e-12).is_empty(), "beta {beta}");
        for col in fit.h.columns() {
            assert!((col.sum() - 1.0).abs() <= 1e-6);
        }
        let first = fit.trace.rows.first().unwrap().objective;
        let last = fit.trace.last().unwrap().objective;
        assert!(last <= first);
    }
}

#[test]
fn runs_are_deterministic() {
    let data = synth_simplex(10, 3, 30, NoiseModel::Poisson, 0.05, 1).unwrap();
    let a = fit_ssnmf(&data.v, 3, &opts(1.0, 30)).unwrap();
    let b = fit_ssnmf(&data.v, 3, &opts(1.0, 30)).unwrap();
    assert_eq!(a.w, b.w);
    assert_eq!(a.h, b.h);
    let c = fit_ssnmf(&data.v, 3, &SolverOptions { seed: 9, ..opts(1.0, 30) }).unwrap();
    assert_ne!(a.w, c.w);
}

#[test]
fn weighted_constraints_on_both_factors() {
    let data = synth_simplex(8, 2, 10, NoiseModel::Poisson, 0.01, 5).unwrap();
    let cs_w = ConstraintSet {
        linear: vec![LinearConstraint::new(vec![(0, 0), (1, 0), (2, 1)], vec![1.0, 2.0, 0.5], 3.0)],
        ..ConstraintSet::default()
    };
    let cs_h = ConstraintSet {
        linear: vec![
            LinearConstraint::new(vec![(0, 0), (1, 0)], vec![2.0, 1.0], 1.5),
            LinearConstraint::sum_to(vec![(0, 3), (1, 4), (0, 5)], 2.0),
        ],
        ..ConstraintSet::default()
    };
    let fit = fit_constrained(&data.v, 2, &cs_w, &cs_h, &opts(0.5, 60)).unwrap();
    assert!(cs_w.max_residual(&fit.w) <= 1e-6);
    assert!(cs_h.max_residual(&fit.h) <= 1e-6);
    assert!(fit.trace.monotone_violations(1e-12).is_empty());
}

#[test]
fn overlapping_constraints_are_rejected() {
    let data = synth_simplex(5, 2, 6, NoiseModel::Poisson, 0.0, 0).unwrap();
    let cs_h = ConstraintSet {
        linear: vec![
            LinearConstraint::sum_to(vec![(0, 0), (1, 0)], 1.0),
            LinearConstraint::sum_to(vec![(1, 0), (1, 1)], 1.0),
        ],
        ..ConstraintSet::default()
    };
    let err = fit_constrained(&data.v, 2, &ConstraintSet::default(), &cs_h, &opts(1.0, 5)).unwrap_err();
    assert!(matches!(err, Error::Constraint(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unsupported_settings() {
    let data = synth_simplex(5, 2, 6, NoiseModel::Poisson, 0.0, 0).unwrap();
    let cs_h = dcnmf::constraints::simplex_columns(2, 6);
    let err = fit_constrained(&data.v, 2, &ConstraintSet::default(), &cs_h, &opts(2.5, 5)).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)), "{err}");
    assert!(fit_minvol_kl(&data.v, 2, 1.0, 0.1, &opts(0.5, 5)).is_err());
    assert!(fit_baseline(&data.v, 2, &opts(1.0, 0)).is_err());
}

#[test]
fn minvol_keeps_w_columns_stochastic() {
    let data = synth_simplex(10, 3, 60, NoiseModel::Poisson, 0.01, 2).unwrap();
    let fit = fit_minvol_kl(&data.v, 3, 0.5, 0.1, &opts(1.0, 60)).unwrap();
    for col in fit.w.columns() {
        assert!((col.sum() - 1.0).abs() <= 1e-6);
    }
    assert!(fit.trace.monotone_violations(1e-12).is_empty());
}

#[test]
fn sparse_sphere_model() {
    let data = synth_sparse(15, 3, 80, 0.3, 10.0, NoiseModel::Poisson, 0.1, 4).unwrap();
    let fixed = SparsitySchedule::fixed(vec![0.1; 3]);
    let fit = fit_sparse_sphere_kl(&data.v, 3, &fixed, 1.0, &opts(1.0, 60)).unwrap();
    let cs = sphere_columns(3, 1.0);
    assert!(cs.max_residual(&fit.w) <= 1e-6);
    assert!(fit.trace.monotone_violations(1e-12).is_empty() || fit.trace.fallback_total() > 0);
    assert_eq!(fit.lambda, vec![0.1; 3]);

    let growing = SparsitySchedule {
        lambda0: vec![0.1; 3],
        rate_alpha: 1.05,
        target_sp: 0.6,
        window: (1, 40),
    };
    let grown = fit_sparse_sphere_kl(&data.v, 3, &growing, 1.0, &opts(1.0, 60)).unwrap();
    assert!(grown.lambda.iter().any(|&l| l > 0.1));
    assert!(mean_row_sparsity(&grown.h).unwrap() >= mean_row_sparsity(&fit.h).unwrap() - 1e-9);
}
