//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

use std::process::ExitCode;
use std::time::Instant;

use dcnmf::algorithms::{self, Fit, SolverOptions, SparsitySchedule};
use dcnmf::constraints::{self, ConstraintSet, LinearConstraint};
use dcnmf::divergence::{d_beta, split_concave, split_concave_d1, split_convex, split_convex_d1, BetaParams};
use dcnmf::metrics::match_columns;
use dcnmf::oracle::{self, OracleConfig};
use dcnmf::rootfind::RootOptions;
use dcnmf::synth::{self, NoiseModel};
use dcnmf::updates::{self, LinearBlock, MinVolState};
use dcnmf::Matrix;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MONOTONE_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

type FitRun<'a> = Box<dyn Fn() -> dcnmf::Result<Fit> + 'a>;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn positive_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> Matrix {
    Array2::from_shape_simple_fn((r, c), || uniform(rng, lo, hi))
}

/// Random disjoint linear constraints covering part of an `rows × cols` factor,
/// grouped inside columns.
fn random_column_blocks(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max_block: usize) -> ConstraintSet {
    let mut linear = Vec::new();
    for c in 0..cols {
        let mut idx: Vec<usize> = (0..rows).collect();
        idx.shuffle(rng);
        let mut at = 0;
        while at < idx.len() {
            let size = rng.random_range(1..=max_block).min(idx.len() - at);
            if rng.random::<f64>() < 0.7 {
                let pairs: Vec<(usize, usize)> = idx[at..at + size].iter().map(|&r| (r, c)).collect();
                let weights = (0..size).map(|_| uniform(rng, 0.5, 2.0)).collect();
                linear.push(LinearConstraint::new(pairs, weights, uniform(rng, 0.5, 2.0)));
            }
            at += size;
        }
    }
    ConstraintSet {
        linear,
        spheres: Vec::new(),
    }
}

fn criterion_monotone_descent(residuals: &mut Vec<(String, f64)>) -> Outcome {
    let mut failures = Vec::new();
    let mut slowest: f64 = 0.0;
    for &beta in &[0.0, 0.5, 1.0, 1.5] {
        let opts = SolverOptions {
            max_iters: 200,
            beta,
            ..SolverOptions::default()
        };
        for inst in 0..20u64 {
            let data = synth::synth_simplex(30, 5, 40, NoiseModel::GammaMultiplicative, 0.2, 100 + inst).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + inst);
            let cs_w = random_column_blocks(&mut rng, 30, 5, 4);
            let cs_h = random_column_blocks(&mut rng, 5, 40, 3);
            let opts = SolverOptions { seed: inst, ..opts.clone() };
            let runs: [(&str, FitRun); 2] = [
                ("ssnmf", Box::new(|| algorithms::fit_ssnmf(&data.v, 5, &opts))),
                (
                    "constrained",
                    Box::new(|| algorithms::fit_constrained(&data.v, 5, &cs_w, &cs_h, &opts)),
                ),
            ];
            for (name, run) in runs {
                let t = Instant::now();
                match run() {
                    Ok(fit) => {
                        slowest = slowest.max(t.elapsed().as_secs_f64());
                        let bad = fit.trace.monotone_violations(MONOTONE_TOL);
                        if !bad.is_empty() {
                            failures.push(format!("{name} beta={beta} inst={inst} rises at {:?}", &bad[..bad.len().min(3)]));
                        }
                        residuals.push((format!("{name} beta={beta} inst={inst}"), fit.trace.max_residual()));
                    }
                    Err(e) => failures.push(format!("{name} beta={beta} inst={inst}: {e}")),
                }
            }
        }
    }
    let pass = failures.is_empty() && slowest < 10.0;
    outcome(
        pass,
        format!(
            "160 runs, slowest {slowest:.3}s, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn criterion_newton_behavior() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let betas = [-0.5, 0.0, 0.5, 1.0, 1.25, 1.5, 1.8, 2.0];
    let mut worst_iters = 0;
    let mut worst_residual: f64 = 0.0;
    let mut problems = Vec::new();
    for case in 0..1000 {
        let beta = betas[case % betas.len()];
        let q = rng.random_range(1..=6);
        let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (0..q).map(|_| uniform(rng, lo, hi)).collect::<Vec<_>>();
        let current = draw(&mut rng, 0.05, 3.0);
        let num = draw(&mut rng, 0.05, 3.0);
        let den = draw(&mut rng, 0.05, 3.0);
        let weights = draw(&mut rng, 0.2, 2.0);
        let rhs = uniform(&mut rng, 0.05, 5.0);
        let block = LinearBlock::new(current, num, den, weights, rhs, BetaParams::new(beta).unwrap()).unwrap();
        let opts = RootOptions {
            record_path: true,
            ..RootOptions::default()
        };
        let sol = match block.solve(&opts) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("case {case} beta={beta}: {e}"));
                continue;
            }
        };
        let root = sol.multiplier;
        let t = block.pole();
        let span = 1e3 * (1.0 + root.abs());
        let changes = if t.is_finite() {
            // Distances to the pole on a log scale, so the region next to `t` is sampled.
            let far = (t - root + span).ln();
            let near = (1e-14 * (1.0 + t.abs())).min(0.5 * (t - root)).ln();
            let at = |u: f64| t - (far * (1.0 - u) + near * u).exp();
            oracle::scan_root_uniqueness(|u| block.residual(at(u)).0, 0.0, 1.0, 4000)
        } else {
            oracle::scan_root_uniqueness(|mu| block.residual(mu).0, root - span, root + span, 4000)
        };
        if changes != 1 {
            problems.push(format!("case {case} beta={beta}: {changes} sign changes"));
        }
        worst_iters = worst_iters.max(sol.root.iters);
        worst_residual = worst_residual.max(sol.root.residual.abs());
        if sol.root.iters > 60 || sol.root.residual.abs() > 1e-6 {
            problems.push(format!(
                "case {case} beta={beta}: {} iterations, residual {:e}",
                sol.root.iters, sol.root.residual
            ));
        }
        let path = &sol.root.path;
        if let Some(first) = path.iter().position(|&x| x > root) {
            for pair in path[first..].windows(2) {
                let slack = 1e-12 * (1.0 + pair[0].abs());
                if pair[1] > pair[0] + slack || pair[1] < root - slack {
                    problems.push(format!("case {case} beta={beta}: path leaves (root, t) monotone order"));
                    break;
                }
            }
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "1000 problems, max {worst_iters} iterations, max |r| {worst_residual:.2e}, {} problems{}",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

fn criterion_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    for case in 0..200 {
        let beta = [0.0, 0.5, 1.0, 1.5][case % 4];
        let (f, k) = (6, 3);
        let v = positive_matrix(&mut rng, f, 1, 0.2, 2.0);
        let w = positive_matrix(&mut rng, f, k, 0.2, 1.5);
        let h = positive_matrix(&mut rng, k, 1, 0.2, 1.5);
        let q = 1 + case % 3;
        let mut rows: Vec<usize> = (0..k).collect();
        rows.shuffle(&mut rng);
        let pairs: Vec<(usize, usize)> = rows[..q].iter().map(|&r| (r, 0)).collect();
        let weights = (0..q).map(|_| uniform(&mut rng, 0.5, 2.0)).collect();
        let cs = ConstraintSet {
            linear: vec![LinearConstraint::new(pairs, weights, uniform(&mut rng, 0.5, 3.0))],
            spheres: Vec::new(),
        };
        let p = BetaParams::new(beta).unwrap();
        match oracle::verify_h_blocks(&v, &w, &h, &cs, &p, &cfg, 1) {
            Ok(rep) if rep.blocks_checked == 1 => {
                worst = worst.max(rep.max_abs_diff);
                if !rep.agreed {
                    problems.push(format!("case {case} beta={beta} q={q}: diff {:e}", rep.max_abs_diff));
                }
            }
            Ok(_) => problems.push(format!("case {case}: block skipped")),
            Err(e) => problems.push(format!("case {case}: {e}")),
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "200 blocks, max elementwise difference {worst:.2e} (tolerance 1e-5){}",
            problems.first().map(|p| format!(", first problem: {p}")).unwrap_or_default()
        ),
    )
}

fn criterion_decomposition() -> Outcome {
    let grid: Vec<f64> = (0..41).map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 40.0)).collect();
    let betas = [-1.0, 0.0, 0.3, 0.5, 1.0, 1.2, 1.5, 1.8, 2.0, 2.5, 3.0];
    let mut worst_identity: f64 = 0.0;
    let mut problems = Vec::new();
    for &beta in &betas {
        let p = BetaParams::new(beta).unwrap();
        for &x in &grid {
            for &y in &grid {
                let d = d_beta(x, y, &p).unwrap();
                let cv = split_convex(x, y, &p).unwrap();
                let cc = split_concave(x, y, &p).unwrap();
                let rel = (cv + cc - d).abs() / (cv.abs() + cc.abs()).max(f64::MIN_POSITIVE);
                worst_identity = worst_identity.max(rel);
            }
            if beta >= 2.0 {
                continue;
            }
            // Second derivatives by central differences of the analytic first derivatives.
            let second = |g: &dyn Fn(f64) -> f64, y: f64| {
                let h = 1e-5 * y;
                (g(y + h) - g(y - h)) / (2.0 * h)
            };
            let d1v = |y: f64| split_convex_d1(x, y, &p).unwrap();
            let d1c = |y: f64| split_concave_d1(x, y, &p).unwrap();
            let mut prev: Option<f64> = None;
            for &y in &grid {
                let cv2 = second(&d1v, y);
                let cc2 = second(&d1c, y);
                let scale = 1e-6 * (1.0 + cv2.abs() + cc2.abs());
                if cv2 < -scale {
                    problems.push(format!("beta={beta} x={x} y={y}: convex part has curvature {cv2:e}"));
                }
                if cc2 > scale {
                    problems.push(format!("beta={beta} x={x} y={y}: concave part has curvature {cc2:e}"));
                }
                if let Some(pv) = prev {
                    if cv2 > pv + 1e-6 * (1.0 + pv.abs()) {
                        problems.push(format!("beta={beta} x={x} y={y}: convex curvature increases"));
                    }
                }
                prev = Some(cv2);
            }
        }
    }
    let pass = worst_identity <= 1e-10 && problems.is_empty();
    outcome(
        pass,
        format!(
            "max relative identity error {worst_identity:.2e}, {} shape problems{}",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    )
}

fn minvol_problem() -> synth::SyntheticData {
    synth::synth_separable(50, 4, 500, MINVOL_INTENSITY, NoiseModel::Poisson, 1.0, 6).unwrap()
}

const MINVOL_INTENSITY: f64 = 1000.0;
const MINVOL_DELTA: f64 = 0.1;

fn criterion_minvol(residuals: &mut Vec<(String, f64)>) -> Outcome {
    let data = minvol_problem();
    let opts = SolverOptions {
        max_iters: 300,
        seed: 1,
        ..SolverOptions::default()
    };
    let (w0, h0) = algorithms::random_factors(50, 4, 500, opts.seed);
    let lambda = algorithms::balanced_minvol_lambda(&data.v, &w0, &h0, MINVOL_DELTA, 0.1).unwrap();
    let t = Instant::now();
    let fit = algorithms::fit_minvol_kl_from(&data.v, w0.clone(), h0.clone(), lambda, MINVOL_DELTA, &opts);
    let minvol_time = t.elapsed().as_secs_f64();
    let fit = match fit {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let t = Instant::now();
    let base = algorithms::fit_baseline_from(&data.v, w0, h0, &opts);
    let base_time = t.elapsed().as_secs_f64();
    if let Err(e) = base {
        return outcome(false, format!("baseline failed: {e}"));
    }
    residuals.push(("minvol".into(), fit.trace.max_residual()));
    let rises = fit.trace.monotone_violations(MONOTONE_TOL);
    let col_sums = fit
        .w
        .columns()
        .into_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let err = match_columns(&fit.w, &data.w_true).unwrap().mean_error;
    let ratio = minvol_time / base_time;
    let pass = rises.is_empty() && col_sums <= RESIDUAL_TOL && err <= 0.05 && ratio <= 2.0;
    outcome(
        pass,
        format!(
            "lambda {lambda:.3e}, {} objective rises, max |column sum - 1| {col_sums:.1e}, mean column error {err:.4} (<= 0.05), time ratio {ratio:.2} (<= 2)",
            rises.len()
        ),
    )
}

fn sparse_problem(seed: u64) -> synth::SyntheticData {
    synth::synth_sparse(60, 5, 300, 0.3, 100.0, NoiseModel::Poisson, 1.0, seed).unwrap()
}

fn criterion_sparsity(residuals: &mut Vec<(String, f64)>) -> Outcome {
    let mut finals = Vec::new();
    let mut problems = Vec::new();
    for seed in 0..10u64 {
        let data = sparse_problem(seed);
        let opts = SolverOptions {
            max_iters: 300,
            seed,
            ..SolverOptions::default()
        };
        let schedule = SparsitySchedule {
            lambda0: vec![0.5; 5],
            rate_alpha: 1.01,
            target_sp: 0.5,
            window: (1, 250),
        };
        match algorithms::fit_sparse_sphere_kl(&data.v, 5, &schedule, 1.0, &opts) {
            Ok(fit) => {
                residuals.push((format!("sparse seed={seed}"), residual_max_without_fallback(&fit)));
                finals.push(algorithms::mean_row_sparsity(&fit.h).unwrap());
            }
            Err(e) => problems.push(format!("seed {seed}: {e}")),
        }
    }
    let pass = problems.is_empty() && finals.iter().all(|s| (0.45..=0.55).contains(s));
    outcome(
        pass,
        format!(
            "final mean row sparsity {:?}{}",
            finals.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
            problems.first().map(|p| format!(", first problem: {p}")).unwrap_or_default()
        ),
    )
}

fn residual_max_without_fallback(fit: &Fit) -> f64 {
    fit.trace
        .rows
        .iter()
        .filter(|r| r.fallback_count == 0)
        .map(|r| r.max_residual)
        .fold(0.0, f64::max)
}

fn criterion_scaling() -> Outcome {
    let sizes = [500usize, 1000, 2000, 4000];
    let iters = 60;
    let mut per_iter = Vec::new();
    let mut newton_share = 0.0;
    for &n in &sizes {
        let data = synth::synth_simplex(50, 5, n, NoiseModel::Poisson, 0.01, 8).unwrap();
        let opts = SolverOptions {
            max_iters: iters,
            objective_every: iters,
            ..SolverOptions::default()
        };
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            let fit = algorithms::fit_ssnmf(&data.v, 5, &opts).unwrap();
            let total = t.elapsed().as_secs_f64();
            if total < best {
                best = total;
                let newton: f64 = fit.trace.rows.iter().map(|r| r.newton_seconds).sum();
                newton_share = newton / total;
            }
        }
        per_iter.push(best / iters as f64);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = per_iter.iter().map(|t| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let pass = (0.8..=1.2).contains(&slope) && newton_share <= 0.15;
    outcome(
        pass,
        format!(
            "per-iteration ms {:?}, log-log slope {slope:.3} (0.8..1.2), Newton share at N=4000 {:.1}% (<= 15%)",
            per_iter.iter().map(|t| format!("{:.3}", t * 1e3)).collect::<Vec<_>>(),
            100.0 * newton_share
        ),
    )
}

fn max_rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_degeneration() -> Outcome {
    let mut problems = Vec::new();
    let data = synth::synth_simplex(20, 4, 30, NoiseModel::Poisson, 0.05, 9).unwrap();
    let opts = SolverOptions {
        max_iters: 50,
        seed: 2,
        ..SolverOptions::default()
    };

    // λ = 0 min-volume against plain KL updates with W columns normalized.
    let (w0, h0) = algorithms::random_factors(20, 4, 30, opts.seed);
    let fit = algorithms::fit_minvol_kl_from(&data.v, w0.clone(), h0.clone(), 0.0, 1.0, &opts).unwrap();
    let p = BetaParams::kl();
    let normalize = |w: &mut Matrix| {
        for mut c in w.columns_mut() {
            let s = c.sum();
            c.mapv_inplace(|x| x / s);
        }
    };
    let (mut w, mut h) = (w0.clone(), h0.clone());
    normalize(&mut w);
    for _ in 0..opts.max_iters {
        let c = updates::mu_coefficients(&data.v, &w, &h, &p).unwrap();
        h = updates::update_unconstrained(&h, &c, &p);
        let c = updates::mu_coefficients_for_w(&data.v, &w, &h, &p).unwrap();
        w = updates::update_unconstrained(&w, &c, &p);
        normalize(&mut w);
    }
    let mv_diff = max_rel_diff(&fit.w, &w).max(max_rel_diff(&fit.h, &h));
    if mv_diff > 1e-9 {
        problems.push(format!("lambda=0 min-volume differs from normalized KL by {mv_diff:e}"));
    }

    // Empty constraint sets against the baseline, bit for bit.
    let mut exact = true;
    for &beta in &[0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let o = SolverOptions { beta, ..opts.clone() };
        let v = data.v.mapv(|x| x + 0.1);
        let a = algorithms::fit_baseline_from(&v, w0.clone(), h0.clone(), &o).unwrap();
        let empty = ConstraintSet::default();
        let b = algorithms::fit_constrained_from(&v, w0.clone(), h0.clone(), &empty, &empty, &o).unwrap();
        if a.w != b.w || a.h != b.h {
            exact = false;
            problems.push(format!("empty constraints differ from baseline at beta={beta}"));
        }
    }

    // Exact factorizations are fixed points of every update.
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (f, k, n) = (8, 3, 12);
    let mut w = positive_matrix(&mut rng, f, k, 0.2, 1.0);
    normalize(&mut w);
    let h = positive_matrix(&mut rng, k, n, 0.2, 1.0);
    let v = w.dot(&h);
    let root = RootOptions {
        polish: true,
        ..RootOptions::default()
    };
    for &beta in &[-0.5, 0.0, 0.5, 1.0, 1.3, 1.5, 2.0, 2.5] {
        let p = BetaParams::new(beta).unwrap();
        let ch = updates::mu_coefficients(&v, &w, &h, &p).unwrap();
        let cw = updates::mu_coefficients_for_w(&v, &w, &h, &p).unwrap();
        worst = worst.max(max_abs_diff(&updates::update_unconstrained(&h, &ch, &p), &h));
        worst = worst.max(max_abs_diff(&updates::update_unconstrained(&w, &cw, &p), &w));
        if beta <= 2.0 {
            for lc in &constraints::simplex_columns(k, n).linear {
                let rhs: f64 = lc.set.pairs.iter().map(|&(r, c)| h[[r, c]]).sum();
                let lc = LinearConstraint::new(lc.set.pairs.clone(), lc.weights.clone(), rhs);
                let sol = updates::update_linear_constrained(&h, &ch, &lc, &p, &root).unwrap();
                for (&(r, c), y) in lc.set.pairs.iter().zip(&sol.values) {
                    worst = worst.max((h[[r, c]] - y).abs());
                }
            }
        }
        if beta <= 1.0 {
            let sparse = updates::update_sparse_h(&h, &ch, &vec![0.0; k], &p).unwrap();
            worst = worst.max(max_abs_diff(&sparse, &h));
        }
    }
    let state = MinVolState::new(&w, 0.0, 1.0).unwrap();
    let coeff = updates::minvol_coefficients(&v, &w, &h, &state).unwrap();
    let solve = updates::solve_minvol_multipliers(&w, &coeff, &root).unwrap();
    worst = worst.max(max_abs_diff(&updates::update_minvol_w(&w, &coeff, &solve.multipliers), &w));
    for sc in &constraints::sphere_columns(k, 1.0).spheres {
        let mut ws = w.clone();
        let norm = ws.column(sc.column).iter().map(|x| x * x).sum::<f64>().sqrt();
        ws.column_mut(sc.column).mapv_inplace(|x| x / norm);
        let mut hs = h.clone();
        hs.row_mut(sc.column).mapv_inplace(|x| x * norm);
        let vs = ws.dot(&hs);
        let up = updates::update_sphere_w(&ws, &vs, &hs, sc, &root).unwrap();
        for (fi, y) in up.column.iter().enumerate() {
            worst = worst.max((ws[[fi, sc.column]] - y).abs());
        }
    }
    if worst > 1e-10 {
        problems.push(format!("fixed-point drift {worst:e}"));
    }
    outcome(
        problems.is_empty(),
        format!(
            "lambda=0 min-volume vs normalized KL {mv_diff:.1e}, empty constraints bitwise equal: {exact}, max fixed-point drift {worst:.1e}{}",
            problems.first().map(|p| format!(" (first problem: {p})")).unwrap_or_default()
        ),
    )
}

fn main() -> ExitCode {
    let mut residuals: Vec<(String, f64)> = Vec::new();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "{} [{name}] {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((name, o));
    };
    run("1 monotone descent", &mut || criterion_monotone_descent(&mut residuals));
    run("3 newton behavior", &mut criterion_newton_behavior);
    run("4 oracle equivalence", &mut criterion_oracle_equivalence);
    run("5 decomposition", &mut criterion_decomposition);
    run("6 min-volume reproduction", &mut || criterion_minvol(&mut residuals));
    run("7 sparsity schedule", &mut || criterion_sparsity(&mut residuals));
    run("8 complexity scaling", &mut criterion_scaling);
    run("9 degeneration", &mut criterion_degeneration);
    let worst = residuals
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .unwrap_or_default();
    let pass = residuals.iter().all(|(_, r)| *r <= RESIDUAL_TOL);
    run("2 constraint exactness", &mut || {
        outcome(
            pass,
            format!(
                "{} runs, max residual {:.2e} ({}), tolerance 1e-6",
                residuals.len(),
                worst.1,
                worst.0
            ),
        )
    });
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
