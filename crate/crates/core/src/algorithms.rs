//! Alternating drivers: constrained β-NMF, simplex-structured NMF, min-volume
//! KL-NMF, sphere-normalized sparse KL-NMF, and the plain multiplicative baseline.

use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{self, ConstraintSet};
use crate::divergence::{check_data, BetaParams};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rootfind::RootOptions;
use crate::updates::{self, LinearBlock, MinVolState, SphereOutcome};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub beta: f64,
    pub seed: u64,
    /// Absolute residual at which a multiplier solve stops.
    pub tol_residual: f64,
    /// Entries are clamped from below at `floor_eps · max(V)` after every update.
    pub floor_eps: f64,
    /// Keep per-constraint multipliers in the trace.
    pub record_trace: bool,
    pub objective_every: usize,
    pub newton_max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 300,
            beta: 1.0,
            seed: 0,
            tol_residual: 1e-6,
            floor_eps: 1e-15,
            record_trace: false,
            objective_every: 1,
            newton_max_iters: 200,
        }
    }
}

impl SolverOptions {
    fn check(&self) -> Result<BetaParams> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.floor_eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "floor_eps must be > 0, got {}",
                self.floor_eps
            )));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol_residual must be > 0, got {}",
                self.tol_residual
            )));
        }
        if self.objective_every == 0 {
            return Err(Error::InvalidParameter("objective_every must be at least 1".into()));
        }
        BetaParams::new(self.beta)
    }

    fn root_options(&self) -> RootOptions {
        RootOptions {
            tol_residual: self.tol_residual,
            max_iters: self.newton_max_iters,
            polish: true,
            record_path: false,
        }
    }

    fn require_kl(&self, model: &str) -> Result<()> {
        if self.beta != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "{model} is defined for beta = 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Row-wise ℓ1 weights grown geometrically while a row is not sparse enough.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsitySchedule {
    pub lambda0: Vec<f64>,
    pub rate_alpha: f64,
    pub target_sp: f64,
    /// Inclusive iteration range (1-based) in which the weights may grow.
    pub window: (usize, usize),
}

impl SparsitySchedule {
    /// Constant weights.
    pub fn fixed(lambda: Vec<f64>) -> Self {
        Self {
            lambda0: lambda,
            rate_alpha: 1.05,
            target_sp: 0.0,
            window: (0, 0),
        }
    }

    fn check(&self, k: usize, max_iters: usize) -> Result<()> {
        if self.lambda0.len() != k {
            return Err(Error::Dimension(format!(
                "{} penalty weights for rank {k}",
                self.lambda0.len()
            )));
        }
        if self.lambda0.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter("penalty weights must be >= 0".into()));
        }
        if !(self.rate_alpha > 1.0) || !self.rate_alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rate_alpha must be > 1, got {}",
                self.rate_alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.target_sp) {
            return Err(Error::InvalidParameter(format!(
                "target sparsity must lie in [0, 1], got {}",
                self.target_sp
            )));
        }
        let (a, b) = self.window;
        if a > b || b > max_iters {
            return Err(Error::InvalidParameter(format!(
                "schedule window ({a}, {b}) must satisfy a <= b <= {max_iters}"
            )));
        }
        Ok(())
    }

    fn active(&self, iter: usize) -> bool {
        self.target_sp > 0.0 && iter >= self.window.0 && iter <= self.window.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveValue {
    pub divergence: f64,
    pub penalty: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Penalty {
    None,
    /// `λ · log det(WᵀW + δI)`.
    MinVolume { lambda: f64, delta: f64 },
    /// `Σ_k λ_k ‖H(k, :)‖₁`.
    RowL1(Vec<f64>),
}

pub fn objective(
    v: &Array2<f64>,
    w: &Array2<f64>,
    h: &Array2<f64>,
    p: &BetaParams,
    penalty: &Penalty,
) -> Result<ObjectiveValue> {
    let divergence = crate::divergence::d_beta_matrix(v, w, h, p)?;
    let penalty = penalty_value(w, h, penalty)?;
    Ok(ObjectiveValue {
        divergence,
        penalty,
        total: divergence + penalty,
    })
}

fn penalty_value(w: &Array2<f64>, h: &Array2<f64>, penalty: &Penalty) -> Result<f64> {
    Ok(match penalty {
        Penalty::None => 0.0,
        Penalty::MinVolume { lambda, delta } => {
            if *lambda == 0.0 {
                0.0
            } else {
                lambda * linalg::gram_logdet(w, *delta)?
            }
        }
        Penalty::RowL1(lambda) => h
            .rows()
            .into_iter()
            .zip(lambda)
            .map(|(row, l)| l * row.iter().map(|x| x.abs()).sum::<f64>())
            .sum(),
    })
}

/// Hoyer's measure `(√N − ‖x‖₁/‖x‖₂)/(√N − 1)`: 0 for constant rows, 1 for one-hot rows.
pub fn hoyer_sparsity(row: &[f64]) -> Result<f64> {
    let n = row.len();
    if n < 2 {
        return Err(Error::Domain(format!("sparsity needs at least 2 entries, got {n}")));
    }
    let l1: f64 = row.iter().map(|x| x.abs()).sum();
    let l2 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(l2 > 0.0) {
        return Err(Error::Domain("sparsity of a zero vector".into()));
    }
    let sn = (n as f64).sqrt();
    Ok((sn - l1 / l2) / (sn - 1.0))
}

/// Mean of [`hoyer_sparsity`] over the rows of `h`.
pub fn mean_row_sparsity(h: &Array2<f64>) -> Result<f64> {
    let mut total = 0.0;
    for row in h.rows() {
        total += hoyer_sparsity(&row.to_vec())?;
    }
    Ok(total / h.nrows() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub divergence: f64,
    pub penalty: f64,
    pub objective: f64,
    pub max_residual: f64,
    /// Multipliers of the last iteration, `H` blocks first; empty unless requested.
    pub multipliers: Vec<f64>,
    /// Newton steps since the previous row.
    pub newton_iters: usize,
    /// Sphere fallbacks since the previous row.
    pub fallback_count: usize,
    /// The penalty weights changed since the previous row.
    pub penalty_changed: bool,
    pub elapsed_s: f64,
    /// Time spent in multiplier solves since the previous row.
    pub newton_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn fallback_total(&self) -> usize {
        self.rows.iter().map(|r| r.fallback_count).sum()
    }

    pub fn newton_total(&self) -> usize {
        self.rows.iter().map(|r| r.newton_iters).sum()
    }

    /// Iterations at which the objective rose by more than `rel_tol · (1 + |previous|)`.
    /// Rows reached through a penalty change or a fallback are not compared.
    pub fn monotone_violations(&self, rel_tol: f64) -> Vec<usize> {
        self.rows
            .windows(2)
            .filter(|w| !w[1].penalty_changed && w[1].fallback_count == 0)
            .filter(|w| w[1].objective > w[0].objective + rel_tol * (1.0 + w[0].objective.abs()))
            .map(|w| w[1].iter)
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.max_residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    pub trace: ConvergenceTrace,
    /// Final ℓ1 weights for the sparse model; empty otherwise.
    pub lambda: Vec<f64>,
}

/// Uniform draws on `(0, 1]`, `W` first then `H`, both row-major.
pub fn random_factors(f: usize, k: usize, n: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize, c: usize| {
        Array2::from_shape_simple_fn((r, c), || 1.0 - rng.random::<f64>())
    };
    let w = draw(f, k);
    let h = draw(k, n);
    (w, h)
}

fn floor_value(v: &Array2<f64>, opts: &SolverOptions) -> Result<f64> {
    let max = v.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Domain("data matrix has no positive entry".into()));
    }
    Ok(opts.floor_eps * max)
}

fn apply_floor(m: &mut Array2<f64>, floor: f64) {
    m.mapv_inplace(|x| x.max(floor));
}

/// Scales every constrained block of `m` onto its constraint.
fn project(m: &mut Array2<f64>, cs: &ConstraintSet) {
    for lc in &cs.linear {
        let s: f64 = lc
            .set
            .pairs
            .iter()
            .zip(&lc.weights)
            .map(|(&(r, c), g)| g * m[[r, c]])
            .sum();
        let scale = lc.rhs / s;
        for &(r, c) in &lc.set.pairs {
            m[[r, c]] *= scale;
        }
    }
    for sc in &cs.spheres {
        let mut col = m.column_mut(sc.column);
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = sc.radius_sq.sqrt() / norm;
        col.mapv_inplace(|x| x * scale);
    }
}

fn check_start(
    v: &Array2<f64>,
    w: &Array2<f64>,
    h: &Array2<f64>,
) -> Result<()> {
    if w.nrows() != v.nrows() || h.ncols() != v.ncols() || w.ncols() != h.nrows() {
        return Err(Error::Dimension(format!(
            "V is {:?}, W is {:?}, H is {:?}",
            v.dim(),
            w.dim(),
            h.dim()
        )));
    }
    if w.ncols() == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    for (name, m) in [("W", w), ("H", h)] {
        if let Some(((i, j), x)) = m.indexed_iter().find(|(_, x)| !(**x > 0.0) || !x.is_finite()) {
            return Err(Error::Domain(format!(
                "initial {name} entry ({i}, {j}) = {x} is not strictly positive"
            )));
        }
    }
    Ok(())
}

fn with_iter(e: Error, iter: usize) -> Error {
    match e {
        Error::Root { context, source } => Error::Root {
            context: format!("iteration {iter}, {context}"),
            source,
        },
        other => other,
    }
}

struct Recorder {
    start: Instant,
    every: usize,
    last_iter: usize,
    keep_multipliers: bool,
    newton_iters: usize,
    fallbacks: usize,
    penalty_changed: bool,
    newton_seconds: f64,
    trace: ConvergenceTrace,
}

impl Recorder {
    fn new(opts: &SolverOptions) -> Self {
        Self {
            start: Instant::now(),
            every: opts.objective_every,
            last_iter: opts.max_iters,
            keep_multipliers: opts.record_trace,
            newton_iters: 0,
            fallbacks: 0,
            penalty_changed: false,
            newton_seconds: 0.0,
            trace: ConvergenceTrace::default(),
        }
    }

    fn due(&self, iter: usize) -> bool {
        iter == 0 || iter == self.last_iter || iter.is_multiple_of(self.every)
    }

    fn record(
        &mut self,
        iter: usize,
        value: ObjectiveValue,
        max_residual: f64,
        multipliers: Vec<f64>,
    ) {
        self.trace.rows.push(TraceRow {
            iter,
            divergence: value.divergence,
            penalty: value.penalty,
            objective: value.total,
            max_residual,
            multipliers: if self.keep_multipliers {
                multipliers
            } else {
                Vec::new()
            },
            newton_iters: self.newton_iters,
            fallback_count: self.fallbacks,
            penalty_changed: self.penalty_changed,
            elapsed_s: self.start.elapsed().as_secs_f64(),
            newton_seconds: self.newton_seconds,
        });
        self.newton_iters = 0;
        self.fallbacks = 0;
        self.penalty_changed = false;
        self.newton_seconds = 0.0;
    }
}

/// Plain multiplicative updates for both factors from a seeded start.
pub fn fit_baseline(v: &Array2<f64>, k: usize, opts: &SolverOptions) -> Result<Fit> {
    let (w, h) = random_factors(v.nrows(), k, v.ncols(), opts.seed);
    fit_baseline_from(v, w, h, opts)
}

pub fn fit_baseline_from(
    v: &Array2<f64>,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
    opts: &SolverOptions,
) -> Result<Fit> {
    let p = opts.check()?;
    check_data(v, &p)?;
    check_start(v, &w, &h)?;
    let floor = floor_value(v, opts)?;
    apply_floor(&mut w, floor);
    apply_floor(&mut h, floor);
    let mut rec = Recorder::new(opts);
    let value = objective(v, &w, &h, &p, &Penalty::None)?;
    rec.record(0, value, 0.0, Vec::new());
    for iter in 1..=opts.max_iters {
        let coeff = updates::mu_coefficients(v, &w, &h, &p)?;
        h = updates::update_unconstrained(&h, &coeff, &p);
        apply_floor(&mut h, floor);
        let coeff = updates::mu_coefficients_for_w(v, &w, &h, &p)?;
        w = updates::update_unconstrained(&w, &coeff, &p);
        apply_floor(&mut w, floor);
        if rec.due(iter) {
            let value = objective(v, &w, &h, &p, &Penalty::None)?;
            rec.record(iter, value, 0.0, Vec::new());
        }
    }
    Ok(Fit {
        w,
        h,
        trace: rec.trace,
        lambda: Vec::new(),
    })
}

/// Disjoint-constrained β-NMF from a seeded uniform start.
pub fn fit_constrained(
    v: &Array2<f64>,
    k: usize,
    cs_w: &ConstraintSet,
    cs_h: &ConstraintSet,
    opts: &SolverOptions,
) -> Result<Fit> {
    let (w, h) = random_factors(v.nrows(), k, v.ncols(), opts.seed);
    fit_constrained_from(v, w, h, cs_w, cs_h, opts)
}

/// Disjoint-constrained β-NMF from the given factors, which are first scaled onto
/// the constraints.
///
/// Linear constraints are accepted on both factors for β ≤ 2; sphere constraints
/// on columns of `W` require β = 1.
pub fn fit_constrained_from(
    v: &Array2<f64>,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
    cs_w: &ConstraintSet,
    cs_h: &ConstraintSet,
    opts: &SolverOptions,
) -> Result<Fit> {
    let p = opts.check()?;
    check_data(v, &p)?;
    check_start(v, &w, &h)?;
    let (f, k, n) = (v.nrows(), w.ncols(), v.ncols());
    constraints::validate(cs_w, f, k)?;
    constraints::validate(cs_h, k, n)?;
    if !cs_h.spheres.is_empty() {
        return Err(Error::Unsupported("sphere constraints on H".into()));
    }
    if !cs_w.spheres.is_empty() && p.beta() != 1.0 {
        return Err(Error::Unsupported(format!(
            "sphere constraints for beta = {}",
            p.beta()
        )));
    }
    if p.beta() > 2.0 && !(cs_w.linear.is_empty() && cs_h.linear.is_empty()) {
        return Err(Error::Unsupported(format!(
            "linear constraints for beta = {} > 2",
            p.beta()
        )));
    }
    let floor = floor_value(v, opts)?;
    let root_opts = opts.root_options();
    let skip_w = cs_w.owner_mask(f, k);
    let skip_h = cs_h.owner_mask(k, n);
    let residual = |w: &Array2<f64>, h: &Array2<f64>| cs_w.max_residual(w).max(cs_h.max_residual(h));

    project(&mut w, cs_w);
    project(&mut h, cs_h);
    apply_floor(&mut w, floor);
    apply_floor(&mut h, floor);

    let mut rec = Recorder::new(opts);
    let value = objective(v, &w, &h, &p, &Penalty::None)?;
    rec.record(0, value, residual(&w, &h), Vec::new());

    let mut multipliers = Vec::new();
    let mut blocks_h = vec![LinearBlock::empty(p); cs_h.linear.len()];
    let mut blocks_w = vec![LinearBlock::empty(p); cs_w.linear.len()];
    let mut roots_h: Vec<Option<f64>> = vec![None; cs_h.linear.len()];
    let mut roots_w: Vec<Option<f64>> = vec![None; cs_w.linear.len()];
    for iter in 1..=opts.max_iters {
        multipliers.clear();

        let coeff = updates::mu_coefficients(v, &w, &h, &p)?;
        let mut h_new = h.clone();
        updates::apply_unconstrained_masked(&mut h_new, &h, &coeff, &p, &skip_h);
        for (lc, block) in cs_h.linear.iter().zip(blocks_h.iter_mut()) {
            block.reload(&h, &coeff, lc);
        }
        let t0 = Instant::now();
        for ((lc, block), root) in cs_h.linear.iter().zip(&blocks_h).zip(roots_h.iter_mut()) {
            let sol = block
                .find_multiplier(&root_opts, *root)
                .map_err(|e| Error::root(format!("iteration {iter}, H block of {} entries", lc.set.len()), e))?;
            *root = Some(sol.root);
            rec.newton_iters += sol.iters;
        }
        rec.newton_seconds += t0.elapsed().as_secs_f64();
        for ((lc, block), root) in cs_h.linear.iter().zip(&blocks_h).zip(&roots_h) {
            let mu = root.expect("multiplier solved above");
            block.scatter(mu, &lc.set.pairs, &mut h_new);
            multipliers.push(mu);
        }
        h = h_new;
        apply_floor(&mut h, floor);

        let coeff = updates::mu_coefficients_for_w(v, &w, &h, &p)?;
        let mut w_new = w.clone();
        updates::apply_unconstrained_masked(&mut w_new, &w, &coeff, &p, &skip_w);
        for (lc, block) in cs_w.linear.iter().zip(blocks_w.iter_mut()) {
            block.reload(&w, &coeff, lc);
        }
        let t0 = Instant::now();
        for ((lc, block), root) in cs_w.linear.iter().zip(&blocks_w).zip(roots_w.iter_mut()) {
            let sol = block
                .find_multiplier(&root_opts, *root)
                .map_err(|e| Error::root(format!("iteration {iter}, W block of {} entries", lc.set.len()), e))?;
            *root = Some(sol.root);
            rec.newton_iters += sol.iters;
        }
        rec.newton_seconds += t0.elapsed().as_secs_f64();
        for ((lc, block), root) in cs_w.linear.iter().zip(&blocks_w).zip(&roots_w) {
            let mu = root.expect("multiplier solved above");
            block.scatter(mu, &lc.set.pairs, &mut w_new);
            multipliers.push(mu);
        }
        let mut rescaled_h = false;
        let t0 = Instant::now();
        for sc in &cs_w.spheres {
            let up = updates::sphere_from_coefficients(&w, &coeff, sc, &root_opts)
                .map_err(|e| with_iter(e, iter))?;
            w_new.column_mut(sc.column).assign(&ndarray::Array1::from(up.column));
            match up.outcome {
                SphereOutcome::Solved {
                    multiplier,
                    newton_iters,
                } => {
                    rec.newton_iters += newton_iters;
                    multipliers.push(multiplier);
                }
                SphereOutcome::Fallback { h_scale } => {
                    h.row_mut(sc.column).mapv_inplace(|x| x * h_scale);
                    rescaled_h = true;
                    rec.fallbacks += 1;
                    multipliers.push(f64::NAN);
                }
            }
        }
        rec.newton_seconds += t0.elapsed().as_secs_f64();
        w = w_new;
        apply_floor(&mut w, floor);
        if rescaled_h {
            apply_floor(&mut h, floor);
        }

        if rec.due(iter) {
            let value = objective(v, &w, &h, &p, &Penalty::None)?;
            rec.record(iter, value, residual(&w, &h), multipliers.clone());
        }
    }
    Ok(Fit {
        w,
        h,
        trace: rec.trace,
        lambda: Vec::new(),
    })
}

/// Columns of `H` on the unit simplex.
pub fn fit_ssnmf(v: &Array2<f64>, k: usize, opts: &SolverOptions) -> Result<Fit> {
    let cs_h = constraints::simplex_columns(k, v.ncols());
    fit_constrained(v, k, &ConstraintSet::default(), &cs_h, opts)
}

/// Min-volume weight making `λ |log det(WᵀW + δI)|` equal to `ratio` times the KL
/// divergence at the starting point (after `W` is projected onto the simplex).
pub fn balanced_minvol_lambda(
    v: &Array2<f64>,
    w0: &Array2<f64>,
    h0: &Array2<f64>,
    delta: f64,
    ratio: f64,
) -> Result<f64> {
    check_start(v, w0, h0)?;
    let mut w = w0.clone();
    let cs_w = constraints::simplex_columns_of_w(w.nrows(), w.ncols());
    project(&mut w, &cs_w);
    let p = BetaParams::kl();
    let fit = crate::divergence::d_beta_matrix(v, &w, h0, &p)?;
    let logdet = linalg::gram_logdet(&w, delta)?.abs();
    if !(logdet > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log det of the starting Gram matrix vanishes for delta = {delta}"
        )));
    }
    Ok(ratio * fit / logdet)
}

/// KL-NMF penalized by `λ · log det(WᵀW + δI)` with columns of `W` summing to one.
pub fn fit_minvol_kl(
    v: &Array2<f64>,
    k: usize,
    lambda: f64,
    delta: f64,
    opts: &SolverOptions,
) -> Result<Fit> {
    let (w, h) = random_factors(v.nrows(), k, v.ncols(), opts.seed);
    fit_minvol_kl_from(v, w, h, lambda, delta, opts)
}

pub fn fit_minvol_kl_from(
    v: &Array2<f64>,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
    lambda: f64,
    delta: f64,
    opts: &SolverOptions,
) -> Result<Fit> {
    opts.require_kl("min-volume KL-NMF")?;
    let p = opts.check()?;
    check_data(v, &p)?;
    check_start(v, &w, &h)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    let k = w.ncols();
    let cs_w = constraints::simplex_columns_of_w(w.nrows(), k);
    let floor = floor_value(v, opts)?;
    let root_opts = opts.root_options();
    let penalty = Penalty::MinVolume { lambda, delta };

    project(&mut w, &cs_w);
    apply_floor(&mut w, floor);
    apply_floor(&mut h, floor);

    let mut rec = Recorder::new(opts);
    let value = objective(v, &w, &h, &p, &penalty)?;
    rec.record(0, value, cs_w.max_residual(&w), Vec::new());

    for iter in 1..=opts.max_iters {
        let coeff = updates::mu_coefficients(v, &w, &h, &p)?;
        h = updates::update_unconstrained(&h, &coeff, &p);
        apply_floor(&mut h, floor);

        let state = MinVolState::new(&w, lambda, delta)?;
        let coeff = updates::minvol_coefficients(v, &w, &h, &state)?;
        let t0 = Instant::now();
        let solve = updates::solve_minvol_multipliers(&w, &coeff, &root_opts)
            .map_err(|e| with_iter(e, iter))?;
        rec.newton_seconds += t0.elapsed().as_secs_f64();
        rec.newton_iters += solve.newton_iters;
        w = updates::update_minvol_w(&w, &coeff, &solve.multipliers);
        apply_floor(&mut w, floor);

        if rec.due(iter) {
            let value = objective(v, &w, &h, &p, &penalty)?;
            rec.record(iter, value, cs_w.max_residual(&w), solve.multipliers);
        }
    }
    Ok(Fit {
        w,
        h,
        trace: rec.trace,
        lambda: Vec::new(),
    })
}

/// KL-NMF with row-wise ℓ1 penalties on `H` and columns of `W` on the sphere of
/// squared radius `rho`.
pub fn fit_sparse_sphere_kl(
    v: &Array2<f64>,
    k: usize,
    schedule: &SparsitySchedule,
    rho: f64,
    opts: &SolverOptions,
) -> Result<Fit> {
    let (w, h) = random_factors(v.nrows(), k, v.ncols(), opts.seed);
    fit_sparse_sphere_kl_from(v, w, h, schedule, rho, opts)
}

pub fn fit_sparse_sphere_kl_from(
    v: &Array2<f64>,
    mut w: Array2<f64>,
    mut h: Array2<f64>,
    schedule: &SparsitySchedule,
    rho: f64,
    opts: &SolverOptions,
) -> Result<Fit> {
    opts.require_kl("sparse KL-NMF")?;
    let p = opts.check()?;
    check_data(v, &p)?;
    check_start(v, &w, &h)?;
    let k = w.ncols();
    schedule.check(k, opts.max_iters)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("rho must be > 0, got {rho}")));
    }
    let cs_w = constraints::sphere_columns(k, rho);
    let floor = floor_value(v, opts)?;
    let root_opts = opts.root_options();
    let mut lambda = schedule.lambda0.clone();

    project(&mut w, &cs_w);
    apply_floor(&mut w, floor);
    apply_floor(&mut h, floor);

    let mut rec = Recorder::new(opts);
    let value = objective(v, &w, &h, &p, &Penalty::RowL1(lambda.clone()))?;
    rec.record(0, value, cs_w.max_residual(&w), Vec::new());

    let mut multipliers = Vec::with_capacity(k);
    for iter in 1..=opts.max_iters {
        multipliers.clear();
        let coeff = updates::mu_coefficients(v, &w, &h, &p)?;
        h = updates::update_sparse_h(&h, &coeff, &lambda, &p)?;
        apply_floor(&mut h, floor);

        let coeff = updates::mu_coefficients_for_w(v, &w, &h, &p)?;
        let mut w_new = w.clone();
        let mut fallback_cols = Vec::new();
        let t0 = Instant::now();
        for sc in &cs_w.spheres {
            let up = updates::sphere_from_coefficients(&w, &coeff, sc, &root_opts)
                .map_err(|e| with_iter(e, iter))?;
            w_new.column_mut(sc.column).assign(&ndarray::Array1::from(up.column));
            match up.outcome {
                SphereOutcome::Solved {
                    multiplier,
                    newton_iters,
                } => {
                    rec.newton_iters += newton_iters;
                    multipliers.push(multiplier);
                }
                SphereOutcome::Fallback { h_scale } => {
                    h.row_mut(sc.column).mapv_inplace(|x| x * h_scale);
                    fallback_cols.push(sc.column);
                    rec.fallbacks += 1;
                    multipliers.push(f64::NAN);
                }
            }
        }
        rec.newton_seconds += t0.elapsed().as_secs_f64();
        w = w_new;
        apply_floor(&mut w, floor);
        if !fallback_cols.is_empty() {
            apply_floor(&mut h, floor);
        }

        if rec.due(iter) {
            let value = objective(v, &w, &h, &p, &Penalty::RowL1(lambda.clone()))?;
            rec.record(iter, value, cs_w.max_residual(&w), multipliers.clone());
        }

        if schedule.active(iter) {
            for (kk, row) in h.axis_iter(Axis(0)).enumerate() {
                if hoyer_sparsity(&row.to_vec())? < schedule.target_sp {
                    lambda[kk] *= schedule.rate_alpha;
                    rec.penalty_changed = true;
                }
            }
        }
    }
    Ok(Fit {
        w,
        h,
        trace: rec.trace,
        lambda,
    })
}
