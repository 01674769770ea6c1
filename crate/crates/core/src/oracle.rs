//! Brute-force reference solvers for checking the Newton-based updates on tiny
//! blocks. They evaluate the majorizer directly from the convex/concave split of
//! the divergence and never touch the closed-form update algebra.

use ndarray::Array2;
use serde::Serialize;

use crate::constraints::ConstraintSet;
use crate::divergence::{split_concave_d1, split_convex, BetaParams};
use crate::error::{Error, Result};
use crate::rootfind::RootOptions;
use crate::updates::{self, LinearBlock};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Grid size for the one-parameter scan.
    pub grid_points: usize,
    /// Zoom passes around the best grid cell before golden-section search.
    pub refine_rounds: usize,
    /// Fraction of the feasible interval kept clear of each end.
    pub domain_pad: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_points: 2001,
            refine_rounds: 6,
            domain_pad: 1e-12,
        }
    }
}

const INNER_GRID: usize = 101;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal `f` on `[lo, hi]` by grid scan, zooming and golden section.
fn minimize_1d<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, grid: usize, rounds: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, f(lo));
    for round in 0..=rounds {
        let pts = if round == 0 { grid } else { grid.min(41) };
        let step = (b - a) / (pts - 1) as f64;
        let mut idx = 0;
        best = (a, f(a));
        for i in 1..pts {
            let x = a + step * i as f64;
            let fx = f(x);
            if fx < best.1 {
                best = (x, fx);
                idx = i;
            }
        }
        let na = (a + step * idx.saturating_sub(1) as f64).max(lo);
        let nb = (a + step * (idx + 1) as f64).min(hi);
        a = na;
        b = nb;
    }
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if fx <= best.1 {
        (x, fx)
    } else {
        best
    }
}

/// Feasible minimizer of `Σ_q g(q, y_q)` subject to `weightsᵀ y = rhs`, `y > 0`,
/// for blocks of one to three entries.
///
/// Two entries are handled by a scan of the feasible segment followed by
/// golden-section search; three entries by nesting that search.
pub fn minimize_majorizer_on_simplex_slice<G: Fn(usize, f64) -> f64>(
    g: G,
    weights: &[f64],
    rhs: f64,
    cfg: &OracleConfig,
) -> Result<Vec<f64>> {
    let q = weights.len();
    if !(1..=3).contains(&q) {
        return Err(Error::InvalidParameter(format!("oracle supports 1 to 3 entries, got {q}")));
    }
    if weights.iter().any(|&w| !(w > 0.0)) || !(rhs > 0.0) {
        return Err(Error::InvalidParameter(
            "oracle needs positive weights and right-hand side".into(),
        ));
    }
    if cfg.grid_points < 3 {
        return Err(Error::InvalidParameter("grid_points must be at least 3".into()));
    }
    let pad = cfg.domain_pad;
    let interval = |budget: f64, w: f64| {
        let span = budget / w;
        (span * pad, span * (1.0 - pad))
    };
    match q {
        1 => Ok(vec![rhs / weights[0]]),
        2 => {
            let f = |y0: f64| g(0, y0) + g(1, (rhs - weights[0] * y0) / weights[1]);
            let (lo, hi) = interval(rhs, weights[0]);
            let (y0, _) = minimize_1d(&f, lo, hi, cfg.grid_points, cfg.refine_rounds);
            Ok(vec![y0, (rhs - weights[0] * y0) / weights[1]])
        }
        _ => {
            let inner = |budget: f64| {
                let f = |y1: f64| g(1, y1) + g(2, (budget - weights[1] * y1) / weights[2]);
                let (lo, hi) = interval(budget, weights[1]);
                minimize_1d(&f, lo, hi, INNER_GRID, cfg.refine_rounds)
            };
            let outer = |y0: f64| g(0, y0) + inner(rhs - weights[0] * y0).1;
            let (lo, hi) = interval(rhs, weights[0]);
            let (y0, _) = minimize_1d(&outer, lo, hi, INNER_GRID, cfg.refine_rounds);
            let budget = rhs - weights[0] * y0;
            let (y1, _) = inner(budget);
            Ok(vec![y0, y1, (budget - weights[1] * y1) / weights[2]])
        }
    }
}

/// Separable majorizer of `D_β(V|WH)` in one entry `H(k, n)` around the current `H`,
/// up to an additive constant.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryMajorizer {
    /// `(W(f, k), V(f, n), [WH](f, n))` for every row `f`.
    terms: Vec<(f64, f64, f64)>,
    current: f64,
    linear: f64,
    params: BetaParams,
}

impl EntryMajorizer {
    pub fn new(
        v: &Array2<f64>,
        w: &Array2<f64>,
        h: &Array2<f64>,
        k: usize,
        n: usize,
        p: &BetaParams,
    ) -> Result<Self> {
        let current = h[[k, n]];
        let mut terms = Vec::with_capacity(w.nrows());
        let mut linear = 0.0;
        for f in 0..w.nrows() {
            let approx: f64 = (0..w.ncols()).map(|i| w[[f, i]] * h[[i, n]]).sum();
            let x = v[[f, n]];
            linear += w[[f, k]] * split_concave_d1(x, approx, p)?;
            terms.push((w[[f, k]], x, approx));
        }
        Ok(Self {
            terms,
            current,
            linear,
            params: *p,
        })
    }

    pub fn value(&self, y: f64) -> f64 {
        let ratio = y / self.current;
        let mut total = self.linear * y;
        for &(wf, x, approx) in &self.terms {
            let convex = split_convex(x, approx * ratio, &self.params).unwrap_or(f64::INFINITY);
            total += wf * self.current / approx * convex;
        }
        total
    }
}

/// Number of strict sign changes of `r` at `samples` interior points of `(lo, hi)`.
/// Exact zeros are skipped.
pub fn scan_root_uniqueness<R: Fn(f64) -> f64>(r: R, lo: f64, hi: f64, samples: usize) -> usize {
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for i in 1..=samples {
        let x = lo + (hi - lo) * i as f64 / (samples + 1) as f64;
        let fx = r(x);
        if fx == 0.0 || fx.is_nan() {
            continue;
        }
        let pos = fx > 0.0;
        if let Some(prev) = last {
            if prev != pos {
                changes += 1;
            }
        }
        last = Some(pos);
    }
    changes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub blocks_checked: usize,
    pub blocks_skipped: usize,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub agreed: bool,
}

/// Compares the Newton-based update of every linear block of `cs_h` with at most
/// three entries against the brute-force minimizer, stopping after `max_blocks`.
pub fn verify_h_blocks(
    v: &Array2<f64>,
    w: &Array2<f64>,
    h: &Array2<f64>,
    cs_h: &ConstraintSet,
    p: &BetaParams,
    cfg: &OracleConfig,
    max_blocks: usize,
) -> Result<VerifyReport> {
    let tolerance = 1e-5;
    let coeff = updates::mu_coefficients(v, w, h, p)?;
    let opts = RootOptions {
        polish: true,
        ..RootOptions::default()
    };
    let mut checked = 0;
    let mut skipped = 0;
    let mut max_diff: f64 = 0.0;
    for lc in cs_h.linear.iter().filter(|lc| lc.set.len() <= 3) {
        if checked >= max_blocks {
            break;
        }
        let parts: Result<Vec<EntryMajorizer>> = lc
            .set
            .pairs
            .iter()
            .map(|&(k, n)| EntryMajorizer::new(v, w, h, k, n, p))
            .collect();
        let (Ok(parts), true) = (parts, p.beta() < 2.0) else {
            skipped += 1;
            continue;
        };
        let newton = LinearBlock::from_constraint(h, &coeff, lc, p)?
            .solve(&opts)
            .map_err(|e| Error::root("verification block", e))?;
        let brute = minimize_majorizer_on_simplex_slice(|q, y| parts[q].value(y), &lc.weights, lc.rhs, cfg)?;
        for (a, b) in newton.values.iter().zip(&brute) {
            max_diff = max_diff.max((a - b).abs());
        }
        checked += 1;
    }
    Ok(VerifyReport {
        blocks_checked: checked,
        blocks_skipped: skipped,
        max_abs_diff: max_diff,
        tolerance,
        agreed: max_diff <= tolerance,
    })
}
