//! Safeguarded scalar Newton-Raphson for the Lagrange-multiplier equations.
//!
//! Two shapes occur. For linear constraints `r` is strictly increasing and convex
//! on `(-∞, t)` with a pole (or unbounded growth) at `t`; Newton started from any
//! point right of the root decreases monotonically onto it. For sphere constraints
//! `r` is decreasing and convex on `(0, ∞)`; Newton started left of the root
//! increases monotonically onto it. In both cases a bracket is carried along and
//! any step that leaves it is replaced by bisection.

use std::fmt;

/// Residual and derivative at a point.
pub trait ScalarFunction {
    fn eval(&self, x: f64) -> (f64, f64);
}

impl<F> ScalarFunction for F
where
    F: Fn(f64) -> (f64, f64),
{
    fn eval(&self, x: f64) -> (f64, f64) {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootShape {
    /// Strictly increasing, convex on `(-∞, upper_bound)`.
    IncreasingConvexLeftOfPole,
    /// Strictly decreasing, convex on `(0, ∞)`.
    DecreasingConvexOnPositives,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Keep stepping past `tol_residual` until Newton stalls or the residual falls
    /// below `1e-6 · tol_residual` (at most a few extra steps).
    pub polish: bool,
    /// Record every accepted iterate in [`RootSolution::path`].
    pub record_path: bool,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-6,
            max_iters: 200,
            polish: false,
            record_path: false,
        }
    }
}

pub struct RootProblem<F> {
    pub func: F,
    pub shape: RootShape,
    /// Pole or domain bound `t` for the increasing shape; `f64::INFINITY` when unbounded.
    pub upper_bound: f64,
    /// Probe point for the decreasing shape.
    pub probe: f64,
    /// Optional point known (or hoped) to lie right of the root for the decreasing shape.
    pub upper_hint: Option<f64>,
    /// Starting guess for the increasing shape, used when it lies left of `t`.
    pub start: Option<f64>,
    pub options: RootOptions,
}

impl<F: ScalarFunction> RootProblem<F> {
    pub fn increasing(func: F, upper_bound: f64, options: RootOptions) -> Self {
        Self {
            func,
            shape: RootShape::IncreasingConvexLeftOfPole,
            upper_bound,
            probe: 0.0,
            upper_hint: None,
            start: None,
            options,
        }
    }

    pub fn decreasing(func: F, probe: f64, options: RootOptions) -> Self {
        Self {
            func,
            shape: RootShape::DecreasingConvexOnPositives,
            upper_bound: f64::INFINITY,
            probe,
            upper_hint: None,
            start: None,
            options,
        }
    }

    pub fn with_upper_hint(mut self, hint: f64) -> Self {
        self.upper_hint = Some(hint);
        self
    }

    pub fn with_start(mut self, start: f64) -> Self {
        self.start = Some(start);
        self
    }

    pub fn solve(&self) -> Result<RootSolution, RootError> {
        match self.shape {
            RootShape::IncreasingConvexLeftOfPole => solve_increasing_convex(self),
            RootShape::DecreasingConvexOnPositives => solve_decreasing_convex_positive(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSolution {
    pub root: f64,
    /// Residual at `root`, or, when the last polishing step was taken without
    /// evaluation, the residual before it (an upper bound).
    pub residual: f64,
    /// Newton (or safeguard) steps taken after the starting point was found.
    pub iters: usize,
    /// Total function evaluations, including the search for a starting point.
    pub evaluations: usize,
    /// Accepted iterates, starting with the Newton starting point.
    pub path: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RootError {
    NoSignChange { evaluations: usize },
    NoPositiveRoot { probe: f64, value: f64 },
    MaxIters { iters: usize, last: f64, residual: f64 },
    NonFinite { at: f64 },
}

impl fmt::Display for RootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::NoSignChange { evaluations } => {
                write!(f, "no sign change found after {evaluations} evaluations")
            }
            RootError::NoPositiveRoot { probe, value } => {
                write!(f, "no positive root: r({probe:e}) = {value:e} <= 0")
            }
            RootError::MaxIters { iters, last, residual } => write!(
                f,
                "tolerance not met after {iters} iterations (x = {last:e}, |r| = {residual:e})"
            ),
            RootError::NonFinite { at } => write!(f, "non-finite residual at {at:e}"),
        }
    }
}

impl std::error::Error for RootError {}

const MAX_EXPANSIONS: usize = 1100;
const MAX_POLISH: usize = 4;
/// Polishing stops once the residual is this fraction of the tolerance.
const POLISH_FLOOR: f64 = 1e-6;

struct Walker<'a, F> {
    func: &'a F,
    opts: RootOptions,
    evaluations: usize,
    path: Vec<f64>,
}

impl<'a, F: ScalarFunction> Walker<'a, F> {
    fn eval(&mut self, x: f64) -> Result<(f64, f64), RootError> {
        self.evaluations += 1;
        let (v, d) = self.func.eval(x);
        if v.is_nan() || d.is_nan() {
            return Err(RootError::NonFinite { at: x });
        }
        Ok((v, d))
    }

    fn finish(self, best: (f64, f64), iters: usize) -> RootSolution {
        RootSolution {
            root: best.0,
            residual: best.1,
            iters,
            evaluations: self.evaluations,
            path: self.path,
        }
    }

    fn accept(&mut self, x: f64) {
        if self.opts.record_path {
            self.path.push(x);
        }
    }

    /// Newton with bisection safeguard inside `(lo, hi)`, where the residual is
    /// negative at `lo` side and positive at `hi` side (for increasing functions;
    /// `sign` flips the convention for decreasing ones). Either end may be unknown.
    fn newton(
        mut self,
        mut x: f64,
        mut fx: f64,
        mut dfx: f64,
        mut neg_end: Option<f64>,
        mut pos_end: Option<f64>,
    ) -> Result<RootSolution, RootError> {
        let tol = self.opts.tol_residual;
        let mut iters = 0usize;
        let mut polish = 0usize;
        let mut last_abs = f64::INFINITY;
        let mut best = (x, fx);
        self.accept(x);
        loop {
            let abs = fx.abs();
            if abs < best.1.abs() {
                best = (x, fx);
            }
            if abs <= tol {
                let stalled = abs >= last_abs || abs <= tol * POLISH_FLOOR;
                if !self.opts.polish || stalled || polish >= MAX_POLISH {
                    return Ok(self.finish(best, iters));
                }
                // With r > 0 Newton is on its monotone side: the step cannot cross the
                // root and the residual can only shrink. When the observed quadratic
                // contraction puts the next residual under the floor, it is taken
                // unevaluated.
                let predicted = abs * abs * abs / (last_abs * last_abs);
                if fx > 0.0 && best.0 == x && last_abs.is_finite() && predicted <= tol * POLISH_FLOOR {
                    let cand = x - fx / dfx;
                    if cand.is_finite() && cand != x {
                        self.accept(cand);
                        return Ok(self.finish((cand, fx), iters + 1));
                    }
                }
                polish += 1;
            }
            if iters >= self.opts.max_iters {
                return Err(RootError::MaxIters {
                    iters,
                    last: x,
                    residual: abs,
                });
            }
            last_abs = abs;
            iters += 1;

            let mut cand = x - fx / dfx;
            let within = |c: f64, e: f64| (e < x && c > e) || (e > x && c < e) || e == x;
            let inside = |c: f64| {
                c.is_finite()
                    && neg_end.is_none_or(|a| within(c, a))
                    && pos_end.is_none_or(|b| within(c, b))
            };
            if !inside(cand) || cand == x {
                cand = match (neg_end, pos_end) {
                    (Some(a), Some(b)) => 0.5 * (a + b),
                    _ => {
                        if cand == x {
                            if best.1.abs() <= tol {
                                return Ok(self.finish(best, iters));
                            }
                            return Err(RootError::MaxIters {
                                iters,
                                last: x,
                                residual: abs,
                            });
                        }
                        // One-sided: fall back to a geometric step away from x.
                        let dir = if fx > 0.0 { -1.0 } else { 1.0 } * dfx.signum();
                        x + dir * (1.0 + x.abs())
                    }
                };
                if cand == x {
                    if best.1.abs() <= tol {
                        return Ok(self.finish(best, iters));
                    }
                    return Err(RootError::MaxIters {
                        iters,
                        last: x,
                        residual: abs,
                    });
                }
            }
            let (fc, dc) = self.eval(cand)?;
            if fc.is_infinite() {
                // Landed on a pole: tighten the bracket on that side and bisect next.
                if fc > 0.0 {
                    pos_end = Some(cand);
                } else {
                    neg_end = Some(cand);
                }
                continue;
            }
            if fc > 0.0 {
                pos_end = Some(cand);
            } else if fc < 0.0 {
                neg_end = Some(cand);
            }
            x = cand;
            fx = fc;
            dfx = dc;
            self.accept(x);
        }
    }
}

/// Root of an increasing convex `r` on `(-∞, t)`.
///
/// Starts at the given guess (or 0) when `r > 0` there; otherwise tries the tangent
/// step from that point and, if it
/// overshoots the pole, walks toward `t` (halving the distance for finite `t`,
/// doubling for infinite `t`) until `r > 0`. Newton then descends monotonically
/// onto the root.
pub fn solve_increasing_convex<F: ScalarFunction>(
    p: &RootProblem<F>,
) -> Result<RootSolution, RootError> {
    let t = p.upper_bound;
    let mut w = Walker {
        func: &p.func,
        opts: p.options,
        evaluations: 0,
        path: Vec::new(),
    };
    let anchor = match p.start {
        Some(s) if s < t && s.is_finite() => s,
        _ if t > 0.0 => 0.0,
        _ => t - 1.0f64.max(t.abs()),
    };
    let (mut fx, mut dfx) = w.eval(anchor)?;
    let mut x = anchor;
    let mut neg_end = None;
    if fx == 0.0 || (fx.abs() <= p.options.tol_residual && !p.options.polish) {
        w.accept(x);
        return Ok(RootSolution {
            root: x,
            residual: fx,
            iters: 0,
            evaluations: w.evaluations,
            path: w.path,
        });
    }
    if fx <= 0.0 {
        neg_end = Some(anchor);
        let mut found = false;
        // By convexity the tangent at the anchor crosses zero right of the root.
        let step = anchor - fx / dfx;
        if step.is_finite() && step > anchor && step < t {
            let (fc, dc) = w.eval(step)?;
            if fc >= 0.0 && fc.is_finite() {
                x = step;
                fx = fc;
                dfx = dc;
                found = true;
            }
        }
        for m in 1..=MAX_EXPANSIONS {
            if found {
                break;
            }
            let cand = if t.is_finite() {
                t - (t - anchor) / 2f64.powi(m as i32)
            } else {
                anchor + 2f64.powi(m as i32 - 1)
            };
            if !(cand < t) || !cand.is_finite() {
                break;
            }
            let (fc, dc) = w.eval(cand)?;
            if fc > 0.0 || fc.abs() <= p.options.tol_residual {
                x = cand;
                fx = fc;
                dfx = dc;
                found = true;
                break;
            }
            neg_end = Some(cand);
        }
        if !found {
            return Err(RootError::NoSignChange {
                evaluations: w.evaluations,
            });
        }
    }
    let pos_end = if fx > 0.0 { Some(x) } else { None };
    w.newton(x, fx, dfx, neg_end, pos_end)
}

/// Root of a decreasing convex `r` on `(0, ∞)`.
///
/// Fails with [`RootError::NoPositiveRoot`] when `r(probe) <= 0`. Otherwise Newton
/// runs from the left of the root and increases monotonically onto it. When an
/// upper hint with `r < 0` is available, one Newton step from the hint (which
/// lands left of the root by convexity) is used as a better starting point.
pub fn solve_decreasing_convex_positive<F: ScalarFunction>(
    p: &RootProblem<F>,
) -> Result<RootSolution, RootError> {
    let mut w = Walker {
        func: &p.func,
        opts: p.options,
        evaluations: 0,
        path: Vec::new(),
    };
    let probe = p.probe;
    let (fp, dp) = w.eval(probe)?;
    if !(fp > 0.0) {
        return Err(RootError::NoPositiveRoot { probe, value: fp });
    }
    let (mut x, mut fx, mut dfx) = (probe, fp, dp);
    let mut neg_end = None;
    if let Some(hint) = p.upper_hint.filter(|&h| h > probe && h.is_finite()) {
        let (fh, dh) = w.eval(hint)?;
        if fh < 0.0 {
            neg_end = Some(hint);
            let cand = hint - fh / dh;
            if cand > probe && cand < hint {
                let (fc, dc) = w.eval(cand)?;
                if fc > 0.0 {
                    x = cand;
                    fx = fc;
                    dfx = dc;
                } else if fc < 0.0 {
                    neg_end = Some(cand);
                }
            }
        } else {
            x = hint;
            fx = fh;
            dfx = dh;
        }
    }
    let pos_end = if fx > 0.0 { Some(x) } else { None };
    w.newton(x, fx, dfx, neg_end, pos_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> RootOptions {
        RootOptions {
            record_path: true,
            ..RootOptions::default()
        }
    }

    #[test]
    fn rational_pole_example() {
        // r(μ) = 2/(2−μ) − 1, root 0, pole 2.
        let r = |m: f64| (2.0 / (2.0 - m) - 1.0, 2.0 / ((2.0 - m) * (2.0 - m)));
        // Start from 1.5 as in the worked example: build the walker directly.
        let w = Walker {
            func: &r,
            opts: opts(),
            evaluations: 0,
            path: Vec::new(),
        };
        let (f0, d0) = r(1.5);
        let sol = w.newton(1.5, f0, d0, None, Some(1.5)).unwrap();
        assert!(sol.residual.abs() <= 1e-6);
        assert!(sol.root.abs() < 1e-6);
        assert!(sol.iters <= 8, "iters {}", sol.iters);
        assert!(sol.path.windows(2).all(|p| p[1] < p[0]));

        let p = RootProblem::increasing(r, 2.0, opts());
        let sol = p.solve().unwrap();
        assert!(sol.root.abs() < 1e-6);
    }

    #[test]
    fn linear_function_one_step() {
        let p = RootProblem::increasing(|m: f64| (m, 1.0), f64::INFINITY, opts());
        let sol = p.solve().unwrap();
        assert_eq!(sol.root, 0.0);
        assert!(sol.iters <= 1);
    }

    #[test]
    fn split_rational_example() {
        let r = |m: f64| {
            let d = 2.0 - m;
            (0.5 / d + 1.5 / d - 1.0, 2.0 / (d * d))
        };
        let sol = RootProblem::increasing(r, 2.0, opts()).solve().unwrap();
        assert!(sol.root.abs() < 1e-6);
    }

    #[test]
    fn expansion_toward_pole() {
        // root at 1.9 with pole at 2: r(μ) = 0.1/(2−μ) − 1.
        let r = |m: f64| (0.1 / (2.0 - m) - 1.0, 0.1 / ((2.0 - m) * (2.0 - m)));
        let sol = RootProblem::increasing(r, 2.0, opts()).solve().unwrap();
        assert!((sol.root - 1.9).abs() < 1e-6);
        assert!(sol.path.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn expansion_unbounded() {
        let r = |m: f64| (m - 1000.0, 1.0);
        let sol = RootProblem::increasing(r, f64::INFINITY, opts()).solve().unwrap();
        assert!((sol.root - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn negative_pole() {
        // pole at −1, root at −3: r(μ) = 2/(−1−μ) − 1.
        let r = |m: f64| (2.0 / (-1.0 - m) - 1.0, 2.0 / ((-1.0 - m) * (-1.0 - m)));
        let sol = RootProblem::increasing(r, -1.0, opts()).solve().unwrap();
        assert!((sol.root + 3.0).abs() < 1e-6, "{}", sol.root);
    }

    #[test]
    fn no_sign_change() {
        let r = |_m: f64| (-1.0, 0.0);
        let err = RootProblem::increasing(r, 1.0, opts()).solve().unwrap_err();
        assert!(matches!(err, RootError::NoSignChange { .. }));
    }

    #[test]
    fn max_iters_reported() {
        let r = |m: f64| (0.1 / (2.0 - m) - 1.0, 0.1 / ((2.0 - m) * (2.0 - m)));
        let o = RootOptions {
            max_iters: 1,
            tol_residual: 1e-14,
            ..opts()
        };
        let err = RootProblem::increasing(r, 2.0, o).solve().unwrap_err();
        assert!(matches!(err, RootError::MaxIters { .. }));
    }

    #[test]
    fn sphere_example_half() {
        // F = 1, C = 1, S = 2, ρ = 1: W(μ) = 2S/(√(C²+8μS)+C).
        let (c, s, rho) = (1.0f64, 2.0f64, 1.0f64);
        let r = move |m: f64| {
            let root = (c * c + 8.0 * m * s).sqrt();
            let w = 2.0 * s / (root + c);
            let dw = -8.0 * s * s / (root * (root + c) * (root + c));
            (w * w - rho, 2.0 * w * dw)
        };
        let sol = RootProblem::decreasing(r, 1e-12, opts()).solve().unwrap();
        assert!((sol.root - 0.5).abs() < 1e-6);
        assert!(sol.path.windows(2).all(|p| p[1] > p[0]));
        let hinted = RootProblem::decreasing(r, 1e-12, opts())
            .with_upper_hint(s / (2.0 * rho))
            .solve()
            .unwrap();
        assert!((hinted.root - 0.5).abs() < 1e-6);
        assert!(hinted.iters < sol.iters);
    }

    #[test]
    fn sphere_without_positive_root() {
        let (c, s, rho) = (2.0f64, 1.0f64, 1.0f64);
        let r = move |m: f64| {
            let root = (c * c + 8.0 * m * s).sqrt();
            let w = 2.0 * s / (root + c);
            let dw = -8.0 * s * s / (root * (root + c) * (root + c));
            (w * w - rho, 2.0 * w * dw)
        };
        let err = RootProblem::decreasing(r, 1e-12, opts()).solve().unwrap_err();
        assert!(matches!(err, RootError::NoPositiveRoot { .. }));
    }

    #[test]
    fn reciprocal_example() {
        let r = |m: f64| (1.0 / m - 1.0, -1.0 / (m * m));
        let sol = RootProblem::decreasing(r, 1e-12, opts()).solve().unwrap();
        assert!((sol.root - 1.0).abs() < 1e-6);
        assert!(sol.iters <= 60);
    }

    #[test]
    fn polish_reaches_machine_precision() {
        let r = |m: f64| (0.3 / (2.0 - m) - 1.0, 0.3 / ((2.0 - m) * (2.0 - m)));
        let o = RootOptions {
            polish: true,
            ..opts()
        };
        let sol = RootProblem::increasing(r, 2.0, o).solve().unwrap();
        assert!(r(sol.root).0.abs() <= 1e-6 * POLISH_FLOOR, "{sol:?}");
    }
}
