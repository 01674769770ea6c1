//! Majorizer coefficients and the multiplicative updates built on them.
//!
//! Every update here is the exact minimizer of a separable majorizer of the
//! objective at the current factor, optionally under one disjoint equality
//! constraint per block. Blocks decouple, so each multiplier is a scalar root.

use ndarray::{Array2, Axis, Zip};

use crate::constraints::{LinearConstraint, SphereConstraint};
use crate::divergence::{pow_elementwise, BetaParams, Regime};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rootfind::{RootError, RootOptions, RootProblem, RootSolution};

/// Numerator and denominator of the multiplicative update for one factor.
///
/// For `H` these are `Wᵀ(V ⊙ (WH)^(β-2))` and `Wᵀ(WH)^(β-1)`; for `W` the
/// products run against `Hᵀ` on the right instead.
#[derive(Debug, Clone, PartialEq)]
pub struct MuCoefficients {
    pub numerator: Array2<f64>,
    pub denominator: Array2<f64>,
}

fn check_dims(v: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> Result<()> {
    if w.ncols() != h.nrows() || v.nrows() != w.nrows() || v.ncols() != h.ncols() {
        return Err(Error::Dimension(format!(
            "V is {:?}, W is {:?}, H is {:?}",
            v.dim(),
            w.dim(),
            h.dim()
        )));
    }
    Ok(())
}

fn check_positive_approx(wh: &Array2<f64>) -> Result<()> {
    for ((i, j), &y) in wh.indexed_iter() {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::DomainAt {
                row: i,
                col: j,
                msg: format!("approximation entry {y} is not strictly positive"),
            });
        }
    }
    Ok(())
}

/// `V ⊙ (WH)^(β-2)` and, unless β = 1, `(WH)^(β-1)`.
fn data_terms(v: &Array2<f64>, wh: &Array2<f64>, p: &BetaParams) -> (Array2<f64>, Option<Array2<f64>>) {
    if p.regime() == Regime::KL {
        let mut q = v.clone();
        Zip::from(&mut q).and(wh).for_each(|a, &b| *a /= b);
        return (q, None);
    }
    let pw = pow_elementwise(wh, p.beta() - 2.0);
    let mut weighted = pw.clone();
    Zip::from(&mut weighted).and(v).for_each(|a, &x| *a *= x);
    let mut base = pw;
    Zip::from(&mut base).and(wh).for_each(|a, &y| *a *= y);
    (weighted, Some(base))
}

/// Coefficients for updating `H` at the current `(W, H)`.
pub fn mu_coefficients(
    v: &Array2<f64>,
    w: &Array2<f64>,
    h: &Array2<f64>,
    p: &BetaParams,
) -> Result<MuCoefficients> {
    check_dims(v, w, h)?;
    let wh = w.dot(h);
    check_positive_approx(&wh)?;
    let (weighted, base) = data_terms(v, &wh, p);
    let numerator = w.t().dot(&weighted);
    let denominator = match base {
        Some(b) => w.t().dot(&b),
        None => {
            let sums = w.sum_axis(Axis(0));
            let mut d = Array2::<f64>::zeros(h.dim());
            for (mut row, &s) in d.rows_mut().into_iter().zip(sums.iter()) {
                row.fill(s);
            }
            d
        }
    };
    Ok(MuCoefficients {
        numerator,
        denominator,
    })
}

/// Coefficients for updating `W` at the current `(W, H)`.
pub fn mu_coefficients_for_w(
    v: &Array2<f64>,
    w: &Array2<f64>,
    h: &Array2<f64>,
    p: &BetaParams,
) -> Result<MuCoefficients> {
    check_dims(v, w, h)?;
    let wh = w.dot(h);
    check_positive_approx(&wh)?;
    let (weighted, base) = data_terms(v, &wh, p);
    let numerator = weighted.dot(&h.t());
    let denominator = match base {
        Some(b) => b.dot(&h.t()),
        None => {
            let sums = h.sum_axis(Axis(1));
            let mut d = Array2::<f64>::zeros(w.dim());
            for mut row in d.rows_mut() {
                row.assign(&sums);
            }
            d
        }
    };
    Ok(MuCoefficients {
        numerator,
        denominator,
    })
}

#[inline]
fn ratio_pow(x: f64, g: f64) -> f64 {
    if g == 1.0 {
        x
    } else if g == 0.5 {
        x.sqrt()
    } else {
        x.powf(g)
    }
}

/// `Ht ⊙ (numerator ⊘ denominator)^γ(β)` on every entry.
pub fn update_unconstrained(ht: &Array2<f64>, coeff: &MuCoefficients, p: &BetaParams) -> Array2<f64> {
    let g = p.gamma_exp();
    Zip::from(ht)
        .and(&coeff.numerator)
        .and(&coeff.denominator)
        .map_collect(|&h, &c, &d| h * ratio_pow(c / d, g))
}

/// Same as [`update_unconstrained`], written into `target` only where `skip` is false.
pub(crate) fn apply_unconstrained_masked(
    target: &mut Array2<f64>,
    ht: &Array2<f64>,
    coeff: &MuCoefficients,
    p: &BetaParams,
    skip: &[bool],
) {
    let g = p.gamma_exp();
    let cols = ht.ncols();
    Zip::indexed(target)
        .and(ht)
        .and(&coeff.numerator)
        .and(&coeff.denominator)
        .for_each(|(i, j), out, &h, &c, &d| {
            if !skip[i * cols + j] {
                *out = h * ratio_pow(c / d, g);
            }
        });
}

/// One linear equality block `weightsᵀ y = rhs` over entries with current values
/// `current` and coefficients `numerator`, `denominator`.
///
/// The block minimizer is `y_q = current_q · ρ_q(μ)` where `ρ_q` solves the
/// stationarity condition of the majorizer shifted by `μ · weight_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBlock {
    current: Vec<f64>,
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    weights: Vec<f64>,
    rhs: f64,
    params: BetaParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    pub values: Vec<f64>,
    pub multiplier: f64,
    pub root: RootSolution,
}

impl LinearBlock {
    pub fn new(
        current: Vec<f64>,
        numerator: Vec<f64>,
        denominator: Vec<f64>,
        weights: Vec<f64>,
        rhs: f64,
        params: BetaParams,
    ) -> Result<Self> {
        let n = current.len();
        if numerator.len() != n || denominator.len() != n || weights.len() != n || n == 0 {
            return Err(Error::Dimension(format!(
                "block arrays have lengths {}, {}, {}, {}",
                n,
                numerator.len(),
                denominator.len(),
                weights.len()
            )));
        }
        if params.beta() > 2.0 {
            return Err(Error::Unsupported(format!(
                "constrained updates for beta = {} > 2",
                params.beta()
            )));
        }
        Ok(Self {
            current,
            numerator,
            denominator,
            weights,
            rhs,
            params,
        })
    }

    /// Gathers a block of `ht` described by `lc`.
    pub fn from_constraint(
        ht: &Array2<f64>,
        coeff: &MuCoefficients,
        lc: &LinearConstraint,
        p: &BetaParams,
    ) -> Result<Self> {
        let pick = |m: &Array2<f64>| lc.set.pairs.iter().map(|&(r, c)| m[[r, c]]).collect::<Vec<_>>();
        Self::new(
            pick(ht),
            pick(&coeff.numerator),
            pick(&coeff.denominator),
            lc.weights.clone(),
            lc.rhs,
            *p,
        )
    }

    /// Block with no entries, to be filled by [`LinearBlock::reload`].
    pub(crate) fn empty(params: BetaParams) -> Self {
        Self {
            current: Vec::new(),
            numerator: Vec::new(),
            denominator: Vec::new(),
            weights: Vec::new(),
            rhs: 0.0,
            params,
        }
    }

    /// Reloads the block in place from `ht`, reusing its buffers.
    pub(crate) fn reload(&mut self, ht: &Array2<f64>, coeff: &MuCoefficients, lc: &LinearConstraint) {
        self.current.clear();
        self.numerator.clear();
        self.denominator.clear();
        let cols = ht.ncols();
        match (ht.as_slice(), coeff.numerator.as_slice(), coeff.denominator.as_slice()) {
            (Some(h), Some(num), Some(den)) => {
                for &(r, c) in &lc.set.pairs {
                    let at = r * cols + c;
                    self.current.push(h[at]);
                    self.numerator.push(num[at]);
                    self.denominator.push(den[at]);
                }
            }
            _ => {
                for &(r, c) in &lc.set.pairs {
                    self.current.push(ht[[r, c]]);
                    self.numerator.push(coeff.numerator[[r, c]]);
                    self.denominator.push(coeff.denominator[[r, c]]);
                }
            }
        }
        self.weights.clear();
        self.weights.extend_from_slice(&lc.weights);
        self.rhs = lc.rhs;
    }

    /// Upper end `t` of the multiplier domain; the root lies in `(-∞, t)`.
    pub fn params(&self) -> &BetaParams {
        &self.params
    }

    pub fn pole(&self) -> f64 {
        match self.params.regime() {
            Regime::BelowZeroOrFractional | Regime::IS | Regime::KL => self
                .denominator
                .iter()
                .zip(&self.weights)
                .map(|(&d, &g)| if g == 1.0 { d } else { d / g })
                .fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    /// Multiplicative factor `ρ_q(μ)` and its derivative in `μ`.
    fn ratio(&self, q: usize, mu: f64) -> (f64, f64) {
        let c = self.numerator[q];
        let d = self.denominator[q];
        let g = self.weights[q];
        let b = self.params.beta();
        match self.params.regime() {
            Regime::BelowZeroOrFractional | Regime::IS | Regime::KL => {
                let den = d - mu * g;
                if !(den > 0.0) {
                    return (f64::INFINITY, f64::INFINITY);
                }
                let inv = 1.0 / den;
                let e = self.params.gamma_exp();
                let rho = ratio_pow(c * inv, e);
                (rho, e * rho * g * inv)
            }
            Regime::Between1And2 if b == 1.5 => {
                let a = mu * g;
                let root = (a * a + 4.0 * c * d).sqrt();
                let s = if a >= 0.0 {
                    (a + root) / (2.0 * d)
                } else {
                    2.0 * c / (root - a)
                };
                let rho = s * s;
                (rho, 2.0 * g * rho / root.max(f64::MIN_POSITIVE))
            }
            Regime::Between1And2 => {
                let rho = power_ratio(c, d, b, mu * g);
                let slope = (b - 1.0) * d * rho.powf(b - 2.0) + (2.0 - b) * c * rho.powf(b - 3.0);
                (rho, g / slope)
            }
            Regime::AtOrAbove2 => {
                let lin = (c + mu * g) / d;
                if lin > 0.0 {
                    (lin, g / d)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// `r(μ) = Σ weight_q · current_q · ρ_q(μ) − rhs` and `r'(μ)`.
    pub fn residual(&self, mu: f64) -> (f64, f64) {
        let mut r = -self.rhs;
        let mut dr = 0.0;
        if let Regime::BelowZeroOrFractional | Regime::IS | Regime::KL = self.params.regime() {
            let e = self.params.gamma_exp();
            let n = self.current.len();
            let (h, c, d, g) = (
                &self.current[..n],
                &self.numerator[..n],
                &self.denominator[..n],
                &self.weights[..n],
            );
            let mut min_den = f64::INFINITY;
            for q in 0..n {
                let den = d[q] - mu * g[q];
                min_den = min_den.min(den);
                let inv = 1.0 / den;
                let term = g[q] * h[q] * ratio_pow(c[q] * inv, e);
                r += term;
                dr += term * g[q] * inv;
            }
            if !(min_den > 0.0) {
                return (f64::INFINITY, f64::INFINITY);
            }
            return (r, e * dr);
        }
        for q in 0..self.current.len() {
            let (rho, drho) = self.ratio(q, mu);
            let scale = self.weights[q] * self.current[q];
            r += scale * rho;
            dr += scale * drho;
        }
        (r, dr)
    }

    pub fn values_at(&self, mu: f64) -> Vec<f64> {
        (0..self.current.len())
            .map(|q| self.current[q] * self.ratio(q, mu).0)
            .collect()
    }

    pub fn solve(&self, opts: &RootOptions) -> std::result::Result<BlockSolution, RootError> {
        self.solve_from(opts, None)
    }

    /// Like [`LinearBlock::solve`], starting Newton from `guess` (typically the
    /// multiplier of the previous iteration) when it is usable.
    pub fn solve_from(
        &self,
        opts: &RootOptions,
        guess: Option<f64>,
    ) -> std::result::Result<BlockSolution, RootError> {
        let root = self.find_multiplier(opts, guess)?;
        Ok(BlockSolution {
            values: self.values_at(root.root),
            multiplier: root.root,
            root,
        })
    }

    pub(crate) fn find_multiplier(
        &self,
        opts: &RootOptions,
        guess: Option<f64>,
    ) -> std::result::Result<RootSolution, RootError> {
        let mut problem = RootProblem::increasing(|mu: f64| self.residual(mu), self.pole(), *opts);
        if let Some(g) = guess {
            problem = problem.with_start(g);
        }
        problem.solve()
    }

    /// Writes the block values at multiplier `mu` into `target` at `pairs`.
    pub(crate) fn scatter(&self, mu: f64, pairs: &[(usize, usize)], target: &mut Array2<f64>) {
        let cols = target.ncols();
        let pole_side = matches!(
            self.params.regime(),
            Regime::BelowZeroOrFractional | Regime::IS | Regime::KL
        );
        let e = self.params.gamma_exp();
        let value = |q: usize| {
            if pole_side {
                let den = self.denominator[q] - mu * self.weights[q];
                self.current[q] * ratio_pow(self.numerator[q] / den, e)
            } else {
                self.current[q] * self.ratio(q, mu).0
            }
        };
        match target.as_slice_mut() {
            Some(flat) => {
                for (q, &(r, c)) in pairs.iter().enumerate() {
                    flat[r * cols + c] = value(q);
                }
            }
            None => {
                for (q, &(r, c)) in pairs.iter().enumerate() {
                    target[[r, c]] = value(q);
                }
            }
        }
    }
}

/// Solves `D ρ^(β-1) − C ρ^(β-2) = target` for `ρ > 0` when `1 < β < 2`.
///
/// The left side is increasing and concave in `ρ`, so Newton started left of the
/// root climbs onto it monotonically.
fn power_ratio(c: f64, d: f64, b: f64, target: f64) -> f64 {
    if c == 0.0 {
        return if target <= 0.0 {
            0.0
        } else {
            (target / d).powf(1.0 / (b - 1.0))
        };
    }
    let phi = |r: f64| d * r.powf(b - 1.0) - c * r.powf(b - 2.0);
    let mut r = c / d;
    if target < 0.0 {
        while phi(r) >= target {
            r *= 0.5;
        }
    }
    for _ in 0..200 {
        let f = phi(r) - target;
        if f >= 0.0 {
            break;
        }
        let slope = (b - 1.0) * d * r.powf(b - 2.0) + (2.0 - b) * c * r.powf(b - 3.0);
        let step = -f / slope;
        if !(step > r * 1e-16) {
            break;
        }
        r += step;
    }
    r
}

/// Constrained update of the entries of `ht` covered by `lc`.
pub fn update_linear_constrained(
    ht: &Array2<f64>,
    coeff: &MuCoefficients,
    lc: &LinearConstraint,
    p: &BetaParams,
    opts: &RootOptions,
) -> Result<BlockSolution> {
    let block = LinearBlock::from_constraint(ht, coeff, lc, p)?;
    block
        .solve(opts)
        .map_err(|e| Error::root(format!("linear constraint over {} entries", lc.set.len()), e))
}

/// Gram inverse `(WᵀW + δI)⁻¹` and its split into nonnegative parts.
#[derive(Debug, Clone, PartialEq)]
pub struct MinVolState {
    pub gram_inverse: Array2<f64>,
    pub positive_part: Array2<f64>,
    pub negative_part: Array2<f64>,
    pub lambda: f64,
    pub delta: f64,
}

impl MinVolState {
    pub fn new(wt: &Array2<f64>, lambda: f64, delta: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
        }
        let l = linalg::cholesky(&linalg::shifted_gram(wt, delta))?;
        let gram_inverse = linalg::inverse_from_cholesky(&l);
        let positive_part = gram_inverse.mapv(|y| y.max(0.0));
        let negative_part = gram_inverse.mapv(|y| (-y).max(0.0));
        Ok(Self {
            gram_inverse,
            positive_part,
            negative_part,
            lambda,
            delta,
        })
    }
}

/// Per-entry terms of the min-volume `W` subproblem at β = 1.
///
/// Each entry solves `(quadratic/(2 Wt)) w² + (linear + μ) w − Wt ⊙ data_gradient = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinVolCoefficients {
    pub linear: Array2<f64>,
    pub quadratic: Array2<f64>,
    pub discriminant: Array2<f64>,
    /// `(V ⊘ WtH) Hᵀ`.
    pub data_gradient: Array2<f64>,
}

pub fn minvol_coefficients(
    v: &Array2<f64>,
    wt: &Array2<f64>,
    h: &Array2<f64>,
    state: &MinVolState,
) -> Result<MinVolCoefficients> {
    check_dims(v, wt, h)?;
    let wh = wt.dot(h);
    check_positive_approx(&wh)?;
    let mut q = v.clone();
    Zip::from(&mut q).and(&wh).for_each(|a, &b| *a /= b);
    let data_gradient = q.dot(&h.t());
    let mass = h.sum_axis(Axis(1));
    let lam4 = 4.0 * state.lambda;
    let mut linear = wt.dot(&state.negative_part);
    for mut row in linear.rows_mut() {
        Zip::from(&mut row).and(&mass).for_each(|a, &m| *a = m - lam4 * *a);
    }
    let abs_part = &state.positive_part + &state.negative_part;
    let quadratic = wt.dot(&abs_part).mapv(|x| lam4 * x);
    let mut discriminant = quadratic.clone();
    Zip::from(&mut discriminant)
        .and(&data_gradient)
        .for_each(|s, &m| *s = 2.0 * *s * m);
    Ok(MinVolCoefficients {
        linear,
        quadratic,
        discriminant,
        data_gradient,
    })
}

/// New entry and its derivative with respect to the shifted linear term `a = linear + μ`,
/// negated (so the derivative is in `ν = −μ`).
#[inline]
fn minvol_entry(wt: f64, a: f64, quad: f64, disc: f64, grad: f64) -> (f64, f64) {
    let root = (a * a + disc).sqrt();
    let w = if a >= 0.0 {
        let den = root + a;
        if den > 0.0 {
            wt * 2.0 * grad / den
        } else {
            f64::INFINITY
        }
    } else if quad > 0.0 {
        wt * (root - a) / quad
    } else {
        f64::INFINITY
    };
    (w, w / root)
}

/// `Wt ⊙ (√(A² + S) − A) ⊘ D` with `A = linear + μ_k` per column, in stable form.
pub fn update_minvol_w(wt: &Array2<f64>, coeff: &MinVolCoefficients, mu: &[f64]) -> Array2<f64> {
    let mut out = wt.clone();
    Zip::indexed(&mut out)
        .and(&coeff.linear)
        .and(&coeff.quadratic)
        .and(&coeff.discriminant)
        .and(&coeff.data_gradient)
        .for_each(|(_, k), o, &c, &d, &s, &m| {
            *o = minvol_entry(*o, c + mu[k], d, s, m).0;
        });
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSolve {
    pub multipliers: Vec<f64>,
    pub newton_iters: usize,
}

/// One multiplier per column so that every updated column of `W` sums to one.
pub fn solve_minvol_multipliers(
    wt: &Array2<f64>,
    coeff: &MinVolCoefficients,
    opts: &RootOptions,
) -> Result<MultiplierSolve> {
    let (rows, cols) = wt.dim();
    let mut multipliers = Vec::with_capacity(cols);
    let mut newton_iters = 0;
    for k in 0..cols {
        // In ν = −μ the column sum is increasing and convex.
        let mut pole = f64::INFINITY;
        for f in 0..rows {
            if coeff.quadratic[[f, k]] <= 0.0 {
                pole = pole.min(coeff.linear[[f, k]]);
            }
        }
        let r = |nu: f64| {
            let mut s = -1.0;
            let mut ds = 0.0;
            for f in 0..rows {
                let (w, dw) = minvol_entry(
                    wt[[f, k]],
                    coeff.linear[[f, k]] - nu,
                    coeff.quadratic[[f, k]],
                    coeff.discriminant[[f, k]],
                    coeff.data_gradient[[f, k]],
                );
                s += w;
                ds += dw;
            }
            (s, ds)
        };
        let sol = RootProblem::increasing(r, pole, *opts)
            .solve()
            .map_err(|e| Error::root(format!("min-volume column {k}"), e))?;
        newton_iters += sol.iters;
        multipliers.push(-sol.root);
    }
    Ok(MultiplierSolve {
        multipliers,
        newton_iters,
    })
}

/// `Ht ⊙ (numerator ⊘ (denominator + λ_k))^γ(β)` with row `k` shifted by `λ_k`.
pub fn update_sparse_h(
    ht: &Array2<f64>,
    coeff: &MuCoefficients,
    lambda: &[f64],
    p: &BetaParams,
) -> Result<Array2<f64>> {
    if p.beta() > 1.0 {
        return Err(Error::Unsupported(format!(
            "l1-penalized update for beta = {} > 1",
            p.beta()
        )));
    }
    if lambda.len() != ht.nrows() {
        return Err(Error::Dimension(format!(
            "{} penalty weights for {} rows",
            lambda.len(),
            ht.nrows()
        )));
    }
    let g = p.gamma_exp();
    Ok(Zip::indexed(ht)
        .and(&coeff.numerator)
        .and(&coeff.denominator)
        .map_collect(|(k, _), &h, &c, &d| h * ratio_pow(c / (d + lambda[k]), g)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereOutcome {
    Solved { multiplier: f64, newton_iters: usize },
    /// No positive multiplier exists; the column took a plain step and was
    /// rescaled. The matching row of `H` must be multiplied by `h_scale`.
    Fallback { h_scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereUpdate {
    pub column: Vec<f64>,
    pub outcome: SphereOutcome,
}

#[inline]
fn sphere_entry(s: f64, mass: f64, mu: f64) -> (f64, f64) {
    let root = (mass * mass + 8.0 * mu * s).sqrt();
    let den = root + mass;
    let w = 2.0 * s / den;
    (w, -8.0 * s * s / (root * den * den))
}

/// Column update under `‖w‖² = radius_sq` at β = 1.
///
/// `weighted` is `Wt ⊙ ((V ⊘ WtH) Hᵀ)` restricted to the column and `mass` is the
/// matching row sum of `H`.
pub fn sphere_column_update(
    weighted: &[f64],
    mass: f64,
    radius_sq: f64,
    opts: &RootOptions,
) -> std::result::Result<SphereUpdate, RootError> {
    let r = |mu: f64| {
        let mut s = -radius_sq;
        let mut ds = 0.0;
        for &x in weighted {
            let (w, dw) = sphere_entry(x, mass, mu);
            s += w * w;
            ds += 2.0 * w * dw;
        }
        (s, ds)
    };
    let probe = 1e-12 * (1.0 + mass.abs());
    let hint = weighted.iter().sum::<f64>() / (2.0 * radius_sq);
    match RootProblem::decreasing(r, probe, *opts).with_upper_hint(hint).solve() {
        Ok(sol) => Ok(SphereUpdate {
            column: weighted.iter().map(|&x| sphere_entry(x, mass, sol.root).0).collect(),
            outcome: SphereOutcome::Solved {
                multiplier: sol.root,
                newton_iters: sol.iters,
            },
        }),
        Err(RootError::NoPositiveRoot { .. }) => {
            let plain: Vec<f64> = weighted.iter().map(|&x| x / mass).collect();
            let norm = plain.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(RootError::NonFinite { at: 0.0 });
            }
            let target = radius_sq.sqrt();
            Ok(SphereUpdate {
                column: plain.iter().map(|x| x * target / norm).collect(),
                outcome: SphereOutcome::Fallback {
                    h_scale: norm / target,
                },
            })
        }
        Err(e) => Err(e),
    }
}

/// Sphere-constrained update of one column of `W` at β = 1.
pub fn update_sphere_w(
    wt: &Array2<f64>,
    v: &Array2<f64>,
    h: &Array2<f64>,
    sc: &SphereConstraint,
    opts: &RootOptions,
) -> Result<SphereUpdate> {
    let coeff = mu_coefficients_for_w(v, wt, h, &BetaParams::kl())?;
    sphere_from_coefficients(wt, &coeff, sc, opts)
}

pub(crate) fn sphere_from_coefficients(
    wt: &Array2<f64>,
    coeff: &MuCoefficients,
    sc: &SphereConstraint,
    opts: &RootOptions,
) -> Result<SphereUpdate> {
    let k = sc.column;
    let weighted: Vec<f64> = (0..wt.nrows())
        .map(|f| wt[[f, k]] * coeff.numerator[[f, k]])
        .collect();
    let mass = coeff.denominator[[0, k]];
    sphere_column_update(&weighted, mass, sc.radius_sq, opts)
        .map_err(|e| Error::root(format!("sphere constraint on column {k}"), e))
}
