//! The β-divergence family and its convex/concave split.
//!
//! `d_β(x|y)` is evaluated with runtime dispatch on the regime of β. The split
//! `d_β = ď + d̂` carries no constant term: `ď` is strictly convex in `y`, `d̂` is
//! concave in `y`, and both have analytic first derivatives in `y`. These are the
//! building blocks of the separable majorizer behind every multiplicative update.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Which closed form of the divergence applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// β < 1 and β ≠ 0.
    BelowZeroOrFractional,
    /// β = 0 (Itakura-Saito).
    IS,
    /// β = 1 (Kullback-Leibler).
    KL,
    /// 1 < β < 2.
    Between1And2,
    /// β ≥ 2.
    AtOrAbove2,
}

/// The divergence order together with its multiplicative-update exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    beta: f64,
    gamma_exp: f64,
    regime: Regime,
}

impl BetaParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
        }
        let regime = if beta == 0.0 {
            Regime::IS
        } else if beta == 1.0 {
            Regime::KL
        } else if beta < 1.0 {
            Regime::BelowZeroOrFractional
        } else if beta < 2.0 {
            Regime::Between1And2
        } else {
            Regime::AtOrAbove2
        };
        Ok(Self {
            beta,
            gamma_exp: mu_exponent(beta),
            regime,
        })
    }

    pub fn kl() -> Self {
        Self::new(1.0).expect("beta = 1 is valid")
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Exponent applied to the update ratio: 1/(2-β) below 1, 1 on [1, 2], 1/(β-1) above 2.
    pub fn gamma_exp(&self) -> f64 {
        self.gamma_exp
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// True when a zero data entry is admissible.
    pub fn admits_zero_data(&self) -> bool {
        self.beta > 0.0
    }
}

fn mu_exponent(beta: f64) -> f64 {
    if beta < 1.0 {
        1.0 / (2.0 - beta)
    } else if beta <= 2.0 {
        1.0
    } else {
        1.0 / (beta - 1.0)
    }
}

/// `d_β(x|y)`, with `0·log 0 = 0` at β = 1.
pub fn d_beta(x: f64, y: f64, p: &BetaParams) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("d_beta requires y > 0, got y = {y}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("d_beta requires x >= 0, got x = {x}")));
    }
    if x == 0.0 && !p.admits_zero_data() {
        return Err(Error::Domain(format!(
            "d_beta with beta = {} requires x > 0",
            p.beta
        )));
    }
    Ok(d_beta_unchecked(x, y, p))
}

#[inline]
pub(crate) fn d_beta_unchecked(x: f64, y: f64, p: &BetaParams) -> f64 {
    let b = p.beta;
    match p.regime {
        Regime::KL => {
            if x == 0.0 {
                y
            } else {
                x * (x / y).ln() - x + y
            }
        }
        Regime::IS => {
            let r = x / y;
            r - r.ln() - 1.0
        }
        _ if b == 2.0 => 0.5 * (x - y) * (x - y),
        _ => {
            (x.powf(b) + (b - 1.0) * y.powf(b) - b * x * y.powf(b - 1.0)) / (b * (b - 1.0))
        }
    }
}

/// `D_β(V|WH)`, the entrywise sum over the product `WH`.
pub fn d_beta_matrix(
    v: &Array2<f64>,
    w: &Array2<f64>,
    h: &Array2<f64>,
    p: &BetaParams,
) -> Result<f64> {
    if w.ncols() != h.nrows() || v.nrows() != w.nrows() || v.ncols() != h.ncols() {
        return Err(Error::Dimension(format!(
            "V is {:?}, W is {:?}, H is {:?}",
            v.dim(),
            w.dim(),
            h.dim()
        )));
    }
    let wh = w.dot(h);
    divergence_to(v, &wh, p)
}

/// `Σ d_β(v|y)` for an already-formed approximation `y`.
pub fn divergence_to(v: &Array2<f64>, approx: &Array2<f64>, p: &BetaParams) -> Result<f64> {
    let mut total = 0.0;
    for ((i, j), &x) in v.indexed_iter() {
        let y = approx[[i, j]];
        let d = d_beta(x, y, p).map_err(|e| Error::DomainAt {
            row: i,
            col: j,
            msg: e.to_string(),
        })?;
        total += d;
    }
    Ok(total)
}

/// Checks that every data entry is admissible for the regime: finite, nonnegative,
/// and strictly positive when β ≤ 0.
pub fn check_data(v: &Array2<f64>, p: &BetaParams) -> Result<()> {
    let strict = !p.admits_zero_data();
    for ((i, j), &x) in v.indexed_iter() {
        if !x.is_finite() || x < 0.0 || (strict && x == 0.0) {
            return Err(Error::DomainAt {
                row: i,
                col: j,
                msg: format!(
                    "data entry {x} not admissible for beta = {} ({})",
                    p.beta,
                    if strict { "requires > 0" } else { "requires >= 0" }
                ),
            });
        }
    }
    Ok(())
}

fn check_split_args(x: f64, y: f64) -> Result<()> {
    if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "convex/concave split requires x > 0 and y > 0, got ({x}, {y})"
        )))
    }
}

/// Convex part `ď(x|y)`.
pub fn split_convex(x: f64, y: f64, p: &BetaParams) -> Result<f64> {
    check_split_args(x, y)?;
    let b = p.beta;
    Ok(match p.regime {
        Regime::BelowZeroOrFractional => x * y.powf(b - 1.0) / (1.0 - b),
        Regime::IS => x / y,
        Regime::KL => -x * y.ln(),
        Regime::Between1And2 => y.powf(b) / b - x * y.powf(b - 1.0) / (b - 1.0),
        Regime::AtOrAbove2 => y.powf(b) / b,
    })
}

/// Concave part `d̂(x|y)`.
pub fn split_concave(x: f64, y: f64, p: &BetaParams) -> Result<f64> {
    check_split_args(x, y)?;
    let b = p.beta;
    Ok(match p.regime {
        Regime::BelowZeroOrFractional => y.powf(b) / b - x.powf(b) / (b * (1.0 - b)),
        Regime::IS => (y / x).ln() - 1.0,
        Regime::KL => y + x * x.ln() - x,
        Regime::Between1And2 => x.powf(b) / (b * (b - 1.0)),
        Regime::AtOrAbove2 => -x * y.powf(b - 1.0) / (b - 1.0) + x.powf(b) / (b * (b - 1.0)),
    })
}

/// `∂ď/∂y`.
pub fn split_convex_d1(x: f64, y: f64, p: &BetaParams) -> Result<f64> {
    check_split_args(x, y)?;
    let b = p.beta;
    Ok(match p.regime {
        Regime::BelowZeroOrFractional | Regime::IS => -x * y.powf(b - 2.0),
        Regime::KL => -x / y,
        Regime::Between1And2 => y.powf(b - 1.0) - x * y.powf(b - 2.0),
        Regime::AtOrAbove2 => y.powf(b - 1.0),
    })
}

/// `∂d̂/∂y`.
pub fn split_concave_d1(x: f64, y: f64, p: &BetaParams) -> Result<f64> {
    check_split_args(x, y)?;
    let b = p.beta;
    Ok(match p.regime {
        Regime::BelowZeroOrFractional | Regime::IS => y.powf(b - 1.0),
        Regime::KL => 1.0,
        Regime::Between1And2 => 0.0,
        Regime::AtOrAbove2 => -x * y.powf(b - 2.0),
    })
}

/// Raises every entry of `m` to `exp`, with fast paths for the exponents the
/// common β values produce.
pub(crate) fn pow_elementwise(m: &Array2<f64>, exp: f64) -> Array2<f64> {
    let f: fn(f64, f64) -> f64 = if exp == 1.0 {
        |a, _| a
    } else if exp == 0.0 {
        |_, _| 1.0
    } else if exp == -1.0 {
        |a, _| 1.0 / a
    } else if exp == -2.0 {
        |a, _| 1.0 / (a * a)
    } else if exp == 2.0 {
        |a, _| a * a
    } else if exp == 0.5 {
        |a, _| a.sqrt()
    } else if exp == -0.5 {
        |a, _| 1.0 / a.sqrt()
    } else if exp == -1.5 {
        |a, _| 1.0 / (a * a.sqrt())
    } else {
        f64::powf
    };
    m.mapv(|a| f(a, exp))
}
