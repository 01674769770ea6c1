//! Seeded synthetic factorization problems with Gaussian, Poisson or
//! multiplicative Gamma noise.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// `V = max(0, WH + level · N(0, 1))`.
    Gaussian,
    /// `V = level · Poisson(WH / level)`, so the variance is `level · WH`.
    Poisson,
    /// `V = WH ⊙ G` with unit-mean Gamma draws of standard deviation `level`.
    GammaMultiplicative,
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseModel::Gaussian),
            "poisson" => Ok(NoiseModel::Poisson),
            "gamma" | "gamma-multiplicative" => Ok(NoiseModel::GammaMultiplicative),
            other => Err(Error::InvalidParameter(format!("unknown noise model '{other}'"))),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseModel::Gaussian => "gaussian",
            NoiseModel::Poisson => "poisson",
            NoiseModel::GammaMultiplicative => "gamma",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub v: Array2<f64>,
    pub w_true: Array2<f64>,
    pub h_true: Array2<f64>,
}

fn check_dims(f: usize, k: usize, n: usize, level: f64) -> Result<()> {
    if f == 0 || k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "dimensions must be positive, got F={f}, K={k}, N={n}"
        )));
    }
    if !(level >= 0.0) || !level.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {level}")));
    }
    Ok(())
}

fn uniform_positive(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || 1.0 - rng.random::<f64>())
}

fn dirichlet_column(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|x| x / total).collect()
}

fn corrupt(clean: &Array2<f64>, noise: NoiseModel, level: f64, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    if level == 0.0 {
        return Ok(clean.clone());
    }
    let mut v = clean.clone();
    match noise {
        NoiseModel::Gaussian => {
            for x in v.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *x = (*x + level * z).max(0.0);
            }
        }
        NoiseModel::Poisson => {
            for x in v.iter_mut() {
                let rate = *x / level;
                *x = if rate > 0.0 {
                    let d = Poisson::new(rate)
                        .map_err(|e| Error::InvalidParameter(format!("poisson rate {rate}: {e}")))?;
                    level * d.sample(rng)
                } else {
                    0.0
                };
            }
        }
        NoiseModel::GammaMultiplicative => {
            let shape = 1.0 / (level * level);
            let d = Gamma::new(shape, 1.0 / shape)
                .map_err(|e| Error::InvalidParameter(format!("gamma shape {shape}: {e}")))?;
            for x in v.iter_mut() {
                *x *= d.sample(rng);
            }
        }
    }
    Ok(v)
}

/// Uniform `W` on `(0, 1]` and Dirichlet(1, …, 1) columns of `H`.
pub fn synth_simplex(
    f: usize,
    k: usize,
    n: usize,
    noise: NoiseModel,
    level: f64,
    seed: u64,
) -> Result<SyntheticData> {
    check_dims(f, k, n, level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_true = uniform_positive(&mut rng, f, k);
    let mut h_true = Array2::<f64>::zeros((k, n));
    for j in 0..n {
        for (i, x) in dirichlet_column(&mut rng, k).into_iter().enumerate() {
            h_true[[i, j]] = x;
        }
    }
    let v = corrupt(&w_true.dot(&h_true), noise, level, &mut rng)?;
    Ok(SyntheticData { v, w_true, h_true })
}

/// Separable data: columns of `W` sum to one, the first `K` columns of `H` are
/// pure (one-hot), the rest Dirichlet(1), and all of `H` is scaled by `intensity`.
pub fn synth_separable(
    f: usize,
    k: usize,
    n: usize,
    intensity: f64,
    noise: NoiseModel,
    level: f64,
    seed: u64,
) -> Result<SyntheticData> {
    check_dims(f, k, n, level)?;
    if n < k {
        return Err(Error::InvalidParameter(format!(
            "separable data needs N >= K, got N={n}, K={k}"
        )));
    }
    if !(intensity > 0.0) {
        return Err(Error::InvalidParameter(format!("intensity must be > 0, got {intensity}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w_true = uniform_positive(&mut rng, f, k);
    for mut col in w_true.columns_mut() {
        let s = col.sum();
        col.mapv_inplace(|x| x / s);
    }
    let mut h_true = Array2::<f64>::zeros((k, n));
    for j in 0..n {
        if j < k {
            h_true[[j, j]] = intensity;
        } else {
            for (i, x) in dirichlet_column(&mut rng, k).into_iter().enumerate() {
                h_true[[i, j]] = intensity * x;
            }
        }
    }
    let v = corrupt(&w_true.dot(&h_true), noise, level, &mut rng)?;
    Ok(SyntheticData { v, w_true, h_true })
}

/// Unit-norm columns of `W` and a sparse `H`: each entry is active with
/// probability `density` (at least one per column) with a uniform `(0, scale]`
/// value.
#[allow(clippy::too_many_arguments)]
pub fn synth_sparse(
    f: usize,
    k: usize,
    n: usize,
    density: f64,
    scale: f64,
    noise: NoiseModel,
    level: f64,
    seed: u64,
) -> Result<SyntheticData> {
    check_dims(f, k, n, level)?;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w_true = uniform_positive(&mut rng, f, k);
    for mut col in w_true.columns_mut() {
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        col.mapv_inplace(|x| x / norm);
    }
    let mut h_true = Array2::<f64>::zeros((k, n));
    for j in 0..n {
        let forced = rng.random_range(0..k);
        for i in 0..k {
            let active = rng.random::<f64>() < density;
            let value = scale * (1.0 - rng.random::<f64>());
            if active || i == forced {
                h_true[[i, j]] = value;
            }
        }
    }
    let v = corrupt(&w_true.dot(&h_true), noise, level, &mut rng)?;
    Ok(SyntheticData { v, w_true, h_true })
}
