//! Saltelli cross-sampling with the Saltelli (2010) first-order and Jansen
//! total-order estimators.
//!
//! With `A`, `B` the first and last `k` columns of a `2k`-dimensional Sobol'
//! sample of `N` rows (the origin skipped), and `AB_i` equal to `A` with
//! column `i` taken from `B`:
//!
//! ```text
//! V     = Var([f(A); f(B)])
//! S_i   = (1/N)  sum_j f(B)_j (f(AB_i)_j - f(A)_j) / V
//! S_Ti  = (1/2N) sum_j (f(A)_j - f(AB_i)_j)^2     / V
//! ```
//!
//! `f` may be vector valued (one output per frequency); every output gets its
//! own indices. Inputs with a zero-width range are left out of the sample and
//! get zero indices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sobol::SobolSequence;
use crate::error::{Error, Result};

pub const MIN_BASE_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaltelliConfig {
    /// Base sample count `N`.
    pub n: usize,
    /// Scramble the Sobol' points with this seed; unscrambled if `None`.
    pub scramble_seed: Option<u64>,
}

impl Default for SaltelliConfig {
    fn default() -> Self {
        Self {
            n: 1 << 14,
            scramble_seed: None,
        }
    }
}

/// Cross-sampled matrices over the unit hypercube for the active inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrices {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl SampleMatrices {
    pub fn new(n: usize, k: usize, scramble_seed: Option<u64>) -> Result<Self> {
        let mut seq = match scramble_seed {
            Some(s) => SobolSequence::scrambled(2 * k, s)?,
            None => SobolSequence::new(2 * k)?,
        };
        seq.skip(1)?;
        let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut row = vec![0.0; 2 * k];
        for _ in 0..n {
            seq.next_into(&mut row)?;
            a.push(row[..k].to_vec());
            b.push(row[k..].to_vec());
        }
        Ok(Self { a, b })
    }

    /// `A` with column `i` replaced by column `i` of `B`.
    pub fn ab(&self, i: usize) -> Vec<Vec<f64>> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(ra, rb)| {
                let mut r = ra.clone();
                r[i] = rb[i];
                r
            })
            .collect()
    }
}

/// First- and total-order indices, indexed `[input][output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    pub n: usize,
    pub first: Vec<Vec<f64>>,
    pub total: Vec<Vec<f64>>,
    /// Output variance `V(y)` per output.
    pub variance: Vec<f64>,
    /// Outputs whose variance was zero; their indices are reported as 0.
    pub zero_variance: Vec<bool>,
    /// Model evaluations per output: `N (k_active + 2)`.
    pub evaluations: usize,
}

/// Estimates Sobol' indices of `eval` over the box `bounds` (one
/// `(lower, upper)` pair per input). `eval` maps a parameter vector to
/// `n_outputs` values. Model evaluations run in parallel; every reduction
/// runs in row order, so results do not depend on the thread count.
pub fn saltelli_indices<F>(eval: F, bounds: &[(f64, f64)], n_outputs: usize, cfg: &SaltelliConfig) -> Result<SobolResult>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    if cfg.n < MIN_BASE_SAMPLES {
        return Err(Error::Config(format!(
            "base sample count must be >= {MIN_BASE_SAMPLES}, got {}",
            cfg.n
        )));
    }
    if bounds.is_empty() || n_outputs == 0 {
        return Err(Error::Config("need at least one input and one output".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("invalid range [{lo}, {hi}]")));
        }
    }
    let k = bounds.len();
    let n = cfg.n;
    let active: Vec<usize> = (0..k).filter(|&i| bounds[i].0 < bounds[i].1).collect();
    let mut result = SobolResult {
        n,
        first: vec![vec![0.0; n_outputs]; k],
        total: vec![vec![0.0; n_outputs]; k],
        variance: vec![0.0; n_outputs],
        zero_variance: vec![true; n_outputs],
        evaluations: n * (active.len() + 2),
    };
    if active.is_empty() {
        return Ok(result);
    }

    let s = SampleMatrices::new(n, active.len(), cfg.scramble_seed)?;
    let to_params = |unit: &[f64]| -> Vec<f64> {
        let mut q: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        for (u, &i) in unit.iter().zip(&active) {
            q[i] = bounds[i].0 + u * (bounds[i].1 - bounds[i].0);
        }
        q
    };
    let run = |rows: &[Vec<f64>]| -> Result<Vec<f64>> {
        let chunks: Vec<Vec<f64>> = rows
            .par_iter()
            .map(|r| {
                let mut out = vec![0.0; n_outputs];
                eval(&to_params(r), &mut out)?;
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("model output is not finite".into()));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(chunks.concat())
    };

    let fa = run(&s.a)?;
    let fb = run(&s.b)?;

    // Population variance of the 2N stacked outputs, two passes per output.
    for j in 0..n_outputs {
        let col = (0..n).map(|r| fa[r * n_outputs + j]).chain((0..n).map(|r| fb[r * n_outputs + j]));
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in col.clone() {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        if lo == hi {
            continue;
        }
        let mean = sum / (2 * n) as f64;
        let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (2 * n) as f64;
        result.variance[j] = var;
        result.zero_variance[j] = var == 0.0;
    }

    for (col, &i) in active.iter().enumerate() {
        let fab = run(&s.ab(col))?;
        for j in 0..n_outputs {
            let v = result.variance[j];
            if result.zero_variance[j] {
                continue;
            }
            let (mut first, mut total) = (0.0, 0.0);
            for r in 0..n {
                let (a, b, ab) = (fa[r * n_outputs + j], fb[r * n_outputs + j], fab[r * n_outputs + j]);
                first += b * (ab - a);
                total += (a - ab) * (a - ab);
            }
            result.first[i][j] = first / n as f64 / v;
            result.total[i][j] = total / (2 * n) as f64 / v;
        }
    }
    Ok(result)
}
