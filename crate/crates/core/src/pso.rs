//! Global-best particle swarm optimization over a box.
//!
//! Each run draws from its own ChaCha stream (master seed, stream = run
//! index). Objective values for a whole swarm are computed in parallel, but
//! all random draws and incumbent updates happen sequentially in particle
//! order, so results do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub n_pop: usize,
    pub n_iter: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Maximum speed per dimension as a fraction of the bound width.
    pub velocity_clamp: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            n_pop: 200,
            n_iter: 6000,
            n_runs: 50,
            seed: 0,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_clamp: 0.2,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pop < 2 {
            return Err(Error::Config(format!("n_pop must be >= 2, got {}", self.n_pop)));
        }
        if self.n_iter < 1 || self.n_runs < 1 {
            return Err(Error::Config("n_iter and n_runs must be >= 1".into()));
        }
        let coeffs = [self.inertia, self.cognitive, self.social, self.velocity_clamp];
        if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Config("PSO coefficients must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Outcome of one independent swarm run.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmRun {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    /// Incumbent cost after initialization and after every iteration.
    pub history: Vec<f64>,
}

/// Minimizes `objective` over `[lower[d], upper[d]]`. Positions are clamped to
/// the box before every evaluation. Non-finite objective values count as
/// `+inf`.
pub fn minimize<F>(objective: &F, lower: &[f64], upper: &[f64], cfg: &PsoConfig, run: u64) -> Result<SwarmRun>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = lower.len();
    if dim == 0 || upper.len() != dim {
        return Err(Error::Config("empty or mismatched bounds".into()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
        return Err(Error::Config("each bound needs finite lower <= upper".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run);

    let width: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let vmax: Vec<f64> = width.iter().map(|w| w * cfg.velocity_clamp).collect();

    let mut pos: Vec<Vec<f64>> = (0..cfg.n_pop)
        .map(|_| (0..dim).map(|d| lower[d] + rng.random::<f64>() * width[d]).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..cfg.n_pop)
        .map(|_| (0..dim).map(|d| vmax[d] * (2.0 * rng.random::<f64>() - 1.0)).collect())
        .collect();

    let eval = |xs: &[Vec<f64>]| -> Vec<f64> {
        xs.par_iter()
            .map(|x| {
                let c = objective(x);
                if c.is_nan() {
                    f64::INFINITY
                } else {
                    c
                }
            })
            .collect()
    };

    let mut cost = eval(&pos);
    let mut pbest = pos.clone();
    let mut pbest_cost = cost.clone();
    let (mut gbest_idx, mut gbest_cost) = argmin(&pbest_cost);
    let mut gbest = pbest[gbest_idx].clone();
    let mut history = Vec::with_capacity(cfg.n_iter + 1);
    history.push(gbest_cost);

    for _ in 0..cfg.n_iter {
        for i in 0..cfg.n_pop {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let mut v = cfg.inertia * vel[i][d]
                    + cfg.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + cfg.social * r2 * (gbest[d] - pos[i][d]);
                v = v.clamp(-vmax[d], vmax[d]);
                let mut x = pos[i][d] + v;
                if x < lower[d] {
                    x = lower[d];
                    v = 0.0;
                } else if x > upper[d] {
                    x = upper[d];
                    v = 0.0;
                }
                pos[i][d] = x;
                vel[i][d] = v;
            }
        }
        cost = eval(&pos);
        for i in 0..cfg.n_pop {
            if cost[i] < pbest_cost[i] {
                pbest_cost[i] = cost[i];
                pbest[i].clone_from(&pos[i]);
            }
        }
        let (idx, c) = argmin(&pbest_cost);
        if c < gbest_cost {
            gbest_idx = idx;
            gbest_cost = c;
            gbest.clone_from(&pbest[gbest_idx]);
        }
        history.push(gbest_cost);
    }

    Ok(SwarmRun {
        best_position: gbest,
        best_cost: gbest_cost,
        history,
    })
}

// First index wins ties.
fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PsoConfig {
        PsoConfig {
            n_pop: 30,
            n_iter: 300,
            n_runs: 1,
            seed: 11,
            ..PsoConfig::default()
        }
    }

    #[test]
    fn finds_shifted_sphere_minimum() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + (x[1] + 0.25).powi(2) + (x[2] - 3.0).powi(2);
        let r = minimize(&f, &[-5.0; 3], &[5.0; 3], &small(), 0).unwrap();
        assert!(r.best_cost < 1e-12);
        assert!((r.best_position[0] - 1.5).abs() < 1e-6);
    }

    #[test]
    fn finds_rosenbrock_valley() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let cfg = PsoConfig {
            n_iter: 2000,
            ..small()
        };
        let r = minimize(&f, &[-2.0; 2], &[2.0; 2], &cfg, 3).unwrap();
        assert!(r.best_cost < 1e-8, "cost {}", r.best_cost);
    }

    #[test]
    fn incumbent_never_increases() {
        let f = |x: &[f64]| x.iter().map(|v| v.sin() * v).sum::<f64>();
        let r = minimize(&f, &[-10.0; 4], &[10.0; 4], &small(), 5).unwrap();
        assert_eq!(r.history.len(), 301);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.history.last().unwrap(), r.best_cost);
    }

    #[test]
    fn evaluations_stay_inside_the_box() {
        use std::sync::Mutex;
        let seen = Mutex::new(Vec::new());
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            -(x[0] + x[1])
        };
        let cfg = PsoConfig {
            n_iter: 50,
            ..small()
        };
        minimize(&f, &[0.0, -1.0], &[1.0, 2.0], &cfg, 0).unwrap();
        for x in seen.into_inner().unwrap() {
            assert!((0.0..=1.0).contains(&x[0]) && (-1.0..=2.0).contains(&x[1]));
        }
    }

    #[test]
    fn same_seed_same_run() {
        let f = |x: &[f64]| (x[0] - 0.3).abs() + x[1] * x[1];
        let a = minimize(&f, &[-1.0; 2], &[1.0; 2], &small(), 2).unwrap();
        let b = minimize(&f, &[-1.0; 2], &[1.0; 2], &small(), 2).unwrap();
        assert_eq!(a, b);
        let c = minimize(&f, &[-1.0; 2], &[1.0; 2], &small(), 3).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn rejects_bad_config() {
        let f = |x: &[f64]| x[0];
        let cfg = PsoConfig { n_pop: 1, ..small() };
        assert!(matches!(minimize(&f, &[0.0], &[1.0], &cfg, 0), Err(Error::Config(_))));
        assert!(matches!(minimize(&f, &[], &[], &small(), 0), Err(Error::Config(_))));
        assert!(matches!(minimize(&f, &[2.0], &[1.0], &small(), 0), Err(Error::Config(_))));
    }
}
