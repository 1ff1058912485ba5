use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-uniform frequency grid specification (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    /// 201 points over ten decades, 1e-8 to 1e2 rad/s.
    fn default() -> Self {
        Self {
            lo: 1e-8,
            hi: 1e2,
            points: 201,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        log_grid(self.lo, self.hi, self.points)
    }
}

/// `n` points evenly spaced in log10 between `lo` and `hi`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Grid(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(Error::Grid(format!("need at least 2 points, got {n}")));
    }
    let (l0, l1) = (lo.log10(), hi.log10());
    let step = (l1 - l0) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| 10f64.powf(l0 + step * i as f64)).collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// Checks that `grid` is strictly ascending and positive.
pub fn validate_grid(grid: &[f64], min_points: usize) -> Result<()> {
    if grid.len() < min_points {
        return Err(Error::Grid(format!(
            "need at least {min_points} points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::Grid("frequencies must be finite and > 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid("frequencies must be strictly ascending".into()));
    }
    Ok(())
}
