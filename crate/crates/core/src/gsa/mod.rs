//! Variance-based (Sobol') global sensitivity of the moduli to the model
//! parameters, estimated per frequency.
//!
//! Variance decomposition: with independent inputs, `V(y) = sum_i V_i +
//! sum_{i<j} V_ij + ...` where `V_i = V(E[y | q_i])`. The first-order index
//! `S_i = V_i / V(y)` is the share explained by `q_i` alone; the total-order
//! index `S_Ti = E[V(y | q_~i)] / V(y)` adds every interaction involving
//! `q_i`. Both are estimated by Saltelli cross-sampling, see [`saltelli`].

pub mod saltelli;
pub mod sobol;

use serde::{Deserialize, Serialize};

pub use saltelli::{saltelli_indices, SaltelliConfig, SampleMatrices, SobolResult};
pub use sobol::{sobol_points, SobolSequence};

use crate::error::{Error, Result};
use crate::grid::validate_grid;
use crate::lsa::{Output, ParamRanges, SensitivityCurve, Tau2Mode};
use crate::viscomodel::Param;

/// Sobol' indices of one model output over a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSobol {
    pub output: Output,
    pub tau2: Tau2Mode,
    pub grid: Vec<f64>,
    pub params: Vec<Param>,
    pub result: SobolResult,
}

impl ModelSobol {
    fn position(&self, p: Param) -> Option<usize> {
        self.params.iter().position(|&q| q == p)
    }

    pub fn first_curve(&self, p: Param) -> Option<SensitivityCurve> {
        self.position(p).map(|i| SensitivityCurve {
            output: self.output,
            param: p,
            grid: self.grid.clone(),
            values: self.result.first[i].clone(),
        })
    }

    pub fn total_curve(&self, p: Param) -> Option<SensitivityCurve> {
        self.position(p).map(|i| SensitivityCurve {
            output: self.output,
            param: p,
            grid: self.grid.clone(),
            values: self.result.total[i].clone(),
        })
    }

    /// `max |S_i|` over the grid.
    pub fn first_linf(&self, p: Param) -> Option<f64> {
        self.position(p).map(|i| max_abs(&self.result.first[i]))
    }

    pub fn total_linf(&self, p: Param) -> Option<f64> {
        self.position(p).map(|i| max_abs(&self.result.total[i]))
    }

    /// `max |S_Ti - S_i|` over parameters and grid points.
    pub fn max_interaction(&self) -> f64 {
        self.result
            .first
            .iter()
            .zip(&self.result.total)
            .flat_map(|(f, t)| f.iter().zip(t).map(|(a, b)| (b - a).abs()))
            .fold(0.0, f64::max)
    }

    /// True if any grid point had zero output variance.
    pub fn any_zero_variance(&self) -> bool {
        self.result.zero_variance.iter().any(|&z| z)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// First- and total-order indices of `output` for every parameter in
/// `ranges`, at every grid point. With [`Tau2Mode::Constrained`], `tau_c2`
/// is derived per sample and not treated as an input (its indices are 0).
pub fn model_sobol_indices(
    ranges: &ParamRanges,
    grid: &[f64],
    output: Output,
    cfg: &SaltelliConfig,
    tau2: Tau2Mode,
) -> Result<ModelSobol> {
    ranges.validate()?;
    validate_grid(grid, 1)?;
    let ln_grid: Vec<f64> = grid.iter().map(|x| x.ln()).collect();
    let bounds: Vec<(f64, f64)> = ranges
        .entries
        .iter()
        .map(|r| {
            if tau2 == Tau2Mode::Constrained && r.param == Param::Tau2 {
                (r.mean, r.mean)
            } else {
                (r.lower, r.upper)
            }
        })
        .collect();

    let eval = |q: &[f64], out: &mut [f64]| -> Result<()> {
        let kernel = ranges.model_from_values(q, tau2)?.kernel()?;
        for (o, &lx) in out.iter_mut().zip(&ln_grid) {
            *o = output.select(kernel.eval_ln(lx));
        }
        Ok(())
    };
    let result = saltelli_indices(eval, &bounds, grid.len(), cfg).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!("model undefined inside the sampled ranges: {msg}")),
        other => other,
    })?;
    Ok(ModelSobol {
        output,
        tau2,
        grid: grid.to_vec(),
        params: ranges.entries.iter().map(|r| r.param).collect(),
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::log_grid;
    use crate::presets;
    use crate::viscomodel::Denominator;

    fn ranges(label: &str) -> ParamRanges {
        let m = presets::find(label).unwrap().model().unwrap();
        ParamRanges::from_model(&m, 0.05).unwrap()
    }

    #[test]
    fn forty_hs_storage_indices_are_well_behaved() {
        let mut r = ranges("40HS/0.0");
        r.denominator = Denominator::UnitCross;
        let grid = log_grid(1e-8, 1e2, 41).unwrap();
        let cfg = SaltelliConfig {
            n: 1 << 12,
            scramble_seed: None,
        };
        let s = model_sobol_indices(&r, &grid, Output::Storage, &cfg, Tau2Mode::Independent).unwrap();
        assert_eq!(s.first_linf(Param::Beta1), Some(0.0));
        assert!(s.first_linf(Param::Tau2).unwrap() < 0.01);
        assert!(s.first_linf(Param::Ec1).unwrap() > 0.85);
        assert!(s.max_interaction() < 0.03);
        for j in 0..grid.len() {
            let sum: f64 = s.result.first.iter().map(|f| f[j]).sum();
            assert!(sum <= 1.02, "sum {sum} at {}", grid[j]);
            for i in 0..s.params.len() {
                let (f, t) = (s.result.first[i][j], s.result.total[i][j]);
                assert!((-0.02..=1.02).contains(&f) && (-0.02..=1.02).contains(&t));
                assert!(t >= f - 0.02);
            }
        }
        let again = model_sobol_indices(&r, &grid, Output::Storage, &cfg, Tau2Mode::Independent).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn constrained_tau2_is_not_an_input() {
        let r = ranges("20HS/0.0");
        let grid = log_grid(1e-4, 1e2, 7).unwrap();
        let cfg = SaltelliConfig {
            n: 256,
            scramble_seed: None,
        };
        let s = model_sobol_indices(&r, &grid, Output::Loss, &cfg, Tau2Mode::Constrained).unwrap();
        assert_eq!(s.first_linf(Param::Tau2), Some(0.0));
        assert_eq!(s.result.evaluations, 256 * (6 + 2));
    }

    #[test]
    fn degenerate_ranges_give_zero_indices() {
        let m = presets::find("40HS/0.0").unwrap().model().unwrap();
        let r = ParamRanges::degenerate(&m);
        let grid = log_grid(1e-8, 1e2, 11).unwrap();
        let s = model_sobol_indices(&r, &grid, Output::Complex, &SaltelliConfig::default(), Tau2Mode::Independent).unwrap();
        assert!(s.any_zero_variance());
        assert!(s.result.first.iter().chain(&s.result.total).flatten().all(|&v| v == 0.0));
    }
}
