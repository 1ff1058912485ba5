//! Optimized FMM-FMG parameter sets for polyurea/graphene nanocomposites,
//! one row per hard-segment weight fraction (HSWF) and nanoplatelet loading.

use crate::error::Result;
use crate::viscomodel::{BranchParams, FractionalModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedRow {
    /// Hard segment weight fraction, wt.%.
    pub hswf: u8,
    /// Graphene nanoplatelet loading, wt.%.
    pub xgnp: f64,
    pub e_c1: f64,
    pub tau_c1: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub e_c2: f64,
    pub tau_c2: f64,
    pub alpha2: f64,
}

const fn row(
    hswf: u8,
    xgnp: f64,
    e_c1: f64,
    tau_c1: f64,
    alpha1: f64,
    beta1: f64,
    e_c2: f64,
    tau_c2: f64,
    alpha2: f64,
) -> FittedRow {
    FittedRow {
        hswf,
        xgnp,
        e_c1,
        tau_c1,
        alpha1,
        beta1,
        e_c2,
        tau_c2,
        alpha2,
    }
}

/// Mean PSO estimates for the twelve nanocomposite systems.
pub const FMM_FMG_FITS: [FittedRow; 12] = [
    row(20, 0.0, 2180.0, 0.75, 0.48, 0.023, 79.0, 3.92, 0.10),
    row(20, 0.5, 2513.0, 0.82, 0.49, 0.018, 74.0, 4.79, 0.08),
    row(20, 1.0, 2166.0, 2.04, 0.46, 0.025, 150.0, 7.74, 0.11),
    row(20, 1.5, 2211.0, 0.69, 0.47, 0.025, 87.0, 3.49, 0.09),
    // tau_c2 here repeats the 20HS/0.0 value; the constraint gives ~3.24 s.
    row(30, 0.0, 2758.0, 1.14, 0.31, 0.0, 342.0, 3.92, 0.05),
    row(30, 0.5, 2251.0, 0.98, 0.32, 0.009, 285.0, 2.76, 0.06),
    row(30, 1.0, 2758.0, 0.71, 0.31, 0.002, 343.0, 2.02, 0.06),
    row(30, 1.5, 1741.0, 2.83, 0.34, 0.033, 334.0, 6.46, 0.08),
    row(40, 0.0, 2636.0, 0.69, 0.24, 0.0, 604.0, 1.44, 0.03),
    row(40, 0.5, 2389.0, 1.39, 0.25, 0.0, 638.0, 2.68, 0.04),
    row(40, 1.0, 2475.0, 1.35, 0.25, 0.01, 748.0, 2.45, 0.05),
    row(40, 1.5, 1545.0, 6.09, 0.26, 0.029, 602.0, 9.75, 0.04),
];

impl FittedRow {
    /// Sample label in the `20HS/0.0` style.
    pub fn label(&self) -> String {
        format!("{}HS/{:.1}", self.hswf, self.xgnp)
    }

    /// Model with the tabulated `tau_c2`.
    pub fn model(&self) -> Result<FractionalModel> {
        FractionalModel::fmm_fmg(
            BranchParams::new(self.e_c1, self.tau_c1, self.alpha1, self.beta1)?,
            BranchParams::gel(self.e_c2, self.tau_c2, self.alpha2)?,
        )
    }

    /// Model with `tau_c2` recomputed from the time-scale constraint.
    pub fn constrained_model(&self) -> Result<FractionalModel> {
        self.model()?.with_constrained_tau2()
    }
}

/// Looks up a row by its `label()`, e.g. `"40HS/0.0"`.
pub fn find(label: &str) -> Option<&'static FittedRow> {
    FMM_FMG_FITS.iter().find(|r| r.label() == label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_row_builds() {
        for r in &FMM_FMG_FITS {
            r.model().unwrap();
            let c = r.constrained_model().unwrap();
            assert!(c.tau2_constrained);
        }
        assert_eq!(find("40HS/0.0").unwrap().e_c2, 604.0);
        assert!(find("50HS/0.0").is_none());
    }
}
