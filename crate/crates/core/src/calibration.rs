//! Fitting two-branch models to master curves.
//!
//! The objective is the weighted sum of squared decade residuals of the
//! storage and loss moduli. When the time-scale constraint is active, `tau_c2`
//! is not searched; it is recomputed from `(tau_c1, E_c1, E_c2)` for every
//! candidate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::MasterCurve;
use crate::error::{Error, Result};
use crate::pso::{self, PsoConfig};
use crate::viscomodel::{constrained_tau2, BranchParams, Denominator, FractionalModel, ModelKernel, ModelKind, Param};

pub const DEFAULT_WEIGHT: f64 = 0.5;

/// Search interval for one free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub param: Param,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub entries: Vec<Bound>,
}

impl ParamBounds {
    /// Default search box: `E_c1` in [0, 1e4] MPa, `E_c2` in [0, 1e3] MPa,
    /// time-scales in [1e-3, 1e2] s, exponents in [0, 1].
    pub fn standard(kind: ModelKind, constrain_tau2: bool) -> Self {
        let entries = free_params(kind, constrain_tau2)
            .into_iter()
            .map(|param| {
                let (lower, upper) = match param {
                    Param::Ec1 => (0.0, 1e4),
                    Param::Ec2 => (0.0, 1e3),
                    Param::Tau1 | Param::Tau2 => (1e-3, 1e2),
                    Param::Alpha1 | Param::Beta1 | Param::Alpha2 => (0.0, 1.0),
                };
                Bound { param, lower, upper }
            })
            .collect();
        Self { entries }
    }

    /// Every bound collapsed onto the parameters of `m`.
    pub fn point(m: &FractionalModel, constrain_tau2: bool) -> Self {
        let entries = free_params(m.kind, constrain_tau2)
            .into_iter()
            .map(|param| {
                let v = m.get(param);
                Bound {
                    param,
                    lower: v,
                    upper: v,
                }
            })
            .collect();
        Self { entries }
    }

    /// Checks that the entries cover exactly the free parameters, in order.
    pub fn validate(&self, kind: ModelKind, constrain_tau2: bool) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Config("parameter bounds are empty".into()));
        }
        let expected = free_params(kind, constrain_tau2);
        let got: Vec<Param> = self.entries.iter().map(|b| b.param).collect();
        if got != expected {
            let names = |ps: &[Param]| ps.iter().map(|p| p.name()).collect::<Vec<_>>().join(", ");
            return Err(Error::Config(format!(
                "bounds must list [{}] for {kind}{}, got [{}]",
                names(&expected),
                if constrain_tau2 { " with constrained tau_c2" } else { "" },
                names(&got)
            )));
        }
        for b in &self.entries {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower <= b.upper) {
                return Err(Error::Config(format!(
                    "bound for {} must satisfy lower <= upper, got [{}, {}]",
                    b.param, b.lower, b.upper
                )));
            }
        }
        Ok(())
    }
}

/// Parameters searched by the optimizer, in canonical order.
pub fn free_params(kind: ModelKind, constrain_tau2: bool) -> Vec<Param> {
    kind.params()
        .iter()
        .copied()
        .filter(|&p| !(constrain_tau2 && p == Param::Tau2))
        .collect()
}

/// Mean and sample standard deviation of one parameter over the runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamStat {
    pub param: Param,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: ModelKind,
    pub tau2_constrained: bool,
    pub stats: Vec<ParamStat>,
    pub best_model: FractionalModel,
    pub best_cost: f64,
    pub relative_error: f64,
    /// Final incumbent cost of each run.
    pub run_costs: Vec<f64>,
    /// Incumbent cost per iteration, per run.
    #[serde(skip)]
    pub histories: Vec<Vec<f64>>,
}

impl FitResult {
    pub fn stat(&self, p: Param) -> Option<&ParamStat> {
        self.stats.iter().find(|s| s.param == p)
    }

    /// Model built from the per-parameter means.
    pub fn mean_model(&self) -> Result<FractionalModel> {
        let mut m = self.best_model;
        for s in &self.stats {
            m.set(s.param, s.mean);
        }
        m.validate()?;
        Ok(m)
    }
}

struct LogData<'a> {
    ln_x: Vec<f64>,
    log_storage: Vec<f64>,
    log_loss: Vec<f64>,
    curve: &'a MasterCurve,
}

impl<'a> LogData<'a> {
    fn new(curve: &'a MasterCurve) -> Result<Self> {
        curve.validate()?;
        Ok(Self {
            ln_x: curve.x.iter().map(|x| x.ln()).collect(),
            log_storage: curve.e_storage.iter().map(|v| v.log10()).collect(),
            log_loss: curve.e_loss.iter().map(|v| v.log10()).collect(),
            curve,
        })
    }

    /// `None` when a model value is not strictly positive.
    fn cost(&self, kernel: &ModelKernel, w1: f64, w2: f64) -> Option<f64> {
        let (mut f1, mut f2) = (0.0, 0.0);
        for i in 0..self.ln_x.len() {
            let m = kernel.eval_ln(self.ln_x[i]);
            if !(m.storage > 0.0 && m.loss > 0.0) {
                return None;
            }
            let r1 = self.log_storage[i] - m.storage.log10();
            let r2 = self.log_loss[i] - m.loss.log10();
            f1 += r1 * r1;
            f2 += r2 * r2;
        }
        Some(w1 * f1 + w2 * f2)
    }
}

fn check_weights(w1: f64, w2: f64) -> Result<()> {
    if w1 >= 0.0 && w2 >= 0.0 && w1.is_finite() && w2.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("weights must be >= 0, got ({w1}, {w2})")))
    }
}

/// `w1 * sum(log10(E'_exp / E'_model))^2 + w2 * sum(log10(E''_exp / E''_model))^2`.
pub fn cost(m: &FractionalModel, data: &MasterCurve, w1: f64, w2: f64) -> Result<f64> {
    check_weights(w1, w2)?;
    let d = LogData::new(data)?;
    d.cost(&m.kernel()?, w1, w2)
        .ok_or_else(|| Error::Domain(format!("model moduli are not positive over `{}`", data.label)))
}

/// Cost normalized by the same weighted sum evaluated on the data alone.
pub fn relative_error(m: &FractionalModel, data: &MasterCurve, w1: f64, w2: f64) -> Result<f64> {
    let c = cost(m, data, w1, w2)?;
    let norm = w1 * data.e_storage.iter().map(|v| v.log10().powi(2)).sum::<f64>()
        + w2 * data.e_loss.iter().map(|v| v.log10().powi(2)).sum::<f64>();
    if norm == 0.0 {
        return Err(Error::ZeroOutput("relative error normalizer is zero".into()));
    }
    Ok(c / norm)
}

/// Assembles a model from a free-parameter vector.
fn build_model(
    kind: ModelKind,
    free: &[Param],
    x: &[f64],
    constrain_tau2: bool,
    denominator: Denominator,
) -> Result<FractionalModel> {
    let mut m = FractionalModel {
        kind,
        branch1: BranchParams {
            e_c: 0.0,
            tau_c: 1.0,
            alpha: 1.0,
            beta: 0.0,
        },
        branch2: BranchParams {
            e_c: 0.0,
            tau_c: 1.0,
            alpha: 1.0,
            beta: 0.0,
        },
        tau2_constrained: constrain_tau2,
        denominator,
    };
    for (&p, &v) in free.iter().zip(x) {
        m.set(p, v);
    }
    // The branch modulus is invariant under alpha <-> beta; report alpha >= beta.
    if m.branch1.beta > m.branch1.alpha {
        std::mem::swap(&mut m.branch1.alpha, &mut m.branch1.beta);
    }
    if constrain_tau2 {
        m.branch2.tau_c = constrained_tau2(m.branch1.tau_c, m.branch1.e_c, m.branch2.e_c)?;
    }
    m.validate()?;
    Ok(m)
}

/// Cost weights and model form used by [`fit_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub w1: f64,
    pub w2: f64,
    pub denominator: Denominator,
    /// Swarm over `log10(tau)` instead of `tau`; bounds stay in seconds.
    pub log_time_scales: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            w1: DEFAULT_WEIGHT,
            w2: DEFAULT_WEIGHT,
            denominator: Denominator::Exact,
            log_time_scales: true,
        }
    }
}

/// Weighted, constrained PSO fit of a two-branch model to `data`.
///
/// Runs `cfg.n_runs` independent swarms and summarizes the final incumbents.
pub fn fit(
    data: &MasterCurve,
    kind: ModelKind,
    bounds: &ParamBounds,
    cfg: &PsoConfig,
    constrain_tau2: bool,
) -> Result<FitResult> {
    fit_with(data, kind, bounds, cfg, constrain_tau2, &FitOptions::default())
}

pub fn fit_with(
    data: &MasterCurve,
    kind: ModelKind,
    bounds: &ParamBounds,
    cfg: &PsoConfig,
    constrain_tau2: bool,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (w1, w2, form) = (opts.w1, opts.w2, opts.denominator);
    check_weights(w1, w2)?;
    cfg.validate()?;
    bounds.validate(kind, constrain_tau2)?;
    let log_data = LogData::new(data)?;
    if data.decades() < 2.0 {
        return Err(Error::Config(format!(
            "master curve covers {:.2} decades; at least 2 are required",
            data.decades()
        )));
    }

    let free = free_params(kind, constrain_tau2);
    let space = SearchSpace::new(bounds, opts.log_time_scales)?;
    let (lower, upper) = (&space.lower, &space.upper);

    let objective = |x: &[f64]| -> f64 {
        build_model(kind, &free, &space.decode(x), constrain_tau2, form)
            .and_then(|m| m.kernel())
            .ok()
            .and_then(|k| log_data.cost(&k, w1, w2))
            .unwrap_or(f64::INFINITY)
    };

    let runs: Vec<pso::SwarmRun> = (0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|r| pso::minimize(&objective, lower, upper, cfg, r))
        .collect::<Result<_>>()?;

    let mut models = Vec::with_capacity(runs.len());
    for r in &runs {
        match build_model(kind, &free, &space.decode(&r.best_position), constrain_tau2, form) {
            Ok(m) => models.push(m),
            Err(e) => {
                return Err(Error::Domain(format!(
                    "no admissible model found within the bounds: {e}"
                )))
            }
        }
    }

    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.best_cost < runs[best].best_cost {
            best = i;
        }
    }
    let best_model = models[best];
    let best_cost = runs[best].best_cost;
    if !best_cost.is_finite() {
        return Err(Error::Domain("every candidate produced non-positive moduli".into()));
    }

    let stats = kind
        .params()
        .iter()
        .map(|&param| {
            let (mean, std) = mean_std(models.iter().map(|m| m.get(param)));
            ParamStat { param, mean, std }
        })
        .collect();

    Ok(FitResult {
        kind,
        tau2_constrained: constrain_tau2,
        stats,
        best_model,
        best_cost,
        relative_error: relative_error(&best_model, log_data.curve, w1, w2)?,
        run_costs: runs.iter().map(|r| r.best_cost).collect(),
        histories: runs.into_iter().map(|r| r.history).collect(),
    })
}

/// Maps swarm coordinates to parameter values. Time-scales may be searched
/// on a decade axis; decoded values are clamped back into the bounds.
struct SearchSpace<'a> {
    bounds: &'a ParamBounds,
    log: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> SearchSpace<'a> {
    fn new(bounds: &'a ParamBounds, log_time_scales: bool) -> Result<Self> {
        let log: Vec<bool> = bounds
            .entries
            .iter()
            .map(|b| log_time_scales && matches!(b.param, Param::Tau1 | Param::Tau2))
            .collect();
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for (b, &l) in bounds.entries.iter().zip(&log) {
            if l {
                if !(b.lower > 0.0) {
                    return Err(Error::Config(format!(
                        "{} lower bound must be positive for a log-scaled search, got {}",
                        b.param, b.lower
                    )));
                }
                lower.push(b.lower.log10());
                upper.push(b.upper.log10());
            } else {
                lower.push(b.lower);
                upper.push(b.upper);
            }
        }
        Ok(Self { bounds, log, lower, upper })
    }

    fn decode(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds.entries)
            .zip(&self.log)
            .map(|((&v, b), &l)| if l { 10f64.powf(v).clamp(b.lower, b.upper) } else { v })
            .collect()
    }
}

/// Welford mean and sample standard deviation (0 for a single value).
pub(crate) fn mean_std(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    let std = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, std)
}
