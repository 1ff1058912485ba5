//! Local sensitivity: normalized derivatives (elasticities) of the moduli
//! with respect to the model parameters, Monte Carlo averaged over uniform
//! parameter ranges, and summarized by norms over log-frequency.
//!
//! For an output `y` and parameter `q` the index is `(q / y) dy/dq`. For the
//! complex modulus magnitude the index is
//! `(q / |E*|) sqrt((dE'/dq)^2 + (dE''/dq)^2)`.
//!
//! Derivatives are closed form. Per branch, with `z = x tau`, `d = a - b`,
//! `L = ln z`, the moduli are `E N / D` where
//!
//! ```text
//! N'  = z^a cos(pi a/2) + z^(2a-b) cos(pi b/2)
//! N'' = z^a sin(pi a/2) + z^(2a-b) sin(pi b/2)
//! D   = 1 + c z^d cos(pi d/2) + z^(2d)
//! ```
//!
//! with cross coefficient `c` set by the model's [`Denominator`]. Each
//! partial follows from the quotient rule.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::validate_grid;
use crate::viscomodel::{constrained_tau2, BranchParams, Denominator, FractionalModel, ModelKind, Moduli, Param, quarter_turn};

/// Model output a sensitivity index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    /// `E'`
    Storage,
    /// `E''`
    Loss,
    /// `|E*|`
    Complex,
}

impl Output {
    pub const ALL: [Output; 3] = [Output::Storage, Output::Loss, Output::Complex];

    pub fn name(self) -> &'static str {
        match self {
            Output::Storage => "storage",
            Output::Loss => "loss",
            Output::Complex => "complex",
        }
    }

    pub fn from_name(s: &str) -> Option<Output> {
        Output::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn select(self, m: Moduli) -> f64 {
        match self {
            Output::Storage => m.storage,
            Output::Loss => m.loss,
            Output::Complex => m.magnitude(),
        }
    }
}

/// Uniform interval `[lower, upper]` around `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRange {
    pub param: Param,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl UniformRange {
    /// Range with mean `mu` and standard deviation `rel_std * |mu|`:
    /// half-width `sqrt(3) * sigma`. `mu = 0` gives the point `[0, 0]`.
    pub fn from_mean(param: Param, mu: f64, rel_std: f64) -> Self {
        let half = 3f64.sqrt() * rel_std * mu.abs();
        Self {
            param,
            mean: mu,
            lower: mu - half,
            upper: mu + half,
        }
    }

    pub fn point(param: Param, v: f64) -> Self {
        Self {
            param,
            mean: v,
            lower: v,
            upper: v,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn std(&self) -> f64 {
        self.width() / 12f64.sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    /// Affine map from `[0, 1)` onto the range.
    #[inline]
    pub fn map_unit(&self, u: f64) -> f64 {
        if self.is_degenerate() {
            self.lower
        } else {
            self.lower + u * self.width()
        }
    }
}

/// Independent uniform variability for every parameter of a model, in
/// canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub kind: ModelKind,
    pub entries: Vec<UniformRange>,
    /// Model form of every sampled model.
    #[serde(default)]
    pub denominator: Denominator,
}

pub const DEFAULT_REL_STD: f64 = 0.05;

impl ParamRanges {
    pub fn from_model(m: &FractionalModel, rel_std: f64) -> Result<Self> {
        if !(rel_std >= 0.0 && rel_std.is_finite()) {
            return Err(Error::Config(format!("relative std must be >= 0, got {rel_std}")));
        }
        let entries = m
            .kind
            .params()
            .iter()
            .map(|&p| UniformRange::from_mean(p, m.get(p), rel_std))
            .collect();
        Ok(Self {
            kind: m.kind,
            entries,
            denominator: m.denominator,
        })
    }

    /// All ranges collapsed onto the parameters of `m`.
    pub fn degenerate(m: &FractionalModel) -> Self {
        Self {
            kind: m.kind,
            entries: m.kind.params().iter().map(|&p| UniformRange::point(p, m.get(p))).collect(),
            denominator: m.denominator,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let got: Vec<Param> = self.entries.iter().map(|r| r.param).collect();
        if got != self.kind.params() {
            return Err(Error::Config(format!(
                "ranges must list every {} parameter in canonical order",
                self.kind
            )));
        }
        for r in &self.entries {
            if !(r.lower.is_finite() && r.upper.is_finite() && r.lower <= r.upper) {
                return Err(Error::Config(format!(
                    "range for {} must satisfy lower <= upper, got [{}, {}]",
                    r.param, r.lower, r.upper
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Model at the range means.
    pub fn mean_model(&self) -> Result<FractionalModel> {
        let unit = vec![0.5; self.len()];
        let mut m = self.model_at(&unit, Tau2Mode::Independent)?;
        for r in &self.entries {
            m.set(r.param, r.mean);
        }
        m.validate()?;
        Ok(m)
    }

    /// Maps a unit-hypercube point onto a model. With
    /// [`Tau2Mode::Constrained`] the `tau_c2` coordinate is ignored and
    /// recomputed from the other parameters.
    pub fn model_at(&self, unit: &[f64], tau2: Tau2Mode) -> Result<FractionalModel> {
        let values: Vec<f64> = self.entries.iter().zip(unit).map(|(r, &u)| r.map_unit(u)).collect();
        self.model_from_values(&values, tau2)
    }

    /// Model with the given parameter values, in canonical order.
    pub fn model_from_values(&self, values: &[f64], tau2: Tau2Mode) -> Result<FractionalModel> {
        let mut m = FractionalModel {
            kind: self.kind,
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
            tau2_constrained: false,
            denominator: self.denominator,
        };
        for (r, &v) in self.entries.iter().zip(values) {
            m.set(r.param, v);
        }
        if tau2 == Tau2Mode::Constrained {
            m.branch2.tau_c = constrained_tau2(m.branch1.tau_c, m.branch1.e_c, m.branch2.e_c)?;
            m.tau2_constrained = true;
        }
        m.validate()?;
        Ok(m)
    }
}

/// How `tau_c2` is treated when parameters are sampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tau2Mode {
    /// Sampled like every other parameter.
    #[default]
    Independent,
    /// Derived from `(tau_c1, E_c1, E_c2)` for each sample.
    Constrained,
}

/// Index values of one (output, parameter) pair across a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub output: Output,
    pub param: Param,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Moduli and their partials with respect to `(E_c, tau_c, alpha, beta)` of
/// one branch at `ln x`.
fn branch_gradient(p: &BranchParams, cross: f64, ln_x: f64) -> (Moduli, [Moduli; 4]) {
    let (a, b) = (p.alpha, p.beta);
    let d = a - b;
    let (sa, ca) = quarter_turn(a);
    let (sb, cb) = quarter_turn(b);
    let (sd, cd) = quarter_turn(d);

    let l = ln_x + p.tau_c.ln();
    let u1 = (a * l).exp();
    let v1 = (d * l).exp();
    let u2 = u1 * v1;
    let v2 = v1 * v1;

    let n1 = u1 * ca + u2 * cb;
    let n2 = u1 * sa + u2 * sb;
    let den = 1.0 + cross * v1 * cd + v2;

    let inv_tau = 1.0 / p.tau_c;
    let c2 = 2.0 * a - b;
    // (dN', dN'', dD) for tau, alpha, beta
    let dtau = (
        (a * u1 * ca + c2 * u2 * cb) * inv_tau,
        (a * u1 * sa + c2 * u2 * sb) * inv_tau,
        (cross * d * v1 * cd + 2.0 * d * v2) * inv_tau,
    );
    let dalpha = (
        l * u1 * ca - FRAC_PI_2 * u1 * sa + 2.0 * l * u2 * cb,
        l * u1 * sa + FRAC_PI_2 * u1 * ca + 2.0 * l * u2 * sb,
        cross * (l * v1 * cd - FRAC_PI_2 * v1 * sd) + 2.0 * l * v2,
    );
    let dbeta = (
        -l * u2 * cb - FRAC_PI_2 * u2 * sb,
        -l * u2 * sb + FRAC_PI_2 * u2 * cb,
        cross * (-l * v1 * cd + FRAC_PI_2 * v1 * sd) - 2.0 * l * v2,
    );

    let e = p.e_c;
    let inv_d2 = 1.0 / (den * den);
    let quotient = |(dn1, dn2, dd): (f64, f64, f64)| Moduli {
        storage: e * (dn1 * den - n1 * dd) * inv_d2,
        loss: e * (dn2 * den - n2 * dd) * inv_d2,
    };

    let per_modulus = Moduli {
        storage: n1 / den,
        loss: n2 / den,
    };
    let value = Moduli {
        storage: e * per_modulus.storage,
        loss: e * per_modulus.loss,
    };
    (value, [per_modulus, quotient(dtau), quotient(dalpha), quotient(dbeta)])
}

/// Model moduli at `x` together with their partial derivatives, one per
/// parameter in `m.kind.params()` order. `tau_c2` is differentiated as an
/// independent parameter.
pub fn model_gradient(m: &FractionalModel, x: f64) -> Result<(Moduli, Vec<Moduli>)> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("frequency must be > 0, got {x}")));
    }
    m.branch1.validate()?;
    m.branch2.validate()?;
    Ok(gradient_unchecked(m, x.ln()))
}

fn gradient_unchecked(m: &FractionalModel, ln_x: f64) -> (Moduli, Vec<Moduli>) {
    let c = m.denominator.cross_coefficient();
    let (v1, g1) = branch_gradient(&m.branch1, c, ln_x);
    let (v2, g2) = branch_gradient(&m.branch2, c, ln_x);
    let grads = m
        .kind
        .params()
        .iter()
        .map(|p| match p {
            Param::Ec1 => g1[0],
            Param::Tau1 => g1[1],
            Param::Alpha1 => g1[2],
            Param::Beta1 => g1[3],
            Param::Ec2 => g2[0],
            Param::Tau2 => g2[1],
            Param::Alpha2 => g2[2],
        })
        .collect();
    (v1 + v2, grads)
}

fn indices_from_gradient(
    m: &FractionalModel,
    value: Moduli,
    grads: &[Moduli],
    output: Output,
    out: &mut [f64],
) -> Result<()> {
    let y = output.select(value);
    if y == 0.0 || !y.is_finite() {
        return Err(Error::ZeroOutput(format!("{} modulus is {y}", output.name())));
    }
    for ((slot, &p), g) in out.iter_mut().zip(m.kind.params()).zip(grads) {
        let q = m.get(p);
        *slot = if q == 0.0 {
            0.0
        } else {
            let dy = match output {
                Output::Storage => g.storage,
                Output::Loss => g.loss,
                Output::Complex => g.storage.hypot(g.loss),
            };
            q / y * dy
        };
    }
    Ok(())
}

/// Normalized local sensitivity indices at `x`, one per parameter in
/// `m.kind.params()` order. Parameters equal to zero have index zero.
pub fn local_indices(m: &FractionalModel, x: f64, output: Output) -> Result<Vec<f64>> {
    let (value, grads) = model_gradient(m, x)?;
    let mut out = vec![0.0; grads.len()];
    indices_from_gradient(m, value, &grads, output, &mut out)?;
    Ok(out)
}

/// Index curves of every parameter of `m` over `grid`.
pub fn local_index_curves(m: &FractionalModel, grid: &[f64], output: Output) -> Result<Vec<SensitivityCurve>> {
    validate_grid(grid, 1)?;
    m.validate()?;
    let k = m.kind.params().len();
    let mut values = vec![Vec::with_capacity(grid.len()); k];
    let mut row = vec![0.0; k];
    for &x in grid {
        let (v, g) = gradient_unchecked(m, x.ln());
        indices_from_gradient(m, v, &g, output, &mut row)?;
        for (col, r) in values.iter_mut().zip(&row) {
            col.push(*r);
        }
    }
    Ok(curves(m.kind, output, grid, values))
}

fn curves(kind: ModelKind, output: Output, grid: &[f64], values: Vec<Vec<f64>>) -> Vec<SensitivityCurve> {
    kind.params()
        .iter()
        .zip(values)
        .map(|(&param, values)| SensitivityCurve {
            output,
            param,
            grid: grid.to_vec(),
            values,
        })
        .collect()
}

/// Settings for Monte Carlo averaging of local indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Upper bound on resampling attempts for a single draw.
    pub max_attempts: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            seed: 0,
            max_attempts: 1000,
        }
    }
}

/// Mean and standard deviation curves for every parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McIndices {
    pub output: Output,
    pub n_samples: usize,
    pub mean: Vec<SensitivityCurve>,
    pub std: Vec<SensitivityCurve>,
    /// Draws discarded because the indices were undefined and redrawn.
    pub resampled: usize,
}

impl McIndices {
    pub fn mean_of(&self, p: Param) -> Option<&SensitivityCurve> {
        self.mean.iter().find(|c| c.param == p)
    }

    pub fn std_of(&self, p: Param) -> Option<&SensitivityCurve> {
        self.std.iter().find(|c| c.param == p)
    }
}

const MC_CHUNK: usize = 128;

/// Averages local indices over `cfg.n_samples` joint uniform draws from
/// `ranges` (all parameters independent). Draw `j` uses its own random
/// stream, and per-point accumulation runs in draw order, so the result does
/// not depend on the thread count. `baseline` fixes the model kind and must
/// agree with `ranges`.
pub fn mc_average_indices(
    baseline: &FractionalModel,
    ranges: &ParamRanges,
    grid: &[f64],
    output: Output,
    cfg: &McConfig,
) -> Result<McIndices> {
    if cfg.n_samples < 1 || cfg.max_attempts < 1 {
        return Err(Error::Config("n_samples and max_attempts must be >= 1".into()));
    }
    if baseline.kind != ranges.kind {
        return Err(Error::Config(format!(
            "ranges are for {} but the baseline is {}",
            ranges.kind, baseline.kind
        )));
    }
    ranges.validate()?;
    validate_grid(grid, 1)?;
    let ln_grid: Vec<f64> = grid.iter().map(|x| x.ln()).collect();
    let k = ranges.len();
    let npts = grid.len();

    let draw = |j: usize| -> Result<(Vec<f64>, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(j as u64);
        let mut unit = vec![0.0; k];
        let mut out = vec![0.0; npts * k];
        let mut last_err = None;
        for attempt in 0..cfg.max_attempts {
            for u in unit.iter_mut() {
                *u = rng.random::<f64>();
            }
            let evaluated = ranges.model_at(&unit, Tau2Mode::Independent).and_then(|m| {
                for (i, &lx) in ln_grid.iter().enumerate() {
                    let (v, g) = gradient_unchecked(&m, lx);
                    indices_from_gradient(&m, v, &g, output, &mut out[i * k..(i + 1) * k])?;
                }
                Ok(())
            });
            match evaluated {
                Ok(()) => return Ok((out, attempt)),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    };

    let mut count = 0usize;
    let mut mean = vec![0.0; npts * k];
    let mut m2 = vec![0.0; npts * k];
    let mut resampled = 0;
    for start in (0..cfg.n_samples).step_by(MC_CHUNK) {
        let end = (start + MC_CHUNK).min(cfg.n_samples);
        let chunk: Vec<(Vec<f64>, usize)> = (start..end).into_par_iter().map(draw).collect::<Result<_>>()?;
        for (vals, retries) in chunk {
            resampled += retries;
            count += 1;
            let n = count as f64;
            for ((mu, s), v) in mean.iter_mut().zip(m2.iter_mut()).zip(&vals) {
                let delta = v - *mu;
                *mu += delta / n;
                *s += delta * (v - *mu);
            }
        }
    }

    let denom = if count > 1 { (count - 1) as f64 } else { 1.0 };
    let column = |buf: &[f64], p: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> { (0..npts).map(|i| f(buf[i * k + p])).collect() };
    let mean_cols = (0..k).map(|p| column(&mean, p, &|v| v)).collect();
    let std_cols = (0..k)
        .map(|p| column(&m2, p, &|v| if count > 1 { (v.max(0.0) / denom).sqrt() } else { 0.0 }))
        .collect();

    Ok(McIndices {
        output,
        n_samples: cfg.n_samples,
        mean: curves(ranges.kind, output, grid, mean_cols),
        std: curves(ranges.kind, output, grid, std_cols),
        resampled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L1, NormKind::L2, NormKind::Linf];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
            NormKind::Linf => "Linf",
        }
    }
}

/// Logarithm defining the integration measure of the L1/L2 norms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogMeasure {
    /// `d ln x`. Reproduces the published norm tables.
    #[default]
    Natural,
    /// `d log10 x`, one unit per decade.
    Decimal,
}

/// L1/L2 norms by the trapezoidal rule over `ln x` or `log10 x`; Linf is the
/// maximum absolute value.
pub fn index_norm(curve: &SensitivityCurve, kind: NormKind, measure: LogMeasure) -> Result<f64> {
    let n = curve.grid.len();
    if n != curve.values.len() {
        return Err(Error::Grid("curve grid and values differ in length".into()));
    }
    validate_grid(&curve.grid, if kind == NormKind::Linf { 1 } else { 2 })?;
    let log = |x: f64| match measure {
        LogMeasure::Natural => x.ln(),
        LogMeasure::Decimal => x.log10(),
    };
    let trapezoid = |f: &dyn Fn(f64) -> f64| -> f64 {
        curve
            .grid
            .windows(2)
            .zip(curve.values.windows(2))
            .map(|(x, s)| 0.5 * (f(s[0]) + f(s[1])) * (log(x[1]) - log(x[0])))
            .sum()
    };
    Ok(match kind {
        NormKind::L1 => trapezoid(&|s| s.abs()),
        NormKind::L2 => trapezoid(&|s| s * s).sqrt(),
        NormKind::Linf => curve.values.iter().fold(0.0, |acc: f64, s| acc.max(s.abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::log_grid;
    use crate::presets::{self, FMM_FMG_FITS};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn forty_hs() -> FractionalModel {
        presets::find("40HS/0.0").unwrap().model().unwrap()
    }

    // Direct real-form evaluation of one branch, used as an oracle
    // independent of both the kernel and the gradient code.
    fn branch_oracle(b: &BranchParams, cross: f64, x: f64) -> (f64, f64) {
        let z = x * b.tau_c;
        let d = b.alpha - b.beta;
        let h = std::f64::consts::FRAC_PI_2;
        let den = 1.0 + cross * z.powf(d) * (h * d).cos() + z.powf(2.0 * d);
        let (u1, u2) = (z.powf(b.alpha), z.powf(2.0 * b.alpha - b.beta));
        (
            b.e_c * (u1 * (h * b.alpha).cos() + u2 * (h * b.beta).cos()) / den,
            b.e_c * (u1 * (h * b.alpha).sin() + u2 * (h * b.beta).sin()) / den,
        )
    }

    /// Central difference (relative step 1e-6) of the branch that owns `p`,
    /// plus the magnitude of that branch's moduli.
    fn finite_difference(m: &FractionalModel, p: Param, x: f64) -> (Moduli, f64) {
        let q = m.get(p);
        let h = 1e-6 * q.abs().max(1e-3);
        let (mut lo, mut hi) = (*m, *m);
        lo.set(p, q - h);
        hi.set(p, q + h);
        let c = m.denominator.cross_coefficient();
        let pick = |mm: &FractionalModel| if p.branch() == 0 { mm.branch1 } else { mm.branch2 };
        let (a, b) = (branch_oracle(&pick(&lo), c, x), branch_oracle(&pick(&hi), c, x));
        let own = branch_oracle(&pick(m), c, x);
        (
            Moduli {
                storage: (b.0 - a.0) / (2.0 * h),
                loss: (b.1 - a.1) / (2.0 * h),
            },
            own.0.abs().max(own.1.abs()),
        )
    }

    /// Relative error against the difference quotient. Derivatives whose
    /// branch elasticity `|q dy / y|` is below 1e-3 are compared on that
    /// scale instead: the quotient's rounding error, ~eps |y| / h with
    /// `h = 1e-6 q`, would otherwise exceed 1e-6 relative.
    fn fd_error(analytic: f64, fd: f64, branch_value: f64, q: f64) -> f64 {
        let floor = 1e-3 * branch_value / q.abs().max(1e-3);
        (analytic - fd).abs() / fd.abs().max(floor)
    }

    #[test]
    fn gradient_matches_finite_differences_at_unit_frequency() {
        let mut m = forty_hs();
        m.branch1.beta = 0.05; // exercise the beta terms away from zero
        for form in [Denominator::Exact, Denominator::UnitCross] {
            let m = m.with_denominator(form);
            let (_, g) = model_gradient(&m, 1.0).unwrap();
            for (p, d) in m.kind.params().iter().zip(&g) {
                let (fd, y) = finite_difference(&m, *p, 1.0);
                let q = m.get(*p);
                assert!(fd_error(d.storage, fd.storage, y, q) < 1e-6, "{p}: {} vs {}", d.storage, fd.storage);
                assert!(fd_error(d.loss, fd.loss, y, q) < 1e-6, "{p}: {} vs {}", d.loss, fd.loss);
            }
        }
    }

    #[test]
    fn modulus_elasticities_sum_to_one() {
        let grid = log_grid(1e-8, 1e2, 201).unwrap();
        for row in &FMM_FMG_FITS {
            let m = row.model().unwrap();
            for &x in &grid {
                for out in [Output::Storage, Output::Loss] {
                    let s = local_indices(&m, x, out).unwrap();
                    assert!((s[0] + s[4] - 1.0).abs() < 1e-12, "{} x={x}", row.label());
                }
            }
        }
    }

    #[test]
    fn complex_index_assembles_from_components() {
        let m = forty_hs();
        for x in [1e-7, 1e-3, 0.5, 80.0] {
            let (v, g) = model_gradient(&m, x).unwrap();
            let s = local_indices(&m, x, Output::Complex).unwrap();
            for (i, p) in m.kind.params().iter().enumerate() {
                let want = m.get(*p) / v.magnitude() * (g[i].storage.powi(2) + g[i].loss.powi(2)).sqrt();
                assert!((s[i] - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_parameter_has_zero_index() {
        let s = local_indices(&forty_hs(), 1.0, Output::Storage).unwrap();
        assert_eq!(s[3], 0.0); // beta1
    }

    #[test]
    fn fmg_fmg_storage_plateau_at_high_frequency() {
        let r = presets::find("20HS/0.0").unwrap();
        let m = FractionalModel::fmg_fmg(
            BranchParams::gel(r.e_c1, r.tau_c1, r.alpha1).unwrap(),
            BranchParams::gel(r.e_c2, r.tau_c2, r.alpha2).unwrap(),
        )
        .unwrap();
        let s = local_indices(&m, 1e2, Output::Storage).unwrap();
        assert!((s[0] - 1.0).abs() < 0.05, "S = {}", s[0]);
    }

    #[test]
    fn zero_output_is_reported() {
        let m = FractionalModel::fmg_fmg(
            BranchParams::gel(0.0, 1.0, 0.5).unwrap(),
            BranchParams::gel(0.0, 2.0, 0.5).unwrap(),
        )
        .unwrap();
        assert!(matches!(local_indices(&m, 1.0, Output::Loss), Err(Error::ZeroOutput(_))));
        assert!(local_indices(&forty_hs(), 0.0, Output::Loss).is_err());
    }

    #[test]
    fn ranges_follow_the_uniform_convention() {
        let r = UniformRange::from_mean(Param::Alpha1, 0.24, 0.05);
        assert_relative_eq!(0.5 * (r.lower + r.upper), 0.24, max_relative = 1e-15);
        assert_relative_eq!(r.std(), 0.05 * 0.24, max_relative = 1e-12);
        let z = UniformRange::from_mean(Param::Beta1, 0.0, 0.05);
        assert!(z.is_degenerate() && z.lower == 0.0);
        assert_eq!(z.map_unit(0.7), 0.0);

        let pr = ParamRanges::from_model(&forty_hs(), 0.05).unwrap();
        pr.validate().unwrap();
        assert_eq!(pr.mean_model().unwrap(), forty_hs());
    }

    #[test]
    fn degenerate_ranges_reproduce_baseline() {
        let m = forty_hs();
        let grid = log_grid(1e-6, 1e2, 17).unwrap();
        let cfg = McConfig {
            n_samples: 10,
            ..McConfig::default()
        };
        let mc = mc_average_indices(&m, &ParamRanges::degenerate(&m), &grid, Output::Storage, &cfg).unwrap();
        let base = local_index_curves(&m, &grid, Output::Storage).unwrap();
        for (mean, b) in mc.mean.iter().zip(&base) {
            for (x, y) in mean.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-14 * y.abs().max(1.0));
            }
        }
        assert!(mc.std.iter().all(|c| c.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn mc_is_seeded_and_keeps_zero_parameters_zero() {
        let m = forty_hs();
        let grid = log_grid(1e-8, 1e2, 41).unwrap();
        let ranges = ParamRanges::from_model(&m, 0.05).unwrap();
        let cfg = McConfig {
            n_samples: 300,
            seed: 5,
            ..McConfig::default()
        };
        let a = mc_average_indices(&m, &ranges, &grid, Output::Storage, &cfg).unwrap();
        let b = mc_average_indices(&m, &ranges, &grid, Output::Storage, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.mean_of(Param::Beta1).unwrap().values.iter().all(|&v| v == 0.0));
        assert_eq!(a.resampled, 0);
        let c = mc_average_indices(&m, &ranges, &grid, Output::Storage, &McConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn mc_mean_agrees_with_larger_reference_run() {
        let m = forty_hs();
        let grid = log_grid(1e-8, 1e2, 21).unwrap();
        let ranges = ParamRanges::from_model(&m, 0.05).unwrap();
        let small = mc_average_indices(&m, &ranges, &grid, Output::Storage, &McConfig { n_samples: 2000, seed: 1, ..McConfig::default() }).unwrap();
        let big = mc_average_indices(&m, &ranges, &grid, Output::Storage, &McConfig { n_samples: 20000, seed: 2, ..McConfig::default() }).unwrap();
        for ((s, b), sd) in small.mean.iter().zip(&big.mean).zip(&big.std) {
            for i in 0..grid.len() {
                // Standard error of the 2000-sample mean, with a floor for the
                // zero-variance curves.
                let band = 3.0 * sd.values[i] / 2000f64.sqrt() + 1e-12;
                assert!((s.values[i] - b.values[i]).abs() <= band, "{} at {}", s.param, grid[i]);
            }
        }
    }

    #[test]
    fn twenty_hs_alpha1_storage_l1_norm() {
        let m = presets::find("20HS/0.0")
            .unwrap()
            .model()
            .unwrap()
            .with_denominator(Denominator::UnitCross);
        let grid = log_grid(1e-8, 1e2, 201).unwrap();
        let ranges = ParamRanges::from_model(&m, 0.05).unwrap();
        let mc = mc_average_indices(&m, &ranges, &grid, Output::Storage, &McConfig::default()).unwrap();
        let l1 = index_norm(mc.mean_of(Param::Alpha1).unwrap(), NormKind::L1, LogMeasure::Natural).unwrap();
        assert!((l1 / 24.0 - 1.0).abs() < 0.10, "L1 = {l1}");
    }

    #[test]
    fn norms_of_a_constant_curve() {
        let grid = log_grid(1e-3, 1e2, 11).unwrap();
        let c = SensitivityCurve {
            output: Output::Loss,
            param: Param::Tau1,
            grid,
            values: vec![0.4; 11],
        };
        assert_relative_eq!(index_norm(&c, NormKind::L1, LogMeasure::Decimal).unwrap(), 0.4 * 5.0, max_relative = 1e-12);
        assert_relative_eq!(index_norm(&c, NormKind::L2, LogMeasure::Decimal).unwrap(), 0.4 * 5f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(
            index_norm(&c, NormKind::L1, LogMeasure::Natural).unwrap(),
            0.4 * 5.0 * std::f64::consts::LN_10,
            max_relative = 1e-12
        );
        assert_eq!(index_norm(&c, NormKind::Linf, LogMeasure::Natural).unwrap(), 0.4);

        let zero = SensitivityCurve { values: vec![0.0; 11], ..c.clone() };
        for k in NormKind::ALL {
            assert_eq!(index_norm(&zero, k, LogMeasure::Natural).unwrap(), 0.0);
        }
        let single = SensitivityCurve {
            grid: vec![1.0],
            values: vec![-2.0],
            ..c
        };
        assert_eq!(index_norm(&single, NormKind::Linf, LogMeasure::Natural).unwrap(), 2.0);
        assert!(matches!(index_norm(&single, NormKind::L1, LogMeasure::Natural), Err(Error::Grid(_))));
    }

    fn model_strategy() -> impl Strategy<Value = FractionalModel> {
        (
            (1.0f64..5e3, 1e-2f64..10.0, 0.05f64..0.95, 0.0f64..0.04),
            (1.0f64..1e3, 1e-2f64..10.0, 0.01f64..0.95),
        )
            .prop_map(|((e1, t1, a1, b1), (e2, t2, a2))| {
                FractionalModel::fmm_fmg(
                    BranchParams::new(e1, t1, a1, b1).unwrap(),
                    BranchParams::gel(e2, t2, a2).unwrap(),
                )
                .unwrap()
            })
            .prop_filter("alpha1 != beta1", |m| m.branch1.alpha - m.branch1.beta > 0.01)
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(m in model_strategy(), lx in -8.0f64..2.0) {
            let x = 10f64.powf(lx);
            let (_, g) = model_gradient(&m, x).unwrap();
            for (p, d) in m.kind.params().iter().zip(&g) {
                let (fd, y) = finite_difference(&m, *p, x);
                let q = m.get(*p);
                prop_assert!(fd_error(d.storage, fd.storage, y, q) < 1e-6, "{p} storage {} vs {}", d.storage, fd.storage);
                prop_assert!(fd_error(d.loss, fd.loss, y, q) < 1e-6, "{p} loss {} vs {}", d.loss, fd.loss);
            }
        }

        #[test]
        fn norms_scale_linearly(values in proptest::collection::vec(-3.0f64..3.0, 5), lambda in 0.01f64..100.0) {
            let c = SensitivityCurve { output: Output::Storage, param: Param::Ec1, grid: log_grid(1e-2, 1e2, 5).unwrap(), values };
            let scaled = SensitivityCurve { values: c.values.iter().map(|v| v * lambda).collect(), ..c.clone() };
            for k in NormKind::ALL {
                let a = index_norm(&c, k, LogMeasure::Natural).unwrap();
                let b = index_norm(&scaled, k, LogMeasure::Natural).unwrap();
                prop_assert!((b - lambda * a).abs() <= 1e-12 * (lambda * a).max(1e-300));
            }
        }
    }
}
