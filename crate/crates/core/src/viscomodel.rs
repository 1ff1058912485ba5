//! Frequency-domain evaluation of fractional Maxwell branches and of the
//! two-branch parallel models built from them.
//!
//! A single branch is two spring-pots in series. In non-dimensional form its
//! complex modulus is
//!
//! ```text
//! E*(x) / E_c = (i x tau_c)^alpha / (1 + (i x tau_c)^(alpha - beta))
//! ```
//!
//! and the storage/loss moduli are its real and imaginary parts, which we
//! evaluate in closed trigonometric form. With `z = x tau_c`, `d = alpha - beta`:
//!
//! ```text
//! E'  / E_c = (z^a cos(pi a/2) + z^(2a-b) cos(pi b/2)) / (1 + 2 z^d cos(pi d/2) + z^(2d))
//! E'' / E_c = (z^a sin(pi a/2) + z^(2a-b) sin(pi b/2)) / (1 + 2 z^d cos(pi d/2) + z^(2d))
//! ```
//!
//! A variant with coefficient 1 on the denominator cross term is available
//! through [`Denominator::UnitCross`]; see its docs. Units: MPa, s, rad/s.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Universal gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314462618;

/// Parameters of one fractional Maxwell branch.
///
/// The quasi-properties of the two spring-pots, `V` (firmness, Pa s^alpha)
/// and `G` (Pa s^beta), map onto this parameterization through
///
/// ```text
/// E_c   = (G^alpha / V^beta)^(1 / (alpha - beta))
/// tau_c = (V / G)^(1 / (alpha - beta))
/// ```
///
/// and back through `V = E_c tau_c^alpha`, `G = E_c tau_c^beta`.
/// `beta = 0` is the fractional Maxwell gel (spring-pot + spring).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchParams {
    /// Characteristic modulus, MPa.
    #[serde(rename = "E_c")]
    pub e_c: f64,
    /// Characteristic time, s.
    pub tau_c: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BranchParams {
    pub fn new(e_c: f64, tau_c: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            e_c,
            tau_c,
            alpha,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Fractional Maxwell gel branch (`beta = 0`).
    pub fn gel(e_c: f64, tau_c: f64, alpha: f64) -> Result<Self> {
        Self::new(e_c, tau_c, alpha, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_c.is_finite() && self.e_c >= 0.0) {
            return Err(Error::Domain(format!("E_c must be >= 0, got {}", self.e_c)));
        }
        if !(self.tau_c.is_finite() && self.tau_c > 0.0) {
            return Err(Error::Domain(format!("tau_c must be > 0, got {}", self.tau_c)));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.alpha == self.beta {
            return Err(Error::DegenerateExponent(self.alpha));
        }
        Ok(())
    }

    /// Precomputes the frequency-independent factors of the branch.
    pub fn kernel(&self) -> Result<BranchKernel> {
        self.kernel_with(Denominator::Exact)
    }

    pub fn kernel_with(&self, form: Denominator) -> Result<BranchKernel> {
        self.validate()?;
        let d = self.alpha - self.beta;
        let (sin_a, cos_a) = quarter_turn(self.alpha);
        let (sin_b, cos_b) = quarter_turn(self.beta);
        Ok(BranchKernel {
            e_c: self.e_c,
            ln_tau: self.tau_c.ln(),
            alpha: self.alpha,
            delta: d,
            cos_a,
            sin_a,
            cos_b,
            sin_b,
            cross: form.cross_coefficient() * quarter_turn(d).1,
        })
    }
}

/// `(sin, cos)` of `pi a / 2` for `a` in [-1, 1], exact at `a = 0, ±1` so the
/// integer-order limits carry no `cos(pi/2) ~ 6e-17` residue.
pub(crate) fn quarter_turn(a: f64) -> (f64, f64) {
    if a.abs() <= 0.5 {
        (FRAC_PI_2 * a).sin_cos()
    } else {
        let (s, c) = (FRAC_PI_2 * (1.0 - a.abs())).sin_cos();
        (a.signum() * c, s)
    }
}

/// Coefficient of the `z^d cos(pi d / 2)` cross term in the branch
/// denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// `|1 + (i z)^d|^2 = 1 + 2 z^d cos(pi d/2) + z^(2d)`: the moduli are
    /// exactly the real and imaginary parts of the complex modulus.
    #[default]
    Exact,
    /// `1 + z^d cos(pi d/2) + z^(2d)`. Not the real/imaginary part of the
    /// complex modulus (identical only for `d = 1`), but the form under which
    /// the bundled parameter sets and their sensitivity tables were
    /// generated; use it to reproduce those.
    UnitCross,
}

impl Denominator {
    pub fn cross_coefficient(self) -> f64 {
        match self {
            Denominator::Exact => 2.0,
            Denominator::UnitCross => 1.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        *self == Denominator::Exact
    }
}

/// A validated branch with its trigonometric factors cached, for repeated
/// evaluation over a frequency grid.
#[derive(Debug, Clone, Copy)]
pub struct BranchKernel {
    e_c: f64,
    ln_tau: f64,
    alpha: f64,
    delta: f64,
    cos_a: f64,
    sin_a: f64,
    cos_b: f64,
    sin_b: f64,
    /// Cross-term coefficient times `cos(pi d / 2)`.
    cross: f64,
}

impl BranchKernel {
    /// Moduli at shifted frequency `x`. The caller guarantees `x > 0`.
    #[inline]
    pub fn eval(&self, x: f64) -> Moduli {
        self.eval_ln(x.ln())
    }

    /// Moduli at `x = exp(ln_x)`.
    #[inline]
    pub fn eval_ln(&self, ln_x: f64) -> Moduli {
        if self.e_c == 0.0 {
            return Moduli::default();
        }
        let ln_z = ln_x + self.ln_tau;
        // z^(2a - b) = z^a * z^(a - b)
        let u1 = (self.alpha * ln_z).exp();
        let v1 = (self.delta * ln_z).exp();
        let u2 = u1 * v1;
        let scale = self.e_c / (1.0 + v1 * self.cross + v1 * v1);
        Moduli {
            storage: scale * (u1 * self.cos_a + u2 * self.cos_b),
            loss: scale * (u1 * self.sin_a + u2 * self.sin_b),
        }
    }
}

/// Storage (real) and loss (imaginary) parts of the complex modulus, MPa.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moduli {
    pub storage: f64,
    pub loss: f64,
}

impl Moduli {
    /// `|E*|`
    pub fn magnitude(&self) -> f64 {
        self.storage.hypot(self.loss)
    }
}

impl Add for Moduli {
    type Output = Moduli;

    fn add(self, rhs: Moduli) -> Moduli {
        Moduli {
            storage: self.storage + rhs.storage,
            loss: self.loss + rhs.loss,
        }
    }
}

fn check_frequency(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("frequency must be > 0, got {x}")))
    }
}

/// Storage and loss moduli of a single branch at shifted frequency `x`.
pub fn branch_moduli(p: &BranchParams, x: f64) -> Result<Moduli> {
    check_frequency(x)?;
    Ok(p.kernel()?.eval(x))
}

/// Topology of the two-branch model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Two parallel fractional Maxwell gels.
    #[serde(rename = "FMG-FMG")]
    FmgFmg,
    /// A full fractional Maxwell branch in parallel with a gel branch.
    #[serde(rename = "FMM-FMG")]
    FmmFmg,
}

impl ModelKind {
    /// Model parameters in canonical order.
    pub fn params(self) -> &'static [Param] {
        use Param::*;
        match self {
            ModelKind::FmgFmg => &[Ec1, Tau1, Alpha1, Ec2, Tau2, Alpha2],
            ModelKind::FmmFmg => &[Ec1, Tau1, Alpha1, Beta1, Ec2, Tau2, Alpha2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FmgFmg => "FMG-FMG",
            ModelKind::FmmFmg => "FMM-FMG",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Identifies one scalar parameter of a two-branch model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "E_c1")]
    Ec1,
    #[serde(rename = "tau_c1")]
    Tau1,
    #[serde(rename = "alpha1")]
    Alpha1,
    #[serde(rename = "beta1")]
    Beta1,
    #[serde(rename = "E_c2")]
    Ec2,
    #[serde(rename = "tau_c2")]
    Tau2,
    #[serde(rename = "alpha2")]
    Alpha2,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::Ec1,
        Param::Tau1,
        Param::Alpha1,
        Param::Beta1,
        Param::Ec2,
        Param::Tau2,
        Param::Alpha2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Ec1 => "E_c1",
            Param::Tau1 => "tau_c1",
            Param::Alpha1 => "alpha1",
            Param::Beta1 => "beta1",
            Param::Ec2 => "E_c2",
            Param::Tau2 => "tau_c2",
            Param::Alpha2 => "alpha2",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Which branch (0 or 1) the parameter belongs to.
    pub fn branch(self) -> usize {
        match self {
            Param::Ec1 | Param::Tau1 | Param::Alpha1 | Param::Beta1 => 0,
            Param::Ec2 | Param::Tau2 | Param::Alpha2 => 1,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Two fractional branches acting in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalModel {
    pub kind: ModelKind,
    pub branch1: BranchParams,
    pub branch2: BranchParams,
    /// When set, `branch2.tau_c` is tied to branch 1 by equal Pi-numbers.
    pub tau2_constrained: bool,
    #[serde(default, skip_serializing_if = "Denominator::is_exact")]
    pub denominator: Denominator,
}

const CONSTRAINT_RTOL: f64 = 1e-12;

impl FractionalModel {
    pub fn new(
        kind: ModelKind,
        branch1: BranchParams,
        branch2: BranchParams,
        tau2_constrained: bool,
    ) -> Result<Self> {
        let m = Self {
            kind,
            branch1,
            branch2,
            tau2_constrained,
            denominator: Denominator::Exact,
        };
        m.validate()?;
        Ok(m)
    }

    /// FMM-FMG model with `branch2.tau_c` taken as given.
    pub fn fmm_fmg(branch1: BranchParams, branch2: BranchParams) -> Result<Self> {
        Self::new(ModelKind::FmmFmg, branch1, branch2, false)
    }

    /// FMG-FMG model with `branch2.tau_c` taken as given.
    pub fn fmg_fmg(branch1: BranchParams, branch2: BranchParams) -> Result<Self> {
        Self::new(ModelKind::FmgFmg, branch1, branch2, false)
    }

    /// Replaces `branch2.tau_c` with the constrained value and sets the flag.
    pub fn with_constrained_tau2(mut self) -> Result<Self> {
        self.branch2.tau_c = constrained_tau2(self.branch1.tau_c, self.branch1.e_c, self.branch2.e_c)?;
        self.tau2_constrained = true;
        self.validate()?;
        Ok(self)
    }

    pub fn with_denominator(mut self, form: Denominator) -> Self {
        self.denominator = form;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.branch1.validate()?;
        self.branch2.validate()?;
        match self.kind {
            ModelKind::FmgFmg if self.branch1.beta != 0.0 || self.branch2.beta != 0.0 => {
                return Err(Error::Domain("FMG-FMG requires beta1 = beta2 = 0".into()));
            }
            ModelKind::FmmFmg if self.branch2.beta != 0.0 => {
                return Err(Error::Domain("FMM-FMG requires beta2 = 0".into()));
            }
            _ => {}
        }
        if self.tau2_constrained {
            let expected = constrained_tau2(self.branch1.tau_c, self.branch1.e_c, self.branch2.e_c)?;
            if ((self.branch2.tau_c - expected) / expected).abs() > CONSTRAINT_RTOL {
                return Err(Error::Domain(format!(
                    "tau_c2 = {} violates the time-scale constraint (expected {expected})",
                    self.branch2.tau_c
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Ec1 => self.branch1.e_c,
            Param::Tau1 => self.branch1.tau_c,
            Param::Alpha1 => self.branch1.alpha,
            Param::Beta1 => self.branch1.beta,
            Param::Ec2 => self.branch2.e_c,
            Param::Tau2 => self.branch2.tau_c,
            Param::Alpha2 => self.branch2.alpha,
        }
    }

    /// Sets one parameter without re-validating.
    pub fn set(&mut self, p: Param, value: f64) {
        match p {
            Param::Ec1 => self.branch1.e_c = value,
            Param::Tau1 => self.branch1.tau_c = value,
            Param::Alpha1 => self.branch1.alpha = value,
            Param::Beta1 => self.branch1.beta = value,
            Param::Ec2 => self.branch2.e_c = value,
            Param::Tau2 => self.branch2.tau_c = value,
            Param::Alpha2 => self.branch2.alpha = value,
        }
    }

    /// Parameter values in `kind.params()` order.
    pub fn values(&self) -> Vec<f64> {
        self.kind.params().iter().map(|&p| self.get(p)).collect()
    }

    pub fn kernel(&self) -> Result<ModelKernel> {
        Ok(ModelKernel {
            branches: [
                self.branch1.kernel_with(self.denominator)?,
                self.branch2.kernel_with(self.denominator)?,
            ],
        })
    }
}

/// Cached evaluation form of a [`FractionalModel`].
#[derive(Debug, Clone, Copy)]
pub struct ModelKernel {
    branches: [BranchKernel; 2],
}

impl ModelKernel {
    #[inline]
    pub fn eval(&self, x: f64) -> Moduli {
        self.eval_ln(x.ln())
    }

    #[inline]
    pub fn eval_ln(&self, ln_x: f64) -> Moduli {
        self.branches[0].eval_ln(ln_x) + self.branches[1].eval_ln(ln_x)
    }
}

/// Sum of the two branch moduli at shifted frequency `x`.
pub fn model_moduli(m: &FractionalModel, x: f64) -> Result<Moduli> {
    check_frequency(x)?;
    let f = m.denominator;
    Ok(m.branch1.kernel_with(f)?.eval(x) + m.branch2.kernel_with(f)?.eval(x))
}

/// Parameters of the two-state, two-timescale shift-factor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ts2Params {
    /// Low-temperature activation energy, J/mol.
    pub e1: f64,
    /// High-temperature activation energy, J/mol.
    pub e2: f64,
    /// Transition entropy over R.
    pub ds_over_r: f64,
    /// Transition temperature, K.
    pub t_star: f64,
    /// Reference temperature, K.
    pub t_ref: f64,
}

impl Ts2Params {
    fn arrhenius_term(&self, t: f64) -> f64 {
        let switch = 1.0 / (1.0 + (self.ds_over_r * (1.0 - self.t_star / t)).exp());
        (self.e1 + (self.e2 - self.e1) * switch) / (GAS_CONSTANT * t)
    }
}

/// Natural log of the TTS shift factor `a_T = tau(T) / tau(T_ref)`.
pub fn ts2_log_shift(p: &Ts2Params, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("temperature must be > 0 K, got {t}")));
    }
    if !(p.t_star > 0.0 && p.t_ref > 0.0) {
        return Err(Error::Domain("T* and T_ref must be > 0 K".into()));
    }
    Ok(p.arrhenius_term(t) - p.arrhenius_term(p.t_ref))
}

/// Characteristic time of branch 2 that equalizes the Pi-number of both
/// branches: `tau2 = tau1 * sqrt(Ec1 / Ec2)`.
pub fn constrained_tau2(tau1: f64, ec1: f64, ec2: f64) -> Result<f64> {
    if !(tau1 > 0.0 && ec1 > 0.0 && ec2 > 0.0) || !(tau1.is_finite() && ec1.is_finite() && ec2.is_finite()) {
        return Err(Error::Domain(format!(
            "constrained_tau2 needs positive inputs, got tau1={tau1}, Ec1={ec1}, Ec2={ec2}"
        )));
    }
    Ok(tau1 * (ec1 / ec2).sqrt())
}

/// Density and characteristic length of the medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumProps {
    /// kg/m^3
    pub rho: f64,
    /// m
    pub length: f64,
}

/// Pi-number `L / (c tau_c)` with the 1-D sound speed `c = sqrt(E_c / rho)`.
/// `ec` is given in MPa.
pub fn pi_number(med: &MediumProps, ec: f64, tau_c: f64) -> Result<f64> {
    if !(med.rho > 0.0 && med.length > 0.0 && ec > 0.0 && tau_c > 0.0) {
        return Err(Error::Domain("pi_number needs positive rho, L, E_c and tau_c".into()));
    }
    let ec_pa = ec * 1e6;
    Ok(med.length * (med.rho / ec_pa).sqrt() / tau_c)
}
