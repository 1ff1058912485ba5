//! Master-curve CSV ingestion, synthetic curve generation and parameter JSON.

use std::io::{BufRead, BufReader, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::viscomodel::FractionalModel;

pub const CURVE_HEADER: &str = "omega_shifted,e_storage,e_loss";

/// Storage/loss moduli sampled on a shifted-frequency axis `x = a_T omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterCurve {
    pub label: String,
    /// rad/s, strictly ascending.
    pub x: Vec<f64>,
    /// MPa
    pub e_storage: Vec<f64>,
    /// MPa
    pub e_loss: Vec<f64>,
}

impl MasterCurve {
    pub fn new(label: impl Into<String>, x: Vec<f64>, e_storage: Vec<f64>, e_loss: Vec<f64>) -> Result<Self> {
        let c = Self {
            label: label.into(),
            x,
            e_storage,
            e_loss,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if n != self.e_storage.len() || n != self.e_loss.len() {
            return Err(Error::Domain("curve columns differ in length".into()));
        }
        if n < 2 {
            return Err(Error::Empty(format!("master curve needs at least 2 points, got {n}")));
        }
        for i in 0..n {
            let row = [self.x[i], self.e_storage[i], self.e_loss[i]];
            if row.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Domain(format!("non-positive value in row {}", i + 1)));
            }
            if i > 0 && self.x[i] <= self.x[i - 1] {
                return Err(Error::Order { line: i + 2 });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Frequency coverage in decades.
    pub fn decades(&self) -> f64 {
        match (self.x.first(), self.x.last()) {
            (Some(a), Some(b)) => (b / a).log10(),
            _ => 0.0,
        }
    }
}

/// Parses a `omega_shifted,e_storage,e_loss` CSV. Rows must already be
/// sorted by frequency.
pub fn load_master_curve<R: Read>(source: R, label: &str) -> Result<MasterCurve> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();

    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Empty("no header row".into())),
        }
    };
    let cols: Vec<&str> = header.trim().trim_start_matches('\u{feff}').split(',').map(str::trim).collect();
    if cols != ["omega_shifted", "e_storage", "e_loss"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{CURVE_HEADER}`, got `{}`", header.trim()),
        });
    }

    let (mut x, mut es, mut el) = (Vec::new(), Vec::new(), Vec::new());
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 3];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("malformed number `{f}`"),
            })?;
        }
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!("non-positive value at line {lineno}")));
        }
        if let Some(&prev) = x.last() {
            if vals[0] <= prev {
                return Err(Error::Order { line: lineno });
            }
        }
        x.push(vals[0]);
        es.push(vals[1]);
        el.push(vals[2]);
    }
    if x.len() < 2 {
        return Err(Error::Empty(format!("need at least 2 data rows, got {}", x.len())));
    }
    MasterCurve::new(label, x, es, el)
}

/// Writes the curve as CSV with 17 significant digits.
pub fn write_master_curve<W: Write>(curve: &MasterCurve, mut out: W) -> Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for i in 0..curve.len() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e}",
            curve.x[i], curve.e_storage[i], curve.e_loss[i]
        )?;
    }
    Ok(())
}

/// Evaluates `m` on `grid` and applies independent multiplicative noise
/// `10^eps`, `eps ~ N(0, sigma)`, to every storage and loss sample.
pub fn synthesize_curve(
    m: &FractionalModel,
    grid: &[f64],
    noise_sigma_log10: f64,
    seed: u64,
    label: &str,
) -> Result<MasterCurve> {
    crate::grid::validate_grid(grid, 2)?;
    if !(noise_sigma_log10 >= 0.0 && noise_sigma_log10.is_finite()) {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {noise_sigma_log10}")));
    }
    let kernel = m.kernel()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma_log10).map_err(|e| Error::Domain(e.to_string()))?;

    let (mut es, mut el) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
    for &x in grid {
        let mut v = kernel.eval(x);
        if noise_sigma_log10 > 0.0 {
            v.storage *= 10f64.powf(normal.sample(&mut rng));
            v.loss *= 10f64.powf(normal.sample(&mut rng));
        }
        es.push(v.storage);
        el.push(v.loss);
    }
    MasterCurve::new(label, grid.to_vec(), es, el)
}

/// Parses a parameter JSON document and validates the model invariants.
pub fn model_from_json(text: &str) -> Result<FractionalModel> {
    let m: FractionalModel =
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
    m.validate()?;
    Ok(m)
}

pub fn model_to_json(m: &FractionalModel) -> String {
    serde_json::to_string_pretty(m).expect("model serializes")
}
