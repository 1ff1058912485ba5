use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;

use fracvisc::calibration::{fit_with, FitOptions, FitResult, ParamBounds};
use fracvisc::dataio::{load_master_curve, model_to_json, synthesize_curve, write_master_curve};
use fracvisc::gsa::{model_sobol_indices, ModelSobol, SaltelliConfig};
use fracvisc::lsa::{
    index_norm, local_index_curves, mc_average_indices, LogMeasure, McConfig, NormKind, Output, ParamRanges,
    SensitivityCurve, UniformRange,
};
use fracvisc::viscomodel::{model_moduli, FractionalModel, Param};

use crate::config::{with_form, EvalConfig, FitConfig, GsaConfig, LsaConfig, SynthConfig};
use crate::error::{CliError, Result};
use crate::output::{csv, num, Artifacts};

/// What a command produced: files to write and a short human summary.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub summary: Vec<String>,
}

pub fn fit(cfg: &FitConfig, base: &Path, seed: Option<u64>) -> Result<Outcome> {
    let path = base.join(&cfg.data);
    let file = File::open(&path).map_err(|e| CliError::read(&path, e))?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("curve");
    let data = load_master_curve(BufReader::new(file), label)?;

    let bounds = match &cfg.bounds {
        Some(entries) => ParamBounds { entries: entries.clone() },
        None => ParamBounds::standard(cfg.kind, cfg.constrain_tau2),
    };
    let mut pso = cfg.pso;
    if let Some(s) = seed {
        pso.seed = s;
    }
    let opts = FitOptions {
        w1: cfg.w1,
        w2: cfg.w2,
        denominator: cfg.denominator,
        log_time_scales: cfg.log_time_scales,
    };
    let res = fit_with(&data, cfg.kind, &bounds, &pso, cfg.constrain_tau2, &opts)?;

    let mut artifacts = Artifacts::default();
    let mut params = model_to_json(&res.best_model);
    params.push('\n');
    artifacts.add("fit_params.json", params);
    artifacts.add_json("fit_result.json", &res)?;
    artifacts.add("fit_curve.csv", fitted_curve_csv(&res, &data.x, &data.e_storage, &data.e_loss)?);

    let mut summary = vec![format!(
        "fit {} to {} points ({} runs): best cost {:.4e}, relative error {:.4e}",
        res.kind,
        data.len(),
        res.run_costs.len(),
        res.best_cost,
        res.relative_error
    )];
    for s in &res.stats {
        summary.push(format!(
            "  {:<7} best {:>12.6e}  mean {:>12.6e}  std {:>10.3e}",
            s.param.name(),
            res.best_model.get(s.param),
            s.mean,
            s.std
        ));
    }
    Ok(Outcome { artifacts, summary })
}

fn fitted_curve_csv(res: &FitResult, x: &[f64], es: &[f64], el: &[f64]) -> Result<String> {
    let mut rows = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let m = model_moduli(&res.best_model, x[i])?;
        rows.push(vec![num(x[i]), num(es[i]), num(el[i]), num(m.storage), num(m.loss)]);
    }
    Ok(csv(
        &["omega_shifted", "e_storage", "e_loss", "model_storage", "model_loss"],
        rows,
    ))
}

fn ranges_for(
    m: &FractionalModel,
    explicit: &Option<Vec<UniformRange>>,
    rel_std: f64,
) -> Result<ParamRanges> {
    let ranges = match explicit {
        Some(entries) => ParamRanges {
            kind: m.kind,
            entries: entries.clone(),
            denominator: m.denominator,
        },
        None => ParamRanges::from_model(m, rel_std)?,
    };
    ranges.validate()?;
    Ok(ranges)
}

#[derive(Serialize)]
struct NormRow {
    output: Output,
    param: Param,
    l1: f64,
    l2: f64,
    linf: f64,
}

#[derive(Serialize)]
struct LsaOutputResult {
    output: Output,
    mean: Vec<SensitivityCurve>,
    /// Empty without Monte Carlo averaging.
    std: Vec<SensitivityCurve>,
    resampled: usize,
}

#[derive(Serialize)]
struct LsaResult {
    model: FractionalModel,
    ranges: Option<ParamRanges>,
    n_samples: usize,
    measure: LogMeasure,
    outputs: Vec<LsaOutputResult>,
    norms: Vec<NormRow>,
}

fn norm_row(curve: &SensitivityCurve, measure: LogMeasure) -> Result<NormRow> {
    let mut v = [0.0; 3];
    for (slot, kind) in v.iter_mut().zip(NormKind::ALL) {
        *slot = index_norm(curve, kind, measure)?;
    }
    Ok(NormRow {
        output: curve.output,
        param: curve.param,
        l1: v[0],
        l2: v[1],
        linf: v[2],
    })
}

fn norms_csv(rows: &[NormRow]) -> String {
    csv(
        &["output", "param", "l1", "l2", "linf"],
        rows.iter().map(|r| {
            vec![
                r.output.name().to_string(),
                r.param.name().to_string(),
                num(r.l1),
                num(r.l2),
                num(r.linf),
            ]
        }),
    )
}

pub fn lsa(cfg: &LsaConfig, base: &Path, seed: Option<u64>) -> Result<Outcome> {
    let m = with_form(cfg.model.resolve(base)?, cfg.denominator);
    let grid = cfg.grid.build()?;
    let seed = seed.unwrap_or(cfg.seed);
    let ranges = if cfg.monte_carlo {
        Some(ranges_for(&m, &cfg.ranges, cfg.rel_std)?)
    } else {
        None
    };

    let mut outputs = Vec::new();
    let mut norms = Vec::new();
    for &output in &cfg.outputs {
        let res = match &ranges {
            Some(r) => {
                let mc = McConfig {
                    n_samples: cfg.n_samples,
                    seed,
                    ..McConfig::default()
                };
                let mc = mc_average_indices(&m, r, &grid, output, &mc)?;
                LsaOutputResult {
                    output,
                    mean: mc.mean,
                    std: mc.std,
                    resampled: mc.resampled,
                }
            }
            None => LsaOutputResult {
                output,
                mean: local_index_curves(&m, &grid, output)?,
                std: Vec::new(),
                resampled: 0,
            },
        };
        for c in &res.mean {
            norms.push(norm_row(c, cfg.measure)?);
        }
        outputs.push(res);
    }

    let mut header = vec!["omega_shifted".to_string()];
    let mut columns: Vec<&[f64]> = Vec::new();
    for o in &outputs {
        for c in &o.mean {
            header.push(format!("{}_{}_mean", o.output.name(), c.param.name()));
            columns.push(&c.values);
        }
        for c in &o.std {
            header.push(format!("{}_{}_std", o.output.name(), c.param.name()));
            columns.push(&c.values);
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let curves = csv(
        &header_refs,
        grid.iter().enumerate().map(|(i, &x)| {
            std::iter::once(num(x))
                .chain(columns.iter().map(|c| num(c[i])))
                .collect()
        }),
    );

    let mut summary = vec![format!(
        "local sensitivity of {} over {} points, {}",
        m.kind,
        grid.len(),
        if ranges.is_some() {
            format!("{} Monte Carlo draws", cfg.n_samples)
        } else {
            "baseline parameters".to_string()
        }
    )];
    for r in &norms {
        summary.push(format!(
            "  {:<8} {:<7} L1 {:>8.3}  L2 {:>8.3}  Linf {:>7.3}",
            r.output.name(),
            r.param.name(),
            r.l1,
            r.l2,
            r.linf
        ));
    }

    let mut artifacts = Artifacts::default();
    artifacts.add("lsa_curves.csv", curves);
    artifacts.add("lsa_norms.csv", norms_csv(&norms));
    artifacts.add_json(
        "lsa_result.json",
        &LsaResult {
            model: m,
            ranges,
            n_samples: if cfg.monte_carlo { cfg.n_samples } else { 0 },
            measure: cfg.measure,
            outputs,
            norms,
        },
    )?;
    Ok(Outcome { artifacts, summary })
}

#[derive(Serialize)]
struct GsaResult {
    model: FractionalModel,
    ranges: ParamRanges,
    config: SaltelliConfig,
    outputs: Vec<ModelSobol>,
}

pub fn gsa(cfg: &GsaConfig, base: &Path, seed: Option<u64>) -> Result<Outcome> {
    let m = with_form(cfg.model.resolve(base)?, cfg.denominator);
    let grid = cfg.grid.build()?;
    let ranges = ranges_for(&m, &cfg.ranges, cfg.rel_std)?;
    let seed = seed.unwrap_or(cfg.seed);
    let saltelli = SaltelliConfig {
        n: cfg.n,
        scramble_seed: cfg.scramble.then_some(seed),
    };

    let mut outputs = Vec::new();
    for &output in &cfg.outputs {
        outputs.push(model_sobol_indices(&ranges, &grid, output, &saltelli, cfg.tau2)?);
    }

    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut summary = vec![format!(
        "Sobol' indices of {} over {} points, N = {}",
        m.kind,
        grid.len(),
        cfg.n
    )];
    for s in &outputs {
        if s.any_zero_variance() {
            summary.push(format!(
                "  {}: zero output variance at {} of {} points (indices set to 0)",
                s.output.name(),
                s.result.zero_variance.iter().filter(|&&z| z).count(),
                grid.len()
            ));
        }
        for (i, &p) in s.params.iter().enumerate() {
            for (j, &x) in grid.iter().enumerate() {
                rows.push(vec![
                    s.output.name().to_string(),
                    p.name().to_string(),
                    num(x),
                    num(s.result.first[i][j]),
                    num(s.result.total[i][j]),
                ]);
            }
            let (f, t) = (s.first_linf(p).unwrap_or(0.0), s.total_linf(p).unwrap_or(0.0));
            table.push(vec![s.output.name().to_string(), p.name().to_string(), num(f), num(t)]);
            summary.push(format!("  {:<8} {:<7} max S {:>6.3}  max ST {:>6.3}", s.output.name(), p.name(), f, t));
        }
        summary.push(format!("  {}: max |ST - S| = {:.4}", s.output.name(), s.max_interaction()));
    }

    let mut artifacts = Artifacts::default();
    artifacts.add(
        "gsa_indices.csv",
        csv(&["output", "param", "omega_shifted", "first", "total"], rows),
    );
    artifacts.add("gsa_linf.csv", csv(&["output", "param", "first_linf", "total_linf"], table));
    artifacts.add_json(
        "gsa_result.json",
        &GsaResult {
            model: m,
            ranges,
            config: saltelli,
            outputs,
        },
    )?;
    Ok(Outcome { artifacts, summary })
}

pub fn eval(cfg: &EvalConfig, base: &Path) -> Result<Outcome> {
    let m = with_form(cfg.model.resolve(base)?, cfg.denominator);
    let grid = cfg.grid.build()?;
    let kernel = m.kernel()?;
    let rows = grid.iter().map(|&x| {
        let v = kernel.eval(x);
        vec![num(x), num(v.storage), num(v.loss), num(v.magnitude()), num(v.loss / v.storage)]
    });
    let mut artifacts = Artifacts::default();
    artifacts.add(
        "eval.csv",
        csv(&["omega_shifted", "e_storage", "e_loss", "e_abs", "tan_delta"], rows),
    );
    Ok(Outcome {
        artifacts,
        summary: vec![format!("evaluated {} at {} frequencies", m.kind, grid.len())],
    })
}

pub fn synth(cfg: &SynthConfig, base: &Path, seed: Option<u64>) -> Result<Outcome> {
    let m = with_form(cfg.model.resolve(base)?, cfg.denominator);
    let grid = cfg.grid.build()?;
    let seed = seed.unwrap_or(cfg.seed);
    let label = cfg.label.clone().unwrap_or_else(|| "synthetic".into());
    let curve = synthesize_curve(&m, &grid, cfg.noise_sigma_log10, seed, &label)?;
    let mut bytes = Vec::new();
    write_master_curve(&curve, &mut bytes)?;
    let mut artifacts = Artifacts::default();
    artifacts.add("curve.csv", bytes);
    Ok(Outcome {
        artifacts,
        summary: vec![format!(
            "synthesized {} points from {} (noise sigma {} decades, seed {seed})",
            curve.len(),
            m.kind,
            cfg.noise_sigma_log10
        )],
    })
}
