//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line; the test
//! fails if any criterion fails. Lines are written straight to stdout so they
//! show up even when the harness captures test output.
//!
//! Run with `cargo test -p fracvisc-validation --test acceptance`.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracvisc::calibration::{fit, ParamBounds};
use fracvisc::dataio::synthesize_curve;
use fracvisc::grid::log_grid;
use fracvisc::gsa::{model_sobol_indices, saltelli_indices, ModelSobol, SaltelliConfig};
use fracvisc::lsa::{
    index_norm, local_indices, mc_average_indices, model_gradient, LogMeasure, McConfig, McIndices, NormKind, Output,
    ParamRanges, Tau2Mode,
};
use fracvisc::presets::{self, FMM_FMG_FITS};
use fracvisc::pso::PsoConfig;
use fracvisc::viscomodel::{
    branch_moduli, constrained_tau2, model_moduli, BranchParams, Denominator, FractionalModel, ModelKind, Param,
};
use fracvisc::calibration::FitResult;

struct Report {
    failures: Vec<usize>,
}

impl Report {
    fn record(&mut self, id: usize, title: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
        let in_time = elapsed <= budget;
        let ok = pass && in_time;
        let line = format!(
            "ACCEPTANCE {id:>2} {} | {title} | {detail} | {:.2}s (budget {}s){}\n",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { " OVER BUDGET" }
        );
        let mut out = std::io::stdout().lock();
        out.write_all(line.as_bytes()).unwrap();
        out.flush().unwrap();
        if !ok {
            self.failures.push(id);
        }
    }

    fn info(&self, text: &str) {
        let mut out = std::io::stdout().lock();
        writeln!(out, "           info | {text}").unwrap();
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn table_grid() -> Vec<f64> {
    log_grid(1e-8, 1e2, 201).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

// 1
fn maxwell_limit(r: &mut Report) {
    let t = Instant::now();
    let p = BranchParams::new(150.0, 0.4, 1.0, 0.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let x = 10f64.powf(-6.0 + 10.0 * i as f64 / 99.0);
        let z = x * p.tau_c;
        let m = branch_moduli(&p, x).unwrap();
        let want_s = p.e_c * z * z / (1.0 + z * z);
        let want_l = p.e_c * z / (1.0 + z * z);
        worst = worst.max(((m.storage - want_s) / want_s).abs()).max(((m.loss - want_l) / want_l).abs());
    }
    r.record(
        1,
        "Maxwell limit, 100 frequencies",
        worst < 1e-12,
        t.elapsed(),
        secs(1),
        &format!("max rel err {worst:.2e} (tol 1e-12)"),
    );
}

// 2
fn complex_equivalence(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let (alpha, beta): (f64, f64) = (rng.random(), rng.random());
        if (alpha - beta).abs() < 1e-3 {
            continue;
        }
        let p = BranchParams::new(10f64.powf(rng.random_range(-1.0..4.0)), 10f64.powf(rng.random_range(-3.0..2.0)), alpha, beta).unwrap();
        let x = 10f64.powf(rng.random_range(-8.0..2.0));
        let got = branch_moduli(&p, x).unwrap();
        let iz = Complex64::new(0.0, x * p.tau_c);
        let want = p.e_c * iz.powf(alpha) / (1.0 + iz.powf(alpha - beta));
        let scale = want.norm();
        worst = worst.max((got.storage - want.re).abs() / scale).max((got.loss - want.im).abs() / scale);
        n += 1;
    }
    r.record(
        2,
        "real form equals complex form, 1000 draws",
        worst < 1e-10,
        t.elapsed(),
        secs(1),
        &format!("max err / |E*| {worst:.2e} (tol 1e-10)"),
    );
}

// 3
fn constraint_reproduction(r: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_label = String::new();
    let mut flagged = String::new();
    let mut checked = 0;
    for row in &FMM_FMG_FITS {
        let tau2 = constrained_tau2(row.tau_c1, row.e_c1, row.e_c2).unwrap();
        let rel = ((tau2 - row.tau_c2) / row.tau_c2).abs();
        if row.label() == "30HS/0.0" {
            flagged = format!("excluded 30HS/0.0: {tau2:.3} s vs tabulated {} s ({:.1}%)", row.tau_c2, 100.0 * rel);
            continue;
        }
        checked += 1;
        if rel > worst {
            worst = rel;
            worst_label = row.label();
        }
    }
    r.record(
        3,
        "time-scale constraint vs tabulated tau_c2",
        checked == 11 && worst < 0.015,
        t.elapsed(),
        secs(1),
        &format!("{checked} rows, worst {:.2}% at {worst_label} (tol 1.5%)", 100.0 * worst),
    );
    r.info(&flagged);
}

const FIT_ROWS: [&str; 2] = ["20HS/0.0", "40HS/0.0"];

fn fit_cfg() -> PsoConfig {
    PsoConfig {
        n_pop: 60,
        n_iter: 1500,
        n_runs: 8,
        seed: 2024,
        ..PsoConfig::default()
    }
}

fn run_fit(label: &str) -> (FractionalModel, FitResult) {
    let truth = presets::find(label).unwrap().constrained_model().unwrap();
    let data = synthesize_curve(&truth, &table_grid(), 0.0, 0, label).unwrap();
    let bounds = ParamBounds::standard(ModelKind::FmmFmg, true);
    (truth, fit(&data, ModelKind::FmmFmg, &bounds, &fit_cfg(), true).unwrap())
}

// 4
fn fit_round_trip(r: &mut Report) -> Vec<String> {
    let t = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    let mut artifacts = Vec::new();
    for label in FIT_ROWS {
        let (truth, res) = run_fit(label);
        let bounds = ParamBounds::standard(ModelKind::FmmFmg, false);
        let mut worst = (0.0f64, Param::Ec1);
        // The recovered model is the best incumbent over runs; runs caught in a
        // local minimum are reported in the mean/std statistics instead.
        for &param in ModelKind::FmmFmg.params() {
            let (got, want) = (res.best_model.get(param), truth.get(param));
            // Zero-valued generators: 2% of the search interval instead.
            let err = if want == 0.0 {
                let b = bounds.entries.iter().find(|b| b.param == param).unwrap();
                got.abs() / (b.upper - b.lower)
            } else {
                ((got - want) / want).abs()
            };
            ok &= err <= 0.02;
            if err > worst.0 {
                worst = (err, param);
            }
        }
        r.info(&format!(
            "{label} run costs [{}]; mean model {}",
            res.run_costs.iter().map(|c| format!("{c:.1e}")).collect::<Vec<_>>().join(", "),
            res.stats.iter().map(|s| format!("{} {:.4}", s.param, s.mean)).collect::<Vec<_>>().join(", ")
        ));
        ok &= res.relative_error < 0.0198;
        details.push(format!(
            "{label}: worst {} {:.3}%, rel err {:.1e}",
            worst.1,
            100.0 * worst.0,
            res.relative_error
        ));
        artifacts.push(serde_json::to_string(&res).unwrap());
    }
    r.record(
        4,
        "PSO round trip on noiseless curves",
        ok,
        t.elapsed(),
        secs(300),
        &format!("{} (tol 2%, rel err < 0.0198)", details.join("; ")),
    );
    artifacts
}

// 5
fn gradient_suite(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let b1 = loop {
            let (a, b): (f64, f64) = (rng.random_range(0.05..0.95), rng.random_range(0.0..0.05));
            if a - b > 0.01 {
                break BranchParams::new(rng.random_range(10.0..5e3), 10f64.powf(rng.random_range(-2.0..1.0)), a, b).unwrap();
            }
        };
        let b2 = BranchParams::gel(rng.random_range(1.0..1e3), 10f64.powf(rng.random_range(-2.0..1.0)), rng.random_range(0.01..0.95)).unwrap();
        let form = if case % 2 == 0 { Denominator::Exact } else { Denominator::UnitCross };
        let m = FractionalModel::fmm_fmg(b1, b2).unwrap().with_denominator(form);
        let x = 10f64.powf(rng.random_range(-8.0..2.0));
        let (_, grads) = model_gradient(&m, x).unwrap();
        for (p, g) in m.kind.params().iter().zip(&grads) {
            let (fd, y) = branch_difference(&m, *p, x);
            let q = m.get(*p);
            let floor = 1e-3 * y / q.abs().max(1e-3);
            worst = worst
                .max((g.storage - fd.0).abs() / fd.0.abs().max(floor))
                .max((g.loss - fd.1).abs() / fd.1.abs().max(floor));
        }
    }
    r.record(
        5,
        "analytic derivatives vs central differences, 200 cases",
        worst < 1e-6,
        t.elapsed(),
        secs(10),
        &format!("max rel err {worst:.2e} (tol 1e-6; branch elasticity floor 1e-3)"),
    );
}

/// Central difference, relative step 1e-6, of the branch owning `p`,
/// evaluated by a direct real-form formula. Returns the derivative pair and
/// the larger branch modulus.
fn branch_difference(m: &FractionalModel, p: Param, x: f64) -> ((f64, f64), f64) {
    let c = m.denominator.cross_coefficient();
    let eval = |b: &BranchParams| {
        let z = x * b.tau_c;
        let d = b.alpha - b.beta;
        let den = 1.0 + c * z.powf(d) * (FRAC_PI_2 * d).cos() + z.powf(2.0 * d);
        let (u1, u2) = (z.powf(b.alpha), z.powf(2.0 * b.alpha - b.beta));
        (
            b.e_c * (u1 * (FRAC_PI_2 * b.alpha).cos() + u2 * (FRAC_PI_2 * b.beta).cos()) / den,
            b.e_c * (u1 * (FRAC_PI_2 * b.alpha).sin() + u2 * (FRAC_PI_2 * b.beta).sin()) / den,
        )
    };
    let q = m.get(p);
    let h = 1e-6 * q.abs().max(1e-3);
    let (mut lo, mut hi) = (*m, *m);
    lo.set(p, q - h);
    hi.set(p, q + h);
    let pick = |mm: &FractionalModel| if p.branch() == 0 { mm.branch1 } else { mm.branch2 };
    let (a, b) = (eval(&pick(&lo)), eval(&pick(&hi)));
    let own = eval(&pick(m));
    (((b.0 - a.0) / (2.0 * h), (b.1 - a.1) / (2.0 * h)), own.0.abs().max(own.1.abs()))
}

// 6
fn elasticity_sum_rule(r: &mut Report) {
    let t = Instant::now();
    let grid = table_grid();
    let mut worst = 0.0f64;
    for row in &FMM_FMG_FITS {
        for form in [Denominator::Exact, Denominator::UnitCross] {
            let m = row.model().unwrap().with_denominator(form);
            for &x in &grid {
                for out in [Output::Storage, Output::Loss] {
                    let s = local_indices(&m, x, out).unwrap();
                    worst = worst.max((s[0] + s[4] - 1.0).abs());
                }
            }
        }
    }
    r.record(
        6,
        "E_c1 + E_c2 elasticities sum to one",
        worst < 1e-12,
        t.elapsed(),
        secs(5),
        &format!("12 rows x 201 points x 2 outputs x 2 forms, max |sum - 1| {worst:.2e} (tol 1e-12)"),
    );
}

fn lsa_run(form: Denominator) -> McIndices {
    let m = presets::find("40HS/0.0").unwrap().model().unwrap().with_denominator(form);
    let ranges = ParamRanges::from_model(&m, 0.05).unwrap();
    let cfg = McConfig {
        n_samples: 2000,
        seed: 7,
        ..McConfig::default()
    };
    mc_average_indices(&m, &ranges, &table_grid(), Output::Storage, &cfg).unwrap()
}

fn l1_norms(mc: &McIndices) -> Vec<(Param, f64)> {
    mc.mean
        .iter()
        .map(|c| (c.param, index_norm(c, NormKind::L1, LogMeasure::Natural).unwrap()))
        .collect()
}

// 7
fn lsa_table(r: &mut Report) -> String {
    let t = Instant::now();
    let mc = lsa_run(Denominator::UnitCross);
    let norms = l1_norms(&mc);
    let elapsed = t.elapsed();
    let get = |p: Param| norms.iter().find(|(q, _)| *q == p).unwrap().1;
    let (a1, ec1, ec2, a2, t1, t2, b1) = (
        get(Param::Alpha1),
        get(Param::Ec1),
        get(Param::Ec2),
        get(Param::Alpha2),
        get(Param::Tau1),
        get(Param::Tau2),
        get(Param::Beta1),
    );
    let values_ok = (a1 / 11.6 - 1.0).abs() <= 0.15 && (ec1 / 10.6 - 1.0).abs() <= 0.15;
    // "E_c1 ~ E_c2": within 20% of the larger (the published pair differs by 15%).
    let ranking_ok = a1 >= ec1 && (ec1 - ec2).abs() <= 0.2 * ec1.max(ec2) && ec1.min(ec2) > a2 && a2 > t1 && t1 > t2 && t2 >= b1;
    r.record(
        7,
        "LSA storage L1 norms, 40HS/0.0",
        values_ok && ranking_ok,
        elapsed,
        secs(120),
        &format!(
            "alpha1 {a1:.2} (11.6 +/-15%), E_c1 {ec1:.2} (10.6 +/-15%), ranking {} [E_c2 {ec2:.2}, alpha2 {a2:.2}, tau_c1 {t1:.2}, tau_c2 {t2:.2}, beta1 {b1:.2}]",
            if ranking_ok { "ok" } else { "MISMATCH" }
        ),
    );
    let exact = l1_norms(&lsa_run(Denominator::Exact));
    r.info(&format!(
        "criterion 7 with exact denominator: {}",
        exact.iter().map(|(p, v)| format!("{p} {v:.2}")).collect::<Vec<_>>().join(", ")
    ));
    serde_json::to_string(&mc).unwrap()
}

// 8
fn ishigami(r: &mut Report) {
    let t = Instant::now();
    let f = |q: &[f64], out: &mut [f64]| {
        out[0] = q[0].sin() + 7.0 * q[1].sin().powi(2) + 0.1 * q[2].powi(4) * q[0].sin();
        Ok(())
    };
    let pi = std::f64::consts::PI;
    let cfg = SaltelliConfig {
        n: 1 << 16,
        scramble_seed: None,
    };
    let res = saltelli_indices(f, &[(-pi, pi); 3], 1, &cfg).unwrap();
    let want = [0.3139, 0.4424, 0.0];
    let got: Vec<f64> = (0..3).map(|i| res.first[i][0]).collect();
    let ok = got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= 0.01);
    r.record(
        8,
        "Ishigami first-order indices, N = 2^16",
        ok,
        t.elapsed(),
        secs(30),
        &format!("S = [{:.4}, {:.4}, {:.4}] vs [0.3139, 0.4424, 0.0] +/-0.01", got[0], got[1], got[2]),
    );
}

fn gsa_run(form: Denominator) -> ModelSobol {
    let m = presets::find("40HS/0.0").unwrap().model().unwrap().with_denominator(form);
    let ranges = ParamRanges::from_model(&m, 0.05).unwrap();
    let cfg = SaltelliConfig {
        n: 1 << 14,
        scramble_seed: None,
    };
    model_sobol_indices(&ranges, &table_grid(), Output::Storage, &cfg, Tau2Mode::Independent).unwrap()
}

// 9, 10
fn gsa_table(r: &mut Report) -> String {
    let t = Instant::now();
    let s = gsa_run(Denominator::UnitCross);
    let elapsed = t.elapsed();
    let targets = [
        (Param::Ec1, 0.93, 0.05),
        (Param::Alpha1, 0.61, 0.05),
        (Param::Ec2, 0.68, 0.05),
        (Param::Tau2, 0.0, 0.01),
        (Param::Beta1, 0.0, 0.01),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, want, tol) in targets {
        let got = s.first_linf(p).unwrap();
        let pass = (got - want).abs() <= tol;
        ok &= pass;
        parts.push(format!("{p} {got:.3} ({want} +/-{tol}){}", if pass { "" } else { " MISS" }));
    }
    r.record(9, "GSA storage Linf first-order, 40HS/0.0, N = 2^14", ok, elapsed, secs(300), &parts.join(", "));
    let exact = gsa_run(Denominator::Exact);
    r.info(&format!(
        "criterion 9 with exact denominator: {}",
        targets
            .iter()
            .map(|(p, _, _)| format!("{p} {:.3}", exact.first_linf(*p).unwrap()))
            .collect::<Vec<_>>()
            .join(", ")
    ));

    let gap = s.max_interaction();
    r.record(
        10,
        "near-additivity max |S_T - S|",
        gap < 0.03,
        Duration::ZERO,
        secs(1),
        &format!("{gap:.4} (tol 0.03), computed with criterion 9"),
    );
    serde_json::to_string(&s).unwrap()
}

// 11
fn determinism(r: &mut Report, fits: &[String], lsa: &str, gsa: &str) {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    for threads in [1, 8] {
        let (f, l, g) = in_pool(threads, || {
            let f: Vec<String> = FIT_ROWS.iter().map(|l| serde_json::to_string(&run_fit(l).1).unwrap()).collect();
            let l = serde_json::to_string(&lsa_run(Denominator::UnitCross)).unwrap();
            let g = serde_json::to_string(&gsa_run(Denominator::UnitCross)).unwrap();
            (f, l, g)
        });
        if f != fits {
            mismatches.push(format!("fit@{threads}"));
        }
        if l != lsa {
            mismatches.push(format!("lsa@{threads}"));
        }
        if g != gsa {
            mismatches.push(format!("gsa@{threads}"));
        }
    }
    r.record(
        11,
        "byte-identical reruns of 4, 7, 9 with 1 and 8 threads",
        mismatches.is_empty(),
        t.elapsed(),
        secs(900),
        &if mismatches.is_empty() {
            "all artifacts identical".to_string()
        } else {
            format!("differs: {}", mismatches.join(", "))
        },
    );
}

#[test]
fn acceptance_criteria() {
    let mut r = Report { failures: Vec::new() };
    maxwell_limit(&mut r);
    complex_equivalence(&mut r);
    constraint_reproduction(&mut r);
    let fits = fit_round_trip(&mut r);
    gradient_suite(&mut r);
    elasticity_sum_rule(&mut r);
    let lsa = lsa_table(&mut r);
    ishigami(&mut r);
    let gsa = gsa_table(&mut r);
    determinism(&mut r, &fits, &lsa, &gsa);
    // Sanity check that model_moduli agrees with the preset used throughout.
    assert!(model_moduli(&presets::find("40HS/0.0").unwrap().model().unwrap(), 1.0).is_ok());
    assert!(r.failures.is_empty(), "failed criteria: {:?}", r.failures);
}
