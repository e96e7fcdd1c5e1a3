//! One function per subcommand. Each returns the process exit code; input
//! problems surface as `CliError::Usage`, computation failures as
//! `CliError::Numeric`.

use crate::model;
use crate::{fmt, Cli, CliError, CdfMethod, Format};
use normal_ratio::{
    approx_cdf, density, density_by_quadrature, empirical_cdf, exact_cdf, sample_ratios,
    validity_diagnostic, Error, NormalRatioModel, RatioPoint, DEFAULT_QMC_POINTS,
    DEFAULT_QMC_SHIFTS,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| {
                CliError::Usage(format!("cannot write {}: {e}", path.display()))
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        CliError::Pipe
    } else {
        CliError::Usage(format!("write failed: {e}"))
    }
}

/// Line to standard output; a closed pipe unwinds as a quiet success
/// instead of a panic.
fn emit(text: impl AsRef<str>) -> Result<(), CliError> {
    let mut out = std::io::stdout();
    out.write_all(text.as_ref().as_bytes())
        .and_then(|()| out.write_all(b"\n"))
        .map_err(io_err)
}

fn parse_point(model: &NormalRatioModel, s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let coords = fmt::parse_reals(s, what)?;
    if coords.len() != model.p() - 1 {
        return Err(CliError::Usage(format!(
            "{what}: got {} components, the model needs {}",
            coords.len(),
            model.p() - 1
        )));
    }
    Ok(coords)
}

pub fn density_cmd(cli: &Cli, point: &str, log: bool) -> Result<ExitCode, CliError> {
    let model = model::require(&cli.model)?;
    let coords = parse_point(&model, point, "--point")?;
    let point = RatioPoint::new(coords).map_err(|e| CliError::Usage(e.to_string()))?;
    let value = if log {
        model
            .log_density(&point)
            .map_err(|e| CliError::Numeric(e.to_string()))?
    } else {
        density(&model, &point).map_err(|e| CliError::Numeric(e.to_string()))?
    };
    emit(fmt::value(value))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct GridRow {
    y: Vec<f64>,
    density: f64,
}

pub fn density_grid(cli: &Cli, lo: &str, hi: &str, steps: &str) -> Result<ExitCode, CliError> {
    let model = model::require(&cli.model)?;
    let d = model.p() - 1;
    if d > 2 {
        return Err(CliError::Usage(format!(
            "grids are supported for 1- or 2-dimensional ratios, the model has {d}"
        )));
    }
    let lo = fmt::broadcast(fmt::parse_reals(lo, "--lo")?, d, "--lo")?;
    let hi = fmt::broadcast(fmt::parse_reals(hi, "--hi")?, d, "--hi")?;
    let steps = parse_counts(steps, d)?;
    for k in 0..d {
        if lo[k] >= hi[k] {
            return Err(CliError::Usage(format!(
                "--lo must be below --hi in every dimension (dimension {}: {} vs {})",
                k + 1,
                lo[k],
                hi[k]
            )));
        }
    }

    let coord = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (steps[k] - 1) as f64;
    let mut rows = Vec::new();
    let mut index = vec![0usize; d];
    loop {
        let y: Vec<f64> = (0..d).map(|k| coord(k, index[k])).collect();
        let point = RatioPoint::new(y.clone()).map_err(|e| CliError::Numeric(e.to_string()))?;
        let f = density(&model, &point).map_err(|e| CliError::Numeric(e.to_string()))?;
        rows.push(GridRow { y, density: f });
        if !advance(&mut index, &steps) {
            break;
        }
    }

    let mut out = writer(&cli.out)?;
    match cli.format {
        Format::Csv => {
            let header: Vec<String> = (1..=d).map(|k| format!("y{k}")).collect();
            writeln!(out, "{},density", header.join(",")).map_err(io_err)?;
            for row in &rows {
                let coords: Vec<String> = row.y.iter().map(|v| fmt::value(*v)).collect();
                writeln!(out, "{},{}", coords.join(","), fmt::value(row.density))
                    .map_err(io_err)?;
            }
        }
        Format::Json => {
            serde_json::to_writer(&mut out, &rows)
                .map_err(|e| CliError::Usage(format!("write failed: {e}")))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(ExitCode::SUCCESS)
}

/// Odometer step in lexicographic order; false once every index has wrapped.
fn advance(index: &mut [usize], steps: &[usize]) -> bool {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < steps[k] {
            return true;
        }
        index[k] = 0;
    }
    false
}

fn parse_counts(s: &str, dim: usize) -> Result<Vec<usize>, CliError> {
    let parsed: Result<Vec<usize>, _> = s.split(',').map(|tok| tok.trim().parse()).collect();
    let counts = parsed
        .map_err(|_| CliError::Usage(format!("--steps: '{s}' is not a list of counts")))?;
    let counts = if counts.len() == dim {
        counts
    } else if counts.len() == 1 {
        vec![counts[0]; dim]
    } else {
        return Err(CliError::Usage(format!(
            "--steps: expected 1 or {dim} values, got {}",
            counts.len()
        )));
    };
    if counts.iter().any(|&c| c < 2) {
        return Err(CliError::Usage("--steps: need at least 2 points per dimension".into()));
    }
    Ok(counts)
}

pub fn cdf(cli: &Cli, t: &str, method: CdfMethod, n: Option<usize>) -> Result<ExitCode, CliError> {
    let model = model::require(&cli.model)?;
    let t = parse_point(&model, t, "--t")?;
    let (value, error) = match method {
        CdfMethod::Approx | CdfMethod::Exact => {
            let points = n.unwrap_or(DEFAULT_QMC_POINTS);
            if points == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            if method == CdfMethod::Approx {
                let flip = validity_diagnostic(&model);
                if flip > 1e-3 {
                    eprintln!(
                        "warning: the denominator is negative with probability {}, the \
                         single-orthant approximation can be off by that much; consider \
                         --method exact",
                        fmt::error(flip)
                    );
                }
            }
            let result = match method {
                CdfMethod::Approx => {
                    approx_cdf(&model, &t, points, DEFAULT_QMC_SHIFTS, cli.seed)
                }
                _ => exact_cdf(&model, &t, points, DEFAULT_QMC_SHIFTS, cli.seed),
            }
            .map_err(|e| CliError::Numeric(e.to_string()))?;
            (result.value, result.error_estimate)
        }
        CdfMethod::Mc => {
            let n = n.unwrap_or(1_000_000);
            if n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            let batch = sample_ratios(&model, n, cli.seed);
            let est = empirical_cdf(&batch, &t);
            // add-one smoothing keeps the standard error positive at 0 and 1
            let kept = batch.n() as f64;
            let smoothed = (est * kept + 1.0) / (kept + 2.0);
            (est, (smoothed * (1.0 - smoothed) / kept).sqrt())
        }
    };
    emit(format!("{} \u{00b1} {}", fmt::value(value), fmt::error(error)))?;
    Ok(ExitCode::SUCCESS)
}

pub fn sample(cli: &Cli, n: usize) -> Result<ExitCode, CliError> {
    let model = model::require(&cli.model)?;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let batch = sample_ratios(&model, n, cli.seed);
    if batch.redraws() > 0 {
        eprintln!(
            "note: {} draw(s) landed on an unusable denominator and were redrawn",
            batch.redraws()
        );
    }
    let d = model.p() - 1;
    let mut out = writer(&cli.out)?;
    match cli.format {
        Format::Csv => {
            let header: Vec<String> = (1..=d).map(|k| format!("y{k}")).collect();
            writeln!(out, "{}", header.join(",")).map_err(io_err)?;
            for i in 0..batch.n() {
                let row: Vec<String> =
                    batch.ratios().row(i).iter().map(|v| fmt::value(*v)).collect();
                writeln!(out, "{}", row.join(",")).map_err(io_err)?;
            }
        }
        Format::Json => {
            let rows: Vec<&[f64]> = (0..batch.n()).map(|i| batch.ratios().row(i)).collect();
            serde_json::to_writer(&mut out, &rows)
                .map_err(|e| CliError::Usage(format!("write failed: {e}")))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CaseReport {
    name: String,
    p: usize,
    error: f64,
    bound: f64,
    passed: bool,
}

#[derive(Serialize)]
struct ValidationReport {
    tolerance: f64,
    cases: Vec<CaseReport>,
    max_density_relative_error: f64,
    all_passed: bool,
}

fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_model(rng: &mut ChaCha12Rng, p: usize) -> NormalRatioModel {
    let a: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| 2.0 * uniform(rng) - 1.0).collect())
        .collect();
    let sigma: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let dot: f64 = (0..p).map(|k| a[i][k] * a[j][k]).sum();
                    dot + if i == j { 0.5 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let mu: Vec<f64> = (0..p).map(|_| 6.0 * uniform(rng) - 3.0).collect();
    NormalRatioModel::from_parts(mu, &sigma).unwrap()
}

fn is_central(model: &NormalRatioModel) -> bool {
    model.mu().iter().all(|&v| v == 0.0)
}

pub fn validate(cli: &Cli, cases: usize, tol: f64, json: bool) -> Result<ExitCode, CliError> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(CliError::Usage("--tol must be a finite nonnegative number".into()));
    }
    let given = match &cli.model {
        Some(path) => Some(model::load(path)?),
        None => None,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(cli.seed);
    let mut reports = Vec::new();

    // analytic reduction rows for the central laws with identity-like scale
    if let Some(model) = given.as_ref().filter(|m| is_central(m) && m.p() == 2) {
        let mut worst = 0.0f64;
        let s11 = model.sigma().entry(0, 0);
        let s22 = model.sigma().entry(1, 1);
        let s12 = model.sigma().entry(0, 1);
        for i in 0..101 {
            let y = -5.0 + 0.1 * i as f64;
            let got = density(model, &RatioPoint::new(vec![y]).unwrap()).unwrap();
            // central 2-d ratios are Cauchy with location s12/s11 and scale
            // sqrt(det)/s11
            let scale = (s11 * s22 - s12 * s12).sqrt() / s11;
            let loc = s12 / s11;
            let expect =
                scale / (std::f64::consts::PI * (scale * scale + (y - loc) * (y - loc)));
            worst = worst.max((got - expect).abs() / expect);
        }
        reports.push(CaseReport {
            name: "cauchy-grid".into(),
            p: 2,
            error: worst,
            bound: tol,
            passed: worst <= tol,
        });
    }

    for case in 0..cases {
        let model;
        let under_test = match given.as_ref() {
            Some(m) => m,
            None => {
                model = random_model(&mut rng, 2 + case % 4);
                &model
            }
        };
        let p = under_test.p();
        let coords: Vec<f64> = (0..p - 1).map(|_| 8.0 * uniform(&mut rng) - 4.0).collect();
        let point = RatioPoint::new(coords).unwrap();
        let closed = density(under_test, &point).unwrap();
        let (error, ok) = match density_by_quadrature(under_test, &point, 1e-10) {
            Ok(q) => {
                let rel = (closed - q.value).abs() / closed.abs().max(1e-300);
                (rel, q.converged && rel <= tol)
            }
            Err(_) => (f64::INFINITY, false),
        };
        reports.push(CaseReport {
            name: format!("quadrature-{case}"),
            p,
            error,
            bound: tol,
            passed: ok,
        });
    }

    // one cross-oracle CDF row: exact orthant route vs a fresh sample
    {
        let model;
        let under_test = match given.as_ref() {
            Some(m) => m,
            None => {
                model = random_model(&mut rng, 3);
                &model
            }
        };
        let p = under_test.p();
        let t: Vec<f64> = (0..p - 1).map(|_| 3.0 * uniform(&mut rng) - 1.5).collect();
        let row = match exact_cdf(under_test, &t, 4096, 8, cli.seed) {
            Ok(exact) => {
                let batch = sample_ratios(under_test, 100_000, cli.seed ^ 0x5eed);
                let emp = empirical_cdf(&batch, &t);
                let kept = batch.n() as f64;
                let smoothed = (emp * kept + 1.0) / (kept + 2.0);
                let se = (smoothed * (1.0 - smoothed) / kept).sqrt();
                let gap = (exact.value - emp).abs();
                let bound = 3.0 * se + exact.error_estimate;
                CaseReport {
                    name: "mc-cdf".into(),
                    p,
                    error: gap,
                    bound,
                    passed: gap <= bound,
                }
            }
            Err(Error::DegenerateCovariance) => CaseReport {
                name: "mc-cdf".into(),
                p,
                error: f64::INFINITY,
                bound: f64::NAN,
                passed: false,
            },
            Err(e) => return Err(CliError::Numeric(e.to_string())),
        };
        reports.push(row);
    }

    let max_rel = reports
        .iter()
        .filter(|r| r.name.starts_with("quadrature") || r.name.ends_with("grid"))
        .map(|r| r.error)
        .fold(0.0f64, f64::max);
    let all_passed = reports.iter().all(|r| r.passed);

    if json {
        let report = ValidationReport {
            tolerance: tol,
            cases: reports,
            max_density_relative_error: max_rel,
            all_passed,
        };
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        emit(text)?;
    } else {
        let color = fmt::color_enabled();
        emit(format!(
            "{:<16} {:>2} {:>12} {:>12}  status",
            "case", "p", "error", "bound"
        ))?;
        for r in &reports {
            emit(format!(
                "{:<16} {:>2} {:>12} {:>12}  {}",
                r.name,
                r.p,
                fmt::error(r.error),
                fmt::error(r.bound),
                fmt::verdict(r.passed, color)
            ))?;
        }
        emit(format!(
            "max density relative error {} across {} case(s); {}",
            fmt::error(max_rel),
            reports.len(),
            if all_passed { "all checks passed" } else { "some checks FAILED" }
        ))?;
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct ModelInfo {
    p: usize,
    ratio_dimension: usize,
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    log_det_sigma: f64,
    denominator_sign_flip_probability: f64,
}

pub fn model_info(cli: &Cli, json: bool) -> Result<ExitCode, CliError> {
    let model = model::require(&cli.model)?;
    let p = model.p();
    let sigma: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| model.sigma().entry(i, j)).collect())
        .collect();
    let info = ModelInfo {
        p,
        ratio_dimension: p - 1,
        mu: model.mu().to_vec(),
        sigma,
        log_det_sigma: model.sigma().log_det(),
        denominator_sign_flip_probability: validity_diagnostic(&model),
    };
    if json {
        let text = serde_json::to_string_pretty(&info)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        emit(text)?;
    } else {
        emit(format!("dimension p:        {}", info.p))?;
        emit(format!("ratio dimension:    {}", info.ratio_dimension))?;
        let mu: Vec<String> = info.mu.iter().map(|v| fmt::value(*v)).collect();
        emit(format!("mu:                 [{}]", mu.join(", ")))?;
        emit("sigma:")?;
        for row in &info.sigma {
            let entries: Vec<String> = row.iter().map(|v| fmt::value(*v)).collect();
            emit(format!("  [{}]", entries.join(", ")))?;
        }
        emit(format!("log det sigma:      {}", fmt::value(info.log_det_sigma)))?;
        emit(format!(
            "P(denominator < 0): {}",
            fmt::error(info.denominator_sign_flip_probability)
        ))?;
    }
    Ok(ExitCode::SUCCESS)
}
