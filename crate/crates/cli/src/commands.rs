use std::path::{Path, PathBuf};

use serde_json::json;

use gausslin::estimator::{estimate_grid, LINEARITY_TOL};
use gausslin::quadrature::observation_grid;
use gausslin::verify::RESIDUAL_TOL;
use gausslin::{
    fit_best_linear, omega_for_p, orthogonality_residual, CosineGaussianPrior, Estimator,
    LinearMap, LossSpec, Prior,
};

use crate::args::{ConstructArgs, EstimateArgs, Fig1Args, Format, VerifyArgs};
use crate::output::{emit, fmt_real, json_bytes, Table};
use crate::Failure;

/// Density tables span this many envelope standard deviations each side.
const DENSITY_SPAN: f64 = 6.0;
const DENSITY_POINTS: usize = 2401;

pub fn parse_range(text: &str) -> Result<(f64, f64, f64), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::usage(format!("--y-range must be min:max:step, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    if !(nums[2] > 0.0) || nums.iter().any(|v| !v.is_finite()) || nums[1] < nums[0] {
        return Err(bad());
    }
    Ok((nums[0], nums[1], nums[2]))
}

pub fn parse_matrix(text: &str) -> Result<LinearMap, Failure> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Failure::usage(format!("bad matrix entry {v:?} in --A")))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(LinearMap::from_rows(&rows)?)
}

fn load_prior(path: &Path) -> Result<Prior, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Prior::from_json(&text)?)
}

fn loss(args: &EstimateArgs) -> Result<LossSpec, Failure> {
    Ok(LossSpec::new(
        args.loss.p,
        args.loss.k.unwrap_or(args.loss.p),
    )?)
}

fn y_grid(args: &EstimateArgs, dim: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let (lo, hi, step) = parse_range(&args.y_range)?;
    Ok(observation_grid(lo, hi, step, dim)?)
}

fn names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=dim).map(|i| format!("{prefix}{i}")).collect()
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<u8, Failure> {
    let prior = load_prior(&args.prior)?;
    let spec = loss(args)?;
    let n = prior.dim();
    let grid = y_grid(args, n)?;
    let est = Estimator::new(&prior, spec, args.quad.config())?;
    let values = estimate_grid(&est, &grid)?;
    let mut header = names("y", n);
    header.extend(names("f", n));
    let rows = grid
        .iter()
        .zip(&values)
        .map(|(y, f)| y.iter().chain(f).copied().collect())
        .collect();
    let table = Table { header, rows };
    emit(
        args.output.out.as_deref(),
        &table.render(args.output.format)?,
    )?;
    Ok(0)
}

pub fn verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let base = &args.base;
    let prior = load_prior(&base.prior)?;
    let spec = loss(base)?;
    let a = parse_matrix(&args.a)?;
    let grid = y_grid(base, prior.dim())?;
    let report = orthogonality_residual(&prior, &a, &spec, &grid, &base.quad.config())?;
    let pass = report.passes(RESIDUAL_TOL);
    let summary = format!("max_norm={} pass={pass}", fmt_real(report.max_norm));
    let n = prior.dim();
    let bytes = match base.output.format {
        Format::Csv => {
            let mut header = names("y", n);
            header.push("residual_norm".into());
            let rows = report
                .y_values
                .iter()
                .zip(report.norms())
                .map(|(y, r)| y.iter().copied().chain([r]).collect())
                .collect();
            let mut bytes = Table { header, rows }.to_csv()?;
            if base.output.out.is_none() {
                bytes.extend(format!("{summary}\n").bytes());
            }
            bytes
        }
        Format::Json => json_bytes(&json!({
            "y_values": report.y_values,
            "residuals": report.residuals,
            "residual_norms": report.norms(),
            "max_norm": report.max_norm,
            "pass": pass,
            "tolerance": RESIDUAL_TOL,
            "summary": summary,
            "quadrature": report.cfg,
        }))?,
    };
    emit(base.output.out.as_deref(), &bytes)?;
    if base.output.out.is_some() || base.output.format == Format::Json {
        println!("{summary}");
    }
    Ok(if pass { 0 } else { 1 })
}

pub fn scan_linearity(args: &EstimateArgs) -> Result<u8, Failure> {
    let prior = load_prior(&args.prior)?;
    let spec = loss(args)?;
    let n = prior.dim();
    let grid = y_grid(args, n)?;
    let fit = fit_best_linear(&prior, &spec, &grid, &args.quad.config())?;
    let linear = fit.is_linear();
    let verdict = if linear { "linear" } else { "nonlinear" };
    let a_rows = fit.a.entries().rows();
    let bytes = match args.output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Failure::usage(format!("csv: {e}"));
            w.write_record(["field", "value"]).map_err(io)?;
            for (i, row) in a_rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    w.write_record([format!("a_star_{}{}", i + 1, j + 1), fmt_real(*v)])
                        .map_err(io)?;
                }
            }
            w.write_record(["max_deviation".to_string(), fmt_real(fit.max_deviation)])
                .map_err(io)?;
            w.write_record(["verdict", verdict]).map_err(io)?;
            w.into_inner()
                .map_err(|e| Failure::usage(format!("csv: {e}")))?
        }
        Format::Json => json_bytes(&json!({
            "a_star": a_rows,
            "max_deviation": fit.max_deviation,
            "tolerance": LINEARITY_TOL,
            "verdict": verdict,
            "y_values": grid,
            "estimates": fit.estimates,
        }))?,
    };
    emit(args.output.out.as_deref(), &bytes)?;
    if args.output.out.is_some() {
        println!(
            "verdict={verdict} max_deviation={}",
            fmt_real(fit.max_deviation)
        );
    }
    Ok(0)
}

/// Positive admissible frequencies for `p`, mapping every failure to
/// "construction impossible".
fn positive_omegas(p: f64) -> Result<Vec<f64>, Failure> {
    let all = omega_for_p(p).map_err(|e| Failure::construction(e.to_string()))?;
    Ok(all.into_iter().filter(|w| *w > 0.0).collect())
}

fn density_grid(prior: &CosineGaussianPrior) -> Vec<f64> {
    let half = DENSITY_SPAN * prior.envelope_variance().sqrt();
    let h = 2.0 * half / (DENSITY_POINTS - 1) as f64;
    (0..DENSITY_POINTS).map(|i| -half + i as f64 * h).collect()
}

fn default_density_path(out: &Path, format: Format) -> PathBuf {
    let ext = match format {
        Format::Csv => "density.csv",
        Format::Json => "density.json",
    };
    out.with_extension(ext)
}

pub fn construct_prior(args: &ConstructArgs) -> Result<u8, Failure> {
    let omegas = positive_omegas(args.p)?;
    let omega = *omegas.get(args.select).ok_or_else(|| {
        Failure::usage(format!(
            "--select {} out of range: {} admissible positive frequencies",
            args.select,
            omegas.len()
        ))
    })?;
    let cos = CosineGaussianPrior::new(args.a, args.rho, args.theta, omega)?;
    let prior = Prior::Cosine(cos);
    let mut doc = prior.to_json();
    doc.push('\n');
    emit(args.output.out.as_deref(), doc.as_bytes())?;

    let xs = density_grid(&cos);
    let table = Table {
        header: vec!["x".into(), "density".into()],
        rows: xs.iter().map(|&x| vec![x, cos.density(x)]).collect(),
    };
    let density_path = args.density.clone().or_else(|| {
        args.output
            .out
            .as_deref()
            .map(|o| default_density_path(o, args.output.format))
    });
    if let Some(path) = &density_path {
        emit(Some(path), &table.render(args.output.format)?)?;
    }

    // Full admissible set, symmetric about 0, with the chosen one marked.
    let mut listing = String::new();
    let mut all: Vec<f64> = omegas.iter().map(|w| -w).collect();
    all.push(0.0);
    all.extend(&omegas);
    all.sort_by(f64::total_cmp);
    for w in all {
        listing.push_str(&format!("omega={} selected={}\n", fmt_real(w), w == omega));
    }
    if args.output.out.is_some() {
        print!("{listing}");
    } else {
        eprint!("{listing}");
    }
    Ok(0)
}

pub fn fig1(args: &Fig1Args) -> Result<u8, Failure> {
    let omegas = positive_omegas(args.p)?;
    let chosen = [0.0, omegas[0]];
    let columns: Vec<CosineGaussianPrior> = if args.rho == 0.0 {
        vec![CosineGaussianPrior::new(args.a, 0.0, args.theta, 0.0)?]
    } else {
        chosen
            .iter()
            .map(|&w| CosineGaussianPrior::new(args.a, args.rho, args.theta, w))
            .collect::<Result<_, _>>()?
    };
    let mut header = vec!["x".to_string()];
    if columns.len() == 1 {
        header.push("density".into());
    } else {
        header.extend(chosen.iter().map(|w| format!("omega_{}", fmt_real(*w))));
    }
    let xs = density_grid(&columns[0]);
    let rows = xs
        .iter()
        .map(|&x| {
            std::iter::once(x)
                .chain(columns.iter().map(|c| c.density(x)))
                .collect()
        })
        .collect();
    let table = Table { header, rows };
    emit(
        args.output.out.as_deref(),
        &table.render(args.output.format)?,
    )?;
    Ok(0)
}
