use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analytics::{
    fit_power_law, pdd_error_mean, pdd_error_mean_simplified, scaling_template, threshold_n0,
    FitPoint, FitReport,
};
use crate::ensemble::{
    sweep_cutoff, sweep_n, sweep_parameter, trajectory_paths, with_workers, SweepParameter,
    SweepPoint,
};
use crate::noise::{estimate_psd, one_over_f_reference_psd, spectrum_amplitude, NoiseSpec};
use crate::propagation::evolve_trajectory_traced;
use crate::sequences::{build_schedule, SequenceKind};

use super::config::{parse_document, ExperimentConfig, Format, NoiseVariant, Unit};
use super::output::{
    ensure_dir, output_dir, read_results_csv, results_csv, write_bytes, Manifest, ResultRow,
    MANIFEST_FILE, PLOT_FILE, RESULTS_FILE,
};
use super::plot::{emit_svg_plot, PlotStyle, Series};
use super::{CliError, CommonArgs, Command};

struct Context {
    cfg: ExperimentConfig,
    input_unit: &'static str,
    dir: PathBuf,
}

fn load(common: &CommonArgs) -> Result<Context, CliError> {
    let doc: Value = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            serde_json::from_str(&text).map_err(|e| CliError::Config {
                key: String::new(),
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => json!({}),
    };
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    if let Some(n) = common.trajectories {
        overrides.push(format!("run.trajectories={n}"));
    }
    let cfg = parse_document(doc, &overrides)?;
    let input_unit = match cfg.unit {
        Unit::RadPerSecond => "rad/s",
        Unit::GHz => "GHz",
    };
    let cfg = cfg.resolve()?;
    let dir = output_dir(common.output.as_deref(), &cfg);
    Ok(Context {
        cfg,
        input_unit,
        dir,
    })
}

pub fn run(command: Command) -> Result<(), CliError> {
    let common = match &command {
        Command::ErrorVsN { common, .. }
        | Command::CutoffSweep { common }
        | Command::SigmaSweep { common }
        | Command::CouplingSweep { common }
        | Command::SpectrumCheck { common }
        | Command::Analytic { common }
        | Command::Fit { common, .. } => common.clone(),
    };
    let ctx = load(&common)?;
    with_workers(common.workers, || match command {
        Command::ErrorVsN {
            dump_trajectory, ..
        } => error_vs_n(&ctx, dump_trajectory),
        Command::CutoffSweep { .. } => cutoff_sweep(&ctx),
        Command::SigmaSweep { .. } => parameter_sweep(&ctx, "sigma-sweep", SweepParameter::Sigma),
        Command::CouplingSweep { .. } => {
            parameter_sweep(&ctx, "coupling-sweep", SweepParameter::OmegaC)
        }
        Command::SpectrumCheck { .. } => spectrum_check(&ctx),
        Command::Analytic { .. } => analytic(&ctx),
        Command::Fit { input, .. } => fit(&ctx, input),
    })
}

fn sorted_pairs(cfg: &ExperimentConfig) -> Vec<u32> {
    cfg.pairs_list()
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn write_manifest(ctx: &Context, subcommand: &str, input: Option<&Path>) -> Result<(), CliError> {
    let mut m = Manifest::new(subcommand, ctx.input_unit, &ctx.cfg);
    m.input = input.map(|p| p.display().to_string());
    write_bytes(&ctx.dir.join(MANIFEST_FILE), &m.to_json())
}

fn write_table(ctx: &Context, rows: &[ResultRow]) -> Result<(), CliError> {
    if ctx.cfg.wants(Format::Csv) {
        write_bytes(&ctx.dir.join(RESULTS_FILE), &results_csv(rows)?)?;
    }
    Ok(())
}

fn write_plot(ctx: &Context, series: &[Series], style: &PlotStyle) -> Result<(), CliError> {
    if !ctx.cfg.wants(Format::Svg) {
        return Ok(());
    }
    let drawable: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s.points.iter().copied().filter(|p| p.1 > 0.0).collect(),
        })
        .collect();
    if drawable.iter().map(|s| s.points.len()).sum::<usize>() < 2 {
        return Ok(());
    }
    write_bytes(&ctx.dir.join(PLOT_FILE), emit_svg_plot(&drawable, style)?.as_bytes())
}

fn report(ctx: &Context, files: &[&str]) {
    for f in files {
        let p = ctx.dir.join(f);
        if p.exists() {
            println!("{}", p.display());
        }
    }
}

fn rows_of(points: &[SweepPoint], cfg: &ExperimentConfig) -> Vec<ResultRow> {
    points.iter().map(|p| ResultRow::from_point(p, cfg)).collect()
}

fn error_vs_n(ctx: &Context, dump: Option<usize>) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let pairs = sorted_pairs(cfg);
    let base = cfg.run_config(*pairs.last().expect("pairs list is never empty"))?;
    let points = sweep_n(&base, &pairs)?;
    let rows = rows_of(&points, cfg);
    ensure_dir(&ctx.dir)?;
    write_manifest(ctx, "error-vs-n", None)?;
    write_table(ctx, &rows)?;
    let label = format!("{} {}", rows[0].sequence, rows[0].axis);
    let series = vec![Series {
        label,
        points: rows.iter().map(|r| (r.n as f64, r.mean_error, r.std_error)).collect(),
    }];
    write_plot(
        ctx,
        &series,
        &PlotStyle {
            title: "Gate error vs pulse pairs".into(),
            x_label: "n (pulse pairs)".into(),
            y_label: "gate error".into(),
            log_x: false,
        },
    )?;
    if let Some(k) = dump {
        dump_trajectory(ctx, &points, k)?;
    }
    report(ctx, &[RESULTS_FILE, MANIFEST_FILE, PLOT_FILE]);
    Ok(())
}

fn dump_trajectory(ctx: &Context, points: &[SweepPoint], k: usize) -> Result<(), CliError> {
    let point = points.iter().find(|p| p.pairs() > 0).unwrap_or(&points[0]);
    let c = &point.config;
    if k >= c.trajectories {
        return Err(CliError::Validation {
            key: "dump_trajectory".into(),
            message: format!("trajectory {k} not in run of {}", c.trajectories),
        });
    }
    let dir = ctx.dir.join("debug");
    ensure_dir(&dir)?;
    let schedule = build_schedule(&c.sequence, c.gate.gate_time())
        .map_err(|e| CliError::Run(e.to_string()))?;
    let (x1, x2) = trajectory_paths(c, k)?;
    let (_, trace) = evolve_trajectory_traced(&c.gate, &x1, &x2, &schedule)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let mut buf = Vec::new();
    schedule.write_json(&mut buf).map_err(|e| CliError::Run(e.to_string()))?;
    write_bytes(&dir.join("schedule.json"), &buf)?;
    for (name, path) in [("x1", &x1), ("x2", &x2)] {
        let mut buf = Vec::new();
        path.write_csv(&mut buf).map_err(|e| CliError::Run(e.to_string()))?;
        write_bytes(&dir.join(format!("trajectory_{k}_{name}.csv")), &buf)?;
    }
    let mut buf = Vec::new();
    trace.write_json(&mut buf).map_err(|e| CliError::Run(e.to_string()))?;
    write_bytes(&dir.join(format!("trajectory_{k}_trace.json")), &buf)
}

fn cutoff_sweep(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    if cfg.noise.variant != NoiseVariant::OneOverF {
        return Err(CliError::Validation {
            key: "noise.variant".into(),
            message: "cutoff sweeps need one_over_f noise".into(),
        });
    }
    let pairs = sorted_pairs(cfg);
    let gammas = &cfg.sweep.gamma_max_list;
    let mut by_n = Vec::new();
    for &n in &pairs {
        let mut base = cfg.run_config(n)?;
        base.stream_tag = n as u64 * gammas.len() as u64;
        by_n.push(sweep_cutoff(&base, gammas, cfg.cutoff_mode())?);
    }
    // Rows grouped by cutoff, ascending n within each.
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (i, g) in gammas.iter().enumerate() {
        let group: Vec<ResultRow> = by_n.iter().map(|pts| ResultRow::from_point(&pts[i], cfg)).collect();
        series.push(Series {
            label: format!("gamma_max={g:e}"),
            points: group.iter().map(|r| (r.n as f64, r.mean_error, r.std_error)).collect(),
        });
        rows.extend(group);
    }
    ensure_dir(&ctx.dir)?;
    write_manifest(ctx, "cutoff-sweep", None)?;
    write_table(ctx, &rows)?;
    write_plot(
        ctx,
        &series,
        &PlotStyle {
            title: "Gate error vs pulse pairs for several UV cutoffs".into(),
            x_label: "n (pulse pairs)".into(),
            y_label: "gate error".into(),
            log_x: false,
        },
    )?;
    report(ctx, &[RESULTS_FILE, MANIFEST_FILE, PLOT_FILE]);
    Ok(())
}

fn parameter_sweep(ctx: &Context, name: &str, parameter: SweepParameter) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let values = match parameter {
        SweepParameter::OmegaC => &cfg.sweep.omega_c_values,
        _ => &cfg.sweep.sigma_values,
    };
    if parameter != SweepParameter::OmegaC && cfg.noise.variant == NoiseVariant::None {
        return Err(CliError::Validation {
            key: "noise.variant".into(),
            message: "sigma sweeps need a noise model".into(),
        });
    }
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for n in sorted_pairs(cfg) {
        let mut base = cfg.run_config(n)?;
        base.stream_tag = n as u64 * values.len() as u64;
        let points = sweep_parameter(&base, parameter, values)?;
        let group = rows_of(&points, cfg);
        series.push(Series {
            label: format!("n={n}"),
            points: points
                .iter()
                .map(|p| (p.value, p.estimate.mean, p.estimate.std_error))
                .collect(),
        });
        rows.extend(group);
    }
    ensure_dir(&ctx.dir)?;
    write_manifest(ctx, name, None)?;
    write_table(ctx, &rows)?;
    let x_label = match parameter {
        SweepParameter::OmegaC => "omega_c (rad/s)",
        _ => "sigma (rad/s)",
    };
    write_plot(
        ctx,
        &series,
        &PlotStyle {
            title: format!("Gate error, {name}"),
            x_label: x_label.into(),
            y_label: "gate error".into(),
            log_x: true,
        },
    )?;
    report(ctx, &[RESULTS_FILE, MANIFEST_FILE, PLOT_FILE]);
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow {
    omega: f64,
    psd: f64,
    std_error: f64,
    reference: Option<f64>,
}

fn spectrum_check(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let sp = &cfg.spectrum;
    let (spec, _) = cfg.noise_specs();
    let mut paths = Vec::with_capacity(sp.paths);
    for k in 0..sp.paths {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
        rng.set_stream(k as u64);
        paths.push(spec.sample(sp.duration, &mut rng).map_err(|e| CliError::Validation {
            key: "noise".into(),
            message: e.to_string(),
        })?);
    }
    let grid: Vec<f64> = (0..sp.points)
        .map(|i| sp.omega_min * (sp.omega_max / sp.omega_min).powf(i as f64 / (sp.points - 1) as f64))
        .collect();
    let est = estimate_psd(&paths, &grid).map_err(|e| CliError::Run(e.to_string()))?;
    let reference = |w: f64| match spec {
        NoiseSpec::OneOverF { .. } => one_over_f_reference_psd(&spec, w),
        NoiseSpec::SingleRtn { rate, amplitude } => {
            // (v/2)² · 4γ / (4γ² + ω²)
            Some(amplitude * amplitude * rate / (4.0 * rate * rate + w * w))
        }
        _ => None,
    };
    let rows: Vec<SpectrumRow> = grid
        .iter()
        .zip(est.psd.iter().zip(&est.std_error))
        .map(|(&omega, (&psd, &se))| SpectrumRow {
            omega,
            psd,
            std_error: se,
            reference: reference(omega),
        })
        .collect();
    let slope = est.log_log_slope(sp.omega_min, sp.omega_max);
    let amplitude = match spec {
        NoiseSpec::OneOverF {
            sigma,
            gamma_min,
            gamma_max,
            ..
        } => spectrum_amplitude(sigma, gamma_min, gamma_max).ok(),
        _ => None,
    };
    ensure_dir(&ctx.dir)?;
    write_manifest(ctx, "spectrum-check", None)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Run(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Run(e.to_string()))?;
    write_bytes(&ctx.dir.join("spectrum.csv"), &bytes)?;
    let summary = json!({
        "paths": est.paths,
        "duration": sp.duration,
        "log_log_slope": slope,
        "one_over_f_amplitude": amplitude,
    });
    let mut text = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    text.push(b'\n');
    write_bytes(&ctx.dir.join("spectrum.json"), &text)?;
    let mut series = vec![Series {
        label: "estimate".into(),
        points: rows.iter().map(|r| (r.omega, r.psd, r.std_error)).collect(),
    }];
    if rows.iter().all(|r| r.reference.is_some()) {
        series.push(Series {
            label: "reference".into(),
            points: rows.iter().map(|r| (r.omega, r.reference.unwrap_or(0.0), 0.0)).collect(),
        });
    }
    write_plot(
        ctx,
        &series,
        &PlotStyle {
            title: "Noise power spectral density".into(),
            x_label: "omega (rad/s)".into(),
            y_label: "S(omega)".into(),
            log_x: true,
        },
    )?;
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    report(ctx, &["spectrum.csv", "spectrum.json", MANIFEST_FILE, PLOT_FILE]);
    Ok(())
}

fn analytic(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let p = cfg.gate_params()?;
    let (s1, s2) = (cfg.noise.sigma1, cfg.noise.sigma2);
    let kind = cfg.sequence.kind;
    let axis = cfg.sequence.axis;
    let entries: Vec<Value> = sorted_pairs(cfg)
        .into_iter()
        .filter(|&n| n > 0)
        .map(|n| {
            let full = pdd_error_mean(&p, s1, s2, n);
            let simple = pdd_error_mean_simplified(&p, s1, s2, n);
            let template = if kind == SequenceKind::None {
                None
            } else {
                scaling_template(kind, axis, &p, s1, s2, n).ok()
            };
            json!({
                "n": n,
                "pdd_error_mean": full.value,
                "pdd_error_mean_simplified": simple.value,
                "perturbative": full.perturbative,
                "template_shape": template.map(|t| t.value),
                "template_alpha": template.map(|t| t.alpha),
            })
        })
        .collect();
    let doc = json!({
        "omega": p.omega(),
        "omega_c": p.omega_c(),
        "sigma1": s1,
        "sigma2": s2,
        "threshold_n0": threshold_n0(&p),
        "predictions": entries,
    });
    ensure_dir(&ctx.dir)?;
    write_manifest(ctx, "analytic", None)?;
    let mut text = serde_json::to_vec_pretty(&doc).expect("analytic serializes");
    text.push(b'\n');
    write_bytes(&ctx.dir.join("analytic.json"), &text)?;
    println!("{}", String::from_utf8_lossy(&text).trim_end());
    Ok(())
}

#[derive(Serialize)]
struct SeriesFit {
    series: String,
    #[serde(flatten)]
    fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn fit(ctx: &Context, input: Option<PathBuf>) -> Result<(), CliError> {
    let path = input.unwrap_or_else(|| ctx.dir.join(RESULTS_FILE));
    let rows = read_results_csv(&path)?;
    let mut order: Vec<String> = Vec::new();
    for r in &rows {
        let key = r.series_key();
        if !order.contains(&key) {
            order.push(key);
        }
    }
    let fits: Vec<SeriesFit> = order
        .iter()
        .map(|key| {
            let pts: Vec<FitPoint> = rows
                .iter()
                .filter(|r| &r.series_key() == key)
                .map(|r| FitPoint::new(r.n as f64, r.mean_error, r.std_error))
                .collect();
            match fit_power_law(&pts, ctx.cfg.sweep.n_min) {
                Ok(f) => SeriesFit {
                    series: key.clone(),
                    fit: Some(f.report()),
                    error: None,
                },
                Err(e) => SeriesFit {
                    series: key.clone(),
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    if fits.iter().all(|f| f.fit.is_none()) {
        return Err(CliError::Validation {
            key: "input".into(),
            message: format!(
                "no series with at least four points at n >= {}",
                ctx.cfg.sweep.n_min
            ),
        });
    }
    ensure_dir(&ctx.dir)?;
    write_manifest(ctx, "fit", Some(&path))?;
    let mut text = serde_json::to_vec_pretty(&fits).expect("fits serialize");
    text.push(b'\n');
    write_bytes(&ctx.dir.join("fit.json"), &text)?;
    println!("{}", String::from_utf8_lossy(&text).trim_end());
    Ok(())
}
