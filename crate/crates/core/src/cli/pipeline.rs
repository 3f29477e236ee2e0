use std::path::PathBuf;

use log::info;
use serde::Serialize;
use serde_json::json;

use super::config::{Command, RunConfig, SynthKind};
use super::ingest::{ingest_many, ingest_many_2d};
use super::output::{num, OutputDir};
use super::synth::{blobs_2d, gaussian_location_scale, BlobRanges, GaussianRanges};
use crate::core1d::{exp_map, DiscreteMeasure1D, Grid1D, LoggedDataset};
use crate::error::{Error, Result};
use crate::gpca_iter::{fit_iterative, gpca_reconstruction_error, GeodesicComponent, T0Search};
use crate::gpca_surface::{fit_surface, surface_reconstruction_error, SurfaceModel};
use crate::logpca::{fit_log_pca_logged, logpca_reconstruction_error, LogPcaModel};
use crate::ot2d::{
    barycenter2d_entropic, fit_component_2d, fit_log_pca_2d, reconstruction_error_2d, Fb2dConfig, GeodesicComponent2D,
    Measure2D, Problem2D,
};

/// Times of the geodesic sweeps written for plotting.
pub const SWEEP_TIMES: usize = 11;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ErrorRow {
    pub method: String,
    pub k: usize,
    pub error: f64,
}

/// What a run produced.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub files: Vec<PathBuf>,
    pub errors: Vec<ErrorRow>,
    /// Components whose outer loop stopped at the iteration cap.
    pub not_converged: Vec<String>,
}

fn sweep_times() -> Vec<f64> {
    (0..SWEEP_TIMES).map(|k| -1.0 + 2.0 * k as f64 / (SWEEP_TIMES - 1) as f64).collect()
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Validates `config`, runs its command and writes the artifacts.
pub fn run_pipeline(config: &RunConfig) -> Result<Summary> {
    config.validate()?;
    let mut out = OutputDir::create(config)?;
    let mut summary = Summary {
        files: Vec::new(),
        errors: Vec::new(),
        not_converged: Vec::new(),
    };
    match config.command {
        Command::Synth => synth(config, &mut out)?,
        Command::Gpca2d => run_2d(config, &mut out, &mut summary)?,
        _ => run_1d(config, &mut out, &mut summary)?,
    }
    if !summary.errors.is_empty() {
        out.json("errors.json", json!({ "errors": summary.errors }))?;
        let rows = summary.errors.iter().map(|r| vec![r.method.clone(), r.k.to_string(), num(r.error)]);
        out.csv("errors.csv", &["method", "k", "error"], rows.collect::<Vec<_>>())?;
    }
    summary.files = out.into_written();
    Ok(summary)
}

fn load_1d(config: &RunConfig) -> Result<(Grid1D, Vec<String>, Vec<DiscreteMeasure1D>)> {
    if config.inputs.is_empty() {
        let (a, b) = config.domain();
        let grid = Grid1D::uniform(a, b, config.n_grid)?;
        let (data, _) = gaussian_location_scale(config.n_synthetic(), config.seed, &grid, GaussianRanges::default())?;
        let names = (1..=data.len()).map(|i| format!("g{i:03}")).collect();
        return Ok((grid, names, data));
    }
    let set = ingest_many(&config.inputs, config.omega)?;
    Ok((set.grid, set.names, set.measures))
}

fn load_2d(config: &RunConfig) -> Result<Vec<Measure2D>> {
    if config.inputs.is_empty() {
        return blobs_2d(config.n_synthetic(), config.seed, config.rows, config.cols, BlobRanges::default());
    }
    ingest_many_2d(&config.inputs)
}

fn synth(config: &RunConfig, out: &mut OutputDir) -> Result<()> {
    match config.kind {
        SynthKind::Gaussian => {
            let (a, b) = config.domain();
            let grid = Grid1D::uniform(a, b, config.n_grid)?;
            let (data, params) = gaussian_location_scale(config.n_synthetic(), config.seed, &grid, GaussianRanges::default())?;
            let names: Vec<String> = (1..=data.len()).map(|i| format!("g{i:03}")).collect();
            let mut header = vec!["x"];
            header.extend(names.iter().map(|s| s.as_str()));
            let rows = (0..grid.len()).map(|j| {
                let mut r = vec![num(grid.points()[j])];
                r.extend(data.iter().map(|m| num(m.density()[j])));
                r
            });
            out.csv("data.csv", &header, rows.collect::<Vec<_>>())?;
            let rows = names.iter().zip(&params).map(|(n, (m, s))| vec![n.clone(), num(*m), num(*s)]);
            out.csv("params.csv", &["name", "mean", "sd"], rows.collect::<Vec<_>>())?;
        }
        SynthKind::Blobs => {
            let data = blobs_2d(config.n_synthetic(), config.seed, config.rows, config.cols, BlobRanges::default())?;
            for (i, m) in data.iter().enumerate() {
                let g = m.grid();
                let rows = (0..g.len()).map(|p| vec![(p / g.cols).to_string(), (p % g.cols).to_string(), num(m.weights()[p])]);
                let path = out.path(&format!("blob_{:03}.csv", i + 1));
                out.csv_at(&path, &["i", "j", "weight"], rows.collect::<Vec<_>>())?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ComponentOut<'a> {
    component: usize,
    #[serde(flatten)]
    fit: &'a GeodesicComponent,
    t0_curve: &'a [crate::gpca_iter::T0Point],
    boundary_hit: bool,
}

fn sweep_rows(rows: &mut Vec<Vec<String>>, method: &str, comp: usize, bar: &DiscreteMeasure1D, dir: &[f64], offset: f64, scale: f64) -> Result<()> {
    for t in sweep_times() {
        let s = scale * (offset + t);
        let v: Vec<f64> = dir.iter().map(|x| s * x).collect();
        let m = exp_map(bar, &v)?;
        for (x, d) in m.grid().points().iter().zip(m.density()) {
            rows.push(vec![method.to_string(), comp.to_string(), num(t), num(*x), num(*d)]);
        }
    }
    Ok(())
}

fn trace_rows(rows: &mut Vec<Vec<String>>, method: &str, comp: usize, trace: &[f64]) {
    for (it, f) in trace.iter().enumerate() {
        rows.push(vec![method.to_string(), comp.to_string(), it.to_string(), num(*f)]);
    }
}

fn run_1d(config: &RunConfig, out: &mut OutputDir, summary: &mut Summary) -> Result<()> {
    let (grid, names, data) = stage("ingest", load_1d(config))?;
    info!("{} histograms on {} grid points", data.len(), grid.len());
    let logged = stage("barycenter", LoggedDataset::new(data, &grid, config.q))?;
    let bar = &logged.barycenter;
    out.json(
        "barycenter.json",
        json!({
            "names": names,
            "grid": bar.grid().points(),
            "density": bar.density(),
            "mean": bar.mean(),
            "sd": bar.std_dev(),
        }),
    )?;
    let rows = bar.grid().points().iter().zip(bar.density()).map(|(x, d)| vec![num(*x), num(*d)]);
    out.csv("barycenter.csv", &["x", "density"], rows.collect::<Vec<_>>())?;
    if config.command == Command::Barycenter {
        return Ok(());
    }

    let mut sweeps = Vec::new();
    let mut traces = Vec::new();
    let wants_logpca = matches!(config.command, Command::Logpca | Command::Compare);
    let wants_iter = matches!(config.command, Command::GpcaIter | Command::GpcaSurface | Command::Compare);
    let wants_surface = matches!(config.command, Command::GpcaSurface | Command::Compare);

    if wants_logpca {
        let k = config.k.min(logged.n().saturating_sub(1)).min(logged.dim()).max(1);
        let lp: LogPcaModel = stage("logpca", fit_log_pca_logged(&logged, k))?;
        let mut errs = Vec::new();
        for kk in 1..=k {
            let r = stage("logpca", logpca_reconstruction_error(&lp, &logged, kk, config.q))?;
            errs.push(r);
            summary.errors.push(ErrorRow { method: "logpca".into(), k: kk, error: r });
        }
        out.json(
            "logpca.json",
            json!({
                "eigenvalues": lp.eigenvalues,
                "total_variance": lp.total_variance,
                "directions": lp.directions,
                "scores": lp.scores,
                "reconstruction_errors": errs,
            }),
        )?;
        for c in 0..k {
            let reach = lp.scores.iter().map(|s| s[c].abs()).fold(0.0, f64::max);
            stage("logpca sweep", sweep_rows(&mut sweeps, "logpca", c + 1, bar, &lp.directions[c], 0.0, reach))?;
        }
    }

    let mut comps: Vec<T0Search> = Vec::new();
    if wants_iter {
        comps = stage("gpca-iter", fit_iterative(&logged, config.k, &config.fb_config()))?;
        let refs: Vec<&GeodesicComponent> = comps.iter().map(|c| &c.best).collect();
        let mut errs = Vec::new();
        for kk in 1..=refs.len() {
            let r = stage("gpca-iter", gpca_reconstruction_error(&refs[..kk], &logged, config.q))?;
            errs.push(r);
            summary.errors.push(ErrorRow { method: "gpca-iter".into(), k: kk, error: r });
        }
        let body: Vec<ComponentOut> = comps
            .iter()
            .enumerate()
            .map(|(i, c)| ComponentOut {
                component: i + 1,
                fit: &c.best,
                t0_curve: &c.curve,
                boundary_hit: c.boundary_hit,
            })
            .collect();
        out.json("gpca_iter.json", json!({ "components": body, "reconstruction_errors": errs }))?;
        let mut curve = Vec::new();
        for (i, c) in comps.iter().enumerate() {
            if !c.best.converged {
                summary.not_converged.push(format!("gpca-iter component {}", i + 1));
            }
            for p in &c.curve {
                curve.push(vec![(i + 1).to_string(), num(p.t0), num(p.h), p.converged.to_string(), p.iterations.to_string()]);
            }
            stage("gpca-iter sweep", sweep_rows(&mut sweeps, "gpca-iter", i + 1, bar, &c.best.direction, c.best.t0, 1.0))?;
            trace_rows(&mut traces, "gpca-iter", i + 1, &c.best.trace);
        }
        out.csv("t0_curve.csv", &["component", "t0", "h", "converged", "iterations"], curve)?;
    }

    if wants_surface {
        let init: Vec<Vec<f64>> = comps.iter().map(|c| c.best.direction.clone()).collect();
        let t0: Vec<f64> = comps.iter().map(|c| c.best.t0).collect();
        let model: SurfaceModel = stage("gpca-surface", fit_surface(&logged, &init, &t0, &config.fb_config()))?;
        let r = stage("gpca-surface", surface_reconstruction_error(&model, &logged, config.q))?;
        summary.errors.push(ErrorRow { method: "gpca-surface".into(), k: model.k(), error: r });
        if !model.converged {
            summary.not_converged.push("gpca-surface".into());
        }
        out.json(
            "gpca_surface.json",
            json!({
                "model": model,
                "independent": model.independent(),
                "reconstruction_error": r,
            }),
        )?;
        for (k, (v, t0)) in model.directions.iter().zip(&model.t0).enumerate() {
            stage("gpca-surface sweep", sweep_rows(&mut sweeps, "gpca-surface", k + 1, bar, v, *t0, 1.0))?;
        }
        trace_rows(&mut traces, "gpca-surface", 0, &model.trace);
    }

    if !sweeps.is_empty() {
        out.csv("sweeps.csv", &["method", "component", "t", "x", "density"], sweeps)?;
    }
    if !traces.is_empty() {
        out.csv("traces.csv", &["method", "component", "iteration", "objective"], traces)?;
    }
    Ok(())
}

fn run_2d(config: &RunConfig, out: &mut OutputDir, summary: &mut Summary) -> Result<()> {
    let data = stage("ingest", load_2d(config))?;
    let bar = stage("barycenter", barycenter2d_entropic(&data, config.epsilon, config.max_inner, 1e-7))?;
    if !bar.converged {
        summary.not_converged.push("entropic barycenter".into());
    }
    let trimmed = stage("barycenter", bar.measure.trimmed(1e-4))?;
    let problem = stage("gpca-2d", Problem2D::new(trimmed, data))?;
    let lp = stage("logpca-2d", fit_log_pca_2d(&problem))?;
    let fb = Fb2dConfig {
        eta: config.eta.max(1e-9),
        max_outer: config.max_outer,
        ..Fb2dConfig::default()
    };
    let t0 = config.t0_2d();
    let mut comps: Vec<GeodesicComponent2D> = Vec::new();
    for k in 0..config.k {
        let priors: Vec<Vec<f64>> = comps.iter().map(|c| c.direction.clone()).collect();
        let c = stage(&format!("gpca-2d component {}", k + 1), fit_component_2d(&problem, &priors, t0, &fb))?;
        if !c.converged {
            summary.not_converged.push(format!("gpca-2d component {}", k + 1));
        }
        comps.push(c);
    }
    let scale = 1.25 * lp.eigenvalue;
    let re_log = stage("logpca-2d", reconstruction_error_2d(&problem, &lp.direction, scale, 0.0, config.samples))?;
    let re_gpca = stage("gpca-2d", reconstruction_error_2d(&problem, &comps[0].direction, 1.0, t0, config.samples))?;
    summary.errors.push(ErrorRow { method: "logpca-2d".into(), k: 1, error: re_log });
    summary.errors.push(ErrorRow { method: "gpca-2d".into(), k: 1, error: re_gpca });
    let g = problem.grid();
    out.json(
        "gpca2d.json",
        json!({
            "grid": g,
            "barycenter": {
                "weights": problem.barycenter.weights(),
                "iterations": bar.iterations,
                "residual": bar.residual,
                "converged": bar.converged,
            },
            "logpca": lp,
            "logpca_curve_scale": scale,
            "components": comps,
            "reconstruction_errors": { "logpca": re_log, "gpca": re_gpca },
        }),
    )?;
    let mut rows = Vec::new();
    for t in sweep_times() {
        for (method, v, s) in [("logpca-2d", &lp.direction, scale * t), ("gpca-2d", &comps[0].direction, t0 + t)] {
            let at = problem.geodesic_atoms(v, s);
            for (x, m) in at.positions.iter().zip(&at.masses) {
                rows.push(vec![method.to_string(), num(t), num(x[0]), num(x[1]), num(*m)]);
            }
        }
    }
    out.csv("sweeps2d.csv", &["method", "t", "x", "y", "mass"], rows)?;
    let mut traces = Vec::new();
    for (k, c) in comps.iter().enumerate() {
        trace_rows(&mut traces, "gpca-2d", k + 1, &c.trace);
    }
    out.csv("traces.csv", &["method", "component", "iteration", "objective"], traces)?;
    if problem.n() == 0 {
        return Err(Error::Validation("empty dataset".into()));
    }
    Ok(())
}
