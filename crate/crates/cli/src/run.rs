//! The four experiment modes and their result files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use steinlab_core::pair::{exchangeability_check, sample_bound, BoundTerms, PairModel};
use steinlab_core::stats::fit_rate;
use steinlab_core::sweep::{ks_point, KsPoint};
use steinlab_core::targets::check_conditions;
use steinlab_core::Execution;

use crate::config::{ExperimentConfig, Mode};
use crate::model::Model;
use crate::with_model;

/// Standard errors allowed between the empirical distance and the
/// estimated right-hand side.
pub const BOUND_SE_WINDOW: f64 = 3.0;

pub struct RunContext {
    pub config: ExperimentConfig,
    pub mode: Mode,
    pub out: PathBuf,
    pub exec: Execution,
    pub workers: usize,
    pub check: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// `Some` when `--check` was requested.
    pub check_passed: Option<bool>,
    pub summary: String,
}

/// Failures before any sampling (exit code 2) versus during the run.
#[derive(Debug)]
pub enum RunError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(e) => write!(f, "invalid configuration: {e:#}"),
            RunError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

/// Shortest round-trip decimal form, so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x}")
}

struct Writer {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Writer {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut head: Vec<&str> = header.to_vec();
        head.push("config_hash");
        w.write_record(&head)?;
        for r in rows {
            let mut rec = r.clone();
            rec.push(self.hash.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }
}

/// Creates the output directory and probes that it accepts files.
pub fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let probe = dir.join(".steinlab-write-probe");
    fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", dir.display()))?;
    fs::remove_file(&probe).ok();
    Ok(())
}

pub fn run(ctx: &RunContext) -> std::result::Result<RunOutcome, RunError> {
    let cfg = &ctx.config;
    let models = cfg.validate(ctx.mode).map_err(RunError::Validation)?;
    if ctx.check && ctx.mode == Mode::Rates && cfg.expected_slope.is_none() {
        return Err(RunError::Validation(anyhow::anyhow!(
            "rates --check needs expected_slope in the config"
        )));
    }
    prepare_output(&ctx.out).map_err(RunError::Validation)?;
    let mut w = Writer {
        dir: ctx.out.clone(),
        hash: cfg.hash(),
        files: Vec::new(),
    };
    let (summary, ok) = match ctx.mode {
        Mode::Rates => rates(ctx, &models, &mut w),
        Mode::Bound => bound(ctx, &models, &mut w),
        Mode::Diagnose => diagnose(ctx, &models, &mut w),
        Mode::TargetTable => target_table(ctx, &models, &mut w),
    }
    .map_err(RunError::Runtime)?;
    metadata(ctx, &mut w).map_err(RunError::Runtime)?;
    Ok(RunOutcome {
        files: w.files,
        check_passed: ctx.check.then_some(ok),
        summary,
    })
}

fn metadata(ctx: &RunContext, w: &mut Writer) -> Result<()> {
    let meta = json!({
        "config_hash": w.hash,
        "config": ctx.config,
        "mode": ctx.mode,
        "seed": ctx.config.seed,
        "workers": ctx.workers,
        "parallel": ctx.exec.is_parallel(),
        "versions": {
            "steinlab": env!("CARGO_PKG_VERSION"),
            "rustc_target": std::env::consts::ARCH,
        },
        "files": w.files.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "timestamp": chrono::Utc::now().to_rfc3339(),
    });
    w.json("metadata.json", &meta)
}

struct Labelled<T> {
    name: &'static str,
    params: Value,
    value: T,
}

fn rates(ctx: &RunContext, models: &[Model], w: &mut Writer) -> Result<(String, bool)> {
    let cfg = &ctx.config;
    let mut points: Vec<Labelled<KsPoint>> = Vec::new();
    for model in models {
        let p = with_model!(model, m => Labelled {
            name: m.name(),
            params: m.params(),
            value: ks_point(m, cfg.replications, cfg.seed, ctx.exec)?,
        });
        log::info!(
            "{} n={}: ks={:.5} (se {:.5})",
            p.name,
            p.value.n,
            p.value.ks,
            p.value.se
        );
        points.push(p);
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.value.n as f64, p.value.ks)).collect();
    let fit = fit_rate(&xy, cfg.bootstrap, cfg.seed)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.name.to_string(),
                p.params.to_string(),
                p.value.n.to_string(),
                cfg.replications.to_string(),
                num(p.value.ks),
                num(p.value.se),
                num(fit.slope),
                num(fit.slope_ci.0),
                num(fit.slope_ci.1),
            ]
        })
        .collect();
    w.csv(
        "rates.csv",
        &["model", "params", "n", "M", "ks", "se", "slope", "ci_lo", "ci_hi"],
        &rows,
    )?;
    let ok = cfg.expected_slope.is_none_or(|(lo, hi)| (lo..=hi).contains(&fit.slope));
    w.json(
        "rates.json",
        &json!({
            "config_hash": w.hash,
            "points": points.iter().map(|p| &p.value).collect::<Vec<_>>(),
            "fit": fit,
            "expected_slope": cfg.expected_slope,
            "slope_in_window": cfg.expected_slope.map(|_| ok),
        }),
    )?;
    let summary = format!(
        "slope {:.4} (95% CI [{:.4}, {:.4}]) over {} points",
        fit.slope,
        fit.slope_ci.0,
        fit.slope_ci.1,
        points.len()
    );
    Ok((summary, ok))
}

struct BoundPoint {
    variants: Vec<BoundTerms>,
    ks: KsPoint,
    bracket: Option<f64>,
}

fn bound(ctx: &RunContext, models: &[Model], w: &mut Writer) -> Result<(String, bool)> {
    let cfg = &ctx.config;
    let mut points = Vec::new();
    for model in models {
        let p = with_model!(model, m => {
            let sample = sample_bound(m, cfg.replications, cfg.seed, ctx.exec)?;
            let mut variants = vec![sample.theorem(ctx.exec)];
            if m.delta_max().is_some() {
                variants.push(sample.bounded_difference(ctx.exec)?);
            }
            variants.push(sample.third_moment(ctx.exec));
            BoundPoint { variants, ks: ks_point(m, cfg.replications, cfg.seed, ctx.exec)?, bracket: model.bracket() }
        });
        log::info!("n={}: ks={:.5} rhs={:.5}", p.ks.n, p.ks.ks, p.variants[0].rhs.value);
        points.push(p);
    }
    let valid = |t: &BoundTerms, ks: &KsPoint| ks.ks <= t.rhs.value + BOUND_SE_WINDOW * t.rhs.se;
    let mut rows = Vec::new();
    for p in &points {
        for t in &p.variants {
            rows.push(vec![
                t.model.clone(),
                t.params.to_string(),
                t.n.to_string(),
                t.replications.to_string(),
                serde_json::to_value(t.variant)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                num(t.t1.value),
                num(t.t1.se),
                num(t.t2.value),
                num(t.t2.se),
                num(t.t3.value),
                num(t.t3.se),
                num(t.rhs.value),
                num(t.rhs.se),
                num(p.ks.ks),
                num(p.ks.se),
                valid(t, &p.ks).to_string(),
                p.bracket.map(num).unwrap_or_default(),
            ]);
        }
    }
    w.csv(
        "bound.csv",
        &[
            "model", "params", "n", "M", "variant", "t1", "se_t1", "t2", "se_t2", "t3", "se_t3", "rhs", "se_rhs", "ks",
            "se_ks", "valid", "bracket",
        ],
        &rows,
    )?;
    let ok = points.iter().all(|p| valid(&p.variants[0], &p.ks));
    let report: Vec<Value> = points
        .iter()
        .map(|p| {
            json!({
                "n": p.ks.n,
                "ks": p.ks,
                "bracket": p.bracket,
                "terms": p.variants.iter().map(|t| t.to_row()).collect::<Vec<_>>(),
                "valid": valid(&p.variants[0], &p.ks),
            })
        })
        .collect();
    w.json(
        "bound.json",
        &json!({ "config_hash": w.hash, "points": report, "all_valid": ok }),
    )?;
    let breaks = points.iter().filter(|p| !valid(&p.variants[0], &p.ks)).count();
    Ok((
        format!(
            "{} points, {breaks} with ks above rhs + {BOUND_SE_WINDOW} se",
            points.len()
        ),
        ok,
    ))
}

fn diagnose(ctx: &RunContext, models: &[Model], w: &mut Writer) -> Result<(String, bool)> {
    let cfg = &ctx.config;
    let mut reports = Vec::new();
    let mut ok = true;
    for model in models {
        let r = with_model!(model, m => {
            let pair = exchangeability_check(m, cfg.replications, cfg.seed, ctx.exec)?;
            let target = check_conditions(m.target());
            ok &= pair.passed() && target.passed();
            json!({
                "n": m.n(),
                "pair": pair,
                "pair_passed": pair.passed(),
                "target_conditions": target,
                "target_passed": target.passed(),
            })
        });
        let extra = match model {
            Model::CurieWeiss(m) => json!({ "mgf_conditions": m.conditions() }),
            _ => Value::Null,
        };
        reports.push(json!({ "report": r, "model_conditions": extra }));
    }
    w.json(
        "diagnose.json",
        &json!({ "config_hash": w.hash, "reports": reports, "all_passed": ok }),
    )?;
    let summary = format!(
        "{} grid points, diagnostics {}",
        reports.len(),
        if ok { "passed" } else { "failed" }
    );
    Ok((summary, ok))
}

/// Every model's target is the same at all `n`, so the table is taken
/// from the first grid point.
fn target_table(ctx: &RunContext, models: &[Model], w: &mut Writer) -> Result<(String, bool)> {
    let Some(first) = models.first() else {
        bail!("empty grid");
    };
    let target = with_model!(first, m => m.target().clone());
    let rows: Vec<Vec<String>> = target
        .table(ctx.config.table_points)
        .iter()
        .map(|r| vec![num(r.y), num(r.big_g), num(r.p), num(r.cdf)])
        .collect();
    w.csv("target_table.csv", &["y", "G", "p", "F"], &rows)?;
    let cond = check_conditions(&target);
    w.json(
        "target.json",
        &json!({
            "config_hash": w.hash,
            "drift": target.spec(),
            "c1": target.c1(),
            "support": target.support(),
            "variance": target.moment(2),
            "fourth_moment": target.moment(4),
            "conditions": cond,
        }),
    )?;
    Ok((format!("{} rows, c1 = {}", rows.len(), target.c1()), cond.passed()))
}
