use confound_bounds::analysis::{run_analysis, Analysis};
use confound_bounds::config::{parse_grid, parse_list};
use confound_bounds::data::validate_dataset_for_folds;
use confound_bounds::nuisance::LearnerSet;
use confound_bounds::oracle::{run_suite, SuiteOptions};
use confound_bounds::simulation::{run_study, truth_fn, DgpConfig, SimReport};
use confound_bounds::{Error, Execution, LearnerKind, Model, SensitivityConfig};
use std::path::PathBuf;

use crate::io::{self, CurveRecord, Epsilon0Record};
use crate::settings::{AnalyzeArgs, AnalyzeFile, Format, OracleArgs, Seed, SimulateArgs, SimulateFile};
use crate::Failure;

const DEFAULT_EPS_GRID: &str = "0:0.2:21";
const EPS0_POINTS: usize = 201;

fn missing(flag: &str) -> Failure {
    Failure::Validation(format!("missing required setting --{flag}"))
}

fn parse_models(spec: &str) -> Result<Vec<Model>, Failure> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let m: Model = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Default `ε₀` search grid: 201 points spanning the curve grid.
fn default_eps0_grid(eps_grid: &[f64]) -> Option<String> {
    match eps_grid {
        [first, .., last] => Some(format!("{first}:{last}:{EPS0_POINTS}")),
        _ => None,
    }
}

fn manifest<T: serde::Serialize>(kind: &str, settings: &T) -> Result<Vec<u8>, Failure> {
    let body = toml::to_string(settings).map_err(|e| Failure::Io(e.to_string()))?;
    Ok(format!("# confound-bounds {kind} run; pass this file to --config to reproduce it\n{body}").into_bytes())
}

/// Fully resolved analysis request.
struct AnalysisRequest {
    settings: AnalyzeFile,
    cfg: SensitivityConfig,
    models: Vec<Model>,
    input: PathBuf,
    covariates: Vec<String>,
}

fn resolve_analyze(f: AnalyzeFile) -> Result<AnalysisRequest, Failure> {
    let input = f.input.clone().ok_or_else(|| missing("input"))?;
    let outcome = f.outcome.clone().ok_or_else(|| missing("outcome"))?;
    let treatment = f.treatment.clone().ok_or_else(|| missing("treatment"))?;
    let covariates_spec = f.covariates.clone().ok_or_else(|| missing("covariates"))?;
    let covariates: Vec<String> = covariates_spec
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if covariates.is_empty() {
        return Err(Failure::Validation("--covariates names no columns".into()));
    }

    let d = SensitivityConfig::default();
    let eps_spec = f.eps_grid.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.into());
    let eps_grid = parse_grid(&eps_spec)?;
    let eps0_spec = f.eps0_grid.clone().or_else(|| default_eps0_grid(&eps_grid));
    let delta_spec = f.delta.clone().unwrap_or_else(|| "1".into());
    let model_spec = f.model.clone().unwrap_or_else(|| d.model.to_string());
    let models = parse_models(&model_spec)?;
    let learner_spec = f.learner.clone().unwrap_or_else(|| d.learner.to_string());
    let learner: LearnerKind = learner_spec.parse()?;

    let cfg = SensitivityConfig {
        eps_grid,
        eps0_grid: eps0_spec.as_deref().map(parse_grid).transpose()?,
        delta_grid: parse_list(&delta_spec)?,
        model: models[0],
        folds: f.folds.unwrap_or(d.folds),
        alpha: f.alpha.unwrap_or(d.alpha),
        bootstrap_reps: f.bootstrap.unwrap_or(d.bootstrap_reps),
        clip: f.clip.unwrap_or(d.clip),
        seed: f.seed.map_or(d.seed, |s| s.0),
        learner,
    };
    cfg.validate()?;

    let settings = AnalyzeFile {
        input: Some(input.clone()),
        outcome: Some(outcome),
        treatment: Some(treatment),
        covariates: Some(covariates.join(",")),
        y_min: f.y_min,
        y_max: f.y_max,
        eps_grid: Some(eps_spec),
        eps0_grid: eps0_spec,
        delta: Some(delta_spec),
        model: Some(model_spec),
        folds: Some(cfg.folds),
        alpha: Some(cfg.alpha),
        bootstrap: Some(cfg.bootstrap_reps),
        clip: Some(cfg.clip),
        learner: Some(learner_spec),
        seed: Some(Seed(cfg.seed)),
        out_dir: Some(
            f.out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("confound-bounds-out")),
        ),
        format: Some(f.format.unwrap_or(Format::Csv)),
        tool_version: Some(env!("CARGO_PKG_VERSION").into()),
    };
    Ok(AnalysisRequest {
        settings,
        cfg,
        models,
        input,
        covariates,
    })
}

fn curve_records(a: &Analysis) -> Result<Vec<CurveRecord>, Failure> {
    let mut rows = Vec::new();
    for m in &a.models {
        let c = &m.curve;
        for (d, &delta) in c.delta_grid.iter().enumerate() {
            let b = &m.bands[d];
            for (e, &eps) in c.eps_grid.iter().enumerate() {
                let row = CurveRecord {
                    model: m.model.to_string(),
                    delta,
                    eps,
                    psi_l: c.psi_l[[e, d]],
                    psi_u: c.psi_u[[e, d]],
                    sigma_l: c.sigma_l[[e, d]],
                    sigma_u: c.sigma_u[[e, d]],
                    uniform_lower: b.uniform_lower[e],
                    uniform_upper: b.uniform_upper[e],
                    pointwise_lower: b.pointwise_lower[e],
                    pointwise_upper: b.pointwise_upper[e],
                };
                if !row.numbers().iter().all(|v| v.is_finite()) {
                    return Err(Failure::Estimation(format!(
                        "non-finite estimate for model {} at delta = {delta}, eps = {eps}",
                        m.model
                    )));
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn epsilon0_records(a: &Analysis) -> Vec<Epsilon0Record> {
    let mut rows = Vec::new();
    for m in &a.models {
        for (d, &delta) in m.curve.delta_grid.iter().enumerate() {
            let empty = |status: &str| Epsilon0Record {
                model: m.model.to_string(),
                delta,
                status: status.into(),
                estimate: None,
                std_error: None,
                ci_lower: None,
                ci_upper: None,
                boundary: None,
                moment_residual: None,
            };
            rows.push(match &m.eps0[d] {
                Ok(z) => Epsilon0Record {
                    estimate: Some(z.estimate),
                    std_error: Some(z.std_error),
                    ci_lower: Some(z.ci.0),
                    ci_upper: Some(z.ci.1),
                    boundary: Some(z.boundary),
                    moment_residual: Some(z.moment_residual),
                    ..empty("ok")
                },
                Err(Error::NoCrossing { .. }) => empty("no-crossing"),
                Err(_) => empty("degenerate-derivative"),
            });
        }
    }
    rows
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let req = resolve_analyze(args.merged()?)?;
    let s = &req.settings;
    let raw = io::read_dataset(
        &req.input,
        s.outcome.as_deref().unwrap_or_default(),
        s.treatment.as_deref().unwrap_or_default(),
        &req.covariates,
        s.y_min,
        s.y_max,
    )?;
    let data = validate_dataset_for_folds(raw, req.cfg.folds)?;
    let analysis = run_analysis(
        &data,
        &req.cfg,
        &req.models,
        &LearnerSet::from_kind(req.cfg.learner),
        Execution::default(),
    )?;

    let curves = curve_records(&analysis)?;
    let eps0 = epsilon0_records(&analysis);
    let format = s.format.unwrap_or(Format::Csv);
    let ext = format.extension();
    let (curves_bytes, eps0_bytes) = match format {
        Format::Csv => (io::curves_csv(&curves)?, io::epsilon0_csv(&eps0)?),
        Format::Json => (io::json(&curves)?, io::json(&eps0)?),
    };
    let out_dir = s.out_dir.clone().unwrap_or_default();
    io::write_all_atomic(
        &out_dir,
        &[
            (format!("curves.{ext}"), curves_bytes),
            (format!("epsilon0.{ext}"), eps0_bytes),
            ("manifest.toml".into(), manifest("analyze", s)?),
        ],
    )?;

    for r in &eps0 {
        match (r.estimate, r.ci_lower, r.ci_upper) {
            (Some(e), Some(lo), Some(hi)) => {
                println!("model {} delta {}: eps0 = {e:.4} [{lo:.4}, {hi:.4}]", r.model, r.delta)
            }
            _ => println!("model {} delta {}: eps0 {}", r.model, r.delta, r.status),
        }
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

/// Learners for the study; `oracle` injects the true nuisances.
fn study_learners(spec: &str, r: f64) -> Result<LearnerSet, Failure> {
    if spec.trim().eq_ignore_ascii_case("oracle") {
        return Ok(LearnerSet::oracle(truth_fn(r)));
    }
    Ok(LearnerSet::from_kind(spec.parse()?))
}

fn report_csv(reports: &[SimReport]) -> Result<Vec<u8>, Failure> {
    let cell = |v: f64| if v.is_finite() { io::number(v) } else { String::new() };
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "n",
        "reps",
        "bias_pct_psi_l",
        "bias_pct_psi_u",
        "bias_pct_eps0",
        "sqrt_n_rmse_psi_l",
        "sqrt_n_rmse_psi_u",
        "sqrt_n_rmse_eps0",
        "coverage_pct_region",
        "coverage_pct_eps0",
        "eps0_missing",
        "true_eps0",
    ])
    .map_err(|e| Failure::Io(e.to_string()))?;
    for r in reports {
        w.write_record([
            r.n.to_string(),
            r.reps.to_string(),
            cell(r.bias_lower),
            cell(r.bias_upper),
            cell(r.bias_eps0),
            cell(r.rmse_lower),
            cell(r.rmse_upper),
            cell(r.rmse_eps0),
            cell(100.0 * r.uniform_coverage),
            cell(100.0 * r.eps0_coverage),
            r.eps0_missing.to_string(),
            r.true_eps0.map(cell).unwrap_or_default(),
        ])
        .map_err(|e| Failure::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

pub fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let f = args.merged()?;
    let full = f.full.unwrap_or(false);
    let n_spec =
        f.n.clone()
            .unwrap_or_else(|| if full { "500,1000,5000,10000" } else { "500" }.into());
    let sizes: Vec<usize> = n_spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::Validation(format!("--n: '{s}' is not a sample size")))
        })
        .collect::<Result<_, _>>()?;
    let reps = f.reps.unwrap_or(if full { 500 } else { 200 });
    let r = f.r.unwrap_or(0.05);

    let d = SensitivityConfig::default();
    let eps_spec = f.eps_grid.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.into());
    let eps_grid = parse_grid(&eps_spec)?;
    let eps0_spec = f.eps0_grid.clone().or_else(|| default_eps0_grid(&eps_grid));
    let model_spec = f.model.clone().unwrap_or_else(|| d.model.to_string());
    let learner_spec = f.learner.clone().unwrap_or_else(|| d.learner.to_string());
    let learners = study_learners(&learner_spec, r)?;
    let cfg = SensitivityConfig {
        eps_grid,
        eps0_grid: eps0_spec.as_deref().map(parse_grid).transpose()?,
        delta_grid: vec![f.delta.unwrap_or(1.0)],
        model: model_spec.parse()?,
        folds: f.folds.unwrap_or(d.folds),
        alpha: f.alpha.unwrap_or(d.alpha),
        bootstrap_reps: f.bootstrap.unwrap_or(d.bootstrap_reps),
        clip: f.clip.unwrap_or(d.clip),
        seed: f.seed.map_or(d.seed, |s| s.0),
        learner: d.learner,
    };
    cfg.validate()?;

    let mut reports = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let dgp = DgpConfig::new(r, n, cfg.seed)?;
        let report = run_study(&dgp, &cfg, reps, &learners, Execution::default())?;
        println!(
            "n {:>6}  bias% {:.2} {:.2} {:.2}  sqrt(n)RMSE {:.2} {:.2} {:.2}  coverage% {:.1} {:.1}",
            n,
            report.bias_lower,
            report.bias_upper,
            report.bias_eps0,
            report.rmse_lower,
            report.rmse_upper,
            report.rmse_eps0,
            100.0 * report.uniform_coverage,
            100.0 * report.eps0_coverage
        );
        reports.push(report);
    }

    let settings = SimulateFile {
        n: Some(n_spec),
        reps: Some(reps),
        r: Some(r),
        full: Some(full),
        eps_grid: Some(eps_spec),
        eps0_grid: eps0_spec,
        delta: Some(cfg.delta_grid[0]),
        model: Some(model_spec),
        folds: Some(cfg.folds),
        alpha: Some(cfg.alpha),
        bootstrap: Some(cfg.bootstrap_reps),
        clip: Some(cfg.clip),
        learner: Some(learner_spec),
        seed: Some(Seed(cfg.seed)),
        out_dir: Some(
            f.out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("confound-bounds-sim")),
        ),
        format: Some(f.format.unwrap_or(Format::Csv)),
        tool_version: Some(env!("CARGO_PKG_VERSION").into()),
    };
    let format = settings.format.unwrap_or(Format::Csv);
    let body = match format {
        Format::Csv => report_csv(&reports)?,
        Format::Json => io::json(&reports)?,
    };
    let out_dir = settings.out_dir.clone().unwrap_or_default();
    io::write_all_atomic(
        &out_dir,
        &[
            (format!("report.{}", format.extension()), body),
            ("manifest.toml".into(), manifest("simulate", &settings)?),
        ],
    )?;
    println!("wrote {}", out_dir.display());
    Ok(())
}

pub fn oracle_check(args: &OracleArgs) -> Result<(), Failure> {
    let report = run_suite(&SuiteOptions {
        instances: args.instances,
        seed: args.seed,
        max_support: args.max_support.max(1),
        eps_points: args.eps_points,
        corrupt_offset: args.corrupt_offset,
        exec: Execution::default(),
    });
    println!(
        "{:<36} {:>9} {:>12} {:>9}  result",
        "check", "evaluated", "worst", "tolerance"
    );
    for c in &report.checks {
        println!(
            "{:<36} {:>9} {:>12.3e} {:>9.0e}  {}",
            c.name,
            c.evaluated,
            c.worst,
            c.tolerance,
            if c.passed() { "pass" } else { "FAIL" }
        );
    }
    match &report.first_failure {
        None => Ok(()),
        Some(f) => {
            println!(
                "first failure: '{}' on instance {} (violation {:e})",
                f.check, f.index, f.violation
            );
            println!(
                "{}",
                serde_json::to_string(&f.instance).map_err(|e| Failure::Io(e.to_string()))?
            );
            Err(Failure::OracleCheck)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_lists_deduplicate_in_order() {
        assert_eq!(
            parse_models("xa,x,xa").unwrap(),
            vec![Model::XaMixture, Model::XMixture]
        );
        assert!(matches!(parse_models("x,z"), Err(Failure::Validation(_))));
    }

    #[test]
    fn eps0_grid_spans_the_curve_grid() {
        assert_eq!(default_eps0_grid(&[0.0, 0.1, 0.2]).as_deref(), Some("0:0.2:201"));
        assert_eq!(default_eps0_grid(&[0.1]), None);
    }

    #[test]
    fn oracle_learner_is_accepted_for_studies_only() {
        assert!(study_learners(" Oracle ", 0.05).is_ok());
        assert!(study_learners("logistic-knn", 0.05).is_ok());
        assert!(matches!(study_learners("forest", 0.05), Err(Failure::Validation(_))));
    }
}
