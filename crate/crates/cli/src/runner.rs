//! Executes an experiment file and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use hypertrain_core::algorithms::{
    cross_validate, grid_proposals, hyper_train_global, hyper_train_joint, retrained_valid_loss, Clock,
    HyperTrainOutcome, NoClock, Problem, RunRecord, RunRow,
};
use hypertrain_core::baselines::{random_search, surrogate_comparison, ErrorStats};
use hypertrain_core::hypernets::HyperVector;
use hypertrain_core::linalg::norm2;

use crate::config::{ExperimentFile, ExperimentKind, Overrides};
use crate::error::{CliError, CliResult};
use crate::gradcheck::{run_suite, GradcheckReport};
use crate::io::{save_checkpoint, write_errors_csv, write_json, write_run_csv, write_text};
use crate::parallel::ThreadPool;
use crate::plot::{histogram, line_plot};

pub const RUN_CSV: &str = "run.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const LOSS_SVG: &str = "loss_curves.svg";
pub const ERRORS_CSV: &str = "errors.csv";
pub const CHECKPOINT: &str = "hypernet.ckpt";

struct WallClock(Instant);

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaStats {
    pub dim: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub norm: f64,
}

impl LambdaStats {
    fn of(l: &[f64]) -> Self {
        Self {
            dim: l.len(),
            mean: l.iter().sum::<f64>() / l.len().max(1) as f64,
            min: l.iter().copied().fold(f64::INFINITY, f64::min),
            max: l.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            norm: norm2(l),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RetrainReport {
    pub valid_loss_at_lambda: f64,
    pub baseline_lambda: f64,
    pub baseline_valid_loss: f64,
    /// `(baseline − tuned) / baseline`.
    pub relative_improvement: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    HyperTrain {
        final_train_loss: f64,
        final_valid_loss: f64,
        lambda_final: Vec<f64>,
        lambda_stats: LambdaStats,
        grad_evals: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        retrain: Option<RetrainReport>,
    },
    Search {
        proposals: Vec<Vec<f64>>,
        valid_losses: Vec<f64>,
        best_index: usize,
        best_lambda: Vec<f64>,
        best_valid_loss: f64,
        grad_evals: u64,
    },
    Compare {
        n_fit: usize,
        n_eval: usize,
        error_threshold: f64,
        methods: Vec<MethodSummary>,
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Gradcheck(GradcheckReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub grad_evals: u64,
    #[serde(flatten)]
    pub stats: Option<ErrorStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub wall_clock_seconds: f64,
    pub outcome: Outcome,
    pub config: ExperimentFile,
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_loss_plot(dir: &Path, record: &RunRecord, xlabel: &str) -> CliResult<()> {
    let pts = |f: fn(&RunRow) -> f64| record.rows().iter().map(|r| (r.step as f64, f(r))).collect::<Vec<_>>();
    let svg = line_plot("loss", xlabel, &[("train", pts(|r| r.train_loss)), ("valid", pts(|r| r.valid_loss))]);
    write_text(&dir.join(LOSS_SVG), &svg)
}

/// Runs `file` and writes every artifact into its output directory.
pub fn execute(file: &ExperimentFile) -> CliResult<Summary> {
    let start = Instant::now();
    let dir = file.output_dir.clone();
    let outcome = match file.kind {
        ExperimentKind::Global | ExperimentKind::Joint => {
            let problem = file.problem()?;
            let run = file.run.as_ref().expect("validated");
            let wall = WallClock(start);
            let clock: &dyn Clock = if file.record_wall_clock { &wall } else { &NoClock };
            let out = if file.kind == ExperimentKind::Global {
                hyper_train_global(&problem, run, clock)?
            } else {
                hyper_train_joint(&problem, run, clock)?
            };
            create_dir(&dir)?;
            write_run_csv(&dir.join(RUN_CSV), &out.record)?;
            write_loss_plot(&dir, &out.record, "step")?;
            if file.checkpoint {
                save_checkpoint(&dir.join(CHECKPOINT), &out.hypernet, &out.phi, run.seed)?;
            }
            hyper_train_outcome(file, &problem, &out)?
        }
        ExperimentKind::CrossValidate | ExperimentKind::RandomSearch => {
            let problem = file.problem()?;
            let inner = file.inner.as_ref().expect("validated");
            let s = file.search.expect("validated");
            let (proposals, cv) = if file.kind == ExperimentKind::CrossValidate {
                let proposals = grid_proposals(s.low, s.high, s.n);
                let cv = cross_validate(&problem, inner, &proposals, s.seed)?;
                (proposals, cv)
            } else {
                random_search(&problem, inner, s.low, s.high, s.n, s.seed)?
            };
            let mut record = RunRecord::default();
            for (i, (lambda, &valid_loss)) in proposals.iter().zip(&cv.valid_losses).enumerate() {
                record.push(RunRow {
                    step: i as u64 + 1,
                    train_loss: f64::NAN,
                    valid_loss,
                    lambda_norm: norm2(lambda),
                    lambda_0: lambda[0],
                    seconds: 0.0,
                })?;
            }
            // Train losses are not tracked per proposal; fill them from the final weights.
            let record = fill_train_losses(&problem, inner, &proposals, s.seed, record)?;
            create_dir(&dir)?;
            write_run_csv(&dir.join(RUN_CSV), &record)?;
            write_loss_plot(&dir, &record, "proposal")?;
            Outcome::Search {
                proposals: proposals.iter().map(|p| p.to_vec()).collect(),
                best_valid_loss: cv.valid_losses[cv.best_index],
                valid_losses: cv.valid_losses,
                best_index: cv.best_index,
                best_lambda: cv.best_lambda.to_vec(),
                grad_evals: cv.grad_evals.0,
            }
        }
        ExperimentKind::SurrogateCompare => compare_outcome(file, &dir)?,
        ExperimentKind::Gradcheck => {
            let g = file.gradcheck.unwrap_or_default();
            let report = run_suite(g.seed, g.points, g.eps)?;
            create_dir(&dir)?;
            Outcome::Gradcheck(report)
        }
    };
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outcome,
        config: file.clone(),
    };
    write_json(&dir.join(SUMMARY_JSON), &summary)?;
    Ok(summary)
}

fn fill_train_losses(
    problem: &Problem,
    inner: &hypertrain_core::algorithms::InnerTraining,
    proposals: &[HyperVector],
    seed: u64,
    record: RunRecord,
) -> CliResult<RunRecord> {
    let mut out = RunRecord::default();
    for (row, lambda) in record.rows().iter().zip(proposals) {
        let theta =
            hypertrain_core::algorithms::train_elementary(problem, lambda, inner, seed, &mut Default::default())?;
        let train_loss = problem.model.train_loss(&theta, lambda, &problem.reg, &problem.train)?;
        out.push(RunRow { train_loss, ..*row })?;
    }
    Ok(out)
}

fn hyper_train_outcome(file: &ExperimentFile, problem: &Problem, out: &HyperTrainOutcome) -> CliResult<Outcome> {
    let last = out.record.last().copied();
    let retrain = match &file.retrain {
        Some(r) => {
            let tuned = retrained_valid_loss(problem, &out.lambda, &r.inner, r.seed)?;
            let base_lambda = HyperVector::filled(problem.lambda_dim(), r.baseline_lambda);
            let baseline = retrained_valid_loss(problem, &base_lambda, &r.inner, r.seed)?;
            Some(RetrainReport {
                valid_loss_at_lambda: tuned,
                baseline_lambda: r.baseline_lambda,
                baseline_valid_loss: baseline,
                relative_improvement: (baseline - tuned) / baseline,
            })
        }
        None => None,
    };
    Ok(Outcome::HyperTrain {
        final_train_loss: last.map_or(f64::NAN, |r| r.train_loss),
        final_valid_loss: last.map_or(f64::NAN, |r| r.valid_loss),
        lambda_final: out.lambda.to_vec(),
        lambda_stats: LambdaStats::of(&out.lambda),
        grad_evals: out.grad_evals.0,
        retrain,
    })
}

fn compare_outcome(file: &ExperimentFile, dir: &Path) -> CliResult<Outcome> {
    let problem = file.problem()?;
    let spec = file.compare.as_ref().expect("validated");
    let cmp = surrogate_comparison(&problem, spec, &ThreadPool::from_env())?;
    create_dir(dir)?;
    write_errors_csv(&dir.join(ERRORS_CSV), &cmp, problem.lambda_dim())?;
    let mut methods = Vec::new();
    for m in &cmp.methods {
        let svg = histogram(&format!("{}: predicted − true", m.method), "error", &m.errors, 30);
        write_text(&dir.join(format!("histogram_{}.svg", m.method)), &svg)?;
        methods.push(MethodSummary {
            method: m.method.clone(),
            grad_evals: m.grad_evals,
            stats: (!m.errors.is_empty()).then(|| m.stats(spec.error_threshold)),
        });
    }
    Ok(Outcome::Compare {
        n_fit: spec.n_fit,
        n_eval: spec.n_eval,
        error_threshold: spec.error_threshold,
        methods,
        note: (spec.n_eval == 0).then(|| "no evaluation points; error statistics omitted".to_string()),
    })
}

/// `hypertrain run`.
pub fn run(config: &Path, overrides: &Overrides) -> CliResult<Summary> {
    let file = ExperimentFile::load(config, overrides)?;
    execute(&file)
}

/// `hypertrain compare`; the file must describe a surrogate comparison.
pub fn compare(config: &Path, overrides: &Overrides) -> CliResult<Summary> {
    let file = ExperimentFile::load(config, overrides)?;
    if file.kind != ExperimentKind::SurrogateCompare {
        return Err(CliError::config("kind", "compare needs kind surrogate-compare"));
    }
    execute(&file)
}

/// `hypertrain gradcheck`; writes a summary only when `out` is given.
pub fn gradcheck(seed: u64, points: usize, out: Option<PathBuf>) -> CliResult<GradcheckReport> {
    let report = run_suite(seed, points, crate::gradcheck::DEFAULT_EPS)?;
    if let Some(dir) = out {
        create_dir(&dir)?;
        write_json(&dir.join(SUMMARY_JSON), &report)?;
    }
    Ok(report)
}
