//! Experiment files: one JSON document per experiment.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hypertrain_core::algorithms::{InnerTraining, Problem, RunConfig, SamplerSpec};
use hypertrain_core::baselines::SurrogateCompareSpec;
use hypertrain_core::data::{make_ridge_synthetic, SplitSpec};
use hypertrain_core::models::{Model, ModelSpec, RegMode, RegSpec};

use crate::error::{CliError, CliResult};
use crate::gradcheck;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Global,
    Joint,
    CrossValidate,
    RandomSearch,
    SurrogateCompare,
    Gradcheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    /// IDX image/label pair, raw or gzipped; paths are relative to the experiment file.
    Idx { images: PathBuf, labels: PathBuf, split: SplitSpec },
    /// Synthetic linear-regression data.
    Ridge {
        n: usize,
        d: usize,
        noise_sd: f64,
        #[serde(default)]
        seed: u64,
        split: SplitSpec,
    },
}

/// Proposal range for cross-validation (evenly spaced grid) and random search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub low: f64,
    pub high: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

/// After hyper-training, retrain θ from scratch at the final λ̂ and at a
/// constant baseline λ, and report both validation losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrainSpec {
    pub inner: InnerTraining,
    #[serde(default)]
    pub baseline_lambda: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_points() -> usize {
    gradcheck::DEFAULT_POINTS
}
fn default_eps() -> f64 {
    gradcheck::DEFAULT_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        Self { points: default_points(), eps: default_eps(), seed: 0 }
    }
}

fn default_reg() -> RegMode {
    RegMode::Global
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default = "default_reg")]
    pub regularization: RegMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerTraining>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<SurrogateCompareSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradcheck: Option<GradcheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrain: Option<RetrainSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Fill the `seconds` column of run.csv; off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_wall_clock: bool,
    /// Save the trained hypernetwork next to the run outputs.
    #[serde(default = "default_true")]
    pub checkpoint: bool,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub narrow_sigma: bool,
}

fn require<'a, T>(v: &'a Option<T>, key: &str, kind: ExperimentKind) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| CliError::config(key, format!("required for kind {kind:?}")))
}

impl ExperimentFile {
    /// Parses JSON; errors name the offending key path.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.to_string();
            // The path already ends at an unknown key; a missing key is appended.
            let key = match named_field(&msg) {
                Some(f) if path == "." => f,
                Some(f) if !path.ends_with(&f) => format!("{path}.{f}"),
                _ => path,
            };
            CliError::config(key, msg)
        })
    }

    /// Reads, parses and validates `path`, resolves data paths against its
    /// directory, and applies `overrides`.
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut file = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(DataSource::Idx { images, labels, .. }) = &mut file.data {
            *images = base.join(&*images);
            *labels = base.join(&*labels);
        }
        file.apply(overrides)?;
        file.validate()?;
        Ok(file)
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(seed) = o.seed {
            if let Some(r) = &mut self.run {
                r.seed = seed;
            }
            if let Some(c) = &mut self.compare {
                c.seed = seed;
            }
            if let Some(s) = &mut self.search {
                s.seed = seed;
            }
            if let Some(g) = &mut self.gradcheck {
                g.seed = seed;
            }
            if let Some(r) = &mut self.retrain {
                r.seed = seed;
            }
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if o.narrow_sigma {
            match &mut self.run {
                Some(r) if self.kind == ExperimentKind::Joint => r.sampler = SamplerSpec::narrow_local(),
                _ => return Err(CliError::config("run.sampler", "--paper-sigma applies to joint runs only")),
            }
        }
        Ok(())
    }

    /// Checks that every section the kind needs is present and that referenced files exist.
    pub fn validate(&self) -> CliResult<()> {
        let k = self.kind;
        if k != ExperimentKind::Gradcheck {
            require(&self.data, "data", k)?;
            require(&self.model, "model", k)?;
        }
        match k {
            ExperimentKind::Global | ExperimentKind::Joint => {
                let run = require(&self.run, "run", k)?;
                run.validate()?;
                let steps_ok = match k {
                    ExperimentKind::Global => run.hypernet_steps + run.hyper_steps >= 1,
                    _ => run.joint_steps >= 1,
                };
                if !steps_ok {
                    let key = if k == ExperimentKind::Global { "run.hypernet_steps" } else { "run.joint_steps" };
                    return Err(CliError::config(key, "must be at least 1"));
                }
                if let Some(r) = &self.retrain {
                    r.inner.validate()?;
                }
            }
            ExperimentKind::CrossValidate | ExperimentKind::RandomSearch => {
                require(&self.inner, "inner", k)?.validate()?;
                let s = require(&self.search, "search", k)?;
                if s.n == 0 {
                    return Err(CliError::config("search.n", "must be at least 1"));
                }
                if s.low.is_nan() || s.high.is_nan() || s.low > s.high {
                    return Err(CliError::config("search.low", "must not exceed search.high"));
                }
                if k == ExperimentKind::CrossValidate && self.regularization != RegMode::Global {
                    return Err(CliError::config("regularization", "grid cross-validation needs a global decay"));
                }
            }
            ExperimentKind::SurrogateCompare => {
                require(&self.compare, "compare", k)?;
            }
            ExperimentKind::Gradcheck => {}
        }
        if let Some(DataSource::Idx { images, labels, .. }) = &self.data {
            for (key, p) in [("data.images", images), ("data.labels", labels)] {
                if !p.exists() {
                    return Err(CliError::config(key, format!("{} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Loads the data and assembles model, regularizer and splits.
    pub fn problem(&self) -> CliResult<Problem> {
        let data = self.data.as_ref().ok_or_else(|| CliError::config("data", "missing"))?;
        let spec = self.model.clone().ok_or_else(|| CliError::config("model", "missing"))?;
        let (dataset, split) = match data {
            DataSource::Idx { images, labels, split } => (crate::io::load_idx(images, labels)?, split),
            DataSource::Ridge { n, d, noise_sd, seed, split } => {
                (make_ridge_synthetic(*n, *d, *noise_sd, *seed)?.dataset, split)
            }
        };
        let splits = split.apply(&dataset)?;
        let model = Model::new(spec)?;
        let reg = RegSpec::for_model(self.regularization, &model);
        Ok(Problem::new(model, reg, splits.train, splits.valid)?)
    }
}

/// Extracts `x` from serde's "unknown field `x`, expected ..." message.
fn named_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `").or_else(|| msg.strip_prefix("missing field `"))?;
    Some(rest[..rest.find('`')?].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RIDGE: &str = r#"{
        "kind": "joint",
        "data": {"source": "ridge", "n": 40, "d": 3, "noise_sd": 0.1, "split": {"n_train": 20, "n_valid": 20}},
        "model": {"layer_sizes": [3, 1], "task": "mean-squared-error", "bias": false},
        "run": {
            "hypernet": {"family": "linear"},
            "sampler": {"kind": "local-gaussian", "sd": 0.01},
            "data_batch": 20, "valid_batch": 20, "joint_steps": 5
        }
    }"#;

    #[test]
    fn defaults_are_filled_in() {
        let f = ExperimentFile::from_json(RIDGE).unwrap();
        let run = f.run.as_ref().unwrap();
        assert_eq!(run.lambda_batch, 8);
        assert_eq!(run.phi_lr, hypertrain_core::algorithms::DEFAULT_STEP_SIZE);
        assert_eq!(f.regularization, RegMode::Global);
        assert!(!f.record_wall_clock);
        f.validate().unwrap();
        let p = f.problem().unwrap();
        assert_eq!(p.train.len(), 20);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = RIDGE.replacen("\"kind\": \"joint\",", "\"kind\": \"joint\", \"bogus\": 1,", 1);
        match ExperimentFile::from_json(&text).unwrap_err() {
            CliError::Config { key, .. } => assert_eq!(key, "bogus"),
            e => panic!("{e}"),
        }
        let nested = RIDGE.replacen("\"joint_steps\": 5", "\"joint_steps\": 5, \"nope\": 2", 1);
        match ExperimentFile::from_json(&nested).unwrap_err() {
            CliError::Config { key, .. } => assert_eq!(key, "run.nope"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn missing_sections_and_narrow_sigma() {
        let mut f = ExperimentFile::from_json(RIDGE).unwrap();
        f.apply(&Overrides { narrow_sigma: true, ..Default::default() }).unwrap();
        assert_eq!(f.run.as_ref().unwrap().sampler, SamplerSpec::LocalGaussian { sd: 1e-5f64.sqrt() });
        f.run = None;
        match f.validate().unwrap_err() {
            CliError::Config { key, .. } => assert_eq!(key, "run"),
            e => panic!("{e}"),
        }
    }
}
