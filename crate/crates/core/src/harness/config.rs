use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::mips::{IndexConfig, IndexFlavor};

/// The experiments the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QueryParity,
    QueryErrorIndices,
    QueryScaling,
    MarginStudy,
    NAblation,
    LpParity,
    LpScaling,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::QueryParity,
        Experiment::QueryErrorIndices,
        Experiment::QueryScaling,
        Experiment::MarginStudy,
        Experiment::NAblation,
        Experiment::LpParity,
        Experiment::LpScaling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::QueryParity => "query-parity",
            Experiment::QueryErrorIndices => "query-error-indices",
            Experiment::QueryScaling => "query-scaling",
            Experiment::MarginStudy => "margin-study",
            Experiment::NAblation => "n-ablation",
            Experiment::LpParity => "lp-parity",
            Experiment::LpScaling => "lp-scaling",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment {s:?}")))
    }
}

/// LazyEM mode requested for index-backed runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    ExactSet,
    Runtime,
    Private,
}

/// One experiment's settings. Empty or missing fields fall back to the
/// experiment's defaults, which are desk-sized unless `paper_scale` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    /// Query or constraint counts to sweep.
    pub m: Vec<usize>,
    #[serde(rename = "U")]
    pub u: Option<usize>,
    /// Record counts to sweep.
    pub n: Vec<usize>,
    pub d: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: Option<f64>,
    pub flavors: Vec<IndexFlavor>,
    /// Index parameters; the flavor is taken from `flavors` and the build
    /// seed is offset by each run's seed.
    pub index: IndexConfig,
    /// Defaults to exact-set for exact indices and runtime otherwise.
    pub mode: Option<ModeChoice>,
    /// Trusted top-k slack in raw score units, required by the private mode.
    pub slack: Option<f64>,
    pub repetitions: Option<usize>,
    /// Measure the running-average error every this many rounds (0: only
    /// at the end).
    pub error_every: Option<usize>,
    pub paper_scale: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            m: Vec::new(),
            u: None,
            n: Vec::new(),
            d: None,
            t: None,
            epsilon: 1.0,
            delta: 1e-3,
            alpha: None,
            flavors: Vec::new(),
            index: IndexConfig::default(),
            mode: None,
            slack: None,
            repetitions: None,
            error_every: None,
            paper_scale: false,
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        Self { experiment: Some(experiment), ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.alpha.is_some_and(|a| !(a.is_finite() && a > 0.0)) {
            return invalid("alpha must be positive");
        }
        if self.m.contains(&0) || self.n.contains(&0) {
            return invalid("m and n values must be positive");
        }
        if self.u.is_some_and(|u| u < 2) {
            return invalid("U must be at least 2");
        }
        if self.d == Some(0) || self.t == Some(0) || self.repetitions == Some(0) {
            return invalid("d, T and repetitions must be positive");
        }
        if self.slack.is_some_and(|c| !(c.is_finite() && c >= 0.0)) {
            return invalid("slack must be nonnegative");
        }
        if self.mode == Some(ModeChoice::Private) && self.slack.is_none() {
            return invalid("the private mode needs a trusted slack bound");
        }
        self.index.validate()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub(crate) fn pick<T>(&self, desk: T, paper: T) -> T {
        if self.paper_scale {
            paper
        } else {
            desk
        }
    }

    pub(crate) fn m_or(&self, desk: &[usize], paper: &[usize]) -> Vec<usize> {
        if self.m.is_empty() {
            self.pick(desk, paper).to_vec()
        } else {
            self.m.clone()
        }
    }

    pub(crate) fn n_or(&self, desk: &[usize], paper: &[usize]) -> Vec<usize> {
        if self.n.is_empty() {
            self.pick(desk, paper).to_vec()
        } else {
            self.n.clone()
        }
    }

    pub(crate) fn flavors_or(&self, default: &[IndexFlavor]) -> Vec<IndexFlavor> {
        if self.flavors.is_empty() {
            default.to_vec()
        } else {
            self.flavors.clone()
        }
    }

    /// Seeds of the configured repetitions: `seed, seed + 1, …`.
    pub(crate) fn seeds(&self, default_reps: usize) -> Vec<u64> {
        let reps = self.repetitions.unwrap_or(default_reps) as u64;
        (0..reps).map(|r| self.seed.wrapping_add(r)).collect()
    }

    pub(crate) fn index_config(&self, flavor: IndexFlavor, run_seed: u64) -> IndexConfig {
        IndexConfig { flavor, seed: self.index.seed.wrapping_add(run_seed), ..self.index.clone() }
    }
}
