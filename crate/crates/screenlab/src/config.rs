//! Experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::formats::{load_model, parse_toml_or_json, read_text, Instance, ModelFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    BuyerOptimal,
    Robust,
    ComparativeStatics,
    VerifyMinmax,
    VerifyGuarantee,
    ExportLp,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::BuyerOptimal,
        Command::Robust,
        Command::ComparativeStatics,
        Command::VerifyMinmax,
        Command::VerifyGuarantee,
        Command::ExportLp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::BuyerOptimal => "buyer_optimal",
            Command::Robust => "robust",
            Command::ComparativeStatics => "comparative_statics",
            Command::VerifyMinmax => "verify_minmax",
            Command::VerifyGuarantee => "verify_guarantee",
            Command::ExportLp => "export_lp",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = AppError;

    /// Accepts `buyer_optimal` and `buyer-optimal` alike.
    fn from_str(s: &str) -> AppResult<Self> {
        let key = s.trim().replace('-', "_");
        Command::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| AppError::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = AppError;

    fn from_str(s: &str) -> AppResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(AppError::Config(format!("unknown output format {s:?} (json or csv)"))),
        }
    }
}

/// Garbling coarseness: a number of cells or `"full"` for the fully
/// revealing partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coarseness {
    Cells(usize),
    Full,
}

impl Coarseness {
    pub fn cells(self) -> usize {
        match self {
            Coarseness::Cells(k) => k,
            Coarseness::Full => usize::MAX,
        }
    }
}

impl fmt::Display for Coarseness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coarseness::Cells(k) => write!(f, "{k}"),
            Coarseness::Full => f.write_str("full"),
        }
    }
}

impl Serialize for Coarseness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Coarseness::Cells(k) => s.serialize_u64(*k as u64),
            Coarseness::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for Coarseness {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("coarseness must be positive")),
            Raw::Num(k) => Ok(Coarseness::Cells(k as usize)),
            Raw::Text(t) if t == "full" => Ok(Coarseness::Full),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("coarseness {t:?} is neither a count nor \"full\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative bisection tolerance for `α*`.
    pub alpha: f64,
    /// Slack allowed below `π*` for revenue-guarantee checks.
    pub guarantee: f64,
    /// Combined grid tolerance of the min-max comparison.
    pub minmax: f64,
    /// LP optimum vs. pure bundling on the buyer-optimal signal.
    pub lp_vs_pb: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { alpha: 1e-9, guarantee: 1e-6, minmax: 5e-3, lp_vs_pb: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// The model either inline or as a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Inline(ModelFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: ModelSource,
    /// Grid points per dimension for discretized signals; defaults by `n`.
    #[serde(default)]
    pub grid: Option<usize>,
    /// Cells used for the buyer-optimal correlated signal in LP checks.
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Largest `n` of the comparative-statics sweep.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub coarseness: Option<Vec<Coarseness>>,
    /// Extra discrete-signal files the robust mechanism is evaluated under.
    #[serde(default)]
    pub signals: Vec<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_cells() -> usize {
    screenlab_core::screening::CORRELATED_CELLS
}

fn default_n_max() -> usize {
    4
}

impl ExperimentConfig {
    /// Config for `command` on an inline model with every other field at
    /// its default.
    pub fn new(command: Command, model: ModelFile) -> Self {
        Self {
            command,
            model: ModelSource::Inline(model),
            grid: None,
            cells: default_cells(),
            n_max: default_n_max(),
            seeds: None,
            coarseness: None,
            signals: Vec::new(),
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = read_text(path)?;
        let mut cfg: ExperimentConfig = parse_toml_or_json(&text, &format!("config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> AppResult<()> {
        let t = &self.tolerances;
        for (name, v) in [("alpha", t.alpha), ("guarantee", t.guarantee), ("minmax", t.minmax), ("lp_vs_pb", t.lp_vs_pb)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AppError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if let Some(g) = self.grid {
            if g < 3 {
                return Err(AppError::Config(format!("grid must be at least 3, got {g}")));
            }
        }
        if self.cells < 3 {
            return Err(AppError::Config(format!("cells must be at least 3, got {}", self.cells)));
        }
        if self.n_max == 0 {
            return Err(AppError::Config("n_max must be positive".into()));
        }
        if matches!(&self.seeds, Some(s) if s.is_empty()) {
            return Err(AppError::Config("seed list is empty".into()));
        }
        if matches!(&self.coarseness, Some(c) if c.is_empty()) {
            return Err(AppError::Config("coarseness list is empty".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn model_file(&self) -> AppResult<ModelFile> {
        match &self.model {
            ModelSource::Inline(m) => Ok(m.clone()),
            ModelSource::Path(p) => load_model(&self.resolve(p)),
        }
    }

    pub fn instance(&self) -> AppResult<Instance> {
        self.model_file()?.build()
    }

    pub fn grid_for(&self, n: usize) -> usize {
        self.grid.unwrap_or_else(|| screenlab_core::PriorSpec::default_points(n))
    }

    /// Seeds, defaulting to `0..default_count`.
    pub fn seeds_or(&self, default_count: u64) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| (0..default_count).collect())
    }

    pub fn coarseness_or(&self, default: &[Coarseness]) -> Vec<Coarseness> {
        self.coarseness.clone().unwrap_or_else(|| default.to_vec())
    }
}
