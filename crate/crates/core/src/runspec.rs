//! Experiment specifications as TOML.
//!
//! ```toml
//! [data]
//! path = "data/ETTh1.csv"       # or a [data.synthetic] table
//! time_column = "date"          # "" when every column is a channel
//! split = { train = 0.6, val = 0.2, test = 0.2 }
//!
//! [model]
//! context = 336
//! horizon = 96
//! overlap = 8
//! depth = 1
//! head_hidden = 64
//! filter = { family = "haar", bands = 6 }
//! router = { mode = "per_level", hidden = 32, temperature = 1.0 }
//!
//! [train]
//! batch_size = 512
//! lr = 1e-4
//! patience = 15
//! min_delta = 2e-4
//! max_epochs = 100
//! seeds = [0, 1, 2, 3]
//!
//! [output]
//! dir = "runs"
//! importance_windows = 256
//! ```
//!
//! Every field is optional except the data source.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, synthetic_series, CsvSchema, SplitSpec, SyntheticSpec, TimeSeries};
use crate::error::{PrismError, Result};
use crate::model::PrismConfig;
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    pub time_column: String,
    pub split: SplitSpec,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            path: None,
            synthetic: None,
            time_column: "date".into(),
            split: SplitSpec::default(),
        }
    }
}

impl DataSpec {
    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            time_column: (!self.time_column.is_empty()).then(|| self.time_column.clone()),
        }
    }

    /// Loads the CSV, resolving a relative path against `base`, or generates
    /// the synthetic series.
    pub fn load(&self, base: &Path) -> Result<TimeSeries> {
        match (&self.path, &self.synthetic) {
            (Some(p), None) => load_csv(base.join(p), &self.schema()),
            (None, Some(s)) => synthetic_series(s),
            _ => Err(PrismError::config(
                "data: give exactly one of data.path or data.synthetic",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Test windows averaged in the importance export.
    pub importance_windows: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("runs"),
            importance_windows: 256,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub data: DataSpec,
    pub model: PrismConfig,
    pub train: TrainConfig,
    pub output: OutputSpec,
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: RunSpec = toml::from_str(text).map_err(|e| PrismError::config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| PrismError::Internal(format!("cannot encode spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PrismError::config(format!("cannot read spec {}: {e}", path.display())))?;
        RunSpec::from_toml(&text).map_err(|e| match e {
            PrismError::Config(m) => PrismError::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every section, prefixing messages with the section name.
    pub fn validate(&self) -> Result<()> {
        let within = |section: &str, r: Result<()>| {
            r.map_err(|e| match e {
                PrismError::Config(m) | PrismError::Shape(m) => PrismError::config(format!("{section}: {m}")),
                other => other,
            })
        };
        match (&self.data.path, &self.data.synthetic) {
            (None, None) => {
                return Err(PrismError::config(
                    "data.path: missing (or give a data.synthetic table)",
                ))
            }
            (Some(_), Some(_)) => {
                return Err(PrismError::config(
                    "data.path and data.synthetic are mutually exclusive",
                ))
            }
            _ => {}
        }
        within("data.split", self.data.split.validate())?;
        within("model", self.model.plan().map(|_| ()))?;
        within("train", self.train.validate())?;
        if self.output.importance_windows == 0 {
            return Err(PrismError::config("output.importance_windows: must be positive"));
        }
        Ok(())
    }
}
