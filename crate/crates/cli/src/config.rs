//! Config files.
//!
//! A file is JSON, or TOML when its extension is `.toml`. It either holds
//! the training settings directly or has any of the sections `train`,
//! `synth` and `eval`. Missing keys keep their built-in defaults, and
//! command-line flags override both.

use std::fs;
use std::path::Path;

use autoeda_core::eval::EvalConfig;
use autoeda_core::synth::SynthConfig;
use autoeda_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

const SECTIONS: [&str; 3] = ["train", "synth", "eval"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub eval: EvalConfig,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: serde_json::Value = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        };
        let sectioned = value
            .as_object()
            .is_some_and(|o| !o.is_empty() && o.keys().all(|k| SECTIONS.contains(&k.as_str())));
        let parsed = if sectioned {
            serde_json::from_value(value)
        } else {
            serde_json::from_value(value).map(|train| Self {
                train,
                ..Self::default()
            })
        };
        parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}
