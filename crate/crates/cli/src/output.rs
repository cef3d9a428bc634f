//! Artifact writing. Every file carries the run configuration: JSON
//! documents under a `run_config` key (ignored by the library loaders),
//! CSV files on a leading `#` comment line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub graphon: String,
    pub args: Value,
}

impl RunConfig {
    pub fn new(subcommand: &'static str, graphon: String, args: &impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            tool: "graphonlab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            graphon,
            args: serde_json::to_value(args)?,
        })
    }
}

pub struct Writer {
    dir: PathBuf,
    config: RunConfig,
    pub format: Format,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, format: Format, config: RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
            format,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes a JSON object with `run_config` added.
    pub fn json(&mut self, name: &str, value: Value) -> Result<(), CliError> {
        let Value::Object(mut map) = value else {
            return Err(CliError::Lib(graphonlab::Error::Validation(format!(
                "artifact {name} is not a JSON object"
            ))));
        };
        map.insert("run_config".into(), serde_json::to_value(&self.config)?);
        self.put(name, serde_json::to_string(&Value::Object(map))?)
    }

    /// Re-emits a library JSON document with `run_config` added.
    pub fn json_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.json(name, serde_json::from_str(text)?)
    }

    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let header = format!("# run_config: {}\n", serde_json::to_string(&self.config)?);
        self.put(name, header + body)
    }

    /// `quantity,value` table.
    pub fn csv_pairs(&mut self, name: &str, rows: &[(&str, String)]) -> Result<(), CliError> {
        let mut body = String::from("quantity,value\n");
        for (k, v) in rows {
            body.push_str(&format!("{k},{v}\n"));
        }
        self.csv(name, &body)
    }

    fn put(&mut self, name: &str, text: String) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn finish(self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}
