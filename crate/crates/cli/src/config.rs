//! Optional TOML defaults, read from `--config` or `$SOCDD_CONFIG`.
//!
//! ```toml
//! [analysis]
//! min_segment = 30
//! bootstrap_trials = 500
//! window = { mode = "trading_days", span = 126, warmup = "expanding" }
//!
//! [schema]
//! date_column = "Date"
//! close_column = "Adj Close"
//! date_format = "%m/%d/%Y"
//! delimiter = ";"
//! ```
//!
//! Command-line flags override anything set here.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use soc_drawdown::report::AnalysisConfig;
use soc_drawdown::series::PriceSchema;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub analysis: AnalysisConfig,
    pub schema: SchemaFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaFile {
    pub date_column: Option<String>,
    pub close_column: Option<String>,
    pub date_format: Option<String>,
    pub delimiter: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn schema(&self) -> Result<PriceSchema> {
        let mut schema = PriceSchema::default();
        let s = &self.schema;
        if let Some(c) = &s.date_column {
            schema.date_column = c.clone();
        }
        if let Some(c) = &s.close_column {
            schema.close_column = c.clone();
        }
        if s.date_format.is_some() {
            schema.date_format = s.date_format.clone();
        }
        if let Some(d) = &s.delimiter {
            schema.delimiter = parse_delimiter(d)?;
        }
        Ok(schema)
    }
}

/// A single ASCII character, or `tab` / `\t`.
pub fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => bail!("delimiter must be a single ASCII character or `tab`, got `{s}`"),
    }
}
