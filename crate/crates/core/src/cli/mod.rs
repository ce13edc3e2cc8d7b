//! Experiment configuration, command dispatch and reproducible CSV output.
//!
//! A run is described by one TOML document:
//!
//! ```toml
//! command = "ogp_scan"
//! seed = 7
//!
//! [model]
//! spec = "kspin n=3 k=2 p=1"
//!
//! [estimator]
//! kind = "auto"
//!
//! [algorithm]
//! kind = "trotter"
//! depth = 1
//!
//! [params]
//! gamma = 0.9
//!
//! [run]
//! trials = 20
//! ```
//!
//! `[params]` holds exponent and feasibility inputs, `[run]` holds the command's own knobs
//! and `[algorithm]` selects the simulated dynamics. Every CSV starts with a `# ` comment block
//! that embeds the resolved document and its content hash, followed by a header row whose first
//! column is `schema_version`.

mod commands;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use commands::run;

/// Version stamped into the `schema_version` column of every CSV.
pub const SCHEMA_VERSION: u32 = 1;

/// The experiment commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Estimate,
    Distance,
    Stability,
    OgpScan,
    Graph,
    Exponent,
    Certify,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Sample,
        Command::Estimate,
        Command::Distance,
        Command::Stability,
        Command::OgpScan,
        Command::Graph,
        Command::Exponent,
        Command::Certify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Estimate => "estimate",
            Command::Distance => "distance",
            Command::Stability => "stability",
            Command::OgpScan => "ogp_scan",
            Command::Graph => "graph",
            Command::Exponent => "exponent",
            Command::Certify => "certify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown command {s:?}")))
    }
}

/// A parsed and resolved experiment document.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    table: toml::Table,
}

impl ExperimentConfig {
    /// Parses a TOML document; `seed` defaults to 0.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let command = table
            .get("command")
            .and_then(toml::Value::as_str)
            .ok_or_else(|| Error::Parse("config needs a string `command`".into()))?
            .parse()?;
        let seed = match table.get("seed") {
            None => 0,
            Some(v) => v
                .as_integer()
                .and_then(|i| u64::try_from(i).ok())
                .ok_or_else(|| Error::Parse("`seed` must be a nonnegative integer".into()))?,
        };
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
        Ok(Self { command, seed, table })
    }

    /// Replaces the master seed, recording it in the resolved document.
    pub fn with_seed(mut self, seed: u64) -> Result<Self> {
        let value = i64::try_from(seed).map_err(|_| Error::InvalidArgument(format!("seed {seed} exceeds i64::MAX")))?;
        self.seed = seed;
        self.table.insert("seed".into(), toml::Value::Integer(value));
        Ok(self)
    }

    /// Canonical text of the resolved document.
    pub fn resolved(&self) -> String {
        self.table.to_string()
    }

    /// Git blob hash of [`Self::resolved`], using sha256.
    pub fn content_hash(&self) -> String {
        let text = self.resolved();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", text.len()).as_bytes());
        h.update(text.as_bytes());
        h.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub(crate) fn section(&self, name: &'static str) -> Result<Section<'_>> {
        let table = match self.table.get(name) {
            None => None,
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => return Err(Error::Parse(format!("`{name}` must be a table"))),
        };
        Ok(Section { name, table })
    }

    /// The text block placed at the top of every output file.
    fn header(&self) -> String {
        let mut s = format!("# qogp {}\n# config-sha256: {}\n# config:\n", self.command, self.content_hash());
        for line in self.resolved().lines() {
            if line.is_empty() {
                s.push_str("#\n");
            } else {
                let _ = writeln!(s, "#   {line}");
            }
        }
        s.push_str("# end config\n");
        s
    }
}

/// Typed access to one `[section]` of the config.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Section<'a> {
    name: &'static str,
    table: Option<&'a toml::Table>,
}

impl<'a> Section<'a> {
    fn value(&self, key: &str) -> Option<&'a toml::Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn bad(&self, key: &str, what: &str) -> Error {
        Error::Parse(format!("`{}.{key}` must be {what}", self.name))
    }

    fn missing(&self, key: &str) -> Error {
        Error::Missing(format!("`{}.{key}`", self.name))
    }

    fn number(&self, v: &toml::Value, key: &str) -> Result<f64> {
        match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.bad(key, "a number")),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.value(key).map(|v| self.number(v, key)).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        self.value(key)
            .map(|v| {
                v.as_integer()
                    .and_then(|i| usize::try_from(i).ok())
                    .ok_or_else(|| self.bad(key, "a nonnegative integer"))
            })
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.opt_usize(key)?.unwrap_or(default))
    }

    pub fn usize_req(&self, key: &str) -> Result<usize> {
        self.opt_usize(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<&'a str>> {
        self.value(key)
            .map(|v| v.as_str().ok_or_else(|| self.bad(key, "a string")))
            .transpose()
    }

    pub fn str_or(&self, key: &str, default: &'a str) -> Result<&'a str> {
        Ok(self.opt_str(key)?.unwrap_or(default))
    }

    pub fn str_req(&self, key: &str) -> Result<&'a str> {
        self.opt_str(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.value(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.bad(key, "a boolean")),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.value(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a.iter().map(|v| self.number(v, key)).collect(),
            Some(v) => Ok(vec![self.number(v, key)?]),
        }
    }
}

/// Settings supplied on the command line rather than in the config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Largest qubit count for dense matrices and statevectors.
    pub dense_cap: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dense_cap: crate::pauli::DENSE_CAP,
        }
    }
}

/// One CSV table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header row and data rows, each prefixed by the schema version.
    pub fn body(&self) -> String {
        let mut s = String::from("schema_version");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "{SCHEMA_VERSION}");
            for cell in row {
                s.push(',');
                s.push_str(cell);
            }
            s.push('\n');
        }
        s
    }
}

/// Contents of one output file.
#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    Csv(Table),
    /// Free-form text such as witness listings, written after the config header.
    Text(String),
    /// A loadable record written verbatim, without the config header.
    Record(String),
}

/// A named output file.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub artifact: Artifact,
}

/// Everything a command produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
}

impl RunOutput {
    pub(crate) fn csv(&mut self, name: &str, table: Table) {
        self.files.push(OutputFile {
            name: name.into(),
            artifact: Artifact::Csv(table),
        });
    }

    pub(crate) fn text(&mut self, name: &str, text: String) {
        self.files.push(OutputFile {
            name: name.into(),
            artifact: Artifact::Text(text),
        });
    }

    pub fn get(&self, name: &str) -> Option<&Artifact> {
        self.files.iter().find(|f| f.name == name).map(|f| &f.artifact)
    }

    /// File name and full file contents; CSV and text files start with the config header.
    pub fn render(&self, config: &ExperimentConfig) -> Vec<(String, String)> {
        let header = config.header();
        self.files
            .iter()
            .map(|f| {
                let contents = match &f.artifact {
                    Artifact::Csv(t) => format!("{header}{}", t.body()),
                    Artifact::Text(t) => format!("{header}{t}"),
                    Artifact::Record(t) => t.clone(),
                };
                (f.name.clone(), contents)
            })
            .collect()
    }
}

/// Formats a float with the shortest representation that round-trips.
pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override_seed() {
        let c = ExperimentConfig::parse("command = \"certify\"\n").unwrap();
        assert_eq!(c.command, Command::Certify);
        assert_eq!(c.seed, 0);
        let h0 = c.content_hash();
        let c = c.with_seed(9).unwrap();
        assert_eq!(c.seed, 9);
        assert_ne!(c.content_hash(), h0);
        assert_eq!(c.content_hash().len(), 64);
    }

    #[test]
    fn rejects_unknown_command() {
        assert!(ExperimentConfig::parse("command = \"nope\"").is_err());
        assert!(ExperimentConfig::parse("seed = 1").is_err());
        assert!(ExperimentConfig::parse("command = \"sample\"\nseed = -1").is_err());
    }

    #[test]
    fn sections_are_typed() {
        let c = ExperimentConfig::parse("command = \"sample\"\n[run]\na = 2\nb = 0.5\nc = [1, 2.5]\nd = \"x\"\n").unwrap();
        let s = c.section("run").unwrap();
        assert_eq!(s.f64_req("a").unwrap(), 2.0);
        assert_eq!(s.usize_req("a").unwrap(), 2);
        assert!(s.usize_req("b").is_err());
        assert_eq!(s.f64_list_or("c", &[]).unwrap(), vec![1.0, 2.5]);
        assert_eq!(s.str_req("d").unwrap(), "x");
        assert_eq!(s.f64_or("missing", 3.0).unwrap(), 3.0);
        assert!(matches!(s.f64_req("missing"), Err(Error::Missing(_))));
    }

    #[test]
    fn table_body_has_schema_column() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(t.body(), "schema_version,a,b\n1,1,x\n");
    }
}
