//! Self-describing CSV output.
//!
//! Every file starts with `#`-prefixed header lines carrying the resolved
//! scenario config (one `config:` line per key), its hash, the master
//! seed, and any command-specific metadata; then one line naming the
//! columns, then the data rows. Floats are printed with Rust's shortest
//! round-trip formatting, so re-parsing a file recovers the exact values.

use leobeam_core::ScenarioConfig;
use sha2::{Digest, Sha256};
use std::fmt::Display;
use std::path::Path;

/// First 16 hex digits of the SHA-256 of the canonical config text.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_text().as_bytes());
    hex_prefix(&digest, 16)
}

/// First 16 hex digits of the SHA-256 of arbitrary bytes (checkpoint ids).
pub fn bytes_hash(bytes: &[u8]) -> String {
    hex_prefix(&Sha256::digest(bytes), 16)
}

fn hex_prefix(digest: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for byte in digest {
        use std::fmt::Write;
        write!(s, "{byte:02x}").unwrap();
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

/// Shortest round-trip decimal form of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// A CSV document under construction: metadata header, column names, rows.
pub struct CsvDoc {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new(columns: &[&str]) -> Self {
        CsvDoc {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Add one `# key = value` header line.
    pub fn meta(&mut self, key: &str, value: impl Display) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    /// Embed the full resolved config (as `config:key` lines), its hash,
    /// and the master seed.
    pub fn meta_config(&mut self, cfg: &ScenarioConfig, seed: u64) {
        self.meta("config_hash", config_hash(cfg));
        self.meta("seed", seed);
        for line in cfg.canonical_text().lines() {
            if let Some((key, value)) = line.split_once(" = ") {
                self.meta(&format!("config:{key}"), value);
            }
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(
            cells.len(),
            self.columns.len(),
            "row width disagrees with column count"
        );
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, self.render())
    }
}

/// Parse the `config:` header lines of a rendered CSV back into a config.
pub fn config_from_csv_header(text: &str) -> Option<ScenarioConfig> {
    let mut cfg_text = String::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix("# config:") else {
            if !line.starts_with('#') {
                break;
            }
            continue;
        };
        cfg_text.push_str(rest);
        cfg_text.push('\n');
    }
    ScenarioConfig::from_text(&cfg_text).ok()
}
