//! Run directories: resolved config, outputs and a provenance record with
//! content hashes, plus the `--check` replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use maser_soliton::io::{sha256_file, sha256_hex};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_FILE: &str = "config.json";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const ERROR_FILE: &str = "error.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub code_version: String,
    pub command: String,
    pub seed: Option<u64>,
    /// SHA-256 of `config.json` as written.
    pub config_hash: String,
    /// SHA-256 of every other file in the run, keyed by relative path.
    pub files: BTreeMap<String, String>,
}

/// Pretty JSON with a trailing newline, the on-disk form of every document.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("documents serialize");
    v.push(b'\n');
    v
}

pub struct RunDir {
    root: PathBuf,
    command: String,
    seed: Option<u64>,
    config_hash: String,
    files: Vec<String>,
}

impl RunDir {
    /// Create `root` and write the resolved config into it.
    pub fn create<T: Serialize>(
        root: &Path,
        command: &str,
        seed: Option<u64>,
        config: &T,
    ) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| {
            CliError::config(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        let bytes = json_bytes(config);
        fs::write(root.join(CONFIG_FILE), &bytes)
            .map_err(|e| CliError::config(format!("cannot write to {}: {e}", root.display())))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            command: command.to_string(),
            seed,
            config_hash: sha256_hex(&bytes),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.files.iter().any(|f| f == name)
    }

    /// Record an output written by someone else (relative path).
    pub fn track(&mut self, name: impl Into<String>) {
        self.files.push(name.into());
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        fs::write(self.path(name), json_bytes(value))?;
        self.track(name);
        Ok(())
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(fs::File) -> maser_soliton::Result<()>,
    ) -> CliResult<()> {
        let file = fs::File::create(self.path(name))?;
        f(file)?;
        self.track(name);
        Ok(())
    }

    /// Hash everything and write `provenance.json`.
    pub fn finish(self) -> CliResult<Provenance> {
        let mut files = BTreeMap::new();
        for name in &self.files {
            files.insert(name.clone(), sha256_file(&self.root.join(name))?);
        }
        let prov = Provenance {
            tool: "maser".into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            seed: self.seed,
            config_hash: self.config_hash,
            files,
        };
        fs::write(self.root.join(PROVENANCE_FILE), json_bytes(&prov))?;
        Ok(prov)
    }
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub ok: bool,
    pub checked: usize,
    pub mismatches: Vec<String>,
}

/// Recompute every hash in `root/provenance.json`. With `config`, the
/// resolved config of the current invocation must also match the run.
pub fn check(root: &Path, command: &str, config: Option<&[u8]>) -> CliResult<CheckReport> {
    let text = fs::read_to_string(root.join(PROVENANCE_FILE))
        .map_err(|e| CliError::failure(format!("no provenance in {}: {e}", root.display())))?;
    let prov: Provenance = serde_json::from_str(&text)
        .map_err(|e| CliError::failure(format!("unreadable provenance: {e}")))?;
    let mut mismatches = Vec::new();
    if prov.command != command {
        mismatches.push(format!(
            "run was made by `{}`, not `{command}`",
            prov.command
        ));
    }
    let mut checked = 1;
    match fs::read(root.join(CONFIG_FILE)) {
        Ok(bytes) if sha256_hex(&bytes) == prov.config_hash => {}
        Ok(_) => mismatches.push(format!("{CONFIG_FILE}: hash differs")),
        Err(e) => mismatches.push(format!("{CONFIG_FILE}: {e}")),
    }
    if let Some(bytes) = config {
        checked += 1;
        if sha256_hex(bytes) != prov.config_hash {
            mismatches.push("resolved config differs from the recorded run".into());
        }
    }
    for (name, want) in &prov.files {
        checked += 1;
        match sha256_file(&root.join(name)) {
            Ok(h) if &h == want => {}
            Ok(_) => mismatches.push(format!("{name}: hash differs")),
            Err(e) => mismatches.push(format!("{name}: {e}")),
        }
    }
    Ok(CheckReport {
        ok: mismatches.is_empty(),
        checked,
        mismatches,
    })
}
