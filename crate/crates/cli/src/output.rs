//! Run directory layout, provenance stamping and cleanup of partial outputs.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use qubit_readout::config::RunConfig;

pub const MODELS: &str = "models";
pub const REPORTS: &str = "reports";
pub const LOGS: &str = "logs";
pub const RESOLVED_CONFIG: &str = "resolved-config.toml";

/// Output directory of one command. Everything it creates is removed again
/// unless [`RunDir::commit`] is called.
pub struct RunDir {
    root: PathBuf,
    created_root: bool,
    created: Vec<PathBuf>,
    committed: bool,
    pub seed: u64,
    pub config_sha256: String,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    config_sha256: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

impl RunDir {
    pub fn create(root: &Path, config: &RunConfig) -> Result<Self> {
        let created_root = !root.exists();
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        let resolved = config.to_toml();
        let mut dir = RunDir {
            root: root.to_path_buf(),
            created_root,
            created: Vec::new(),
            committed: false,
            seed: config.seed,
            config_sha256: hex::encode(Sha256::digest(resolved.as_bytes())),
        };
        for sub in [MODELS, REPORTS, LOGS] {
            let p = root.join(sub);
            if !p.exists() {
                fs::create_dir(&p)?;
                dir.created.push(p);
            }
        }
        dir.write_bytes(RESOLVED_CONFIG, resolved.as_bytes())?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registers `rel` for cleanup and returns its absolute path.
    pub fn track(&mut self, rel: impl AsRef<Path>) -> PathBuf {
        let p = self.root.join(rel);
        if !p.exists() {
            self.created.push(p.clone());
        }
        p
    }

    pub fn write_bytes(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.track(rel);
        fs::write(&p, bytes).with_context(|| format!("cannot write {}", p.display()))?;
        Ok(p)
    }

    /// Writes `body` as JSON together with the command, seed and config hash.
    pub fn write_report<T: Serialize>(&mut self, name: &str, command: &str, body: &T) -> Result<PathBuf> {
        let stamped = Stamped {
            command,
            seed: self.seed,
            config_sha256: &self.config_sha256,
            body,
        };
        let json = serde_json::to_vec_pretty(&stamped)?;
        self.write_bytes(Path::new(REPORTS).join(name), &json)
    }

    pub fn log_file(&mut self, command: &str) -> Result<File> {
        let p = self.track(Path::new(LOGS).join(format!("{command}.log")));
        Ok(File::create(p)?)
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        if self.created_root {
            let _ = fs::remove_dir_all(&self.root);
            return;
        }
        for p in self.created.iter().rev() {
            if p.is_dir() {
                let _ = fs::remove_dir_all(p);
            } else {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Log sink writing to standard error and, once attached, a log file.
#[derive(Clone, Default)]
pub struct LogSink(Arc<Mutex<Option<File>>>);

impl LogSink {
    pub fn attach(&self, file: File) {
        *self.0.lock().unwrap() = Some(file);
    }
}

impl Write for LogSink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        io::stderr().write_all(buf)?;
        if let Some(f) = self.0.lock().unwrap().as_mut() {
            f.write_all(buf)?;
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        io::stderr().flush()?;
        if let Some(f) = self.0.lock().unwrap().as_mut() {
            f.flush()?;
        }
        Ok(())
    }
}
