use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Failure with its exit status: 2 for usage or config problems, 1 otherwise.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Self::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        Self::Runtime(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(e) | Self::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::Runtime(e)
    }
}

pub trait UsageContext<T> {
    /// Marks an error as a usage/config problem, with context.
    fn usage_ctx(self, ctx: impl fmt::Display) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> UsageContext<T> for Result<T, E> {
    fn usage_ctx(self, ctx: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::Usage(e.into().context(ctx.to_string())))
    }
}

/// Reads a JSON config; a missing or malformed file is a usage error.
pub fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).usage_ctx(format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).usage_ctx(format!("parsing config {}", path.display()))
}

/// Writes `bytes` to a temporary sibling, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", path.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating directory {}", path.display()))
}
