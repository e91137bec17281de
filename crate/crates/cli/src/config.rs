//! Config file, error type and output helpers shared by the subcommands.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{ControlArgs, CurveArgs, FitArgs, FkArgs, ValidateArgs, WorkspaceArgs};

/// Contents of `--config FILE`. Command-line flags win over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub curve: CurveArgs,
    pub validate: ValidateArgs,
    pub fit: FitArgs,
    pub fk: FkArgs,
    pub workspace: WorkspaceArgs,
    pub control: ControlArgs,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(lasso_core::Error),
    Input(String),
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 1 for numerical non-convergence, 2 for everything the caller can fix.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(lasso_core::Error::NonConvergence { .. }) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<lasso_core::Error> for CliError {
    fn from(e: lasso_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Output directory, created on first use.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn json<S: serde::Serialize>(&self, name: &str, value: &S) -> CliResult<PathBuf> {
        self.write(name, lasso_core::io::to_json_string(value)?)
    }
}
