use std::fmt;
use std::path::PathBuf;

/// One rejected configuration entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl ConfigErrors {
    pub fn has(&self, key: &str) -> bool {
        self.0.iter().any(|e| e.key == key)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration:\n{0}")]
    Config(ConfigErrors),
    #[error("{module}: {source}")]
    Compute {
        module: &'static str,
        #[source]
        source: idslab_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 1 usage/config error, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Config(_) => 1,
            RunError::Compute { source, .. } => match source {
                e if e.is_numerical() => 2,
                idslab_core::Error::Degenerate(_) => 2,
                idslab_core::Error::AtRealization { .. } => 2,
                _ => 1,
            },
            RunError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RunError {
        let path = path.into();
        move |source| RunError::Io { path, source }
    }
}

pub(crate) trait ComputeContext<T> {
    fn module(self, module: &'static str) -> Result<T, RunError>;
}

impl<T> ComputeContext<T> for Result<T, idslab_core::Error> {
    fn module(self, module: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Compute { module, source })
    }
}
