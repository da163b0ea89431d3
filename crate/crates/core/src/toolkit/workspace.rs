use std::io;
use std::path::{Component, Path, PathBuf};
use std::time::SystemTime;

/// The directory an agent works in. Every file tool resolves paths through
/// [`Workspace::resolve`], which refuses anything outside the root.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    created_at: SystemTime,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SandboxError {
    #[error("path is empty")]
    Empty,
    #[error("path `{0}` is outside the workspace")]
    Escape(String),
}

impl Workspace {
    /// Open an existing directory as a workspace.
    pub fn open(root: impl AsRef<Path>) -> io::Result<Self> {
        let root = root.as_ref().canonicalize()?;
        if !root.is_dir() {
            return Err(io::Error::new(io::ErrorKind::NotADirectory, format!("{} is not a directory", root.display())));
        }
        Ok(Self { root, created_at: SystemTime::now() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn created_at(&self) -> SystemTime {
        self.created_at
    }

    /// Resolve a tool-supplied path to an absolute path inside the root.
    ///
    /// Relative paths are taken from the root. Absolute paths are accepted
    /// only when they already point inside the root. Any `..` component is
    /// refused, as is a path whose existing prefix runs through a symlink
    /// leading outside.
    pub fn resolve(&self, path: &str) -> Result<PathBuf, SandboxError> {
        let escape = || SandboxError::Escape(path.to_string());
        if path.trim().is_empty() {
            return Err(SandboxError::Empty);
        }
        let given = Path::new(path);
        let relative = if given.is_absolute() {
            given.strip_prefix(&self.root).map_err(|_| escape())?
        } else {
            given
        };
        let mut resolved = self.root.clone();
        let mut probing = true;
        for component in relative.components() {
            match component {
                Component::Normal(part) => resolved.push(part),
                Component::CurDir => continue,
                _ => return Err(escape()),
            }
            if !probing {
                continue;
            }
            match std::fs::symlink_metadata(&resolved) {
                Ok(meta) if meta.file_type().is_symlink() => {
                    let target = resolved.canonicalize().map_err(|_| escape())?;
                    if !target.starts_with(&self.root) {
                        return Err(escape());
                    }
                }
                Ok(_) => {}
                // Nothing below a missing component can be a symlink.
                Err(_) => probing = false,
            }
        }
        Ok(resolved)
    }

    /// Display form of an absolute path inside the workspace, `/`-separated.
    pub fn display_path(&self, abs: &Path) -> String {
        let rel = abs.strip_prefix(&self.root).unwrap_or(abs);
        let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        if parts.is_empty() {
            ".".to_string()
        } else {
            parts.join("/")
        }
    }
}
