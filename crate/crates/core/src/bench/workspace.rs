use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::task::{is_contained_relative, TaskInstance};
use crate::toolkit::Workspace;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("workspace root {0} exists and is not empty")]
    Collision(PathBuf),
    #[error("seed path `{0}` escapes the workspace")]
    SeedEscape(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

/// Create `root` and write the task's seed files into it byte for byte.
/// `root` must be absent or an empty directory.
pub fn materialize_workspace(task: &TaskInstance, root: &Path) -> Result<Workspace, BenchError> {
    if root.exists() {
        let mut entries = fs::read_dir(root).map_err(io_at(root))?;
        if entries.next().is_some() {
            return Err(BenchError::Collision(root.to_path_buf()));
        }
    }
    fs::create_dir_all(root).map_err(io_at(root))?;
    for seed in &task.workspace_seed {
        if !is_contained_relative(&seed.path) {
            return Err(BenchError::SeedEscape(seed.path.clone()));
        }
        let path = root.join(&seed.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_at(parent))?;
        }
        fs::write(&path, &seed.contents).map_err(io_at(&path))?;
    }
    Workspace::open(root).map_err(io_at(root))
}

/// Recursive copy that keeps symlinks as links. `dst` must not exist.
pub fn copy_tree(src: &Path, dst: &Path) -> Result<(), BenchError> {
    if dst.exists() {
        return Err(BenchError::Collision(dst.to_path_buf()));
    }
    for entry in WalkDir::new(src).follow_links(false).sort_by_file_name() {
        let entry = entry.map_err(|e| BenchError::Io { path: src.to_path_buf(), source: e.into() })?;
        let rel = entry.path().strip_prefix(src).expect("walk stays under src");
        let target = dst.join(rel);
        let kind = entry.file_type();
        if kind.is_dir() {
            fs::create_dir_all(&target).map_err(io_at(&target))?;
        } else if kind.is_symlink() {
            let link = fs::read_link(entry.path()).map_err(io_at(entry.path()))?;
            std::os::unix::fs::symlink(&link, &target).map_err(io_at(&target))?;
        } else {
            fs::copy(entry.path(), &target).map_err(io_at(&target))?;
        }
    }
    Ok(())
}

/// SHA-256 over every entry below `root`: relative path, kind, and file
/// bytes or link target, in sorted order. Equal trees have equal digests.
pub fn tree_digest(root: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    for entry in WalkDir::new(root).follow_links(false).sort_by_file_name() {
        let entry = entry.map_err(io::Error::from)?;
        let rel = entry.path().strip_prefix(root).expect("walk stays under root");
        hasher.update(rel.as_os_str().as_encoded_bytes());
        hasher.update([0]);
        let kind = entry.file_type();
        if kind.is_dir() {
            hasher.update(b"d");
        } else if kind.is_symlink() {
            hasher.update(b"l");
            hasher.update(fs::read_link(entry.path())?.as_os_str().as_encoded_bytes());
        } else {
            hasher.update(b"f");
            let bytes = fs::read(entry.path())?;
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
        hasher.update([0]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// A directory name for a task id. Ids that need changing get a short hash
/// suffix so distinct ids never share a directory.
pub fn sanitize_task_id(id: &str) -> String {
    let clean: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    let clean = if clean.starts_with('.') { format!("_{clean}") } else { clean };
    if clean == id {
        clean
    } else {
        let digest = hex::encode(Sha256::digest(id.as_bytes()));
        format!("{clean}-{}", &digest[..8])
    }
}

/// `runs/<task>/<variant>-<run>`: the private directory of one run.
pub fn run_dir(runs_root: &Path, task_id: &str, variant: &str, run: usize) -> PathBuf {
    runs_root.join(sanitize_task_id(task_id)).join(format!("{variant}-{run}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::SeedFile;

    fn task(seeds: Vec<SeedFile>) -> TaskInstance {
        TaskInstance {
            id: "t".into(),
            language_tag: String::new(),
            initial_state: "s".into(),
            task_description: "d".into(),
            output_state: "o".into(),
            validation_steps: "v".into(),
            validation_commands: vec!["true".into()],
            workspace_seed: seeds,
        }
    }

    #[test]
    fn seeds_are_written_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("ws");
        let seeds = vec![SeedFile::text("a.txt", "x\r\ny"), SeedFile { path: "b/c.bin".into(), contents: vec![0, 255, 1] }];
        let ws = materialize_workspace(&task(seeds), &root).unwrap();
        assert_eq!(fs::read(ws.root().join("a.txt")).unwrap(), b"x\r\ny");
        assert_eq!(fs::read(ws.root().join("b/c.bin")).unwrap(), [0, 255, 1]);
        assert!(matches!(materialize_workspace(&task(vec![]), &root), Err(BenchError::Collision(_))));
    }

    #[test]
    fn empty_seed_gives_empty_workspace() {
        let dir = tempfile::tempdir().unwrap();
        let ws = materialize_workspace(&task(vec![]), dir.path()).unwrap();
        assert_eq!(fs::read_dir(ws.root()).unwrap().count(), 0);
    }

    #[test]
    fn copy_preserves_digest() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src");
        materialize_workspace(&task(vec![SeedFile::text("a/b.txt", "hi"), SeedFile::text("c", "")]), &src).unwrap();
        std::os::unix::fs::symlink("a/b.txt", src.join("link")).unwrap();
        let dst = dir.path().join("dst");
        copy_tree(&src, &dst).unwrap();
        assert_eq!(tree_digest(&src).unwrap(), tree_digest(&dst).unwrap());
        fs::write(dst.join("c"), "changed").unwrap();
        assert_ne!(tree_digest(&src).unwrap(), tree_digest(&dst).unwrap());
    }

    #[test]
    fn task_ids_become_safe_directory_names() {
        assert_eq!(sanitize_task_id("toy-add"), "toy-add");
        let s = sanitize_task_id("HumanEval/0");
        assert!(s.starts_with("HumanEval_0-") && s.len() == "HumanEval_0-".len() + 8);
        assert_ne!(sanitize_task_id("a/b"), sanitize_task_id("a_b"));
        assert!(!sanitize_task_id("..").contains('/'));
        assert_ne!(sanitize_task_id(".."), "..");
    }
}
