use std::io::{self, Read};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitCode {
    Exited(i32),
    TimedOut,
}

impl ExitCode {
    pub fn success(self) -> bool {
        self == ExitCode::Exited(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecResult {
    pub exit: ExitCode,
    pub stdout: String,
    pub stderr: String,
    pub duration: Duration,
    pub timeout: Duration,
}

impl ExecResult {
    /// Output as shown to the model. Durations are left out so replays
    /// produce identical text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.stdout);
        if !self.stderr.is_empty() {
            if !out.is_empty() && !out.ends_with('\n') {
                out.push('\n');
            }
            out.push_str("[stderr]\n");
            out.push_str(&self.stderr);
        }
        if !out.is_empty() && !out.ends_with('\n') {
            out.push('\n');
        }
        match self.exit {
            ExitCode::Exited(code) => out.push_str(&format!("[exit code: {code}]")),
            ExitCode::TimedOut => out.push_str(&format!("[timed out after {}s]", self.timeout.as_secs())),
        }
        out
    }
}

fn exit_code(status: ExitStatus) -> i32 {
    status.code().unwrap_or_else(|| 128 + status.signal().unwrap_or(0))
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut pipe) = pipe {
            let _ = pipe.read_to_end(&mut buf);
        }
        buf
    })
}

fn kill_group(child: &Child) {
    // The child leads its own process group; take down everything in it.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
}

/// Run `cmd` with `sh -c` in a fresh subshell rooted at `cwd`.
///
/// The command gets its own process group. Whatever is left of the group
/// when the shell exits, or when the timeout fires, is killed.
pub fn run_command(cwd: &Path, cmd: &str, timeout: Duration) -> io::Result<ExecResult> {
    let start = Instant::now();
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn()?;
    let stdout = drain(child.stdout.take());
    let stderr = drain(child.stderr.take());

    let exit = loop {
        if let Some(status) = child.try_wait()? {
            kill_group(&child);
            break ExitCode::Exited(exit_code(status));
        }
        if start.elapsed() >= timeout {
            kill_group(&child);
            let _ = child.wait();
            break ExitCode::TimedOut;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let duration = start.elapsed();
    let stdout = stdout.join().unwrap_or_default();
    let stderr = stderr.join().unwrap_or_default();
    Ok(ExecResult {
        exit,
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        duration,
        timeout,
    })
}
