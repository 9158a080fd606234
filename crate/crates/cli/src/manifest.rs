use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use impulse_dividend::{curves, simulate, verify};

/// Every tolerance a run may depend on.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub basis_tol: f64,
    pub qvi_rtol: f64,
    pub knot_gap_tol: f64,
    pub fd_rtol: f64,
    pub algebraic_rtol: f64,
    pub cstar_cinf_rtol: f64,
    pub dp_increment_tol: f64,
}

impl Tolerances {
    pub fn new(basis_tol: f64) -> Self {
        Self {
            basis_tol,
            qvi_rtol: verify::QVI_RTOL,
            knot_gap_tol: verify::KNOT_GAP_TOL,
            fd_rtol: verify::FD_RTOL,
            algebraic_rtol: verify::ALGEBRAIC_RTOL,
            cstar_cinf_rtol: curves::CSTAR_CINF_RTOL,
            dp_increment_tol: simulate::DP_INCREMENT_TOL,
        }
    }
}

/// Sidecar record written next to each output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<PathBuf>,
    pub argv: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub tolerances: Tolerances,
    /// Subcommand-specific settings and results (seed, paths, grid, ...).
    pub details: Value,
}

pub struct Recorder {
    start: Instant,
    subcommand: String,
    config: Option<PathBuf>,
    tol: Tolerances,
    outputs: Vec<PathBuf>,
    pub details: serde_json::Map<String, Value>,
}

/// Prints to stdout; a closed pipe (as with `| head`) is not an error.
pub fn print_stdout(text: &str) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", text.trim_end()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl Recorder {
    pub fn new(subcommand: &str, config: Option<&Path>, basis_tol: f64) -> Self {
        Self {
            start: Instant::now(),
            subcommand: subcommand.into(),
            config: config.map(Path::to_path_buf),
            tol: Tolerances::new(basis_tol),
            outputs: Vec::new(),
            details: serde_json::Map::new(),
        }
    }

    pub fn detail(&mut self, key: &str, v: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    /// Writes `text` to `out`, or to stdout when there is no path.
    pub fn emit(&mut self, out: Option<&Path>, text: &str) -> std::io::Result<()> {
        match out {
            Some(p) => {
                std::fs::write(p, text)?;
                self.outputs.push(p.to_path_buf());
            }
            None => print_stdout(text)?,
        }
        Ok(())
    }

    /// One manifest per output file, each listing all outputs of the run.
    pub fn finish(self) -> std::io::Result<()> {
        let m = RunManifest {
            subcommand: self.subcommand,
            config: self.config,
            argv: std::env::args().collect(),
            outputs: self.outputs.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            tolerances: self.tol,
            details: Value::Object(self.details),
        };
        let text = serde_json::to_string_pretty(&m).map_err(std::io::Error::other)?;
        for out in &self.outputs {
            std::fs::write(manifest_path(out), &text)?;
        }
        Ok(())
    }
}
