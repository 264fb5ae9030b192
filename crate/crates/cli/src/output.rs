//! Transcript, event log and metrics files.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use dobby_core::session::Step;
use dobby_core::SessionMetrics;

/// `lab/run.txt` with suffix `events.jsonl` becomes `lab/run.events.jsonl`.
pub fn sidecar(transcript: &Path, suffix: &str) -> PathBuf {
    let stem = transcript.file_stem().unwrap_or_default().to_string_lossy();
    transcript.with_file_name(format!("{stem}.{suffix}"))
}

/// Every line is flushed as soon as it is written, so a crash loses nothing
/// already shown.
#[derive(Default)]
pub struct Output {
    echo: Option<Box<dyn Write + Send>>,
    transcript: Option<File>,
    events: Option<File>,
    metrics: Option<PathBuf>,
}

impl Output {
    pub fn new(echo: Option<Box<dyn Write + Send>>, transcript: Option<&Path>) -> io::Result<Self> {
        let mut out = Output {
            echo,
            ..Output::default()
        };
        if let Some(path) = transcript {
            out.transcript = Some(File::create(path)?);
            out.events = Some(File::create(sidecar(path, "events.jsonl"))?);
            out.metrics = Some(sidecar(path, "metrics.json"));
        }
        Ok(out)
    }

    pub fn write_step(&mut self, step: &Step) -> io::Result<()> {
        for entry in &step.transcript {
            let line = entry.render();
            if let Some(w) = self.echo.as_mut() {
                w.write_all(line.as_bytes())?;
                w.flush()?;
            }
            if let Some(f) = self.transcript.as_mut() {
                f.write_all(line.as_bytes())?;
                f.flush()?;
            }
        }
        if let Some(f) = self.events.as_mut() {
            for e in &step.events {
                let mut line = serde_json::to_string(e).map_err(io::Error::other)?;
                line.push('\n');
                f.write_all(line.as_bytes())?;
            }
            f.flush()?;
        }
        Ok(())
    }

    /// Writes to the console only, never to the transcript.
    pub fn info(&mut self, text: &str) -> io::Result<()> {
        if let Some(w) = self.echo.as_mut() {
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        Ok(())
    }

    pub fn finish(&mut self, metrics: &SessionMetrics) -> io::Result<()> {
        if let Some(path) = &self.metrics {
            std::fs::write(path, serde_json::to_string_pretty(metrics).map_err(io::Error::other)?)?;
        }
        Ok(())
    }
}
