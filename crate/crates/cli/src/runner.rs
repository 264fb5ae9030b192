//! Drives a session from console lines, in replay or interactive form.

use std::io;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use dobby_core::executor::TICK_MS;
use dobby_core::session::Step;
use dobby_core::{Input, Session};

use crate::output::Output;
use crate::script::{parse_line, Line};

/// Converts wall-clock time into whole simulation ticks.
#[derive(Debug)]
pub struct Pacer {
    speed: f64,
    last: Instant,
    carry_ms: f64,
}

impl Pacer {
    pub fn new(speed: f64) -> Self {
        Pacer {
            speed,
            last: Instant::now(),
            carry_ms: 0.0,
        }
    }

    pub fn realtime(&self) -> bool {
        self.speed > 0.0
    }

    /// Wall time per simulation tick.
    pub fn tick_interval(&self) -> Duration {
        Duration::from_secs_f64(TICK_MS as f64 / 1000.0 / self.speed.max(1e-9))
    }

    /// Simulated milliseconds owed since the previous call, in whole ticks.
    pub fn due_ms(&mut self) -> u64 {
        if !self.realtime() {
            return 0;
        }
        let now = Instant::now();
        self.carry_ms += now.duration_since(self.last).as_secs_f64() * 1000.0 * self.speed;
        self.last = now;
        let ticks = (self.carry_ms / TICK_MS as f64).floor();
        self.carry_ms -= ticks * TICK_MS as f64;
        ticks as u64 * TICK_MS
    }

    pub fn reset(&mut self) {
        self.last = Instant::now();
        self.carry_ms = 0.0;
    }
}

pub struct Runner {
    pub session: Session,
    pub output: Output,
    pacer: Pacer,
}

impl Runner {
    pub fn new(session: Session, output: Output, speed: f64) -> Self {
        Runner {
            session,
            output,
            pacer: Pacer::new(speed),
        }
    }

    pub fn apply(&mut self, input: &Input) -> io::Result<Step> {
        let step = self.session.handle(input);
        self.output.write_step(&step)?;
        Ok(step)
    }

    /// Advances simulated time, sleeping in step with it when paced.
    pub fn wait(&mut self, ms: u64) -> io::Result<()> {
        if !self.pacer.realtime() {
            self.apply(&Input::Advance { ms })?;
            return Ok(());
        }
        let mut left = ms;
        while left > 0 {
            let dt = left.min(TICK_MS);
            left -= dt;
            self.apply(&Input::Advance { ms: dt })?;
            std::thread::sleep(self.pacer.tick_interval().mul_f64(dt as f64 / TICK_MS as f64));
        }
        Ok(())
    }

    /// Returns `false` once the session should end.
    fn line(&mut self, raw: &str) -> io::Result<bool> {
        match parse_line(raw) {
            Ok(Line::Input(Input::Advance { ms })) => self.wait(ms)?,
            Ok(Line::Input(input)) => {
                self.apply(&input)?;
            }
            Ok(Line::Status) => {
                let status = serde_json::json!({
                    "session": self.session.snapshot(),
                    "metrics": self.session.metrics(),
                });
                self.output.info(&status.to_string())?;
            }
            Ok(Line::Quit) => return Ok(false),
            Ok(Line::Blank) => {}
            Err(e) => self.output.info(&format!("error: {e}"))?,
        }
        Ok(true)
    }

    /// Runs the lines in order. Time passes only on `/wait`.
    pub fn run_replay<I, S>(&mut self, lines: I) -> io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for l in lines {
            if !self.line(l.as_ref())? {
                break;
            }
        }
        Ok(())
    }

    /// Reads lines as they arrive while simulated time keeps running.
    pub fn run_interactive(&mut self, lines: Receiver<String>) -> io::Result<()> {
        self.pacer.reset();
        loop {
            let next = if self.pacer.realtime() {
                match lines.recv_timeout(self.pacer.tick_interval()) {
                    Ok(l) => Some(l),
                    Err(RecvTimeoutError::Timeout) => None,
                    Err(RecvTimeoutError::Disconnected) => return Ok(()),
                }
            } else {
                match lines.recv() {
                    Ok(l) => Some(l),
                    Err(_) => return Ok(()),
                }
            };
            let due = self.pacer.due_ms();
            if due > 0 {
                self.apply(&Input::Advance { ms: due })?;
            }
            if let Some(l) = next {
                // an explicit /wait is on top of the running clock
                if !self.line(&l)? {
                    return Ok(());
                }
                self.pacer.reset();
            }
        }
    }

    pub fn finish(mut self) -> io::Result<Session> {
        self.output.finish(&self.session.metrics())?;
        Ok(self.session)
    }
}
