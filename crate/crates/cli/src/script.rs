//! Console input lines: plain text is an utterance, `/`-commands drive the session.

use dobby_core::speech::{TextTranscriber, Transcriber};
use dobby_core::Input;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Line {
    Input(Input),
    Status,
    Quit,
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("unknown command `{0}` (try /wait <secs>, /idle, /cancel, /continue, /status, /quit)")]
    UnknownCommand(String),
    #[error("/wait needs a non-negative number of seconds, got `{0}`")]
    BadWait(String),
}

pub fn parse_line(raw: &str) -> Result<Line, LineError> {
    let trimmed = raw.trim();
    let Some(cmd) = trimmed.strip_prefix('/') else {
        return Ok(match TextTranscriber.transcribe(raw) {
            Some(text) => Line::Input(Input::Utterance { text }),
            None => Line::Blank,
        });
    };
    let (name, arg) = cmd.split_once(char::is_whitespace).unwrap_or((cmd, ""));
    let arg = arg.trim();
    Ok(match name {
        "wait" => {
            let secs: f64 = arg.parse().map_err(|_| LineError::BadWait(arg.into()))?;
            if !(secs >= 0.0 && secs.is_finite()) {
                return Err(LineError::BadWait(arg.into()));
            }
            Line::Input(Input::Advance {
                ms: (secs * 1000.0).round() as u64,
            })
        }
        "idle" => Line::Input(Input::Idle),
        "cancel" => Line::Input(Input::Cancel),
        "continue" => Line::Input(Input::Continue),
        "status" => Line::Status,
        "quit" | "exit" => Line::Quit,
        other => return Err(LineError::UnknownCommand(other.into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        assert_eq!(
            parse_line("  I'd like an apple. ").unwrap(),
            Line::Input(Input::Utterance {
                text: "I'd like an apple.".into()
            })
        );
        assert_eq!(parse_line("/wait 1.5").unwrap(), Line::Input(Input::Advance { ms: 1500 }));
        assert_eq!(parse_line("/cancel").unwrap(), Line::Input(Input::Cancel));
        assert_eq!(parse_line("/quit").unwrap(), Line::Quit);
        assert_eq!(parse_line("   ").unwrap(), Line::Blank);
        assert!(matches!(parse_line("/wait -1"), Err(LineError::BadWait(_))));
        assert!(matches!(parse_line("/dance"), Err(LineError::UnknownCommand(_))));
    }
}
