//! Command-line flags and session construction.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use dobby_core::backend::scripted::{Scenario, ScenarioError};
use dobby_core::chat::{ChatMessage, FunctionDef};
use dobby_core::backend::{BackendError, ChatBackend, HttpChatBackend, HttpConfig, HttpEmbedder, ScriptedBackend};
use dobby_core::baseline::{BaselineError, BaselineGuide};
use dobby_core::grounding::{EmbeddingProvider, TrigramEmbedder, DEFAULT_THRESHOLD};
use dobby_core::prompt::DEFAULT_PERSONA;
use dobby_core::sim::{Lab, LabError};
use dobby_core::{AgentConfig, Engine, Mode, Session};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Conversational,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbeddingsArg {
    Trigram,
    Http,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendArg {
    Scripted(PathBuf),
    Http,
}

impl std::str::FromStr for BackendArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            _ if s == "http" => Ok(BackendArg::Http),
            Some(("scripted", path)) if !path.is_empty() => Ok(BackendArg::Scripted(path.into())),
            _ => Err(format!("expected `scripted:<path>` or `http`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "dobby", version, about = "Conversational tour-guide robot in a simulated lab")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "conversational")]
    pub mode: ModeArg,

    /// `scripted:<scenario.json>` or `http`.
    #[arg(long, default_value = "http")]
    pub backend: BackendArg,

    #[arg(long, value_enum, default_value = "trigram")]
    pub embeddings: EmbeddingsArg,

    #[arg(long)]
    pub destinations: PathBuf,

    #[arg(long)]
    pub topics: Option<PathBuf>,

    #[arg(long)]
    pub items: Option<PathBuf>,

    /// Destination id the robot starts at and returns to. Defaults to the first destination.
    #[arg(long)]
    pub user_location: Option<String>,

    /// File replacing the default persona prompt.
    #[arg(long)]
    pub persona: Option<PathBuf>,

    #[arg(long)]
    pub tour_mode: bool,

    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,

    #[arg(long, default_value_t = 3)]
    pub retries: usize,

    #[arg(long, default_value_t = 6.0)]
    pub silence_timeout: f64,

    /// Transcript file; `.events.jsonl` and `.metrics.json` siblings are written next to it.
    #[arg(long)]
    pub transcript: Option<PathBuf>,

    /// Serve the WebSocket console bridge on this port instead of reading stdin.
    #[arg(long)]
    pub serve: Option<u16>,

    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,

    /// Input lines to replay: a scenario JSON with `inputs`, or a text file.
    #[arg(long)]
    pub replay: Option<PathBuf>,

    /// Simulated seconds per wall-clock second. 0 lets time pass only on `/wait`.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Lab { path: PathBuf, source: LabError },
    #[error(transparent)]
    LabOther(LabError),
    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("invalid settings: {0}")]
    Invalid(String),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

impl ConfigError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn read_opt(path: &Option<PathBuf>) -> Result<String, ConfigError> {
    path.as_deref().map(read).transpose().map(Option::unwrap_or_default)
}

pub fn load_lab(cli: &Cli) -> Result<Lab, ConfigError> {
    let destinations = read(&cli.destinations)?;
    let items = read_opt(&cli.items)?;
    let topics = read_opt(&cli.topics)?;
    Lab::parse(&destinations, &items, &topics, cli.user_location.as_deref()).map_err(|e| {
        let path = match &e {
            LabError::Items(_) => cli.items.clone(),
            LabError::Topics(_) => cli.topics.clone(),
            LabError::Destinations(_) | LabError::NoDestinations => Some(cli.destinations.clone()),
            _ => None,
        };
        match path {
            Some(path) => ConfigError::Lab { path, source: e },
            None => ConfigError::LabOther(e),
        }
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    Scenario::from_json(&read(path)?).map_err(|source| ConfigError::Scenario {
        path: path.to_path_buf(),
        source,
    })
}

/// Replay lines from a scenario's `inputs` or a plain text file.
pub fn load_replay(path: &Path) -> Result<Vec<String>, ConfigError> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(load_scenario(path)?.inputs)
    } else {
        Ok(read(path)?.lines().map(str::to_string).collect())
    }
}

pub fn agent_config(cli: &Cli) -> Result<AgentConfig, ConfigError> {
    if cli.silence_timeout.is_nan() || cli.silence_timeout <= 0.0 {
        return Err(ConfigError::Invalid("--silence-timeout must be positive".into()));
    }
    if !(cli.speed >= 0.0 && cli.speed.is_finite()) {
        return Err(ConfigError::Invalid("--speed must be a non-negative number".into()));
    }
    let persona = match &cli.persona {
        Some(p) => read(p)?,
        None => DEFAULT_PERSONA.to_string(),
    };
    Ok(AgentConfig {
        persona_prompt: persona,
        grounding_threshold: cli.threshold,
        max_grounding_retries: cli.retries,
        silence_timeout_ms: (cli.silence_timeout * 1000.0).round() as u64,
        tour_mode: cli.tour_mode,
        ..AgentConfig::default()
    })
}

/// Stands in for the chat backend in baseline mode, which never queries one.
pub struct NoChat;

impl ChatBackend for NoChat {
    fn complete(&self, _: &[ChatMessage], _: &[FunctionDef]) -> Result<ChatMessage, BackendError> {
        Err(BackendError::Unavailable("baseline mode has no chat backend".into()))
    }
}

/// Baseline mode gets [`NoChat`] so no credentials are needed.
pub fn chat_backend(cli: &Cli) -> Result<Arc<dyn ChatBackend>, ConfigError> {
    if mode(cli) == Mode::Baseline {
        return Ok(Arc::new(NoChat));
    }
    Ok(match &cli.backend {
        BackendArg::Scripted(path) => Arc::new(ScriptedBackend::new(load_scenario(path)?)),
        BackendArg::Http => Arc::new(HttpChatBackend::new(HttpConfig::from_env()?)?),
    })
}

pub fn embeddings(cli: &Cli) -> Result<Arc<dyn EmbeddingProvider>, ConfigError> {
    Ok(match cli.embeddings {
        EmbeddingsArg::Trigram => Arc::new(TrigramEmbedder),
        EmbeddingsArg::Http => Arc::new(HttpEmbedder::new(HttpConfig::from_env()?)?),
    })
}

/// Builds a session. The chat backend is only consulted in conversational mode.
pub fn build_session(
    cli: &Cli,
    lab: &Lab,
    backend: Arc<dyn ChatBackend>,
    embeddings: Arc<dyn EmbeddingProvider>,
) -> Result<Session, ConfigError> {
    let config = agent_config(cli)?;
    Ok(match mode(cli) {
        Mode::Conversational => Session::conversational(
            Engine::new(config, lab, backend, embeddings).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        ),
        Mode::Baseline => Session::baseline(BaselineGuide::new(lab, embeddings, config.grounding_threshold)?),
    })
}

pub fn mode(cli: &Cli) -> Mode {
    match cli.mode {
        ModeArg::Conversational => Mode::Conversational,
        ModeArg::Baseline => Mode::Baseline,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_flag() {
        assert_eq!("http".parse::<BackendArg>().unwrap(), BackendArg::Http);
        assert_eq!(
            "scripted:fixtures/fig4.json".parse::<BackendArg>().unwrap(),
            BackendArg::Scripted("fixtures/fig4.json".into())
        );
        assert!("scripted:".parse::<BackendArg>().is_err());
        assert!("gpt".parse::<BackendArg>().is_err());
    }

    #[test]
    fn missing_destinations_names_the_path() {
        let cli = Cli::parse_from(["dobby", "--destinations", "/nonexistent/dest.txt"]);
        let err = load_lab(&cli).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dest.txt"));
        assert_eq!(err.exit_code(), 2);
    }
}
