//! Command-line front end and console bridge for the Dobby tour-guide agent.

pub mod config;
pub mod frames;
pub mod output;
pub mod runner;
pub mod script;
pub mod service;

use std::io::{self, BufRead};
use std::net::SocketAddr;
use std::sync::mpsc;

use config::{Cli, ConfigError};
use dobby_core::Session;
use output::Output;
use runner::Runner;

struct Prepared {
    session: Session,
    replay: Option<Vec<String>>,
}

fn prepare(cli: &Cli) -> Result<Prepared, ConfigError> {
    if cli.serve.is_some() && cli.replay.is_some() {
        return Err(ConfigError::Invalid("--serve and --replay cannot be combined".into()));
    }
    let lab = config::load_lab(cli)?;
    let replay = cli.replay.as_deref().map(config::load_replay).transpose()?;
    let backend = config::chat_backend(cli)?;
    let embeddings = config::embeddings(cli)?;
    let session = config::build_session(cli, &lab, backend, embeddings)?;
    Ok(Prepared { session, replay })
}

/// Runs the program and returns its exit code.
pub fn run(cli: Cli) -> i32 {
    let prepared = match prepare(&cli) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("dobby: {e}");
            return e.exit_code();
        }
    };
    match drive(&cli, prepared) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("dobby: {e}");
            1
        }
    }
}

fn drive(cli: &Cli, prepared: Prepared) -> io::Result<()> {
    let output = Output::new(Some(Box::new(io::stdout())), cli.transcript.as_deref())?;
    let mut runner = Runner::new(prepared.session, output, cli.speed);

    if let Some(port) = cli.serve {
        let addr = SocketAddr::new(cli.host, port);
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let session = rt.block_on(async move {
            let handle = service::start_service(runner, cli.speed, addr).await?;
            eprintln!("listening on ws://{}/ws (status at http://{}/status)", handle.addr, handle.addr);
            tokio::signal::ctrl_c().await?;
            handle.shutdown().await
        })?;
        drop(rt);
        drop(session);
        return Ok(());
    }

    if let Some(lines) = prepared.replay {
        runner.run_replay(lines)?;
    } else {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in io::stdin().lock().lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        runner.run_interactive(rx)?;
    }
    runner.finish()?;
    Ok(())
}
