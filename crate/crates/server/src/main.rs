use std::path::PathBuf;

use clap::Parser;
use nudge_server::{build_service, serve, ServerConfig};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(version, about = "Live reaction service (HTTP + event stream)")]
struct Args {
    /// TOML config file; NUDGE_* environment variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for session ids and tokens. Random when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let cfg = ServerConfig::load(args.config.as_deref())?;
    let service = build_service(&cfg, args.seed.unwrap_or_else(rand::random))?;
    let listener = tokio::net::TcpListener::bind(cfg.addr()).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %cfg.data_dir.display(), "listening");
    tokio::select! {
        r = serve(listener, service) => r?,
        _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
    }
    Ok(())
}
