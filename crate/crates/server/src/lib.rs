//! Network front end for [`nudge_core::SessionService`].

pub mod api;
pub mod config;

use std::sync::Arc;

use nudge_core::{FileStore, SessionService, SystemClock};
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;
use tower_http::trace::TraceLayer;

pub use api::router;
pub use config::ServerConfig;

pub fn build_service(cfg: &ServerConfig, seed: u64) -> anyhow::Result<Arc<SessionService>> {
    let store = FileStore::open(&cfg.data_dir)?;
    let service = SessionService::new(
        cfg.service_config()?,
        Arc::new(SystemClock::new()),
        Arc::new(store),
        seed,
    )?;
    Ok(Arc::new(service))
}

pub fn app(service: Arc<SessionService>) -> axum::Router {
    router(service)
        .layer(CorsLayer::permissive())
        .layer(TraceLayer::new_for_http())
}

pub async fn serve(listener: TcpListener, service: Arc<SessionService>) -> std::io::Result<()> {
    axum::serve(listener, app(service)).await
}
