//! Session-based HTTP service for entering pairwise judgments one pair at a
//! time, with the inconsistency report, convexity certificate and weights
//! recomputed after every change.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

use std::sync::Arc;

pub use api::router;
pub use error::{ErrorBody, Result, ServiceError};
pub use session::{Judgment, MethodOutcome, Session, SessionReport};
pub use store::SessionStore;

/// Serves the API on `listener` until Ctrl-C.
pub async fn serve(
    listener: tokio::net::TcpListener,
    store: Arc<SessionStore>,
) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
}
