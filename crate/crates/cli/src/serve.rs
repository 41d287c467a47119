use std::net::SocketAddr;
use std::path::Path;

use dsrank_service::AppState;
use tokio::net::TcpListener;

use crate::Failure;

pub fn run(listen: SocketAddr, data_dir: &Path) -> Result<(), Failure> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("DSRANK_LOG").unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::environment(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async {
        let state = AppState::open(data_dir)
            .map_err(|e| Failure::environment(format!("cannot open data dir {}: {e}", data_dir.display())))?;
        let listener =
            TcpListener::bind(listen).await.map_err(|e| Failure::environment(format!("cannot bind {listen}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::environment(e.to_string()))?;
        eprintln!("listening on http://{addr}");
        dsrank_service::serve(listener, state, shutdown_signal())
            .await
            .map_err(|e| Failure::environment(format!("server error: {e}")))?;
        eprintln!("shut down");
        Ok(())
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
