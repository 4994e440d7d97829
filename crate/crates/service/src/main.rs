use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use normplan_service::{router, AppState};

#[derive(Parser)]
#[command(
    name = "normplan-service",
    version,
    about = "HTTP API for the norm-aware planner"
)]
struct Opts {
    #[arg(long, env = "NORMPLAN_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "NORMPLAN_BIND", default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    #[arg(
        long,
        env = "NORMPLAN_SCENARIO_DIR",
        default_value = "scenarios/mining"
    )]
    scenario_dir: PathBuf,
    /// Directory with base.aopl and mode policies; `demo/<name>` analysis
    /// references resolve against its parent
    #[arg(long, env = "NORMPLAN_POLICY_DIR", default_value = "policies/mining")]
    policy_dir: PathBuf,
    #[arg(long, env = "NORMPLAN_SOLVE_TIMEOUT_SECS", default_value_t = 30)]
    solve_timeout_secs: u64,
    #[arg(long, env = "NORMPLAN_MAX_CHANGES", default_value_t = 2)]
    max_changes: usize,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let opts = Opts::parse();
    let mut state = match AppState::load(&opts.scenario_dir, &opts.policy_dir) {
        Ok(s) => s,
        Err(e) => {
            tracing::error!(error = %e, "startup failed");
            return ExitCode::FAILURE;
        }
    };
    state.solve_timeout = Duration::from_secs(opts.solve_timeout_secs);
    state.max_changes = opts.max_changes;
    tracing::info!(scenarios = state.catalog.len(), "catalog loaded");

    let addr = SocketAddr::new(opts.bind, opts.port);
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            tracing::error!(%addr, error = %e, "cannot bind");
            return ExitCode::FAILURE;
        }
    };
    tracing::info!(%addr, "listening");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
    {
        tracing::error!(error = %e, "server error");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
