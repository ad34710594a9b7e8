//! Start the HTTP service on localhost.
//!
//! ```text
//! cargo run --release -p preflearn-service --example serve -- 8080
//! curl localhost:8080/params
//! ```

use std::net::SocketAddr;

use preflearn_service::{serve, ServiceConfig};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let port: u16 = std::env::args().nth(1).and_then(|p| p.parse().ok()).unwrap_or(8080);
    let config = ServiceConfig {
        data_dir: std::env::temp_dir().join("preflearn-datasets"),
        ..ServiceConfig::default()
    };
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    println!("listening on http://{addr} with {} workers", config.workers);
    serve(addr, config).await
}
