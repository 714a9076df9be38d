use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use tokio::runtime::Runtime;
use tokio::sync::oneshot;
use txforge_core::lifecycle::Controller;
use txforge_core::node::{StreamServer, SubmitMode};

use crate::http::router;

/// HTTP and stream listeners sharing one controller.
pub struct Node {
    http_addr: SocketAddr,
    stream: StreamServer,
    runtime: Option<Runtime>,
    stop_http: Option<oneshot::Sender<()>>,
}

impl Node {
    pub fn start(http: &str, stream: &str, controller: Arc<Mutex<Controller>>, mode: SubmitMode) -> io::Result<Node> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let listener = std::net::TcpListener::bind(http)?;
        listener.set_nonblocking(true)?;
        let http_addr = listener.local_addr()?;
        let stream = StreamServer::start(stream, controller.clone(), mode)?;
        let (stop_http, stopped) = oneshot::channel::<()>();
        let app = router(controller, mode);
        runtime.spawn(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener is non-blocking");
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stopped.await;
                })
                .await;
        });
        Ok(Node { http_addr, stream, runtime: Some(runtime), stop_http: Some(stop_http) })
    }

    pub fn http_addr(&self) -> SocketAddr {
        self.http_addr
    }

    pub fn stream_addr(&self) -> SocketAddr {
        self.stream.local_addr()
    }

    pub fn runtime(&self) -> &Runtime {
        self.runtime.as_ref().expect("running")
    }

    pub fn shutdown(&mut self) {
        if let Some(tx) = self.stop_http.take() {
            let _ = tx.send(());
        }
        self.stream.shutdown();
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_timeout(Duration::from_secs(1));
        }
    }
}

impl Drop for Node {
    fn drop(&mut self) {
        self.shutdown();
    }
}
