//! Line-delimited JSON over TCP, one thread per connection.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use super::events::EventBus;
use super::protocol::{Request, Response};
use super::rpc::{rpc_get_state, rpc_get_transaction_status, rpc_submit_transaction, SubmitMode};
use crate::lifecycle::Controller;

const POLL: Duration = Duration::from_millis(20);

/// A running stream server. Dropping it stops accepting and closes streams.
pub struct StreamServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl StreamServer {
    pub fn start(addr: &str, controller: Arc<Mutex<Controller>>, mode: SubmitMode) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let bus = controller.lock().unwrap().bus().clone();
        let flag = stop.clone();
        let accept = std::thread::spawn(move || {
            while !flag.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let (ctl, bus, flag) = (controller.clone(), bus.clone(), flag.clone());
                        std::thread::spawn(move || {
                            let _ = serve_connection(stream, ctl, bus, mode, flag);
                        });
                    }
                    Err(e) if e.kind() == io::ErrorKind::WouldBlock => std::thread::sleep(POLL),
                    Err(_) => std::thread::sleep(POLL),
                }
            }
        });
        Ok(StreamServer { addr, stop, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for StreamServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn write_line(out: &Mutex<TcpStream>, value: &impl serde::Serialize) -> io::Result<()> {
    let mut line = serde_json::to_string(value).map_err(io::Error::other)?;
    line.push('\n');
    out.lock().unwrap().write_all(line.as_bytes())
}

fn serve_connection(
    stream: TcpStream,
    controller: Arc<Mutex<Controller>>,
    bus: EventBus,
    mode: SubmitMode,
    stop: Arc<AtomicBool>,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_millis(200)))?;
    let out = Arc::new(Mutex::new(stream.try_clone()?));
    let closed = Arc::new(AtomicBool::new(false));
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    let result = loop {
        if stop.load(Ordering::Relaxed) {
            break Ok(());
        }
        match reader.read_line(&mut line) {
            Ok(0) => break Ok(()),
            Ok(_) => {}
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => continue,
            Err(e) => break Err(e),
        }
        let text = std::mem::take(&mut line);
        if text.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Request>(&text) {
            Err(e) => Response::error("bad_request", e.to_string()),
            Ok(Request::Hello) => Response::hello(),
            Ok(Request::Subscribe { filter }) => {
                let sub = bus.subscribe(filter);
                let reply = Response::Subscribed { subscription_id: sub.id };
                // The acknowledgement goes out before any event.
                write_line(&out, &reply)?;
                let (out, closed, stop) = (out.clone(), closed.clone(), stop.clone());
                std::thread::spawn(move || {
                    while !closed.load(Ordering::Relaxed) && !stop.load(Ordering::Relaxed) {
                        if let Ok(delivery) = sub.next_timeout(POLL) {
                            if write_line(&out, &delivery).is_err() {
                                break;
                            }
                        }
                    }
                });
                continue;
            }
            Ok(Request::Submit { tx }) => match rpc_submit_transaction(&mut controller.lock().unwrap(), tx, mode) {
                Ok(tx_hash) => Response::Submitted { tx_hash },
                Err(e) => Response::Error { code: e.code, message: e.message },
            },
            Ok(Request::Status { tx_hash }) => {
                Response::Status(rpc_get_transaction_status(&controller.lock().unwrap(), &tx_hash))
            }
            Ok(Request::GetState { contract, key }) => {
                Response::State(rpc_get_state(&controller.lock().unwrap(), &contract, key.as_deref()))
            }
        };
        if let Err(e) = write_line(&out, &reply) {
            break Err(e);
        }
    };
    closed.store(true, Ordering::Relaxed);
    result
}
