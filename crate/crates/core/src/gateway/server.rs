//! WebSocket server: one thread per subscribed topic feeding a hub, one
//! fan-out thread per console connection.

use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use tungstenite::{Message, WebSocket};

use crate::grammar::GrammarLibrary;
use crate::portnet::{subscribe, OutPort, PortMessage, SessionClock};
use crate::topics;

use super::{Bridge, GatewayError, GatewayEvent, BRIDGED_TOPICS, DEFAULT_GATEWAY_PORT};

const POLL: Duration = Duration::from_millis(10);

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub broker: String,
    /// Listen address, `0.0.0.0:7602` by default.
    pub bind: String,
}

impl GatewayConfig {
    pub fn new(broker: impl Into<String>) -> Self {
        Self {
            broker: broker.into(),
            bind: format!("0.0.0.0:{DEFAULT_GATEWAY_PORT}"),
        }
    }
}

pub struct Gateway;

pub struct GatewayHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    consoles: Arc<AtomicUsize>,
    threads: Vec<JoinHandle<()>>,
}

type Shared<T> = Arc<Mutex<T>>;

impl Gateway {
    /// Subscribes to the bridged topics, opens `/Operator/Command` and starts
    /// accepting console connections. Messages published after this returns
    /// reach every console connected at the time.
    pub fn start(config: &GatewayConfig, library: GrammarLibrary) -> Result<GatewayHandle, GatewayError> {
        let stop = Arc::new(AtomicBool::new(false));
        let bridge: Shared<Bridge> = Arc::new(Mutex::new(Bridge::new(library)));
        let command = Arc::new(Mutex::new(OutPort::open(
            &config.broker,
            topics::OPERATOR_COMMAND,
            SessionClock::start(),
        )?));
        let listener = TcpListener::bind(&config.bind)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;

        let mut threads = Vec::new();
        let (msg_tx, msg_rx) = channel::<PortMessage>();
        for topic in BRIDGED_TOPICS {
            let sub = subscribe(&config.broker, topic)?;
            let tx = msg_tx.clone();
            let stop = stop.clone();
            threads.push(thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match sub.next_message(POLL.as_secs_f64()) {
                        Ok(Some(m)) => {
                            if tx.send(m).is_err() {
                                break;
                            }
                        }
                        Ok(None) => {}
                        Err(_) => break,
                    }
                }
            }));
        }
        drop(msg_tx);

        let (client_tx, client_rx) = channel::<Sender<String>>();
        let consoles = Arc::new(AtomicUsize::new(0));
        {
            let (bridge, stop, consoles) = (bridge.clone(), stop.clone(), consoles.clone());
            threads.push(thread::spawn(move || hub(msg_rx, client_rx, bridge, consoles, stop)));
        }
        {
            let stop = stop.clone();
            threads.push(thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, _)) => {
                            let (tx, rx) = channel();
                            if client_tx.send(tx).is_err() {
                                break;
                            }
                            let (bridge, command, stop) = (bridge.clone(), command.clone(), stop.clone());
                            thread::spawn(move || {
                                let _ = console(stream, rx, bridge, command, stop);
                            });
                        }
                        Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
                        Err(_) => thread::sleep(POLL),
                    }
                }
            }));
        }
        Ok(GatewayHandle {
            addr,
            stop,
            consoles,
            threads,
        })
    }
}

impl GatewayHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    /// Consoles currently receiving events.
    pub fn consoles(&self) -> usize {
        self.consoles.load(Ordering::Relaxed)
    }

    /// Blocks until the gateway stops.
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::Relaxed);
        self.join();
    }
}

/// Encodes each message once and copies it to every registered console.
fn hub(
    msgs: Receiver<PortMessage>,
    clients: Receiver<Sender<String>>,
    bridge: Shared<Bridge>,
    consoles: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
) {
    let mut outs: Vec<Sender<String>> = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        consoles.store(outs.len(), Ordering::Relaxed);
        while let Ok(tx) = clients.try_recv() {
            let snapshot = bridge.lock().unwrap().snapshot();
            if snapshot.iter().all(|e| tx.send(e.to_json()).is_ok()) {
                outs.push(tx);
            }
        }
        consoles.store(outs.len(), Ordering::Relaxed);
        match msgs.recv_timeout(POLL) {
            Ok(m) => {
                let Ok(event) = bridge.lock().unwrap().encode(&m) else {
                    continue;
                };
                let frame = event.to_json();
                outs.retain(|tx| tx.send(frame.clone()).is_ok());
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
    }
}

/// Serves one console: forwards queued frames and handles incoming commands.
fn console(
    stream: TcpStream,
    frames: Receiver<String>,
    bridge: Shared<Bridge>,
    command: Shared<OutPort>,
    stop: Arc<AtomicBool>,
) -> Result<(), GatewayError> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| std::io::Error::other(e.to_string()))?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let send = |ws: &mut WebSocket<TcpStream>, text: String| {
        ws.send(Message::text(text)).map_err(|e| std::io::Error::other(e.to_string()))
    };
    while !stop.load(Ordering::Relaxed) {
        loop {
            match frames.try_recv() {
                Ok(f) => send(&mut ws, f)?,
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return Ok(()),
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                let decoded = bridge.lock().unwrap().decode(text.as_str());
                let outcome = decoded.and_then(|cmd| Ok(command.lock().unwrap().publish(&cmd.to_payload())?));
                if let Err(e) = outcome {
                    send(&mut ws, GatewayEvent::from_error(&e).to_json())?;
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
    }
    let _ = ws.close(None);
    Ok(())
}
