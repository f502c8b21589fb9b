use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use super::{Direction, PortError, PortMessage, PortName};

type ConnId = u64;

#[derive(Default)]
struct Registry {
    /// Out-port name to owning connection.
    outs: BTreeMap<PortName, ConnId>,
    /// Topic to subscriber queues.
    subs: BTreeMap<PortName, Vec<(ConnId, Sender<String>)>>,
}

impl Registry {
    fn drop_conn(&mut self, conn: ConnId) {
        self.outs.retain(|_, c| *c != conn);
        for list in self.subs.values_mut() {
            list.retain(|(c, _)| *c != conn);
        }
        self.subs.retain(|_, l| !l.is_empty());
    }

    fn listing(&self) -> String {
        let mut ports: Vec<String> = self.outs.keys().map(|p| format!("{p}:out")).collect();
        ports.extend(self.subs.keys().map(|p| format!("{p}:in")));
        ports.join(" ")
    }
}

/// Central message broker.
pub struct Broker;

/// Running broker; stops when [`BrokerHandle::shutdown`] is called or the
/// handle is dropped.
pub struct BrokerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Broker {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves in a
    /// background thread.
    pub fn start(addr: &str) -> Result<BrokerHandle, PortError> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let registry = Arc::new(Mutex::new(Registry::default()));
        let next_id = Arc::new(AtomicU64::new(0));
        let stop_flag = Arc::clone(&stop);
        let thread = thread::spawn(move || {
            for stream in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let id = next_id.fetch_add(1, Ordering::SeqCst);
                let registry = Arc::clone(&registry);
                thread::spawn(move || serve(stream, id, registry));
            }
        });
        Ok(BrokerHandle {
            addr: local,
            stop,
            thread: Some(thread),
        })
    }
}

impl BrokerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    /// Blocks until the accept loop exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for BrokerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_now();
        }
    }
}

fn serve(stream: TcpStream, id: ConnId, registry: Arc<Mutex<Registry>>) {
    let _ = stream.set_nodelay(true);
    let Ok(mut write_half) = stream.try_clone() else {
        return;
    };
    // All writes to this connection go through one queue so replies and
    // forwarded messages never interleave mid-line.
    let (tx, rx) = channel::<String>();
    let writer = thread::spawn(move || {
        for line in rx {
            if write_half.write_all(line.as_bytes()).is_err() {
                break;
            }
        }
    });
    let mut opened: HashMap<PortName, Direction> = HashMap::new();
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        if line.starts_with('/') {
            forward(&line, &opened, &registry);
            continue;
        }
        if let Some(reply) = control(&line, id, &tx, &mut opened, &registry) {
            if tx.send(format!("{reply}\n")).is_err() {
                break;
            }
        }
    }
    registry.lock().expect("registry lock").drop_conn(id);
    drop(tx);
    let _ = writer.join();
}

fn control(
    line: &str,
    id: ConnId,
    tx: &Sender<String>,
    opened: &mut HashMap<PortName, Direction>,
    registry: &Mutex<Registry>,
) -> Option<String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    match parts.as_slice() {
        ["OPEN", name, "out"] => {
            let name = match PortName::new(name) {
                Ok(n) => n,
                Err(e) => return Some(format!("ERR {e}")),
            };
            let mut reg = registry.lock().expect("registry lock");
            if reg.outs.contains_key(&name) {
                return Some(format!("ERR {}", PortError::NameCollision(name.to_string())));
            }
            reg.outs.insert(name.clone(), id);
            opened.insert(name, Direction::Out);
            Some("OK".to_string())
        }
        ["SUB", name] => {
            let name = match PortName::new(name) {
                Ok(n) => n,
                Err(e) => return Some(format!("ERR {e}")),
            };
            // The OK must reach the client before any forwarded message.
            let mut reg = registry.lock().expect("registry lock");
            let _ = tx.send("OK\n".to_string());
            reg.subs.entry(name.clone()).or_default().push((id, tx.clone()));
            opened.insert(name, Direction::In);
            None
        }
        ["LIST"] => Some(format!("OK {}", registry.lock().expect("registry lock").listing())),
        _ => Some(format!("ERR unknown command '{line}'")),
    }
}

fn forward(line: &str, opened: &HashMap<PortName, Direction>, registry: &Mutex<Registry>) {
    let Ok(msg) = PortMessage::parse_line(line) else {
        return;
    };
    if opened.get(&msg.topic) != Some(&Direction::Out) {
        return;
    }
    let frame = format!("{line}\n");
    let reg = registry.lock().expect("registry lock");
    if let Some(subs) = reg.subs.get(&msg.topic) {
        for (_, tx) in subs {
            let _ = tx.send(frame.clone());
        }
    }
}
