use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::{Direction, PortError, PortMessage, PortName};

/// Seconds since a fixed origin; the session-relative clock for timestamps.
#[derive(Debug, Clone, Copy)]
pub struct SessionClock {
    origin: Instant,
}

impl SessionClock {
    pub fn start() -> Self {
        Self {
            origin: Instant::now(),
        }
    }

    pub fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

impl Default for SessionClock {
    fn default() -> Self {
        Self::start()
    }
}

fn connect(addr: &str) -> Result<TcpStream, PortError> {
    let stream = TcpStream::connect(addr).map_err(|source| PortError::BrokerUnreachable {
        addr: addr.to_string(),
        source,
    })?;
    stream.set_nodelay(true)?;
    Ok(stream)
}

/// Sends one control line and reads the reply line.
fn request(stream: &mut TcpStream, reader: &mut BufReader<TcpStream>, line: &str) -> Result<String, PortError> {
    stream.write_all(format!("{line}\n").as_bytes())?;
    let mut reply = String::new();
    if reader.read_line(&mut reply)? == 0 {
        return Err(PortError::Protocol("broker closed the connection".into()));
    }
    let reply = reply.trim_end_matches(['\r', '\n']);
    if reply == "OK" {
        return Ok(String::new());
    }
    if let Some(rest) = reply.strip_prefix("OK ") {
        return Ok(rest.to_string());
    }
    let err = reply.strip_prefix("ERR ").unwrap_or(reply);
    Err(if err.contains("already open") {
        PortError::NameCollision(line.split_whitespace().nth(1).unwrap_or("").to_string())
    } else {
        PortError::Protocol(err.to_string())
    })
}

/// Handle returned by [`open_port`].
pub enum PortHandle {
    Out(OutPort),
    In(Subscription),
}

/// Opens an out-port (publisher) or in-port (subscription) on the broker.
pub fn open_port(addr: &str, name: &str, direction: Direction) -> Result<PortHandle, PortError> {
    match direction {
        Direction::Out => OutPort::open(addr, name, SessionClock::start()).map(PortHandle::Out),
        Direction::In => subscribe(addr, name).map(PortHandle::In),
    }
}

/// Publishing end of a port.
pub struct OutPort {
    name: PortName,
    stream: Option<TcpStream>,
    clock: SessionClock,
    last: f64,
}

impl OutPort {
    pub fn open(addr: &str, name: &str, clock: SessionClock) -> Result<Self, PortError> {
        let name = PortName::new(name)?;
        let mut stream = connect(addr)?;
        let mut reader = BufReader::new(stream.try_clone()?);
        request(&mut stream, &mut reader, &format!("OPEN {name} {}", Direction::Out.as_str()))
            .map_err(|e| match e {
                PortError::NameCollision(_) => PortError::NameCollision(name.to_string()),
                e => e,
            })?;
        Ok(Self {
            name,
            stream: Some(stream),
            clock,
            last: f64::NEG_INFINITY,
        })
    }

    pub fn name(&self) -> &PortName {
        &self.name
    }

    /// Publishes with the current session-clock time.
    pub fn publish(&mut self, payload: &str) -> Result<(), PortError> {
        let t = self.clock.now().max(self.last);
        self.publish_at(payload, t)
    }

    /// Publishes with an explicit timestamp (virtual time).
    pub fn publish_at(&mut self, payload: &str, timestamp: f64) -> Result<(), PortError> {
        if payload.contains(['\n', '\r']) {
            return Err(PortError::PayloadNewline);
        }
        if timestamp < self.last {
            return Err(PortError::NonMonotonic {
                last: self.last,
                got: timestamp,
            });
        }
        let stream = self.stream.as_mut().ok_or(PortError::Closed)?;
        let msg = PortMessage::new(self.name.clone(), timestamp, payload);
        stream.write_all(format!("{}\n", msg.to_line()).as_bytes())?;
        self.last = timestamp;
        Ok(())
    }

    pub fn close(&mut self) {
        if let Some(s) = self.stream.take() {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
    }
}

impl Drop for OutPort {
    fn drop(&mut self) {
        self.close();
    }
}

/// Receiving end of a port. Messages published after the subscription was
/// acknowledged are queued without bound.
pub struct Subscription {
    name: PortName,
    stream: Option<TcpStream>,
    rx: Receiver<PortMessage>,
}

pub fn subscribe(addr: &str, name: &str) -> Result<Subscription, PortError> {
    let name = PortName::new(name)?;
    let mut stream = connect(addr)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    request(&mut stream, &mut reader, &format!("SUB {name}"))?;
    let (tx, rx) = channel();
    thread::spawn(move || {
        for line in reader.lines() {
            let Ok(line) = line else { break };
            if let Ok(msg) = PortMessage::parse_line(&line) {
                if tx.send(msg).is_err() {
                    break;
                }
            }
        }
    });
    Ok(Subscription {
        name,
        stream: Some(stream),
        rx,
    })
}

impl Subscription {
    pub fn name(&self) -> &PortName {
        &self.name
    }

    /// Oldest queued message, or `None` after `timeout` seconds.
    pub fn next_message(&self, timeout: f64) -> Result<Option<PortMessage>, PortError> {
        if self.stream.is_none() {
            return Err(PortError::Closed);
        }
        match self.rx.recv_timeout(Duration::from_secs_f64(timeout.max(0.0))) {
            Ok(m) => Ok(Some(m)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(PortError::Closed),
        }
    }

    /// Queued message if one is ready.
    pub fn try_next(&self) -> Result<Option<PortMessage>, PortError> {
        self.next_message(0.0)
    }

    pub fn close(&mut self) {
        if let Some(s) = self.stream.take() {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
    }
}

impl Drop for Subscription {
    fn drop(&mut self) {
        self.close();
    }
}

/// Ports currently registered with the broker.
pub fn list_ports(addr: &str) -> Result<Vec<(PortName, Direction)>, PortError> {
    let mut stream = connect(addr)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let body = request(&mut stream, &mut reader, "LIST")?;
    body.split_whitespace()
        .map(|entry| {
            let (name, dir) = entry
                .rsplit_once(':')
                .ok_or_else(|| PortError::Protocol(format!("bad listing entry '{entry}'")))?;
            let dir = match dir {
                "out" => Direction::Out,
                "in" => Direction::In,
                _ => return Err(PortError::Protocol(format!("bad direction '{dir}'"))),
            };
            Ok((PortName::new(name)?, dir))
        })
        .collect()
}
