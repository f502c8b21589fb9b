//! Named-port publish/subscribe over a central TCP broker.
//!
//! Every handle owns one TCP connection. Control lines (`OPEN`, `SUB`,
//! `LIST`) are answered with `OK ...` or `ERR ...`; messages travel as
//! newline-terminated frames `<topic> <timestamp> <payload>`. Delivery is
//! at-most-once with unbounded per-subscriber queues; a slow subscriber grows
//! its queue rather than slowing publishers.

mod broker;
mod client;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use broker::{Broker, BrokerHandle};
pub use client::{list_ports, open_port, subscribe, OutPort, PortHandle, SessionClock, Subscription};

/// Default broker TCP port.
pub const DEFAULT_BROKER_PORT: u16 = 7601;
/// Environment variable overriding the broker port.
pub const BROKER_PORT_ENV: &str = "PORTNET_BROKER_PORT";

/// Broker port from the environment, else the default.
pub fn broker_port_from_env() -> u16 {
    std::env::var(BROKER_PORT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BROKER_PORT)
}

#[derive(Debug, Error)]
pub enum PortError {
    #[error("invalid port name '{0}'")]
    InvalidName(String),
    #[error("port '{0}' is already open for output")]
    NameCollision(String),
    #[error("broker unreachable at {addr}: {source}")]
    BrokerUnreachable {
        addr: String,
        source: std::io::Error,
    },
    #[error("port handle is closed")]
    Closed,
    #[error("timestamp {got} is earlier than the previous {last}")]
    NonMonotonic { last: f64, got: f64 },
    #[error("payload contains a newline")]
    PayloadNewline,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Slash-separated port path such as `/SpeechRecognition/Sentence`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortName(String);

impl PortName {
    pub fn new(name: &str) -> Result<Self, PortError> {
        let valid = name.starts_with('/')
            && name[1..].split('/').all(|seg| !seg.is_empty())
            && !name.chars().any(char::is_whitespace);
        if valid {
            Ok(Self(name.to_string()))
        } else {
            Err(PortError::InvalidName(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PortName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for PortName {
    type Err = PortError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortMessage {
    pub topic: PortName,
    /// Seconds since session start.
    pub timestamp: f64,
    pub payload: String,
}

impl PortMessage {
    pub fn new(topic: PortName, timestamp: f64, payload: impl Into<String>) -> Self {
        Self {
            topic,
            timestamp,
            payload: payload.into(),
        }
    }

    /// Wire form without the trailing newline.
    pub fn to_line(&self) -> String {
        format!("{} {} {}", self.topic, self.timestamp, self.payload)
    }

    pub fn parse_line(line: &str) -> Result<Self, PortError> {
        let mut parts = line.splitn(3, ' ');
        let topic = PortName::new(parts.next().unwrap_or(""))?;
        let ts = parts
            .next()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| PortError::Protocol(format!("bad timestamp in '{line}'")))?;
        let payload = parts.next().unwrap_or("");
        Ok(Self::new(topic, ts, payload))
    }
}
