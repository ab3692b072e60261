use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unstable queue: arrival rate {arrival} is not below capacity {capacity}")]
    Unstable { arrival: f64, capacity: f64 },
    #[error("no bandwidth units allocated")]
    NoBandwidth,
    #[error("consumer {0} has no bandwidth units allocated")]
    Unserved(usize),
    #[error("link rate must be positive")]
    ZeroRate,
    #[error("drain of {drain} exceeds backlog {backlog}")]
    Drain { drain: f64, backlog: f64 },
    #[error("admission of {admitted} exceeds free capacity {free}")]
    Admission { admitted: f64, free: f64 },
    #[error("no packets entered the fog layer")]
    NoPackets,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("placement row {0} is not one-hot")]
    NotOneHot(usize),
    #[error("city table is empty")]
    EmptyCities,
    #[error("{servers} servers requested but only {fogs} fog nodes")]
    TooManyServers { servers: usize, fogs: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("schema version {found} is not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error("trial {trial}: {message}")]
    Trial { trial: usize, message: String },
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
