//! Live session service: physio ingestion, emotion arbitration, simulation
//! ticking and snapshot broadcast.

pub mod broadcast;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod session;

pub use protocol::{parse_inbound, InboundMessage, Outbound, OutboundMessage};
pub use replay::{read_log, replay, LogRecord, Recorder, ReplayOutput};
pub use session::{Audience, Delivery, Session, SessionConfig, SessionOverrides};
