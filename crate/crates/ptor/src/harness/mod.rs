//! Harness: CLI, persistence, and the external-CAS oracle client.

pub mod cli;
pub mod oracle;
pub mod sink;

pub use oracle::{generate_script, oracle_verify, OracleClient, OracleMode, OracleResult};
pub use sink::{sink_read, sink_write, SinkFormat, SinkMeta, SinkRecord};
