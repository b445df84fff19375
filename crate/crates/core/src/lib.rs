//! Single-packet binary-image intrusion detection for Modbus TCP.
//!
//! The pipeline runs from raw packet captures to trained classifiers:
//!
//! 1. [`pcap`] reads classic pcap files; [`dissect`] extracts the decoded
//!    Ethernet/IPv4/TCP/MBAP fields of every Modbus TCP packet.
//! 2. [`codec`] reconstructs the fixed 30-byte header layout, selects a
//!    per-approach byte subset, and unpacks it into a binary bit-grid image.
//! 3. [`label`] assigns one of nine traffic classes from attack-log time
//!    windows combined with protocol-level signatures.
//! 4. [`dataset`] persists labelled records and produces stratified splits,
//!    per-class caps, and inverse-frequency class weights.
//! 5. [`nn`] and [`models`] implement the tiny CNN classifiers with explicit
//!    forward/backward passes; [`experiments`] orchestrates training,
//!    multi-seed replication, cap sweeps, and the factorial grid; [`metrics`]
//!    and [`stats`] compute the reported numbers.
//! 6. [`synth`] generates deterministic synthetic Modbus captures with known
//!    ground truth so the whole pipeline is verifiable without external data.

pub mod codec;
pub mod dataset;
pub mod dissect;
pub mod error;
pub mod experiments;
pub mod label;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod pcap;
pub mod stats;
pub mod survey;
pub mod synth;

pub use error::{Error, Result};
