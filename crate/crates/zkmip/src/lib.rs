//! Simulatable stabilizer encodings, robustified protocol circuits, history
//! states and an exact zero-knowledge simulator, with brute-force oracles.

pub mod error;
pub mod gates;
pub mod matrix;
pub mod pauli;
pub mod ring;
pub mod codes;
pub mod oracle;
pub mod encoding;
pub mod protocol;
pub mod history;
pub mod honest;
pub mod simulator;
pub mod gap;
pub mod suite;

pub use error::{Error, Result};
