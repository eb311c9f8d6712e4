//! Event-driven simulation of mapped fabrics with handshaking environments.
//!
//! Time is an integer tick count. A wire change is recorded when its driver
//! switches; each reader sees it after that wire segment's delay. Events at
//! the same tick are processed in the order they were scheduled.

pub mod checks;
pub mod delay;
mod kernel;
pub mod trace;

pub use checks::{check_no_early_evaluation, check_single_toggle, Verdict, Violation};
pub use delay::{DelayMode, DelayModel};
pub use kernel::{fabric_fingerprint, run, SimError, SimOptions};
pub use trace::{decode_sequence, output_sequences, Diagnostic, Trace, TraceError};
