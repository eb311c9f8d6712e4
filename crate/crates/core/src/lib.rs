//! Behavioural model of a programmable logic block fabric for
//! quasi-delay-insensitive circuits: encodings, handshake primitives, the
//! PLB, a gate mapper, an event-driven simulator, side-channel metrics and
//! the programming chain.

pub mod bitstream;
pub mod cli;
pub mod encodings;
pub mod mapper;
pub mod netlist;
pub mod plb;
pub mod primitives;
pub mod progchain;
pub mod sidechannel;
pub mod sim;
