//! Logical-signal encodings for the three handshake protocols.
//!
//! A logical signal of `n` values travels on a small group of wires. Under the
//! 4-phase protocol the group is one-hot with an all-zero spacer (NULL); under
//! LEDR the two wires are a data wire and a repeat wire; under the edge
//! protocol only toggles carry information. Every transmitted value changes
//! exactly one wire, so the Hamming-weight parity of the group (its phase)
//! flips once per value.
//!
//! Wire index 0 is always the least significant bit of a [`WireVec`].

use std::fmt;

use thiserror::Error;

/// Largest logical arity a PLB output group can carry (four LUT outputs).
pub const MAX_ARITY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("value {value} out of range for arity {arity}")]
    ValueOutOfRange { value: usize, arity: usize },
    #[error("arity {arity} not supported for {protocol} (allowed {min}..={max})")]
    UnsupportedArity {
        protocol: Protocol,
        arity: usize,
        min: usize,
        max: usize,
    },
    #[error("wire vector of length {got} where {expected} was expected")]
    WidthMismatch { expected: usize, got: usize },
}

/// Handshake protocol family of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    FourPhase,
    Ledr,
    Edge,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::FourPhase, Protocol::Ledr, Protocol::Edge];

    /// Short name used in netlists and trace headers.
    pub fn tag(self) -> &'static str {
        match self {
            Protocol::FourPhase => "4ph",
            Protocol::Ledr => "ledr",
            Protocol::Edge => "edge",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Protocol> {
        match tag {
            "4ph" => Some(Protocol::FourPhase),
            "ledr" => Some(Protocol::Ledr),
            "edge" => Some(Protocol::Edge),
            _ => None,
        }
    }

    pub fn is_two_phase(self) -> bool {
        !matches!(self, Protocol::FourPhase)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Fixed-width bit vector for the wires of one signal (at most 8 wires).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct WireVec {
    bits: u8,
    len: u8,
}

impl WireVec {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= 8, "wire vectors hold at most 8 wires");
        WireVec {
            bits: 0,
            len: len as u8,
        }
    }

    pub fn from_bits(bits: u8, len: usize) -> Self {
        assert!(len <= 8, "wire vectors hold at most 8 wires");
        let mask = if len == 8 { 0xff } else { (1u8 << len) - 1 };
        WireVec {
            bits: bits & mask,
            len: len as u8,
        }
    }

    pub fn from_slice(levels: &[bool]) -> Self {
        let mut w = WireVec::zeros(levels.len());
        for (i, &l) in levels.iter().enumerate() {
            w.set(i, l);
        }
        w
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len(), "wire index {i} out of range");
        self.bits >> i & 1 == 1
    }

    pub fn set(&mut self, i: usize, level: bool) {
        assert!(i < self.len(), "wire index {i} out of range");
        if level {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
    }

    pub fn toggled(mut self, i: usize) -> Self {
        let level = self.get(i);
        self.set(i, !level);
        self
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn to_vec(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Number of wires that differ between two vectors of equal width.
    pub fn distance(&self, other: &WireVec) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }
}

impl fmt::Debug for WireVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.len() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
    }
}

/// Declared logical signal: protocol, arity and the wires it occupies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalSpec {
    pub name: String,
    pub protocol: Protocol,
    pub arity: usize,
    pub wire_count: usize,
}

impl SignalSpec {
    pub fn new(name: impl Into<String>, protocol: Protocol, arity: usize) -> Result<Self, EncodingError> {
        let (min, max) = match protocol {
            Protocol::FourPhase | Protocol::Edge => (2, MAX_ARITY),
            // only binary signals change a single wire per value
            Protocol::Ledr => (2, 2),
        };
        if arity < min || arity > max {
            return Err(EncodingError::UnsupportedArity {
                protocol,
                arity,
                min,
                max,
            });
        }
        Ok(SignalSpec {
            name: name.into(),
            protocol,
            arity,
            wire_count: arity,
        })
    }

    pub fn reset_wires(&self) -> WireVec {
        WireVec::zeros(self.wire_count)
    }
}

/// Decoded interpretation of a wire pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Null,
    Valid(usize),
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueCode {
    pub kind: ValueKind,
    pub wires: WireVec,
}

/// Hamming-weight parity of a signal: `false` is even, `true` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(pub bool);

impl Phase {
    pub fn of(wires: WireVec) -> Phase {
        Phase(signal_parity(wires))
    }
}

/// One-hot 4-phase code for `v`.
pub fn encode_4ph(v: usize, arity: usize) -> Result<WireVec, EncodingError> {
    if v >= arity || arity > 8 {
        return Err(EncodingError::ValueOutOfRange { value: v, arity });
    }
    Ok(WireVec::zeros(arity).toggled(v))
}

/// The NULL spacer.
pub fn encode_4ph_null(arity: usize) -> WireVec {
    WireVec::zeros(arity)
}

pub fn decode_4ph(wires: WireVec) -> ValueCode {
    let kind = match wires.weight() {
        0 => ValueKind::Null,
        1 => ValueKind::Valid(wires.bits().trailing_zeros() as usize),
        _ => ValueKind::Forbidden,
    };
    ValueCode { kind, wires }
}

/// Next LEDR pair after sending `v`. Bit 0 is the data wire, bit 1 the repeat wire.
pub fn ledr_next(current: WireVec, v: bool) -> WireVec {
    assert_eq!(current.len(), 2, "LEDR signals have exactly two wires");
    if current.get(0) != v {
        current.toggled(0)
    } else {
        current.toggled(1)
    }
}

/// Next edge-protocol vector after sending `v`: wire `v` toggles.
pub fn edge_next(current: WireVec, v: usize) -> Result<WireVec, EncodingError> {
    if v >= current.len() {
        return Err(EncodingError::ValueOutOfRange {
            value: v,
            arity: current.len(),
        });
    }
    Ok(current.toggled(v))
}

pub fn signal_parity(wires: WireVec) -> bool {
    wires.weight() % 2 == 1
}

/// Logical value carried by a 2-phase transition from `prev` to `next`.
///
/// Returns `None` unless exactly one wire changed.
pub fn decode_two_phase(protocol: Protocol, prev: WireVec, next: WireVec) -> Option<usize> {
    if prev.len() != next.len() || prev.distance(&next) != 1 {
        return None;
    }
    match protocol {
        Protocol::Ledr => Some(next.get(0) as usize),
        Protocol::Edge => Some((prev.bits() ^ next.bits()).trailing_zeros() as usize),
        Protocol::FourPhase => None,
    }
}
