//! Handshake building blocks: C-element, memory point, acknowledge XOR and
//! the 6-input return-to-NULL OR.
//!
//! All of these are zero-delay transition functions. Timing is the
//! simulator's job.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrimitiveError {
    #[error("C-element built for {expected} inputs was given {got}")]
    InputCount { expected: usize, got: usize },
    #[error("C-elements take between 1 and 6 inputs, not {0}")]
    BadWidth(usize),
}

/// Output level and width of a Muller C-element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CElementState {
    pub output: bool,
    pub input_count: usize,
}

impl CElementState {
    pub fn new(input_count: usize) -> Result<Self, PrimitiveError> {
        if !(1..=6).contains(&input_count) {
            return Err(PrimitiveError::BadWidth(input_count));
        }
        Ok(CElementState {
            output: false,
            input_count,
        })
    }
}

/// Rendez-vous rule: all ones sets, all zeros clears, anything else holds.
pub fn c_element_step(state: &CElementState, inputs: &[bool]) -> Result<bool, PrimitiveError> {
    if inputs.len() != state.input_count {
        return Err(PrimitiveError::InputCount {
            expected: state.input_count,
            got: inputs.len(),
        });
    }
    Ok(rendezvous(state.output, inputs))
}

#[inline]
pub fn rendezvous(prev: bool, inputs: &[bool]) -> bool {
    if inputs.iter().all(|&i| i) {
        true
    } else if inputs.iter().all(|&i| !i) {
        false
    } else {
        prev
    }
}

/// Two-input rendez-vous, the form used inside LUT tables and memory points.
#[inline]
pub fn rendezvous2(prev: bool, a: bool, b: bool) -> bool {
    if a == b {
        a
    } else {
        prev
    }
}

/// MUX realisation: the current output selects between the AND of the
/// inputs (output low) and their OR (output high).
pub fn c_element_mux(prev: bool, inputs: &[bool]) -> bool {
    let and = inputs.iter().all(|&i| i);
    let or = inputs.iter().any(|&i| i);
    if prev {
        or
    } else {
        and
    }
}

/// One memory point: two C-elements sharing a bypass programming point, plus
/// the XOR that produces the acknowledge output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryPointState {
    pub ce: [CElementState; 2],
    pub bypass: bool,
}

impl MemoryPointState {
    pub fn new(bypass: bool) -> Self {
        let ce = CElementState {
            output: false,
            input_count: 2,
        };
        MemoryPointState { ce: [ce, ce], bypass }
    }

    pub fn outputs(&self) -> (bool, bool) {
        (self.ce[0].output, self.ce[1].output)
    }
}

/// Steps both C-elements (or passes the first input of each pair through in
/// bypass mode) and returns `(O_a, O_b, ack_out)`.
pub fn memory_point_step(state: &mut MemoryPointState, in_pairs: [[bool; 2]; 2]) -> (bool, bool, bool) {
    for (ce, pair) in state.ce.iter_mut().zip(in_pairs) {
        ce.output = if state.bypass {
            pair[0]
        } else {
            rendezvous2(ce.output, pair[0], pair[1])
        };
    }
    let (a, b) = state.outputs();
    (a, b, a ^ b)
}

pub fn ack_xor(output_wires: &[bool]) -> bool {
    output_wires.iter().fold(false, |acc, &w| acc ^ w)
}

pub fn or6(inputs: [bool; 6]) -> bool {
    inputs.iter().any(|&i| i)
}
