//! Structural model of one programmable logic block.
//!
//! Four 6-input LUTs `L0..L3` sit behind 12 network pins split in two groups
//! (`I'0..I'5` feed `L0`/`L1`, `I''0..I''5` feed `L2`/`L3`). LUT input `i`
//! for `i < 4` can be switched to the feedback of PLB output `P_i`; inputs 4
//! and 5 are network-only. Each LUT output enters a C-element (memory point)
//! whose second input is the group's 6-input OR, or, for `P0`/`P1`, the
//! cross LUT (`L2`/`L3`) when the OR is bypassed. A memory point in bypass
//! mode is transparent.
//!
//! Acknowledge outputs: port 0 is `P0 ^ P1`, or the XOR of all four outputs
//! when the block is combined into one gate; port 1 is `P2 ^ P3`.

use std::fmt;

use thiserror::Error;

use crate::primitives::{memory_point_step, or6, MemoryPointState};

pub const LUT_INPUTS: usize = 6;
pub const LUT_COUNT: usize = 4;
pub const PIN_COUNT: usize = 12;
/// Internal fixpoint iteration bound.
pub const MAX_ITERATIONS: usize = 16;

/// 64-entry truth table; entry `i` is bit `i`, with LUT input `k` worth `2^k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LutTable(pub u64);

impl LutTable {
    pub const ZERO: LutTable = LutTable(0);

    pub fn from_fn(mut f: impl FnMut([bool; LUT_INPUTS]) -> bool) -> Self {
        let mut bits = 0u64;
        for idx in 0..64u32 {
            if f(index_bits(idx)) {
                bits |= 1 << idx;
            }
        }
        LutTable(bits)
    }

    pub fn entry(&self, idx: usize) -> bool {
        self.0 >> idx & 1 == 1
    }
}

impl fmt::Debug for LutTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LutTable({:#018x})", self.0)
    }
}

pub fn index_bits(idx: u32) -> [bool; LUT_INPUTS] {
    std::array::from_fn(|k| idx >> k & 1 == 1)
}

pub fn lut_index(inputs: [bool; LUT_INPUTS]) -> usize {
    inputs
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &b)| acc | (b as usize) << k)
}

pub fn lut_eval(table: LutTable, inputs: [bool; LUT_INPUTS]) -> bool {
    table.entry(lut_index(inputs))
}

/// What a network pin is tied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PinSource {
    /// Not connected; reads 0.
    #[default]
    Nc,
    /// Wire `wire` of the gate's data input `input`.
    Data { input: usize, wire: usize },
    /// The gate's acknowledge input.
    AckIn,
    /// Output `output` of another PLB of the same mapped gate.
    Internal { plb: usize, output: usize },
}

/// Wire `wire` of logical output `output` (0 unless a PLB hosts two gates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutputPin {
    pub output: usize,
    pub wire: usize,
}

pub fn plb_output(output: usize, wire: usize) -> OutputPin {
    OutputPin { output, wire }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlbConfig {
    pub luts: [LutTable; LUT_COUNT],
    /// `feedback[lut][input]`: input reads `P_input` instead of the network pin.
    pub feedback: [[bool; LUT_INPUTS]; LUT_COUNT],
    /// One bypass per memory point (`P0`/`P1`, then `P2`/`P3`).
    pub mem_bypass: [bool; 2],
    /// Replace the OR of `P0` (resp. `P1`) by `L2` (resp. `L3`).
    pub or6_bypass_sel: [bool; 2],
    /// Group all four outputs behind a single acknowledge.
    pub combine_sel: bool,
    pub input_assignment: [PinSource; PIN_COUNT],
    /// Gate output wire driven by `P_k`, if any.
    pub output_assignment: [Option<OutputPin>; LUT_COUNT],
}

impl Default for PlbConfig {
    fn default() -> Self {
        PlbConfig {
            luts: [LutTable::ZERO; LUT_COUNT],
            feedback: [[false; LUT_INPUTS]; LUT_COUNT],
            mem_bypass: [true; 2],
            or6_bypass_sel: [false; 2],
            combine_sel: false,
            input_assignment: [PinSource::Nc; PIN_COUNT],
            output_assignment: [None; LUT_COUNT],
        }
    }
}

/// Pin feeding LUT `lut` input `input` (before the feedback multiplexer).
pub fn pin_index(lut: usize, input: usize) -> usize {
    (lut / 2) * LUT_INPUTS + input
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlbState {
    pub lut_outputs: [bool; LUT_COUNT],
    pub memory: [MemoryPointState; 2],
    pub outputs: [bool; LUT_COUNT],
    pub ack: [bool; 2],
}

impl PlbState {
    pub fn reset(config: &PlbConfig) -> Self {
        PlbState {
            lut_outputs: [false; LUT_COUNT],
            memory: [
                MemoryPointState::new(config.mem_bypass[0]),
                MemoryPointState::new(config.mem_bypass[1]),
            ],
            outputs: [false; LUT_COUNT],
            ack: [false; 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlbError {
    #[error("no internal fixpoint after {0} iterations")]
    Oscillation(usize),
}

fn lut_inputs(config: &PlbConfig, lut: usize, pins: &[bool; PIN_COUNT], outputs: &[bool; LUT_COUNT]) -> [bool; LUT_INPUTS] {
    std::array::from_fn(|i| {
        if i < LUT_COUNT && config.feedback[lut][i] {
            outputs[i]
        } else {
            pins[pin_index(lut, i)]
        }
    })
}

/// Settles the block for the given pin levels.
pub fn plb_step(config: &PlbConfig, state: &PlbState, network_inputs: [bool; PIN_COUNT]) -> Result<PlbState, PlbError> {
    let or_a = or6(network_inputs[..6].try_into().expect("six pins"));
    let or_b = or6(network_inputs[6..].try_into().expect("six pins"));
    let mut next = *state;
    next.memory[0].bypass = config.mem_bypass[0];
    next.memory[1].bypass = config.mem_bypass[1];

    for _ in 0..MAX_ITERATIONS {
        let l: [bool; LUT_COUNT] =
            std::array::from_fn(|k| lut_eval(config.luts[k], lut_inputs(config, k, &network_inputs, &next.outputs)));
        let second0 = if config.or6_bypass_sel[0] { l[2] } else { or_a };
        let second1 = if config.or6_bypass_sel[1] { l[3] } else { or_a };
        let (p0, p1, _) = memory_point_step(&mut next.memory[0], [[l[0], second0], [l[1], second1]]);
        let (p2, p3, _) = memory_point_step(&mut next.memory[1], [[l[2], or_b], [l[3], or_b]]);
        let outputs = [p0, p1, p2, p3];
        next.lut_outputs = l;
        if outputs == next.outputs {
            next.ack = ack_outputs(config, &outputs);
            return Ok(next);
        }
        next.outputs = outputs;
    }
    Err(PlbError::Oscillation(MAX_ITERATIONS))
}

pub fn ack_outputs(config: &PlbConfig, outputs: &[bool; LUT_COUNT]) -> [bool; 2] {
    let pair_a = outputs[0] ^ outputs[1];
    let pair_b = outputs[2] ^ outputs[3];
    if config.combine_sel {
        [pair_a ^ pair_b, pair_b]
    } else {
        [pair_a, pair_b]
    }
}

/// A legality problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigDiagnostic {
    IllegalFeedback { lut: usize, input: usize },
    LoadImbalance { input: usize, loads: Vec<usize> },
    ModeConflict(&'static str),
}

impl fmt::Display for ConfigDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigDiagnostic::IllegalFeedback { lut, input } => {
                write!(f, "L{lut} input {input} has no feedback multiplexer")
            }
            ConfigDiagnostic::LoadImbalance { input, loads } => {
                write!(f, "wires of data input {input} drive unequal pin loads {loads:?}")
            }
            ConfigDiagnostic::ModeConflict(msg) => f.write_str(msg),
        }
    }
}

/// Pin load per wire of every data input, indexed `[input][wire]`.
pub fn pin_loads(configs: &[&PlbConfig]) -> Vec<Vec<usize>> {
    let mut loads: Vec<Vec<usize>> = Vec::new();
    for cfg in configs {
        for src in cfg.input_assignment {
            if let PinSource::Data { input, wire } = src {
                if loads.len() <= input {
                    loads.resize(input + 1, Vec::new());
                }
                if loads[input].len() <= wire {
                    loads[input].resize(wire + 1, 0);
                }
                loads[input][wire] += 1;
            }
        }
    }
    loads
}

pub fn load_diagnostics(loads: &[Vec<usize>]) -> Vec<ConfigDiagnostic> {
    loads
        .iter()
        .enumerate()
        .filter(|(_, l)| l.windows(2).any(|w| w[0] != w[1]))
        .map(|(input, l)| ConfigDiagnostic::LoadImbalance {
            input,
            loads: l.clone(),
        })
        .collect()
}

pub fn validate_config(config: &PlbConfig) -> Vec<ConfigDiagnostic> {
    let mut diags = Vec::new();
    for (lut, fb) in config.feedback.iter().enumerate() {
        for input in LUT_COUNT..LUT_INPUTS {
            if fb[input] {
                diags.push(ConfigDiagnostic::IllegalFeedback { lut, input });
            }
        }
    }
    diags.extend(load_diagnostics(&pin_loads(&[config])));
    if config.mem_bypass[0] && config.or6_bypass_sel.iter().any(|&s| s) {
        diags.push(ConfigDiagnostic::ModeConflict(
            "cross-LUT rendez-vous selected while memory point 0 is bypassed",
        ));
    }
    if config.combine_sel && config.mem_bypass.iter().any(|&b| b) {
        diags.push(ConfigDiagnostic::ModeConflict(
            "combined acknowledge selected with a bypassed memory point",
        ));
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lut_eval_cases() {
        let zero = LutTable::ZERO;
        assert!(!lut_eval(zero, [true; 6]));

        let ident = LutTable::from_fn(|i| i[0]);
        assert!(lut_eval(ident, [true, false, false, false, false, false]));
        assert!(!lut_eval(ident, [false, true, true, true, true, true]));

        let and45 = LutTable::from_fn(|i| i[4] && i[5]);
        // brute-force: exactly the 16 indices with bits 4 and 5 set
        let expected: u64 = (0..64u32).filter(|i| i & 0b110000 == 0b110000).map(|i| 1u64 << i).sum();
        assert_eq!(and45.0, expected);
        assert!(lut_eval(and45, [false, false, false, false, true, true]));
    }

    #[test]
    fn index_roundtrip() {
        for idx in 0..64u32 {
            assert_eq!(lut_index(index_bits(idx)), idx as usize);
        }
    }

    #[test]
    fn illegal_feedback_detected() {
        let mut cfg = PlbConfig::default();
        cfg.feedback[1][5] = true;
        assert_eq!(validate_config(&cfg), vec![ConfigDiagnostic::IllegalFeedback { lut: 1, input: 5 }]);
    }

    #[test]
    fn load_imbalance_detected() {
        let mut cfg = PlbConfig::default();
        for pin in [0, 1, 6] {
            cfg.input_assignment[pin] = PinSource::Data { input: 0, wire: 0 };
        }
        for pin in [2, 7] {
            cfg.input_assignment[pin] = PinSource::Data { input: 0, wire: 1 };
        }
        assert_eq!(
            validate_config(&cfg),
            vec![ConfigDiagnostic::LoadImbalance {
                input: 0,
                loads: vec![3, 2]
            }]
        );
    }

    #[test]
    fn mode_conflicts() {
        let mut cfg = PlbConfig::default();
        cfg.or6_bypass_sel = [true, true];
        assert_eq!(validate_config(&cfg).len(), 1);
        cfg.mem_bypass = [false, false];
        assert!(validate_config(&cfg).is_empty());
        cfg.combine_sel = true;
        cfg.mem_bypass[1] = true;
        assert_eq!(validate_config(&cfg).len(), 1);
    }

    #[test]
    fn oscillation_reported() {
        // L0 = !P0 with P0 transparent never settles
        let mut cfg = PlbConfig::default();
        cfg.luts[0] = LutTable::from_fn(|i| !i[0]);
        cfg.feedback[0][0] = true;
        let st = PlbState::reset(&cfg);
        assert_eq!(plb_step(&cfg, &st, [false; 12]), Err(PlbError::Oscillation(MAX_ITERATIONS)));
    }

    #[test]
    fn or6_return_to_null() {
        // L0 = I'0, C-element against OR of group A
        let mut cfg = PlbConfig::default();
        cfg.mem_bypass = [false, false];
        cfg.luts[0] = LutTable::from_fn(|i| i[0]);
        let mut st = PlbState::reset(&cfg);
        let mut pins = [false; 12];
        pins[0] = true;
        st = plb_step(&cfg, &st, pins).unwrap();
        assert!(st.outputs[0]);
        assert!(st.ack[0]);
        // I'0 low but another group pin high: OR=1, L0=0, hold
        pins[0] = false;
        pins[3] = true;
        st = plb_step(&cfg, &st, pins).unwrap();
        assert!(st.outputs[0]);
        pins[3] = false;
        st = plb_step(&cfg, &st, pins).unwrap();
        assert!(!st.outputs[0]);
    }
}
