//! Compiles one logical gate into PLB programming.
//!
//! Each variant programs the LUT tables literally from the gate's output
//! equations: 4-phase gates fire on `ACKIN = 0` and return to NULL on
//! `ACKIN = 1`; 2-phase gates fire when every data phase opposes the output
//! phase, with `ACKIN` matching it. Unused LUT inputs stay tied to the
//! network but are don't-care in the tables.

use std::fmt;

use thiserror::Error;

use crate::encodings::{Protocol, SignalSpec};
use crate::plb::{
    load_diagnostics, pin_loads, plb_output, validate_config, ConfigDiagnostic, LutTable, PinSource, PlbConfig, LUT_INPUTS,
};
use crate::primitives::rendezvous2;

/// Total wires (data plus acknowledge) one PLB input group can take.
pub const WIRE_BUDGET: usize = LUT_INPUTS;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapFault {
    #[error("needs {needed} input wires, a PLB accepts {WIRE_BUDGET}")]
    WireBudget { needed: usize },
    #[error("{protocol} gates require an acknowledge input")]
    MissingAck { protocol: Protocol },
    #[error("unsupported gate shape: {0}")]
    Unsupported(String),
    #[error("signal `{signal}` uses {found}, gate uses {expected}")]
    ProtocolMismatch {
        signal: String,
        expected: Protocol,
        found: Protocol,
    },
    #[error("function arities {function:?} do not match signal arities {signals:?}")]
    ArityMismatch { function: Vec<usize>, signals: Vec<usize> },
    #[error("f(0,0,0) = 1 would fire at reset without an acknowledge input")]
    ResetUnsafe,
    #[error("emitted configuration is illegal: {0}")]
    Illegal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gate `{gate}`: {fault}")]
pub struct MappingError {
    pub gate: String,
    pub fault: MapFault,
}

/// Truth table of a gate over its logical inputs (input 0 is the least
/// significant digit of the mixed-radix index).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GateFunction {
    input_arities: Vec<usize>,
    output_arity: usize,
    table: Vec<u8>,
}

impl GateFunction {
    pub fn new(input_arities: Vec<usize>, output_arity: usize, table: Vec<u8>) -> Option<Self> {
        let size: usize = input_arities.iter().product();
        if table.len() != size || table.iter().any(|&v| v as usize >= output_arity) || output_arity < 2 {
            return None;
        }
        Some(GateFunction {
            input_arities,
            output_arity,
            table,
        })
    }

    pub fn from_fn(input_arities: Vec<usize>, output_arity: usize, f: impl Fn(&[usize]) -> usize) -> Self {
        let size: usize = input_arities.iter().product();
        let table = (0..size)
            .map(|idx| f(&digits(idx, &input_arities)) as u8)
            .collect();
        GateFunction::new(input_arities, output_arity, table).expect("from_fn produces a consistent table")
    }

    /// Two-input Boolean function from its 4-bit code, bit `x + 2y` = f(x, y).
    pub fn binary2(code: u8) -> Self {
        Self::from_fn(vec![2, 2], 2, |v| (code >> (v[0] + 2 * v[1]) & 1) as usize)
    }

    /// Three-input Boolean function from its 8-bit code, bit `x + 2y + 4z`.
    pub fn binary3(code: u8) -> Self {
        Self::from_fn(vec![2, 2, 2], 2, |v| (code >> (v[0] + 2 * v[1] + 4 * v[2]) & 1) as usize)
    }

    pub fn input_arities(&self) -> &[usize] {
        &self.input_arities
    }

    pub fn output_arity(&self) -> usize {
        self.output_arity
    }

    pub fn eval(&self, inputs: &[usize]) -> usize {
        let mut idx = 0;
        let mut radix = 1;
        for (&v, &a) in inputs.iter().zip(&self.input_arities) {
            debug_assert!(v < a);
            idx += v * radix;
            radix *= a;
        }
        self.table[idx] as usize
    }

    fn entry_width(&self) -> usize {
        if self.output_arity <= 2 {
            1
        } else {
            2
        }
    }

    pub fn to_hex(&self) -> String {
        let w = self.entry_width();
        let value: u128 = self
            .table
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &v)| acc | (v as u128) << (i * w));
        format!("{value:x}")
    }

    pub fn from_hex(hex: &str, input_arities: Vec<usize>, output_arity: usize) -> Option<Self> {
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        let value = u128::from_str_radix(hex, 16).ok()?;
        let size: usize = input_arities.iter().product();
        let w = if output_arity <= 2 { 1 } else { 2 };
        if size * w > 128 || (size * w < 128 && value >> (size * w) != 0) {
            return None;
        }
        let mask = (1u128 << w) - 1;
        let table = (0..size).map(|i| (value >> (i * w) & mask) as u8).collect();
        GateFunction::new(input_arities, output_arity, table)
    }

    /// All input combinations in index order.
    pub fn domain(&self) -> Vec<Vec<usize>> {
        let size: usize = self.input_arities.iter().product();
        (0..size).map(|i| digits(i, &self.input_arities)).collect()
    }
}

fn digits(mut idx: usize, arities: &[usize]) -> Vec<usize> {
    arities
        .iter()
        .map(|&a| {
            let d = idx % a;
            idx /= a;
            d
        })
        .collect()
}

/// A logical gate to be compiled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSpec {
    pub name: String,
    pub function: GateFunction,
    pub protocol: Protocol,
    pub inputs: Vec<SignalSpec>,
    pub output: SignalSpec,
    pub with_ack: bool,
}

impl GateSpec {
    pub fn input_wire_count(&self) -> usize {
        self.inputs.iter().map(|s| s.wire_count).sum::<usize>() + self.with_ack as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlbRole {
    Main,
    DecisionWait,
}

impl fmt::Display for PlbRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlbRole::Main => "main",
            PlbRole::DecisionWait => "decision_wait",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedPlb {
    pub role: PlbRole,
    pub config: PlbConfig,
}

/// PLB programming for one gate plus where its acknowledge output comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedGate {
    pub name: String,
    pub protocol: Protocol,
    pub plbs: Vec<PlacedPlb>,
    /// `(plb index, acknowledge port)` producing the gate's S_out.
    pub ack_out: (usize, usize),
}

impl MappedGate {
    fn single(name: &str, protocol: Protocol, config: PlbConfig) -> Self {
        MappedGate {
            name: name.to_string(),
            protocol,
            plbs: vec![PlacedPlb {
                role: PlbRole::Main,
                config,
            }],
            ack_out: (0, 0),
        }
    }

    /// Per-PLB legality plus load balance across every PLB of the gate.
    pub fn diagnostics(&self) -> Vec<ConfigDiagnostic> {
        let mut diags: Vec<ConfigDiagnostic> = self
            .plbs
            .iter()
            .flat_map(|p| validate_config(&p.config))
            .filter(|d| !matches!(d, ConfigDiagnostic::LoadImbalance { .. }))
            .collect();
        let configs: Vec<&PlbConfig> = self.plbs.iter().map(|p| &p.config).collect();
        diags.extend(load_diagnostics(&pin_loads(&configs)));
        diags
    }
}

// -- 4-phase helpers -------------------------------------------------------

/// Decodes a one-hot group: `Some(Some(v))` valid, `Some(None)` NULL, `None` forbidden.
fn one_hot(wires: &[bool]) -> Option<Option<usize>> {
    match wires.iter().filter(|&&w| w).count() {
        0 => Some(None),
        1 => Some(wires.iter().position(|&w| w)),
        _ => None,
    }
}

/// Next level of output wire `wire` for a WCHB-style gate with hold.
fn four_phase_next(
    f: &GateFunction,
    groups: &[&[bool]],
    ack: Option<bool>,
    wire: usize,
    hold: bool,
) -> bool {
    let decoded: Option<Vec<Option<usize>>> = groups.iter().map(|g| one_hot(g)).collect();
    let Some(decoded) = decoded else {
        return hold;
    };
    if decoded.iter().all(|d| d.is_some()) && ack != Some(true) {
        let values: Vec<usize> = decoded.iter().map(|d| d.unwrap()).collect();
        return f.eval(&values) == wire;
    }
    if decoded.iter().all(|d| d.is_none()) && ack != Some(false) {
        return false;
    }
    hold
}

fn check_shape(f: &GateFunction, inputs: &[usize], output: usize) -> Result<(), MapFault> {
    if f.input_arities() != inputs || f.output_arity() != output {
        let mut signals = inputs.to_vec();
        signals.push(output);
        let mut function = f.input_arities().to_vec();
        function.push(f.output_arity());
        return Err(MapFault::ArityMismatch { function, signals });
    }
    Ok(())
}

/// 4-phase dual-rail gate with two binary inputs; each output LUT holds
/// through its own feedback and the memory points are transparent.
pub fn map_4ph_2in(f: &GateFunction, with_ack: bool) -> Result<PlbConfig, MapFault> {
    check_shape(f, &[2, 2], 2)?;
    let mut cfg = PlbConfig::default();
    let ack_src = if with_ack { PinSource::AckIn } else { PinSource::Nc };
    cfg.input_assignment[0] = ack_src;
    cfg.input_assignment[1] = ack_src;
    for (k, (input, wire)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        cfg.input_assignment[2 + k] = PinSource::Data { input, wire };
    }
    for w in 0..2 {
        // own feedback sits on input w, the acknowledge on the other of 0/1
        cfg.feedback[w][w] = true;
        cfg.luts[w] = LutTable::from_fn(|i| {
            let ack = with_ack.then_some(i[1 - w]);
            four_phase_next(f, &[&i[2..4], &i[4..6]], ack, w, i[w])
        });
        cfg.output_assignment[w] = Some(plb_output(0, w));
    }
    Ok(cfg)
}

fn map_4ph_or6_group(cfg: &mut PlbConfig, f: &GateFunction, group: usize, output: usize) {
    let widths: Vec<usize> = f.input_arities().to_vec();
    for w in 0..f.output_arity().min(2) {
        let lut = 2 * group + w;
        cfg.luts[lut] = lut_rendezvous(f, &widths, w);
        cfg.output_assignment[lut] = Some(plb_output(output, w));
    }
}

/// LUT computing output wire `wire` when all inputs are valid, 0 otherwise.
fn lut_rendezvous(f: &GateFunction, widths: &[usize], wire: usize) -> LutTable {
    LutTable::from_fn(|i| {
        let mut groups = Vec::new();
        let mut at = 0;
        for &w in widths {
            groups.push(&i[at..at + w]);
            at += w;
        }
        let decoded: Option<Vec<Option<usize>>> = groups.iter().map(|g| one_hot(g)).collect();
        match decoded {
            Some(d) if d.iter().all(|v| v.is_some()) => {
                let values: Vec<usize> = d.into_iter().map(Option::unwrap).collect();
                f.eval(&values) == wire
            }
            _ => false,
        }
    })
}

fn assign_group(cfg: &mut PlbConfig, group: usize, widths: &[usize]) {
    let mut pin = group * LUT_INPUTS;
    for (input, &w) in widths.iter().enumerate() {
        for wire in 0..w {
            cfg.input_assignment[pin] = PinSource::Data { input, wire };
            pin += 1;
        }
    }
}

/// 4-phase gate with three binary inputs: LUTs compute rendez-vous plus the
/// function, the 6-input OR detects the return to NULL.
pub fn map_4ph_3in(f: &GateFunction, with_ack: bool) -> Result<PlbConfig, MapFault> {
    check_shape(f, &[2, 2, 2], 2)?;
    if with_ack {
        return Err(MapFault::WireBudget { needed: 7 });
    }
    let mut cfg = PlbConfig::default();
    cfg.mem_bypass = [false, true];
    assign_group(&mut cfg, 0, &[2, 2, 2]);
    map_4ph_or6_group(&mut cfg, f, 0, 0);
    Ok(cfg)
}

/// Two independent 3-input gates over the same inputs in one PLB (e.g. the
/// sum and carry of a full adder). The second gate drives output 1.
pub fn map_4ph_3in_pair(f: &GateFunction, g: &GateFunction) -> Result<PlbConfig, MapFault> {
    check_shape(f, &[2, 2, 2], 2)?;
    check_shape(g, &[2, 2, 2], 2)?;
    let mut cfg = PlbConfig::default();
    cfg.mem_bypass = [false, false];
    assign_group(&mut cfg, 0, &[2, 2, 2]);
    assign_group(&mut cfg, 1, &[2, 2, 2]);
    map_4ph_or6_group(&mut cfg, f, 0, 0);
    map_4ph_or6_group(&mut cfg, g, 1, 1);
    Ok(cfg)
}

/// One-of-3 gate with two one-of-3 inputs: `L0`/`L1` on the first input
/// group, `L2` on the second, `L3` unused, one acknowledge for all outputs.
pub fn map_4ph_ter_2in(f: &GateFunction, with_ack: bool) -> Result<PlbConfig, MapFault> {
    if f.input_arities().iter().chain([&f.output_arity()]).any(|&a| a > 3) {
        return Err(MapFault::Unsupported("one-of-n inputs above 3 in a two-input gate".into()));
    }
    check_shape(f, &[3, 3], 3)?;
    if with_ack {
        return Err(MapFault::WireBudget { needed: 7 });
    }
    let mut cfg = PlbConfig::default();
    cfg.mem_bypass = [false, false];
    cfg.combine_sel = true;
    assign_group(&mut cfg, 0, &[3, 3]);
    assign_group(&mut cfg, 1, &[3, 3]);
    for (lut, wire) in [(0, 0), (1, 1), (2, 2)] {
        cfg.luts[lut] = lut_rendezvous(f, &[3, 3], wire);
        cfg.output_assignment[lut] = Some(plb_output(0, wire));
    }
    Ok(cfg)
}

// -- LEDR ------------------------------------------------------------------

/// Phase condition of the LEDR equations: `Some(p)` when every input phase
/// equals `p` and the acknowledge (if present) equals `!p`.
fn ledr_ready(pairs: &[&[bool]], ack: Option<bool>) -> Option<bool> {
    let phases: Vec<bool> = pairs.iter().map(|p| p[0] ^ p[1]).collect();
    let p = phases[0];
    if phases.iter().any(|&q| q != p) {
        return None;
    }
    match ack {
        Some(a) if a == p => None,
        _ => Some(p),
    }
}

/// LEDR gate with two inputs and ACKIN; data and repeat outputs hold through
/// their own feedback, memory points transparent.
pub fn map_ledr_2in(f: &GateFunction, with_ack: bool) -> Result<PlbConfig, MapFault> {
    check_shape(f, &[2, 2], 2)?;
    if !with_ack {
        return Err(MapFault::MissingAck { protocol: Protocol::Ledr });
    }
    let mut cfg = PlbConfig::default();
    cfg.input_assignment[0] = PinSource::AckIn;
    cfg.input_assignment[1] = PinSource::AckIn;
    for (k, (input, wire)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        cfg.input_assignment[2 + k] = PinSource::Data { input, wire };
    }
    for w in 0..2 {
        cfg.feedback[w][w] = true;
        cfg.luts[w] = LutTable::from_fn(|i| {
            let ack = i[1 - w];
            match ledr_ready(&[&i[2..4], &i[4..6]], Some(ack)) {
                Some(p) => {
                    let v = f.eval(&[i[2] as usize, i[4] as usize]) == 1;
                    // repeat wire carries !f on odd phase so the pair's parity is p
                    if w == 1 && p {
                        !v
                    } else {
                        v
                    }
                }
                None => i[w],
            }
        });
        cfg.output_assignment[w] = Some(plb_output(0, w));
    }
    Ok(cfg)
}

/// Three-input LEDR gate: each output is the rendez-vous of two LUTs that
/// agree only when the transition condition holds (`L0`/`L1` default to 0,
/// `L2`/`L3` to 1, which locks the memory C-elements).
///
/// Three LEDR inputs use all six wires of an input group, so there is no
/// pin left for ACKIN; the phase condition is evaluated on the inputs alone.
pub fn map_ledr_3in(f: &GateFunction, with_ack: bool) -> Result<PlbConfig, MapFault> {
    check_shape(f, &[2, 2, 2], 2)?;
    if with_ack {
        return Err(MapFault::WireBudget { needed: 7 });
    }
    if f.eval(&[0, 0, 0]) == 1 {
        return Err(MapFault::ResetUnsafe);
    }
    let mut cfg = PlbConfig::default();
    cfg.mem_bypass = [false, true];
    cfg.or6_bypass_sel = [true, true];
    assign_group(&mut cfg, 0, &[2, 2, 2]);
    assign_group(&mut cfg, 1, &[2, 2, 2]);
    for lut in 0..4 {
        let repeat = lut % 2 == 1;
        let default = lut >= 2;
        cfg.luts[lut] = LutTable::from_fn(|i| match ledr_ready(&[&i[0..2], &i[2..4], &i[4..6]], None) {
            Some(p) => {
                let v = f.eval(&[i[0] as usize, i[2] as usize, i[4] as usize]) == 1;
                if repeat && p {
                    !v
                } else {
                    v
                }
            }
            None => default,
        });
    }
    cfg.output_assignment[0] = Some(plb_output(0, 0));
    cfg.output_assignment[1] = Some(plb_output(0, 1));
    Ok(cfg)
}

// -- edge protocol ---------------------------------------------------------

/// Index of decision-wait output `C_{i,j}` (also the PLB output carrying it).
pub fn c_index(i: usize, j: usize) -> usize {
    2 * i + j
}

/// PLB programmed as a 2x2 decision-wait: `C_{i,j} = rv(A_i ^ C_{i,1-j}, B_j ^ C_{1-i,j})`.
pub fn decision_wait_2x2() -> PlbConfig {
    let mut cfg = PlbConfig::default();
    let a = |wire| PinSource::Data { input: 0, wire };
    let b = |wire| PinSource::Data { input: 1, wire };
    cfg.input_assignment = [
        PinSource::Nc,
        PinSource::Nc,
        b(1),
        b(0),
        a(0),
        a(1),
        b(1),
        b(0),
        PinSource::Nc,
        PinSource::Nc,
        a(0),
        a(1),
    ];
    // (own feedback position, positions of the other two C feedbacks)
    cfg.feedback = [
        [true, true, true, false, false, false],
        [true, true, false, true, false, false],
        [true, false, true, true, false, false],
        [false, true, true, true, false, false],
    ];
    // LUT input i<4 with feedback carries C with index i; the remaining
    // low input carries the B wire, inputs 4/5 carry A0/A1.
    for i in 0..2 {
        for j in 0..2 {
            let own = c_index(i, j);
            let row = c_index(i, 1 - j);
            let col = c_index(1 - i, j);
            let b_pos = (0..4).find(|&k| !cfg.feedback[own][k]).expect("one network input");
            cfg.luts[own] = LutTable::from_fn(|x| {
                let a_i = x[4 + i];
                rendezvous2(x[own], a_i ^ x[row], x[b_pos] ^ x[col])
            });
        }
    }
    cfg
}

/// Output wire `w` of the edge gate is the XOR of every `C_{i,j}` with
/// `f(i,j) = w`.
pub fn edge_xor_terms(f: &GateFunction, w: usize) -> Vec<(usize, usize)> {
    let mut terms = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            if f.eval(&[i, j]) == w {
                terms.push((i, j));
            }
        }
    }
    terms
}

/// Computation fused with the 2x1 decision-wait: `L0 = f^1(C)`,
/// `L1 = f^0(C)`, `L2 = !(O_0 ^ ACKIN)`, `L3 = !(O_1 ^ ACKIN)`, with the
/// memory C-elements as the decision-wait elements. `P0` carries `O_1` and
/// `P1` carries `O_0`.
pub fn edge_computation(f: &GateFunction) -> PlbConfig {
    let mut cfg = PlbConfig::default();
    for k in 0..4 {
        cfg.input_assignment[k] = PinSource::Internal { plb: 0, output: k };
    }
    cfg.input_assignment[10] = PinSource::AckIn;
    cfg.mem_bypass = [false, false];
    cfg.or6_bypass_sel = [true, true];
    for (lut, w) in [(0, 1), (1, 0)] {
        let terms = edge_xor_terms(f, w);
        cfg.luts[lut] = LutTable::from_fn(|x| terms.iter().fold(false, |acc, &(i, j)| acc ^ x[c_index(i, j)]));
    }
    // J_1 reads O_0 = P1; J_0 reads O_1 = P0
    cfg.feedback[2][1] = true;
    cfg.luts[2] = LutTable::from_fn(|x| !(x[1] ^ x[4]));
    cfg.feedback[3][0] = true;
    cfg.luts[3] = LutTable::from_fn(|x| !(x[0] ^ x[4]));
    cfg.output_assignment[0] = Some(plb_output(0, 1));
    cfg.output_assignment[1] = Some(plb_output(0, 0));
    cfg
}

pub fn map_edge_2in(name: &str, f: &GateFunction, with_ack: bool) -> Result<MappedGate, MapFault> {
    check_shape(f, &[2, 2], 2)?;
    if !with_ack {
        return Err(MapFault::MissingAck { protocol: Protocol::Edge });
    }
    Ok(MappedGate {
        name: name.to_string(),
        protocol: Protocol::Edge,
        plbs: vec![
            PlacedPlb {
                role: PlbRole::DecisionWait,
                config: decision_wait_2x2(),
            },
            PlacedPlb {
                role: PlbRole::Main,
                config: edge_computation(f),
            },
        ],
        ack_out: (1, 0),
    })
}

/// The four LUT tables the chosen protocol variant emits for `f` (for the
/// edge protocol, the computation PLB).
pub fn emit_truth_tables(f: &GateFunction, protocol: Protocol, with_ack: bool) -> Result<[LutTable; 4], MapFault> {
    let cfg = match (protocol, f.input_arities().len(), f.output_arity()) {
        (Protocol::FourPhase, 2, 2) => map_4ph_2in(f, with_ack)?,
        (Protocol::FourPhase, 3, 2) => map_4ph_3in(f, with_ack)?,
        (Protocol::FourPhase, 2, 3) => map_4ph_ter_2in(f, with_ack)?,
        (Protocol::Ledr, 2, 2) => map_ledr_2in(f, with_ack)?,
        (Protocol::Ledr, 3, 2) => map_ledr_3in(f, with_ack)?,
        (Protocol::Edge, 2, 2) => {
            if !with_ack {
                return Err(MapFault::MissingAck { protocol });
            }
            edge_computation(f)
        }
        (p, n, o) => {
            return Err(MapFault::Unsupported(format!(
                "{p} gate with {n} inputs and a one-of-{o} output"
            )))
        }
    };
    Ok(cfg.luts)
}

/// Compiles a gate, checking wire budget, protocol consistency and the
/// legality of the result.
pub fn map_gate(gate: &GateSpec) -> Result<MappedGate, MappingError> {
    let err = |fault| MappingError {
        gate: gate.name.clone(),
        fault,
    };
    for s in gate.inputs.iter().chain([&gate.output]) {
        if s.protocol != gate.protocol {
            return Err(err(MapFault::ProtocolMismatch {
                signal: s.name.clone(),
                expected: gate.protocol,
                found: s.protocol,
            }));
        }
    }
    let needed = gate.input_wire_count();
    if needed > WIRE_BUDGET {
        return Err(err(MapFault::WireBudget { needed }));
    }
    let arities: Vec<usize> = gate.inputs.iter().map(|s| s.arity).collect();
    check_shape(&gate.function, &arities, gate.output.arity).map_err(err)?;

    let f = &gate.function;
    let mapped = match (gate.protocol, arities.as_slice(), gate.output.arity) {
        (Protocol::FourPhase, [2, 2], 2) => MappedGate::single(&gate.name, gate.protocol, map_4ph_2in(f, gate.with_ack).map_err(err)?),
        (Protocol::FourPhase, [2, 2, 2], 2) => MappedGate::single(&gate.name, gate.protocol, map_4ph_3in(f, gate.with_ack).map_err(err)?),
        (Protocol::FourPhase, [3, 3], 3) => MappedGate::single(&gate.name, gate.protocol, map_4ph_ter_2in(f, gate.with_ack).map_err(err)?),
        (Protocol::Ledr, [2, 2], 2) => MappedGate::single(&gate.name, gate.protocol, map_ledr_2in(f, gate.with_ack).map_err(err)?),
        (Protocol::Ledr, [2, 2, 2], 2) => MappedGate::single(&gate.name, gate.protocol, map_ledr_3in(f, gate.with_ack).map_err(err)?),
        (Protocol::Edge, [2, 2], 2) => map_edge_2in(&gate.name, f, gate.with_ack).map_err(err)?,
        (p, a, o) => {
            return Err(err(MapFault::Unsupported(format!(
                "{p} gate with input arities {a:?} and a one-of-{o} output"
            ))))
        }
    };
    let diags = mapped.diagnostics();
    if let Some(d) = diags.first() {
        return Err(err(MapFault::Illegal(d.to_string())));
    }
    Ok(mapped)
}
