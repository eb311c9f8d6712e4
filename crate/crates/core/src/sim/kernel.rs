use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::BinaryHeap;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use super::delay::DelayModel;
use super::trace::{Diagnostic, Marker, Trace, TraceEvent, TraceGate, TraceSignal};
use crate::bitstream::config_to_hex;
use crate::encodings::{decode_4ph, edge_next, encode_4ph, encode_4ph_null, ledr_next, Protocol, ValueKind, WireVec};
use crate::mapper::MappedGate;
use crate::netlist::{validate_stimulus, Netlist, Stimulus, StimulusError};
use crate::plb::{plb_step, PinSource, PlbState, LUT_COUNT, PIN_COUNT};
use crate::primitives::rendezvous;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    pub max_time: u64,
    /// Ticks between a primary output changing and its consumer acknowledging.
    pub ack_delay: u64,
    /// Ticks between an acknowledge reaching a producer and its next emission.
    pub env_delay: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_time: 1_000_000,
            ack_delay: 1,
            env_delay: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error("{netlist} gates in the netlist but {mapped} mapped gates")]
    GateCount { netlist: usize, mapped: usize },
    #[error("gate `{gate}` has an illegal configuration: {reason}")]
    Illegal { gate: String, reason: String },
}

/// Stable identity of a mapped fabric, used to refuse comparing traces of
/// different fabrics.
pub fn fabric_fingerprint(netlist: &Netlist, mapped: &[MappedGate]) -> u64 {
    let mut h = DefaultHasher::new();
    netlist.to_text().hash(&mut h);
    for g in mapped {
        g.name.hash(&mut h);
        for p in &g.plbs {
            config_to_hex(&p.config).hash(&mut h);
            format!("{:?}{:?}", p.config.input_assignment, p.config.output_assignment).hash(&mut h);
        }
        g.ack_out.hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Change { wire: usize, level: bool },
    Arrive { element: usize, slot: usize, level: bool },
}

#[derive(Debug, Clone, Copy)]
enum Pin {
    Zero,
    Slot(usize),
}

#[derive(Debug)]
enum Kind {
    Producer {
        signal: usize,
        values: Vec<usize>,
        next: usize,
        /// Acknowledge level being waited for.
        wait: Option<bool>,
    },
    Consumer {
        ack: usize,
    },
    Join {
        output: usize,
        state: bool,
    },
    Plb {
        gate: usize,
        plb: usize,
        pins: [Pin; PIN_COUNT],
        outs: [Option<usize>; LUT_COUNT],
        acks: [Option<usize>; 2],
        state: PlbState,
    },
}

#[derive(Debug)]
struct Element {
    kind: Kind,
    inputs: Vec<usize>,
    seen: Vec<bool>,
    delay: u64,
}

struct Kernel<'a> {
    netlist: &'a Netlist,
    mapped: &'a [MappedGate],
    elements: Vec<Element>,
    sinks: Vec<Vec<(usize, usize, u64)>>,
    levels: Vec<bool>,
    projected: Vec<bool>,
    data_wires: Vec<Vec<usize>>,
    wire_signal: Vec<Option<usize>>,
    ack_signals: Vec<Vec<usize>>,
    marker_count: Vec<usize>,
    queue: BinaryHeap<Reverse<(u64, u64, Event)>>,
    seq: u64,
    trace: Trace,
    abort: bool,
}

impl Kernel<'_> {
    fn push(&mut self, time: u64, ev: Event) {
        self.queue.push(Reverse((time, self.seq, ev)));
        self.seq += 1;
    }

    fn drive(&mut self, wire: usize, level: bool, at: u64) {
        if self.projected[wire] != level {
            self.projected[wire] = level;
            self.push(at, Event::Change { wire, level });
        }
    }

    fn change(&mut self, time: u64, wire: usize, level: bool) {
        let old = self.levels[wire];
        if old == level {
            return;
        }
        self.levels[wire] = level;
        self.trace.events.push(TraceEvent {
            time,
            wire,
            old,
            new: level,
        });
        if let Some(s) = self.wire_signal[wire] {
            let spec = &self.netlist.signals[s];
            if spec.protocol == Protocol::FourPhase {
                let levels: Vec<bool> = self.data_wires[s].iter().map(|&w| self.levels[w]).collect();
                if decode_4ph(WireVec::from_slice(&levels)).kind == ValueKind::Forbidden {
                    self.trace.diagnostics.push(Diagnostic::Forbidden {
                        time,
                        signal: spec.name.clone(),
                    });
                }
            }
        }
        for k in 0..self.ack_signals[wire].len() {
            let s = self.ack_signals[wire][k];
            let spec = &self.netlist.signals[s];
            if spec.protocol.is_two_phase() || !level {
                self.trace.markers.push(Marker {
                    after: self.trace.events.len() - 1,
                    time,
                    signal: spec.name.clone(),
                    index: self.marker_count[s],
                });
                self.marker_count[s] += 1;
            }
        }
        for k in 0..self.sinks[wire].len() {
            let (element, slot, delay) = self.sinks[wire][k];
            self.push(time + delay, Event::Arrive { element, slot, level });
        }
    }

    fn react(&mut self, e: usize, now: u64) {
        let at = now + self.elements[e].delay;
        match self.elements[e].kind {
            Kind::Producer { .. } => self.react_producer(e, at),
            Kind::Consumer { ack } => {
                let parity = self.elements[e].seen.iter().filter(|&&b| b).count() % 2 == 1;
                self.drive(ack, parity, at);
            }
            Kind::Join { output, state } => {
                let next = rendezvous(state, &self.elements[e].seen);
                if let Kind::Join { state, .. } = &mut self.elements[e].kind {
                    *state = next;
                }
                self.drive(output, next, at);
            }
            Kind::Plb { .. } => self.react_plb(e, now, at),
        }
    }

    fn react_plb(&mut self, e: usize, now: u64, at: u64) {
        let el = &self.elements[e];
        let Kind::Plb {
            gate,
            plb,
            pins,
            outs,
            acks,
            state,
        } = &el.kind
        else {
            unreachable!()
        };
        let mut network = [false; PIN_COUNT];
        for (n, p) in network.iter_mut().zip(pins.iter()) {
            if let Pin::Slot(s) = p {
                *n = el.seen[*s];
            }
        }
        let result = plb_step(&self.mapped[*gate].plbs[*plb].config, state, network);
        let (gate, outs, acks) = (*gate, *outs, *acks);
        match result {
            Ok(next) => {
                if let Kind::Plb { state, .. } = &mut self.elements[e].kind {
                    *state = next;
                }
                for (w, l) in outs.iter().zip(next.outputs) {
                    if let Some(w) = w {
                        self.drive(*w, l, at);
                    }
                }
                for (w, l) in acks.iter().zip(next.ack) {
                    if let Some(w) = w {
                        self.drive(*w, l, at);
                    }
                }
            }
            Err(_) => {
                let gate = self.mapped[gate].name.clone();
                self.trace.diagnostics.push(Diagnostic::Oscillation { time: now, gate });
                self.abort = true;
            }
        }
    }

    fn react_producer(&mut self, e: usize, at: u64) {
        loop {
            let ack = self.elements[e].seen[0];
            let Kind::Producer {
                signal,
                values,
                next,
                wait,
            } = &mut self.elements[e].kind
            else {
                unreachable!()
            };
            let s = *signal;
            let spec = &self.netlist.signals[s];
            let current = WireVec::from_slice(&self.data_wires[s].iter().map(|&w| self.projected[w]).collect::<Vec<_>>());
            let target = match *wait {
                None if *next < values.len() => {
                    let v = values[*next];
                    let t = match spec.protocol {
                        Protocol::FourPhase => encode_4ph(v, spec.arity).expect("validated stimulus"),
                        Protocol::Ledr => ledr_next(current, v == 1),
                        Protocol::Edge => edge_next(current, v).expect("validated stimulus"),
                    };
                    *wait = Some(if spec.protocol.is_two_phase() { t.weight() % 2 == 1 } else { true });
                    t
                }
                Some(level) if level == ack => {
                    if spec.protocol == Protocol::FourPhase && level {
                        *wait = Some(false);
                        encode_4ph_null(spec.arity)
                    } else {
                        *wait = None;
                        *next += 1;
                        continue;
                    }
                }
                _ => return,
            };
            for k in 0..target.len() {
                let w = self.data_wires[s][k];
                self.drive(w, target.get(k), at);
            }
            return;
        }
    }
}

/// Runs the mapped fabric against environment producers and consumers until
/// the stimulus is exhausted and nothing is in flight, or `max_time` passes.
pub fn run(
    netlist: &Netlist,
    mapped: &[MappedGate],
    delays: &DelayModel,
    stimulus: &Stimulus,
    opts: &SimOptions,
) -> Result<Trace, SimError> {
    validate_stimulus(stimulus, netlist)?;
    if netlist.gates.len() != mapped.len() {
        return Err(SimError::GateCount {
            netlist: netlist.gates.len(),
            mapped: mapped.len(),
        });
    }
    for g in mapped {
        if let Some(d) = g.diagnostics().first() {
            return Err(SimError::Illegal {
                gate: g.name.clone(),
                reason: d.to_string(),
            });
        }
    }

    let mut wires: Vec<String> = Vec::new();
    let mut new_wire = |name: String| {
        wires.push(name);
        wires.len() - 1
    };
    let data_wires: Vec<Vec<usize>> = netlist
        .signals
        .iter()
        .map(|s| (0..s.wire_count).map(|i| new_wire(format!("{}.{i}", s.name))).collect())
        .collect();
    let sout: Vec<usize> = netlist.gates.iter().map(|g| new_wire(format!("{}.sout", g.name))).collect();

    // PLB outputs read by another PLB of the same gate get their own wire
    let mut internal: Vec<Vec<[Option<usize>; LUT_COUNT]>> = Vec::new();
    for g in mapped {
        let mut per = vec![[None; LUT_COUNT]; g.plbs.len()];
        for p in &g.plbs {
            for src in p.config.input_assignment {
                if let PinSource::Internal { plb, output } = src {
                    if per[plb][output].is_none() {
                        per[plb][output] = Some(new_wire(format!("{}.p{plb}.{output}", g.name)));
                    }
                }
            }
        }
        internal.push(per);
    }

    let signal_index = |name: &str| netlist.signals.iter().position(|s| s.name == name).expect("netlist signal");
    let mut elements: Vec<Element> = Vec::new();
    let mut ack_wire = vec![usize::MAX; netlist.signals.len()];
    let mut joins: Vec<(usize, Vec<usize>)> = Vec::new();
    for (s, spec) in netlist.signals.iter().enumerate() {
        let consumers = netlist.consumers(&spec.name);
        ack_wire[s] = match consumers.as_slice() {
            [] => new_wire(format!("{}.ack", spec.name)),
            [g] => sout[*g],
            many => {
                let w = new_wire(format!("{}.ack", spec.name));
                joins.push((w, many.iter().map(|&g| sout[g]).collect()));
                w
            }
        };
    }

    for (s, spec) in netlist.signals.iter().enumerate() {
        if netlist.driver(&spec.name).is_none() {
            elements.push(Element {
                kind: Kind::Producer {
                    signal: s,
                    values: stimulus.get(&spec.name).cloned().unwrap_or_default(),
                    next: 0,
                    wait: None,
                },
                inputs: vec![ack_wire[s]],
                seen: vec![false],
                delay: opts.env_delay.max(1),
            });
        }
        if netlist.consumers(&spec.name).is_empty() {
            elements.push(Element {
                kind: Kind::Consumer { ack: ack_wire[s] },
                inputs: data_wires[s].clone(),
                seen: vec![false; data_wires[s].len()],
                delay: opts.ack_delay.max(1),
            });
        }
    }
    let mut fabric_elements = Vec::new();
    for (output, inputs) in joins {
        fabric_elements.push(elements.len());
        elements.push(Element {
            kind: Kind::Join { output, state: false },
            seen: vec![false; inputs.len()],
            inputs,
            delay: 1,
        });
    }
    for (gi, (gate, mg)) in netlist.gates.iter().zip(mapped).enumerate() {
        let out_sig = signal_index(&gate.output.name);
        for (pi, placed) in mg.plbs.iter().enumerate() {
            let cfg = &placed.config;
            let mut inputs = Vec::new();
            let slot_of = |w: usize, inputs: &mut Vec<usize>| match inputs.iter().position(|&x| x == w) {
                Some(k) => k,
                None => {
                    inputs.push(w);
                    inputs.len() - 1
                }
            };
            let mut pins = [Pin::Zero; PIN_COUNT];
            for (pin, src) in cfg.input_assignment.iter().enumerate() {
                let wire = match *src {
                    PinSource::Nc => None,
                    PinSource::Data { input, wire } => {
                        let s = signal_index(&gate.inputs[input].name);
                        Some(data_wires[s][wire])
                    }
                    PinSource::AckIn => gate.with_ack.then_some(ack_wire[out_sig]),
                    PinSource::Internal { plb, output } => internal[gi][plb][output],
                };
                if let Some(w) = wire {
                    pins[pin] = Pin::Slot(slot_of(w, &mut inputs));
                }
            }
            let mut outs = [None; LUT_COUNT];
            for k in 0..LUT_COUNT {
                outs[k] = match cfg.output_assignment[k] {
                    Some(op) if op.output == 0 => Some(data_wires[out_sig][op.wire]),
                    Some(_) => {
                        return Err(SimError::Illegal {
                            gate: gate.name.clone(),
                            reason: "PLB drives a second logical output".into(),
                        })
                    }
                    None => internal[gi][pi][k],
                };
            }
            let mut acks = [None; 2];
            if mg.ack_out.0 == pi {
                acks[mg.ack_out.1] = Some(sout[gi]);
            }
            fabric_elements.push(elements.len());
            elements.push(Element {
                kind: Kind::Plb {
                    gate: gi,
                    plb: pi,
                    pins,
                    outs,
                    acks,
                    state: PlbState::reset(cfg),
                },
                seen: vec![false; inputs.len()],
                inputs,
                delay: 1,
            });
        }
    }

    let mut sampler = delays.sampler();
    let mut sinks = vec![Vec::new(); wires.len()];
    for (e, el) in elements.iter_mut().enumerate() {
        if fabric_elements.contains(&e) {
            el.delay = sampler.element();
        }
        for (slot, &w) in el.inputs.iter().enumerate() {
            sinks[w].push((e, slot, sampler.wire(&wires[w])));
        }
    }

    let mut wire_signal = vec![None; wires.len()];
    for (s, ws) in data_wires.iter().enumerate() {
        for &w in ws {
            wire_signal[w] = Some(s);
        }
    }
    let mut ack_signals = vec![Vec::new(); wires.len()];
    for (s, &w) in ack_wire.iter().enumerate() {
        ack_signals[w].push(s);
    }

    let trace = Trace {
        fabric: fabric_fingerprint(netlist, mapped),
        signals: netlist
            .signals
            .iter()
            .enumerate()
            .map(|(s, spec)| TraceSignal {
                name: spec.name.clone(),
                protocol: spec.protocol,
                arity: spec.arity,
                wires: data_wires[s].clone(),
                ack: ack_wire[s],
            })
            .collect(),
        gates: netlist
            .gates
            .iter()
            .map(|g| TraceGate {
                name: g.name.clone(),
                inputs: g.inputs.iter().map(|s| s.name.clone()).collect(),
                output: g.output.name.clone(),
                with_ack: g.with_ack,
            })
            .collect(),
        stimulus: stimulus.clone(),
        wires,
        ..Trace::default()
    };
    let n_wires = trace.wires.len();
    let mut k = Kernel {
        netlist,
        mapped,
        elements,
        sinks,
        levels: vec![false; n_wires],
        projected: vec![false; n_wires],
        data_wires,
        wire_signal,
        ack_signals,
        marker_count: vec![0; netlist.signals.len()],
        queue: BinaryHeap::new(),
        seq: 0,
        trace,
        abort: false,
    };

    // settle every element on the reset levels, then start the producers
    for e in 0..k.elements.len() {
        k.react(e, 0);
    }
    let mut now = 0;
    let mut timed_out = false;
    while let Some(Reverse((time, _, ev))) = k.queue.pop() {
        if k.abort {
            break;
        }
        if time > opts.max_time {
            timed_out = true;
            k.trace.diagnostics.push(Diagnostic::NonQuiescent {
                max_time: opts.max_time,
            });
            break;
        }
        now = time;
        match ev {
            Event::Change { wire, level } => k.change(time, wire, level),
            Event::Arrive { element, slot, level } => {
                k.elements[element].seen[slot] = level;
                k.react(element, time);
            }
        }
    }
    if !timed_out && !k.abort {
        let pending: Vec<String> = k
            .elements
            .iter()
            .filter_map(|el| match &el.kind {
                Kind::Producer {
                    signal,
                    values,
                    next,
                    wait,
                } if wait.is_some() || *next < values.len() => Some(netlist.signals[*signal].name.clone()),
                _ => None,
            })
            .collect();
        if !pending.is_empty() {
            k.trace.diagnostics.push(Diagnostic::Deadlock { time: now, pending });
        }
    }
    Ok(k.trace)
}
