//! Recorded wire activity and its CSV form.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::encodings::{decode_4ph, decode_two_phase, Protocol, ValueKind, WireVec};
use crate::netlist::Stimulus;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSignal {
    pub name: String,
    pub protocol: Protocol,
    pub arity: usize,
    pub wires: Vec<usize>,
    pub ack: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceGate {
    pub name: String,
    pub inputs: Vec<String>,
    pub output: String,
    pub with_ack: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: u64,
    pub wire: usize,
    pub old: bool,
    pub new: bool,
}

/// End of one complete value/acknowledge cycle of a signal, recorded right
/// after event `after` (an index into the event list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marker {
    pub after: usize,
    pub time: u64,
    pub signal: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    Deadlock { time: u64, pending: Vec<String> },
    NonQuiescent { max_time: u64 },
    Forbidden { time: u64, signal: String },
    Oscillation { time: u64, gate: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Deadlock { time, pending } => {
                write!(f, "deadlock at t={time}: producers still waiting on {}", pending.join(","))
            }
            Diagnostic::NonQuiescent { max_time } => write!(f, "still active at max time {max_time}"),
            Diagnostic::Forbidden { time, signal } => write!(f, "forbidden state on `{signal}` at t={time}"),
            Diagnostic::Oscillation { time, gate } => write!(f, "gate `{gate}` oscillates at t={time}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub fabric: u64,
    pub wires: Vec<String>,
    pub signals: Vec<TraceSignal>,
    pub gates: Vec<TraceGate>,
    pub stimulus: Stimulus,
    pub events: Vec<TraceEvent>,
    pub markers: Vec<Marker>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

impl Trace {
    pub fn signal(&self, name: &str) -> Option<&TraceSignal> {
        self.signals.iter().find(|s| s.name == name)
    }

    pub fn wire_id(&self, name: &str) -> Option<usize> {
        self.wires.iter().position(|w| w == name)
    }

    /// Signals driven by the environment.
    pub fn primary_inputs(&self) -> Vec<&TraceSignal> {
        self.signals
            .iter()
            .filter(|s| !self.gates.iter().any(|g| g.output == s.name))
            .collect()
    }

    /// Signals read by the environment.
    pub fn primary_outputs(&self) -> Vec<&TraceSignal> {
        self.signals
            .iter()
            .filter(|s| !self.gates.iter().any(|g| g.inputs.contains(&s.name)))
            .collect()
    }

    pub fn end_time(&self) -> u64 {
        self.events.last().map_or(0, |e| e.time)
    }

    /// Completion times of the transactions of `signal`, in order.
    pub fn transaction_times(&self, signal: &str) -> Vec<u64> {
        self.markers
            .iter()
            .filter(|m| m.signal == signal)
            .map(|m| m.time)
            .collect()
    }

    /// Wire levels after every event, starting from the all-zero reset.
    pub fn replay(&self) -> impl Iterator<Item = (&TraceEvent, Vec<bool>)> + '_ {
        let mut levels = vec![false; self.wires.len()];
        self.events.iter().map(move |e| {
            levels[e.wire] = e.new;
            (e, levels.clone())
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# qdifab trace v1\n");
        let _ = writeln!(out, "# fabric {:016x}", self.fabric);
        for (i, w) in self.wires.iter().enumerate() {
            let _ = writeln!(out, "# wire {i} {w}");
        }
        for s in &self.signals {
            let wires: Vec<String> = s.wires.iter().map(|w| w.to_string()).collect();
            let _ = writeln!(
                out,
                "# signal {} proto={} arity={} wires={} ack={}",
                s.name,
                s.protocol.tag(),
                s.arity,
                wires.join(","),
                s.ack
            );
        }
        for g in &self.gates {
            let _ = writeln!(
                out,
                "# gate {} in={} out={}{}",
                g.name,
                g.inputs.join(","),
                g.output,
                if g.with_ack { " ack" } else { "" }
            );
        }
        for (name, values) in &self.stimulus {
            let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "# stimulus {name}: {}", v.join(","));
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "# diagnostic {d}");
        }
        out.push_str("time,wire,old,new\n");
        let mut markers = self.markers.iter().peekable();
        for (i, e) in self.events.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", e.time, e.wire, e.old as u8, e.new as u8);
            while let Some(m) = markers.next_if(|m| m.after == i) {
                let _ = writeln!(out, "# transaction {} {}", m.signal, m.index);
            }
        }
        out
    }

    /// Parses [`Trace::to_csv`] output. Diagnostics are not restored.
    pub fn from_csv(text: &str) -> Result<Trace, TraceError> {
        let mut t = Trace::default();
        let mut seen_header = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: &str| TraceError {
                line: n + 1,
                message: message.to_string(),
            };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                let (kind, body) = rest.split_once(' ').unwrap_or((rest, ""));
                match kind {
                    "fabric" => t.fabric = u64::from_str_radix(body, 16).map_err(|_| err("bad fabric id"))?,
                    "wire" => {
                        let (id, name) = body.split_once(' ').ok_or_else(|| err("bad wire line"))?;
                        if id.parse::<usize>().ok() != Some(t.wires.len()) {
                            return Err(err("wire ids must be consecutive"));
                        }
                        t.wires.push(name.to_string());
                    }
                    "signal" => t.signals.push(parse_signal(body).ok_or_else(|| err("bad signal line"))?),
                    "gate" => t.gates.push(parse_gate(body).ok_or_else(|| err("bad gate line"))?),
                    "stimulus" => {
                        let (name, vals) = body.split_once(':').ok_or_else(|| err("bad stimulus line"))?;
                        let values = vals
                            .split(',')
                            .map(str::trim)
                            .filter(|v| !v.is_empty())
                            .map(|v| v.parse().map_err(|_| err("bad stimulus value")))
                            .collect::<Result<Vec<usize>, _>>()?;
                        t.stimulus.insert(name.trim().to_string(), values);
                    }
                    "transaction" => {
                        let (signal, idx) = body.split_once(' ').ok_or_else(|| err("bad marker"))?;
                        let after = t.events.len().checked_sub(1).ok_or_else(|| err("marker before any event"))?;
                        t.markers.push(Marker {
                            after,
                            time: t.events[after].time,
                            signal: signal.to_string(),
                            index: idx.parse().map_err(|_| err("bad marker index"))?,
                        });
                    }
                    _ => {}
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            if line == "time,wire,old,new" {
                seen_header = true;
                continue;
            }
            if !seen_header {
                return Err(err("event row before the column header"));
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err("expected four columns"));
            }
            let bit = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err("levels must be 0 or 1")),
            };
            let e = TraceEvent {
                time: f[0].parse().map_err(|_| err("bad time"))?,
                wire: f[1].parse().map_err(|_| err("bad wire id"))?,
                old: bit(f[2])?,
                new: bit(f[3])?,
            };
            if e.wire >= t.wires.len() {
                return Err(err("unknown wire id"));
            }
            if t.events.last().is_some_and(|p| p.time > e.time) {
                return Err(err("events out of time order"));
            }
            t.events.push(e);
        }
        if !seen_header {
            return Err(TraceError {
                line: 0,
                message: "missing `time,wire,old,new` header".into(),
            });
        }
        Ok(t)
    }
}

fn kv<'a>(tokens: &[&'a str], key: &str) -> Option<&'a str> {
    tokens
        .iter()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

fn parse_signal(body: &str) -> Option<TraceSignal> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    Some(TraceSignal {
        name: toks.first()?.to_string(),
        protocol: Protocol::from_tag(kv(&toks, "proto")?)?,
        arity: kv(&toks, "arity")?.parse().ok()?,
        wires: kv(&toks, "wires")?
            .split(',')
            .map(|w| w.parse().ok())
            .collect::<Option<_>>()?,
        ack: kv(&toks, "ack")?.parse().ok()?,
    })
}

fn parse_gate(body: &str) -> Option<TraceGate> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    Some(TraceGate {
        name: toks.first()?.to_string(),
        inputs: kv(&toks, "in")?.split(',').map(String::from).collect(),
        output: kv(&toks, "out")?.to_string(),
        with_ack: toks.contains(&"ack"),
    })
}

/// Logical values carried by `signal`, in the order they were emitted.
pub fn decode_sequence(trace: &Trace, signal: &TraceSignal) -> Vec<usize> {
    let mut current = WireVec::zeros(signal.wires.len());
    let mut values = Vec::new();
    for e in &trace.events {
        let Some(k) = signal.wires.iter().position(|&w| w == e.wire) else {
            continue;
        };
        let prev = current;
        current.set(k, e.new);
        match signal.protocol {
            Protocol::FourPhase => {
                if let ValueKind::Valid(v) = decode_4ph(current).kind {
                    values.push(v);
                }
            }
            p => {
                if let Some(v) = decode_two_phase(p, prev, current) {
                    values.push(v);
                }
            }
        }
    }
    values
}

/// Decoded sequences of every environment-read signal.
pub fn output_sequences(trace: &Trace) -> Vec<(String, Vec<usize>)> {
    trace
        .primary_outputs()
        .into_iter()
        .map(|s| (s.name.clone(), decode_sequence(trace, s)))
        .collect()
}
