//! Text netlists and stimulus files.
//!
//! ```text
//! # comment
//! signal x proto=4ph arity=2
//! gate g fn=8 in=x,y out=o ack
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::encodings::{Protocol, SignalSpec};
use crate::mapper::{GateFunction, GateSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub signals: Vec<SignalSpec>,
    pub gates: Vec<GateSpec>,
}

impl Netlist {
    pub fn signal(&self, name: &str) -> Option<&SignalSpec> {
        self.signals.iter().find(|s| s.name == name)
    }

    /// Index of the gate driving `signal`.
    pub fn driver(&self, signal: &str) -> Option<usize> {
        self.gates.iter().position(|g| g.output.name == signal)
    }

    /// Indices of the gates reading `signal`.
    pub fn consumers(&self, signal: &str) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.inputs.iter().any(|s| s.name == signal))
            .map(|(i, _)| i)
            .collect()
    }

    /// Signals no gate drives; the environment produces them.
    pub fn primary_inputs(&self) -> Vec<&SignalSpec> {
        self.signals.iter().filter(|s| self.driver(&s.name).is_none()).collect()
    }

    /// Signals no gate reads; the environment consumes them.
    pub fn primary_outputs(&self) -> Vec<&SignalSpec> {
        self.signals.iter().filter(|s| self.consumers(&s.name).is_empty()).collect()
    }

    /// Gate indices ordered so every gate comes after its drivers.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = self
            .gates
            .iter()
            .map(|g| g.inputs.iter().filter(|s| self.driver(&s.name).is_some()).count())
            .collect();
        let mut ready: Vec<usize> = (0..self.gates.len()).filter(|&i| indegree[i] == 0).collect();
        ready.reverse();
        let mut order = Vec::new();
        while let Some(g) = ready.pop() {
            order.push(g);
            for c in self.consumers(&self.gates[g].output.name) {
                let n = self.gates[c].inputs.iter().filter(|s| s.name == self.gates[g].output.name).count();
                indegree[c] -= n;
                if indegree[c] == 0 {
                    ready.insert(0, c);
                }
            }
        }
        (order.len() == self.gates.len()).then_some(order)
    }

    /// Canonical text form; parsing it yields an equal netlist.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.signals {
            let _ = writeln!(out, "signal {} proto={} arity={}", s.name, s.protocol.tag(), s.arity);
        }
        for g in &self.gates {
            let inputs: Vec<&str> = g.inputs.iter().map(|s| s.name.as_str()).collect();
            let _ = writeln!(
                out,
                "gate {} fn={} in={} out={}{}",
                g.name,
                g.function.to_hex(),
                inputs.join(","),
                g.output.name,
                if g.with_ack { " ack" } else { "" }
            );
        }
        out
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices().chain([(line.len(), ' ')]) {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    out
}

pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut signals: Vec<SignalSpec> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut gates: Vec<GateSpec> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(head) = toks.first() else { continue };
        let err = |column: usize, message: String| ParseError {
            line: n + 1,
            column,
            message,
        };
        let field = |key: &str| -> Result<&Token, ParseError> {
            toks.iter()
                .skip(2)
                .find(|t| t.text.starts_with(key) && t.text[key.len()..].starts_with('='))
                .ok_or_else(|| err(head.column, format!("missing `{key}=`")))
        };
        let value = |t: &Token<'_>| -> String { t.text.split_once('=').map(|x| x.1).unwrap_or("").to_string() };
        let name = toks
            .get(1)
            .filter(|t| !t.text.contains('='))
            .ok_or_else(|| err(head.column, format!("`{}` needs a name", head.text)))?;

        match head.text {
            "signal" => {
                for t in &toks[2..] {
                    if !(t.text.starts_with("proto=") || t.text.starts_with("arity=")) {
                        return Err(err(t.column, format!("unexpected `{}`", t.text)));
                    }
                }
                let proto_tok = field("proto")?;
                let protocol = Protocol::from_tag(&value(proto_tok))
                    .ok_or_else(|| err(proto_tok.column, format!("unknown protocol `{}`", value(proto_tok))))?;
                let arity_tok = field("arity")?;
                let arity: usize = value(arity_tok)
                    .parse()
                    .map_err(|_| err(arity_tok.column, format!("bad arity `{}`", value(arity_tok))))?;
                let spec = SignalSpec::new(name.text, protocol, arity).map_err(|e| err(arity_tok.column, e.to_string()))?;
                if index.contains_key(name.text) {
                    return Err(err(name.column, format!("signal `{}` declared twice", name.text)));
                }
                index.insert(name.text.to_string(), signals.len());
                signals.push(spec);
            }
            "gate" => {
                let mut with_ack = false;
                for t in &toks[2..] {
                    match t.text {
                        "ack" => with_ack = true,
                        s if s.starts_with("fn=") || s.starts_with("in=") || s.starts_with("out=") => {}
                        s => return Err(err(t.column, format!("unexpected `{s}`"))),
                    }
                }
                if gates.iter().any(|g| g.name == name.text) {
                    return Err(err(name.column, format!("gate `{}` declared twice", name.text)));
                }
                let lookup = |tok: &Token<'_>, s: &str| -> Result<SignalSpec, ParseError> {
                    index
                        .get(s)
                        .map(|&i| signals[i].clone())
                        .ok_or_else(|| err(tok.column, format!("unknown signal `{s}`")))
                };
                let in_tok = field("in")?;
                let in_names = value(in_tok);
                let mut inputs = Vec::new();
                for s in in_names.split(',') {
                    let spec = lookup(in_tok, s)?;
                    if inputs.iter().any(|x: &SignalSpec| x.name == spec.name) {
                        return Err(err(in_tok.column, format!("signal `{s}` read twice")));
                    }
                    inputs.push(spec);
                }
                let out_tok = field("out")?;
                let output = lookup(out_tok, &value(out_tok))?;
                if let Some(other) = gates.iter().find(|g| g.output.name == output.name) {
                    return Err(err(
                        out_tok.column,
                        format!("signal `{}` already driven by `{}`", output.name, other.name),
                    ));
                }
                let fn_tok = field("fn")?;
                let arities = inputs.iter().map(|s| s.arity).collect();
                let function = GateFunction::from_hex(&value(fn_tok), arities, output.arity).ok_or_else(|| {
                    err(
                        fn_tok.column,
                        format!("`{}` is not a truth table for this gate's arities", value(fn_tok)),
                    )
                })?;
                gates.push(GateSpec {
                    name: name.text.to_string(),
                    function,
                    protocol: output.protocol,
                    inputs,
                    output,
                    with_ack,
                });
            }
            other => return Err(err(head.column, format!("unknown directive `{other}`"))),
        }
    }
    let netlist = Netlist { signals, gates };
    if netlist.topological_order().is_none() {
        return Err(ParseError {
            line: 0,
            column: 0,
            message: "gates form a combinational cycle".into(),
        });
    }
    Ok(netlist)
}

/// Netlist of one gate `g` reading `x`, `y` (and `z` for three inputs) and
/// driving `o`.
pub fn single_gate(protocol: Protocol, function: &GateFunction, with_ack: bool) -> Netlist {
    let names = ["x", "y", "z", "w"];
    let inputs: Vec<SignalSpec> = function
        .input_arities()
        .iter()
        .zip(names)
        .map(|(&a, n)| SignalSpec::new(n, protocol, a).expect("supported arity"))
        .collect();
    let output = SignalSpec::new("o", protocol, function.output_arity()).expect("supported arity");
    let mut signals = inputs.clone();
    signals.push(output.clone());
    Netlist {
        signals,
        gates: vec![GateSpec {
            name: "g".into(),
            function: function.clone(),
            protocol,
            inputs,
            output,
            with_ack,
        }],
    }
}

/// Logical value sequences for the primary inputs.
pub type Stimulus = BTreeMap<String, Vec<usize>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StimulusError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("signal `{0}` is driven by a gate, not the environment")]
    NotAnInput(String),
    #[error("value {value} out of range for `{signal}` (arity {arity})")]
    OutOfRange { signal: String, value: usize, arity: usize },
}

pub fn parse_stimulus(text: &str, netlist: &Netlist) -> Result<Stimulus, StimulusError> {
    let mut stim = Stimulus::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| StimulusError::Syntax { line: n + 1, message };
        let (name, values) = line
            .split_once(':')
            .ok_or_else(|| syntax("expected `<signal>: v1,v2,...`".into()))?;
        let name = name.trim();
        let values: Vec<usize> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| v.parse().map_err(|_| syntax(format!("bad value `{v}`"))))
            .collect::<Result<_, _>>()?;
        stim.insert(name.to_string(), values);
    }
    validate_stimulus(&stim, netlist)?;
    Ok(stim)
}

pub fn validate_stimulus(stim: &Stimulus, netlist: &Netlist) -> Result<(), StimulusError> {
    for (name, values) in stim {
        let spec = netlist
            .signal(name)
            .ok_or_else(|| StimulusError::UnknownSignal(name.clone()))?;
        if netlist.driver(name).is_some() {
            return Err(StimulusError::NotAnInput(name.clone()));
        }
        if let Some(&value) = values.iter().find(|&&v| v >= spec.arity) {
            return Err(StimulusError::OutOfRange {
                signal: name.clone(),
                value,
                arity: spec.arity,
            });
        }
    }
    Ok(())
}

pub fn stimulus_to_text(stim: &Stimulus) -> String {
    stim.iter()
        .map(|(k, v)| {
            let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("{k}: {}\n", vals.join(","))
        })
        .collect()
}
