//! Protocol properties evaluated over recorded traces.

use std::fmt;

use super::trace::{Trace, TraceSignal};
use crate::encodings::{decode_4ph, Protocol, ValueKind, WireVec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Signal or gate the violation is attributed to.
    pub subject: String,
    pub time: u64,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t={}: {}", self.subject, self.time, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdict {
    /// Number of individual checks performed.
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: Verdict) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
    }
}

fn levels_of(levels: &[bool], s: &TraceSignal) -> WireVec {
    WireVec::from_slice(&s.wires.iter().map(|&w| levels[w]).collect::<Vec<_>>())
}

/// Between two consecutive changes of a signal's acknowledge wire exactly
/// one of its data wires changes.
pub fn check_single_toggle(trace: &Trace) -> Verdict {
    let mut v = Verdict::default();
    for s in &trace.signals {
        let mut count = 0usize;
        let mut last = 0;
        for e in &trace.events {
            if s.wires.contains(&e.wire) {
                count += 1;
                last = e.time;
                if count > 1 {
                    v.violations.push(Violation {
                        subject: s.name.clone(),
                        time: e.time,
                        detail: format!("{count} data-wire changes before the acknowledge"),
                    });
                }
            } else if e.wire == s.ack {
                v.checked += 1;
                if count == 0 {
                    v.violations.push(Violation {
                        subject: s.name.clone(),
                        time: e.time,
                        detail: "acknowledge without a data-wire change".into(),
                    });
                }
                count = 0;
            }
        }
        if count > 1 {
            v.violations.push(Violation {
                subject: s.name.clone(),
                time: last,
                detail: "unacknowledged data-wire changes at end of trace".into(),
            });
        }
    }
    v
}

/// Every gate output change happens only once all data inputs have arrived
/// and the acknowledge input allows it.
pub fn check_no_early_evaluation(trace: &Trace) -> Verdict {
    let mut v = Verdict::default();
    let gates: Vec<(&str, &TraceSignal, Vec<&TraceSignal>, bool)> = trace
        .gates
        .iter()
        .filter_map(|g| {
            let out = trace.signal(&g.output)?;
            let ins = g.inputs.iter().map(|n| trace.signal(n)).collect::<Option<Vec<_>>>()?;
            Some((g.name.as_str(), out, ins, g.with_ack))
        })
        .collect();
    for (e, levels) in trace.replay() {
        for (name, out, ins, with_ack) in &gates {
            if !out.wires.contains(&e.wire) {
                continue;
            }
            v.checked += 1;
            let ack = levels[out.ack];
            let ok = match out.protocol {
                Protocol::FourPhase => {
                    let kinds: Vec<ValueKind> = ins.iter().map(|s| decode_4ph(levels_of(&levels, s)).kind).collect();
                    if e.new {
                        kinds.iter().all(|k| matches!(k, ValueKind::Valid(_))) && !(*with_ack && ack)
                    } else {
                        kinds.iter().all(|k| *k == ValueKind::Null) && !(*with_ack && !ack)
                    }
                }
                _ => {
                    let phase = levels_of(&levels, out).weight() % 2 == 1;
                    ins.iter().all(|s| (levels_of(&levels, s).weight() % 2 == 1) == phase) && !(*with_ack && ack == phase)
                }
            };
            if !ok {
                v.violations.push(Violation {
                    subject: name.to_string(),
                    time: e.time,
                    detail: format!("output wire {} changed before its inputs allowed it", trace.wires[e.wire]),
                });
            }
        }
    }
    v
}
