//! Data-dependence of observable activity: toggle counts, completion times,
//! DPA difference of means and the LEDR level-correlation flag.
//!
//! The power proxy is the number of wire toggles per tick. Transactions are
//! delimited by the simulator's boundary markers on the analysed signal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::encodings::Protocol;
use crate::mapper::{GateFunction, MappedGate, PlacedPlb, PlbRole};
use crate::netlist::{single_gate, Netlist};
use crate::plb::{plb_output, LutTable, PinSource, PlbConfig};
use crate::sim::trace::{decode_sequence, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SideChannelError {
    #[error("traces come from different fabrics ({0:016x} and {1:016x})")]
    MixedFabrics(u64, u64),
    #[error("signal `{0}` is not in the trace")]
    UnknownSignal(String),
    #[error("partition `{0}` is empty")]
    EmptyPartition(&'static str),
}

/// Traces grouped by a label describing their data (e.g. `x=1;y=0`).
pub type Groups = BTreeMap<String, Vec<Trace>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToggleScope {
    /// Only the data wires of the analysed signal.
    Signal,
    /// Every wire of the fabric, environment included.
    All,
}

fn check_fabric<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> Result<(), SideChannelError> {
    let mut first = None;
    for t in traces {
        match first {
            None => first = Some(t.fabric),
            Some(f) if f != t.fabric => return Err(SideChannelError::MixedFabrics(f, t.fabric)),
            _ => {}
        }
    }
    Ok(())
}

/// Label built from a trace's stimulus, for grouping.
pub fn stimulus_label(trace: &Trace) -> String {
    trace
        .stimulus
        .iter()
        .map(|(k, v)| {
            let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("{k}={}", vals.join(","))
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn group_by_stimulus(traces: Vec<Trace>) -> Groups {
    let mut g = Groups::new();
    for t in traces {
        g.entry(stimulus_label(&t)).or_default().push(t);
    }
    g
}

/// Toggles within each completed transaction of `signal`.
pub fn transaction_toggles(trace: &Trace, signal: &str, scope: ToggleScope) -> Result<Vec<usize>, SideChannelError> {
    let s = trace
        .signal(signal)
        .ok_or_else(|| SideChannelError::UnknownSignal(signal.to_string()))?;
    let mut counts = Vec::new();
    let mut start = 0;
    for m in trace.markers.iter().filter(|m| m.signal == signal) {
        let n = trace.events[start..=m.after]
            .iter()
            .filter(|e| scope == ToggleScope::All || s.wires.contains(&e.wire))
            .count();
        counts.push(n);
        start = m.after + 1;
    }
    Ok(counts)
}

/// Per group, the toggle count of every completed transaction of `signal`.
pub fn toggle_count_profile(
    groups: &Groups,
    signal: &str,
    scope: ToggleScope,
) -> Result<BTreeMap<String, Vec<usize>>, SideChannelError> {
    check_fabric(groups.values().flatten())?;
    let mut out = BTreeMap::new();
    for (label, traces) in groups {
        let mut counts = Vec::new();
        for t in traces {
            counts.extend(transaction_toggles(t, signal, scope)?);
        }
        out.insert(label.clone(), counts);
    }
    Ok(out)
}

/// Population variance of all counts in a profile.
pub fn profile_variance(profile: &BTreeMap<String, Vec<usize>>) -> f64 {
    let all: Vec<f64> = profile.values().flatten().map(|&c| c as f64).collect();
    if all.is_empty() {
        return 0.0;
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    all.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / all.len() as f64
}

/// Largest difference, over transaction indices, between the earliest and
/// latest completion of that transaction across all traces.
pub fn timing_spread(groups: &Groups, signal: &str) -> Result<u64, SideChannelError> {
    check_fabric(groups.values().flatten())?;
    let times: Vec<Vec<u64>> = groups
        .values()
        .flatten()
        .map(|t| {
            t.signal(signal)
                .map(|_| t.transaction_times(signal))
                .ok_or_else(|| SideChannelError::UnknownSignal(signal.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let depth = times.iter().map(Vec::len).max().unwrap_or(0);
    let mut spread = 0;
    for k in 0..depth {
        let col: Vec<u64> = times.iter().filter_map(|t| t.get(k).copied()).collect();
        let (lo, hi) = (col.iter().min().unwrap(), col.iter().max().unwrap());
        spread = spread.max(hi - lo);
    }
    Ok(spread)
}

/// Wire toggles per tick, from tick 0 to `len - 1`.
pub fn power_series(trace: &Trace, len: usize) -> Vec<u32> {
    let mut s = vec![0u32; len];
    for e in &trace.events {
        if let Some(slot) = s.get_mut(e.time as usize) {
            *slot += 1;
        }
    }
    s
}

/// Mean power series of partition A (`select` true) minus partition B.
pub fn dpa_difference_of_means(traces: &[Trace], select: impl Fn(&Trace) -> bool) -> Result<Vec<f64>, SideChannelError> {
    check_fabric(traces)?;
    let len = traces.iter().map(|t| t.end_time() as usize + 1).max().unwrap_or(0);
    let (a, b): (Vec<&Trace>, Vec<&Trace>) = traces.iter().partition(|t| select(t));
    if a.is_empty() {
        return Err(SideChannelError::EmptyPartition("A"));
    }
    if b.is_empty() {
        return Err(SideChannelError::EmptyPartition("B"));
    }
    let mean = |part: &[&Trace]| -> Vec<f64> {
        let mut sum = vec![0u64; len];
        for t in part {
            for (acc, v) in sum.iter_mut().zip(power_series(t, len)) {
                *acc += v as u64;
            }
        }
        sum.iter().map(|&x| x as f64 / part.len() as f64).collect()
    };
    let (ma, mb) = (mean(&a), mean(&b));
    Ok(ma.iter().zip(&mb).map(|(x, y)| x - y).collect())
}

/// Selection on the value carried by `signal` in transaction `index`.
pub fn select_value(signal: &str, index: usize, value: usize) -> impl Fn(&Trace) -> bool + '_ {
    move |t: &Trace| {
        t.signal(signal)
            .map(|s| decode_sequence(t, s).get(index) == Some(&value))
            .unwrap_or(false)
    }
}

/// Pearson correlation; 0 when either series is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n == 0 {
        return 0.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRisk {
    pub signal: String,
    pub protocol: Protocol,
    pub samples: usize,
    pub correlation: f64,
    pub flagged: bool,
}

/// Correlation between the value of each transaction of `signal` and what
/// stays observable once it completes: the level of wire 0 for
/// level-encoded protocols (the data wire `X_d` for LEDR, a NULL for
/// 4-phase), the toggle count for the edge protocol.
pub fn level_value_correlation(traces: &[Trace], signal: &str) -> Result<LevelRisk, SideChannelError> {
    let mut obs = Vec::new();
    let mut vals = Vec::new();
    let mut protocol = Protocol::FourPhase;
    for t in traces {
        let s = t
            .signal(signal)
            .ok_or_else(|| SideChannelError::UnknownSignal(signal.to_string()))?;
        protocol = s.protocol;
        let values = decode_sequence(t, s);
        let toggles = transaction_toggles(t, signal, ToggleScope::Signal)?;
        let mut levels: Vec<bool> = vec![false; t.wires.len()];
        let mut next_event = 0;
        for (k, m) in t.markers.iter().filter(|m| m.signal == signal).enumerate() {
            while next_event <= m.after {
                let e = &t.events[next_event];
                levels[e.wire] = e.new;
                next_event += 1;
            }
            let Some(&v) = values.get(k) else { break };
            let o = match protocol {
                Protocol::Edge => toggles[k] as f64,
                _ => levels[s.wires[0]] as u8 as f64,
            };
            obs.push(o);
            vals.push(v as f64);
        }
    }
    let correlation = correlation(&obs, &vals);
    Ok(LevelRisk {
        signal: signal.to_string(),
        protocol,
        samples: obs.len(),
        correlation,
        flagged: correlation.abs() > 1e-9,
    })
}

/// Single-rail gate used as an unprotected reference: wire 1 of the output
/// rises only when `f = 1`, and a separate completion LUT acknowledges the
/// inputs. Output value 0 produces no output activity at all.
pub fn single_rail_reference(f: &GateFunction) -> (Netlist, Vec<MappedGate>) {
    let netlist = single_gate(Protocol::FourPhase, f, false);
    let mut cfg = PlbConfig::default();
    for group in [0, 6] {
        for (k, (input, wire)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            cfg.input_assignment[group + k] = PinSource::Data { input, wire };
        }
    }
    let valid = |i: &[bool; 6]| (i[0] ^ i[1]) && (i[2] ^ i[3]);
    cfg.luts[0] = LutTable::from_fn(|i| valid(&i) && f.eval(&[i[1] as usize, i[3] as usize]) == 1);
    cfg.luts[2] = LutTable::from_fn(|i| valid(&i));
    cfg.output_assignment[0] = Some(plb_output(0, 1));
    let gate = MappedGate {
        name: "g".into(),
        protocol: Protocol::FourPhase,
        plbs: vec![PlacedPlb {
            role: PlbRole::Main,
            config: cfg,
        }],
        ack_out: (0, 1),
    };
    (netlist, vec![gate])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakReport {
    pub signal: String,
    pub toggle_profile: BTreeMap<String, Vec<usize>>,
    pub toggle_variance: f64,
    pub timing_spread: u64,
    /// Largest absolute DPA difference over every selection tried.
    pub dpa_peak: f64,
    /// `(selection, series)` for each value of the first transaction.
    pub dpa_series: Vec<(String, Vec<f64>)>,
}

impl LeakReport {
    pub fn balanced(&self) -> bool {
        self.toggle_variance == 0.0 && self.timing_spread == 0 && self.dpa_peak == 0.0
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "signal {}", self.signal);
        for (label, counts) in &self.toggle_profile {
            let _ = writeln!(out, "  toggles[{label}] = {counts:?}");
        }
        let _ = writeln!(out, "  toggle variance = {}", self.toggle_variance);
        let _ = writeln!(out, "  timing spread = {} ticks", self.timing_spread);
        let _ = writeln!(out, "  dpa peak = {}", self.dpa_peak);
        out
    }

    /// One row per tick: `tick,<selection>...`.
    pub fn dpa_csv(&self) -> String {
        let mut out = String::from("tick");
        for (name, _) in &self.dpa_series {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        let len = self.dpa_series.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
        for t in 0..len {
            out.push_str(&t.to_string());
            for (_, s) in &self.dpa_series {
                let _ = write!(out, ",{}", s.get(t).copied().unwrap_or(0.0));
            }
            out.push('\n');
        }
        out
    }
}

/// Toggle profile (whole fabric), timing spread and DPA over the value of
/// the first transaction of `signal`. Selections that leave a partition
/// empty are skipped.
pub fn leak_report(groups: &Groups, signal: &str) -> Result<LeakReport, SideChannelError> {
    let toggle_profile = toggle_count_profile(groups, signal, ToggleScope::All)?;
    let timing_spread = timing_spread(groups, signal)?;
    let traces: Vec<Trace> = groups.values().flatten().cloned().collect();
    let arity = traces
        .first()
        .and_then(|t| t.signal(signal))
        .map_or(0, |s| s.arity);
    let mut dpa_series = Vec::new();
    for v in 0..arity {
        match dpa_difference_of_means(&traces, select_value(signal, 0, v)) {
            Ok(series) => dpa_series.push((format!("{signal}[0]={v}"), series)),
            Err(SideChannelError::EmptyPartition(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let dpa_peak = dpa_series
        .iter()
        .flat_map(|(_, s)| s.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(LeakReport {
        signal: signal.to_string(),
        toggle_variance: profile_variance(&toggle_profile),
        toggle_profile,
        timing_spread,
        dpa_peak,
        dpa_series,
    })
}
