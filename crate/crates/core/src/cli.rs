//! `qdifab` command line: map netlists to bitstreams, simulate bitstreams,
//! check properties of traces.
//!
//! Exit status: 0 success, 1 property violation or simulation diagnostic,
//! 2 input or usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bitstream::{map_netlist, read_bitstream, write_bitstream};
use crate::encodings::Protocol;
use crate::netlist::{parse_netlist, parse_stimulus};
use crate::sidechannel::{group_by_stimulus, leak_report, timing_spread, toggle_count_profile, profile_variance, ToggleScope};
use crate::sim::{check_no_early_evaluation, check_single_toggle, run, DelayModel, SimOptions, Trace, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Environment variable holding the default jitter seed.
pub const SEED_VAR: &str = "QDIFAB_SEED";

#[derive(Debug, Parser)]
#[command(name = "qdifab", version, about = "QDI PLB fabric mapper and simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map a netlist to a bitstream.
    Map {
        netlist: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Force every signal to this protocol.
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<Protocol>,
    },
    /// Simulate a bitstream against a stimulus file.
    Sim {
        bitstream: PathBuf,
        stimulus: PathBuf,
        /// `uniform`, `uniform:<ticks>`, `jitter` or `jitter:<seed>`.
        #[arg(long, default_value = "uniform")]
        delays: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_time: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a property over one or more traces.
    Check {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        property: Property,
        /// Signal analysed by the side-channel properties (default: first
        /// environment-read signal).
        #[arg(long)]
        signal: Option<String>,
        /// CSV report destination.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    SingleToggle,
    NoEarlyEval,
    ToggleCount,
    Timing,
    Dpa,
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    Protocol::from_tag(s).ok_or_else(|| format!("unknown protocol `{s}` (4ph, ledr, edge)"))
}

/// Parses a `--delays` value; `jitter` without a seed uses `default_seed`.
pub fn parse_delays(spec: &str, default_seed: Option<u64>) -> Result<DelayModel, String> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let num = |a: &str| a.parse::<u64>().map_err(|_| format!("bad number `{a}` in --delays"));
    match (kind, arg) {
        ("uniform", None) => Ok(DelayModel::uniform(1)),
        ("uniform", Some(a)) => Ok(DelayModel::uniform(num(a)?)),
        ("jitter", None) => Ok(DelayModel::jitter(default_seed.unwrap_or(0))),
        ("jitter", Some(a)) => Ok(DelayModel::jitter(num(a)?)),
        _ => Err(format!("unknown delay model `{spec}`")),
    }
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{SEED_VAR} must be an unsigned integer")),
        Err(_) => Ok(None),
    }
}

/// Result of one command: exit status plus what to print.
#[derive(Debug, Default)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn input_error(msg: impl std::fmt::Display) -> Self {
        Outcome {
            status: EXIT_INPUT,
            stderr: format!("error: {msg}\n"),
            ..Outcome::default()
        }
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    fs::read_to_string(path).map_err(|e| Outcome::input_error(format!("{}: {e}", path.display())))
}

fn write(path: &Path, content: &str) -> Result<(), Outcome> {
    fs::write(path, content).map_err(|e| Outcome::input_error(format!("{}: {e}", path.display())))
}

pub fn cmd_map(netlist: &Path, out: &Path, protocol: Option<Protocol>) -> Outcome {
    let body = || -> Result<Outcome, Outcome> {
        let text = read(netlist)?;
        let mut n = parse_netlist(&text).map_err(|e| Outcome::input_error(format!("{}: {e}", netlist.display())))?;
        if let Some(p) = protocol {
            for s in &mut n.signals {
                s.protocol = p;
            }
            for g in &mut n.gates {
                g.protocol = p;
                g.output.protocol = p;
                for s in &mut g.inputs {
                    s.protocol = p;
                }
            }
        }
        let mapped = map_netlist(&n).map_err(Outcome::input_error)?;
        write(out, &write_bitstream(&n, &mapped))?;
        let plbs: usize = mapped.iter().map(|g| g.plbs.len()).sum();
        Ok(Outcome {
            stdout: format!("mapped {} gates onto {plbs} PLBs\n", mapped.len()),
            ..Outcome::default()
        })
    };
    body().unwrap_or_else(|e| e)
}

pub fn cmd_sim(bitstream: &Path, stimulus: &Path, delays: &str, max_time: u64, trace: Option<&Path>) -> Outcome {
    let body = || -> Result<Outcome, Outcome> {
        let (netlist, mapped) = read_bitstream(&read(bitstream)?)
            .map_err(|e| Outcome::input_error(format!("{}: {e}", bitstream.display())))?;
        let stim = parse_stimulus(&read(stimulus)?, &netlist)
            .map_err(|e| Outcome::input_error(format!("{}: {e}", stimulus.display())))?;
        let model = parse_delays(delays, env_seed().map_err(Outcome::input_error)?).map_err(Outcome::input_error)?;
        let opts = SimOptions {
            max_time,
            ..SimOptions::default()
        };
        let t = run(&netlist, &mapped, &model, &stim, &opts).map_err(Outcome::input_error)?;
        if let Some(path) = trace {
            write(path, &t.to_csv())?;
        }
        let mut out = Outcome::default();
        for s in t.primary_outputs() {
            let _ = writeln!(
                out.stdout,
                "{}: {} transactions, values {:?}",
                s.name,
                t.transaction_times(&s.name).len(),
                crate::sim::decode_sequence(&t, s)
            );
        }
        for d in &t.diagnostics {
            let _ = writeln!(out.stderr, "diagnostic: {d}");
            out.status = EXIT_VIOLATION;
        }
        Ok(out)
    };
    body().unwrap_or_else(|e| e)
}

fn verdict_outcome(name: &str, v: &Verdict) -> Outcome {
    let mut out = Outcome::default();
    let _ = writeln!(
        out.stdout,
        "{name}: {} ({} checks, {} violations)",
        if v.passed() { "pass" } else { "FAIL" },
        v.checked,
        v.violations.len()
    );
    for viol in &v.violations {
        let _ = writeln!(out.stdout, "  {viol}");
    }
    if !v.passed() {
        out.status = EXIT_VIOLATION;
    }
    out
}

pub fn cmd_check(paths: &[PathBuf], property: Property, signal: Option<&str>, report: Option<&Path>) -> Outcome {
    let body = || -> Result<Outcome, Outcome> {
        let mut traces = Vec::new();
        for p in paths {
            traces.push(Trace::from_csv(&read(p)?).map_err(|e| Outcome::input_error(format!("{}: {e}", p.display())))?);
        }
        let signal = match signal {
            Some(s) => s.to_string(),
            None => traces
                .first()
                .and_then(|t| t.primary_outputs().first().map(|s| s.name.clone()))
                .ok_or_else(|| Outcome::input_error("no signal to analyse"))?,
        };
        let mut csv = String::new();
        let out = match property {
            Property::SingleToggle | Property::NoEarlyEval => {
                let mut all = Verdict::default();
                csv.push_str("trace,checked,violations\n");
                for (p, t) in paths.iter().zip(&traces) {
                    let v = if property == Property::SingleToggle {
                        check_single_toggle(t)
                    } else {
                        check_no_early_evaluation(t)
                    };
                    let _ = writeln!(csv, "{},{},{}", p.display(), v.checked, v.violations.len());
                    all.merge(v);
                }
                let name = if property == Property::SingleToggle { "single-toggle" } else { "no-early-eval" };
                verdict_outcome(name, &all)
            }
            Property::ToggleCount => {
                let groups = group_by_stimulus(traces);
                let prof = toggle_count_profile(&groups, &signal, ToggleScope::All).map_err(Outcome::input_error)?;
                let var = profile_variance(&prof);
                let mut o = Outcome::default();
                csv.push_str("group,transaction,toggles\n");
                for (label, counts) in &prof {
                    let _ = writeln!(o.stdout, "{label}: {counts:?}");
                    for (k, c) in counts.iter().enumerate() {
                        let _ = writeln!(csv, "{label},{k},{c}");
                    }
                }
                let ok = var == 0.0;
                let _ = writeln!(o.stdout, "toggle-count: {} (variance {var})", if ok { "pass" } else { "FAIL" });
                o.status = if ok { EXIT_OK } else { EXIT_VIOLATION };
                o
            }
            Property::Timing => {
                let groups = group_by_stimulus(traces);
                let spread = timing_spread(&groups, &signal).map_err(Outcome::input_error)?;
                let _ = writeln!(csv, "signal,spread\n{signal},{spread}");
                Outcome {
                    status: if spread == 0 { EXIT_OK } else { EXIT_VIOLATION },
                    stdout: format!(
                        "timing: {} (spread {spread} ticks)\n",
                        if spread == 0 { "pass" } else { "FAIL" }
                    ),
                    ..Outcome::default()
                }
            }
            Property::Dpa => {
                let groups = group_by_stimulus(traces);
                let r = leak_report(&groups, &signal).map_err(Outcome::input_error)?;
                csv = r.dpa_csv();
                let ok = r.dpa_peak == 0.0;
                Outcome {
                    status: if ok { EXIT_OK } else { EXIT_VIOLATION },
                    stdout: format!(
                        "{}dpa: {} (peak {})\n",
                        r.to_text(),
                        if ok { "pass" } else { "FAIL" },
                        r.dpa_peak
                    ),
                    ..Outcome::default()
                }
            }
        };
        if let Some(path) = report {
            write(path, &csv)?;
        }
        Ok(out)
    };
    body().unwrap_or_else(|e| e)
}

pub fn execute(cli: Cli) -> Outcome {
    match cli.command {
        Command::Map { netlist, out, protocol } => cmd_map(&netlist, &out, protocol),
        Command::Sim {
            bitstream,
            stimulus,
            delays,
            max_time,
            trace,
        } => cmd_sim(&bitstream, &stimulus, &delays, max_time, trace.as_deref()),
        Command::Check {
            traces,
            property,
            signal,
            report,
        } => cmd_check(&traces, property, signal.as_deref(), report.as_deref()),
    }
}

/// Parses arguments, runs the command, prints its output and returns the
/// exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let out = execute(cli);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.status
}
