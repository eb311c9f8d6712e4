//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::time::Instant;

use qdifab::bitstream::map_netlist;
use qdifab::encodings::Protocol;
use qdifab::mapper::{decision_wait_2x2, edge_xor_terms, GateFunction, MappedGate};
use qdifab::netlist::{single_gate, Netlist, Stimulus};
use qdifab::plb::{lut_index, plb_step, LutTable, PlbState};
use qdifab::primitives::{ack_xor, c_element_mux, rendezvous};
use qdifab::progchain::{load_block, reconfigure_block, Block};
use qdifab::sidechannel::{
    dpa_difference_of_means, group_by_stimulus, leak_report, level_value_correlation, select_value, timing_spread,
    Groups,
};
use qdifab::sim::{check_single_toggle, output_sequences, run, DelayModel, Diagnostic, SimOptions, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact comparisons everywhere except the correlation coefficient.
const CORRELATION_TOLERANCE: f64 = 1e-12;
const CRITERION1_BUDGET_SECS: f64 = 60.0;
const SINGLE_TOGGLE_TRANSACTIONS: usize = 10_000;
const DELAY_SEEDS: u64 = 100;
const RANDOM_CHAIN_SEQUENCES: usize = 1_000;
/// Jitter seed used to break matched routing in criterion 8.
const MISMATCH_SEED: u64 = 1;

type Fabric = (Netlist, Vec<MappedGate>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Direct oracle for a two-input Boolean function code (bit `x + 2y`).
fn oracle(code: u8, x: usize, y: usize) -> usize {
    ((code >> (x + 2 * y)) & 1) as usize
}

fn fabric(p: Protocol, code: u8) -> Fabric {
    let n = single_gate(p, &GateFunction::binary2(code), true);
    let m = map_netlist(&n).expect("two-input gates map for every protocol");
    (n, m)
}

fn stim(x: &[usize], y: &[usize]) -> Stimulus {
    [("x".to_string(), x.to_vec()), ("y".to_string(), y.to_vec())].into()
}

fn simulate(f: &Fabric, s: &Stimulus, d: &DelayModel) -> Trace {
    run(&f.0, &f.1, d, s, &SimOptions::default()).expect("valid fabric and stimulus")
}

fn output(t: &Trace) -> Vec<usize> {
    output_sequences(t)
        .into_iter()
        .find(|(n, _)| n == "o")
        .map(|(_, v)| v)
        .unwrap_or_default()
}

fn all_fabrics() -> Vec<(Protocol, u8, Fabric)> {
    let mut v = Vec::new();
    for p in Protocol::ALL {
        for code in 0..16u8 {
            v.push((p, code, fabric(p, code)));
        }
    }
    v
}

fn criterion1(fabrics: &[(Protocol, u8, Fabric)], forbidden: &mut usize) -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    let mut mismatches = Vec::new();
    for (p, code, fab) in fabrics {
        for seq in 0..256usize {
            let pairs: Vec<(usize, usize)> = (0..4).map(|k| ((seq >> (2 * k)) & 1, (seq >> (2 * k + 1)) & 1)).collect();
            let x: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let t = simulate(fab, &stim(&x, &y), &DelayModel::uniform(1));
            runs += 1;
            *forbidden += t
                .diagnostics
                .iter()
                .filter(|d| matches!(d, Diagnostic::Forbidden { .. }))
                .count();
            let expected: Vec<usize> = pairs.iter().map(|&(a, b)| oracle(*code, a, b)).collect();
            if output(&t) != expected || !t.diagnostics.is_empty() {
                mismatches.push(format!("{p} f={code:04b} seq={seq}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches.is_empty() && secs < CRITERION1_BUDGET_SECS;
    outcome(
        pass,
        format!(
            "{runs} runs, {} mismatches{}, {secs:.1}s (budget {CRITERION1_BUDGET_SECS}s)",
            mismatches.len(),
            mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default()
        ),
    )
}

fn criterion2() -> Outcome {
    let mut states = 0;
    let mut bad = 0;
    for p in 1..=6usize {
        for prev in [false, true] {
            for bits in 0u32..(1 << p) {
                let inputs: Vec<bool> = (0..p).map(|i| bits >> i & 1 == 1).collect();
                states += 1;
                // behavioural rule written out independently
                let all1 = inputs.iter().all(|&b| b);
                let all0 = inputs.iter().all(|&b| !b);
                let expected = if all1 { true } else if all0 { false } else { prev };
                if rendezvous(prev, &inputs) != expected || c_element_mux(prev, &inputs) != expected {
                    bad += 1;
                }
            }
        }
    }
    outcome(bad == 0, format!("{states} states, {bad} disagreements"))
}

fn criterion3() -> Outcome {
    let mut vectors = 0;
    let mut bad = 0;
    for width in 1..=4usize {
        for hot in 0..=width {
            let v: Vec<bool> = (0..width).map(|i| hot < width && i == hot).collect();
            vectors += 1;
            if ack_xor(&v) != v.iter().any(|&b| b) {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{vectors} vectors, {bad} disagreements"))
}

/// Random gate from the mapper's variants; also says whether it has ACKIN.
fn random_gate(rng: &mut ChaCha8Rng) -> (Fabric, Vec<usize>, bool) {
    let choice = rng.gen_range(0..6);
    let (p, f, ack) = match choice {
        0..=2 => (Protocol::ALL[choice], GateFunction::binary2(rng.gen_range(0..16)), true),
        3 => (Protocol::FourPhase, GateFunction::binary3(rng.gen()), false),
        4 => (Protocol::Ledr, GateFunction::binary3(rng.gen::<u8>() & !1), false),
        _ => (
            Protocol::FourPhase,
            GateFunction::from_fn(vec![3, 3], 3, {
                let table: Vec<usize> = (0..9).map(|_| rng.gen_range(0..3)).collect();
                move |v| table[v[0] + 3 * v[1]]
            }),
            false,
        ),
    };
    let arities = f.input_arities().to_vec();
    let n = single_gate(p, &f, ack);
    let m = map_netlist(&n).expect("pool gates map");
    ((n, m), arities, ack)
}

fn criterion4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut transactions = 0;
    let mut violations = 0;
    let mut runs = 0;
    let mut ackless_jittered = (0, 0);
    let mut sample = None;
    while transactions < SINGLE_TOGGLE_TRANSACTIONS {
        let (fab, arities, ack) = random_gate(&mut rng);
        let len = rng.gen_range(1..=8);
        let s: Stimulus = fab
            .0
            .primary_inputs()
            .iter()
            .zip(&arities)
            .map(|(sig, &a)| (sig.name.clone(), (0..len).map(|_| rng.gen_range(0..a)).collect()))
            .collect();
        let uniform = DelayModel::uniform(rng.gen_range(1..4));
        let jitter = DelayModel::jitter(rng.gen());
        if !ack {
            // without ACKIN the output cannot wait for its consumer, so only
            // matched delays keep it safe; jittered runs are reported apart
            let t = simulate(&fab, &s, &jitter);
            ackless_jittered.0 += 1;
            ackless_jittered.1 += check_single_toggle(&t).violations.len();
        }
        let d = if ack && rng.gen_bool(0.5) { jitter } else { uniform };
        let t = simulate(&fab, &s, &d);
        runs += 1;
        transactions += t.markers.iter().filter(|m| m.signal == "o").count();
        violations += check_single_toggle(&t).violations.len();
        if sample.is_none() && fab.0.signals[0].protocol == Protocol::FourPhase {
            sample = Some(t);
        }
    }
    // inject a second data-wire change on x before its acknowledge
    let mut injected = sample.expect("at least one 4-phase run");
    let x = injected.signal("x").expect("x").clone();
    let pos = injected.events.iter().position(|e| x.wires.contains(&e.wire)).expect("x toggles");
    let mut extra = injected.events[pos];
    extra.wire = if extra.wire == x.wires[0] { x.wires[1] } else { x.wires[0] };
    injected.events.insert(pos + 1, extra);
    let detected = check_single_toggle(&injected).violations.iter().any(|v| v.subject == "x");
    outcome(
        violations == 0 && detected,
        format!(
            "{transactions} transactions in {runs} runs, {violations} violations, injected fault detected: {detected} \
             (info: ack-less gates under jitter, {} runs, {} violations)",
            ackless_jittered.0, ackless_jittered.1
        ),
    )
}

fn criterion5(forbidden_in_c1: usize) -> Outcome {
    // wire 0 also rises whenever wire 1 does
    let mut fab = fabric(Protocol::FourPhase, 0b1000);
    let cfg = &mut fab.1[0].plbs[0].config;
    let l0 = cfg.luts[0];
    cfg.luts[0] = LutTable::from_fn(|i| l0.entry(lut_index(i)) || (i[2] != i[3] && i[4] != i[5] && !i[1]));
    let t = simulate(&fab, &stim(&[1], &[1]), &DelayModel::uniform(1));
    let raised = t
        .diagnostics
        .iter()
        .any(|d| matches!(d, Diagnostic::Forbidden { signal, .. } if signal == "o"));
    outcome(
        forbidden_in_c1 == 0 && raised,
        format!("{forbidden_in_c1} forbidden states in criterion-1 runs, injected fault diagnosed: {raised}"),
    )
}

/// Decision-wait outputs `C[i][j]` and its inputs `A[i]`, `B[j]`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Dw {
    a: [bool; 2],
    b: [bool; 2],
    state: PlbState,
}

fn dw_pins(a: [bool; 2], b: [bool; 2]) -> [bool; 12] {
    let mut p = [false; 12];
    p[2] = b[1];
    p[3] = b[0];
    p[4] = a[0];
    p[5] = a[1];
    p[6] = b[1];
    p[7] = b[0];
    p[10] = a[0];
    p[11] = a[1];
    p
}

fn c_of(s: &PlbState, i: usize, j: usize) -> bool {
    s.outputs[2 * i + j]
}

/// Every C-element sees both of its inputs equal to its output.
fn dw_quiescent(d: &Dw) -> bool {
    (0..2).all(|i| {
        (0..2).all(|j| {
            let c = c_of(&d.state, i, j);
            let row = d.a[i] ^ c_of(&d.state, i, 1 - j);
            let col = d.b[j] ^ c_of(&d.state, 1 - i, j);
            row == c && col == c
        })
    })
}

fn criterion6() -> Outcome {
    let cfg = decision_wait_2x2();
    let reset = PlbState::reset(&cfg);
    let start = Dw {
        a: [false; 2],
        b: [false; 2],
        state: plb_step(&cfg, &reset, dw_pins([false; 2], [false; 2])).expect("settles"),
    };
    // reset (phase 0) and every state one transaction later (phase 1)
    let mut visited = 0;
    let mut checks = 0;
    let mut bad = Vec::new();
    let mut frontier = vec![start];
    for _depth in 0..2 {
        let mut next = Vec::new();
        for d in &frontier {
            visited += 1;
            for i in 0..2 {
                for j in 0..2 {
                    let mut a = d.a;
                    let mut b = d.b;
                    a[i] = !a[i];
                    b[j] = !b[j];
                    let state = plb_step(&cfg, &d.state, dw_pins(a, b)).expect("settles");
                    let after = Dw { a, b, state };
                    checks += 1;
                    let toggled: Vec<usize> = (0..4).filter(|&k| state.outputs[k] != d.state.outputs[k]).collect();
                    if toggled != vec![2 * i + j] || !dw_quiescent(&after) || !dw_quiescent(d) {
                        bad.push(format!("({i},{j}) from {:?}", d.state.outputs));
                    }
                    next.push(after);
                }
            }
        }
        frontier = next;
    }
    outcome(
        bad.is_empty(),
        format!("{checks} transitions from {visited} quiescent states, {} failures", bad.len()),
    )
}

fn criterion7() -> Outcome {
    // rows as (O_1 terms, O_0 terms) over (i, j)
    let c = |i: usize, j: usize| (i, j);
    let rows: [(&str, u8, Vec<(usize, usize)>, Vec<(usize, usize)>); 6] = [
        ("AND", 0b1000, vec![c(1, 1)], vec![c(0, 0), c(0, 1), c(1, 0)]),
        ("NAND", 0b0111, vec![c(0, 0), c(0, 1), c(1, 0)], vec![c(1, 1)]),
        ("OR", 0b1110, vec![c(1, 1), c(0, 1), c(1, 0)], vec![c(0, 0)]),
        ("NOR", 0b0001, vec![c(0, 0)], vec![c(1, 1), c(0, 1), c(1, 0)]),
        ("XOR", 0b0110, vec![c(0, 1), c(1, 0)], vec![c(0, 0), c(1, 1)]),
        ("NXOR", 0b1001, vec![c(0, 0), c(1, 1)], vec![c(0, 1), c(1, 0)]),
    ];
    let mut bad = Vec::new();
    for (name, code, o1, o0) in rows {
        let f = GateFunction::binary2(code);
        let sorted = |mut v: Vec<(usize, usize)>| {
            v.sort();
            v
        };
        if sorted(edge_xor_terms(&f, 1)) != sorted(o1) || sorted(edge_xor_terms(&f, 0)) != sorted(o0) {
            bad.push(name);
        }
        // and the emitted LUT tables compute those XORs
        let cfg = &fabric(Protocol::Edge, code).1[0].plbs[1].config;
        for idx in 0..16usize {
            let cij = |(i, j): (usize, usize)| (idx >> (2 * i + j)) & 1 == 1;
            let x1 = edge_xor_terms(&f, 1).into_iter().fold(false, |a, t| a ^ cij(t));
            let x0 = edge_xor_terms(&f, 0).into_iter().fold(false, |a, t| a ^ cij(t));
            if cfg.luts[0].entry(idx) != x1 || cfg.luts[1].entry(idx) != x0 {
                bad.push(name);
                break;
            }
        }
    }
    outcome(bad.is_empty(), format!("6 rows, mismatches: {bad:?}"))
}

fn value_traces(fab: &Fabric, d: &DelayModel, len: usize) -> Vec<Trace> {
    let mut out = Vec::new();
    for seq in 0..(1usize << (2 * len)) {
        let x: Vec<usize> = (0..len).map(|k| (seq >> (2 * k)) & 1).collect();
        let y: Vec<usize> = (0..len).map(|k| (seq >> (2 * k + 1)) & 1).collect();
        out.push(simulate(fab, &stim(&x, &y), d));
    }
    out
}

fn criterion8(fabrics: &[(Protocol, u8, Fabric)]) -> Outcome {
    let mut unbalanced = Vec::new();
    for (p, code, fab) in fabrics {
        let traces = value_traces(fab, &DelayModel::uniform(1), 2);
        let groups: Groups = group_by_stimulus(traces.clone());
        let r = leak_report(&groups, "o").expect("same fabric");
        let dpa_x = dpa_difference_of_means(&traces, select_value("x", 0, 1)).expect("both partitions");
        let dpa_y = dpa_difference_of_means(&traces, select_value("y", 1, 0)).expect("both partitions");
        let dpa_zero = dpa_x.iter().chain(&dpa_y).all(|&d| d == 0.0);
        if !r.balanced() || !dpa_zero {
            unbalanced.push(format!("{p} f={code:04b}"));
        }
    }
    let mut spreads = BTreeMap::new();
    for p in Protocol::ALL {
        let fab = fabric(p, 0b1000);
        let g = group_by_stimulus(value_traces(&fab, &DelayModel::jitter(MISMATCH_SEED), 1));
        spreads.insert(p.tag(), timing_spread(&g, "o").expect("same fabric"));
    }
    let jitter_shows = spreads.values().all(|&s| s > 0);
    outcome(
        unbalanced.is_empty() && jitter_shows,
        format!(
            "{} fabrics balanced under uniform delays ({} not), jittered spreads {spreads:?}",
            fabrics.len() - unbalanced.len(),
            unbalanced.len()
        ),
    )
}

fn criterion9(fabrics: &[(Protocol, u8, Fabric)]) -> Outcome {
    let mut runs = 0;
    let mut differing = Vec::new();
    for (p, code, fab) in fabrics {
        for seed in 0..DELAY_SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((*code as u64) << 32));
            let len = rng.gen_range(1..=8);
            let x: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
            let y: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
            let s = stim(&x, &y);
            let reference = simulate(fab, &s, &DelayModel::uniform(1));
            let jittered = simulate(fab, &s, &DelayModel::jitter(seed));
            runs += 1;
            if output(&reference) != output(&jittered) || !jittered.diagnostics.is_empty() {
                differing.push(format!("{p} f={code:04b} seed={seed}"));
            }
        }
    }
    outcome(
        differing.is_empty(),
        format!("{runs} seeded runs over {} fabrics, {} differ", fabrics.len(), differing.len()),
    )
}

fn criterion10() -> Outcome {
    let mut exhaustive = 0;
    let mut bad = 0;
    for len in 0..=8usize {
        for v in 0u32..(1 << len) {
            let bits: Vec<bool> = (0..len).map(|i| v >> i & 1 == 1).collect();
            let mut b = Block::new(8);
            load_block(&mut b, &bits).expect("fits");
            exhaustive += 1;
            if b.readback() != bits {
                bad += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..RANDOM_CHAIN_SEQUENCES {
        let len = rng.gen_range(9..=64);
        let bits: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
        let mut b = Block::new(64);
        load_block(&mut b, &bits).expect("fits");
        if b.readback() != bits {
            bad += 1;
        }
    }
    let mut ticks = 0;
    let mut isolation_bad = 0;
    for _ in 0..100 {
        let mk = |rng: &mut ChaCha8Rng| -> Vec<bool> { (0..rng.gen_range(1..=32)).map(|_| rng.gen()).collect() };
        let (a_bits, n_bits, new_bits) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let mut blocks = [Block::new(32), Block::new(32)];
        load_block(&mut blocks[0], &a_bits).expect("fits");
        load_block(&mut blocks[1], &n_bits).expect("fits");
        blocks[0].operating_outputs = vec![true; 4];
        let neighbour = blocks[1].clone();
        let (first, rest) = blocks.split_at_mut(1);
        reconfigure_block(&mut first[0], &new_bits, &mut |blk| {
            ticks += 1;
            if blk.plb_outputs().iter().any(|&o| o) || rest[0] != neighbour {
                isolation_bad += 1;
            }
        })
        .expect("configured block");
        if blocks[0].readback() != new_bits || blocks[1] != neighbour {
            isolation_bad += 1;
        }
    }
    outcome(
        bad == 0 && isolation_bad == 0,
        format!(
            "{exhaustive} exhaustive + {RANDOM_CHAIN_SEQUENCES} random loads, {bad} readback errors; \
             100 reconfigurations over {ticks} observed ticks, {isolation_bad} isolation/output errors"
        ),
    )
}

fn criterion11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<usize> = (0..32).map(|_| rng.gen_range(0..2)).collect();
    let y: Vec<usize> = (0..32).map(|_| rng.gen_range(0..2)).collect();
    let mut corr = BTreeMap::new();
    for p in Protocol::ALL {
        let t = simulate(&fabric(p, 0b0110), &stim(&x, &y), &DelayModel::uniform(1));
        let r = level_value_correlation(&[t], "o").expect("signal o");
        corr.insert(p.tag(), (r.correlation, r.flagged));
    }
    let ledr = corr["ledr"];
    let pass = (ledr.0 - 1.0).abs() <= CORRELATION_TOLERANCE
        && ledr.1
        && corr["4ph"] == (0.0, false)
        && corr["edge"] == (0.0, false);
    outcome(pass, format!("correlation (value, flagged): {corr:?}"))
}

fn main() {
    let fabrics = all_fabrics();
    let mut forbidden = 0;
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, o: Outcome| {
        println!("criterion {n:>2} [{name}]: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    record(1, "functional equivalence", criterion1(&fabrics, &mut forbidden));
    record(2, "C-element forms", criterion2());
    record(3, "OR equals XOR on 4-phase codes", criterion3());
    record(4, "single toggle", criterion4());
    record(5, "forbidden-state safety", criterion5(forbidden));
    record(6, "2x2 decision-wait", criterion6());
    record(7, "edge gate XOR table", criterion7());
    record(8, "data-independent activity", criterion8(&fabrics));
    record(9, "delay insensitivity", criterion9(&fabrics));
    record(10, "programming chain", criterion10());
    record(11, "LEDR level correlation", criterion11());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
