//! Bit-exact PLB programming images.
//!
//! Per PLB: L0..L3 (64 bits each, table entry 0 first), feedback selects
//! (LUT-major, inputs 0..3), mem_bypass (2), or6_bypass_sel (2), combine_sel
//! (1). The 277 bits are padded with zeros to 280 and written as 70 lowercase
//! hex digits, first bit in the most significant position of each digit.
//!
//! A bitstream file also carries the source netlist in `# netlist` comment
//! lines so the routing between PLBs can be rebuilt when simulating it.

use thiserror::Error;

use crate::mapper::{map_gate, MappedGate, MappingError};
use crate::netlist::{parse_netlist, Netlist, ParseError};
use crate::plb::{LutTable, PlbConfig};

pub const PLB_BITS: usize = 4 * 64 + 16 + 2 + 2 + 1;
pub const PLB_HEX_DIGITS: usize = PLB_BITS.div_ceil(4);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitstreamError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("embedded netlist: {0}")]
    Netlist(#[from] ParseError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("expected {expected} PLB lines, found {found}")]
    PlbCount { expected: usize, found: usize },
    #[error("bit count {0} is not a multiple of {PLB_BITS}")]
    Truncated(usize),
}

pub fn config_to_bits(cfg: &PlbConfig) -> Vec<bool> {
    let mut bits = Vec::with_capacity(PLB_BITS);
    for lut in &cfg.luts {
        bits.extend((0..64).map(|i| lut.entry(i)));
    }
    for fb in &cfg.feedback {
        bits.extend_from_slice(&fb[..4]);
    }
    bits.extend_from_slice(&cfg.mem_bypass);
    bits.extend_from_slice(&cfg.or6_bypass_sel);
    bits.push(cfg.combine_sel);
    bits
}

/// Applies the programming bits to `base`, keeping its pin routing.
pub fn apply_bits(base: &PlbConfig, bits: &[bool]) -> PlbConfig {
    assert_eq!(bits.len(), PLB_BITS);
    let mut cfg = base.clone();
    for (k, lut) in cfg.luts.iter_mut().enumerate() {
        *lut = LutTable(
            bits[k * 64..(k + 1) * 64]
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &b)| acc | (b as u64) << i),
        );
    }
    let mut at = 256;
    for fb in cfg.feedback.iter_mut() {
        fb[..4].copy_from_slice(&bits[at..at + 4]);
        fb[4] = false;
        fb[5] = false;
        at += 4;
    }
    cfg.mem_bypass = [bits[at], bits[at + 1]];
    cfg.or6_bypass_sel = [bits[at + 2], bits[at + 3]];
    cfg.combine_sel = bits[at + 4];
    cfg
}

/// Splits a raw bit sequence into PLB configurations with default routing.
pub fn decode_configs(bits: &[bool]) -> Result<Vec<PlbConfig>, BitstreamError> {
    if bits.len() % PLB_BITS != 0 {
        return Err(BitstreamError::Truncated(bits.len()));
    }
    Ok(bits
        .chunks(PLB_BITS)
        .map(|c| apply_bits(&PlbConfig::default(), c))
        .collect())
}

pub fn bits_to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|nibble| {
            let v = nibble.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (b as u32) << (3 - i));
            char::from_digit(v, 16).expect("nibble")
        })
        .collect()
}

pub fn hex_to_bits(hex: &str) -> Option<Vec<bool>> {
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        if c.is_ascii_uppercase() {
            return None;
        }
        let v = c.to_digit(16)?;
        bits.extend((0..4).map(|i| v >> (3 - i) & 1 == 1));
    }
    Some(bits)
}

pub fn config_to_hex(cfg: &PlbConfig) -> String {
    let mut bits = config_to_bits(cfg);
    bits.resize(PLB_HEX_DIGITS * 4, false);
    bits_to_hex(&bits)
}

/// Maps every gate of the netlist in declaration order.
pub fn map_netlist(netlist: &Netlist) -> Result<Vec<MappedGate>, MappingError> {
    netlist.gates.iter().map(map_gate).collect()
}

pub fn write_bitstream(netlist: &Netlist, mapped: &[MappedGate]) -> String {
    let mut out = String::from("# qdifab bitstream v1\n");
    for line in netlist.to_text().lines() {
        out.push_str("# netlist ");
        out.push_str(line);
        out.push('\n');
    }
    for gate in mapped {
        for plb in &gate.plbs {
            out.push_str(&format!("# plb {} {}\n", gate.name, plb.role));
            out.push_str(&config_to_hex(&plb.config));
            out.push('\n');
        }
    }
    out
}

/// Parses a bitstream file: rebuilds routing from the embedded netlist and
/// loads the programming points from the hex lines.
pub fn read_bitstream(text: &str) -> Result<(Netlist, Vec<MappedGate>), BitstreamError> {
    let mut netlist_text = String::new();
    let mut images: Vec<(usize, Vec<bool>)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(decl) = rest.trim_start().strip_prefix("netlist ") {
                netlist_text.push_str(decl);
                netlist_text.push('\n');
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let malformed = |message: &str| BitstreamError::Malformed {
            line: n + 1,
            message: message.to_string(),
        };
        if line.len() != PLB_HEX_DIGITS {
            return Err(malformed("PLB line must hold 70 hex digits"));
        }
        let bits = hex_to_bits(line).ok_or_else(|| malformed("not lowercase hex"))?;
        if bits[PLB_BITS..].iter().any(|&b| b) {
            return Err(malformed("padding bits must be zero"));
        }
        images.push((n + 1, bits[..PLB_BITS].to_vec()));
    }
    let netlist = parse_netlist(&netlist_text)?;
    let mut mapped = map_netlist(&netlist)?;
    let expected: usize = mapped.iter().map(|g| g.plbs.len()).sum();
    if images.len() != expected {
        return Err(BitstreamError::PlbCount {
            expected,
            found: images.len(),
        });
    }
    let mut it = images.into_iter();
    for gate in &mut mapped {
        for plb in &mut gate.plbs {
            let (_, bits) = it.next().expect("counted");
            plb.config = apply_bits(&plb.config, &bits);
        }
    }
    Ok((netlist, mapped))
}
