//! Programming chain: per-block asynchronous FIFO of dual-rail bits with a
//! controllable tail acknowledge, and partial reconfiguration.
//!
//! Stages are behavioural 4-phase buffers advanced in ticks: a token moves
//! one stage towards the tail when the next stage was empty at the start of
//! the tick. Stage 0 is the head where bits enter.

use thiserror::Error;

use crate::bitstream::{decode_configs, BitstreamError, PLB_BITS};
use crate::plb::{PlbConfig, LUT_COUNT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("{bits} bits do not fit in {stages} stages")]
    Overflow { bits: usize, stages: usize },
    #[error("block must be reset with its tail acknowledge held before loading")]
    NotReset,
    #[error("block is not configured")]
    NotConfigured,
    #[error("switchboxes can only be committed once the PLBs are programmed")]
    SwitchboxOrder,
    #[error(transparent)]
    Bitstream(#[from] BitstreamError),
}

/// Two C-element outputs: `(0,0)` NULL, `(1,0)` bit 0, `(0,1)` bit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FifoStage {
    pub rails: [bool; 2],
}

impl FifoStage {
    pub const NULL: FifoStage = FifoStage { rails: [false, false] };

    pub fn holding(bit: bool) -> Self {
        FifoStage { rails: [!bit, bit] }
    }

    pub fn bit(&self) -> Option<bool> {
        match self.rails {
            [true, false] => Some(false),
            [false, true] => Some(true),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rails == [false, false]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailAck {
    /// Held low by the external pin: bits pile up.
    Held,
    /// Acknowledge follows the tail stage: the chain drains.
    Released,
}

/// Switchbox programming is staged and only committed after the PLBs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Switchboxes {
    Insulated,
    Staged(Vec<bool>),
    Committed(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub stages: Vec<FifoStage>,
    pub tail_ack: TailAck,
    pub configured: bool,
    pub switchboxes: Switchboxes,
    /// Output levels of the block's PLBs while operating.
    pub operating_outputs: Vec<bool>,
    reconfiguring: bool,
    pending: Vec<bool>,
    ticks: u64,
}

impl Block {
    /// A reset block: every stage NULL, tail acknowledge held.
    pub fn new(stages: usize) -> Self {
        Block {
            stages: vec![FifoStage::NULL; stages],
            tail_ack: TailAck::Held,
            configured: false,
            switchboxes: Switchboxes::Insulated,
            operating_outputs: Vec::new(),
            reconfiguring: false,
            pending: Vec::new(),
            ticks: 0,
        }
    }

    /// Chain long enough for `plbs` PLB images.
    pub fn for_plbs(plbs: usize) -> Self {
        Block::new(plbs * PLB_BITS)
    }

    pub fn is_reset(&self) -> bool {
        self.stages.iter().all(FifoStage::is_empty)
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn is_reconfiguring(&self) -> bool {
        self.reconfiguring
    }

    /// PLB output levels as seen by the rest of the fabric; forced to 0
    /// while the block is being reprogrammed or is unconfigured.
    pub fn plb_outputs(&self) -> Vec<bool> {
        let n = self.plb_count() * LUT_COUNT;
        if self.reconfiguring || !self.configured {
            return vec![false; n];
        }
        let mut out = self.operating_outputs.clone();
        out.resize(n, false);
        out
    }

    pub fn plb_count(&self) -> usize {
        self.stages.len() / PLB_BITS
    }

    /// One tick of the chain. Returns whether anything moved.
    pub fn tick(&mut self) -> bool {
        let old = self.stages.clone();
        let n = old.len();
        let mut moved = false;
        if n > 0 && self.tail_ack == TailAck::Released && !old[n - 1].is_empty() {
            self.stages[n - 1] = FifoStage::NULL;
            moved = true;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            if !old[i].is_empty() && old[i + 1].is_empty() {
                self.stages[i + 1] = old[i];
                self.stages[i] = FifoStage::NULL;
                moved = true;
            }
        }
        if n > 0 && old[0].is_empty() && !self.pending.is_empty() {
            let bit = self.pending.remove(0);
            self.stages[0] = FifoStage::holding(bit);
            moved = true;
        }
        self.ticks += 1;
        moved
    }

    fn settle(&mut self, observer: &mut dyn FnMut(&Block)) {
        loop {
            let moved = self.tick();
            observer(self);
            if !moved && self.pending.is_empty() {
                break;
            }
        }
    }

    /// Bits stored in the chain, tail first (the order they were loaded).
    pub fn readback(&self) -> Vec<bool> {
        self.stages.iter().rev().filter_map(FifoStage::bit).collect()
    }

    /// PLB images held by a fully loaded chain.
    pub fn configs(&self) -> Result<Vec<PlbConfig>, ChainError> {
        if !self.configured {
            return Err(ChainError::NotConfigured);
        }
        Ok(decode_configs(&self.readback())?)
    }

    pub fn stage_switchboxes(&mut self, bits: Vec<bool>) {
        self.switchboxes = Switchboxes::Staged(bits);
    }

    pub fn commit_switchboxes(&mut self) -> Result<(), ChainError> {
        if !self.configured || self.reconfiguring {
            return Err(ChainError::SwitchboxOrder);
        }
        if let Switchboxes::Staged(bits) = &self.switchboxes {
            self.switchboxes = Switchboxes::Committed(bits.clone());
        }
        Ok(())
    }
}

/// Shifts `bits` into a reset block. Zero bits leave it unconfigured.
pub fn load_block(block: &mut Block, bits: &[bool]) -> Result<(), ChainError> {
    load_observed(block, bits, &mut |_| {})
}

pub fn load_observed(block: &mut Block, bits: &[bool], observer: &mut dyn FnMut(&Block)) -> Result<(), ChainError> {
    if !block.is_reset() || block.tail_ack != TailAck::Held {
        return Err(ChainError::NotReset);
    }
    if bits.len() > block.stages.len() {
        return Err(ChainError::Overflow {
            bits: bits.len(),
            stages: block.stages.len(),
        });
    }
    block.pending = bits.to_vec();
    block.settle(observer);
    block.configured = !bits.is_empty();
    Ok(())
}

/// Releases the tail acknowledge until the chain is empty, then holds it.
/// PLB outputs read 0 throughout and afterwards.
pub fn drain_block(block: &mut Block, observer: &mut dyn FnMut(&Block)) {
    block.reconfiguring = true;
    block.switchboxes = Switchboxes::Insulated;
    observer(block);
    block.tail_ack = TailAck::Released;
    block.settle(observer);
    block.tail_ack = TailAck::Held;
    block.configured = false;
    block.reconfiguring = false;
    observer(block);
}

/// Drain, reload and re-hold one block. `observer` sees the block after
/// every tick of the procedure.
pub fn reconfigure_block(block: &mut Block, new_bits: &[bool], observer: &mut dyn FnMut(&Block)) -> Result<(), ChainError> {
    if !block.configured {
        return Err(ChainError::NotConfigured);
    }
    if new_bits.len() > block.stages.len() {
        return Err(ChainError::Overflow {
            bits: new_bits.len(),
            stages: block.stages.len(),
        });
    }
    block.reconfiguring = true;
    block.switchboxes = Switchboxes::Insulated;
    observer(block);
    block.tail_ack = TailAck::Released;
    block.settle(observer);
    block.tail_ack = TailAck::Held;
    block.pending = new_bits.to_vec();
    block.settle(observer);
    block.configured = !new_bits.is_empty();
    block.reconfiguring = false;
    observer(block);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fills_exactly() {
        let mut b = Block::new(8);
        let bits = [true, false, false, true, true, true, false, true];
        load_block(&mut b, &bits).unwrap();
        assert!(b.stages.iter().all(|s| !s.is_empty()));
        assert_eq!(b.readback(), bits);
        assert!(b.configured);
    }

    #[test]
    fn zero_bits_and_overflow() {
        let mut b = Block::new(8);
        load_block(&mut b, &[]).unwrap();
        assert!(!b.configured);
        assert_eq!(
            load_block(&mut b, &[false; 9]),
            Err(ChainError::Overflow { bits: 9, stages: 8 })
        );
        load_block(&mut b, &[true]).unwrap();
        assert_eq!(load_block(&mut b, &[true]), Err(ChainError::NotReset));
    }

    #[test]
    fn tokens_travel_with_null_gaps() {
        let mut b = Block::new(6);
        b.pending = vec![true, false, true];
        let mut max_adjacent_moving = 0;
        for _ in 0..3 {
            b.tick();
            let occupied: Vec<bool> = b.stages.iter().map(|s| !s.is_empty()).collect();
            let adjacent = occupied.windows(2).filter(|w| w[0] && w[1]).count();
            max_adjacent_moving = max_adjacent_moving.max(adjacent);
        }
        assert_eq!(max_adjacent_moving, 0);
    }

    #[test]
    fn reconfigure_and_drain() {
        let mut b = Block::new(8);
        let bits = [true, false, true, true];
        load_block(&mut b, &bits).unwrap();
        b.operating_outputs = vec![true; 4];
        let before = b.clone();
        reconfigure_block(&mut b, &bits, &mut |_| {}).unwrap();
        assert_eq!(b.stages, before.stages);
        assert_eq!(b.readback(), before.readback());

        let inverted: Vec<bool> = bits.iter().map(|b| !b).collect();
        reconfigure_block(&mut b, &inverted, &mut |blk| assert!(blk.plb_outputs().iter().all(|&o| !o))).unwrap();
        assert_eq!(b.readback(), inverted);

        drain_block(&mut b, &mut |blk| assert!(blk.plb_outputs().iter().all(|&o| !o)));
        assert!(b.is_reset());
        assert!(!b.configured);
        assert_eq!(reconfigure_block(&mut b, &bits, &mut |_| {}), Err(ChainError::NotConfigured));
    }

    #[test]
    fn switchboxes_commit_after_plbs() {
        let mut b = Block::new(4);
        b.stage_switchboxes(vec![true, false]);
        assert_eq!(b.commit_switchboxes(), Err(ChainError::SwitchboxOrder));
        load_block(&mut b, &[true, true]).unwrap();
        b.commit_switchboxes().unwrap();
        assert_eq!(b.switchboxes, Switchboxes::Committed(vec![true, false]));
        reconfigure_block(&mut b, &[false], &mut |blk| assert_eq!(blk.switchboxes, Switchboxes::Insulated)).unwrap();
    }

    #[test]
    fn configs_decode_from_chain() {
        let cfg = crate::mapper::map_4ph_2in(&crate::mapper::GateFunction::binary2(8), true).unwrap();
        let bits = crate::bitstream::config_to_bits(&cfg);
        let mut b = Block::for_plbs(1);
        load_block(&mut b, &bits).unwrap();
        let back = b.configs().unwrap();
        assert_eq!(back[0].luts, cfg.luts);
        assert_eq!(back[0].feedback, cfg.feedback);
    }

    proptest! {
        #[test]
        fn readback_identity(bits in proptest::collection::vec(any::<bool>(), 0..40)) {
            let mut b = Block::new(40);
            load_block(&mut b, &bits).unwrap();
            prop_assert_eq!(b.readback(), bits);
        }
    }
}
