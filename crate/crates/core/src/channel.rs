//! Slot-level channel model with Manchester-coded pair decoding.
//!
//! Responses are single bits. Manchester coding sends `0` as a rising and `1`
//! as a falling transition, so when exactly two tags answer with different
//! bits the reader sees both transitions and knows both tags are present.

use crate::error::{MtiError, Result};
use crate::model::CostLedger;

/// What the reader observes in one response slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotObservation {
    Empty,
    /// One distinguishable waveform carrying this bit.
    Single(bool),
    /// Both bit values were observed in a two-tag collision.
    ManchesterPair,
    /// Three or more tags replied; the slot cannot be decoded.
    UnresolvedCollision,
}

/// Superposes the responses of one slot.
///
/// Two tags sending the same bit produce identical transitions and are seen
/// as one waveform.
pub fn transmit_slot(responses: &[bool]) -> SlotObservation {
    match responses {
        [] => SlotObservation::Empty,
        [b] => SlotObservation::Single(*b),
        [a, b] if a != b => SlotObservation::ManchesterPair,
        [a, _] => SlotObservation::Single(*a),
        _ => SlotObservation::UnresolvedCollision,
    }
}

/// Presence of the two tags of a pair slot, given the bits each was told to
/// send.
pub fn decode_pair(
    obs: SlotObservation,
    expected_a: bool,
    expected_b: bool,
) -> Result<(bool, bool)> {
    if expected_a == expected_b {
        return Err(MtiError::ContractViolation(
            "pair members must be assigned different reply bits".into(),
        ));
    }
    match obs {
        SlotObservation::Empty => Ok((false, false)),
        SlotObservation::Single(bit) => Ok((bit == expected_a, bit == expected_b)),
        SlotObservation::ManchesterPair => Ok((true, true)),
        SlotObservation::UnresolvedCollision => Err(MtiError::Protocol(
            "unresolved collision in a two-tag slot".into(),
        )),
    }
}

/// Charges a reader broadcast of `payload_bits` using 32-bit long slots.
pub fn charge_query(ledger: &mut CostLedger, payload_bits: u64) {
    charge_query_with(ledger, payload_bits, 32);
}

/// Charges a reader broadcast: a 1-bit payload fits a short slot, anything
/// longer takes `ceil(bits / long_slot_bits)` long slots.
pub fn charge_query_with(ledger: &mut CostLedger, payload_bits: u64, long_slot_bits: u32) {
    match payload_bits {
        0 => {}
        1 => {
            ledger.reader_bits += 1;
            ledger.short_slots += 1;
        }
        bits => {
            ledger.reader_bits += bits;
            ledger.long_slots += bits.div_ceil(u64::from(long_slot_bits));
        }
    }
}

/// Charges one short response slot. Empty slots still cost a full slot.
pub fn charge_response(ledger: &mut CostLedger, responders: u64) {
    ledger.short_slots += 1;
    ledger.tag_bits += responders;
}

#[cfg(test)]
mod tests {
    use super::*;
    use SlotObservation::*;

    #[test]
    fn classification() {
        assert_eq!(transmit_slot(&[]), Empty);
        assert_eq!(transmit_slot(&[true]), Single(true));
        assert_eq!(transmit_slot(&[true, false]), ManchesterPair);
        assert_eq!(transmit_slot(&[false, true]), ManchesterPair);
        assert_eq!(transmit_slot(&[true, true]), Single(true));
        assert_eq!(transmit_slot(&[false, false]), Single(false));
        assert_eq!(transmit_slot(&[true, false, true]), UnresolvedCollision);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_pair(Empty, true, false), Ok((false, false)));
        assert_eq!(decode_pair(Single(true), true, false), Ok((true, false)));
        assert_eq!(decode_pair(Single(true), false, true), Ok((false, true)));
        assert_eq!(decode_pair(ManchesterPair, false, true), Ok((true, true)));
        assert!(matches!(
            decode_pair(Empty, true, true),
            Err(MtiError::ContractViolation(_))
        ));
        assert!(matches!(
            decode_pair(UnresolvedCollision, true, false),
            Err(MtiError::Protocol(_))
        ));
    }

    #[test]
    fn query_charges() {
        let mut l = CostLedger::default();
        charge_query(&mut l, 0);
        assert_eq!(l, CostLedger::default());
        charge_query(&mut l, 1);
        assert_eq!((l.short_slots, l.long_slots, l.reader_bits), (1, 0, 1));
        let mut l = CostLedger::default();
        charge_query(&mut l, 33);
        assert_eq!((l.short_slots, l.long_slots, l.reader_bits), (0, 2, 33));
        let mut l = CostLedger::default();
        charge_query_with(&mut l, 33, 64);
        assert_eq!(l.long_slots, 1);
    }

    #[test]
    fn response_charges() {
        let mut l = CostLedger::default();
        charge_response(&mut l, 0);
        assert_eq!((l.short_slots, l.tag_bits), (1, 0));
        charge_response(&mut l, 2);
        assert_eq!((l.short_slots, l.tag_bits), (2, 2));
        let mut l = CostLedger::default();
        for _ in 0..100 {
            charge_response(&mut l, 1);
        }
        assert_eq!(l.short_slots, 100);
    }
}
