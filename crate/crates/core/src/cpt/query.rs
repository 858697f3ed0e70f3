//! Traversal planning and delta-encoded leaf queries.

use super::tree::{bit_of, Cpt, CptNode, Leaf};
use crate::error::{MtiError, Result};
use crate::hashing::ceil_log2;

/// One path constraint: pseudo-ID bit `bit` must equal `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Directive {
    pub bit: u32,
    pub value: bool,
}

/// Order in which leaves are parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraversalOrder {
    /// Depth-first, zero branch first. Consecutive leaves share the longest
    /// possible prefix.
    #[default]
    DepthFirst,
    /// Shallowest leaves first; depth-first order within a level.
    ByHeight,
}

/// A leaf together with its root-to-leaf path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedLeaf {
    pub leaf: Leaf,
    pub path: Vec<Directive>,
}

pub fn plan_traversal(tree: &Cpt, order: TraversalOrder) -> Vec<PlannedLeaf> {
    let mut out = Vec::with_capacity(tree.leaf_count);
    let mut path = Vec::with_capacity(tree.h_max as usize);
    collect(&tree.root, &mut path, &mut out);
    if order == TraversalOrder::ByHeight {
        out.sort_by_key(|p| p.path.len());
    }
    out
}

fn collect(node: &CptNode, path: &mut Vec<Directive>, out: &mut Vec<PlannedLeaf>) {
    match node {
        CptNode::Leaf(leaf) => out.push(PlannedLeaf {
            leaf: *leaf,
            path: path.clone(),
        }),
        CptNode::Internal { bit, zero, one } => {
            path.push(Directive {
                bit: *bit,
                value: false,
            });
            collect(zero, path, out);
            path.pop();
            path.push(Directive {
                bit: *bit,
                value: true,
            });
            collect(one, path, out);
            path.pop();
        }
    }
}

/// Reader broadcast selecting one leaf relative to the previous one.
///
/// Wire layout: `pop_count` in `pop_width` bits, then each directive as a
/// `index_width`-bit position and one value bit, then the probe position in
/// `index_width` bits. The directive count follows from the frame length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMessage {
    /// Levels to retract from the previous path.
    pub pop_count: u32,
    pub directives: Vec<Directive>,
    /// Pseudo-ID bit every matching tag replies with.
    pub probe_bit: u32,
    pub pop_width: u32,
    pub index_width: u32,
}

impl QueryMessage {
    /// `ceil(log2(h_max+1)) + |directives| (ceil(log2 L) + 1) + ceil(log2 L)`.
    pub fn encoded_bits(&self) -> u64 {
        u64::from(self.pop_width)
            + self.directives.len() as u64 * (u64::from(self.index_width) + 1)
            + u64::from(self.index_width)
    }

    /// Serializes the message, most significant bit of each field first.
    pub fn encode(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.encoded_bits() as usize);
        push_bits(&mut out, u64::from(self.pop_count), self.pop_width);
        for d in &self.directives {
            push_bits(&mut out, u64::from(d.bit), self.index_width);
            out.push(d.value);
        }
        push_bits(&mut out, u64::from(self.probe_bit), self.index_width);
        out
    }

    /// Parses a frame produced by [`encode`](Self::encode).
    pub fn decode(frame: &[bool], pop_width: u32, index_width: u32) -> Result<Self> {
        let fixed = (pop_width + index_width) as usize;
        let per = index_width as usize + 1;
        if frame.len() < fixed || !(frame.len() - fixed).is_multiple_of(per) {
            return Err(MtiError::Protocol(format!(
                "query frame of {} bits does not match field widths",
                frame.len()
            )));
        }
        let mut pos = 0;
        let mut take = |w: u32| {
            let v = read_bits(&frame[pos..pos + w as usize]);
            pos += w as usize;
            v
        };
        let pop_count = take(pop_width) as u32;
        let count = (frame.len() - fixed) / per;
        let mut directives = Vec::with_capacity(count);
        for _ in 0..count {
            let bit = take(index_width) as u32;
            let value = take(1) == 1;
            directives.push(Directive { bit, value });
        }
        let probe_bit = take(index_width) as u32;
        Ok(QueryMessage {
            pop_count,
            directives,
            probe_bit,
            pop_width,
            index_width,
        })
    }
}

fn push_bits(out: &mut Vec<bool>, value: u64, width: u32) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

fn read_bits(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

/// Encodes the move from `prev_path` (None for the first query of a run) to
/// `next_path`: retract to the common prefix, then push the remainder.
pub fn delta_encode(
    prev_path: Option<&[Directive]>,
    next_path: &[Directive],
    probe_bit: u32,
    pseudo_id_bits: u32,
    h_max: u32,
) -> QueryMessage {
    let prev = prev_path.unwrap_or(&[]);
    let common = prev
        .iter()
        .zip(next_path)
        .take_while(|(a, b)| a == b)
        .count();
    QueryMessage {
        pop_count: (prev.len() - common) as u32,
        directives: next_path[common..].to_vec(),
        probe_bit,
        pop_width: ceil_log2(u64::from(h_max) + 1),
        index_width: ceil_log2(u64::from(pseudo_id_bits)),
    }
}

/// Tag-side interpretation of the query stream. Every tag tracks the
/// current path and answers when its pseudo-ID satisfies it.
#[derive(Debug, Clone, Default)]
pub struct TagCursor {
    path: Vec<Directive>,
}

impl TagCursor {
    pub fn apply(&mut self, msg: &QueryMessage) -> Result<()> {
        let pop = msg.pop_count as usize;
        if pop > self.path.len() {
            return Err(MtiError::Protocol(format!(
                "pop of {pop} levels from a path of {}",
                self.path.len()
            )));
        }
        self.path.truncate(self.path.len() - pop);
        self.path.extend_from_slice(&msg.directives);
        Ok(())
    }

    pub fn path(&self) -> &[Directive] {
        &self.path
    }

    pub fn matches(&self, pseudo_id: u64) -> bool {
        self.path
            .iter()
            .all(|d| bit_of(pseudo_id, d.bit) == d.value)
    }
}
