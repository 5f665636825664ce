//! Block-tree storage and the longest-chain tip rule.

use serde::{Deserialize, Serialize};

/// Identifier of a block within a trial's [`BlockArena`]. Ids are assigned
/// in creation order: within a round, miners are swept in index order, so a
/// lower id means mined earlier (or by a lower-indexed miner in a tie).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockId(u32);

/// The genesis block every trial starts from.
pub const GENESIS: BlockId = BlockId(0);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A block in the tree. Genesis has neither parent nor miner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub parent: Option<BlockId>,
    pub height: u32,
    pub miner: Option<u32>,
    pub round_mined: u32,
}

/// Append-only store of every block mined in a trial, genesis included.
/// Blocks never change once added, so all views of the tree share it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockArena {
    blocks: Vec<Block>,
}

impl Default for BlockArena {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockArena {
    pub fn new() -> Self {
        Self {
            blocks: vec![Block {
                id: GENESIS,
                parent: None,
                height: 0,
                miner: None,
                round_mined: 0,
            }],
        }
    }

    /// Appends a block mined by `miner` in `round` on top of `parent`.
    pub fn add_block(&mut self, parent: BlockId, miner: u32, round: u32) -> BlockId {
        let id = BlockId(self.blocks.len() as u32);
        self.blocks.push(Block {
            id,
            parent: Some(parent),
            height: self.height(parent) + 1,
            miner: Some(miner),
            round_mined: round,
        });
        id
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.index()]
    }

    pub fn height(&self, id: BlockId) -> u32 {
        self.blocks[id.index()].height
    }

    pub fn parent(&self, id: BlockId) -> Option<BlockId> {
        self.blocks[id.index()].parent
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter()
    }

    /// The ancestor of `id` at `height` (which must not exceed the block's
    /// own height).
    pub fn ancestor_at_height(&self, mut id: BlockId, height: u32) -> BlockId {
        debug_assert!(height <= self.height(id));
        while self.height(id) > height {
            id = self.parent(id).expect("non-genesis blocks have parents");
        }
        id
    }

    /// Deepest block that is an ancestor of both `a` and `b` (a block counts
    /// as its own ancestor).
    pub fn lowest_common_ancestor(&self, a: BlockId, b: BlockId) -> BlockId {
        let shared = self.height(a).min(self.height(b));
        let mut a = self.ancestor_at_height(a, shared);
        let mut b = self.ancestor_at_height(b, shared);
        while a != b {
            a = self.parent(a).expect("forks always join at genesis");
            b = self.parent(b).expect("forks always join at genesis");
        }
        a
    }

    /// Number of blocks a miner on `old_tip` abandons when moving to
    /// `new_tip`: the distance from `old_tip` down to the fork point. Zero
    /// when `new_tip` descends from `old_tip`.
    pub fn switch_depth(&self, old_tip: BlockId, new_tip: BlockId) -> u32 {
        let fork = self.lowest_common_ancestor(old_tip, new_tip);
        self.height(old_tip) - self.height(fork)
    }

    /// Blocks strictly above `height` on the path from genesis to `id`, in
    /// ascending height order.
    pub fn path_above(&self, id: BlockId, height: u32) -> Vec<BlockId> {
        let mut path = Vec::with_capacity((self.height(id).saturating_sub(height)) as usize);
        let mut cursor = id;
        while self.height(cursor) > height {
            path.push(cursor);
            cursor = self
                .parent(cursor)
                .expect("non-genesis blocks have parents");
        }
        path.reverse();
        path
    }
}

/// Picks the best tip among `known` blocks (given as `(block, receipt
/// round)` pairs): maximum height, ties broken by earliest receipt, then by
/// smallest id. The ordering is total, so the winner is unique.
pub fn select_tip<I>(arena: &BlockArena, known: I) -> Option<BlockId>
where
    I: IntoIterator<Item = (BlockId, u32)>,
{
    known
        .into_iter()
        .max_by(|&(a, receipt_a), &(b, receipt_b)| {
            arena
                .height(a)
                .cmp(&arena.height(b))
                .then_with(|| receipt_b.cmp(&receipt_a))
                .then_with(|| b.cmp(&a))
        })
        .map(|(id, _)| id)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// genesis -> a1 -> a2 -> a3, with b1 -> b2 forking off genesis.
    fn fork_arena() -> (BlockArena, Vec<BlockId>) {
        let mut arena = BlockArena::new();
        let a1 = arena.add_block(GENESIS, 0, 1);
        let b1 = arena.add_block(GENESIS, 1, 1);
        let a2 = arena.add_block(a1, 0, 2);
        let b2 = arena.add_block(b1, 1, 2);
        let a3 = arena.add_block(a2, 0, 3);
        (arena, vec![a1, b1, a2, b2, a3])
    }

    #[test]
    fn heights_and_parents_follow_the_tree() {
        let (arena, ids) = fork_arena();
        let (a1, _b1, a2, b2, a3) = (ids[0], ids[1], ids[2], ids[3], ids[4]);
        assert_eq!(arena.height(GENESIS), 0);
        assert_eq!(arena.height(a3), 3);
        assert_eq!(arena.height(b2), 2);
        assert_eq!(arena.parent(a2), Some(a1));
        assert_eq!(arena.parent(GENESIS), None);
        assert_eq!(arena.block_count(), 6);
        assert_eq!(arena.ancestor_at_height(a3, 1), a1);
    }

    #[test]
    fn lca_and_switch_depth_measure_the_fork() {
        let (arena, ids) = fork_arena();
        let (a1, b1, a2, b2, a3) = (ids[0], ids[1], ids[2], ids[3], ids[4]);
        assert_eq!(arena.lowest_common_ancestor(a3, b2), GENESIS);
        assert_eq!(arena.lowest_common_ancestor(a3, a1), a1);
        assert_eq!(arena.lowest_common_ancestor(b1, b2), b1);
        // A miner on b2 moving to a3 abandons b1 and b2.
        assert_eq!(arena.switch_depth(b2, a3), 2);
        // Moving along one's own chain abandons nothing.
        assert_eq!(arena.switch_depth(a1, a3), 0);
        assert_eq!(arena.switch_depth(a3, a3), 0);
        // A one-block divergence abandons one block.
        assert_eq!(arena.switch_depth(b1, a2), 1);
    }

    #[test]
    fn path_above_lists_the_branch_in_ascending_order() {
        let (arena, ids) = fork_arena();
        let (a1, a2, a3) = (ids[0], ids[2], ids[4]);
        assert_eq!(arena.path_above(a3, 0), vec![a1, a2, a3]);
        assert_eq!(arena.path_above(a3, 2), vec![a3]);
        assert_eq!(arena.path_above(a3, 3), vec![]);
    }

    #[test]
    fn select_tip_prefers_height_then_receipt_then_id() {
        let (arena, ids) = fork_arena();
        let (a1, b1, a2, b2, a3) = (ids[0], ids[1], ids[2], ids[3], ids[4]);
        // Height dominates.
        assert_eq!(select_tip(&arena, vec![(b2, 1), (a3, 9)]), Some(a3));
        // Equal heights: earliest receipt wins.
        assert_eq!(select_tip(&arena, vec![(a2, 5), (b2, 4)]), Some(b2));
        // Equal heights and receipts: smallest id wins.
        assert_eq!(select_tip(&arena, vec![(b1, 3), (a1, 3)]), Some(a1));
        assert_eq!(select_tip(&arena, Vec::new()), None);
    }
}
