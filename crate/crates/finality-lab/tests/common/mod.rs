//! Shared test helpers: a from-scratch replay oracle for simulation traces.
//!
//! The oracle rebuilds every miner's view of a finished trial using nothing
//! but the trace's event log and the raw parent links of the block tree. It
//! keeps no incremental tip state: each round it rescans everything a miner
//! knows to find the best chain, and walks parent links to find fork points.
//! Agreement with the engine therefore checks the engine's incremental
//! bookkeeping (cached best tips, chain suffix truncation, orphan cascades,
//! depth tallies) against a direct reading of the chain-selection rule.

use std::collections::{BTreeMap, HashMap, HashSet};

use finality_lab::sim::{BlockId, DepthObservation, EventKind, SwitchRecord, TrialTrace, GENESIS};

/// What the oracle re-derives from a trace.
pub struct Replay {
    /// Switches found by full rescans, in (round, miner) order.
    pub switches: Vec<SwitchRecord>,
    /// Per-depth reached/revoked tallies over all (miner, block) pairs.
    pub observations: BTreeMap<u32, DepthObservation>,
}

/// Per-(miner, block) lifetime bookkeeping, mirrored from the estimator's
/// definition: the deepest confirmation depth the block ever held on that
/// miner's chain, and its depth when first abandoned (if ever).
#[derive(Default, Clone, Copy)]
struct PairTally {
    max_depth: u32,
    revoked_depth: Option<u32>,
}

/// Replays `trace` from scratch and re-derives switches and observations.
pub fn replay(trace: &TrialTrace) -> Replay {
    let n = trace.config.n_miners as usize;

    // Independent height map: recompute from parent links and cross-check
    // the stored heights while at it.
    let mut parent: HashMap<BlockId, BlockId> = HashMap::new();
    let mut height: HashMap<BlockId, u32> = HashMap::new();
    height.insert(GENESIS, 0);
    for block in trace.arena.blocks() {
        let Some(p) = block.parent else { continue };
        parent.insert(block.id, p);
        let h = height[&p] + 1;
        assert_eq!(h, block.height, "stored height disagrees with parent links");
        height.insert(block.id, h);
    }
    let path_of = |mut b: BlockId| -> Vec<BlockId> {
        let mut path = vec![b];
        while let Some(&p) = parent.get(&b) {
            path.push(p);
            b = p;
        }
        path.reverse();
        path // genesis first
    };
    let lca = |a: BlockId, b: BlockId| -> BlockId {
        let (mut a, mut b) = (a, b);
        while height[&a] > height[&b] {
            a = parent[&a];
        }
        while height[&b] > height[&a] {
            b = parent[&b];
        }
        while a != b {
            a = parent[&a];
            b = parent[&b];
        }
        a
    };

    // Group events by round, preserving intra-round order.
    let mut delivered: BTreeMap<u32, Vec<(u32, BlockId)>> = BTreeMap::new();
    let mut mined: BTreeMap<u32, Vec<(u32, BlockId)>> = BTreeMap::new();
    for event in &trace.events {
        let bucket = match event.kind {
            EventKind::Delivered => &mut delivered,
            EventKind::Mined => &mut mined,
        };
        bucket
            .entry(event.round)
            .or_default()
            .push((event.miner, event.block));
    }

    let mut known: Vec<HashMap<BlockId, u32>> = vec![HashMap::from([(GENESIS, 0)]); n];
    let mut tip: Vec<BlockId> = vec![GENESIS; n];
    let mut on_chain: Vec<HashSet<BlockId>> = vec![HashSet::from([GENESIS]); n];
    let mut tally: Vec<HashMap<BlockId, PairTally>> = vec![HashMap::new(); n];
    let mut switches = Vec::new();

    for round in 1..=trace.config.rounds {
        // Phase 1: deliveries. The trace records a delivery in the round the
        // block became usable, so its parent must already be known.
        for &(m, b) in delivered.get(&round).into_iter().flatten() {
            let m = m as usize;
            assert!(
                known[m].contains_key(&parent[&b]),
                "delivered block's parent unknown to miner {m}"
            );
            let duplicate = known[m].insert(b, round);
            assert!(duplicate.is_none(), "block delivered twice to miner {m}");
        }

        // Phase 2: full rescan of each miner's knowledge. Max height wins;
        // ties fall to the earliest local receipt, then the lowest id.
        for m in 0..n {
            let best = known[m]
                .iter()
                .map(|(&b, &receipt)| (b, receipt))
                .max_by_key(|&(b, receipt)| {
                    (height[&b], std::cmp::Reverse(receipt), std::cmp::Reverse(b))
                })
                .map(|(b, _)| b)
                .expect("genesis is always known");
            let old = tip[m];
            if best == old {
                continue;
            }
            let fork = lca(old, best);
            let old_height = height[&old];
            let depth = old_height - height[&fork];
            if depth > 0 {
                switches.push(SwitchRecord {
                    trial: trace.trial,
                    round,
                    miner: m as u32,
                    depth,
                });
            }
            // Blocks leaving the chain: record abandonment depths.
            let mut b = old;
            while b != fork {
                let pair = tally[m].entry(b).or_default();
                let depth_now = old_height - height[&b];
                pair.max_depth = pair.max_depth.max(depth_now);
                pair.revoked_depth.get_or_insert(depth_now);
                on_chain[m].remove(&b);
                b = parent[&b];
            }
            // Blocks entering the chain.
            let mut b = best;
            while b != fork {
                tally[m].entry(b).or_default();
                on_chain[m].insert(b);
                b = parent[&b];
            }
            tip[m] = best;
        }

        // Phase 3: mining. A mined block always extends the miner's tip.
        for &(m, b) in mined.get(&round).into_iter().flatten() {
            let m = m as usize;
            assert_eq!(parent[&b], tip[m], "mined block must extend the tip");
            known[m].insert(b, round);
            tally[m].entry(b).or_default();
            on_chain[m].insert(b);
            tip[m] = b;
        }
    }

    // End of trial: blocks still on a chain realize their final depth.
    for m in 0..n {
        let final_height = height[&tip[m]];
        for &b in path_of(tip[m]).iter().skip(1) {
            assert!(on_chain[m].contains(&b));
            let pair = tally[m].entry(b).or_default();
            pair.max_depth = pair.max_depth.max(final_height - height[&b]);
        }
    }

    // Fold per-pair tallies into per-depth suffix counts.
    let deepest = tally
        .iter()
        .flat_map(|t| t.values())
        .map(|p| p.max_depth)
        .max()
        .unwrap_or(0);
    let mut reached_at = vec![0u64; deepest as usize + 1];
    let mut revoked_at = vec![0u64; deepest as usize + 1];
    for pair in tally.iter().flat_map(|t| t.values()) {
        reached_at[pair.max_depth as usize] += 1;
        if let Some(depth) = pair.revoked_depth {
            revoked_at[depth as usize] += 1;
        }
    }
    let mut observations = BTreeMap::new();
    let (mut reached, mut revoked) = (0u64, 0u64);
    for depth in (1..=deepest).rev() {
        reached += reached_at[depth as usize];
        revoked += revoked_at[depth as usize];
        observations.insert(depth, DepthObservation { reached, revoked });
    }

    Replay {
        switches,
        observations,
    }
}
