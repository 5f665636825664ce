//! The per-trial mining and message-passing engine.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::tree::{BlockArena, BlockId, GENESIS};
use super::{DelayModel, DepthObservation, SimConfig, SimError, SwitchRecord};

/// Receipt round of blocks a miner has not connected yet.
const NOT_RECEIVED: u32 = u32::MAX;
/// `revoked_depth` of blocks that were never abandoned.
const NEVER_REVOKED: u32 = u32::MAX;

/// Derives the per-trial random stream. Keying the stream by
/// `(seed, trial)` makes each trial reproducible on its own, independent of
/// how trials are scheduled across threads.
fn trial_rng(seed: u64, trial: u32) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&u64::from(trial).to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Source of mining successes and delay draws.
#[derive(Debug, Clone)]
#[cfg_attr(test, allow(clippy::large_enum_variant))]
enum Driver {
    Random(ChaCha12Rng),
    /// Mines at exactly the given (round, miner) pairs; fixed delays only.
    /// Lets tests pin an exact fork geometry.
    #[cfg(test)]
    Scripted(std::collections::BTreeSet<(u32, u32)>),
}

impl Driver {
    fn mines(&mut self, round: u32, miner: u32, prob: f64) -> bool {
        match self {
            Driver::Random(rng) => {
                let _ = (round, miner);
                rng.random_bool(prob)
            }
            #[cfg(test)]
            Driver::Scripted(schedule) => schedule.contains(&(round, miner)),
        }
    }

    fn draw_delay(&mut self, model: DelayModel) -> u32 {
        match model {
            DelayModel::Fixed(d) => d,
            DelayModel::UniformUpTo(max) => match self {
                Driver::Random(rng) => rng.random_range(1..=max),
                #[cfg(test)]
                Driver::Scripted(_) => unreachable!("scripted runs use fixed delays"),
            },
        }
    }
}

/// Depth bookkeeping for one (miner, block) pair.
#[derive(Debug, Clone, Copy)]
struct PairObs {
    /// Whether the block was ever adopted onto this miner's main chain.
    tracked: bool,
    /// Deepest confirmation depth reached on this miner's chain over the
    /// block's whole lifetime, re-adoptions included.
    max_depth: u32,
    /// Confirmation depth held when first abandoned, or `NEVER_REVOKED`.
    revoked_depth: u32,
}

impl Default for PairObs {
    fn default() -> Self {
        Self {
            tracked: false,
            max_depth: 0,
            revoked_depth: NEVER_REVOKED,
        }
    }
}

/// One miner's local view of the network.
#[derive(Debug, Clone)]
struct MinerView {
    /// Current main chain, genesis first.
    chain: Vec<BlockId>,
    /// Connection round per block id; `NOT_RECEIVED` for unknown blocks.
    receipt: Vec<u32>,
    /// Best tip among connected blocks, maintained incrementally.
    best: BlockId,
    /// Per-block depth bookkeeping.
    pairs: Vec<PairObs>,
    /// Delivered blocks waiting for their parent, keyed by that parent.
    orphans: HashMap<BlockId, Vec<BlockId>>,
}

impl MinerView {
    fn new() -> Self {
        Self {
            chain: vec![GENESIS],
            receipt: vec![0],
            best: GENESIS,
            pairs: vec![PairObs::default()],
            orphans: HashMap::new(),
        }
    }

    fn tip(&self) -> BlockId {
        *self.chain.last().expect("chain always holds genesis")
    }

    fn grow(&mut self, block_count: usize) {
        self.receipt.resize(block_count, NOT_RECEIVED);
        self.pairs.resize(block_count, PairObs::default());
    }

    fn knows(&self, block: BlockId) -> bool {
        self.receipt[block.index()] != NOT_RECEIVED
    }

    /// Whether `a` beats `b` under (height desc, receipt asc, id asc).
    fn prefers(&self, arena: &BlockArena, a: BlockId, b: BlockId) -> bool {
        let (height_a, height_b) = (arena.height(a), arena.height(b));
        height_a > height_b
            || (height_a == height_b && (self.receipt[a.index()], a) < (self.receipt[b.index()], b))
    }

    /// Connects `block` if its parent is known, cascading any orphans that
    /// were waiting on it; parks it otherwise. Returns the ids connected,
    /// in connection order.
    fn connect(&mut self, arena: &BlockArena, block: BlockId, round: u32) -> Vec<BlockId> {
        let mut connected = Vec::new();
        let parent = arena.parent(block).expect("genesis is never delivered");
        if !self.knows(parent) {
            self.orphans.entry(parent).or_default().push(block);
            return connected;
        }
        let mut stack = vec![block];
        while let Some(b) = stack.pop() {
            debug_assert!(!self.knows(b), "each block is delivered once");
            self.receipt[b.index()] = round;
            if self.prefers(arena, b, self.best) {
                self.best = b;
            }
            connected.push(b);
            if let Some(waiting) = self.orphans.remove(&b) {
                stack.extend(waiting);
            }
        }
        connected
    }
}

/// Full mutable state of one trial.
#[derive(Debug)]
struct SimState {
    config: SimConfig,
    trial: u32,
    /// Rounds completed so far.
    round: u32,
    arena: BlockArena,
    miners: Vec<MinerView>,
    /// `pending[r]` holds the (recipient, block) deliveries due in round `r`.
    pending: Vec<Vec<(u32, BlockId)>>,
    driver: Driver,
    switches: Vec<SwitchRecord>,
    trace: Option<Vec<TraceEvent>>,
}

impl SimState {
    fn new(config: &SimConfig, trial: u32, driver: Driver, traced: bool) -> Result<Self, SimError> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            trial,
            round: 0,
            arena: BlockArena::new(),
            miners: vec![MinerView::new(); config.n_miners as usize],
            pending: vec![Vec::new(); config.rounds as usize + 1],
            driver,
            switches: Vec::new(),
            trace: traced.then(Vec::new),
        })
    }

    #[cfg(test)]
    fn scripted(config: &SimConfig, mines: &[(u32, u32)]) -> Result<Self, SimError> {
        let driver = Driver::Scripted(mines.iter().copied().collect());
        Self::new(config, 0, driver, false)
    }

    #[cfg(test)]
    fn run_to_end(&mut self) {
        while self.round < self.config.rounds {
            self.step_round();
        }
    }

    fn step_round(&mut self) {
        debug_assert!(self.round < self.config.rounds);
        let round = self.round + 1;

        // Phase 1: deliveries due this round connect (or park as orphans).
        for (recipient, block) in std::mem::take(&mut self.pending[round as usize]) {
            let connected = self.miners[recipient as usize].connect(&self.arena, block, round);
            if let Some(events) = &mut self.trace {
                events.extend(connected.into_iter().map(|b| TraceEvent {
                    round,
                    miner: recipient,
                    block: b,
                    kind: EventKind::Delivered,
                }));
            }
        }

        // Phase 2: every miner re-evaluates its tip against what it now
        // knows, abandoning its old branch if a strictly better one exists.
        for m in 0..self.miners.len() {
            self.rebase(m, round);
        }

        // Phase 3: mining and broadcast.
        for m in 0..self.config.n_miners {
            if !self.driver.mines(round, m, self.config.mine_prob) {
                continue;
            }
            let parent = self.miners[m as usize].tip();
            let block = self.arena.add_block(parent, m, round);
            let count = self.arena.block_count();
            for miner in &mut self.miners {
                miner.grow(count);
            }
            self.adopt_mined(m as usize, block, round);
            if let Some(events) = &mut self.trace {
                events.push(TraceEvent {
                    round,
                    miner: m,
                    block,
                    kind: EventKind::Mined,
                });
            }
            for recipient in 0..self.config.n_miners {
                if recipient == m {
                    continue;
                }
                let due = round + self.driver.draw_delay(self.config.delay);
                // Deliveries past the horizon would never be observed.
                if due <= self.config.rounds {
                    self.pending[due as usize].push((recipient, block));
                }
            }
        }

        self.round = round;
    }

    /// Phase-2 tip re-selection for one miner. When the best known block is
    /// not a descendant of the current tip, the stale branch is abandoned —
    /// recording each block's depth at the moment of abandonment — and a
    /// switch is logged with the number of blocks dropped.
    fn rebase(&mut self, m: usize, round: u32) {
        let arena = &self.arena;
        let miner = &mut self.miners[m];
        let new_tip = miner.best;
        let old_tip = miner.tip();
        if new_tip == old_tip {
            return;
        }
        // The incremental best only ever improves, and improvements are
        // strictly taller: an equal-height block connected later loses the
        // receipt tie-break.
        debug_assert!(arena.height(new_tip) > arena.height(old_tip));
        let fork = arena.lowest_common_ancestor(old_tip, new_tip);
        let fork_height = arena.height(fork);
        let old_height = arena.height(old_tip);
        if fork_height < old_height {
            for &b in &miner.chain[fork_height as usize + 1..] {
                let depth = old_height - arena.height(b);
                let pair = &mut miner.pairs[b.index()];
                if depth > pair.max_depth {
                    pair.max_depth = depth;
                }
                if pair.revoked_depth == NEVER_REVOKED {
                    pair.revoked_depth = depth;
                }
            }
            miner.chain.truncate(fork_height as usize + 1);
        }
        for b in arena.path_above(new_tip, fork_height) {
            miner.pairs[b.index()].tracked = true;
            miner.chain.push(b);
        }
        debug_assert_eq!(miner.chain.len() as u32 - 1, arena.height(new_tip));
        let depth = old_height - fork_height;
        if depth > 0 {
            self.switches.push(SwitchRecord {
                trial: self.trial,
                round,
                miner: m as u32,
                depth,
            });
        }
    }

    fn adopt_mined(&mut self, m: usize, block: BlockId, round: u32) {
        let arena = &self.arena;
        let miner = &mut self.miners[m];
        debug_assert!(miner.prefers(arena, block, miner.best));
        miner.receipt[block.index()] = round;
        miner.pairs[block.index()].tracked = true;
        miner.chain.push(block);
        miner.best = block;
    }

    /// Closes the books: blocks still on a chain realize their end-of-trial
    /// depth, and per-pair tallies fold into per-depth observations.
    fn finalize(mut self) -> (TrialResult, Option<TrialTrace>) {
        for miner in &mut self.miners {
            let tip_height = miner.chain.len() as u32 - 1;
            for &b in &miner.chain[1..] {
                let depth = tip_height - self.arena.height(b);
                let pair = &mut miner.pairs[b.index()];
                if depth > pair.max_depth {
                    pair.max_depth = depth;
                }
            }
        }
        let tracked = || {
            self.miners
                .iter()
                .flat_map(|m| m.pairs.iter())
                .filter(|p| p.tracked)
        };
        let deepest = tracked().map(|p| p.max_depth).max().unwrap_or(0);
        let mut reached_at = vec![0u64; deepest as usize + 1];
        let mut revoked_at = vec![0u64; deepest as usize + 1];
        for pair in tracked() {
            reached_at[pair.max_depth as usize] += 1;
            if pair.revoked_depth != NEVER_REVOKED {
                debug_assert!(pair.revoked_depth <= pair.max_depth);
                revoked_at[pair.revoked_depth as usize] += 1;
            }
        }
        let mut observations = BTreeMap::new();
        let (mut reached, mut revoked) = (0u64, 0u64);
        for depth in (1..=deepest).rev() {
            reached += reached_at[depth as usize];
            revoked += revoked_at[depth as usize];
            observations.insert(depth, DepthObservation { reached, revoked });
        }
        let trace = self.trace.take().map(|events| TrialTrace {
            config: self.config.clone(),
            trial: self.trial,
            arena: self.arena.clone(),
            events,
            switches: self.switches.clone(),
        });
        let result = TrialResult {
            switches: self.switches,
            observations,
        };
        (result, trace)
    }
}

/// Outcome of one trial: every switch that happened, plus the per-depth
/// reached/revoked tallies over all (miner, block) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub switches: Vec<SwitchRecord>,
    pub observations: BTreeMap<u32, DepthObservation>,
}

/// Chronological record of one trial, sufficient to replay every miner's
/// view from scratch: the full block tree, and when each miner learned of
/// (or mined) each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub config: SimConfig,
    pub trial: u32,
    pub arena: BlockArena,
    pub events: Vec<TraceEvent>,
    pub switches: Vec<SwitchRecord>,
}

/// One miner learning of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub round: u32,
    pub miner: u32,
    pub block: BlockId,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// The miner connected a block it received from the network.
    Delivered,
    /// The miner mined the block itself.
    Mined,
}

/// Runs one trial with the pseudorandom driver.
pub fn run_trial(config: &SimConfig, trial: u32) -> Result<TrialResult, SimError> {
    let driver = Driver::Random(trial_rng(config.seed, trial));
    let mut state = SimState::new(config, trial, driver, false)?;
    for _ in 0..config.rounds {
        state.step_round();
    }
    Ok(state.finalize().0)
}

/// Like [`run_trial`], additionally returning a replayable trace.
pub fn run_trial_traced(
    config: &SimConfig,
    trial: u32,
) -> Result<(TrialResult, TrialTrace), SimError> {
    let driver = Driver::Random(trial_rng(config.seed, trial));
    let mut state = SimState::new(config, trial, driver, true)?;
    for _ in 0..config.rounds {
        state.step_round();
    }
    let (result, trace) = state.finalize();
    Ok((result, trace.expect("tracing was enabled")))
}
