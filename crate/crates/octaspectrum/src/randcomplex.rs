//! The random gluing model and its dual graph.
//!
//! A gluing on `n` octahedra is a uniform perfect matching on the `4n`
//! half-edge slots plus an independent uniform twist in `{0, 1, 2}` per
//! edge. The dual graph is 4-regular; conditioning on simplicity (no loops,
//! no parallel edges) is done by rejection. Cycles of the dual graph are
//! read off as words: the slot pair crossed at each vertex determines the
//! direction letter and the traversed edge contributes its twist.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exactalg::{Direction, Letter, Word};
use crate::words::{canonical, WordClass};
use crate::{Error, Result};

pub const SLOTS_PER_VERTEX: usize = 4;

/// Exit slot reached by going straight/right/left from an entry slot.
///
/// The three tables are the three fixed-point-free involutions of
/// `{0,1,2,3}`, so (a) the three exits from any entry are exactly the other
/// three slots, and (b) traversing a vertex backwards reads the same
/// direction letter — which is what makes the word of a reversed cycle the
/// star of the forward word, twist shift included.
const EXIT_STRAIGHT: [u8; 4] = [1, 0, 3, 2];
const EXIT_RIGHT: [u8; 4] = [2, 3, 0, 1];
const EXIT_LEFT: [u8; 4] = [3, 2, 1, 0];

pub fn exit_slot(entry: u8, direction: Direction) -> u8 {
    match direction {
        Direction::S => EXIT_STRAIGHT[entry as usize],
        Direction::R => EXIT_RIGHT[entry as usize],
        Direction::L => EXIT_LEFT[entry as usize],
    }
}

pub fn direction_between(entry: u8, exit: u8) -> Direction {
    assert_ne!(entry, exit, "a path cannot leave through its entry slot");
    if EXIT_STRAIGHT[entry as usize] == exit {
        Direction::S
    } else if EXIT_RIGHT[entry as usize] == exit {
        Direction::R
    } else {
        Direction::L
    }
}

/// A sampled gluing: matching plus per-edge twists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gluing {
    n: usize,
    /// slot index `4v + s` of the partner of each slot; fixed-point-free
    /// involution
    partner: Vec<u32>,
    /// twist of the edge through each slot; equal on matched slots
    twist: Vec<u8>,
}

impl Gluing {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn partner_of(&self, vertex: usize, slot: u8) -> (usize, u8) {
        let p = self.partner[vertex * SLOTS_PER_VERTEX + slot as usize] as usize;
        (p / SLOTS_PER_VERTEX, (p % SLOTS_PER_VERTEX) as u8)
    }

    pub fn twist_of(&self, vertex: usize, slot: u8) -> u8 {
        self.twist[vertex * SLOTS_PER_VERTEX + slot as usize]
    }

    /// Assemble a gluing from explicit slot pairs and per-edge twists
    /// (aligned with `pairs`). Used for hand-built fixtures and replay.
    pub fn from_parts(
        n: usize,
        pairs: &[((usize, u8), (usize, u8))],
        twists: &[u8],
    ) -> Result<Gluing> {
        if n == 0 {
            return Err(Error::EmptyGluing);
        }
        assert_eq!(pairs.len(), 2 * n, "a gluing on n octahedra has 2n edges");
        assert_eq!(twists.len(), pairs.len());
        let slots = SLOTS_PER_VERTEX * n;
        let mut partner = vec![u32::MAX; slots];
        let mut twist = vec![0u8; slots];
        for (&((v, s), (u, t)), &tw) in pairs.iter().zip(twists) {
            let a = v * SLOTS_PER_VERTEX + s as usize;
            let b = u * SLOTS_PER_VERTEX + t as usize;
            assert!(a != b && partner[a] == u32::MAX && partner[b] == u32::MAX);
            assert!(tw < 3);
            partner[a] = b as u32;
            partner[b] = a as u32;
            twist[a] = tw;
            twist[b] = tw;
        }
        assert!(partner.iter().all(|&p| p != u32::MAX), "unmatched slots");
        Ok(Gluing { n, partner, twist })
    }

    /// Sample from the uniform measure: the matching by pairing the first
    /// free slot with a uniformly random remaining one, the twists
    /// independently uniform per edge.
    pub fn sample_with<R: Rng>(n: usize, rng: &mut R) -> Gluing {
        assert!(n >= 1);
        let slots = SLOTS_PER_VERTEX * n;
        let mut free: Vec<u32> = (0..slots as u32).collect();
        let mut partner = vec![0u32; slots];
        while !free.is_empty() {
            let a = free[0];
            free.swap_remove(0);
            let idx = rng.gen_range(0..free.len());
            let b = free[idx];
            free.swap_remove(idx);
            partner[a as usize] = b;
            partner[b as usize] = a;
        }
        let mut twist = vec![0u8; slots];
        for s in 0..slots {
            if partner[s] as usize > s {
                let t = rng.gen_range(0..3u8);
                twist[s] = t;
                twist[partner[s] as usize] = t;
            }
        }
        Gluing { n, partner, twist }
    }

    /// Resample until the dual graph is simple; the rng stream is consumed
    /// deterministically, so conditioned runs replay exactly. Returns the
    /// accepted gluing and the number of attempts.
    pub fn sample_conditioned_with<R: Rng>(n: usize, rng: &mut R) -> (Gluing, u64) {
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            let g = Gluing::sample_with(n, rng);
            if is_simple(&g.dual_graph()) {
                return (g, attempts);
            }
        }
    }

    pub fn dual_graph(&self) -> DualGraph {
        DualGraph {
            n: self.n,
            partner: self.partner.iter().map(|&p| Some(p)).collect(),
        }
    }

    /// Canonical list of edges as slot pairs, ordered by the smaller slot.
    pub fn edges(&self) -> Vec<((usize, u8), (usize, u8))> {
        (0..self.partner.len())
            .filter(|&s| self.partner[s] as usize > s)
            .map(|s| {
                let p = self.partner[s] as usize;
                (
                    (s / SLOTS_PER_VERTEX, (s % SLOTS_PER_VERTEX) as u8),
                    (p / SLOTS_PER_VERTEX, (p % SLOTS_PER_VERTEX) as u8),
                )
            })
            .collect()
    }
}

/// Replay/debug serialisation: `n`, the matching as slot-pair records, and
/// the parallel list of twists.
impl Serialize for Gluing {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let edges = self.edges();
        let twists: Vec<u8> = edges.iter().map(|&((v, s), _)| self.twist_of(v, s)).collect();
        let matching: Vec<[[usize; 2]; 2]> = edges
            .iter()
            .map(|&((v, s), (u, t))| [[v, s as usize], [u, t as usize]])
            .collect();
        let mut st = serializer.serialize_struct("Gluing", 3)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("matching", &matching)?;
        st.serialize_field("twists", &twists)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Gluing {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Gluing, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            matching: Vec<[[usize; 2]; 2]>,
            twists: Vec<u8>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let pairs: Vec<((usize, u8), (usize, u8))> = raw
            .matching
            .iter()
            .map(|p| ((p[0][0], p[0][1] as u8), (p[1][0], p[1][1] as u8)))
            .collect();
        Gluing::from_parts(raw.n, &pairs, &raw.twists).map_err(serde::de::Error::custom)
    }
}

/// Deterministic sample for a given seed.
pub fn sample_gluing(n: usize, seed: u64) -> Gluing {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Gluing::sample_with(n, &mut rng)
}

/// The 4-regular dual multigraph, kept at slot resolution. Hand-built test
/// graphs may leave slots unmatched (`None`); sampled gluings never do.
#[derive(Clone, Debug)]
pub struct DualGraph {
    n: usize,
    partner: Vec<Option<u32>>,
}

impl DualGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn from_edges(n: usize, pairs: &[((usize, u8), (usize, u8))]) -> DualGraph {
        let mut partner = vec![None; SLOTS_PER_VERTEX * n];
        for &((v, s), (u, t)) in pairs {
            let a = v * SLOTS_PER_VERTEX + s as usize;
            let b = u * SLOTS_PER_VERTEX + t as usize;
            assert!(a != b && partner[a].is_none() && partner[b].is_none());
            partner[a] = Some(b as u32);
            partner[b] = Some(a as u32);
        }
        DualGraph { n, partner }
    }

    pub fn neighbour(&self, vertex: usize, slot: u8) -> Option<(usize, u8)> {
        self.partner[vertex * SLOTS_PER_VERTEX + slot as usize]
            .map(|p| ((p as usize) / SLOTS_PER_VERTEX, ((p as usize) % SLOTS_PER_VERTEX) as u8))
    }
}

/// No loops and no parallel edges.
pub fn is_simple(g: &DualGraph) -> bool {
    for v in 0..g.n {
        let mut nb = [usize::MAX; SLOTS_PER_VERTEX];
        for s in 0..SLOTS_PER_VERTEX {
            if let Some((u, _)) = g.neighbour(v, s as u8) {
                if u == v {
                    return false;
                }
                nb[s] = u;
            }
        }
        for i in 0..SLOTS_PER_VERTEX {
            for j in (i + 1)..SLOTS_PER_VERTEX {
                if nb[i] != usize::MAX && nb[i] == nb[j] {
                    return false;
                }
            }
        }
    }
    true
}

/// One step of a cycle: the vertex with its entry and exit slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleStep {
    pub vertex: usize,
    pub entry_slot: u8,
    pub exit_slot: u8,
}

/// A simple cycle of the dual graph in canonical orientation: the minimal
/// vertex first, travelling towards its smaller cycle neighbour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub steps: Vec<CycleStep>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub const MAX_CYCLE_LEN: usize = 16;
const CYCLE_COUNT_CAP: usize = 1_000_000;

/// Every simple cycle of length 3..=`max_len`, each listed once.
pub fn enumerate_cycles(g: &DualGraph, max_len: usize) -> Result<Vec<Cycle>> {
    if max_len > MAX_CYCLE_LEN {
        return Err(Error::CycleLengthCap {
            requested: max_len,
            max: MAX_CYCLE_LEN,
        });
    }
    let mut cycles = Vec::new();
    if max_len < 3 {
        return Ok(cycles);
    }
    let mut visited = vec![false; g.n];
    for start in 0..g.n {
        for first_exit in 0..SLOTS_PER_VERTEX as u8 {
            let Some((v1, e1)) = g.neighbour(start, first_exit) else {
                continue;
            };
            if v1 <= start {
                continue;
            }
            visited[v1] = true;
            let mut path = vec![CycleStep {
                vertex: v1,
                entry_slot: e1,
                exit_slot: 0,
            }];
            extend_paths(
                g,
                start,
                first_exit,
                max_len,
                &mut path,
                &mut visited,
                &mut cycles,
            )?;
            visited[v1] = false;
        }
    }
    Ok(cycles)
}

fn extend_paths(
    g: &DualGraph,
    start: usize,
    first_exit: u8,
    max_len: usize,
    path: &mut Vec<CycleStep>,
    visited: &mut Vec<bool>,
    cycles: &mut Vec<Cycle>,
) -> Result<()> {
    let current = *path.last().unwrap();
    for exit in 0..SLOTS_PER_VERTEX as u8 {
        if exit == current.entry_slot {
            continue;
        }
        let Some((u, eu)) = g.neighbour(current.vertex, exit) else {
            continue;
        };
        if u == start {
            // closing edge; cycles have length ≥ 3 and one orientation:
            // second vertex smaller than last
            if path.len() >= 2 && path[0].vertex < current.vertex {
                let mut steps = Vec::with_capacity(path.len() + 1);
                steps.push(CycleStep {
                    vertex: start,
                    entry_slot: eu,
                    exit_slot: first_exit,
                });
                steps.extend(path.iter().copied());
                steps.last_mut().unwrap().exit_slot = exit;
                // fill in the recorded exit slots along the path
                for i in 1..steps.len() - 1 {
                    steps[i].exit_slot = path[i - 1].exit_slot;
                }
                cycles.push(Cycle { steps });
                if cycles.len() > CYCLE_COUNT_CAP {
                    return Err(Error::CycleCountCap {
                        cap: CYCLE_COUNT_CAP,
                    });
                }
            }
            continue;
        }
        if u < start || visited[u] || path.len() + 1 >= max_len {
            if u > start && !visited[u] && path.len() + 1 == max_len {
                // a longer path could close later but would exceed max_len
            }
            continue;
        }
        path.last_mut().unwrap().exit_slot = exit;
        visited[u] = true;
        path.push(CycleStep {
            vertex: u,
            entry_slot: eu,
            exit_slot: 0,
        });
        extend_paths(g, start, first_exit, max_len, path, visited, cycles)?;
        path.pop();
        visited[u] = false;
    }
    Ok(())
}

/// Travel orientation for reading a cycle as a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traversal {
    Forward,
    Reverse,
}

/// Read the word of a cycle starting at step `start`. Each visited vertex
/// contributes its direction letter (from the entry/exit slot pair) and the
/// edge exited afterwards contributes its twist. Reversed traversal swaps
/// entry and exit, which mirrors the word reversal `w*` exactly — the class
/// of the result does not depend on `start` or the orientation.
pub fn cycle_word(g: &Gluing, cycle: &Cycle, start: usize, traversal: Traversal) -> Word {
    let k = cycle.steps.len();
    assert!(start < k);
    let letters = (0..k)
        .map(|i| match traversal {
            Traversal::Forward => {
                let step = cycle.steps[(start + i) % k];
                Letter::new(
                    direction_between(step.entry_slot, step.exit_slot),
                    g.twist_of(step.vertex, step.exit_slot),
                )
            }
            Traversal::Reverse => {
                let step = cycle.steps[(start + 2 * k - i) % k];
                Letter::new(
                    direction_between(step.exit_slot, step.entry_slot),
                    g.twist_of(step.vertex, step.entry_slot),
                )
            }
        })
        .collect();
    Word::new(letters)
}

/// Count, for each listed class, the cycles of the gluing labelled by it.
/// Cycles whose class is not listed are ignored. Returned counts align with
/// the input order.
pub fn class_counts(g: &Gluing, classes: &[WordClass], max_len: usize) -> Result<Vec<u64>> {
    debug_assert!(classes.iter().all(|c| c.length <= max_len));
    let index: BTreeMap<&Word, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (&c.canonical, i))
        .collect();
    let mut counts = vec![0u64; classes.len()];
    for cycle in enumerate_cycles(&g.dual_graph(), max_len)? {
        let word = cycle_word(g, &cycle, 0, Traversal::Forward);
        if let Some(&i) = index.get(&canonical(&word)) {
            counts[i] += 1;
        }
    }
    Ok(counts)
}

/// Is every radius-`l` ball of the graph free of a second cycle?
/// (Cyclomatic number `edges − vertices + components ≤ 1` on each ball.)
pub fn is_tangle_free(g: &DualGraph, l: usize) -> bool {
    for v in 0..g.n {
        let ball = ball_vertices(g, v, l);
        let in_ball = |u: usize| ball.binary_search(&u).is_ok();
        // each edge inside the ball is seen from both endpoint slots; loops
        // occupy two slots of one vertex, so the same double counting applies
        let mut slot_hits = 0usize;
        for &u in &ball {
            for s in 0..SLOTS_PER_VERTEX as u8 {
                if let Some((w, _)) = g.neighbour(u, s) {
                    if in_ball(w) {
                        slot_hits += 1;
                    }
                }
            }
        }
        let edges = slot_hits / 2;
        // a ball is connected through its centre, so one component
        if edges > ball.len() {
            return false;
        }
    }
    true
}

fn ball_vertices(g: &DualGraph, center: usize, radius: usize) -> Vec<usize> {
    let mut dist: BTreeMap<usize, usize> = BTreeMap::new();
    dist.insert(center, 0);
    let mut queue = VecDeque::from([center]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == radius {
            continue;
        }
        for s in 0..SLOTS_PER_VERTEX as u8 {
            if let Some((u, _)) = g.neighbour(v, s) {
                if !dist.contains_key(&u) {
                    dist.insert(u, d + 1);
                    queue.push_back(u);
                }
            }
        }
    }
    dist.into_keys().collect()
}

/// Parameters of a Monte-Carlo batch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Condition each trial's gluing on a simple dual graph.
    pub conditioned: bool,
    pub max_word_len: usize,
}

/// Per-class cycle counts across independent trials.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialBatch {
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub conditioned: bool,
    pub max_word_len: usize,
    /// Canonical words of the counted classes.
    pub classes: Vec<Word>,
    /// `counts[class][trial]`
    pub counts: Vec<Vec<u64>>,
}

/// Run the trials (in parallel when a rayon pool is active). Trial `t` draws
/// from ChaCha stream `t + 1` of the master seed, so results are identical
/// for any thread count and any scheduling.
pub fn collect_trial_batch(cfg: &TrialConfig, classes: &[WordClass]) -> Result<TrialBatch> {
    let per_trial: Vec<Vec<u64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
            rng.set_stream(t as u64 + 1);
            let gluing = if cfg.conditioned {
                Gluing::sample_conditioned_with(cfg.n, &mut rng).0
            } else {
                Gluing::sample_with(cfg.n, &mut rng)
            };
            class_counts(&gluing, classes, cfg.max_word_len)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![vec![0u64; cfg.trials]; classes.len()];
    for (t, row) in per_trial.iter().enumerate() {
        for (c, &value) in row.iter().enumerate() {
            counts[c][t] = value;
        }
    }
    Ok(TrialBatch {
        n: cfg.n,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        conditioned: cfg.conditioned,
        max_word_len: cfg.max_word_len,
        classes: classes.iter().map(|c| c.canonical.clone()).collect(),
        counts,
    })
}
