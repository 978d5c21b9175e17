//! Bug seeding and guided restoration.
//!
//! Candidate sites are enumerated file by file, pattern by pattern, match by
//! match. Sites are drawn without replacement by a partial Fisher-Yates
//! shuffle driven by xorshift64; a drawn site whose subtree touches an
//! earlier mutation is skipped and another one is drawn.

use std::collections::HashSet;

use super::{apply_fix, match_pattern, EngineError, Match};
use crate::registry::Registry;
use crate::spec_lang::Pattern;
use crate::tree::{Node, NodeId, Tree};

/// Marsaglia's xorshift64 with shifts (13, 7, 17).
#[derive(Debug, Clone)]
pub struct XorShift64(u64);

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        XorShift64(if seed == 0 { 0x9E37_79B9_7F4A_7C15 } else { seed })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform-ish draw in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }
}

/// One applied mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedRecord {
    /// The seeding pattern that was applied.
    pub pattern: String,
    /// Id of the mutated subtree's root, which is also the id it had before.
    pub location: NodeId,
    pub original: Node,
    pub mutated: Node,
    pub rng_seed: u64,
    /// 1-based position in application order.
    pub ordinal: usize,
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub trees: Vec<Tree>,
    /// Applied mutations with the index of the tree they belong to.
    pub records: Vec<(usize, SeedRecord)>,
    /// Number of candidate sites before selection.
    pub sites: usize,
    /// Fewer than the requested number of mutations could be applied.
    pub shortfall: bool,
}

/// Seeds up to `count` bugs across several trees.
pub fn seed_corpus(
    trees: &[Tree],
    patterns: &[Pattern],
    count: usize,
    rng_seed: u64,
    reg: &Registry,
) -> Result<SeedOutcome, EngineError> {
    let mut sites: Vec<(usize, usize, Match)> = Vec::new();
    for (fi, t) in trees.iter().enumerate() {
        for (pi, p) in patterns.iter().enumerate() {
            for m in match_pattern(p, t, reg)? {
                sites.push((fi, pi, m));
            }
        }
    }
    let total = sites.len();
    let mut current: Vec<Tree> = trees.to_vec();
    let mut touched: Vec<HashSet<NodeId>> = vec![HashSet::new(); trees.len()];
    let mut records = Vec::new();
    let mut remaining: Vec<usize> = (0..sites.len()).collect();
    let mut rng = XorShift64::new(rng_seed);
    while records.len() < count && !remaining.is_empty() {
        let j = rng.below(remaining.len());
        let last = remaining.len() - 1;
        remaining.swap(j, last);
        let (fi, pi, m) = &sites[remaining.pop().expect("non-empty")];
        let tree = &current[*fi];
        let Some(subject) = tree.find(m.subject_id) else {
            continue;
        };
        if subject.preorder().iter().any(|n| touched[*fi].contains(&n.id)) {
            continue;
        }
        let original = subject.clone();
        let proposal = apply_fix(&patterns[*pi], m, tree, reg)?;
        touched[*fi].extend(proposal.replacement.preorder().iter().map(|n| n.id));
        records.push((
            *fi,
            SeedRecord {
                pattern: patterns[*pi].name.clone(),
                location: m.subject_id,
                original,
                mutated: proposal.replacement,
                rng_seed,
                ordinal: records.len() + 1,
            },
        ));
        current[*fi] = proposal.after;
    }
    Ok(SeedOutcome {
        shortfall: records.len() < count,
        trees: current,
        records,
        sites: total,
    })
}

/// Seeds up to `count` bugs into one tree.
pub fn seed_bugs(
    t: &Tree,
    patterns: &[Pattern],
    count: usize,
    rng_seed: u64,
    reg: &Registry,
) -> Result<(Tree, Vec<SeedRecord>), EngineError> {
    let out = seed_corpus(std::slice::from_ref(t), patterns, count, rng_seed, reg)?;
    let tree = out.trees.into_iter().next().expect("one tree");
    Ok((tree, out.records.into_iter().map(|(_, r)| r).collect()))
}

/// Undoes one recorded mutation with the bug-fixing pattern `forward`: among
/// its matches at the record's location, the one whose replacement has the
/// original shape is applied.
pub fn restore_seed(
    forward: &Pattern,
    record: &SeedRecord,
    t: &Tree,
    reg: &Registry,
) -> Result<Tree, EngineError> {
    for m in match_pattern(forward, t, reg)? {
        if m.subject_id != record.location {
            continue;
        }
        let proposal = apply_fix(forward, &m, t, reg)?;
        if proposal.replacement.same_shape(&record.original) {
            return Ok(proposal.after);
        }
    }
    Err(EngineError::NotRestorable {
        pattern: forward.name.clone(),
        location: record.location,
    })
}
