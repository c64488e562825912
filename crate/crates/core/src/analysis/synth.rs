//! Desk-scale exhaustive search for the smallest block count whose some
//! restricted scheme stores every subset up to the target size.
//!
//! Candidate schemes are the cartesian product of singleton-free set
//! partitions per (table, index) slot. The first slot is fixed to canonical
//! shape representatives: any scheme can be relabelled block-wise so its
//! (B, 1) partition lists consecutive blocks in descending part sizes, so
//! the search stays exhaustive while shedding most of the block symmetry.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::scheme::{Element, Scheme, SetRecord};
use crate::storability::can_store;

use super::block_names;

/// Stop climbing once one block count would require more candidates.
const CANDIDATE_BUDGET: u64 = 60_000_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("exhaustive synthesis supports b in {{2, 4}}, got {0}")]
    UnsupportedBlockSize(u32),
    #[error("exhaustive synthesis supports m <= 16, got {0}")]
    UniverseTooLarge(u32),
    #[error("exhaustive synthesis supports n <= 4, got {0}")]
    SubsetTooLarge(u32),
    #[error("m = {m} is not a multiple of b = {b}")]
    IndivisibleUniverse { m: u32, b: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum SynthOutcome {
    Found {
        minimal_s: u32,
        witness: Scheme,
        /// Every smaller block count was fully enumerated and failed.
        exhaustive: bool,
        schemes_tested: u64,
    },
    NoScheme {
        max_s_tried: u32,
        /// False when the candidate budget cut the climb short.
        exhaustive: bool,
        schemes_tested: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthResult {
    pub n: u32,
    pub m: u32,
    pub b: u32,
    pub outcome: SynthOutcome,
}

/// All set partitions of `0..s` into parts of size at least 2, as sorted
/// part lists.
fn partitions_min_two(s: u32) -> Vec<Vec<Vec<u32>>> {
    fn rec(remaining: &[u32], acc: &mut Vec<Vec<u32>>, out: &mut Vec<Vec<Vec<u32>>>) {
        match remaining {
            [] => out.push(acc.clone()),
            [first, rest @ ..] => {
                // the smallest remaining element picks at least one mate
                for k in 1..=rest.len() {
                    for mates in rest.iter().copied().combinations(k) {
                        if rest.len() - k == 1 {
                            continue; // would strand a singleton
                        }
                        let mut part = vec![*first];
                        part.extend(&mates);
                        let next: Vec<u32> =
                            rest.iter().copied().filter(|x| !mates.contains(x)).collect();
                        acc.push(part);
                        rec(&next, acc, out);
                        acc.pop();
                    }
                }
            }
        }
    }
    let all: Vec<u32> = (0..s).collect();
    let mut out = Vec::new();
    rec(&all, &mut Vec::new(), &mut out);
    out
}

/// One partition per shape (descending part sizes over consecutive blocks):
/// the canonical representatives for the first slot.
fn shape_representatives(s: u32) -> Vec<Vec<Vec<u32>>> {
    fn shapes(total: u32, max: u32) -> Vec<Vec<u32>> {
        if total == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in (2..=total.min(max)).rev() {
            if total - first == 1 {
                continue;
            }
            for mut rest in shapes(total - first, first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    shapes(s, s)
        .into_iter()
        .map(|shape| {
            let mut parts = Vec::new();
            let mut next = 0;
            for size in shape {
                parts.push((next..next + size).collect());
                next += size;
            }
            parts
        })
        .collect()
}

fn assemble(
    s: u32,
    b: u32,
    slot_partitions: &[&Vec<Vec<u32>>],
) -> Scheme {
    let blocks = block_names(s);
    let mut table_b = Vec::new();
    let mut table_c = Vec::new();
    for (slot, partition) in slot_partitions.iter().enumerate() {
        let (records, index) = if (slot as u32) < b {
            (&mut table_b, slot as u32 + 1)
        } else {
            (&mut table_c, slot as u32 - b + 1)
        };
        for part in partition.iter() {
            records.push(SetRecord {
                bit: records.len() as u32,
                index,
                members: part.iter().map(|&p| blocks[p as usize].clone()).collect(),
            });
        }
    }
    let mut scheme = Scheme { m: s * b, s, b, blocks, table_b, table_c };
    scheme.canonicalize();
    scheme
}

/// Every subset of size at most `n` is storable.
fn stores_all(scheme: &Scheme, n: u32) -> bool {
    let universe: Vec<Element> = scheme.universe().collect();
    for size in 1..=n.min(universe.len() as u32) {
        for combo in universe.iter().combinations(size as usize) {
            let subset = combo.into_iter().cloned().collect();
            if !can_store(scheme, &subset).is_storable() {
                return false;
            }
        }
    }
    true
}

/// Climbs `s` from `m / b` upward, enumerating candidate schemes per level
/// and returning the first level with a witness. The witness is the least
/// candidate in enumeration order, so results are reproducible.
pub fn synth_min_space(n: u32, m: u32, b: u32) -> Result<SynthResult, SynthError> {
    if !matches!(b, 2 | 4) {
        return Err(SynthError::UnsupportedBlockSize(b));
    }
    if m > 16 {
        return Err(SynthError::UniverseTooLarge(m));
    }
    if n > 4 {
        return Err(SynthError::SubsetTooLarge(n));
    }
    if m % b != 0 {
        return Err(SynthError::IndivisibleUniverse { m, b });
    }

    let mut tested: u64 = 0;
    let mut max_s_tried = 0;
    for s in (m / b)..=m {
        let reps = shape_representatives(s);
        let parts = partitions_min_two(s);
        if reps.is_empty() || parts.is_empty() {
            max_s_tried = s;
            continue;
        }
        let free_slots = 2 * b as usize - 1;
        let combos = (reps.len() as u64) * (parts.len() as u64).pow(free_slots as u32);
        if tested.saturating_add(combos) > CANDIDATE_BUDGET {
            return Ok(SynthResult {
                n,
                m,
                b,
                outcome: SynthOutcome::NoScheme {
                    max_s_tried,
                    exhaustive: false,
                    schemes_tested: tested,
                },
            });
        }

        let decode = |mut id: u64| -> Scheme {
            let mut slots: Vec<&Vec<Vec<u32>>> = Vec::with_capacity(free_slots + 1);
            slots.push(&reps[(id % reps.len() as u64) as usize]);
            id /= reps.len() as u64;
            for _ in 0..free_slots {
                slots.push(&parts[(id % parts.len() as u64) as usize]);
                id /= parts.len() as u64;
            }
            assemble(s, b, &slots)
        };

        let hit = (0..combos)
            .into_par_iter()
            .find_first(|&id| stores_all(&decode(id), n));
        tested += combos;
        max_s_tried = s;
        if let Some(id) = hit {
            let witness = decode(id);
            return Ok(SynthResult {
                n,
                m,
                b,
                outcome: SynthOutcome::Found {
                    minimal_s: s,
                    witness,
                    exhaustive: true,
                    schemes_tested: tested,
                },
            });
        }
    }
    Ok(SynthResult {
        n,
        m,
        b,
        outcome: SynthOutcome::NoScheme { max_s_tried, exhaustive: true, schemes_tested: tested },
    })
}

pub fn synth_csv(results: &[SynthResult]) -> String {
    let mut out = String::from("n,m,b,minimal_s,exhaustive\n");
    for r in results {
        match &r.outcome {
            SynthOutcome::Found { minimal_s, exhaustive, .. } => {
                out.push_str(&format!("{},{},{},{},{}\n", r.n, r.m, r.b, minimal_s, exhaustive));
            }
            SynthOutcome::NoScheme { exhaustive, .. } => {
                out.push_str(&format!("{},{},{},none,{}\n", r.n, r.m, r.b, exhaustive));
            }
        }
    }
    out
}
