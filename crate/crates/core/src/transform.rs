//! Scheme-modification pipeline: partition blocks by index-1 goodness, split
//! the tables into two independent sub-schemes, swap the bad half's B and C
//! parts, and relabel its indices so the formerly good index-(i+2) elements
//! sit at index 1. Each stage is materialized so its counting invariants can
//! be checked independently.
//!
//! Splitting a two-member set across the partition leaves singletons in the
//! sub-schemes; they are retained and flagged, and sub-schemes are held to
//! relaxed validation (everything but the no-singleton clause).

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::scheme::{
    permute_indices, BlockId, Element, IndexPermutation, ModelError, Scheme, Table,
};
use crate::storability::can_store;
use crate::universe::{badness, Badness, CapMode, UniverseError};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("block size {b} too small for depth {i}, need b >= {needed}")]
    BlockTooSmall { b: u32, i: u32, needed: u32 },
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_depth(scheme: &Scheme, i: u32) -> Result<(), TransformError> {
    if i == 0 || scheme.b < 2 * i + 3 {
        return Err(TransformError::BlockTooSmall {
            b: scheme.b,
            i,
            needed: 2 * i + 3,
        });
    }
    Ok(())
}

/// Blocks split by whether their index-1 element is i-good w.r.t. table B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    pub good: Vec<BlockId>,
    pub bad: Vec<BlockId>,
}

/// Sorts every block into the good or bad part of the partition.
pub fn partition_universe(scheme: &Scheme, i: u32) -> Result<BlockPartition, TransformError> {
    check_depth(scheme, i)?;
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for blk in &scheme.blocks {
        let e1 = Element::new(blk.clone(), 1);
        match badness(scheme, &e1, Table::B, i, CapMode::Enforce)? {
            Badness::Good => good.push(blk.clone()),
            Badness::Bad { .. } => bad.push(blk.clone()),
        }
    }
    Ok(BlockPartition { good, bad })
}

/// The two halves of a split scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Part {
    Prime,
    DoublePrime,
}

/// Identifies a set within one half.
pub type SetKey = (Part, Table, u32);

/// Two independent sub-schemes over complementary whole-block universes.
/// `provenance` maps each surviving set back to the table and bit it was
/// split from; `dp_permutation` accumulates the index relabeling applied to
/// the double-prime half.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitScheme {
    pub prime: Scheme,
    pub double_prime: Scheme,
    pub provenance: BTreeMap<SetKey, (Table, u32)>,
    pub dp_permutation: IndexPermutation,
}

impl SplitScheme {
    pub fn part(&self, part: Part) -> &Scheme {
        match part {
            Part::Prime => &self.prime,
            Part::DoublePrime => &self.double_prime,
        }
    }

    /// Sets of size one produced by the split.
    pub fn singletons(&self) -> Vec<SetKey> {
        let mut out = Vec::new();
        for (part, scheme) in [(Part::Prime, &self.prime), (Part::DoublePrime, &self.double_prime)]
        {
            for (table, records) in [(Table::B, &scheme.table_b), (Table::C, &scheme.table_c)] {
                for rec in records.iter().filter(|r| r.members.len() < 2) {
                    out.push((part, table, rec.bit));
                }
            }
        }
        out
    }

    /// Splits a subset of the original universe between the halves, mapping
    /// double-prime elements through the accumulated relabeling.
    pub fn split_subset(
        &self,
        subset: &BTreeSet<Element>,
    ) -> (BTreeSet<Element>, BTreeSet<Element>) {
        let mut prime = BTreeSet::new();
        let mut dp = BTreeSet::new();
        for e in subset {
            if self.prime.has_block(&e.block) {
                prime.insert(e.clone());
            } else {
                dp.insert(self.dp_permutation.apply_element(e));
            }
        }
        (prime, dp)
    }

    /// Joint storability: each half stores its share of the subset.
    pub fn joint_can_store(&self, subset: &BTreeSet<Element>) -> bool {
        let (s_prime, s_dp) = self.split_subset(subset);
        can_store(&self.prime, &s_prime).is_storable()
            && can_store(&self.double_prime, &s_dp).is_storable()
    }
}

fn restrict(scheme: &Scheme, keep: &BTreeSet<&str>) -> Scheme {
    let blocks: Vec<BlockId> = scheme
        .blocks
        .iter()
        .filter(|b| keep.contains(b.as_str()))
        .cloned()
        .collect();
    let restrict_table = |records: &[crate::scheme::SetRecord]| {
        records
            .iter()
            .filter_map(|rec| {
                let members: Vec<BlockId> = rec
                    .members
                    .iter()
                    .filter(|m| keep.contains(m.as_str()))
                    .cloned()
                    .collect();
                (!members.is_empty()).then(|| crate::scheme::SetRecord {
                    bit: rec.bit,
                    index: rec.index,
                    members,
                })
            })
            .collect::<Vec<_>>()
    };
    let mut out = Scheme {
        m: blocks.len() as u32 * scheme.b,
        s: blocks.len() as u32,
        b: scheme.b,
        blocks,
        table_b: restrict_table(&scheme.table_b),
        table_c: restrict_table(&scheme.table_c),
    };
    out.canonicalize();
    out
}

/// Splits every set between the two parts; indices are preserved and blocks
/// are never divided. Empty intersections vanish, singletons survive.
pub fn split_tables(scheme: &Scheme, partition: &BlockPartition) -> SplitScheme {
    let good: BTreeSet<&str> = partition.good.iter().map(String::as_str).collect();
    let bad: BTreeSet<&str> = partition.bad.iter().map(String::as_str).collect();
    let prime = restrict(scheme, &good);
    let double_prime = restrict(scheme, &bad);
    let mut provenance = BTreeMap::new();
    for (part, sub) in [(Part::Prime, &prime), (Part::DoublePrime, &double_prime)] {
        for (table, records) in [(Table::B, &sub.table_b), (Table::C, &sub.table_c)] {
            for rec in records.iter() {
                provenance.insert((part, table, rec.bit), (table, rec.bit));
            }
        }
    }
    SplitScheme {
        dp_permutation: IndexPermutation::identity(scheme.b),
        prime,
        double_prime,
        provenance,
    }
}

/// Interchanges tables B and C of the double-prime half. Blocks that stored
/// through a 0 bit now store through a 1 and vice versa; per-index set
/// totals are unchanged.
pub fn swap_subtables(split: &SplitScheme) -> SplitScheme {
    let mut out = split.clone();
    std::mem::swap(&mut out.double_prime.table_b, &mut out.double_prime.table_c);
    let provenance = out
        .provenance
        .iter()
        .map(|(&(part, table, bit), &orig)| {
            let table = if part == Part::DoublePrime { table.other() } else { table };
            ((part, table, bit), orig)
        })
        .collect();
    out.provenance = provenance;
    out
}

/// The relabeling permutation: `k` and `k + i + 1` interchanged for
/// `1 <= k <= i + 1`, indices above `2i + 2` untouched.
pub fn relabel_permutation(b: u32, i: u32) -> IndexPermutation {
    IndexPermutation::block_swap(b, i + 1)
}

/// Applies the relabeling to the double-prime half only.
pub fn relabel(split: &SplitScheme, i: u32) -> Result<SplitScheme, TransformError> {
    check_depth(&split.double_prime, i)?;
    let pi = relabel_permutation(split.double_prime.b, i);
    let mut out = split.clone();
    out.double_prime = permute_indices(&split.double_prime, &pi)?;
    out.dp_permutation = pi.compose(&split.dp_permutation);
    Ok(out)
}

/// Per-index set counts at the four pipeline stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageSizesRow {
    pub index: u32,
    pub b0: u32,
    pub c0: u32,
    pub b1: u32,
    pub c1: u32,
    pub b2: u32,
    pub c2: u32,
    pub b3: u32,
    pub c3: u32,
}

/// Final-scheme goodness of one block's index-1 element, alongside whether
/// the transfer premise held in the original scheme (for double-prime
/// blocks: the index-(i+2) element was i-good w.r.t. C).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockGoodness {
    pub block: BlockId,
    pub part: Part,
    pub final_good: bool,
    pub premise_good: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransformReport {
    pub i: u32,
    /// Subset-size budget the certificate machinery pairs with this depth.
    pub n: u32,
    pub rows: Vec<StageSizesRow>,
    /// Per-index doubling bound after the split.
    pub doubling_ok: bool,
    /// Per-index totals preserved by the swap.
    pub swap_conserved: bool,
    /// Totals over indices `1..=2i+2` relabelled but not created.
    pub relabel_conserved: bool,
    pub goodness: Vec<BlockGoodness>,
}

impl TransformReport {
    /// Every block whose premise held is good at index 1 in the final scheme.
    pub fn audit_clean(&self) -> bool {
        self.goodness.iter().all(|g| !g.premise_good || g.final_good)
    }

    /// Blocks whose transfer premise failed: these witness that the input
    /// scheme cannot store every small subset.
    pub fn premise_violations(&self) -> Vec<&BlockGoodness> {
        self.goodness.iter().filter(|g| !g.premise_good).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,b0,c0,b1,c1,b2,c2,b3,c3\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.index, r.b0, r.c0, r.b1, r.c1, r.b2, r.c2, r.b3, r.c3
            ));
        }
        out
    }
}

fn count_sets(scheme: &Scheme, table: Table, index: u32) -> u32 {
    scheme.table(table).iter().filter(|r| r.index == index).count() as u32
}

/// The full pipeline with its counting report and goodness audit.
pub fn modify(scheme: &Scheme, i: u32) -> Result<(SplitScheme, TransformReport), TransformError> {
    check_depth(scheme, i)?;
    let partition = partition_universe(scheme, i)?;
    let stage1 = split_tables(scheme, &partition);
    let stage2 = swap_subtables(&stage1);
    let stage3 = relabel(&stage2, i)?;

    let joint = |split: &SplitScheme, table: Table, index: u32| {
        count_sets(&split.prime, table, index) + count_sets(&split.double_prime, table, index)
    };
    let mut rows = Vec::new();
    for index in 1..=scheme.b {
        rows.push(StageSizesRow {
            index,
            b0: count_sets(scheme, Table::B, index),
            c0: count_sets(scheme, Table::C, index),
            b1: joint(&stage1, Table::B, index),
            c1: joint(&stage1, Table::C, index),
            b2: joint(&stage2, Table::B, index),
            c2: joint(&stage2, Table::C, index),
            b3: joint(&stage3, Table::B, index),
            c3: joint(&stage3, Table::C, index),
        });
    }
    let doubling_ok = rows.iter().all(|r| r.b1 <= 2 * r.b0 && r.c1 <= 2 * r.c0);
    let swap_conserved = rows.iter().all(|r| r.b2 + r.c2 == r.b1 + r.c1);
    let span = 2 * i + 2;
    let sum = |f: &dyn Fn(&StageSizesRow) -> u32| -> u32 {
        rows.iter().filter(|r| r.index <= span).map(|r| f(r)).sum()
    };
    let relabel_conserved = sum(&|r| r.b3 + r.c3) == sum(&|r| r.b2 + r.c2)
        && sum(&|r| r.b3 + r.c3) <= 2 * sum(&|r| r.b0 + r.c0);

    let mut goodness = Vec::new();
    for (part, blocks) in [(Part::Prime, &partition.good), (Part::DoublePrime, &partition.bad)] {
        for blk in blocks {
            let e1 = Element::new(blk.clone(), 1);
            let final_good =
                !badness(stage3.part(part), &e1, Table::B, i, CapMode::Enforce)?.is_bad();
            let premise_good = match part {
                Part::Prime => true,
                Part::DoublePrime => {
                    let shifted = Element::new(blk.clone(), i + 2);
                    !badness(scheme, &shifted, Table::C, i, CapMode::Enforce)?.is_bad()
                }
            };
            goodness.push(BlockGoodness {
                block: blk.clone(),
                part,
                final_good,
                premise_good,
            });
        }
    }

    let report = TransformReport {
        i,
        n: 4 * i,
        rows,
        doubling_ok,
        swap_conserved,
        relabel_conserved,
        goodness,
    };
    Ok((stage3, report))
}
