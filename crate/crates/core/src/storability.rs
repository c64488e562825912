//! Query simulation and the storability decision procedure.
//!
//! `can_store` answers "does an assignment exist under which every membership
//! query is correct for subset S". It reduces to 2-SAT over one variable per
//! block (false = stored in B, true = stored in C): set bits are functionally
//! determined by the block choices, so for each set any in-subset member and
//! any out-of-subset member must not end up stored in that set's table
//! together. `can_store_bruteforce` decides the same question by sweeping all
//! `2^s` block assignments and is the differential oracle for everything
//! else.
//!
//! All operations are pure functions of immutable inputs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheme::{BlockId, Element, ModelError, Scheme, Table};
use crate::twosat::{lit, Solution, TwoSat};

mod bit01 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S, K>(map: &BTreeMap<K, bool>, ser: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        K: Serialize + Ord,
    {
        map.iter()
            .map(|(k, &v)| (k, u8::from(v)))
            .collect::<BTreeMap<_, _>>()
            .serialize(ser)
    }

    pub fn deserialize<'de, D, K>(de: D) -> Result<BTreeMap<K, bool>, D::Error>
    where
        D: Deserializer<'de>,
        K: Deserialize<'de> + Ord,
    {
        let raw: BTreeMap<K, u8> = BTreeMap::deserialize(de)?;
        raw.into_iter()
            .map(|(k, v)| match v {
                0 => Ok((k, false)),
                1 => Ok((k, true)),
                other => Err(serde::de::Error::custom(format!("bit must be 0 or 1, got {other}"))),
            })
            .collect()
    }
}

/// Concrete bit values for one stored subset: a 0 in `a_bits` routes a
/// block's queries to table B, a 1 to table C.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    #[serde(with = "bit01")]
    pub a_bits: BTreeMap<BlockId, bool>,
    #[serde(with = "bit01")]
    pub b_bits: BTreeMap<u32, bool>,
    #[serde(with = "bit01")]
    pub c_bits: BTreeMap<u32, bool>,
}

impl Assignment {
    /// All-zero assignment: every block in B, every set bit 0.
    pub fn zero(scheme: &Scheme) -> Self {
        Assignment {
            a_bits: scheme.blocks.iter().map(|b| (b.clone(), false)).collect(),
            b_bits: scheme.table_b.iter().map(|r| (r.bit, false)).collect(),
            c_bits: scheme.table_c.iter().map(|r| (r.bit, false)).collect(),
        }
    }

    /// Covers every block and every set bit of the scheme.
    pub fn is_total(&self, scheme: &Scheme) -> bool {
        scheme.blocks.iter().all(|b| self.a_bits.contains_key(b))
            && scheme.table_b.iter().all(|r| self.b_bits.contains_key(&r.bit))
            && scheme.table_c.iter().all(|r| self.c_bits.contains_key(&r.bit))
    }
}

/// One forcing step: with `witness_in` stored through the shared set, the
/// set bit is pinned and `witness_out` would read it wrongly, pushing
/// `to_block` into `to_table`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcingStep {
    pub from_block: BlockId,
    pub from_table: Table,
    pub to_block: BlockId,
    pub to_table: Table,
    pub set_table: Table,
    pub set_index: u32,
    pub set_bit: u32,
    pub witness_in: Element,
    pub witness_out: Element,
}

/// Why a subset cannot be stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConflictTrace {
    /// Cyclic chain of forcing steps: `pivot` in B forces `pivot` in C and
    /// back again.
    Forcing { pivot: BlockId, steps: Vec<ForcingStep> },
    /// Every block assignment was tried and failed.
    ExhaustiveRefutation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum StorabilityResult {
    Storable { assignment: Assignment },
    Unstorable { trace: ConflictTrace },
}

impl StorabilityResult {
    pub fn is_storable(&self) -> bool {
        matches!(self, StorabilityResult::Storable { .. })
    }
}

/// Where a block may be stored under a fixed subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForcedTable {
    Free,
    ForcedB,
    ForcedC,
    Unstorable,
}

#[derive(Debug, Error)]
pub enum StorabilityError {
    #[error("brute force limited to 20 blocks, scheme has {0}")]
    TooManyBlocks(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Runs the two-probe query scheme for `e`: probe A, then the set bit in B
/// or C. Expects a valid scheme and a total assignment.
pub fn answer_query(scheme: &Scheme, asg: &Assignment, e: &Element) -> bool {
    let in_c = *asg
        .a_bits
        .get(&e.block)
        .unwrap_or_else(|| panic!("assignment misses block {:?}", e.block));
    let (table, bits) = if in_c {
        (Table::C, &asg.c_bits)
    } else {
        (Table::B, &asg.b_bits)
    };
    let rec = scheme
        .set_of(table, e)
        .unwrap_or_else(|| panic!("element {e} uncovered in table {table}"));
    *bits
        .get(&rec.bit)
        .unwrap_or_else(|| panic!("assignment misses bit {} of table {table}", rec.bit))
}

/// A query that answered wrongly under an assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryViolation {
    pub element: Element,
    pub expected: bool,
    pub got: bool,
}

/// Sweeps every universe element; empty result means the assignment realizes
/// exactly the subset `s`.
pub fn verify_assignment(
    scheme: &Scheme,
    asg: &Assignment,
    s: &BTreeSet<Element>,
) -> Vec<QueryViolation> {
    scheme
        .universe()
        .filter_map(|e| {
            let expected = s.contains(&e);
            let got = answer_query(scheme, asg, &e);
            (got != expected).then_some(QueryViolation { element: e, expected, got })
        })
        .collect()
}

fn block_position(scheme: &Scheme) -> BTreeMap<&str, u32> {
    scheme
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.as_str(), i as u32))
        .collect()
}

/// Derives the set bits implied by a block assignment: a set's bit is 1 iff
/// some member stored in that set's table is in the subset. Unconstrained
/// bits default to 0.
fn assignment_from_blocks(
    scheme: &Scheme,
    subset: &BTreeSet<Element>,
    in_c: impl Fn(&str) -> bool,
) -> Assignment {
    let mut asg = Assignment::zero(scheme);
    for blk in &scheme.blocks {
        asg.a_bits.insert(blk.clone(), in_c(blk));
    }
    for (table, records) in [(Table::B, &scheme.table_b), (Table::C, &scheme.table_c)] {
        let bits = match table {
            Table::B => &mut asg.b_bits,
            Table::C => &mut asg.c_bits,
        };
        for rec in records.iter() {
            let stored_in_subset = rec.elements().any(|e| {
                let routed_here = in_c(&e.block) == (table == Table::C);
                routed_here && subset.contains(&e)
            });
            bits.insert(rec.bit, stored_in_subset);
        }
    }
    asg
}

fn build_solver(scheme: &Scheme, subset: &BTreeSet<Element>) -> TwoSat<ForcingStep> {
    let pos = block_position(scheme);
    let mut sat: TwoSat<ForcingStep> = TwoSat::new(scheme.s);
    for (table, records) in [(Table::B, &scheme.table_b), (Table::C, &scheme.table_c)] {
        // A block is routed to this table when its variable equals `here`.
        let here = table == Table::C;
        for rec in records.iter() {
            let (members_in, members_out): (Vec<Element>, Vec<Element>) =
                rec.elements().partition(|e| subset.contains(e));
            for e in &members_in {
                for f in &members_out {
                    // not both routed here: e would set the bit to 1, f reads it
                    let ve = pos[e.block.as_str()];
                    let vf = pos[f.block.as_str()];
                    let step = |from: &Element, to: &Element| ForcingStep {
                        from_block: from.block.clone(),
                        from_table: table,
                        to_block: to.block.clone(),
                        to_table: table.other(),
                        set_table: table,
                        set_index: rec.index,
                        set_bit: rec.bit,
                        witness_in: e.clone(),
                        witness_out: f.clone(),
                    };
                    sat.add_implication(lit(ve, here), lit(vf, !here), step(e, f));
                    sat.add_implication(lit(vf, here), lit(ve, !here), step(f, e));
                }
            }
        }
    }
    sat
}

fn solve(scheme: &Scheme, subset: &BTreeSet<Element>, sat: TwoSat<ForcingStep>) -> StorabilityResult {
    match sat.solve() {
        Solution::Satisfiable(values) => {
            let pos = block_position(scheme);
            let assignment =
                assignment_from_blocks(scheme, subset, |blk| values[pos[blk] as usize]);
            StorabilityResult::Storable { assignment }
        }
        Solution::Unsatisfiable { var, chain } => StorabilityResult::Unstorable {
            trace: ConflictTrace::Forcing {
                pivot: scheme.blocks[var as usize].clone(),
                steps: chain,
            },
        },
    }
}

/// Decides whether some assignment stores exactly `subset`.
pub fn can_store(scheme: &Scheme, subset: &BTreeSet<Element>) -> StorabilityResult {
    solve(scheme, subset, build_solver(scheme, subset))
}

/// `can_store` with blocks pinned to fixed tables.
pub fn can_store_pinned(
    scheme: &Scheme,
    subset: &BTreeSet<Element>,
    pins: &[(&BlockId, Table)],
) -> StorabilityResult {
    let pos = block_position(scheme);
    let mut sat = build_solver(scheme, subset);
    for (blk, table) in pins {
        let v = pos[blk.as_str()];
        let step = ForcingStep {
            from_block: (*blk).clone(),
            from_table: *table,
            to_block: (*blk).clone(),
            to_table: *table,
            set_table: *table,
            set_index: 0,
            set_bit: 0,
            witness_in: Element::new((*blk).clone(), 1),
            witness_out: Element::new((*blk).clone(), 1),
        };
        sat.pin(lit(v, *table == Table::C), step);
    }
    solve(scheme, subset, sat)
}

/// Same decision as [`can_store`], by trying all `2^s` block assignments.
pub fn can_store_bruteforce(
    scheme: &Scheme,
    subset: &BTreeSet<Element>,
) -> Result<StorabilityResult, StorabilityError> {
    if scheme.s > 20 {
        return Err(StorabilityError::TooManyBlocks(scheme.s));
    }
    let pos = block_position(scheme);
    'mask: for mask in 0u32..(1 << scheme.s) {
        let in_c = |blk: &str| mask & (1 << pos[blk]) != 0;
        for (table, records) in [(Table::B, &scheme.table_b), (Table::C, &scheme.table_c)] {
            let here = table == Table::C;
            for rec in records.iter() {
                let mut any_in = false;
                let mut any_out = false;
                for e in rec.elements() {
                    if in_c(&e.block) == here {
                        if subset.contains(&e) {
                            any_in = true;
                        } else {
                            any_out = true;
                        }
                    }
                }
                if any_in && any_out {
                    continue 'mask;
                }
            }
        }
        let assignment = assignment_from_blocks(scheme, subset, in_c);
        return Ok(StorabilityResult::Storable { assignment });
    }
    Ok(StorabilityResult::Unstorable { trace: ConflictTrace::ExhaustiveRefutation })
}

/// Pins `blk` to B and then to C: Free if both work, ForcedB/ForcedC if
/// exactly one does, Unstorable if neither.
pub fn forced_table(
    scheme: &Scheme,
    subset: &BTreeSet<Element>,
    blk: &BlockId,
) -> Result<ForcedTable, StorabilityError> {
    if !scheme.has_block(blk) {
        return Err(ModelError::UnknownBlock(blk.clone()).into());
    }
    let b_ok = can_store_pinned(scheme, subset, &[(blk, Table::B)]).is_storable();
    let c_ok = can_store_pinned(scheme, subset, &[(blk, Table::C)]).is_storable();
    Ok(match (b_ok, c_ok) {
        (true, true) => ForcedTable::Free,
        (true, false) => ForcedTable::ForcedB,
        (false, true) => ForcedTable::ForcedC,
        (false, false) => ForcedTable::Unstorable,
    })
}
