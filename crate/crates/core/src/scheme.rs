//! Core domain model for restricted two-adaptive bitprobe schemes.
//!
//! A scheme describes how a universe of `m = s * b` elements maps onto three
//! tables: table A holds one bit per block, tables B and C hold one bit per
//! set. The first probe reads a block's bit in A; the second probe reads the
//! element's set bit in B (if the A bit was 0) or in C (if it was 1).
//!
//! Restricted schemes keep every set index-homogeneous (all members share one
//! index), forbid singleton sets, and keep sets clean (at most one element of
//! any block per set). Representing a set as `(index, members: [block])` makes
//! index-homogeneity and cleanliness structural; the remaining clauses are
//! checked by [`validate`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque block identifier. Canonical ordering is lexicographic.
pub type BlockId = String;

/// One element of the universe: the `index`-th slot of `block`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    pub block: BlockId,
    pub index: u32,
}

impl Element {
    pub fn new(block: impl Into<BlockId>, index: u32) -> Self {
        Element { block: block.into(), index }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.block, self.index)
    }
}

impl FromStr for Element {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (block, idx) = s
            .rsplit_once(':')
            .ok_or_else(|| ParseError::BadElement(s.to_string()))?;
        if block.is_empty() {
            return Err(ParseError::BadElement(s.to_string()));
        }
        let index: u32 = idx
            .parse()
            .map_err(|_| ParseError::BadElement(s.to_string()))?;
        Ok(Element::new(block, index))
    }
}

impl Serialize for Element {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The two second-probe tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Table {
    B,
    C,
}

impl Table {
    pub fn other(self) -> Table {
        match self {
            Table::B => Table::C,
            Table::C => Table::B,
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Table::B => write!(f, "B"),
            Table::C => write!(f, "C"),
        }
    }
}

impl FromStr for Table {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B" | "b" => Ok(Table::B),
            "C" | "c" => Ok(Table::C),
            _ => Err(ParseError::BadTable(s.to_string())),
        }
    }
}

/// One set of table B or C: the blocks whose `index`-th elements share a bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetRecord {
    pub bit: u32,
    pub index: u32,
    pub members: Vec<BlockId>,
}

impl SetRecord {
    /// Elements of this set, in member order.
    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.members.iter().map(|b| Element::new(b.clone(), self.index))
    }

    pub fn contains_block(&self, block: &str) -> bool {
        self.members.iter().any(|m| m == block)
    }
}

/// A restricted `(n, m, 3s, 2)`-scheme: `s` blocks of `b` elements each, plus
/// the per-index set partitions of tables B and C.
///
/// Bits live in per-table namespaces, so tables sharing a bit is impossible
/// by construction. Values are immutable after validation and safe to share
/// across threads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scheme {
    pub m: u32,
    pub s: u32,
    pub b: u32,
    pub blocks: Vec<BlockId>,
    pub table_b: Vec<SetRecord>,
    pub table_c: Vec<SetRecord>,
}

impl Scheme {
    pub fn table(&self, table: Table) -> &[SetRecord] {
        match table {
            Table::B => &self.table_b,
            Table::C => &self.table_c,
        }
    }

    pub fn has_block(&self, block: &str) -> bool {
        self.blocks.iter().any(|b| b == block)
    }

    pub fn has_element(&self, e: &Element) -> bool {
        e.index >= 1 && e.index <= self.b && self.has_block(&e.block)
    }

    /// All elements in canonical (block, index) order.
    pub fn universe(&self) -> impl Iterator<Item = Element> + '_ {
        self.blocks
            .iter()
            .flat_map(move |blk| (1..=self.b).map(move |i| Element::new(blk.clone(), i)))
    }

    /// The set of `table` containing `e`, if the element is covered there.
    pub fn set_of(&self, table: Table, e: &Element) -> Option<&SetRecord> {
        self.table(table)
            .iter()
            .find(|rec| rec.index == e.index && rec.contains_block(&e.block))
    }

    /// `S_T(e) \ { e }`: the other elements of `e`'s set in `table`.
    pub fn peers(&self, e: &Element, table: Table) -> Result<BTreeSet<Element>, ModelError> {
        if !self.has_element(e) {
            return Err(ModelError::UnknownElement(e.clone()));
        }
        let rec = self
            .set_of(table, e)
            .ok_or_else(|| ModelError::UncoveredElement(e.clone(), table))?;
        Ok(rec.elements().filter(|x| x != e).collect())
    }

    /// Upper bound `floor(b / 2) - 1` on path lengths and universe depths.
    pub fn path_cap(&self) -> u32 {
        (self.b / 2).saturating_sub(1)
    }

    /// Sorts blocks, set members, and set records into canonical order.
    pub fn canonicalize(&mut self) {
        self.blocks.sort();
        for rec in self.table_b.iter_mut().chain(self.table_c.iter_mut()) {
            rec.members.sort();
        }
        self.table_b.sort_by_key(|r| (r.index, r.bit));
        self.table_c.sort_by_key(|r| (r.index, r.bit));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme serializes")
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("m, s, b must all be positive")]
    NonPositiveParams,
    #[error("duplicate block identifier {0:?}")]
    DuplicateBlock(BlockId),
    #[error("table {table}, bit {bit}: set index {index} out of range 1..={b}")]
    IndexOutOfRange { table: Table, bit: u32, index: u32, b: u32 },
    #[error("table {table}: bit {bit} used by more than one set")]
    DuplicateBit { table: Table, bit: u32 },
    #[error("table {table}, bit {bit}: member {member:?} is not a declared block")]
    UnknownMember { table: Table, bit: u32, member: BlockId },
    #[error("malformed element {0:?}, expected block:index")]
    BadElement(String),
    #[error("malformed table {0:?}, expected B or C")]
    BadTable(String),
    #[error("malformed node {0:?}, expected ante,cons,table as a:1,b:1,B")]
    BadNode(String),
}

/// Parses scheme-file text into a structurally well-formed [`Scheme`].
///
/// Checks shape only: JSON validity, positive parameters, distinct blocks,
/// set indices within `1..=b`, per-table bit uniqueness, and members naming
/// declared blocks. Semantic validation is [`validate`]'s job.
pub fn parse_scheme(text: &str) -> Result<Scheme, ParseError> {
    let mut scheme: Scheme = serde_json::from_str(text)?;
    if scheme.m == 0 || scheme.s == 0 || scheme.b == 0 {
        return Err(ParseError::NonPositiveParams);
    }
    let mut seen = BTreeSet::new();
    for blk in &scheme.blocks {
        if !seen.insert(blk.clone()) {
            return Err(ParseError::DuplicateBlock(blk.clone()));
        }
    }
    for (table, records) in [(Table::B, &scheme.table_b), (Table::C, &scheme.table_c)] {
        let mut bits = BTreeSet::new();
        for rec in records.iter() {
            if rec.index < 1 || rec.index > scheme.b {
                return Err(ParseError::IndexOutOfRange {
                    table,
                    bit: rec.bit,
                    index: rec.index,
                    b: scheme.b,
                });
            }
            if !bits.insert(rec.bit) {
                return Err(ParseError::DuplicateBit { table, bit: rec.bit });
            }
            for member in &rec.members {
                if !seen.contains(member) {
                    return Err(ParseError::UnknownMember {
                        table,
                        bit: rec.bit,
                        member: member.clone(),
                    });
                }
            }
        }
    }
    scheme.canonicalize();
    Ok(scheme)
}

/// One violated clause of the restriction set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    /// `m` must equal `s * b`.
    UniverseSizeMismatch { m: u32, s: u32, b: u32 },
    /// The block list must have exactly `s` entries.
    BlockCountMismatch { expected: u32, actual: u32 },
    /// Sets of fewer than two members are forbidden.
    SingletonSet { table: Table, index: u32, bit: u32 },
    /// A block may contribute at most one element to a set (clean sets).
    DuplicateMember { table: Table, index: u32, bit: u32, block: BlockId },
    /// A block's element appears in more than one set of the same index.
    MultipleCoverage { table: Table, index: u32, block: BlockId },
    /// A block's element is not covered by any set of its index.
    MissingCoverage { table: Table, index: u32, block: BlockId },
}

impl Violation {
    pub fn is_singleton(&self) -> bool {
        matches!(self, Violation::SingletonSet { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UniverseSizeMismatch { m, s, b } => {
                write!(f, "universe size mismatch: m={m} but s*b={}", s * b)
            }
            Violation::BlockCountMismatch { expected, actual } => {
                write!(f, "expected {expected} blocks, found {actual}")
            }
            Violation::SingletonSet { table, index, bit } => {
                write!(f, "singleton set: table {table}, index {index}, bit {bit}")
            }
            Violation::DuplicateMember { table, index, bit, block } => {
                write!(f, "block {block:?} listed twice in table {table}, index {index}, bit {bit}")
            }
            Violation::MultipleCoverage { table, index, block } => {
                write!(f, "element {block}:{index} covered by more than one set of table {table}")
            }
            Violation::MissingCoverage { table, index, block } => {
                write!(f, "element {block}:{index} not covered by any set of table {table}")
            }
        }
    }
}

/// Space accounting relative to the nominal table size `s`. Informational:
/// desk-scale fixtures routinely use more sets than `s` bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpaceUsage {
    pub s: u32,
    pub sets_b: u32,
    pub sets_c: u32,
}

/// Outcome of semantic validation. Total and report-based: every violated
/// clause is listed, none raises an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub space: SpaceUsage,
}

impl ValidationReport {
    /// No violations at all.
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// No violations besides singleton sets. Sub-schemes produced by table
    /// splitting may carry singletons and are otherwise held to the same
    /// clauses.
    pub fn is_valid_relaxed(&self) -> bool {
        self.violations.iter().all(Violation::is_singleton)
    }
}

/// Checks every restriction clause plus partition completeness.
pub fn validate(scheme: &Scheme) -> ValidationReport {
    let mut violations = Vec::new();
    if scheme.m != scheme.s * scheme.b {
        violations.push(Violation::UniverseSizeMismatch {
            m: scheme.m,
            s: scheme.s,
            b: scheme.b,
        });
    }
    if scheme.blocks.len() as u32 != scheme.s {
        violations.push(Violation::BlockCountMismatch {
            expected: scheme.s,
            actual: scheme.blocks.len() as u32,
        });
    }
    for (table, records) in [(Table::B, &scheme.table_b), (Table::C, &scheme.table_c)] {
        // coverage[index][block] = number of index-sets containing the block
        let mut coverage: BTreeMap<(u32, &str), u32> = BTreeMap::new();
        for rec in records.iter() {
            if rec.members.len() < 2 {
                violations.push(Violation::SingletonSet {
                    table,
                    index: rec.index,
                    bit: rec.bit,
                });
            }
            let mut in_set = BTreeSet::new();
            for member in &rec.members {
                if !in_set.insert(member.as_str()) {
                    violations.push(Violation::DuplicateMember {
                        table,
                        index: rec.index,
                        bit: rec.bit,
                        block: member.clone(),
                    });
                } else {
                    *coverage.entry((rec.index, member.as_str())).or_insert(0) += 1;
                }
            }
        }
        for index in 1..=scheme.b {
            for block in &scheme.blocks {
                match coverage.get(&(index, block.as_str())).copied().unwrap_or(0) {
                    0 => violations.push(Violation::MissingCoverage {
                        table,
                        index,
                        block: block.clone(),
                    }),
                    1 => {}
                    _ => violations.push(Violation::MultipleCoverage {
                        table,
                        index,
                        block: block.clone(),
                    }),
                }
            }
        }
    }
    ValidationReport {
        violations,
        space: SpaceUsage {
            s: scheme.s,
            sets_b: scheme.table_b.len() as u32,
            sets_c: scheme.table_c.len() as u32,
        },
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown element {0}")]
    UnknownElement(Element),
    #[error("unknown block {0:?}")]
    UnknownBlock(BlockId),
    #[error("element {0} not covered by any set of table {1}")]
    UncoveredElement(Element, Table),
    #[error("permutation is not a bijection on 1..={0}")]
    NotABijection(u32),
}

/// Wrap-around index arithmetic on `[1, b]`: `((k + i - 1) mod b) + 1`.
pub fn index_add(k: u32, i: u32, b: u32) -> u32 {
    debug_assert!((1..=b).contains(&k));
    ((k + i - 1) % b) + 1
}

/// A bijection on `1..=b`, stored as `image[k-1] = pi(k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPermutation {
    image: Vec<u32>,
}

impl IndexPermutation {
    pub fn new(image: Vec<u32>) -> Result<Self, ModelError> {
        let b = image.len() as u32;
        let mut seen = vec![false; image.len()];
        for &v in &image {
            if v < 1 || v > b || seen[(v - 1) as usize] {
                return Err(ModelError::NotABijection(b));
            }
            seen[(v - 1) as usize] = true;
        }
        Ok(IndexPermutation { image })
    }

    pub fn identity(b: u32) -> Self {
        IndexPermutation { image: (1..=b).collect() }
    }

    /// Transposition product swapping `k` and `k + span` for `k` in
    /// `1..=span`, identity elsewhere. Requires `2 * span <= b`.
    pub fn block_swap(b: u32, span: u32) -> Self {
        let mut image: Vec<u32> = (1..=b).collect();
        for k in 1..=span {
            image.swap((k - 1) as usize, (k + span - 1) as usize);
        }
        IndexPermutation { image }
    }

    pub fn b(&self) -> u32 {
        self.image.len() as u32
    }

    pub fn apply(&self, k: u32) -> u32 {
        self.image[(k - 1) as usize]
    }

    /// `self` after `first`: `(self.compose(first)).apply(k) = self.apply(first.apply(k))`.
    pub fn compose(&self, first: &IndexPermutation) -> Self {
        let image = (1..=self.b()).map(|k| self.apply(first.apply(k))).collect();
        IndexPermutation { image }
    }

    pub fn apply_element(&self, e: &Element) -> Element {
        Element::new(e.block.clone(), self.apply(e.index))
    }

    pub fn apply_subset(&self, subset: &BTreeSet<Element>) -> BTreeSet<Element> {
        subset.iter().map(|e| self.apply_element(e)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| v == i as u32 + 1)
    }
}

/// Relabels every index through `pi`; set memberships are untouched.
/// The result is valid whenever the input is.
pub fn permute_indices(scheme: &Scheme, pi: &IndexPermutation) -> Result<Scheme, ModelError> {
    if pi.b() != scheme.b {
        return Err(ModelError::NotABijection(scheme.b));
    }
    let mut out = scheme.clone();
    for rec in out.table_b.iter_mut().chain(out.table_c.iter_mut()) {
        rec.index = pi.apply(rec.index);
    }
    out.canonicalize();
    Ok(out)
}

/// Parses the CLI subset syntax `a:1,b:2` into an element set.
pub fn parse_subset(text: &str) -> Result<BTreeSet<Element>, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(BTreeSet::new());
    }
    trimmed.split(',').map(|part| part.trim().parse()).collect()
}
