//! Adversarial certificates: element sets that force a block out of a table.
//!
//! A path whose nodes each have one term in S and the other in X chains the
//! conflict rule: storing the first antecedent in its own table forces every
//! later antecedent into its table and every consequent out. A bad element
//! yields two such paths ending at set-mates, which pins its block out of
//! one table; a block bad on both sides at disjoint index ranges cannot be
//! stored at all. `certify` replays every claim through the storability
//! oracle.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheme::{BlockId, Element, Scheme, Table};
use crate::storability::{
    can_store, forced_table, ConflictTrace, ForcedTable, StorabilityError, StorabilityResult,
};
use crate::universe::{
    badness, enumerate_paths_from_element, path_end_table, Badness, CapMode, Node, Path,
    UniverseError,
};

/// Which table the certificate forbids for the target block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Forbidden {
    Table(Table),
    Both,
}

/// Disjoint must-store / must-exclude element sets with the paths whose
/// forcing they encode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryPair {
    pub s: BTreeSet<Element>,
    pub x: BTreeSet<Element>,
    pub target_block: BlockId,
    pub forbidden_table: Forbidden,
    pub support_paths: Vec<Path>,
}

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("element {0} is {1}-good w.r.t. table {2}, no certificate exists")]
    NotBad(Element, u32, Table),
    #[error("block size {b} too small, need b >= {needed}")]
    BlockTooSmall { b: u32, needed: u32 },
    #[error("unknown block {0:?}")]
    UnknownBlock(BlockId),
    #[error("certificate sets overlap: {0:?}")]
    Overlap(Vec<Element>),
    #[error("collision sweep did not converge")]
    SweepDiverged,
    #[error("no path of length {j} realizes the witness pair ({u}, {v})")]
    MissingWitnessPath { j: u32, u: Element, v: Element },
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Storability(#[from] StorabilityError),
}

/// Which term of the first node lands in S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedChoice {
    #[default]
    AntecedentInS,
    AntecedentInX,
}

/// Splits one path's node terms between S and X: per node, one term each.
/// With the default seed every antecedent lands in S. Disjointness follows
/// from element uniqueness along a path.
pub fn path_forcing_sets(
    path: &Path,
    seed: SeedChoice,
) -> (BTreeSet<Element>, BTreeSet<Element>) {
    let mut s = BTreeSet::new();
    let mut x = BTreeSet::new();
    for node in &path.nodes {
        let (into_s, into_x) = match seed {
            SeedChoice::AntecedentInS => (&node.antecedent, &node.consequent),
            SeedChoice::AntecedentInX => (&node.consequent, &node.antecedent),
        };
        s.insert(into_s.clone());
        x.insert(into_x.clone());
    }
    (s, x)
}

/// Per-node sides for one path: `true` = antecedent in S.
fn merged_forcing_sets(
    path1: &Path,
    path2: &Path,
) -> Result<(BTreeSet<Element>, BTreeSet<Element>), AdversaryError> {
    let mut flip2 = vec![false; path2.nodes.len()];
    let budget = 2 * (path1.nodes.len() + path2.nodes.len());
    for _ in 0..=budget {
        let (s1, x1) = path_forcing_sets(path1, SeedChoice::AntecedentInS);
        let (mut s, mut x) = (s1, x1);
        for (node, flipped) in path2.nodes.iter().zip(&flip2) {
            let (into_s, into_x) = if *flipped {
                (&node.consequent, &node.antecedent)
            } else {
                (&node.antecedent, &node.consequent)
            };
            s.insert(into_s.clone());
            x.insert(into_x.clone());
        }
        let collisions: Vec<Element> = s.intersection(&x).cloned().collect();
        let Some(first) = collisions.first() else {
            return Ok((s, x));
        };
        // flip the second path's node at the colliding level; levels carry
        // distinct indices, so each level is flipped at most once
        let level = path2
            .nodes
            .iter()
            .position(|n| n.antecedent == *first || n.consequent == *first)
            .ok_or(AdversaryError::SweepDiverged)?;
        if flip2[level] {
            return Err(AdversaryError::SweepDiverged);
        }
        flip2[level] = true;
    }
    Err(AdversaryError::SweepDiverged)
}

fn find_path_ending(
    scheme: &Scheme,
    e: &Element,
    table: Table,
    j: u32,
    last: &Node,
) -> Result<Path, AdversaryError> {
    let paths = enumerate_paths_from_element(scheme, e, table, j, CapMode::Enforce)?;
    paths
        .into_iter()
        .find(|p| p.last() == last)
        .ok_or_else(|| AdversaryError::MissingWitnessPath {
            j,
            u: last.antecedent.clone(),
            v: last.consequent.clone(),
        })
}

/// Builds the certificate for a bad element: two witness paths with
/// cross-linked final nodes, merged forcing sets, collisions repaired by
/// flipping second-path nodes. `|S| <= 2i` always; `|X|` may reach `2i + 1`
/// because the first node of each path contributes its own excluded
/// consequent.
pub fn adversarial_pair(
    scheme: &Scheme,
    e: &Element,
    table: Table,
    i: u32,
    cap: CapMode,
) -> Result<AdversaryPair, AdversaryError> {
    let Badness::Bad { certificate } = badness(scheme, e, table, i, cap)? else {
        return Err(AdversaryError::NotBad(e.clone(), i, table));
    };
    let j = certificate.j;
    let end_table = path_end_table(table, j);
    let last1 = Node {
        antecedent: certificate.u.clone(),
        consequent: certificate.v.clone(),
        table: end_table,
    };
    let last2 = Node {
        antecedent: certificate.v.clone(),
        consequent: certificate.u.clone(),
        table: end_table,
    };
    let path1 = find_path_ending(scheme, e, table, j, &last1)?;
    let path2 = find_path_ending(scheme, e, table, j, &last2)?;
    let (s, x) = merged_forcing_sets(&path1, &path2)?;
    debug_assert!(s.intersection(&x).next().is_none());
    debug_assert!(s.len() as u32 <= 2 * i);
    debug_assert!(x.len() as u32 <= 2 * i + 1);
    Ok(AdversaryPair {
        s,
        x,
        target_block: e.block.clone(),
        forbidden_table: Forbidden::Table(table),
        support_paths: vec![path1, path2],
    })
}

/// Looks for the two-sided contradiction on `blk`: its index-1 element bad
/// w.r.t. B and its index-`i+2` element bad w.r.t. C. The two certificates
/// live on disjoint index ranges (`1..=i+1` and `i+2..=2i+2`), so their
/// union forbids both tables. On a scheme that stores every small subset the
/// result is always `None`.
pub fn two_table_contradiction(
    scheme: &Scheme,
    blk: &BlockId,
    i: u32,
) -> Result<Option<AdversaryPair>, AdversaryError> {
    if scheme.b < 2 * i + 3 {
        return Err(AdversaryError::BlockTooSmall { b: scheme.b, needed: 2 * i + 3 });
    }
    if !scheme.has_block(blk) {
        return Err(AdversaryError::UnknownBlock(blk.clone()));
    }
    let e1 = Element::new(blk.clone(), 1);
    let e2 = Element::new(blk.clone(), i + 2);
    if !badness(scheme, &e1, Table::B, i, CapMode::Enforce)?.is_bad() {
        return Ok(None);
    }
    if !badness(scheme, &e2, Table::C, i, CapMode::Enforce)?.is_bad() {
        return Ok(None);
    }
    let pair1 = adversarial_pair(scheme, &e1, Table::B, i, CapMode::Enforce)?;
    let pair2 = adversarial_pair(scheme, &e2, Table::C, i, CapMode::Enforce)?;
    let s: BTreeSet<Element> = pair1.s.union(&pair2.s).cloned().collect();
    let x: BTreeSet<Element> = pair1.x.union(&pair2.x).cloned().collect();
    let overlap: Vec<Element> = s.intersection(&x).cloned().collect();
    if !overlap.is_empty() {
        return Err(AdversaryError::Overlap(overlap));
    }
    debug_assert!(s.len() as u32 <= 4 * i);
    let mut support_paths = pair1.support_paths;
    support_paths.extend(pair2.support_paths);
    Ok(Some(AdversaryPair {
        s,
        x,
        target_block: blk.clone(),
        forbidden_table: Forbidden::Both,
        support_paths,
    }))
}

/// Oracle verdict on a certificate's claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateResult {
    pub pass: bool,
    /// Set for single-table claims.
    pub forced: Option<ForcedTable>,
    /// Set for two-table claims that refute the subset outright.
    pub trace: Option<ConflictTrace>,
}

/// Replays the pair through the storability oracle: a single-table claim
/// passes when the target block cannot go to the forbidden table under S; a
/// two-table claim passes when S itself is unstorable.
pub fn certify(scheme: &Scheme, pair: &AdversaryPair) -> Result<CertificateResult, AdversaryError> {
    let overlap: Vec<Element> = pair.s.intersection(&pair.x).cloned().collect();
    if !overlap.is_empty() {
        return Err(AdversaryError::Overlap(overlap));
    }
    match pair.forbidden_table {
        Forbidden::Table(table) => {
            let forced = forced_table(scheme, &pair.s, &pair.target_block)?;
            let pass = match table {
                Table::B => matches!(forced, ForcedTable::ForcedC | ForcedTable::Unstorable),
                Table::C => matches!(forced, ForcedTable::ForcedB | ForcedTable::Unstorable),
            };
            Ok(CertificateResult { pass, forced: Some(forced), trace: None })
        }
        Forbidden::Both => match can_store(scheme, &pair.s) {
            StorabilityResult::Unstorable { trace } => {
                Ok(CertificateResult { pass: true, forced: None, trace: Some(trace) })
            }
            StorabilityResult::Storable { .. } => {
                Ok(CertificateResult { pass: false, forced: None, trace: None })
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::universe::validate_path;

    fn e(block: &str, index: u32) -> Element {
        Element::new(block, index)
    }

    #[test]
    fn single_node_forcing_sets() {
        let fig = fixtures::fig1c();
        let node = Node::new(&fig, e("a", 1), e("b", 1), Table::B).unwrap();
        let path = Path { nodes: vec![node] };
        let (s, x) = path_forcing_sets(&path, SeedChoice::AntecedentInS);
        assert_eq!(s, BTreeSet::from([e("a", 1)]));
        assert_eq!(x, BTreeSet::from([e("b", 1)]));
        let (s, x) = path_forcing_sets(&path, SeedChoice::AntecedentInX);
        assert_eq!(s, BTreeSet::from([e("b", 1)]));
        assert_eq!(x, BTreeSet::from([e("a", 1)]));
    }

    #[test]
    fn three_node_path_splits_into_disjoint_triples() {
        let fig = fixtures::fig1c();
        let path = Path {
            nodes: vec![
                Node::new(&fig, e("a", 1), e("b", 1), Table::B).unwrap(),
                Node::new(&fig, e("b", 2), e("d", 2), Table::C).unwrap(),
                Node::new(&fig, e("d", 3), e("e", 3), Table::B).unwrap(),
            ],
        };
        validate_path(&fig, &path, CapMode::Enforce).unwrap();
        let (s, x) = path_forcing_sets(&path, SeedChoice::AntecedentInS);
        assert_eq!(s.len(), 3);
        assert_eq!(x.len(), 3);
        assert!(s.intersection(&x).next().is_none());
    }

    #[test]
    fn toy3_pair_forbids_table_b_for_block_a() {
        let toy = fixtures::toy3();
        let pair = adversarial_pair(&toy, &e("a", 1), Table::B, 1, CapMode::Enforce).unwrap();
        assert_eq!(pair.target_block, "a");
        assert_eq!(pair.forbidden_table, Forbidden::Table(Table::B));
        assert!(pair.s.len() <= 2);
        assert!(pair.x.len() <= 3);
        assert!(pair.s.intersection(&pair.x).next().is_none());
        let forced = forced_table(&toy, &pair.s, &pair.target_block).unwrap();
        assert!(matches!(forced, ForcedTable::ForcedC | ForcedTable::Unstorable));
        assert!(certify(&toy, &pair).unwrap().pass);
    }

    #[test]
    fn figure_pair_at_depth_two() {
        let fig = fixtures::fig1c();
        let pair = adversarial_pair(&fig, &e("a", 1), Table::B, 2, CapMode::Enforce).unwrap();
        assert!(pair.s.len() <= 4);
        assert!(pair.x.len() <= 4);
        // built from the two paths ending at d3 and e3
        let enders: BTreeSet<&Element> =
            pair.support_paths.iter().map(|p| &p.last().antecedent).collect();
        assert_eq!(enders, BTreeSet::from([&e("d", 3), &e("e", 3)]));
        assert!(certify(&fig, &pair).unwrap().pass);
    }

    #[test]
    fn good_elements_yield_no_pair() {
        let fig = fixtures::fig1c();
        assert!(matches!(
            adversarial_pair(&fig, &e("a", 1), Table::B, 1, CapMode::Enforce),
            Err(AdversaryError::NotBad(..))
        ));
    }

    #[test]
    fn dbl_has_a_two_table_contradiction() {
        let dbl = fixtures::dbl();
        let pair = two_table_contradiction(&dbl, &"a".to_string(), 1).unwrap().unwrap();
        assert_eq!(pair.forbidden_table, Forbidden::Both);
        assert!(pair.s.len() <= 4);
        let result = certify(&dbl, &pair).unwrap();
        assert!(result.pass);
        assert!(result.trace.is_some());
        assert!(!can_store(&dbl, &pair.s).is_storable());
    }

    #[test]
    fn good_first_conjunct_yields_none() {
        // block d of the broken fixture is 1-good at index 1
        let dbl = fixtures::dbl();
        assert!(two_table_contradiction(&dbl, &"d".to_string(), 1).unwrap().is_none());
    }

    #[test]
    fn contradiction_needs_enough_indices() {
        let toy = fixtures::toy3();
        assert!(matches!(
            two_table_contradiction(&toy, &"a".to_string(), 1),
            Err(AdversaryError::BlockTooSmall { .. })
        ));
    }

    #[test]
    fn empty_pair_fails_certification() {
        let toy = fixtures::toy3();
        let pair = AdversaryPair {
            s: BTreeSet::new(),
            x: BTreeSet::new(),
            target_block: "a".to_string(),
            forbidden_table: Forbidden::Table(Table::B),
            support_paths: vec![],
        };
        assert!(!certify(&toy, &pair).unwrap().pass);
    }

    #[test]
    fn overlapping_pair_is_rejected() {
        let toy = fixtures::toy3();
        let pair = AdversaryPair {
            s: BTreeSet::from([e("a", 1)]),
            x: BTreeSet::from([e("a", 1)]),
            target_block: "a".to_string(),
            forbidden_table: Forbidden::Table(Table::B),
            support_paths: vec![],
        };
        assert!(matches!(certify(&toy, &pair), Err(AdversaryError::Overlap(_))));
    }
}
