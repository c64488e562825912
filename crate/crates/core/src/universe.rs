//! Nodes, edges, bounded paths, and the recursive per-element universes.
//!
//! A node of table T is an ordered pair of distinct elements sharing a set in
//! T. An edge steps to the other table, advances the index by one, and keeps
//! the consequent's block as the next antecedent's block. Path lengths and
//! universe depths are capped at `floor(b/2) - 1`, which is what guarantees
//! that no element repeats along a path; the cap can be overridden for small
//! demonstrations, in which case repetition is prevented explicitly.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scheme::{index_add, Element, ModelError, ParseError, Scheme, Table};

/// Whether the `floor(b/2) - 1` depth cap is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapMode {
    #[default]
    Enforce,
    Override,
}

#[derive(Debug, Error)]
pub enum UniverseError {
    #[error("depth {i} exceeds cap {cap} (= floor(b/2) - 1)")]
    CapExceeded { i: u32, cap: u32 },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("nodes must pair distinct elements of one set: {0}, {1}")]
    BadNode(Element, Element),
}

fn check_cap(scheme: &Scheme, i: u32, cap: CapMode) -> Result<(), UniverseError> {
    if cap == CapMode::Enforce && i > scheme.path_cap() {
        return Err(UniverseError::CapExceeded { i, cap: scheme.path_cap() });
    }
    Ok(())
}

/// Table holding the last node of a length-`steps` path that starts in
/// `base`: tables alternate, so even lengths land back in `base`.
pub fn path_end_table(base: Table, steps: u32) -> Table {
    if steps % 2 == 0 {
        base
    } else {
        base.other()
    }
}

/// Table whose 1-universes feed level `level` of the recursion w.r.t.
/// `base`: `base` itself on odd levels, the other table on even ones.
pub fn level_table(base: Table, level: u32) -> Table {
    if level % 2 == 1 {
        base
    } else {
        base.other()
    }
}

/// Ordered pair of distinct elements sharing a set of `table`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub antecedent: Element,
    pub consequent: Element,
    pub table: Table,
}

impl Node {
    /// Builds the node, checking both terms share a set of `table`.
    pub fn new(
        scheme: &Scheme,
        antecedent: Element,
        consequent: Element,
        table: Table,
    ) -> Result<Node, UniverseError> {
        if antecedent == consequent {
            return Err(UniverseError::BadNode(antecedent, consequent));
        }
        let peers = scheme.peers(&antecedent, table)?;
        if !peers.contains(&consequent) {
            return Err(UniverseError::BadNode(antecedent, consequent));
        }
        Ok(Node { antecedent, consequent, table })
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.antecedent, self.consequent, self.table)
    }
}

impl FromStr for Node {
    type Err = ParseError;

    /// Parses `a:1,b:1,B`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ParseError::BadNode(s.to_string()));
        }
        Ok(Node {
            antecedent: parts[0].parse()?,
            consequent: parts[1].parse()?,
            table: parts[2].parse()?,
        })
    }
}

/// Non-empty node sequence with an edge between each adjacent pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<Node>,
}

impl Path {
    /// Number of edges.
    pub fn len(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }

    pub fn first(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn last(&self) -> &Node {
        self.nodes.last().unwrap()
    }

    /// Every element appearing in some node, antecedents and consequents.
    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.nodes
            .iter()
            .flat_map(|n| [&n.antecedent, &n.consequent])
    }
}

/// Checks the edge rule between adjacent nodes, the element-uniqueness
/// observation, and (under [`CapMode::Enforce`]) the length cap.
pub fn validate_path(scheme: &Scheme, path: &Path, cap: CapMode) -> Result<(), UniverseError> {
    check_cap(scheme, path.len(), cap)?;
    for node in &path.nodes {
        Node::new(scheme, node.antecedent.clone(), node.consequent.clone(), node.table)?;
    }
    for pair in path.nodes.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let ok = prev.table != next.table
            && next.antecedent.block == prev.consequent.block
            && next.antecedent.index == index_add(prev.consequent.index, 1, scheme.b);
        if !ok {
            return Err(UniverseError::BadNode(
                next.antecedent.clone(),
                next.consequent.clone(),
            ));
        }
    }
    let mut seen = BTreeSet::new();
    for e in path.elements() {
        if !seen.insert(e.clone()) {
            return Err(UniverseError::BadNode(e.clone(), e.clone()));
        }
    }
    Ok(())
}

/// Successor nodes of `node`: other table, index advanced by one, antecedent
/// in the consequent's block. Lexicographic by consequent.
pub fn edges_from(scheme: &Scheme, node: &Node) -> Vec<Node> {
    let table = node.table.other();
    let antecedent = Element::new(
        node.consequent.block.clone(),
        index_add(node.consequent.index, 1, scheme.b),
    );
    let Ok(peers) = scheme.peers(&antecedent, table) else {
        return Vec::new();
    };
    peers
        .into_iter()
        .map(|consequent| Node {
            antecedent: antecedent.clone(),
            consequent,
            table,
        })
        .collect()
}

fn extend_paths(scheme: &Scheme, start: Node, length: u32, out: &mut Vec<Path>) {
    let mut seen: BTreeSet<Element> =
        [start.antecedent.clone(), start.consequent.clone()].into();
    let mut current = vec![start];
    dfs(scheme, length, &mut current, &mut seen, out);

    fn dfs(
        scheme: &Scheme,
        remaining: u32,
        current: &mut Vec<Node>,
        seen: &mut BTreeSet<Element>,
        out: &mut Vec<Path>,
    ) {
        if remaining == 0 {
            out.push(Path { nodes: current.clone() });
            return;
        }
        for next in edges_from(scheme, current.last().unwrap()) {
            // uniqueness holds automatically within the cap; with an
            // override it is enforced here
            if seen.contains(&next.antecedent) || seen.contains(&next.consequent) {
                continue;
            }
            seen.insert(next.antecedent.clone());
            seen.insert(next.consequent.clone());
            current.push(next.clone());
            dfs(scheme, remaining - 1, current, seen, out);
            current.pop();
            seen.remove(&next.antecedent);
            seen.remove(&next.consequent);
        }
    }
}

/// All paths with `start` as first node and exactly `length` edges,
/// depth-first in lexicographic edge order.
pub fn enumerate_paths(
    scheme: &Scheme,
    start: &Node,
    length: u32,
    cap: CapMode,
) -> Result<Vec<Path>, UniverseError> {
    check_cap(scheme, length, cap)?;
    Node::new(scheme, start.antecedent.clone(), start.consequent.clone(), start.table)?;
    let mut out = Vec::new();
    extend_paths(scheme, start.clone(), length, &mut out);
    Ok(out)
}

/// All length-`length` paths whose first node has antecedent `e` in `table`,
/// over every admissible first consequent.
pub fn enumerate_paths_from_element(
    scheme: &Scheme,
    e: &Element,
    table: Table,
    length: u32,
    cap: CapMode,
) -> Result<Vec<Path>, UniverseError> {
    check_cap(scheme, length, cap)?;
    let mut out = Vec::new();
    for consequent in scheme.peers(e, table)? {
        let start = Node { antecedent: e.clone(), consequent, table };
        extend_paths(scheme, start, length, &mut out);
    }
    Ok(out)
}

/// `{ u_{k+1} | u_k in S_T(e_k) \ {e_k} }`: peers with the index advanced.
pub fn one_universe(
    scheme: &Scheme,
    e: &Element,
    table: Table,
) -> Result<BTreeSet<Element>, ModelError> {
    Ok(scheme
        .peers(e, table)?
        .into_iter()
        .map(|u| Element::new(u.block, index_add(u.index, 1, scheme.b)))
        .collect())
}

/// Levels `1..=i` of the recursive universe of `e` w.r.t. `table`.
pub fn universe_levels(
    scheme: &Scheme,
    e: &Element,
    table: Table,
    i: u32,
    cap: CapMode,
) -> Result<Vec<BTreeSet<Element>>, UniverseError> {
    if i == 0 {
        return Err(UniverseError::ZeroDepth);
    }
    check_cap(scheme, i, cap)?;
    let mut levels: Vec<BTreeSet<Element>> = vec![one_universe(scheme, e, table)?];
    for level in 2..=i {
        let feed = level_table(table, level);
        let mut next = BTreeSet::new();
        for u in levels.last().unwrap() {
            next.extend(one_universe(scheme, u, feed)?);
        }
        levels.push(next);
    }
    Ok(levels)
}

/// The i-universe of `e` w.r.t. `table`: union of the 1-universes of the
/// previous level, alternating tables by level parity.
pub fn i_universe(
    scheme: &Scheme,
    e: &Element,
    table: Table,
    i: u32,
    cap: CapMode,
) -> Result<BTreeSet<Element>, UniverseError> {
    Ok(universe_levels(scheme, e, table, i, cap)?.pop().unwrap())
}

/// The same set computed independently: antecedents of the last nodes over
/// all length-`i` paths starting at `e` in `table`. Length 0 degenerates to
/// `{e}`.
pub fn universe_via_paths(
    scheme: &Scheme,
    e: &Element,
    table: Table,
    i: u32,
    cap: CapMode,
) -> Result<BTreeSet<Element>, UniverseError> {
    if i == 0 {
        if !scheme.has_element(e) {
            return Err(ModelError::UnknownElement(e.clone()).into());
        }
        return Ok(BTreeSet::from([e.clone()]));
    }
    let end_table = path_end_table(table, i);
    let mut out = BTreeSet::new();
    for path in enumerate_paths_from_element(scheme, e, table, i, cap)? {
        debug_assert_eq!(path.last().table, end_table);
        out.insert(path.last().antecedent.clone());
    }
    Ok(out)
}

/// The set reference backing a badness witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadnessCertificate {
    pub j: u32,
    pub u: Element,
    pub v: Element,
    pub witness_table: Table,
    pub witness_index: u32,
    pub witness_bit: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum Badness {
    Good,
    Bad { certificate: BadnessCertificate },
}

impl Badness {
    pub fn is_bad(&self) -> bool {
        matches!(self, Badness::Bad { .. })
    }
}

/// Scans `j = 1..=i` for two distinct level-`j` universe members sharing a
/// set in the parity-determined table (`table` itself iff `j` is even).
/// Returns the first witness: smallest `j`, then lexicographic `(u, v)`.
pub fn badness(
    scheme: &Scheme,
    e: &Element,
    table: Table,
    i: u32,
    cap: CapMode,
) -> Result<Badness, UniverseError> {
    let levels = universe_levels(scheme, e, table, i, cap)?;
    for (level, members) in levels.iter().enumerate() {
        let j = level as u32 + 1;
        let shared = path_end_table(table, j);
        for u in members {
            for v in members.iter().filter(|v| *v != u) {
                let Some(rec) = scheme.set_of(shared, u) else { continue };
                if rec.contains_block(&v.block) {
                    return Ok(Badness::Bad {
                        certificate: BadnessCertificate {
                            j,
                            u: u.clone(),
                            v: v.clone(),
                            witness_table: shared,
                            witness_index: rec.index,
                            witness_bit: rec.bit,
                        },
                    });
                }
            }
        }
    }
    Ok(Badness::Good)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn e(block: &str, index: u32) -> Element {
        Element::new(block, index)
    }

    fn set(items: &[(&str, u32)]) -> BTreeSet<Element> {
        items.iter().map(|(b, i)| e(b, *i)).collect()
    }

    #[test]
    fn edges_out_of_the_first_figure_node() {
        let fig = fixtures::fig1c();
        let start = Node::new(&fig, e("a", 1), e("b", 1), Table::B).unwrap();
        let succ = edges_from(&fig, &start);
        let expected: Vec<Node> = [("c", 2), ("d", 2), ("e", 2)]
            .iter()
            .map(|(blk, i)| Node {
                antecedent: e("b", 2),
                consequent: e(blk, *i),
                table: Table::C,
            })
            .collect();
        assert_eq!(succ, expected);
    }

    #[test]
    fn edges_wrap_tables_and_skip_nothing_on_toy3() {
        let toy = fixtures::toy3();
        let start = Node::new(&toy, e("a", 1), e("b", 1), Table::B).unwrap();
        let succ = edges_from(&toy, &start);
        assert_eq!(
            succ,
            vec![
                Node { antecedent: e("b", 2), consequent: e("a", 2), table: Table::C },
                Node { antecedent: e("b", 2), consequent: e("c", 2), table: Table::C },
            ]
        );
    }

    #[test]
    fn fig1c_edge_from_index_four_node() {
        let fig = fixtures::fig1c();
        let start = Node::new(&fig, e("g", 4), e("h", 4), Table::C).unwrap();
        let succ = edges_from(&fig, &start);
        assert!(!succ.is_empty());
        for node in &succ {
            assert_eq!(node.table, Table::B);
            assert_eq!(node.antecedent, e("h", 5));
        }
    }

    #[test]
    fn length_zero_enumeration_is_the_start_alone() {
        let fig = fixtures::fig1c();
        let start = Node::new(&fig, e("a", 1), e("b", 1), Table::B).unwrap();
        let paths = enumerate_paths(&fig, &start, 0, CapMode::Enforce).unwrap();
        assert_eq!(paths, vec![Path { nodes: vec![start] }]);
    }

    #[test]
    fn two_length_three_paths_reach_the_target_node() {
        let fig = fixtures::fig1c();
        let start = Node::new(&fig, e("a", 1), e("b", 1), Table::B).unwrap();
        let target = Node::new(&fig, e("g", 4), e("h", 4), Table::C).unwrap();
        let paths = enumerate_paths(&fig, &start, 3, CapMode::Enforce).unwrap();
        let hits: Vec<&Path> = paths.iter().filter(|p| p.last() == &target).collect();
        assert_eq!(hits.len(), 2);

        let middle: Vec<Vec<Element>> = hits
            .iter()
            .map(|p| p.nodes[1..3].iter().map(|n| n.antecedent.clone()).collect())
            .collect();
        assert!(middle.contains(&vec![e("b", 2), e("d", 3)]));
        assert!(middle.contains(&vec![e("b", 2), e("e", 3)]));
        for p in &paths {
            validate_path(&fig, p, CapMode::Enforce).unwrap();
        }
    }

    #[test]
    fn path_length_above_cap_errors() {
        let fig = fixtures::fig1c();
        let start = Node::new(&fig, e("a", 1), e("b", 1), Table::B).unwrap();
        assert!(matches!(
            enumerate_paths(&fig, &start, 4, CapMode::Enforce),
            Err(UniverseError::CapExceeded { .. })
        ));
        assert!(enumerate_paths(&fig, &start, 4, CapMode::Override).is_ok());
    }

    #[test]
    fn one_universe_examples() {
        let fig = fixtures::fig1c();
        assert_eq!(one_universe(&fig, &e("a", 1), Table::B).unwrap(), set(&[("b", 2)]));
        assert_eq!(
            one_universe(&fig, &e("b", 2), Table::C).unwrap(),
            set(&[("c", 3), ("d", 3), ("e", 3)])
        );
        let toy = fixtures::toy3();
        assert_eq!(
            one_universe(&toy, &e("a", 1), Table::B).unwrap(),
            set(&[("b", 2), ("c", 2)])
        );
    }

    #[test]
    fn deep_universes_on_the_figure() {
        let fig = fixtures::fig1c();
        assert_eq!(
            i_universe(&fig, &e("a", 1), Table::B, 2, CapMode::Enforce).unwrap(),
            set(&[("c", 3), ("d", 3), ("e", 3)])
        );
        assert_eq!(
            i_universe(&fig, &e("a", 1), Table::B, 3, CapMode::Enforce).unwrap(),
            set(&[("d", 4), ("e", 4), ("f", 4), ("g", 4)])
        );
        assert_eq!(
            i_universe(&fig, &e("a", 1), Table::B, 1, CapMode::Enforce).unwrap(),
            one_universe(&fig, &e("a", 1), Table::B).unwrap()
        );
    }

    #[test]
    fn paths_and_recursion_agree_on_fixtures() {
        let fig = fixtures::fig1c();
        for i in 1..=3 {
            let direct = i_universe(&fig, &e("a", 1), Table::B, i, CapMode::Enforce).unwrap();
            let via = universe_via_paths(&fig, &e("a", 1), Table::B, i, CapMode::Enforce).unwrap();
            assert_eq!(direct, via, "depth {i}");
        }
        let toy = fixtures::toy3();
        assert_eq!(
            universe_via_paths(&toy, &e("a", 1), Table::B, 1, CapMode::Enforce).unwrap(),
            set(&[("b", 2), ("c", 2)])
        );
        assert_eq!(
            universe_via_paths(&toy, &e("a", 1), Table::B, 0, CapMode::Enforce).unwrap(),
            set(&[("a", 1)])
        );
    }

    #[test]
    fn badness_witnesses() {
        let fig = fixtures::fig1c();
        match badness(&fig, &e("a", 1), Table::B, 2, CapMode::Enforce).unwrap() {
            Badness::Bad { certificate } => {
                assert_eq!(certificate.j, 2);
                assert_eq!(certificate.u, e("d", 3));
                assert_eq!(certificate.v, e("e", 3));
                assert_eq!(certificate.witness_table, Table::B);
            }
            Badness::Good => panic!("a1 is 2-bad"),
        }
        assert_eq!(
            badness(&fig, &e("a", 1), Table::B, 1, CapMode::Enforce).unwrap(),
            Badness::Good
        );

        let toy = fixtures::toy3();
        match badness(&toy, &e("a", 1), Table::B, 1, CapMode::Enforce).unwrap() {
            Badness::Bad { certificate } => {
                assert_eq!(certificate.j, 1);
                assert_eq!(certificate.u, e("b", 2));
                assert_eq!(certificate.v, e("c", 2));
                assert_eq!(certificate.witness_table, Table::C);
            }
            Badness::Good => panic!("a1 is 1-bad on the triple fixture"),
        }
    }

    #[test]
    fn monotone_badness_in_depth() {
        // a 2-bad element stays bad at depth 3
        let fig = fixtures::fig1c();
        assert!(badness(&fig, &e("a", 1), Table::B, 3, CapMode::Enforce).unwrap().is_bad());
    }

    mod props {
        use super::*;
        use crate::analysis::{random_scheme, GeneratorConfig};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]
            #[test]
            fn universes_match_paths_on_random_schemes(seed in 0u64..200) {
                let cfg = GeneratorConfig { s: 6, b: 8, triple_bias: 0.4 };
                let scheme = random_scheme(&cfg, seed);
                let cap = scheme.path_cap();
                for e in scheme.universe() {
                    for table in [Table::B, Table::C] {
                        for i in 1..=cap {
                            let direct =
                                i_universe(&scheme, &e, table, i, CapMode::Enforce).unwrap();
                            let via = universe_via_paths(&scheme, &e, table, i, CapMode::Enforce)
                                .unwrap();
                            prop_assert_eq!(&direct, &via);
                            prop_assert!(!direct.is_empty());
                            for u in &direct {
                                prop_assert_eq!(u.index, index_add(e.index, i, scheme.b));
                            }
                        }
                    }
                }
            }

            #[test]
            fn paths_never_repeat_elements(seed in 0u64..100) {
                let cfg = GeneratorConfig { s: 5, b: 6, triple_bias: 0.5 };
                let scheme = random_scheme(&cfg, seed);
                let start_elem = Element::new(scheme.blocks[0].clone(), 1);
                for length in 0..=scheme.path_cap() {
                    for path in enumerate_paths_from_element(
                        &scheme, &start_elem, Table::B, length, CapMode::Enforce,
                    ).unwrap() {
                        let all: Vec<&Element> = path.elements().collect();
                        let dedup: BTreeSet<&Element> = all.iter().copied().collect();
                        prop_assert_eq!(all.len(), dedup.len());
                        // tables strictly alternate
                        for w in path.nodes.windows(2) {
                            prop_assert_ne!(w[0].table, w[1].table);
                        }
                    }
                }
            }
        }
    }
}
