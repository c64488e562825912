//! Hand-built schemes used across the test suites and handy for CLI demos.

use crate::scheme::{BlockId, Scheme, SetRecord};

fn record(bit: u32, index: u32, members: &[&str]) -> SetRecord {
    SetRecord {
        bit,
        index,
        members: members.iter().map(|m| m.to_string()).collect(),
    }
}

/// Pairs the given blocks in consecutive order; an odd leftover folds into
/// the final set, making it a triple.
fn pair_up(blocks: &[&str]) -> Vec<Vec<BlockId>> {
    let mut sets: Vec<Vec<BlockId>> = Vec::new();
    let mut iter = blocks.chunks_exact(2);
    for pair in iter.by_ref() {
        sets.push(pair.iter().map(|m| m.to_string()).collect());
    }
    if let [odd] = iter.remainder() {
        match sets.last_mut() {
            Some(last) => last.push(odd.to_string()),
            None => sets.push(vec![odd.to_string()]),
        }
    }
    sets
}

/// Completes one table: `placed` holds the pre-assigned sets per index; all
/// remaining blocks of each index are paired in lexicographic order.
fn complete_table(blocks: &[&str], b: u32, placed: &[(u32, Vec<&str>)]) -> Vec<SetRecord> {
    let mut records = Vec::new();
    let mut bit = 0;
    for index in 1..=b {
        let mut covered: Vec<&str> = Vec::new();
        for (i, members) in placed {
            if *i == index {
                records.push(record(bit, index, members));
                bit += 1;
                covered.extend(members.iter());
            }
        }
        let rest: Vec<&str> = blocks.iter().copied().filter(|x| !covered.contains(x)).collect();
        for members in pair_up(&rest) {
            records.push(SetRecord { bit, index, members });
            bit += 1;
        }
    }
    records
}

fn assemble(blocks: &[&str], b: u32, table_b: Vec<SetRecord>, table_c: Vec<SetRecord>) -> Scheme {
    let s = blocks.len() as u32;
    let mut scheme = Scheme {
        m: s * b,
        s,
        b,
        blocks: blocks.iter().map(|x| x.to_string()).collect(),
        table_b,
        table_c,
    };
    scheme.canonicalize();
    scheme
}

/// Three blocks, four indices; every index-i triple `{a_i, b_i, c_i}` is one
/// set in each table. The smallest scheme on which pair subsets collide.
pub fn toy3() -> Scheme {
    let blocks = ["a", "b", "c"];
    let table = |_: ()| {
        (1..=4)
            .map(|i| record(i - 1, i, &blocks))
            .collect::<Vec<_>>()
    };
    assemble(&blocks, 4, table(()), table(()))
}

/// Eight blocks `a..h` with the five engineered sets V, W, X, Y, Z:
/// `V = {a1, b1}`, `W = {c3, f3}`, `X = {d3, e3, g3}` in table B;
/// `Y = {b2, c2, d2, e2}`, `Z = {g4, h4}` in table C. Everything else is
/// paired in consecutive block order per index and table.
pub fn fig1c() -> Scheme {
    let blocks = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let table_b = complete_table(
        &blocks,
        8,
        &[
            (1, vec!["a", "b"]),
            (3, vec!["c", "f"]),
            (3, vec!["d", "e", "g"]),
        ],
    );
    let table_c = complete_table(
        &blocks,
        8,
        &[(2, vec!["b", "c", "d", "e"]), (4, vec!["g", "h"])],
    );
    assemble(&blocks, 8, table_b, table_c)
}

/// A variant on the same blocks keeping the large set `{b2, c2, d2, e2}` in
/// table C but arranged so every index-1 element is 3-good w.r.t. table B.
/// Used by the summation-identity and size-inequality checks, whose
/// precondition is exactly that goodness.
pub fn fig1c_good() -> Scheme {
    let blocks = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let pairs = |offset: u32, upto: u32| -> Vec<(u32, Vec<&'static str>)> {
        let mut placed = Vec::new();
        for i in offset..=upto {
            placed.push((i, vec!["a", "b"]));
            placed.push((i, vec!["c", "d"]));
            placed.push((i, vec!["e", "f"]));
            placed.push((i, vec!["g", "h"]));
        }
        placed
    };
    let mut placed_b = vec![
        (1, vec!["a", "b"]),
        (1, vec!["c", "d"]),
        (1, vec!["e", "f"]),
        (1, vec!["g", "h"]),
        (3, vec!["a", "b"]),
        (3, vec!["c", "g"]),
        (3, vec!["d", "h"]),
        (3, vec!["e", "f"]),
        (2, vec!["a", "b"]),
        (2, vec!["c", "d"]),
        (2, vec!["e", "f"]),
        (2, vec!["g", "h"]),
    ];
    placed_b.extend(pairs(4, 8));
    let mut placed_c = vec![
        (2, vec!["b", "c", "d", "e"]),
        (2, vec!["a", "f"]),
        (2, vec!["g", "h"]),
        (4, vec!["a", "b"]),
        (4, vec!["c", "f"]),
        (4, vec!["d", "g"]),
        (4, vec!["e", "h"]),
        (1, vec!["a", "b"]),
        (1, vec!["c", "d"]),
        (1, vec!["e", "f"]),
        (1, vec!["g", "h"]),
        (3, vec!["a", "b"]),
        (3, vec!["c", "d"]),
        (3, vec!["e", "f"]),
        (3, vec!["g", "h"]),
    ];
    placed_c.extend(pairs(5, 8));
    let table_b = complete_table(&blocks, 8, &placed_b);
    let table_c = complete_table(&blocks, 8, &placed_c);
    assemble(&blocks, 8, table_b, table_c)
}

/// Deliberately broken scheme: blocks `a, b, c` carry two stacked triple
/// patterns, one making `x_1` 1-bad w.r.t. B (triples at B index 1 and C
/// index 2) and one making `x_3` 1-bad w.r.t. C (triples at C index 3 and B
/// index 4). Blocks `d..g` are paired at the pattern indices; everything else
/// is completed by consecutive pairing. Subsets such as `{a1, b2, a3, b4}`
/// are unstorable.
pub fn dbl() -> Scheme {
    let blocks = ["a", "b", "c", "d", "e", "f", "g"];
    let table_b = complete_table(
        &blocks,
        8,
        &[
            (1, vec!["a", "b", "c"]),
            (1, vec!["d", "e"]),
            (1, vec!["f", "g"]),
            (4, vec!["a", "b", "c"]),
            (4, vec!["d", "e"]),
            (4, vec!["f", "g"]),
        ],
    );
    let table_c = complete_table(
        &blocks,
        8,
        &[
            (2, vec!["a", "b", "c"]),
            (2, vec!["d", "e"]),
            (2, vec!["f", "g"]),
            (3, vec!["a", "b", "c"]),
            (3, vec!["d", "e"]),
            (3, vec!["f", "g"]),
        ],
    );
    assemble(&blocks, 8, table_b, table_c)
}
