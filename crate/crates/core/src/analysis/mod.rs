//! Numeric and combinatorial verification: bound formulas, the nested-sum
//! identity over element universes, the table-size inequality, reproducible
//! random schemes for property sweeps, and brute-force minimal-scheme
//! synthesis.

mod synth;

pub use synth::{synth_csv, synth_min_space, SynthError, SynthOutcome, SynthResult};

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::scheme::{validate, BlockId, Element, Scheme, SetRecord, Table};
use crate::universe::{badness, i_universe, level_table, CapMode, UniverseError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("element {0} is not {1}-good w.r.t. table B")]
    PreconditionBad(Element, u32),
    #[error("weight missing for element {0}")]
    MissingWeight(Element),
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

/// `(m/n)^(1 - 1/(floor(n/4) + 2))`: the restricted-scheme space bound with
/// its constant set to 1.
pub fn theorem_bound(m: u64, n: u32) -> f64 {
    let exponent = 1.0 - 1.0 / (f64::from(n / 4) + 2.0);
    (m as f64 / f64::from(n)).powf(exponent)
}

/// `m^(1 - 1/floor(n/4))`: the unrestricted-scheme bound, undefined below
/// n = 4.
pub fn general_bound(m: u64, n: u32) -> Option<f64> {
    let quarter = n / 4;
    (quarter >= 1).then(|| (m as f64).powf(1.0 - 1.0 / f64::from(quarter)))
}

/// One grid point of the bound comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub m: u64,
    pub n: u32,
    pub restricted_bound: f64,
    pub general_bound: Option<f64>,
    /// Restricted bound at least the general one (true by convention when
    /// the general bound is undefined).
    pub crossover_flag: bool,
    /// `n <= sqrt(log m / log n)` with the constant set to 1.
    pub small_n_region: bool,
}

/// Evaluates both bounds over the grid, row-major in `m` then `n`.
pub fn compare_bounds(m_values: &[u64], n_values: &[u32]) -> Vec<BoundsRow> {
    let mut rows = Vec::new();
    for &m in m_values {
        for &n in n_values {
            let restricted = theorem_bound(m, n);
            let general = general_bound(m, n);
            let small_n_region = if n <= 1 {
                true
            } else {
                f64::from(n) <= ((m as f64).ln() / f64::from(n).ln()).sqrt()
            };
            rows.push(BoundsRow {
                m,
                n,
                restricted_bound: restricted,
                general_bound: general,
                crossover_flag: general.map_or(true, |g| restricted >= g),
                small_n_region,
            });
        }
    }
    rows
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("m,n,restricted_bound,general_bound,crossover,small_n_region\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.m,
            r.n,
            r.restricted_bound,
            r.general_bound.map_or_else(|| "undefined".to_string(), |g| g.to_string()),
            r.crossover_flag,
            r.small_n_region
        ));
    }
    out
}

/// Errors unless every index-1 element is t-good w.r.t. table B.
pub fn require_index1_good(scheme: &Scheme, t: u32) -> Result<(), AnalysisError> {
    for blk in &scheme.blocks {
        let e1 = Element::new(blk.clone(), 1);
        if badness(scheme, &e1, Table::B, t, CapMode::Enforce)?.is_bad() {
            return Err(AnalysisError::PreconditionBad(e1, t));
        }
    }
    Ok(())
}

pub fn all_index1_good(scheme: &Scheme, t: u32) -> bool {
    require_index1_good(scheme, t).is_ok()
}

fn weight_of(
    weights: &BTreeMap<Element, i64>,
    e: &Element,
) -> Result<i64, AnalysisError> {
    weights
        .get(e)
        .copied()
        .ok_or_else(|| AnalysisError::MissingWeight(e.clone()))
}

/// Direct side of the identity: the weight sum over the t-universe of `e1`.
fn identity_lhs(
    scheme: &Scheme,
    e1: &Element,
    t: u32,
    weights: &BTreeMap<Element, i64>,
) -> Result<i64, AnalysisError> {
    let mut total = 0i64;
    for u in i_universe(scheme, e1, Table::B, t, CapMode::Enforce)? {
        total += weight_of(weights, &u)?;
    }
    Ok(total)
}

/// Nested side: peer sums alternating tables by level, multiplicities kept.
fn identity_rhs(
    scheme: &Scheme,
    e1: &Element,
    t: u32,
    weights: &BTreeMap<Element, i64>,
) -> Result<i64, AnalysisError> {
    fn rec(
        scheme: &Scheme,
        prev_block: &BlockId,
        level: u32,
        t: u32,
        weights: &BTreeMap<Element, i64>,
    ) -> Result<i64, AnalysisError> {
        if level > t {
            return weight_of(weights, &Element::new(prev_block.clone(), t + 1));
        }
        let at = Element::new(prev_block.clone(), level);
        let table = level_table(Table::B, level);
        let mut total = 0i64;
        for peer in scheme.peers(&at, table).map_err(UniverseError::from)? {
            total += rec(scheme, &peer.block, level + 1, t, weights)?;
        }
        Ok(total)
    }
    rec(scheme, &e1.block, 1, t, weights)
}

/// Exact equality of the direct and nested sums, for every index-1 element.
/// Precondition: all of them are t-good w.r.t. B.
pub fn universe_sum_identity_check(
    scheme: &Scheme,
    t: u32,
    weights: &BTreeMap<Element, i64>,
) -> Result<bool, AnalysisError> {
    require_index1_good(scheme, t)?;
    for blk in &scheme.blocks {
        let e1 = Element::new(blk.clone(), 1);
        if identity_lhs(scheme, &e1, t, weights)? != identity_rhs(scheme, &e1, t, weights)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both identity sides for one element, for diagnostics and tests.
pub fn identity_sides(
    scheme: &Scheme,
    e1: &Element,
    t: u32,
    weights: &BTreeMap<Element, i64>,
) -> Result<(i64, i64), AnalysisError> {
    Ok((
        identity_lhs(scheme, e1, t, weights)?,
        identity_rhs(scheme, e1, t, weights)?,
    ))
}

/// Observed total universe size against the bound's scaling term:
/// `sum |U^t(e1)| / (s^(t+1) / (sum of set counts up to t)^t)`.
pub fn universe_sum_ratio(scheme: &Scheme, t: u32) -> Result<f64, AnalysisError> {
    require_index1_good(scheme, t)?;
    let mut total = 0usize;
    for blk in &scheme.blocks {
        let e1 = Element::new(blk.clone(), 1);
        total += i_universe(scheme, &e1, Table::B, t, CapMode::Enforce)?.len();
    }
    let set_count: usize = (1..=t)
        .map(|idx| {
            scheme.table_b.iter().filter(|r| r.index == idx).count()
                + scheme.table_c.iter().filter(|r| r.index == idx).count()
        })
        .sum();
    let s = f64::from(scheme.s);
    let denominator = s.powi(t as i32 + 1) / (set_count as f64).powi(t as i32);
    Ok(total as f64 / denominator)
}

/// Outcome of the distinct-sets counting step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeCheckReport {
    pub t: u32,
    /// Table whose index-(t+1) sets the universes must hit distinctly.
    pub table: Table,
    /// Sum of t-universe sizes over all index-1 elements.
    pub universe_total: u32,
    /// `s * |sets of index t+1 in the table|`.
    pub capacity: u32,
    pub holds: bool,
    /// Every single universe used pairwise-distinct sets.
    pub distinct_sets_ok: bool,
    /// `(sum of set counts up to t+1)^(t+1) / s^t`.
    pub implied_ratio: f64,
}

/// Verifies `sum |U^t(e1)| <= s * |T_{t+1}|` where `T` is C for odd `t` and
/// B for even `t`, and that each universe occupies distinct sets.
pub fn goodness_size_check(scheme: &Scheme, t: u32) -> Result<SizeCheckReport, AnalysisError> {
    require_index1_good(scheme, t)?;
    let table = if t % 2 == 1 { Table::C } else { Table::B };
    let shared_index = t + 1;
    let set_count_at =
        scheme.table(table).iter().filter(|r| r.index == shared_index).count() as u32;
    let mut universe_total = 0u32;
    let mut distinct_sets_ok = true;
    for blk in &scheme.blocks {
        let e1 = Element::new(blk.clone(), 1);
        let universe = i_universe(scheme, &e1, Table::B, t, CapMode::Enforce)?;
        universe_total += universe.len() as u32;
        let bits: BTreeSet<u32> = universe
            .iter()
            .filter_map(|u| scheme.set_of(table, u).map(|r| r.bit))
            .collect();
        if bits.len() != universe.len() {
            distinct_sets_ok = false;
        }
    }
    let capacity = scheme.s * set_count_at;
    let total_sets: usize = (1..=t + 1)
        .map(|idx| {
            scheme.table_b.iter().filter(|r| r.index == idx).count()
                + scheme.table_c.iter().filter(|r| r.index == idx).count()
        })
        .sum();
    let implied_ratio =
        (total_sets as f64).powi(t as i32 + 1) / f64::from(scheme.s).powi(t as i32);
    Ok(SizeCheckReport {
        t,
        table,
        universe_total,
        capacity,
        holds: universe_total <= capacity,
        distinct_sets_ok,
        implied_ratio,
    })
}

/// Parameters for the reproducible scheme generator.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorConfig {
    pub s: u32,
    pub b: u32,
    /// Probability of carving a 3-set instead of a 2-set while partitioning.
    pub triple_bias: f64,
}

fn block_names(s: u32) -> Vec<BlockId> {
    (0..s)
        .map(|i| {
            if s <= 26 {
                char::from(b'a' + i as u8).to_string()
            } else {
                format!("b{i:02}")
            }
        })
        .collect()
}

fn random_partition(rng: &mut ChaCha8Rng, blocks: &[BlockId], triple_bias: f64) -> Vec<Vec<BlockId>> {
    let mut order: Vec<&BlockId> = blocks.iter().collect();
    order.shuffle(rng);
    let mut parts = Vec::new();
    let mut pos = 0;
    while pos < order.len() {
        let rem = order.len() - pos;
        let take = if rem <= 3 {
            rem
        } else if rem == 4 {
            2
        } else {
            let mut t = if rng.gen::<f64>() < triple_bias { 3 } else { 2 };
            if rem - t == 1 {
                t = 5 - t;
            }
            t
        };
        let mut members: Vec<BlockId> = order[pos..pos + take].iter().map(|b| (*b).clone()).collect();
        members.sort();
        parts.push(members);
        pos += take;
    }
    parts
}

/// Deterministic random restricted scheme: every (table, index) slot gets an
/// independent random partition into sets of size 2 or 3. Always valid.
pub fn random_scheme(cfg: &GeneratorConfig, seed: u64) -> Scheme {
    assert!(cfg.s >= 2, "need at least two blocks for singleton-free sets");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = block_names(cfg.s);
    let mut build_table = |_: Table| {
        let mut records = Vec::new();
        let mut bit = 0;
        for index in 1..=cfg.b {
            for members in random_partition(&mut rng, &blocks, cfg.triple_bias) {
                records.push(SetRecord { bit, index, members });
                bit += 1;
            }
        }
        records
    };
    let table_b = build_table(Table::B);
    let table_c = build_table(Table::C);
    let mut scheme = Scheme {
        m: cfg.s * cfg.b,
        s: cfg.s,
        b: cfg.b,
        blocks,
        table_b,
        table_c,
    };
    scheme.canonicalize();
    debug_assert!(validate(&scheme).is_valid());
    scheme
}

/// Rejection-samples until every index-1 element is t-good w.r.t. B,
/// advancing the seed; returns the accepted scheme and the seed that
/// produced it.
pub fn random_good_scheme(cfg: &GeneratorConfig, start_seed: u64, t: u32) -> (Scheme, u64) {
    let mut seed = start_seed;
    loop {
        let scheme = random_scheme(cfg, seed);
        if all_index1_good(&scheme, t) {
            return (scheme, seed);
        }
        seed = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    }
}

/// Deterministic random subset of at most `max_size` elements.
pub fn random_subset(scheme: &Scheme, seed: u64, max_size: usize) -> BTreeSet<Element> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universe: Vec<Element> = scheme.universe().collect();
    let size = rng.gen_range(0..=max_size.min(universe.len()));
    rand::seq::index::sample(&mut rng, universe.len(), size)
        .into_iter()
        .map(|i| universe[i].clone())
        .collect()
}

/// Deterministic integer weights over the whole universe.
pub fn random_weights(scheme: &Scheme, seed: u64) -> BTreeMap<Element, i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scheme
        .universe()
        .map(|e| (e, rng.gen_range(-100..=100)))
        .collect()
}

/// One row of the ratio-distribution report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub scheme_id: String,
    pub t: u32,
    pub ratio: f64,
}

pub fn ratios_csv(rows: &[RatioRow]) -> String {
    let mut out = String::from("scheme_id,t,ratio\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.scheme_id, r.t, r.ratio));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bound_at_equal_m_and_n_is_one() {
        assert_eq!(theorem_bound(8, 8), 1.0);
        assert_eq!(theorem_bound(100, 100), 1.0);
    }

    #[test]
    fn bound_exponent_examples() {
        // n = 8: exponent 1 - 1/4 = 3/4
        let expected = 125_000f64.powf(0.75);
        let got = theorem_bound(1_000_000, 8);
        assert!((got - expected).abs() / expected < 1e-3);
        assert!((got - 6646.0).abs() < 10.0);

        // n = 4: exponent 2/3 exactly; pick a perfect cube for m/n
        let got = theorem_bound(32, 4);
        assert!((got - 4.0).abs() < 1e-12);
    }

    #[test]
    fn general_bound_degenerates_below_four() {
        assert_eq!(general_bound(1 << 20, 3), None);
        assert_eq!(general_bound(1 << 20, 4), Some(1.0));
    }

    #[test]
    fn crossover_rows() {
        let rows = compare_bounds(&[1 << 26], &[2, 4, 40]);
        assert!(rows[0].general_bound.is_none() && rows[0].crossover_flag);
        assert!(rows[1].crossover_flag, "restricted (m/4)^(2/3) beats m^0 = 1");
        assert!(!rows[2].crossover_flag, "large n flips the comparison");
    }

    #[test]
    fn bound_is_monotone_in_m_and_exponent_in_n() {
        let ms: Vec<u64> = (1..=20).map(|k| 1u64 << (2 * k)).collect();
        for n in [1, 2, 4, 8, 16] {
            for w in ms.windows(2) {
                assert!(theorem_bound(w[1], n) >= theorem_bound(w[0], n));
            }
        }
        let exponent = |n: u32| 1.0 - 1.0 / (f64::from(n / 4) + 2.0);
        for n in 1..63 {
            assert!(exponent(n + 1) >= exponent(n));
        }
    }

    #[test]
    fn identity_at_depth_one_counts_peers() {
        let good = fixtures::fig1c_good();
        let weights: BTreeMap<Element, i64> = good.universe().map(|e| (e, 1)).collect();
        for blk in &good.blocks {
            let e1 = Element::new(blk.clone(), 1);
            let (lhs, rhs) = identity_sides(&good, &e1, 1, &weights).unwrap();
            let peer_count = good.peers(&e1, Table::B).unwrap().len() as i64;
            assert_eq!(lhs, peer_count);
            assert_eq!(rhs, peer_count);
        }
        assert!(universe_sum_identity_check(&good, 1, &weights).unwrap());
    }

    #[test]
    fn identity_with_random_weights_on_the_good_variant() {
        let good = fixtures::fig1c_good();
        for seed in 0..5 {
            let weights = random_weights(&good, seed);
            for t in [1, 2, 3] {
                assert!(universe_sum_identity_check(&good, t, &weights).unwrap(), "t={t}");
            }
        }
    }

    #[test]
    fn identity_precondition_is_enforced() {
        let fig = fixtures::fig1c();
        let weights = random_weights(&fig, 0);
        assert!(matches!(
            universe_sum_identity_check(&fig, 2, &weights),
            Err(AnalysisError::PreconditionBad(..))
        ));
    }

    #[test]
    fn size_check_on_the_good_variant() {
        let good = fixtures::fig1c_good();
        for t in [1, 3] {
            let report = goodness_size_check(&good, t).unwrap();
            assert!(report.holds, "t={t}: {report:?}");
            assert!(report.distinct_sets_ok);
            assert_eq!(report.table, Table::C);
            assert!(report.implied_ratio > 0.0);
        }
        let report = goodness_size_check(&good, 2).unwrap();
        assert!(report.holds);
        assert_eq!(report.table, Table::B);
    }

    #[test]
    fn size_check_rejects_bad_preconditions() {
        assert!(matches!(
            goodness_size_check(&fixtures::fig1c(), 2),
            Err(AnalysisError::PreconditionBad(..))
        ));
    }

    #[test]
    fn uniform_scheme_ratio_matches_closed_form() {
        // all-pairs scheme: every 1-universe has exactly one element, so the
        // universe total is s and the set counts are s/2 per slot
        let cfg = GeneratorConfig { s: 6, b: 8, triple_bias: 0.0 };
        let scheme = random_scheme(&cfg, 1);
        let ratio = universe_sum_ratio(&scheme, 1).unwrap();
        let s = f64::from(scheme.s);
        let sets_up_to_1 = s; // s/2 sets in each of B1 and C1
        let expected = s / (s.powi(2) / sets_up_to_1.powi(1));
        assert!((ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let cfg = GeneratorConfig { s: 6, b: 6, triple_bias: 0.4 };
        let a = random_scheme(&cfg, 7);
        let b = random_scheme(&cfg, 7);
        assert_eq!(a, b);
        assert!(validate(&a).is_valid());
        assert_ne!(a, random_scheme(&cfg, 8));
    }

    #[test]
    fn good_generator_returns_good_schemes() {
        let cfg = GeneratorConfig { s: 6, b: 8, triple_bias: 0.2 };
        let (scheme, _) = random_good_scheme(&cfg, 3, 3);
        assert!(all_index1_good(&scheme, 3));
    }

    #[test]
    fn random_subsets_respect_the_size_cap() {
        let toy = fixtures::toy3();
        for seed in 0..20 {
            let subset = random_subset(&toy, seed, 4);
            assert!(subset.len() <= 4);
            for e in &subset {
                assert!(toy.has_element(e));
            }
        }
        assert_eq!(random_subset(&toy, 5, 4), random_subset(&toy, 5, 4));
    }
}
