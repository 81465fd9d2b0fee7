//! Verification suites: matricization-rank bound checks with random and
//! explicit witness weights, hybrid-replication checks for the mixed
//! decomposition, genericity sampling, and the desk-scale separation report.

use num::BigUint;
use serde::Serialize;

use crate::decomp::{
    build_hybrid, lower_bound_weights, mixed_decompose, random_weights, tree_decompose,
    Discretizers, GridTensorBatch, HybridTree, MixSpec, SourceTree, WeightDistribution,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::modes::ModeSet;
use crate::rank::{matrix_rank, RankMode};
use crate::scalar::{BinaryOp, ScalarKind};
use crate::tree::{build_baseline_tree, build_k_group_swap_tree, rank_bounds, BoundsReport, ModeTree};

/// Weight bound for the random integer draws of [`verify_rank_bounds`].
/// Small bounds make lattice degeneracies (sub-maximal ranks) too frequent,
/// large ones blow up exact-elimination cost; 50 keeps degeneracies rare at
/// desk scale while ranks stay cheap to compute.
pub const VERIFY_WEIGHT_BOUND: i64 = 50;

/// Deterministic per-trial seed derived from a master seed (splitmix-style
/// mix), so parallel and serial runs see identical randomness.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rank of each tensor's matricization with respect to the index set.
pub fn measured_rank(
    batch: &GridTensorBatch,
    index_set: &ModeSet,
    mode: RankMode,
) -> Result<Vec<usize>> {
    exec::try_map_indexed(batch.count(), |y| {
        let m = batch.get(y).matricize(index_set)?;
        matrix_rank(&m, mode)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RankTrial {
    pub trial: usize,
    pub seed: u64,
    pub ranks: Vec<usize>,
    pub within_upper: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessOutcome {
    pub ranks: Vec<usize>,
    pub meets_lower: bool,
    pub degenerate: bool,
}

/// Outcome of a rank-bound verification run: random integer-weight trials
/// plus the explicit lower-bound witness, against the combinatorial bounds.
#[derive(Clone, Debug, Serialize)]
pub struct RankTrialReport {
    pub id: String,
    pub index_set: ModeSet,
    pub r: usize,
    pub seed: u64,
    pub bounds: BoundsReport,
    pub trials: Vec<RankTrial>,
    pub witness: WitnessOutcome,
}

impl RankTrialReport {
    /// Upper bound on every trial, lower bound on the witness; violations of
    /// either are hard failures. Generic trials missing the lower bound are
    /// reported, not failed.
    pub fn hard_pass(&self) -> bool {
        self.trials.iter().all(|t| t.within_upper) && self.witness.meets_lower
    }

    /// Fraction of trials whose ranks all equal `value`.
    pub fn fraction_at(&self, value: usize) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        let hits = self
            .trials
            .iter()
            .filter(|t| t.ranks.iter().all(|&rk| rk == value))
            .count();
        hits as f64 / self.trials.len() as f64
    }

    /// Largest rank observed over trials and witness.
    pub fn max_observed(&self) -> usize {
        self.trials
            .iter()
            .flat_map(|t| t.ranks.iter().copied())
            .chain(self.witness.ranks.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

/// Run `trials` random integer-weight decompositions plus the explicit
/// witness and measure exact matricization ranks against the bounds.
/// Identity discretizers (M = r); only the product operator is admissible.
pub fn verify_rank_bounds(
    tree: &ModeTree,
    id: &str,
    index_set: &ModeSet,
    r: usize,
    trials: usize,
    seed: u64,
    g: BinaryOp,
) -> Result<RankTrialReport> {
    if g != BinaryOp::Product {
        return Err(Error::Unsupported(
            "rank bounds hold for the product operator only".into(),
        ));
    }
    let bounds = rank_bounds(tree, index_set, r as u64)?;
    let disc = Discretizers::identity(r, ScalarKind::Rational);

    let trials_out = exec::try_map_indexed(trials, |i| {
        let trial_seed = derive_seed(seed, i as u64);
        let weights = random_weights(
            tree,
            r,
            trial_seed,
            WeightDistribution::IntegerUniform {
                bound: VERIFY_WEIGHT_BOUND,
            },
        )?;
        let batch = tree_decompose(tree, &weights, &disc, BinaryOp::Product)?;
        let ranks = measured_rank(&batch, index_set, RankMode::Exact)?;
        let within_upper = ranks.iter().all(|&rk| bounds.admits(rk));
        Ok(RankTrial {
            trial: i,
            seed: trial_seed,
            ranks,
            within_upper,
        })
    })?;

    let witness = lower_bound_weights(tree, index_set, r)?;
    let batch = tree_decompose(tree, &witness.weights, &disc, BinaryOp::Product)?;
    let ranks = measured_rank(&batch, index_set, RankMode::Exact)?;
    let meets_lower = ranks.iter().all(|&rk| bounds.meets_lower(rk));

    Ok(RankTrialReport {
        id: id.to_string(),
        index_set: index_set.clone(),
        r,
        seed,
        bounds,
        trials: trials_out,
        witness: WitnessOutcome {
            ranks,
            meets_lower,
            degenerate: witness.degenerate,
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub tensor_index: usize,
    /// 0-based multi-index of the first differing entry.
    pub multi_index: Vec<usize>,
    pub expected: String,
    pub actual: String,
}

/// Outcome of checking that the mixed decomposition replicates a hybrid
/// tree's decomposition exactly on the first `r_h` output tensors.
#[derive(Clone, Debug, Serialize)]
pub struct ReplicationReport {
    pub trials: usize,
    pub seed: u64,
    pub g: BinaryOp,
    pub pass: bool,
    pub first_counterexample: Option<Counterexample>,
}

/// For each trial: draw random hybrid weights and discretizers, build the
/// mixed weights, and compare the mixed decomposition (padded discretizers,
/// first `r_h` outputs) against the hybrid's tree decomposition exactly.
pub fn verify_hybrid_replication(
    spec: &MixSpec,
    hybrid: &HybridTree,
    r_h: usize,
    trials: usize,
    seed: u64,
    g: BinaryOp,
) -> Result<ReplicationReport> {
    let r_mix = 2 * r_h;
    let outcomes = exec::try_map_indexed(trials, |i| {
        let trial_seed = derive_seed(seed, i as u64);
        let hw = random_weights(
            hybrid.tree(),
            r_h,
            trial_seed,
            WeightDistribution::IntegerUniform { bound: 5 },
        )?;
        let disc = Discretizers::random_integer(2, r_h, 3, derive_seed(trial_seed, 1))?;
        let expected = tree_decompose(hybrid.tree(), &hw, &disc, g)?;
        let (wa, wb) = crate::decomp::hybrid_to_mixed_weights(spec, hybrid, &hw)?;
        let padded = disc.pad_to(r_mix)?;
        let got = mixed_decompose(spec, &wa, &wb, &padded, g)?;
        let diff = got.first_difference(&expected, r_h).map(|(y, idx)| {
            let flat = expected.get(y).flat_index(&idx);
            Counterexample {
                trial: i,
                tensor_index: y,
                multi_index: idx,
                expected: expected.get(y).get_flat(flat).to_string(),
                actual: got.get(y).get_flat(flat).to_string(),
            }
        });
        Ok(diff)
    })?;
    let first_counterexample = outcomes.into_iter().flatten().next();
    Ok(ReplicationReport {
        trials,
        seed,
        g,
        pass: first_counterexample.is_none(),
        first_counterexample,
    })
}

/// Rank statistics over random weight draws. The modal rank is the maximal
/// observed value; genericity evidence is the fraction of measurements at it.
#[derive(Clone, Debug, Serialize)]
pub struct GenericityReport {
    pub trials: usize,
    pub seed: u64,
    pub ranks_per_trial: Vec<Vec<usize>>,
    pub distinct_ranks: Vec<usize>,
    pub modal_rank: usize,
    pub fraction_at_modal: f64,
}

/// Sample `trials` decompositions through `decompose(trial, seed)` and
/// measure exact ranks with respect to the index set.
pub fn genericity_check<F>(
    decompose: F,
    index_set: &ModeSet,
    trials: usize,
    seed: u64,
) -> Result<GenericityReport>
where
    F: Fn(usize, u64) -> Result<GridTensorBatch> + Sync,
{
    let ranks_per_trial = exec::try_map_indexed(trials, |i| {
        let batch = decompose(i, derive_seed(seed, i as u64))?;
        measured_rank(&batch, index_set, RankMode::Exact)
    })?;
    let mut all: Vec<usize> = ranks_per_trial.iter().flatten().copied().collect();
    all.sort_unstable();
    let modal_rank = all.last().copied().unwrap_or(0);
    let hits = all.iter().filter(|&&rk| rk == modal_rank).count();
    let fraction = if all.is_empty() {
        0.0
    } else {
        hits as f64 / all.len() as f64
    };
    let mut distinct = all;
    distinct.dedup();
    Ok(GenericityReport {
        trials,
        seed,
        ranks_per_trial,
        distinct_ranks: distinct,
        modal_rank,
        fraction_at_modal: fraction,
    })
}

/// The exemplar index set: every second index in the lower half, every
/// second pair of indices in the upper half.
pub fn exemplar_index_set(n: usize) -> Result<ModeSet> {
    if n == 0 || n % 8 != 0 {
        return Err(Error::InvalidIndexSet(format!(
            "exemplar index set needs n divisible by 8, got {n}"
        )));
    }
    let mut v: Vec<usize> = (1..=n / 4).map(|k| 2 * k - 1).collect();
    for k in 1..=n / 8 {
        for kp in [2, 3] {
            v.push(n / 2 + 4 * k - kp);
        }
    }
    ModeSet::from_elements(v)
}

/// Desk-scale separation certificate: the hybrid achievable rank versus the
/// individual trees' upper bounds and the empty-mixture summation bound.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub k: usize,
    pub n: usize,
    pub r_mix: usize,
    pub r_tree: usize,
    pub seed: u64,
    pub index_set: ModeSet,
    #[serde(with = "crate::io::biguint_string")]
    pub mixed_achievable_rank: BigUint,
    pub tree_a_bounds: BoundsReport,
    pub tree_b_bounds: BoundsReport,
    pub minimal_r_matching_a: u64,
    pub minimal_r_matching_b: u64,
    pub corollary_exponent: f64,
    pub corollary_bound: f64,
    #[serde(with = "crate::io::biguint_string")]
    pub summation_bound: BigUint,
    pub summation_ranks: Vec<Vec<usize>>,
    pub summation_within_bound: bool,
    pub exceeds_tree_bounds: bool,
    pub exceeds_summation_bound: bool,
    pub degenerate: bool,
    pub hybrid_report: RankTrialReport,
}

impl SeparationReport {
    pub fn separated(&self) -> bool {
        self.exceeds_tree_bounds && self.exceeds_summation_bound && !self.degenerate
    }
}

fn minimal_r_matching(exponent: usize, target: &BigUint) -> u64 {
    let mut r = 1u64;
    loop {
        if BigUint::from(r).pow(exponent as u32) >= *target {
            return r;
        }
        r += 1;
    }
}

/// Build the baseline / k-group-swap pair with mixture nodes at depth
/// `log2(n) - k`, form the separating hybrid (first half of the mixture
/// segments from the baseline tree, the rest from the swapped tree), and
/// measure what it achieves against the individual trees' bounds.
pub fn separation_report(
    k: usize,
    n: usize,
    r_mix: usize,
    trials: usize,
    seed: u64,
) -> Result<SeparationReport> {
    if r_mix % 2 != 0 || r_mix == 0 {
        return Err(Error::InvalidWeights(format!(
            "r_mix must be even and positive, got {r_mix}"
        )));
    }
    let r_tree = r_mix / 2;
    let tree_a = build_baseline_tree(n)?;
    let tree_b = build_k_group_swap_tree(n, k)?;
    let levels = n.trailing_zeros() as usize;
    let depth = levels.saturating_sub(k);

    let mixture_nodes: Vec<ModeSet> = if depth == 0 {
        Vec::new()
    } else {
        tree_a
            .labels_at_depth(depth)
            .into_iter()
            .filter(|label| tree_b.is_interior(label))
            .collect()
    };
    let degenerate = k <= 1 || mixture_nodes.is_empty();
    let spec = MixSpec::new(tree_a.clone(), tree_b.clone(), mixture_nodes.clone())?;

    // choices follow the plan's step order: mixture nodes ascending, root last
    let mix_count = mixture_nodes.len();
    let mut choices = vec![SourceTree::B; mix_count + 1];
    for choice in choices.iter_mut().take(mix_count / 2) {
        *choice = SourceTree::A;
    }
    let hybrid = build_hybrid(&spec, &choices)?;

    let index_set = exemplar_index_set(n)?;
    let hybrid_report =
        verify_rank_bounds(hybrid.tree(), "hybrid", &index_set, r_tree, trials, seed, BinaryOp::Product)?;
    let mixed_achievable_rank = BigUint::from(hybrid_report.max_observed());

    let tree_a_bounds = rank_bounds(&tree_a, &index_set, r_tree as u64)?;
    let tree_b_bounds = rank_bounds(&tree_b, &index_set, r_tree as u64)?;
    let minimal_r_matching_a =
        minimal_r_matching(tree_a_bounds.upper_exponent, &mixed_achievable_rank);
    let minimal_r_matching_b =
        minimal_r_matching(tree_b_bounds.upper_exponent, &mixed_achievable_rank);

    let corollary_exponent = 2.0 / (1.0 + (2.0f64).powi(1 - k as i32));
    let corollary_bound = ((r_mix / 2) as f64).powf(corollary_exponent);

    // summation bound: an empty-mixture mixed decomposition is the tensor sum
    // of the two tree decompositions, so its rank is at most the sum of the
    // individual upper bounds; check a couple of draws numerically
    let summation_bound = &tree_a_bounds.upper + &tree_b_bounds.upper;
    let empty_spec = MixSpec::new(tree_a.clone(), tree_b.clone(), Vec::new())?;
    let disc = Discretizers::identity(r_tree, ScalarKind::Rational);
    let summation_ranks = exec::try_map_indexed(2, |i| {
        let wa = random_weights(
            &tree_a,
            r_tree,
            derive_seed(seed, 1000 + i as u64),
            WeightDistribution::IntegerUniform {
                bound: VERIFY_WEIGHT_BOUND,
            },
        )?;
        let wb = random_weights(
            &tree_b,
            r_tree,
            derive_seed(seed, 2000 + i as u64),
            WeightDistribution::IntegerUniform {
                bound: VERIFY_WEIGHT_BOUND,
            },
        )?;
        let batch = mixed_decompose(&empty_spec, &wa, &wb, &disc, BinaryOp::Product)?;
        measured_rank(&batch, &index_set, RankMode::Exact)
    })?;
    let summation_within_bound = summation_ranks
        .iter()
        .flatten()
        .all(|&rk| BigUint::from(rk) <= summation_bound);

    let exceeds_tree_bounds = mixed_achievable_rank > tree_a_bounds.upper
        && mixed_achievable_rank > tree_b_bounds.upper;
    let exceeds_summation_bound = mixed_achievable_rank > summation_bound;

    Ok(SeparationReport {
        k,
        n,
        r_mix,
        r_tree,
        seed,
        index_set,
        mixed_achievable_rank,
        tree_a_bounds,
        tree_b_bounds,
        minimal_r_matching_a,
        minimal_r_matching_b,
        corollary_exponent,
        corollary_bound,
        summation_bound,
        summation_ranks,
        summation_within_bound,
        exceeds_tree_bounds,
        exceeds_summation_bound,
        degenerate,
        hybrid_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{enumerate_hybrids, WeightSet};

    fn ms(v: &[usize]) -> ModeSet {
        ModeSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exemplar_sets() {
        assert_eq!(
            exemplar_index_set(16).unwrap(),
            ms(&[1, 3, 5, 7, 9, 10, 13, 14])
        );
        assert_eq!(exemplar_index_set(8).unwrap(), ms(&[1, 3, 5, 6]));
        for n in [8usize, 16, 32] {
            assert_eq!(exemplar_index_set(n).unwrap().len(), n / 2);
        }
        assert!(exemplar_index_set(4).is_err());
        assert!(exemplar_index_set(12).is_err());
    }

    #[test]
    fn measured_rank_edge_cases() {
        let tree = build_baseline_tree(4).unwrap();
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        let weights = WeightSet::zeros(&tree, 2, ScalarKind::Rational);
        let batch = tree_decompose(&tree, &weights, &disc, BinaryOp::Product).unwrap();
        let ranks = measured_rank(&batch, &ms(&[1, 2]), RankMode::Exact).unwrap();
        assert_eq!(ranks, vec![0, 0]);

        // r = 1 with product operator: every grid tensor is an outer product
        let disc1 = Discretizers::identity(1, ScalarKind::Rational);
        let w1 = random_weights(&tree, 1, 5, WeightDistribution::IntegerUniform { bound: 3 })
            .unwrap();
        let batch = tree_decompose(&tree, &w1, &disc1, BinaryOp::Product).unwrap();
        for subset in [ms(&[1]), ms(&[1, 3]), ms(&[2, 4])] {
            let ranks = measured_rank(&batch, &subset, RankMode::Exact).unwrap();
            assert!(ranks.iter().all(|&rk| rk <= 1));
        }
    }

    #[test]
    fn rank_bound_verification_small() {
        let tree = build_baseline_tree(8).unwrap();
        let index_set = ms(&[1, 3, 5, 7]);
        let report =
            verify_rank_bounds(&tree, "baseline-8", &index_set, 2, 5, 77, BinaryOp::Product)
                .unwrap();
        assert!(report.hard_pass());
        // bounds coincide at 16; generic integer draws mostly hit it
        assert_eq!(report.bounds.upper, BigUint::from(16u32));
        assert!(report.fraction_at(16) >= 0.6);
        assert_eq!(report.max_observed(), 16);
        assert!(!report.witness.degenerate);
        assert!(
            verify_rank_bounds(&tree, "x", &index_set, 2, 1, 1, BinaryOp::ReluSum).is_err()
        );
        assert!(
            verify_rank_bounds(&tree, "x", &ModeSet::full(8), 2, 1, 1, BinaryOp::Product).is_err()
        );
    }

    #[test]
    fn self_hybrid_replicates_trivially() {
        let tree_a = build_baseline_tree(4).unwrap();
        let tree_b = crate::tree::build_even_odd_swap_tree(4).unwrap();
        let spec = MixSpec::new(tree_a, tree_b, vec![]).unwrap();
        let hybrids = enumerate_hybrids(&spec).unwrap();
        for g in [BinaryOp::Product, BinaryOp::ReluSum] {
            let report = verify_hybrid_replication(&spec, &hybrids[0], 2, 1, 3, g).unwrap();
            assert!(report.pass, "counterexample: {:?}", report.first_counterexample);
        }
    }

    #[test]
    fn genericity_on_rank_one_instances() {
        // r = 1: every nonzero draw yields rank exactly 1; zero draws are
        // resampled away (a single zero weight annihilates the product)
        let tree = build_baseline_tree(4).unwrap();
        let disc = Discretizers::new(vec![
            vec![crate::scalar::Scalar::from_int(1)],
            vec![crate::scalar::Scalar::from_int(2)],
        ])
        .unwrap();
        let index_set = ms(&[1, 3]);
        let report = genericity_check(
            |_, s| {
                for attempt in 0..64u64 {
                    let w = random_weights(
                        &tree,
                        1,
                        derive_seed(s, attempt),
                        WeightDistribution::IntegerUniform { bound: 3 },
                    )?;
                    let batch = tree_decompose(&tree, &w, &disc, BinaryOp::Product)?;
                    if !batch.get(0).is_zero() {
                        return Ok(batch);
                    }
                }
                unreachable!("64 zero draws in a row");
            },
            &index_set,
            6,
            123,
        )
        .unwrap();
        assert_eq!(report.modal_rank, 1);
        assert_eq!(report.distinct_ranks, vec![1]);
        assert!((report.fraction_at_modal - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seed_derivation_is_stable_and_spread() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(7, 0));
    }
}
