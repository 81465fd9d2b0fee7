//! Forward-pass semantics of the networks characterized by tree and mixed
//! decompositions, and the exhaustive grid-tensor oracle that evaluates the
//! forward pass on every discretizer assignment.
//!
//! The oracle is an independent code path from the decomposition engine and
//! serves as its ground truth: the two must agree entry for entry.

use std::collections::BTreeMap;

use crate::decomp::{Discretizers, GridTensorBatch, MixSpec, SegmentOrder, WeightSet};
use crate::error::{Error, Result};
use crate::exec;
use crate::modes::ModeSet;
use crate::scalar::{BinaryOp, Scalar};
use crate::tensor::DenseTensor;
use crate::tree::ModeTree;

/// Default cap on `M^N * r` grid entries materialized by the oracle.
pub const DEFAULT_GRID_BUDGET: usize = 1 << 26;

/// One input window: `n` vectors of uniform dimension (oldest first).
#[derive(Clone, Debug, PartialEq)]
pub struct InputWindow {
    vectors: Vec<Vec<Scalar>>,
}

impl InputWindow {
    pub fn new(vectors: Vec<Vec<Scalar>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::DimensionMismatch("empty window".into()));
        }
        let dim = vectors[0].len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(
                "window vectors must share one nonzero dimension".into(),
            ));
        }
        Ok(InputWindow { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, j: usize) -> &[Scalar] {
        &self.vectors[j]
    }
}

fn dot(w: &[Scalar], v: &[Scalar]) -> Result<Scalar> {
    debug_assert_eq!(w.len(), v.len());
    let mut acc = Scalar::zero(v[0].kind());
    for (a, b) in w.iter().zip(v) {
        if a.is_zero() {
            continue;
        }
        acc.add_mul_assign(a, b)?;
    }
    Ok(acc)
}

fn eval_node_values(
    tree: &ModeTree,
    label: &ModeSet,
    weights: &WeightSet,
    values: &mut BTreeMap<ModeSet, Vec<Scalar>>,
    g: BinaryOp,
) -> Result<()> {
    let (cl, cr) = tree
        .children_of(label)
        .ok_or_else(|| Error::InvalidTree(format!("{label} is not interior")))?;
    let (cl, cr) = (cl.clone(), cr.clone());
    let nw = weights
        .node(label)
        .ok_or_else(|| Error::InvalidWeights(format!("no weights for {label}")))?;
    let out = {
        let left = &values[&cl];
        let right = &values[&cr];
        (0..weights.r())
            .map(|gamma| {
                let a = dot(&nw.a_left[gamma], left)?;
                let b = dot(&nw.a_right[gamma], right)?;
                g.apply(&a, &b)
            })
            .collect::<Result<Vec<_>>>()?
    };
    values.insert(label.clone(), out);
    Ok(())
}

fn forward_tree_on_leaves(
    tree: &ModeTree,
    weights: &WeightSet,
    leaves: &[&[Scalar]],
    g: BinaryOp,
) -> Result<Vec<Scalar>> {
    let mut values: BTreeMap<ModeSet, Vec<Scalar>> = BTreeMap::new();
    for (j, leaf) in leaves.iter().enumerate() {
        values.insert(ModeSet::singleton(j + 1), leaf.to_vec());
    }
    for label in tree.interior_labels() {
        eval_node_values(tree, &label, weights, &mut values, g)?;
    }
    let root = tree.node(tree.root_id()).label.clone();
    Ok(values.remove(&root).expect("root evaluated"))
}

/// Evaluate the network of a mode tree on one window: leaf `j` carries the
/// j-th input vector, an interior node applies `g` to the inner products of
/// its weight vectors with the children's values; the root's `r` values are
/// the output.
pub fn forward_tree_network(
    tree: &ModeTree,
    weights: &WeightSet,
    window: &InputWindow,
    g: BinaryOp,
) -> Result<Vec<Scalar>> {
    weights.validate_for(tree)?;
    if window.len() != tree.n() {
        return Err(Error::DimensionMismatch(format!(
            "window has {} vectors, tree needs {}",
            window.len(),
            tree.n()
        )));
    }
    if window.dim() != weights.r() {
        return Err(Error::DimensionMismatch(format!(
            "window dimension {} must equal size constant {}",
            window.dim(),
            weights.r()
        )));
    }
    let leaves: Vec<&[Scalar]> = (0..window.len()).map(|j| window.vector(j)).collect();
    forward_tree_on_leaves(tree, weights, &leaves, g)
}

fn grid_points(m: usize, n: usize, r: usize, budget: usize) -> Result<usize> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(m as u128);
    }
    let entries = total.saturating_mul(r as u128);
    if entries > budget as u128 {
        return Err(Error::BudgetExceeded(format!(
            "{m}^{n} * {r} = {entries} grid entries exceed the budget of {budget}"
        )));
    }
    Ok(total as usize)
}

fn batch_from_rows(rows: Vec<Vec<Scalar>>, dims: Vec<usize>, r: usize) -> Result<GridTensorBatch> {
    let tensors = (0..r)
        .map(|y| {
            let data: Vec<Scalar> = rows.iter().map(|row| row[y].clone()).collect();
            DenseTensor::new(dims.clone(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    GridTensorBatch::new(tensors)
}

/// Fill every grid-tensor entry by running the forward pass on the matching
/// discretizer assignment. Ground truth for [`crate::decomp::tree_decompose`].
pub fn grid_tensor_bruteforce(
    tree: &ModeTree,
    weights: &WeightSet,
    disc: &Discretizers,
    g: BinaryOp,
) -> Result<GridTensorBatch> {
    grid_tensor_bruteforce_with_budget(tree, weights, disc, g, DEFAULT_GRID_BUDGET)
}

/// [`grid_tensor_bruteforce`] with an explicit entry budget.
pub fn grid_tensor_bruteforce_with_budget(
    tree: &ModeTree,
    weights: &WeightSet,
    disc: &Discretizers,
    g: BinaryOp,
    budget: usize,
) -> Result<GridTensorBatch> {
    weights.validate_for(tree)?;
    let r = weights.r();
    if disc.dim() != r {
        return Err(Error::DimensionMismatch(format!(
            "discretizer dimension {} must equal size constant {r}",
            disc.dim()
        )));
    }
    let n = tree.n();
    let m = disc.count();
    let total = grid_points(m, n, r, budget)?;
    let rows = exec::try_map_indexed(total, |flat| {
        let mut digits = vec![0usize; n];
        let mut rem = flat;
        for k in (0..n).rev() {
            digits[k] = rem % m;
            rem /= m;
        }
        let leaves: Vec<&[Scalar]> = digits.iter().map(|&d| disc.vector(d)).collect();
        forward_tree_on_leaves(tree, weights, &leaves, g)
    })?;
    batch_from_rows(rows, vec![m; n], r)
}

/// Evaluate the mixed network on one window: both trees' node values advance
/// segment by segment, the first `r/2` coordinates are exchanged at every
/// mixture node, and the two root values are summed.
pub fn forward_mixed_network(
    spec: &MixSpec,
    weights_a: &WeightSet,
    weights_b: &WeightSet,
    window: &InputWindow,
    g: BinaryOp,
) -> Result<Vec<Scalar>> {
    let r = weights_a.r();
    if weights_b.r() != r {
        return Err(Error::InvalidWeights(
            "both weight sets must share one size constant".into(),
        ));
    }
    if r % 2 != 0 {
        return Err(Error::InvalidWeights(format!(
            "mixed network needs an even size constant, got {r}"
        )));
    }
    weights_a.validate_for(&spec.tree_a)?;
    weights_b.validate_for(&spec.tree_b)?;
    if window.len() != spec.n() || window.dim() != r {
        return Err(Error::DimensionMismatch(
            "window shape does not match the spec".into(),
        ));
    }

    let mut values_a: BTreeMap<ModeSet, Vec<Scalar>> = BTreeMap::new();
    let mut values_b: BTreeMap<ModeSet, Vec<Scalar>> = BTreeMap::new();
    for j in 0..spec.n() {
        let v = window.vector(j).to_vec();
        values_a.insert(ModeSet::singleton(j + 1), v.clone());
        values_b.insert(ModeSet::singleton(j + 1), v);
    }
    let plan = spec.plan(SegmentOrder::InclusionLex);
    for step in &plan.steps {
        for label in &step.seg_a {
            eval_node_values(&spec.tree_a, label, weights_a, &mut values_a, g)?;
        }
        for label in &step.seg_b {
            eval_node_values(&spec.tree_b, label, weights_b, &mut values_b, g)?;
        }
        let va = values_a.get_mut(&step.node).expect("evaluated in tree A");
        let vb = values_b.get_mut(&step.node).expect("evaluated in tree B");
        for gamma in 0..r / 2 {
            std::mem::swap(&mut va[gamma], &mut vb[gamma]);
        }
    }
    let root = ModeSet::full(spec.n());
    let out_a = values_a.remove(&root).expect("root evaluated");
    let out_b = values_b.remove(&root).expect("root evaluated");
    out_a
        .iter()
        .zip(&out_b)
        .map(|(a, b)| a.add(b))
        .collect::<Result<Vec<_>>>()
}

/// Exhaustive grid oracle for [`crate::decomp::mixed_decompose`].
pub fn mixed_grid_bruteforce(
    spec: &MixSpec,
    weights_a: &WeightSet,
    weights_b: &WeightSet,
    disc: &Discretizers,
    g: BinaryOp,
) -> Result<GridTensorBatch> {
    let r = weights_a.r();
    let n = spec.n();
    let m = disc.count();
    if disc.dim() != r {
        return Err(Error::DimensionMismatch(format!(
            "discretizer dimension {} must equal size constant {r}",
            disc.dim()
        )));
    }
    let total = grid_points(m, n, r, DEFAULT_GRID_BUDGET)?;
    let rows = exec::try_map_indexed(total, |flat| {
        let mut digits = vec![0usize; n];
        let mut rem = flat;
        for k in (0..n).rev() {
            digits[k] = rem % m;
            rem /= m;
        }
        let vectors: Vec<Vec<Scalar>> = digits.iter().map(|&d| disc.vector(d).to_vec()).collect();
        let window = InputWindow::new(vectors)?;
        forward_mixed_network(spec, weights_a, weights_b, &window, g)
    })?;
    batch_from_rows(rows, vec![m; n], r)
}

/// Per-layer dilations of the network a bit-split tree characterizes.
#[derive(Clone, Debug, PartialEq)]
pub struct DilationProfile(pub Vec<u64>);

impl DilationProfile {
    pub fn layers(&self) -> &[u64] {
        &self.0
    }
}

/// Recover the bit order of a perfect bit-split tree and read off the
/// dilation schedule: layer `l` (1-based, leaves upward) has dilation
/// `2^bit_order[levels - l]`. Errors when the tree is not bit-split.
pub fn dilation_profile(tree: &ModeTree) -> Result<DilationProfile> {
    let n = tree.n();
    let levels = if n.is_power_of_two() {
        n.trailing_zeros() as usize
    } else {
        return Err(Error::InvalidTree(format!(
            "{n} leaves cannot come from a bit-split tree"
        )));
    };
    let mut bit_order = vec![0usize; levels];
    for depth in 0..levels {
        let labels = tree.labels_at_depth(depth);
        if labels.len() != 1 << depth {
            return Err(Error::InvalidTree(format!(
                "depth {depth} holds {} nodes; a perfect tree needs {}",
                labels.len(),
                1 << depth
            )));
        }
        let mut split_bit: Option<usize> = None;
        for label in &labels {
            let (cl, cr) = tree.children_of(label).ok_or_else(|| {
                Error::InvalidTree(format!("node {label} at depth {depth} is a leaf"))
            })?;
            let bit = (0..levels).find(|&b| {
                let low: Vec<usize> = label.iter().filter(|e| (e - 1) >> b & 1 == 0).collect();
                let low = ModeSet::new(low).expect("sorted");
                low == *cl || low == *cr
            });
            let Some(bit) = bit else {
                return Err(Error::InvalidTree(format!(
                    "node {label} does not split along a single bit"
                )));
            };
            match split_bit {
                None => split_bit = Some(bit),
                Some(prev) if prev == bit => {}
                Some(prev) => {
                    return Err(Error::InvalidTree(format!(
                        "depth {depth} mixes split bits {prev} and {bit}"
                    )));
                }
            }
        }
        bit_order[depth] = split_bit.expect("at least one node per depth");
    }
    let layers = (1..=levels)
        .map(|l| 1u64 << bit_order[levels - l])
        .collect();
    Ok(DilationProfile(layers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{random_weights, tree_decompose, WeightDistribution};
    use crate::scalar::ScalarKind;
    use crate::tree::{
        build_baseline_tree, build_even_odd_swap_tree, build_k_group_swap_tree,
    };

    fn int_window(vals: &[&[i64]]) -> InputWindow {
        InputWindow::new(
            vals.iter()
                .map(|v| v.iter().map(|&x| Scalar::from_int(x)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn forward_smallest_network() {
        use crate::decomp::NodeWeights;
        use std::collections::BTreeMap;

        let tree = build_baseline_tree(2).unwrap();
        let mut nodes = BTreeMap::new();
        nodes.insert(
            ModeSet::new(vec![1, 2]).unwrap(),
            NodeWeights {
                a_left: vec![vec![Scalar::from_int(3)]],
                a_right: vec![vec![Scalar::from_int(1)]],
            },
        );
        let weights = WeightSet::new(1, nodes).unwrap();
        let window = int_window(&[&[2], &[5]]);
        let out = forward_tree_network(&tree, &weights, &window, BinaryOp::Product).unwrap();
        assert_eq!(out, vec![Scalar::from_int(30)]);
    }

    #[test]
    fn zero_window_gives_zero_output() {
        let tree = build_baseline_tree(4).unwrap();
        let weights = random_weights(&tree, 2, 9, WeightDistribution::IntegerUniform { bound: 5 })
            .unwrap();
        let window = int_window(&[&[0, 0], &[0, 0], &[0, 0], &[0, 0]]);
        for g in [BinaryOp::Product, BinaryOp::ReluSum] {
            let out = forward_tree_network(&tree, &weights, &window, g).unwrap();
            assert!(out.iter().all(Scalar::is_zero));
        }
    }

    #[test]
    fn single_discretizer_grid_is_one_forward_pass() {
        let tree = build_baseline_tree(4).unwrap();
        let weights = random_weights(&tree, 2, 3, WeightDistribution::IntegerUniform { bound: 4 })
            .unwrap();
        let disc = Discretizers::random_integer(1, 2, 3, 17).unwrap();
        let batch = grid_tensor_bruteforce(&tree, &weights, &disc, BinaryOp::Product).unwrap();
        assert_eq!(batch.dims(), &[1, 1, 1, 1]);
        let window = InputWindow::new(vec![disc.vector(0).to_vec(); 4]).unwrap();
        let out = forward_tree_network(&tree, &weights, &window, BinaryOp::Product).unwrap();
        for y in 0..2 {
            assert_eq!(batch.get(y).get_flat(0), &out[y]);
        }
    }

    #[test]
    fn bruteforce_matches_decomposition_on_smallest_example() {
        use crate::decomp::NodeWeights;
        use std::collections::BTreeMap;

        let tree = build_baseline_tree(2).unwrap();
        let mut nodes = BTreeMap::new();
        nodes.insert(
            ModeSet::new(vec![1, 2]).unwrap(),
            NodeWeights {
                a_left: vec![vec![Scalar::from_int(3)]],
                a_right: vec![vec![Scalar::from_int(1)]],
            },
        );
        let weights = WeightSet::new(1, nodes).unwrap();
        let disc = Discretizers::new(vec![
            vec![Scalar::from_int(1)],
            vec![Scalar::from_int(2)],
        ])
        .unwrap();
        let brute = grid_tensor_bruteforce(&tree, &weights, &disc, BinaryOp::Product).unwrap();
        let expected = DenseTensor::from_ints(vec![2, 2], &[3, 6, 6, 12]).unwrap();
        assert_eq!(brute.get(0), &expected);
        let dec = tree_decompose(&tree, &weights, &disc, BinaryOp::Product).unwrap();
        assert_eq!(brute.tensors(), dec.tensors());
    }

    #[test]
    fn budget_is_enforced() {
        let tree = build_baseline_tree(8).unwrap();
        let weights = random_weights(&tree, 2, 3, WeightDistribution::IntegerUniform { bound: 2 })
            .unwrap();
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        let err = grid_tensor_bruteforce_with_budget(&tree, &weights, &disc, BinaryOp::Product, 100);
        assert!(matches!(err, Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn dilation_profiles_of_the_tree_families() {
        let t = build_baseline_tree(16).unwrap();
        assert_eq!(dilation_profile(&t).unwrap().layers(), &[1, 2, 4, 8]);
        let t = build_even_odd_swap_tree(16).unwrap();
        assert_eq!(dilation_profile(&t).unwrap().layers(), &[2, 1, 8, 4]);
        let t = build_k_group_swap_tree(16, 4).unwrap();
        assert_eq!(dilation_profile(&t).unwrap().layers(), &[8, 4, 2, 1]);
        let t = build_baseline_tree(2).unwrap();
        assert_eq!(dilation_profile(&t).unwrap().layers(), &[1]);
    }

    #[test]
    fn dilation_profile_rejects_non_bit_split_trees() {
        // a valid mode tree that is not a bit-split tree: {1,2,3} / {4}
        use crate::tree::ModeTree;
        let ms = |v: &[usize]| ModeSet::new(v.to_vec()).unwrap();
        let raw = vec![
            (ms(&[1, 2, 3, 4]), Some((1, 6))),
            (ms(&[1, 2, 3]), Some((2, 5))),
            (ms(&[1, 2]), Some((3, 4))),
            (ms(&[1]), None),
            (ms(&[2]), None),
            (ms(&[3]), None),
            (ms(&[4]), None),
        ];
        let tree = ModeTree::from_parts(4, raw, 0).unwrap();
        assert!(dilation_profile(&tree).is_err());
    }
}
