//! Grid-tensor decompositions over mode trees.
//!
//! `tree_decompose` runs the hierarchical decomposition of a single tree:
//! leaves carry discretizer coordinates, each interior node takes the
//! generalized tensor product of weighted sums of its children's tensors and
//! realigns modes to ascending order. `mixed_decompose` runs two tree
//! decompositions in parallel, exchanging the first half of the tensors at
//! every mixture node and summing at the root.
//!
//! Hybrid trees stitch segments of the two trees together; the module
//! enumerates them and builds the explicit weight assignment under which the
//! mixed decomposition replicates any hybrid's tree decomposition. The
//! explicit lower-bound weight setting used by the rank analysis lives here
//! as well.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::modes::ModeSet;
use crate::scalar::{BinaryOp, Scalar, ScalarKind};
use crate::tensor::DenseTensor;
use crate::tree::{tiling, ModeTree};

/// The discretizer vectors `v^(1) .. v^(M)`, all of one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretizers {
    vectors: Vec<Vec<Scalar>>,
}

impl Discretizers {
    pub fn new(vectors: Vec<Vec<Scalar>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidWeights("need at least one discretizer".into()));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidWeights("discretizers must be non-empty".into()));
        }
        let kind = vectors[0][0].kind();
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(
                    "discretizers must share one dimension".into(),
                ));
            }
            if v.iter().any(|s| s.kind() != kind) {
                return Err(Error::ScalarKindMismatch(kind, ScalarKind::F64));
            }
        }
        Ok(Discretizers { vectors })
    }

    /// The standard basis of dimension `r` (M = r).
    pub fn identity(r: usize, kind: ScalarKind) -> Self {
        let vectors = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { Scalar::one(kind) } else { Scalar::zero(kind) })
                    .collect()
            })
            .collect();
        Discretizers { vectors }
    }

    /// `m` vectors of dimension `r` with integer entries in `[-bound, bound]`.
    pub fn random_integer(m: usize, r: usize, bound: i64, seed: u64) -> Result<Self> {
        if m == 0 || r == 0 || bound < 1 {
            return Err(Error::InvalidWeights(
                "need m >= 1, r >= 1, bound >= 1".into(),
            ));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let vectors = (0..m)
            .map(|_| {
                (0..r)
                    .map(|_| Scalar::from_int(rng.gen_range(-bound..=bound)))
                    .collect()
            })
            .collect();
        Ok(Discretizers { vectors })
    }

    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn kind(&self) -> ScalarKind {
        self.vectors[0][0].kind()
    }

    pub fn vector(&self, i: usize) -> &[Scalar] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<Scalar>] {
        &self.vectors
    }

    /// Zero-pad every vector to dimension `dim` (used when feeding a
    /// decomposition of a larger size constant).
    pub fn pad_to(&self, dim: usize) -> Result<Discretizers> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot pad dimension {} down to {dim}",
                self.dim()
            )));
        }
        let kind = self.kind();
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                let mut out = v.clone();
                out.resize(dim, Scalar::zero(kind));
                out
            })
            .collect();
        Ok(Discretizers { vectors })
    }
}

/// Weight vectors of one interior node: `r` vectors of dimension `r` for
/// each child ("aI" applies to the first child, "aII" to the second).
#[derive(Clone, Debug, PartialEq)]
pub struct NodeWeights {
    pub a_left: Vec<Vec<Scalar>>,
    pub a_right: Vec<Vec<Scalar>>,
}

/// Per-interior-node weights of a decomposition with size constant `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    r: usize,
    nodes: BTreeMap<ModeSet, NodeWeights>,
}

impl WeightSet {
    pub fn new(r: usize, nodes: BTreeMap<ModeSet, NodeWeights>) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidWeights("size constant must be >= 1".into()));
        }
        let ws = WeightSet { r, nodes };
        ws.check_shapes()?;
        Ok(ws)
    }

    fn check_shapes(&self) -> Result<()> {
        for (label, nw) in &self.nodes {
            for side in [&nw.a_left, &nw.a_right] {
                if side.len() != self.r || side.iter().any(|v| v.len() != self.r) {
                    return Err(Error::InvalidWeights(format!(
                        "node {label} must hold {r} vectors of dimension {r}",
                        r = self.r
                    )));
                }
            }
        }
        Ok(())
    }

    /// All-zero weights keyed by the interior of `tree`.
    pub fn zeros(tree: &ModeTree, r: usize, kind: ScalarKind) -> Self {
        let zero_side = || vec![vec![Scalar::zero(kind); r]; r];
        let nodes = tree
            .interior_labels()
            .into_iter()
            .map(|label| {
                (
                    label,
                    NodeWeights {
                        a_left: zero_side(),
                        a_right: zero_side(),
                    },
                )
            })
            .collect();
        WeightSet { r, nodes }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn kind(&self) -> Option<ScalarKind> {
        self.nodes
            .values()
            .next()
            .map(|nw| nw.a_left[0][0].kind())
    }

    pub fn node(&self, label: &ModeSet) -> Option<&NodeWeights> {
        self.nodes.get(label)
    }

    pub fn node_mut(&mut self, label: &ModeSet) -> Option<&mut NodeWeights> {
        self.nodes.get_mut(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &ModeSet> {
        self.nodes.keys()
    }

    pub fn nodes(&self) -> &BTreeMap<ModeSet, NodeWeights> {
        &self.nodes
    }

    /// Keys must be exactly the interior labels of `tree`.
    pub fn validate_for(&self, tree: &ModeTree) -> Result<()> {
        self.check_shapes()?;
        let interior = tree.interior_labels();
        if interior.len() != self.nodes.len() {
            return Err(Error::InvalidWeights(format!(
                "weights cover {} nodes, tree has {} interior nodes",
                self.nodes.len(),
                interior.len()
            )));
        }
        for label in &interior {
            if !self.nodes.contains_key(label) {
                return Err(Error::InvalidWeights(format!(
                    "missing weights for interior node {label}"
                )));
            }
        }
        Ok(())
    }
}

/// Output of a decomposition: `r` grid tensors of identical dims.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTensorBatch {
    tensors: Vec<DenseTensor>,
}

impl GridTensorBatch {
    pub fn new(tensors: Vec<DenseTensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::DimensionMismatch("empty batch".into()));
        }
        let dims = tensors[0].dims().to_vec();
        if tensors.iter().any(|t| t.dims() != dims) {
            return Err(Error::DimensionMismatch(
                "batch tensors must share dims".into(),
            ));
        }
        Ok(GridTensorBatch { tensors })
    }

    pub fn count(&self) -> usize {
        self.tensors.len()
    }

    pub fn dims(&self) -> &[usize] {
        self.tensors[0].dims()
    }

    pub fn get(&self, y: usize) -> &DenseTensor {
        &self.tensors[y]
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn into_tensors(self) -> Vec<DenseTensor> {
        self.tensors
    }

    /// First differing entry against another batch, compared on the first
    /// `limit` tensors: `(tensor index, 0-based multi-index)`.
    pub fn first_difference(
        &self,
        other: &GridTensorBatch,
        limit: usize,
    ) -> Option<(usize, Vec<usize>)> {
        for y in 0..limit.min(self.tensors.len()).min(other.tensors.len()) {
            let a = &self.tensors[y];
            let b = &other.tensors[y];
            if a.dims() != b.dims() {
                return Some((y, vec![]));
            }
            for flat in 0..a.len() {
                if a.get_flat(flat) != b.get_flat(flat) {
                    return Some((y, a.multi_index(flat)));
                }
            }
        }
        None
    }
}

/// Weighted sum of a node's child tensors; zero weights are skipped.
fn weighted_sum(weights: &[Scalar], tensors: &[DenseTensor]) -> Result<DenseTensor> {
    debug_assert_eq!(weights.len(), tensors.len());
    let mut acc = DenseTensor::zeros(tensors[0].kind(), tensors[0].dims().to_vec());
    for (w, t) in weights.iter().zip(tensors) {
        if w.is_zero() {
            continue;
        }
        acc.add_scaled(w, t)?;
    }
    Ok(acc)
}

/// Tensors of the `n` leaves: tensor `gamma` of a leaf holds coordinate
/// `gamma` of every discretizer.
fn leaf_tensors(disc: &Discretizers, r: usize) -> Vec<DenseTensor> {
    (0..r)
        .map(|gamma| {
            let data: Vec<Scalar> = disc.vectors().iter().map(|v| v[gamma].clone()).collect();
            DenseTensor::new(vec![disc.count()], data).expect("leaf tensor shape")
        })
        .collect()
}

fn eval_interior(
    tree: &ModeTree,
    label: &ModeSet,
    weights: &WeightSet,
    values: &mut BTreeMap<ModeSet, Vec<DenseTensor>>,
    g: BinaryOp,
) -> Result<()> {
    let (cl, cr) = tree
        .children_of(label)
        .ok_or_else(|| Error::InvalidTree(format!("{label} is not interior")))?;
    let (cl, cr) = (cl.clone(), cr.clone());
    let mode_labels: Vec<usize> = cl.iter().chain(cr.iter()).collect();
    let nw = weights
        .node(label)
        .ok_or_else(|| Error::InvalidWeights(format!("no weights for {label}")))?;
    let out = {
        let left = values
            .get(&cl)
            .ok_or_else(|| Error::InvalidTree(format!("child {cl} not yet evaluated")))?;
        let right = values
            .get(&cr)
            .ok_or_else(|| Error::InvalidTree(format!("child {cr} not yet evaluated")))?;
        exec::try_map_indexed(weights.r(), |gamma| {
            let sl = weighted_sum(&nw.a_left[gamma], left)?;
            let sr = weighted_sum(&nw.a_right[gamma], right)?;
            sl.tensor_product_with(&sr, g)?
                .align_to_sorted_modes(&mode_labels)
        })?
    };
    values.insert(label.clone(), out);
    Ok(())
}

/// Hierarchical grid-tensor decomposition of a single mode tree. Returns the
/// `r` tensors of the root, each of order `n` with dimension `M` per mode.
pub fn tree_decompose(
    tree: &ModeTree,
    weights: &WeightSet,
    disc: &Discretizers,
    g: BinaryOp,
) -> Result<GridTensorBatch> {
    weights.validate_for(tree)?;
    let r = weights.r();
    if disc.dim() != r {
        return Err(Error::DimensionMismatch(format!(
            "discretizer dimension {} must equal size constant {r}",
            disc.dim()
        )));
    }
    if let Some(kind) = weights.kind() {
        if kind != disc.kind() {
            return Err(Error::ScalarKindMismatch(kind, disc.kind()));
        }
    }
    let mut values: BTreeMap<ModeSet, Vec<DenseTensor>> = BTreeMap::new();
    let leaf = leaf_tensors(disc, r);
    for j in 1..=tree.n() {
        values.insert(ModeSet::singleton(j), leaf.clone());
    }
    for label in tree.interior_labels() {
        eval_interior(tree, &label, weights, &mut values, g)?;
    }
    let root = tree.node(tree.root_id()).label.clone();
    let tensors = values.remove(&root).expect("root evaluated");
    GridTensorBatch::new(tensors)
}

/// Which of the two trees a hybrid segment came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTree {
    A,
    B,
}

impl SourceTree {
    pub fn other(self) -> SourceTree {
        match self {
            SourceTree::A => SourceTree::B,
            SourceTree::B => SourceTree::A,
        }
    }
}

/// A pair of mode trees over the same ground set plus the mixture nodes at
/// which their decompositions exchange tensors. Mixture nodes must be
/// interior to both trees; the root is excluded (it is where outputs are
/// summed, not exchanged).
#[derive(Clone, Debug, PartialEq)]
pub struct MixSpec {
    pub tree_a: ModeTree,
    pub tree_b: ModeTree,
    mixture_nodes: Vec<ModeSet>,
}

impl MixSpec {
    pub fn new(tree_a: ModeTree, tree_b: ModeTree, mixture_nodes: Vec<ModeSet>) -> Result<Self> {
        if tree_a.n() != tree_b.n() {
            return Err(Error::InvalidMixSpec(format!(
                "trees over different ground sets: {} vs {}",
                tree_a.n(),
                tree_b.n()
            )));
        }
        let root = ModeSet::full(tree_a.n());
        let mut sorted = mixture_nodes;
        sorted.sort_by_key(ModeSet::inclusion_key);
        sorted.dedup();
        for node in &sorted {
            if *node == root {
                return Err(Error::InvalidMixSpec(
                    "the root cannot be a mixture node".into(),
                ));
            }
            if !tree_a.is_interior(node) || !tree_b.is_interior(node) {
                return Err(Error::InvalidMixSpec(format!(
                    "mixture node {node} must be interior to both trees"
                )));
            }
        }
        Ok(MixSpec {
            tree_a,
            tree_b,
            mixture_nodes: sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.tree_a.n()
    }

    pub fn mixture_nodes(&self) -> &[ModeSet] {
        &self.mixture_nodes
    }

    pub(crate) fn plan(&self, order: SegmentOrder) -> MixPlan {
        let root = ModeSet::full(self.n());
        let mut step_nodes = self.mixture_nodes.clone();
        step_nodes.push(root);
        step_nodes.sort_by_key(ModeSet::inclusion_key);
        let steps = step_nodes
            .iter()
            .map(|mu| MixStep {
                seg_a: segment(&self.tree_a, mu, &self.mixture_nodes, order),
                seg_b: segment(&self.tree_b, mu, &self.mixture_nodes, order),
                node: mu.clone(),
            })
            .collect();
        MixPlan { steps }
    }
}

/// Tie-breaking rule for linearizing inclusion order inside segments. Any
/// rule yields the same decomposition output; two are kept so tests can pin
/// that invariance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentOrder {
    /// Ascending size, then ascending lexicographic label order.
    InclusionLex,
    /// Ascending size, then descending lexicographic label order.
    InclusionLexDesc,
}

/// Interior nodes of `tree` below `mu` (inclusive) whose path to `mu` does
/// not cross another mixture node.
fn segment(
    tree: &ModeTree,
    mu: &ModeSet,
    mixture_nodes: &[ModeSet],
    order: SegmentOrder,
) -> Vec<ModeSet> {
    let mut seg: Vec<ModeSet> = tree
        .interior_labels()
        .into_iter()
        .filter(|nu| {
            nu.is_subset_of(mu)
                && !mixture_nodes.iter().any(|mp| {
                    mp != mu && mp.len() < mu.len() && mp.is_subset_of(mu) && nu.is_subset_of(mp)
                })
        })
        .collect();
    match order {
        SegmentOrder::InclusionLex => seg.sort_by_key(ModeSet::inclusion_key),
        SegmentOrder::InclusionLexDesc => {
            seg.sort_by(|a, b| {
                a.len()
                    .cmp(&b.len())
                    .then_with(|| b.as_slice().cmp(a.as_slice()))
            });
        }
    }
    seg
}

pub(crate) struct MixStep {
    pub node: ModeSet,
    pub seg_a: Vec<ModeSet>,
    pub seg_b: Vec<ModeSet>,
}

pub(crate) struct MixPlan {
    pub steps: Vec<MixStep>,
}

/// Mixed decomposition of the two trees: both tree decompositions progress
/// segment by segment; at each mixture node the first `r/2` tensors are
/// exchanged, and at the root the two outputs are summed.
pub fn mixed_decompose(
    spec: &MixSpec,
    weights_a: &WeightSet,
    weights_b: &WeightSet,
    disc: &Discretizers,
    g: BinaryOp,
) -> Result<GridTensorBatch> {
    mixed_decompose_ordered(spec, weights_a, weights_b, disc, g, SegmentOrder::InclusionLex)
}

/// [`mixed_decompose`] with an explicit segment linearization.
pub fn mixed_decompose_ordered(
    spec: &MixSpec,
    weights_a: &WeightSet,
    weights_b: &WeightSet,
    disc: &Discretizers,
    g: BinaryOp,
    order: SegmentOrder,
) -> Result<GridTensorBatch> {
    let r = weights_a.r();
    if weights_b.r() != r {
        return Err(Error::InvalidWeights(
            "both weight sets must share one size constant".into(),
        ));
    }
    if r % 2 != 0 {
        return Err(Error::InvalidWeights(format!(
            "mixed decomposition needs an even size constant, got {r}"
        )));
    }
    weights_a.validate_for(&spec.tree_a)?;
    weights_b.validate_for(&spec.tree_b)?;
    if disc.dim() != r {
        return Err(Error::DimensionMismatch(format!(
            "discretizer dimension {} must equal size constant {r}",
            disc.dim()
        )));
    }

    let mut values_a: BTreeMap<ModeSet, Vec<DenseTensor>> = BTreeMap::new();
    let mut values_b: BTreeMap<ModeSet, Vec<DenseTensor>> = BTreeMap::new();
    let leaf = leaf_tensors(disc, r);
    for j in 1..=spec.n() {
        values_a.insert(ModeSet::singleton(j), leaf.clone());
        values_b.insert(ModeSet::singleton(j), leaf.clone());
    }

    let plan = spec.plan(order);
    for step in &plan.steps {
        for label in &step.seg_a {
            eval_interior(&spec.tree_a, label, weights_a, &mut values_a, g)?;
        }
        for label in &step.seg_b {
            eval_interior(&spec.tree_b, label, weights_b, &mut values_b, g)?;
        }
        let ta = values_a
            .get_mut(&step.node)
            .expect("step node evaluated in tree A");
        let tb = values_b
            .get_mut(&step.node)
            .expect("step node evaluated in tree B");
        for gamma in 0..r / 2 {
            std::mem::swap(&mut ta[gamma], &mut tb[gamma]);
        }
    }

    let root = ModeSet::full(spec.n());
    let out_a = values_a.remove(&root).expect("root evaluated");
    let out_b = values_b.remove(&root).expect("root evaluated");
    let tensors = out_a
        .iter()
        .zip(&out_b)
        .map(|(a, b)| a.add(b))
        .collect::<Result<Vec<_>>>()?;
    GridTensorBatch::new(tensors)
}

/// A mode tree stitched from segments of the two trees of a [`MixSpec`],
/// with each interior node tagged by its source tree.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridTree {
    tree: ModeTree,
    source: BTreeMap<ModeSet, SourceTree>,
}

impl HybridTree {
    pub fn tree(&self) -> &ModeTree {
        &self.tree
    }

    pub fn source(&self) -> &BTreeMap<ModeSet, SourceTree> {
        &self.source
    }

    pub fn source_of(&self, label: &ModeSet) -> Option<SourceTree> {
        self.source.get(label).copied()
    }

    /// Canonical form used for deduplication: structure plus source tags.
    fn canonical_key(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for label in self.tree.interior_labels() {
            let (cl, cr) = self.tree.children_of(&label).expect("interior");
            let tag = match self.source[&label] {
                SourceTree::A => 'a',
                SourceTree::B => 'b',
            };
            parts.push(format!("{label}=>{cl}|{cr}:{tag}"));
        }
        parts.join(";")
    }

    /// Check that this hybrid is one the spec can generate: rebuilding from
    /// its own per-step choices must reproduce it exactly.
    pub fn validate_against(&self, spec: &MixSpec) -> Result<()> {
        let plan = spec.plan(SegmentOrder::InclusionLex);
        let choices: Vec<SourceTree> = plan
            .steps
            .iter()
            .map(|step| {
                self.source_of(&step.node).ok_or_else(|| {
                    Error::InvalidHybrid(format!("missing source tag at {}", step.node))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rebuilt = build_hybrid(spec, &choices)?;
        if rebuilt != *self {
            return Err(Error::InvalidHybrid(
                "hybrid does not match any choice sequence of the spec".into(),
            ));
        }
        Ok(())
    }
}

/// Build the hybrid tree for one choice sequence (one source tree per
/// mixture node and one for the root segment, in inclusion order).
pub fn build_hybrid(spec: &MixSpec, choices: &[SourceTree]) -> Result<HybridTree> {
    let plan = spec.plan(SegmentOrder::InclusionLex);
    if choices.len() != plan.steps.len() {
        return Err(Error::InvalidHybrid(format!(
            "need {} choices, got {}",
            plan.steps.len(),
            choices.len()
        )));
    }
    let mut children_map: BTreeMap<ModeSet, (ModeSet, ModeSet)> = BTreeMap::new();
    let mut source: BTreeMap<ModeSet, SourceTree> = BTreeMap::new();
    for (step, &choice) in plan.steps.iter().zip(choices) {
        let (tree, seg) = match choice {
            SourceTree::A => (&spec.tree_a, &step.seg_a),
            SourceTree::B => (&spec.tree_b, &step.seg_b),
        };
        for label in seg {
            let (cl, cr) = tree.children_of(label).expect("segment node interior");
            children_map.insert(label.clone(), (cl.clone(), cr.clone()));
            source.insert(label.clone(), choice);
        }
    }

    let n = spec.n();
    let mut raw: Vec<(ModeSet, Option<(usize, usize)>)> = Vec::new();
    fn add(
        label: &ModeSet,
        children_map: &BTreeMap<ModeSet, (ModeSet, ModeSet)>,
        raw: &mut Vec<(ModeSet, Option<(usize, usize)>)>,
    ) -> Result<usize> {
        let id = raw.len();
        raw.push((label.clone(), None));
        if label.len() > 1 {
            let (cl, cr) = children_map.get(label).ok_or_else(|| {
                Error::InvalidHybrid(format!("no segment covers interior node {label}"))
            })?;
            let (cl, cr) = (cl.clone(), cr.clone());
            let lid = add(&cl, children_map, raw)?;
            let rid = add(&cr, children_map, raw)?;
            raw[id].1 = Some((lid, rid));
        }
        Ok(id)
    }
    let root = add(&ModeSet::full(n), &children_map, &mut raw)?;
    let tree = ModeTree::from_parts(n, raw, root)
        .map_err(|e| Error::InvalidHybrid(format!("choice sequence yields invalid tree: {e}")))?;

    // keep only tags of nodes that actually ended up in the tree
    source.retain(|label, _| tree.is_interior(label));
    Ok(HybridTree { tree, source })
}

/// All hybrid trees of the spec: one per choice sequence over the mixture
/// nodes plus the root, traversed in inclusion order, with duplicates
/// (identical tree and source tags) removed. Order is deterministic.
pub fn enumerate_hybrids(spec: &MixSpec) -> Result<Vec<HybridTree>> {
    let plan = spec.plan(SegmentOrder::InclusionLex);
    let m = plan.steps.len();
    if m > 20 {
        return Err(Error::Unsupported(format!(
            "enumeration over 2^{m} choice sequences is not practical"
        )));
    }
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for bits in 0..(1u64 << m) {
        let choices: Vec<SourceTree> = (0..m)
            .map(|i| {
                if bits >> i & 1 == 0 {
                    SourceTree::A
                } else {
                    SourceTree::B
                }
            })
            .collect();
        let hybrid = build_hybrid(spec, &choices)?;
        if seen.insert(hybrid.canonical_key()) {
            out.push(hybrid);
        }
    }
    Ok(out)
}

/// Number of choice sequences the spec induces (before deduplication).
pub fn choice_sequence_count(spec: &MixSpec) -> u64 {
    1u64 << (spec.mixture_nodes.len() + 1)
}

/// Weight assignment under which the mixed decomposition of the spec, run at
/// size constant `2 * r_h` with zero-padded discretizers, reproduces the
/// hybrid's tree decomposition (size constant `r_h`) on its first `r_h`
/// output tensors.
///
/// Every weight of hybrid node `nu` lands in slot `gamma + r_h` of `nu` in
/// its source tree, occupying the upper coordinates when the corresponding
/// child has the same source tag and the lower coordinates otherwise; when
/// the parent's tag differs, the node's low and high slots are swapped so
/// the computed tensors travel through the exchange.
pub fn hybrid_to_mixed_weights(
    spec: &MixSpec,
    hybrid: &HybridTree,
    hybrid_weights: &WeightSet,
) -> Result<(WeightSet, WeightSet)> {
    hybrid.validate_against(spec)?;
    hybrid_weights.validate_for(hybrid.tree())?;
    let r_h = hybrid_weights.r();
    let r_mix = 2 * r_h;
    let kind = hybrid_weights.kind().unwrap_or(ScalarKind::Rational);
    let mut weights_a = WeightSet::zeros(&spec.tree_a, r_mix, kind);
    let mut weights_b = WeightSet::zeros(&spec.tree_b, r_mix, kind);

    let embed = |v: &[Scalar], same_tag: bool| -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(kind); r_mix];
        let offset = if same_tag { r_h } else { 0 };
        out[offset..offset + r_h].clone_from_slice(v);
        out
    };

    for label in hybrid.tree().interior_labels() {
        let tag = hybrid.source_of(&label).expect("interior node tagged");
        let (cl, cr) = hybrid.tree().children_of(&label).expect("interior");
        let (cl, cr) = (cl.clone(), cr.clone());
        let hv = hybrid_weights.node(&label).expect("validated");
        let same_left = hybrid.source_of(&cl) == Some(tag);
        let same_right = hybrid.source_of(&cr) == Some(tag);
        let parent_tag = hybrid
            .tree()
            .parent_of(&label)
            .and_then(|p| hybrid.source_of(p));

        let target = match tag {
            SourceTree::A => &mut weights_a,
            SourceTree::B => &mut weights_b,
        };
        let tw = target.node_mut(&label).expect("zero-initialized");
        for gamma in 0..r_h {
            tw.a_left[gamma + r_h] = embed(&hv.a_left[gamma], same_left);
            tw.a_right[gamma + r_h] = embed(&hv.a_right[gamma], same_right);
        }
        if parent_tag != Some(tag) {
            for gamma in 0..r_h {
                tw.a_left.swap(gamma, gamma + r_h);
                tw.a_right.swap(gamma, gamma + r_h);
            }
        }
    }
    Ok((weights_a, weights_b))
}

/// Explicit weight setting achieving the generic lower bound on
/// matricization ranks (used as the hard witness by the verification suite;
/// assumes identity discretizers and the product operator downstream).
#[derive(Clone, Debug)]
pub struct LowerBoundWitness {
    pub weights: WeightSet,
    /// Set when the tilings of the index set and its complement are exactly
    /// the root's two children; the achievable rank is 1 in that case.
    pub degenerate: bool,
}

pub fn lower_bound_weights(
    tree: &ModeTree,
    index_set: &ModeSet,
    r: usize,
) -> Result<LowerBoundWitness> {
    if r == 0 {
        return Err(Error::InvalidWeights("size constant must be >= 1".into()));
    }
    if index_set.is_empty() || index_set.len() >= tree.n() {
        return Err(Error::InvalidIndexSet(
            "index set must be a proper non-empty subset".into(),
        ));
    }
    let kind = ScalarKind::Rational;
    let th = tiling(tree, index_set)?;
    let thc = tiling(tree, &index_set.complement_in(tree.n()))?;

    let in_tiling = |label: &ModeSet| th.contains(label) || thc.contains(label);
    let in_tiling_or_descendant = |label: &ModeSet| {
        th.members()
            .iter()
            .chain(thc.members())
            .any(|member| label.is_subset_of(member))
    };
    let pair_parent = |label: &ModeSet| match tree.children_of(label) {
        Some((cl, cr)) => {
            (th.contains(cl) && thc.contains(cr)) || (th.contains(cr) && thc.contains(cl))
        }
        None => false,
    };

    let basis = |gamma: usize| -> Vec<Scalar> {
        (0..r)
            .map(|i| if i == gamma { Scalar::one(kind) } else { Scalar::zero(kind) })
            .collect()
    };
    let ones = || vec![Scalar::one(kind); r];
    let zeros = || vec![Scalar::zero(kind); r];

    let root_label = ModeSet::full(tree.n());
    let degenerate = pair_parent(&root_label);

    let mut nodes = BTreeMap::new();
    for label in tree.interior_labels() {
        let nw = if in_tiling_or_descendant(&label) || pair_parent(&label) {
            NodeWeights {
                a_left: (0..r).map(basis).collect(),
                a_right: (0..r).map(basis).collect(),
            }
        } else if label == root_label {
            NodeWeights {
                a_left: vec![basis(0); r],
                a_right: vec![basis(0); r],
            }
        } else {
            let (cl, cr) = tree.children_of(&label).expect("interior");
            let left_first = if pair_parent(cl) { ones() } else { basis(0) };
            let right_first = if pair_parent(cr) { ones() } else { basis(0) };
            let mut a_left = vec![left_first];
            let mut a_right = vec![right_first];
            a_left.extend((1..r).map(|_| zeros()));
            a_right.extend((1..r).map(|_| zeros()));
            NodeWeights { a_left, a_right }
        };
        let _ = in_tiling; // member check is subsumed by the subset test
        nodes.insert(label, nw);
    }
    Ok(LowerBoundWitness {
        weights: WeightSet::new(r, nodes)?,
        degenerate,
    })
}

/// Distribution for [`random_weights`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightDistribution {
    /// Uniform integers in `[-bound, bound]`, stored as exact rationals.
    IntegerUniform { bound: i64 },
    /// Uniform floats in `[0, 1)`.
    UnitFloat,
}

/// Deterministic random weights for a tree (fixed seed, fixed output).
pub fn random_weights(
    tree: &ModeTree,
    r: usize,
    seed: u64,
    dist: WeightDistribution,
) -> Result<WeightSet> {
    if r == 0 {
        return Err(Error::InvalidWeights("size constant must be >= 1".into()));
    }
    if let WeightDistribution::IntegerUniform { bound } = dist {
        if bound < 1 {
            return Err(Error::InvalidWeights("bound must be >= 1".into()));
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha12Rng| match dist {
        WeightDistribution::IntegerUniform { bound } => {
            Scalar::from_int(rng.gen_range(-bound..=bound))
        }
        WeightDistribution::UnitFloat => Scalar::F64(rng.gen::<f64>()),
    };
    let mut nodes = BTreeMap::new();
    for label in tree.interior_labels() {
        let side = |rng: &mut ChaCha12Rng| -> Vec<Vec<Scalar>> {
            (0..r)
                .map(|_| (0..r).map(|_| sample(rng)).collect())
                .collect()
        };
        let a_left = side(&mut rng);
        let a_right = side(&mut rng);
        nodes.insert(label, NodeWeights { a_left, a_right });
    }
    WeightSet::new(r, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_baseline_tree, build_even_odd_swap_tree};

    fn ms(v: &[usize]) -> ModeSet {
        ModeSet::new(v.to_vec()).unwrap()
    }

    fn simple_weights_n2(a_left: &[i64], a_right: &[i64]) -> WeightSet {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            ms(&[1, 2]),
            NodeWeights {
                a_left: vec![a_left.iter().map(|&v| Scalar::from_int(v)).collect()],
                a_right: vec![a_right.iter().map(|&v| Scalar::from_int(v)).collect()],
            },
        );
        WeightSet::new(1, nodes).unwrap()
    }

    #[test]
    fn smallest_tree_decomposition() {
        // r=1, M=2, v = ([1], [2]), aI = [3], aII = [1], product operator
        let tree = build_baseline_tree(2).unwrap();
        let weights = simple_weights_n2(&[3], &[1]);
        let disc = Discretizers::new(vec![
            vec![Scalar::from_int(1)],
            vec![Scalar::from_int(2)],
        ])
        .unwrap();
        let batch = tree_decompose(&tree, &weights, &disc, BinaryOp::Product).unwrap();
        assert_eq!(batch.count(), 1);
        let expected = DenseTensor::from_ints(vec![2, 2], &[3, 6, 6, 12]).unwrap();
        assert_eq!(batch.get(0), &expected);
    }

    #[test]
    fn zero_weights_give_zero_tensors() {
        let tree = build_baseline_tree(4).unwrap();
        let weights = WeightSet::zeros(&tree, 2, ScalarKind::Rational);
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        for g in [BinaryOp::Product, BinaryOp::ReluSum] {
            let batch = tree_decompose(&tree, &weights, &disc, g).unwrap();
            assert!(batch.tensors().iter().all(DenseTensor::is_zero));
        }
    }

    #[test]
    fn decompose_rejects_mismatched_weights() {
        let tree = build_baseline_tree(4).unwrap();
        let other = build_baseline_tree(8).unwrap();
        let weights = WeightSet::zeros(&other, 2, ScalarKind::Rational);
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        assert!(tree_decompose(&tree, &weights, &disc, BinaryOp::Product).is_err());
        let weights = WeightSet::zeros(&tree, 2, ScalarKind::Rational);
        let disc = Discretizers::identity(3, ScalarKind::Rational);
        assert!(tree_decompose(&tree, &weights, &disc, BinaryOp::Product).is_err());
    }

    #[test]
    fn empty_mixture_sums_the_two_decompositions() {
        let tree_a = build_baseline_tree(4).unwrap();
        let tree_b = build_even_odd_swap_tree(4).unwrap();
        let spec = MixSpec::new(tree_a.clone(), tree_b.clone(), vec![]).unwrap();
        let wa = random_weights(&tree_a, 2, 5, WeightDistribution::IntegerUniform { bound: 3 })
            .unwrap();
        let wb = random_weights(&tree_b, 2, 6, WeightDistribution::IntegerUniform { bound: 3 })
            .unwrap();
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        let mixed = mixed_decompose(&spec, &wa, &wb, &disc, BinaryOp::Product).unwrap();
        let a = tree_decompose(&tree_a, &wa, &disc, BinaryOp::Product).unwrap();
        let b = tree_decompose(&tree_b, &wb, &disc, BinaryOp::Product).unwrap();
        for y in 0..2 {
            let sum = a.get(y).add(b.get(y)).unwrap();
            assert_eq!(mixed.get(y), &sum);
        }
    }

    #[test]
    fn zero_branch_contributes_nothing() {
        let tree_a = build_baseline_tree(4).unwrap();
        let tree_b = build_even_odd_swap_tree(4).unwrap();
        let spec = MixSpec::new(tree_a.clone(), tree_b.clone(), vec![]).unwrap();
        let wa = random_weights(&tree_a, 2, 7, WeightDistribution::IntegerUniform { bound: 3 })
            .unwrap();
        let wb = WeightSet::zeros(&tree_b, 2, ScalarKind::Rational);
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        let mixed = mixed_decompose(&spec, &wa, &wb, &disc, BinaryOp::Product).unwrap();
        let a = tree_decompose(&tree_a, &wa, &disc, BinaryOp::Product).unwrap();
        assert_eq!(mixed.tensors(), a.tensors());
    }

    #[test]
    fn mixed_rejects_odd_size_constant() {
        let tree_a = build_baseline_tree(4).unwrap();
        let tree_b = build_even_odd_swap_tree(4).unwrap();
        let spec = MixSpec::new(tree_a.clone(), tree_b.clone(), vec![]).unwrap();
        let wa = WeightSet::zeros(&tree_a, 3, ScalarKind::Rational);
        let wb = WeightSet::zeros(&tree_b, 3, ScalarKind::Rational);
        let disc = Discretizers::identity(3, ScalarKind::Rational);
        assert!(matches!(
            mixed_decompose(&spec, &wa, &wb, &disc, BinaryOp::Product),
            Err(Error::InvalidWeights(_))
        ));
    }

    #[test]
    fn mix_spec_rejects_root_and_non_shared_nodes() {
        let tree_a = build_baseline_tree(4).unwrap();
        let tree_b = build_even_odd_swap_tree(4).unwrap();
        assert!(MixSpec::new(tree_a.clone(), tree_b.clone(), vec![ModeSet::full(4)]).is_err());
        // {1,2} is interior to the baseline tree but not to the swapped tree
        assert!(MixSpec::new(tree_a.clone(), tree_b.clone(), vec![ms(&[1, 2])]).is_err());
    }

    #[test]
    fn empty_mixture_enumerates_the_two_pure_trees() {
        let tree_a = build_baseline_tree(4).unwrap();
        let tree_b = build_even_odd_swap_tree(4).unwrap();
        let spec = MixSpec::new(tree_a.clone(), tree_b.clone(), vec![]).unwrap();
        let hybrids = enumerate_hybrids(&spec).unwrap();
        assert_eq!(hybrids.len(), 2);
        assert_eq!(hybrids[0].tree(), &tree_a);
        assert!(hybrids[0]
            .source()
            .values()
            .all(|&tag| tag == SourceTree::A));
        assert_eq!(hybrids[1].tree(), &tree_b);
        assert!(hybrids[1]
            .source()
            .values()
            .all(|&tag| tag == SourceTree::B));
    }

    #[test]
    fn quarter_mixture_spec_yields_32_sequences() {
        let tree_a = build_baseline_tree(16).unwrap();
        let tree_b = build_even_odd_swap_tree(16).unwrap();
        let quarters = tree_a.labels_at_depth(2);
        let spec = MixSpec::new(tree_a, tree_b, quarters).unwrap();
        assert_eq!(choice_sequence_count(&spec), 32);
        let hybrids = enumerate_hybrids(&spec).unwrap();
        assert_eq!(hybrids.len(), 32); // all distinct for this pair of trees
        for h in &hybrids {
            h.validate_against(&spec).unwrap();
        }
    }

    #[test]
    fn weight_embedding_places_lower_coordinates_for_cross_tree_children() {
        // node nu={1,2} with tag A, parent tag A, first child a leaf
        // (leaf tags differ by convention): hybrid weight [5, 7] lands in
        // slot gamma + r_mix/2 = 3 occupying the lower coordinates.
        let tree_a = build_baseline_tree(4).unwrap();
        let tree_b = build_even_odd_swap_tree(4).unwrap();
        let spec = MixSpec::new(tree_a.clone(), tree_b, vec![]).unwrap();
        let hybrids = enumerate_hybrids(&spec).unwrap();
        let hybrid = &hybrids[0]; // pure tree A
        let mut hw = WeightSet::zeros(&tree_a, 2, ScalarKind::Rational);
        let nw = hw.node_mut(&ms(&[1, 2])).unwrap();
        nw.a_left[0] = vec![Scalar::from_int(5), Scalar::from_int(7)];
        let (wa, _wb) = hybrid_to_mixed_weights(&spec, hybrid, &hw).unwrap();
        let got = &wa.node(&ms(&[1, 2])).unwrap().a_left[2]; // slot 3, 1-based
        let expected: Vec<Scalar> = [5, 7, 0, 0].iter().map(|&v| Scalar::from_int(v)).collect();
        assert_eq!(got, &expected);
    }

    #[test]
    fn random_weights_are_deterministic_and_bounded() {
        let tree = build_baseline_tree(8).unwrap();
        let a = random_weights(&tree, 2, 42, WeightDistribution::IntegerUniform { bound: 1 })
            .unwrap();
        let b = random_weights(&tree, 2, 42, WeightDistribution::IntegerUniform { bound: 1 })
            .unwrap();
        assert_eq!(a, b);
        for nw in a.nodes().values() {
            for v in nw.a_left.iter().chain(&nw.a_right) {
                for s in v {
                    let f = s.to_f64();
                    assert!((-1.0..=1.0).contains(&f));
                }
            }
        }
        assert!(random_weights(&tree, 2, 1, WeightDistribution::IntegerUniform { bound: 0 })
            .is_err());
    }

    #[test]
    fn different_seeds_give_different_grid_tensors() {
        let tree = build_baseline_tree(8).unwrap();
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        let w1 = random_weights(&tree, 2, 1, WeightDistribution::IntegerUniform { bound: 5 })
            .unwrap();
        let w2 = random_weights(&tree, 2, 2, WeightDistribution::IntegerUniform { bound: 5 })
            .unwrap();
        let b1 = tree_decompose(&tree, &w1, &disc, BinaryOp::Product).unwrap();
        let b2 = tree_decompose(&tree, &w2, &disc, BinaryOp::Product).unwrap();
        assert!(b1.first_difference(&b2, 2).is_some());
    }
}
