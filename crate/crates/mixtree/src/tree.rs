//! Full binary mode trees over `{1, ..., N}`, the concrete tree families
//! generated by bit-order splits, tilings of index sets, and the
//! combinatorial matricization-rank bounds they induce.

use std::collections::BTreeMap;

use num::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeSet;

/// Node of a [`ModeTree`]. `children` is `None` exactly for leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub label: ModeSet,
    pub children: Option<(usize, usize)>,
    pub parent: Option<usize>,
    pub depth: usize,
}

/// A full binary tree whose nodes are subsets of `{1, ..., n}`: exactly `n`
/// leaves labeled by the singletons, root labeled by the full set, and every
/// interior label the disjoint union of its children's labels. Nodes are
/// identified by their labels; ids are positions in the node list.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTree {
    n: usize,
    nodes: Vec<TreeNode>,
    root: usize,
    by_label: BTreeMap<ModeSet, usize>,
}

impl ModeTree {
    /// Build from raw parts and validate every invariant.
    pub fn from_parts(
        n: usize,
        raw: Vec<(ModeSet, Option<(usize, usize)>)>,
        root: usize,
    ) -> Result<Self> {
        if raw.is_empty() || root >= raw.len() {
            return Err(Error::InvalidTree("empty node list or bad root id".into()));
        }
        let mut nodes: Vec<TreeNode> = raw
            .into_iter()
            .map(|(label, children)| TreeNode {
                label,
                children,
                parent: None,
                depth: 0,
            })
            .collect();

        if nodes[root].label != ModeSet::full(n) {
            return Err(Error::InvalidTree(format!(
                "root must be labeled 1..{n}, got {}",
                nodes[root].label
            )));
        }

        // assign parents/depths by traversal from the root; detect sharing
        let mut stack = vec![root];
        let mut visited = vec![false; nodes.len()];
        visited[root] = true;
        while let Some(id) = stack.pop() {
            if let Some((l, r)) = nodes[id].children {
                if l >= nodes.len() || r >= nodes.len() || l == r {
                    return Err(Error::InvalidTree(format!("bad child ids at node {id}")));
                }
                for c in [l, r] {
                    if visited[c] {
                        return Err(Error::InvalidTree(format!(
                            "node {c} reachable twice; not a tree"
                        )));
                    }
                    visited[c] = true;
                    nodes[c].parent = Some(id);
                    nodes[c].depth = nodes[id].depth + 1;
                    stack.push(c);
                }
                let (ll, rl) = (nodes[l].label.clone(), nodes[r].label.clone());
                let union = ll.disjoint_union(&rl).map_err(|_| {
                    Error::InvalidTree(format!(
                        "children of {} are not disjoint",
                        nodes[id].label
                    ))
                })?;
                if union != nodes[id].label {
                    return Err(Error::InvalidTree(format!(
                        "label {} is not the union of its children {} and {}",
                        nodes[id].label, ll, rl
                    )));
                }
            } else if nodes[id].label.len() != 1 {
                return Err(Error::InvalidTree(format!(
                    "leaf labeled {} is not a singleton",
                    nodes[id].label
                )));
            }
        }
        if visited.iter().any(|v| !v) {
            return Err(Error::InvalidTree("unreachable nodes present".into()));
        }

        let mut by_label = BTreeMap::new();
        let mut leaf_count = 0;
        for (id, node) in nodes.iter().enumerate() {
            if by_label.insert(node.label.clone(), id).is_some() {
                return Err(Error::InvalidTree(format!(
                    "duplicate node label {}",
                    node.label
                )));
            }
            if node.children.is_none() {
                leaf_count += 1;
            }
        }
        if leaf_count != n {
            return Err(Error::InvalidTree(format!(
                "expected {n} leaves, found {leaf_count}"
            )));
        }
        for j in 1..=n {
            if !by_label.contains_key(&ModeSet::singleton(j)) {
                return Err(Error::InvalidTree(format!("missing leaf {{{j}}}")));
            }
        }

        Ok(ModeTree {
            n,
            nodes,
            root,
            by_label,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root_id(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    pub fn id_of(&self, label: &ModeSet) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn contains_label(&self, label: &ModeSet) -> bool {
        self.by_label.contains_key(label)
    }

    pub fn node_by_label(&self, label: &ModeSet) -> Option<&TreeNode> {
        self.id_of(label).map(|id| &self.nodes[id])
    }

    pub fn is_interior(&self, label: &ModeSet) -> bool {
        self.node_by_label(label)
            .is_some_and(|n| n.children.is_some())
    }

    /// Child labels (first, second) of an interior node.
    pub fn children_of(&self, label: &ModeSet) -> Option<(&ModeSet, &ModeSet)> {
        let node = self.node_by_label(label)?;
        let (l, r) = node.children?;
        Some((&self.nodes[l].label, &self.nodes[r].label))
    }

    pub fn parent_of(&self, label: &ModeSet) -> Option<&ModeSet> {
        let node = self.node_by_label(label)?;
        node.parent.map(|p| &self.nodes[p].label)
    }

    pub fn depth_of(&self, label: &ModeSet) -> Option<usize> {
        self.node_by_label(label).map(|n| n.depth)
    }

    /// Interior-node labels in inclusion order (children before parents,
    /// lexicographic tie-breaking).
    pub fn interior_labels(&self) -> Vec<ModeSet> {
        let mut labels: Vec<ModeSet> = self
            .nodes
            .iter()
            .filter(|n| n.children.is_some())
            .map(|n| n.label.clone())
            .collect();
        labels.sort_by_key(ModeSet::inclusion_key);
        labels
    }

    /// Labels of all nodes at the given depth.
    pub fn labels_at_depth(&self, depth: usize) -> Vec<ModeSet> {
        let mut labels: Vec<ModeSet> = self
            .nodes
            .iter()
            .filter(|n| n.depth == depth)
            .map(|n| n.label.clone())
            .collect();
        labels.sort_by_key(ModeSet::inclusion_key);
        labels
    }

    pub fn raw_parts(&self) -> (usize, Vec<(ModeSet, Option<(usize, usize)>)>, usize) {
        (
            self.n,
            self.nodes
                .iter()
                .map(|n| (n.label.clone(), n.children))
                .collect(),
            self.root,
        )
    }
}

fn log2_exact(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidTree(format!("{n} is not a power of two")));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Perfect binary mode tree over `{1, ..., n}` where the depth-`d` split
/// separates elements by bit `bit_order[d]` of `element - 1`. Every tree
/// family used here is an instance of this factory.
pub fn build_bit_split_tree(n: usize, bit_order: &[usize]) -> Result<ModeTree> {
    let levels = log2_exact(n)?;
    if bit_order.len() != levels {
        return Err(Error::InvalidTree(format!(
            "bit order must have {levels} entries, got {}",
            bit_order.len()
        )));
    }
    let mut seen = vec![false; levels];
    for &b in bit_order {
        if b >= levels || seen[b] {
            return Err(Error::InvalidTree(format!(
                "bit order is not a permutation of 0..{levels}: {bit_order:?}"
            )));
        }
        seen[b] = true;
    }

    let mut raw: Vec<(ModeSet, Option<(usize, usize)>)> = Vec::with_capacity(2 * n - 1);

    fn rec(
        elems: Vec<usize>,
        depth: usize,
        bit_order: &[usize],
        raw: &mut Vec<(ModeSet, Option<(usize, usize)>)>,
    ) -> usize {
        let id = raw.len();
        let label = ModeSet::new(elems.clone()).expect("elements sorted");
        raw.push((label, None));
        if elems.len() > 1 {
            let bit = bit_order[depth];
            let (low, high): (Vec<usize>, Vec<usize>) =
                elems.into_iter().partition(|e| (e - 1) >> bit & 1 == 0);
            let lid = rec(low, depth + 1, bit_order, raw);
            let rid = rec(high, depth + 1, bit_order, raw);
            raw[id].1 = Some((lid, rid));
        }
        id
    }
    let root = rec((1..=n).collect(), 0, bit_order, &mut raw);
    ModeTree::from_parts(n, raw, root)
}

/// Bit order producing contiguous blocks at every depth (split by the high
/// bit first); layer-`l` dilation of the matching network is `2^(l-1)`.
pub fn baseline_bit_order(levels: usize) -> Vec<usize> {
    (0..levels).map(|d| levels - 1 - d).collect()
}

/// Baseline bit order with each consecutive group of `k` entries reversed.
pub fn k_group_bit_order(levels: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || levels % k != 0 {
        return Err(Error::InvalidTree(format!(
            "group size {k} must divide the number of levels {levels}"
        )));
    }
    let mut order = baseline_bit_order(levels);
    for block in order.chunks_mut(k) {
        block.reverse();
    }
    Ok(order)
}

/// Tree of the baseline architecture: depth-`l` nodes are the contiguous
/// blocks of size `n / 2^l`.
pub fn build_baseline_tree(n: usize) -> Result<ModeTree> {
    let levels = log2_exact(n)?;
    build_bit_split_tree(n, &baseline_bit_order(levels))
}

/// Tree of the even/odd dilation swap; requires an even number of levels.
/// Odd-depth splits put the first and third quadrants of the parent in one
/// child.
pub fn build_even_odd_swap_tree(n: usize) -> Result<ModeTree> {
    let levels = log2_exact(n)?;
    if levels % 2 != 0 {
        return Err(Error::InvalidTree(format!(
            "even/odd swap needs an even number of levels, got {levels}"
        )));
    }
    build_bit_split_tree(n, &k_group_bit_order(levels, 2)?)
}

/// Tree of the k-layer group dilation swap; `k` must divide `log2(n)`.
pub fn build_k_group_swap_tree(n: usize, k: usize) -> Result<ModeTree> {
    let levels = log2_exact(n)?;
    build_bit_split_tree(n, &k_group_bit_order(levels, k)?)
}

/// The unique maximal-node cover of an index set by tree nodes: a node is a
/// member iff its label is contained in the set and its parent's label is
/// not (the root counts as maximal).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tiling {
    nodes: Vec<ModeSet>,
}

impl Tiling {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn members(&self) -> &[ModeSet] {
        &self.nodes
    }

    pub fn contains(&self, label: &ModeSet) -> bool {
        self.nodes.binary_search(label).is_ok()
    }

    /// Union of all members.
    pub fn covered(&self) -> ModeSet {
        let mut all: Vec<usize> = self.nodes.iter().flat_map(|m| m.iter()).collect();
        all.sort_unstable();
        ModeSet::new(all).expect("members are disjoint")
    }
}

pub fn tiling(tree: &ModeTree, index_set: &ModeSet) -> Result<Tiling> {
    if index_set.is_empty() {
        return Err(Error::InvalidIndexSet("tiling of the empty set".into()));
    }
    if let Some(max) = index_set.max() {
        if max > tree.n() {
            return Err(Error::InvalidIndexSet(format!(
                "index {max} out of range for n={}",
                tree.n()
            )));
        }
    }
    let mut nodes = Vec::new();
    for node in tree.nodes() {
        if !node.label.is_subset_of(index_set) {
            continue;
        }
        let maximal = match node.parent {
            None => true,
            Some(p) => !tree.node(p).label.is_subset_of(index_set),
        };
        if maximal {
            nodes.push(node.label.clone());
        }
    }
    nodes.sort();
    let t = Tiling { nodes };
    debug_assert_eq!(t.covered(), *index_set);
    Ok(t)
}

/// Positions (1-based) inside the sorted enumeration of `node_label` taken
/// by elements of `index_set`.
pub fn reduce_index_set(index_set: &ModeSet, node_label: &ModeSet) -> ModeSet {
    let positions: Vec<usize> = node_label
        .iter()
        .enumerate()
        .filter(|(_, elem)| index_set.contains(*elem))
        .map(|(pos, _)| pos + 1)
        .collect();
    ModeSet::new(positions).expect("positions strictly increase")
}

fn check_proper_subset(n: usize, index_set: &ModeSet) -> Result<()> {
    if index_set.is_empty() || index_set.len() >= n {
        return Err(Error::InvalidIndexSet(format!(
            "index set must be a proper non-empty subset of 1..{n}"
        )));
    }
    if index_set.max().is_some_and(|m| m > n) {
        return Err(Error::InvalidIndexSet(format!(
            "index out of range for n={n}"
        )));
    }
    Ok(())
}

/// Number of pairs `(a, b)` with `a` in the tiling of the index set, `b` in
/// the tiling of its complement, `a` and `b` siblings of depth exceeding 1.
pub fn sibling_pairs_count(tree: &ModeTree, index_set: &ModeSet) -> Result<usize> {
    check_proper_subset(tree.n(), index_set)?;
    let th = tiling(tree, index_set)?;
    let thc = tiling(tree, &index_set.complement_in(tree.n()))?;
    let mut count = 0;
    for member in th.members() {
        let node = tree.node_by_label(member).expect("tiling member in tree");
        if node.depth <= 1 {
            continue;
        }
        let parent = node.parent.expect("depth > 1 node has a parent");
        let (l, r) = tree.node(parent).children.expect("parent is interior");
        let sibling = if tree.node(l).label == *member { r } else { l };
        if thc.contains(&tree.node(sibling).label) {
            count += 1;
        }
    }
    Ok(count)
}

/// Matricization-rank bounds induced by the tree and index set at size
/// constant `r`: the upper bound is `r^min(|tiling|, |complement tiling|)`,
/// the generic lower bound is `r` to the sibling-pair count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub r: u64,
    pub tiling_size: usize,
    pub complement_tiling_size: usize,
    pub upper_exponent: usize,
    pub lower_exponent: usize,
    #[serde(with = "crate::io::biguint_string")]
    pub upper: BigUint,
    #[serde(with = "crate::io::biguint_string")]
    pub lower: BigUint,
}

impl BoundsReport {
    /// Whether a measured rank respects the upper bound.
    pub fn admits(&self, rank: usize) -> bool {
        BigUint::from(rank) <= self.upper
    }

    /// Whether a measured rank meets the generic lower bound.
    pub fn meets_lower(&self, rank: usize) -> bool {
        BigUint::from(rank) >= self.lower
    }
}

pub fn rank_bounds(tree: &ModeTree, index_set: &ModeSet, r: u64) -> Result<BoundsReport> {
    if r < 1 {
        return Err(Error::InvalidWeights("size constant must be >= 1".into()));
    }
    check_proper_subset(tree.n(), index_set)?;
    let th = tiling(tree, index_set)?;
    let thc = tiling(tree, &index_set.complement_in(tree.n()))?;
    let upper_exponent = th.size().min(thc.size());
    let lower_exponent = sibling_pairs_count(tree, index_set)?;
    let base = BigUint::from(r);
    Ok(BoundsReport {
        r,
        tiling_size: th.size(),
        complement_tiling_size: thc.size(),
        upper_exponent,
        lower_exponent,
        upper: base.pow(upper_exponent as u32),
        lower: base.pow(lower_exponent as u32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: &[usize]) -> ModeSet {
        ModeSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn smallest_tree() {
        let t = build_bit_split_tree(2, &[0]).unwrap();
        assert_eq!(t.n(), 2);
        assert_eq!(t.node(t.root_id()).label, ms(&[1, 2]));
        let (l, r) = t.children_of(&ms(&[1, 2])).unwrap();
        assert_eq!((l, r), (&ms(&[1]), &ms(&[2])));
        assert_eq!(build_baseline_tree(2).unwrap(), t);
    }

    #[test]
    fn baseline_depth_blocks() {
        let t = build_baseline_tree(8).unwrap();
        assert_eq!(
            t.labels_at_depth(1),
            vec![ms(&[1, 2, 3, 4]), ms(&[5, 6, 7, 8])]
        );
        assert_eq!(
            t.labels_at_depth(2),
            vec![ms(&[1, 2]), ms(&[3, 4]), ms(&[5, 6]), ms(&[7, 8])]
        );
    }

    #[test]
    fn bit_split_low_bit_first() {
        let t = build_bit_split_tree(4, &[1, 0]).unwrap();
        assert_eq!(t.labels_at_depth(1), vec![ms(&[1, 2]), ms(&[3, 4])]);
        let t = build_bit_split_tree(4, &[0, 1]).unwrap();
        assert_eq!(t.labels_at_depth(1), vec![ms(&[1, 3]), ms(&[2, 4])]);
    }

    #[test]
    fn even_odd_swap_nodes() {
        let t = build_even_odd_swap_tree(16).unwrap();
        assert_eq!(
            t.labels_at_depth(1),
            vec![
                ms(&[1, 2, 3, 4, 9, 10, 11, 12]),
                ms(&[5, 6, 7, 8, 13, 14, 15, 16])
            ]
        );
        // even depths reproduce the contiguous blocks
        assert_eq!(
            t.labels_at_depth(2),
            vec![
                ms(&[1, 2, 3, 4]),
                ms(&[5, 6, 7, 8]),
                ms(&[9, 10, 11, 12]),
                ms(&[13, 14, 15, 16])
            ]
        );
        assert!(build_even_odd_swap_tree(8).is_err());
    }

    #[test]
    fn k_group_swap_special_cases() {
        assert_eq!(
            build_k_group_swap_tree(16, 1).unwrap(),
            build_baseline_tree(16).unwrap()
        );
        assert_eq!(
            build_k_group_swap_tree(16, 2).unwrap(),
            build_even_odd_swap_tree(16).unwrap()
        );
        assert!(build_k_group_swap_tree(16, 3).is_err());
        assert!(build_bit_split_tree(6, &[0, 1]).is_err());
    }

    #[test]
    fn tiling_examples() {
        let t = build_baseline_tree(8).unwrap();
        let th = tiling(&t, &ms(&[1, 2, 5])).unwrap();
        assert_eq!(th.members(), &[ms(&[1, 2]), ms(&[5])]);

        let th = tiling(&t, &ModeSet::full(8)).unwrap();
        assert_eq!(th.members(), &[ModeSet::full(8)]);

        let t16 = build_baseline_tree(16).unwrap();
        let exemplar = ms(&[1, 3, 5, 7, 9, 10, 13, 14]);
        let th = tiling(&t16, &exemplar).unwrap();
        assert_eq!(th.size(), 6); // n/4 singletons + n/8 pairs
        assert_eq!(
            th.members(),
            &[
                ms(&[1]),
                ms(&[3]),
                ms(&[5]),
                ms(&[7]),
                ms(&[9, 10]),
                ms(&[13, 14])
            ]
        );
        assert!(tiling(&t, &ModeSet::empty()).is_err());
    }

    #[test]
    fn reduction_examples() {
        let nu = ms(&[5, 6, 7, 8]);
        assert_eq!(reduce_index_set(&ms(&[1, 3, 5, 7]), &nu), ms(&[1, 3]));
        assert_eq!(reduce_index_set(&ModeSet::full(16), &nu), ModeSet::full(4));
        assert_eq!(
            reduce_index_set(&ms(&[1, 2]), &nu),
            ModeSet::empty()
        );
    }

    #[test]
    fn sibling_pair_examples() {
        let t16 = build_baseline_tree(16).unwrap();
        let exemplar = ms(&[1, 3, 5, 7, 9, 10, 13, 14]);
        assert_eq!(sibling_pairs_count(&t16, &exemplar).unwrap(), 6);

        // index set = left child of the root: the only sibling pair has depth 1
        assert_eq!(
            sibling_pairs_count(&t16, &ms(&[1, 2, 3, 4, 5, 6, 7, 8])).unwrap(),
            0
        );

        let t8 = build_baseline_tree(8).unwrap();
        assert_eq!(sibling_pairs_count(&t8, &ms(&[1, 3, 5, 7])).unwrap(), 4);
    }

    #[test]
    fn bounds_examples() {
        let t16 = build_baseline_tree(16).unwrap();
        let exemplar = ms(&[1, 3, 5, 7, 9, 10, 13, 14]);
        let b = rank_bounds(&t16, &exemplar, 2).unwrap();
        assert_eq!(b.upper, BigUint::from(64u32));
        assert_eq!(b.lower, BigUint::from(64u32));

        let swap16 = build_even_odd_swap_tree(16).unwrap();
        let b = rank_bounds(&swap16, &exemplar, 2).unwrap();
        assert_eq!(b.upper, BigUint::from(64u32));
        assert_eq!(b.lower, BigUint::from(64u32));

        let t8 = build_baseline_tree(8).unwrap();
        let b = rank_bounds(&t8, &ms(&[1, 3, 5, 7]), 2).unwrap();
        assert_eq!(b.lower, BigUint::from(16u32));
        assert_eq!(b.upper, BigUint::from(16u32));

        assert!(rank_bounds(&t8, &ModeSet::full(8), 2).is_err());
        assert!(rank_bounds(&t8, &ModeSet::empty(), 2).is_err());
    }

    #[test]
    fn rejects_malformed_trees() {
        // interior label not the union of children
        let raw = vec![
            (ms(&[1, 2]), Some((1, 2))),
            (ms(&[1]), None),
            (ms(&[1]), None),
        ];
        assert!(ModeTree::from_parts(2, raw, 0).is_err());

        // leaf with non-singleton label
        let raw = vec![(ms(&[1, 2]), None)];
        assert!(ModeTree::from_parts(2, raw, 0).is_err());
    }
}
