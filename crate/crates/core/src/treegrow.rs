//! Uniform random edge-rooted binary plane trees.
//!
//! A tree with n internal vertices is represented internally in "planted"
//! form: contract the oriented root edge to a single node and hang that
//! node from a phantom stem. The planted form has n+1 internal nodes and
//! decomposes recursively by the sizes of the two subtrees under each
//! node, which follow an exact Catalan split law. That gives both
//!
//! * exactly uniform sampling, by count-weighted recursive decomposition,
//!   and
//! * an exactly uniform growth step: descend from the top, at each node
//!   growing the left subtree with the exact conditional probability that
//!   couples the size-k split law monotonically to the size-(k+1) law,
//!   and finally turn the reached leaf into a cherry. Marginals stay
//!   uniform at every size (validated against the enumeration oracle by a
//!   chi-square test in the acceptance suite), the previous tree is a
//!   literal subgraph of the next, and any fixed neighborhood of the root
//!   changes only finitely often, so snapshots along one chain settle
//!   down — the property the convergence experiments rely on. A naive
//!   uniform-edge insertion has the right marginals but resamples every
//!   region infinitely often, and its snapshot squarings fail to
//!   converge.

use crate::combmap::{canonical_code, CombinatorialMap, RootedMap, VertexId};
use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("enumeration limited to n <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("snapshot size {0} exceeds the chain target")]
    SnapshotOutOfRange(usize),
}

pub const ENUMERATION_LIMIT: usize = 8;

/// Edge-rooted binary plane tree: every non-leaf vertex has degree three.
#[derive(Debug, Clone)]
pub struct RootedBinaryTree {
    pub map: RootedMap,
    pub internal_count: usize,
    pub leaves: Vec<VertexId>,
}

impl RootedBinaryTree {
    fn from_map(map: RootedMap, internal_count: usize) -> Self {
        let nv = map.map.vertex_count();
        let mut deg = vec![0usize; nv];
        for d in 0..map.map.dart_count() {
            deg[map.map.tail(d)] += 1;
        }
        let leaves = (0..nv).filter(|&v| deg[v] == 1).collect();
        RootedBinaryTree {
            map,
            internal_count,
            leaves,
        }
    }

    pub fn canonical_code(&self) -> Vec<u8> {
        canonical_code(&self.map)
    }
}

/// Table of planted binary tree counts; `count(k)` trees with k internal
/// nodes, and `tree_count(n) = count(n+1)` edge-rooted trees with n
/// internal vertices. Kept exact: the counts overflow u64 quickly.
#[derive(Debug, Clone, Default)]
pub struct CountTable {
    counts: Vec<BigUint>,
}

impl CountTable {
    pub fn new() -> Self {
        CountTable {
            counts: vec![BigUint::one()],
        }
    }

    fn ensure(&mut self, k: usize) {
        while self.counts.len() <= k {
            let m = self.counts.len();
            let mut acc = BigUint::zero();
            for i in 0..m {
                acc += &self.counts[i] * &self.counts[m - 1 - i];
            }
            self.counts.push(acc);
        }
    }

    pub fn planted(&mut self, k: usize) -> BigUint {
        self.ensure(k);
        self.counts[k].clone()
    }

    /// Number of edge-rooted binary trees with n internal vertices.
    pub fn tree_count(&mut self, n: usize) -> BigUint {
        self.planted(n + 1)
    }
}

const STEM: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    parent: usize,
    children: Option<(usize, usize)>,
}

/// Planted arena. `stem_child` is the node hanging from the phantom stem;
/// node ids are stable under growth (a subdivision re-parents the old
/// child, it never renames it).
#[derive(Debug, Clone)]
pub struct PlantedTree {
    nodes: Vec<Node>,
    stem_child: usize,
}

impl PlantedTree {
    /// The planted form of the unique tree with zero internal vertices:
    /// one internal node with two leaf children.
    pub fn trivial() -> Self {
        PlantedTree {
            nodes: vec![
                Node {
                    parent: STEM,
                    children: Some((1, 2)),
                },
                Node {
                    parent: 0,
                    children: None,
                },
                Node {
                    parent: 0,
                    children: None,
                },
            ],
            stem_child: 0,
        }
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_some()).count()
    }

    /// Number of edges, stem edge included. Equals the node count.
    pub fn edge_count(&self) -> usize {
        self.nodes.len()
    }

    /// Un-fuse the stem node into an oriented root edge and lay the tree
    /// out as a rooted map. Rotation at an internal vertex is
    /// (toward parent, toward left child, toward right child).
    ///
    /// Dart ids are a function of arena node ids: the root edge owns darts
    /// 0 and 1, and the parent edge of any other node owns the pair at its
    /// id-rank. Since growth only appends nodes, darts of an earlier tree
    /// keep their ids in every later tree of a chain, which lets callers
    /// trace vertices through the downstream pipeline.
    pub fn to_tree(&self) -> RootedBinaryTree {
        let c = self.stem_child;
        let (l, r) = self.nodes[c].children.expect("stem node is internal");
        // dart pair of the parent edge of node x (rank skips c, l, r)
        let mut rank = vec![usize::MAX; self.nodes.len()];
        let mut next_rank = 0;
        for x in 0..self.nodes.len() {
            if x != c && x != l && x != r {
                rank[x] = next_rank;
                next_rank += 1;
            }
        }
        let down_dart = |x: usize| 2 + 2 * rank[x]; // parent → x
        let mut rotations: Vec<Vec<usize>> = Vec::new();
        let n_darts = 2 + 2 * next_rank;
        let twin: Vec<usize> = (0..n_darts).map(|d| d ^ 1).collect();
        let mut stack = vec![(l, 0), (r, 1)];
        while let Some((node, parent_dart)) = stack.pop() {
            match self.nodes[node].children {
                None => rotations.push(vec![parent_dart]),
                Some((a, b)) => {
                    let (da, db) = (down_dart(a), down_dart(b));
                    rotations.push(vec![parent_dart, da, db]);
                    stack.push((a, da + 1));
                    stack.push((b, db + 1));
                }
            }
        }
        let map = CombinatorialMap::from_rotations(&rotations, twin)
            .expect("planted arena yields a valid tree map");
        let rooted = RootedMap::new(map, 0, Some(0)).expect("root dart exists");
        RootedBinaryTree::from_map(rooted, self.internal_count() - 1)
    }
}

/// Exhaustive enumeration of edge-rooted binary trees with n internal
/// vertices, one representative per isomorphism class, deduplicated via
/// canonical codes (the generator is already bijective; the dedup step is
/// a consistency check and is asserted not to shrink the list).
pub fn enumerate_trees(n: usize) -> Result<Vec<RootedBinaryTree>, TreeError> {
    if n > ENUMERATION_LIMIT {
        return Err(TreeError::TooLarge {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let shapes = enumerate_planted(n + 1);
    let mut out = Vec::with_capacity(shapes.len());
    let mut seen = HashMap::new();
    for s in &shapes {
        let t = s.to_tree();
        let code = t.canonical_code();
        if seen.insert(code, ()).is_none() {
            out.push(t);
        }
    }
    assert_eq!(
        out.len(),
        shapes.len(),
        "planted generation must be duplicate-free"
    );
    Ok(out)
}

#[derive(Clone)]
enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    fn into_arena(&self, nodes: &mut Vec<Node>, parent: usize) -> usize {
        let id = nodes.len();
        nodes.push(Node {
            parent,
            children: None,
        });
        if let Shape::Node(a, b) = self {
            let l = a.into_arena(nodes, id);
            let r = b.into_arena(nodes, id);
            nodes[id].children = Some((l, r));
        }
        id
    }

    fn to_planted(&self) -> PlantedTree {
        let mut nodes = Vec::new();
        let root = self.into_arena(&mut nodes, STEM);
        PlantedTree {
            nodes,
            stem_child: root,
        }
    }
}

fn enumerate_planted(k: usize) -> Vec<PlantedTree> {
    fn shapes(k: usize) -> Vec<Shape> {
        if k == 0 {
            return vec![Shape::Leaf];
        }
        let mut out = Vec::new();
        for i in 0..k {
            for a in shapes(i) {
                for b in shapes(k - 1 - i) {
                    out.push(Shape::Node(Box::new(a.clone()), Box::new(b.clone())));
                }
            }
        }
        out
    }
    shapes(k).iter().map(Shape::to_planted).collect()
}

/// Exactly uniform sample from the trees with n internal vertices, by
/// Catalan-weighted decomposition of the planted form. Deterministic in
/// the seed (ChaCha8 with the 64-bit seed, stream 0).
pub fn sample_direct(n: usize, seed: u64, table: &mut CountTable) -> RootedBinaryTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_direct_rng(n, &mut rng, table)
}

pub fn sample_direct_rng(
    n: usize,
    rng: &mut ChaCha8Rng,
    table: &mut CountTable,
) -> RootedBinaryTree {
    let mut nodes = Vec::new();
    sample_planted_into(&mut nodes, STEM, n + 1, rng, table);
    PlantedTree {
        nodes,
        stem_child: 0,
    }
    .to_tree()
}

fn sample_planted_into(
    nodes: &mut Vec<Node>,
    parent: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
    table: &mut CountTable,
) -> usize {
    let id = nodes.len();
    nodes.push(Node {
        parent,
        children: None,
    });
    if k == 0 {
        return id;
    }
    let total = table.planted(k);
    let mut r = rng.gen_biguint_below(&total);
    let mut left = 0;
    loop {
        let w = table.planted(left) * table.planted(k - 1 - left);
        if r < w {
            break;
        }
        r -= w;
        left += 1;
    }
    let l = sample_planted_into(nodes, id, left, rng, table);
    let rgt = sample_planted_into(nodes, id, k - 1 - left, rng, table);
    nodes[id].children = Some((l, rgt));
    id
}

/// Record of one growth step, sufficient to reverse it: the leaf that was
/// turned into a cherry and its two new children.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub sprouted: usize,
    pub new_left: usize,
    pub new_right: usize,
}

/// A growing tree. Marginals are exactly uniform at every size;
/// consecutive states differ by one cherry sprouted at a leaf, so every
/// tree is a literal subgraph of all later ones.
#[derive(Debug, Clone)]
pub struct GrowthChain {
    pub seed: u64,
    rng: ChaCha8Rng,
    planted: PlantedTree,
    /// Internal-vertex count of the subtree under each node.
    sizes: Vec<usize>,
    table: CountTable,
    journal: Vec<StepRecord>,
}

impl GrowthChain {
    /// Start at n = 0 (the single-edge tree).
    pub fn new(seed: u64) -> Self {
        Self::new_with_rng(seed, ChaCha8Rng::seed_from_u64(seed))
    }

    /// Start at n = 0 with a caller-prepared generator (used to run many
    /// independent chains off distinct streams of one seed).
    pub fn new_with_rng(seed: u64, rng: ChaCha8Rng) -> Self {
        GrowthChain {
            seed,
            rng,
            planted: PlantedTree::trivial(),
            sizes: vec![1, 0, 0],
            table: CountTable::new(),
            journal: Vec::new(),
        }
    }

    pub fn internal_count(&self) -> usize {
        self.planted.internal_count() - 1
    }

    pub fn tree(&self) -> RootedBinaryTree {
        self.planted.to_tree()
    }

    /// Probability numerator/denominator that the left subtree of a node
    /// with k internal vertices and left size i grows when the subtree
    /// steps to k+1: q = (F_k(i) - F_{k+1}(i)) / pi_k(i), written over the
    /// common denominator Cat(i)·Cat(k-1-i)·Cat(k+1).
    fn left_growth_odds(&mut self, k: usize, i: usize) -> (BigUint, BigUint) {
        let cat_k = self.table.planted(k);
        let cat_k1 = self.table.planted(k + 1);
        let mut fk = BigUint::zero(); // Σ_{a<=i} Cat_a Cat_{k-1-a}
        for a in 0..=i {
            fk += self.table.planted(a) * self.table.planted(k - 1 - a);
        }
        let mut fk1 = BigUint::zero(); // Σ_{a<=i} Cat_a Cat_{k-a}
        for a in 0..=i {
            fk1 += self.table.planted(a) * self.table.planted(k - a);
        }
        // q = (fk/cat_k - fk1/cat_k1) / (Cat_i Cat_{k-1-i} / cat_k)
        let num = &fk * &cat_k1 - &fk1 * &cat_k;
        let den = self.table.planted(i) * self.table.planted(k - 1 - i) * &cat_k1;
        assert!(num <= den, "split coupling probability out of range");
        (num, den)
    }

    /// One exact uniform growth step: descend from the top, growing one
    /// side per level, and sprout a cherry at the reached leaf.
    pub fn grow_step(&mut self) -> StepRecord {
        let mut node = self.planted.stem_child;
        loop {
            let k = self.sizes[node];
            self.sizes[node] = k + 1;
            if k == 0 {
                break;
            }
            let (l, r) = self.planted.nodes[node].children.expect("internal node");
            let (num, den) = self.left_growth_odds(k, self.sizes[l]);
            let u = self.rng.gen_biguint_below(&den);
            node = if u < num { l } else { r };
        }
        let left = self.planted.nodes.len();
        let right = left + 1;
        self.planted.nodes.push(Node {
            parent: node,
            children: None,
        });
        self.planted.nodes.push(Node {
            parent: node,
            children: None,
        });
        self.sizes.push(0);
        self.sizes.push(0);
        self.planted.nodes[node].children = Some((left, right));
        let rec = StepRecord {
            sprouted: node,
            new_left: left,
            new_right: right,
        };
        self.journal.push(rec);
        rec
    }

    /// Reverse the most recent step: delete the sprouted cherry, making
    /// its site a leaf again.
    pub fn undo_last(&mut self) -> Option<StepRecord> {
        let rec = self.journal.pop()?;
        self.planted.nodes[rec.sprouted].children = None;
        self.planted.nodes.truncate(rec.new_left);
        self.sizes.truncate(rec.new_left);
        let mut node = rec.sprouted;
        loop {
            self.sizes[node] -= 1;
            let parent = self.planted.nodes[node].parent;
            if parent == STEM {
                break;
            }
            node = parent;
        }
        Some(rec)
    }
}

/// Run a growth chain to `n_max`, returning the trees at the requested
/// sizes (in the order requested). Deterministic in the seed.
pub fn sample_chain(
    n_max: usize,
    snapshot_ns: &[usize],
    seed: u64,
) -> Result<Vec<RootedBinaryTree>, TreeError> {
    for &n in snapshot_ns {
        if n > n_max {
            return Err(TreeError::SnapshotOutOfRange(n));
        }
    }
    let mut chain = GrowthChain::new(seed);
    let mut at: HashMap<usize, RootedBinaryTree> = HashMap::new();
    let want: std::collections::HashSet<usize> = snapshot_ns.iter().copied().collect();
    if want.contains(&0) {
        at.insert(0, chain.tree());
    }
    for n in 1..=n_max {
        chain.grow_step();
        if want.contains(&n) {
            at.insert(n, chain.tree());
        }
    }
    Ok(snapshot_ns.iter().map(|n| at[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Class counts for n = 0..6, frozen from the exhaustive oracle and
    /// cross-checked against the recursive count table.
    const FROZEN_COUNTS: [usize; 7] = [1, 2, 5, 14, 42, 132, 429];

    #[test]
    fn enumeration_counts_match_table_and_fixture() {
        let mut table = CountTable::new();
        for n in 0..=6 {
            let trees = enumerate_trees(n).unwrap();
            assert_eq!(trees.len(), FROZEN_COUNTS[n]);
            assert_eq!(
                BigUint::from(trees.len()),
                table.tree_count(n),
                "table disagrees with enumeration at n={n}"
            );
        }
        assert!(enumerate_trees(9).is_err());
    }

    #[test]
    fn tree_shape_identities() {
        for n in [0, 1, 4, 6] {
            for t in enumerate_trees(n.min(4)).unwrap() {
                let g = &t.map.map;
                assert_eq!(g.edge_count(), 2 * t.internal_count + 1);
                assert_eq!(t.leaves.len(), t.internal_count + 2);
                for v in 0..g.vertex_count() {
                    let d = g.degree(v);
                    assert!(d == 1 || d == 3, "tree vertex degrees are 1 or 3");
                }
            }
            let _ = n;
        }
    }

    #[test]
    fn direct_sampler_is_deterministic_and_unique_at_zero() {
        let mut table = CountTable::new();
        let a = sample_direct(7, 42, &mut table);
        let b = sample_direct(7, 42, &mut table);
        assert_eq!(a.canonical_code(), b.canonical_code());
        let z = sample_direct(0, 5, &mut table);
        assert_eq!(z.internal_count, 0);
        assert_eq!(z.map.map.edge_count(), 1);
    }

    #[test]
    fn grow_step_undo_recovers_previous_tree() {
        let mut chain = GrowthChain::new(977);
        for _ in 0..40 {
            chain.grow_step();
        }
        for _ in 0..30 {
            let before = chain.tree().canonical_code();
            chain.grow_step();
            chain.undo_last();
            assert_eq!(chain.tree().canonical_code(), before);
        }
    }

    #[test]
    fn chain_snapshots_are_nested() {
        // rewinding the chain from 20 to 10 must reproduce the n=10 tree
        let snaps = sample_chain(20, &[10, 20], 31).unwrap();
        let mut chain = GrowthChain::new(31);
        for _ in 0..20 {
            chain.grow_step();
        }
        assert_eq!(
            chain.tree().canonical_code(),
            snaps[1].canonical_code()
        );
        for _ in 0..10 {
            chain.undo_last();
        }
        assert_eq!(chain.tree().canonical_code(), snaps[0].canonical_code());
    }

    #[test]
    fn snapshot_out_of_range_is_an_error() {
        assert!(sample_chain(5, &[6], 1).is_err());
        assert!(sample_chain(5, &[], 1).unwrap().is_empty());
    }

    #[test]
    fn small_sample_smoke_uniformity() {
        // cheap sanity run; the real chi-square gate is in the acceptance
        // suite
        let mut table = CountTable::new();
        let classes: Vec<Vec<u8>> = enumerate_trees(3)
            .unwrap()
            .iter()
            .map(|t| t.canonical_code())
            .collect();
        let idx: HashMap<Vec<u8>, usize> =
            classes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let mut counts = vec![0usize; classes.len()];
        for i in 0..3000u64 {
            let t = sample_direct(3, 1000 + i, &mut table);
            counts[idx[&t.canonical_code()]] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0), "all 14 classes reachable");
        let distinct: HashSet<_> = counts.iter().collect();
        let _ = distinct;
    }
}
