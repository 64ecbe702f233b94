use std::collections::BTreeMap;

use crate::crystal::{cart_distance, CrystalStructure};

/// Bond cutoff: a default length plus optional per-species-pair overrides (Å).
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffRule {
    pub default: f64,
    pub pairs: BTreeMap<(String, String), f64>,
}

impl Default for CutoffRule {
    fn default() -> Self {
        CutoffRule { default: 3.0, pairs: BTreeMap::new() }
    }
}

impl CutoffRule {
    pub fn uniform(cutoff: f64) -> Self {
        CutoffRule { default: cutoff, pairs: BTreeMap::new() }
    }

    pub fn with_pair(mut self, a: &str, b: &str, cutoff: f64) -> Self {
        let key = if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.pairs.insert(key, cutoff);
        self
    }

    pub fn cutoff(&self, a: &str, b: &str) -> f64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs
            .iter()
            .find(|((x, y), _)| x == key.0 && y == key.1)
            .map_or(self.default, |(_, &c)| c)
    }
}

/// Simple undirected graph: nodes are sites labelled by species, an edge
/// joins two sites whose minimum-image distance is within the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct BondGraph {
    pub species: Vec<String>,
    pub adjacency: Vec<Vec<bool>>,
}

impl BondGraph {
    pub fn from_structure(s: &CrystalStructure, rule: &CutoffRule) -> Self {
        let n = s.len();
        let mut adjacency = vec![vec![false; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&s.sites()[i], &s.sites()[j]);
                let bonded = cart_distance(&s.lattice, a.frac(), b.frac()) <= rule.cutoff(&a.species, &b.species);
                adjacency[i][j] = bonded;
                adjacency[j][i] = bonded;
            }
        }
        BondGraph { species: s.sites().iter().map(|x| x.species.clone()).collect(), adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.species.len()
    }

    pub fn edge_count(&self) -> usize {
        let n = self.node_count();
        (0..n).map(|i| (i + 1..n).filter(|&j| self.adjacency[i][j]).count()).sum()
    }

    fn degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GedResult {
    pub distance: usize,
    /// False when the value is an upper bound from the greedy fallback or a
    /// search that hit its expansion budget.
    pub exact: bool,
}

/// Species classes at or below this size are searched exhaustively.
pub const EXACT_CLASS_LIMIT: usize = 8;
const SEARCH_BUDGET: u64 = 5_000_000;

/// Node-and-edge edit distance under species-preserving node mappings:
/// node insertions/deletions plus the edge symmetric difference.
pub fn graph_edit_distance(g1: &BondGraph, g2: &BondGraph) -> GedResult {
    let mut classes: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, s) in g1.species.iter().enumerate() {
        classes.entry(s).or_default().0.push(i);
    }
    for (j, s) in g2.species.iter().enumerate() {
        classes.entry(s).or_default().1.push(j);
    }
    let node_cost: usize = classes.values().map(|(a, b)| a.len().abs_diff(b.len())).sum();
    let edges = g1.edge_count() + g2.edge_count();

    let mut greedy = greedy_mapping(g1, g2, &classes);
    improve_by_swaps(g1, g2, &mut greedy);
    let greedy_cost = node_cost + edges - 2 * preserved_edges(g1, g2, &greedy);
    let small = classes.values().all(|(a, b)| a.len() <= EXACT_CLASS_LIMIT && b.len() <= EXACT_CLASS_LIMIT);
    if !small {
        return GedResult { distance: greedy_cost, exact: false };
    }

    let mut search = Search {
        g1,
        g2,
        order: (0..g1.node_count()).collect(),
        candidates: g1.species.iter().map(|s| classes[s.as_str()].1.clone()).collect(),
        deletions_left: classes.iter().map(|(k, (a, b))| (k.to_string(), a.len().saturating_sub(b.len()))).collect(),
        mapping: vec![None; g1.node_count()],
        used: vec![false; g2.node_count()],
        best: preserved_edges(g1, g2, &greedy),
        expansions: 0,
        exhausted: false,
    };
    // high-degree nodes first tighten the bound sooner
    search.order.sort_by_key(|&i| std::cmp::Reverse(g1.degree(i)));
    search.run(0, 0);
    GedResult { distance: node_cost + edges - 2 * search.best, exact: !search.exhausted }
}

fn preserved_edges(g1: &BondGraph, g2: &BondGraph, mapping: &[Option<usize>]) -> usize {
    let n = g1.node_count();
    let mut kept = 0;
    for i in 0..n {
        for j in i + 1..n {
            if let (true, Some(a), Some(b)) = (g1.adjacency[i][j], mapping[i], mapping[j]) {
                if g2.adjacency[a][b] {
                    kept += 1;
                }
            }
        }
    }
    kept
}

/// Pairs nodes of each species class in descending-degree order.
fn greedy_mapping(g1: &BondGraph, g2: &BondGraph, classes: &BTreeMap<&str, (Vec<usize>, Vec<usize>)>) -> Vec<Option<usize>> {
    let mut mapping = vec![None; g1.node_count()];
    for (a, b) in classes.values() {
        let mut a = a.clone();
        let mut b = b.clone();
        a.sort_by_key(|&i| (std::cmp::Reverse(g1.degree(i)), i));
        b.sort_by_key(|&j| (std::cmp::Reverse(g2.degree(j)), j));
        for (&i, &j) in a.iter().zip(&b) {
            mapping[i] = Some(j);
        }
    }
    mapping
}

/// Hill-climbs over swaps of two same-species images until no swap keeps
/// more edges.
fn improve_by_swaps(g1: &BondGraph, g2: &BondGraph, mapping: &mut [Option<usize>]) {
    let n = g1.node_count();
    let mut best = preserved_edges(g1, g2, mapping);
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n {
            for j in i + 1..n {
                if g1.species[i] != g1.species[j] || mapping[i] == mapping[j] {
                    continue;
                }
                mapping.swap(i, j);
                let kept = preserved_edges(g1, g2, mapping);
                if kept > best {
                    best = kept;
                    improved = true;
                } else {
                    mapping.swap(i, j);
                }
            }
        }
    }
}

struct Search<'a> {
    g1: &'a BondGraph,
    g2: &'a BondGraph,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
    deletions_left: BTreeMap<String, usize>,
    mapping: Vec<Option<usize>>,
    used: Vec<bool>,
    best: usize,
    expansions: u64,
    exhausted: bool,
}

impl Search<'_> {
    /// Edges from `node` to already placed nodes that the candidate image keeps.
    fn gain(&self, node: usize, image: Option<usize>, depth: usize) -> usize {
        let Some(img) = image else { return 0 };
        self.order[..depth]
            .iter()
            .filter(|&&other| self.g1.adjacency[node][other])
            .filter(|&&other| self.mapping[other].is_some_and(|o| self.g2.adjacency[img][o]))
            .count()
    }

    /// Edges of g1 not yet decided, an upper bound on further gains.
    fn remaining(&self, depth: usize) -> usize {
        let placed: Vec<bool> = {
            let mut v = vec![false; self.g1.node_count()];
            for &i in &self.order[..depth] {
                v[i] = true;
            }
            v
        };
        let n = self.g1.node_count();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.g1.adjacency[i][j] && !(placed[i] && placed[j]))
            .count()
    }

    fn run(&mut self, depth: usize, kept: usize) {
        if self.exhausted {
            return;
        }
        self.expansions += 1;
        if self.expansions > SEARCH_BUDGET {
            self.exhausted = true;
            return;
        }
        if depth == self.order.len() {
            self.best = self.best.max(kept);
            return;
        }
        if kept + self.remaining(depth) <= self.best {
            return;
        }
        let node = self.order[depth];
        let species = self.g1.species[node].clone();
        let cands = self.candidates[node].clone();
        for c in cands {
            if self.used[c] {
                continue;
            }
            let g = self.gain(node, Some(c), depth);
            self.used[c] = true;
            self.mapping[node] = Some(c);
            self.run(depth + 1, kept + g);
            self.mapping[node] = None;
            self.used[c] = false;
        }
        if self.deletions_left[&species] > 0 {
            *self.deletions_left.get_mut(&species).unwrap() -= 1;
            self.run(depth + 1, kept);
            *self.deletions_left.get_mut(&species).unwrap() += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{lattice_from_parameters, AtomSite, CrystalStructure, LatticeParams};
    use crate::fixtures::{mgmno3, random_encodable};

    fn triangle() -> CrystalStructure {
        // pair distances 2.0, ~2.45 and ~2.83 Å in a 10 Å box
        let l = lattice_from_parameters(&LatticeParams::cubic(10.0)).unwrap();
        let sites = vec![
            AtomSite::new("C", [0.0, 0.0, 0.0]),
            AtomSite::new("C", [0.2, 0.0, 0.0]),
            AtomSite::new("C", [0.05, 0.24, 0.0]),
        ];
        CrystalStructure::new(l, sites, "").unwrap()
    }

    #[test]
    fn identical_graphs() {
        let s = mgmno3();
        let g = BondGraph::from_structure(&s, &CutoffRule::default());
        assert!(g.edge_count() > 0);
        assert_eq!(graph_edit_distance(&g, &g), GedResult { distance: 0, exact: true });
    }

    #[test]
    fn one_edge_removed() {
        let s = triangle();
        let full = BondGraph::from_structure(&s, &CutoffRule::uniform(3.0));
        let cut = BondGraph::from_structure(&s, &CutoffRule::uniform(2.6));
        assert_eq!(full.edge_count(), 3);
        assert_eq!(cut.edge_count(), 2);
        assert_eq!(graph_edit_distance(&full, &cut).distance, 1);
    }

    #[test]
    fn node_removed() {
        let s = mgmno3();
        let four = CrystalStructure::new(s.lattice, s.sites()[..4].to_vec(), "").unwrap();
        let rule = CutoffRule::default();
        let g5 = BondGraph::from_structure(&s, &rule);
        let g4 = BondGraph::from_structure(&four, &rule);
        let r = graph_edit_distance(&g5, &g4);
        // one node deletion plus the edges incident to the removed oxygen
        let removed_edges = g5.edge_count() - g4.edge_count();
        assert_eq!(r.distance, 1 + removed_edges);
        assert!(r.distance >= 1);
    }

    #[test]
    fn pair_cutoffs() {
        let rule = CutoffRule::uniform(3.0).with_pair("O", "Mg", 1.0);
        assert_eq!(rule.cutoff("Mg", "O"), 1.0);
        assert_eq!(rule.cutoff("O", "Mn"), 3.0);
    }

    #[test]
    fn relabelled_copy_is_zero() {
        let mut rng = crate::rng::seeded(31);
        let mut checked = 0;
        while checked < 5 {
            let s = random_encodable(&mut rng, &["Ba", "Ti", "O"], 0.15);
            if s.species_counts().values().any(|&n| n > EXACT_CLASS_LIMIT) {
                continue;
            }
            checked += 1;
            let mut sites = s.sites().to_vec();
            sites.reverse();
            let p = CrystalStructure::new(s.lattice, sites, "").unwrap();
            let rule = CutoffRule::uniform(4.0);
            let r = graph_edit_distance(&BondGraph::from_structure(&s, &rule), &BondGraph::from_structure(&p, &rule));
            assert_eq!(r, GedResult { distance: 0, exact: true });
        }
    }

    #[test]
    fn large_classes_fall_back_to_greedy() {
        let mut rng = crate::rng::seeded(5);
        let l = lattice_from_parameters(&LatticeParams::cubic(6.0)).unwrap();
        let mut sites: Vec<AtomSite> = Vec::new();
        while sites.len() < 12 {
            let f = [rand::Rng::random::<f64>(&mut rng), rand::Rng::random(&mut rng), rand::Rng::random(&mut rng)];
            sites.push(AtomSite::new("Si", f));
        }
        let s = CrystalStructure::new(l, sites.clone(), "").unwrap();
        sites.reverse();
        let p = CrystalStructure::new(l, sites, "").unwrap();
        let rule = CutoffRule::uniform(3.0);
        let r = graph_edit_distance(&BondGraph::from_structure(&s, &rule), &BondGraph::from_structure(&p, &rule));
        assert!(!r.exact);
        // reversing the order leaves degree ties that pairwise swaps resolve
        assert_eq!(r.distance, 0);
    }

    #[test]
    fn chain_fallback() {
        let l = lattice_from_parameters(&LatticeParams::cubic(10.0)).unwrap();
        let sites: Vec<AtomSite> = (0..10).map(|i| AtomSite::new("Si", [0.1 * i as f64, 0.0, 0.0])).collect();
        let s = CrystalStructure::new(l, sites, "").unwrap();
        let g = BondGraph::from_structure(&s, &CutoffRule::uniform(1.5));
        let r = graph_edit_distance(&g, &g);
        assert!(!r.exact);
        assert_eq!(r.distance, 0);
    }
}
