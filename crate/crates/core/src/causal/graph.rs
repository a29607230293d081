/// Undirected graph over factored components, stored as a dense symmetric
/// boolean matrix with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    edges: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: vec![false; n * n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Self-loops are ignored.
    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i < self.n && j < self.n, "edge ({i}, {j}) outside {} nodes", self.n);
        if i != j {
            self.edges[i * self.n + j] = true;
            self.edges[j * self.n + i] = true;
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges[i * self.n + j]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Maximal connected groups. Each group is sorted, and groups are ordered by
/// their smallest member.
pub fn connected_components(m: &AdjacencyMatrix) -> Vec<Vec<usize>> {
    let n = m.n_nodes();
    let mut uf = UnionFind::new(n);
    for (i, j) in m.edges() {
        uf.union(i, j);
    }
    let mut slot_of_root = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    // Visiting nodes in increasing order keeps both invariants for free.
    for v in 0..n {
        let r = uf.find(v);
        if slot_of_root[r] == usize::MAX {
            slot_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot_of_root[r]].push(v);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_gives_singletons() {
        let comps = connected_components(&AdjacencyMatrix::new(5));
        assert_eq!(comps, (0..5).map(|i| vec![i]).collect::<Vec<_>>());
    }

    #[test]
    fn path_plus_isolated_nodes() {
        let mut m = AdjacencyMatrix::new(5);
        m.add_edge(0, 1);
        m.add_edge(1, 2);
        assert_eq!(connected_components(&m), vec![vec![0, 1, 2], vec![3], vec![4]]);
    }

    #[test]
    fn complete_graph_is_one_component() {
        let mut m = AdjacencyMatrix::new(6);
        for i in 0..6 {
            for j in 0..6 {
                m.add_edge(i, j);
            }
        }
        assert_eq!(connected_components(&m), vec![(0..6).collect::<Vec<_>>()]);
        assert!((0..6).all(|i| !m.has_edge(i, i)));
    }

    #[test]
    fn union_find_reports_redundant_unions() {
        let mut uf = UnionFind::new(3);
        assert!(uf.union(0, 1));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.find(0), uf.find(1));
        assert_ne!(uf.find(2), uf.find(0));
    }
}
