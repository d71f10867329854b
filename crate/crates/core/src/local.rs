//! Minimal adjacency abstraction shared by whole graphs and extracted balls,
//! so a local rule is written once and run on either.

pub trait LocalView: Sync {
    fn vertex_count(&self) -> usize;
    fn degree(&self, v: usize) -> usize;
    /// The `i`-th neighbour of `v`, with multiplicity (a loop lists `v` twice).
    fn neighbour(&self, v: usize, i: usize) -> usize;

    fn neighbours(&self, v: usize) -> Neighbours<'_, Self>
    where
        Self: Sized,
    {
        Neighbours { view: self, v, i: 0 }
    }
}

pub struct Neighbours<'a, G: LocalView> {
    view: &'a G,
    v: usize,
    i: usize,
}

impl<G: LocalView> Iterator for Neighbours<'_, G> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.i < self.view.degree(self.v) {
            let w = self.view.neighbour(self.v, self.i);
            self.i += 1;
            Some(w)
        } else {
            None
        }
    }
}

/// Compressed adjacency lists with ragged degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    /// Builds adjacency from an undirected edge list; a loop `(v, v)` adds `v` twice to its own list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut deg = vec![0usize; n];
        for &(a, b) in edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for v in 0..n {
            offsets.push(offsets[v] + deg[v]);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0; offsets[n]];
        for &(a, b) in edges {
            targets[fill[a]] = b;
            fill[a] += 1;
            targets[fill[b]] = a;
            fill[b] += 1;
        }
        Adjacency { offsets, targets }
    }

    /// Relabels vertices by `perm` (old index `v` becomes `perm[v]`) and shuffles nothing else.
    pub fn relabelled(&self, perm: &[usize], mut edge_order: impl FnMut(&mut Vec<usize>)) -> Self {
        let n = self.vertex_count();
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            let mut list: Vec<usize> = self.targets[self.offsets[v]..self.offsets[v + 1]]
                .iter()
                .map(|&w| perm[w])
                .collect();
            edge_order(&mut list);
            lists[perm[v]] = list;
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for list in lists {
            targets.extend(list);
            offsets.push(targets.len());
        }
        Adjacency { offsets, targets }
    }
}

impl LocalView for Adjacency {
    fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    fn neighbour(&self, v: usize, i: usize) -> usize {
        self.targets[self.offsets[v] + i]
    }
}
