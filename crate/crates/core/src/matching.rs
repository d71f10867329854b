//! Maximum matching in general simple graphs (Edmonds' blossom algorithm).

use std::collections::VecDeque;

/// Marks a free vertex in a `mate` vector.
pub const UNMATCHED: usize = usize::MAX;
const NONE: usize = UNMATCHED;

/// Maximum matching of the simple graph `adj`, grown from `initial` (which
/// must be a valid matching). Returns `mate`.
pub fn maximum_matching(adj: &[Vec<usize>], initial: Vec<usize>) -> Vec<usize> {
    let n = adj.len();
    let mut b = Blossom {
        adj,
        mate: initial,
        parent: vec![NONE; n],
        base: (0..n).collect(),
        used: vec![false; n],
        in_blossom: vec![false; n],
        queue: VecDeque::new(),
    };
    for root in 0..n {
        if b.mate[root] == NONE {
            if let Some(end) = b.find_path(root) {
                b.augment(end);
            }
        }
    }
    b.mate
}

struct Blossom<'a> {
    adj: &'a [Vec<usize>],
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    queue: VecDeque<usize>,
}

impl Blossom<'_> {
    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.adj.len()];
        loop {
            a = self.base[a];
            seen[a] = true;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    fn find_path(&mut self, root: usize) -> Option<usize> {
        let n = self.adj.len();
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        self.queue.clear();
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for idx in 0..self.adj[v].len() {
                let to = self.adj[v][idx];
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NONE && self.parent[self.mate[to]] != NONE) {
                    let cur = self.lca(v, to);
                    self.in_blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if self.mate[to] == NONE {
                        return Some(to);
                    }
                    let next = self.mate[to];
                    self.used[next] = true;
                    self.queue.push_back(next);
                }
            }
        }
        None
    }

    fn augment(&mut self, mut v: usize) {
        while v != NONE {
            let pv = self.parent[v];
            let ppv = self.mate[pv];
            self.mate[v] = pv;
            self.mate[pv] = v;
            v = ppv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut a = vec![Vec::new(); n];
        for &(u, v) in edges {
            a[u].push(v);
            a[v].push(u);
        }
        a
    }

    fn size(mate: &[usize]) -> usize {
        mate.iter().filter(|&&m| m != NONE).count() / 2
    }

    fn is_matching(a: &[Vec<usize>], mate: &[usize]) -> bool {
        mate.iter()
            .enumerate()
            .all(|(v, &m)| m == NONE || (mate[m] == v && a[v].contains(&m)))
    }

    #[test]
    fn odd_cycle_with_pendant_needs_blossom() {
        // Triangle 0-1-2 with pendants 3 (at 0) and 4 (at 2) and 5 (at 1).
        let a = adj(6, &[(0, 1), (1, 2), (2, 0), (0, 3), (2, 4), (1, 5)]);
        let mut init = vec![NONE; 6];
        init[0] = 1;
        init[1] = 0;
        let mate = maximum_matching(&a, init);
        assert!(is_matching(&a, &mate));
        assert_eq!(size(&mate), 3);
    }

    #[test]
    fn petersen_has_perfect_matching() {
        let mut e = Vec::new();
        for i in 0..5 {
            e.push((i, (i + 1) % 5));
            e.push((i, i + 5));
            e.push((i + 5, (i + 2) % 5 + 5));
        }
        let a = adj(10, &e);
        let mate = maximum_matching(&a, vec![NONE; 10]);
        assert!(is_matching(&a, &mate));
        assert_eq!(size(&mate), 5);
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let n = rng.random_range(1..9usize);
            let mut e = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(0.35) {
                        e.push((u, v));
                    }
                }
            }
            if e.len() > 16 {
                continue;
            }
            let a = adj(n, &e);
            let mate = maximum_matching(&a, vec![NONE; n]);
            assert!(is_matching(&a, &mate));
            // Best matching by trying all edge subsets.
            let mut best = 0;
            for mask in 0u32..1 << e.len() {
                let mut used = 0u32;
                let mut ok = true;
                for (i, &(u, v)) in e.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        if used >> u & 1 == 1 || used >> v & 1 == 1 {
                            ok = false;
                            break;
                        }
                        used |= 1 << u | 1 << v;
                    }
                }
                if ok {
                    best = best.max(mask.count_ones() as usize);
                }
            }
            assert_eq!(size(&mate), best, "{e:?}");
        }
    }
}
