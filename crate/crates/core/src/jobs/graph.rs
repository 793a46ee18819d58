use rand::Rng;

use crate::sim::Word;

/// Simple undirected graph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        Graph {
            adj: (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
        }
    }

    /// Erdos-Renyi `G(n, p)`.
    pub fn gnp(n: usize, p: f64, rng: &mut impl Rng) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert_ne!(a, b, "self loop");
        if !self.adj[a].contains(&b) {
            self.adj[a].push(b);
            self.adj[b].push(a);
            self.adj[a].sort_unstable();
            self.adj[b].sort_unstable();
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Node `i`'s input: its adjacency row as a bitmap, 64 nodes per word.
    pub fn to_inputs(&self) -> Vec<Vec<Word>> {
        let words = self.n().div_ceil(64);
        self.adj
            .iter()
            .map(|nbrs| {
                let mut row = vec![0 as Word; words];
                for &u in nbrs {
                    row[u / 64] |= 1 << (u % 64);
                }
                row
            })
            .collect()
    }

    /// Inverse of [`to_inputs`](Self::to_inputs) for one row.
    pub fn row_neighbors(row: &[Word], n: usize, me: usize) -> Vec<usize> {
        (0..n)
            .filter(|&u| u != me && row.get(u / 64).is_some_and(|w| w >> (u % 64) & 1 == 1))
            .collect()
    }

    /// True iff `members` is an independent set that no node can join.
    pub fn is_maximal_independent(&self, members: &[bool]) -> bool {
        (0..self.n()).all(|v| {
            let covered = self.adj[v].iter().any(|&u| members[u]);
            if members[v] {
                !covered
            } else {
                covered
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitmap_round_trip() {
        let mut g = Graph::empty(70);
        g.add_edge(0, 69);
        g.add_edge(3, 64);
        let rows = g.to_inputs();
        assert_eq!(Graph::row_neighbors(&rows[0], 70, 0), vec![69]);
        assert_eq!(Graph::row_neighbors(&rows[64], 70, 64), vec![3]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn mis_oracle() {
        let mut g = Graph::empty(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        assert!(g.is_maximal_independent(&[true, false, true]));
        assert!(g.is_maximal_independent(&[false, true, false]));
        assert!(!g.is_maximal_independent(&[true, false, false]));
        assert!(!g.is_maximal_independent(&[true, true, false]));
    }
}
