//! Graph-level machinery over the SEM's edge structure: topological sorting,
//! ancestor/descendant closures, and d-separation.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Adjacency view of a DAG (edge `i -> j` iff the SEM weight `b[i][j]` is
/// nonzero).
#[derive(Debug, Clone)]
pub struct DagStructure {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl DagStructure {
    pub fn from_edge_matrix(b: &Matrix) -> DagStructure {
        let p = b.rows();
        let mut parents = vec![Vec::new(); p];
        let mut children = vec![Vec::new(); p];
        for i in 0..p {
            for j in 0..p {
                if b.get(i, j) != 0.0 {
                    children[i].push(j);
                    parents[j].push(i);
                }
            }
        }
        DagStructure { parents, children }
    }

    pub fn num_nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn parents_of(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children_of(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Kahn's algorithm; errors on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let p = self.num_nodes();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: Vec<usize> = (0..p).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(v) = queue.pop() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if order.len() != p {
            return Err(Error::Data("edge matrix contains a cycle".into()));
        }
        Ok(order)
    }

    /// Mask of strict descendants of `node`.
    pub fn descendants_of(&self, node: usize) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if !mask[c] {
                    mask[c] = true;
                    stack.push(c);
                }
            }
        }
        mask
    }

    /// Mask of `seeds` together with all their ancestors.
    fn ancestral_closure(&self, seeds: &BTreeSet<usize>) -> Vec<bool> {
        let mut mask = vec![false; self.num_nodes()];
        let mut stack: Vec<usize> = seeds.iter().cloned().collect();
        for &s in seeds {
            mask[s] = true;
        }
        while let Some(v) = stack.pop() {
            for &parent in &self.parents[v] {
                if !mask[parent] {
                    mask[parent] = true;
                    stack.push(parent);
                }
            }
        }
        mask
    }

    /// True iff every path between `a` and `b` is blocked by `s`.
    ///
    /// Ball-passing reachability: traversal states are (node, direction of
    /// arrival). Arriving against an edge (from a child) lets the trail
    /// continue to parents and children unless the node is conditioned;
    /// arriving along an edge (from a parent) continues to children unless
    /// conditioned, and bounces to parents only at a collider whose
    /// descendant set meets `s`.
    pub fn d_separated(&self, a: usize, b: usize, s: &BTreeSet<usize>) -> bool {
        debug_assert!(a != b && !s.contains(&a) && !s.contains(&b));
        let in_s = |v: usize| s.contains(&v);
        let opens_collider = self.ancestral_closure(s);

        // direction: 0 = arrived from a child (moving up), 1 = from a parent.
        let p = self.num_nodes();
        let mut visited = vec![[false; 2]; p];
        let mut stack: Vec<(usize, usize)> = vec![(a, 0)];
        visited[a][0] = true;

        while let Some((v, dir)) = stack.pop() {
            if v == b {
                return false;
            }
            let push = |stack: &mut Vec<(usize, usize)>,
                            visited: &mut Vec<[bool; 2]>,
                            node: usize,
                            d: usize| {
                if !visited[node][d] {
                    visited[node][d] = true;
                    stack.push((node, d));
                }
            };
            if dir == 0 {
                // Came from a child: pass through unless conditioned.
                if !in_s(v) {
                    for &parent in &self.parents[v] {
                        push(&mut stack, &mut visited, parent, 0);
                    }
                    for &child in &self.children[v] {
                        push(&mut stack, &mut visited, child, 1);
                    }
                }
            } else {
                // Came from a parent.
                if !in_s(v) {
                    for &child in &self.children[v] {
                        push(&mut stack, &mut visited, child, 1);
                    }
                }
                if opens_collider[v] {
                    for &parent in &self.parents[v] {
                        push(&mut stack, &mut visited, parent, 0);
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn structure(p: usize, edges: &[(usize, usize)]) -> DagStructure {
        let mut b = Matrix::zeros(p, p);
        for &(i, j) in edges {
            b.set(i, j, 1.0);
        }
        DagStructure::from_edge_matrix(&b)
    }

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().cloned().collect()
    }

    #[test]
    fn chain_blocked_by_middle() {
        let g = structure(3, &[(0, 1), (1, 2)]);
        assert!(!g.d_separated(0, 2, &set(&[])));
        assert!(g.d_separated(0, 2, &set(&[1])));
    }

    #[test]
    fn fork_blocked_by_root() {
        let g = structure(3, &[(0, 1), (0, 2)]);
        assert!(!g.d_separated(1, 2, &set(&[])));
        assert!(g.d_separated(1, 2, &set(&[0])));
    }

    #[test]
    fn collider_rules() {
        let g = structure(3, &[(0, 2), (1, 2)]);
        assert!(g.d_separated(0, 1, &set(&[])));
        assert!(!g.d_separated(0, 1, &set(&[2])));
    }

    #[test]
    fn collider_opened_by_descendant() {
        // 0 -> 2 <- 1, 2 -> 3: conditioning on 3 opens the collider.
        let g = structure(4, &[(0, 2), (1, 2), (2, 3)]);
        assert!(g.d_separated(0, 1, &set(&[])));
        assert!(!g.d_separated(0, 1, &set(&[3])));
        // Conditioning on the collider and its descendant still open.
        assert!(!g.d_separated(0, 1, &set(&[2, 3])));
    }

    #[test]
    fn chain_through_conditioned_collider_still_blocked_elsewhere() {
        // 0 -> 1 -> 2 <- 3. Conditioning on 2 opens 0..3 association via 1.
        let g = structure(4, &[(0, 1), (1, 2), (3, 2)]);
        assert!(g.d_separated(0, 3, &set(&[])));
        assert!(!g.d_separated(0, 3, &set(&[2])));
        assert!(g.d_separated(0, 3, &set(&[2, 1])));
    }

    #[test]
    fn topological_order_is_valid() {
        let g = structure(5, &[(0, 1), (1, 2), (0, 3), (3, 2), (2, 4)]);
        let order = g.topological_order().unwrap();
        let pos: Vec<usize> = {
            let mut p = vec![0; 5];
            for (idx, &v) in order.iter().enumerate() {
                p[v] = idx;
            }
            p
        };
        for v in 0..5 {
            for &c in g.children_of(v) {
                assert!(pos[v] < pos[c]);
            }
        }
    }

    #[test]
    fn cycle_detected() {
        let g = structure(3, &[(0, 1), (1, 2), (2, 0)]);
        assert!(g.topological_order().is_err());
    }

    #[test]
    fn descendants_mask() {
        let g = structure(4, &[(0, 1), (1, 2)]);
        let d = g.descendants_of(0);
        assert_eq!(d, vec![false, true, true, false]);
    }
}
