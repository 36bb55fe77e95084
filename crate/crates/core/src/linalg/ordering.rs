//! Fill-reducing orderings. All orderings are returned as `perm[new] = old`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::SparseMatrix;

const LEAF_SIZE: usize = 48;

/// Nested dissection for the lexicographic tensor grid `i1 + n1 * i2` whose
/// couplings reach at most `width` indices in each direction.
pub fn tensor_nested_dissection(n1: usize, n2: usize, width: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n1 * n2);
    let w = width.max(1);
    dissect_box(n1, 0, n1, 0, n2, w, &mut out);
    debug_assert_eq!(out.len(), n1 * n2);
    out
}

fn dissect_box(n1: usize, a0: usize, a1: usize, b0: usize, b1: usize, w: usize, out: &mut Vec<usize>) {
    let (la, lb) = (a1 - a0, b1 - b0);
    if la * lb <= LEAF_SIZE || (la <= 2 * w + 1 && lb <= 2 * w + 1) {
        for j in b0..b1 {
            for i in a0..a1 {
                out.push(i + n1 * j);
            }
        }
        return;
    }
    if la >= lb {
        let m = a0 + (la - w) / 2;
        dissect_box(n1, a0, m, b0, b1, w, out);
        dissect_box(n1, m + w, a1, b0, b1, w, out);
        for j in b0..b1 {
            for i in m..m + w {
                out.push(i + n1 * j);
            }
        }
    } else {
        let m = b0 + (lb - w) / 2;
        dissect_box(n1, a0, a1, b0, m, w, out);
        dissect_box(n1, a0, a1, m + w, b1, w, out);
        for j in m..m + w {
            for i in a0..a1 {
                out.push(i + n1 * j);
            }
        }
    }
}

/// Nested dissection on the graph of a structurally symmetric matrix using
/// level-structure separators from pseudo-peripheral nodes.
pub fn nested_dissection(a: &SparseMatrix) -> Vec<usize> {
    let n = a.rows();
    let mut g = Graph { a, label: vec![0u32; n], local: vec![0usize; n], next_label: 1 };
    let mut out = Vec::with_capacity(n);
    // `true` marks a separator to emit as is.
    let mut stack: Vec<(Vec<usize>, bool)> = vec![((0..n).collect(), false)];
    while let Some((set, emit)) = stack.pop() {
        if emit || set.len() <= LEAF_SIZE {
            out.extend_from_slice(&set);
            continue;
        }
        let components = g.components(&set);
        if components.len() > 1 {
            for c in components.into_iter().rev() {
                stack.push((c, false));
            }
            continue;
        }
        let comp = components.into_iter().next().unwrap();
        let start = g.pseudo_peripheral(&comp);
        let (levels, depth) = g.bfs(&comp, start);
        if depth < 3 {
            out.extend_from_slice(&comp);
            continue;
        }
        let mut counts = vec![0usize; depth];
        for &l in &levels {
            counts[l] += 1;
        }
        let lo = (depth * 2 / 5).max(1);
        let hi = (depth * 3 / 5).min(depth - 2).max(lo);
        let sep_level = (lo..=hi).min_by_key(|&l| (counts[l], l)).unwrap();
        let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
        for (&v, &l) in comp.iter().zip(&levels) {
            match l.cmp(&sep_level) {
                core::cmp::Ordering::Less => left.push(v),
                core::cmp::Ordering::Greater => right.push(v),
                core::cmp::Ordering::Equal => sep.push(v),
            }
        }
        stack.push((sep, true));
        stack.push((right, false));
        stack.push((left, false));
    }
    out
}

struct Graph<'a> {
    a: &'a SparseMatrix,
    label: Vec<u32>,
    local: Vec<usize>,
    next_label: u32,
}

impl Graph<'_> {
    fn fresh_label(&mut self) -> u32 {
        self.next_label += 1;
        self.next_label
    }

    /// Connected components of the subgraph induced by `set`.
    fn components(&mut self, set: &[usize]) -> Vec<Vec<usize>> {
        let id = self.fresh_label();
        for &v in set {
            self.label[v] = id;
        }
        let mut comps = Vec::new();
        let mut queue = VecDeque::new();
        for &s in set {
            if self.label[s] != id {
                continue;
            }
            let cid = self.fresh_label();
            self.label[s] = cid;
            let mut comp = vec![s];
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for (u, _) in self.a.row(v) {
                    if self.label[u] == id {
                        self.label[u] = cid;
                        comp.push(u);
                        queue.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            for (k, &v) in comp.iter().enumerate() {
                self.local[v] = k;
            }
            comps.push(comp);
        }
        comps
    }

    /// BFS levels (indexed like `comp`) from `start`, plus the number of levels.
    fn bfs(&self, comp: &[usize], start: usize) -> (Vec<usize>, usize) {
        let cid = self.label[start];
        let mut levels = vec![usize::MAX; comp.len()];
        let mut queue = VecDeque::new();
        levels[self.local[start]] = 0;
        queue.push_back(start);
        let mut depth = 0;
        while let Some(v) = queue.pop_front() {
            let lv = levels[self.local[v]];
            depth = depth.max(lv + 1);
            for (u, _) in self.a.row(v) {
                if self.label[u] == cid && levels[self.local[u]] == usize::MAX {
                    levels[self.local[u]] = lv + 1;
                    queue.push_back(u);
                }
            }
        }
        (levels, depth)
    }

    fn pseudo_peripheral(&self, comp: &[usize]) -> usize {
        let mut start = comp[0];
        let mut depth = 0;
        for _ in 0..8 {
            let (levels, d) = self.bfs(comp, start);
            if d <= depth {
                break;
            }
            depth = d;
            start = comp
                .iter()
                .zip(&levels)
                .filter(|(_, &l)| l + 1 == d)
                .min_by_key(|(&v, _)| (self.a.row_nnz(v), v))
                .map(|(&v, _)| v)
                .unwrap();
        }
        start
    }
}
