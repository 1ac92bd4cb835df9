//! A static k-d tree for nearest-neighbour queries over point samples.

#[derive(Debug, Clone)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec<f64>>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl KdTree {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let mut tree = KdTree { points, nodes: Vec::new(), root: None };
        tree.root = tree.build(&mut idx, 0);
        tree
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let dim = self.points[idx[0]].len().max(1);
        let axis = depth % dim;
        let mid = idx.len() / 2;
        let pts = &self.points;
        idx.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let point = idx[mid];
        let (lo, rest) = idx.split_at_mut(mid);
        let left = self.build(lo, depth + 1);
        let right = self.build(&mut rest[1..], depth + 1);
        self.nodes.push(Node { point, axis, left, right });
        Some(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Index of and distance to the nearest point.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        self.nearest_excluding(q, usize::MAX)
    }

    /// Nearest point other than the one with index `skip`.
    pub fn nearest_excluding(&self, q: &[f64], skip: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.search(self.root, q, skip, &mut best);
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    fn search(&self, node: Option<usize>, q: &[f64], skip: usize, best: &mut Option<(usize, f64)>) {
        let Some(k) = node else { return };
        let nd = &self.nodes[k];
        let p = &self.points[nd.point];
        if nd.point != skip {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.map_or(true, |(_, b)| d2 < b) {
                *best = Some((nd.point, d2));
            }
        }
        let diff = q[nd.axis] - p[nd.axis];
        let (near, far) = if diff < 0.0 { (nd.left, nd.right) } else { (nd.right, nd.left) };
        self.search(near, q, skip, best);
        if best.map_or(true, |(_, b)| diff * diff < b) {
            self.search(far, q, skip, best);
        }
    }

    /// Median over points of the distance to their nearest other point.
    pub fn median_spacing(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let mut d: Vec<f64> = (0..self.points.len())
            .map(|i| self.nearest_excluding(&self.points[i], i).expect("two points").1)
            .collect();
        d.sort_by(f64::total_cmp);
        Some(d[d.len() / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        let tree = KdTree::new(pts.clone());
        for _ in 0..200 {
            let q = vec![rng.gen::<f64>(), rng.gen(), rng.gen()];
            let brute = pts
                .iter()
                .map(|p| p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!((tree.nearest(&q).unwrap().1 - brute).abs() < 1e-15);
        }
    }

    #[test]
    fn spacing_on_a_grid() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.5]).collect();
        assert_eq!(KdTree::new(pts).median_spacing(), Some(0.5));
        assert!(KdTree::new(vec![]).nearest(&[0.0]).is_none());
    }
}
