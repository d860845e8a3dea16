//! Exact nearest-neighbor queries over a static point set.

use crate::geometry::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static k-d tree. Queries are exact; ties resolve to the lower point index.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: Vec<Vec3>) -> Self {
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let axis = (hi - lo).imax();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Index and squared distance of the closest point.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        let mut best = Best::new(1);
        if !self.nodes.is_empty() {
            self.search(0, q, &mut best);
        }
        best.items.first().map(|&(d, i)| (i, d))
    }

    /// The `k` closest points as `(index, squared distance)`, nearest first.
    pub fn knn(&self, q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        let mut best = Best::new(k);
        if k > 0 && !self.nodes.is_empty() {
            self.search(0, q, &mut best);
        }
        best.items.into_iter().map(|(d, i)| (i, d)).collect()
    }

    fn search(&self, node: usize, q: &Vec3, best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    best.offer((self.points[i] - q).norm_squared(), i);
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.bound() {
                    self.search(far, q, best);
                }
            }
        }
    }
}

struct Best {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Best {
    fn new(k: usize) -> Self {
        Best { k, items: Vec::with_capacity(k + 1) }
    }

    fn bound(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    fn offer(&mut self, d: f64, i: usize) {
        if self.items.len() == self.k && (d, i) >= self.items[self.k - 1] {
            return;
        }
        let pos = self.items.partition_point(|&e| e < (d, i));
        self.items.insert(pos, (d, i));
        self.items.truncate(self.k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_knn(points: &[Vec3], q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p - q).norm_squared(), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.into_iter().take(k).map(|(d, i)| (i, d)).collect()
    }

    #[test]
    fn empty_tree() {
        let t = KdTree::new(vec![]);
        assert!(t.nearest(&Vec3::zeros()).is_none());
        assert!(t.knn(&Vec3::zeros(), 3).is_empty());
    }

    #[test]
    fn coplanar_duplicates() {
        // Many identical coordinates on one axis.
        let pts: Vec<Vec3> = (0..500)
            .map(|i| Vec3::new((i % 7) as f64, (i % 3) as f64, 0.0))
            .collect();
        let t = KdTree::new(pts.clone());
        for q in [Vec3::new(2.2, 1.1, 0.3), Vec3::new(-1.0, 5.0, 0.0)] {
            assert_eq!(t.knn(&q, 10), brute_knn(&pts, &q, 10));
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            raw in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..200),
            q in (-6.0..6.0f64, -6.0..6.0f64, -6.0..6.0f64),
            k in 1usize..12,
        ) {
            let pts: Vec<Vec3> = raw.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
            let q = Vec3::new(q.0, q.1, q.2);
            let t = KdTree::new(pts.clone());
            prop_assert_eq!(t.knn(&q, k), brute_knn(&pts, &q, k));
            prop_assert_eq!(t.nearest(&q), brute_knn(&pts, &q, 1).first().copied());
        }
    }
}
