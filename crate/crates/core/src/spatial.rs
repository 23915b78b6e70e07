//! Exact k-nearest-neighbor and radius search over a static kd-tree, plus the
//! nearest-neighbor correspondence between two clouds.
//!
//! Results are ordered by squared Euclidean distance, ties broken by the lower
//! point index, so every query is deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;

#[inline]
pub(crate) fn squared_distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// One query hit: index into the indexed cloud and Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl From<Candidate> for Neighbor {
    fn from(c: Candidate) -> Self {
        Neighbor {
            index: c.index,
            distance: c.d2.sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable kd-tree over the positions of one cloud.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(cloud.positions())
    }

    pub fn from_points(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut index = SpatialIndex {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        index.root = index.build_node(0, points.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            points[i][axis].total_cmp(&points[j][axis]).then(i.cmp(&j))
        });
        let value = self.points[self.order[mid]][axis];
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes.push(Node::Split {
            axis,
            value,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// The `min(k, n)` nearest points to `query`, nearest first.
    pub fn knn(&self, query: &Point3, k: usize) -> Vec<Neighbor> {
        if k == 0 {
            return Vec::new();
        }
        let k = k.min(self.points.len());
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(self.root, query, k, &mut heap);
        heap.into_sorted_vec()
            .into_iter()
            .map(Neighbor::from)
            .collect()
    }

    fn knn_visit(&self, node: usize, query: &Point3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    let candidate = Candidate {
                        d2: squared_distance(query, &self.points[index]),
                        index,
                    };
                    if heap.len() < k {
                        heap.push(candidate);
                    } else if heap.peek().is_some_and(|worst| candidate < *worst) {
                        heap.pop();
                        heap.push(candidate);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.knn_visit(near, query, k, heap);
                let must_visit =
                    heap.len() < k || heap.peek().is_some_and(|worst| diff * diff <= worst.d2);
                if must_visit {
                    self.knn_visit(far, query, k, heap);
                }
            }
        }
    }

    /// All points within `radius` of `query` (boundary inclusive), nearest
    /// first.
    pub fn within_radius(&self, query: &Point3, radius: f64) -> Vec<Neighbor> {
        let r2 = radius * radius;
        let mut hits = Vec::new();
        self.radius_visit(self.root, query, r2, &mut hits);
        hits.sort_unstable();
        hits.into_iter().map(Neighbor::from).collect()
    }

    fn radius_visit(&self, node: usize, query: &Point3, r2: f64, hits: &mut Vec<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    let d2 = squared_distance(query, &self.points[index]);
                    if d2 <= r2 {
                        hits.push(Candidate { d2, index });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.radius_visit(near, query, r2, hits);
                if diff * diff <= r2 {
                    self.radius_visit(far, query, r2, hits);
                }
            }
        }
    }

    /// Index of the nearest indexed point, lowest index on ties.
    pub fn nearest(&self, query: &Point3) -> usize {
        self.knn(query, 1)[0].index
    }
}

/// For every point of the evaluated cloud, the index of its nearest point in
/// the reference cloud.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceMap(Vec<usize>);

impl CorrespondenceMap {
    pub fn new(matches: Vec<usize>) -> Self {
        Self(matches)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

pub fn correspondence(evaluated: &PointCloud, reference: &SpatialIndex) -> CorrespondenceMap {
    CorrespondenceMap(
        evaluated
            .positions()
            .par_iter()
            .map(|p| reference.nearest(p))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> SpatialIndex {
        let pts: Vec<Point3> = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
        SpatialIndex::from_points(&pts).unwrap()
    }

    #[test]
    fn single_point_index() {
        let index = SpatialIndex::from_points(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(index.knn(&[9.0, 9.0, 9.0], 5).len(), 1);
        assert_eq!(index.nearest(&[-4.0, 0.0, 0.0]), 0);
        assert_eq!(index.within_radius(&[1.0, 2.0, 3.0], 1e-9)[0].index, 0);
    }

    #[test]
    fn empty_index_is_rejected() {
        assert!(matches!(
            SpatialIndex::from_points(&[]),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn cube_corner_finds_itself() {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push([x, y, z]);
                }
            }
        }
        let index = SpatialIndex::from_points(&pts).unwrap();
        let hit = index.knn(&[0.0; 3], 1);
        assert_eq!(
            hit,
            vec![Neighbor {
                index: 0,
                distance: 0.0
            }]
        );
    }

    #[test]
    fn collinear_knn_and_inclusive_radius() {
        let index = line(4);
        let hits: Vec<usize> = index.knn(&[0.0; 3], 2).iter().map(|n| n.index).collect();
        assert_eq!(hits, vec![0, 1]);
        let hits: Vec<usize> = index
            .within_radius(&[0.0; 3], 1.0)
            .iter()
            .map(|n| n.index)
            .collect();
        assert_eq!(hits, vec![0, 1]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let index =
            SpatialIndex::from_points(&[[2.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
                .unwrap();
        let hits = index.knn(&[0.0; 3], 2);
        assert_eq!(hits[0].index, 1);
        assert_eq!(hits[1].index, 2);
    }

    #[test]
    fn knn_with_k_above_n_returns_everything() {
        let index = line(30);
        let mut all: Vec<usize> = index
            .knn(&[7.3, 0.0, 0.0], 100)
            .iter()
            .map(|n| n.index)
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn correspondence_examples() {
        let a = PointCloud::from_positions(vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let b = PointCloud::from_positions(vec![[0.4, 0.0, 0.0]]).unwrap();
        let index = SpatialIndex::build(&a).unwrap();
        assert_eq!(correspondence(&b, &index).as_slice(), &[0]);
        assert_eq!(correspondence(&a, &index).as_slice(), &[0, 1]);
    }

    #[test]
    fn correspondence_is_direction_dependent() {
        // Both points of A map onto B's single nearby point, but B maps back to only one of them.
        let a =
            PointCloud::from_positions(vec![[0.0; 3], [1.0, 0.0, 0.0], [5.0, 0.0, 0.0]]).unwrap();
        let b = PointCloud::from_positions(vec![[0.6, 0.0, 0.0], [5.0, 0.0, 0.0], [9.0, 0.0, 0.0]])
            .unwrap();
        let ab = correspondence(&a, &SpatialIndex::build(&b).unwrap());
        let ba = correspondence(&b, &SpatialIndex::build(&a).unwrap());
        assert_eq!(ab.as_slice(), &[0, 0, 1]);
        assert_eq!(ba.as_slice(), &[1, 2, 2]);
        let round_trip: Vec<usize> = (0..3).map(|i| ba.get(ab.get(i))).collect();
        assert_ne!(round_trip, vec![0, 1, 2]);
    }
}
