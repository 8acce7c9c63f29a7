//! Single-linkage threshold clustering: connected components of the graph
//! joining point pairs at Euclidean distance <= cutoff.

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, DenseMatrix};

use super::ClusterAssignment;

pub(crate) struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so component labels follow first appearance
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Component label per element, numbered by order of first appearance.
    pub fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut label_of_root = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut next = 0;
        for i in 0..n {
            let root = self.find(i);
            if label_of_root[root] == usize::MAX {
                label_of_root[root] = next;
                next += 1;
            }
            labels[i] = label_of_root[root];
        }
        (labels, next)
    }
}

pub fn agglomerative_threshold(points: &DenseMatrix, distance_cutoff: f64) -> Result<ClusterAssignment> {
    if distance_cutoff < 0.0 {
        return Err(Error::invalid(
            "distance_cutoff",
            format!("{distance_cutoff} (must be >= 0)"),
        ));
    }
    let n = points.rows();
    let cutoff2 = distance_cutoff * distance_cutoff;
    let mut sets = DisjointSet::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if squared_distance(points.row(i), points.row(j)) <= cutoff2 {
                sets.union(i, j);
            }
        }
    }
    let (cluster_of, k) = sets.labels();
    Ok(ClusterAssignment {
        cluster_of,
        k,
        centroids: None,
        inertia: None,
    })
}
