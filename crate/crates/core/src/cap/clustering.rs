use crate::ingest::ModelId;
use crate::scalar::Real;

use super::correlation::CorrelationMatrix;

/// Partition of models into clusters, in creation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<T> {
    pub clusters: Vec<Vec<ModelId>>,
    pub phi: T,
}

impl<T: Real> Clustering<T> {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// True when the clusters are non-empty, disjoint and cover exactly `models`.
    pub fn is_partition_of(&self, models: &[ModelId]) -> bool {
        let mut seen: Vec<&ModelId> = self.clusters.iter().flatten().collect();
        let total = seen.len();
        seen.sort();
        seen.dedup();
        let mut expected: Vec<&ModelId> = models.iter().collect();
        expected.sort();
        self.clusters.iter().all(|c| !c.is_empty()) && seen.len() == total && seen == expected
    }
}

/// Greedy threshold clustering.
///
/// Models are visited in ascending id order. A model joins the first cluster
/// (by creation order) whose every member it correlates with above `phi`;
/// otherwise it founds a new cluster.
pub fn cluster_models<T: Real>(corr: &CorrelationMatrix<T>, phi: T) -> Clustering<T> {
    let mut order: Vec<usize> = (0..corr.dim()).collect();
    order.sort_by(|&a, &b| corr.models[a].cmp(&corr.models[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for m in order {
        match groups.iter_mut().find(|g| g.iter().all(|&j| corr.get(m, j) > phi)) {
            Some(g) => g.push(m),
            None => groups.push(vec![m]),
        }
    }
    let clustering = Clustering {
        clusters: groups
            .into_iter()
            .map(|g| g.into_iter().map(|i| corr.models[i].clone()).collect())
            .collect(),
        phi,
    };
    debug_assert!(clustering.is_partition_of(&corr.models));
    clustering
}
