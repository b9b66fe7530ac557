//! In-memory labelled datasets, the synthetic blob task and label-skewed
//! client partitioning.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, invalid, Error, Result};
use crate::stats::RngStream;

/// Row-major feature matrix with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
    pub name: String,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize, name: impl Into<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("dataset must hold at least one sample"));
        }
        if dim == 0 || classes < 2 {
            return Err(invalid("datasets need at least one feature and two classes"));
        }
        check_len(labels.len() * dim, features.len(), "feature matrix")?;
        if let Some(bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(invalid(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(Self {
            features,
            labels,
            dim,
            classes,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> (&[f64], usize) {
        (&self.features[i * self.dim..(i + 1) * self.dim], self.labels[i])
    }

    /// A new dataset holding the given rows in order.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(invalid(format!("row {i} out of range")));
            }
            let (x, y) = self.sample(i);
            features.extend_from_slice(x);
            labels.push(y);
        }
        Self::new(features, labels, self.dim, self.classes, name)
    }
}

/// Balanced Gaussian blobs: class `c` is centered at `separation·e_c` with
/// unit-variance isotropic noise. Requires `classes ≤ dim`.
pub fn synth_classification(n: usize, dim: usize, classes: usize, separation: f64, stream: &RngStream) -> Result<Dataset> {
    if classes < 2 {
        return Err(invalid("at least two classes are required"));
    }
    if classes > dim {
        return Err(invalid("blob centers need one feature per class"));
    }
    if n == 0 || !(separation >= 0.0 && separation.is_finite()) {
        return Err(invalid("sample count and separation must be positive"));
    }
    let mut rng = stream.rng();
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    labels.shuffle(&mut rng);
    let mut features = Vec::with_capacity(n * dim);
    for &y in &labels {
        for j in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            features.push(z + if j == y { separation } else { 0.0 });
        }
    }
    Dataset::new(features, labels, dim, classes, format!("blobs-{classes}x{dim}-sep{separation}"))
}

/// Splits `data` into `k` equal shards, each drawing from at most
/// `labels_per_client` labels.
///
/// Client `c` owns `labels_per_client` slots with labels
/// `π((c·L + i) mod C)` for a random relabelling `π`; every slot holds the
/// same number of samples, taken without replacement from its label.
/// Leftover samples are dropped.
pub fn partition_indices(data: &Dataset, k: usize, labels_per_client: usize, stream: &RngStream) -> Result<Vec<Vec<usize>>> {
    let c = data.classes();
    if k == 0 {
        return Err(invalid("at least one client is required"));
    }
    if labels_per_client == 0 || labels_per_client > c {
        return Err(Error::InfeasiblePartition(format!(
            "labels per client must be in 1..={c}, got {labels_per_client}"
        )));
    }
    let mut rng = stream.rng();
    let mut relabel: Vec<usize> = (0..c).collect();
    relabel.shuffle(&mut rng);
    let slot_label = |slot: usize| relabel[slot % c];
    let slots = k * labels_per_client;
    let mut slots_per_label = vec![0usize; c];
    (0..slots).for_each(|s| slots_per_label[slot_label(s)] += 1);

    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &y) in data.labels().iter().enumerate() {
        pools[y].push(i);
    }
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }
    let slot_size = (0..c)
        .filter(|&y| slots_per_label[y] > 0)
        .map(|y| pools[y].len() / slots_per_label[y])
        .min()
        .unwrap_or(0);
    if slot_size == 0 {
        return Err(Error::InfeasiblePartition(format!(
            "not enough samples per label for {k} clients with {labels_per_client} labels each"
        )));
    }
    let mut cursor = vec![0usize; c];
    Ok((0..k)
        .map(|client| {
            let mut shard = Vec::with_capacity(slot_size * labels_per_client);
            for i in 0..labels_per_client {
                let y = slot_label(client * labels_per_client + i);
                shard.extend_from_slice(&pools[y][cursor[y]..cursor[y] + slot_size]);
                cursor[y] += slot_size;
            }
            shard
        })
        .collect())
}

/// [`partition_indices`] materialized as datasets.
pub fn partition_noniid(data: &Dataset, k: usize, labels_per_client: usize, stream: &RngStream) -> Result<Vec<Dataset>> {
    partition_indices(data, k, labels_per_client, stream)?
        .iter()
        .enumerate()
        .map(|(i, idx)| data.subset(idx, format!("{}/client{i}", data.name)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn blobs(n: usize) -> Dataset {
        synth_classification(n, 10, 10, 3.0, &RngStream::root(1)).unwrap()
    }

    #[test]
    fn synthetic_is_deterministic_and_balanced() {
        let a = blobs(1000);
        assert_eq!(a, blobs(1000));
        let counts = (0..10).map(|c| a.labels().iter().filter(|&&y| y == c).count());
        assert!(counts.into_iter().all(|n| n == 100));
        assert!(synth_classification(10, 3, 4, 1.0, &RngStream::root(1)).is_err());
        assert!(synth_classification(10, 3, 1, 1.0, &RngStream::root(1)).is_err());
    }

    #[test]
    fn partition_is_disjoint_and_label_limited() {
        let d = blobs(4000);
        for (k, l) in [(20, 2), (10, 1), (20, 10), (7, 3)] {
            let parts = partition_indices(&d, k, l, &RngStream::root(2)).unwrap();
            assert_eq!(parts.len(), k);
            let size = parts[0].len();
            let mut seen = BTreeSet::new();
            for p in &parts {
                assert_eq!(p.len(), size);
                let labels: BTreeSet<usize> = p.iter().map(|&i| d.labels()[i]).collect();
                assert!(labels.len() <= l);
                for &i in p {
                    assert!(seen.insert(i), "index {i} used twice");
                }
            }
            if (k * l) % 10 == 0 {
                assert!(d.len() - seen.len() < k * l);
            }
        }
    }

    #[test]
    fn single_label_clients() {
        let d = blobs(1000);
        let parts = partition_noniid(&d, 10, 1, &RngStream::root(3)).unwrap();
        let firsts: BTreeSet<usize> = parts.iter().map(|p| p.labels()[0]).collect();
        assert_eq!(firsts.len(), 10);
        assert!(parts.iter().all(|p| p.labels().iter().all(|&y| y == p.labels()[0])));
    }

    #[test]
    fn full_label_sets_cover_everything() {
        let d = blobs(1000);
        let parts = partition_noniid(&d, 5, 10, &RngStream::root(3)).unwrap();
        for p in parts {
            let labels: BTreeSet<usize> = p.labels().iter().copied().collect();
            assert_eq!(labels.len(), 10);
        }
    }

    #[test]
    fn infeasible_partitions() {
        let d = blobs(20);
        assert!(matches!(partition_indices(&d, 30, 2, &RngStream::root(0)), Err(Error::InfeasiblePartition(_))));
        assert!(partition_indices(&d, 2, 0, &RngStream::root(0)).is_err());
        assert!(partition_indices(&d, 2, 11, &RngStream::root(0)).is_err());
    }
}
