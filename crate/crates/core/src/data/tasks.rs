use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::graph::{Dataset, ProblemInstance};

/// Draws a balanced binary task from a labeled dataset: `n` points split as
/// evenly as possible between `class_a` (label 0) and `class_b` (label 1),
/// of which `n_labeled` are labeled, again balanced. The remaining points
/// are unlabeled and keep their true label as the evaluation target.
pub fn make_binary_task(
    dataset: &Dataset,
    class_a: u32,
    class_b: u32,
    n: usize,
    n_labeled: usize,
    seed: u64,
) -> Result<ProblemInstance, DataError> {
    if class_a == class_b {
        return Err(DataError::InvalidParameter("the two classes must differ".into()));
    }
    check_sizes(n, n_labeled)?;
    let classes = dataset
        .classes()
        .ok_or_else(|| DataError::InvalidParameter("dataset has no class labels".into()))?;
    let pool = |c: u32| -> Vec<usize> {
        (0..classes.len()).filter(|&i| classes[i] == c).collect()
    };
    let (pool_a, pool_b) = (pool(class_a), pool(class_b));
    let (need_a, need_b) = (n - n / 2, n / 2);
    if pool_a.len() < need_a || pool_b.len() < need_b {
        return Err(DataError::Insufficient(format!(
            "need {need_a} of class {class_a} and {need_b} of class {class_b}, have {} and {}",
            pool_a.len(),
            pool_b.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(usize, u8)> = sample(&mut rng, pool_a.len(), need_a)
        .iter()
        .map(|i| (pool_a[i], 0))
        .chain(sample(&mut rng, pool_b.len(), need_b).iter().map(|i| (pool_b[i], 1)))
        .collect();
    chosen.sort_unstable();
    let indices: Vec<usize> = chosen.iter().map(|c| c.0).collect();
    let targets: Vec<u8> = chosen.iter().map(|c| c.1).collect();
    split_balanced(dataset.subset(&indices)?, &targets, n_labeled, &mut rng)
}

fn check_sizes(n: usize, n_labeled: usize) -> Result<(), DataError> {
    if n_labeled < 2 || n_labeled >= n {
        return Err(DataError::InvalidParameter(format!(
            "need 2 ≤ |L| < n, got |L| = {n_labeled}, n = {n}"
        )));
    }
    Ok(())
}

/// Labels `ceil(n_labeled/2)` points of class 0 and the rest from class 1.
fn split_balanced<R: Rng>(
    dataset: Dataset,
    targets: &[u8],
    n_labeled: usize,
    rng: &mut R,
) -> Result<ProblemInstance, DataError> {
    let mut is_labeled = vec![false; targets.len()];
    for (class, count) in [(0u8, n_labeled - n_labeled / 2), (1u8, n_labeled / 2)] {
        let members: Vec<usize> = (0..targets.len()).filter(|&i| targets[i] == class).collect();
        if members.len() <= count {
            return Err(DataError::Insufficient(format!(
                "class {class} has {} points, cannot label {count} and keep one unlabeled",
                members.len()
            )));
        }
        for i in sample(rng, members.len(), count).iter() {
            is_labeled[members[i]] = true;
        }
    }
    let (labeled, unlabeled): (Vec<usize>, Vec<usize>) =
        (0..targets.len()).partition(|&i| is_labeled[i]);
    let labels = labeled.iter().map(|&i| targets[i]).collect();
    let held_out = unlabeled.iter().map(|&i| targets[i]).collect();
    Ok(ProblemInstance::new(dataset, labeled, labels, unlabeled, held_out)?)
}

/// Two isotropic Gaussian clusters, class 0 centered at the origin and
/// class 1 at `separation` along the first axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise: f64,
    /// Labeled points; `None` means `max(2, n/10)`.
    pub labeled: Option<usize>,
}

impl BlobSpec {
    pub fn new(n: usize, separation: f64, noise: f64) -> Self {
        Self {
            n,
            dim: 2,
            separation,
            noise,
            labeled: None,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<ProblemInstance, DataError> {
        if self.n < 4 || self.dim == 0 {
            return Err(DataError::InvalidParameter(format!(
                "blobs need n ≥ 4 and dim ≥ 1, got n = {}, dim = {}",
                self.n, self.dim
            )));
        }
        let normal = Normal::new(0.0, self.noise).map_err(|e| {
            DataError::InvalidParameter(format!("noise {}: {e}", self.noise))
        })?;
        let n_labeled = self.labeled.unwrap_or((self.n / 10).max(2));
        check_sizes(self.n, n_labeled)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets: Vec<u8> = (0..self.n).map(|i| (2 * i >= self.n) as u8).collect();
        let mut values = Vec::with_capacity(self.n * self.dim);
        for &t in &targets {
            for j in 0..self.dim {
                let center = if j == 0 { f64::from(t) * self.separation } else { 0.0 };
                values.push(center + normal.sample(&mut rng));
            }
        }
        let classes = targets.iter().map(|&t| u32::from(t)).collect();
        let ds = Dataset::from_flat(self.dim, values)?.with_classes(classes)?;
        split_balanced(ds, &targets, n_labeled, &mut rng)
    }
}

/// Planar two-blob instance with `max(2, n/10)` balanced labels.
pub fn synth_blobs(
    n: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> Result<ProblemInstance, DataError> {
    BlobSpec::new(n, separation, noise).generate(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_mutual_knn};
    use crate::labelers::{dual_loss, harmonic_exact};

    fn digits() -> Dataset {
        // Classes 0..3, 50 points each, class c near (c, c).
        let rows = (0..200).map(|i| vec![(i % 4) as f64, (i % 4) as f64 + 0.01 * i as f64]).collect();
        Dataset::from_rows(rows)
            .unwrap()
            .with_classes((0..200).map(|i| (i % 4) as u32).collect())
            .unwrap()
    }

    #[test]
    fn binary_task_sizes_and_balance() {
        let ds = digits();
        let inst = make_binary_task(&ds, 1, 3, 100, 10, 7).unwrap();
        assert_eq!(inst.n(), 100);
        assert_eq!(inst.unlabeled.len(), 90);
        assert_eq!(inst.labels.iter().filter(|&&y| y == 0).count(), 5);
        let classes = inst.dataset.classes().unwrap();
        for (&i, &y) in inst.labeled.iter().zip(&inst.labels) {
            assert_eq!(classes[i], if y == 0 { 1 } else { 3 });
        }
        for (&i, &y) in inst.unlabeled.iter().zip(&inst.targets) {
            assert_eq!(classes[i], if y == 0 { 1 } else { 3 });
        }
        assert_eq!(inst, make_binary_task(&ds, 1, 3, 100, 10, 7).unwrap());
        assert_ne!(inst, make_binary_task(&ds, 1, 3, 100, 10, 8).unwrap());
    }

    #[test]
    fn binary_task_errors() {
        let ds = digits();
        assert!(matches!(make_binary_task(&ds, 0, 1, 102, 10, 0), Err(DataError::Insufficient(_))));
        assert!(make_binary_task(&ds, 0, 0, 20, 4, 0).is_err());
        assert!(make_binary_task(&ds, 0, 1, 20, 20, 0).is_err());
        let unlabeled = Dataset::from_rows(vec![vec![0.0]; 10]).unwrap();
        assert!(make_binary_task(&unlabeled, 0, 1, 4, 2, 0).is_err());
    }

    #[test]
    fn blobs_are_deterministic_and_balanced() {
        let a = synth_blobs(40, 3.0, 0.5, 11).unwrap();
        assert_eq!(a, synth_blobs(40, 3.0, 0.5, 11).unwrap());
        assert_eq!(a.labeled.len(), 4);
        assert_eq!(a.labels.iter().filter(|&&y| y == 1).count(), 2);
        assert!(synth_blobs(3, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn well_separated_blobs_are_learnable() {
        let inst = synth_blobs(60, 12.0, 0.5, 2).unwrap();
        let g = build_complete(&inst.dataset).unwrap();
        let f = harmonic_exact(&g, &inst, 2.0).unwrap();
        assert_eq!(dual_loss(&inst, &f.f), 0.0);
    }

    #[test]
    fn coincident_blobs_are_chance() {
        let g_loss = |seed| {
            let inst = synth_blobs(200, 0.0, 1.0, seed).unwrap();
            let g = build_mutual_knn(&inst.dataset, 6).unwrap();
            let f = harmonic_exact(&g, &inst, 1.0).unwrap();
            dual_loss(&inst, &f.f)
        };
        let mean = (0..5).map(g_loss).sum::<f64>() / 5.0;
        assert!((mean - 0.5).abs() <= 0.1, "{mean}");
    }
}
