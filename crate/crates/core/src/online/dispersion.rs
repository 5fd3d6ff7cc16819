use serde::{Deserialize, Serialize};

use super::OnlineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub eps: f64,
    /// Largest number of instances with a discontinuity inside one window of
    /// width `eps`.
    pub worst_count: usize,
    /// Left end of a window attaining `worst_count`.
    pub worst_window: f64,
}

/// For each window width ε, the maximum over windows `[x, x + ε]` of the
/// number of instances with at least one boundary inside. Empirical only:
/// it reports counts, not a dispersion bound.
pub fn dispersion_diagnostic(
    boundaries: &[Vec<f64>],
    eps_grid: &[f64],
) -> Result<Vec<DispersionRow>, OnlineError> {
    if boundaries.is_empty() {
        return Err(OnlineError::InvalidParameter("need at least one instance".into()));
    }
    let mut events: Vec<(f64, usize)> = boundaries
        .iter()
        .enumerate()
        .flat_map(|(i, b)| b.iter().map(move |&x| (x, i)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps >= 0.0) {
            return Err(OnlineError::InvalidParameter(format!("ε = {eps}")));
        }
        let mut inside = vec![0usize; boundaries.len()];
        let mut distinct = 0;
        let mut best = (0, events.first().map_or(0.0, |e| e.0));
        let mut left = 0;
        for right in 0..events.len() {
            let (x, i) = events[right];
            if inside[i] == 0 {
                distinct += 1;
            }
            inside[i] += 1;
            while events[left].0 < x - eps {
                let j = events[left].1;
                inside[j] -= 1;
                if inside[j] == 0 {
                    distinct -= 1;
                }
                left += 1;
            }
            if distinct > best.0 {
                best = (distinct, events[left].0);
            }
        }
        rows.push(DispersionRow {
            eps,
            worst_count: best.0,
            worst_window: best.1,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shared_boundaries_hit_every_instance() {
        let b = vec![vec![2.0, 4.0]; 7];
        let rows = dispersion_diagnostic(&b, &[0.0, 0.1, 1.0]).unwrap();
        assert!(rows.iter().all(|r| r.worst_count == 7));
        let none = dispersion_diagnostic(&[vec![], vec![]], &[0.5]).unwrap();
        assert_eq!(none[0].worst_count, 0);
    }

    #[test]
    fn single_instance_counts_zero_or_one() {
        for b in [vec![], vec![1.5], vec![1.5, 1.6, 5.0]] {
            for r in dispersion_diagnostic(&[b.clone()], &[0.0, 0.05, 2.0]).unwrap() {
                assert!(r.worst_count <= 1);
                assert_eq!(r.worst_count, usize::from(!b.is_empty()));
            }
        }
    }

    #[test]
    fn windows_are_closed_and_counted_per_instance() {
        let b = vec![vec![1.0, 1.05], vec![1.2], vec![3.0]];
        let rows = dispersion_diagnostic(&b, &[0.1, 0.2, 2.0]).unwrap();
        assert_eq!(rows.iter().map(|r| r.worst_count).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(rows[1].worst_window, 1.0);
    }

    #[test]
    fn uniform_boundaries_scale_with_window() {
        // One uniform boundary per instance on [0, 6]: a fixed window of width
        // ε catches about εT/6 of them, and the worst window a bit more.
        let t = 3000;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b: Vec<Vec<f64>> = (0..t).map(|_| vec![rng.random_range(0.0..6.0)]).collect();
        let rows = dispersion_diagnostic(&b, &[0.06, 0.6]).unwrap();
        for r in rows {
            let mean = r.eps * t as f64 / 6.0;
            assert!(r.worst_count as f64 >= mean);
            assert!((r.worst_count as f64) < mean + 6.0 * mean.sqrt() + 5.0, "{r:?}");
        }
    }
}
