//! Kendall rank correlation between score vectors.

/// Tau over all item pairs: `(concordant - discordant) / (n(n-1)/2)`.
/// Ties on either side contribute zero to the numerator.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "kendall_tau: length mismatch");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut num = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            let s = (da * db).signum();
            if da != 0.0 && db != 0.0 {
                num += s as i64;
            }
        }
    }
    num as f64 / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_orderings_score_one() {
        assert_eq!(kendall_tau(&[0.9, 0.5, 0.3, 0.1], &[3.0, 2.0, 1.0, 0.0]), 1.0);
    }

    #[test]
    fn full_reversal_scores_minus_one() {
        assert_eq!(kendall_tau(&[0.1, 0.2, 0.3], &[3.0, 2.0, 1.0]), -1.0);
    }

    #[test]
    fn reversed_fine_slots_hit_the_pinned_minimum() {
        // target relevance [3,2,1,0] with the text slot (index 0) on top;
        // learned scores keep text first but reverse the fine slots
        let target = [3.0, 2.0, 1.0, 0.0];
        let learned = [0.4, 0.1, 0.2, 0.3];
        let tau = kendall_tau(&learned, &target);

        // enumerate the six fine orderings with the text slot pinned to
        // find the attainable minimum
        let fines = [
            [1, 2, 3],
            [1, 3, 2],
            [2, 1, 3],
            [2, 3, 1],
            [3, 1, 2],
            [3, 2, 1],
        ];
        let mut min_tau = f64::INFINITY;
        for perm in fines {
            let mut scores = [0.0; 4];
            scores[0] = 0.9;
            for (rank, &slot) in perm.iter().enumerate() {
                scores[slot] = 0.6 - 0.2 * rank as f64;
            }
            min_tau = min_tau.min(kendall_tau(&scores, &target));
        }
        assert_eq!(tau, min_tau);
        assert_eq!(min_tau, 0.0);
    }

    #[test]
    fn random_scores_average_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = [3.0, 2.0, 1.0, 0.0];
        let mean: f64 = (0..20_000)
            .map(|_| {
                let scores: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                kendall_tau(&scores, &target)
            })
            .sum::<f64>()
            / 20_000.0;
        assert!(mean.abs() < 0.02, "mean tau {mean}");
    }

    #[test]
    fn ties_contribute_nothing() {
        let tau = kendall_tau(&[0.5, 0.5, 0.1], &[2.0, 1.0, 0.0]);
        // pairs: (0,1) tied in scores -> 0, (0,2) and (1,2) concordant
        assert!((tau - 2.0 / 3.0).abs() < 1e-15);
    }
}
