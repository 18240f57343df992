//! Binomial confidence intervals.

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for `errors` successes in `trials` Bernoulli trials.
/// Returns `(0, 1)` when there are no trials.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Rounding can push the bounds a hair past p at the extremes.
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn quantile_constant() {
        let n = Normal::new(0.0, 1.0).unwrap();
        assert!((n.inverse_cdf(0.995) - Z_99).abs() < 1e-9);
    }

    #[test]
    fn known_values() {
        // 10 of 100 at 95%: (0.0552, 0.1744) in standard tables.
        let (lo, hi) = wilson_interval(10, 100, 1.959_963_984_540_054);
        assert!((lo - 0.055_229).abs() < 1e-5, "{lo}");
        assert!((hi - 0.174_366).abs() < 1e-5, "{hi}");
        let (lo, hi) = wilson_interval(0, 1000, Z_99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(1000, 1000, Z_99);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.99);
        assert_eq!(wilson_interval(0, 0, Z_99), (0.0, 1.0));
    }

    #[test]
    fn contains_point_estimate() {
        for (e, n) in [(0, 1), (1, 1), (3, 7), (100, 1_000_000), (999_999, 1_000_000)] {
            let (lo, hi) = wilson_interval(e, n, Z_99);
            let p = e as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
    }

    #[test]
    fn coverage_self_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for p in [1e-3, 0.01, 0.2] {
            let n = 20_000u64;
            let covered = (0..1000)
                .filter(|_| {
                    let k = (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
                    let (lo, hi) = wilson_interval(k, n, Z_99);
                    lo <= p && p <= hi
                })
                .count();
            assert!(covered >= 970, "p = {p}: {covered} / 1000");
        }
    }
}
