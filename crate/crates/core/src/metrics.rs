//! Integral absolute error between trajectories, and trial aggregation.
//!
//! Poses are aligned by step index. Each pair of consecutive steps spans the
//! quadrilateral `(est_k, est_k+1, truth_k+1, truth_k)`; its area is the sum
//! of two unsigned shoelace triangles. Both diagonals are evaluated and
//! averaged so the metric is symmetric in its arguments, which matters only
//! when the two paths cross inside a step.

use crate::error::{Error, Result};
use crate::geometry::{Point2D, Pose2D};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialResult {
    /// One pose per observation step.
    pub estimated: Vec<Pose2D>,
    pub truth: Vec<Pose2D>,
    /// m^2
    pub iae: f64,
    pub ms_per_step: f64,
    pub admitted: Vec<usize>,
    pub rejected: Vec<usize>,
    pub seed: u64,
}

impl TrialResult {
    pub fn admitted_total(&self) -> usize {
        self.admitted.iter().sum()
    }

    pub fn rejected_total(&self) -> usize {
        self.rejected.iter().sum()
    }

    pub fn final_position_error(&self) -> f64 {
        match (self.estimated.last(), self.truth.last()) {
            (Some(e), Some(t)) => e.position().distance(&t.position()),
            _ => f64::NAN,
        }
    }
}

fn triangle_area(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs()
}

fn quad_area(e0: Point2D, e1: Point2D, t1: Point2D, t0: Point2D) -> f64 {
    let split_a = triangle_area(e0, e1, t1) + triangle_area(e0, t1, t0);
    let split_b = triangle_area(e0, e1, t0) + triangle_area(e1, t1, t0);
    0.5 * (split_a + split_b)
}

pub fn iae(estimated: &[Pose2D], truth: &[Pose2D]) -> Result<f64> {
    if estimated.len() != truth.len() || estimated.len() < 2 {
        return Err(Error::LengthMismatch(estimated.len(), truth.len()));
    }
    Ok(estimated
        .windows(2)
        .zip(truth.windows(2))
        .map(|(e, t)| quad_area(e[0].position(), e[1].position(), t[1].position(), t[0].position()))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean_iae: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std_iae: f64,
    pub mean_ms: f64,
    pub count: usize,
}

/// Mean and sample standard deviation of a set of values, summed in sorted
/// order so the result does not depend on input order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    if sorted.len() == 1 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = sorted.iter().map(|v| (v - mean).powi(2)).collect();
    sq.sort_by(f64::total_cmp);
    (mean, (sq.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

pub fn summarize(trials: &[TrialResult]) -> Summary {
    let iaes: Vec<f64> = trials.iter().map(|t| t.iae).collect();
    let ms: Vec<f64> = trials.iter().map(|t| t.ms_per_step).collect();
    let (mean_iae, std_iae) = mean_std(&iaes);
    Summary {
        mean_iae,
        std_iae,
        mean_ms: mean_std(&ms).0,
        count: trials.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path(pts: &[(f64, f64)]) -> Vec<Pose2D> {
        pts.iter().map(|&(x, y)| Pose2D::new(x, y, 0.0)).collect()
    }

    #[test]
    fn identical_paths_have_zero_error() {
        let p = path(&[(0.0, 0.0), (1.0, 2.0), (3.0, 1.0)]);
        assert_eq!(iae(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn rectangle() {
        let e = path(&[(0.0, 0.0), (4.0, 0.0)]);
        let t = path(&[(0.0, 0.5), (4.0, 0.5)]);
        assert_abs_diff_eq!(iae(&e, &t).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn single_triangle() {
        let e = path(&[(0.0, 0.0), (1.0, 0.0)]);
        let t = path(&[(0.0, 0.0), (1.0, 1.0)]);
        assert_abs_diff_eq!(iae(&e, &t).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let e = path(&[(0.0, 0.0), (1.0, 0.0)]);
        let t = path(&[(0.0, 0.0)]);
        assert!(matches!(iae(&e, &t), Err(Error::LengthMismatch(2, 1))));
        assert!(iae(&t, &t).is_err());
    }

    #[test]
    fn doubling_parallel_offset_doubles_error() {
        let t = path(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (5.0, 0.0)]);
        let e1 = path(&[(0.0, 0.3), (1.0, 0.3), (2.0, 0.3), (5.0, 0.3)]);
        let e2 = path(&[(0.0, 0.6), (1.0, 0.6), (2.0, 0.6), (5.0, 0.6)]);
        assert!(iae(&e2, &t).unwrap() >= 2.0 * iae(&e1, &t).unwrap() - 1e-12);
    }

    #[test]
    fn summary_single_trial() {
        let t = TrialResult {
            iae: 3.5,
            ms_per_step: 0.1,
            ..Default::default()
        };
        let s = summarize(&[t]);
        assert_eq!((s.mean_iae, s.std_iae, s.mean_ms), (3.5, 0.0, 0.1));
    }

    #[test]
    fn summary_matches_independent_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let values: Vec<f64> = (0..100).map(|_| rng.random::<f64>() * 50.0).collect();
        // two-pass textbook formula in input order
        let n = values.len() as f64;
        let mut total = 0.0;
        for v in &values {
            total += v;
        }
        let mean = total / n;
        let mut ss = 0.0;
        for v in &values {
            ss += (v - mean) * (v - mean);
        }
        let std = (ss / (n - 1.0)).sqrt();
        let trials: Vec<TrialResult> = values
            .iter()
            .map(|&v| TrialResult {
                iae: v,
                ..Default::default()
            })
            .collect();
        let s = summarize(&trials);
        assert_abs_diff_eq!(s.mean_iae, mean, epsilon = 1e-12);
        assert_abs_diff_eq!(s.std_iae, std, epsilon = 1e-12);
    }

    #[test]
    fn summary_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut trials: Vec<TrialResult> = (0..57)
            .map(|_| TrialResult {
                iae: rng.random::<f64>() * 1e3,
                ms_per_step: rng.random::<f64>(),
                ..Default::default()
            })
            .collect();
        let a = summarize(&trials);
        trials.reverse();
        trials.swap(3, 40);
        assert_eq!(a, summarize(&trials));
    }

    fn arb_path(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), len)
    }

    proptest! {
        #[test]
        fn symmetric((a, b) in (2usize..20).prop_flat_map(|n| (arb_path(n), arb_path(n)))) {
            let (a, b) = (path(&a), path(&b));
            let ab = iae(&a, &b).unwrap();
            let ba = iae(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn translation_invariant(
            (a, b) in (2usize..20).prop_flat_map(|n| (arb_path(n), arb_path(n))),
            dx in -100.0f64..100.0, dy in -100.0f64..100.0,
        ) {
            let shift = |p: &[(f64, f64)]| path(&p.iter().map(|&(x, y)| (x + dx, y + dy)).collect::<Vec<_>>());
            let base = iae(&path(&a), &path(&b)).unwrap();
            let moved = iae(&shift(&a), &shift(&b)).unwrap();
            prop_assert!((base - moved).abs() <= 1e-9 * (1.0 + base));
        }
    }
}
