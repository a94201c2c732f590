//! Paired t-test on difference scores.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Result of a paired t-test. When every difference is identical the
/// variance is zero; `zero_variance` flags that case and `p` is set by
/// convention (0 if the mean difference is nonzero, 1 if it is zero).
#[derive(Debug, Clone, Copy)]
pub struct PairedTTest {
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub zero_variance: bool,
}

/// Two-sided p-value from a t statistic.
pub fn t_to_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Standard paired t-test: `t = mean(d) / (sd(d) / sqrt(N))`, `df = N - 1`,
/// two-sided p.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(format!(
            "paired samples have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::SampleTooSmall {
            needed: 3,
            got: a.len(),
        });
    }
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let df = n - 1;

    if sd == 0.0 {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        };
        return Ok(PairedTTest {
            t,
            p,
            df,
            mean_diff: mean,
            sd_diff: 0.0,
            zero_variance: true,
        });
    }

    let t = mean / (sd / (n as f64).sqrt());
    Ok(PairedTTest {
        t,
        p: t_to_p(t, df as f64),
        df,
        mean_diff: mean,
        sd_diff: sd,
        zero_variance: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_give_t_zero_p_one() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = paired_ttest(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(r.zero_variance);
    }

    #[test]
    fn hand_computed_t_statistic() {
        // diffs (1, 2, 3): mean 2, sd 1, t = 2 * sqrt(3)
        let a = [2.0, 4.0, 6.0];
        let b = [1.0, 2.0, 3.0];
        let r = paired_ttest(&a, &b).unwrap();
        assert!((r.t - 2.0 * 3.0_f64.sqrt()).abs() < 1e-12);
        assert!((r.t - 3.4641).abs() < 1e-4);
        assert_eq!(r.df, 2);
        assert!(!r.zero_variance);
    }

    #[test]
    fn swapping_arguments_flips_sign() {
        let a = [2.0, 4.0, 7.0, 1.0];
        let b = [1.0, 2.0, 3.0, 0.5];
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        assert!((ab.t + ba.t).abs() < 1e-12);
        assert!((ab.p - ba.p).abs() < 1e-12);
    }

    #[test]
    fn exact_constant_offset_flags_zero_variance() {
        // dyadic offset: differences are bit-identical
        let a = [1.25, 2.25, 3.25, 4.25];
        let b = [1.0, 2.0, 3.0, 4.0];
        let r = paired_ttest(&a, &b).unwrap();
        assert!(r.zero_variance);
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
    }

    #[test]
    fn near_constant_offset_does_not_produce_nan() {
        // 0.1 is not exactly representable; the differences carry rounding
        // noise, so the p-value lands at the machine-precision floor.
        let a = [1.1, 2.1, 3.1, 4.1];
        let b = [1.0, 2.0, 3.0, 4.0];
        let r = paired_ttest(&a, &b).unwrap();
        assert!(!r.t.is_nan());
        assert!(r.p <= 1e-12, "p = {}", r.p);
    }

    #[test]
    fn too_short_input_rejected() {
        assert!(matches!(
            paired_ttest(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::SampleTooSmall { .. })
        ));
    }
}
