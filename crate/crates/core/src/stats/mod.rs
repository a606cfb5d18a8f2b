//! Pearson correlation, paired t-tests, standard errors and the BCa bootstrap.

mod bootstrap;
pub mod special;

pub use bootstrap::{bca_bootstrap, percentile_index, BcaInterval, BootstrapConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest p-value reported; anything below is capped here and flagged.
pub const P_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub value: f64,
    /// The true p-value is below `P_FLOOR`.
    pub capped: bool,
}

impl PValue {
    pub fn new(p: f64) -> Self {
        if p < P_FLOOR {
            PValue {
                value: P_FLOOR,
                capped: true,
            }
        } else {
            PValue {
                value: p.min(1.0),
                capped: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: PValue,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: PValue,
    pub df: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 below two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of the mean; 0 below two values.
pub fn sem(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    sample_sd(xs) / (xs.len() as f64).sqrt()
}

/// Sample Pearson correlation with a two-sided p-value from the
/// t-transform on `n - 2` degrees of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("pearson: length mismatch {} vs {}", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::invalid(format!("pearson needs at least 3 pairs, got {n}")));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first correlation argument"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second correlation argument"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        special::student_t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p: PValue::new(p), n })
}

/// Paired (one-sample on differences) Student's t-test, two-sided.
pub fn paired_t(xs: &[f64], ys: &[f64]) -> Result<TTest> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("paired_t: length mismatch {} vs {}", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid(format!("paired_t needs at least 2 pairs, got {n}")));
    }
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let sd = sample_sd(&diffs);
    let df = n - 1;
    let (t, p) = if sd == 0.0 {
        if m == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(m), 0.0)
        }
    } else {
        let t = m / (sd / (n as f64).sqrt());
        (t, special::student_t_two_sided(t, df as f64))
    };
    Ok(TTest { t, p: PValue::new(p), df })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let lin: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &lin).unwrap().r - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(pearson(&xs, &neg).unwrap().r, -1.0);
        let c = pearson(&xs, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((c.r - 0.8).abs() <= 0.8 * 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ZeroVariance(_))));
        assert!(matches!(pearson(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), Err(Error::ZeroVariance(_))));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn perfect_correlation_p_is_capped() {
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.r, 1.0);
        assert!(c.p.capped);
        assert_eq!(c.p.value, P_FLOOR);
    }

    #[test]
    fn paired_t_examples() {
        let xs = [1.0, 2.0, 3.0];
        let t = paired_t(&xs, &xs).unwrap();
        assert_eq!((t.t, t.p.value, t.p.capped), (0.0, 1.0, false));

        let t = paired_t(&[2.0, 2.0, 2.0, 2.0], &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.t, f64::INFINITY);
        assert!(t.p.capped && t.p.value <= P_FLOOR);

        let t = paired_t(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        let expected = 2.0 * 3f64.sqrt();
        assert!((t.t - expected).abs() <= expected * 1e-12);
        assert_eq!(t.df, 2);
    }

    #[test]
    fn sem_examples() {
        assert!((sem(&[0.4, 0.8]) - 0.2).abs() < 1e-15);
        assert_eq!(sem(&[0.6, 0.6, 0.6]), 0.0);
        assert_eq!(sem(&[0.6]), 0.0);
    }

    proptest! {
        #[test]
        fn pearson_symmetric_and_affine_invariant(
            pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..30),
            scale in 0.1..10.0f64, shift in -5.0..5.0f64)
        {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let (Ok(a), Ok(b)) = (pearson(&xs, &ys), pearson(&ys, &xs)) else { return Ok(()); };
            prop_assert!((a.r - b.r).abs() < 1e-12);
            let xs2: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            let c = pearson(&xs2, &ys).unwrap();
            prop_assert!((a.r - c.r).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&a.r));
        }

        #[test]
        fn paired_t_antisymmetric(pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..30)) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let a = paired_t(&xs, &ys).unwrap();
            let b = paired_t(&ys, &xs).unwrap();
            prop_assert_eq!(a.t, -b.t);
            prop_assert_eq!(a.p, b.p);
        }
    }
}
