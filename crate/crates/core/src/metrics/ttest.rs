use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    /// Both samples have zero variance; `p_value` is 1 for equal means and 0
    /// otherwise.
    pub degenerate: bool,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance two-sample t-test with a two-sided p-value.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest, MetricError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricError::TooFewSamples(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let equal = ma == mb;
        return Ok(TTest {
            t: if equal { 0.0 } else { f64::INFINITY.copysign(ma - mb) },
            df: (a.len() + b.len() - 2) as f64,
            p_value: if equal { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, df, p_value, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert!(!r.degenerate);
    }

    #[test]
    fn separated_constants() {
        let r = welch_t_test(&[0.0, 0.0, 0.0], &[10.0, 10.0, 10.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(r.degenerate);
        let r = welch_t_test(&[4.0, 4.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(r.degenerate);
    }

    #[test]
    fn textbook_pair() {
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.t + 1.0).abs() < 1e-12);
        assert!((r.df - 8.0).abs() < 1e-12);
        assert!((r.p_value - 0.346593507087334).abs() < 1e-9);
    }

    #[test]
    fn too_few() {
        assert_eq!(welch_t_test(&[1.0], &[1.0, 2.0]), Err(MetricError::TooFewSamples(1, 2)));
    }
}
