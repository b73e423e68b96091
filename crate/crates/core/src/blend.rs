//! Blend-weight estimation.
//!
//! Two routes to the same quantity:
//!
//! * the practical estimator used during training — per-head weights
//!   proportional to G/O² from measured overfitting/generalization, and
//! * the theoretical optima for blending gradient estimates — inner product
//!   over noise power in the uncorrelated case, and the matrix form
//!   Σ⁻¹·inner for correlated noise.
//!
//! All routes end in the same simplex normalization, which resolves the
//! choice of normalizing constant: rescaling weights by a positive scalar
//! never moves the minimizer, so the unit-sum representative is canonical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::BlendWeights;
use crate::linalg::SquareMatrix;

/// Floor applied to measured overfitting before squaring; guards the
/// underfit singularity where O is near zero while the head still scores
/// well.
pub const O_EPSILON: f64 = 1e-6;

/// Condition-number bound above which a correlation matrix is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// One head's measured generalization and overfitting over the estimation
/// window, recorded verbatim (clamping happens in the estimator).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadMeasurement {
    pub head_id: String,
    pub g: f64,
    pub o: f64,
}

/// Statistics of gradient estimators: per-head inner products with the true
/// gradient, and the noise second moments (diagonal or full matrix).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub inner: Vec<f64>,
    pub noise: NoiseStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseStats {
    /// Per-head σ² with zero cross terms.
    Diagonal(Vec<f64>),
    /// Full symmetric positive-definite cross-moment matrix.
    Full(SquareMatrix),
}

/// Normalizes a nonnegative score vector onto the simplex. Order-preserving;
/// an all-zero input is an error rather than a silent uniform fallback.
pub fn normalize(raw: &[f64]) -> Result<BlendWeights> {
    if raw.is_empty() {
        return Err(Error::InvalidArgument("empty weight vector".into()));
    }
    if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "normalize requires finite nonnegative scores: {:?}",
            raw
        )));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err(Error::NoGeneralizingHead);
    }
    BlendWeights::new(raw.iter().map(|v| v / sum).collect())
}

/// Practical weight estimation from measured (G, O) per head:
/// `raw_i = max(G_i, 0) / max(O_i, ε)²`, normalized to sum one.
///
/// A head whose validation metric worsened (G ≤ 0) gets zero weight. Errors
/// with [`Error::NoGeneralizingHead`] when every score clamps to zero.
pub fn estimate_weights_practical(
    measurements: &[HeadMeasurement],
) -> Result<(BlendWeights, Vec<f64>)> {
    if measurements.is_empty() {
        return Err(Error::InvalidArgument("no head measurements".into()));
    }
    let raw: Vec<f64> = measurements
        .iter()
        .map(|m| {
            let g = m.g.max(0.0);
            let o = m.o.max(O_EPSILON);
            g / (o * o)
        })
        .collect();
    let weights = normalize(&raw)?;
    Ok((weights, raw))
}

/// Closed-form optimum under zero cross terms: `w_k ∝ inner_k / σ_k²`.
pub fn optimal_weights_uncorrelated(stats: &GradientStats) -> Result<BlendWeights> {
    let NoiseStats::Diagonal(sigma2) = &stats.noise else {
        return Err(Error::InvalidArgument(
            "uncorrelated weights need diagonal noise stats".into(),
        ));
    };
    if sigma2.len() != stats.inner.len() {
        return Err(Error::InvalidArgument(format!(
            "{} inner products vs {} variances",
            stats.inner.len(),
            sigma2.len()
        )));
    }
    if sigma2.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidArgument(
            "noise variances must be positive".into(),
        ));
    }
    let raw: Vec<f64> = stats
        .inner
        .iter()
        .zip(sigma2)
        .map(|(g, s)| g / s)
        .collect();
    if raw.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument(
            "negative inner product: optimum leaves the simplex".into(),
        ));
    }
    normalize(&raw)
}

/// Closed-form optimum with correlated noise: `w = Σ⁻¹ · inner`, normalized.
/// Rejects non-symmetric or ill-conditioned Σ.
pub fn optimal_weights_correlated(stats: &GradientStats) -> Result<BlendWeights> {
    let sigma = match &stats.noise {
        NoiseStats::Full(m) => m.clone(),
        NoiseStats::Diagonal(d) => SquareMatrix::diagonal(d),
    };
    if sigma.size() != stats.inner.len() {
        return Err(Error::InvalidArgument(format!(
            "{} inner products vs {}x{} matrix",
            stats.inner.len(),
            sigma.size(),
            sigma.size()
        )));
    }
    if !sigma.is_symmetric(1e-9 * (1.0 + sigma.norm_one())) {
        return Err(Error::InvalidArgument("noise matrix is not symmetric".into()));
    }
    let cond = sigma.condition_one()?;
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned { cond });
    }
    let raw = sigma.inverse()?.matvec(&stats.inner);
    if raw.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument(
            "Σ⁻¹·inner has negative entries: optimum leaves the simplex".into(),
        ));
    }
    normalize(&raw)
}

/// One weight-estimation event, as emitted to the weights JSON log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEstimateRecord {
    pub epoch: usize,
    pub heads: Vec<HeadEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadEstimate {
    pub id: String,
    pub g: f64,
    pub o: f64,
    pub raw: f64,
    pub weight: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meas(g: &[f64], o: &[f64]) -> Vec<HeadMeasurement> {
        g.iter()
            .zip(o)
            .enumerate()
            .map(|(i, (&g, &o))| HeadMeasurement {
                head_id: format!("h{}", i),
                g,
                o,
            })
            .collect()
    }

    #[test]
    fn practical_weights_direct_substitution() {
        // raw = [0.8/0.04, 0.2/0.16, 0.5/0.09] = [20, 1.25, 5.5556]
        let (w, raw) =
            estimate_weights_practical(&meas(&[0.8, 0.2, 0.5], &[0.2, 0.4, 0.3])).unwrap();
        assert!((raw[0] - 20.0).abs() < 1e-12);
        assert!((raw[1] - 1.25).abs() < 1e-12);
        assert!((raw[2] - 5.555555555555555).abs() < 1e-12);
        let expected = [0.7461, 0.0466, 0.2073];
        for (a, b) in w.as_slice().iter().zip(&expected) {
            assert!((a - b).abs() < 5e-5, "{} vs {}", a, b);
        }
    }

    #[test]
    fn single_head_gets_unit_weight() {
        let (w, _) = estimate_weights_practical(&meas(&[0.3], &[0.1])).unwrap();
        assert_eq!(w.as_slice(), &[1.0]);
    }

    #[test]
    fn symmetric_measurements_give_uniform_weights() {
        let (w, _) = estimate_weights_practical(&meas(&[0.4, 0.4, 0.4], &[0.2, 0.2, 0.2])).unwrap();
        for v in w.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_g_clamps_to_zero_weight() {
        let (w, _) = estimate_weights_practical(&meas(&[0.5, -0.2], &[0.2, 0.2])).unwrap();
        assert_eq!(w.as_slice()[1], 0.0);
        assert_eq!(w.as_slice()[0], 1.0);
    }

    #[test]
    fn all_zero_scores_error_without_fallback() {
        let err = estimate_weights_practical(&meas(&[-0.1, 0.0], &[0.2, 0.2])).unwrap_err();
        assert!(matches!(err, Error::NoGeneralizingHead));
    }

    #[test]
    fn scale_invariance_in_g_and_o() {
        let base = meas(&[0.8, 0.2, 0.5], &[0.2, 0.4, 0.3]);
        let (w0, _) = estimate_weights_practical(&base).unwrap();
        let g_scaled = meas(&[8.0, 2.0, 5.0], &[0.2, 0.4, 0.3]);
        let (w1, _) = estimate_weights_practical(&g_scaled).unwrap();
        let o_scaled = meas(&[0.8, 0.2, 0.5], &[0.6, 1.2, 0.9]);
        let (w2, _) = estimate_weights_practical(&o_scaled).unwrap();
        assert!(w0.linf_distance(&w1) < 1e-12);
        assert!(w0.linf_distance(&w2) < 1e-12);
    }

    #[test]
    fn inverse_variance_proportionality() {
        let stats = GradientStats {
            inner: vec![1.0, 1.0],
            noise: NoiseStats::Diagonal(vec![1.0, 4.0]),
        };
        let w = optimal_weights_uncorrelated(&stats).unwrap();
        assert!((w.as_slice()[0] - 0.8).abs() < 1e-12);
        assert!((w.as_slice()[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_estimator_gets_unit_weight() {
        let stats = GradientStats {
            inner: vec![0.7],
            noise: NoiseStats::Diagonal(vec![2.0]),
        };
        assert_eq!(
            optimal_weights_uncorrelated(&stats).unwrap().as_slice(),
            &[1.0]
        );
    }

    #[test]
    fn nonpositive_variance_is_rejected() {
        let stats = GradientStats {
            inner: vec![1.0, 1.0],
            noise: NoiseStats::Diagonal(vec![1.0, 0.0]),
        };
        assert!(optimal_weights_uncorrelated(&stats).is_err());
    }

    #[test]
    fn correlated_reduces_to_uncorrelated_for_diagonal_sigma() {
        let inner = vec![0.9, 0.4, 0.6];
        let sigma2 = vec![1.3, 0.5, 2.2];
        let diag = GradientStats {
            inner: inner.clone(),
            noise: NoiseStats::Diagonal(sigma2.clone()),
        };
        let full = GradientStats {
            inner,
            noise: NoiseStats::Full(SquareMatrix::diagonal(&sigma2)),
        };
        let a = optimal_weights_uncorrelated(&diag).unwrap();
        let b = optimal_weights_correlated(&full).unwrap();
        assert!(a.linf_distance(&b) < 1e-10);
    }

    #[test]
    fn symmetric_two_by_two_forces_equal_weights() {
        let stats = GradientStats {
            inner: vec![1.0, 1.0],
            noise: NoiseStats::Full(
                SquareMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap(),
            ),
        };
        let w = optimal_weights_correlated(&stats).unwrap();
        assert!((w.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((w.as_slice()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ill_conditioned_sigma_is_rejected() {
        let stats = GradientStats {
            inner: vec![1.0, 1.0],
            noise: NoiseStats::Full(
                SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]).unwrap(),
            ),
        };
        assert!(matches!(
            optimal_weights_correlated(&stats),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2.0, 2.0]).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(
            normalize(&[1.0, 0.0, 3.0]).unwrap().as_slice(),
            &[0.25, 0.0, 0.75]
        );
        assert!(normalize(&[0.0, 0.0]).is_err());
        // published rows already sum to one
        let t3 = normalize(&[0.630, 0.014, 0.356]).unwrap();
        for (a, b) in t3.as_slice().iter().zip(&[0.630, 0.014, 0.356]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_preserves_argmax() {
        let raw = [0.3, 5.0, 1.2, 4.9];
        let w = normalize(&raw).unwrap();
        let argmax_raw = raw
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let argmax_w = w
            .as_slice()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax_raw, argmax_w);
    }
}
