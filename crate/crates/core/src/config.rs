//! Pipeline configuration. The resolved config is embedded in every output
//! artifact for provenance; JSON key names are part of the file formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seam::SeamParams;

/// Scoring rule of the integration walk when neighbors span segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreVariant {
    /// Candidate directionality plus tangent alignment:
    /// `s = sigma(candidate) + v . dir`. Default.
    Corrected,
    /// The as-published rule, kept for comparison:
    /// `s = sigma(current) - v . dir`.
    Literal,
}

/// How the gradient/prior trade-off enters the seam DP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaWeighting {
    /// `alpha * g + (1 - alpha) * e`. Default.
    Weighted,
    /// Raw recurrence without the alpha weights, kept for comparison.
    Unweighted,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Number of squares sampled along the initial curve.
    pub square_count: usize,
    /// Square side as a fraction of the larger bounding-box dimension.
    pub square_size_factor: f64,
    /// Gradient weight in the seam objective.
    pub alpha: f64,
    /// History length of the parabola prior.
    pub window: usize,
    /// Residual normalization of the prior term.
    pub d_norm: f64,
    /// Support radius of the covariance weighting kernel, pixels.
    pub h: f64,
    /// Neighborhood size of the integration walk.
    #[serde(rename = "K", alias = "knn")]
    pub knn: usize,
    pub score_variant: ScoreVariant,
    pub alpha_weighting: AlphaWeighting,
    /// Explicit error normalizer in pixels; overrides the inter-ocular
    /// distance when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<f64>,
    /// Score the prior with exact point-to-parabola distance instead of
    /// the vertical residual.
    pub exact_distance: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            square_count: 50,
            square_size_factor: 0.2,
            alpha: 0.7,
            window: 20,
            d_norm: 3.0,
            h: 20.0,
            knn: 7,
            score_variant: ScoreVariant::Corrected,
            alpha_weighting: AlphaWeighting::Weighted,
            normalizer: None,
            exact_distance: false,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.square_count < 2 {
            return Err(Error::Config("square_count must be at least 2".into()));
        }
        if !(self.square_size_factor > 0.0 && self.square_size_factor <= 2.0) {
            return Err(Error::Config("square_size_factor must be in (0, 2]".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config("alpha must be in [0, 1]".into()));
        }
        if self.window < 3 {
            return Err(Error::Config("window must be at least 3".into()));
        }
        if !(self.d_norm > 0.0) {
            return Err(Error::Config("d_norm must be positive".into()));
        }
        if !(self.h > 0.0) {
            return Err(Error::Config("h must be positive".into()));
        }
        if self.knn < 1 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if let Some(n) = self.normalizer {
            if !(n > 0.0) {
                return Err(Error::Config("normalizer must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn seam_params(&self) -> SeamParams {
        SeamParams {
            alpha: self.alpha,
            window: self.window,
            d_norm: self.d_norm,
            weighting: self.alpha_weighting,
            exact_distance: self.exact_distance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = Config::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"K\":7"));
        assert!(text.contains("\"score_variant\":\"corrected\""));
        let back: Config = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn knn_alias_is_accepted() {
        let cfg: Config = serde_json::from_str(r#"{"knn": 3}"#).unwrap();
        assert_eq!(cfg.knn, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"sqare_count": 10}"#).is_err());
    }

    #[test]
    fn validation_catches_out_of_range_values() {
        let mut cfg = Config::default();
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.window = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.normalizer = Some(0.0);
        assert!(cfg.validate().is_err());
        assert!(Config::default().validate().is_ok());
    }
}
