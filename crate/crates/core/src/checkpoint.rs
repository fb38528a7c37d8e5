//! Versioned JSON checkpoint of a fitted pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::connectivity::{feature_count, FeatureMask};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub roi_count: usize,
    pub d_in: usize,
    pub d_h: usize,
    /// Row-major `d_h × d_in`.
    pub w_enc: Vec<f64>,
    pub b_enc: Vec<f64>,
    pub b_dec: Vec<f64>,
    pub w_slp: Vec<f64>,
    pub b_slp: f64,
    pub mask: FeatureMask,
    pub config: serde_json::Value,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, mask: &FeatureMask, roi_count: usize, config: serde_json::Value) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            roi_count,
            d_in: params.d_in,
            d_h: params.d_h,
            w_enc: params.w_enc.clone(),
            b_enc: params.b_enc.clone(),
            b_dec: params.b_dec.clone(),
            w_slp: params.w_slp.clone(),
            b_slp: params.b_slp,
            mask: mask.clone(),
            config,
        }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            d_in: self.d_in,
            d_h: self.d_h,
            w_enc: self.w_enc.clone(),
            b_enc: self.b_enc.clone(),
            b_dec: self.b_dec.clone(),
            w_slp: self.w_slp.clone(),
            b_slp: self.b_slp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.params().validate()?;
        if self.mask.len() != self.d_in {
            return Err(Error::Dimension {
                context: "checkpoint mask length vs d_in",
                expected: self.d_in,
                found: self.mask.len(),
            });
        }
        if self.mask.source_feature_count() != feature_count(self.roi_count) {
            return Err(Error::Dimension {
                context: "checkpoint mask source features vs roi_count",
                expected: feature_count(self.roi_count),
                found: self.mask.source_feature_count(),
            });
        }
        if !self.params().is_finite() {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Errors unless data with `roi_count` ROIs fits this checkpoint.
    pub fn check_roi_count(&self, roi_count: usize) -> Result<()> {
        if roi_count != self.roi_count {
            return Err(Error::Dimension {
                context: "ROI count (checkpoint vs data)",
                expected: self.roi_count,
                found: roi_count,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("format_version").is_none() {
            return Err(Error::Checkpoint("missing format_version".into()));
        }
        let ckpt: Checkpoint = serde_json::from_value(value)?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let params = ModelParams::init(3, 1, &mut crate::seeding::rng(1));
        let mask = FeatureMask::new(vec![0, 2, 5], 6).unwrap();
        Checkpoint::new(&params, &mask, 4, serde_json::json!({"seed": 1}))
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(Checkpoint::from_json(&c.to_json().unwrap()).unwrap(), c);
    }

    #[test]
    fn round_trip_is_bit_exact_for_random_weights() {
        let mut rng = crate::seeding::rng(11);
        let params = ModelParams::init(45, 7, &mut rng);
        let mask = FeatureMask::identity(45);
        let c = Checkpoint::new(&params, &mask, 10, serde_json::Value::Null);
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap().params();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.w_enc), bits(&params.w_enc));
        assert_eq!(bits(&back.w_slp), bits(&params.w_slp));
        assert_eq!(back.b_slp.to_bits(), params.b_slp.to_bits());
    }

    #[test]
    fn missing_version_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("format_version");
        let err = Checkpoint::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("format_version"));
    }

    #[test]
    fn dimension_checks() {
        let mut c = sample();
        c.w_enc.pop();
        assert!(Checkpoint::from_json(&c.to_json().unwrap()).is_err());
        let c = sample();
        let err = c.check_roi_count(5).unwrap_err();
        assert!(err.to_string().contains("expected 4, found 5"));
    }
}
