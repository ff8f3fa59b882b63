//! Regularly spaced price observations, shared between the simulator's
//! log export and the calibration toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series {label:?} needs at least 2 observations, got {len}")]
    TooShort { label: String, len: usize },
    #[error("series {label:?} has non-positive sample spacing {dt}")]
    BadSpacing { label: String, dt: f64 },
    #[error("series {label:?} has a non-finite value at index {index}")]
    NonFinite { label: String, index: usize },
}

/// Observations S(1..L) spaced `dt` apart. `label` names the origin
/// (a router id or a synthetic tag).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub values: Vec<f64>,
    pub dt: f64,
    pub label: String,
}

impl PriceSeries {
    pub fn new(values: Vec<f64>, dt: f64, label: impl Into<String>) -> Result<Self, SeriesError> {
        let label = label.into();
        if values.len() < 2 {
            return Err(SeriesError::TooShort {
                label,
                len: values.len(),
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SeriesError::BadSpacing { label, dt });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite { label, index });
        }
        Ok(PriceSeries { values, dt, label })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_inputs() {
        assert!(PriceSeries::new(vec![1.0], 0.01, "x").is_err());
        assert!(PriceSeries::new(vec![1.0, 2.0], 0.0, "x").is_err());
        assert!(PriceSeries::new(vec![1.0, f64::NAN], 0.01, "x").is_err());
        assert!(PriceSeries::new(vec![1.0, 2.0], 0.01, "x").is_ok());
    }
}
