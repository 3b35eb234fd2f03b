//! Angular sampling grid and intensity profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling of the scattering angle, in radians.
///
/// Sample `k` sits at `theta0 + k * dtheta` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    theta0: f64,
    dtheta: f64,
    n: usize,
}

impl AngularGrid {
    pub fn new(theta0: f64, dtheta: f64, n: usize) -> Result<Self> {
        if !dtheta.is_finite() || dtheta <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be > 0, got {dtheta}")));
        }
        if !theta0.is_finite() {
            return Err(Error::InvalidGrid("start angle must be finite".into()));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        Ok(Self { theta0, dtheta, n })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Absolute angle of sample `k`.
    #[inline]
    pub fn theta(&self, k: usize) -> f64 {
        self.theta0 + k as f64 * self.dtheta
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.theta(k))
    }

    /// Frequency resolution 1/(N dtheta) in cycles per radian.
    pub fn frequency_resolution(&self) -> f64 {
        1.0 / (self.n as f64 * self.dtheta)
    }

    /// Nyquist frequency 1/(2 dtheta) in cycles per radian.
    pub fn nyquist(&self) -> f64 {
        0.5 / self.dtheta
    }
}

/// A sampled intensity profile on an [`AngularGrid`], with optional
/// per-sample measurement errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    grid: AngularGrid,
    values: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl IntensityProfile {
    pub fn new(grid: AngularGrid, values: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidProfile(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(s) = &sigma {
            if s.len() != grid.len() {
                return Err(Error::InvalidProfile(format!(
                    "expected {} sigma entries, got {}",
                    grid.len(),
                    s.len()
                )));
            }
            if let Some(i) = s.iter().position(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidProfile(format!("sigma[{i}] is negative or non-finite")));
            }
        }
        Ok(Self { grid, values, sigma })
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Euclidean norm of the sample values.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Profile scaled by a constant factor; sigma is dropped since it no
    /// longer describes the scaled values.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            sigma: None,
        }
    }

    /// Pointwise difference `self - other`; grids must match.
    pub fn difference(&self, other: &Self) -> Result<Vec<f64>> {
        if self.grid != other.grid {
            return Err(Error::InvalidProfile("profiles live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect())
    }
}
