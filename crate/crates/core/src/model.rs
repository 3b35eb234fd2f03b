//! Damped-sinusoid signal model.
//!
//! A profile is modelled as a sum of exponentially damped complex sinusoids
//! evaluated against the absolute scattering angle:
//!
//! `sum_k a_k exp(i phi_k) exp((-d_k + i 2 pi f_k) theta_n)`
//!
//! Real profiles correspond to conjugate-closed component sets: components
//! pair up as `(f, d, a, phi)` and `(-f, d, a, -phi)`, with near-zero
//! frequencies acting as self-paired real poles.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AngularGrid, IntensityProfile};

/// One damped complex sinusoid.
///
/// The canonical form keeps `amplitude >= 0`; a negative amplitude is folded
/// into the phase by adding pi. Damping and frequency are in reciprocal
/// radians of the scattering angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedSinusoid {
    pub amplitude: f64,
    pub phase: f64,
    pub damping: f64,
    pub frequency: f64,
}

/// Wraps an angle to the interval (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

impl DampedSinusoid {
    pub fn new(amplitude: f64, phase: f64, damping: f64, frequency: f64) -> Self {
        let (amplitude, phase) = if amplitude < 0.0 {
            (-amplitude, wrap_phase(phase + PI))
        } else {
            (amplitude, wrap_phase(phase))
        };
        Self {
            amplitude,
            phase,
            damping,
            frequency,
        }
    }

    /// Complex coefficient `a exp(i phi)`.
    pub fn coefficient(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    /// Complex exponent rate `-d + i 2 pi f`.
    pub fn rate(&self) -> Complex64 {
        Complex64::new(-self.damping, 2.0 * PI * self.frequency)
    }

    /// Value of the component at absolute angle `theta`, evaluated with the
    /// amplitude folded into the exponent so that a huge amplitude paired
    /// with strong damping (or the reverse) never overflows on the way to a
    /// finite sample value.
    pub fn value_at(&self, theta: f64) -> Complex64 {
        Complex64::new(
            self.amplitude.ln() - self.damping * theta,
            self.phase + 2.0 * PI * self.frequency * theta,
        )
        .exp()
    }

    /// Log of the component's contribution norm over the grid,
    /// `ln(a * ||exp(-d theta_n)||)`; used to rank components by energy
    /// without overflowing for strongly growing envelopes.
    pub fn ln_energy(&self, grid: &AngularGrid) -> f64 {
        let theta_ref = if self.damping >= 0.0 {
            grid.theta0()
        } else {
            grid.theta(grid.len() - 1)
        };
        let env: f64 = grid
            .angles()
            .map(|t| (-2.0 * self.damping * (t - theta_ref)).exp())
            .sum();
        self.amplitude.ln() - self.damping * theta_ref + 0.5 * env.ln()
    }
}

/// A K-component damped-sinusoid model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEstimate {
    pub components: Vec<DampedSinusoid>,
    /// True when the component set is closed under conjugation within the
    /// pairing tolerance, so the modelled profile is real.
    pub conjugate_closed: bool,
}

impl ModelEstimate {
    /// Builds a model and detects conjugate closure against the given grid.
    pub fn new(components: Vec<DampedSinusoid>, grid: &AngularGrid) -> Self {
        let tau = pairing_tolerance(&components, grid);
        let conjugate_closed = is_conjugate_closed(&components, tau);
        Self {
            components,
            conjugate_closed,
        }
    }

    /// Builds a model with an explicit closure flag (no detection).
    pub fn with_closure(components: Vec<DampedSinusoid>, conjugate_closed: bool) -> Self {
        Self {
            components,
            conjugate_closed,
        }
    }

    pub fn order(&self) -> usize {
        self.components.len()
    }

    /// Evaluates the model at every grid angle.
    pub fn evaluate(&self, grid: &AngularGrid) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for c in &self.components {
            let ln_a = c.amplitude.ln();
            for (k, slot) in out.iter_mut().enumerate() {
                let theta = grid.theta(k);
                *slot += Complex64::new(
                    ln_a - c.damping * theta,
                    c.phase + 2.0 * PI * c.frequency * theta,
                )
                .exp();
            }
        }
        out
    }

    /// Real reconstruction of the model.
    ///
    /// Returns the real part of [`evaluate`](Self::evaluate) and checks that
    /// the largest imaginary residue stays below `tol * (max |Re| + floor)`;
    /// a violation signals an estimate that is not conjugate-closed.
    pub fn reconstruct_real(&self, grid: &AngularGrid, tol: f64) -> Result<IntensityProfile> {
        let complex = self.evaluate(grid);
        let max_re = complex.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let max_im = complex.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let bound = tol * (max_re + f64::MIN_POSITIVE);
        if max_im > bound {
            return Err(Error::ImaginaryResidualExceeded {
                residual: max_im,
                tol: bound,
            });
        }
        IntensityProfile::new(*grid, complex.iter().map(|z| z.re).collect(), None)
    }
}

/// Pairing tolerance `1e-6 * max(max |f|, 1/(N dtheta))`.
pub fn pairing_tolerance(components: &[DampedSinusoid], grid: &AngularGrid) -> f64 {
    let fmax = components
        .iter()
        .map(|c| c.frequency.abs())
        .fold(grid.frequency_resolution(), f64::max);
    1e-6 * fmax
}

/// Checks whether a component set partitions into real poles (|f| <= tau)
/// and conjugate pairs with matching damping, amplitude and opposite
/// frequency/phase.
pub fn is_conjugate_closed(components: &[DampedSinusoid], tau: f64) -> bool {
    let mut used = vec![false; components.len()];
    for i in 0..components.len() {
        if used[i] {
            continue;
        }
        let ci = &components[i];
        if ci.frequency.abs() <= tau {
            // Real pole: needs a real coefficient, i.e. phase 0 or pi.
            let amp_floor = 1e-12 * components.iter().map(|c| c.amplitude).fold(0.0, f64::max);
            if ci.amplitude > amp_floor {
                let s = wrap_phase(ci.phase).abs();
                if s.min((PI - s).abs()) > 1e-6 * PI {
                    return false;
                }
            }
            used[i] = true;
            continue;
        }
        let mut found = false;
        for j in i + 1..components.len() {
            if used[j] {
                continue;
            }
            let cj = &components[j];
            let amp_scale = ci.amplitude.max(cj.amplitude).max(f64::MIN_POSITIVE);
            if (ci.frequency + cj.frequency).abs() <= tau
                && (ci.damping - cj.damping).abs() <= tau
                && (ci.amplitude - cj.amplitude).abs() <= 1e-6 * amp_scale
                && wrap_phase(ci.phase + cj.phase).abs() <= 1e-6 * PI
            {
                used[i] = true;
                used[j] = true;
                found = true;
                break;
            }
        }
        if !found {
            return false;
        }
    }
    true
}
