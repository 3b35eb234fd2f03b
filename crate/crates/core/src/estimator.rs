//! Parameter estimation and filtering.
//!
//! Pipeline: Hankel matrix over the samples -> truncated SVD -> shift
//! invariance of the right singular subspace -> eigenvalues of the K x K
//! transition matrix -> damping/frequency of each component -> linear least
//! squares for amplitudes and phases -> real reconstruction.
//!
//! The row-deletion convention follows the shifted least-squares system
//! `V^(top) E^H ~= V^(bottom)` with top = drop the last row and bottom =
//! drop the first row; swapping the two conjugates the recovered spectrum,
//! and the tests pin this orientation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AngularGrid, IntensityProfile};
use crate::hankel::HankelOperator;
use crate::linalg::{self, lstsq, CMat};
use crate::model::{DampedSinusoid, ModelEstimate};
use crate::svd::{lanczos_svd, LanczosOptions, PartialSvd};

/// Condition-estimate ceiling for the two least-squares stages.
const COND_LIMIT: f64 = 1e12;
/// Largest transition-matrix order the eigenvalue stage accepts.
const MAX_EIGEN_ORDER: usize = 64;
/// Sanity bound on the imaginary residue of a filtered profile. Real input
/// keeps the residue many orders below this; crossing it means the pole set
/// lost conjugate closure. The exact residue is always reported in the
/// diagnostics.
const REAL_RECON_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    /// ||input - filtered||.
    pub residual_norm: f64,
    /// Condition estimate of the shift-invariance least squares.
    pub shift_condition: f64,
    /// Condition estimate of the amplitude/phase least squares.
    pub amplitude_condition: f64,
    /// Set when the amplitude system crossed the condition ceiling; the
    /// solution is still returned.
    pub amplitude_ill_conditioned: bool,
    /// Indices of components with negative damping (growing envelopes);
    /// kept in the model, flagged here.
    pub growing_components: Vec<usize>,
    /// Two poles coincided within the pairing tolerance.
    pub near_duplicate_poles: bool,
    /// max |Im| of the reconstruction before taking the real part.
    pub imaginary_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationReport {
    pub model: ModelEstimate,
    /// Full descending singular-value list from the SVD stage.
    pub singular_values: Vec<f64>,
    /// `pairing[i]` is the rank of component `i` under descending estimated
    /// energy, i.e. the index of the singular value associated with it for
    /// order-scan plots.
    pub pairing: Vec<usize>,
    pub diagnostics: Diagnostics,
}

/// Keeps the first K triplets of a partial SVD.
pub fn truncate(svd: &PartialSvd, k: usize) -> Result<PartialSvd> {
    if k > svd.k() {
        return Err(Error::InvalidK {
            requested: k,
            max: svd.k(),
        });
    }
    Ok(PartialSvd {
        u: svd.u.truncate_cols(k),
        s: svd.s[..k].to_vec(),
        v: svd.v.truncate_cols(k),
    })
}

/// Solves the shift-invariance system on the right singular vectors and
/// returns the K x K transition matrix together with the condition estimate
/// of its least-squares system.
pub fn shift_invariance_solve(v_k: &CMat) -> Result<(CMat, f64)> {
    let k = v_k.cols();
    if k == 0 {
        return Ok((CMat::zeros(0, 0), 1.0));
    }
    let m = v_k.rows();
    if m < k + 1 {
        return Err(Error::DimensionMismatch {
            expected: k + 1,
            got: m,
        });
    }
    let top = v_k.drop_row(m - 1);
    let bottom = v_k.drop_row(0);
    let out = lstsq(&top, &bottom);
    if out.condition > COND_LIMIT || out.rank_deflated {
        return Err(Error::RankDeficient {
            condition: out.condition,
        });
    }
    Ok((out.solution.adjoint(), out.condition))
}

/// Eigenvalues of the transition matrix.
pub fn eigenvalues(e: &CMat) -> Result<Vec<Complex64>> {
    if e.rows() > MAX_EIGEN_ORDER {
        return Err(Error::TooLarge {
            dim: e.rows(),
            max: MAX_EIGEN_ORDER,
        });
    }
    linalg::eigenvalues(e)
}

/// Maps a pole `z = exp((-d + i 2 pi f) dtheta)` back to damping and
/// frequency. The principal argument keeps |f| within the Nyquist limit
/// `1/(2 dtheta)`; the branch cut lands on +Nyquist.
pub fn poles_to_params(z: Complex64, dtheta: f64) -> Result<(f64, f64)> {
    if !(dtheta > 0.0) {
        return Err(Error::InvalidGrid(format!("step must be > 0, got {dtheta}")));
    }
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::ZeroPole);
    }
    let d = -r.ln() / dtheta;
    let mut arg = z.arg();
    if arg == -PI {
        arg = PI;
    }
    let f = arg / (2.0 * PI * dtheta);
    Ok((d, f))
}

/// Amplitude/phase least squares result.
#[derive(Debug, Clone)]
pub struct AmplitudeFit {
    /// Complex coefficients `a_k exp(i phi_k)`, one per pole.
    pub coefficients: Vec<Complex64>,
    pub condition: f64,
    /// Condition ceiling crossed; solution returned anyway.
    pub ill_conditioned: bool,
}

impl AmplitudeFit {
    pub fn amplitudes_phases(&self) -> Vec<(f64, f64)> {
        self.coefficients.iter().map(|c| (c.norm(), c.arg())).collect()
    }
}

/// Solves the generalized Vandermonde system on absolute angles for the
/// complex amplitudes of the given `(damping, frequency)` poles.
///
/// Each column holds one pole's envelope, anchored at the grid end where it
/// peaks and normalized to unit length before the solve; strongly growing
/// or decaying poles would otherwise spread the columns over hundreds of
/// orders of magnitude. The returned coefficients are referenced back to
/// theta = 0, with the magnitude saturated at exp(700) so downstream
/// exponent-safe evaluation stays finite.
pub fn amplitude_phase_ls(
    signal: &[Complex64],
    grid: &AngularGrid,
    poles: &[(f64, f64)],
) -> Result<AmplitudeFit> {
    let n = grid.len();
    if signal.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: signal.len(),
        });
    }
    let k = poles.len();
    if k == 0 {
        return Ok(AmplitudeFit {
            coefficients: Vec::new(),
            condition: 1.0,
            ill_conditioned: false,
        });
    }
    if k > n {
        return Err(Error::InvalidK { requested: k, max: n });
    }

    let theta_last = grid.theta(n - 1);
    let refs: Vec<f64> = poles
        .iter()
        .map(|&(d, _)| if d >= 0.0 { grid.theta0() } else { theta_last })
        .collect();
    let mut a = CMat::from_fn(n, k, |i, j| {
        let (d, f) = poles[j];
        let dt = grid.theta(i) - refs[j];
        (Complex64::new(-d, 2.0 * PI * f) * dt).exp()
    });
    let mut col_norms = Vec::with_capacity(k);
    for j in 0..k {
        let norm = linalg::vec_norm(a.col(j));
        col_norms.push(norm);
        if norm > 0.0 {
            linalg::scale(a.col_mut(j), 1.0 / norm);
        }
    }
    let b = CMat::from_cols(&[signal.to_vec()]);
    let out = lstsq(&a, &b);
    let ill = out.condition > COND_LIMIT || out.rank_deflated;

    let coefficients = (0..k)
        .map(|j| {
            let y = out.solution.at(j, 0);
            if y.norm() == 0.0 || col_norms[j] == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (d, f) = poles[j];
            // c = y / ||col|| * exp(-rate * theta_ref) in log-magnitude form.
            let ln_mag = y.norm().ln() - col_norms[j].ln() + d * refs[j];
            let phase = y.arg() - 2.0 * PI * f * refs[j];
            Complex64::from_polar(ln_mag.min(700.0).exp(), phase)
        })
        .collect();

    Ok(AmplitudeFit {
        coefficients,
        condition: out.condition,
        ill_conditioned: ill,
    })
}

/// One SVD stage shared by several truncation orders.
///
/// Useful when a scan order or several nearby K values are filtered from
/// the same profile: the Lanczos run happens once at the largest order and
/// [`filter_at`](Self::filter_at) reuses it.
pub struct HlsvdPipeline {
    grid: AngularGrid,
    values: Vec<f64>,
    signal: Vec<Complex64>,
    op: HankelOperator,
    svd: PartialSvd,
}

impl HlsvdPipeline {
    pub fn new(profile: &IntensityProfile, k_svd: usize, opts: &LanczosOptions) -> Result<Self> {
        let n = profile.len();
        if k_svd < 1 || n < 2 * k_svd + 2 {
            return Err(Error::InvalidK {
                requested: k_svd,
                max: n.saturating_sub(2) / 2,
            });
        }
        let signal: Vec<Complex64> = profile
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let op = HankelOperator::new(&signal, None)?;
        let svd = lanczos_svd(&op, k_svd, opts)?;
        Ok(Self {
            grid: *profile.grid(),
            values: profile.values().to_vec(),
            signal,
            op,
            svd,
        })
    }

    /// Norm of the operator response along a single pole's right-singular
    /// direction: `||H v(z)||` with `v(z)` the unit vector of conjugate
    /// pole powers. For a pole belonging to the signal this reproduces its
    /// singular value; for noise poles it sits at the noise-floor level.
    pub fn pole_response(&self, damping: f64, frequency: f64) -> f64 {
        let m = self.op.cols();
        let dtheta = self.grid.dtheta();
        // v[j] ~ conj(z)^j, built exponent-safe by anchoring the envelope
        // at the end where it peaks.
        let j_ref = if damping >= 0.0 { 0.0 } else { (m - 1) as f64 };
        let mut v: Vec<Complex64> = (0..m)
            .map(|j| {
                let jj = j as f64 - j_ref;
                Complex64::new(
                    -damping * dtheta * jj,
                    -2.0 * PI * frequency * dtheta * jj,
                )
                .exp()
            })
            .collect();
        let norm = linalg::vec_norm(&v);
        if !(norm > 0.0) || !norm.is_finite() {
            return 0.0;
        }
        linalg::scale(&mut v, 1.0 / norm);
        match self.op.matvec(&v) {
            Ok(hv) => linalg::vec_norm(&hv),
            Err(_) => 0.0,
        }
    }

    pub fn svd(&self) -> &PartialSvd {
        &self.svd
    }

    pub fn max_order(&self) -> usize {
        self.svd.k()
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    /// Runs the estimation/reconstruction tail of the pipeline at order `k`.
    pub fn filter_at(&self, k: usize) -> Result<(IntensityProfile, EstimationReport)> {
        let (complex, report) = self.estimate_at(k)?;
        let max_re = complex.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        if report.diagnostics.imaginary_residual > REAL_RECON_TOL * (max_re + f64::MIN_POSITIVE) {
            return Err(Error::ImaginaryResidualExceeded {
                residual: report.diagnostics.imaginary_residual,
                tol: REAL_RECON_TOL * (max_re + f64::MIN_POSITIVE),
            });
        }
        let filtered = IntensityProfile::new(self.grid, complex.iter().map(|z| z.re).collect(), None)?;
        Ok((filtered, report))
    }

    /// Estimation tail without the realness gate; used by order scans where
    /// high-order noise poles make the reconstruction meaningless.
    pub(crate) fn estimate_at(&self, k: usize) -> Result<(Vec<Complex64>, EstimationReport)> {
        if k < 1 {
            return Err(Error::InvalidK { requested: k, max: self.svd.k() });
        }
        let trunc = truncate(&self.svd, k)?;
        let (e, shift_condition) = shift_invariance_solve(&trunc.v)?;
        let zs = eigenvalues(&e)?;
        let dtheta = self.grid.dtheta();
        let poles = zs
            .iter()
            .map(|&z| poles_to_params(z, dtheta))
            .collect::<Result<Vec<_>>>()?;

        let fmax = poles
            .iter()
            .map(|p| p.1.abs())
            .fold(self.grid.frequency_resolution(), f64::max);
        let tau = 1e-6 * fmax;
        let mut near_duplicate_poles = false;
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                if (poles[i].1 - poles[j].1).abs() <= tau && (poles[i].0 - poles[j].0).abs() <= tau {
                    near_duplicate_poles = true;
                }
            }
        }

        let fit = amplitude_phase_ls(&self.signal, &self.grid, &poles)?;
        let components: Vec<DampedSinusoid> = poles
            .iter()
            .zip(&fit.coefficients)
            .map(|(&(d, f), c)| DampedSinusoid::new(c.norm(), c.arg(), d, f))
            .collect();

        let growing_components: Vec<usize> = components
            .iter()
            .enumerate()
            .filter(|(_, c)| c.damping < 0.0)
            .map(|(i, _)| i)
            .collect();

        // Rank components by descending estimated energy to associate each
        // with a singular value of the same rank.
        let energies: Vec<f64> = components.iter().map(|c| c.ln_energy(&self.grid)).collect();
        let mut order: Vec<usize> = (0..components.len()).collect();
        order.sort_by(|&a, &b| energies[b].total_cmp(&energies[a]).then(a.cmp(&b)));
        let mut pairing = vec![0usize; components.len()];
        for (rank, &comp) in order.iter().enumerate() {
            pairing[comp] = rank;
        }

        let model = ModelEstimate::new(components, &self.grid);

        let complex = model.evaluate(&self.grid);
        let imaginary_residual = complex.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let residual_norm = self
            .values
            .iter()
            .zip(&complex)
            .map(|(a, b)| (a - b.re) * (a - b.re))
            .sum::<f64>()
            .sqrt();

        let report = EstimationReport {
            model,
            singular_values: trunc.s,
            pairing,
            diagnostics: Diagnostics {
                residual_norm,
                shift_condition,
                amplitude_condition: fit.condition,
                amplitude_ill_conditioned: fit.ill_conditioned,
                growing_components,
                near_duplicate_poles,
                imaginary_residual,
            },
        };
        Ok((complex, report))
    }
}

/// End-to-end filter at order `k` with default Lanczos options.
pub fn hlsvd_filter(profile: &IntensityProfile, k: usize) -> Result<(IntensityProfile, EstimationReport)> {
    hlsvd_filter_with(profile, k, &LanczosOptions::default())
}

/// End-to-end filter with explicit Lanczos options.
pub fn hlsvd_filter_with(
    profile: &IntensityProfile,
    k: usize,
    opts: &LanczosOptions,
) -> Result<(IntensityProfile, EstimationReport)> {
    HlsvdPipeline::new(profile, k, opts)?.filter_at(k)
}
