//! Synthetic powder profiles for nanocrystal ensembles.
//!
//! The sample is a mixture of cluster families; per family the shell index
//! follows a log-normal weight, interatomic distances carry a size-dependent
//! strain factor, and the scattered intensity at each grid angle is the
//! weighted Debye sum over all (family, shell) histograms, with the
//! dimensionless scattering vector `q = 2 a_fcc sin(theta) / lambda`.
//!
//! Histograms are built once per (family, shell) and reused across all
//! angles; the per-angle evaluation is the data-parallel loop.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::cluster::{build_cluster, StructureType, MAX_SHELLS};
use crate::debye::{
    debye_intensity, distance_histogram, distance_histogram_seq, scattering_prefactor,
    DistanceHistogram, PrefactorModel, DEFAULT_QUANTUM_NN,
};
use crate::error::{Error, Result};
use crate::grid::{AngularGrid, IntensityProfile};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Log-normal size weight with mode `xi` (shell index) and logarithmic
/// width `s`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SizeDistribution {
    pub xi: f64,
    pub s: f64,
}

/// Weight of shell index `n`:
/// `exp(-s/2) / sqrt(2 pi xi s) * exp(-(ln n - ln xi)^2 / (2 s^2))`.
///
/// This is the printed weight, not a normalized density; enable
/// [`SampleSpec::normalize_sizes`] to normalize over the simulated shells.
pub fn lognormal_weight(n: u32, dist: &SizeDistribution) -> f64 {
    debug_assert!(n >= 1 && dist.xi > 0.0 && dist.s > 0.0);
    let pre = (-dist.s / 2.0).exp() / (2.0 * PI * dist.xi * dist.s).sqrt();
    let dev = (n as f64).ln() - dist.xi.ln();
    pre * (-dev * dev / (2.0 * dist.s * dist.s)).exp()
}

/// Uniform isotropic strain as a function of cluster size.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StrainParams {
    pub n0: f64,
    pub omega: f64,
    pub xi_cap: f64,
    pub w: f64,
}

/// `omega + (xi_cap - omega) * [pi + 2 atan((n0 - n)/w)] / [pi + 2 atan((n0 - 1)/w)]`.
/// Equal to `xi_cap` at n = 1 and approaching `omega` for large n.
pub fn strain_factor(n: u32, p: &StrainParams) -> Result<f64> {
    debug_assert!(n >= 1 && p.w > 0.0);
    let denom = PI + 2.0 * ((p.n0 - 1.0) / p.w).atan();
    if denom.abs() < 1e-14 {
        return Err(Error::DegenerateDenominator);
    }
    let numer = PI + 2.0 * ((p.n0 - n as f64) / p.w).atan();
    Ok(p.omega + (p.xi_cap - p.omega) * numer / denom)
}

/// Per-family composition entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureSpec {
    /// Number fraction of this family; fractions sum to one.
    pub fraction: f64,
    /// Largest simulated shell index.
    pub max_shell: u32,
    pub size: SizeDistribution,
    pub strain: StrainParams,
}

/// Complete description of a synthetic sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSpec {
    /// X-ray wavelength in nm.
    pub wavelength_nm: f64,
    /// fcc bulk lattice constant in nm.
    pub lattice_nm: f64,
    /// Angular grid in radians; must lie inside (0, pi/2).
    pub grid: AngularGrid,
    pub structures: BTreeMap<StructureType, StructureSpec>,
    #[serde(default)]
    pub prefactor: PrefactorModel,
    /// Normalize the log-normal weights over the simulated shells.
    #[serde(default)]
    pub normalize_sizes: bool,
    /// Distance-grouping quantum in units of the nearest-neighbour
    /// distance. The default merges only floating-point twins; coarser
    /// values trade accuracy for speed.
    #[serde(default = "default_quantum")]
    pub distance_quantum_nn: f64,
}

fn default_quantum() -> f64 {
    DEFAULT_QUANTUM_NN
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0) {
            return Err(Error::InvalidSpec("wavelength must be positive".into()));
        }
        if !(self.lattice_nm > 0.0) {
            return Err(Error::InvalidSpec("lattice constant must be positive".into()));
        }
        if self.structures.is_empty() {
            return Err(Error::InvalidSpec("no structure types given".into()));
        }
        let mut total = 0.0;
        for (t, s) in &self.structures {
            if !(s.fraction >= 0.0) {
                return Err(Error::InvalidSpec(format!("{} fraction is negative", t.label())));
            }
            total += s.fraction;
            if s.max_shell < 1 || s.max_shell > MAX_SHELLS {
                return Err(Error::InvalidSpec(format!(
                    "{} max_shell {} outside 1..={MAX_SHELLS}",
                    t.label(),
                    s.max_shell
                )));
            }
            if !(s.size.xi > 0.0) || !(s.size.s > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "{} size distribution needs xi > 0 and s > 0",
                    t.label()
                )));
            }
            if !(s.strain.w > 0.0) {
                return Err(Error::InvalidSpec(format!("{} strain width must be positive", t.label())));
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "structure fractions sum to {total}, expected 1"
            )));
        }
        let theta_last = self.grid.theta(self.grid.len() - 1);
        if !(self.grid.theta0() > 0.0 && theta_last < PI / 2.0) {
            return Err(Error::InvalidSpec(
                "grid must lie strictly inside (0, pi/2)".into(),
            ));
        }
        if !(self.distance_quantum_nn >= 0.0) {
            return Err(Error::InvalidSpec("distance quantum must be >= 0".into()));
        }
        Ok(())
    }
}

struct Term {
    weight: f64,
    strain: f64,
    hist: DistanceHistogram,
}

fn prepare_terms(spec: &SampleSpec, parallel: bool) -> Result<Vec<Term>> {
    let quantum = spec.distance_quantum_nn * FRAC_1_SQRT_2;
    let mut terms = Vec::new();
    for (t, s) in &spec.structures {
        if s.fraction == 0.0 {
            continue;
        }
        let weights: Vec<f64> = (1..=s.max_shell)
            .map(|n| lognormal_weight(n, &s.size))
            .collect();
        let norm = if spec.normalize_sizes {
            let sum: f64 = weights.iter().sum();
            if sum == 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{} size weights sum to zero",
                    t.label()
                )));
            }
            sum
        } else {
            1.0
        };
        for n in 1..=s.max_shell {
            let cluster = build_cluster(*t, n)?;
            let hist = if parallel {
                distance_histogram(&cluster, quantum)
            } else {
                distance_histogram_seq(&cluster, quantum)
            };
            terms.push(Term {
                weight: s.fraction * weights[(n - 1) as usize] / norm,
                strain: strain_factor(n, &s.strain)?,
                hist,
            });
        }
    }
    Ok(terms)
}

fn intensity_at(spec: &SampleSpec, terms: &[Term], theta: f64) -> Result<f64> {
    let q = 2.0 * spec.lattice_nm * theta.sin() / spec.wavelength_nm;
    let q_prime = q / spec.lattice_nm;
    let a = scattering_prefactor(q_prime, &spec.prefactor)?;
    Ok(terms
        .iter()
        .map(|t| t.weight * debye_intensity(&t.hist, t.strain, q, a))
        .sum())
}

/// Noiseless total intensity profile; runs on rayon when the `parallel`
/// feature is enabled.
pub fn total_intensity(spec: &SampleSpec) -> Result<IntensityProfile> {
    #[cfg(feature = "parallel")]
    {
        spec.validate()?;
        let terms = prepare_terms(spec, true)?;
        let values = (0..spec.grid.len())
            .into_par_iter()
            .map(|k| intensity_at(spec, &terms, spec.grid.theta(k)))
            .collect::<Result<Vec<f64>>>()?;
        IntensityProfile::new(spec.grid, values, None)
    }
    #[cfg(not(feature = "parallel"))]
    {
        total_intensity_seq(spec)
    }
}

/// Sequential evaluation path; bitwise-identical to [`total_intensity`].
pub fn total_intensity_seq(spec: &SampleSpec) -> Result<IntensityProfile> {
    spec.validate()?;
    let terms = prepare_terms(spec, false)?;
    let values = (0..spec.grid.len())
        .map(|k| intensity_at(spec, &terms, spec.grid.theta(k)))
        .collect::<Result<Vec<f64>>>()?;
    IntensityProfile::new(spec.grid, values, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_type_spec(fractions: [f64; 3], max_shell: u32) -> SampleSpec {
        let mut structures = BTreeMap::new();
        for (t, x) in StructureType::ALL.into_iter().zip(fractions) {
            structures.insert(
                t,
                StructureSpec {
                    fraction: x,
                    max_shell,
                    size: SizeDistribution { xi: 5.0, s: 0.3 },
                    strain: StrainParams {
                        n0: 4.0,
                        omega: 1.0,
                        xi_cap: 1.0,
                        w: 0.5,
                    },
                },
            );
        }
        SampleSpec {
            wavelength_nm: 0.15418,
            lattice_nm: 0.40786,
            grid: AngularGrid::new(0.2, 0.003, 64).unwrap(),
            structures,
            prefactor: PrefactorModel::default(),
            normalize_sizes: false,
            distance_quantum_nn: DEFAULT_QUANTUM_NN,
        }
    }

    #[test]
    fn lognormal_weight_matches_printed_formula() {
        let dist = SizeDistribution { xi: 5.0, s: 0.3 };
        let w = lognormal_weight(5, &dist);
        // Prefactor exp(-0.15)/sqrt(2 pi 1.5) at the mode.
        assert!((w - 0.28036).abs() < 5e-6, "{w}");
        let expect = (-0.15f64).exp() / (2.0 * PI * 1.5f64).sqrt();
        assert!((w - expect).abs() < 1e-15);
    }

    #[test]
    fn lognormal_mode_is_at_xi() {
        let dist = SizeDistribution { xi: 5.0, s: 0.3 };
        let best = (1..=50u32)
            .max_by(|a, b| {
                lognormal_weight(*a, &dist)
                    .partial_cmp(&lognormal_weight(*b, &dist))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(best, 5);
        for n in 1..=50u32 {
            assert!(lognormal_weight(n, &dist) > 0.0);
        }
    }

    #[test]
    fn strain_factor_identities() {
        // Flat strain when omega == xi_cap.
        let flat = StrainParams {
            n0: 4.0,
            omega: 1.0,
            xi_cap: 1.0,
            w: 0.5,
        };
        for n in 1..=30u32 {
            assert_eq!(strain_factor(n, &flat).unwrap(), 1.0);
        }
        // Exact value xi_cap at n = 1.
        let p = StrainParams {
            n0: 4.0,
            omega: 1.0,
            xi_cap: 1.02,
            w: 0.5,
        };
        assert!((strain_factor(1, &p).unwrap() - 1.02).abs() < 1e-15);
        // Strictly decreasing toward omega.
        let mut prev = f64::INFINITY;
        for n in 1..=30u32 {
            let a = strain_factor(n, &p).unwrap();
            assert!(a < prev);
            assert!(a > p.omega);
            prev = a;
        }
        // Degenerate denominator for extreme n0.
        let bad = StrainParams {
            n0: -1e18,
            omega: 1.0,
            xi_cap: 1.0,
            w: 1.0,
        };
        assert!(matches!(
            strain_factor(2, &bad),
            Err(Error::DegenerateDenominator)
        ));
    }

    #[test]
    fn single_term_total_matches_direct_debye() {
        let mut spec = single_type_spec([1.0, 0.0, 0.0], 1);
        spec.distance_quantum_nn = 0.0;
        let profile = total_intensity(&spec).unwrap();

        let cluster = build_cluster(StructureType::Cuboctahedral, 1).unwrap();
        let hist = distance_histogram(&cluster, 0.0);
        let w = lognormal_weight(1, &SizeDistribution { xi: 5.0, s: 0.3 });
        for (k, v) in profile.values().iter().enumerate() {
            let theta = spec.grid.theta(k);
            let q = 2.0 * spec.lattice_nm * theta.sin() / spec.wavelength_nm;
            let expect = w * debye_intensity(&hist, 1.0, q, 1.0);
            assert!((v - expect).abs() <= 1e-12 * expect.abs());
        }
    }

    #[test]
    fn mixing_is_linear_in_fractions() {
        let pure_c = total_intensity(&single_type_spec([1.0, 0.0, 0.0], 2)).unwrap();
        let pure_i = total_intensity(&single_type_spec([0.0, 1.0, 0.0], 2)).unwrap();
        let mixed = total_intensity(&single_type_spec([0.25, 0.75, 0.0], 2)).unwrap();
        for k in 0..mixed.len() {
            let expect = 0.25 * pure_c.values()[k] + 0.75 * pure_i.values()[k];
            assert!((mixed.values()[k] - expect).abs() <= 1e-12 * expect.abs());
        }
    }

    #[test]
    fn profile_is_deterministic_and_positive() {
        let spec = single_type_spec([0.4, 0.3, 0.3], 3);
        let a = total_intensity(&spec).unwrap();
        let b = total_intensity(&spec).unwrap();
        assert_eq!(a.values(), b.values());
        let max = a.values().iter().cloned().fold(0.0, f64::max);
        for v in a.values() {
            assert!(*v > -1e-9 * max);
        }
    }

    #[test]
    fn parallel_and_sequential_profiles_are_bitwise_equal() {
        let spec = single_type_spec([0.5, 0.2, 0.3], 2);
        let a = total_intensity(&spec).unwrap();
        let b = total_intensity_seq(&spec).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn spec_validation_catches_errors() {
        let mut bad = single_type_spec([0.5, 0.2, 0.3], 2);
        bad.wavelength_nm = 0.0;
        assert!(matches!(total_intensity(&bad), Err(Error::InvalidSpec(_))));

        let mut bad = single_type_spec([0.5, 0.5, 0.5], 2);
        bad.structures.get_mut(&StructureType::Decahedral).unwrap().fraction = 0.5;
        assert!(matches!(total_intensity(&bad), Err(Error::InvalidSpec(_))));

        let mut bad = single_type_spec([1.0, 0.0, 0.0], 2);
        bad.grid = AngularGrid::new(1.0, 0.01, 100).unwrap(); // tops out past pi/2
        assert!(matches!(total_intensity(&bad), Err(Error::InvalidSpec(_))));
    }
}
