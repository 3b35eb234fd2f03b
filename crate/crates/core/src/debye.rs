//! Pair-distance histograms and the Debye scattering sum.
//!
//! The orientation-averaged intensity of a finite cluster is
//! `A * (N + sum_{i != j} sinc(2 pi q u_ij a))`; grouping equal pair
//! distances into a histogram turns the O(N^2) double sum into a single
//! pass over distinct distances, evaluated once per scattering angle.
//!
//! Histogram construction is the heavy loop. Pairs are split into a fixed
//! number of row ranges balanced by pair count; with the `parallel` feature
//! the ranges run on rayon, and the per-range accumulators are merged in
//! range order either way, so parallel and sequential builds are
//! bitwise-identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default grouping quantum in units of the nearest-neighbour distance:
/// effectively exact grouping, merging only floating-point twins.
pub const DEFAULT_QUANTUM_NN: f64 = 1e-9;

/// Fixed number of row ranges; keeps reduction order independent of the
/// thread count.
const RANGES: usize = 16;

/// Dense bin arrays are used up to this many bins; beyond it the sparse
/// path takes over.
const DENSE_BIN_LIMIT: usize = 4_000_000;

/// Sorted pair-distance histogram. Multiplicities count ordered pairs, so
/// they are even and sum to `n_atoms * (n_atoms - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistogram {
    entries: Vec<(f64, u64)>,
    n_atoms: usize,
}

impl DistanceHistogram {
    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn total_pairs(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

/// Builds the histogram, parallel when the feature is enabled.
pub fn distance_histogram(cluster: &Cluster, quantum: f64) -> DistanceHistogram {
    #[cfg(feature = "parallel")]
    {
        build_histogram(cluster, quantum, true)
    }
    #[cfg(not(feature = "parallel"))]
    {
        build_histogram(cluster, quantum, false)
    }
}

/// Sequential build, kept available for benchmarks and cross-checks.
pub fn distance_histogram_seq(cluster: &Cluster, quantum: f64) -> DistanceHistogram {
    build_histogram(cluster, quantum, false)
}

#[derive(Clone)]
enum Bins {
    Dense { scale: f64, slots: Vec<(u64, f64)> },
    Sparse { scale: f64, map: BTreeMap<i64, (u64, f64)> },
    Exact { map: BTreeMap<u64, (u64, f64)> },
}

impl Bins {
    fn record(&mut self, d: f64) {
        match self {
            Bins::Dense { scale, slots } => {
                let idx = (d * *scale).round() as usize;
                let slot = &mut slots[idx];
                slot.0 += 1;
                slot.1 += d;
            }
            Bins::Sparse { scale, map } => {
                let key = (d * *scale).round() as i64;
                let slot = map.entry(key).or_insert((0, 0.0));
                slot.0 += 1;
                slot.1 += d;
            }
            Bins::Exact { map } => {
                let slot = map.entry(d.to_bits()).or_insert((0, 0.0));
                slot.0 += 1;
                slot.1 += d;
            }
        }
    }

    fn merge(&mut self, other: Bins) {
        match (self, other) {
            (Bins::Dense { slots, .. }, Bins::Dense { slots: o, .. }) => {
                for (a, b) in slots.iter_mut().zip(o) {
                    a.0 += b.0;
                    a.1 += b.1;
                }
            }
            (Bins::Sparse { map, .. }, Bins::Sparse { map: o, .. }) => {
                for (k, v) in o {
                    let slot = map.entry(k).or_insert((0, 0.0));
                    slot.0 += v.0;
                    slot.1 += v.1;
                }
            }
            (Bins::Exact { map }, Bins::Exact { map: o }) => {
                for (k, v) in o {
                    let slot = map.entry(k).or_insert((0, 0.0));
                    slot.0 += v.0;
                    slot.1 += v.1;
                }
            }
            _ => unreachable!("mixed bin layouts"),
        }
    }

    fn into_entries(self) -> Vec<(f64, u64)> {
        let collect = |count: u64, sum: f64| (sum / count as f64, 2 * count);
        match self {
            Bins::Dense { slots, .. } => slots
                .into_iter()
                .filter(|(c, _)| *c > 0)
                .map(|(c, s)| collect(c, s))
                .collect(),
            Bins::Sparse { map, .. } => map.into_values().map(|(c, s)| collect(c, s)).collect(),
            Bins::Exact { map } => map.into_values().map(|(c, s)| collect(c, s)).collect(),
        }
    }
}

fn build_histogram(cluster: &Cluster, quantum: f64, parallel: bool) -> DistanceHistogram {
    let pts = &cluster.positions;
    let n = pts.len();
    if n < 2 {
        return DistanceHistogram {
            entries: Vec::new(),
            n_atoms: n,
        };
    }

    // Diameter bound from the coordinate extents.
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diameter_sq: f64 = (0..3).map(|k| (hi[k] - lo[k]) * (hi[k] - lo[k])).sum();
    let diameter = diameter_sq.sqrt();

    let template = if quantum > 0.0 {
        let bins = (diameter / quantum).ceil() as usize + 2;
        if bins <= DENSE_BIN_LIMIT {
            Bins::Dense {
                scale: 1.0 / quantum,
                slots: vec![(0, 0.0); bins],
            }
        } else {
            Bins::Sparse {
                scale: 1.0 / quantum,
                map: BTreeMap::new(),
            }
        }
    } else {
        Bins::Exact {
            map: BTreeMap::new(),
        }
    };

    // Row ranges with roughly equal pair counts: row i owns n - 1 - i pairs.
    let total_pairs = n * (n - 1) / 2;
    let per_range = total_pairs.div_ceil(RANGES);
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    let mut acc = 0usize;
    for i in 0..n - 1 {
        acc += n - 1 - i;
        if acc >= per_range || i == n - 2 {
            ranges.push((start, i + 1));
            start = i + 1;
            acc = 0;
        }
    }

    let scan_range = |range: (usize, usize)| {
        let mut bins = template.clone();
        for i in range.0..range.1 {
            let pi = pts[i];
            for pj in &pts[i + 1..] {
                let dx = pi[0] - pj[0];
                let dy = pi[1] - pj[1];
                let dz = pi[2] - pj[2];
                bins.record((dx * dx + dy * dy + dz * dz).sqrt());
            }
        }
        bins
    };

    let partials: Vec<Bins> = if parallel {
        #[cfg(feature = "parallel")]
        {
            ranges.par_iter().map(|&r| scan_range(r)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            unreachable!("parallel build requested without the parallel feature")
        }
    } else {
        ranges.iter().map(|&r| scan_range(r)).collect()
    };

    let mut bins = template;
    for part in partials {
        bins.merge(part);
    }

    DistanceHistogram {
        entries: bins.into_entries(),
        n_atoms: n,
    }
}

/// Incident intensity and angle-dependent attenuation model for the
/// prefactor `A = I0 [T(q') f(q')]^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PrefactorModel {
    /// Incident intensity I0.
    pub i0: f64,
    /// Debye-Waller B in the attenuation `T(q') = exp(-B q'^2 / 4)`;
    /// zero disables it.
    pub debye_waller_b: f64,
    /// Optional sum-of-Gaussians atomic form factor; identity when absent.
    pub form_factor: Option<GaussianFormFactor>,
}

impl Default for PrefactorModel {
    fn default() -> Self {
        Self {
            i0: 1.0,
            debye_waller_b: 0.0,
            form_factor: None,
        }
    }
}

/// `f(q') = c + sum_i a_i exp(-b_i (q'/2)^2)`, with q' = 2 sin(theta)/lambda.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianFormFactor {
    /// (amplitude, width) pairs.
    pub gaussians: Vec<(f64, f64)>,
    #[serde(default)]
    pub constant: f64,
}

/// Evaluates the prefactor at the scattering-vector length `q'`.
pub fn scattering_prefactor(q_prime: f64, model: &PrefactorModel) -> Result<f64> {
    let t = (-model.debye_waller_b * q_prime * q_prime / 4.0).exp();
    let f = match &model.form_factor {
        None => 1.0,
        Some(ff) => {
            if !ff.gaussians.is_empty() && ff.gaussians.iter().all(|(a, _)| *a == 0.0) {
                return Err(Error::BadCoefficients(
                    "all form-factor amplitudes are zero".into(),
                ));
            }
            if ff.gaussians.is_empty() && ff.constant == 0.0 {
                return Err(Error::BadCoefficients("form factor is identically zero".into()));
            }
            let half = q_prime / 2.0;
            ff.constant
                + ff.gaussians
                    .iter()
                    .map(|(a, b)| a * (-b * half * half).exp())
                    .sum::<f64>()
        }
    };
    Ok(model.i0 * (t * f) * (t * f))
}

/// Debye sum over a histogram: `A (N + sum m sinc(2 pi q u a))` where `a`
/// is the strain factor. Each sinc term tends to its multiplicity as q -> 0.
pub fn debye_intensity(hist: &DistanceHistogram, strain: f64, q: f64, prefactor: f64) -> f64 {
    debug_assert!(strain > 0.0);
    let omega = 2.0 * std::f64::consts::PI * q * strain;
    let mut acc = hist.n_atoms() as f64;
    for &(u, m) in hist.entries() {
        let x = omega * u;
        let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
        acc += m as f64 * sinc;
    }
    prefactor * acc
}
