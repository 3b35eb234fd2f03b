//! Closed-shell nanocluster geometries.
//!
//! Three canonical families, indexed by shell count n:
//! cuboctahedra (fcc lattice bounded by {100}/{111} facets), Mackay
//! icosahedra (20 twinned fcc tetrahedra on icosahedral faces) and
//! pentagonal decahedra (5 twinned fcc tetrahedra around a common axis).
//! All coordinates are rescaled so the minimum interatomic distance is
//! exactly 1/sqrt(2), the reference length used by the scattering model.

use std::collections::HashSet;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported shell index.
pub const MAX_SHELLS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureType {
    Cuboctahedral,
    Icosahedral,
    Decahedral,
}

impl StructureType {
    pub const ALL: [StructureType; 3] = [
        StructureType::Cuboctahedral,
        StructureType::Icosahedral,
        StructureType::Decahedral,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            StructureType::Cuboctahedral => "cuboctahedral",
            StructureType::Icosahedral => "icosahedral",
            StructureType::Decahedral => "decahedral",
        }
    }
}

/// A finite atom cluster with unit-free coordinates (nearest-neighbour
/// distance = 1/sqrt(2)).
#[derive(Debug, Clone)]
pub struct Cluster {
    pub structure: StructureType,
    pub shells: u32,
    pub positions: Vec<[f64; 3]>,
}

impl Cluster {
    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }
}

/// Builds the closed-shell cluster of the given family and shell count.
pub fn build_cluster(structure: StructureType, shells: u32) -> Result<Cluster> {
    if shells < 1 || shells > MAX_SHELLS {
        return Err(Error::UnsupportedShells {
            shells,
            max: MAX_SHELLS,
        });
    }
    let (raw, min_dist) = match structure {
        StructureType::Cuboctahedral => (cuboctahedron(shells), 2f64.sqrt()),
        StructureType::Icosahedral => (icosahedron(shells), golden_radius()),
        StructureType::Decahedral => (decahedron(shells), 1.0),
    };
    let factor = FRAC_1_SQRT_2 / min_dist;
    let positions = raw
        .into_iter()
        .map(|p| [p[0] * factor, p[1] * factor, p[2] * factor])
        .collect();
    Ok(Cluster {
        structure,
        shells,
        positions,
    })
}

/// fcc sites (x + y + z even, units of a/2) inside the cuboctahedron with
/// {100} facets at n and {111} facets at Manhattan radius 2n.
fn cuboctahedron(n: u32) -> Vec<[f64; 3]> {
    let n = n as i64;
    let mut out = Vec::new();
    for x in -n..=n {
        for y in -n..=n {
            for z in -n..=n {
                if (x + y + z) % 2 != 0 {
                    continue;
                }
                if x.abs() + y.abs() + z.abs() > 2 * n {
                    continue;
                }
                out.push([x as f64, y as f64, z as f64]);
            }
        }
    }
    out
}

/// Distance from the centre to an icosahedron vertex when edges have
/// length 2: sqrt(1 + phi^2). This is the smallest interatomic distance in
/// a Mackay icosahedron (radial spacing is shorter than in-shell spacing).
fn golden_radius() -> f64 {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    (1.0 + phi * phi).sqrt()
}

fn icosahedron_vertices() -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(12);
    for &s1 in &[1.0f64, -1.0] {
        for &s2 in &[1.0f64, -1.0] {
            v.push([0.0, s1, s2 * phi]);
            v.push([s1, s2 * phi, 0.0]);
            v.push([s2 * phi, 0.0, s1]);
        }
    }
    v
}

/// Faces as vertex index triples: triangles of mutually adjacent vertices
/// (pairwise distance equal to the edge length 2).
fn icosahedron_faces(vertices: &[[f64; 3]]) -> Vec<[usize; 3]> {
    let edge_sq = 4.0;
    let close = |a: &[f64; 3], b: &[f64; 3]| {
        let d: f64 = (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum();
        (d - edge_sq).abs() < 1e-9
    };
    let mut faces = Vec::new();
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            if !close(&vertices[i], &vertices[j]) {
                continue;
            }
            for k in j + 1..vertices.len() {
                if close(&vertices[i], &vertices[k]) && close(&vertices[j], &vertices[k]) {
                    faces.push([i, j, k]);
                }
            }
        }
    }
    debug_assert_eq!(faces.len(), 20);
    faces
}

/// Mackay icosahedron: centre plus, for each shell s and face (A, B, C),
/// the points alpha A + beta B + gamma C with alpha + beta + gamma = s.
fn icosahedron(n: u32) -> Vec<[f64; 3]> {
    let vertices = icosahedron_vertices();
    let faces = icosahedron_faces(&vertices);
    let mut dedup = PointSet::new();
    dedup.insert([0.0, 0.0, 0.0]);
    for s in 1..=n as i64 {
        for face in &faces {
            let (a, b, c) = (vertices[face[0]], vertices[face[1]], vertices[face[2]]);
            for alpha in 0..=s {
                for beta in 0..=(s - alpha) {
                    let gamma = s - alpha - beta;
                    let p = [
                        alpha as f64 * a[0] + beta as f64 * b[0] + gamma as f64 * c[0],
                        alpha as f64 * a[1] + beta as f64 * b[1] + gamma as f64 * c[1],
                        alpha as f64 * a[2] + beta as f64 * b[2] + gamma as f64 * c[2],
                    ];
                    dedup.insert(p);
                }
            }
        }
    }
    dedup.into_points()
}

/// Pentagonal decahedron: five fcc tetrahedra sharing the fivefold axis.
/// Tetrahedron t has vertices n*A, n*B (the axis, |A - B| = 1) and the ring
/// points n*E_t, n*E_{t+1}; it is filled with the barycentric integer
/// lattice of depth n.
fn decahedron(n: u32) -> Vec<[f64; 3]> {
    let apex_top = [0.0, 0.0, 0.5];
    let apex_bot = [0.0, 0.0, -0.5];
    let ring_radius = 3f64.sqrt() / 2.0;
    let ring: Vec<[f64; 3]> = (0..5)
        .map(|t| {
            let ang = 2.0 * PI * t as f64 / 5.0;
            [ring_radius * ang.cos(), ring_radius * ang.sin(), 0.0]
        })
        .collect();

    let n = n as i64;
    let mut dedup = PointSet::new();
    for t in 0..5 {
        let e0 = ring[t];
        let e1 = ring[(t + 1) % 5];
        for a in 0..=n {
            for b in 0..=(n - a) {
                for c in 0..=(n - a - b) {
                    let d = n - a - b - c;
                    let p = [
                        a as f64 * apex_top[0]
                            + b as f64 * apex_bot[0]
                            + c as f64 * e0[0]
                            + d as f64 * e1[0],
                        a as f64 * apex_top[1]
                            + b as f64 * apex_bot[1]
                            + c as f64 * e0[1]
                            + d as f64 * e1[1],
                        a as f64 * apex_top[2]
                            + b as f64 * apex_bot[2]
                            + c as f64 * e0[2]
                            + d as f64 * e1[2],
                    ];
                    dedup.insert(p);
                }
            }
        }
    }
    dedup.into_points()
}

/// Order-preserving point set with quantized deduplication. Shared
/// boundary sites are produced bit-identically by every face that owns
/// them, so a coarse quantum (far below the lattice spacing) is safe.
struct PointSet {
    seen: HashSet<[i64; 3]>,
    points: Vec<[f64; 3]>,
}

impl PointSet {
    const QUANTUM: f64 = 2_097_152.0; // 2^21 per unit length

    fn new() -> Self {
        Self {
            seen: HashSet::new(),
            points: Vec::new(),
        }
    }

    fn insert(&mut self, p: [f64; 3]) {
        let key = [
            (p[0] * Self::QUANTUM).round() as i64,
            (p[1] * Self::QUANTUM).round() as i64,
            (p[2] * Self::QUANTUM).round() as i64,
        ];
        if self.seen.insert(key) {
            self.points.push(p);
        }
    }

    fn into_points(self) -> Vec<[f64; 3]> {
        self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Magic number of closed-shell cuboctahedra and Mackay icosahedra.
    fn magic_number(n: u64) -> u64 {
        (10 * n * n * n + 15 * n * n + 11 * n + 3) / 3
    }

    /// Independent count for the five-tetrahedra decahedron via
    /// inclusion-exclusion: 5 tetrahedra of depth n, minus the 5 shared
    /// triangular faces, plus the axis shared by all of them.
    fn decahedron_count(n: u64) -> u64 {
        let tetra = (n + 1) * (n + 2) * (n + 3) / 6;
        let face = (n + 1) * (n + 2) / 2;
        5 * tetra - 5 * face + (n + 1)
    }

    fn min_pairwise(points: &[[f64; 3]]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d: f64 = (0..3)
                    .map(|k| (points[i][k] - points[j][k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                best = best.min(d);
            }
        }
        best
    }

    #[test]
    fn cuboctahedron_magic_numbers() {
        for n in 1..=6u32 {
            let c = build_cluster(StructureType::Cuboctahedral, n).unwrap();
            assert_eq!(c.n_atoms() as u64, magic_number(n as u64), "shell {n}");
        }
        assert_eq!(build_cluster(StructureType::Cuboctahedral, 1).unwrap().n_atoms(), 13);
        assert_eq!(build_cluster(StructureType::Cuboctahedral, 2).unwrap().n_atoms(), 55);
        assert_eq!(build_cluster(StructureType::Cuboctahedral, 3).unwrap().n_atoms(), 147);
    }

    #[test]
    fn icosahedron_magic_numbers() {
        for n in 1..=6u32 {
            let c = build_cluster(StructureType::Icosahedral, n).unwrap();
            assert_eq!(c.n_atoms() as u64, magic_number(n as u64), "shell {n}");
        }
    }

    #[test]
    fn decahedron_counts_match_inclusion_exclusion() {
        let mut prev = 0;
        for n in 1..=8u32 {
            let c = build_cluster(StructureType::Decahedral, n).unwrap();
            assert_eq!(c.n_atoms() as u64, decahedron_count(n as u64), "shell {n}");
            assert!(c.n_atoms() > prev);
            prev = c.n_atoms();
        }
        // Known small values of the family: 7, 23, 54.
        assert_eq!(decahedron_count(1), 7);
        assert_eq!(decahedron_count(2), 23);
        assert_eq!(decahedron_count(3), 54);
    }

    #[test]
    fn minimum_distance_is_normalized() {
        for t in StructureType::ALL {
            for n in 1..=4u32 {
                let c = build_cluster(t, n).unwrap();
                let min = min_pairwise(&c.positions);
                assert!(
                    (min - FRAC_1_SQRT_2).abs() < 1e-14,
                    "{t:?} shell {n}: min {min}"
                );
            }
        }
    }

    #[test]
    fn shell_cap_is_enforced() {
        assert!(matches!(
            build_cluster(StructureType::Icosahedral, 0),
            Err(Error::UnsupportedShells { .. })
        ));
        assert!(matches!(
            build_cluster(StructureType::Decahedral, MAX_SHELLS + 1),
            Err(Error::UnsupportedShells { .. })
        ));
    }
}
