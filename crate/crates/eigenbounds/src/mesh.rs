//! Reference domains and uniform red refinement of simplicial meshes.
//!
//! Coordinates are stored symbolically as a + b*sqrt(3) with rational a, b,
//! so irrational vertices (the equilateral triangles) survive refinement
//! exactly and can be lowered to floats or enclosures at assembly time.

use crate::error::{Error, Result};
use crate::rigor::Interval;
use crate::scalar::Scalar;
use num_rational::Ratio;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

type Q = Ratio<i64>;

/// Exact coordinate value a + b*sqrt(3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactCoord {
    pub rational: Q,
    pub sqrt3: Q,
}

impl ExactCoord {
    pub fn rational(n: i64, d: i64) -> Self {
        ExactCoord {
            rational: Q::new(n, d),
            sqrt3: Q::new(0, 1),
        }
    }

    pub fn sqrt3_times(n: i64, d: i64) -> Self {
        ExactCoord {
            rational: Q::new(0, 1),
            sqrt3: Q::new(n, d),
        }
    }

    pub fn zero() -> Self {
        ExactCoord::rational(0, 1)
    }

    pub fn add(self, other: Self) -> Self {
        ExactCoord {
            rational: self.rational + other.rational,
            sqrt3: self.sqrt3 + other.sqrt3,
        }
    }

    pub fn sub(self, other: Self) -> Self {
        ExactCoord {
            rational: self.rational - other.rational,
            sqrt3: self.sqrt3 - other.sqrt3,
        }
    }

    pub fn mul(self, other: Self) -> Self {
        // (a + b*r3)(c + d*r3) = ac + 3bd + (ad + bc)*r3
        ExactCoord {
            rational: self.rational * other.rational + Q::from_integer(3) * self.sqrt3 * other.sqrt3,
            sqrt3: self.rational * other.sqrt3 + self.sqrt3 * other.rational,
        }
    }

    pub fn midpoint(self, other: Self) -> Self {
        let half = Q::new(1, 2);
        ExactCoord {
            rational: (self.rational + other.rational) * half,
            sqrt3: (self.sqrt3 + other.sqrt3) * half,
        }
    }

    /// Exact sign of a + b*sqrt(3).
    pub fn sign(self) -> i32 {
        let (a, b) = (self.rational, self.sqrt3);
        let zero = Q::new(0, 1);
        let sa = if a > zero { 1 } else if a < zero { -1 } else { 0 };
        let sb = if b > zero { 1 } else if b < zero { -1 } else { 0 };
        match (sa, sb) {
            (0, 0) => 0,
            (s, 0) | (0, s) => s,
            (1, 1) => 1,
            (-1, -1) => -1,
            // opposite signs: compare a^2 against 3 b^2
            _ => {
                let lhs = a * a;
                let rhs = Q::from_integer(3) * b * b;
                let cmp = if lhs > rhs { 1 } else if lhs < rhs { -1 } else { 0 };
                if sa > 0 {
                    // a > 0, b < 0: positive iff a^2 > 3 b^2
                    if cmp == 0 { 0 } else { cmp }
                } else {
                    // a < 0, b > 0: positive iff 3 b^2 > a^2
                    -cmp
                }
            }
        }
    }

    pub fn lower<S: Scalar>(self) -> S {
        let r = S::from_ratio(*self.rational.numer(), *self.rational.denom());
        if self.sqrt3 == Q::new(0, 1) {
            return r;
        }
        let s = S::from_ratio(*self.sqrt3.numer(), *self.sqrt3.denom());
        r + s * S::sqrt3()
    }

    pub fn approx(self) -> f64 {
        self.lower::<f64>()
    }
}

impl fmt::Display for ExactCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sqrt3 == Q::new(0, 1) {
            write!(f, "{}", self.rational)
        } else if self.rational == Q::new(0, 1) {
            write!(f, "sqrt3*{}", self.sqrt3)
        } else {
            write!(f, "{}+sqrt3*{}", self.rational, self.sqrt3)
        }
    }
}

/// Vertex with exact coordinates; length equals the ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<ExactCoord>,
}

impl Point {
    pub fn new(coords: Vec<ExactCoord>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a.midpoint(b))
                .collect(),
        }
    }

    /// Exact squared Euclidean distance.
    pub fn dist_sq(&self, other: &Point) -> ExactCoord {
        let mut acc = ExactCoord::zero();
        for (&a, &b) in self.coords.iter().zip(&other.coords) {
            let d = a.sub(b);
            acc = acc.add(d.mul(d));
        }
        acc
    }

    pub fn lower<S: Scalar>(&self) -> Vec<S> {
        self.coords.iter().map(|&c| c.lower()).collect()
    }
}

/// Facet of the mesh: edge in 2D, triangular face in 3D.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
    /// Incident cells (one for boundary facets, two for interior).
    pub cells: Vec<usize>,
    pub boundary: bool,
}

/// Conforming simplicial mesh of a reference domain.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Each cell lists dim+1 vertex indices with positive orientation.
    pub cells: Vec<Vec<usize>>,
    pub facets: Vec<Facet>,
    /// cell_facets[c][i] is the facet opposite local vertex i of cell c.
    pub cell_facets: Vec<Vec<usize>>,
    pub level: u32,
    /// Maximum cell diameter, recomputed from actual geometry.
    pub h: f64,
    pub domain: DomainId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum DomainId {
    K1,
    K2,
    K3,
    T1,
    T2,
    T3,
    T4,
    T5,
    Square,
}

impl DomainId {
    pub const ALL: [DomainId; 9] = [
        DomainId::K1,
        DomainId::K2,
        DomainId::K3,
        DomainId::T1,
        DomainId::T2,
        DomainId::T3,
        DomainId::T4,
        DomainId::T5,
        DomainId::Square,
    ];

    pub fn dim(self) -> usize {
        match self {
            DomainId::K1 | DomainId::K2 | DomainId::K3 | DomainId::Square => 2,
            _ => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainId::K1 => "K1",
            DomainId::K2 => "K2",
            DomainId::K3 => "K3",
            DomainId::T1 => "T1",
            DomainId::T2 => "T2",
            DomainId::T3 => "T3",
            DomainId::T4 => "T4",
            DomainId::T5 => "T5",
            DomainId::Square => "SQUARE",
        }
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "K1" => Ok(DomainId::K1),
            "K2" => Ok(DomainId::K2),
            "K3" => Ok(DomainId::K3),
            "T1" => Ok(DomainId::T1),
            "T2" => Ok(DomainId::T2),
            "T3" => Ok(DomainId::T3),
            "T4" => Ok(DomainId::T4),
            "T5" => Ok(DomainId::T5),
            "SQUARE" => Ok(DomainId::Square),
            _ => Err(Error::UnknownDomain(s.to_string())),
        }
    }
}

fn q(n: i64, d: i64) -> ExactCoord {
    ExactCoord::rational(n, d)
}

fn s3(n: i64, d: i64) -> ExactCoord {
    ExactCoord::sqrt3_times(n, d)
}

fn p2(x: ExactCoord, y: ExactCoord) -> Point {
    Point::new(vec![x, y])
}

fn p3(x: ExactCoord, y: ExactCoord, z: ExactCoord) -> Point {
    Point::new(vec![x, y, z])
}

/// Build the single-cell (two for SQUARE) mesh of a reference domain.
pub fn reference_domain(domain: DomainId) -> SimplicialMesh {
    let (vertices, cells) = match domain {
        DomainId::K1 => (
            vec![p2(q(0, 1), q(0, 1)), p2(q(1, 1), q(0, 1)), p2(q(0, 1), q(1, 1))],
            vec![vec![0, 1, 2]],
        ),
        DomainId::K2 => (
            vec![p2(q(0, 1), q(0, 1)), p2(q(1, 1), q(0, 1)), p2(q(1, 2), s3(1, 2))],
            vec![vec![0, 1, 2]],
        ),
        // The published vertex list labels this triangle K2 a second time;
        // it is treated as K3 here.
        DomainId::K3 => (
            vec![p2(q(0, 1), q(0, 1)), p2(q(1, 2), q(0, 1)), p2(q(1, 2), s3(1, 2))],
            vec![vec![0, 1, 2]],
        ),
        DomainId::Square => (
            vec![
                p2(q(0, 1), q(0, 1)),
                p2(q(1, 1), q(0, 1)),
                p2(q(0, 1), q(1, 1)),
                p2(q(1, 1), q(1, 1)),
            ],
            vec![vec![0, 1, 2], vec![1, 3, 2]],
        ),
        _ => {
            let p1 = p3(q(0, 1), q(0, 1), q(0, 1));
            let p2v = p3(q(1, 1), q(0, 1), q(0, 1));
            let p3v = p3(q(0, 1), q(1, 1), q(0, 1));
            let p4 = p3(q(0, 1), q(0, 1), q(1, 1));
            let p5 = p3(q(1, 1), q(1, 1), q(1, 1));
            // centroids of T1 and T2
            let p6 = p3(q(1, 4), q(1, 4), q(1, 4));
            let p7 = p3(q(1, 2), q(1, 2), q(1, 2));
            let verts = match domain {
                DomainId::T1 => vec![p1, p2v, p3v, p4],
                DomainId::T2 => vec![p2v, p3v, p4, p5],
                DomainId::T3 => vec![p1, p2v, p3v, p6],
                DomainId::T4 => vec![p2v, p3v, p4, p6],
                DomainId::T5 => vec![p2v, p3v, p4, p7],
                _ => unreachable!(),
            };
            (verts, vec![vec![0, 1, 2, 3]])
        }
    };
    build_mesh(domain, vertices, cells, 0)
}

/// Exact signed volume times d! (the edge-vector determinant).
fn signed_volume_det(vertices: &[Point], cell: &[usize], dim: usize) -> ExactCoord {
    let v0 = &vertices[cell[0]];
    let e: Vec<Vec<ExactCoord>> = (1..=dim)
        .map(|i| {
            vertices[cell[i]]
                .coords
                .iter()
                .zip(&v0.coords)
                .map(|(&a, &b)| a.sub(b))
                .collect()
        })
        .collect();
    match dim {
        2 => e[0][0].mul(e[1][1]).sub(e[0][1].mul(e[1][0])),
        3 => {
            let m00 = e[1][1].mul(e[2][2]).sub(e[1][2].mul(e[2][1]));
            let m01 = e[1][0].mul(e[2][2]).sub(e[1][2].mul(e[2][0]));
            let m02 = e[1][0].mul(e[2][1]).sub(e[1][1].mul(e[2][0]));
            e[0][0].mul(m00).sub(e[0][1].mul(m01)).add(e[0][2].mul(m02))
        }
        _ => unreachable!("dimension must be 2 or 3"),
    }
}

/// Orient a cell positively, flipping the last two vertices if needed.
fn orient_cell(vertices: &[Point], mut cell: Vec<usize>, dim: usize) -> Vec<usize> {
    let det = signed_volume_det(vertices, &cell, dim);
    match det.sign() {
        1 => cell,
        -1 => {
            let n = cell.len();
            cell.swap(n - 1, n - 2);
            cell
        }
        _ => panic!("degenerate cell in mesh construction"),
    }
}

fn build_mesh(
    domain: DomainId,
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    level: u32,
) -> SimplicialMesh {
    let dim = domain.dim();
    let cells: Vec<Vec<usize>> = cells
        .into_iter()
        .map(|c| orient_cell(&vertices, c, dim))
        .collect();

    // derive facets: the facet opposite local vertex i of each cell
    let mut facet_map: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut facets: Vec<Facet> = Vec::new();
    let mut cell_facets = vec![vec![0usize; dim + 1]; cells.len()];
    for (ci, cell) in cells.iter().enumerate() {
        for omit in 0..=dim {
            let mut key: Vec<usize> = cell
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != omit)
                .map(|(_, &v)| v)
                .collect();
            key.sort_unstable();
            let fid = *facet_map.entry(key.clone()).or_insert_with(|| {
                facets.push(Facet {
                    vertices: key,
                    cells: Vec::new(),
                    boundary: false,
                });
                facets.len() - 1
            });
            facets[fid].cells.push(ci);
            cell_facets[ci][omit] = fid;
        }
    }
    for f in &mut facets {
        debug_assert!(f.cells.len() == 1 || f.cells.len() == 2);
        f.boundary = f.cells.len() == 1;
    }

    let h = mesh_diameter_f64(&vertices, &cells);
    SimplicialMesh {
        dim,
        vertices,
        cells,
        facets,
        cell_facets,
        level,
        h,
        domain,
    }
}

fn mesh_diameter_f64(vertices: &[Point], cells: &[Vec<usize>]) -> f64 {
    let mut h: f64 = 0.0;
    for cell in cells {
        for (a, &va) in cell.iter().enumerate() {
            for &vb in cell.iter().skip(a + 1) {
                let d2 = vertices[va].dist_sq(&vertices[vb]).approx();
                h = h.max(d2.sqrt());
            }
        }
    }
    h
}

impl SimplicialMesh {
    /// Maximum cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    /// Rigorous enclosure of the mesh size (upper end certified).
    pub fn mesh_size_enclosure(&self) -> Interval {
        let mut lo: f64 = 0.0;
        let mut hi: f64 = 0.0;
        for cell in &self.cells {
            for (a, &va) in cell.iter().enumerate() {
                for &vb in cell.iter().skip(a + 1) {
                    let d2: Interval = self.vertices[va].dist_sq(&self.vertices[vb]).lower();
                    let d = d2.sqrt_clamped();
                    lo = lo.max(d.lo);
                    hi = hi.max(d.hi);
                }
            }
        }
        Interval::new(lo, hi)
    }

    /// Exact volume of cell `ci` times d!.
    pub fn cell_volume_det(&self, ci: usize) -> ExactCoord {
        signed_volume_det(&self.vertices, &self.cells[ci], self.dim)
    }

    /// Total mesh volume (float).
    pub fn total_volume(&self) -> f64 {
        let dfact = if self.dim == 2 { 2.0 } else { 6.0 };
        (0..self.cells.len())
            .map(|ci| self.cell_volume_det(ci).approx() / dfact)
            .sum()
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets.iter().enumerate().filter(|(_, f)| f.boundary)
    }

    /// One uniform red refinement step.
    pub fn refine(&self) -> SimplicialMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let m = vertices.len();
            vertices.push(vertices[a].midpoint(&vertices[b]));
            midpoint.insert(key, m);
            m
        };

        let mut cells: Vec<Vec<usize>> = Vec::with_capacity(self.cells.len() * (1 << self.dim));
        for cell in &self.cells {
            if self.dim == 2 {
                let (v0, v1, v2) = (cell[0], cell[1], cell[2]);
                let m01 = mid(v0, v1, &mut vertices);
                let m02 = mid(v0, v2, &mut vertices);
                let m12 = mid(v1, v2, &mut vertices);
                cells.push(vec![v0, m01, m02]);
                cells.push(vec![m01, v1, m12]);
                cells.push(vec![m02, m12, v2]);
                cells.push(vec![m01, m12, m02]);
            } else {
                let (v0, v1, v2, v3) = (cell[0], cell[1], cell[2], cell[3]);
                let m01 = mid(v0, v1, &mut vertices);
                let m02 = mid(v0, v2, &mut vertices);
                let m03 = mid(v0, v3, &mut vertices);
                let m12 = mid(v1, v2, &mut vertices);
                let m13 = mid(v1, v3, &mut vertices);
                let m23 = mid(v2, v3, &mut vertices);
                // four corner children keep the parent orientation
                cells.push(vec![v0, m01, m02, m03]);
                cells.push(vec![m01, v1, m12, m13]);
                cells.push(vec![m02, m12, v2, m23]);
                cells.push(vec![m03, m13, m23, v3]);
                // octahedron: split by the shortest of the three diagonals,
                // ties broken by the fixed candidate order below
                let diags = [(m01, m23), (m02, m13), (m03, m12)];
                let mut best = 0usize;
                for cand in 1..3 {
                    let d_best =
                        vertices[diags[best].0].dist_sq(&vertices[diags[best].1]);
                    let d_cand =
                        vertices[diags[cand].0].dist_sq(&vertices[diags[cand].1]);
                    if d_cand.sub(d_best).sign() < 0 {
                        best = cand;
                    }
                }
                let (da, db) = diags[best];
                // the remaining four midpoints form the equatorial cycle
                let equator: [usize; 4] = match best {
                    0 => [m02, m03, m13, m12],
                    1 => [m01, m03, m23, m12],
                    _ => [m01, m02, m23, m13],
                };
                for k in 0..4 {
                    let e0 = equator[k];
                    let e1 = equator[(k + 1) % 4];
                    cells.push(vec![da, db, e0, e1]);
                }
            }
        }
        build_mesh(self.domain, vertices, cells, self.level + 1)
    }

    /// JSON dump with lowered float coordinates.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "vertices": self.vertices.iter().map(|p| p.lower::<f64>()).collect::<Vec<_>>(),
            "cells": self.cells,
            "level": self.level,
            "h": self.h,
        })
    }
}

/// Refine `mesh` `levels` times.
pub fn refined(domain: DomainId, levels: u32) -> SimplicialMesh {
    let mut m = reference_domain(domain);
    for _ in 0..levels {
        m = m.refine();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_reference_mesh() {
        let m = reference_domain(DomainId::K1);
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.facets.len(), 3);
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.total_volume() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k2_has_unit_diameter_and_sqrt3_coordinate() {
        let m = reference_domain(DomainId::K2);
        assert!((m.h - 1.0).abs() < 1e-15);
        let y: Interval = m.vertices[2].coords[1].lower();
        assert!(y.contains(0.8660254037844386));
        assert!(y.width() <= 1e-15);
    }

    #[test]
    fn unknown_domain_is_config_error() {
        assert!("K9".parse::<DomainId>().is_err());
        assert!("SQUARE".parse::<DomainId>().is_ok());
    }

    #[test]
    fn t2_volume_is_one_third() {
        let m = reference_domain(DomainId::T2);
        assert!((m.total_volume() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn refine_k1_counts_and_sizes() {
        let m = reference_domain(DomainId::K1);
        let r = m.refine();
        assert_eq!(r.cells.len(), 4);
        assert!((r.h - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let mut m5 = m;
        for _ in 0..5 {
            m5 = m5.refine();
        }
        assert_eq!(m5.cells.len(), 1024);
        assert!((m5.h - 2f64.sqrt() / 32.0).abs() < 1e-15);
        // boundary facet count 3 * 2^5
        assert_eq!(m5.boundary_facets().count(), 96);
    }

    #[test]
    fn refine_conserves_volume_exactly() {
        for domain in [DomainId::T1, DomainId::T3, DomainId::T5, DomainId::K2] {
            let m0 = reference_domain(domain);
            let m2 = m0.refine().refine();
            let expected = m0.total_volume();
            assert!(
                (m2.total_volume() - expected).abs() <= 1e-14 * expected.abs(),
                "volume drift on {domain}"
            );
            let per_level = if domain.dim() == 2 { 16 } else { 64 };
            assert_eq!(m2.cells.len(), m0.cells.len() * per_level);
        }
    }

    #[test]
    fn tet_refinement_volumes_sum_to_parent() {
        let m = reference_domain(DomainId::T1).refine();
        assert_eq!(m.cells.len(), 8);
        assert!((m.total_volume() - 1.0 / 6.0).abs() < 1e-15);
        for ci in 0..m.cells.len() {
            assert!(m.cell_volume_det(ci).sign() > 0, "cell {ci} not positively oriented");
        }
    }

    #[test]
    fn facets_shared_by_at_most_two_cells() {
        for domain in [DomainId::K3, DomainId::T4, DomainId::Square] {
            let m = refined(domain, 2);
            for f in &m.facets {
                assert!(matches!(f.cells.len(), 1 | 2));
                assert_eq!(f.boundary, f.cells.len() == 1);
            }
            // interior facet incidences: every facet of a cell appears in
            // cell_facets exactly once
            for (ci, cf) in m.cell_facets.iter().enumerate() {
                assert_eq!(cf.len(), m.dim + 1);
                for (omit, &fid) in cf.iter().enumerate() {
                    let f = &m.facets[fid];
                    assert!(f.cells.contains(&ci));
                    assert!(!f.vertices.contains(&m.cells[ci][omit]));
                }
            }
        }
    }

    #[test]
    fn square_is_two_k1_triangles() {
        let m = reference_domain(DomainId::Square);
        assert_eq!(m.cells.len(), 2);
        assert!((m.total_volume() - 1.0).abs() < 1e-15);
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mesh_size_enclosure_brackets_float_h() {
        let m = refined(DomainId::K2, 3);
        let enc = m.mesh_size_enclosure();
        assert!(enc.lo <= m.h && m.h <= enc.hi.next_up());
        assert!(enc.width() < 1e-12);
    }

    #[test]
    fn json_dump_shape() {
        let m = reference_domain(DomainId::K1);
        let v = m.to_json();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["level"], 0);
        assert_eq!(v["vertices"].as_array().unwrap().len(), 3);
        assert_eq!(v["cells"][0].as_array().unwrap().len(), 3);
    }
}
