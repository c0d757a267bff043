//! Exact integration of polynomials over simplices.
//!
//! Everything the assembly integrates is expanded into barycentric monomials
//! and evaluated term by term with the factorial formula
//!
//! ```text
//! int_K lambda^alpha dx = d! |K| (prod_i alpha_i!) / (|alpha| + d)!
//! ```
//!
//! so no numeric quadrature enters the production path and the interval mode
//! stays airtight.

use crate::error::{Error, Result};
use crate::mesh::{ExactCoord, SimplicialMesh};
use crate::scalar::Scalar;
use num_rational::Ratio;
use std::collections::BTreeMap;

type Q = Ratio<i64>;

/// Coefficient ring for barycentric polynomials: floats, intervals or exact
/// rationals.
pub trait Coeff:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_ratio64(r: Q) -> Self;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_ratio64(r: Q) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }
}

impl Coeff for crate::rigor::Interval {
    fn zero() -> Self {
        crate::rigor::Interval::zero()
    }
    fn from_ratio64(r: Q) -> Self {
        crate::rigor::Interval::from_ratio(*r.numer(), *r.denom())
    }
}

impl Coeff for Q {
    fn zero() -> Self {
        Q::new(0, 1)
    }
    fn from_ratio64(r: Q) -> Self {
        r
    }
}

/// Barycentric multi-index; slots beyond dim+1 stay zero.
pub type BaryIndex = [u8; 4];

fn factorial(n: u64) -> i64 {
    (1..=n as i64).product::<i64>().max(1)
}

/// Per-unit-volume integral of lambda^alpha over a d-simplex:
/// d! (prod alpha_i!) / (|alpha| + d)!.
pub fn monomial_factor(alpha: &BaryIndex, dim: usize) -> Q {
    let total: u64 = alpha.iter().map(|&a| a as u64).sum();
    let mut num = factorial(dim as u64);
    for &a in alpha.iter() {
        num *= factorial(a as u64);
    }
    Q::new(num, factorial(total + dim as u64))
}

/// Polynomial in barycentric coordinates lambda_0..lambda_dim.
#[derive(Debug, Clone, PartialEq)]
pub struct BaryPoly<C> {
    pub dim: usize,
    terms: BTreeMap<BaryIndex, C>,
}

impl<C: Coeff> BaryPoly<C> {
    pub fn zero(dim: usize) -> Self {
        BaryPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C) -> Self {
        let mut p = Self::zero(dim);
        p.add_term([0; 4], c);
        p
    }

    pub fn lambda(dim: usize, i: usize) -> Self {
        debug_assert!(i <= dim);
        let mut idx = [0u8; 4];
        idx[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(idx, C::from_ratio64(Q::new(1, 1)));
        p
    }

    /// sum_i coeffs[i] * lambda_i.
    pub fn linear_form(dim: usize, coeffs: &[C]) -> Self {
        let mut p = Self::zero(dim);
        for (i, &c) in coeffs.iter().enumerate() {
            let mut idx = [0u8; 4];
            idx[i] = 1;
            p.add_term(idx, c);
        }
        p
    }

    pub fn add_term(&mut self, idx: BaryIndex, c: C) {
        if c == C::zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(existing) => {
                *existing = *existing + c;
                if *existing == C::zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&idx, &c) in &other.terms {
            out.add_term(idx, c);
        }
        out
    }

    pub fn scale(&self, f: C) -> Self {
        let mut out = Self::zero(self.dim);
        for (&idx, &c) in &self.terms {
            out.add_term(idx, c * f);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (&ia, &ca) in &self.terms {
            for (&ib, &cb) in &other.terms {
                let mut idx = [0u8; 4];
                for k in 0..4 {
                    idx[k] = ia[k] + ib[k];
                }
                out.add_term(idx, ca * cb);
            }
        }
        out
    }

    /// Partial derivative with respect to lambda_i (formal, treating the
    /// lambdas as independent variables).
    pub fn d_lambda(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (&idx, &c) in &self.terms {
            if idx[i] == 0 {
                continue;
            }
            let mut didx = idx;
            didx[i] -= 1;
            out.add_term(didx, c * C::from_ratio64(Q::from_integer(idx[i] as i64)));
        }
        out
    }

    /// Restriction to the facet opposite local vertex `omit`: substitutes
    /// lambda_omit = 0 and renumbers the remaining coordinates as the facet's
    /// own barycentric coordinates.
    pub fn restrict_to_facet(&self, omit: usize) -> BaryPoly<C> {
        let mut out = BaryPoly::zero(self.dim - 1);
        for (&idx, &c) in &self.terms {
            if idx[omit] != 0 {
                continue;
            }
            let mut ridx = [0u8; 4];
            let mut k = 0;
            for (j, &e) in idx.iter().enumerate().take(self.dim + 1) {
                if j == omit {
                    continue;
                }
                ridx[k] = e;
                k += 1;
            }
            out.add_term(ridx, c);
        }
        out
    }

    /// Integral over a unit-volume simplex of dimension `self.dim`.
    pub fn integral_over_volume(&self) -> C {
        let mut acc = C::zero();
        for (&idx, &c) in &self.terms {
            acc = acc + c * C::from_ratio64(monomial_factor(&idx, self.dim));
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&BaryIndex, &C)> {
        self.terms.iter()
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(C) -> D) -> BaryPoly<D> {
        let mut out = BaryPoly::zero(self.dim);
        for (&idx, &c) in &self.terms {
            out.add_term(idx, f(c));
        }
        out
    }
}

/// Cartesian multi-index (exponents of x, y, z).
pub type CartIndex = [u8; 3];

/// Monomial basis of P_k in graded lexicographic order.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub dim: usize,
    pub degree: usize,
    pub monomials: Vec<CartIndex>,
}

/// All cartesian monomials with |beta| <= k, graded-lexicographic.
pub fn monomials_up_to(dim: usize, k: usize) -> MonomialBasis {
    assert!(dim == 2 || dim == 3);
    let mut monomials = Vec::new();
    for total in 0..=k {
        let mut stack: Vec<CartIndex> = Vec::new();
        collect_monomials(dim, total as u8, &mut [0u8; 3], 0, &mut stack);
        stack.sort();
        monomials.extend(stack);
    }
    MonomialBasis {
        dim,
        degree: k,
        monomials,
    }
}

fn collect_monomials(dim: usize, remaining: u8, cur: &mut CartIndex, pos: usize, out: &mut Vec<CartIndex>) {
    if pos == dim - 1 {
        cur[pos] = remaining;
        out.push(*cur);
        cur[pos] = 0;
        return;
    }
    for e in 0..=remaining {
        cur[pos] = e;
        collect_monomials(dim, remaining - e, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

/// Geometry of one simplex lowered to a scalar type: volume, barycentric
/// gradients and facet measures, all derived from exact coordinate data.
#[derive(Debug, Clone)]
pub struct SimplexGeom<S> {
    pub dim: usize,
    /// Lowered vertex coordinates, (dim+1) x dim.
    pub verts: Vec<Vec<S>>,
    pub volume: S,
    /// grad lambda_i, (dim+1) x dim.
    pub grad: Vec<Vec<S>>,
    /// Measure of the facet opposite local vertex i.
    pub facet_measure: Vec<S>,
}

impl<S: Scalar> SimplexGeom<S> {
    pub fn from_cell(mesh: &SimplicialMesh, ci: usize) -> Result<Self> {
        let dim = mesh.dim;
        let cell = &mesh.cells[ci];
        let pts: Vec<_> = cell.iter().map(|&v| &mesh.vertices[v]).collect();

        // edge vectors from vertex 0, exact
        let edges: Vec<Vec<ExactCoord>> = (1..=dim)
            .map(|i| {
                pts[i]
                    .coords
                    .iter()
                    .zip(&pts[0].coords)
                    .map(|(&a, &b)| a.sub(b))
                    .collect()
            })
            .collect();

        let det_exact = mesh.cell_volume_det(ci);
        if det_exact.sign() <= 0 {
            return Err(Error::DegenerateCell { cell: ci });
        }
        let det: S = det_exact.lower();
        let dfact = S::from_int(factorial(dim as u64));
        let volume = det / dfact;

        // rows of J^{-1} from the exact adjugate
        let mut grad: Vec<Vec<S>> = Vec::with_capacity(dim + 1);
        grad.push(vec![S::zero(); dim]); // placeholder for grad lambda_0
        if dim == 2 {
            let (u, w) = (&edges[0], &edges[1]);
            let rows = [
                [w[1], ExactCoord::zero().sub(w[0])],
                [ExactCoord::zero().sub(u[1]), u[0]],
            ];
            for row in rows {
                grad.push(row.iter().map(|&e| e.lower::<S>() / det).collect());
            }
        } else {
            let (u, w, z) = (&edges[0], &edges[1], &edges[2]);
            let cross = |a: &Vec<ExactCoord>, b: &Vec<ExactCoord>| -> Vec<ExactCoord> {
                vec![
                    a[1].mul(b[2]).sub(a[2].mul(b[1])),
                    a[2].mul(b[0]).sub(a[0].mul(b[2])),
                    a[0].mul(b[1]).sub(a[1].mul(b[0])),
                ]
            };
            for row in [cross(w, z), cross(z, u), cross(u, w)] {
                grad.push(row.iter().map(|&e| e.lower::<S>() / det).collect());
            }
        }
        // grad lambda_0 = -sum of the others
        for j in 0..dim {
            let mut acc = S::zero();
            for i in 1..=dim {
                acc += grad[i][j];
            }
            grad[0][j] = -acc;
        }

        // facet measures from exact squared lengths / Gram determinants
        let mut facet_measure = Vec::with_capacity(dim + 1);
        for omit in 0..=dim {
            let f: Vec<usize> = (0..=dim).filter(|&k| k != omit).collect();
            let m = if dim == 2 {
                let d2: S = pts[f[0]].dist_sq(pts[f[1]]).lower();
                d2.sqrt_nonneg()
            } else {
                let e1: Vec<ExactCoord> = pts[f[1]]
                    .coords
                    .iter()
                    .zip(&pts[f[0]].coords)
                    .map(|(&a, &b)| a.sub(b))
                    .collect();
                let e2: Vec<ExactCoord> = pts[f[2]]
                    .coords
                    .iter()
                    .zip(&pts[f[0]].coords)
                    .map(|(&a, &b)| a.sub(b))
                    .collect();
                let dot = |a: &[ExactCoord], b: &[ExactCoord]| {
                    let mut acc = ExactCoord::zero();
                    for (&x, &y) in a.iter().zip(b) {
                        acc = acc.add(x.mul(y));
                    }
                    acc
                };
                let g11 = dot(&e1, &e1);
                let g22 = dot(&e2, &e2);
                let g12 = dot(&e1, &e2);
                let gram = g11.mul(g22).sub(g12.mul(g12));
                let gram_s: S = gram.lower();
                gram_s.sqrt_nonneg() / S::from_int(2)
            };
            facet_measure.push(m);
        }

        let verts = pts.iter().map(|p| p.lower()).collect();
        Ok(SimplexGeom {
            dim,
            verts,
            volume,
            grad,
            facet_measure,
        })
    }

    /// grad lambda_i . grad lambda_j.
    pub fn grad_dot(&self, i: usize, j: usize) -> S {
        let mut acc = S::zero();
        for k in 0..self.dim {
            acc += self.grad[i][k] * self.grad[j][k];
        }
        acc
    }

    /// Integral of a barycentric polynomial over this cell.
    pub fn integrate(&self, poly: &BaryPoly<S>) -> S {
        poly.integral_over_volume() * self.volume
    }

    /// The cartesian monomial ((x-c)/s)^beta expanded in this cell's
    /// barycentric coordinates.
    pub fn cart_monomial(&self, beta: &CartIndex, center: &[f64], scale: f64) -> BaryPoly<S> {
        let mut p = BaryPoly::constant(self.dim, S::one());
        let inv_scale = S::one() / S::from_f64_exact(scale);
        for (j, &e) in beta.iter().enumerate().take(self.dim) {
            if e == 0 {
                continue;
            }
            let coeffs: Vec<S> = (0..=self.dim)
                .map(|i| (self.verts[i][j] - S::from_f64_exact(center[j])) * inv_scale)
                .collect();
            let lin = BaryPoly::linear_form(self.dim, &coeffs);
            for _ in 0..e {
                p = p.mul(&lin);
            }
        }
        p
    }
}

/// Integral of the barycentric monomial lambda^alpha over a cell.
pub fn integrate_barycentric<S: Scalar>(geom: &SimplexGeom<S>, alpha: &BaryIndex) -> S {
    S::from_ratio64(monomial_factor(alpha, geom.dim)) * geom.volume
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{reference_domain, DomainId};

    #[test]
    fn factorial_formula_on_k1() {
        let mesh = reference_domain(DomainId::K1);
        let g: SimplexGeom<f64> = SimplexGeom::from_cell(&mesh, 0).unwrap();
        assert!((integrate_barycentric(&g, &[0, 0, 0, 0]) - 0.5).abs() < 1e-15);
        assert!((integrate_barycentric(&g, &[1, 0, 0, 0]) - 1.0 / 6.0).abs() < 1e-15);
        assert!((integrate_barycentric(&g, &[1, 1, 0, 0]) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn monomial_basis_sizes() {
        assert_eq!(monomials_up_to(2, 1).monomials, vec![[0, 0, 0], [0, 1, 0], [1, 0, 0]]);
        assert_eq!(monomials_up_to(2, 2).monomials.len(), 6);
        assert_eq!(monomials_up_to(3, 2).monomials.len(), 10);
        assert_eq!(monomials_up_to(3, 0).monomials.len(), 1);
    }

    #[test]
    fn k1_gradients() {
        let mesh = reference_domain(DomainId::K1);
        let g: SimplexGeom<f64> = SimplexGeom::from_cell(&mesh, 0).unwrap();
        assert_eq!(g.grad[1], vec![1.0, 0.0]);
        assert_eq!(g.grad[2], vec![0.0, 1.0]);
        assert_eq!(g.grad[0], vec![-1.0, -1.0]);
        // facet opposite vertex 0 is the hypotenuse
        assert!((g.facet_measure[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.facet_measure[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poly_mul_and_derivative() {
        // (1 - 2 lambda_0)^2 integrated over K1 equals area/3 (CR mass diag)
        let mesh = reference_domain(DomainId::K1);
        let g: SimplexGeom<f64> = SimplexGeom::from_cell(&mesh, 0).unwrap();
        let mut phi = BaryPoly::constant(2, 1.0);
        phi.add_term([1, 0, 0, 0], -2.0);
        let sq = phi.mul(&phi);
        assert!((g.integrate(&sq) - 1.0 / 6.0).abs() < 1e-15);
        let dphi = phi.d_lambda(0);
        assert_eq!(dphi.integral_over_volume(), -2.0);
    }

    #[test]
    fn facet_restriction_drops_opposite_terms() {
        let p: BaryPoly<f64> = BaryPoly::lambda(2, 0);
        let r = p.restrict_to_facet(0);
        assert!(r.is_zero());
        let r1 = p.restrict_to_facet(1);
        // lambda_0 becomes the first facet coordinate
        assert_eq!(r1.integral_over_volume(), 0.5);
    }

    #[test]
    fn rational_coefficients_integrate_exactly() {
        // CR basis on a facet: 1 - d*lambda_i integrates to zero over the
        // facets not owning the dof
        let one = Q::new(1, 1);
        let mut phi: BaryPoly<Q> = BaryPoly::constant(2, one);
        phi.add_term([0, 1, 0, 0], Q::new(-2, 1));
        let on_facet = phi.restrict_to_facet(0); // facet contains vertex 1
        assert_eq!(on_facet.integral_over_volume(), Q::new(0, 1));
        let own = phi.restrict_to_facet(1);
        assert_eq!(own.integral_over_volume(), one);
    }

    #[test]
    fn interval_volume_encloses_truth_on_k2() {
        let mesh = reference_domain(DomainId::K2);
        let g: SimplexGeom<crate::rigor::Interval> = SimplexGeom::from_cell(&mesh, 0).unwrap();
        let truth = 3f64.sqrt() / 4.0;
        assert!(g.volume.lo <= truth && truth <= g.volume.hi);
        assert!(g.volume.width() < 1e-15);
    }
}
