//! Assembly of the discrete eigenproblem matrices: Crouzeix-Raviart and
//! quadratic Lagrange stiffness/mass pairs, the polynomial-projection form
//! N = Mass - G^T W^{-1} G, boundary-mean constraint functionals and the
//! constraint elimination that realizes the constrained spaces.
//!
//! Element integrands split into a geometry part (volume, gradient Gram
//! matrix, facet measures) and geometry-free rational factors computed
//! exactly, so float assembly is deterministic and interval assembly stays
//! tight.

use crate::error::{Error, Result};
use crate::linalg::{Mat, SymMat};
use crate::mesh::SimplicialMesh;
use crate::polyint::{monomials_up_to, BaryPoly, SimplexGeom};
use crate::scalar::{Scalar, ScalarKind};
use num_rational::Ratio;
use std::collections::BTreeSet;

type Q = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    CrouzeixRaviart,
    LagrangeP2,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::CrouzeixRaviart => "CR",
            ElementKind::LagrangeP2 => "P2",
        }
    }
}

/// Definiteness taxonomy of the pencil (A, B).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilCase {
    /// Both forms positive definite.
    Case1,
    /// A positive definite, B positive semi-definite.
    Case2,
    /// A positive semi-definite, B positive definite.
    Case3,
}

#[derive(Debug, Clone)]
pub struct DofSpace {
    pub element: ElementKind,
    pub constrained: bool,
    pub dim: usize,
}

/// Discrete eigenproblem A x = lambda B x with case metadata.
#[derive(Debug, Clone)]
pub struct Pencil<S> {
    pub a: SymMat<S>,
    pub b: SymMat<S>,
    pub case: PencilCase,
    pub dof_space: DofSpace,
    /// dim Ker_h of the A-side form.
    pub expected_kernel_a: usize,
    /// dim Ker_h of the B-side form, when known a priori; measured at
    /// runtime otherwise.
    pub expected_kernel_b: Option<usize>,
}

impl<S: Scalar> Pencil<S> {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn scalar_kind(&self) -> ScalarKind {
        S::KIND
    }

    /// Midpoint (fast-mode) view of the pencil.
    pub fn approx(&self) -> Pencil<f64> {
        Pencil {
            a: self.a.map(|x| x.approx()),
            b: self.b.map(|x| x.approx()),
            case: self.case,
            dof_space: self.dof_space.clone(),
            expected_kernel_a: self.expected_kernel_a,
            expected_kernel_b: self.expected_kernel_b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FemMatrices<S> {
    pub stiffness: SymMat<S>,
    pub mass: SymMat<S>,
}

/// The three ingredients of the projection form.
#[derive(Debug, Clone)]
pub struct ProjectionFormParts<S> {
    pub mass: SymMat<S>,
    /// Moment matrix, rows = polynomial basis, cols = FEM basis.
    pub g: Mat<S>,
    /// Polynomial Gram matrix.
    pub w: Mat<S>,
}

/// Degrees of freedom of a discrete space over a mesh.
struct DofMap {
    /// local dof -> global dof, per cell
    cell_dofs: Vec<Vec<usize>>,
    n_dofs: usize,
    locals_per_cell: usize,
}

fn cr_dof_map(mesh: &SimplicialMesh) -> DofMap {
    DofMap {
        cell_dofs: mesh.cell_facets.clone(),
        n_dofs: mesh.facets.len(),
        locals_per_cell: mesh.dim + 1,
    }
}

fn edge_pairs(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &[(0, 1), (0, 2), (1, 2)]
    } else {
        &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    }
}

fn p2_dof_map(mesh: &SimplicialMesh) -> DofMap {
    let nv = mesh.vertices.len();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for cell in &mesh.cells {
        for &(a, b) in edge_pairs(mesh.dim) {
            let (p, q) = (cell[a].min(cell[b]), cell[a].max(cell[b]));
            edges.insert((p, q));
        }
    }
    let edge_index: std::collections::BTreeMap<(usize, usize), usize> = edges
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, nv + i))
        .collect();
    let mut cell_dofs = Vec::with_capacity(mesh.cells.len());
    for cell in &mesh.cells {
        let mut dofs: Vec<usize> = cell.clone();
        for &(a, b) in edge_pairs(mesh.dim) {
            let key = (cell[a].min(cell[b]), cell[a].max(cell[b]));
            dofs.push(edge_index[&key]);
        }
        cell_dofs.push(dofs);
    }
    DofMap {
        cell_dofs,
        n_dofs: nv + edge_index.len(),
        locals_per_cell: (mesh.dim + 1) + edge_pairs(mesh.dim).len(),
    }
}

/// Local basis polynomials with exact rational coefficients.
fn local_basis(dim: usize, element: ElementKind) -> Vec<BaryPoly<Q>> {
    let one = Q::new(1, 1);
    match element {
        ElementKind::CrouzeixRaviart => (0..=dim)
            .map(|i| {
                // facet-average dual basis: 1 - d * lambda_i
                let mut p = BaryPoly::constant(dim, one);
                let mut idx = [0u8; 4];
                idx[i] = 1;
                p.add_term(idx, Q::new(-(dim as i64), 1));
                p
            })
            .collect(),
        ElementKind::LagrangeP2 => {
            let mut basis = Vec::new();
            for i in 0..=dim {
                // vertex function: lambda_i (2 lambda_i - 1)
                let mut p = BaryPoly::zero(dim);
                let mut idx = [0u8; 4];
                idx[i] = 2;
                p.add_term(idx, Q::new(2, 1));
                idx[i] = 1;
                p.add_term(idx, Q::new(-1, 1));
                basis.push(p);
            }
            for &(a, b) in edge_pairs(dim) {
                // edge bubble: 4 lambda_a lambda_b
                let mut p = BaryPoly::zero(dim);
                let mut idx = [0u8; 4];
                idx[a] = 1;
                idx[b] = 1;
                p.add_term(idx, Q::new(4, 1));
                basis.push(p);
            }
            basis
        }
    }
}

fn lower_poly<S: Scalar>(p: &BaryPoly<Q>) -> BaryPoly<S> {
    p.map_coeffs(S::from_ratio64)
}

fn dof_map(mesh: &SimplicialMesh, element: ElementKind) -> DofMap {
    match element {
        ElementKind::CrouzeixRaviart => cr_dof_map(mesh),
        ElementKind::LagrangeP2 => p2_dof_map(mesh),
    }
}

/// Geometry-free element integrals, already lowered to the scalar type:
/// per unordered local pair (a, b), the mass factor and the sparse list of
/// gradient-pairing factors to contract with the Gram matrix.
struct ElementFactors<S> {
    nb: usize,
    /// per pair index: integral of phi_a phi_b per unit volume
    mass: Vec<S>,
    /// per pair index: (i, j, integral of d phi_a/d l_i * d phi_b/d l_j)
    stiff: Vec<Vec<(usize, usize, S)>>,
}

fn pair_index(a: usize, b: usize, nb: usize) -> usize {
    // a <= b enumerated row by row
    a * nb - a * (a + 1) / 2 + b
}

fn element_factors<S: Scalar>(dim: usize, element: ElementKind) -> ElementFactors<S> {
    let basis = local_basis(dim, element);
    let nb = basis.len();
    let np1 = dim + 1;
    let derivs: Vec<Vec<BaryPoly<Q>>> = basis
        .iter()
        .map(|p| (0..np1).map(|i| p.d_lambda(i)).collect())
        .collect();
    let zero = Q::new(0, 1);
    let npairs = nb * (nb + 1) / 2;
    let mut mass = Vec::with_capacity(npairs);
    let mut stiff = Vec::with_capacity(npairs);
    for a in 0..nb {
        for b in a..nb {
            mass.push(S::from_ratio64(basis[a].mul(&basis[b]).integral_over_volume()));
            let mut entries = Vec::new();
            for i in 0..np1 {
                for j in 0..np1 {
                    let f = derivs[a][i].mul(&derivs[b][j]).integral_over_volume();
                    if f != zero {
                        entries.push((i, j, S::from_ratio64(f)));
                    }
                }
            }
            stiff.push(entries);
        }
    }
    ElementFactors { nb, mass, stiff }
}

fn assemble_fem<S: Scalar>(mesh: &SimplicialMesh, element: ElementKind) -> Result<FemMatrices<S>> {
    let dofs = dof_map(mesh, element);
    let factors = element_factors::<S>(mesh.dim, element);
    let nb = factors.nb;
    debug_assert_eq!(nb, dofs.locals_per_cell);
    let np1 = mesh.dim + 1;

    let mut stiffness = SymMat::filled(dofs.n_dofs, S::zero());
    let mut mass = SymMat::filled(dofs.n_dofs, S::zero());
    for ci in 0..mesh.cells.len() {
        let geom: SimplexGeom<S> = SimplexGeom::from_cell(mesh, ci)?;
        let mut gram = vec![S::zero(); np1 * np1];
        for i in 0..np1 {
            for j in 0..=i {
                let g = geom.grad_dot(i, j);
                gram[i * np1 + j] = g;
                gram[j * np1 + i] = g;
            }
        }
        let cd = &dofs.cell_dofs[ci];
        for a in 0..nb {
            for b in a..nb {
                let pair = pair_index(a, b, nb);
                let m = geom.volume * factors.mass[pair];
                let mut k = S::zero();
                for &(i, j, f) in &factors.stiff[pair] {
                    k += gram[i * np1 + j] * f;
                }
                k = k * geom.volume;
                let (ga, gb) = (cd[a], cd[b]);
                stiffness.set(ga, gb, stiffness.get(ga, gb) + k);
                mass.set(ga, gb, mass.get(ga, gb) + m);
            }
        }
    }
    Ok(FemMatrices { stiffness, mass })
}

/// Crouzeix-Raviart stiffness (element-wise gradients) and mass; one dof per
/// facet, element basis 1 - d*lambda_i dual to facet averages.
pub fn assemble_cr<S: Scalar>(mesh: &SimplicialMesh) -> Result<FemMatrices<S>> {
    assemble_fem(mesh, ElementKind::CrouzeixRaviart)
}

/// Conforming quadratic Lagrange stiffness and mass (vertex + edge dofs).
pub fn assemble_p2<S: Scalar>(mesh: &SimplicialMesh) -> Result<FemMatrices<S>> {
    assemble_fem(mesh, ElementKind::LagrangeP2)
}

/// Domain centroid and diameter scale for the global polynomial basis. The
/// span of the shifted/scaled monomials is P_k for any choice, so plain
/// float arithmetic here does not affect rigor, only conditioning.
fn projection_basis_frame(mesh: &SimplicialMesh) -> (Vec<f64>, f64) {
    let dim = mesh.dim;
    let dfact = if dim == 2 { 2.0 } else { 6.0 };
    let mut center = vec![0.0; dim];
    let mut total = 0.0;
    for ci in 0..mesh.cells.len() {
        let vol = mesh.cell_volume_det(ci).approx() / dfact;
        total += vol;
        for j in 0..dim {
            let mut c = 0.0;
            for &v in &mesh.cells[ci] {
                c += mesh.vertices[v].coords[j].approx();
            }
            center[j] += vol * c / (dim as f64 + 1.0);
        }
    }
    for c in center.iter_mut() {
        *c /= total;
    }
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    for p in &mesh.vertices {
        for j in 0..dim {
            let x = p.coords[j].approx();
            min[j] = min[j].min(x);
            max[j] = max[j].max(x);
        }
    }
    let scale = min
        .iter()
        .zip(&max)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    (center, scale)
}

/// Mass, moment and Gram matrices of the global L^2 projection onto
/// polynomials of degree <= k.
pub fn projection_form_parts<S: Scalar>(
    mesh: &SimplicialMesh,
    element: ElementKind,
    k: usize,
) -> Result<ProjectionFormParts<S>> {
    let dofs = dof_map(mesh, element);
    let basis_q = local_basis(mesh.dim, element);
    let basis_s: Vec<BaryPoly<S>> = basis_q.iter().map(|p| lower_poly(p)).collect();
    let monos = monomials_up_to(mesh.dim, k);
    let (center, scale) = projection_basis_frame(mesh);
    let nm = monos.monomials.len();

    let mass = assemble_fem::<S>(mesh, element)?.mass;
    let mut g = Mat::filled(nm, dofs.n_dofs, S::zero());
    let mut w = Mat::filled(nm, nm, S::zero());
    for ci in 0..mesh.cells.len() {
        let geom: SimplexGeom<S> = SimplexGeom::from_cell(mesh, ci)?;
        let qpolys: Vec<BaryPoly<S>> = monos
            .monomials
            .iter()
            .map(|beta| geom.cart_monomial(beta, &center, scale))
            .collect();
        let cd = &dofs.cell_dofs[ci];
        for m in 0..nm {
            for (a, phi) in basis_s.iter().enumerate() {
                let val = geom.integrate(&qpolys[m].mul(phi));
                g[(m, cd[a])] += val;
            }
            for n in m..nm {
                let val = geom.integrate(&qpolys[m].mul(&qpolys[n]));
                w[(m, n)] += val;
                if n != m {
                    w[(n, m)] += val;
                }
            }
        }
    }
    Ok(ProjectionFormParts { mass, g, w })
}

/// Gaussian elimination with partial pivoting by mignitude; solves W X = G.
fn solve_square<S: Scalar>(w: &Mat<S>, g: &Mat<S>, degree: usize) -> Result<Mat<S>> {
    let n = w.rows();
    let cols = g.cols();
    let mut a = w.clone();
    let mut x = g.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (best_pos, best_mig) = (col..n)
            .map(|r| (r, a[(perm[r], col)].mignitude()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if best_mig == 0.0 {
            return Err(Error::SingularProjectionBasis { degree });
        }
        perm.swap(col, best_pos);
        let p = perm[col];
        let piv = a[(p, col)];
        for r in col + 1..n {
            let row = perm[r];
            let f = a[(row, col)] / piv;
            if f == S::zero() {
                continue;
            }
            for c in col..n {
                let upd = f * a[(p, c)];
                a[(row, c)] -= upd;
            }
            for c in 0..cols {
                let upd = f * x[(p, c)];
                x[(row, c)] -= upd;
            }
        }
    }
    // back substitution
    let mut out = Mat::filled(n, cols, S::zero());
    for col in (0..n).rev() {
        let p = perm[col];
        for c in 0..cols {
            let mut s = x[(p, c)];
            for j in col + 1..n {
                s -= a[(p, j)] * out[(j, c)];
            }
            out[(col, c)] = s / a[(p, col)];
        }
    }
    Ok(out)
}

/// N = Mass - G^T W^{-1} G: the matrix of (u - P_k u, v - P_k v) with P_k
/// the global L^2 projection onto degree-<=k polynomials.
pub fn assemble_projection_form<S: Scalar>(
    mesh: &SimplicialMesh,
    element: ElementKind,
    k: usize,
) -> Result<SymMat<S>> {
    let parts = projection_form_parts::<S>(mesh, element, k)?;
    projection_form_from_parts(&parts, k)
}

pub fn projection_form_from_parts<S: Scalar>(
    parts: &ProjectionFormParts<S>,
    k: usize,
) -> Result<SymMat<S>> {
    let x = solve_square(&parts.w, &parts.g, k)?;
    let n = parts.mass.dim();
    let nm = parts.w.rows();
    Ok(SymMat::from_fn(n, |i, j| {
        let mut s = parts.mass.get(i, j);
        for m in 0..nm {
            s -= parts.g[(m, i)] * x[(m, j)];
        }
        s
    }))
}

/// c_j = integral of phi_j over the domain boundary; exactly zero for dofs
/// whose restriction integrates to zero (the rational factor vanishes).
pub fn boundary_mean_functional<S: Scalar>(
    mesh: &SimplicialMesh,
    element: ElementKind,
) -> Result<Vec<S>> {
    let dofs = dof_map(mesh, element);
    let basis_q = local_basis(mesh.dim, element);
    let mut c = vec![S::zero(); dofs.n_dofs];
    let zero = Q::new(0, 1);
    for (fid, facet) in mesh.boundary_facets() {
        let ci = facet.cells[0];
        let omit = mesh.cell_facets[ci]
            .iter()
            .position(|&f| f == fid)
            .expect("facet not found in its own cell");
        let geom: SimplexGeom<S> = SimplexGeom::from_cell(mesh, ci)?;
        let measure = geom.facet_measure[omit];
        for (a, phi) in basis_q.iter().enumerate() {
            let rat = phi.restrict_to_facet(omit).integral_over_volume();
            if rat != zero {
                c[dofs.cell_dofs[ci][a]] += measure * S::from_ratio64(rat);
            }
        }
    }
    Ok(c)
}

/// c_j = integral of phi_j over the domain.
pub fn volume_mean_functional<S: Scalar>(
    mesh: &SimplicialMesh,
    element: ElementKind,
) -> Result<Vec<S>> {
    let dofs = dof_map(mesh, element);
    let basis_q = local_basis(mesh.dim, element);
    let rats: Vec<Q> = basis_q.iter().map(|p| p.integral_over_volume()).collect();
    let mut c = vec![S::zero(); dofs.n_dofs];
    for ci in 0..mesh.cells.len() {
        let geom: SimplexGeom<S> = SimplexGeom::from_cell(mesh, ci)?;
        for (a, &rat) in rats.iter().enumerate() {
            if rat != Q::new(0, 1) {
                c[dofs.cell_dofs[ci][a]] += geom.volume * S::from_ratio64(rat);
            }
        }
    }
    Ok(c)
}

/// Eliminate one dof by the linear constraint c^T x = 0, substituting the
/// dof with the largest |c_j| and projecting both forms onto the null space.
/// Dimension drops by one; symmetry is preserved by construction.
pub fn reduce_by_constraint<S: Scalar>(pencil: Pencil<S>, c: &[S]) -> Result<Pencil<S>> {
    let n = pencil.dim();
    assert_eq!(c.len(), n, "constraint length mismatch");
    let (p, mig) = (0..n)
        .map(|j| (j, c[j].mignitude()))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or(Error::ZeroConstraint)?;
    if mig == 0.0 {
        return Err(Error::ZeroConstraint);
    }
    let keep: Vec<usize> = (0..n).filter(|&j| j != p).collect();
    // x_p = sum_j r_j x_j with r_j = -c_j / c_p
    let r: Vec<S> = keep.iter().map(|&j| -c[j] / c[p]).collect();

    let reduce = |m: &SymMat<S>| -> SymMat<S> {
        SymMat::from_fn(n - 1, |i, j| {
            let (gi, gj) = (keep[i], keep[j]);
            m.get(gi, gj)
                + r[i] * m.get(p, gj)
                + r[j] * m.get(gi, p)
                + r[i] * r[j] * m.get(p, p)
        })
    };

    Ok(Pencil {
        a: reduce(&pencil.a),
        b: reduce(&pencil.b),
        case: pencil.case,
        dof_space: DofSpace {
            constrained: true,
            dim: n - 1,
            ..pencil.dof_space
        },
        // the constraint functional does not annihilate the structural
        // kernels here (constants and global affine functions), so each
        // kernel loses exactly one dimension
        expected_kernel_a: pencil.expected_kernel_a.saturating_sub(1),
        expected_kernel_b: pencil.expected_kernel_b.map(|k| k.saturating_sub(1)),
    })
}

/// Case 3 pencil for the Neumann eigenproblem: CR stiffness against CR mass
/// on the full space; constants span the expected kernel of the A side.
pub fn neumann_pencil<S: Scalar>(mesh: &SimplicialMesh) -> Result<Pencil<S>> {
    let fem = assemble_cr::<S>(mesh)?;
    let n = fem.stiffness.dim();
    Ok(Pencil {
        a: fem.stiffness,
        b: fem.mass,
        case: PencilCase::Case3,
        dof_space: DofSpace {
            element: ElementKind::CrouzeixRaviart,
            constrained: false,
            dim: n,
        },
        expected_kernel_a: 1,
        expected_kernel_b: Some(0),
    })
}

/// Conforming P2 pencil for the Neumann eigenproblem (upper bounds).
pub fn neumann_p2_pencil<S: Scalar>(mesh: &SimplicialMesh) -> Result<Pencil<S>> {
    let fem = assemble_p2::<S>(mesh)?;
    let n = fem.stiffness.dim();
    Ok(Pencil {
        a: fem.stiffness,
        b: fem.mass,
        case: PencilCase::Case3,
        dof_space: DofSpace {
            element: ElementKind::LagrangeP2,
            constrained: false,
            dim: n,
        },
        expected_kernel_a: 1,
        expected_kernel_b: Some(0),
    })
}

/// Pencil of the projection-constant eigenproblem on the boundary-mean-zero
/// space: A = stiffness, B = projection form N, both reduced by the
/// boundary constraint. Case 1 for k = 0 (N definite), Case 2 for k >= 1.
pub fn projection_pencil<S: Scalar>(
    mesh: &SimplicialMesh,
    element: ElementKind,
    k: usize,
) -> Result<Pencil<S>> {
    let fem = assemble_fem::<S>(mesh, element)?;
    let n_form = assemble_projection_form::<S>(mesh, element, k)?;
    let n = fem.stiffness.dim();
    let pencil = Pencil {
        a: fem.stiffness,
        b: n_form,
        case: if k == 0 { PencilCase::Case1 } else { PencilCase::Case2 },
        dof_space: DofSpace {
            element,
            constrained: false,
            dim: n,
        },
        // stiffness kernel: constants; N kernel for k >= 1 is measured at
        // runtime (global polynomials representable in the space)
        expected_kernel_a: 1,
        expected_kernel_b: if k == 0 { Some(1) } else { None },
    };
    let c = boundary_mean_functional::<S>(mesh, element)?;
    reduce_by_constraint(pencil, &c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::solve_definite_pencil;
    use crate::mesh::{reference_domain, refined, DomainId};
    use crate::rigor::Interval;

    #[test]
    fn single_k1_cr_element_matrices() {
        let mesh = reference_domain(DomainId::K1);
        let fem = assemble_cr::<f64>(&mesh).unwrap();
        let expect = [[4.0, -2.0, -2.0], [-2.0, 2.0, 0.0], [-2.0, 0.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (fem.stiffness.get(i, j) - expect[i][j]).abs() < 1e-14,
                    "stiffness ({i},{j})"
                );
                let m = if i == j { 1.0 / 6.0 } else { 0.0 };
                assert!((fem.mass.get(i, j) - m).abs() < 1e-15, "mass ({i},{j})");
            }
        }
    }

    #[test]
    fn cr_stiffness_row_sums_vanish() {
        let mesh = refined(DomainId::K2, 2);
        let fem = assemble_cr::<f64>(&mesh).unwrap();
        let n = fem.stiffness.dim();
        for i in 0..n {
            let sum: f64 = (0..n).map(|j| fem.stiffness.get(i, j)).sum();
            assert!(sum.abs() < 1e-12, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn p2_on_k1_basics() {
        let mesh = reference_domain(DomainId::K1);
        let fem = assemble_p2::<f64>(&mesh).unwrap();
        assert_eq!(fem.stiffness.dim(), 6);
        for i in 0..6 {
            let sum: f64 = (0..6).map(|j| fem.stiffness.get(i, j)).sum();
            assert!(sum.abs() < 1e-13);
        }
        // mass is positive definite
        assert!(crate::eigen::cholesky(&fem.mass).is_ok());
        // interpolant of u = x^2: vertex values then edge midpoint values
        // dof order: vertices (0,0),(1,0),(0,1) then edges (0,1),(0,2),(1,2)
        let u = [0.0, 1.0, 0.0, 0.25, 0.0, 0.25];
        let energy = fem.stiffness.quad_form(&u, &u);
        assert!((energy - 1.0 / 3.0).abs() < 1e-13, "got {energy}");
    }

    #[test]
    fn projection_form_k1_degree1_is_zero() {
        // the 3-dim CR space on one triangle is exactly P1
        let mesh = reference_domain(DomainId::K1);
        let n = assemble_projection_form::<f64>(&mesh, ElementKind::CrouzeixRaviart, 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(n.get(i, j).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn projection_form_degree0_schur_specialization() {
        let mesh = refined(DomainId::K1, 2);
        let n = assemble_projection_form::<f64>(&mesh, ElementKind::CrouzeixRaviart, 0).unwrap();
        let fem = assemble_cr::<f64>(&mesh).unwrap();
        let m = volume_mean_functional::<f64>(&mesh, ElementKind::CrouzeixRaviart).unwrap();
        let vol = mesh.total_volume();
        let dim = n.dim();
        for i in 0..dim {
            for j in 0..dim {
                let expect = fem.mass.get(i, j) - m[i] * m[j] / vol;
                assert!((n.get(i, j) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn projection_form_is_positive_semidefinite() {
        let mesh = refined(DomainId::K3, 1);
        let n = assemble_projection_form::<f64>(&mesh, ElementKind::CrouzeixRaviart, 1).unwrap();
        let dim = n.dim();
        // deterministic pseudo-random directions
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..50 {
            let x: Vec<f64> = (0..dim)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            assert!(n.quad_form(&x, &x) >= -1e-13 * norm2);
        }
    }

    #[test]
    fn boundary_functional_on_k1() {
        let mesh = reference_domain(DomainId::K1);
        let c = boundary_mean_functional::<f64>(&mesh, ElementKind::CrouzeixRaviart).unwrap();
        assert!((c[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((c[1] - 1.0).abs() < 1e-15);
        assert!((c[2] - 1.0).abs() < 1e-15);
        // constant one has boundary integral |dOmega|
        let total: f64 = c.iter().sum();
        assert!((total - (2.0 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn boundary_functional_interior_dofs_exactly_zero() {
        let mesh = refined(DomainId::K1, 2);
        let c = boundary_mean_functional::<f64>(&mesh, ElementKind::CrouzeixRaviart).unwrap();
        for (fid, facet) in mesh.facets.iter().enumerate() {
            if !facet.boundary {
                assert_eq!(c[fid], 0.0, "interior dof {fid} contaminated");
            }
        }
        // same for P2 in 3D
        let mesh3 = refined(DomainId::T1, 1);
        let c3 = boundary_mean_functional::<f64>(&mesh3, ElementKind::LagrangeP2).unwrap();
        let dofs = p2_dof_map(&mesh3);
        let on_boundary: std::collections::BTreeSet<usize> = mesh3
            .boundary_facets()
            .flat_map(|(_, f)| f.vertices.clone())
            .collect();
        for v in 0..mesh3.vertices.len() {
            if !on_boundary.contains(&v) {
                assert_eq!(c3[v], 0.0);
            }
        }
        assert_eq!(dofs.n_dofs, c3.len());
    }

    #[test]
    fn reduce_identity_pencil() {
        let eye = SymMat::from_fn(2, |i, j| if i == j { 1.0 } else { 0.0 });
        let pencil = Pencil {
            a: eye.clone(),
            b: eye,
            case: PencilCase::Case1,
            dof_space: DofSpace {
                element: ElementKind::CrouzeixRaviart,
                constrained: false,
                dim: 2,
            },
            expected_kernel_a: 0,
            expected_kernel_b: Some(0),
        };
        let reduced = reduce_by_constraint(pencil, &[1.0, 0.0]).unwrap();
        assert_eq!(reduced.dim(), 1);
        assert!((reduced.a.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((reduced.b.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_constraint_is_error() {
        let eye = SymMat::from_fn(2, |i, j| if i == j { 1.0 } else { 0.0 });
        let pencil = Pencil {
            a: eye.clone(),
            b: eye,
            case: PencilCase::Case1,
            dof_space: DofSpace {
                element: ElementKind::CrouzeixRaviart,
                constrained: false,
                dim: 2,
            },
            expected_kernel_a: 0,
            expected_kernel_b: Some(0),
        };
        assert!(matches!(
            reduce_by_constraint(pencil, &[0.0, 0.0]),
            Err(Error::ZeroConstraint)
        ));
    }

    #[test]
    fn constrained_cr_pencil_has_positive_smallest_eigenvalue() {
        let mesh = refined(DomainId::K1, 2);
        let fem = assemble_cr::<f64>(&mesh).unwrap();
        let n = fem.stiffness.dim();
        let pencil = Pencil {
            a: fem.stiffness,
            b: fem.mass,
            case: PencilCase::Case3,
            dof_space: DofSpace {
                element: ElementKind::CrouzeixRaviart,
                constrained: false,
                dim: n,
            },
            expected_kernel_a: 1,
            expected_kernel_b: Some(0),
        };
        let c = boundary_mean_functional::<f64>(&mesh, ElementKind::CrouzeixRaviart).unwrap();
        let reduced = reduce_by_constraint(pencil, &c).unwrap();
        assert_eq!(reduced.expected_kernel_a, 0);
        let spec = solve_definite_pencil(&reduced.a, &reduced.b, false).unwrap();
        assert!(spec.values[0] > 1e-3, "lambda_1 = {}", spec.values[0]);
    }

    #[test]
    fn interval_assembly_contains_float_assembly() {
        let mesh = refined(DomainId::K2, 1);
        let f = assemble_cr::<f64>(&mesh).unwrap();
        let iv = assemble_cr::<Interval>(&mesh).unwrap();
        let n = f.stiffness.dim();
        for i in 0..n {
            for j in 0..=i {
                let fi = f.stiffness.get(i, j);
                let ii = iv.stiffness.get(i, j);
                assert!(
                    ii.lo <= fi && fi <= ii.hi,
                    "stiffness ({i},{j}): {fi} not in {ii}"
                );
                assert!(ii.width() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_pencil_reduces_dimension_and_case() {
        let mesh = refined(DomainId::K1, 1);
        let p0 = projection_pencil::<f64>(&mesh, ElementKind::CrouzeixRaviart, 0).unwrap();
        assert_eq!(p0.case, PencilCase::Case1);
        assert_eq!(p0.dim(), mesh.facets.len() - 1);
        assert!(p0.dof_space.constrained);
        let p1 = projection_pencil::<f64>(&mesh, ElementKind::CrouzeixRaviart, 1).unwrap();
        assert_eq!(p1.case, PencilCase::Case2);
        assert_eq!(p1.expected_kernel_b, None);
    }
}
