//! Dense symmetric generalized eigensolver and floating-point inertia
//! counts.
//!
//! The pencil A x = lambda B x with positive definite B is reduced by
//! Cholesky (B = L L^T) to a standard symmetric problem, tridiagonalized by
//! Householder reflections and diagonalized by implicit-shift QL. All of it
//! is deterministic for a fixed input.

use crate::error::{Error, Result};
use crate::linalg::{Mat, SymMat};

/// Spectrum of a symmetric definite pencil.
#[derive(Debug, Clone)]
pub struct EigenSpectrum {
    /// Ascending eigenvalues; length equals the pencil dimension.
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors as matrix columns, when requested.
    pub vectors: Option<Mat<f64>>,
    /// Eigenvalues identified as exact-kernel zeros by the scaled threshold.
    pub zero_count: usize,
    /// max_k ||A x_k - lambda_k B x_k||_2; only computed with vectors.
    pub residual_norm: Option<f64>,
}

/// Spectrum of the reversed (Case 2) pencil N x = mu M x.
#[derive(Debug, Clone)]
pub struct ReversedSpectrum {
    /// Descending mu >= 0.
    pub mu: Vec<f64>,
    /// lambda_k = 1/mu_k for the positive mu, ascending.
    pub lambda: Vec<f64>,
    /// Number of mu identified as zero: dim Ker_h(N).
    pub kernel_count: usize,
}

/// Sylvester inertia of A - sigma B, or Indeterminate when a pivot is too
/// close to zero to trust the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloatInertia {
    Counts {
        below: usize,
        at: usize,
        above: usize,
    },
    Indeterminate,
}

/// Relative threshold under which an eigenvalue counts as a structural zero.
/// Exact kernels here (constants, global affine functions) sit many orders
/// of magnitude below the physical eigenvalues at desk scale.
const ZERO_REL_TOL: f64 = 1e-8;

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(b: &SymMat<f64>) -> Result<Mat<f64>> {
    let n = b.dim();
    let mut l = Mat::filled(n, n, 0.0);
    for j in 0..n {
        let mut d = b.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = b.get(i, j);
            let (ri, rj) = (l.row(i), l.row(j));
            for k in 0..j {
                s -= ri[k] * rj[k];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// X := L^{-1} X (forward substitution on all columns at once).
fn solve_lower_inplace(l: &Mat<f64>, x: &mut Mat<f64>) {
    let n = l.rows();
    for i in 0..n {
        for k in 0..i {
            let f = l[(i, k)];
            if f != 0.0 {
                let (row_k, row_i) = x.row_pair_mut(k, i);
                for (xi_v, xk_v) in row_i.iter_mut().zip(row_k.iter()) {
                    *xi_v -= f * xk_v;
                }
            }
        }
        let d = l[(i, i)];
        for v in x.row_mut(i) {
            *v /= d;
        }
    }
}

/// r := L^{-1} r for a single vector held in a row.
fn solve_lower_vec(l: &Mat<f64>, r: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = r[i];
        let li = l.row(i);
        for k in 0..i {
            s -= li[k] * r[k];
        }
        r[i] = s / li[i];
    }
}

/// x := L^{-T} x.
fn solve_lower_transpose_vec(l: &Mat<f64>, x: &mut [f64]) {
    let n = l.rows();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
}

/// Householder tridiagonalization; `a` holds the accumulated transform on
/// exit when `accumulate` is set (EISPACK tred2, otherwise tred1-style).
fn tred2(a: &mut Mat<f64>, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = a.rows();
    if n == 0 {
        return;
    }
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 0 {
            for k in 0..=l {
                scale += a[(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut fsum = 0.0;
                for j in 0..=l {
                    if accumulate {
                        a[(j, i)] = a[(i, j)] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[(j, k)] * a[(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    fsum += e[j] * a[(i, j)];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[(j, k)] -= f * e[k] + g * a[(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    if accumulate {
        d[0] = 0.0;
    }
    e[0] = 0.0;
    if accumulate {
        for i in 0..n {
            let l = i;
            if d[i] != 0.0 {
                for j in 0..l {
                    let mut g = 0.0;
                    for k in 0..l {
                        g += a[(i, k)] * a[(k, j)];
                    }
                    for k in 0..l {
                        a[(k, j)] -= g * a[(k, i)];
                    }
                }
            }
            d[i] = a[(i, i)];
            a[(i, i)] = 1.0;
            for j in 0..i {
                a[(j, i)] = 0.0;
                a[(i, j)] = 0.0;
            }
        }
    } else {
        for i in 0..n {
            d[i] = a[(i, i)];
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix (EISPACK
/// tql2 lineage). Rotations are applied to `z` columns when present.
fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Mat<f64>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Config(
                        "tridiagonal QL iteration failed to converge".into(),
                    ));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in l + 2..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(zm) = z.as_deref_mut() {
                        for k in 0..zm.rows() {
                            let h = zm[(k, i + 1)];
                            zm[(k, i + 1)] = s * zm[(k, i)] + c * h;
                            zm[(k, i)] = c * zm[(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn sort_spectrum(values: &mut [f64], vectors: Option<&mut Mat<f64>>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    values.copy_from_slice(&sorted);
    if let Some(v) = vectors {
        let old = v.clone();
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..v.rows() {
                v[(r, new_col)] = old[(r, old_col)];
            }
        }
    }
}

/// Solve A x = lambda B x for symmetric A and positive definite B.
///
/// Errors with the failing leading minor if B has no Cholesky factorization.
pub fn solve_definite_pencil(
    a: &SymMat<f64>,
    b: &SymMat<f64>,
    want_vectors: bool,
) -> Result<EigenSpectrum> {
    let n = a.dim();
    assert_eq!(b.dim(), n, "pencil dimensions disagree");
    let l = cholesky(b)?;

    // C = L^{-1} A L^{-T}
    let mut c = a.to_full();
    solve_lower_inplace(&l, &mut c);
    for i in 0..n {
        // row_i := L^{-1} row_i, i.e. C := C L^{-T}
        let mut row: Vec<f64> = c.row(i).to_vec();
        solve_lower_vec(&l, &mut row);
        c.row_mut(i).copy_from_slice(&row);
    }
    // enforce exact symmetry of the reduced matrix
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = m;
            c[(j, i)] = m;
        }
    }

    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut c, &mut d, &mut e, want_vectors);
    tql2(&mut d, &mut e, want_vectors.then_some(&mut c))?;

    let mut vectors = if want_vectors {
        // x = L^{-T} y, column by column
        let mut x = Mat::filled(n, n, 0.0);
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = c[(i, j)];
            }
            solve_lower_transpose_vec(&l, &mut col);
            for i in 0..n {
                x[(i, j)] = col[i];
            }
        }
        Some(x)
    } else {
        None
    };
    sort_spectrum(&mut d, vectors.as_mut());

    let scale = {
        let na = a.frobenius_norm();
        let nb = b.frobenius_norm();
        if nb == 0.0 {
            0.0
        } else {
            na / nb
        }
    };
    let zero_count = d.iter().filter(|&&v| v.abs() <= ZERO_REL_TOL * scale).count();

    let residual_norm = vectors.as_ref().map(|x| {
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let xk: Vec<f64> = (0..n).map(|i| x[(i, k)]).collect();
            let ax = crate::linalg::sym_matvec(a, &xk);
            let bx = crate::linalg::sym_matvec(b, &xk);
            let mut norm2 = 0.0;
            for i in 0..n {
                let r = ax[i] - d[k] * bx[i];
                norm2 += r * r;
            }
            worst = worst.max(norm2.sqrt());
        }
        worst
    });

    Ok(EigenSpectrum {
        values: d,
        vectors,
        zero_count,
        residual_norm,
    })
}

/// Smallest positive eigenvalue lambda_1 of A x = lambda B x (A positive
/// definite, B positive semi-definite) as Some((mu_1, lambda_1)) with
/// mu_1 = 1/lambda_1 the largest eigenvalue of the reversed pencil, or None
/// when B vanishes on the whole discrete space.
///
/// Power iteration with Rayleigh quotients on the Cholesky-reduced reversed
/// problem; approximation only (certification never relies on its accuracy).
pub fn largest_reversed_mu(a: &SymMat<f64>, b: &SymMat<f64>) -> Result<Option<(f64, f64)>> {
    let n = a.dim();
    assert_eq!(b.dim(), n);
    let l = cholesky(a)?;
    // deterministic start vector with all spectral components
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i * 2654435761usize) % 97) as f64 / 97.0)
        .collect();
    let norm = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|t| *t /= nx);

    let zero_tol = {
        let norm_a = a.frobenius_norm();
        if norm_a == 0.0 {
            0.0
        } else {
            ZERO_REL_TOL * b.frobenius_norm() / norm_a
        }
    };

    let mut mu = 0.0;
    let mut stable = 0;
    for _ in 0..600 {
        // y = L^{-1} B L^{-T} x
        let mut u = x.clone();
        solve_lower_transpose_vec(&l, &mut u);
        let v = crate::linalg::sym_matvec(b, &u);
        let mut y = v;
        solve_lower_vec(&l, &mut y);
        let mu_new: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        if ny <= zero_tol * 1e-6 || !ny.is_finite() {
            return Ok(None);
        }
        y.iter_mut().for_each(|t| *t /= ny);
        x = y;
        if (mu_new - mu).abs() <= 1e-14 * mu_new.abs() {
            stable += 1;
            if stable >= 3 {
                mu = mu_new;
                break;
            }
        } else {
            stable = 0;
        }
        mu = mu_new;
    }
    if mu <= zero_tol {
        return Ok(None);
    }
    Ok(Some((mu, 1.0 / mu)))
}

/// Case 2 solve in reversed form: N x = mu M x with positive definite M.
/// The positive pencil eigenvalues are lambda = 1/mu.
pub fn solve_reversed_pencil(n_mat: &SymMat<f64>, m_mat: &SymMat<f64>) -> Result<ReversedSpectrum> {
    let spec = solve_definite_pencil(n_mat, m_mat, false)?;
    let dim = spec.values.len();
    let norm_n = n_mat.frobenius_norm();
    let norm_m = m_mat.frobenius_norm();
    let tol = if norm_m == 0.0 {
        0.0
    } else {
        ZERO_REL_TOL * norm_n / norm_m
    };
    let mut mu: Vec<f64> = spec.values.clone();
    mu.reverse();
    let kernel_count = mu.iter().filter(|&&m| m.abs() <= tol).count();
    let lambda: Vec<f64> = mu
        .iter()
        .filter(|&&m| m > tol)
        .map(|&m| 1.0 / m)
        .collect();
    debug_assert_eq!(lambda.len() + kernel_count, dim);
    Ok(ReversedSpectrum {
        mu,
        lambda,
        kernel_count,
    })
}

/// Sylvester inertia of A - sigma B via LDL^T with diagonal pivoting.
///
/// Pivots smaller than tol * ||A - sigma B||_F are not trusted and yield
/// `Indeterminate`; the caller should move sigma. Exact zero pivots with an
/// exactly zero remaining column are counted in `at`.
pub fn float_inertia(a: &SymMat<f64>, b: &SymMat<f64>, sigma: f64) -> FloatInertia {
    let n = a.dim();
    assert_eq!(b.dim(), n);
    let mut m = Mat::from_fn(n, n, |i, j| a.get(i, j) - sigma * b.get(i, j));
    let mut norm = 0.0;
    for i in 0..n {
        for j in 0..n {
            norm += m[(i, j)] * m[(i, j)];
        }
    }
    let norm = norm.sqrt();
    let pivot_tol = 1e-12 * norm;

    let mut active: Vec<usize> = (0..n).collect();
    let (mut below, mut at, mut above) = (0usize, 0usize, 0usize);
    while let Some((pos, &piv_idx)) = active
        .iter()
        .enumerate()
        .max_by(|x, y| m[(*x.1, *x.1)].abs().total_cmp(&m[(*y.1, *y.1)].abs()))
    {
        let d = m[(piv_idx, piv_idx)];
        if d.abs() <= pivot_tol {
            // exact structural zero: pivot and its whole active column vanish
            let structurally_zero =
                d == 0.0 && active.iter().all(|&i| m[(i, piv_idx)] == 0.0);
            if structurally_zero {
                at += 1;
                active.remove(pos);
                continue;
            }
            return FloatInertia::Indeterminate;
        }
        if d < 0.0 {
            below += 1;
        } else {
            above += 1;
        }
        active.remove(pos);
        // rank-1 update restricted to the active set
        for (ii, &i) in active.iter().enumerate() {
            let wi = m[(i, piv_idx)] / d;
            for &k in active.iter().skip(ii) {
                let upd = wi * m[(k, piv_idx)];
                m[(i, k)] -= upd;
                if i != k {
                    m[(k, i)] = m[(i, k)];
                }
            }
        }
    }
    FloatInertia::Counts { below, at, above }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(vals: &[&[f64]]) -> SymMat<f64> {
        SymMat::from_fn(vals.len(), |i, j| vals[i][j])
    }

    #[test]
    fn diagonal_pencil() {
        let a = sym(&[&[2.0, 0.0], &[0.0, 8.0]]);
        let b = sym(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let s = solve_definite_pencil(&a, &b, true).unwrap();
        assert!((s.values[0] - 2.0).abs() < 1e-12);
        assert!((s.values[1] - 4.0).abs() < 1e-12);
        assert!(s.residual_norm.unwrap() < 1e-12);
    }

    #[test]
    fn k1_cr_neumann_hand_spectrum() {
        let a = sym(&[&[4.0, -2.0, -2.0], &[-2.0, 2.0, 0.0], &[-2.0, 0.0, 2.0]]);
        let b = SymMat::from_fn(3, |i, j| if i == j { 1.0 / 6.0 } else { 0.0 });
        let s = solve_definite_pencil(&a, &b, true).unwrap();
        assert!(s.values[0].abs() < 1e-12);
        assert!((s.values[1] - 12.0).abs() < 1e-10);
        assert!((s.values[2] - 36.0).abs() < 1e-10);
        assert_eq!(s.zero_count, 1);
        let quality = 1e-12 * (a.frobenius_norm() + 36.0 * b.frobenius_norm());
        assert!(s.residual_norm.unwrap() <= quality);
    }

    #[test]
    fn cholesky_failure_names_minor() {
        let b = sym(&[&[1.0, 2.0], &[2.0, 1.0]]); // indefinite
        match cholesky(&b) {
            Err(Error::NotPositiveDefinite { minor }) => assert_eq!(minor, 2),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn b_orthonormal_vectors() {
        let a = sym(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, -1.0], &[0.0, -1.0, 2.0]]);
        let b = sym(&[&[2.0, 0.5, 0.0], &[0.5, 1.5, 0.2], &[0.0, 0.2, 1.0]]);
        let s = solve_definite_pencil(&a, &b, true).unwrap();
        let x = s.vectors.as_ref().unwrap();
        for p in 0..3 {
            for q in 0..3 {
                let xp: Vec<f64> = (0..3).map(|i| x[(i, p)]).collect();
                let xq: Vec<f64> = (0..3).map(|i| x[(i, q)]).collect();
                let val = b.quad_form(&xp, &xq);
                let expect = if p == q { 1.0 } else { 0.0 };
                assert!((val - expect).abs() < 1e-10, "B-orthonormality failed");
            }
        }
    }

    #[test]
    fn reversed_pencil_reciprocals() {
        // mu spectrum {0.5, 0.25, 0} -> lambda {2, 4}, kernel 1
        let n_mat = sym(&[
            &[0.5, 0.0, 0.0],
            &[0.0, 0.25, 0.0],
            &[0.0, 0.0, 0.0],
        ]);
        let m_mat = sym(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let r = solve_reversed_pencil(&n_mat, &m_mat).unwrap();
        assert_eq!(r.kernel_count, 1);
        assert!((r.lambda[0] - 2.0).abs() < 1e-12);
        assert!((r.lambda[1] - 4.0).abs() < 1e-12);
        assert!(r.mu[0] >= r.mu[1] && r.mu[1] >= r.mu[2]);
    }

    #[test]
    fn zero_n_matrix_is_all_kernel() {
        let n_mat = SymMat::filled(4, 0.0);
        let m_mat = SymMat::from_fn(4, |i, j| if i == j { 2.0 } else { 0.0 });
        let r = solve_reversed_pencil(&n_mat, &m_mat).unwrap();
        assert_eq!(r.kernel_count, 4);
        assert!(r.lambda.is_empty());
    }

    #[test]
    fn float_inertia_diagonal_examples() {
        let a = sym(&[&[1.0, 0.0], &[0.0, 3.0]]);
        let b = sym(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(
            float_inertia(&a, &b, 2.0),
            FloatInertia::Counts {
                below: 1,
                at: 0,
                above: 1
            }
        );
        assert_eq!(
            float_inertia(&a, &b, 0.5),
            FloatInertia::Counts {
                below: 0,
                at: 0,
                above: 2
            }
        );
    }

    #[test]
    fn float_inertia_on_k1_pencil() {
        let a = sym(&[&[4.0, -2.0, -2.0], &[-2.0, 2.0, 0.0], &[-2.0, 0.0, 2.0]]);
        let b = SymMat::from_fn(3, |i, j| if i == j { 1.0 / 6.0 } else { 0.0 });
        match float_inertia(&a, &b, 20.0) {
            FloatInertia::Counts { below, .. } => assert_eq!(below, 2),
            _ => panic!("unexpected indeterminate"),
        }
    }

    #[test]
    fn shift_consistency() {
        let a = sym(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, -1.0], &[0.0, -1.0, 2.0]]);
        let b = sym(&[&[2.0, 0.5, 0.0], &[0.5, 1.5, 0.2], &[0.0, 0.2, 1.0]]);
        let c = 0.73;
        let shifted = SymMat::from_fn(3, |i, j| a.get(i, j) + c * b.get(i, j));
        let s0 = solve_definite_pencil(&a, &b, false).unwrap();
        let s1 = solve_definite_pencil(&shifted, &b, false).unwrap();
        for k in 0..3 {
            assert!((s1.values[k] - s0.values[k] - c).abs() < 1e-10);
        }
    }
}
