//! Matrix stability classes: stable, D-stable and Volterra-Lyapunov (VL)
//! stable, with certificates.
//!
//! The hierarchy is `VL-stable ⊊ D-stable ⊊ stable`. VL-stability is
//! decided in three stages: an exact quasidominance test (sufficient), a
//! convex search over positive diagonal weights, and a stability check that
//! can refute the whole hierarchy. Anything else is reported as unknown.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::community::Community;
use crate::error::{Error, Result};

/// Default tolerance for sign-of-real-part decisions.
pub const DEFAULT_STABILITY_TOL: f64 = 1e-9;
/// Default iteration budget for the diagonal-weight search.
pub const DEFAULT_VL_MAX_ITERS: usize = 4000;
/// Floor on each diagonal weight during the search.
pub const VL_WEIGHT_FLOOR: f64 = 1e-6;

/// Square matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix(DMatrix<f64>);

impl RealMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some((k, _)) = m.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            // column-major storage
            let (i, j) = (k % m.nrows(), k / m.nrows());
            return Err(Error::NumericalDomain(format!(
                "entry ({}, {}) is not finite",
                i + 1,
                j + 1
            )));
        }
        Ok(RealMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        RealMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        RealMatrix(DMatrix::zeros(n, n))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> Option<(usize, usize)> {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.0[(i, j)] - self.0[(j, i)]).abs() > tol {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

impl Serialize for RealMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RealMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        RealMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// `A(J)`: rows and columns of `J` in increasing index order.
pub fn principal_submatrix(a: &RealMatrix, community: &Community) -> Result<RealMatrix> {
    if community.is_empty() {
        return Err(Error::InvalidCommunity(
            "principal submatrix of the empty community".into(),
        ));
    }
    if !community.fits(a.dim()) {
        return Err(Error::InvalidCommunity(format!(
            "{community} is not a subset of {{1..{}}}",
            a.dim()
        )));
    }
    Ok(RealMatrix(restrict(a.as_matrix(), *community)))
}

/// Unchecked restriction, empty community gives a 0x0 matrix.
pub(crate) fn restrict(m: &DMatrix<f64>, community: Community) -> DMatrix<f64> {
    let idx = community.to_vec();
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Solves `m x = rhs`, returning `None` when `m` is numerically singular
/// (a pivot below `1e-12` relative to the largest entry).
pub(crate) fn solve_linear(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Some(DVector::zeros(0));
    }
    let scale = m.amax();
    if scale == 0.0 {
        return None;
    }
    let lu = m.clone().lu();
    let u = lu.u();
    if (0..n).any(|i| u[(i, i)].abs() <= 1e-12 * scale) {
        return None;
    }
    lu.solve(rhs)
}

/// All eigenvalues with multiplicity, sorted by real part descending and
/// then by imaginary part descending.
pub fn spectrum(m: &RealMatrix) -> Result<Vec<Complex<f64>>> {
    spectrum_of(m.as_matrix())
}

pub(crate) fn spectrum_of(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalDomain("matrix has non-finite entries".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let n = m.nrows();
    let triangular = (0..n).all(|i| (0..i).all(|j| m[(i, j)] == 0.0));
    if triangular {
        let mut ev: Vec<Complex<f64>> = (0..n).map(|i| Complex::new(m[(i, i)], 0.0)).collect();
        ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
        return Ok(ev);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalDomain("Schur decomposition did not converge".into()))?;
    let mut ev: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(ev)
}

pub(crate) fn max_real_part(m: &DMatrix<f64>) -> Result<f64> {
    Ok(spectrum_of(m)?.first().map(|z| z.re).unwrap_or(f64::NEG_INFINITY))
}

/// True iff every eigenvalue has real part below `-tol`.
pub fn is_stable(m: &RealMatrix, tol: f64) -> Result<bool> {
    Ok(max_real_part(m.as_matrix())? < -tol)
}

/// Positive weights `π` with `-π_i a_ii - Σ_{j≠i} π_j |a_ij| > 0` for every
/// row, if any exist.
///
/// Existence is equivalent to the comparison matrix `C` (`C_ii = -a_ii`,
/// `C_ij = -|a_ij|`) being a nonsingular M-matrix, tested as `ρ(B) < s` for
/// `C = sI - B`. The returned weights are `C⁻¹·1`, re-checked against the
/// defining inequalities.
pub fn quasidominance_weights(a: &RealMatrix) -> Option<Vec<f64>> {
    let c = comparison_matrix(a.as_matrix())?;
    let pi = m_matrix_solve(&c)?;
    satisfies_row_quasidominance(a, &pi).then_some(pi)
}

fn comparison_matrix(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if (0..n).any(|i| a[(i, i)] >= 0.0) {
        return None;
    }
    Some(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -a[(i, i)]
        } else {
            -a[(i, j)].abs()
        }
    }))
}

/// `C⁻¹·1` when the Z-matrix `C` is a nonsingular M-matrix.
fn m_matrix_solve(c: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = c.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    let s = (0..n).map(|i| c[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    let b = DMatrix::from_diagonal_element(n, n, s) - c;
    let rho = spectrum_of(&b).ok()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if rho >= s {
        return None;
    }
    let x = c.clone().lu().solve(&DVector::from_element(n, 1.0))?;
    x.iter().all(|&v| v > 0.0).then(|| x.iter().copied().collect())
}

/// Direct substitution into the quasidominance inequalities.
pub fn satisfies_row_quasidominance(a: &RealMatrix, pi: &[f64]) -> bool {
    let n = a.dim();
    pi.len() == n
        && pi.iter().all(|&p| p > 0.0)
        && (0..n).all(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| pi[j] * a.get(i, j).abs()).sum();
            -pi[i] * a.get(i, i) - off > 0.0
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VlVerdict {
    CertifiedVL,
    CertifiedNotStable,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificationMethod {
    Quasidominance,
    ConvexSearch,
    /// The caller vouches for VL-stability; nothing was computed.
    UserAsserted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VlCertificate {
    pub verdict: VlVerdict,
    /// Positive diagonal weights `H`, normalized to sum 1.
    pub h: Option<Vec<f64>>,
    /// Largest eigenvalue of `HA + AᵀH` at the reported (or best found) `h`.
    pub lambda_max: Option<f64>,
    pub method: Option<CertificationMethod>,
}

impl VlCertificate {
    pub fn user_asserted() -> Self {
        VlCertificate {
            verdict: VlVerdict::Unknown,
            h: None,
            lambda_max: None,
            method: Some(CertificationMethod::UserAsserted),
        }
    }

    /// VL-stability either certified or asserted by the caller.
    pub fn vl_assumed(&self) -> bool {
        self.verdict == VlVerdict::CertifiedVL || self.method == Some(CertificationMethod::UserAsserted)
    }
}

fn lyapunov_form(a: &DMatrix<f64>, h: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| h[i] * a[(i, j)] + a[(j, i)] * h[j])
}

/// Largest eigenvalue of a symmetric matrix with a unit eigenvector.
fn top_eigenpair(s: DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(s);
    let (k, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, v)| (k, *v))
        .expect("nonempty matrix");
    (lam, eig.eigenvectors.column(k).into_owned())
}

/// `λ_max(diag(h)·A + Aᵀ·diag(h))`.
pub fn lyapunov_lambda_max(a: &RealMatrix, h: &[f64]) -> f64 {
    if a.dim() == 0 {
        return f64::NEG_INFINITY;
    }
    top_eigenpair(lyapunov_form(a.as_matrix(), h)).0
}

fn normalized(h: &[f64]) -> Vec<f64> {
    let s: f64 = h.iter().sum();
    h.iter().map(|v| v / s).collect()
}

pub fn certify_vl_stability(a: &RealMatrix, tol: f64, max_iters: usize) -> Result<VlCertificate> {
    let n = a.dim();
    if n == 0 {
        return Ok(VlCertificate {
            verdict: VlVerdict::CertifiedVL,
            h: Some(Vec::new()),
            lambda_max: Some(f64::NEG_INFINITY),
            method: Some(CertificationMethod::Quasidominance),
        });
    }

    // Stage 1: quasidominance. Row weights alone need not diagonalize the
    // Lyapunov form, so the row/column weight ratio is tried as well.
    if let Some(c) = comparison_matrix(a.as_matrix()) {
        if let Some(pi) = m_matrix_solve(&c) {
            let mut candidates = vec![normalized(&pi)];
            if let Some(eta) = m_matrix_solve(&c.transpose()) {
                let ratio: Vec<f64> = eta.iter().zip(&pi).map(|(e, p)| e / p).collect();
                candidates.push(normalized(&ratio));
            }
            for h in candidates {
                let lam = lyapunov_lambda_max(a, &h);
                if lam < -tol {
                    return Ok(VlCertificate {
                        verdict: VlVerdict::CertifiedVL,
                        h: Some(h),
                        lambda_max: Some(lam),
                        method: Some(CertificationMethod::Quasidominance),
                    });
                }
            }
        }
    }

    // Stage 2: minimize the convex function h -> λ_max over the floored simplex.
    let (h, lam) = minimize_lyapunov_lambda(a, tol, max_iters);
    if lam < -tol {
        return Ok(VlCertificate {
            verdict: VlVerdict::CertifiedVL,
            h: Some(h),
            lambda_max: Some(lam),
            method: Some(CertificationMethod::ConvexSearch),
        });
    }

    // Stage 3: VL-stable implies stable.
    let verdict = if is_stable(a, tol)? {
        VlVerdict::Unknown
    } else {
        VlVerdict::CertifiedNotStable
    };
    Ok(VlCertificate {
        verdict,
        h: None,
        lambda_max: Some(lam),
        method: None,
    })
}

/// Projected subgradient descent; returns the best point seen.
fn minimize_lyapunov_lambda(a: &RealMatrix, tol: f64, max_iters: usize) -> (Vec<f64>, f64) {
    let n = a.dim();
    let am = a.as_matrix();
    let mut h = vec![1.0 / n as f64; n];
    let mut best_h = h.clone();
    let mut best = f64::INFINITY;
    let step0 = 0.5 / (n as f64).sqrt();
    for k in 0..max_iters.max(1) {
        let (lam, v) = top_eigenpair(lyapunov_form(am, &h));
        if lam < best {
            best = lam;
            best_h.clone_from(&h);
        }
        if best < -tol {
            break;
        }
        // d/dh_i vᵀ(HA + AᵀH)v = 2 v_i (Av)_i
        let av = am * &v;
        let g: Vec<f64> = (0..n).map(|i| 2.0 * v[i] * av[i]).collect();
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let step = step0 / ((k + 1) as f64).sqrt() / gnorm;
        let moved: Vec<f64> = h.iter().zip(&g).map(|(hi, gi)| hi - step * gi).collect();
        h = project_floored_simplex(&moved, VL_WEIGHT_FLOOR);
    }
    (best_h, best)
}

/// Euclidean projection onto `{h : h_i ≥ floor, Σ h_i = 1}`.
fn project_floored_simplex(x: &[f64], floor: f64) -> Vec<f64> {
    let n = x.len();
    let mass = 1.0 - floor * n as f64;
    let y: Vec<f64> = x.iter().map(|v| v - floor).collect();
    let mut sorted = y.clone();
    sorted.sort_by(|p, q| q.total_cmp(p));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - mass) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0) + floor).collect()
}

/// Randomized search for a positive diagonal `D` making `DA` not stable.
///
/// A returned `D` is a witness against D-stability; `None` proves nothing.
pub fn d_stability_falsifier(a: &RealMatrix, samples: usize, seed: u64) -> Result<Option<RealMatrix>> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (1e-3f64.ln(), 1e3f64.ln());
    for _ in 0..samples {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi).exp()).collect();
        let da = DMatrix::from_fn(n, n, |i, j| d[i] * a.get(i, j));
        if max_real_part(&da)? >= -DEFAULT_STABILITY_TOL {
            return Ok(Some(RealMatrix::diagonal(&d)?));
        }
    }
    Ok(None)
}
