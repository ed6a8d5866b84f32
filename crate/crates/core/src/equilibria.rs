//! Systems, admissible equilibria, linearizations and invasion rates.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::Community;
use crate::error::{Error, Result};
use crate::matrix_analysis::{
    certify_vl_stability, restrict, solve_linear, spectrum_of, RealMatrix, VlCertificate, DEFAULT_STABILITY_TOL,
    DEFAULT_VL_MAX_ITERS,
};

/// Strict positivity threshold for equilibrium coordinates.
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-9;
/// Invasion rates with magnitude at or below this count as zero.
pub const DEFAULT_SIGN_TOL: f64 = 1e-9;
/// Enumeration is capped at `2^24` communities.
pub const MAX_ENUMERATION_SPECIES: usize = 24;

/// `u_i' = u_i (b_i + Σ_j a_ij u_j)` together with the VL verdict on `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LvSystem {
    a: RealMatrix,
    b: Vec<f64>,
    certificate: VlCertificate,
}

impl LvSystem {
    /// Builds the system and certifies `A` with default tolerances.
    pub fn new(a: RealMatrix, b: Vec<f64>) -> Result<Self> {
        let certificate = certify_vl_stability(&a, DEFAULT_STABILITY_TOL, DEFAULT_VL_MAX_ITERS)?;
        Self::with_certificate(a, b, certificate)
    }

    pub fn with_certificate(a: RealMatrix, b: Vec<f64>, certificate: VlCertificate) -> Result<Self> {
        if a.dim() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "A is {0}x{0} but b has {1} entries",
                a.dim(),
                b.len()
            )));
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain(format!("b[{}] is not finite", i + 1)));
        }
        if a.dim() > crate::community::MAX_SPECIES {
            return Err(Error::TooLarge(format!("{} species", a.dim())));
        }
        Ok(LvSystem { a, b, certificate })
    }

    /// Skips certification; the caller vouches for VL-stability of `A`.
    pub fn assuming_vl(a: RealMatrix, b: Vec<f64>) -> Result<Self> {
        Self::with_certificate(a, b, VlCertificate::user_asserted())
    }

    /// Same `A` (and certificate), different growth vector.
    pub fn with_growth(&self, b: Vec<f64>) -> Result<Self> {
        Self::with_certificate(self.a.clone(), b, self.certificate.clone())
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn certificate(&self) -> &VlCertificate {
        &self.certificate
    }

    pub fn vl_assumed(&self) -> bool {
        self.certificate.vl_assumed()
    }

    /// Per-capita growth `b + A u`.
    pub fn per_capita(&self, u: &[f64]) -> Vec<f64> {
        let a = self.a.as_matrix();
        (0..self.n())
            .map(|i| self.b[i] + (0..self.n()).map(|j| a[(i, j)] * u[j]).sum::<f64>())
            .collect()
    }

    /// Vector field `F(u)`. Zero coordinates stay exactly zero.
    pub fn vector_field(&self, u: &[f64], out: &mut [f64]) {
        let a = self.a.as_matrix();
        let n = self.n();
        for i in 0..n {
            if u[i] == 0.0 {
                out[i] = 0.0;
                continue;
            }
            let mut g = self.b[i];
            for j in 0..n {
                g += a[(i, j)] * u[j];
            }
            out[i] = u[i] * g;
        }
    }

    pub(crate) fn check_community(&self, community: &Community) -> Result<()> {
        if community.fits(self.n()) {
            Ok(())
        } else {
            Err(Error::InvalidCommunity(format!(
                "{community} is not a subset of {{1..{}}}",
                self.n()
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub community: Community,
    pub u_star: Vec<f64>,
    pub admissible: bool,
    pub hyperbolic: bool,
    pub is_gass: bool,
}

/// Outcome of solving `A(J) v = -b(J)`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Restricted {
    Singular,
    /// The solution embedded in `n` coordinates.
    Solved(Vec<f64>),
}

pub(crate) fn solve_restricted(sys: &LvSystem, community: Community) -> Restricted {
    let idx = community.to_vec();
    let m = restrict(sys.a.as_matrix(), community);
    let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| -sys.b[i]));
    match solve_linear(&m, &rhs) {
        None => Restricted::Singular,
        Some(v) => {
            let mut u = vec![0.0; sys.n()];
            for (k, &i) in idx.iter().enumerate() {
                u[i] = v[k];
            }
            Restricted::Solved(u)
        }
    }
}

/// Invasion rates at `u`: exactly zero on `community`, `b_i + Σ_{j∈I} a_ij u_j`
/// elsewhere.
pub(crate) fn rates_at(sys: &LvSystem, community: Community, u: &[f64]) -> Vec<f64> {
    let a = sys.a.as_matrix();
    (0..sys.n())
        .map(|i| {
            if community.contains(i) {
                0.0
            } else {
                sys.b[i] + community.members().map(|j| a[(i, j)] * u[j]).sum::<f64>()
            }
        })
        .collect()
}

fn off_community_hyperbolic(community: Community, rates: &[f64], sign_tol: f64) -> bool {
    rates
        .iter()
        .enumerate()
        .all(|(i, r)| community.contains(i) || r.abs() > sign_tol)
}

fn saturated(community: Community, rates: &[f64], tol: f64) -> bool {
    rates
        .iter()
        .enumerate()
        .all(|(i, &r)| community.contains(i) || r <= tol)
}

/// All admissible equilibria of a system, in canonical community order,
/// together with the invasion rates at each.
#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    n: usize,
    tol: f64,
    equilibria: Vec<Equilibrium>,
    rates: Vec<Vec<f64>>,
    /// Communities whose restricted matrix is singular.
    pub degenerate: Vec<Community>,
    /// Communities with all coordinates in `(0, tol]` or above, but not
    /// all above `tol`: on the boundary of admissibility.
    pub boundary: Vec<Community>,
}

impl Catalog {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn equilibria(&self) -> &[Equilibrium] {
        &self.equilibria
    }

    pub fn len(&self) -> usize {
        self.equilibria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equilibria.is_empty()
    }

    pub fn communities(&self) -> impl Iterator<Item = Community> + '_ {
        self.equilibria.iter().map(|e| e.community)
    }

    fn position(&self, community: &Community) -> Option<usize> {
        self.equilibria.binary_search_by(|e| e.community.cmp(community)).ok()
    }

    pub fn get(&self, community: &Community) -> Option<&Equilibrium> {
        self.position(community).map(|k| &self.equilibria[k])
    }

    pub fn rates(&self, community: &Community) -> Option<&[f64]> {
        self.position(community).map(|k| self.rates[k].as_slice())
    }

    /// Cached `r_i(I)`.
    pub fn invasion_rate(&self, community: &Community, species: usize) -> Result<f64> {
        if species >= self.n {
            return Err(Error::InvalidCommunity(format!("species {} out of range", species + 1)));
        }
        self.rates(community)
            .map(|r| r[species])
            .ok_or_else(|| Error::InvalidCommunity(format!("{community} is not admissible")))
    }

    pub fn gass(&self) -> Option<&Equilibrium> {
        self.equilibria.iter().find(|e| e.is_gass)
    }
}

/// Solves all `2^n` restricted systems and keeps the strictly positive ones.
pub fn enumerate_admissible(sys: &LvSystem, tol: f64) -> Result<Catalog> {
    let n = sys.n();
    if n > MAX_ENUMERATION_SPECIES {
        return Err(Error::TooLarge(format!(
            "{n} species exceed the enumeration budget of {MAX_ENUMERATION_SPECIES}"
        )));
    }
    let subsets = Community::all_subsets(n);
    let solve = |&c: &Community| (c, solve_restricted(sys, c));
    let solved: Vec<(Community, Restricted)> = if n >= 8 {
        subsets.par_iter().map(solve).collect()
    } else {
        subsets.iter().map(solve).collect()
    };

    let mut catalog = Catalog {
        n,
        tol,
        equilibria: Vec::new(),
        rates: Vec::new(),
        degenerate: Vec::new(),
        boundary: Vec::new(),
    };
    for (community, outcome) in solved {
        let u = match outcome {
            Restricted::Singular => {
                catalog.degenerate.push(community);
                continue;
            }
            Restricted::Solved(u) => u,
        };
        let positive = community.members().all(|i| u[i] > tol);
        if !positive {
            if community.members().all(|i| u[i] > 0.0) {
                catalog.boundary.push(community);
            }
            continue;
        }
        let rates = rates_at(sys, community, &u);
        catalog.equilibria.push(Equilibrium {
            community,
            hyperbolic: off_community_hyperbolic(community, &rates, tol),
            is_gass: saturated(community, &rates, tol),
            admissible: true,
            u_star: u,
        });
        catalog.rates.push(rates);
    }
    Ok(catalog)
}

/// `r_i(I) = b_i + Σ_{j∈I} a_ij u*_j`, zero for members of `I`.
pub fn invasion_rate(sys: &LvSystem, community: &Community, species: usize) -> Result<f64> {
    sys.check_community(community)?;
    if species >= sys.n() {
        return Err(Error::InvalidCommunity(format!("species {} out of range", species + 1)));
    }
    let u = match solve_restricted(sys, *community) {
        Restricted::Solved(u) if community.members().all(|i| u[i] > DEFAULT_POSITIVITY_TOL) => u,
        _ => return Err(Error::InvalidCommunity(format!("{community} is not admissible"))),
    };
    Ok(rates_at(sys, *community, &u)[species])
}

/// Jacobian at an admissible equilibrium in block form: members of the
/// community first, then the remaining species.
#[derive(Clone, Debug, PartialEq)]
pub struct Linearization {
    pub community: Community,
    /// `permutation[k]` is the natural index of block position `k`.
    pub permutation: Vec<usize>,
    /// `B11_ij = a_ij u*_i` over the community.
    pub b11: DMatrix<f64>,
    pub b12: DMatrix<f64>,
    /// Invasion rates of the absent species.
    pub b22: Vec<f64>,
    /// The same Jacobian in natural variable order.
    pub jacobian: DMatrix<f64>,
}

impl Linearization {
    /// The block upper-triangular matrix in permuted order.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let k = self.b11.nrows();
        let n = self.permutation.len();
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (k, k)).copy_from(&self.b11);
        m.view_mut((0, k), (k, n - k)).copy_from(&self.b12);
        for (r, v) in self.b22.iter().enumerate() {
            m[(k + r, k + r)] = *v;
        }
        m
    }

    /// Eigenvector of the Jacobian for the invasion rate of `species`
    /// (an absent species): `x_i = 1`, community block solving
    /// `(B11 - r Id) x_I = -B12 e_i`, zero elsewhere. Natural order.
    pub fn invasion_eigenvector(&self, species: usize) -> Result<Vec<f64>> {
        let k = self.b11.nrows();
        let col = self
            .permutation
            .iter()
            .skip(k)
            .position(|&p| p == species)
            .ok_or_else(|| Error::InvalidCommunity(format!("species {} belongs to {}", species + 1, self.community)))?;
        let r = self.b22[col];
        let lhs = &self.b11 - DMatrix::identity(k, k) * r;
        let rhs = -self.b12.column(col);
        let x = solve_linear(&lhs, &rhs.into_owned()).ok_or_else(|| {
            Error::NumericalDomain(format!(
                "invasion rate of species {} is an eigenvalue of the community block",
                species + 1
            ))
        })?;
        let mut v = vec![0.0; self.permutation.len()];
        for (pos, &i) in self.permutation.iter().take(k).enumerate() {
            v[i] = x[pos];
        }
        v[species] = 1.0;
        Ok(v)
    }
}

pub fn linearize(sys: &LvSystem, eq: &Equilibrium) -> Result<Linearization> {
    if !eq.admissible {
        return Err(Error::PreconditionFailed(format!(
            "{} is not an admissible equilibrium",
            eq.community
        )));
    }
    sys.check_community(&eq.community)?;
    let n = sys.n();
    let a = sys.a.as_matrix();
    let u = &eq.u_star;
    let inside = eq.community.to_vec();
    let outside = eq.community.complement(n).to_vec();
    let rates = rates_at(sys, eq.community, u);

    let jacobian = DMatrix::from_fn(n, n, |i, j| {
        if eq.community.contains(i) {
            a[(i, j)] * u[i]
        } else if i == j {
            rates[i]
        } else {
            0.0
        }
    });
    let b11 = DMatrix::from_fn(inside.len(), inside.len(), |r, c| jacobian[(inside[r], inside[c])]);
    let b12 = DMatrix::from_fn(inside.len(), outside.len(), |r, c| jacobian[(inside[r], outside[c])]);
    let b22 = outside.iter().map(|&i| rates[i]).collect();
    let mut permutation = inside;
    permutation.extend(outside);
    Ok(Linearization {
        community: eq.community,
        permutation,
        b11,
        b12,
        b22,
        jacobian,
    })
}

/// One row of the invasion scheme: an admissible community, its
/// equilibrium, the rates `r_i(I)` and their signs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeRow {
    pub equilibrium: Equilibrium,
    pub rates: Vec<f64>,
    pub signs: Vec<i8>,
}

impl SchemeRow {
    pub fn community(&self) -> Community {
        self.equilibrium.community
    }
}

/// Sign table `IS(i, I) = sgn r_i(I)` over all admissible communities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvasionScheme {
    pub n: usize,
    pub sign_tol: f64,
    /// Rows in canonical community order.
    pub rows: Vec<SchemeRow>,
    pub degenerate: Vec<Community>,
    pub boundary: Vec<Community>,
}

impl InvasionScheme {
    pub fn from_catalog(catalog: &Catalog, sign_tol: f64) -> Self {
        let rows = catalog
            .equilibria
            .iter()
            .zip(&catalog.rates)
            .map(|(eq, rates)| {
                let signs = rates
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| {
                        if eq.community.contains(i) || r.abs() <= sign_tol {
                            0
                        } else if r > 0.0 {
                            1
                        } else {
                            -1
                        }
                    })
                    .collect();
                let mut equilibrium = eq.clone();
                equilibrium.hyperbolic = off_community_hyperbolic(eq.community, rates, sign_tol);
                SchemeRow {
                    equilibrium,
                    rates: rates.clone(),
                    signs,
                }
            })
            .collect();
        InvasionScheme {
            n: catalog.n,
            sign_tol,
            rows,
            degenerate: catalog.degenerate.clone(),
            boundary: catalog.boundary.clone(),
        }
    }

    pub fn row(&self, community: &Community) -> Option<&SchemeRow> {
        self.rows
            .binary_search_by(|r| r.community().cmp(community))
            .ok()
            .map(|k| &self.rows[k])
    }

    pub fn communities(&self) -> impl Iterator<Item = Community> + '_ {
        self.rows.iter().map(|r| r.community())
    }

    pub fn sign(&self, community: &Community, species: usize) -> Option<i8> {
        self.row(community).and_then(|r| r.signs.get(species).copied())
    }

    pub fn rate(&self, community: &Community, species: usize) -> Option<f64> {
        self.row(community).and_then(|r| r.rates.get(species).copied())
    }

    pub fn nonhyperbolic(&self) -> Vec<Community> {
        self.rows
            .iter()
            .filter(|r| !r.equilibrium.hyperbolic)
            .map(|r| r.community())
            .collect()
    }

    pub fn all_hyperbolic(&self) -> bool {
        self.rows.iter().all(|r| r.equilibrium.hyperbolic)
    }

    /// Smallest `|r_i(I)|` over absent species, `+∞` if there is none.
    pub fn min_off_community_rate(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| {
                let c = r.community();
                r.rates
                    .iter()
                    .enumerate()
                    .filter(move |(i, _)| !c.contains(*i))
                    .map(|(_, v)| v.abs())
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn equilibria(&self) -> impl Iterator<Item = &Equilibrium> {
        self.rows.iter().map(|r| &r.equilibrium)
    }
}

/// Enumerates with the default positivity tolerance and tabulates signs.
pub fn invasion_scheme(sys: &LvSystem, sign_tol: f64) -> Result<InvasionScheme> {
    let catalog = enumerate_admissible(sys, DEFAULT_POSITIVITY_TOL)?;
    Ok(InvasionScheme::from_catalog(&catalog, sign_tol))
}

/// Hyperbolicity per admissible community, decided from invasion rates and
/// cross-checked against the Jacobian spectrum.
pub fn hyperbolicity_report(sys: &LvSystem, sign_tol: f64) -> Result<BTreeMap<Community, bool>> {
    if !sys.vl_assumed() {
        return Err(Error::PreconditionFailed(
            "rate-based hyperbolicity needs a VL-stable interaction matrix".into(),
        ));
    }
    let scheme = invasion_scheme(sys, sign_tol)?;
    let mut report = BTreeMap::new();
    for row in &scheme.rows {
        let by_rates = row.equilibrium.hyperbolic;
        let lin = linearize(sys, &row.equilibrium)?;
        let by_spectrum = spectrum_of(&lin.jacobian)?.iter().all(|z| z.re.abs() > sign_tol);
        if by_rates != by_spectrum {
            return Err(Error::InternalConsistency(format!(
                "hyperbolicity of {} is {by_rates} from invasion rates but {by_spectrum} from the spectrum",
                row.community()
            )));
        }
        report.insert(row.community(), by_rates);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn three_species() -> LvSystem {
        let a =
            RealMatrix::from_rows(&[vec![-1.0, 0.08, -0.47], vec![0.66, -1.0, 0.12], vec![0.56, -0.28, -1.0]]).unwrap();
        LvSystem::new(a, vec![0.43, -0.05, 0.28]).unwrap()
    }

    fn c(labels: &[usize]) -> Community {
        Community::from_labels(labels).unwrap()
    }

    /// Cramer's rule for 2x2 systems, independent of the LU path.
    fn cramer2(m: [[f64; 2]; 2], r: [f64; 2]) -> [f64; 2] {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [
            (r[0] * m[1][1] - m[0][1] * r[1]) / det,
            (m[0][0] * r[1] - r[0] * m[1][0]) / det,
        ]
    }

    #[test]
    fn three_species_has_six_admissible_communities() {
        let sys = three_species();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        let got: Vec<Community> = cat.communities().collect();
        assert_eq!(
            got,
            vec![c(&[]), c(&[1]), c(&[3]), c(&[1, 2]), c(&[1, 3]), c(&[1, 2, 3])]
        );
        assert!(cat.degenerate.is_empty());

        let u12 = &cat.get(&c(&[1, 2])).unwrap().u_star;
        let oracle = cramer2([[-1.0, 0.08], [0.66, -1.0]], [-0.43, 0.05]);
        assert_abs_diff_eq!(u12[0], oracle[0], epsilon = 1e-12);
        assert_abs_diff_eq!(u12[1], oracle[1], epsilon = 1e-12);
        assert_abs_diff_eq!(u12[0], 0.449746, epsilon = 1e-6);
        assert_abs_diff_eq!(u12[1], 0.246832, epsilon = 1e-6);
        assert_eq!(u12[2], 0.0);

        let u13 = &cat.get(&c(&[1, 3])).unwrap().u_star;
        assert_abs_diff_eq!(u13[0], 0.2362255, epsilon = 1e-6);
        assert_abs_diff_eq!(u13[2], 0.4122863, epsilon = 1e-6);
        assert_eq!(cat.gass().unwrap().community, c(&[1, 2, 3]));
    }

    #[test]
    fn zero_growth_admits_only_the_empty_community() {
        let sys = three_species().with_growth(vec![0.0; 3]).unwrap();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        assert_eq!(cat.communities().collect::<Vec<_>>(), vec![Community::EMPTY]);
    }

    #[test]
    fn singular_restrictions_are_recorded() {
        let a = RealMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let sys = LvSystem::assuming_vl(a, vec![1.0, 1.0]).unwrap();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        assert_eq!(cat.degenerate, vec![Community::full(2)]);
    }

    #[test]
    fn jacobians_in_natural_order() {
        let sys = three_species();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        let lin = linearize(&sys, cat.get(&c(&[3])).unwrap()).unwrap();
        let expected = [[0.2984, 0.0, 0.0], [0.0, -0.0164, 0.0], [0.1568, -0.0784, -0.28]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(lin.jacobian[(i, j)], expected[i][j], epsilon = 1e-12);
            }
        }
        assert_eq!(lin.permutation, vec![2, 0, 1]);

        let eq = cat.get(&c(&[1, 3])).unwrap();
        let lin = linearize(&sys, eq).unwrap();
        let (u1, u3) = (eq.u_star[0], eq.u_star[2]);
        assert_abs_diff_eq!(lin.jacobian[(1, 1)], 0.155383, epsilon = 1e-6);
        assert_abs_diff_eq!(lin.jacobian[(0, 0)], -0.2362255, epsilon = 1e-6);
        assert_abs_diff_eq!(lin.jacobian[(0, 1)], 0.018898, epsilon = 1e-6);
        assert_abs_diff_eq!(lin.jacobian[(0, 2)], -0.11103, epsilon = 1e-5);
        // dF_3/du_1 = a_31 u*_3
        assert_abs_diff_eq!(lin.jacobian[(2, 0)], 0.56 * u3, epsilon = 1e-15);
        assert_abs_diff_eq!(lin.jacobian[(2, 1)], -0.11544, epsilon = 1e-5);
        assert_abs_diff_eq!(lin.jacobian[(2, 2)], -u3, epsilon = 1e-15);
        assert_abs_diff_eq!(lin.b11[(0, 0)], -u1, epsilon = 1e-15);

        let empty = linearize(&sys, cat.get(&Community::EMPTY).unwrap()).unwrap();
        assert_eq!(
            empty.jacobian,
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.43, -0.05, 0.28]))
        );
    }

    #[test]
    fn block_spectrum_splits() {
        let sys = three_species();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        for eq in cat.equilibria() {
            let lin = linearize(&sys, eq).unwrap();
            let mut full: Vec<f64> = spectrum_of(&lin.block_matrix()).unwrap().iter().map(|z| z.re).collect();
            let mut parts: Vec<f64> = spectrum_of(&lin.b11).unwrap().iter().map(|z| z.re).collect();
            parts.extend(&lin.b22);
            full.sort_by(f64::total_cmp);
            parts.sort_by(f64::total_cmp);
            for (x, y) in full.iter().zip(&parts) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-7);
            }
            assert!(spectrum_of(&lin.b11).unwrap().iter().all(|z| z.re < 0.0));
        }
    }

    #[test]
    fn invasion_eigenvectors() {
        let sys = three_species();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        for eq in cat.equilibria() {
            let lin = linearize(&sys, eq).unwrap();
            for (pos, &i) in lin.permutation.iter().enumerate().skip(lin.b11.nrows()) {
                let r = lin.b22[pos - lin.b11.nrows()];
                let x = DVector::from_vec(lin.invasion_eigenvector(i).unwrap());
                let resid = (&lin.jacobian * &x - &x * r).norm();
                assert!(resid <= 1e-7 * x.norm(), "residual {resid}");
            }
            if let Some(i) = eq.community.members().next() {
                assert!(lin.invasion_eigenvector(i).is_err());
            }
        }
    }

    #[test]
    fn invasion_rate_examples() {
        let sys = three_species();
        assert_abs_diff_eq!(invasion_rate(&sys, &c(&[3]), 0).unwrap(), 0.2984, epsilon = 1e-12);
        assert_abs_diff_eq!(invasion_rate(&sys, &c(&[3]), 1).unwrap(), -0.0164, epsilon = 1e-12);
        for i in 0..3 {
            assert_eq!(invasion_rate(&sys, &Community::EMPTY, i).unwrap(), sys.b()[i]);
        }
        assert_eq!(invasion_rate(&sys, &c(&[1, 3]), 0).unwrap(), 0.0);
        assert!(matches!(
            invasion_rate(&sys, &c(&[2]), 0),
            Err(Error::InvalidCommunity(_))
        ));
    }

    #[test]
    fn scheme_examples() {
        let sys = three_species();
        let s = invasion_scheme(&sys, DEFAULT_SIGN_TOL).unwrap();
        assert_eq!(s.sign(&c(&[3]), 0), Some(1));
        assert_eq!(s.sign(&c(&[3]), 1), Some(-1));
        assert_eq!(s.sign(&c(&[3]), 2), Some(0));
        assert_eq!(s.sign(&c(&[1, 3]), 1), Some(1));
        assert_abs_diff_eq!(s.rate(&c(&[1, 3]), 1).unwrap(), 0.155383, epsilon = 1e-6);
        assert!(s.all_hyperbolic());
        assert_abs_diff_eq!(s.min_off_community_rate(), 0.0164, epsilon = 1e-12);
    }

    #[test]
    fn hyperbolicity_examples() {
        let sys = three_species();
        let rep = hyperbolicity_report(&sys, DEFAULT_SIGN_TOL).unwrap();
        assert_eq!(rep.len(), 6);
        assert!(rep.values().all(|&h| h));

        let flat = sys.with_growth(vec![0.0; 3]).unwrap();
        let rep = hyperbolicity_report(&flat, DEFAULT_SIGN_TOL).unwrap();
        assert_eq!(rep.get(&Community::EMPTY), Some(&false));
    }

    #[test]
    fn equilibrium_residuals_vanish() {
        let sys = three_species();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        for eq in cat.equilibria() {
            let g = sys.per_capita(&eq.u_star);
            for i in eq.community.members() {
                assert!(g[i].abs() <= 1e-8);
            }
        }
    }
}
