//! Linear complementarity problems by exhaustive support enumeration.
//!
//! `LCP(B, c)`: find `x ≥ 0` with `w = Bx + c ≥ 0` and `xᵀw = 0`. For
//! `B = -A` with `A` Volterra-Lyapunov stable the solution is unique and is
//! the globally attracting equilibrium of the Lotka-Volterra system. The
//! scan visits every support, so a second solution is always detected.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::community::Community;
use crate::equilibria::{rates_at, Equilibrium, LvSystem};
use crate::error::{Error, Result};
use crate::matrix_analysis::{restrict, solve_linear, RealMatrix};

pub const DEFAULT_LCP_TOL: f64 = 1e-9;
/// Support enumeration visits `2^n` subsets.
pub const MAX_LCP_SIZE: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverPath {
    SupportEnumeration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcpSolution {
    pub x: Vec<f64>,
    pub support: Community,
    /// `w = Bx + c`.
    pub slack: Vec<f64>,
    pub solver_path: SolverPath,
    /// Supports skipped because `B(S)` was singular.
    pub degenerate_supports: usize,
}

pub fn solve_lcp(b: &RealMatrix, c: &[f64], tol: f64) -> Result<LcpSolution> {
    let n = b.dim();
    if c.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "B is {n}x{n} but c has {} entries",
            c.len()
        )));
    }
    if n > MAX_LCP_SIZE {
        return Err(Error::TooLarge(format!(
            "LCP of size {n} exceeds the enumeration budget of {MAX_LCP_SIZE}"
        )));
    }
    solve_dense(b.as_matrix(), c, tol)
}

fn solve_dense(b: &DMatrix<f64>, c: &[f64], tol: f64) -> Result<LcpSolution> {
    let n = c.len();
    let mut first: Option<LcpSolution> = None;
    let mut degenerate = 0usize;

    for support in Community::all_subsets(n) {
        let idx = support.to_vec();
        let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| -c[i]));
        let Some(xs) = solve_linear(&restrict(b, support), &rhs) else {
            degenerate += 1;
            continue;
        };
        if xs.iter().any(|&v| v <= tol) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (k, &i) in idx.iter().enumerate() {
            x[i] = xs[k];
        }
        let slack: Vec<f64> = (0..n)
            .map(|i| c[i] + (0..n).map(|j| b[(i, j)] * x[j]).sum::<f64>())
            .collect();
        if (0..n).any(|i| !support.contains(i) && slack[i] < -tol) {
            continue;
        }
        match &first {
            None => {
                first = Some(LcpSolution {
                    x,
                    support,
                    slack,
                    solver_path: SolverPath::SupportEnumeration,
                    degenerate_supports: 0,
                })
            }
            Some(f) => {
                let distinct = f.x.iter().zip(&x).any(|(p, q)| (p - q).abs() > tol);
                if distinct {
                    return Err(Error::MultipleSolutions {
                        first: f.x.clone(),
                        second: x,
                    });
                }
            }
        }
    }
    let mut sol = first.ok_or(Error::NoSolution)?;
    sol.degenerate_supports = degenerate;
    Ok(sol)
}

/// Solution of `LCP(-A(J), -b(J))` embedded back into `n` coordinates.
pub(crate) fn restricted_gass(sys: &LvSystem, community: Community, tol: f64) -> Result<Vec<f64>> {
    let idx = community.to_vec();
    let neg_a = -restrict(sys.a().as_matrix(), community);
    let neg_b: Vec<f64> = idx.iter().map(|&i| -sys.b()[i]).collect();
    let sol = solve_dense(&neg_a, &neg_b, tol).map_err(|e| match e {
        Error::NoSolution | Error::MultipleSolutions { .. } => Error::VlAssumptionViolated {
            community,
            reason: e.to_string(),
        },
        other => other,
    })?;
    let mut u = vec![0.0; sys.n()];
    for (k, &i) in idx.iter().enumerate() {
        u[i] = sol.x[k];
    }
    Ok(u)
}

/// Equilibrium from the restricted LCP, flagged as the attractor of the
/// open face of `community`.
pub(crate) fn equilibrium_from_lcp(sys: &LvSystem, u: Vec<f64>, tol: f64) -> Equilibrium {
    let support = Community::from_mask(
        u.iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .fold(0u32, |m, (i, _)| m | (1 << i)),
    );
    let rates = rates_at(sys, support, &u);
    let hyperbolic = rates
        .iter()
        .enumerate()
        .all(|(i, r)| support.contains(i) || r.abs() > tol);
    Equilibrium {
        community: support,
        u_star: u,
        admissible: true,
        hyperbolic,
        is_gass: true,
    }
}

/// The globally asymptotically stable equilibrium: the unique solution of
/// `LCP(-A, -b)`.
pub fn gass(sys: &LvSystem, tol: f64) -> Result<Equilibrium> {
    if !sys.vl_assumed() {
        return Err(Error::PreconditionFailed(
            "GASS requires a VL-stable interaction matrix (certified or asserted)".into(),
        ));
    }
    if sys.n() > MAX_LCP_SIZE {
        return Err(Error::TooLarge(format!("{} species", sys.n())));
    }
    let u = restricted_gass(sys, Community::full(sys.n()), tol)?;
    Ok(equilibrium_from_lcp(sys, u, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn three_species() -> LvSystem {
        let a =
            RealMatrix::from_rows(&[vec![-1.0, 0.08, -0.47], vec![0.66, -1.0, 0.12], vec![0.56, -0.28, -1.0]]).unwrap();
        LvSystem::new(a, vec![0.43, -0.05, 0.28]).unwrap()
    }

    /// Interior equilibrium of the three species system by Cramer's rule.
    fn cramer3(a: [[f64; 3]; 3], r: [f64; 3]) -> [f64; 3] {
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(a);
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut m = a;
            for row in 0..3 {
                m[row][k] = r[row];
            }
            *o = det(m) / d;
        }
        out
    }

    #[test]
    fn three_species_lcp_is_the_interior_equilibrium() {
        let sys = three_species();
        let neg_a = RealMatrix::new(-sys.a().as_matrix()).unwrap();
        let neg_b: Vec<f64> = sys.b().iter().map(|v| -v).collect();
        let sol = solve_lcp(&neg_a, &neg_b, DEFAULT_LCP_TOL).unwrap();
        assert_eq!(sol.support, Community::full(3));
        let oracle = cramer3(
            [[-1.0, 0.08, -0.47], [0.66, -1.0, 0.12], [0.56, -0.28, -1.0]],
            [-0.43, 0.05, -0.28],
        );
        for (x, o) in sol.x.iter().zip(oracle) {
            assert_abs_diff_eq!(*x, o, epsilon = 1e-12);
        }
        // frozen from the oracle
        assert_abs_diff_eq!(sol.x[0], 0.264772, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.x[1], 0.170416, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.x[2], 0.380556, epsilon = 1e-6);
        assert!(sol.slack.iter().all(|w| w.abs() < 1e-12));
    }

    #[test]
    fn nonpositive_growth_gives_zero() {
        let sys = three_species();
        let neg_a = RealMatrix::new(-sys.a().as_matrix()).unwrap();
        let sol = solve_lcp(&neg_a, &[0.2, 0.0, 1.0], DEFAULT_LCP_TOL).unwrap();
        assert_eq!(sol.support, Community::EMPTY);
        assert_eq!(sol.x, vec![0.0; 3]);
    }

    #[test]
    fn scalar_closed_form() {
        let b = RealMatrix::from_rows(&[vec![1.0]]).unwrap();
        let sol = solve_lcp(&b, &[-0.43], DEFAULT_LCP_TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], (0.43f64 / 1.0).max(0.0), epsilon = 1e-15);
        let sol = solve_lcp(&b, &[0.43], DEFAULT_LCP_TOL).unwrap();
        assert_eq!(sol.x[0], 0.0);
    }

    #[test]
    fn non_p_matrix_reports_multiple_or_none() {
        // B = -I with c > 0: x = 0 and x = c both complementary.
        let b = RealMatrix::from_rows(&[vec![-1.0]]).unwrap();
        assert!(matches!(
            solve_lcp(&b, &[1.0], DEFAULT_LCP_TOL),
            Err(Error::MultipleSolutions { .. })
        ));
        // B = -I with c < 0: nothing is feasible.
        assert!(matches!(
            solve_lcp(&b, &[-1.0], DEFAULT_LCP_TOL),
            Err(Error::NoSolution)
        ));
    }

    #[test]
    fn gass_examples() {
        let sys = three_species();
        let g = gass(&sys, DEFAULT_LCP_TOL).unwrap();
        assert_eq!(g.community, Community::full(3));
        assert!(g.is_gass && g.hyperbolic);

        let sub = Community::from_labels(&[1, 3]).unwrap();
        let a13 = crate::matrix_analysis::principal_submatrix(sys.a(), &sub).unwrap();
        let restricted = LvSystem::new(a13, vec![0.43, 0.28]).unwrap();
        let g = gass(&restricted, DEFAULT_LCP_TOL).unwrap();
        assert_abs_diff_eq!(g.u_star[0], 0.2362255, epsilon = 1e-6);
        assert_abs_diff_eq!(g.u_star[1], 0.4122863, epsilon = 1e-6);

        let logistic = LvSystem::new(RealMatrix::from_rows(&[vec![-1.0]]).unwrap(), vec![0.43]).unwrap();
        assert_abs_diff_eq!(
            gass(&logistic, DEFAULT_LCP_TOL).unwrap().u_star[0],
            0.43,
            epsilon = 1e-15
        );
    }

    #[test]
    fn gass_requires_vl() {
        let a = RealMatrix::from_rows(&[vec![1.0]]).unwrap();
        let sys = LvSystem::new(a.clone(), vec![1.0]).unwrap();
        assert!(matches!(gass(&sys, DEFAULT_LCP_TOL), Err(Error::PreconditionFailed(_))));
        let forced = LvSystem::assuming_vl(a, vec![-1.0]).unwrap();
        assert!(matches!(
            gass(&forced, DEFAULT_LCP_TOL),
            Err(Error::VlAssumptionViolated { .. })
        ));
    }
}
