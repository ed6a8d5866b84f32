//! Robustness of the invasion scheme under perturbation of `(A, b)`.
//!
//! Three views of the same question: random sweeps in joint `(A, b)` space
//! with a bisected safe radius, membership of growth vectors in the cone of
//! `b` sharing a reference scheme, and the finite arrangement of hyperplanes
//! in `b`-space outside of which every equilibrium is hyperbolic.

use std::collections::BTreeSet;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::Community;
use crate::equilibria::{invasion_scheme, InvasionScheme, LvSystem, DEFAULT_POSITIVITY_TOL, DEFAULT_SIGN_TOL};
use crate::error::{Error, Result};
use crate::matrix_analysis::{restrict, RealMatrix, VlCertificate};

pub const DEFAULT_BISECTION_STEPS: usize = 12;

/// True iff both schemes have the same admissible communities and agree
/// sign-for-sign on every invasion rate.
pub fn scheme_equal(s1: &InvasionScheme, s2: &InvasionScheme) -> bool {
    first_divergence(s1, s2).is_none()
}

/// First entry, in canonical order, at which `found` departs from `reference`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Divergence {
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// A community gained or lost admissibility.
    Admissibility {
        community: Community,
        admissible_now: bool,
    },
    SignFlip {
        community: Community,
        species: usize,
        expected: i8,
        found: i8,
    },
}

impl Divergence {
    pub fn is_sign_flip(&self) -> bool {
        matches!(self, Divergence::SignFlip { .. })
    }
}

pub fn first_divergence(reference: &InvasionScheme, found: &InvasionScheme) -> Option<Divergence> {
    if reference.n != found.n {
        return Some(Divergence::DimensionMismatch {
            expected: reference.n,
            found: found.n,
        });
    }
    let c1: BTreeSet<Community> = reference.communities().collect();
    let c2: BTreeSet<Community> = found.communities().collect();
    if let Some(&community) = c1.symmetric_difference(&c2).next() {
        return Some(Divergence::Admissibility {
            community,
            admissible_now: c2.contains(&community),
        });
    }
    for (r1, r2) in reference.rows.iter().zip(&found.rows) {
        for (species, (&expected, &got)) in r1.signs.iter().zip(&r2.signs).enumerate() {
            if expected != got {
                return Some(Divergence::SignFlip {
                    community: r1.community(),
                    species,
                    expected,
                    found: got,
                });
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
    pub bisection_steps: usize,
    pub sign_tol: f64,
}

impl SweepConfig {
    pub fn new(radius: f64, trials: usize, seed: u64) -> Self {
        SweepConfig {
            radius,
            trials,
            seed,
            bisection_steps: DEFAULT_BISECTION_STEPS,
            sign_tol: DEFAULT_SIGN_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub a: RealMatrix,
    pub b: Vec<f64>,
    pub divergence: Divergence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Largest radius at which every trial reproduced the reference scheme.
    pub epsilon_star: f64,
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
    /// Set when no trial was run and `epsilon_star` holds vacuously.
    pub untested: bool,
    /// Failures observed at the requested radius.
    pub failures: Vec<TrialFailure>,
    pub sign_flip_failures: usize,
    pub admissibility_failures: usize,
    pub scheme_ref: InvasionScheme,
}

/// Unit-ball offsets for one trial; scaled by the radius under test.
struct UnitSample {
    da: Vec<f64>,
    db: Vec<f64>,
}

fn unit_ball<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = if norm > 0.0 {
        rng.gen::<f64>().powf(1.0 / d as f64) / norm
    } else {
        0.0
    };
    g.iter_mut().for_each(|v| *v *= scale);
    g
}

fn draw_sample(seed: u64, trial: usize, n: usize) -> UnitSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    UnitSample {
        da: unit_ball(&mut rng, n * n),
        db: unit_ball(&mut rng, n),
    }
}

fn perturbed(sys: &LvSystem, s: &UnitSample, radius: f64) -> Result<(RealMatrix, Vec<f64>)> {
    let n = sys.n();
    let mut a = sys.a().as_matrix().clone();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += radius * s.da[i * n + j];
        }
    }
    let b = sys.b().iter().zip(&s.db).map(|(v, d)| v + radius * d).collect();
    Ok((RealMatrix::new(a)?, b))
}

type TrialOutcome = (RealMatrix, Vec<f64>, Divergence);

fn run_trial(
    sys: &LvSystem,
    reference: &InvasionScheme,
    sample: &UnitSample,
    radius: f64,
    sign_tol: f64,
) -> Result<Option<TrialOutcome>> {
    let (a, b) = perturbed(sys, sample, radius)?;
    // The sign table needs no certificate for the perturbed matrix.
    let trial_sys = LvSystem::with_certificate(a.clone(), b.clone(), VlCertificate::user_asserted())?;
    let scheme = invasion_scheme(&trial_sys, sign_tol)?;
    Ok(first_divergence(reference, &scheme).map(|d| (a, b, d)))
}

fn all_pass(
    sys: &LvSystem,
    reference: &InvasionScheme,
    samples: &[UnitSample],
    radius: f64,
    sign_tol: f64,
) -> Result<bool> {
    let outcomes: Vec<Result<bool>> = samples
        .par_iter()
        .map(|s| run_trial(sys, reference, s, radius, sign_tol).map(|o| o.is_none()))
        .collect();
    for o in outcomes {
        if !o? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn perturbation_sweep(sys: &LvSystem, radius: f64, trials: usize, seed: u64) -> Result<StabilityReport> {
    perturbation_sweep_with(sys, &SweepConfig::new(radius, trials, seed))
}

/// Samples `(A', b')` uniformly from `B(A, r) × B(b, r)` (Frobenius and
/// Euclidean balls), recomputes the scheme for each sample and bisects the
/// radius until every trial agrees with the reference. Trial `k` always
/// draws from substream `k` of the seed, at every radius.
pub fn perturbation_sweep_with(sys: &LvSystem, cfg: &SweepConfig) -> Result<StabilityReport> {
    if !(cfg.radius.is_finite() && cfg.radius >= 0.0) {
        return Err(Error::NumericalDomain(format!(
            "radius {} must be finite and nonnegative",
            cfg.radius
        )));
    }
    if !sys.vl_assumed() {
        return Err(Error::PreconditionFailed(
            "perturbation sweep needs a VL-stable interaction matrix".into(),
        ));
    }
    let scheme_ref = invasion_scheme(sys, cfg.sign_tol)?;
    let nonhyperbolic = scheme_ref.nonhyperbolic();
    if !nonhyperbolic.is_empty() {
        return Err(Error::PreconditionFailed(format!(
            "base system has nonhyperbolic equilibria on {}",
            nonhyperbolic
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }

    let mut report = StabilityReport {
        epsilon_star: cfg.radius,
        radius: cfg.radius,
        trials: cfg.trials,
        seed: cfg.seed,
        untested: cfg.trials == 0,
        failures: Vec::new(),
        sign_flip_failures: 0,
        admissibility_failures: 0,
        scheme_ref,
    };
    if cfg.trials == 0 {
        return Ok(report);
    }

    let samples: Vec<UnitSample> = (0..cfg.trials).map(|k| draw_sample(cfg.seed, k, sys.n())).collect();
    let outcomes: Vec<Result<Option<TrialOutcome>>> = samples
        .par_iter()
        .map(|s| run_trial(sys, &report.scheme_ref, s, cfg.radius, cfg.sign_tol))
        .collect();
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        if let Some((a, b, divergence)) = outcome? {
            if divergence.is_sign_flip() {
                report.sign_flip_failures += 1;
            } else {
                report.admissibility_failures += 1;
            }
            report.failures.push(TrialFailure {
                trial,
                a,
                b,
                divergence,
            });
        }
    }
    if report.failures.is_empty() {
        return Ok(report);
    }

    let (mut lo, mut hi) = (0.0, cfg.radius);
    for _ in 0..cfg.bisection_steps {
        let mid = 0.5 * (lo + hi);
        if all_pass(sys, &report.scheme_ref, &samples, mid, cfg.sign_tol)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    report.epsilon_star = lo;
    Ok(report)
}

/// True iff `(A, b)` has only hyperbolic equilibria and the same scheme as
/// the reference system.
pub fn cone_membership(sys_ref: &LvSystem, b: &[f64]) -> Result<bool> {
    let reference = invasion_scheme(sys_ref, DEFAULT_SIGN_TOL)?;
    cone_membership_against(sys_ref, &reference, b)
}

fn cone_membership_against(sys_ref: &LvSystem, reference: &InvasionScheme, b: &[f64]) -> Result<bool> {
    let candidate = invasion_scheme(&sys_ref.with_growth(b.to_vec())?, reference.sign_tol)?;
    Ok(candidate.all_hyperbolic() && scheme_equal(reference, &candidate))
}

/// Checks that every `λ b_ref + (1 - λ) b2` stays in the cone of `sys_ref`.
pub fn convexity_probe(sys_ref: &LvSystem, b2: &[f64], lambdas: &[f64]) -> Result<bool> {
    if b2.len() != sys_ref.n() {
        return Err(Error::DimensionMismatch(format!(
            "b2 has {} entries, expected {}",
            b2.len(),
            sys_ref.n()
        )));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::PreconditionFailed(format!("lambda {l} outside [0, 1]")));
    }
    let reference = invasion_scheme(sys_ref, DEFAULT_SIGN_TOL)?;
    if !reference.all_hyperbolic() {
        return Err(Error::PreconditionFailed("reference system is not hyperbolic".into()));
    }
    if !cone_membership_against(sys_ref, &reference, b2)? {
        return Err(Error::PreconditionFailed("b2 is not in the reference cone".into()));
    }
    for &l in lambdas {
        let b: Vec<f64> = sys_ref.b().iter().zip(b2).map(|(p, q)| l * p + (1.0 - l) * q).collect();
        if !cone_membership_against(sys_ref, &reference, &b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Zero set of `b ↦ r_i(I)` for `i ∉ I`, a linear hyperplane in `b`-space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub community: Community,
    pub species: usize,
    /// Coefficients of `r_i(I)` as a linear functional of `b`; entry `species` is 1.
    pub normal: Vec<f64>,
    /// Always zero: the plane passes through the origin.
    pub offset: f64,
    /// Rows of `-A(I)⁻¹` over all `n` coordinates, so `u*(I) = M b`.
    pub equilibrium_map: Vec<Vec<f64>>,
}

impl Hyperplane {
    pub fn evaluate(&self, b: &[f64]) -> f64 {
        self.normal.iter().zip(b).map(|(c, v)| c * v).sum::<f64>() + self.offset
    }

    /// Whether `u*(I)` is strictly positive at `b`, i.e. the plane is a
    /// genuine part of the nonhyperbolic set there.
    pub fn side_condition(&self, b: &[f64], tol: f64) -> bool {
        self.equilibrium_map
            .iter()
            .all(|row| row.iter().zip(b).map(|(m, v)| m * v).sum::<f64>() > tol)
    }

    pub fn distance(&self, b: &[f64]) -> f64 {
        let norm = self.normal.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.evaluate(b).abs() / norm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneArrangement {
    pub n: usize,
    pub planes: Vec<Hyperplane>,
    /// Communities whose `A(I)` is singular; their planes are omitted.
    pub singular: Vec<Community>,
}

pub fn residual_hyperplanes(a: &RealMatrix) -> HyperplaneArrangement {
    let n = a.dim();
    let am = a.as_matrix();
    let mut planes = Vec::new();
    let mut singular = Vec::new();
    for community in Community::all_subsets(n) {
        let idx = community.to_vec();
        let m = if idx.is_empty() {
            Some(nalgebra::DMatrix::<f64>::zeros(0, 0))
        } else {
            let sub = restrict(am, community);
            sub.clone()
                .try_inverse()
                .filter(|inv| inverse_is_sound(&sub, inv))
                .map(|inv| -inv)
        };
        let Some(m) = m else {
            singular.push(community);
            continue;
        };
        let equilibrium_map: Vec<Vec<f64>> = (0..idx.len())
            .map(|r| {
                let mut row = vec![0.0; n];
                for (c, &k) in idx.iter().enumerate() {
                    row[k] = m[(r, c)];
                }
                row
            })
            .collect();
        for i in (0..n).filter(|&i| !community.contains(i)) {
            let mut normal = vec![0.0; n];
            normal[i] = 1.0;
            for (c, &k) in idx.iter().enumerate() {
                normal[k] = idx.iter().enumerate().map(|(r, &j)| am[(i, j)] * m[(r, c)]).sum();
            }
            planes.push(Hyperplane {
                community,
                species: i,
                normal,
                offset: 0.0,
                equilibrium_map: equilibrium_map.clone(),
            });
        }
    }
    HyperplaneArrangement { n, planes, singular }
}

fn inverse_is_sound(m: &nalgebra::DMatrix<f64>, inv: &nalgebra::DMatrix<f64>) -> bool {
    let k = m.nrows();
    let residual = (m * inv - nalgebra::DMatrix::<f64>::identity(k, k)).amax();
    residual.is_finite() && residual < 1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualDistance {
    /// Over planes whose side condition holds at `b`; `+∞` if none does.
    pub restricted: f64,
    /// Over all planes; a conservative lower bound.
    pub unrestricted: f64,
    /// `(community, species)` of the nearest plane in the restricted set.
    pub nearest: Option<(Community, usize)>,
}

pub fn distance_to_residual(sys: &LvSystem) -> ResidualDistance {
    distance_in_arrangement(&residual_hyperplanes(sys.a()), sys.b())
}

pub fn distance_in_arrangement(arrangement: &HyperplaneArrangement, b: &[f64]) -> ResidualDistance {
    let mut out = ResidualDistance {
        restricted: f64::INFINITY,
        unrestricted: f64::INFINITY,
        nearest: None,
    };
    for p in &arrangement.planes {
        let d = p.distance(b);
        out.unrestricted = out.unrestricted.min(d);
        if p.side_condition(b, DEFAULT_POSITIVITY_TOL) && d < out.restricted {
            out.restricted = d;
            out.nearest = Some((p.community, p.species));
        }
    }
    out
}

/// One row per plane: community, species (1-based), then the normal.
pub fn hyperplanes_csv(arrangement: &HyperplaneArrangement) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["community".to_string(), "species".to_string()];
    header.extend((1..=arrangement.n).map(|k| format!("n{k}")));
    let csv_err = |e: csv::Error| Error::InternalConsistency(format!("CSV encoding failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for p in &arrangement.planes {
        let mut rec = vec![p.community.to_string(), (p.species + 1).to_string()];
        rec.extend(p.normal.iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InternalConsistency(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// `u*(I)` at `b` for a plane's community, in full coordinates.
pub fn equilibrium_at(plane: &Hyperplane, b: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; b.len()];
    let b = DVector::from_column_slice(b);
    for (r, k) in plane.community.members().enumerate() {
        u[k] = plane.equilibrium_map[r].iter().zip(b.iter()).map(|(m, v)| m * v).sum();
    }
    u
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

    fn c(labels: &[usize]) -> Community {
        Community::from_labels(labels).unwrap()
    }

    fn scheme_for(sys: &LvSystem, b: Vec<f64>) -> InvasionScheme {
        invasion_scheme(&sys.with_growth(b).unwrap(), DEFAULT_SIGN_TOL).unwrap()
    }

    #[test]
    fn scheme_equal_examples() {
        let sys = three_species();
        let s = invasion_scheme(&sys, DEFAULT_SIGN_TOL).unwrap();
        assert!(scheme_equal(&s, &s));
        let scaled = scheme_for(&sys, sys.b().iter().map(|v| 1.7 * v).collect());
        assert!(scheme_equal(&s, &scaled));
        let neg = scheme_for(&sys, sys.b().iter().map(|v| -v).collect());
        assert!(!scheme_equal(&s, &neg));
    }

    #[test]
    fn sweep_examples() {
        let sys = three_species();
        let small = perturbation_sweep(&sys, 1e-4, 200, 7).unwrap();
        assert!(small.failures.is_empty());
        assert_eq!(small.epsilon_star, 1e-4);
        assert!(!small.untested);

        let large = perturbation_sweep(&sys, 10.0, 50, 7).unwrap();
        assert!(!large.failures.is_empty());
        assert!(large.epsilon_star < 10.0);
        assert_eq!(
            large.failures.len(),
            large.sign_flip_failures + large.admissibility_failures
        );

        let none = perturbation_sweep(&sys, 0.5, 0, 7).unwrap();
        assert!(none.untested);
        assert_eq!(none.epsilon_star, 0.5);

        // Reproducible for a fixed seed.
        assert_eq!(perturbation_sweep(&sys, 10.0, 50, 7).unwrap(), large);
    }

    #[test]
    fn sweep_rejects_nonhyperbolic_base() {
        let sys = three_species().with_growth(vec![0.43, -0.66 * 0.43, 0.28]).unwrap();
        assert!(matches!(
            perturbation_sweep(&sys, 1e-3, 10, 1),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn cone_examples() {
        let sys = three_species();
        assert!(cone_membership(&sys, sys.b()).unwrap());
        let scaled: Vec<f64> = sys.b().iter().map(|v| 3.2 * v).collect();
        assert!(cone_membership(&sys, &scaled).unwrap());
        // r_2({3}) = b_2 + 0.12 b_3 vanishes here while {3} stays admissible.
        let on_plane = vec![0.43, -0.12 * 0.28, 0.28];
        assert!(!cone_membership(&sys, &on_plane).unwrap());

        assert!(convexity_probe(&sys, sys.b(), &[0.0, 0.5, 1.0]).unwrap());
        let b2: Vec<f64> = sys.b().iter().map(|v| 1.5 * v).collect();
        assert!(convexity_probe(&sys, &b2, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap());
        let near: Vec<f64> = sys.b().iter().map(|v| v + 1e-3).collect();
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        assert!(convexity_probe(&sys, &near, &grid).unwrap());
        let neg: Vec<f64> = sys.b().iter().map(|v| -v).collect();
        assert!(matches!(
            convexity_probe(&sys, &neg, &[0.5]),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn hyperplane_examples() {
        let one = residual_hyperplanes(&RealMatrix::from_rows(&[vec![-1.0]]).unwrap());
        assert_eq!(one.planes.len(), 1);
        assert_eq!(one.planes[0].normal, vec![1.0]);
        assert!(one.planes[0].community.is_empty());

        let sys = three_species();
        let arr = residual_hyperplanes(sys.a());
        assert_eq!(arr.planes.len(), 12);
        assert!(arr.singular.is_empty());
        let p = arr
            .planes
            .iter()
            .find(|p| p.community == c(&[3]) && p.species == 1)
            .unwrap();
        assert_abs_diff_eq!(p.normal[0], 0.0);
        assert_abs_diff_eq!(p.normal[1], 1.0);
        assert_abs_diff_eq!(p.normal[2], 0.12, epsilon = 1e-15);
    }

    #[test]
    fn hyperplanes_reproduce_invasion_rates() {
        let sys = three_species();
        let scheme = invasion_scheme(&sys, DEFAULT_SIGN_TOL).unwrap();
        let arr = residual_hyperplanes(sys.a());
        for p in &arr.planes {
            match scheme.rate(&p.community, p.species) {
                Some(r) => {
                    assert!(p.side_condition(sys.b(), DEFAULT_POSITIVITY_TOL));
                    assert_abs_diff_eq!(p.evaluate(sys.b()), r, epsilon = 1e-12);
                    let u = equilibrium_at(p, sys.b());
                    let row = scheme.row(&p.community).unwrap();
                    for (x, y) in u.iter().zip(&row.equilibrium.u_star) {
                        assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
                    }
                }
                None => assert!(!p.side_condition(sys.b(), DEFAULT_POSITIVITY_TOL)),
            }
        }
    }

    #[test]
    fn distances() {
        let sys = three_species();
        let d = distance_to_residual(&sys);
        assert!(d.restricted > 0.0 && d.unrestricted > 0.0);
        assert!(d.unrestricted <= d.restricted);
        let doubled = sys.with_growth(sys.b().iter().map(|v| 2.0 * v).collect()).unwrap();
        let d2 = distance_to_residual(&doubled);
        assert_eq!(d2.restricted, 2.0 * d.restricted);
        assert_eq!(d2.unrestricted, 2.0 * d.unrestricted);

        let on_plane = sys.with_growth(vec![0.43, -0.12 * 0.28, 0.28]).unwrap();
        assert_abs_diff_eq!(distance_to_residual(&on_plane).restricted, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn csv_export() {
        let arr = residual_hyperplanes(three_species().a());
        let text = hyperplanes_csv(&arr).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "community,species,n1,n2,n3");
        assert_eq!(lines.len(), 13);
        assert!(lines[1].starts_with("{},1,1,0,0"));
    }
}
