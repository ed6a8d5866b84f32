//! Numerical checks of the graph-level predictions.
//!
//! An embedded Dormand-Prince 4(5) integrator with exact face invariance,
//! limit classification against the equilibrium catalog, edge verification
//! from seeds along invasion eigenvectors, stable/unstable dimension counts,
//! and the quadratic Lyapunov function of symmetric systems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attractor_graphs::{AttractorGraph, Provenance};
use crate::community::Community;
use crate::equilibria::{
    enumerate_admissible, linearize, rates_at, Equilibrium, LvSystem, DEFAULT_POSITIVITY_TOL, DEFAULT_SIGN_TOL,
};
use crate::error::{Error, Result};
use crate::matrix_analysis::{lyapunov_lambda_max, spectrum_of};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;
pub const DEFAULT_STALL_WINDOW: usize = 50;
pub const DEFAULT_SEED_EPS: f64 = 1e-4;
pub const DEFAULT_VERIFY_TMAX: f64 = 1e4;
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-4;
pub const DEFAULT_EPS_HALVINGS: usize = 8;
/// Entrywise tolerance for the symmetry check behind the Lyapunov function.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Consecutive accepted steps with `|u'| < 10 (atol + rtol |u|∞)` that end the run.
    pub stall_window: usize,
    pub max_steps: usize,
    /// Sup-norm beyond which the run is classified as diverged.
    pub divergence_bound: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            stall_window: DEFAULT_STALL_WINDOW,
            max_steps: 2_000_000,
            divergence_bound: 1e15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    ConvergedTo(Equilibrium),
    Undecided,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub terminal: Terminal,
    /// The run ended on the stall criterion.
    pub stalled: bool,
    /// `|u'|` at the last state.
    pub final_speed: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds its initial state")
    }
}

// Dormand-Prince 5(4) tableau; the nodes are not needed for an autonomous field.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn stage(y: &[f64], h: f64, coeffs: &[f64], k: &[Vec<f64>], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (c, kj) in coeffs.iter().zip(k) {
            s += c * kj[i];
        }
        out[i] = y[i] + h * s;
    }
}

fn scaled_rms(v: &[f64], scale: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().zip(scale).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn initial_step(sys: &LvSystem, y: &[f64], f0: &[f64], opts: &IntegrationOptions, t_max: f64) -> f64 {
    let scale: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = scaled_rms(y, &scale);
    let d1 = scaled_rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.vector_field(&y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_rms(&diff, &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_max)
}

/// Speed below which a step counts toward the stall window. The relative
/// part matches the noise floor of a step-size-limited run near a sink.
fn stall_speed(y: &[f64], opts: &IntegrationOptions) -> f64 {
    10.0 * (opts.atol + opts.rtol * y.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Integrates `u' = diag(u)(b + Au)` from `u0` up to `t_max`, or until the
/// speed stays below `10 (atol + rtol |u|∞)` for a full stall window. Coordinates that
/// start at zero stay exactly zero; coordinates that drop below `atol` while
/// decreasing are set to zero. The terminal classification is left
/// `Undecided` unless the run diverges; see [`classify_limit`].
pub fn integrate(sys: &LvSystem, u0: &[f64], t_max: f64, opts: &IntegrationOptions) -> Result<Trajectory> {
    let n = sys.n();
    if u0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "u0 has {} entries, expected {n}",
            u0.len()
        )));
    }
    if let Some(i) = u0.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NumericalDomain(format!(
            "u0[{}] = {} must be finite and nonnegative",
            i + 1,
            u0[i]
        )));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::NumericalDomain(format!("t_max = {t_max} must be positive")));
    }

    let mut y = u0.to_vec();
    let mut t = 0.0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    sys.vector_field(&y, &mut k[0]);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y.clone()],
        terminal: Terminal::Undecided,
        stalled: false,
        final_speed: norm(&k[0]),
    };
    let mut h = initial_step(sys, &y, &k[0], opts, t_max);
    let mut slow_steps = 0usize;
    let mut last_rejected = false;
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    for _ in 0..opts.max_steps {
        if t >= t_max {
            break;
        }
        h = h.min(t_max - t);
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Stiffness { t });
        }
        let stages: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, coeffs) in stages.iter().enumerate() {
            let (done, rest) = k.split_at_mut(s + 1);
            stage(&y, h, coeffs, done, &mut tmp);
            sys.vector_field(&tmp, &mut rest[0]);
        }
        stage(&y, h, &A7, &k[..6], &mut y_new);
        {
            let (_, rest) = k.split_at_mut(6);
            sys.vector_field(&y_new, &mut rest[0]);
        }
        let err_vec: Vec<f64> = (0..n)
            .map(|i| h * E.iter().zip(&k).map(|(e, kj)| e * kj[i]).sum::<f64>())
            .collect();
        let scale: Vec<f64> = (0..n)
            .map(|i| opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs()))
            .collect();
        let err = scaled_rms(&err_vec, &scale);
        if !err.is_finite() {
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err > 1.0 {
            h *= fac.min(1.0);
            last_rejected = true;
            continue;
        }

        t += h;
        let mut clamped = false;
        for i in 0..n {
            if (y_new[i] < 0.0 || (y_new[i] < opts.atol && k[6][i] < 0.0)) && y_new[i] != 0.0 {
                y_new[i] = 0.0;
                clamped = true;
            }
        }
        std::mem::swap(&mut y, &mut y_new);
        if clamped {
            let (_, rest) = k.split_at_mut(6);
            sys.vector_field(&y, &mut rest[0]);
        }
        k.swap(0, 6);
        traj.times.push(t);
        traj.states.push(y.clone());
        traj.final_speed = norm(&k[0]);

        if y.iter().any(|v| !v.is_finite() || v.abs() > opts.divergence_bound) {
            traj.terminal = Terminal::Diverged;
            return Ok(traj);
        }
        if traj.final_speed < stall_speed(&y, opts) {
            slow_steps += 1;
            if slow_steps >= opts.stall_window {
                traj.stalled = true;
                return Ok(traj);
            }
        } else {
            slow_steps = 0;
        }
        h *= if last_rejected { fac.min(1.0) } else { fac };
        last_rejected = false;
    }
    Ok(traj)
}

/// Unique catalog equilibrium within `tol` of the final state, provided the
/// run stalled or ended below the stall speed.
pub fn classify_limit(traj: &Trajectory, catalog: &[Equilibrium], tol: f64) -> Result<Terminal> {
    for (p, e1) in catalog.iter().enumerate() {
        for e2 in &catalog[p + 1..] {
            if dist(&e1.u_star, &e2.u_star) < 2.0 * tol {
                return Err(Error::AmbiguousCatalog(e1.community, e2.community));
            }
        }
    }
    if traj.terminal == Terminal::Diverged {
        return Ok(Terminal::Diverged);
    }
    let last = traj.final_state();
    if !traj.stalled && traj.final_speed >= stall_speed(last, &IntegrationOptions::default()) {
        return Ok(Terminal::Undecided);
    }
    Ok(catalog
        .iter()
        .find(|e| dist(&e.u_star, last) < tol)
        .map(|e| Terminal::ConvergedTo(e.clone()))
        .unwrap_or(Terminal::Undecided))
}

/// Integrates and classifies against the full equilibrium catalog.
pub fn simulate(sys: &LvSystem, u0: &[f64], t_max: f64, opts: &IntegrationOptions, tol: f64) -> Result<Trajectory> {
    let catalog = enumerate_admissible(sys, DEFAULT_POSITIVITY_TOL)?;
    let mut traj = integrate(sys, u0, t_max, opts)?;
    traj.terminal = classify_limit(&traj, catalog.equilibria(), tol)?;
    Ok(traj)
}

/// `u* + eps v`, where `v` sums the invasion eigenvectors of the species in
/// `target \ community(eq)`; each invading coordinate of `v` is 1.
pub fn unstable_seed(sys: &LvSystem, eq: &Equilibrium, target: Community, eps: f64) -> Result<Vec<f64>> {
    let invaders = target.difference(eq.community);
    if invaders.is_empty() {
        return Err(Error::NotAnUnstableDirection(format!(
            "{target} adds no species to {}",
            eq.community
        )));
    }
    sys.check_community(&target)?;
    let rates = rates_at(sys, eq.community, &eq.u_star);
    if let Some(i) = invaders.members().find(|&i| rates[i] <= 0.0) {
        return Err(Error::NotAnUnstableDirection(format!(
            "species {} has rate {} at {}",
            i + 1,
            rates[i],
            eq.community
        )));
    }
    let lin = linearize(sys, eq)?;
    let mut v = vec![0.0; sys.n()];
    for i in invaders.members() {
        for (acc, x) in v.iter_mut().zip(lin.invasion_eigenvector(i)?) {
            *acc += x;
        }
    }
    let mut seed: Vec<f64> = eq.u_star.iter().zip(&v).map(|(u, x)| u + eps * x).collect();
    for (i, s) in seed.iter_mut().enumerate() {
        if *s < 0.0 {
            log::warn!("seed coordinate {} clamped from {s:e} to 0", i + 1);
            *s = 0.0;
        }
    }
    Ok(seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub eps: f64,
    pub t_max: f64,
    pub classify_tol: f64,
    pub max_halvings: usize,
    pub integration: IntegrationOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            eps: DEFAULT_SEED_EPS,
            t_max: DEFAULT_VERIFY_TMAX,
            classify_tol: DEFAULT_CLASSIFY_TOL,
            max_halvings: DEFAULT_EPS_HALVINGS,
            integration: IntegrationOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeVerification {
    pub src: Community,
    pub dst: Community,
    pub verified: bool,
    /// Seed magnitude of the decisive run.
    pub eps: f64,
    pub attempts: usize,
    pub reached: Option<Community>,
    /// Distance from the final state to the target equilibrium.
    pub terminal_distance: f64,
}

pub fn verify_edge(sys: &LvSystem, edge: (Community, Community), eps: f64, t_max: f64) -> Result<bool> {
    let opts = VerifyOptions {
        eps,
        t_max,
        ..VerifyOptions::default()
    };
    verify_edge_with(sys, edge, &opts).map(|v| v.verified)
}

pub fn verify_edge_with(
    sys: &LvSystem,
    edge: (Community, Community),
    opts: &VerifyOptions,
) -> Result<EdgeVerification> {
    let catalog = enumerate_admissible(sys, DEFAULT_POSITIVITY_TOL)?;
    verify_against(sys, catalog.equilibria(), edge, opts)
}

/// Seeds off the source toward the species it gains and integrates inside
/// the face of `src ∪ dst`, where the target is the attracting equilibrium.
fn verify_against(
    sys: &LvSystem,
    catalog: &[Equilibrium],
    (src, dst): (Community, Community),
    opts: &VerifyOptions,
) -> Result<EdgeVerification> {
    let find = |c: Community| {
        catalog
            .iter()
            .find(|e| e.community == c)
            .ok_or_else(|| Error::InvalidCommunity(format!("{c} is not admissible")))
    };
    let from = find(src)?;
    let to = find(dst)?;
    let face = src.union(dst);
    let local: Vec<Equilibrium> = catalog
        .iter()
        .filter(|e| e.community.is_subset(face))
        .cloned()
        .collect();

    let mut eps = opts.eps;
    for attempt in 1..=opts.max_halvings + 1 {
        let seed = unstable_seed(sys, from, face, eps)?;
        let traj = integrate(sys, &seed, opts.t_max, &opts.integration)?;
        match classify_limit(&traj, &local, opts.classify_tol)? {
            Terminal::Undecided => eps *= 0.5,
            terminal => {
                let reached = match &terminal {
                    Terminal::ConvergedTo(e) => Some(e.community),
                    _ => None,
                };
                return Ok(EdgeVerification {
                    src,
                    dst,
                    verified: reached == Some(dst),
                    eps,
                    attempts: attempt,
                    reached,
                    terminal_distance: dist(traj.final_state(), &to.u_star),
                });
            }
        }
    }
    Err(Error::VerificationInconclusive { from: src, to: dst })
}

/// Verifies every edge of `g` in parallel; results follow the edge order.
pub fn verify_graph(sys: &LvSystem, g: &AttractorGraph, opts: &VerifyOptions) -> Result<Vec<Result<EdgeVerification>>> {
    let catalog = enumerate_admissible(sys, DEFAULT_POSITIVITY_TOL)?;
    Ok(g.edges
        .par_iter()
        .map(|e| verify_against(sys, catalog.equilibria(), (e.src, e.dst), opts))
        .collect())
}

/// Marks the edges whose verification succeeded.
pub fn annotate_verified(g: &mut AttractorGraph, results: &[Result<EdgeVerification>]) {
    for r in results.iter().flatten().filter(|r| r.verified) {
        if let Some(e) = g.edges.iter_mut().find(|e| e.src == r.src && e.dst == r.dst) {
            e.provenance = Provenance::OdeVerified;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldDimensions {
    pub unstable: usize,
    pub stable: usize,
    pub center: usize,
}

/// Eigenvalue counts of the Jacobian by sign of real part.
pub fn manifold_dimensions(sys: &LvSystem, eq: &Equilibrium, tol: f64) -> Result<ManifoldDimensions> {
    let lin = linearize(sys, eq)?;
    let mut dims = ManifoldDimensions {
        unstable: 0,
        stable: 0,
        center: 0,
    };
    for z in spectrum_of(&lin.jacobian)? {
        if z.re > tol {
            dims.unstable += 1;
        } else if z.re < -tol {
            dims.stable += 1;
        } else {
            dims.center += 1;
        }
    }
    Ok(dims)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub dim_unstable_src: usize,
    pub dim_stable_dst: usize,
    /// `dim W^u(src) + dim W^s(dst) < n + 1`.
    pub obstructed: bool,
}

pub fn transversality_report(sys: &LvSystem, (src, dst): (Community, Community)) -> Result<TransversalityReport> {
    let catalog = enumerate_admissible(sys, DEFAULT_POSITIVITY_TOL)?;
    let find = |c: Community| {
        catalog
            .get(&c)
            .ok_or_else(|| Error::InvalidCommunity(format!("{c} is not admissible")))
    };
    let (e1, e2) = (find(src)?, find(dst)?);
    let d1 = manifold_dimensions(sys, e1, DEFAULT_SIGN_TOL)?;
    let d2 = manifold_dimensions(sys, e2, DEFAULT_SIGN_TOL)?;
    if d1.center > 0 || d2.center > 0 {
        return Err(Error::PreconditionFailed(format!("{src} or {dst} is not hyperbolic")));
    }
    Ok(TransversalityReport {
        dim_unstable_src: d1.unstable,
        dim_stable_dst: d2.stable,
        obstructed: d1.unstable + d2.stable < sys.n() + 1,
    })
}

/// True iff a connection along the edge cannot be transversal.
pub fn transversality_obstruction(sys: &LvSystem, edge: (Community, Community)) -> Result<bool> {
    transversality_report(sys, edge).map(|r| r.obstructed)
}

fn require_symmetric(sys: &LvSystem) -> Result<()> {
    match sys.a().is_symmetric(SYMMETRY_TOL) {
        Some((i, j)) => Err(Error::NotSymmetric(i + 1, j + 1)),
        None => Ok(()),
    }
}

/// `V(u) = -bᵀu - ½ uᵀAu` for symmetric `A`.
pub fn macarthur_v(sys: &LvSystem, u: &[f64]) -> Result<f64> {
    require_symmetric(sys)?;
    if u.len() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries, expected {}",
            u.len(),
            sys.n()
        )));
    }
    let a = sys.a().as_matrix();
    let n = sys.n();
    let mut v = 0.0;
    for i in 0..n {
        v -= sys.b()[i] * u[i];
        for j in 0..n {
            v -= 0.5 * a[(i, j)] * u[i] * u[j];
        }
    }
    Ok(v)
}

/// `dV/dt = -Σ (b_i + (Au)_i)² u_i` along the flow.
pub fn macarthur_dissipation(sys: &LvSystem, u: &[f64]) -> Result<f64> {
    require_symmetric(sys)?;
    Ok(-sys.per_capita(u).iter().zip(u).map(|(g, x)| g * g * x).sum::<f64>())
}

/// `V` strictly decreases along every edge of `g`.
pub fn symmetric_edge_monotonicity(sys: &LvSystem, g: &AttractorGraph) -> Result<bool> {
    require_symmetric(sys)?;
    for e in &g.edges {
        let value = |c: &Community| -> Result<f64> {
            let node = g
                .node(c)
                .ok_or_else(|| Error::InvalidCommunity(format!("edge endpoint {c} is not a node")))?;
            macarthur_v(sys, &node.u_star)
        };
        if value(&e.src)? <= value(&e.dst)? + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bound from the diagonal Lyapunov weights `w`: `S = wᵀu` obeys
/// `S' ≤ c S - d S²`, so `S` decreases whenever `S > threshold = 2c/d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingBound {
    pub weights: Vec<f64>,
    /// `max_i max(b_i, 0)`.
    pub c: f64,
    /// `-λ_max(WA + AᵀW) / (2 |w|²)`.
    pub d: f64,
    pub threshold: f64,
}

impl AbsorbingBound {
    pub fn weighted_sum(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, x)| w * x).sum()
    }
}

pub fn absorbing_bound(sys: &LvSystem) -> Result<AbsorbingBound> {
    let weights = sys
        .certificate()
        .h
        .clone()
        .ok_or_else(|| Error::PreconditionFailed("no diagonal Lyapunov weights available".into()))?;
    let lambda = lyapunov_lambda_max(sys.a(), &weights);
    if lambda >= 0.0 {
        return Err(Error::PreconditionFailed(format!(
            "weights do not certify stability (largest eigenvalue {lambda})"
        )));
    }
    let c = sys.b().iter().fold(0.0f64, |m, &v| m.max(v));
    let d = -lambda / (2.0 * weights.iter().map(|w| w * w).sum::<f64>());
    Ok(AbsorbingBound {
        weights,
        c,
        d,
        threshold: 2.0 * c / d,
    })
}

/// Header `t,u1,..,un`, one row per accepted step.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InternalConsistency(format!("CSV encoding failed: {e}"));
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("u{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let mut rec = vec![format!("{t}")];
        rec.extend(u.iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InternalConsistency(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractor_graphs::{build_is, find_gass_map};
    use crate::equilibria::invasion_scheme;
    use crate::lcp::DEFAULT_LCP_TOL;
    use crate::matrix_analysis::RealMatrix;
    use approx::assert_abs_diff_eq;

    fn three_species() -> LvSystem {
        let a =
            RealMatrix::from_rows(&[vec![-1.0, 0.08, -0.47], vec![0.66, -1.0, 0.12], vec![0.56, -0.28, -1.0]]).unwrap();
        LvSystem::new(a, vec![0.43, -0.05, 0.28]).unwrap()
    }

    fn c(labels: &[usize]) -> Community {
        Community::from_labels(labels).unwrap()
    }

    fn eq_of(sys: &LvSystem, labels: &[usize]) -> Equilibrium {
        enumerate_admissible(sys, DEFAULT_POSITIVITY_TOL)
            .unwrap()
            .get(&c(labels))
            .unwrap()
            .clone()
    }

    fn opts() -> IntegrationOptions {
        IntegrationOptions::default()
    }

    #[test]
    fn logistic_closed_form() {
        let sys = LvSystem::new(RealMatrix::from_rows(&[vec![-1.0]]).unwrap(), vec![0.43]).unwrap();
        let traj = integrate(&sys, &[0.01], 5.0, &opts()).unwrap();
        let exact = |t: f64| 0.43 / (1.0 + (0.43 / 0.01 - 1.0) * (-0.43 * t).exp());
        for (t, u) in traj.times.iter().zip(&traj.states) {
            assert_abs_diff_eq!(u[0], exact(*t), epsilon = 1e-7);
        }
        assert_eq!(*traj.times.last().unwrap(), 5.0);
    }

    #[test]
    fn integrate_examples() {
        let sys = three_species();
        let gass = eq_of(&sys, &[1, 2, 3]);
        let traj = simulate(&sys, &[0.1, 0.1, 0.1], 500.0, &opts(), 1e-4).unwrap();
        assert_eq!(traj.terminal, Terminal::ConvergedTo(gass.clone()));
        assert!(dist(traj.final_state(), &gass.u_star) < 1e-4);
        assert!(traj.states.iter().flatten().all(|&v| v >= 0.0));

        let zero = simulate(&sys, &[0.0; 3], 500.0, &opts(), 1e-4).unwrap();
        assert!(zero.states.iter().all(|s| s == &vec![0.0; 3]));
        assert_eq!(zero.terminal, Terminal::ConvergedTo(eq_of(&sys, &[])));

        let face = simulate(&sys, &[0.0, 0.0, 1.0], 500.0, &opts(), 1e-4).unwrap();
        assert!(face.states.iter().all(|s| s[0] == 0.0 && s[1] == 0.0));
        match &face.terminal {
            Terminal::ConvergedTo(e) => {
                assert_eq!(e.community, c(&[3]));
                assert_abs_diff_eq!(face.final_state()[2], 0.28, epsilon = 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            integrate(&sys, &[-0.1, 0.0, 0.0], 1.0, &opts()),
            Err(Error::NumericalDomain(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let sys = three_species();
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        let fake = |u: Vec<f64>, stalled: bool| Trajectory {
            times: vec![0.0],
            states: vec![u],
            terminal: Terminal::Undecided,
            stalled,
            final_speed: if stalled { 0.0 } else { 1e-3 },
        };
        let g = cat.get(&Community::full(3)).unwrap();
        let near: Vec<f64> = g.u_star.iter().map(|v| v + 1e-7).collect();
        assert_eq!(
            classify_limit(&fake(near, true), cat.equilibria(), 1e-4).unwrap(),
            Terminal::ConvergedTo(g.clone())
        );
        let t = classify_limit(&fake(vec![0.0, 0.0, 0.2800001], true), cat.equilibria(), 1e-4).unwrap();
        assert!(matches!(t, Terminal::ConvergedTo(e) if e.community == c(&[3])));
        assert_eq!(
            classify_limit(&fake(vec![0.3, 0.1, 0.3], false), cat.equilibria(), 1e-4).unwrap(),
            Terminal::Undecided
        );
        let dup = vec![g.clone(), g.clone()];
        assert!(matches!(
            classify_limit(&fake(vec![0.0; 3], true), &dup, 1e-4),
            Err(Error::AmbiguousCatalog(..))
        ));
    }

    #[test]
    fn seed_examples() {
        let sys = three_species();
        let e3 = eq_of(&sys, &[3]);
        let seed = unstable_seed(&sys, &e3, c(&[1, 3]), 1e-4).unwrap();
        assert_abs_diff_eq!(seed[0], 1e-4, epsilon = 1e-15);
        assert_eq!(seed[1], 0.0);
        // (B11 - r) x = -B12: (-0.28 - 0.2984) x = -0.56 * 0.28
        let x = 0.56 * 0.28 / (0.28 + 0.2984);
        assert_abs_diff_eq!(seed[2], 0.28 + 1e-4 * x, epsilon = 1e-12);
        let tiny = unstable_seed(&sys, &e3, c(&[1, 3]), 1e-14).unwrap();
        assert!(dist(&tiny, &e3.u_star) < 1e-13);
        assert!(matches!(
            unstable_seed(&sys, &e3, c(&[3]), 1e-4),
            Err(Error::NotAnUnstableDirection(_))
        ));
        // species 2 cannot invade {3}
        assert!(matches!(
            unstable_seed(&sys, &e3, c(&[2, 3]), 1e-4),
            Err(Error::NotAnUnstableDirection(_))
        ));
    }

    #[test]
    fn verify_examples() {
        let sys = three_species();
        assert!(verify_edge(&sys, (c(&[3]), c(&[1, 3])), 1e-4, 1e4).unwrap());
        assert!(verify_edge(&sys, (Community::EMPTY, c(&[1])), 1e-4, 1e4).unwrap());
        assert!(verify_edge(&sys, (c(&[1, 3]), c(&[3])), 1e-4, 1e4).is_err());
    }

    #[test]
    fn dimension_examples() {
        let sys = three_species();
        let d = |l: &[usize]| manifold_dimensions(&sys, &eq_of(&sys, l), DEFAULT_SIGN_TOL).unwrap();
        assert_eq!(
            d(&[3]),
            ManifoldDimensions {
                unstable: 1,
                stable: 2,
                center: 0
            }
        );
        assert_eq!(
            d(&[1, 3]),
            ManifoldDimensions {
                unstable: 1,
                stable: 2,
                center: 0
            }
        );
        assert_eq!(
            d(&[1, 2, 3]),
            ManifoldDimensions {
                unstable: 0,
                stable: 3,
                center: 0
            }
        );

        let r = transversality_report(&sys, (c(&[3]), c(&[1, 3]))).unwrap();
        assert_eq!((r.dim_unstable_src, r.dim_stable_dst, r.obstructed), (1, 2, true));

        let planar = LvSystem::new(
            RealMatrix::from_rows(&[vec![-1.0, -0.47], vec![0.56, -1.0]]).unwrap(),
            vec![0.43, 0.28],
        )
        .unwrap();
        assert!(!transversality_obstruction(&planar, (c(&[2]), c(&[1, 2]))).unwrap());
        // source with all directions unstable, sink with all stable
        assert!(!transversality_obstruction(&planar, (Community::EMPTY, c(&[1, 2]))).unwrap());
    }

    fn symmetric_pair() -> LvSystem {
        LvSystem::new(
            RealMatrix::from_rows(&[vec![-1.0, 0.1], vec![0.1, -1.0]]).unwrap(),
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn lyapunov_examples() {
        let sys = symmetric_pair();
        assert_eq!(macarthur_v(&sys, &[0.0, 0.0]).unwrap(), 0.0);
        let cat = enumerate_admissible(&sys, DEFAULT_POSITIVITY_TOL).unwrap();
        assert_eq!(cat.len(), 4);
        for e in cat.equilibria() {
            let half: f64 = -0.5 * e.u_star.iter().zip(sys.b()).map(|(u, b)| u * b).sum::<f64>();
            assert_abs_diff_eq!(macarthur_v(&sys, &e.u_star).unwrap(), half, epsilon = 1e-14);
        }
        let scheme = invasion_scheme(&sys, DEFAULT_SIGN_TOL).unwrap();
        let g = build_is(&sys, &find_gass_map(&sys, DEFAULT_LCP_TOL).unwrap(), &scheme).unwrap();
        assert!(symmetric_edge_monotonicity(&sys, &g).unwrap());
        let mut bare = g.clone();
        bare.edges.clear();
        assert!(symmetric_edge_monotonicity(&sys, &bare).unwrap());

        let traj = integrate(&sys, &[0.05, 1.7], 50.0, &opts()).unwrap();
        let values: Vec<f64> = traj.states.iter().map(|u| macarthur_v(&sys, u).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        for u in &traj.states {
            assert!(macarthur_dissipation(&sys, u).unwrap() <= 0.0);
        }
        assert!(matches!(
            macarthur_v(&three_species(), &[0.0; 3]),
            Err(Error::NotSymmetric(..))
        ));
    }

    #[test]
    fn dissipation_identity_matches_finite_differences() {
        let sys = symmetric_pair();
        let u = [0.3, 0.6];
        let mut f = [0.0; 2];
        sys.vector_field(&u, &mut f);
        let h = 1e-6;
        let up: Vec<f64> = u.iter().zip(&f).map(|(x, d)| x + h * d).collect();
        let um: Vec<f64> = u.iter().zip(&f).map(|(x, d)| x - h * d).collect();
        let fd = (macarthur_v(&sys, &up).unwrap() - macarthur_v(&sys, &um).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(fd, macarthur_dissipation(&sys, &u).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn absorbing_ball() {
        let sys = three_species();
        let bound = absorbing_bound(&sys).unwrap();
        assert!(bound.d > 0.0 && bound.threshold > 0.0);
        let traj = integrate(&sys, &[800.0, 300.0, 500.0], 50.0, &opts()).unwrap();
        let s: Vec<f64> = traj.states.iter().map(|u| bound.weighted_sum(u)).collect();
        for w in s.windows(2) {
            if w[0] > bound.threshold {
                assert!(w[1] < w[0]);
            }
        }
        assert!(*s.last().unwrap() <= bound.threshold);
    }

    #[test]
    fn csv_dump() {
        let sys = three_species();
        let traj = integrate(&sys, &[0.1, 0.1, 0.1], 1.0, &opts()).unwrap();
        let text = trajectory_csv(&traj).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,u1,u2,u3"));
        assert_eq!(lines.next(), Some("0,0.1,0.1,0.1"));
        assert_eq!(text.lines().count(), traj.times.len() + 1);
    }
}
