//! Command-line front end.
//!
//! Exit codes: 0 for a clean run, 1 when the analysis finds a graph
//! difference, anomalies, nonhyperbolic equilibria or a failed check, and
//! 2 for unreadable or invalid input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::attractor_graphs::{
    build_ig, build_is, compare_graphs, export_graph, find_gass_map, merge_graphs, AttractorGraph, ExportFormat,
    GraphDiff,
};
use crate::community::Community;
use crate::equilibria::{enumerate_admissible, InvasionScheme, LvSystem, DEFAULT_POSITIVITY_TOL, DEFAULT_SIGN_TOL};
use crate::error::Error;
use crate::lcp::DEFAULT_LCP_TOL;
use crate::matrix_analysis::{
    certify_vl_stability, RealMatrix, VlCertificate, DEFAULT_STABILITY_TOL, DEFAULT_VL_MAX_ITERS,
};
use crate::ode_oracle::{
    annotate_verified, classify_limit, integrate, trajectory_csv, verify_graph, IntegrationOptions, Terminal,
    VerifyOptions, DEFAULT_ATOL, DEFAULT_CLASSIFY_TOL, DEFAULT_RTOL, DEFAULT_SEED_EPS, DEFAULT_VERIFY_TMAX,
};
use crate::structural_stability::{
    distance_in_arrangement, hyperplanes_csv, perturbation_sweep_with, residual_hyperplanes, HyperplaneArrangement,
    ResidualDistance, StabilityReport, SweepConfig, DEFAULT_BISECTION_STEPS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDING: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "LV_ATTRACTOR_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "lv-attractor",
    version,
    about = "Attractor structure of Lotka-Volterra systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify A, list admissible equilibria and the invasion scheme, and compare both graphs.
    Analyze(AnalyzeArgs),
    /// Emit the merged invasion graph / information structure.
    Graph(GraphArgs),
    /// Perturbation sweep and, optionally, the residual hyperplane arrangement.
    Stability(StabilityArgs),
    /// Integrate the flow from an initial state and classify its limit.
    Simulate(SimulateArgs),
}

/// Overrides for numerical tolerances. Precedence: flag, then the system file, then the default.
#[derive(Debug, Clone, Default, Args)]
pub struct ToleranceArgs {
    /// Positivity threshold for admissible equilibria [default: 1e-9]
    #[arg(long)]
    pub positivity_tol: Option<f64>,
    /// Rates with |r| at or below this count as zero [default: 1e-9]
    #[arg(long)]
    pub sign_tol: Option<f64>,
    /// Complementarity tolerance [default: 1e-9]
    #[arg(long)]
    pub lcp_tol: Option<f64>,
    /// Eigenvalue real-part tolerance for stability decisions [default: 1e-9]
    #[arg(long)]
    pub stability_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// System file (JSON)
    pub path: PathBuf,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Dot,
    Json,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    pub format: FormatArg,
    /// Confirm each edge by integrating from a seed near its source
    #[arg(long)]
    pub verify: bool,
    /// Seed offset for --verify
    #[arg(long, default_value_t = DEFAULT_SEED_EPS)]
    pub eps: f64,
    /// Integration horizon for --verify
    #[arg(long, default_value_t = DEFAULT_VERIFY_TMAX)]
    pub tmax: f64,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    pub path: PathBuf,
    /// Radius of the perturbation balls around A and b
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BISECTION_STEPS)]
    pub bisection_steps: usize,
    /// Include the residual hyperplane arrangement and the distance of b to it
    #[arg(long)]
    pub cones: bool,
    /// Write the hyperplanes as CSV to this file (implies --cones)
    #[arg(long)]
    pub hyperplanes_csv: Option<PathBuf>,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub path: PathBuf,
    /// Initial state, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub u0: Vec<f64>,
    #[arg(long, default_value_t = 1000.0)]
    pub tmax: f64,
    /// Relative integration tolerance
    #[arg(long, default_value_t = DEFAULT_RTOL)]
    pub rtol: f64,
    /// Absolute integration tolerance
    #[arg(long, default_value_t = DEFAULT_ATOL)]
    pub atol: f64,
    /// Distance to an equilibrium that counts as convergence
    #[arg(long, default_value_t = DEFAULT_CLASSIFY_TOL)]
    pub classify_tol: f64,
    /// Write the trajectory as CSV (t, u1..un) to this file
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileTolerances {
    pub positivity: Option<f64>,
    pub sign: Option<f64>,
    pub lcp: Option<f64>,
    pub stability: Option<f64>,
}

/// On-disk system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub tolerances: Option<FileTolerances>,
    #[serde(default)]
    pub assert_vl: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub positivity: f64,
    pub sign: f64,
    pub lcp: f64,
    pub stability: f64,
}

impl Tolerances {
    fn resolve(flags: &ToleranceArgs, file: Option<&FileTolerances>) -> Result<Self, String> {
        let file = file.cloned().unwrap_or_default();
        let pick = |name: &str, flag: Option<f64>, from_file: Option<f64>, default: f64| {
            let v = flag.or(from_file).unwrap_or(default);
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(format!("tolerance {name} = {v} must be finite and nonnegative"))
            }
        };
        Ok(Tolerances {
            positivity: pick(
                "positivity",
                flags.positivity_tol,
                file.positivity,
                DEFAULT_POSITIVITY_TOL,
            )?,
            sign: pick("sign", flags.sign_tol, file.sign, DEFAULT_SIGN_TOL)?,
            lcp: pick("lcp", flags.lcp_tol, file.lcp, DEFAULT_LCP_TOL)?,
            stability: pick("stability", flags.stability_tol, file.stability, DEFAULT_STABILITY_TOL)?,
        })
    }
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let file: SystemFile = serde_json::from_str(text).map_err(|e| format!("invalid system file: {e}"))?;
        file.validate()?;
        Ok(file)
    }

    /// Field-precise dimension and finiteness checks.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n;
        if n == 0 {
            return Err("field `n` must be at least 1".into());
        }
        if self.a.len() != n {
            return Err(format!("field `A` has {} rows, expected n = {n}", self.a.len()));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(format!("field `A[{i}]` has {} entries, expected n = {n}", row.len()));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(format!("field `A[{i}][{j}]` is not finite"));
            }
        }
        if self.b.len() != n {
            return Err(format!("field `b` has {} entries, expected n = {n}", self.b.len()));
        }
        if let Some(i) = self.b.iter().position(|v| !v.is_finite()) {
            return Err(format!("field `b[{i}]` is not finite"));
        }
        Ok(())
    }

    /// Certifies `A`; an `assert_vl` file falls back to the user assertion
    /// when certification is inconclusive.
    pub fn to_system(&self, stability_tol: f64) -> crate::Result<LvSystem> {
        let a = RealMatrix::from_rows(&self.a)?;
        let cert = certify_vl_stability(&a, stability_tol, DEFAULT_VL_MAX_ITERS)?;
        let cert = if self.assert_vl && !cert.vl_assumed() {
            VlCertificate::user_asserted()
        } else {
            cert
        };
        LvSystem::with_certificate(a, self.b.clone(), cert)
    }
}

struct Loaded {
    file: SystemFile,
    sys: LvSystem,
    tol: Tolerances,
}

fn load(path: &Path, flags: &ToleranceArgs) -> Result<Loaded, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file = SystemFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let tol = Tolerances::resolve(flags, file.tolerances.as_ref())?;
    let sys = file
        .to_system(tol.stability)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Loaded { file, sys, tol })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn sign_char(s: i8) -> char {
    match s {
        1 => '+',
        -1 => '-',
        _ => '0',
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, out, err),
        Command::Graph(a) => cmd_graph(a, out, err),
        Command::Stability(a) => cmd_stability(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out, err),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Analysis(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FINDING
        }
    }
}

enum Failure {
    Input(String),
    Analysis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e.to_string())
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Analysis(format!("write failed: {e}"))
}

struct Graphs {
    scheme: InvasionScheme,
    ig: AttractorGraph,
    is: AttractorGraph,
    diff: GraphDiff,
}

fn build_graphs(sys: &LvSystem, tol: &Tolerances) -> crate::Result<Graphs> {
    let catalog = enumerate_admissible(sys, tol.positivity)?;
    let scheme = InvasionScheme::from_catalog(&catalog, tol.sign);
    let ig = build_ig(&scheme);
    let gass_map = find_gass_map(sys, tol.lcp)?;
    let is = build_is(sys, &gass_map, &scheme)?;
    let diff = compare_graphs(&ig, &is);
    Ok(Graphs { scheme, ig, is, diff })
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { file, sys, tol } = load(&args.path, &args.tolerances).map_err(Failure::Input)?;
    let n = sys.n();
    let mut text = String::new();
    let cert = sys.certificate();
    let _ = writeln!(text, "system: {} (n = {n})", file.name);
    let _ = writeln!(
        text,
        "certificate: {:?}{}{}",
        cert.verdict,
        cert.method.map(|m| format!(" via {m:?}")).unwrap_or_default(),
        cert.lambda_max
            .map(|l| format!(", lambda_max = {l:.6e}"))
            .unwrap_or_default()
    );
    let g = build_graphs(&sys, &tol)?;

    let _ = writeln!(text, "admissible communities: {}", g.scheme.rows.len());
    let width = g
        .scheme
        .rows
        .iter()
        .map(|r| r.community().to_string().len())
        .max()
        .unwrap_or(2)
        .max(9);
    let _ = writeln!(
        text,
        "{:<width$}  {:<w2$}  hyperbolic  GASS",
        "community",
        "u*",
        w2 = 10 * n + 2
    );
    for row in &g.scheme.rows {
        let e = &row.equilibrium;
        let line = format!(
            "{:<width$}  {:<w2$}  {:<10}  {}",
            e.community.to_string(),
            fmt_vec(&e.u_star),
            if e.hyperbolic { "yes" } else { "no" },
            if e.is_gass { "GASS" } else { "" },
            w2 = 10 * n + 2
        );
        let _ = writeln!(text, "{}", line.trim_end());
    }
    let _ = writeln!(text, "invasion scheme (sign of r_i):");
    let header: Vec<String> = (1..=n).map(|i| format!("r{i}")).collect();
    let _ = writeln!(text, "{:<width$}  {}", "community", header.join("  "));
    for row in &g.scheme.rows {
        let cells: Vec<String> = row.signs.iter().map(|&s| format!("{:<2}", sign_char(s))).collect();
        let _ = writeln!(
            text,
            "{:<width$}  {}",
            row.community().to_string(),
            cells.join("  ").trim_end()
        );
    }
    let _ = writeln!(text, "IG edges: {}, IS edges: {}", g.ig.edges.len(), g.is.edges.len());
    if g.diff.is_empty() {
        let _ = writeln!(text, "graph diff: none");
    } else {
        let pairs = |v: &[(Community, Community)]| {
            v.iter()
                .map(|(a, b)| format!("{a}->{b}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(text, "graph diff:");
        let _ = writeln!(text, "  only in IG: {}", pairs(&g.diff.only_in_first));
        let _ = writeln!(text, "  only in IS: {}", pairs(&g.diff.only_in_second));
    }
    out.write_all(text.as_bytes()).map_err(io)?;

    let mut code = EXIT_OK;
    if !g.diff.is_empty() {
        code = EXIT_FINDING;
    }
    if g.is.anomalies > 0 {
        let _ = writeln!(err, "warning: {} anomalous IS edges dropped", g.is.anomalies);
        code = EXIT_FINDING;
    }
    let nonhyperbolic = g.scheme.nonhyperbolic();
    if !nonhyperbolic.is_empty() {
        let list: Vec<String> = nonhyperbolic.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(err, "warning: nonhyperbolic equilibria at {}", list.join(", "));
        code = EXIT_FINDING;
    }
    if !g.scheme.degenerate.is_empty() {
        let list: Vec<String> = g.scheme.degenerate.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(err, "warning: singular restricted systems at {}", list.join(", "));
        code = EXIT_FINDING;
    }
    Ok(code)
}

fn cmd_graph(args: &GraphArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { sys, tol, .. } = load(&args.path, &args.tolerances).map_err(Failure::Input)?;
    let g = build_graphs(&sys, &tol)?;
    let mut merged = merge_graphs(&g.ig, &g.is);
    let mut code = if g.diff.is_empty() && merged.anomalies == 0 {
        EXIT_OK
    } else {
        EXIT_FINDING
    };
    if args.verify {
        let opts = VerifyOptions {
            eps: args.eps,
            t_max: args.tmax,
            ..VerifyOptions::default()
        };
        let results = verify_graph(&sys, &merged, &opts)?;
        for (edge, r) in merged.edges.iter().zip(&results) {
            match r {
                Ok(v) if v.verified => {}
                Ok(v) => {
                    let reached = v.reached.map(|c| c.to_string()).unwrap_or_else(|| "nothing".into());
                    let _ = writeln!(err, "warning: edge {}->{} reached {reached}", edge.src, edge.dst);
                    code = EXIT_FINDING;
                }
                Err(e) => {
                    let _ = writeln!(err, "warning: edge {}->{}: {e}", edge.src, edge.dst);
                    code = EXIT_FINDING;
                }
            }
        }
        annotate_verified(&mut merged, &results);
    }
    let format = match args.format {
        FormatArg::Dot => ExportFormat::Dot,
        FormatArg::Json => ExportFormat::Json,
    };
    out.write_all(export_graph(&merged, format).as_bytes()).map_err(io)?;
    Ok(code)
}

#[derive(Serialize)]
struct ConeSection {
    hyperplanes: HyperplaneArrangement,
    distance: ResidualDistance,
}

#[derive(Serialize)]
struct StabilityOutput {
    #[serde(flatten)]
    report: StabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    cones: Option<ConeSection>,
}

fn cmd_stability(args: &StabilityArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { sys, tol, .. } = load(&args.path, &args.tolerances).map_err(Failure::Input)?;
    if !(args.radius.is_finite() && args.radius >= 0.0) {
        return Err(Failure::Input(format!(
            "--radius {} must be finite and nonnegative",
            args.radius
        )));
    }
    let cfg = SweepConfig {
        radius: args.radius,
        trials: args.trials,
        seed: args.seed,
        bisection_steps: args.bisection_steps,
        sign_tol: tol.sign,
    };
    let report = perturbation_sweep_with(&sys, &cfg)?;
    let cones = if args.cones || args.hyperplanes_csv.is_some() {
        let hyperplanes = residual_hyperplanes(sys.a());
        if let Some(path) = &args.hyperplanes_csv {
            std::fs::write(path, hyperplanes_csv(&hyperplanes)?)
                .map_err(|e| Failure::Analysis(format!("cannot write {}: {e}", path.display())))?;
        }
        let distance = distance_in_arrangement(&hyperplanes, sys.b());
        Some(ConeSection { hyperplanes, distance })
    } else {
        None
    };
    let json = serde_json::to_string_pretty(&StabilityOutput { report, cones }).expect("report serializes");
    writeln!(out, "{json}").map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, Failure> {
    let Loaded { sys, tol, .. } = load(&args.path, &args.tolerances).map_err(Failure::Input)?;
    if args.u0.len() != sys.n() {
        return Err(Failure::Input(format!(
            "--u0 has {} entries, expected {}",
            args.u0.len(),
            sys.n()
        )));
    }
    if let Some(i) = args.u0.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Failure::Input(format!(
            "--u0 entry {} = {} must be finite and nonnegative",
            i + 1,
            args.u0[i]
        )));
    }
    if !(args.tmax.is_finite() && args.tmax > 0.0) {
        return Err(Failure::Input(format!("--tmax {} must be positive", args.tmax)));
    }
    let catalog = enumerate_admissible(&sys, tol.positivity)?;
    let opts = IntegrationOptions {
        rtol: args.rtol,
        atol: args.atol,
        ..IntegrationOptions::default()
    };

    let mut f0 = vec![0.0; sys.n()];
    sys.vector_field(&args.u0, &mut f0);
    let at_rest = f0.iter().all(|v| *v == 0.0);

    let mut traj = integrate(&sys, &args.u0, args.tmax, &opts)?;
    traj.terminal = classify_limit(&traj, catalog.equilibria(), args.classify_tol)?;
    if let Some(path) = &args.dump {
        std::fs::write(path, trajectory_csv(&traj)?)
            .map_err(|e| Failure::Analysis(format!("cannot write {}: {e}", path.display())))?;
    }
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    let (line, code) = match &traj.terminal {
        Terminal::ConvergedTo(e) if at_rest => (format!("equilibrium: {}", e.community), EXIT_OK),
        Terminal::ConvergedTo(e) => (format!("converged: {}", e.community), EXIT_OK),
        Terminal::Undecided => ("undecided".to_string(), EXIT_FINDING),
        Terminal::Diverged => ("diverged".to_string(), EXIT_FINDING),
    };
    let mut text = String::new();
    let _ = writeln!(text, "{line}");
    let _ = writeln!(text, "t = {t_end:.6}, u = {}", fmt_vec(traj.final_state()));
    out.write_all(text.as_bytes()).map_err(io)?;
    Ok(code)
}

/// Applies the thread count from the environment, if set.
pub fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} = {raw:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure {n} threads: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_species_json() -> String {
        r#"{"name": "three-species", "n": 3,
            "A": [[-1, 0.08, -0.47], [0.66, -1, 0.12], [0.56, -0.28, -1]],
            "b": [0.43, -0.05, 0.28]}"#
            .to_string()
    }

    #[test]
    fn parses_and_validates() {
        let f = SystemFile::parse(&three_species_json()).unwrap();
        assert_eq!(f.n, 3);
        assert!(!f.assert_vl);
        let bad = three_species_json().replace("\"n\": 3", "\"n\": 2");
        assert!(SystemFile::parse(&bad).unwrap_err().contains("field `A` has 3 rows"));
        let nan = three_species_json().replace("0.43", "NaN");
        let msg = SystemFile::parse(&nan).unwrap_err();
        assert!(msg.contains("line 3"), "{msg}");
        let inf = three_species_json().replace("0.43", "1e999");
        assert!(SystemFile::parse(&inf).is_err());
        let short = three_species_json().replace("[0.66, -1, 0.12]", "[0.66, -1]");
        assert!(SystemFile::parse(&short)
            .unwrap_err()
            .contains("field `A[1]` has 2 entries"));
        let extra = three_species_json().replace("\"n\": 3", "\"n\": 3, \"m\": 1");
        assert!(SystemFile::parse(&extra).is_err());
    }

    #[test]
    fn tolerance_precedence() {
        let flags = ToleranceArgs {
            sign_tol: Some(1e-6),
            ..Default::default()
        };
        let file = FileTolerances {
            sign: Some(1e-3),
            lcp: Some(1e-7),
            ..Default::default()
        };
        let t = Tolerances::resolve(&flags, Some(&file)).unwrap();
        assert_eq!((t.sign, t.lcp, t.positivity), (1e-6, 1e-7, DEFAULT_POSITIVITY_TOL));
        let neg = ToleranceArgs {
            lcp_tol: Some(-1.0),
            ..Default::default()
        };
        assert!(Tolerances::resolve(&neg, None).is_err());
    }

    #[test]
    fn assert_vl_falls_back_to_assertion() {
        // Stable, but neither quasidominant nor certifiable by the search.
        let text = r#"{"name": "j", "n": 3, "assert_vl": true,
            "A": [[-1, 0, 50], [-1, -1, 0], [-1, -1, -1]], "b": [1, 1, 1]}"#;
        let sys = SystemFile::parse(text)
            .unwrap()
            .to_system(DEFAULT_STABILITY_TOL)
            .unwrap();
        assert!(sys.vl_assumed());
    }
}
