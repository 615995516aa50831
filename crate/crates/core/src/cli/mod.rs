//! The `spiralkin` command line.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;

use crate::error::Error;
use crate::geometry::{sample_curve, tip_path, Profile, TipMotion};
use crate::integrator::{classify, IntegrationControls};
use crate::model::{energy, Medium, PhaseState, TipData};
use crate::separatrix::{crossing_ladder, find_separatrix, tail_energy, DEFAULT_TOL_L};
use crate::solver::{solve_omega, verify_solution, SolveCase, SolveRequest, SolveResult, DEFAULT_TOL_OMEGA};

use config::ConfigFile;
use output::{json_f64, json_object, json_pair, num, Csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "spiralkin", version, about = "Steadily rotating spiral waves of the kinematic model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rotation frequency for the given tip data (JSON).
    Solve(Opts),
    /// Separatrix intercept and tail (CSV: s, l, v, E).
    Separatrix(Opts),
    /// Axis crossings of the separatrix orbit (CSV: index, l_iR, l_iL).
    Ladder(Opts),
    /// Crossings over a frequency grid (CSV: omega, l_1R, l_1L, l_2R).
    Sweep(Opts),
    /// Solved front at time t (CSV: s, kappa, theta, x, y; optional SVG).
    Trace(Opts),
    /// Tip trajectory (CSV: t, x0, y0, theta0).
    Tip(Opts),
    /// Outcome of one forward trajectory from (l, v) (JSON).
    Classify(Opts),
}

#[derive(Debug, Clone, Default, Args)]
struct Opts {
    #[arg(long, allow_negative_numbers = true)]
    v0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
    /// Log tip curvature.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "kappa0")]
    l0: Option<f64>,
    /// Tip curvature.
    #[arg(long, allow_negative_numbers = true)]
    kappa0: Option<f64>,
    /// Tip tangential velocity.
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Oscillation index.
    #[arg(long)]
    i: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    #[arg(long)]
    tol_omega: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Arclength budget of each integration.
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Arclength of the traced front.
    #[arg(long)]
    length: Option<f64>,
    /// Start of `classify`.
    #[arg(long, allow_negative_numbers = true)]
    l: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    v: Option<f64>,
    #[arg(long)]
    max_index: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    theta00: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    NoSolution(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::NoSolution(_) => EXIT_NO_SOLUTION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::NoSolution(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::NotRotating => Failure::Usage(e.to_string()),
            Error::NoBracket(_) => Failure::NoSolution(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Merged flags and config file.
struct Settings {
    opts: Opts,
    file: ConfigFile,
}

impl Settings {
    fn new(opts: Opts) -> Outcome<Self> {
        let file = match &opts.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::Io(format!("cannot read config {}: {e}", p.display())))?;
                ConfigFile::parse(&text)?
            }
            None => ConfigFile::default(),
        };
        Ok(Self { opts, file })
    }

    fn f64(&self, flag: Option<f64>, key: &str) -> Outcome<Option<f64>> {
        match flag {
            Some(x) => Ok(Some(x)),
            None => Ok(self.file.get(key)?),
        }
    }

    fn usize(&self, flag: Option<usize>, key: &str) -> Outcome<Option<usize>> {
        match flag {
            Some(x) => Ok(Some(x)),
            None => Ok(self.file.get(key)?),
        }
    }

    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.get_str(key).map(PathBuf::from))
    }

    fn required(&self, flag: Option<f64>, key: &str) -> Outcome<f64> {
        self.f64(flag, key)?.ok_or_else(|| Failure::Usage(format!("--{} is required", key.replace('_', "-"))))
    }

    fn medium(&self) -> Outcome<Medium> {
        let v0 = self.f64(self.opts.v0, "v0")?.unwrap_or(1.0);
        let d = self.f64(self.opts.d, "d")?.unwrap_or(1.0);
        Ok(Medium::new(v0, d)?)
    }

    fn controls(&self, medium: &Medium) -> Outcome<IntegrationControls> {
        let mut c = IntegrationControls::default();
        if let Some(r) = self.f64(self.opts.rel_tol, "rel_tol")? {
            c.rel_tol = r;
        }
        c.s_max = self.f64(self.opts.s_max, "s_max")?;
        c.validate(medium)?;
        Ok(c)
    }

    fn tip(&self) -> Outcome<TipData> {
        let g = self.f64(self.opts.g, "g")?.unwrap_or(0.0);
        let i = match self.opts.i {
            Some(i) => i,
            None => self.file.get("i")?.unwrap_or(0),
        };
        // flags decide the curvature together; the file only fills in when both are absent
        let (l0, k0) = if self.opts.l0.is_some() || self.opts.kappa0.is_some() {
            (self.opts.l0, self.opts.kappa0)
        } else {
            (self.file.get("l0")?, self.file.get("kappa0")?)
        };
        Ok(match (l0, k0) {
            (Some(l0), None) => TipData::new(l0, g, i)?,
            (None, Some(k)) => TipData::from_kappa(k, g, i)?,
            (Some(_), Some(_)) => return Err(Failure::Usage("give exactly one of --l0 and --kappa0".into())),
            (None, None) => return Err(Failure::Usage("one of --l0 or --kappa0 is required".into())),
        })
    }

    fn request(&self) -> Outcome<SolveRequest> {
        let medium = self.medium()?;
        let mut req = SolveRequest::new(medium, self.tip()?);
        req.tol_omega = self.f64(self.opts.tol_omega, "tol_omega")?.unwrap_or(DEFAULT_TOL_OMEGA);
        req.controls = self.controls(&medium)?;
        req.validate()?;
        Ok(req)
    }

    fn theta00(&self) -> Outcome<f64> {
        Ok(self.f64(self.opts.theta00, "theta00")?.unwrap_or(0.0))
    }
}

/// Parses `argv` (including the program name) and runs one subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "spiralkin: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    match cmd {
        Command::Solve(o) => solve(&Settings::new(o)?, stdout),
        Command::Separatrix(o) => separatrix(&Settings::new(o)?, stdout, stderr),
        Command::Ladder(o) => ladder(&Settings::new(o)?, stdout),
        Command::Sweep(o) => sweep(&Settings::new(o)?, stdout),
        Command::Trace(o) => trace(&Settings::new(o)?, stdout),
        Command::Tip(o) => tip(&Settings::new(o)?, stdout),
        Command::Classify(o) => classify_cmd(&Settings::new(o)?, stdout),
    }
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Outcome<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn case_name(c: SolveCase) -> &'static str {
    match c {
        SolveCase::RotatingGrowing => "RotatingGrowing",
        SolveCase::Nonrotating => "Nonrotating",
        SolveCase::RotatingContracting => "RotatingContracting",
        SolveCase::NoSolution => "NoSolution",
    }
}

fn solved(req: &SolveRequest) -> Outcome<(SolveResult, Profile)> {
    let r = solve_omega(req)?;
    match r.profile.clone() {
        Some(p) if r.case != SolveCase::NoSolution => Ok((r, p)),
        _ => Err(Failure::NoSolution(r.diagnostic.unwrap_or_else(|| "no solution".into()))),
    }
}

fn solve(st: &Settings, stdout: &mut dyn Write) -> Outcome<()> {
    let req = st.request()?;
    let r = solve_omega(&req)?;
    let diag = match r.case {
        SolveCase::NoSolution => None,
        _ => Some(verify_solution(&r, &req)?),
    };
    let text = json_object(vec![
        ("case", Value::from(case_name(r.case))),
        ("omega", json_f64(r.omega)),
        ("crossing_count", Value::from(r.crossing_count)),
        ("residual", json_f64(r.residual)),
        ("slope_residual", diag.map_or(Value::Null, |d| json_f64(d.slope_residual))),
        ("integral_residual", diag.map_or(Value::Null, |d| json_f64(d.integral_residual))),
        ("observed_crossings", diag.map_or(Value::Null, |d| Value::from(d.observed_crossings))),
        ("feasible_window", json_pair(r.feasible_window)),
        ("upper_start", Value::from(r.upper_start)),
        ("diagnostic", r.diagnostic.clone().map_or(Value::Null, Value::from)),
    ]);
    emit(st.path(&st.opts.out, "out").as_deref(), &text, stdout)?;
    if r.case == SolveCase::NoSolution {
        return Err(Failure::NoSolution(r.diagnostic.unwrap_or_else(|| "no solution".into())));
    }
    Ok(())
}

fn separatrix(st: &Settings, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    let m = st.medium()?;
    let c = st.controls(&m)?;
    let omega = st.required(st.opts.omega, "omega")?;
    let r = find_separatrix(omega, &m, &c, DEFAULT_TOL_L)?;
    let mut csv = Csv::new(&["s", "l", "v", "E"]);
    let es = tail_energy(&r.tail, &m);
    for (p, e) in r.tail.trajectory.samples.iter().zip(es) {
        csv.floats(&[p.s, p.l, p.v, e]);
    }
    let summary = json_object(vec![
        ("omega", json_f64(omega)),
        ("l_star", json_f64(r.l_star)),
        ("l_star_tail", json_f64(r.l_star_tail)),
        ("bracket_width", json_f64(r.bracket_width)),
    ]);
    let out = st.path(&st.opts.out, "out");
    emit(out.as_deref(), &csv.finish(), stdout)?;
    let sink: &mut dyn Write = if out.is_some() { stdout } else { stderr };
    sink.write_all(summary.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
}

fn ladder(st: &Settings, stdout: &mut dyn Write) -> Outcome<()> {
    let m = st.medium()?;
    let c = st.controls(&m)?;
    let omega = st.required(st.opts.omega, "omega")?;
    let n = st.usize(st.opts.max_index, "max_index")?.unwrap_or(4);
    let lad = crossing_ladder(omega, &m, &c, n)?;
    let mut csv = Csv::new(&["index", "l_iR", "l_iL"]);
    for k in 0..n {
        csv.row(&[(k + 1).to_string(), num(lad.right[k]), num(lad.left[k])]);
    }
    emit(st.path(&st.opts.out, "out").as_deref(), &csv.finish(), stdout)
}

fn sweep(st: &Settings, stdout: &mut dyn Write) -> Outcome<()> {
    let m = st.medium()?;
    let c = st.controls(&m)?;
    let n = st.usize(st.opts.samples, "samples")?.unwrap_or(16);
    if n == 0 {
        return Err(Failure::Usage("--samples must be positive".into()));
    }
    let grid: Vec<f64> = (1..=n).map(|k| m.omega_max() * k as f64 / (n + 1) as f64).collect();
    let rows: Vec<Outcome<[f64; 4]>> = grid
        .par_iter()
        .map(|&w| {
            let lad = match crossing_ladder(w, &m, &c, 1) {
                Ok(l) => l,
                Err(Error::FocusStall { .. }) => return Ok([w, f64::NAN, f64::NAN, f64::NAN]),
                Err(e) => return Err(e.into()),
            };
            let r2 = lad.trajectory.crossings.get(1).map_or(f64::NAN, |x| x.l);
            Ok([w, lad.right[0], lad.left[0], r2])
        })
        .collect();
    let mut csv = Csv::new(&["omega", "l_1R", "l_1L", "l_2R"]);
    for r in rows {
        csv.floats(&r?);
    }
    emit(st.path(&st.opts.out, "out").as_deref(), &csv.finish(), stdout)
}

fn trace(st: &Settings, stdout: &mut dyn Write) -> Outcome<()> {
    let req = st.request()?;
    let (_, profile) = solved(&req)?;
    let m = req.medium;
    let t = st.f64(st.opts.t, "t")?.unwrap_or(0.0);
    let theta00 = st.theta00()?;
    let length = st.f64(st.opts.length, "length")?.unwrap_or(50.0 * m.d / m.v0);
    let n = st.usize(st.opts.samples, "samples")?.unwrap_or(2001);
    let motion = TipMotion::new(&profile, (0.0, 0.0), theta00);
    let curve = sample_curve(&profile, t, theta00, length, n, motion.position(t))?;
    let mut csv = Csv::new(&["s", "kappa", "theta", "x", "y"]);
    for q in &curve {
        csv.floats(&[q.s, q.kappa, q.theta, q.x, q.y]);
    }
    emit(st.path(&st.opts.out, "out").as_deref(), &csv.finish(), stdout)?;
    if let Some(p) = st.path(&st.opts.svg, "svg") {
        let pts: Vec<(f64, f64)> = curve.iter().map(|q| (q.x, q.y)).collect();
        let circle = motion.center().zip(motion.radius());
        emit(Some(&p), &output::svg(&pts, circle), stdout)?;
    }
    Ok(())
}

fn tip(st: &Settings, stdout: &mut dyn Write) -> Outcome<()> {
    let req = st.request()?;
    let (r, profile) = solved(&req)?;
    let m = req.medium;
    let period = if r.omega > 0.0 { 2.0 * std::f64::consts::PI / r.omega } else { 10.0 * m.d / (m.v0 * m.v0) };
    let t_max = st.f64(st.opts.t_max, "t_max")?.unwrap_or(period);
    let n = st.usize(st.opts.samples, "samples")?.unwrap_or(201);
    let path = tip_path(&profile, t_max, n, (0.0, 0.0), st.theta00()?)?;
    let mut csv = Csv::new(&["t", "x0", "y0", "theta0"]);
    for q in &path.samples {
        csv.floats(&[q.t, q.x0, q.y0, q.theta0]);
    }
    emit(st.path(&st.opts.out, "out").as_deref(), &csv.finish(), stdout)
}

fn classify_cmd(st: &Settings, stdout: &mut dyn Write) -> Outcome<()> {
    let m = st.medium()?;
    let c = st.controls(&m)?;
    let l = st.required(st.opts.l, "l")?;
    let v = st.required(st.opts.v, "v")?;
    let omega = st.required(st.opts.omega, "omega")?;
    let start = PhaseState::new(l, v);
    if !start.is_valid() {
        return Err(Failure::Usage("start state must be finite".into()));
    }
    let o = classify(start, omega, &m, &c)?;
    let text = json_object(vec![
        ("kind", Value::from(format!("{:?}", o.kind))),
        ("flag", Value::from(format!("{:?}", o.flag))),
        ("s_event", json_f64(o.s_event)),
        ("l_event", json_f64(o.state_event.l)),
        ("v_event", json_f64(o.state_event.v)),
        ("energy_event", json_f64(energy(&o.state_event, &m))),
    ]);
    emit(st.path(&st.opts.out, "out").as_deref(), &text, stdout)
}
