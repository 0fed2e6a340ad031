//! Command-line front end. Output is CSV by default (17 significant digits,
//! `#` comment lines) or a JSON mirror of the same records.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::estimates::{self, McIntoshConstant, OffDiagHypothesis};
use crate::experiments::{self, RegimeCell, RegimeClass, RegimeMap, SweepResult, SweepRow};
use crate::geometry::{gamma_log, make_maximal_admissible_ball, Ball, Point, Region};
use crate::lognum::LogNumber;
use crate::mehler::{self, TimeParam};
use crate::quadrature::{QuadratureSpec, Scheme};
use crate::selftest;

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

pub const SWEEP_HEADER: &str = "cB_norm,log_lhs,log_gammaB,log_implied_const";
pub const REGIME_HEADER: &str = "p,q,t,t_star,p_nelson,class";

#[derive(Debug, Parser)]
#[command(
    name = "ou-offdiag",
    version,
    about = "Ornstein–Uhlenbeck semigroup numerics on Gaussian space"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for randomised checks.
    #[arg(long, default_value_t = 42, global = true)]
    pub seed: u64,
    /// Initial quadrature order, doubled on each refinement.
    #[arg(long, default_value_t = 8, global = true)]
    pub order: usize,
    /// Relative quadrature tolerance.
    #[arg(
        long,
        allow_negative_numbers = true,
        env = "OU_QUAD_TOL",
        default_value_t = 1e-8,
        global = true
    )]
    pub tol: f64,
    #[arg(long, default_value_t = 12, global = true)]
    pub max_refinements: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Polar, global = true)]
    pub scheme: SchemeArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Polar,
    GaussLegendre,
    GaussHermite,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Polar => Scheme::PolarProduct,
            SchemeArg::GaussLegendre => Scheme::GaussLegendre,
            SchemeArg::GaussHermite => Scheme::GaussHermite,
        }
    }
}

impl GlobalOpts {
    pub fn quad(&self) -> QuadratureSpec {
        QuadratureSpec {
            scheme: self.scheme.into(),
            order: self.order,
            tol: self.tol,
            max_refinements: self.max_refinements,
        }
    }
}

/// A ball `B(center, radius)` or its annulus `C_k(B)`. The radius defaults to
/// the maximal admissible one, `min(1, 1/|center|)`.
#[derive(Debug, Args)]
pub struct SetArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub center: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub radius: Option<f64>,
    /// Use the annulus C_k(B) instead of the ball.
    #[arg(long, value_name = "K")]
    pub annulus: Option<u32>,
}

impl SetArgs {
    fn ball(&self) -> crate::Result<Ball> {
        let center = Point::new(self.center.clone())?;
        match self.radius {
            Some(r) => Ball::new(center, r),
            None => Ok(make_maximal_admissible_ball(center)),
        }
    }

    fn region(&self) -> crate::Result<Region> {
        let ball = self.ball()?;
        Ok(match self.annulus {
            Some(k) => ball.annulus(k).into(),
            None => ball.into(),
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ln M_t(x, y) and M_t(x, y).
    Kernel {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
    },
    /// Gaussian measure of a ball or annulus.
    Gamma {
        #[command(flatten)]
        set: SetArgs,
    },
    /// e^{tL} 1_E (y) by the kernel, plus the erf closed form in one dimension.
    Apply {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
    },
    /// Implied constants over maximal admissible balls c_B = |c_B| e₁.
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, allow_negative_numbers = true, default_value_t = 4.0)]
        cmin: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 12.0)]
        cmax: f64,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        theta: f64,
        #[arg(long = "c", allow_negative_numbers = true, default_value_t = 0.5)]
        decay_c: f64,
    },
    /// Classify a (p, t) grid at fixed q.
    Regime {
        #[arg(long, allow_negative_numbers = true)]
        pmin: f64,
        #[arg(long, allow_negative_numbers = true)]
        pmax: f64,
        #[arg(long)]
        psteps: usize,
        #[arg(long, allow_negative_numbers = true)]
        qfixed: f64,
        #[arg(long, allow_negative_numbers = true)]
        tmin: f64,
        #[arg(long, allow_negative_numbers = true)]
        tmax: f64,
        #[arg(long)]
        tsteps: usize,
    },
    /// ‖e^{tL} e^{λx}‖₂ / ‖e^{λx}‖_p in closed form and by quadrature.
    Hypercheck {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
    },
    /// Both sides of the L²-L² Davies–Gaffney estimate for E = B, F = C_k(B).
    Dgcheck {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        center: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        mcintosh: f64,
    },
    /// Run the invariant suite; exits nonzero on any failure.
    Selftest,
}

/// Failure of a subcommand, mapped to an exit status.
#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io(io::Error),
    SelftestFailed(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => EXIT_NOT_CONVERGED,
            CliError::Lib(_) => EXIT_INVALID,
            CliError::Io(_) | CliError::SelftestFailed(_) => 1,
        }
    }
}

/// Parse `args` (program name first), run, and report errors on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Lib(err) => eprintln!("error: {err}"),
                CliError::Io(err) => eprintln!("error: {err}"),
                CliError::SelftestFailed(n) => eprintln!("selftest: {n} check(s) failed"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let quad = g.quad();
    quad.validate()?;
    let mut out = String::new();
    let outcome = render(&cli.command, g, &quad, &mut out);
    // Partial sweep rows are still written before the error is reported.
    if !out.is_empty() {
        emit(g, &out)?;
    }
    outcome
}

fn emit(g: &GlobalOpts, text: &str) -> io::Result<()> {
    match &g.output {
        Some(path) => std::fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn render(cmd: &Command, g: &GlobalOpts, quad: &QuadratureSpec, out: &mut String) -> Result<(), CliError> {
    match cmd {
        Command::Kernel { t, x, y } => {
            let t = TimeParam::new(*t)?;
            let x = Point::new(x.clone())?;
            let y = Point::new(y.clone())?;
            let v = mehler::mehler_log(t, &x, &y)?;
            write_log_value(out, g.format, "log_mehler", "mehler", v, &[]);
        }
        Command::Gamma { set } => {
            let v = gamma_log(&set.region()?, quad)?;
            write_log_value(out, g.format, "log_gamma", "gamma", v, &[]);
        }
        Command::Apply { t, set, y } => {
            let t = TimeParam::new(*t)?;
            let region = set.region()?;
            let y = Point::new(y.clone())?;
            let v = mehler::apply_indicator_log(t, &region.clone().into(), &y, quad)?;
            let extra = if region.dim() == 1 {
                let closed = mehler::apply_indicator_closed_form_log(t, &region, y.coords()[0])?;
                vec![("log_closed_form", closed.log_magnitude())]
            } else {
                Vec::new()
            };
            write_log_value(out, g.format, "log_value", "value", v, &extra);
        }
        Command::Sweep {
            t,
            p,
            q,
            k,
            n,
            cmin,
            cmax,
            steps,
            theta,
            decay_c,
        } => {
            let hyp = OffDiagHypothesis::new(*p, *q, *theta, *decay_c)?;
            let t = TimeParam::new(*t)?;
            let grid = linspace("cmin..cmax", *cmin, *cmax, *steps)?;
            match experiments::sweep_blowup(&hyp, t, *k, *n, &grid, quad) {
                Ok(res) => match g.format {
                    Format::Csv => out.push_str(&sweep_to_csv(&res)),
                    Format::Json => push_json(out, &res),
                },
                Err(Error::SweepAborted { at, partial, source }) => {
                    match g.format {
                        Format::Csv => {
                            out.push_str(&rows_to_csv(&partial));
                            let _ = writeln!(out, "# partial: aborted at cB_norm={at:.16e}: {source}");
                        }
                        Format::Json => push_json(
                            out,
                            &json!({ "partial": partial, "aborted_at": at, "error": source.to_string() }),
                        ),
                    }
                    return Err(Error::SweepAborted { at, partial, source }.into());
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Regime {
            pmin,
            pmax,
            psteps,
            qfixed,
            tmin,
            tmax,
            tsteps,
        } => {
            let ps = linspace("pmin..pmax", *pmin, *pmax, *psteps)?;
            let ts = linspace("tmin..tmax", *tmin, *tmax, *tsteps)?;
            let map = experiments::regime_map(&ps, &[*qfixed], &ts);
            match g.format {
                Format::Csv => out.push_str(&regime_to_csv(&map)),
                Format::Json => push_json(out, &map),
            }
        }
        Command::Hypercheck { t, p, lambda } => {
            let time = TimeParam::new(*t)?;
            let rep = experiments::hypercontractivity_check(time, *p, *lambda, quad)?;
            let p_nelson = estimates::nelson_min_p(time);
            let rel = (rep.ratio_numeric - rep.ratio_closed_form).abs() / rep.ratio_closed_form;
            let verdict = if *p >= p_nelson {
                "contraction"
            } else {
                "no_contraction"
            };
            let agree = rel <= 1e-6;
            match g.format {
                Format::Csv => {
                    out.push_str("t,p,lambda,p_nelson,ratio_closed_form,ratio_numeric,rel_diff\n");
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        f(*t),
                        f(*p),
                        f(*lambda),
                        f(p_nelson),
                        f(rep.ratio_closed_form),
                        f(rep.ratio_numeric),
                        f(rel)
                    );
                    let _ = writeln!(out, "# verdict={verdict} numeric_agrees={agree}");
                }
                Format::Json => push_json(
                    out,
                    &json!({
                        "t": t, "p": p, "lambda": lambda, "p_nelson": p_nelson,
                        "ratio_closed_form": rep.ratio_closed_form,
                        "ratio_numeric": rep.ratio_numeric,
                        "rel_diff": rel, "verdict": verdict, "numeric_agrees": agree,
                    }),
                ),
            }
        }
        Command::Dgcheck {
            t,
            center,
            radius,
            k,
            mcintosh,
        } => {
            let set = SetArgs {
                center: center.clone(),
                radius: *radius,
                annulus: None,
            };
            let constant = McIntoshConstant::new(*mcintosh)?;
            let rep = experiments::davies_gaffney_check(TimeParam::new(*t)?, &set.ball()?, *k, quad)?;
            let rhs = rep.rhs_log_with_c1 + constant.value().ln();
            let log_ratio = rep.lhs_log - rhs;
            match g.format {
                Format::Csv => {
                    out.push_str("lhs_log,rhs_log,log_ratio\n");
                    let _ = writeln!(out, "{},{},{}", f(rep.lhs_log), f(rhs), f(log_ratio));
                }
                Format::Json => push_json(
                    out,
                    &json!({ "lhs_log": rep.lhs_log, "rhs_log": rhs, "log_ratio": log_ratio }),
                ),
            }
        }
        Command::Selftest => {
            let report = selftest::run(g.seed);
            let failed = report.iter().filter(|c| !c.passed).count();
            match g.format {
                Format::Csv => {
                    for c in &report {
                        let _ = writeln!(
                            out,
                            "{} {}: {}",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.name,
                            c.detail
                        );
                    }
                    let _ = writeln!(out, "# {} passed, {failed} failed", report.len() - failed);
                }
                Format::Json => push_json(out, &report),
            }
            if failed > 0 {
                emit(g, out)?;
                out.clear();
                return Err(CliError::SelftestFailed(failed));
            }
        }
    }
    Ok(())
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_json<T: Serialize>(out: &mut String, value: &T) {
    out.push_str(&serde_json::to_string_pretty(value).expect("records serialize"));
    out.push('\n');
}

fn write_log_value(
    out: &mut String,
    format: Format,
    log_name: &str,
    lin_name: &str,
    v: LogNumber,
    extra: &[(&str, f64)],
) {
    // The linear value is left empty when it would overflow or underflow.
    let lin = v.to_f64_checked().filter(|x| *x != 0.0 || v.is_zero());
    match format {
        Format::Csv => {
            let mut header = format!("{log_name},{lin_name}");
            let mut row = format!("{},{}", f(v.log_magnitude()), lin.map(f).unwrap_or_default());
            for (name, value) in extra {
                let _ = write!(header, ",{name}");
                let _ = write!(row, ",{}", f(*value));
            }
            let _ = writeln!(out, "{header}\n{row}");
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert(log_name.into(), json!(v.log_magnitude()));
            obj.insert(lin_name.into(), json!(lin));
            for (name, value) in extra {
                obj.insert((*name).into(), json!(value));
            }
            push_json(out, &obj);
        }
    }
}

/// `steps` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(name: &'static str, lo: f64, hi: f64, steps: usize) -> crate::Result<Vec<f64>> {
    if steps == 0 || !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("need finite bounds with min ≤ max and steps ≥ 1, got [{lo}, {hi}] with {steps}"),
        });
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if i == steps - 1 { hi } else { lo + i as f64 * h })
        .collect())
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            f(r.cb_norm),
            f(r.log_lhs),
            f(r.log_gamma_b),
            f(r.log_implied_constant)
        );
    }
    s
}

pub fn sweep_to_csv(res: &SweepResult) -> String {
    let mut s = rows_to_csv(&res.rows);
    let _ = writeln!(
        s,
        "# fitted_slope={} predicted_slope={} rel_err={}",
        f(res.fitted_slope),
        f(res.predicted_slope),
        f(res.slope_rel_error.unwrap_or(f64::NAN))
    );
    s
}

pub fn regime_to_csv(map: &RegimeMap) -> String {
    let mut s = format!("{REGIME_HEADER}\n");
    for c in &map.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            f(c.p),
            f(c.q),
            f(c.t),
            f(c.t_star),
            f(c.p_nelson),
            c.class
        );
    }
    for sk in &map.skipped {
        let _ = writeln!(s, "# skipped p={} q={} t={}: {}", f(sk.p), f(sk.q), f(sk.t), sk.reason);
    }
    s
}

fn data_lines<'a>(text: &'a str, header: &str) -> crate::Result<impl Iterator<Item = &'a str>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    match lines.next() {
        Some(h) if h == header => Ok(lines),
        other => Err(Error::invalid(
            "csv",
            format!("expected header `{header}`, found {other:?}"),
        )),
    }
}

fn parse_fields<const N: usize>(line: &str) -> crate::Result<[&str; N]> {
    let fields: Vec<&str> = line.split(',').collect();
    fields
        .try_into()
        .map_err(|v: Vec<&str>| Error::invalid("csv", format!("expected {N} fields, found {} in `{line}`", v.len())))
}

fn parse_f64(s: &str) -> crate::Result<f64> {
    s.parse()
        .map_err(|_| Error::invalid("csv", format!("not a number: `{s}`")))
}

/// Read back the rows written by [`rows_to_csv`] / [`sweep_to_csv`].
pub fn parse_sweep_csv(text: &str) -> crate::Result<Vec<SweepRow>> {
    data_lines(text, SWEEP_HEADER)?
        .map(|line| {
            let [a, b, c, d] = parse_fields::<4>(line)?;
            Ok(SweepRow {
                cb_norm: parse_f64(a)?,
                log_lhs: parse_f64(b)?,
                log_gamma_b: parse_f64(c)?,
                log_implied_constant: parse_f64(d)?,
            })
        })
        .collect()
}

/// Read back the cells written by [`regime_to_csv`].
pub fn parse_regime_csv(text: &str) -> crate::Result<Vec<RegimeCell>> {
    data_lines(text, REGIME_HEADER)?
        .map(|line| {
            let [p, q, t, ts, pn, class] = parse_fields::<6>(line)?;
            let class = match class {
                "fails_restricted" => RegimeClass::FailsRestricted,
                "holds_unrestricted" => RegimeClass::HoldsUnrestricted,
                "conjectured_extension" => RegimeClass::ConjecturedExtension,
                "unknown" => RegimeClass::Unknown,
                other => return Err(Error::invalid("csv", format!("unknown class `{other}`"))),
            };
            Ok(RegimeCell {
                p: parse_f64(p)?,
                q: parse_f64(q)?,
                t: parse_f64(t)?,
                t_star: parse_f64(ts)?,
                p_nelson: parse_f64(pn)?,
                class,
            })
        })
        .collect()
}
