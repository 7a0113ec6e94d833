//! Command-line front end. Each command writes to the supplied streams and
//! returns the process exit code: 0 on success, 1 when a computation or a
//! verification check fails, 2 on invalid input.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::abel_poisson::{
    ap_alpha_extract, ap_asymptotics, ap_coefficients, ap_limit_uncertainty, ap_report,
    ap_rest_term, ap_var_momentum_closed, ap_var_space, ap_var_space_from_alpha,
    AbelPoissonWavelet,
};
use crate::error::Result;
use crate::localization::{
    uncertainty_product, uncertainty_product_quadrature, LocalizationReport, ZonalFunction,
};
use crate::qseries::{
    s_closed_form, s_minus1_bound_check, s_numeric, SeriesIndex, MAX_CLOSED_FORM_POWER,
};
use crate::special_fn::sqrt_product_sandwich_holds;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "sphere-uncertainty",
    version,
    about = "Uncertainty products of zonal wavelets on the n-sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variances and uncertainty of the Abel-Poisson wavelet over an (n, rho) grid.
    Table(TableArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Print the closed form of S_{n,m} as a rational function of q = e^{-2 rho}.
    ClosedForm(ClosedFormArgs),
    /// Tabulate the rho -> 0 limit of the uncertainty product.
    Limit(LimitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Sphere dimensions, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_values_t = vec![2u32, 3])]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = 1e-3)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 30)]
    pub points: usize,
    /// Logarithmic rho spacing (linear otherwise).
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_SERIES_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Series tolerance; quadrature checks use a fixed 1e-12.
    #[arg(long, default_value_t = DEFAULT_SERIES_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Level::Fast)]
    pub level: Level,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Relative perturbation applied to var_M before checking (testing only).
    #[arg(long, hide = true)]
    pub inject_fault: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ClosedFormArgs {
    #[arg(long = "n")]
    pub n: i64,
    #[arg(long = "m", allow_negative_numbers = true)]
    pub m: i64,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[arg(long, default_value_t = 10)]
    pub n_max: i64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n_values: Vec<u32>,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n_values.is_empty() {
            return Err("at least one dimension is required".into());
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(format!("dimension n = {n} is not supported (need n >= 2)"));
        }
        if !(self.rho_min > 0.0) || !self.rho_max.is_finite() {
            return Err(format!(
                "rho range [{}, {}] must be positive and finite",
                self.rho_min, self.rho_max
            ));
        }
        if self.rho_min > self.rho_max {
            return Err(format!(
                "rho-min {} exceeds rho-max {}",
                self.rho_min, self.rho_max
            ));
        }
        if self.rho_points == 0 {
            return Err("points must be at least 1".into());
        }
        Ok(())
    }

    pub fn rhos(&self) -> Vec<f64> {
        let k = self.rho_points;
        if k == 1 {
            return vec![self.rho_min];
        }
        (0..k)
            .map(|i| {
                if i + 1 == k {
                    return self.rho_max;
                }
                let s = i as f64 / (k - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.rho_min + s * (self.rho_max - self.rho_min),
                    Spacing::Log => {
                        (self.rho_min.ln() + s * (self.rho_max / self.rho_min).ln()).exp()
                    }
                }
            })
            .collect()
    }

    /// `(n, ρ)` pairs sorted by `n`, then `ρ`.
    pub fn points(&self) -> Vec<(u32, f64)> {
        let mut ns = self.n_values.clone();
        ns.sort_unstable();
        ns.dedup();
        let rhos = self.rhos();
        ns.iter()
            .flat_map(|&n| rhos.iter().map(move |&r| (n, r)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub n: u32,
    pub rho: f64,
    pub var_space: f64,
    pub var_momentum: f64,
    pub uncertainty: f64,
    pub limit_uncertainty: f64,
    pub margin_over_half_n: f64,
    #[serde(skip)]
    pub error_estimate: f64,
}

pub const TABLE_COLUMNS: [&str; 7] = [
    "n",
    "rho",
    "var_space",
    "var_momentum",
    "uncertainty",
    "limit_uncertainty",
    "margin_over_half_n",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn table_row(n: u32, rho: f64, tol: f64) -> Result<TableRow> {
    let w = AbelPoissonWavelet::new(n, rho)?;
    let rep = ap_report(&w, tol)?;
    Ok(TableRow {
        n,
        rho,
        var_space: rep.var_space,
        var_momentum: rep.var_momentum,
        uncertainty: rep.uncertainty,
        limit_uncertainty: ap_limit_uncertainty(n)?,
        margin_over_half_n: rep.lower_bound_margin(),
        error_estimate: rep.error_estimate,
    })
}

pub fn cmd_table(
    grid: &GridSpec,
    format: Format,
    tol: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if let Err(msg) = grid.validate() {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_USAGE;
    }
    if !(tol > 0.0) {
        let _ = writeln!(err, "error: tol must be positive");
        return EXIT_USAGE;
    }
    let points = grid.points();
    let rows: Vec<Result<TableRow>> = points
        .par_iter()
        .map(|&(n, rho)| table_row(n, rho, tol))
        .collect();
    let mut ok = Vec::with_capacity(rows.len());
    for (row, (n, rho)) in rows.into_iter().zip(points) {
        match row {
            Ok(r) => ok.push(r),
            Err(e) => {
                let _ = writeln!(err, "error: n = {n}, rho = {rho}: {e}");
                return EXIT_FAILURE;
            }
        }
    }
    for r in ok
        .iter()
        .filter(|r| r.margin_over_half_n < -r.error_estimate)
    {
        let _ = writeln!(
            err,
            "warning: n = {}, rho = {}: U - n/2 = {:e} below the error estimate {:e}",
            r.n, r.rho, r.margin_over_half_n, r.error_estimate
        );
    }
    let written = match format {
        Format::Csv => write_csv(&ok, out),
        Format::Json => serde_json::to_writer_pretty(&mut *out, &ok)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out)),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILURE;
    }
    EXIT_OK
}

fn write_csv(rows: &[TableRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", TABLE_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            fmt_num(r.rho),
            fmt_num(r.var_space),
            fmt_num(r.var_momentum),
            fmt_num(r.uncertainty),
            fmt_num(r.limit_uncertainty),
            fmt_num(r.margin_over_half_n)
        )?;
    }
    Ok(())
}

pub fn cmd_closed_form(n: i64, m: i64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if n < 2 || n > i64::from(u32::MAX) {
        let _ = writeln!(err, "error: n = {n} is not supported (need n >= 2)");
        return EXIT_USAGE;
    }
    if !(0..=i64::from(MAX_CLOSED_FORM_POWER)).contains(&m) {
        let _ = writeln!(err, "error: m = {m} is outside 0..={MAX_CLOSED_FORM_POWER}");
        return EXIT_USAGE;
    }
    match s_closed_form(n as u32, m as u32) {
        Ok(r) => {
            let _ = writeln!(out, "{r}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub n: u32,
    pub limit_uncertainty: f64,
    pub half_n: f64,
    pub excess: f64,
}

pub fn cmd_limit(n_max: i64, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if !(2..=100_000).contains(&n_max) {
        let _ = writeln!(err, "error: n-max = {n_max} must lie in 2..=100000");
        return EXIT_USAGE;
    }
    let rows: Vec<LimitRow> = (2..=n_max as u32)
        .map(|n| {
            let limit = ap_limit_uncertainty(n).expect("n >= 2");
            let half = f64::from(n) / 2.0;
            LimitRow {
                n,
                limit_uncertainty: limit,
                half_n: half,
                excess: limit - half,
            }
        })
        .collect();
    let written = match format {
        Format::Csv => (|| {
            writeln!(out, "n,limit_uncertainty,half_n,excess")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{}",
                    r.n,
                    fmt_num(r.limit_uncertainty),
                    fmt_num(r.half_n),
                    fmt_num(r.excess)
                )?;
            }
            Ok(())
        })(),
        Format::Json => serde_json::to_writer_pretty(&mut *out, &rows)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out)),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILURE;
    }
    if rows.iter().any(|r| !(r.excess > 0.0)) {
        let _ = writeln!(err, "error: the limit does not exceed n/2 for every row");
        return EXIT_FAILURE;
    }
    EXIT_OK
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Suite {
    name: &'static str,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: Vec::new(),
        }
    }

    fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            suite: self.name,
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn record_result<T>(
        &mut self,
        name: impl Into<String>,
        res: Result<T>,
        judge: impl FnOnce(T) -> (bool, String),
    ) {
        match res {
            Ok(v) => {
                let (ok, detail) = judge(v);
                self.record(name, ok, detail);
            }
            Err(e) => self.record(name, false, format!("error: {e}")),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Halving ladder used by the asymptotic suite.
pub const ASYMPTOTIC_LADDER: [f64; 5] = [0.05, 0.025, 0.0125, 0.00625, 0.003125];
/// Ladder for the distance of `U` from its limit.
pub const LIMIT_LADDER: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];
const CROSS_PATH_POINTS: [(u32, f64); 6] =
    [(2, 0.2), (2, 0.5), (2, 1.0), (3, 0.2), (3, 0.5), (3, 1.0)];
const QUADRATURE_TOL: f64 = 1e-12;

fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (k - 1) as f64).exp())
        .collect()
}

fn suite_cross_path(tol: f64, fault: f64) -> Suite {
    let mut s = Suite::new("cross-path");
    for (n, rho) in CROSS_PATH_POINTS {
        let label = format!("n={n} rho={rho}");
        let res = (|| {
            let w = AbelPoissonWavelet::new(n, rho)?;
            let lemma = uncertainty_product(&ap_coefficients(&w), w.lambda(), tol)?;
            let vs = ap_var_space(&w, tol)?;
            let vm = ap_var_momentum_closed(&w) * (1.0 + fault);
            Ok((lemma, vs, vm))
        })();
        s.record_result(
            label,
            res,
            |(lemma, vs, vm): (LocalizationReport, f64, f64)| {
                let es = rel(vs, lemma.var_space);
                let em = rel(vm, lemma.var_momentum);
                (
                    es <= 1e-10 && em <= 1e-10,
                    format!("var_S rel {es:.2e}, var_M rel {em:.2e} (limit 1e-10)"),
                )
            },
        );
    }
    s
}

fn suite_quadrature(tol: f64, fault: f64) -> Suite {
    let mut s = Suite::new("quadrature");
    for (n, rho) in CROSS_PATH_POINTS {
        let label = format!("n={n} rho={rho}");
        let res = (|| {
            let w = AbelPoissonWavelet::new(n, rho)?;
            let seq = ap_coefficients(&w);
            let lemma = uncertainty_product(&seq, w.lambda(), tol)?;
            let f = ZonalFunction::new(seq, w.lambda(), QUADRATURE_TOL)?;
            let quad = uncertainty_product_quadrature(&f, QUADRATURE_TOL)?;
            Ok((lemma, quad))
        })();
        s.record_result(
            label,
            res,
            |(lemma, quad): (LocalizationReport, LocalizationReport)| {
                let es = rel(quad.var_space, lemma.var_space);
                let em = rel(quad.var_momentum * (1.0 + fault), lemma.var_momentum);
                (
                    es <= 1e-6 && em <= 1e-6,
                    format!("var_S rel {es:.2e}, var_M rel {em:.2e} (limit 1e-6)"),
                )
            },
        );
    }
    s
}

fn suite_closed_vs_numeric(tol: f64) -> Suite {
    let mut s = Suite::new("closed-vs-numeric");
    for n in 2..=6 {
        for m in 0..=4u32 {
            let res = (|| {
                let form = s_closed_form(n, m)?;
                let mut worst = 0.0f64;
                let mut ok = true;
                for rho in [0.05, 0.1, 0.5, 1.0, 2.0] {
                    let num = s_numeric(&SeriesIndex::new(n, m as i32, rho)?, tol)?;
                    let exact = form.eval_at_rho(rho)?;
                    let gap = (num.value - exact).abs();
                    ok &= gap <= num.tail_bound + 1e-12 * exact.abs();
                    worst = worst.max(gap / exact.abs());
                }
                Ok((ok, worst))
            })();
            s.record_result(format!("n={n} m={m}"), res, |(ok, worst)| {
                (ok, format!("worst relative gap {worst:.2e}"))
            });
        }
    }
    s
}

fn suite_rest_term(tol: f64) -> Suite {
    let mut s = Suite::new("rest-term");
    let grid = log_grid(1e-3, 1.0, 30);
    for n in 2..=6 {
        let res = (|| {
            let mut worst = 0.0f64;
            let mut alpha_max = 0.0f64;
            for &rho in &grid {
                let r = ap_rest_term(n, rho, tol)?;
                worst = worst.max(r.r.abs() / r.bound);
                alpha_max = alpha_max.max(ap_alpha_extract(n, rho, tol)?.abs());
            }
            Ok((worst, alpha_max))
        })();
        s.record_result(format!("n={n} |R| <= S_(n,-1)/4"), res, |(worst, alpha_max): (f64, f64)| {
            (
                worst <= 1.0 && alpha_max.is_finite(),
                format!("max |R|/bound {worst:.4}, max |alpha| {alpha_max:.4e} on 30 points in [1e-3, 1]"),
            )
        });
        let res = (|| {
            let mut worst = 0.0f64;
            // truncation error in B is amplified by 1/var_S, so both routes
            // are summed well below the reconstruction target
            let tight = tol.min(1e-15);
            for rho in [0.01, 0.1, 0.3, 1.0] {
                let alpha = ap_alpha_extract(n, rho, tight)?;
                let rebuilt = ap_var_space_from_alpha(n, rho, alpha)?;
                let series = ap_var_space(&AbelPoissonWavelet::new(n, rho)?, tight)?;
                worst = worst.max(rel(rebuilt, series));
            }
            Ok(worst)
        })();
        s.record_result(format!("n={n} reconstruction"), res, |worst: f64| {
            (
                worst <= 1e-8,
                format!("worst relative gap {worst:.2e} (limit 1e-8)"),
            )
        });
    }
    s
}

fn suite_bounds(tol: f64, level: Level) -> Suite {
    let mut s = Suite::new("bounds");
    let res = (|| {
        let mut worst = f64::INFINITY;
        for rho in log_grid(1e-3, 3.0, 30) {
            let rep = s_minus1_bound_check(2, rho, tol)?;
            worst = worst.min(rep.upper - rep.s2_minus1.value - rep.s2_minus1.tail_bound);
        }
        Ok(worst)
    })();
    s.record_result(
        "S_(2,-1) <= e^(-2rho) + Gamma(0, 2rho)",
        res,
        |slack: f64| (slack >= 0.0, format!("smallest slack {slack:.4e}")),
    );
    for n in 3..=6 {
        let res = s_minus1_bound_check(n, 0.05, tol);
        s.record_result(format!("n={n} S_(n,-1)*rho^(n-2) levels off"), res, |rep| {
            let g = rep.growth.expect("ladder for n > 2");
            (
                true,
                format!(
                    "largest scaled value {:.4e}, last increment {:.2e}",
                    g.constant, g.last_increment
                ),
            )
        });
    }
    let res = (|| {
        let mut worst = f64::INFINITY;
        let mut count = 0;
        for n in 2..=6 {
            for rho in log_grid(1e-3, 3.0, 30) {
                let rep = ap_report(&AbelPoissonWavelet::new(n, rho)?, tol)?;
                if !rep.satisfies_lower_bound() {
                    return Ok((false, rep.lower_bound_margin(), count));
                }
                worst = worst.min(rep.lower_bound_margin() / (f64::from(n) / 2.0));
                count += 1;
            }
        }
        Ok((true, worst, count))
    })();
    s.record_result("U >= n/2", res, |(ok, worst, count)| {
        (
            ok,
            format!("{count} points, smallest relative margin {worst:.4e}"),
        )
    });
    let ok = (2..=50).all(|n| ap_limit_uncertainty(n).is_ok_and(|v| v > f64::from(n) / 2.0));
    s.record("limit > n/2 for n <= 50", ok, "");
    let top: u64 = match level {
        Level::Fast => 10_000,
        Level::Full => 1_000_000,
    };
    let first_bad = (1..=top).find(|&l| !sqrt_product_sandwich_holds(l));
    s.record(
        format!("sqrt(l(l+1)) sandwich for l <= {top}"),
        first_bad.is_none(),
        first_bad.map_or(String::new(), |l| format!("fails at l = {l}")),
    );
    s
}

fn suite_asymptotic(fault: f64) -> Suite {
    let mut s = Suite::new("asymptotic");
    for n in 2..=6 {
        let res = (|| {
            let nf = f64::from(n);
            let lead = (nf * nf - 3.0 * nf + 3.0) / (nf * (nf - 1.0));
            let mut devs = Vec::new();
            let mut rests = Vec::new();
            for rho in ASYMPTOTIC_LADDER {
                let w = AbelPoissonWavelet::new(n, rho)?;
                let vs = ap_var_space(&w, 1e-15)?;
                devs.push((vs / (rho * rho) - lead).abs());
                let (_, pred) = ap_asymptotics(n, rho)?;
                rests.push(ap_var_momentum_closed(&w) * (1.0 + fault) - pred);
            }
            Ok((devs, rests))
        })();
        s.record_result(
            format!("n={n} var_S/rho^2 -> leading coefficient"),
            res.clone(),
            |(devs, _)| {
                let ok = devs.windows(2).all(|p| p[1] < p[0]);
                (ok, format!("deviations {}", join_sci(&devs)))
            },
        );
        s.record_result(
            format!("n={n} var_M two-term remainder bounded"),
            res,
            |(_, rests)| {
                let incs: Vec<f64> = rests.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
                let ok = incs.windows(2).all(|p| p[1] < p[0]);
                (ok, format!("remainders {}", join_sci(&rests)))
            },
        );
        let res = (|| {
            let nf = f64::from(n);
            let rho = 0.05;
            let vm = ap_var_momentum_closed(&AbelPoissonWavelet::new(n, rho)?) * (1.0 + fault);
            let lead = (nf + 1.0) * (nf + 2.0) / (4.0 * rho * rho);
            let (_, two) = ap_asymptotics(n, rho)?;
            Ok(((vm - lead).abs(), (vm - two).abs()))
        })();
        s.record_result(
            format!("n={n} var_M correction at rho=0.05"),
            res,
            |(one, two): (f64, f64)| {
                (
                    one >= 10.0 * two,
                    format!("improvement factor {:.1}", one / two),
                )
            },
        );
    }
    s
}

fn suite_limit(tol: f64) -> Suite {
    let mut s = Suite::new("limit");
    for n in 2..=6 {
        let res = (|| {
            let limit = ap_limit_uncertainty(n)?;
            let at = |rho: f64| -> Result<f64> {
                Ok(
                    (ap_report(&AbelPoissonWavelet::new(n, rho)?, tol)?.uncertainty - limit).abs()
                        / limit,
                )
            };
            let ladder: Vec<f64> = LIMIT_LADDER.iter().map(|&r| at(r)).collect::<Result<_>>()?;
            Ok((at(1e-3)?, ladder))
        })();
        s.record_result(
            format!("n={n} U -> limit"),
            res,
            |(small, ladder): (f64, Vec<f64>)| {
                let shrinks = ladder.last() < ladder.first();
                (
                    small <= 0.01 && shrinks,
                    format!(
                        "relative gap {small:.3e} at rho=1e-3; ladder {}",
                        join_sci(&ladder)
                    ),
                )
            },
        );
    }
    s
}

fn join_sci(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.3e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn run_verify(tol: f64, level: Level, inject_fault: Option<f64>) -> VerifyReport {
    let fault = inject_fault.unwrap_or(0.0);
    let mut suites = vec![
        suite_cross_path(tol, fault),
        suite_closed_vs_numeric(tol),
        suite_rest_term(tol),
        suite_bounds(tol, level),
        suite_asymptotic(fault),
    ];
    if level == Level::Full {
        suites.push(suite_quadrature(tol, fault));
        suites.push(suite_limit(tol));
    }
    let checks: Vec<Check> = suites.into_iter().flat_map(|s| s.checks).collect();
    VerifyReport {
        level,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if !(args.tol > 0.0) {
        let _ = writeln!(err, "error: tol must be positive");
        return EXIT_USAGE;
    }
    let report = run_verify(args.tol, args.level, args.inject_fault);
    let written = match args.format {
        OutputFormat::Json => serde_json::to_writer_pretty(&mut *out, &report)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(out)),
        OutputFormat::Text => (|| {
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(out, "[{tag}] {}: {}  {}", c.suite, c.name, c.detail)?;
            }
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            writeln!(out, "{} checks, {} failed", report.checks.len(), failed)
        })(),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILURE;
    }
    if report.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Table(a) => {
            let grid = GridSpec {
                n_values: a.n,
                rho_min: a.rho_min,
                rho_max: a.rho_max,
                rho_points: a.points,
                spacing: if a.log { Spacing::Log } else { Spacing::Linear },
            };
            cmd_table(&grid, a.format, a.tol, out, err)
        }
        Command::Verify(a) => cmd_verify(&a, out, err),
        Command::ClosedForm(a) => cmd_closed_form(a.n, a.m, out, err),
        Command::Limit(a) => cmd_limit(a.n_max, a.format, out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capture(f: impl FnOnce(&mut Vec<u8>, &mut Vec<u8>) -> i32) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = f(&mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn grid(n: Vec<u32>, lo: f64, hi: f64, k: usize) -> GridSpec {
        GridSpec {
            n_values: n,
            rho_min: lo,
            rho_max: hi,
            rho_points: k,
            spacing: Spacing::Log,
        }
    }

    #[test]
    fn grid_validation() {
        assert!(grid(vec![2], 0.1, 1.0, 3).validate().is_ok());
        assert!(grid(vec![1], 0.1, 1.0, 3).validate().is_err());
        assert!(grid(vec![2], 0.0, 1.0, 3).validate().is_err());
        assert!(grid(vec![2], 2.0, 1.0, 3).validate().is_err());
        assert!(grid(vec![2], 0.1, 1.0, 0).validate().is_err());
        let rhos = grid(vec![2], 0.01, 1.0, 3).rhos();
        assert!((rhos[1] - 0.1).abs() < 1e-15 && rhos[2] == 1.0);
        let lin = GridSpec {
            spacing: Spacing::Linear,
            ..grid(vec![3, 2], 1.0, 2.0, 3)
        };
        assert_eq!(lin.rhos(), vec![1.0, 1.5, 2.0]);
        assert_eq!(lin.points()[0], (2, 1.0));
    }

    #[test]
    fn table_spot_value() {
        let rho = std::f64::consts::LN_2 / 2.0;
        let (code, out, _) =
            capture(|o, e| cmd_table(&grid(vec![2], rho, rho, 1), Format::Csv, 1e-12, o, e));
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], TABLE_COLUMNS.join(","));
        assert_eq!(lines.len(), 2);
        let vm: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
        assert!((vm - 192.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn table_rejects_bad_grid() {
        let (code, _, err) =
            capture(|o, e| cmd_table(&grid(vec![1], 0.1, 1.0, 2), Format::Csv, 1e-12, o, e));
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("n = 1"));
    }

    #[test]
    fn closed_form_strings_and_range() {
        let (code, out, _) = capture(|o, e| cmd_closed_form(2, 0, o, e));
        assert_eq!((code, out.trim()), (EXIT_OK, "q / (1-q)^1"));
        let (_, out, _) = capture(|o, e| cmd_closed_form(2, 1, o, e));
        assert_eq!(out.trim(), "q / (1-q)^2");
        let (_, out, _) = capture(|o, e| cmd_closed_form(3, 0, o, e));
        assert_eq!(out.trim(), "(2q - q^2) / (1-q)^2");
        assert_eq!(capture(|o, e| cmd_closed_form(2, 13, o, e)).0, EXIT_USAGE);
        assert_eq!(capture(|o, e| cmd_closed_form(2, -1, o, e)).0, EXIT_USAGE);
        assert_eq!(capture(|o, e| cmd_closed_form(1, 0, o, e)).0, EXIT_USAGE);
    }

    #[test]
    fn limit_rows() {
        let (code, out, _) = capture(|o, e| cmd_limit(3, Format::Csv, o, e));
        assert_eq!(code, EXIT_OK);
        let rows: Vec<Vec<f64>> = out
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 2);
        assert!((rows[0][1] - 1.224745).abs() < 1e-6 && (rows[0][3] - 0.224745).abs() < 1e-6);
        assert!((rows[1][1] - 1.581139).abs() < 1e-6 && (rows[1][3] - 0.081139).abs() < 1e-6);
        assert_eq!(
            capture(|o, e| cmd_limit(1, Format::Csv, o, e)).0,
            EXIT_USAGE
        );
    }

    #[test]
    fn fast_verification_passes_and_detects_faults() {
        let clean = run_verify(1e-12, Level::Fast, None);
        let failed: Vec<_> = clean.checks.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        let faulty = run_verify(1e-12, Level::Fast, Some(1e-3));
        assert!(!faulty.passed);
        assert!(faulty
            .checks
            .iter()
            .any(|c| c.suite == "cross-path" && !c.passed));
    }
}
