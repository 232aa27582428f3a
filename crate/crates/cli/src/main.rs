//! `schwz` — escape rates, iterate Schwarzians, flat-metric geometry and
//! affine equivalence of complex polynomials, from the command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numeric failure,
//! 3 domain error (pole, non-escaping or precritical input, singular
//! level). Errors print one machine-parseable line to stderr.

mod export;
mod render;

use clap::{Args, Parser, Subcommand};
use schwz_core::equiv::{iterate_equivalent, schwarzian_equivalent, EquivalenceResult};
use schwz_core::error::Error;
use schwz_core::green::{green_eval, green_grid, schwarzian_limit, DEFAULT_MAX_ITER, DEFAULT_TOL};
use schwz_core::levelset::{annulus_invariants, level_components};
use schwz_core::metric::{
    convergence_table, cylinder_circumference, foliation_direction, l_half_distance, QdSampler,
};
use schwz_core::poly::{parse_complex, parse_poly};
use schwz_core::region::Region;
use schwz_core::schwarzian::{
    laurent_coeff_pole2, nonlinearity_iterate_normalized, nonlinearity_value,
    schwarzian_iterate_normalized, schwarzian_value,
};
use schwz_core::Complex64;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "schwz", version, about = "Dynamics of complex polynomial iteration", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PolyArg {
    /// Polynomial, comma-separated coefficients, leading first
    /// (e.g. "1,0,-6" for z^2-6; literals: R, Ri, R+Si, R-Si)
    #[arg(long)]
    poly: String,
}

#[derive(Args, Clone)]
struct RegionArg {
    /// Query rectangle xmin,xmax,ymin,ymax
    #[arg(long, default_value = "-4,4,-4,4")]
    region: String,
    /// Grid resolution nx[,ny]
    #[arg(long, default_value = "512")]
    res: String,
}

#[derive(Args, Clone)]
struct OutArg {
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Output format for tables
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Pointwise Schwarzian S_f(z), or S_{f^n}(z)/d^{2n} with --n
    Schwarzian {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        z: String,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Pointwise nonlinearity N_f(z), or N_{f^n}(z)/d^n with --n
    Nonlinearity {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        z: String,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Escape rate at one point, or a grid export with --region/--res
    Green {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        z: Option<String>,
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        res: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<u32>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Limit of the normalized iterate Schwarzians, -2 (dG/dz)^2
    Limit {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        z: String,
    },
    /// Convergence table over a region for a range of iterates
    Converge {
        #[command(flatten)]
        poly: PolyArg,
        #[command(flatten)]
        region: RegionArg,
        /// Iterate range lo..hi (or a single n)
        #[arg(long)]
        n: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Double-pole coefficient of S_f at a critical point
    Laurent {
        #[command(flatten)]
        poly: PolyArg,
        /// The critical point
        #[arg(long)]
        z: String,
        /// Contour radius (default: half the gap to the next critical point)
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Components of the level curve {G = level}
    Level {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        level: f64,
        #[command(flatten)]
        region: RegionArg,
    },
    /// Annulus invariants at a level
    Annuli {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        level: f64,
        #[command(flatten)]
        region: RegionArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Total flat-metric circumference of a level set
    Flux {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        level: f64,
        #[command(flatten)]
        region: RegionArg,
    },
    /// Flat-cylinder circumference at a critical point of order k
    Cylinder {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 0)]
        n: u32,
    },
    /// L^(1/2) distance between the iterate and limit differentials
    Lhalf {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        region: RegionArg,
    },
    /// Affine equivalence of two polynomials
    Equiv {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        poly2: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Affine equivalence of the n-th iterates
    EquivIter {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        poly2: String,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Banded escape-rate rendering to binary PPM
    Render {
        #[command(flatten)]
        poly: PolyArg,
        #[command(flatten)]
        region: RegionArg,
        #[arg(long, default_value_t = 6)]
        bands: u32,
        /// Level curves to overlay, comma-separated
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Foliation direction of the limit differential at z, with an
    /// optional short Euler trace (--n steps of size --step)
    Trajectory {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        z: String,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let line = e.to_string();
            let first = line.lines().next().unwrap_or("bad arguments");
            eprintln!("usage-error: {first}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = classify(&err);
            eprintln!("{kind}: {err}");
            ExitCode::from(code)
        }
    }
}

enum CliError {
    Core(Error),
    Io(std::io::Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn classify(err: &CliError) -> (u8, &'static str) {
    match err {
        CliError::Usage(_) => (1, "usage-error"),
        CliError::Io(_) => (1, "io-error"),
        CliError::Core(core) => match core {
            Error::Parse(_) | Error::Capacity(_) => (1, "usage-error"),
            Error::Numeric(_) => (2, "numeric-error"),
            Error::Pole { .. } | Error::Domain(_) | Error::RegionTooSmall(_) => (3, "domain-error"),
        },
    }
}

type CliResult = std::result::Result<(), CliError>;

fn parse_region(region: &str, res: &str) -> std::result::Result<Region, CliError> {
    let parts: Vec<&str> = region.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "--region expects xmin,xmax,ymin,ymax, got '{region}'"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("unparseable --region '{region}'")))?;
    let rparts: Vec<&str> = res.split(',').collect();
    let nx: usize = rparts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("unparseable --res '{res}'")))?;
    let ny: usize = if rparts.len() > 1 {
        rparts[1]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("unparseable --res '{res}'")))?
    } else {
        nx
    };
    Ok(Region::new(nums[0], nums[1], nums[2], nums[3], nx, ny)?)
}

fn parse_z(text: &str) -> std::result::Result<Complex64, CliError> {
    Ok(parse_complex(text)?)
}

fn parse_n_range(text: &str) -> std::result::Result<std::ops::RangeInclusive<u32>, CliError> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad --n range '{text}'")))?;
        let hi: u32 = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| CliError::Usage(format!("bad --n range '{text}'")))?;
        Ok(lo..=hi)
    } else {
        let n: u32 = text
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad --n '{text}'")))?;
        Ok(n..=n)
    }
}

fn emit(out: &Option<std::path::PathBuf>, content: &[u8]) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => std::io::stdout().write_all(content)?,
    }
    Ok(())
}

fn complex_line(v: Complex64) -> String {
    format!("{},{}\n", export::fmt_f64(v.re), export::fmt_f64(v.im))
}

fn equivalence_line(r: &EquivalenceResult) -> String {
    match (&r.equivalent, &r.witness) {
        (true, Some(w)) => format!(
            "equivalent,{},{},{},{},{}\n",
            export::fmt_f64(w.a.re),
            export::fmt_f64(w.a.im),
            export::fmt_f64(w.b.re),
            export::fmt_f64(w.b.im),
            export::fmt_f64(r.residual)
        ),
        _ => format!("not-equivalent,{}\n", export::fmt_f64(r.residual)),
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Schwarzian { poly, z, n } => {
            let f = parse_poly(&poly.poly)?;
            let z = parse_z(&z)?;
            let v = match n {
                None | Some(0) => schwarzian_value(&f, z)?,
                Some(n) => schwarzian_iterate_normalized(&f, n, z)?.value,
            };
            print!("{}", complex_line(v));
            Ok(())
        }
        Command::Nonlinearity { poly, z, n } => {
            let f = parse_poly(&poly.poly)?;
            let z = parse_z(&z)?;
            let v = match n {
                None | Some(0) => nonlinearity_value(&f, z)?,
                Some(n) => nonlinearity_iterate_normalized(&f, n, z)?,
            };
            print!("{}", complex_line(v));
            Ok(())
        }
        Command::Green {
            poly,
            z,
            region,
            res,
            tol,
            max_iter,
            out,
        } => {
            let f = parse_poly(&poly.poly)?;
            let tol = tol.unwrap_or(DEFAULT_TOL);
            let max_iter = max_iter.unwrap_or(DEFAULT_MAX_ITER);
            match (z, region) {
                (Some(z), None) => {
                    let ge = green_eval(&f, parse_z(&z)?, tol, max_iter)?;
                    println!(
                        "{},{},{},{},{},{}",
                        export::fmt_f64(ge.green),
                        export::fmt_f64(ge.dgreen.re),
                        export::fmt_f64(ge.dgreen.im),
                        ge.escaped,
                        ge.iterations,
                        export::fmt_f64(ge.error_estimate)
                    );
                    Ok(())
                }
                (None, Some(region)) => {
                    let region = parse_region(&region, res.as_deref().unwrap_or("512"))?;
                    let grid = green_grid(&f, &region, tol);
                    let content = match out.format.as_str() {
                        "csv" => export::green_grid_csv(&grid, &region),
                        "json" => export::green_grid_json(&grid, &region),
                        other => {
                            return Err(CliError::Usage(format!(
                                "--format '{other}' not supported for green grids"
                            )))
                        }
                    };
                    emit(&out.out, content.as_bytes())
                }
                _ => Err(CliError::Usage(
                    "green needs exactly one of --z or --region".into(),
                )),
            }
        }
        Command::Limit { poly, z } => {
            let f = parse_poly(&poly.poly)?;
            let lim = schwarzian_limit(&f, parse_z(&z)?)?;
            if !lim.escaped {
                return Err(CliError::Core(Error::Domain(
                    "point does not escape; the limit is 0 on bounded components".into(),
                )));
            }
            print!("{}", complex_line(lim.value));
            Ok(())
        }
        Command::Converge {
            poly,
            region,
            n,
            out,
        } => {
            let f = parse_poly(&poly.poly)?;
            let reg = parse_region(&region.region, &region.res)?;
            let rows = convergence_table(&f, &reg, parse_n_range(&n)?)?;
            let content = match out.format.as_str() {
                "csv" => export::convergence_csv(&rows),
                "json" => export::convergence_json(&rows),
                other => {
                    return Err(CliError::Usage(format!(
                        "--format '{other}' not supported for tables"
                    )))
                }
            };
            emit(&out.out, content.as_bytes())
        }
        Command::Laurent { poly, z, radius } => {
            let f = parse_poly(&poly.poly)?;
            let v = laurent_coeff_pole2(&f, parse_z(&z)?, radius)?;
            print!("{}", complex_line(v));
            Ok(())
        }
        Command::Level {
            poly,
            level,
            region,
        } => {
            let f = parse_poly(&poly.poly)?;
            let reg = parse_region(&region.region, &region.res)?;
            let comps = level_components(&f, level, &reg)?;
            let mut text = String::from("level,circumference_do,local_degree,enclosed,vertices\n");
            for c in &comps {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    export::fmt_f64(c.level),
                    export::fmt_f64(c.circumference_do),
                    c.local_degree,
                    c.enclosed_critical.len(),
                    c.vertices.len()
                ));
            }
            print!("{text}");
            Ok(())
        }
        Command::Annuli {
            poly,
            level,
            region,
            out,
        } => {
            let f = parse_poly(&poly.poly)?;
            let reg = parse_region(&region.region, &region.res)?;
            let recs = annulus_invariants(&f, level, &reg)?;
            let content = match out.format.as_str() {
                "csv" => export::annuli_csv(&recs),
                "json" => export::annuli_json(&recs),
                other => {
                    return Err(CliError::Usage(format!(
                        "--format '{other}' not supported for annuli"
                    )))
                }
            };
            emit(&out.out, content.as_bytes())
        }
        Command::Flux {
            poly,
            level,
            region,
        } => {
            let f = parse_poly(&poly.poly)?;
            let reg = parse_region(&region.region, &region.res)?;
            let comps = level_components(&f, level, &reg)?;
            let total: f64 = comps.iter().map(|c| c.circumference_do).sum();
            println!("{},{}", export::fmt_f64(total), comps.len());
            Ok(())
        }
        Command::Cylinder { k, degree, n } => {
            if k < 1 || degree < 2 {
                return Err(CliError::Usage(
                    "cylinder needs --k >= 1 and --degree >= 2".into(),
                ));
            }
            println!("{}", export::fmt_f64(cylinder_circumference(k, degree, n)));
            Ok(())
        }
        Command::Lhalf { poly, n, region } => {
            let f = parse_poly(&poly.poly)?;
            let reg = parse_region(&region.region, &region.res)?;
            let r = l_half_distance(&f, n, &reg)?;
            println!(
                "{},{}",
                export::fmt_f64(r.value),
                export::fmt_f64(r.excluded_area)
            );
            Ok(())
        }
        Command::Equiv { poly, poly2, tol } => {
            let f = parse_poly(&poly.poly)?;
            let g = parse_poly(&poly2)?;
            let r = schwarzian_equivalent(&f, &g, tol)?;
            print!("{}", equivalence_line(&r));
            Ok(())
        }
        Command::EquivIter {
            poly,
            poly2,
            n,
            tol,
        } => {
            let f = parse_poly(&poly.poly)?;
            let g = parse_poly(&poly2)?;
            let r = iterate_equivalent(&f, &g, n, tol)?;
            print!("{}", equivalence_line(&r));
            Ok(())
        }
        Command::Render {
            poly,
            region,
            bands,
            levels,
            out,
            tol,
        } => {
            let f = parse_poly(&poly.poly)?;
            let reg = parse_region(&region.region, &region.res)?;
            let levels: Vec<f64> = match levels {
                Some(text) => text
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| CliError::Usage(format!("unparseable --levels '{text}'")))?,
                None => Vec::new(),
            };
            let img =
                render::render_green_ppm(&f, &reg, bands, &levels, tol.unwrap_or(DEFAULT_TOL))?;
            std::fs::write(&out, img.to_ppm())?;
            Ok(())
        }
        Command::Trajectory { poly, z, n, step } => {
            let f = parse_poly(&poly.poly)?;
            let mut z = parse_z(&z)?;
            let q = QdSampler::Limit(&f);
            let mut text = String::new();
            let mut dir_prev: Option<Complex64> = None;
            for _ in 0..=n {
                let mut dir = foliation_direction(&q, z)?;
                // keep the trace from reversing between steps
                if let Some(prev) = dir_prev {
                    if (dir + prev).norm() < (dir - prev).norm() {
                        dir = -dir;
                    }
                }
                text.push_str(&complex_line(if n == 0 { dir } else { z }));
                z += step * dir;
                dir_prev = Some(dir);
            }
            print!("{text}");
            Ok(())
        }
    }
}
