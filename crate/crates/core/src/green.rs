//! Escape-rate (Green) function of the basin of infinity, its derivative
//! `g = ∂G/∂z`, the limit quadratic differential `-2g² dz²`, and
//! precritical sampling.
//!
//! `G(z) = lim log⁺|f^n(z)| / d^n` satisfies `G(f(z)) = d·G(z)`; it is the
//! primary correctness oracle for everything here. `g` is recovered from
//! the stabilized ratio `u_m = (f^m)'(z) / (d^m f^m(z)) → 2g(z)`.

use crate::error::{Error, Result};
use crate::par;
use crate::poly::{CriticalPoint, Poly};
use crate::region::Region;
use crate::scaled::{eval_poly_scaled, scaled_ratio_to_complex, ScaledComplex};
use num_complex::Complex64;

/// Default refinement tolerance for Green evaluations.
pub const DEFAULT_TOL: f64 = 1e-13;
/// Default pre-escape iteration budget.
pub const DEFAULT_MAX_ITER: u32 = 2000;
/// Cap on the number of precritical points produced by [`precrit_sample`].
pub const PRECRIT_CAP: f64 = 1e5;

/// Result of a Green evaluation at one point. A non-escaping orbit
/// reports `green = 0`, `dgreen = 0`. Grid sweeps store per-node failures
/// in place as non-escaped sentinels with `error_estimate = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEval {
    pub green: f64,
    pub dgreen: Complex64,
    pub escaped: bool,
    pub iterations: u32,
    pub error_estimate: f64,
}

impl GreenEval {
    fn not_escaped(iterations: u32) -> Self {
        GreenEval {
            green: 0.0,
            dgreen: Complex64::new(0.0, 0.0),
            escaped: false,
            iterations,
            error_estimate: 0.0,
        }
    }

    /// Sentinel used by grid sweeps for per-node failures.
    pub fn failure() -> Self {
        GreenEval {
            green: 0.0,
            dgreen: Complex64::new(0.0, 0.0),
            escaped: false,
            iterations: 0,
            error_estimate: f64::INFINITY,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.error_estimate.is_infinite()
    }
}

/// Limit of the normalized iterate Schwarzians at `z`: `-2 g(z)²` on the
/// basin of infinity, `0` (with `escaped = false`) on bounded components.
#[derive(Debug, Clone, Copy)]
pub struct SchwarzianLimit {
    pub value: Complex64,
    pub escaped: bool,
}

/// Radius beyond which the orbit provably doubles in modulus each step:
/// `R = max(1, (2 + Σ_{i<d} |a_i|) / |a_d|)`.
pub fn escape_radius(f: &Poly) -> Result<f64> {
    let d = f.degree();
    if d < 2 {
        return Err(Error::Domain("escape radius needs degree >= 2".into()));
    }
    let tail: f64 = f.coeffs()[..d].iter().map(|c| c.norm()).sum();
    Ok(((2.0 + tail) / f.leading().norm()).max(1.0))
}

/// Evaluate the escape rate and its derivative at `z`.
///
/// Iterates until `|w| > escape_radius` or `max_iter`. After escape the
/// value is refined with `d^{-(k+1)} log|w_{k+1}/w_k^d|` corrections until
/// the last term drops below `tol`; the orbit switches to a logarithmic
/// carrier once `|w|` outgrows the comfortable double range. `dgreen`
/// comes from the ratio recurrence `u_{m+1} = u_m · w_m f'(w_m)/(d f(w_m))`
/// run after escape until it stabilizes to relative `tol`.
pub fn green_eval(f: &Poly, z: Complex64, tol: f64, max_iter: u32) -> Result<GreenEval> {
    let d = f.degree();
    if d < 2 {
        return Err(Error::Domain("escape dynamics need degree >= 2".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let radius = escape_radius(f)?;
    let df = f.derivative();
    let dd = d as f64;

    // pre-escape phase: plain orbit, scaled derivative product
    let mut w = z;
    let mut deriv = ScaledComplex::ONE;
    let mut escape_step = None;
    for k in 0..=max_iter {
        if w.norm() > radius {
            escape_step = Some(k);
            break;
        }
        if k == max_iter {
            break;
        }
        deriv = deriv.mul(eval_poly_scaled(&df, ScaledComplex::from_complex(w)));
        w = f.eval(w);
    }
    let n_escape = match escape_step {
        Some(k) => k,
        None => return Ok(GreenEval::not_escaped(max_iter)),
    };

    // u at the escape step, from the exact scaled pair
    let dn = ScaledComplex::from_f64(dd).powi(n_escape);
    let mut u = scaled_ratio_to_complex(deriv, dn.mul(ScaledComplex::from_complex(w)))?;

    // post-escape refinement. While |w| is comfortably representable the
    // orbit is advanced directly; beyond the switch the carrier is
    // λ = log w and the correction series is built from v = 1/w.
    let switch = 10f64.powf((250.0 / d as f64).min(50.0));
    let lead = f.leading();
    let log_lead = lead.ln();

    let mut green = w.norm().ln() / dd.powi(n_escape as i32);
    let mut lambda = w.ln();
    let mut log_form = w.norm() > switch;
    let mut g_done = false;
    let mut u_done = false;
    let mut last_term = f64::INFINITY;

    let mut k = n_escape;
    while k < n_escape + max_iter.max(64) {
        let scale = dd.powi(-(k as i32 + 1));
        if !log_form {
            let w_next = f.eval(w);
            // correction log|w_{k+1} / (a_d w_k^d)| + log|a_d|
            let mut monomial = lead;
            for _ in 0..d {
                monomial *= w;
            }
            let corr = (w_next / monomial).ln() + log_lead;
            if !g_done {
                let term = scale * corr.re;
                green += term;
                last_term = term.abs();
                if last_term < tol {
                    g_done = true;
                }
            }
            if !u_done {
                let u_next = u * (w * df.eval(w)) / (dd * w_next);
                if (u_next - u).norm() <= tol * u.norm() {
                    u = u_next;
                    u_done = true;
                } else {
                    u = u_next;
                }
            }
            w = w_next;
            lambda = w.ln();
            if w.norm() > switch {
                log_form = true;
            }
        } else {
            let v = (-lambda).exp();
            // c(v) = Σ_{j≥1} (a_{d-j}/a_d) v^j, the relative defect of the
            // leading monomial
            let mut c = Complex64::new(0.0, 0.0);
            let mut vp = Complex64::new(1.0, 0.0);
            for j in 1..=d {
                vp *= v;
                c += f.coeffs()[d - j] / lead * vp;
            }
            let log1p = (Complex64::new(1.0, 0.0) + c).ln();
            if !g_done {
                let term = scale * (log_lead + log1p).re;
                green += term;
                last_term = term.abs();
                if last_term < tol {
                    g_done = true;
                }
            }
            if !u_done {
                // w f'(w)/(d f(w)) rewritten in powers of v = 1/w
                let mut num = dd * lead;
                let mut den = lead;
                let mut vp = Complex64::new(1.0, 0.0);
                for j in 1..=d {
                    vp *= v;
                    num += (d - j) as f64 * f.coeffs()[d - j] * vp;
                    den += f.coeffs()[d - j] * vp;
                }
                let u_next = u * num / (dd * den);
                if (u_next - u).norm() <= tol * u.norm() {
                    u = u_next;
                    u_done = true;
                } else {
                    u = u_next;
                }
            }
            lambda = dd * lambda + log_lead + log1p;
        }
        k += 1;
        if g_done && u_done {
            break;
        }
    }
    if !u_done && !(u.norm() == 0.0) {
        return Err(Error::Numeric(format!(
            "derivative ratio failed to stabilize within {max_iter} refinement steps"
        )));
    }
    Ok(GreenEval {
        green,
        dgreen: u / 2.0,
        escaped: true,
        iterations: n_escape,
        error_estimate: if last_term.is_finite() { last_term } else { 0.0 },
    })
}

/// `-2 (∂G/∂z)²` at `z`; zero with `escaped = false` on bounded Fatou
/// components.
pub fn schwarzian_limit(f: &Poly, z: Complex64) -> Result<SchwarzianLimit> {
    let ge = green_eval(f, z, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    if ge.escaped {
        Ok(SchwarzianLimit {
            value: -2.0 * ge.dgreen * ge.dgreen,
            escaped: true,
        })
    } else {
        Ok(SchwarzianLimit {
            value: Complex64::new(0.0, 0.0),
            escaped: false,
        })
    }
}

/// Green evaluation at every node of the region grid (inclusive
/// endpoints), row-major `iy * nx + ix`. Per-node failures become
/// [`GreenEval::failure`] sentinels; the sweep never aborts. Results are
/// identical for any thread count.
pub fn green_grid(f: &Poly, region: &Region, tol: f64) -> Vec<GreenEval> {
    let nx = region.nx;
    par::map_indexed(region.node_count(), move |idx| {
        let (ix, iy) = (idx % nx, idx / nx);
        green_eval(f, region.node(ix, iy), tol, DEFAULT_MAX_ITER).unwrap_or_else(|_| GreenEval::failure())
    })
}

/// Sequential twin of [`green_grid`]; reference path for the determinism
/// tests and benchmarks.
pub fn green_grid_serial(f: &Poly, region: &Region, tol: f64) -> Vec<GreenEval> {
    let nx = region.nx;
    par::map_indexed_serial(region.node_count(), move |idx| {
        let (ix, iy) = (idx % nx, idx / nx);
        green_eval(f, region.node(ix, iy), tol, DEFAULT_MAX_ITER).unwrap_or_else(|_| GreenEval::failure())
    })
}

/// Like [`green_grid`] but sampling cell centers (`nx × ny` cells),
/// the pixel convention of renderers.
pub fn green_grid_cells(f: &Poly, region: &Region, tol: f64) -> Vec<GreenEval> {
    let nx = region.nx;
    par::map_indexed(region.nx * region.ny, move |idx| {
        let (ix, iy) = (idx % nx, idx / nx);
        green_eval(f, region.cell_center(ix, iy), tol, DEFAULT_MAX_ITER)
            .unwrap_or_else(|_| GreenEval::failure())
    })
}

/// All points of `∪_{j≤depth} f^{-j}(Crit(f))`, deduplicated within
/// `1e-10`. The expansion is capped at [`PRECRIT_CAP`] points.
pub fn precrit_sample(f: &Poly, depth: u32) -> Result<Vec<Complex64>> {
    let d = f.degree();
    if d < 2 {
        return Err(Error::Domain("precritical sampling needs degree >= 2".into()));
    }
    let bound = (d as f64).powi(depth as i32) * (d - 1) as f64;
    if bound > PRECRIT_CAP {
        return Err(Error::Capacity(format!(
            "precritical expansion of depth {depth} would exceed {PRECRIT_CAP} points"
        )));
    }
    let mut points: Vec<Complex64> = f
        .critical_points()?
        .iter()
        .map(|cp| cp.location)
        .collect();
    let mut frontier = points.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for &p in &frontier {
            for (q, _) in f.preimages(p, crate::poly::DEFAULT_ROOT_TOL)? {
                next.push(q);
            }
        }
        points.extend_from_slice(&next);
        frontier = next;
    }
    Ok(dedup_points(points, 1e-10))
}

fn dedup_points(mut points: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    points.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<Complex64> = Vec::with_capacity(points.len());
    for p in points {
        let dup = out
            .iter()
            .rev()
            .take_while(|q| (p.re - q.re).abs() <= tol)
            .any(|q| (p - q).norm() <= tol);
        if !dup {
            out.push(p);
        }
    }
    out
}

/// Critical points of `f` with `green_level` filled from the escape rate.
pub fn critical_points_with_green(f: &Poly, tol: f64, max_iter: u32) -> Result<Vec<CriticalPoint>> {
    let mut crits = f.critical_points()?;
    for cp in &mut crits {
        let ge = green_eval(f, cp.location, tol, max_iter)?;
        cp.green_level = ge.green;
    }
    Ok(crits)
}
