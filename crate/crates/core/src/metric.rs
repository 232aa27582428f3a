//! Lengths and integrals in the conformal metrics of quadratic
//! differentials: the iterate metrics `√|S_{f^n}/d^{2n}| |dz|`, the limit
//! flat metric `√2 |∂G| |dz|`, cylinder circumferences at double poles,
//! L^{1/2} area distances and foliation directions.

use crate::error::{Error, Result};
use crate::green::{green_eval, precrit_sample, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::par;
use crate::poly::Poly;
use crate::region::Region;
use crate::schwarzian::schwarzian_iterate_normalized;
use num_complex::Complex64;

/// Quadrature samples with `|Q|` above this trigger a singularity error.
pub const POLE_GUARD: f64 = 1e30;

/// 5-point Gauss–Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Pointwise sampler of a quadratic differential `Q(z) dz²`.
pub enum QdSampler<'a> {
    /// Limit differential `-2 (∂G_f/∂z)² dz²`; defined on escaping points.
    Limit(&'a Poly),
    /// Normalized iterate differential `(S_{f^n}/d^{2n}) dz²`.
    Iterate { f: &'a Poly, n: u32 },
    /// Caller-provided pointwise function.
    Explicit(&'a (dyn Fn(Complex64) -> Complex64 + Sync)),
}

impl<'a> QdSampler<'a> {
    pub fn q(&self, z: Complex64) -> Result<Complex64> {
        match self {
            QdSampler::Limit(f) => {
                let ge = green_eval(f, z, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
                if !ge.escaped {
                    return Err(Error::Domain(format!("{z} does not escape")));
                }
                Ok(-2.0 * ge.dgreen * ge.dgreen)
            }
            QdSampler::Iterate { f, n } => Ok(schwarzian_iterate_normalized(f, *n, z)?.value),
            QdSampler::Explicit(func) => Ok(func(z)),
        }
    }
}

/// Discretized curve; `closed` appends the segment from the last vertex
/// back to the first. Consecutive vertices must be distinct.
#[derive(Debug, Clone)]
pub struct Polyline {
    pub vertices: Vec<Complex64>,
    pub closed: bool,
}

impl Polyline {
    pub fn new(vertices: Vec<Complex64>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Domain("polyline needs at least two vertices".into()));
        }
        for k in 1..vertices.len() {
            if (vertices[k] - vertices[k - 1]).norm_sqr() == 0.0 {
                return Err(Error::Domain(format!("repeated vertex at index {k}")));
            }
        }
        if closed && (vertices[0] - *vertices.last().unwrap()).norm_sqr() == 0.0 {
            return Err(Error::Domain("closed polyline repeats its first vertex".into()));
        }
        Ok(Polyline { vertices, closed })
    }

    /// Circle of radius `r` around `center` with `segments` vertices,
    /// offset by half a step so no vertex lands on the positive real axis.
    pub fn circle(center: Complex64, r: f64, segments: usize) -> Self {
        let vertices = (0..segments)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / segments as f64;
                center + r * Complex64::new(t.cos(), t.sin())
            })
            .collect();
        Polyline {
            vertices,
            closed: true,
        }
    }

    pub fn segments(&self) -> Vec<(Complex64, Complex64)> {
        let mut out: Vec<(Complex64, Complex64)> = self
            .vertices
            .windows(2)
            .map(|w| (w[0], w[1]))
            .collect();
        if self.closed {
            out.push((*self.vertices.last().unwrap(), self.vertices[0]));
        }
        out
    }
}

/// One row of a convergence table: sup-norm and L^{1/2} distances between
/// the iterate differential at `n` and the limit differential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub sup_error: f64,
    pub l_half_error: f64,
}

/// L^{1/2} quadrature result; cells that failed to evaluate are excluded
/// and their total area reported separately.
#[derive(Debug, Clone, Copy)]
pub struct LHalfResult {
    pub value: f64,
    pub excluded_area: f64,
}

/// Curve length `∫ √|Q| |dz|` by 5-point Gauss–Legendre per segment.
/// Samples beyond [`POLE_GUARD`] raise a singularity error naming the
/// segment's first vertex index.
pub fn qd_curve_length(q: &QdSampler, curve: &Polyline) -> Result<f64> {
    let segments = curve.segments();
    let mut contributions = Vec::with_capacity(segments.len());
    for (idx, (a, b)) in segments.iter().enumerate() {
        let len = (b - a).norm();
        let mut acc = 0.0;
        for (x, wgt) in GL5 {
            let t = 0.5 * (x + 1.0);
            let z = a + (b - a) * t;
            let qv = q.q(z).map_err(|e| match e {
                Error::Pole { .. } => Error::Domain(format!(
                    "singularity near quadrature node of segment {idx}"
                )),
                other => other,
            })?;
            if qv.norm() > POLE_GUARD || !qv.re.is_finite() || !qv.im.is_finite() {
                return Err(Error::Domain(format!(
                    "quadratic differential blows up near vertex {idx}"
                )));
            }
            acc += 0.5 * wgt * qv.norm().sqrt();
        }
        contributions.push(acc * len);
    }
    Ok(par::pairwise_sum(&contributions))
}

/// Length in the flat metric `ds = √2 |∂G_f| |dz|` of the basin of
/// infinity. All curve samples must escape.
pub fn do_curve_length(f: &Poly, curve: &Polyline) -> Result<f64> {
    qd_curve_length(&QdSampler::Limit(f), curve)
}

/// Circumference of the flat cylinder at a critical point of order `k`,
/// under the iterate-`n` normalization: `2π √((k²-1)/2) / d^n`.
pub fn cylinder_circumference(k: u32, d: u32, n: u32) -> f64 {
    assert!(k >= 1 && d >= 2);
    2.0 * std::f64::consts::PI * (((k * k - 1) as f64) / 2.0).sqrt() / (d as f64).powi(n as i32)
}

/// L^{1/2} distance between the iterate and limit differentials over the
/// region: midpoint quadrature of `√|S_{f^n}/d^{2n} + 2g²|` with one 4×
/// subdivision of cells near precritical points (depth `n`).
pub fn l_half_distance(f: &Poly, n: u32, region: &Region) -> Result<LHalfResult> {
    l_half_impl(f, n, region, false)
}

/// Sequential twin of [`l_half_distance`].
pub fn l_half_distance_serial(f: &Poly, n: u32, region: &Region) -> Result<LHalfResult> {
    l_half_impl(f, n, region, true)
}

fn l_half_impl(f: &Poly, n: u32, region: &Region, serial: bool) -> Result<LHalfResult> {
    assert!(n >= 1);
    let precrit = precrit_sample(f, n)?;
    let (dx, dy) = (region.dx_cell(), region.dy_cell());
    let diag = (dx * dx + dy * dy).sqrt();
    let cell_area = dx * dy;
    let ncells = region.nx * region.ny;
    let nx = region.nx;

    let eval_cell = |idx: usize| -> (f64, f64) {
        let (ix, iy) = (idx % nx, idx / nx);
        let center = region.cell_center(ix, iy);
        let near_precrit = precrit.iter().any(|p| (p - center).norm() <= diag);
        if near_precrit {
            // one refinement pass: 4 subcells
            let mut acc = 0.0;
            let mut excluded = 0.0;
            for (sx, sy) in [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)] {
                let z = center + Complex64::new(sx * dx, sy * dy);
                match l_half_integrand(f, n, z) {
                    Some(v) => acc += v * cell_area / 4.0,
                    None => excluded += cell_area / 4.0,
                }
            }
            (acc, excluded)
        } else {
            match l_half_integrand(f, n, center) {
                Some(v) => (v * cell_area, 0.0),
                None => (0.0, cell_area),
            }
        }
    };

    let cells = if serial {
        par::map_indexed_serial(ncells, eval_cell)
    } else {
        par::map_indexed(ncells, eval_cell)
    };
    let values: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let excluded: Vec<f64> = cells.iter().map(|c| c.1).collect();
    Ok(LHalfResult {
        value: par::pairwise_sum(&values),
        excluded_area: par::pairwise_sum(&excluded),
    })
}

fn l_half_integrand(f: &Poly, n: u32, z: Complex64) -> Option<f64> {
    let est = schwarzian_iterate_normalized(f, n, z).ok()?;
    let ge = green_eval(f, z, DEFAULT_TOL, DEFAULT_MAX_ITER).ok()?;
    let gap = est.value + 2.0 * ge.dgreen * ge.dgreen;
    if gap.re.is_finite() && gap.im.is_finite() {
        Some(gap.norm().sqrt())
    } else {
        None
    }
}

/// Per-`n` sup and L^{1/2} errors between the iterate and limit
/// differentials over the region's node grid. Nodes within two cells of a
/// precritical point (depth `n`) are excluded from the sup; failed nodes
/// are excluded and counted.
pub fn convergence_table(
    f: &Poly,
    region: &Region,
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<Vec<ConvergenceRow>> {
    let greens = crate::green::green_grid(f, region, DEFAULT_TOL);
    let nx = region.nx;
    let h = region.dx_node().max(region.dy_node());
    let mut rows = Vec::new();
    for n in n_range {
        let precrit = precrit_sample(f, n)?;
        let sup_values = par::map_indexed(region.node_count(), |idx| {
            let (ix, iy) = (idx % nx, idx / nx);
            let z = region.node(ix, iy);
            let ge = &greens[idx];
            if ge.is_failure() {
                return f64::NAN;
            }
            if precrit.iter().any(|p| (p - z).norm() <= 2.0 * h) {
                return f64::NAN;
            }
            match schwarzian_iterate_normalized(f, n, z) {
                Ok(est) => (est.value + 2.0 * ge.dgreen * ge.dgreen).norm(),
                Err(_) => f64::NAN,
            }
        });
        let sup_error = sup_values
            .iter()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if sup_error == f64::NEG_INFINITY {
            return Err(Error::Domain(
                "no admissible grid nodes for the sup error".into(),
            ));
        }
        let l_half = l_half_distance(f, n, region)?;
        rows.push(ConvergenceRow {
            n,
            sup_error,
            l_half_error: l_half.value,
        });
    }
    Ok(rows)
}

/// Unit vector `v` with `Q(z)·v²` real and positive (the horizontal
/// direction of the foliation), representative chosen with nonnegative
/// real part, ties broken toward nonnegative imaginary part.
pub fn foliation_direction(q: &QdSampler, z: Complex64) -> Result<Complex64> {
    let qv = q.q(z)?;
    if qv.norm_sqr() == 0.0 {
        return Err(Error::Domain(format!("zero of the differential at {z}")));
    }
    if qv.norm() > POLE_GUARD || !qv.re.is_finite() || !qv.im.is_finite() {
        return Err(Error::Domain(format!("pole of the differential at {z}")));
    }
    let mut v = Complex64::from_polar(1.0, -qv.arg() / 2.0);
    // representative with nonnegative real part; treat |re| below the
    // angle rounding floor as the tie and break it toward +im
    if v.re < -1e-12 || (v.re.abs() <= 1e-12 && v.im < 0.0) {
        v = -v;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const SQRT2_PI: f64 = 4.442882938158366;

    #[test]
    fn euclidean_segment_length() {
        let one = |_z: Complex64| Complex64::new(1.0, 0.0);
        let q = QdSampler::Explicit(&one);
        let line = Polyline::new(vec![c(0.0, 0.0), c(3.0, 4.0)], false).unwrap();
        let len = qd_curve_length(&q, &line).unwrap();
        assert!((len - 5.0).abs() < 1e-14);
    }

    #[test]
    fn cylinder_unit_circle() {
        // |Q| = 1/(2|z|²): the circle |z| = 1 has length √2 π; a 2048-gon
        // carries ~4e-6 inscription error
        let qf = |z: Complex64| -1.0 / (2.0 * z * z);
        let q = QdSampler::Explicit(&qf);
        let circle = Polyline::circle(c(0.0, 0.0), 1.0, 2048);
        let len = qd_curve_length(&q, &circle).unwrap();
        assert!((len - SQRT2_PI).abs() < 1e-5, "{len}");
    }

    #[test]
    fn iterate_differential_circle_length() {
        // |S_{f^3}/4³| = 63/(2·64|z|²) on |z| = 1 for f = z²
        let sq = Poly::power(2);
        let q = QdSampler::Iterate { f: &sq, n: 3 };
        let circle = Polyline::circle(c(0.0, 0.0), 1.0, 2048);
        let len = qd_curve_length(&q, &circle).unwrap();
        let expected = (63f64 / 64.0).sqrt() * SQRT2_PI;
        assert!((len - expected).abs() < 1e-5, "{len} vs {expected}");
    }

    #[test]
    fn do_length_power_map() {
        let sq = Poly::power(2);
        let circle = Polyline::circle(c(0.0, 0.0), std::f64::consts::E, 1024);
        let len = do_curve_length(&sq, &circle).unwrap();
        assert!((len - SQRT2_PI).abs() < 1e-4);

        // radial polyline from e to e²: ΔG/√2 = 1/√2
        let e = std::f64::consts::E;
        let verts: Vec<Complex64> = (0..=64)
            .map(|k| c(e + (e * e - e) * k as f64 / 64.0, 0.0))
            .collect();
        let seg = Polyline::new(verts, false).unwrap();
        let len = do_curve_length(&sq, &seg).unwrap();
        assert!((len - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "{len}");
    }

    #[test]
    fn do_length_rejects_bounded_points() {
        let sq = Poly::power(2);
        let seg = Polyline::new(vec![c(0.1, 0.0), c(0.2, 0.0)], false).unwrap();
        assert!(matches!(do_curve_length(&sq, &seg), Err(Error::Domain(_))));
    }

    #[test]
    fn cylinder_circumference_values() {
        assert!((cylinder_circumference(2, 2, 0) - 7.695_298_980_971_256).abs() < 1e-12);
        assert_eq!(cylinder_circumference(1, 3, 0), 0.0);
        assert!((cylinder_circumference(3, 2, 1) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn metric_refinement_converges() {
        // same geometric curve, each segment split in half: only the
        // quadrature refines, the length must be stable to 1e-8 relative
        let sq = Poly::power(2);
        let q = QdSampler::Iterate { f: &sq, n: 2 };
        let coarse = Polyline::circle(c(0.0, 0.0), 1.3, 128);
        let mut split = Vec::new();
        let n = coarse.vertices.len();
        for k in 0..n {
            let a = coarse.vertices[k];
            let b = coarse.vertices[(k + 1) % n];
            split.push(a);
            split.push(0.5 * (a + b));
        }
        let fine = Polyline::new(split, true).unwrap();
        let la = qd_curve_length(&q, &coarse).unwrap();
        let lb = qd_curve_length(&q, &fine).unwrap();
        assert!((la - lb).abs() < 1e-8 * la, "{la} vs {lb}");
    }

    #[test]
    fn foliation_examples() {
        let one = |_z: Complex64| Complex64::new(1.0, 0.0);
        let q = QdSampler::Explicit(&one);
        assert_eq!(foliation_direction(&q, c(5.0, 5.0)).unwrap(), c(1.0, 0.0));

        // horizontal trajectories of -dz²/(2z²) are circles: direction +i at z=1
        let qf = |z: Complex64| -1.0 / (2.0 * z * z);
        let q = QdSampler::Explicit(&qf);
        let v = foliation_direction(&q, c(1.0, 0.0)).unwrap();
        assert!((v - c(0.0, 1.0)).norm() < 1e-12, "{v}");

        let zero = |_z: Complex64| Complex64::new(0.0, 0.0);
        let q = QdSampler::Explicit(&zero);
        assert!(matches!(foliation_direction(&q, c(1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn foliation_follows_level_curves() {
        let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
        let q = QdSampler::Limit(&f);
        for z in [c(3.0, 1.0), c(-2.5, 2.0), c(0.5, 3.0)] {
            let v = foliation_direction(&q, z).unwrap();
            let ge = green_eval(&f, z, 1e-13, 2000).unwrap();
            // ∇G as a complex number is 2·conj(g); tangency means ⟨v, ∇G⟩ = 0
            let grad = 2.0 * ge.dgreen.conj();
            let inner = v.re * grad.re + v.im * grad.im;
            assert!(inner.abs() < 1e-8 * grad.norm(), "inner {inner}");
        }
    }

    #[test]
    fn l_half_power_map_closed_form() {
        // integrand for f = z², n = 3 is 1/(8√2 |z|) on escaping points
        let sq = Poly::power(2);
        let region = Region::new(1.5, 2.5, -0.5, 0.5, 96, 96).unwrap();
        let got = l_half_distance(&sq, 3, &region).unwrap();
        assert_eq!(got.excluded_area, 0.0);

        // brute-force midpoint oracle of the closed form on a finer grid
        let m = 3000usize;
        let mut oracle = 0.0;
        let (dx, dy) = (1.0 / m as f64, 1.0 / m as f64);
        for iy in 0..m {
            for ix in 0..m {
                let x = 1.5 + (ix as f64 + 0.5) * dx;
                let y = -0.5 + (iy as f64 + 0.5) * dy;
                oracle += dx * dy / (8.0 * 2f64.sqrt() * (x * x + y * y).sqrt());
            }
        }
        assert!(
            (got.value - oracle).abs() < 1e-4 * oracle,
            "value {} oracle {}",
            got.value,
            oracle
        );
    }

    #[test]
    fn l_half_deep_iterate_is_small() {
        let sq = Poly::power(2);
        let region = Region::new(40.0, 42.0, 40.0, 42.0, 24, 24).unwrap();
        let got = l_half_distance(&sq, 12, &region).unwrap();
        assert!(got.value < 1e-4, "{}", got.value);
    }

    #[test]
    fn l_half_parallel_matches_serial_bitwise() {
        let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
        let region = Region::square(-3.0, 3.0, 32).unwrap();
        let a = l_half_distance(&f, 3, &region).unwrap();
        let b = l_half_distance_serial(&f, 3, &region).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.excluded_area.to_bits(), b.excluded_area.to_bits());
    }

    #[test]
    fn convergence_table_power_map_rate() {
        let sq = Poly::power(2);
        let region = Region::square(1.5, 2.5, 16).unwrap();
        let rows = convergence_table(&sq, &region, 1..=6).unwrap();
        for pair in rows.windows(2) {
            let ratio = pair[1].sup_error / pair[0].sup_error;
            assert!(
                (ratio - 0.25).abs() < 1e-6,
                "sup error ratio {ratio} should be 1/d²"
            );
        }
    }

    #[test]
    fn cylinder_consistency_near_critical_point() {
        // small circles around a simple critical point approach the
        // cylinder circumference of the iterate metric
        let f = Poly::from_real_descending(&[1.0, 0.0, -3.0, 0.0]); // z³-3z
        let n = 2;
        let q = QdSampler::Iterate { f: &f, n };
        for r in [1e-3, 1e-4] {
            let circle = Polyline::circle(c(1.0, 0.0), r, 192);
            let len = qd_curve_length(&q, &circle).unwrap();
            let expected = cylinder_circumference(2, 3, n);
            assert!(
                (len / expected - 1.0).abs() < 1e-2,
                "r={r}: {len} vs {expected}"
            );
        }
    }
}
