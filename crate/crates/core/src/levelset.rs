//! Level curves of the escape rate and the annulus invariants of the
//! induced tree structure on the basin of infinity.
//!
//! A level query marches the squares of a Green grid, chains the segments
//! into closed polylines, Newton-polishes every vertex onto the exact
//! level, and measures circumferences in the flat metric `√2|∂G||dz|`.

use crate::error::{Error, Result};
use crate::green::{critical_points_with_green, green_eval, green_grid, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::metric::{do_curve_length, Polyline};
use crate::poly::{CriticalPoint, Poly};
use crate::region::Region;
use num_complex::Complex64;

/// Queries closer than this to a critical level (or any of its `d^m`
/// rescalings) are rejected: those level sets are singular figure-eights.
pub const CRITICAL_LEVEL_GUARD: f64 = 1e-6;

/// Vertices are polished until `|G - level|` drops below this.
const NEWTON_TARGET: f64 = 1e-10;
const NEWTON_MAX_STEPS: usize = 5;

/// One connected component of `{G = level}`: a closed polyline with its
/// flat-metric circumference, the critical points it encloses (indices
/// into [`critical_points_with_green`] order), and the local mapping
/// degree `1 + Σ multiplicities` of enclosed critical points below the
/// level.
#[derive(Debug, Clone)]
pub struct LevelComponent {
    pub level: f64,
    pub vertices: Vec<Complex64>,
    pub circumference_do: f64,
    pub enclosed_critical: Vec<usize>,
    pub local_degree: u32,
}

/// Annulus invariants at a query level: the level itself, the G-extent
/// between the nearest singular levels below and above (`∞` when the
/// polynomial has no escaping critical point), the flat circumference and
/// the local degree.
#[derive(Debug, Clone, Copy)]
pub struct AnnulusRecord {
    pub level: f64,
    pub height: f64,
    pub circumference: f64,
    pub local_degree: u32,
}

/// Extract the components of `{G_f = level}` inside `region`, using the
/// region's `nx × ny` node grid.
pub fn level_components(f: &Poly, level: f64, region: &Region) -> Result<Vec<LevelComponent>> {
    if !(level > 0.0) {
        return Err(Error::Domain("level must be positive".into()));
    }
    let crits = critical_points_with_green(f, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    reject_near_critical_level(f.degree(), &crits, level)?;

    let grid = green_grid(f, region, DEFAULT_TOL);
    let values: Vec<f64> = grid.iter().map(|g| g.green).collect();
    let raw = march_squares(&values, region, level)?;

    let mut components = Vec::new();
    for polyline in raw {
        let refined = refine_component(f, level, polyline, region)?;
        components.push(component_invariants(f, level, refined, &crits)?);
    }
    // deterministic order: by centroid
    components.sort_by(|a, b| {
        let ca = centroid(&a.vertices);
        let cb = centroid(&b.vertices);
        (ca.re, ca.im)
            .partial_cmp(&(cb.re, cb.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(components)
}

/// Annulus records for every component at the query level.
pub fn annulus_invariants(f: &Poly, level: f64, region: &Region) -> Result<Vec<AnnulusRecord>> {
    let crits = critical_points_with_green(f, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let components = level_components(f, level, region)?;
    let height = annulus_height(f.degree(), &crits, level);
    Ok(components
        .iter()
        .map(|c| AnnulusRecord {
            level,
            height,
            circumference: c.circumference_do,
            local_degree: c.local_degree,
        })
        .collect())
}

fn centroid(vertices: &[Complex64]) -> Complex64 {
    vertices.iter().sum::<Complex64>() / vertices.len() as f64
}

fn reject_near_critical_level(d: usize, crits: &[CriticalPoint], level: f64) -> Result<()> {
    for cp in crits {
        if cp.green_level <= 0.0 {
            continue;
        }
        // nearest element of {d^m · green_level} to the query
        let ratio = level / cp.green_level;
        let m = ratio.log(d as f64).round() as i32;
        for mm in [m - 1, m, m + 1] {
            let lvl = cp.green_level * (d as f64).powi(mm);
            if (lvl - level).abs() <= CRITICAL_LEVEL_GUARD * level.max(1.0) {
                return Err(Error::Domain(format!(
                    "level {level} is within the guard of singular level {lvl}"
                )));
            }
        }
    }
    Ok(())
}

/// G-extent of the annulus containing `level`: distance between the
/// nearest singular levels below and above. Infinite when no critical
/// point escapes.
fn annulus_height(d: usize, crits: &[CriticalPoint], level: f64) -> f64 {
    let mut below = f64::NEG_INFINITY;
    let mut above = f64::INFINITY;
    let mut any = false;
    for cp in crits {
        if cp.green_level <= 0.0 {
            continue;
        }
        any = true;
        let mut lvl = cp.green_level;
        while lvl >= level {
            lvl /= d as f64;
        }
        below = below.max(lvl);
        above = above.min(lvl * d as f64);
    }
    if !any {
        return f64::INFINITY;
    }
    above - below
}

// ---- marching squares ----------------------------------------------------

/// Key of a grid edge carrying one contour crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// Between nodes (ix, iy) and (ix+1, iy).
    H(usize, usize),
    /// Between nodes (ix, iy) and (ix, iy+1).
    V(usize, usize),
}

fn march_squares(values: &[f64], region: &Region, level: f64) -> Result<Vec<Vec<Complex64>>> {
    let (nx, ny) = (region.nx, region.ny);
    let at = |ix: usize, iy: usize| values[iy * nx + ix];
    let inside = |ix: usize, iy: usize| at(ix, iy) < level;

    let cross = |a: f64, b: f64| (level - a) / (b - a);
    let point_h = |ix: usize, iy: usize| {
        let t = cross(at(ix, iy), at(ix + 1, iy));
        region.node(ix, iy) + Complex64::new(t * region.dx_node(), 0.0)
    };
    let point_v = |ix: usize, iy: usize| {
        let t = cross(at(ix, iy), at(ix, iy + 1));
        region.node(ix, iy) + Complex64::new(0.0, t * region.dy_node())
    };

    // collect segments as unordered pairs of edge keys
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let code = (inside(ix, iy) as u8)
                | (inside(ix + 1, iy) as u8) << 1
                | (inside(ix + 1, iy + 1) as u8) << 2
                | (inside(ix, iy + 1) as u8) << 3;
            let bottom = EdgeKey::H(ix, iy);
            let top = EdgeKey::H(ix, iy + 1);
            let left = EdgeKey::V(ix, iy);
            let right = EdgeKey::V(ix + 1, iy);
            match code {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 | 10 => {
                    // saddle: disambiguate with the cell-center average
                    let center = 0.25 * (at(ix, iy) + at(ix + 1, iy) + at(ix, iy + 1) + at(ix + 1, iy + 1));
                    let center_inside = center < level;
                    let pairs_joined = (code == 5) == center_inside;
                    if pairs_joined {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((bottom, right));
                        segments.push((left, top));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // adjacency: every edge key should meet exactly two segments on a
    // closed contour, one on an open contour hitting the boundary
    let mut adjacency: std::collections::HashMap<EdgeKey, Vec<usize>> = Default::default();
    for (i, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(i);
        adjacency.entry(*b).or_default().push(i);
    }

    let edge_point = |key: EdgeKey| match key {
        EdgeKey::H(ix, iy) => point_h(ix, iy),
        EdgeKey::V(ix, iy) => point_v(ix, iy),
    };

    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first_key, mut cur_key) = segments[start];
        let mut chain = vec![first_key, cur_key];
        loop {
            let next = adjacency[&cur_key]
                .iter()
                .copied()
                .find(|&s| !used[s]);
            match next {
                Some(s) => {
                    used[s] = true;
                    let (a, b) = segments[s];
                    cur_key = if a == cur_key { b } else { a };
                    chain.push(cur_key);
                }
                None => {
                    if cur_key == first_key {
                        chain.pop(); // closing key duplicates the first
                        break;
                    }
                    return Err(Error::RegionTooSmall(format!(
                        "open level curve reaches the region boundary near {}",
                        edge_point(cur_key)
                    )));
                }
            }
        }
        if chain.len() >= 3 {
            loops.push(chain.into_iter().map(edge_point).collect());
        }
    }
    if loops.is_empty() {
        return Err(Error::Domain(
            "level set not found inside the region".into(),
        ));
    }
    Ok(loops)
}

// ---- refinement and invariants --------------------------------------------

/// Newton-polish a vertex onto the level curve:
/// `Δz = (level − G)·conj(2g)/(4|g|²)` (the gradient step of G).
fn polish_vertex(f: &Poly, level: f64, z: Complex64, max_step: f64) -> Result<Complex64> {
    let mut z = z;
    for _ in 0..NEWTON_MAX_STEPS {
        let ge = green_eval(f, z, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        if !ge.escaped {
            break;
        }
        if (ge.green - level).abs() < NEWTON_TARGET {
            return Ok(z);
        }
        let g2 = 2.0 * ge.dgreen;
        let denom = g2.norm_sqr();
        if denom == 0.0 {
            break;
        }
        let mut step = (level - ge.green) * g2.conj() / denom;
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        z += step;
    }
    Ok(z)
}

fn refine_component(
    f: &Poly,
    level: f64,
    vertices: Vec<Complex64>,
    region: &Region,
) -> Result<Vec<Complex64>> {
    let max_step = region.dx_node().hypot(region.dy_node());
    let mut polished = Vec::with_capacity(vertices.len());
    for z in vertices {
        polished.push(polish_vertex(f, level, z, max_step)?);
    }
    // one refinement pass: insert and polish midpoints, halving the
    // chord error of the circumference
    let n = polished.len();
    let mut refined = Vec::with_capacity(2 * n);
    for k in 0..n {
        let a = polished[k];
        let b = polished[(k + 1) % n];
        refined.push(a);
        refined.push(polish_vertex(f, level, 0.5 * (a + b), max_step)?);
    }
    refined.dedup_by(|a, b| (*a - *b).norm_sqr() == 0.0);
    while refined.len() > 1 && (refined[0] - *refined.last().unwrap()).norm_sqr() == 0.0 {
        refined.pop();
    }
    Ok(refined)
}

/// Winding number of a closed polyline around `p`.
fn winding_number(vertices: &[Complex64], p: Complex64) -> i32 {
    let mut total = 0.0;
    let n = vertices.len();
    for k in 0..n {
        let a = vertices[k] - p;
        let b = vertices[(k + 1) % n] - p;
        total += (b / a).arg();
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i32
}

fn component_invariants(
    f: &Poly,
    level: f64,
    vertices: Vec<Complex64>,
    crits: &[CriticalPoint],
) -> Result<LevelComponent> {
    let polyline = Polyline::new(vertices.clone(), true)?;
    let circumference_do = do_curve_length(f, &polyline)?;
    let mut enclosed = Vec::new();
    let mut local_degree = 1u32;
    for (j, cp) in crits.iter().enumerate() {
        if winding_number(&vertices, cp.location) != 0 {
            enclosed.push(j);
            if cp.green_level < level {
                local_degree += cp.multiplicity as u32;
            }
        }
    }
    Ok(LevelComponent {
        level,
        vertices,
        circumference_do,
        enclosed_critical: enclosed,
        local_degree,
    })
}
