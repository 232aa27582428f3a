//! Affine equivalence of polynomials through their critical multisets.
//!
//! Two polynomials of the same degree are equivalent exactly when an
//! affine map carries the critical set of one onto the critical set of
//! the other, multiplicities included. The decision procedure recovers
//! candidate scales from centered power-sum moments (finitely many `a`
//! with `a^m = μ_m(Q)/μ_m(P)`), then verifies multiset equality under
//! each candidate.

use crate::error::Result;
use crate::poly::{AffineMap, Poly};
use crate::schwarzian::schwarzian_value;
use num_complex::Complex64;

/// Critical points with multiplicities; `total` is the multiplicity sum
/// (degree − 1 for a degree-d source).
#[derive(Debug, Clone)]
pub struct CriticalMultiset {
    pub points: Vec<(Complex64, usize)>,
    pub total: usize,
}

/// Outcome of an equivalence decision. When `equivalent`, `witness` is an
/// affine map carrying the first multiset onto the second and `residual`
/// is the largest matching distance under it.
#[derive(Debug, Clone)]
pub struct EquivalenceResult {
    pub equivalent: bool,
    pub witness: Option<AffineMap>,
    pub residual: f64,
}

impl EquivalenceResult {
    fn no(residual: f64) -> Self {
        EquivalenceResult {
            equivalent: false,
            witness: None,
            residual,
        }
    }
}

/// Clustered roots of `f'` with multiplicities.
pub fn critical_multiset(f: &Poly) -> Result<CriticalMultiset> {
    let crits = f.critical_points()?;
    let points: Vec<(Complex64, usize)> = crits
        .iter()
        .map(|cp| (cp.location, cp.multiplicity))
        .collect();
    let total = points.iter().map(|p| p.1).sum();
    Ok(CriticalMultiset { points, total })
}

fn weighted_centroid(points: &[(Complex64, usize)], total: usize) -> Complex64 {
    points
        .iter()
        .map(|(p, m)| p * *m as f64)
        .sum::<Complex64>()
        / total as f64
}

fn spread(points: &[(Complex64, usize)], center: Complex64) -> f64 {
    points
        .iter()
        .map(|(p, _)| (p - center).norm())
        .fold(0.0, f64::max)
}

/// Centered power-sum moment `Σ m_i (p_i − c)^k`.
fn moment(points: &[(Complex64, usize)], center: Complex64, k: u32) -> Complex64 {
    points
        .iter()
        .map(|(p, m)| (p - center).powu(k) * *m as f64)
        .sum()
}

/// Decide whether an affine map carries `P` onto `Q` as multisets.
pub fn affine_match(p: &CriticalMultiset, q: &CriticalMultiset, tol: f64) -> EquivalenceResult {
    if p.total != q.total || p.points.len() != q.points.len() {
        return EquivalenceResult::no(f64::INFINITY);
    }
    let mut profile_p: Vec<usize> = p.points.iter().map(|x| x.1).collect();
    let mut profile_q: Vec<usize> = q.points.iter().map(|x| x.1).collect();
    profile_p.sort_unstable();
    profile_q.sort_unstable();
    if profile_p != profile_q {
        return EquivalenceResult::no(f64::INFINITY);
    }

    let cp = weighted_centroid(&p.points, p.total);
    let cq = weighted_centroid(&q.points, q.total);
    let sp = spread(&p.points, cp);
    let sq = spread(&q.points, cq);

    if p.points.len() == 1 {
        // single-point multisets: translation witness
        return EquivalenceResult {
            equivalent: true,
            witness: AffineMap::new(Complex64::new(1.0, 0.0), cq - cp).ok(),
            residual: 0.0,
        };
    }

    // smallest k with a usable centered moment of P
    let mut k_scale = None;
    for k in 2..=p.total as u32 {
        let mu = moment(&p.points, cp, k);
        if mu.norm() > 1e-9 * p.total as f64 * sp.powi(k as i32) {
            k_scale = Some((k, mu));
            break;
        }
    }
    let (k, mu_p) = match k_scale {
        Some(x) => x,
        // all centered moments vanish only when all points coincide,
        // which the single-point branch already handled
        None => return EquivalenceResult::no(f64::INFINITY),
    };
    let mu_q = moment(&q.points, cq, k);
    if mu_q.norm() <= 1e-9 * q.total as f64 * sq.powi(k as i32) {
        return EquivalenceResult::no(f64::INFINITY);
    }

    let ratio = mu_q / mu_p;
    let r = ratio.norm().powf(1.0 / k as f64);
    let theta = ratio.arg();
    let match_tol = tol * (1.0 + sq);
    let mut best_residual = f64::INFINITY;
    for j in 0..k {
        let a = Complex64::from_polar(
            r,
            (theta + 2.0 * std::f64::consts::PI * j as f64) / k as f64,
        );
        let mapped: Vec<(Complex64, usize)> = p
            .points
            .iter()
            .map(|(pt, m)| (a * (pt - cp), *m))
            .collect();
        let target: Vec<(Complex64, usize)> =
            q.points.iter().map(|(pt, m)| (pt - cq, *m)).collect();
        if let Some(residual) = multiset_match(&mapped, &target, match_tol) {
            return EquivalenceResult {
                equivalent: true,
                witness: AffineMap::new(a, cq - a * cp).ok(),
                residual,
            };
        }
        // track how close the best candidate came
        if let Some(res) = multiset_match(&mapped, &target, f64::INFINITY) {
            best_residual = best_residual.min(res);
        }
    }
    EquivalenceResult::no(best_residual)
}

/// Match two centered multisets within `tol`; returns the maximal pair
/// distance on success. Greedy nearest matching, with an optimal
/// assignment fallback when the point gap is within 10× the tolerance.
fn multiset_match(
    a: &[(Complex64, usize)],
    b: &[(Complex64, usize)],
    tol: f64,
) -> Option<f64> {
    let min_gap = b
        .iter()
        .enumerate()
        .flat_map(|(i, (p, _))| {
            b.iter()
                .skip(i + 1)
                .map(move |(q, _)| (p - q).norm())
        })
        .fold(f64::INFINITY, f64::min);
    if tol.is_finite() && min_gap < 10.0 * tol {
        return hungarian_match(a, b, tol);
    }

    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for (pa, ma) in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, (pb, mb)) in b.iter().enumerate() {
            if used[j] || mb != ma {
                continue;
            }
            let dist = (pa - pb).norm();
            if best.map_or(true, |(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
        match best {
            Some((j, dist)) if dist <= tol => {
                used[j] = true;
                worst = worst.max(dist);
            }
            Some((_, dist)) if !tol.is_finite() => {
                // residual probe: consume the nearest anyway
                let j = best.unwrap().0;
                used[j] = true;
                worst = worst.max(dist);
            }
            _ => return None,
        }
    }
    Some(worst)
}

/// Minimal-worst-distance assignment for small point sets (O(k³)
/// Hungarian on the distance matrix is overkill at these sizes; a
/// branch-and-bound over permutations within multiplicity classes is
/// exact and fast for k ≤ 16).
fn hungarian_match(
    a: &[(Complex64, usize)],
    b: &[(Complex64, usize)],
    tol: f64,
) -> Option<f64> {
    let n = a.len();
    let mut used = vec![false; n];
    let mut best: Option<f64> = None;
    fn recurse(
        a: &[(Complex64, usize)],
        b: &[(Complex64, usize)],
        used: &mut [bool],
        i: usize,
        worst: f64,
        tol: f64,
        best: &mut Option<f64>,
    ) {
        if let Some(b0) = *best {
            if worst >= b0 {
                return;
            }
        }
        if i == a.len() {
            *best = Some(worst);
            return;
        }
        for j in 0..b.len() {
            if used[j] || b[j].1 != a[i].1 {
                continue;
            }
            let dist = (a[i].0 - b[j].0).norm();
            if dist > tol {
                continue;
            }
            used[j] = true;
            recurse(a, b, used, i + 1, worst.max(dist), tol, best);
            used[j] = false;
        }
    }
    recurse(a, b, &mut used, 0, 0.0, tol, &mut best);
    best
}

/// Decide Schwarzian equivalence of two polynomials: equal degree,
/// affine-matched critical multisets, and a pointwise verification of the
/// pulled-back Schwarzian under the recovered witness.
pub fn schwarzian_equivalent(f: &Poly, g: &Poly, tol: f64) -> Result<EquivalenceResult> {
    if f.degree() != g.degree() || f.degree() < 2 {
        return Ok(EquivalenceResult::no(f64::INFINITY));
    }
    let mp = critical_multiset(f)?;
    let mq = critical_multiset(g)?;
    let result = affine_match(&mp, &mq, tol);
    let witness = match (&result.equivalent, &result.witness) {
        (true, Some(w)) => *w,
        _ => return Ok(result),
    };
    // belt and braces against clustering artifacts: S_f(z) = S_g(A z)·a²
    // at sample points away from the critical sets
    let a2 = witness.a * witness.a;
    let spread = spread(&mp.points, weighted_centroid(&mp.points, mp.total)).max(1.0);
    let mut rng = SplitMix::new(0x0573_a6b1_c44e_92d7);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 20 && attempts < 400 {
        attempts += 1;
        let z = Complex64::new(
            (rng.next_f64() * 2.0 - 1.0) * 2.0 * spread,
            (rng.next_f64() * 2.0 - 1.0) * 2.0 * spread,
        );
        let clear = |pts: &[(Complex64, usize)], w: Complex64| {
            pts.iter().all(|(p, _)| (p - w).norm() > 0.05 * spread)
        };
        if !clear(&mp.points, z) || !clear(&mq.points, witness.apply(z)) {
            continue;
        }
        let sf = schwarzian_value(f, z)?;
        let sg = schwarzian_value(g, witness.apply(z))?;
        let lhs = sf;
        let rhs = sg * a2;
        if (lhs - rhs).norm() > 1e-6 * (1.0 + lhs.norm()) {
            return Ok(EquivalenceResult::no((lhs - rhs).norm()));
        }
        checked += 1;
    }
    Ok(result)
}

/// Decide equivalence of the n-th iterates without composing: the
/// critical set of `f^n` is the union of the backward orbits of `Crit(f)`
/// up to depth `n−1`, multiplicities compounding along the chain.
pub fn iterate_equivalent(f: &Poly, g: &Poly, n: u32, tol: f64) -> Result<EquivalenceResult> {
    if f.degree() != g.degree() || f.degree() < 2 {
        return Ok(EquivalenceResult::no(f64::INFINITY));
    }
    let mp = iterate_critical_multiset(f, n)?;
    let mq = iterate_critical_multiset(g, n)?;
    Ok(affine_match(&mp, &mq, tol))
}

/// Critical multiset of `f^n`, built from iterated preimages.
pub fn iterate_critical_multiset(f: &Poly, n: u32) -> Result<CriticalMultiset> {
    let d = f.degree();
    if d < 2 {
        return Err(crate::error::Error::Domain(
            "iterate critical sets need degree >= 2".into(),
        ));
    }
    let bound = (d as f64).powi(n as i32) * (d - 1) as f64;
    if bound > 1e4 {
        return Err(crate::error::Error::Capacity(format!(
            "critical set of the {n}-th iterate would exceed 1e4 points"
        )));
    }
    let base: Vec<(Complex64, usize)> = f
        .critical_points()?
        .iter()
        .map(|cp| (cp.location, cp.multiplicity))
        .collect();
    let mut all: Vec<(Complex64, usize)> = base.clone();
    let mut frontier = base;
    for _ in 1..n {
        let mut next: Vec<(Complex64, usize)> = Vec::new();
        for &(p, m) in &frontier {
            for (q, r) in f.preimages(p, crate::poly::DEFAULT_ROOT_TOL)? {
                next.push((q, m * r));
            }
        }
        all.extend_from_slice(&next);
        frontier = next;
    }
    let points = merge_points(all, 1e-10);
    let total = points.iter().map(|p| p.1).sum();
    Ok(CriticalMultiset { points, total })
}

/// Sum multiplicities of coincident points (within `tol`).
fn merge_points(mut points: Vec<(Complex64, usize)>, tol: f64) -> Vec<(Complex64, usize)> {
    points.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    'next: for (p, m) in points {
        for (q, mq) in out.iter_mut().rev() {
            if (p.re - q.re).abs() > tol {
                break;
            }
            if (p - *q).norm() <= tol {
                *mq += m;
                continue 'next;
            }
        }
        out.push((p, m));
    }
    out
}

// tiny deterministic generator for the verification sample points
struct SplitMix {
    state: u64,
}

impl SplitMix {
    fn new(seed: u64) -> Self {
        SplitMix { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}
