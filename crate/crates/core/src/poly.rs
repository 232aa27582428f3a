//! Complex polynomials: parsing, evaluation with derivatives, composition,
//! simultaneous root finding, critical points, preimages and affine maps.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Default convergence tolerance for the root finder.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// Composition results above this degree are rejected.
pub const COMPOSE_DEGREE_CAP: usize = 4096;

const ROOT_MAX_SWEEPS: usize = 200;

/// Complex polynomial, coefficients stored ascending (constant term
/// first). The leading coefficient is nonzero whenever the degree is
/// at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

/// Affine map `z ↦ a·z + b` with `a ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: Complex64,
    pub b: Complex64,
}

impl AffineMap {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        if a.norm_sqr() == 0.0 {
            return Err(Error::Domain("affine map with zero scale".into()));
        }
        Ok(AffineMap { a, b })
    }

    pub fn identity() -> Self {
        AffineMap {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.a * z + self.b
    }

    pub fn inverse(&self) -> AffineMap {
        AffineMap {
            a: 1.0 / self.a,
            b: -self.b / self.a,
        }
    }
}

/// A critical point of a polynomial: a root of `f'` of the given
/// multiplicity. `order = multiplicity + 1` is the local degree of `f`
/// there. `green_level` is the escape rate at the point; it stays at the
/// `0.0` sentinel until filled by the escape-dynamics layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: Complex64,
    pub multiplicity: usize,
    pub order: usize,
    pub green_level: f64,
}

impl Poly {
    /// Build from ascending coefficients; trailing (leading-term) zeros
    /// are trimmed so the degree invariant holds.
    pub fn from_ascending(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().unwrap().norm_sqr() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn from_descending(mut coeffs: Vec<Complex64>) -> Self {
        coeffs.reverse();
        Poly::from_ascending(coeffs)
    }

    /// Real coefficients, descending. Convenience for tests.
    pub fn from_real_descending(coeffs: &[f64]) -> Self {
        Poly::from_descending(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn constant(c: Complex64) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// `z ↦ z`
    pub fn identity() -> Self {
        Poly {
            coeffs: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    /// `z^d`
    pub fn power(d: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
        coeffs[d] = Complex64::new(1.0, 0.0);
        Poly::from_ascending(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Ascending coefficients.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Evaluate `f` and its first `order` derivatives (`order ≤ 3`) in a
    /// single Horner pass carrying derivative accumulators.
    pub fn eval_derivs(&self, z: Complex64, order: usize) -> Vec<Complex64> {
        assert!(order <= 3, "eval_derivs supports order 0..=3");
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut d1, mut d2, mut d3) = (zero, zero, zero, zero);
        for &c in self.coeffs.iter().rev() {
            d3 = d3 * z + d2;
            d2 = d2 * z + d1;
            d1 = d1 * z + v;
            v = v * z + c;
        }
        // the repeated-Horner accumulators carry f''/2! and f'''/3!
        let mut out = vec![v];
        if order >= 1 {
            out.push(d1);
        }
        if order >= 2 {
            out.push(d2 * 2.0);
        }
        if order >= 3 {
            out.push(d3 * 6.0);
        }
        out
    }

    pub fn derivative(&self) -> Poly {
        if self.degree() == 0 {
            return Poly::constant(Complex64::new(0.0, 0.0));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Poly::from_ascending(coeffs)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        for (k, &c) in other.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        Poly::from_ascending(coeffs)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::from_ascending(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut coeffs =
            vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::from_ascending(coeffs)
    }

    /// Multiply by `z^k`.
    pub fn shift_up(&self, k: usize) -> Poly {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly::from_ascending(coeffs)
    }

    /// Coefficients of `self(g(z))`. Rejects results above
    /// [`COMPOSE_DEGREE_CAP`] to bound memory.
    pub fn compose(&self, g: &Poly) -> Result<Poly> {
        let result_degree = self.degree() * g.degree();
        if result_degree > COMPOSE_DEGREE_CAP {
            return Err(Error::Capacity(format!(
                "composition degree {result_degree} exceeds cap {COMPOSE_DEGREE_CAP}"
            )));
        }
        let mut acc = Poly::constant(Complex64::new(0.0, 0.0));
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(g).add(&Poly::constant(c));
        }
        Ok(acc)
    }

    /// n-fold self composition `f^n` (n ≥ 1), subject to the degree cap.
    pub fn iterate(&self, n: u32) -> Result<Poly> {
        assert!(n >= 1);
        let mut acc = self.clone();
        for _ in 1..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Coefficients of `B(f(A(z)))`.
    pub fn apply_affine(&self, a: &AffineMap, b: &AffineMap) -> Poly {
        let inner = Poly {
            coeffs: vec![a.b, a.a],
        };
        // degree of the inner map is 1, the cap cannot bind
        let composed = self.compose(&inner).expect("affine composition in cap");
        let mut scaled = composed.scale(b.a);
        scaled.coeffs[0] += b.b;
        Poly::from_ascending(scaled.coeffs)
    }

    /// All complex roots with multiplicities (simultaneous
    /// Aberth–Ehrlich iteration; nearby roots clustered).
    pub fn roots(&self, tol: f64) -> Result<Vec<(Complex64, usize)>> {
        roots(self, tol)
    }

    /// Roots of `f'` with `order = multiplicity + 1`; `green_level` is
    /// left at the 0 sentinel.
    pub fn critical_points(&self) -> Result<Vec<CriticalPoint>> {
        if self.degree() < 2 {
            return Err(Error::Domain(format!(
                "critical points need degree >= 2, got {}",
                self.degree()
            )));
        }
        let crit = self.derivative().roots(DEFAULT_ROOT_TOL)?;
        Ok(crit
            .into_iter()
            .map(|(location, multiplicity)| CriticalPoint {
                location,
                multiplicity,
                order: multiplicity + 1,
                green_level: 0.0,
            })
            .collect())
    }

    /// Solutions of `f(z) = w` with multiplicities summing to the degree.
    pub fn preimages(&self, w: Complex64, tol: f64) -> Result<Vec<(Complex64, usize)>> {
        if self.degree() < 1 {
            return Err(Error::Domain("preimages need degree >= 1".into()));
        }
        let mut shifted = self.clone();
        shifted.coeffs[0] -= w;
        Poly::from_ascending(shifted.coeffs).roots(tol)
    }
}

/// Parse a comma-separated polynomial literal, leading coefficient first.
/// Each coefficient follows the complex grammar `R`, `Ri`, `R+Si`, `R-Si`
/// with `R`, `S` decimal reals; whitespace is ignored.
pub fn parse_poly(text: &str) -> Result<Poly> {
    let tokens: Vec<&str> = text.split(',').collect();
    if tokens.iter().all(|t| t.trim().is_empty()) {
        return Err(Error::Parse("empty coefficient list".into()));
    }
    let mut descending = Vec::with_capacity(tokens.len());
    for tok in &tokens {
        descending.push(parse_complex(tok)?);
    }
    if descending.len() >= 2 && descending[0].norm_sqr() == 0.0 {
        return Err(Error::Parse(format!(
            "zero leading coefficient '{}'",
            tokens[0].trim()
        )));
    }
    descending.reverse();
    Ok(Poly { coeffs: descending })
}

/// Parse one complex literal of the grammar above.
pub fn parse_complex(token: &str) -> Result<Complex64> {
    let s: String = token.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Parse(format!("unparseable complex literal '{}'", token.trim()));
    if s.is_empty() {
        return Err(err());
    }
    if let Some(body) = s.strip_suffix('i') {
        // Ri or R±Si: search for a sign that splits real and imaginary
        // parts (not the leading sign, not an exponent sign).
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = body[..k].parse().map_err(|_| err())?;
                let im: f64 = match &body[k..] {
                    "+" => 1.0,
                    "-" => -1.0,
                    imtext => imtext.parse().map_err(|_| err())?,
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = body.parse().map_err(|_| err())?;
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = s.parse().map_err(|_| err())?;
        Ok(Complex64::new(re, 0.0))
    }
}

fn roots(p: &Poly, tol: f64) -> Result<Vec<(Complex64, usize)>> {
    if p.degree() < 1 {
        return Err(Error::Domain("root finding needs degree >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("root tolerance must be positive".into()));
    }
    let mut found: Vec<(Complex64, usize)> = Vec::new();

    // deflate exact roots at the origin so pure powers are handled exactly
    let mut coeffs = p.coeffs.clone();
    let mut zero_mult = 0usize;
    while coeffs.len() > 1 && coeffs[0].norm_sqr() == 0.0 {
        coeffs.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        found.push((Complex64::new(0.0, 0.0), zero_mult));
    }
    let m = coeffs.len() - 1;
    if m >= 1 {
        let q = Poly {
            coeffs: coeffs.clone(),
        };
        if m == 1 {
            found.push((-q.coeffs[0] / q.coeffs[1], 1));
        } else {
            let approx = aberth(&q, tol)?;
            for (z, mult) in cluster_roots(&approx, tol, &q) {
                found.push((z, mult));
            }
        }
    }
    found.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    debug_assert_eq!(found.iter().map(|r| r.1).sum::<usize>(), p.degree());
    Ok(found)
}

/// Simultaneous iteration from perturbed-circle initial guesses.
fn aberth(q: &Poly, tol: f64) -> Result<Vec<Complex64>> {
    let m = q.degree();
    let lead = q.leading();
    let radius = (q.coeffs[0].norm() / lead.norm()).powf(1.0 / m as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..m)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64 + 0.4 + 1e-4 * j as f64;
            radius * Complex64::new(theta.cos(), theta.sin())
        })
        .collect();

    let dq = q.derivative();
    let mut best_step = f64::INFINITY;
    let mut stagnant = 0usize;
    for _sweep in 0..ROOT_MAX_SWEEPS {
        let mut max_step = 0.0f64;
        for j in 0..m {
            let pv = q.eval(z[j]);
            if pv.norm_sqr() == 0.0 {
                continue;
            }
            let mut dv = dq.eval(z[j]);
            if dv.norm_sqr() == 0.0 {
                dv = Complex64::new(1e-300, 0.0);
            }
            let w = pv / dv;
            let mut sigma = Complex64::new(0.0, 0.0);
            for k in 0..m {
                if k != j {
                    let diff = z[j] - z[k];
                    if diff.norm_sqr() > 0.0 {
                        sigma += 1.0 / diff;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * sigma;
            let step = if denom.norm_sqr() > 0.0 { w / denom } else { w };
            z[j] -= step;
            let rel = step.norm() / (1.0 + z[j].norm());
            max_step = max_step.max(rel);
        }
        if max_step < tol {
            return Ok(z);
        }
        // multiple roots stall near sqrt(eps); accept the plateau once
        // steps stop improving, the clustering pass absorbs the scatter
        if max_step < best_step * 0.5 {
            best_step = max_step;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant > 20 && best_step < 1e-7 {
                return Ok(z);
            }
        }
    }
    Err(Error::Numeric(format!(
        "root iteration did not converge in {ROOT_MAX_SWEEPS} sweeps (best step {best_step:.3e}, iterates {z:?})"
    )))
}

/// Merge approximations within `1e3·tol` and cross-check cluster sizes
/// against the low-order derivative magnitudes at the cluster center.
fn cluster_roots(approx: &[Complex64], tol: f64, q: &Poly) -> Vec<(Complex64, usize)> {
    let n = approx.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let thr = 1e3 * tol * (1.0 + approx[i].norm().max(approx[j].norm()));
            if (approx[i] - approx[j]).norm() <= thr {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: std::collections::HashMap<usize, Vec<Complex64>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(approx[i]);
    }
    let mut out = Vec::new();
    for (_, members) in groups {
        let m = members.len();
        let center = members.iter().sum::<Complex64>() / m as f64;
        if m > 1 && !multiplicity_consistent(q, center, m) {
            // the cluster is not a genuine multiple root: report members
            // individually rather than inventing a multiplicity
            for &z in &members {
                out.push((z, 1));
            }
        } else {
            out.push((center, m));
        }
    }
    out
}

fn multiplicity_consistent(q: &Poly, center: Complex64, m: usize) -> bool {
    let mut deriv = q.clone();
    let zmag = center.norm().max(1.0);
    for j in 0..m {
        let scale: f64 = deriv
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * zmag.powi(k as i32))
            .sum();
        if deriv.eval(center).norm() > 1e-6 * scale.max(1e-300) {
            return false;
        }
        if j + 1 < m {
            deriv = deriv.derivative();
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parse_basic_forms() {
        let p = parse_poly("1,0,-6").unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs(), &[c(-6.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);

        let p = parse_poly("1,0,0,0").unwrap();
        assert_eq!(p.degree(), 3);
        assert_eq!(p.eval(c(2.0, 0.0)), c(8.0, 0.0));

        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("1.5-0.25i").unwrap(), c(1.5, -0.25));
        assert_eq!(parse_complex("-3").unwrap(), c(-3.0, 0.0));
        assert_eq!(parse_complex(" 1 + 2 i ").unwrap(), c(1.0, 2.0));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(parse_poly(""), Err(Error::Parse(_))));
        assert!(matches!(parse_poly("0,1"), Err(Error::Parse(_))));
        let err = parse_poly("1,x,3").unwrap_err();
        assert!(err.to_string().contains('x'), "{err}");
    }

    #[test]
    fn eval_derivs_hand_values() {
        let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]); // z^2 - 6
        let d = f.eval_derivs(c(3.0, 0.0), 2);
        assert_eq!(d, vec![c(3.0, 0.0), c(6.0, 0.0), c(2.0, 0.0)]);

        let f = Poly::power(3);
        let d = f.eval_derivs(c(2.0, 0.0), 3);
        assert_eq!(
            d,
            vec![c(8.0, 0.0), c(12.0, 0.0), c(12.0, 0.0), c(6.0, 0.0)]
        );

        let f = Poly::power(2);
        let d = f.eval_derivs(c(0.0, 0.0), 1);
        assert_eq!(d, vec![c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn compose_cases() {
        let sq = Poly::power(2);
        assert_eq!(sq.compose(&sq).unwrap(), Poly::power(4));

        let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
        let ff = f.compose(&f).unwrap();
        // (z^2-6)^2 - 6 = z^4 - 12 z^2 + 30, expanded by hand
        assert_eq!(
            ff,
            Poly::from_real_descending(&[1.0, 0.0, -12.0, 0.0, 30.0])
        );

        assert_eq!(f.compose(&Poly::identity()).unwrap(), f);
    }

    #[test]
    fn compose_cap() {
        let p = Poly::power(70);
        assert!(matches!(p.compose(&p), Err(Error::Capacity(_))));
    }

    #[test]
    fn roots_simple_and_multiple() {
        let p = Poly::from_real_descending(&[3.0, 0.0, -3.0]); // 3z^2 - 3
        let r = p.roots(1e-12).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].0 - c(-1.0, 0.0)).norm() < 1e-9 && r[0].1 == 1);
        assert!((r[1].0 - c(1.0, 0.0)).norm() < 1e-9 && r[1].1 == 1);

        let p = Poly::power(2);
        assert_eq!(p.roots(1e-12).unwrap(), vec![(c(0.0, 0.0), 2)]);

        let p = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
        let r = p.roots(1e-12).unwrap();
        let s6 = 6.0f64.sqrt();
        assert!((r[0].0 - c(-s6, 0.0)).norm() < 1e-9);
        assert!((r[1].0 - c(s6, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn critical_point_examples() {
        let crit = Poly::power(2).critical_points().unwrap();
        assert_eq!(crit.len(), 1);
        assert_eq!((crit[0].multiplicity, crit[0].order), (1, 2));

        let crit = Poly::power(3).critical_points().unwrap();
        assert_eq!((crit[0].multiplicity, crit[0].order), (2, 3));

        let f = Poly::from_real_descending(&[1.0, 0.0, -3.0, 0.0]); // z^3 - 3z
        let crit = f.critical_points().unwrap();
        assert_eq!(crit.len(), 2);
        assert!((crit[0].location - c(-1.0, 0.0)).norm() < 1e-9);
        assert!((crit[1].location - c(1.0, 0.0)).norm() < 1e-9);
        assert!(crit.iter().all(|cp| cp.order == 2));
    }

    #[test]
    fn preimage_examples() {
        let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
        let pre = f.preimages(c(0.0, 0.0), 1e-12).unwrap();
        let s6 = 6.0f64.sqrt();
        assert!((pre[0].0 - c(-s6, 0.0)).norm() < 1e-9);
        assert!((pre[1].0 - c(s6, 0.0)).norm() < 1e-9);

        let sq = Poly::power(2);
        assert_eq!(sq.preimages(c(0.0, 0.0), 1e-12).unwrap(), vec![(c(0.0, 0.0), 2)]);
        let pre = sq.preimages(c(1.0, 0.0), 1e-12).unwrap();
        assert!((pre[0].0 - c(-1.0, 0.0)).norm() < 1e-10);
        assert!((pre[1].0 - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn apply_affine_examples() {
        let sq = Poly::power(2);
        let id = AffineMap::identity();
        assert_eq!(sq.apply_affine(&id, &id), sq);

        // B(f(A(z))) = (z+1)^2 - 1 = z^2 + 2z
        let a = AffineMap::new(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let b = AffineMap::new(c(1.0, 0.0), c(-1.0, 0.0)).unwrap();
        assert_eq!(
            sq.apply_affine(&a, &b),
            Poly::from_real_descending(&[1.0, 2.0, 0.0])
        );

        // (2z)^3 / 8 = z^3
        let cube = Poly::power(3);
        let a = AffineMap::new(c(2.0, 0.0), c(0.0, 0.0)).unwrap();
        let b = AffineMap::new(c(0.125, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(cube.apply_affine(&a, &b), cube);
    }

    #[test]
    fn degree_one_preimage() {
        let f = Poly::from_real_descending(&[2.0, -4.0]); // 2z - 4
        assert_eq!(f.preimages(c(0.0, 0.0), 1e-12).unwrap(), vec![(c(2.0, 0.0), 1)]);
    }
}
