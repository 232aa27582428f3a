//! More temporary probes (deleted before finalizing).

use num_complex::Complex64;
use schwz_core::levelset::annulus_invariants;
use schwz_core::metric::{do_curve_length, qd_curve_length, Polyline, QdSampler};
use schwz_core::poly::Poly;
use schwz_core::region::Region;
use schwz_core::schwarzian::schwarzian_iterate_normalized;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn probe_siegel() {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let lam = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phi);
    let f = Poly::from_descending(vec![c(1.0, 0.0), lam, c(0.0, 0.0)]); // z² + λz
    for n in [10u32, 20, 30] {
        match schwarzian_iterate_normalized(&f, n, c(0.01, 0.0)) {
            Ok(est) => println!("siegel n={n}: |S_n/4^n| = {:.6e}", est.value.norm()),
            Err(e) => println!("siegel n={n}: ERROR {e}"),
        }
    }
}

#[test]
fn probe_circle3_discretizations() {
    let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
    for segs in [16usize, 24, 40, 48, 96] {
        let circle = Polyline::circle(c(0.0, 0.0), 3.0, segs);
        match do_curve_length(&f, &circle) {
            Ok(dl) => {
                print!("segs={segs}: d_o={dl:.6}");
                let mut prev = f64::INFINITY;
                for n in [4u32, 5, 6, 7, 8, 9, 10, 11, 12] {
                    let q = QdSampler::Iterate { f: &f, n };
                    match qd_curve_length(&q, &circle) {
                        Ok(ln) => {
                            let diff = (ln - dl).abs();
                            print!(" n{n}:{:.2e}{}", diff, if diff < prev { "v" } else { "^" });
                            prev = diff;
                        }
                        Err(_) => print!(" n{n}:ERR"),
                    }
                }
                println!();
            }
            Err(e) => println!("segs={segs}: d_o ERROR {e}"),
        }
    }
    // hypothesis-compliant control: radius 3.5 clears the Julia set
    for segs in [64usize] {
        let circle = Polyline::circle(c(0.0, 0.0), 3.5, segs);
        let dl = do_curve_length(&f, &circle).unwrap();
        print!("R3.5 segs={segs}: d_o={dl:.8}");
        let mut prev = f64::INFINITY;
        for n in [4u32, 6, 8, 10, 12] {
            let q = QdSampler::Iterate { f: &f, n };
            let ln = qd_curve_length(&q, &circle).unwrap();
            let diff = (ln - dl).abs();
            print!(" n{n}:{:.2e}{}", diff, if diff < prev { "v" } else { "^" });
            prev = diff;
        }
        println!();
    }
}

#[test]
fn probe_flux_resolution() {
    let f = Poly::from_real_descending(&[1.0, 0.0, -6.0]);
    let g0 = 0.849_462_752_696_550_4;
    for (lo, hi, res) in [(-4.0, 4.0, 512usize), (-4.0, 4.0, 768), (-6.0, 6.0, 768)] {
        let region = Region::new(lo, hi, lo, hi, res, res).unwrap();
        let lvl = 0.35 * g0;
        match annulus_invariants(&f, lvl, &region) {
            Ok(recs) => {
                let total: f64 = recs.iter().map(|r| r.circumference).sum();
                println!(
                    "region [{lo},{hi}] res {res}: {} comps, total = {:.6} (err {:.2e})",
                    recs.len(),
                    total,
                    (total - 4.442882938158366f64).abs()
                );
            }
            Err(e) => println!("region [{lo},{hi}] res {res}: ERROR {e}"),
        }
    }
}
