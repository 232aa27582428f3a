//! Deterministic table emission: CSV with a fixed header per row type and
//! JSON with a stable key order. Floats are printed with 17 significant
//! digits, booleans as `true`/`false`, line endings are LF, output ends
//! with a newline. Byte-identical across runs and platforms.

use schwz_core::green::GreenEval;
use schwz_core::levelset::AnnulusRecord;
use schwz_core::metric::ConvergenceRow;
use schwz_core::region::Region;
use std::fmt::Write as _;

/// 17 significant digits, scientific; enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.16e}")
}

/// JSON number token; non-finite values become null.
fn json_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("n,sup_error,l_half_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.n,
            fmt_f64(r.sup_error),
            fmt_f64(r.l_half_error)
        );
    }
    out
}

pub fn convergence_json(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("[");
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "\n  {{\"n\": {}, \"sup_error\": {}, \"l_half_error\": {}}}",
            r.n,
            json_f64(r.sup_error),
            json_f64(r.l_half_error)
        );
    }
    out.push_str("\n]\n");
    out
}

pub fn annuli_csv(rows: &[AnnulusRecord]) -> String {
    let mut out = String::from("level,height,circumference,local_degree\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(r.level),
            fmt_f64(r.height),
            fmt_f64(r.circumference),
            r.local_degree
        );
    }
    out
}

pub fn annuli_json(rows: &[AnnulusRecord]) -> String {
    let mut out = String::from("[");
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "\n  {{\"level\": {}, \"height\": {}, \"circumference\": {}, \"local_degree\": {}}}",
            json_f64(r.level),
            json_f64(r.height),
            json_f64(r.circumference),
            r.local_degree
        );
    }
    out.push_str("\n]\n");
    out
}

pub fn green_grid_csv(grid: &[GreenEval], region: &Region) -> String {
    let mut out = String::from("ix,iy,x,y,green,dgreen_re,dgreen_im,escaped,iterations,error_estimate\n");
    for iy in 0..region.ny {
        for ix in 0..region.nx {
            let node = region.node(ix, iy);
            let g = &grid[iy * region.nx + ix];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                ix,
                iy,
                fmt_f64(node.re),
                fmt_f64(node.im),
                fmt_f64(g.green),
                fmt_f64(g.dgreen.re),
                fmt_f64(g.dgreen.im),
                g.escaped,
                g.iterations,
                fmt_f64(g.error_estimate)
            );
        }
    }
    out
}

pub fn green_grid_json(grid: &[GreenEval], region: &Region) -> String {
    let mut out = String::from("[");
    let mut first = true;
    for iy in 0..region.ny {
        for ix in 0..region.nx {
            if !first {
                out.push(',');
            }
            first = false;
            let node = region.node(ix, iy);
            let g = &grid[iy * region.nx + ix];
            let _ = write!(
                out,
                "\n  {{\"ix\": {}, \"iy\": {}, \"x\": {}, \"y\": {}, \"green\": {}, \"dgreen_re\": {}, \"dgreen_im\": {}, \"escaped\": {}, \"iterations\": {}, \"error_estimate\": {}}}",
                ix,
                iy,
                json_f64(node.re),
                json_f64(node.im),
                json_f64(g.green),
                json_f64(g.dgreen.re),
                json_f64(g.dgreen.im),
                g.escaped,
                g.iterations,
                json_f64(g.error_estimate)
            );
        }
    }
    out.push_str("\n]\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_csv_format_contract() {
        let rows = vec![ConvergenceRow {
            n: 3,
            sup_error: 0.1,
            l_half_error: 0.2,
        }];
        assert_eq!(
            convergence_csv(&rows),
            "n,sup_error,l_half_error\n3,1.0000000000000001e-1,2.0000000000000001e-1\n"
        );
        assert_eq!(convergence_csv(&[]), "n,sup_error,l_half_error\n");
    }

    #[test]
    fn annuli_json_roundtrips() {
        let rows = vec![
            AnnulusRecord {
                level: 0.5,
                height: 0.25,
                circumference: 2.2214414690791831,
                local_degree: 1,
            },
            AnnulusRecord {
                level: 1.0,
                height: f64::INFINITY,
                circumference: 4.4428829381583662,
                local_degree: 2,
            },
        ];
        let text = annuli_json(&rows);
        assert!(text.ends_with("\n"));
        // minimal structural parse: every row carries the four keys in order
        for line in text.lines().filter(|l| l.trim_start().starts_with('{')) {
            let kl = |k: &str| line.find(k).unwrap();
            assert!(kl("\"level\"") < kl("\"height\""));
            assert!(kl("\"height\"") < kl("\"circumference\""));
            assert!(kl("\"circumference\"") < kl("\"local_degree\""));
        }
        // numbers round-trip through a f64 parse
        let v: f64 = "2.2214414690791831e0".parse().unwrap();
        assert_eq!(v, 2.2214414690791831);
        assert!(text.contains("\"height\": null"));
    }
}
