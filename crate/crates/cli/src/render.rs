//! Level-set rendering of the escape rate to binary PPM (P6).
//!
//! Non-escaping pixels are black; escaping pixels are shaded by the
//! fractional part of `bands · log(G)/log(d)`, which bands G
//! logarithmically (G spans many orders of magnitude near the Julia
//! set). Optional level curves are overlaid in white. Output bytes are
//! identical across runs and thread counts.

use schwz_core::error::{Error, Result};
use schwz_core::levelset::level_components;
use schwz_core::poly::Poly;
use schwz_core::region::Region;
use schwz_core::Complex64;

pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl ImageBuffer {
    fn new(width: usize, height: usize) -> Self {
        ImageBuffer {
            width,
            height,
            pixels: vec![0; 3 * width * height],
        }
    }

    fn put(&mut self, ix: usize, iy: usize, rgb: [u8; 3]) {
        let at = 3 * (iy * self.width + ix);
        self.pixels[at..at + 3].copy_from_slice(&rgb);
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

fn shade(g: f64, bands: u32, d: usize) -> [u8; 3] {
    let t = bands as f64 * g.ln() / (d as f64).ln();
    let frac = t - t.floor();
    let v = (64.0 + 191.0 * frac) as u8;
    [v, v, v]
}

/// Render the banded escape-rate picture; `levels` overlays the listed
/// level curves in white. Pixels sample cell centers, row 0 is the top
/// of the region (`y_max`).
pub fn render_green_ppm(
    f: &Poly,
    region: &Region,
    bands: u32,
    levels: &[f64],
    tol: f64,
) -> Result<ImageBuffer> {
    if bands < 1 {
        return Err(Error::Domain("bands must be >= 1".into()));
    }
    let (w, h) = (region.nx, region.ny);
    let d = f.degree();
    let mut img = ImageBuffer::new(w, h);

    let nx = region.nx;
    let evals = schwz_core::green::green_grid_cells(f, region, tol);
    for iy in 0..h {
        for ix in 0..w {
            let ge = &evals[iy * nx + ix];
            let rgb = if ge.escaped {
                shade(ge.green, bands, d)
            } else {
                [0, 0, 0]
            };
            // image rows go top-down, the grid bottom-up
            img.put(ix, h - 1 - iy, rgb);
        }
    }

    for &level in levels {
        let comps = level_components(f, level, region)?;
        for comp in comps {
            overlay_polyline(&mut img, region, &comp.vertices);
        }
    }
    Ok(img)
}

fn overlay_polyline(img: &mut ImageBuffer, region: &Region, vertices: &[Complex64]) {
    let n = vertices.len();
    let (dx, dy) = (region.dx_cell(), region.dy_cell());
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        let steps = ((b - a).norm() / dx.min(dy) * 2.0).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let z = a + (b - a) * (s as f64 / steps as f64);
            let ix = ((z.re - region.x_min) / dx - 0.5).round();
            let iy = ((z.im - region.y_min) / dy - 0.5).round();
            if ix >= 0.0 && iy >= 0.0 && (ix as usize) < img.width && (iy as usize) < img.height {
                img.put(ix as usize, img.height - 1 - iy as usize, [255, 255, 255]);
            }
        }
    }
}
