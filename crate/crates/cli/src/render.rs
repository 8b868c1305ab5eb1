//! Escape-time raster with ray overlays and periodic-point marks.
//!
//! Output is binary PPM (P6, 8-bit RGB); rows are computed in parallel and
//! assembled in index order so the bytes do not depend on the thread count.
//! An optional SVG carries the overlays alone.

use num_complex::Complex64;
use rayon::prelude::*;

use dreadlock::{EntireMap, PeriodicPoint, RayPolyline, Window};

use crate::spec::{usage, CliError};

pub const MAX_PIXELS: usize = 4096 * 4096;

pub struct RenderSpec {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub max_iter: usize,
    pub escape_radius: f64,
    pub overlays: Vec<RayPolyline>,
    pub marks: Vec<PeriodicPoint>,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.width == 0 || self.height == 0 {
            return Err(usage("render resolution must be positive"));
        }
        if self.width * self.height > MAX_PIXELS {
            return Err(usage(format!(
                "render resolution {}x{} exceeds the {} pixel cap",
                self.width, self.height, MAX_PIXELS
            )));
        }
        Ok(())
    }

    fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let fx = (z.re - self.window.re_min) / (self.window.re_max - self.window.re_min);
        let fy = (self.window.im_max - z.im) / (self.window.im_max - self.window.im_min);
        let x = (fx * self.width as f64).floor();
        let y = (fy * self.height as f64).floor();
        if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
            None
        } else {
            Some((x as usize, y as usize))
        }
    }

    fn point_at(&self, x: usize, y: usize) -> Complex64 {
        Complex64::new(
            self.window.re_min
                + (x as f64 + 0.5) * (self.window.re_max - self.window.re_min)
                    / self.width as f64,
            self.window.im_max
                - (y as f64 + 0.5) * (self.window.im_max - self.window.im_min)
                    / self.height as f64,
        )
    }
}

fn escape_iterations(
    map: &EntireMap,
    z0: Complex64,
    max_iter: usize,
    escape_radius: f64,
) -> Option<usize> {
    let mut z = z0;
    for n in 0..max_iter {
        if z.norm() > escape_radius {
            return Some(n);
        }
        match map.eval(z) {
            Ok(w) => z = w,
            Err(_) => return Some(n + 1), // overflow marker counts as escaped
        }
    }
    None
}

fn palette(n: usize) -> [u8; 3] {
    [
        ((n * 13) % 256) as u8,
        ((n * 7 + 96) % 256) as u8,
        (64 + (n * 29) % 192) as u8,
    ]
}

const OVERLAY_COLOR: [u8; 3] = [255, 255, 255];
const MARK_COLOR: [u8; 3] = [255, 64, 64];

/// Renders the escape-time raster and draws overlays; returns PPM bytes.
pub fn render_ppm(map: &EntireMap, spec: &RenderSpec) -> Result<Vec<u8>, CliError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rows: Vec<Vec<u8>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(3 * w);
            for x in 0..w {
                let z = spec.point_at(x, y);
                let px = match escape_iterations(map, z, spec.max_iter, spec.escape_radius) {
                    Some(n) => palette(n),
                    None => [0, 0, 0],
                };
                row.extend_from_slice(&px);
            }
            row
        })
        .collect();

    let mut put = |x: usize, y: usize, color: [u8; 3]| {
        rows[y][3 * x] = color[0];
        rows[y][3 * x + 1] = color[1];
        rows[y][3 * x + 2] = color[2];
    };

    for ray in &spec.overlays {
        for seg in ray.vertices.windows(2) {
            let a = Complex64::new(seg[0][0], seg[0][1]);
            let b = Complex64::new(seg[1][0], seg[1][1]);
            let px_len = ((b - a).norm()
                / (spec.window.re_max - spec.window.re_min).min(
                    spec.window.im_max - spec.window.im_min,
                ))
                * w.max(h) as f64;
            let steps = (px_len.ceil() as usize * 2).clamp(1, 100_000);
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let z = a + (b - a) * t;
                if let Some((x, y)) = spec.pixel_of(z) {
                    put(x, y, OVERLAY_COLOR);
                }
            }
        }
    }
    for mark in &spec.marks {
        if let Some((x, y)) = spec.pixel_of(mark.point) {
            for d in -2i64..=2 {
                let (xx, yy) = (x as i64 + d, y as i64);
                if xx >= 0 && (xx as usize) < w {
                    put(xx as usize, yy as usize, MARK_COLOR);
                }
                let (xx, yy) = (x as i64, y as i64 + d);
                if yy >= 0 && (yy as usize) < h {
                    put(xx as usize, yy as usize, MARK_COLOR);
                }
            }
        }
    }

    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for row in rows {
        out.extend_from_slice(&row);
    }
    Ok(out)
}

/// SVG rendition of the overlays alone, in pixel coordinates matching the
/// raster.
pub fn overlays_svg(spec: &RenderSpec) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        spec.width, spec.height, spec.width, spec.height
    );
    let to_px = |p: &[f64; 2]| -> (f64, f64) {
        let fx = (p[0] - spec.window.re_min) / (spec.window.re_max - spec.window.re_min);
        let fy = (spec.window.im_max - p[1]) / (spec.window.im_max - spec.window.im_min);
        (fx * spec.width as f64, fy * spec.height as f64)
    };
    for ray in &spec.overlays {
        let pts: Vec<String> = ray
            .vertices
            .iter()
            .map(|p| {
                let (x, y) = to_px(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        s.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"white\" stroke-width=\"1\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
    }
    for mark in &spec.marks {
        let (x, y) = to_px(&[mark.point.re, mark.point.im]);
        s.push_str(&format!(
            "  <circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\" fill=\"none\" stroke=\"red\"/>\n"
        ));
    }
    s.push_str("</svg>\n");
    s
}
