//! The two views: a rotated and rescaled digit, and a digit over a Perlin
//! noise background.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::mnist::idx::{PIXELS, SIDE};
use crate::rng::stream_rng;

/// Largest value below 1; every emitted pixel is clamped to `[0, ONE_BELOW]`.
pub const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Default Perlin lattice: 4 × 4 cells over the image.
pub const PERLIN_CELLS: usize = 4;

pub fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, ONE_BELOW)
}

/// Pixels scaled to `[0, 1)`.
pub fn normalize_image(img: &[u8]) -> Vec<f64> {
    img.iter().map(|&p| clamp_unit(p as f64 / 255.0)).collect()
}

fn pixel_or_zero(img: &[f64], r: isize, c: isize) -> f64 {
    if r < 0 || c < 0 || r >= SIDE as isize || c >= SIDE as isize {
        0.0
    } else {
        img[r as usize * SIDE + c as usize]
    }
}

/// Bilinear sample at fractional `(row, col)`, zero outside the image.
pub fn bilinear(img: &[f64], row: f64, col: f64) -> f64 {
    let (r0, c0) = (row.floor(), col.floor());
    let (fr, fc) = (row - r0, col - c0);
    let (r0, c0) = (r0 as isize, c0 as isize);
    let a = pixel_or_zero(img, r0, c0);
    let b = pixel_or_zero(img, r0, c0 + 1);
    let c = pixel_or_zero(img, r0 + 1, c0);
    let d = pixel_or_zero(img, r0 + 1, c0 + 1);
    (1.0 - fr) * ((1.0 - fc) * a + fc * b) + fr * ((1.0 - fc) * c + fc * d)
}

/// Scale by `scale` about the image center, then rotate counterclockwise by
/// `theta`. Implemented by inverse mapping each output pixel.
pub fn rotate_scale(img: &[f64], theta: f64, scale: f64) -> Vec<f64> {
    let center = (SIDE as f64 - 1.0) / 2.0;
    let (s, c) = theta.sin_cos();
    let mut out = vec![0.0; PIXELS];
    for r in 0..SIDE {
        for col in 0..SIDE {
            // y axis points up so that positive angles turn counterclockwise
            let xo = col as f64 - center;
            let yo = center - r as f64;
            let x = (c * xo + s * yo) / scale;
            let y = (-s * xo + c * yo) / scale;
            out[r * SIDE + col] = clamp_unit(bilinear(img, center - y, x + center));
        }
    }
    out
}

pub fn make_view_x_with(image: &[u8], theta: f64, scale: f64) -> Vec<f64> {
    rotate_scale(&normalize_image(image), theta, scale)
}

/// `θ ~ U[0, π/2]`, `s ~ U[0.5, 1.5]`.
pub fn view_x_params(seed: u64) -> (f64, f64) {
    let mut rng = stream_rng(seed, "view_x", 0);
    let theta = rng.gen_range(0.0..=FRAC_PI_2);
    let scale = rng.gen_range(0.5..=1.5);
    (theta, scale)
}

pub fn make_view_x(image: &[u8], seed: u64) -> Vec<f64> {
    let (theta, scale) = view_x_params(seed);
    make_view_x_with(image, theta, scale)
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Gradient-lattice noise seen through a `cells × cells` window placed at a
/// random sub-cell offset on a lattice one cell wider.
#[derive(Debug, Clone, PartialEq)]
pub struct PerlinField {
    pub cells: usize,
    /// Unit gradients at the `(cells + 2)²` lattice nodes, row-major.
    pub gradients: Vec<(f64, f64)>,
    /// Window origin in lattice units, in `[0, 1)²`.
    pub offset: (f64, f64),
}

impl PerlinField {
    pub fn sample<R: Rng>(rng: &mut R, cells: usize) -> Self {
        let gradients = (0..(cells + 2) * (cells + 2))
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (a.cos(), a.sin())
            })
            .collect();
        let offset = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        PerlinField { cells, gradients, offset }
    }

    fn grad(&self, i: usize, j: usize) -> (f64, f64) {
        self.gradients[j * (self.cells + 2) + i]
    }

    /// Field value at lattice coordinates `(x, y)` in `[0, cells + 1]²`;
    /// zero at every node and bounded by `√2 / 2` in magnitude.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let max = (self.cells + 1) as f64;
        let (x, y) = (x.clamp(0.0, max), y.clamp(0.0, max));
        let i = (x.floor() as usize).min(self.cells);
        let j = (y.floor() as usize).min(self.cells);
        let (fx, fy) = (x - i as f64, y - j as f64);
        let dot = |gi: usize, gj: usize, dx: f64, dy: f64| {
            let g = self.grad(gi, gj);
            g.0 * dx + g.1 * dy
        };
        let n00 = dot(i, j, fx, fy);
        let n10 = dot(i + 1, j, fx - 1.0, fy);
        let n01 = dot(i, j + 1, fx, fy - 1.0);
        let n11 = dot(i + 1, j + 1, fx - 1.0, fy - 1.0);
        let (u, v) = (fade(fx), fade(fy));
        let a = n00 + u * (n10 - n00);
        let b = n01 + u * (n11 - n01);
        a + v * (b - a)
    }

    /// The field on the 28 × 28 pixel grid, mapped affinely to `[0, 1)`.
    pub fn render(&self) -> Vec<f64> {
        let step = self.cells as f64 / SIDE as f64;
        let mut out = Vec::with_capacity(PIXELS);
        for r in 0..SIDE {
            for c in 0..SIDE {
                let v = self.value(self.offset.0 + c as f64 * step, self.offset.1 + r as f64 * step);
                out.push(clamp_unit((v + 1.0) / 2.0));
            }
        }
        out
    }
}

/// Noise amplitude `a ~ U[0, 1]` and a fresh field.
pub fn view_y_params(seed: u64) -> (f64, PerlinField) {
    let mut rng = stream_rng(seed, "view_y", 0);
    let a = rng.gen_range(0.0..=1.0);
    (a, PerlinField::sample(&mut rng, PERLIN_CELLS))
}

pub fn make_view_y_with(image: &[u8], amplitude: f64, field: &PerlinField) -> Vec<f64> {
    normalize_image(image)
        .iter()
        .zip(field.render())
        .map(|(p, n)| clamp_unit(p + amplitude * n))
        .collect()
}

pub fn make_view_y(image: &[u8], seed: u64) -> Vec<f64> {
    let (a, field) = view_y_params(seed);
    make_view_y_with(image, a, &field)
}
