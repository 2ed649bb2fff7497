//! Per-pixel depth images with an explicit validity mask.

use nalgebra::Vector2;

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    depth: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthImage {
    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<f64>,
    ) -> Self {
        let mut img = Self::invalid(width, height);
        for y in 0..height {
            for x in 0..width {
                if let Some(d) = f(x, y) {
                    img.set(x, y, d);
                }
            }
        }
        img
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = self.index(x, y);
        self.valid[i].then(|| self.depth[i])
    }

    /// Stores `d`; non-positive or non-finite depths mark the pixel invalid.
    pub fn set(&mut self, x: usize, y: usize, d: f64) {
        let i = self.index(x, y);
        if d.is_finite() && d > 0.0 {
            self.depth[i] = d;
            self.valid[i] = true;
        } else {
            self.depth[i] = 0.0;
            self.valid[i] = false;
        }
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        let i = self.index(x, y);
        self.valid[i] = false;
        self.depth[i] = 0.0;
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.index(x, y)]
    }

    pub fn raw(&self) -> &[f64] {
        &self.depth
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Iterator over `(x, y, depth)` of valid pixels in row-major order.
    pub fn valid_pixels(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width).filter_map(move |x| self.get(x, y).map(|d| (x, y, d)))
        })
    }

    /// Bilinear depth at a sub-pixel location and its gradient in `(u, v)`.
    /// All four texels must be valid.
    pub fn sample_bilinear(&self, p: &Vector2<f64>) -> Option<(f64, Vector2<f64>)> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let x0 = p.x.floor() as usize;
        let y0 = p.y.floor() as usize;
        if x0 + 1 >= self.width || y0 + 1 >= self.height {
            return None;
        }
        let d00 = self.get(x0, y0)?;
        let d10 = self.get(x0 + 1, y0)?;
        let d01 = self.get(x0, y0 + 1)?;
        let d11 = self.get(x0 + 1, y0 + 1)?;
        let fx = p.x - x0 as f64;
        let fy = p.y - y0 as f64;
        let top = d00 + (d10 - d00) * fx;
        let bot = d01 + (d11 - d01) * fx;
        let d = top + (bot - top) * fy;
        let ddx = (d10 - d00) * (1.0 - fy) + (d11 - d01) * fy;
        let ddy = bot - top;
        Some((d, Vector2::new(ddx, ddy)))
    }

    /// Catmull–Rom bicubic interpolation of inverse depth over the 4×4 texel
    /// stencil. Reproduces quadratics in inverse depth, so planes are exact
    /// and curved surfaces carry far less chord bias than bilinear weights.
    /// `None` unless the whole stencil is inside the image and valid; a
    /// lower-order fallback at borders biases the samples there.
    pub fn sample_bicubic(&self, p: &Vector2<f64>) -> Option<(f64, Vector2<f64>)> {
        if !(p.x >= 1.0 && p.y >= 1.0) {
            return None;
        }
        let x0 = p.x.floor() as usize;
        let y0 = p.y.floor() as usize;
        if x0 + 2 >= self.width || y0 + 2 >= self.height {
            return None;
        }
        let mut inv = [[0.0; 4]; 4];
        for (j, row) in inv.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = 1.0 / self.get(x0 + i - 1, y0 + j - 1)?;
            }
        }
        let (wx, dwx) = catmull_rom(p.x - x0 as f64);
        let (wy, dwy) = catmull_rom(p.y - y0 as f64);
        let (mut f, mut fu, mut fv) = (0.0, 0.0, 0.0);
        for j in 0..4 {
            for i in 0..4 {
                f += inv[j][i] * wx[i] * wy[j];
                fu += inv[j][i] * dwx[i] * wy[j];
                fv += inv[j][i] * wx[i] * dwy[j];
            }
        }
        if !(f > 0.0) {
            return None;
        }
        let d = 1.0 / f;
        Some((d, -Vector2::new(fu, fv) * (d * d)))
    }

    /// Bilinear interpolation of inverse depth, returned as depth with its
    /// pixel gradient. Exact for planes, since `1/z` is affine in the image.
    pub fn sample_perspective(&self, p: &Vector2<f64>) -> Option<(f64, Vector2<f64>)> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let x0 = p.x.floor() as usize;
        let y0 = p.y.floor() as usize;
        if x0 + 1 >= self.width || y0 + 1 >= self.height {
            return None;
        }
        let i00 = 1.0 / self.get(x0, y0)?;
        let i10 = 1.0 / self.get(x0 + 1, y0)?;
        let i01 = 1.0 / self.get(x0, y0 + 1)?;
        let i11 = 1.0 / self.get(x0 + 1, y0 + 1)?;
        let fx = p.x - x0 as f64;
        let fy = p.y - y0 as f64;
        let top = i00 + (i10 - i00) * fx;
        let bot = i01 + (i11 - i01) * fx;
        let inv = top + (bot - top) * fy;
        let g = Vector2::new((i10 - i00) * (1.0 - fy) + (i11 - i01) * fy, bot - top);
        let d = 1.0 / inv;
        Some((d, -g * (d * d)))
    }
}

/// Catmull–Rom weights for the four taps at offsets −1, 0, 1, 2 and their
/// derivatives in `t`.
fn catmull_rom(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ],
        [
            0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
            0.5 * (9.0 * t2 - 10.0 * t),
            0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
            0.5 * (3.0 * t2 - 2.0 * t),
        ],
    )
}
