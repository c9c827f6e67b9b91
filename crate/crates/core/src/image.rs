//! Single-channel floating-point image and the filtering primitives the
//! tracker and the fusion step share.

use crate::dataset_io::IntensityFrame;

#[derive(Clone, Debug, PartialEq)]
pub struct ImageF32 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

/// Reflect-101 border index: `... c b | a b c d | c b ...`.
#[inline]
pub fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - k;
    }
    k as usize
}

impl ImageF32 {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_frame(frame: &IntensityFrame) -> Self {
        Self {
            width: frame.width as usize,
            height: frame.height as usize,
            data: frame.pixels.iter().map(|&p| p as f32).collect(),
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn at_mirrored(&self, x: isize, y: isize) -> f32 {
        self.data[mirror(y, self.height) * self.width + mirror(x, self.width)]
    }

    /// Bilinear sample with coordinates clamped to the image.
    #[inline]
    pub fn sample(&self, x: f32, y: f32) -> f32 {
        let maxx = (self.width - 1) as f32;
        let maxy = (self.height - 1) as f32;
        let x = x.clamp(0.0, maxx);
        let y = y.clamp(0.0, maxy);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as usize;
        let y0 = y0 as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let r0 = y0 * self.width;
        let r1 = y1 * self.width;
        let top = self.data[r0 + x0] * (1.0 - fx) + self.data[r0 + x1] * fx;
        let bottom = self.data[r1 + x0] * (1.0 - fx) + self.data[r1 + x1] * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// 3x3 Sobel derivatives scaled to intensity units per pixel.
    pub fn sobel(&self) -> (ImageF32, ImageF32) {
        let (w, h) = (self.width, self.height);
        let mut gx = ImageF32::zeros(w, h);
        let mut gy = ImageF32::zeros(w, h);
        for y in 0..h {
            let yi = y as isize;
            for x in 0..w {
                let xi = x as isize;
                let p = |dx: isize, dy: isize| self.at_mirrored(xi + dx, yi + dy);
                let dx =
                    (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
                let dy =
                    (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
                gx.data[y * w + x] = dx / 8.0;
                gy.data[y * w + x] = dy / 8.0;
            }
        }
        (gx, gy)
    }

    /// Separable convolution with a symmetric odd-length kernel, mirror borders.
    pub fn convolve_separable(&self, kernel: &[f32]) -> ImageF32 {
        let (w, h) = (self.width, self.height);
        let r = (kernel.len() / 2) as isize;
        let mut tmp = ImageF32::zeros(w, h);
        for y in 0..h {
            let row = &self.data[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = 0.0;
                for (k, &kv) in kernel.iter().enumerate() {
                    acc += kv * row[mirror(x as isize + k as isize - r, w)];
                }
                tmp.data[y * w + x] = acc;
            }
        }
        let mut out = ImageF32::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (k, &kv) in kernel.iter().enumerate() {
                    acc += kv * tmp.data[mirror(y as isize + k as isize - r, h) * w + x];
                }
                out.data[y * w + x] = acc;
            }
        }
        out
    }

    /// Blur with the 5-tap binomial kernel and drop every other row/column.
    pub fn pyr_down(&self) -> ImageF32 {
        const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
        let blurred = self.convolve_separable(&K);
        let w = self.width.div_ceil(2);
        let h = self.height.div_ceil(2);
        let mut out = ImageF32::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                out.data[y * w + x] = blurred.at(2 * x, 2 * y);
            }
        }
        out
    }
}
