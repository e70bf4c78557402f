use crate::image::Plane;

/// Normalized 1-D Gaussian of `taps` samples.
pub(crate) fn gaussian_kernel(taps: usize, sigma: f64) -> Vec<f64> {
    let half = (taps as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..taps)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable correlation with an odd-length kernel, replicate-padded.
pub(crate) fn convolve_separable(p: &Plane, kx: &[f64], ky: &[f64]) -> Plane {
    let (w, h) = (p.width(), p.height());
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let src = p.data();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &kv) in kx.iter().enumerate() {
                let sx = (x as isize + i as isize - rx).clamp(0, w as isize - 1) as usize;
                acc += kv * row[sx];
            }
            *o = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (i, &kv) in ky.iter().enumerate() {
            let sy = (y as isize + i as isize - ry).clamp(0, h as isize - 1) as usize;
            let srow = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(srow) {
                *d += kv * s;
            }
        }
    }
    Plane::from_vec(w, h, out)
}

/// Gaussian blur with a `2 * ceil(3 sigma) + 1` tap kernel.
pub fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    if sigma <= 0.0 {
        return p.clone();
    }
    let taps = 2 * (3.0 * sigma).ceil() as usize + 1;
    let k = gaussian_kernel(taps, sigma);
    convolve_separable(p, &k, &k)
}

/// Mean over the `(2r + 1)^2` neighborhood, replicate-padded.
pub fn box_blur(p: &Plane, radius: usize) -> Plane {
    if radius == 0 {
        return p.clone();
    }
    let k = vec![1.0 / (2 * radius + 1) as f64; 2 * radius + 1];
    convolve_separable(p, &k, &k)
}

/// Summed-area table over a plane, optionally of a transformed value.
pub(crate) struct SummedArea {
    width: usize,
    sums: Vec<f64>,
}

impl SummedArea {
    pub(crate) fn new(p: &Plane, f: impl Fn(f64) -> f64) -> Self {
        let (w, h) = (p.width(), p.height());
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row_acc = 0.0;
            for x in 0..w {
                row_acc += f(p.at(x, y));
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row_acc;
            }
        }
        Self { width: w, sums }
    }

    /// Sum over `[x0, x1) x [y0, y1)`.
    #[inline]
    pub(crate) fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.width + 1;
        self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
            + self.sums[y0 * s + x0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(11, 1.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..5 {
            assert_eq!(k[i], k[10 - i]);
        }
    }

    #[test]
    fn blur_preserves_constants() {
        let p = Plane::filled(9, 7, 0.3);
        for v in gaussian_blur(&p, 1.2).data() {
            assert!((v - 0.3).abs() < 1e-12);
        }
        for v in box_blur(&p, 2).data() {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn summed_area_matches_direct_sum() {
        let p = Plane::from_fn(6, 5, |x, y| (x * 7 + y * 3) as f64 * 0.1);
        let sat = SummedArea::new(&p, |v| v);
        let direct: f64 = (1..4).flat_map(|y| (2..6).map(move |x| (x, y))).map(|(x, y)| p.at(x, y)).sum();
        assert!((sat.sum(2, 1, 6, 4) - direct).abs() < 1e-12);
    }
}
