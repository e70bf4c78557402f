//! Luminance FSIM: phase congruency from a log-Gabor bank plus Scharr
//! gradient magnitude, pooled by the larger phase congruency.

use super::{require_min_size, require_same_size};
use crate::error::Result;
use crate::image::Plane;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

const SCALES: usize = 4;
const ORIENTATIONS: usize = 4;
const MIN_WAVELENGTH: f64 = 6.0;
const MULT: f64 = 2.0;
const SIGMA_ONF: f64 = 0.55;
const D_THETA_ON_SIGMA: f64 = 1.2;
const NOISE_K: f64 = 2.0;
const LP_CUTOFF: f64 = 0.45;
const LP_ORDER: i32 = 15;
const T1: f64 = 0.85;
const T2: f64 = 160.0;

/// Smallest accepted side length.
pub const FSIM_MIN_SIZE: usize = 32;

/// FSIM between two luminance planes with samples in `[0, 1]`.
pub fn fsim(a: &Plane, b: &Plane) -> Result<f64> {
    require_same_size(a, b, "fsim")?;
    require_min_size(a, FSIM_MIN_SIZE, FSIM_MIN_SIZE, "fsim")?;
    let f = ((a.width().min(a.height()) as f64) / 256.0).round_ties_even().max(1.0) as usize;
    let a = block_mean(&a.map(|v| v * 255.0), f);
    let b = block_mean(&b.map(|v| v * 255.0), f);

    let bank = FilterBank::new(a.width(), a.height());
    let pc_a = bank.phase_congruency(&a);
    let pc_b = bank.phase_congruency(&b);
    let gm_a = scharr_magnitude(&a);
    let gm_b = scharr_magnitude(&b);

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..pc_a.len() {
        let (pa, pb) = (pc_a[i], pc_b[i]);
        let (ga, gb) = (gm_a[i], gm_b[i]);
        let s_pc = (2.0 * pa * pb + T1) / (pa * pa + pb * pb + T1);
        let s_g = (2.0 * ga * gb + T2) / (ga * ga + gb * gb + T2);
        let m = pa.max(pb);
        num += s_pc * s_g * m;
        den += m;
    }
    Ok(num / den)
}

/// Non-overlapping `f` x `f` mean, dropping incomplete trailing blocks.
fn block_mean(p: &Plane, f: usize) -> Plane {
    if f == 1 {
        return p.clone();
    }
    let (w, h) = (p.width() / f, p.height() / f);
    let inv = 1.0 / (f * f) as f64;
    Plane::from_fn(w, h, |x, y| {
        let mut s = 0.0;
        for dy in 0..f {
            for dx in 0..f {
                s += p.at(x * f + dx, y * f + dy);
            }
        }
        s * inv
    })
}

/// Zero-padded Scharr gradient magnitude.
fn scharr_magnitude(p: &Plane) -> Vec<f64> {
    const K: [[f64; 3]; 3] = [[-3.0, 0.0, 3.0], [-10.0, 0.0, 10.0], [-3.0, 0.0, 3.0]];
    let (w, h) = (p.width() as isize, p.height() as isize);
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            p.at(x as usize, y as usize)
        }
    };
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (j, row) in K.iter().enumerate() {
                for (i, &k) in row.iter().enumerate() {
                    gx += k * at(x + i as isize - 1, y + j as isize - 1);
                    gy += K[i][j] * at(x + i as isize - 1, y + j as isize - 1);
                }
            }
            out.push((gx / 16.0).hypot(gy / 16.0));
        }
    }
    out
}

/// In-place 2-D FFT over a row-major `rows` x `cols` buffer.
struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(buf);
        let mut column = vec![Complex64::default(); self.rows];
        for c in 0..self.cols {
            for (r, v) in column.iter_mut().enumerate() {
                *v = buf[r * self.cols + c];
            }
            col.process(&mut column);
            for (r, v) in column.iter().enumerate() {
                buf[r * self.cols + c] = *v;
            }
        }
        if inverse {
            let s = 1.0 / (self.rows * self.cols) as f64;
            buf.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Centered frequency coordinate along an axis of length `n`.
fn freq_axis(n: usize) -> Vec<f64> {
    if n % 2 == 1 {
        let half = (n - 1) as f64 / 2.0;
        (0..n).map(|i| (i as f64 - half) / (n - 1) as f64).collect()
    } else {
        let half = n as f64 / 2.0;
        (0..n).map(|i| (i as f64 - half) / n as f64).collect()
    }
}

/// Log-Gabor filters in quadrant-shifted frequency layout, indexed
/// `[orientation][scale]`, plus the per-orientation noise statistics that
/// depend only on the filters.
struct FilterBank {
    width: usize,
    height: usize,
    fft: Fft2,
    filters: Vec<Vec<Vec<f64>>>,
    /// Sum of squared smallest-scale filter values per orientation.
    em_n: [f64; ORIENTATIONS],
    sum_an2: [f64; ORIENTATIONS],
    sum_ai_aj: [f64; ORIENTATIONS],
}

impl FilterBank {
    fn new(width: usize, height: usize) -> Self {
        let (rows, cols) = (height, width);
        let fr = freq_axis(rows);
        let fc = freq_axis(cols);
        // Index into the centered grid after an inverse quadrant shift.
        let src = |r: usize, c: usize| ((r + rows / 2) % rows, (c + cols / 2) % cols);
        let n = rows * cols;
        let mut radius = vec![0.0; n];
        let mut theta = vec![0.0; n];
        let mut lowpass = vec![0.0; n];
        for r in 0..rows {
            for c in 0..cols {
                let (sr, sc) = src(r, c);
                let (gx, gy) = (fr[sr], fc[sc]);
                let rad = gx.hypot(gy);
                let i = r * cols + c;
                radius[i] = rad;
                theta[i] = (-gy).atan2(gx);
                lowpass[i] = 1.0 / (1.0 + (rad / LP_CUTOFF).powi(2 * LP_ORDER));
            }
        }
        radius[0] = 1.0;

        let log_sigma2 = 2.0 * SIGMA_ONF.ln().powi(2);
        let radial: Vec<Vec<f64>> = (0..SCALES)
            .map(|s| {
                let omega0 = 1.0 / (MIN_WAVELENGTH * MULT.powi(s as i32));
                let mut g: Vec<f64> = radius
                    .iter()
                    .zip(&lowpass)
                    .map(|(&rad, &lp)| (-(rad / omega0).ln().powi(2) / log_sigma2).exp() * lp)
                    .collect();
                g[0] = 0.0;
                g
            })
            .collect();

        let theta_sigma = PI / (ORIENTATIONS as f64 * D_THETA_ON_SIGMA);
        let fft = Fft2::new(rows, cols);
        let root_n = (n as f64).sqrt();
        let mut filters = Vec::with_capacity(ORIENTATIONS);
        let mut em_n = [0.0; ORIENTATIONS];
        let mut sum_an2 = [0.0; ORIENTATIONS];
        let mut sum_ai_aj = [0.0; ORIENTATIONS];
        for o in 0..ORIENTATIONS {
            let angle = o as f64 * PI / ORIENTATIONS as f64;
            let (sa, ca) = angle.sin_cos();
            let spread: Vec<f64> = theta
                .iter()
                .map(|&t| {
                    let (st, ct) = t.sin_cos();
                    let ds = st * ca - ct * sa;
                    let dc = ct * ca + st * sa;
                    let d = ds.atan2(dc).abs();
                    (-d * d / (2.0 * theta_sigma * theta_sigma)).exp()
                })
                .collect();
            let per_scale: Vec<Vec<f64>> = radial
                .iter()
                .map(|g| g.iter().zip(&spread).map(|(a, b)| a * b).collect())
                .collect();
            em_n[o] = per_scale[0].iter().map(|v| v * v).sum();

            // Spatial-domain filter amplitudes for the noise energy estimate.
            let spatial: Vec<Vec<f64>> = per_scale
                .iter()
                .map(|f| {
                    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    fft.run(&mut buf, true);
                    buf.iter().map(|v| v.re * root_n).collect()
                })
                .collect();
            sum_an2[o] = spatial.iter().flatten().map(|v| v * v).sum();
            let mut cross = 0.0;
            for s in 0..SCALES - 1 {
                for t in s + 1..SCALES {
                    cross += spatial[s].iter().zip(&spatial[t]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            sum_ai_aj[o] = cross;
            filters.push(per_scale);
        }
        Self {
            width,
            height,
            fft,
            filters,
            em_n,
            sum_an2,
            sum_ai_aj,
        }
    }

    fn phase_congruency(&self, img: &Plane) -> Vec<f64> {
        debug_assert_eq!((img.width(), img.height()), (self.width, self.height));
        let n = self.width * self.height;
        let mut spectrum: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.run(&mut spectrum, false);

        let mut energy_all = vec![0.0; n];
        let mut an_all = vec![0.0; n];
        for o in 0..ORIENTATIONS {
            let responses: Vec<Vec<Complex64>> = self.filters[o]
                .iter()
                .map(|f| {
                    let mut buf: Vec<Complex64> = spectrum.iter().zip(f).map(|(s, &g)| s * g).collect();
                    self.fft.run(&mut buf, true);
                    buf
                })
                .collect();

            let mut sum_e = vec![0.0; n];
            let mut sum_o = vec![0.0; n];
            for eo in &responses {
                for i in 0..n {
                    sum_e[i] += eo[i].re;
                    sum_o[i] += eo[i].im;
                    an_all[i] += eo[i].norm();
                }
            }
            let mut energy = vec![0.0; n];
            for i in 0..n {
                let xe = sum_e[i].hypot(sum_o[i]) + f64::EPSILON;
                let (me, mo) = (sum_e[i] / xe, sum_o[i] / xe);
                for eo in &responses {
                    let (e, od) = (eo[i].re, eo[i].im);
                    energy[i] += e * me + od * mo - (e * mo - od * me).abs();
                }
            }

            let mut a2: Vec<f64> = responses[0].iter().map(|v| v.norm_sqr()).collect();
            let mid = (a2.len() - 1) / 2;
            let (_, median, _) = a2.select_nth_unstable_by(mid, |x, y| x.total_cmp(y));
            let mean_e2n = -*median / 0.5f64.ln();
            let noise_power = mean_e2n / self.em_n[o];
            let noise_energy2 = 2.0 * noise_power * self.sum_an2[o] + 4.0 * noise_power * self.sum_ai_aj[o];
            let tau = (noise_energy2 / 2.0).sqrt();
            let noise_mean = tau * (PI / 2.0).sqrt();
            let noise_sigma = ((2.0 - PI / 2.0) * tau * tau).sqrt();
            let threshold = (noise_mean + NOISE_K * noise_sigma) / 1.7;
            for i in 0..n {
                energy_all[i] += (energy[i] - threshold).max(0.0);
            }
        }
        energy_all
            .iter()
            .zip(&an_all)
            .map(|(e, a)| (e + f64::EPSILON) / (a + f64::EPSILON))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gaussian_blur;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scene(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, |x, y| {
            let (xf, yf) = (x as f64, y as f64);
            let disk = if (xf - 30.0).hypot(yf - 25.0) < 14.0 { 0.3 } else { 0.0 };
            (0.35 + disk + 0.2 * (xf * 0.3).sin() * (yf * 0.17).cos()).clamp(0.0, 1.0)
        })
    }

    #[test]
    fn self_similarity_is_one() {
        let a = scene(48, 40);
        assert!((fsim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let flat = Plane::filled(32, 32, 0.4);
        assert!((fsim(&flat, &flat).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heavier_blur_scores_lower() {
        let a = scene(64, 64);
        let light = fsim(&a, &gaussian_blur(&a, 0.7)).unwrap();
        let heavy = fsim(&a, &gaussian_blur(&a, 2.5)).unwrap();
        assert!(heavy < light && light < 1.0, "light {light} heavy {heavy}");
    }

    #[test]
    fn symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = scene(45, 37);
        let b = a.map(|v| (v + 0.05 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0));
        assert!((fsim(&a, &b).unwrap() - fsim(&b, &a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_or_mismatched_inputs() {
        assert!(fsim(&Plane::filled(31, 40, 0.5), &Plane::filled(31, 40, 0.5)).is_err());
        assert!(fsim(&Plane::filled(40, 40, 0.5), &Plane::filled(41, 40, 0.5)).is_err());
    }

    #[test]
    fn frequency_axis_layout() {
        assert_eq!(freq_axis(4), vec![-0.5, -0.25, 0.0, 0.25]);
        assert_eq!(freq_axis(5), vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
    }

    #[test]
    fn block_mean_downsamples() {
        let p = Plane::from_fn(5, 4, |x, y| (x + 10 * y) as f64);
        let d = block_mean(&p, 2);
        assert_eq!((d.width(), d.height()), (2, 2));
        assert_eq!(d.data(), &[5.5, 7.5, 25.5, 27.5]);
    }
}
