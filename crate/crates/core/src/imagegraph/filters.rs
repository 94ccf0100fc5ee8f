use crate::error::{Error, Result};
use crate::image::RgbImage;

/// Window radius used for the local deviation term of region inhomogeneity.
pub const DEFAULT_WINDOW_RADIUS: usize = 2;

/// Luma scaled by 1000 so window sums stay exact integers.
fn gray_milli(image: &RgbImage) -> Vec<i64> {
    image
        .pixels()
        .iter()
        .map(|p| 299 * p[0] as i64 + 587 * p[1] as i64 + 114 * p[2] as i64)
        .collect()
}

#[inline]
fn clamp_at(v: isize, max: usize) -> usize {
    v.clamp(0, max as isize - 1) as usize
}

/// Population standard deviation of luma over a `(2r+1)²` window, borders replicated.
pub fn local_std(image: &RgbImage, window_radius: usize) -> Vec<f64> {
    let (w, h) = (image.width(), image.height());
    let gray = gray_milli(image);
    let r = window_radius as isize;
    let n = ((2 * r + 1) * (2 * r + 1)) as i128;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum: i128 = 0;
            let mut sum_sq: i128 = 0;
            for dy in -r..=r {
                let yy = clamp_at(y as isize + dy, h);
                for dx in -r..=r {
                    let v = gray[yy * w + clamp_at(x as isize + dx, w)] as i128;
                    sum += v;
                    sum_sq += v * v;
                }
            }
            // n²·var is an exact integer; zero exactly on flat windows.
            let scaled_var = n * sum_sq - sum * sum;
            out[y * w + x] = (scaled_var as f64).sqrt() / (n as f64) / 1000.0;
        }
    }
    out
}

/// 3×3 Sobel gradient magnitude of luma, borders replicated.
pub fn sobel_magnitude(image: &RgbImage) -> Vec<f64> {
    let (w, h) = (image.width(), image.height());
    let gray = gray_milli(image);
    let at = |x: isize, y: isize| gray[clamp_at(y, h) * w + clamp_at(x, w)];
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            out[y as usize * w + x as usize] = ((gx * gx + gy * gy) as f64).sqrt() / 1000.0;
        }
    }
    out
}

fn normalize_by_max(values: &mut [f64]) {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        values.iter_mut().for_each(|v| *v /= max);
    } else {
        values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Per-pixel product of max-normalized local deviation and Sobel magnitude; values in [0, 1].
pub fn inhomogeneity_map(image: &RgbImage, window_radius: usize) -> Result<Vec<f64>> {
    if window_radius < 1 {
        return Err(Error::InvalidInput("window radius must be at least 1".into()));
    }
    let mut std = local_std(image, window_radius);
    let mut sobel = sobel_magnitude(image);
    normalize_by_max(&mut std);
    normalize_by_max(&mut sobel);
    Ok(std.iter().zip(&sobel).map(|(a, b)| a * b).collect())
}
