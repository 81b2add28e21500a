use crate::error::Result;
use crate::model::Image2D;

/// Deviation from the neighbourhood median, in units of its median absolute
/// deviation, above which a pixel is a candidate defect.
pub const MAD_FACTOR: f64 = 10.0;
/// Candidates must also exceed this normalized intensity.
pub const MIN_HOT_LEVEL: f64 = 0.1;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn neighbours(w: usize, h: usize, x: usize, y: usize) -> impl Iterator<Item = (usize, usize)> {
    let xs = x.saturating_sub(1)..=(x + 1).min(w - 1);
    let ys = y.saturating_sub(1)..=(y + 1).min(h - 1);
    ys.flat_map(move |ny| xs.clone().map(move |nx| (nx, ny)))
        .filter(move |&(nx, ny)| (nx, ny) != (x, y))
}

/// Positions flagged as hot, evaluated on the unmodified image.
pub fn detect_hot_pixels(img: &Image2D) -> Vec<usize> {
    let (w, h) = img.dims();
    let mut hot = Vec::new();
    let mut nb = Vec::with_capacity(8);
    let mut dev = Vec::with_capacity(8);
    for y in 0..h {
        for x in 0..w {
            let v = img.get(x, y);
            if v <= MIN_HOT_LEVEL {
                continue;
            }
            nb.clear();
            nb.extend(neighbours(w, h, x, y).map(|(nx, ny)| img.get(nx, ny)));
            if nb.is_empty() {
                continue;
            }
            let med = median(&mut nb);
            dev.clear();
            dev.extend(nb.iter().map(|n| (n - med).abs()));
            let mad = median(&mut dev);
            if v - med > MAD_FACTOR * mad {
                hot.push(y * w + x);
            }
        }
    }
    hot
}

/// Replaces each hot pixel by the mean of its 8-neighbours that are not hot
/// themselves. Single pass; detection and replacement both read the input.
pub fn replace_hot_pixels(img: &Image2D) -> Result<Image2D> {
    img.ensure_normalized()?;
    let (w, h) = img.dims();
    let hot = detect_hot_pixels(img);
    if hot.is_empty() {
        return Ok(img.clone());
    }
    let mut is_hot = vec![false; w * h];
    for &p in &hot {
        is_hot[p] = true;
    }
    let mut out = img.values().to_vec();
    for &p in &hot {
        let (x, y) = (p % w, p / w);
        let (sum, n) = neighbours(w, h, x, y)
            .filter(|&(nx, ny)| !is_hot[ny * w + nx])
            .fold((0.0, 0usize), |(s, n), (nx, ny)| (s + img.get(nx, ny), n + 1));
        if n > 0 {
            out[p] = sum / n as f64;
        }
    }
    img.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    fn norm(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> Image2D {
        Image2D::from_fn(w, h, Domain::Normalized, f)
    }

    #[test]
    fn smooth_image_is_untouched() {
        let img = norm(12, 10, |x, y| {
            let dx = x as f64 - 5.5;
            let dy = y as f64 - 4.5;
            0.2 + 0.6 * (-(dx * dx + dy * dy) / 18.0).exp()
        });
        assert_eq!(replace_hot_pixels(&img).unwrap(), img);
    }

    #[test]
    fn single_spike_takes_neighbour_mean() {
        let img = norm(7, 7, |x, y| if (x, y) == (3, 4) { 1.0 } else { 0.01 });
        let out = replace_hot_pixels(&img).unwrap();
        assert!((out.get(3, 4) - 0.01).abs() < 1e-15);
        assert_eq!(out.values().iter().filter(|&&v| v != 0.01).count(), 0);
    }

    #[test]
    fn adjacent_spikes_are_both_repaired() {
        // 5x5 oracle: spikes at (2,2) and (3,2); each neighbourhood mean
        // excluding the other spike is the background value.
        let img = norm(5, 5, |x, y| if y == 2 && (x == 2 || x == 3) { 1.0 } else { 0.01 });
        assert_eq!(detect_hot_pixels(&img), vec![12, 13]);
        let out = replace_hot_pixels(&img).unwrap();
        assert!((out.get(2, 2) - 0.01).abs() < 1e-15);
        assert!((out.get(3, 2) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn dim_outliers_are_kept() {
        let img = norm(5, 5, |x, y| if (x, y) == (2, 2) { 0.09 } else { 0.0 });
        assert_eq!(replace_hot_pixels(&img).unwrap(), img);
    }

    #[test]
    fn edge_spike_uses_available_neighbours() {
        let img = norm(4, 4, |x, y| if (x, y) == (0, 0) { 0.9 } else { 0.05 });
        let out = replace_hot_pixels(&img).unwrap();
        assert!((out.get(0, 0) - 0.05).abs() < 1e-15);
    }
}
