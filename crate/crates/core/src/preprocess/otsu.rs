use crate::error::{Error, Result};
use crate::model::Image2D;

/// Histogram bin of a normalized value.
#[inline]
pub fn quantize(v: f64, levels: usize) -> usize {
    ((v * levels as f64).floor().max(0.0) as usize).min(levels - 1)
}

/// Otsu threshold over `levels` histogram bins.
///
/// Returns `t / levels` where pixels in bins `>= t` form the bright class and
/// `t` maximizes the between-class variance (equivalently minimizes the
/// intraclass variance). Ties go to the lowest `t`. Candidate scores are
/// compared exactly in integer arithmetic when it fits, so ties are real ties.
pub fn otsu_threshold(img: &Image2D, levels: usize) -> Result<f64> {
    img.ensure_normalized()?;
    if levels < 2 {
        return Err(Error::InvalidParameter("Otsu needs at least two levels".into()));
    }
    let mut hist = vec![0u64; levels];
    for &v in img.values() {
        hist[quantize(v, levels)] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let t = best_split_exact(&hist).unwrap_or_else(|| best_split_float(&hist));
    Ok(t as f64 / levels as f64)
}

/// Per-split class sums `(t, n0, s0, n1, s1)` for every split with two
/// non-empty classes.
fn splits(hist: &[u64]) -> impl Iterator<Item = (usize, u64, u64, u64, u64)> + '_ {
    let total_n: u64 = hist.iter().sum();
    let total_s: u64 = hist.iter().enumerate().map(|(b, &c)| b as u64 * c).sum();
    let (mut n0, mut s0) = (0u64, 0u64);
    (1..hist.len()).filter_map(move |t| {
        n0 += hist[t - 1];
        s0 += (t as u64 - 1) * hist[t - 1];
        let n1 = total_n - n0;
        (n0 > 0 && n1 > 0).then(|| (t, n0, s0, n1, total_s - s0))
    })
}

/// Maximizes `(s0 n1 - s1 n0)^2 / (n0 n1)` with exact rational comparison.
/// `None` when the products overflow `u128`.
fn best_split_exact(hist: &[u64]) -> Option<usize> {
    let mut best: Option<(usize, u128, u128)> = None;
    for (t, n0, s0, n1, s1) in splits(hist) {
        let d = (s0 as i128 * n1 as i128 - s1 as i128 * n0 as i128).unsigned_abs();
        let num = d.checked_mul(d)?;
        let den = n0 as u128 * n1 as u128;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num.checked_mul(bd)? > bn.checked_mul(den)?,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

fn best_split_float(hist: &[u64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (t, n0, s0, n1, s1) in splits(hist) {
        let d = s0 as f64 * n1 as f64 - s1 as f64 * n0 as f64;
        let score = d * d / (n0 as f64 * n1 as f64);
        if score > best.1 {
            best = (t, score);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    fn img(values: Vec<f64>) -> Image2D {
        let n = values.len();
        Image2D::new(n, 1, values, Domain::Normalized).unwrap()
    }

    #[test]
    fn bimodal_split_lands_between_modes() {
        let mut v = vec![0.2; 50];
        v.extend(vec![0.8; 50]);
        let t = otsu_threshold(&img(v), 256).unwrap();
        assert!(t > 0.2 && t <= 0.8, "{t}");
        // every split between the modes ties; the lowest wins
        assert_eq!(t, 52.0 / 256.0);
    }

    #[test]
    fn constant_image_is_degenerate() {
        assert!(matches!(
            otsu_threshold(&img(vec![0.4; 30]), 256),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn three_level_image() {
        // 10 px at bin 10, 10 at bin 20, 1 at bin 200. By hand, d^2 / (n0 n1):
        // t=11: n0=10,s0=100,n1=11,s1=400 -> d=|1100-4000|=2900, 2900^2/110=76454.5
        // t=21: n0=20,s0=300,n1=1,s1=200 -> d=|300-4000|=3700, 3700^2/20=684500
        let mut v = vec![10.5 / 256.0; 10];
        v.extend(vec![20.5 / 256.0; 10]);
        v.push(200.5 / 256.0);
        assert_eq!(otsu_threshold(&img(v), 256).unwrap(), 21.0 / 256.0);
    }
}
