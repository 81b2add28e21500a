use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Image2D, Mask, RegionSpec};

/// Per-image dark-frame weights and the regions they were fitted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityRecord {
    pub alpha: Vec<f64>,
    pub regions: RegionSpec,
}

/// Least-squares weight of the dark frame inside `regions`:
/// `<sum i_m i_d> / <sum i_d^2>` with `<>` the mean over regions.
pub fn uniformity_alpha(i_m: &Image2D, i_d: &Image2D, regions: &RegionSpec) -> Result<f64> {
    uniformity_alpha_excluding(i_m, i_d, regions, None)
}

/// [`uniformity_alpha`] skipping pixels where `exclude` is set.
pub fn uniformity_alpha_excluding(
    i_m: &Image2D,
    i_d: &Image2D,
    regions: &RegionSpec,
    exclude: Option<&Mask>,
) -> Result<f64> {
    i_m.ensure_same_dims(i_d.dims())?;
    let (w, h) = i_m.dims();
    regions.validate(w, h)?;
    if let Some(m) = exclude {
        i_m.ensure_same_dims(m.dims())?;
    }
    let (mut cross, mut dark) = (0.0, 0.0);
    for rect in &regions.rects {
        for (x, y) in rect.pixels() {
            if exclude.is_some_and(|m| m.get(x, y)) {
                continue;
            }
            let d = i_d.get(x, y);
            cross += i_m.get(x, y) * d;
            dark += d * d;
        }
    }
    // The per-region means share the same divisor, which cancels.
    if dark == 0.0 {
        return Err(Error::DegenerateFit);
    }
    Ok(cross / dark)
}

/// `max(i_m - alpha i_d, 0)`, capped at 1.
pub fn weighted_subtract(i_m: &Image2D, i_d: &Image2D, alpha: f64) -> Result<Image2D> {
    i_m.ensure_normalized()?;
    i_m.ensure_same_dims(i_d.dims())?;
    let values = i_m
        .values()
        .iter()
        .zip(i_d.values())
        .map(|(m, d)| (m - alpha * d).clamp(0.0, 1.0))
        .collect();
    i_m.with_values(values)
}

/// Two corner rectangles of 1/16 of the frame each, at the corners with the
/// lowest mean in `reference`.
pub fn auto_regions(reference: &Image2D) -> RegionSpec {
    let (w, h) = reference.dims();
    let (rw, rh) = ((w / 4).max(1), (h / 4).max(1));
    let corners = [
        crate::Rect::new(0, 0, rw, rh),
        crate::Rect::new(w - rw, 0, rw, rh),
        crate::Rect::new(0, h - rh, rw, rh),
        crate::Rect::new(w - rw, h - rh, rw, rh),
    ];
    let mut scored: Vec<(f64, crate::Rect)> = corners
        .iter()
        .map(|r| {
            let sum: f64 = r.pixels().map(|(x, y)| reference.get(x, y)).sum();
            (sum / r.area() as f64, *r)
        })
        .collect();
    // stable: equal means keep corner order
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    RegionSpec::new(scored.into_iter().take(2).map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;
    use crate::Rect;

    fn norm(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> Image2D {
        Image2D::from_fn(w, h, Domain::Normalized, f)
    }

    fn regions() -> RegionSpec {
        RegionSpec::new(vec![Rect::new(0, 0, 4, 4), Rect::new(10, 6, 5, 3)])
    }

    fn dark() -> Image2D {
        norm(16, 10, |x, y| 0.01 + 0.002 * x as f64 + 0.001 * ((x * y) % 5) as f64)
    }

    #[test]
    fn identical_images_give_unit_alpha() {
        let d = dark();
        assert!((uniformity_alpha(&d, &d, &regions()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_image_gives_scale() {
        let d = dark();
        let m = d.map(|v| 2.5 * v);
        assert!((uniformity_alpha(&m, &d, &regions()).unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn zero_dark_is_degenerate() {
        let z = norm(16, 10, |_, _| 0.0);
        assert!(matches!(
            uniformity_alpha(&dark(), &z, &regions()),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn excluded_pixels_do_not_count() {
        let d = dark();
        let mut m = d.map(|v| 1.5 * v).into_values();
        m[0] = 0.9;
        let m = norm(16, 10, |x, y| m[y * 16 + x]);
        let mut bits = vec![false; 160];
        bits[0] = true;
        let excl = Mask::from_bits(16, 10, bits).unwrap();
        let a = uniformity_alpha_excluding(&m, &d, &regions(), Some(&excl)).unwrap();
        assert!((a - 1.5).abs() < 1e-14);
        assert!(uniformity_alpha(&m, &d, &regions()).unwrap() > 1.6);
    }

    #[test]
    fn subtract_edge_cases() {
        let d = dark();
        let m = d.map(|v| v + 0.1);
        assert_eq!(weighted_subtract(&m, &d, 0.0).unwrap(), m);
        let zero = weighted_subtract(&d, &d, 1.0).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let clamped = weighted_subtract(&d, &d, 3.0).unwrap();
        assert!(clamped.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn auto_regions_pick_darkest_corners() {
        let img = norm(16, 16, |x, y| if x < 8 && y >= 8 { 0.01 } else if x >= 8 && y < 8 { 0.02 } else { 0.3 });
        let r = auto_regions(&img);
        assert_eq!(r.rects, vec![Rect::new(0, 12, 4, 4), Rect::new(12, 0, 4, 4)]);
        assert_eq!(r.rects[0].area() * 16, 16 * 16);
    }

    proptest::proptest! {
        #[test]
        fn alpha_is_linear_in_measurement(c in 0.01f64..10.0) {
            let d = dark();
            let m = norm(16, 10, |x, y| 0.03 + 0.01 * ((3 * x + y) % 4) as f64);
            let a = uniformity_alpha(&m, &d, &regions()).unwrap();
            let scaled = Image2D::new(16, 10, m.values().iter().map(|v| v * c).collect(), Domain::Normalized).unwrap();
            let ac = uniformity_alpha(&scaled, &d, &regions()).unwrap();
            proptest::prop_assert!((ac - c * a).abs() <= 1e-12 * ac.abs().max(1.0));
        }
    }
}
