use crate::model::{full_scale, Image2D, Mask};

/// Validity mask for raw counts: a pixel is unusable when it sits at either
/// end of the sensor range.
pub fn mark_saturation(img: &Image2D, bit_depth: u32) -> Mask {
    let fs = full_scale(bit_depth);
    let (w, h) = img.dims();
    let bits = img.values().iter().map(|&v| v > 0.0 && v < fs).collect();
    Mask::from_bits(w, h, bits).expect("mask built from image dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    const RAW8: Domain = Domain::RawCounts { bit_depth: 8 };

    #[test]
    fn clean_image_is_all_valid() {
        let img = Image2D::from_fn(6, 4, RAW8, |x, y| (1 + x + 10 * y) as f64);
        assert_eq!(mark_saturation(&img, 8).count_false(), 0);
    }

    #[test]
    fn full_scale_image_is_all_invalid() {
        let img = Image2D::from_fn(6, 4, RAW8, |_, _| 255.0);
        assert_eq!(mark_saturation(&img, 8).count_true(), 0);
    }

    #[test]
    fn counts_clipped_pixels() {
        // counting oracle: place k extremes at known positions
        let positions = [(0usize, 0usize, 255.0), (3, 1, 0.0), (5, 3, 255.0), (2, 2, 0.0), (4, 0, 255.0)];
        let img = Image2D::from_fn(6, 4, RAW8, |x, y| {
            positions
                .iter()
                .find(|p| p.0 == x && p.1 == y)
                .map(|p| p.2)
                .unwrap_or(100.0)
        });
        let mask = mark_saturation(&img, 8);
        assert_eq!(mask.count_false(), positions.len());
        for p in positions {
            assert!(!mask.get(p.0, p.1));
        }
    }
}
