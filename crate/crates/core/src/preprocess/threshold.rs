use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Image2D;

/// Admissible range for the background threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub i_th: f64,
    pub bound: f64,
}

/// Upper bound for the background threshold: the mean per-image maximum
/// minus the mean per-image standard deviation.
pub fn threshold_bound<'a>(images: impl IntoIterator<Item = &'a Image2D>) -> Result<f64> {
    let (mut n, mut max_sum, mut std_sum) = (0usize, 0.0, 0.0);
    for img in images {
        n += 1;
        max_sum += img.max();
        std_sum += img.std_dev();
    }
    if n == 0 {
        return Err(Error::InvalidParameter("threshold bound of an empty stack".into()));
    }
    Ok(max_sum / n as f64 - std_sum / n as f64)
}

/// Zeroes every pixel below `i_th`.
pub fn apply_threshold(img: &Image2D, i_th: f64) -> Result<Image2D> {
    img.ensure_normalized()?;
    if !(0.0..=1.0).contains(&i_th) {
        return Err(Error::InvalidParameter(format!("threshold {i_th} outside [0, 1]")));
    }
    Ok(img.map(|v| if v < i_th { 0.0 } else { v }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;
    use proptest::prelude::*;

    fn norm(values: Vec<f64>) -> Image2D {
        let n = values.len();
        Image2D::new(n, 1, values, Domain::Normalized).unwrap()
    }

    #[test]
    fn constant_image_bound_is_its_value() {
        assert!((threshold_bound([&norm(vec![0.3; 9])]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn two_image_bound() {
        // (max, std) = (0.9, 0.1) and (0.7, 0.3)
        let a = norm(vec![0.7, 0.9]);
        let b = norm(vec![0.1, 0.7]);
        assert!((a.std_dev() - 0.1).abs() < 1e-12 && (b.std_dev() - 0.3).abs() < 1e-12);
        assert!((threshold_bound([&a, &b]).unwrap() - 0.6).abs() < 1e-12);
        assert!((threshold_bound([&b, &a]).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_stack_is_an_error() {
        assert!(threshold_bound(std::iter::empty::<&Image2D>()).is_err());
    }

    #[test]
    fn zero_threshold_is_identity() {
        let img = norm(vec![0.0, 0.01, 0.5]);
        assert_eq!(apply_threshold(&img, 0.0).unwrap(), img);
    }

    proptest! {
        #[test]
        fn idempotent_and_bimodal(values in proptest::collection::vec(0.0f64..=1.0, 1..40), t in 0.0f64..=1.0) {
            let img = norm(values);
            let once = apply_threshold(&img, t).unwrap();
            let twice = apply_threshold(&once, t).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.values().iter().all(|&v| v == 0.0 || v >= t));
        }
    }
}
