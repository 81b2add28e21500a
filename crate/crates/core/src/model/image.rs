use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest representable count for a sensor of the given bit depth.
pub fn full_scale(bit_depth: u32) -> f64 {
    ((1u64 << bit_depth) - 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Sensor counts in `[0, 2^bit_depth - 1]`.
    RawCounts { bit_depth: u32 },
    /// Intensities scaled to `[0, 1]`.
    Normalized,
}

/// Real-valued intensity grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    values: Vec<f64>,
    domain: Domain,
}

impl Image2D {
    pub fn new(width: usize, height: usize, values: Vec<f64>, domain: Domain) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::MalformedInput(format!(
                "expected {} values for a {width}x{height} image, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedInput(format!("non-finite value at index {i}")));
        }
        if domain == Domain::Normalized {
            if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::MalformedInput(format!(
                    "normalized value {} at index {i} outside [0, 1]",
                    values[i]
                )));
            }
        }
        Ok(Self {
            width,
            height,
            values,
            domain,
        })
    }

    pub fn zeros(width: usize, height: usize, domain: Domain) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            values: vec![0.0; width * height],
            domain,
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        domain: Domain,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
            domain,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn domain(&self) -> Domain {
        self.domain
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Applies `f` to every pixel, keeping dimensions and domain.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
            domain: self.domain,
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, values, self.domain)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let var = self
            .values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.values.len() as f64;
        var.sqrt()
    }

    pub fn ensure_same_dims(&self, other_dims: (usize, usize)) -> Result<()> {
        if self.dims() != other_dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other_dims,
            });
        }
        Ok(())
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        match self.domain {
            Domain::Normalized => Ok(()),
            Domain::RawCounts { .. } => Err(Error::MalformedInput(
                "expected a normalized image, got raw counts".into(),
            )),
        }
    }
}

/// Maps raw sensor counts onto `[0, 1]` by dividing by the bit-depth full scale.
pub fn normalize_image(img: &Image2D, bit_depth: u32) -> Result<Image2D> {
    match img.domain {
        Domain::RawCounts { bit_depth: tagged } if tagged == bit_depth => {}
        Domain::RawCounts { bit_depth: tagged } => {
            return Err(Error::MalformedInput(format!(
                "image is tagged {tagged}-bit but {bit_depth}-bit normalization was requested"
            )))
        }
        Domain::Normalized => {
            return Err(Error::MalformedInput("image is already normalized".into()))
        }
    }
    let fs = full_scale(bit_depth);
    if let Some((i, v)) = img
        .values
        .iter()
        .enumerate()
        .find(|(_, &v)| !(0.0..=fs).contains(&v))
    {
        return Err(Error::MalformedInput(format!(
            "value {v} at index {i} is outside the {bit_depth}-bit range [0, {fs}]"
        )));
    }
    Ok(Image2D {
        width: img.width,
        height: img.height,
        values: img.values.iter().map(|v| v / fs).collect(),
        domain: Domain::Normalized,
    })
}

/// Per-pixel boolean mask with the same layout as [`Image2D`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::MalformedInput(format!(
                "mask of {width}x{height} needs {} entries, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn count_false(&self) -> usize {
        self.bits.len() - self.count_true()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw8(values: Vec<f64>) -> Image2D {
        let n = values.len();
        Image2D::new(n, 1, values, Domain::RawCounts { bit_depth: 8 }).unwrap()
    }

    #[test]
    fn normalize_zero_and_full_scale() {
        let zeros = normalize_image(&raw8(vec![0.0; 4]), 8).unwrap();
        assert!(zeros.values().iter().all(|&v| v == 0.0));
        assert_eq!(zeros.domain(), Domain::Normalized);

        let full = normalize_image(&raw8(vec![255.0; 4]), 8).unwrap();
        assert!(full.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn normalize_51_is_one_fifth() {
        let out = normalize_image(&raw8(vec![51.0]), 8).unwrap();
        assert!((out.values()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_out_of_range() {
        let err = normalize_image(&raw8(vec![12.0, 256.0]), 8).unwrap_err();
        assert!(matches!(err, Error::MalformedInput(_)));
        let err = normalize_image(&raw8(vec![-1.0]), 8).unwrap_err();
        assert!(matches!(err, Error::MalformedInput(_)));
    }

    #[test]
    fn normalize_rejects_wrong_tag() {
        let img = raw8(vec![1.0]);
        assert!(normalize_image(&img, 12).is_err());
        let norm = normalize_image(&img, 8).unwrap();
        assert!(normalize_image(&norm, 8).is_err());
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(Image2D::new(0, 3, vec![], Domain::Normalized).is_err());
        assert!(Image2D::new(2, 2, vec![0.0; 3], Domain::Normalized).is_err());
        assert!(Image2D::new(1, 1, vec![f64::NAN], Domain::Normalized).is_err());
    }

    #[test]
    fn population_std() {
        let img = Image2D::new(4, 1, vec![0.0, 0.0, 1.0, 1.0], Domain::Normalized).unwrap();
        assert!((img.std_dev() - 0.5).abs() < 1e-15);
        assert_eq!(img.max(), 1.0);
    }

    proptest::proptest! {
        #[test]
        fn normalize_is_monotone(a in 0u32..4096, b in 0u32..4096) {
            let img = Image2D::new(2, 1, vec![a as f64, b as f64], Domain::RawCounts { bit_depth: 12 }).unwrap();
            let n = normalize_image(&img, 12).unwrap();
            let (na, nb) = (n.values()[0], n.values()[1]);
            proptest::prop_assert_eq!(a.cmp(&b), na.partial_cmp(&nb).unwrap());
            proptest::prop_assert!((0.0..=1.0).contains(&na));
        }
    }
}
