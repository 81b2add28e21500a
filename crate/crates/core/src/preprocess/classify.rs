use serde::{Deserialize, Serialize};

use crate::model::OpticsConfig;
use crate::simulator::WaveVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Illumination {
    BrightField,
    DarkField,
}

/// Bright field when the illumination NA falls inside the objective NA.
pub fn classify_illumination(k: WaveVector, optics: &OpticsConfig) -> Illumination {
    if k.na() <= optics.na_obj {
        Illumination::BrightField
    } else {
        Illumination::DarkField
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::LedGeometry;
    use crate::LedIndex;

    #[test]
    fn default_geometry_classes() {
        let g = LedGeometry::default();
        let optics = OpticsConfig::default();
        let axis = g.axis_index();
        assert_eq!(classify_illumination(WaveVector::AXIAL, &optics), Illumination::BrightField);

        let three = g.wavevector(LedIndex::new(axis.row, axis.col + 3));
        assert!((three.na() - 12.0 / (144.0f64 + 7396.0).sqrt()).abs() < 1e-15);
        assert!((three.na() - 0.1382).abs() < 1e-4);
        assert_eq!(classify_illumination(three, &optics), Illumination::DarkField);

        let two = g.wavevector(LedIndex::new(axis.row, axis.col + 2));
        assert!((two.na() - 0.0926).abs() < 1e-4);
        assert_eq!(classify_illumination(two, &optics), Illumination::BrightField);
    }
}
