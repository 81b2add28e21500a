//! Synthetic LED-array microscope.
//!
//! Geometry: the LED at matrix index `(rows / 2, cols / 2)` sits on the optical
//! axis (shifted by `center_offset_mm`). An LED at lateral offset `(dx, dy)`
//! illuminates the sample with direction sines `-dx / r`, `-dy / r`, where
//! `r = sqrt(dx^2 + dy^2 + h^2)`.

mod dataset;
mod forward;
mod noise;
pub mod phantom;
mod pupil;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LedIndex, OpticsConfig};

pub use dataset::{simulate, NoiseConfig, SimulatedDataset, SimulationConfig};
pub use forward::{crop_origin, forward_capture, model_intensity, spectrum_offset};
pub use noise::{inject_noise, random_blobs, DarkModel, HotPixels, NoiseSpec, StrayBlob};
pub use pupil::{make_pupil, make_pupil_with_defocus, PupilGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedGeometry {
    pub rows: usize,
    pub cols: usize,
    pub spacing_mm: f64,
    /// Distance between the LED plane and the sample.
    pub height_mm: f64,
    pub center_offset_mm: (f64, f64),
}

impl Default for LedGeometry {
    /// 32x32 matrix, 4 mm pitch, 86 mm above the sample.
    fn default() -> Self {
        Self {
            rows: 32,
            cols: 32,
            spacing_mm: 4.0,
            height_mm: 86.0,
            center_offset_mm: (0.0, 0.0),
        }
    }
}

impl LedGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParameter("LED matrix must have at least one row and column".into()));
        }
        if !(self.spacing_mm > 0.0) || !(self.height_mm > 0.0) {
            return Err(Error::InvalidParameter("LED spacing and height must be positive".into()));
        }
        Ok(())
    }

    pub fn axis_index(&self) -> LedIndex {
        LedIndex::new(self.rows / 2, self.cols / 2)
    }

    /// Lateral offset `(dx, dy)` of an LED from the optical axis, in mm.
    pub fn lateral_offset(&self, led: LedIndex) -> (f64, f64) {
        let axis = self.axis_index();
        (
            (led.col as f64 - axis.col as f64) * self.spacing_mm + self.center_offset_mm.0,
            (led.row as f64 - axis.row as f64) * self.spacing_mm + self.center_offset_mm.1,
        )
    }

    pub fn wavevector(&self, led: LedIndex) -> WaveVector {
        let (dx, dy) = self.lateral_offset(led);
        let r = (dx * dx + dy * dy + self.height_mm * self.height_mm).sqrt();
        WaveVector {
            sin_x: -dx / r,
            sin_y: -dy / r,
        }
    }
}

/// Block of LEDs switched on during acquisition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActiveRange {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ActiveRange {
    /// `n x n` block centred on the axis LED of `geom`.
    pub fn centered(geom: &LedGeometry, n: usize) -> Self {
        let axis = geom.axis_index();
        Self {
            row0: axis.row.saturating_sub(n / 2),
            col0: axis.col.saturating_sub(n / 2),
            rows: n,
            cols: n,
        }
    }

    pub fn leds(&self) -> impl Iterator<Item = LedIndex> + '_ {
        (self.row0..self.row0 + self.rows)
            .flat_map(move |r| (self.col0..self.col0 + self.cols).map(move |c| LedIndex::new(r, c)))
    }
}

/// Illumination direction sines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    pub sin_x: f64,
    pub sin_y: f64,
}

impl WaveVector {
    pub const AXIAL: WaveVector = WaveVector {
        sin_x: 0.0,
        sin_y: 0.0,
    };

    /// Illumination NA.
    pub fn na(&self) -> f64 {
        self.sin_x.hypot(self.sin_y)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sin_x * self.sin_x + self.sin_y * self.sin_y >= 1.0 {
            return Err(Error::InvalidParameter(format!("{self:?} is not a propagating direction")));
        }
        Ok(())
    }

    /// Spatial frequency `(fx, fy)` in cycles/um.
    pub fn frequency(&self, optics: &OpticsConfig) -> (f64, f64) {
        let lambda = optics.wavelength_um();
        (self.sin_x / lambda, self.sin_y / lambda)
    }
}

/// Direction sines for every active LED, ordered as a center-outward spiral.
pub fn led_wavevectors(geom: &LedGeometry, active: &ActiveRange) -> Result<Vec<(LedIndex, WaveVector)>> {
    geom.validate()?;
    if active.rows == 0 || active.cols == 0 {
        return Err(Error::InvalidParameter("active LED range is empty".into()));
    }
    if active.row0 + active.rows > geom.rows || active.col0 + active.cols > geom.cols {
        return Err(Error::InvalidParameter(format!(
            "active range {active:?} exceeds the {}x{} matrix",
            geom.rows, geom.cols
        )));
    }
    let leds: Vec<LedIndex> = active.leds().collect();
    Ok(spiral_order(geom, &leds)
        .into_iter()
        .map(|i| (leds[i], geom.wavevector(leds[i])))
        .collect())
}

/// Permutation visiting `leds` along a square spiral that starts at the LED
/// closest to the optical axis (ties to the lowest row, then column).
pub fn spiral_order(geom: &LedGeometry, leds: &[LedIndex]) -> Vec<usize> {
    if leds.is_empty() {
        return Vec::new();
    }
    let dist2 = |l: LedIndex| {
        let (dx, dy) = geom.lateral_offset(l);
        dx * dx + dy * dy
    };
    let start = leds
        .iter()
        .copied()
        .min_by(|a, b| dist2(*a).total_cmp(&dist2(*b)).then(a.cmp(b)))
        .unwrap();

    let mut lookup: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, l) in leds.iter().enumerate() {
        lookup.entry((l.row as i64, l.col as i64)).or_default().push(i);
    }
    let (min_r, max_r) = leds.iter().fold((i64::MAX, i64::MIN), |(lo, hi), l| {
        (lo.min(l.row as i64), hi.max(l.row as i64))
    });
    let (min_c, max_c) = leds.iter().fold((i64::MAX, i64::MIN), |(lo, hi), l| {
        (lo.min(l.col as i64), hi.max(l.col as i64))
    });
    let reach = (max_r - min_r).max(max_c - min_c) + 1;

    let mut order = Vec::with_capacity(leds.len());
    let (mut r, mut c) = (start.row as i64, start.col as i64);
    let mut take = |r: i64, c: i64, order: &mut Vec<usize>| {
        if let Some(ids) = lookup.remove(&(r, c)) {
            order.extend(ids);
        }
    };
    take(r, c, &mut order);
    // right, down, left, up with run lengths 1, 1, 2, 2, 3, 3, ...
    const DIRS: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
    let mut run = 1;
    'walk: while order.len() < leds.len() {
        for (turn, (dr, dc)) in DIRS.iter().enumerate() {
            for _ in 0..run {
                r += dr;
                c += dc;
                take(r, c, &mut order);
            }
            if turn % 2 == 1 {
                run += 1;
            }
            if run > 2 * reach + 2 {
                break 'walk;
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_geometry() -> (LedGeometry, ActiveRange) {
        let g = LedGeometry::default();
        (g, ActiveRange::centered(&g, 15))
    }

    #[test]
    fn on_axis_led_is_normal_incidence() {
        let (g, _) = default_geometry();
        let k = g.wavevector(g.axis_index());
        assert_eq!(k.na(), 0.0);
    }

    #[test]
    fn neighbour_led_direction() {
        let (g, _) = default_geometry();
        let axis = g.axis_index();
        let k = g.wavevector(LedIndex::new(axis.row, axis.col + 1));
        let expected = -4.0 / (16.0f64 + 7396.0).sqrt();
        assert!((k.sin_x - expected).abs() < 1e-12);
        assert!((k.sin_x - -0.04646).abs() < 1e-5);
        assert_eq!(k.sin_y, 0.0);
    }

    #[test]
    fn corner_of_15x15_patch_reaches_synthetic_na() {
        let (g, a) = default_geometry();
        let corner = LedIndex::new(a.row0, a.col0);
        let (dx, dy) = g.lateral_offset(corner);
        assert_eq!((dx, dy), (-28.0, -28.0));
        let na = g.wavevector(corner).na();
        assert!((na - 0.418).abs() < 1e-3, "corner NA {na}");
        assert!((na + 0.1 - 0.52).abs() < 2e-3);
    }

    #[test]
    fn spiral_starts_on_axis_and_covers_everything() {
        let (g, a) = default_geometry();
        let list = led_wavevectors(&g, &a).unwrap();
        assert_eq!(list.len(), 225);
        assert_eq!(list[0].0, g.axis_index());
        let mut seen: Vec<LedIndex> = list.iter().map(|(l, _)| *l).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 225);
        // first ring (Chebyshev distance 1) precedes everything further out
        let ring = |l: LedIndex| {
            let ax = g.axis_index();
            (l.row as i64 - ax.row as i64).abs().max((l.col as i64 - ax.col as i64).abs())
        };
        let rings: Vec<i64> = list.iter().map(|(l, _)| ring(*l)).collect();
        assert!(rings.windows(2).all(|w| w[0] <= w[1]), "{rings:?}");
    }

    #[test]
    fn spiral_handles_off_center_ranges() {
        let g = LedGeometry::default();
        let a = ActiveRange {
            row0: 0,
            col0: 0,
            rows: 3,
            cols: 5,
        };
        let list = led_wavevectors(&g, &a).unwrap();
        assert_eq!(list.len(), 15);
        assert_eq!(list[0].0, LedIndex::new(2, 4));
    }

    #[test]
    fn empty_or_oversized_range_is_rejected() {
        let g = LedGeometry::default();
        let empty = ActiveRange {
            row0: 0,
            col0: 0,
            rows: 0,
            cols: 3,
        };
        assert!(led_wavevectors(&g, &empty).is_err());
        let big = ActiveRange {
            row0: 20,
            col0: 0,
            rows: 15,
            cols: 3,
        };
        assert!(led_wavevectors(&g, &big).is_err());
    }

    #[test]
    fn symmetric_set_without_offset() {
        let (g, a) = default_geometry();
        let list = led_wavevectors(&g, &a).unwrap();
        for (_, k) in &list {
            let mirrored = list
                .iter()
                .any(|(_, m)| (m.sin_x + k.sin_x).abs() < 1e-15 && (m.sin_y - k.sin_y).abs() < 1e-15);
            assert!(mirrored);
        }
    }

    proptest::proptest! {
        #[test]
        fn sine_grows_with_lateral_distance(d1 in 0.0f64..60.0, d2 in 0.0f64..60.0, h in 10.0f64..200.0) {
            let s = |d: f64| d / (d * d + h * h).sqrt();
            if d1 < d2 {
                proptest::prop_assert!(s(d1) < s(d2));
            }
        }
    }
}
