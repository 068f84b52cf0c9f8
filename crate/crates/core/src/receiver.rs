//! The imaging receiver: concentrator optics, the 288-pixel detector and its
//! direction-to-pixel map, and the pixel's electrical bandwidth.
//!
//! The receiver always faces straight up. A lens concentrator of 3 cm
//! entrance diameter focuses arrivals onto a 16 x 18 pixel array through a
//! tangent-plane projection: a ray at polar angle theta and azimuth alpha
//! lands at image radius `s * tan(theta)`, with the scale `s` normalised so
//! the acceptance half-angle maps to the detector half-diagonal. The pixel
//! array itself resolves a narrower cone than the concentrator: 288 pixels
//! of 4.7 degree angular pitch tile a cone of about 46 degrees, and rays
//! outside it miss the array even though the concentrator accepts them.

use crate::geom::{Direction3, Point3};
use thiserror::Error;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Angular field of view of a single pixel, degrees.
pub const PER_PIXEL_FOV_DEG: f64 = 4.7;

/// OOK needs channel bandwidth of 0.7 times the bit rate.
pub const OOK_BANDWIDTH_PER_BIT: f64 = 0.7;

#[derive(Debug, Error, PartialEq)]
pub enum ReceiverError {
    #[error("incidence angle {0} rad is outside (0, pi/2]")]
    AngleOutOfRange(f64),
}

/// Lens concentrator in front of the detector array.
#[derive(Debug, Clone, PartialEq)]
pub struct Concentrator {
    /// Entrance aperture area, m^2.
    pub entrance_area_m2: f64,
    /// Lens refractive index.
    pub refractive_index: f64,
    /// Acceptance half-angle, radians.
    pub acceptance_half_angle_rad: f64,
    /// Transmission polynomial in the incidence angle (radians):
    /// `c2 * d^2 + c1 * d + c0`.
    pub transmission_coeffs: [f64; 3],
}

impl Default for Concentrator {
    fn default() -> Self {
        Self {
            // 3 cm entrance diameter.
            entrance_area_m2: 9.0 * std::f64::consts::PI / 4.0 * 1e-4,
            refractive_index: 1.7,
            acceptance_half_angle_rad: 65.0_f64.to_radians(),
            transmission_coeffs: [-0.1982, 0.0425, 0.8778],
        }
    }
}

impl Concentrator {
    /// Concentration gain N^2 / sin^2(psi) at receiving angle `psi`.
    pub fn gain(&self, psi: f64) -> Result<f64, ReceiverError> {
        if psi <= 0.0 || psi > std::f64::consts::FRAC_PI_2 {
            return Err(ReceiverError::AngleOutOfRange(psi));
        }
        let n = self.refractive_index;
        Ok(n * n / psi.sin().powi(2))
    }

    /// Gain at the design acceptance angle; applied to every accepted ray.
    pub fn design_gain(&self) -> f64 {
        self.gain(self.acceptance_half_angle_rad)
            .expect("acceptance angle inside (0, pi/2]")
    }

    /// Transmission factor at incidence angle `delta` (radians), clamped to
    /// [0, 1].
    pub fn transmission(&self, delta: f64) -> f64 {
        let [c2, c1, c0] = self.transmission_coeffs;
        ((c2 * delta + c1) * delta + c0).clamp(0.0, 1.0)
    }
}

/// Zero-based pixel coordinates on the detector array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelIndex {
    pub row: usize,
    pub col: usize,
}

impl PixelIndex {
    pub fn one_based(self) -> (usize, usize) {
        (self.row + 1, self.col + 1)
    }
}

/// The detector array behind the concentrator.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    pub rows: usize,
    pub cols: usize,
    /// Area of one pixel, m^2.
    pub pixel_area_m2: f64,
    /// Half-angle of the cone the pixel array resolves, radians.
    pub array_half_angle_rad: f64,
}

impl Default for PixelGrid {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 18,
            pixel_area_m2: 0.694e-6,
            array_half_angle_rad: array_half_angle(16 * 18, PER_PIXEL_FOV_DEG),
        }
    }
}

/// Half-angle of the cone whose solid angle equals `count` square pixels of
/// `pixel_fov_deg` angular side.
pub fn array_half_angle(count: usize, pixel_fov_deg: f64) -> f64 {
    let per_pixel = pixel_fov_deg.to_radians().powi(2);
    let total = count as f64 * per_pixel;
    (1.0 - total / (2.0 * std::f64::consts::PI)).acos()
}

impl PixelGrid {
    pub fn pixel_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Pixel edge length, m.
    pub fn pixel_side_m(&self) -> f64 {
        self.pixel_area_m2.sqrt()
    }

    /// Detector area, m^2.
    pub fn detector_area_m2(&self) -> f64 {
        self.pixel_count() as f64 * self.pixel_area_m2
    }

    pub fn linear_index(&self, px: PixelIndex) -> usize {
        px.row * self.cols + px.col
    }
}

/// Electrical model of one pixel's photodetector and front end.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotodetectorElectrical {
    /// Responsivity, A/W.
    pub responsivity: f64,
    /// Load resistance, ohms.
    pub load_ohm: f64,
    /// Detector thickness, m.
    pub thickness_m: f64,
    /// Relative permittivity of the detector material (silicon).
    pub eps_r: f64,
    /// Noise bandwidth of the data path, Hz.
    pub data_bandwidth_hz: f64,
}

impl Default for PhotodetectorElectrical {
    fn default() -> Self {
        Self {
            responsivity: 0.4,
            load_ohm: 50.0,
            thickness_m: 100e-6,
            eps_r: 11.68,
            data_bandwidth_hz: 4e9,
        }
    }
}

impl PhotodetectorElectrical {
    /// RC-limited bandwidth of a pixel of the given area:
    /// `1 / (2 pi R_l C_d)` with `C_d = eps0 eps_r A / w`.
    pub fn pixel_bandwidth(&self, pixel_area_m2: f64) -> f64 {
        let capacitance = EPSILON_0 * self.eps_r * pixel_area_m2 / self.thickness_m;
        1.0 / (2.0 * std::f64::consts::PI * self.load_ohm * capacitance)
    }
}

/// Highest OOK bit rate a channel of the given bandwidth supports.
pub fn max_ook_rate(bandwidth_hz: f64) -> f64 {
    bandwidth_hz / OOK_BANDWIDTH_PER_BIT
}

/// The complete receiver: position, optics, pixel array, electronics.
/// Orientation is fixed: elevation 90 degrees (facing the ceiling),
/// azimuth 0 (grid columns along x, rows along y).
#[derive(Debug, Clone, PartialEq)]
pub struct ImagingReceiver {
    pub position: Point3,
    pub concentrator: Concentrator,
    pub grid: PixelGrid,
    pub electrical: PhotodetectorElectrical,
}

impl ImagingReceiver {
    pub fn at(position: Point3) -> Self {
        Self {
            position,
            concentrator: Concentrator::default(),
            grid: PixelGrid::default(),
            electrical: PhotodetectorElectrical::default(),
        }
    }

    /// Image-plane scale: the acceptance half-angle maps to the detector
    /// half-diagonal.
    pub fn focal_scale_m(&self) -> f64 {
        let side = self.grid.pixel_side_m();
        let half_u = self.grid.cols as f64 * side / 2.0;
        let half_v = self.grid.rows as f64 * side / 2.0;
        let half_diag = (half_u * half_u + half_v * half_v).sqrt();
        half_diag / self.concentrator.acceptance_half_angle_rad.tan()
    }

    /// Map an incoming ray to the pixel it lands on.
    ///
    /// `incidence` is the propagation direction of the arriving ray and must
    /// point downward into the receiver. Returns `None` when the ray falls
    /// outside the concentrator acceptance cone, outside the cone the pixel
    /// array resolves, or off the detector rectangle. Image-plane
    /// coordinates on a cell boundary go to the lower-index pixel.
    pub fn pixel_for_direction(&self, incidence: Direction3) -> Option<PixelIndex> {
        let v = incidence.as_vec();
        if v.z >= 0.0 {
            return None;
        }
        // Direction back toward the source.
        let (sx, sy, sz) = (-v.x, -v.y, -v.z);
        let horiz = (sx * sx + sy * sy).sqrt();
        let theta = horiz.atan2(sz);
        if theta > self.concentrator.acceptance_half_angle_rad
            || theta > self.grid.array_half_angle_rad
        {
            return None;
        }
        let s = self.focal_scale_m();
        let radial = s * theta.tan();
        let (u, w) = if horiz == 0.0 {
            (0.0, 0.0)
        } else {
            (radial * sx / horiz, radial * sy / horiz)
        };
        let side = self.grid.pixel_side_m();
        let col = cell_index(u + self.grid.cols as f64 * side / 2.0, side, self.grid.cols)?;
        let row = cell_index(w + self.grid.rows as f64 * side / 2.0, side, self.grid.rows)?;
        Some(PixelIndex { row, col })
    }

    /// Data-rate ceiling imposed by the receiver: the smaller of the pixel's
    /// RC bandwidth limit and the 4 GHz data path.
    pub fn rate_cap_bps(&self) -> f64 {
        let pixel_bw = self.electrical.pixel_bandwidth(self.grid.pixel_area_m2);
        max_ook_rate(pixel_bw.min(self.electrical.data_bandwidth_hz))
    }
}

/// Grid cell holding offset `x` (from the low edge) with cell width `side`;
/// exact boundaries belong to the lower cell.
fn cell_index(x: f64, side: f64, count: usize) -> Option<usize> {
    if x < 0.0 {
        return None;
    }
    let a = x / side;
    let idx = if a > 0.0 && a.fract() == 0.0 {
        a as usize - 1
    } else {
        a.floor() as usize
    };
    (idx < count).then_some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn receiver() -> ImagingReceiver {
        ImagingReceiver::at(Point3::new(2.0, 4.0, 1.0))
    }

    fn down_from(theta_deg: f64, alpha_deg: f64) -> Direction3 {
        let t = theta_deg.to_radians();
        let a = alpha_deg.to_radians();
        Direction3::normalize(Vec3::new(-t.sin() * a.cos(), -t.sin() * a.sin(), -t.cos())).unwrap()
    }

    #[test]
    fn gain_matches_closed_form() {
        let c = Concentrator::default();
        assert!((c.gain(65.0_f64.to_radians()).unwrap() - 3.518).abs() < 1e-3);
        assert!((c.gain(90.0_f64.to_radians()).unwrap() - 2.89).abs() < 1e-9);
        assert!((c.gain(30.0_f64.to_radians()).unwrap() - 11.56).abs() < 1e-9);
        assert!(c.gain(0.0).is_err());
        assert!(c.gain(-0.3).is_err());
    }

    #[test]
    fn gain_monotonically_decreasing() {
        let c = Concentrator::default();
        let mut prev = f64::INFINITY;
        for i in 1..=90 {
            let g = c.gain((i as f64).to_radians()).unwrap();
            assert!(g < prev, "gain not decreasing at {i} deg");
            prev = g;
        }
    }

    #[test]
    fn transmission_polynomial_values() {
        let c = Concentrator::default();
        assert_eq!(c.transmission(0.0), 0.8778);
        assert!((c.transmission(0.5) - 0.8495).abs() < 1e-12);
        assert!((c.transmission(65.0_f64.to_radians()) - 0.6709).abs() < 5e-4);
        // Clamped outside [0, 1].
        assert_eq!(c.transmission(10.0), 0.0);
    }

    #[test]
    fn pixel_bandwidth_near_reference_value() {
        let e = PhotodetectorElectrical::default();
        let bw = e.pixel_bandwidth(0.694e-6);
        assert!((bw - 4.48e9).abs() / 4.48e9 < 0.02, "bw = {bw:.4e}");
        // Inverse proportionality in area, proportionality in thickness.
        assert!((e.pixel_bandwidth(2.0 * 0.694e-6) - bw / 2.0).abs() / bw < 1e-12);
        let thick = PhotodetectorElectrical {
            thickness_m: 200e-6,
            ..e.clone()
        };
        assert!((thick.pixel_bandwidth(0.694e-6) - 2.0 * bw).abs() / bw < 1e-12);
    }

    #[test]
    fn ook_rate_relation() {
        assert!((max_ook_rate(4.48e9) - 6.35e9).abs() / 6.35e9 < 0.015);
        assert!((max_ook_rate(0.7e9) - 1e9).abs() < 1e-6);
        assert!((max_ook_rate(4e9) - 5.714285714285714e9).abs() < 1.0);
    }

    #[test]
    fn normal_incidence_hits_centre_pixel() {
        let px = receiver().pixel_for_direction(Direction3::DOWN).unwrap();
        assert_eq!(px.one_based(), (8, 9));
    }

    #[test]
    fn beyond_acceptance_angle_is_rejected() {
        let rx = receiver();
        assert!(rx.pixel_for_direction(down_from(66.0, 30.0)).is_none());
        // Upward vectors are not incidences.
        assert!(rx.pixel_for_direction(Direction3::UP).is_none());
    }

    #[test]
    fn array_cone_narrower_than_concentrator() {
        let rx = receiver();
        let cut = rx.grid.array_half_angle_rad.to_degrees();
        assert!((cut - 46.2).abs() < 0.2, "array half-angle {cut} deg");
        // Inside the array cone a ray lands on a pixel; between the array
        // cone and the concentrator acceptance it misses the array.
        assert!(rx.pixel_for_direction(down_from(45.0, 45.0)).is_some());
        assert!(rx.pixel_for_direction(down_from(50.0, 45.0)).is_none());
        assert!(rx.pixel_for_direction(down_from(60.0, 10.0)).is_none());
    }

    #[test]
    fn separated_directions_land_on_different_pixels() {
        let rx = receiver();
        // Two rays separated by well over the per-pixel angular pitch.
        let a = rx.pixel_for_direction(down_from(10.0, 0.0)).unwrap();
        let b = rx.pixel_for_direction(down_from(22.0, 0.0)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn azimuth_flip_point_reflects_the_pixel() {
        let rx = receiver();
        for (theta, alpha) in [(12.0, 33.0), (25.0, 120.0), (40.0, 260.0), (9.5, 78.0)] {
            let a = rx.pixel_for_direction(down_from(theta, alpha)).unwrap();
            let b = rx
                .pixel_for_direction(down_from(theta, alpha + 180.0))
                .unwrap();
            assert_eq!(
                b.row,
                rx.grid.rows - 1 - a.row,
                "theta {theta} alpha {alpha}"
            );
            assert_eq!(
                b.col,
                rx.grid.cols - 1 - a.col,
                "theta {theta} alpha {alpha}"
            );
        }
    }

    #[test]
    fn accepted_directions_partition_onto_single_pixels() {
        // Scan a grid of in-cone directions: each accepted one maps to
        // exactly one valid pixel.
        let rx = receiver();
        let mut accepted = 0;
        for i in 0..60 {
            for j in 0..60 {
                let theta = 45.9 * (i as f64 + 0.5) / 60.0;
                let alpha = 360.0 * (j as f64 + 0.5) / 60.0;
                if let Some(px) = rx.pixel_for_direction(down_from(theta, alpha)) {
                    accepted += 1;
                    assert!(px.row < rx.grid.rows && px.col < rx.grid.cols);
                }
            }
        }
        assert!(accepted > 3000, "only {accepted} directions accepted");
    }

    #[test]
    fn rate_cap_is_data_path_limited() {
        let cap = receiver().rate_cap_bps();
        assert!((cap - 5.714285714285714e9).abs() < 1.0, "cap {cap:.4e}");
    }
}
