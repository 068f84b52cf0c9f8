//! Room geometry: reflecting surfaces, occluders, light units, and the
//! surface discretization and visibility queries the ray tracer runs on.
//!
//! Two presets mirror the studied environments: an unfurnished room
//! ([`build_room_a`]) and a furnished small office with windows, a door,
//! bookshelf walls, cubicle partitions and desks ([`build_room_b`]).

mod presets;
pub mod schema;

pub use presets::{build_room_a, build_room_b};
pub use schema::{parse_scene, serialize_scene, SceneParseError};

use crate::geom::{Aabb, Direction3, Point3, Rect, Vec3};
use thiserror::Error;

/// Fractional segment tolerance used to exclude endpoint self-hits in
/// visibility tests.
const VIS_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("reflection coefficient {0} outside [0, 1]")]
    RhoOutOfRange(f64),
    #[error("light unit {0} centre lies outside the room")]
    UnitOutsideRoom(usize),
    #[error("communication floor {0} m is not below the room height {1} m")]
    CommFloorAboveCeiling(f64, f64),
    #[error("occluder corners are not ordered min < max")]
    BadOccluder,
}

/// A rectangular Lambertian reflector with reflection coefficient `rho`.
/// `rho = 0` marks a transparent, non-reflecting opening (window, door):
/// it sheds no elements and does not block sight lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectingSurface {
    pub rect: Rect,
    pub rho: f64,
    /// True for the room shell (walls, ceiling, floor); false for furniture
    /// faces inside the room. Only interior surfaces can block sight lines
    /// between points inside the room.
    pub boundary: bool,
}

impl ReflectingSurface {
    pub fn new(rect: Rect, rho: f64) -> Self {
        Self {
            rect,
            rho,
            boundary: true,
        }
    }

    pub fn interior(rect: Rect, rho: f64) -> Self {
        Self {
            rect,
            rho,
            boundary: false,
        }
    }

    pub fn normal(&self) -> Direction3 {
        self.rect.normal()
    }

    /// Opaque surfaces reflect and block; `rho = 0` openings do neither.
    pub fn is_opaque(&self) -> bool {
        self.rho > 0.0
    }
}

/// One square (or edge-clipped) patch of a reflecting surface, treated as a
/// Lambertian re-emitter of order 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceElement {
    pub center: Point3,
    pub normal: Direction3,
    /// Patch area, m^2.
    pub area: f64,
    pub rho: f64,
    /// Lambertian re-emission order; 1 for plaster-like room surfaces.
    pub lambert_order: f64,
}

/// An absorbing axis-aligned box (cubicle partition); blocks every ray that
/// crosses it and reflects nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occluder {
    pub aabb: Aabb,
}

/// Identification tone riding on a unit's drive current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneConfig {
    /// Subcarrier frequency, Hz.
    pub frequency_hz: f64,
    /// Drive amplitude, amperes.
    pub amplitude: f64,
    /// Bias current, amperes.
    pub bias: f64,
    /// Tone optical swing as a fraction of the unit's mean optical power.
    pub modulation_index: f64,
}

impl ToneConfig {
    /// Default tone plan: 500 MHz for unit 1, spaced 60 MHz upward.
    pub fn default_for_unit(id: usize) -> Self {
        Self {
            frequency_hz: 500e6 + 60e6 * (id as f64 - 1.0),
            amplitude: 1.0,
            bias: 1.0,
            modulation_index: 1.0,
        }
    }
}

/// A ceiling luminaire of nine laser-diode clusters on a 3x3 grid, treated
/// as one aggregate Lambertian emitter pointing straight down.
#[derive(Debug, Clone, PartialEq)]
pub struct LightUnit {
    /// 1-based identifier.
    pub id: usize,
    pub center: Point3,
    /// Optical power of each of the nine emitters, watts.
    pub power_per_emitter_w: f64,
    /// Lambertian emission order of each emitter.
    pub lambert_order: f64,
    pub tone: ToneConfig,
}

/// Spacing of the 3x3 emitter grid, metres.
pub const EMITTER_SPACING_M: f64 = 0.03;
/// Emitters per unit.
pub const EMITTERS_PER_UNIT: usize = 9;

impl LightUnit {
    pub fn new(id: usize, center: Point3) -> Self {
        Self {
            id,
            center,
            power_per_emitter_w: 1.9,
            lambert_order: 0.65,
            tone: ToneConfig::default_for_unit(id),
        }
    }

    /// Total optical power of the unit, watts.
    pub fn total_power_w(&self) -> f64 {
        self.power_per_emitter_w * EMITTERS_PER_UNIT as f64
    }

    /// Emitter positions in fixed row-major order over the 3x3 grid.
    pub fn emitter_positions(&self) -> Vec<Point3> {
        let mut out = Vec::with_capacity(EMITTERS_PER_UNIT);
        for iy in -1i32..=1 {
            for ix in -1i32..=1 {
                out.push(Point3::new(
                    self.center.x + ix as f64 * EMITTER_SPACING_M,
                    self.center.y + iy as f64 * EMITTER_SPACING_M,
                    self.center.z,
                ));
            }
        }
        out
    }
}

/// A complete simulation environment. Immutable once built; visibility and
/// discretization may be queried concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Room extents: x in [0, width], y in [0, length], z in [0, height].
    pub width_m: f64,
    pub length_m: f64,
    pub height_m: f64,
    pub surfaces: Vec<ReflectingSurface>,
    pub occluders: Vec<Occluder>,
    pub units: Vec<LightUnit>,
    /// Height of the plane the receiver moves on, metres.
    pub comm_floor_z: f64,
}

impl Scene {
    /// Validate the invariants the parser and presets promise.
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.comm_floor_z >= self.height_m {
            return Err(SceneError::CommFloorAboveCeiling(
                self.comm_floor_z,
                self.height_m,
            ));
        }
        for s in &self.surfaces {
            if !(0.0..=1.0).contains(&s.rho) {
                return Err(SceneError::RhoOutOfRange(s.rho));
            }
        }
        for o in &self.occluders {
            let (a, b) = (o.aabb.min, o.aabb.max);
            if !(a.x < b.x && a.y < b.y && a.z < b.z) {
                return Err(SceneError::BadOccluder);
            }
        }
        for u in &self.units {
            let c = u.center;
            let inside = c.x >= 0.0
                && c.x <= self.width_m
                && c.y >= 0.0
                && c.y <= self.length_m
                && c.z >= 0.0
                && c.z <= self.height_m;
            if !inside {
                return Err(SceneError::UnitOutsideRoom(u.id));
            }
        }
        Ok(())
    }

    /// True if the scene contains anything that can interrupt a sight line.
    pub fn has_blockers(&self) -> bool {
        !self.occluders.is_empty() || self.surfaces.iter().any(|s| !s.boundary && s.is_opaque())
    }

    /// Split every opaque reflecting surface into Lambertian elements of the
    /// given edge size.
    ///
    /// Partial cells along an edge keep their reduced area, so the covered
    /// area matches the eligible surface area exactly. Two kinds of surface
    /// area are excluded: openings (`rho = 0`) and anything below the
    /// communication floor, which an upward-facing receiver on that plane
    /// can never see. For the unfurnished preset at the production element
    /// sizes this reproduces the 32000 / 2000 element counts.
    pub fn discretize(&self, element_size: f64) -> Vec<SurfaceElement> {
        assert!(element_size > 0.0, "element size must be positive");
        let mut out = Vec::new();
        for surf in &self.surfaces {
            if !surf.is_opaque() {
                continue;
            }
            let Some(rect) = clip_above(&surf.rect, self.comm_floor_z) else {
                continue;
            };
            let normal = surf.rect.normal();
            let len_u = rect.edge_u.norm();
            let len_v = rect.edge_v.norm();
            let du = rect.edge_u.scale(1.0 / len_u);
            let dv = rect.edge_v.scale(1.0 / len_v);
            let nu = (len_u / element_size).ceil().max(1.0) as usize;
            let nv = (len_v / element_size).ceil().max(1.0) as usize;
            for j in 0..nv {
                let v0 = j as f64 * element_size;
                let hv = (len_v - v0).min(element_size);
                for i in 0..nu {
                    let u0 = i as f64 * element_size;
                    let hu = (len_u - u0).min(element_size);
                    let center = rect
                        .origin
                        .offset(du.scale(u0 + hu / 2.0))
                        .offset(dv.scale(v0 + hv / 2.0));
                    out.push(SurfaceElement {
                        center,
                        normal,
                        area: hu * hv,
                        rho: surf.rho,
                        lambert_order: 1.0,
                    });
                }
            }
        }
        out
    }

    /// True if nothing opaque lies strictly between `p` and `q`. Endpoints
    /// sitting on a surface do not block their own segment.
    pub fn visible(&self, p: Point3, q: Point3) -> bool {
        for occ in &self.occluders {
            if occ.aabb.blocks_segment(p, q, VIS_EPS) {
                return false;
            }
        }
        for surf in &self.surfaces {
            if surf.boundary || !surf.is_opaque() {
                continue;
            }
            if surf.rect.blocks_segment(p, q, VIS_EPS) {
                return false;
            }
        }
        true
    }
}

/// Restrict a rectangle to z >= floor. Returns None when fully below.
/// Exact for the axis-aligned family used by every preset (horizontal
/// rectangles and vertical rectangles with one edge along z); other
/// orientations are kept whole when any corner clears the plane.
fn clip_above(rect: &Rect, floor: f64) -> Option<Rect> {
    let corners = [
        rect.origin,
        rect.origin.offset(rect.edge_u),
        rect.origin.offset(rect.edge_v),
        rect.origin.offset(rect.edge_u).offset(rect.edge_v),
    ];
    let zmin = corners.iter().map(|c| c.z).fold(f64::INFINITY, f64::min);
    let zmax = corners
        .iter()
        .map(|c| c.z)
        .fold(f64::NEG_INFINITY, f64::max);
    if zmax <= floor {
        return None;
    }
    if zmin >= floor {
        return Some(*rect);
    }
    // Straddling: clip along whichever edge carries the z extent.
    let clip_edge = |origin: Point3, fixed: Vec3, zedge: Vec3| {
        let frac = (floor - origin.z) / zedge.z;
        let new_origin = origin.offset(zedge.scale(frac));
        Rect::new(new_origin, fixed, zedge.scale(1.0 - frac))
    };
    if rect.edge_v.z.abs() > 1e-12 && rect.edge_u.z.abs() < 1e-12 {
        let (o, zedge) = if rect.edge_v.z > 0.0 {
            (rect.origin, rect.edge_v)
        } else {
            (rect.origin.offset(rect.edge_v), rect.edge_v.scale(-1.0))
        };
        return Some(clip_edge(o, rect.edge_u, zedge));
    }
    if rect.edge_u.z.abs() > 1e-12 && rect.edge_v.z.abs() < 1e-12 {
        let (o, zedge) = if rect.edge_u.z > 0.0 {
            (rect.origin, rect.edge_u)
        } else {
            (rect.origin.offset(rect.edge_u), rect.edge_u.scale(-1.0))
        };
        let clipped = clip_edge(o, rect.edge_v, zedge);
        return Some(Rect::new(clipped.origin, clipped.edge_v, clipped.edge_u));
    }
    Some(*rect)
}
