//! Optical channel computation: line-of-sight, first-order and second-order
//! reflection paths from each light unit to the imaging receiver, kept as
//! exact (delay, power) ray lists.
//!
//! Arrival lists are never binned into time histograms; delay spreads down
//! to tens of picoseconds survive intact and frequency responses are
//! evaluated directly on the ray list. Element-to-element transfer factors
//! are receiver-independent and cached in [`Tracer`] so that sweeps over
//! many receiver positions only redo the final hop.
//!
//! Emission order is fixed (emitters row-major, elements in discretization
//! order, pair loops outer-element-major), so identical inputs produce
//! bit-identical arrival sequences regardless of worker count.

use crate::geom::{Direction3, Point3};
use crate::receiver::ImagingReceiver;
use crate::scene::{LightUnit, Scene, SurfaceElement};
use rayon::prelude::*;
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum RaytraceError {
    #[error("semi-angle {0} deg outside (0, 90)")]
    SemiAngleOutOfRange(f64),
}

/// One ray's contribution to a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    /// Propagation delay, seconds.
    pub delay_s: f64,
    /// Received optical power, watts.
    pub power_w: f64,
    /// 1-based id of the emitting unit.
    pub source_unit: u16,
    /// 0 = line of sight, 1 = first-order, 2 = second-order reflection.
    pub bounce: u8,
    /// Linear pixel index the ray lands on, or `None` when the concentrator
    /// accepts the ray but it misses the pixel array.
    pub pixel: Option<u16>,
}

/// Sum of received powers, in list order.
pub fn total_power(arrivals: &[Arrival]) -> f64 {
    arrivals.iter().map(|a| a.power_w).sum()
}

/// Lambertian order for a half-power semi-angle given in degrees.
pub fn lambert_order(semi_angle_deg: f64) -> Result<f64, RaytraceError> {
    if semi_angle_deg <= 0.0 || semi_angle_deg >= 90.0 {
        return Err(RaytraceError::SemiAngleOutOfRange(semi_angle_deg));
    }
    Ok(-std::f64::consts::LN_2 / semi_angle_deg.to_radians().cos().ln())
}

/// Radiant intensity (W/sr) of a generalized Lambertian source of total
/// power `power_w` and order `order`, at angle `phi` from its axis.
pub fn lambertian_intensity(power_w: f64, order: f64, phi: f64) -> f64 {
    let c = phi.cos();
    if c <= 0.0 {
        return 0.0;
    }
    power_w * (order + 1.0) / (2.0 * std::f64::consts::PI) * c.powf(order)
}

/// The full channel between every unit and every pixel at one receiver
/// position.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    pub n_units: usize,
    pub n_pixels: usize,
    /// Element edge sizes used for first- and second-order bounces, metres.
    pub elem1_size_m: f64,
    pub elem2_size_m: f64,
    per_unit: Vec<Vec<Arrival>>,
}

impl ChannelMatrix {
    /// Assemble a channel from per-unit arrival lists (index 0 is unit 1).
    pub fn from_arrivals(
        n_pixels: usize,
        per_unit: Vec<Vec<Arrival>>,
        elem1_size_m: f64,
        elem2_size_m: f64,
    ) -> Self {
        Self {
            n_units: per_unit.len(),
            n_pixels,
            elem1_size_m,
            elem2_size_m,
            per_unit,
        }
    }

    /// Every concentrator-accepted arrival from `unit` (1-based), including
    /// rays that miss the pixel array. This is the channel as seen at the
    /// receiver aperture; delay-spread and bandwidth figures are computed
    /// on it.
    pub fn aperture_arrivals(&self, unit: usize) -> &[Arrival] {
        &self.per_unit[unit - 1]
    }

    /// Arrivals from `unit` (1-based) landing on linear pixel `pixel`.
    pub fn pixel_arrivals(&self, unit: usize, pixel: u16) -> impl Iterator<Item = &Arrival> {
        self.per_unit[unit - 1]
            .iter()
            .filter(move |a| a.pixel == Some(pixel))
    }

    /// Total power from `unit` on pixel `pixel`.
    pub fn pixel_power(&self, unit: usize, pixel: u16) -> f64 {
        self.pixel_arrivals(unit, pixel).map(|a| a.power_w).sum()
    }
}

/// Transfer factor of one hop: multiply by the source power to get the power
/// arriving after the hop.
#[derive(Debug, Clone, Copy)]
struct Hop {
    factor: f64,
    delay_s: f64,
}

const ZERO_HOP: Hop = Hop {
    factor: 0.0,
    delay_s: 0.0,
};

/// Channel tracer with receiver-independent caches for one scene and one
/// pair of element resolutions.
pub struct Tracer<'s> {
    scene: &'s Scene,
    pub elems1: Vec<SurfaceElement>,
    pub elems2: Vec<SurfaceElement>,
    /// Power landing on each fine element from each emitter:
    /// `emitter_to_elem[unit][emitter][elem]`.
    emitter_to_elem: Vec<Vec<Vec<Hop>>>,
    /// Power landing on each coarse element from each unit centre (the
    /// nine emitters are aggregated for second-order bounces).
    unit_to_elem: Vec<Vec<Hop>>,
    /// Element-to-element transfer between coarse elements, row-major.
    elem_transfer: Vec<Vec<Hop>>,
}

impl<'s> Tracer<'s> {
    pub fn new(scene: &'s Scene, elem1_size: f64, elem2_size: f64) -> Self {
        let elems1 = scene.discretize(elem1_size);
        let elems2 = scene.discretize(elem2_size);
        Self::with_elements(scene, elems1, elems2)
    }

    pub fn with_elements(
        scene: &'s Scene,
        elems1: Vec<SurfaceElement>,
        elems2: Vec<SurfaceElement>,
    ) -> Self {
        let blockers = scene.has_blockers();

        let emitter_to_elem: Vec<Vec<Vec<Hop>>> = scene
            .units
            .iter()
            .map(|unit| {
                unit.emitter_positions()
                    .iter()
                    .map(|&em| {
                        elems1
                            .iter()
                            .map(|el| {
                                source_to_element(
                                    scene,
                                    blockers,
                                    em,
                                    unit.power_per_emitter_w,
                                    unit.lambert_order,
                                    el,
                                )
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let unit_to_elem: Vec<Vec<Hop>> = scene
            .units
            .iter()
            .map(|unit| {
                elems2
                    .iter()
                    .map(|el| {
                        source_to_element(
                            scene,
                            blockers,
                            unit.center,
                            unit.total_power_w(),
                            unit.lambert_order,
                            el,
                        )
                    })
                    .collect()
            })
            .collect();

        let elem_transfer: Vec<Vec<Hop>> = (0..elems2.len())
            .into_par_iter()
            .map(|i| {
                let from = &elems2[i];
                elems2
                    .iter()
                    .enumerate()
                    .map(|(j, to)| {
                        if i == j {
                            return ZERO_HOP;
                        }
                        element_to_element(scene, blockers, from, to)
                    })
                    .collect()
            })
            .collect();

        Self {
            scene,
            elems1,
            elems2,
            emitter_to_elem,
            unit_to_elem,
            elem_transfer,
        }
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    /// Trace one unit (1-based id must exist in the scene) to the receiver.
    pub fn trace_unit(&self, unit_id: usize, receiver: &ImagingReceiver) -> Vec<Arrival> {
        let idx = unit_id - 1;
        let unit = &self.scene.units[idx];
        let blockers = self.scene.has_blockers();
        let uid = unit_id as u16;

        let mut out = Vec::new();

        // Line of sight, one ray per visible emitter.
        for em in unit.emitter_positions() {
            if let Some((factor, delay, pixel)) = aperture_hop(self.scene, blockers, em, receiver) {
                let intensity = los_intensity(
                    em,
                    receiver.position,
                    unit.power_per_emitter_w,
                    unit.lambert_order,
                );
                let power = intensity * factor;
                if power > 0.0 {
                    out.push(Arrival {
                        delay_s: delay,
                        power_w: power,
                        source_unit: uid,
                        bounce: 0,
                        pixel,
                    });
                }
            }
        }

        // First order: emitter -> fine element -> aperture.
        let elem1_to_rx: Vec<Option<(f64, f64, Option<u16>)>> = self
            .elems1
            .iter()
            .map(|el| element_to_aperture(self.scene, blockers, el, receiver))
            .collect();
        for per_emitter in &self.emitter_to_elem[idx] {
            for (el_idx, hop) in per_emitter.iter().enumerate() {
                if hop.factor == 0.0 {
                    continue;
                }
                if let Some((factor, delay, pixel)) = elem1_to_rx[el_idx] {
                    let power = hop.factor * factor;
                    if power > 0.0 {
                        out.push(Arrival {
                            delay_s: hop.delay_s + delay,
                            power_w: power,
                            source_unit: uid,
                            bounce: 1,
                            pixel,
                        });
                    }
                }
            }
        }

        // Second order: unit centre -> coarse element -> coarse element ->
        // aperture.
        let elem2_to_rx: Vec<Option<(f64, f64, Option<u16>)>> = self
            .elems2
            .iter()
            .map(|el| element_to_aperture(self.scene, blockers, el, receiver))
            .collect();
        let src = &self.unit_to_elem[idx];
        for (i, first_hop) in src.iter().enumerate() {
            if first_hop.factor == 0.0 {
                continue;
            }
            let transfers = &self.elem_transfer[i];
            for (j, t) in transfers.iter().enumerate() {
                if t.factor == 0.0 {
                    continue;
                }
                if let Some((factor, delay, pixel)) = elem2_to_rx[j] {
                    let power = first_hop.factor * t.factor * factor;
                    if power > 0.0 {
                        out.push(Arrival {
                            delay_s: first_hop.delay_s + t.delay_s + delay,
                            power_w: power,
                            source_unit: uid,
                            bounce: 2,
                            pixel,
                        });
                    }
                }
            }
        }

        out
    }

    /// Trace every unit; units are processed in parallel but merged in unit
    /// order, so the result is independent of the worker count.
    pub fn channel(&self, receiver: &ImagingReceiver) -> ChannelMatrix {
        let per_unit: Vec<Vec<Arrival>> = (1..=self.scene.units.len())
            .into_par_iter()
            .map(|id| self.trace_unit(id, receiver))
            .collect();
        ChannelMatrix {
            n_units: self.scene.units.len(),
            n_pixels: receiver.grid.pixel_count(),
            elem1_size_m: if self.elems1.is_empty() {
                0.0
            } else {
                self.elems1[0].area.sqrt()
            },
            elem2_size_m: if self.elems2.is_empty() {
                0.0
            } else {
                self.elems2[0].area.sqrt()
            },
            per_unit,
        }
    }
}

/// One-shot trace of a single unit. Convenience wrapper over [`Tracer`] for
/// small scenes; sweeps should construct the tracer once instead.
pub fn trace(
    scene: &Scene,
    unit: &LightUnit,
    receiver: &ImagingReceiver,
    elems1: Vec<SurfaceElement>,
    elems2: Vec<SurfaceElement>,
) -> Vec<Arrival> {
    let tracer = Tracer::with_elements(scene, elems1, elems2);
    tracer.trace_unit(unit.id, receiver)
}

/// Emitter intensity toward the receiver aperture.
fn los_intensity(emitter: Point3, aperture: Point3, power_w: f64, order: f64) -> f64 {
    let d = aperture.sub(emitter);
    let dist = d.norm();
    // Units point straight down; phi is measured from -z.
    let cos_phi = -d.z / dist;
    if cos_phi <= 0.0 {
        return 0.0;
    }
    lambertian_intensity(power_w, order, cos_phi.acos())
}

/// Collection factor of the aperture for a ray from `source`, as
/// (intensity-to-power factor, delay, pixel). `None` when the ray is
/// blocked, arrives from below, or exceeds the concentrator acceptance.
/// The factor multiplies a radiant intensity (W/sr):
/// `A_entrance * cos(theta) * T_c(theta) * g / d^2`.
fn aperture_hop(
    scene: &Scene,
    blockers: bool,
    source: Point3,
    receiver: &ImagingReceiver,
) -> Option<(f64, f64, Option<u16>)> {
    let d = receiver.position.sub(source);
    let dist = d.norm();
    if d.z >= 0.0 {
        return None; // arriving from below the receiver plane
    }
    let cos_theta = (-d.z / dist).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    if theta > receiver.concentrator.acceptance_half_angle_rad {
        return None;
    }
    if blockers && !scene.visible(source, receiver.position) {
        return None;
    }
    let c = &receiver.concentrator;
    let factor =
        c.entrance_area_m2 * cos_theta * c.transmission(theta) * c.design_gain() / (dist * dist);
    let incidence = Direction3::normalize(d).ok()?;
    let pixel = receiver
        .pixel_for_direction(incidence)
        .map(|px| receiver.grid.linear_index(px) as u16);
    Some((factor, dist / SPEED_OF_LIGHT, pixel))
}

/// Power landing on `el` from a Lambertian point source of the given total
/// power and order at `source`, pointing straight down.
fn source_to_element(
    scene: &Scene,
    blockers: bool,
    source: Point3,
    power_w: f64,
    order: f64,
    el: &SurfaceElement,
) -> Hop {
    let d = el.center.sub(source);
    let dist = d.norm();
    if dist == 0.0 {
        return ZERO_HOP;
    }
    let cos_phi = -d.z / dist;
    if cos_phi <= 0.0 {
        return ZERO_HOP;
    }
    let cos_in = -el.normal.as_vec().dot(d) / dist;
    if cos_in <= 0.0 {
        return ZERO_HOP;
    }
    if blockers && !scene.visible(source, el.center) {
        return ZERO_HOP;
    }
    let intensity = lambertian_intensity(power_w, order, cos_phi.acos());
    Hop {
        factor: intensity * el.area * cos_in / (dist * dist),
        delay_s: dist / SPEED_OF_LIGHT,
    }
}

/// Transfer factor between two elements: `from` re-emits its incident power
/// as a Lambertian of order `lambert_order`, `to` intercepts it.
fn element_to_element(
    scene: &Scene,
    blockers: bool,
    from: &SurfaceElement,
    to: &SurfaceElement,
) -> Hop {
    let d = to.center.sub(from.center);
    let dist = d.norm();
    if dist == 0.0 {
        return ZERO_HOP;
    }
    let cos_out = from.normal.as_vec().dot(d) / dist;
    if cos_out <= 0.0 {
        return ZERO_HOP;
    }
    let cos_in = -to.normal.as_vec().dot(d) / dist;
    if cos_in <= 0.0 {
        return ZERO_HOP;
    }
    if blockers && !scene.visible(from.center, to.center) {
        return ZERO_HOP;
    }
    // Order-1 re-emission: intensity = rho * P * cos(out) / pi.
    let n = from.lambert_order;
    let norm = (n + 1.0) / (2.0 * std::f64::consts::PI);
    Hop {
        factor: from.rho * norm * cos_out.powf(n) * to.area * cos_in / (dist * dist),
        delay_s: dist / SPEED_OF_LIGHT,
    }
}

/// Final hop: an element re-emits toward the aperture.
fn element_to_aperture(
    scene: &Scene,
    blockers: bool,
    el: &SurfaceElement,
    receiver: &ImagingReceiver,
) -> Option<(f64, f64, Option<u16>)> {
    let d = receiver.position.sub(el.center);
    let dist = d.norm();
    if dist == 0.0 {
        return None;
    }
    let cos_out = el.normal.as_vec().dot(d) / dist;
    if cos_out <= 0.0 {
        return None;
    }
    let (aperture_factor, delay, pixel) = aperture_hop(scene, blockers, el.center, receiver)?;
    let n = el.lambert_order;
    let norm = (n + 1.0) / (2.0 * std::f64::consts::PI);
    Some((
        el.rho * norm * cos_out.powf(n) * aperture_factor,
        delay,
        pixel,
    ))
}
