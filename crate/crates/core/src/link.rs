//! Data-link quality: multipath delay spread, OOK eye powers under
//! inter-symbol interference, SINR with co-channel interference, BER, and
//! the per-unit maximum-rate search that produces position reports.

use crate::geom::Point3;
use crate::raytracer::{Arrival, ChannelMatrix, Tracer};
use crate::receiver::ImagingReceiver;
use crate::scm::{associate, build_h, cnr_over_i, noise_sigma, HMatrix};
use thiserror::Error;

/// SINR achieving the target BER of 1e-6 for OOK (13.54 dB).
pub const SINR_TARGET: f64 = 22.595;
/// Rate search granularity, bit/s.
pub const RATE_STEP_BPS: f64 = 10e6;
/// Hard ceiling on the per-pixel data rate, bit/s.
pub const PIXEL_RATE_CAP_BPS: f64 = 6.35e9;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("empty arrival list")]
    EmptyArrivals,
    #[error("arrival list carries no power")]
    NoPower,
}

/// Power-squared-weighted mean delay of a ray list.
pub fn mean_delay(arrivals: &[Arrival]) -> Result<f64, LinkError> {
    if arrivals.is_empty() {
        return Err(LinkError::EmptyArrivals);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for a in arrivals {
        let w = a.power_w * a.power_w;
        num += a.delay_s * w;
        den += w;
    }
    if den <= 0.0 {
        return Err(LinkError::NoPower);
    }
    Ok(num / den)
}

/// Power-squared-weighted RMS delay spread of a ray list.
pub fn delay_spread(arrivals: &[Arrival]) -> Result<f64, LinkError> {
    let mu = mean_delay(arrivals)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for a in arrivals {
        let w = a.power_w * a.power_w;
        num += (a.delay_s - mu) * (a.delay_s - mu) * w;
        den += w;
    }
    Ok((num / den).sqrt())
}

/// In-slot and leaked power of an OOK eye.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyePowers {
    /// Power arriving inside the first bit period, watts.
    pub p_s1: f64,
    /// Power spilling into later slots (worst-case full ISI), watts.
    pub p_s0: f64,
}

/// Worst-case eye partition: everything within one bit period of the first
/// arrival counts toward logic 1, everything later leaks into logic 0.
pub fn eye_powers(arrivals: &[Arrival], bit_rate_bps: f64) -> Result<EyePowers, LinkError> {
    if arrivals.is_empty() {
        return Err(LinkError::EmptyArrivals);
    }
    let t0 = arrivals
        .iter()
        .map(|a| a.delay_s)
        .fold(f64::INFINITY, f64::min);
    let t_bit = 1.0 / bit_rate_bps;
    let mut p_s1 = 0.0;
    let mut p_s0 = 0.0;
    for a in arrivals {
        if a.delay_s - t0 < t_bit {
            p_s1 += a.power_w;
        } else {
            p_s0 += a.power_w;
        }
    }
    Ok(EyePowers { p_s1, p_s0 })
}

/// OOK signal-to-interference-plus-noise ratio (linear):
/// `R^2 (P_s1 - P_s0)^2 / (sigma_dt^2 + interference)`.
pub fn sinr(eye: EyePowers, responsivity: f64, sigma_dt: f64, interference: f64) -> f64 {
    let diff = responsivity * (eye.p_s1 - eye.p_s0);
    diff * diff / (sigma_dt * sigma_dt + interference)
}

/// OOK bit error rate `Q(sqrt(SINR))`.
pub fn ber(sinr: f64) -> f64 {
    0.5 * libm::erfc((sinr.sqrt()) / std::f64::consts::SQRT_2)
}

/// Maximum-ratio combining over pixels serving the same unit: per-pixel
/// SINRs simply add. Each tuple is (eye, sigma_dt, interference).
pub fn mrc_sinr(responsivity: f64, per_pixel: &[(EyePowers, f64, f64)]) -> f64 {
    per_pixel
        .iter()
        .map(|&(eye, sigma, interference)| sinr(eye, responsivity, sigma, interference))
        .sum()
}

/// Per-pixel data-phase inputs for one unit at one receiver position.
struct PixelLink {
    arrivals: Vec<Arrival>,
    sigma_dt: f64,
    interference: f64,
}

fn pixel_links(
    channel: &ChannelMatrix,
    h: &HMatrix,
    receiver: &ImagingReceiver,
    unit: usize,
    serving: &[u16],
    interferers: &[usize],
) -> Vec<PixelLink> {
    let r = receiver.electrical.responsivity;
    let area_cm2 = receiver.grid.pixel_area_m2 * 1e4;
    serving
        .iter()
        .map(|&px| {
            let arrivals: Vec<Arrival> = channel.pixel_arrivals(unit, px).copied().collect();
            let own = h.get(px as usize, unit);
            let sigma_dt =
                noise_sigma(area_cm2, own, r, receiver.electrical.data_bandwidth_hz).sigma_t;
            let interference: f64 = interferers
                .iter()
                .filter(|&&k| k != unit)
                .map(|&k| {
                    let amp = r * h.get(px as usize, k);
                    amp * amp / 2.0
                })
                .sum();
            PixelLink {
                arrivals,
                sigma_dt,
                interference,
            }
        })
        .collect()
}

fn combined_sinr(links: &[PixelLink], responsivity: f64, bit_rate_bps: f64) -> f64 {
    links
        .iter()
        .filter(|l| !l.arrivals.is_empty())
        .map(|l| {
            let eye = eye_powers(&l.arrivals, bit_rate_bps).expect("non-empty arrivals");
            sinr(eye, responsivity, l.sigma_dt, l.interference)
        })
        .sum()
}

/// Largest rate on the 10 Mb/s grid (capped by the receiver electronics and
/// the per-pixel ceiling) whose combined SINR still meets the BER target.
/// The eye convention makes SINR nonincreasing in rate, so bisection over
/// the grid is exact. Returns 0 when even the lowest probe rate fails.
pub fn max_rate(
    channel: &ChannelMatrix,
    h: &HMatrix,
    receiver: &ImagingReceiver,
    unit: usize,
    serving: &[u16],
    interferers: &[usize],
) -> f64 {
    if serving.is_empty() {
        return 0.0;
    }
    let links = pixel_links(channel, h, receiver, unit, serving, interferers);
    if links.iter().all(|l| l.arrivals.is_empty()) {
        return 0.0;
    }
    let r = receiver.electrical.responsivity;
    let cap = receiver.rate_cap_bps().min(PIXEL_RATE_CAP_BPS);
    let k_max = (cap / RATE_STEP_BPS).floor() as u64;
    let passes = |k: u64| combined_sinr(&links, r, k as f64 * RATE_STEP_BPS) >= SINR_TARGET;
    if !passes(1) {
        return 0.0;
    }
    if passes(k_max) {
        return k_max as f64 * RATE_STEP_BPS;
    }
    // Invariant: passes(lo) && !passes(hi).
    let (mut lo, mut hi) = (1, k_max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo as f64 * RATE_STEP_BPS
}

/// Link outcome for one unit at one position.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitReport {
    pub unit: usize,
    pub active: bool,
    pub serving_pixels: Vec<u16>,
    /// Achieved rate, bit/s (0 when inactive or unusable).
    pub rate_bps: f64,
    /// Combined SINR at the achieved rate, dB.
    pub sinr_db: f64,
}

/// Link outcome for a receiver position.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub position: Point3,
    pub units: Vec<UnitReport>,
    pub aggregate_bps: f64,
}

/// Full protocol at one position: trace, build the power matrix, gate units
/// on CNR/I, then search each active unit's rate with the final active set
/// as mutual interferers.
pub fn evaluate_position(
    tracer: &Tracer,
    receiver_template: &ImagingReceiver,
    position: Point3,
    threshold_db: f64,
) -> LinkReport {
    let receiver = ImagingReceiver {
        position,
        ..receiver_template.clone()
    };
    let channel = tracer.channel(&receiver);
    let h = build_h(&channel);
    let cnr = cnr_over_i(&h, &receiver, &tracer.scene().units);
    let assoc = associate(&cnr, h.n_units, threshold_db);
    let active_ids = assoc.active_unit_ids();
    let r = receiver.electrical.responsivity;

    let mut units = Vec::with_capacity(h.n_units);
    let mut aggregate = 0.0;
    for unit in 1..=h.n_units {
        let active = assoc.active[unit - 1];
        let serving = assoc.serving[unit - 1].clone();
        let (rate, sinr_db) = if active {
            let rate = max_rate(&channel, &h, &receiver, unit, &serving, &active_ids);
            let links = pixel_links(&channel, &h, &receiver, unit, &serving, &active_ids);
            let sinr_at_rate = if rate > 0.0 {
                combined_sinr(&links, r, rate)
            } else {
                combined_sinr(&links, r, RATE_STEP_BPS)
            };
            (rate, 10.0 * sinr_at_rate.log10())
        } else {
            (0.0, f64::NEG_INFINITY)
        };
        aggregate += rate;
        units.push(UnitReport {
            unit,
            active,
            serving_pixels: serving,
            rate_bps: rate,
            sinr_db,
        });
    }
    LinkReport {
        position,
        units,
        aggregate_bps: aggregate,
    }
}

/// Convenience: evaluate a whole sweep of positions in parallel, output in
/// position order.
pub fn evaluate_positions(
    tracer: &Tracer,
    receiver_template: &ImagingReceiver,
    positions: &[Point3],
    threshold_db: f64,
) -> Vec<LinkReport> {
    use rayon::prelude::*;
    positions
        .par_iter()
        .map(|&p| evaluate_position(tracer, receiver_template, p, threshold_db))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Rect, Vec3};
    use crate::raytracer::Tracer;
    use crate::scene::{build_room_a, LightUnit, ReflectingSurface, Scene};

    fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
        let err = (actual - expected).abs() / expected.abs().max(1e-300);
        assert!(
            err <= tol,
            "{what}: actual {actual:.9e}, expected {expected:.9e}"
        );
    }

    fn ray(delay_s: f64, power_w: f64) -> Arrival {
        Arrival {
            delay_s,
            power_w,
            source_unit: 1,
            bounce: 0,
            pixel: Some(0),
        }
    }

    #[test]
    fn mean_delay_examples() {
        assert_rel(
            mean_delay(&[ray(3e-9, 1.0)]).unwrap(),
            3e-9,
            1e-15,
            "single ray",
        );
        assert_rel(
            mean_delay(&[ray(0.0, 1.0), ray(1e-9, 1.0)]).unwrap(),
            0.5e-9,
            1e-15,
            "two equal rays",
        );
        // Powers 2 W and 1 W: weights 4 and 1.
        assert_rel(
            mean_delay(&[ray(0.0, 2.0), ray(1e-9, 1.0)]).unwrap(),
            0.2e-9,
            1e-15,
            "weighted mean",
        );
        assert_eq!(mean_delay(&[]), Err(LinkError::EmptyArrivals));
    }

    #[test]
    fn delay_spread_examples() {
        assert_eq!(delay_spread(&[ray(3e-9, 1.0)]).unwrap(), 0.0);
        assert_rel(
            delay_spread(&[ray(0.0, 1.0), ray(1e-9, 1.0)]).unwrap(),
            0.5e-9,
            1e-12,
            "two equal rays",
        );
    }

    #[test]
    fn delay_spread_invariances() {
        let base = vec![
            ray(1e-9, 2e-6),
            ray(3e-9, 1e-6),
            ray(7e-9, 5e-7),
            ray(9e-9, 1e-7),
        ];
        let d0 = delay_spread(&base).unwrap();
        let scaled: Vec<Arrival> = base
            .iter()
            .map(|a| Arrival {
                power_w: a.power_w * 123.4,
                ..*a
            })
            .collect();
        assert_rel(delay_spread(&scaled).unwrap(), d0, 1e-12, "power scaling");
        let shifted: Vec<Arrival> = base
            .iter()
            .map(|a| Arrival {
                delay_s: a.delay_s + 5e-8,
                ..*a
            })
            .collect();
        assert_rel(delay_spread(&shifted).unwrap(), d0, 1e-6, "delay shift");
    }

    #[test]
    fn eye_partition() {
        // Everything inside one bit period.
        let tight = vec![ray(0.0, 1e-6), ray(0.1e-9, 2e-6)];
        let eye = eye_powers(&tight, 1e9).unwrap();
        assert_eq!(eye.p_s0, 0.0);
        // Two equal rays 1 ns apart at 2 Gb/s split evenly.
        let split = vec![ray(0.0, 1e-6), ray(1e-9, 1e-6)];
        let eye = eye_powers(&split, 2e9).unwrap();
        assert_rel(eye.p_s1, 1e-6, 1e-15, "in-slot");
        assert_rel(eye.p_s0, 1e-6, 1e-15, "leaked");
        // Partition property at any rate.
        for rate in [0.3e9, 1.7e9, 4.9e9] {
            let e = eye_powers(&split, rate).unwrap();
            assert_rel(e.p_s1 + e.p_s0, 2e-6, 1e-12, "partition sums to total");
        }
        assert_eq!(eye_powers(&[], 1e9), Err(LinkError::EmptyArrivals));
    }

    #[test]
    fn sinr_basics() {
        let eye = EyePowers {
            p_s1: 1e-6,
            p_s0: 1e-6,
        };
        assert_eq!(sinr(eye, 0.4, 1e-9, 0.0), 0.0);
        let a = sinr(
            EyePowers {
                p_s1: 2e-6,
                p_s0: 1e-6,
            },
            0.4,
            1e-9,
            0.0,
        );
        let b = sinr(
            EyePowers {
                p_s1: 3e-6,
                p_s0: 1e-6,
            },
            0.4,
            1e-9,
            0.0,
        );
        assert_rel(b, 4.0 * a, 1e-12, "doubling the eye quadruples SINR");
    }

    #[test]
    fn ber_reference_points() {
        assert_rel(ber(0.0), 0.5, 1e-15, "zero SINR");
        assert_rel(ber(SINR_TARGET), 1e-6, 0.02, "target SINR");
        assert_rel(ber(36.0), 9.8659e-10, 1e-3, "Q(6)");
        // 13.54 dB within 0.1 dB of the reference 13.6 dB operating point.
        assert!((10.0 * SINR_TARGET.log10() - 13.6).abs() < 0.1);
    }

    #[test]
    fn ber_monotone_and_roundtrip() {
        let mut prev = 1.0;
        for k in 1..=40 {
            let s = k as f64;
            let b = ber(s);
            assert!(b < prev, "ber not strictly decreasing at {s}");
            prev = b;
        }
        // Solve ber(s) = 1e-6 by bisection, then re-evaluate.
        let (mut lo, mut hi) = (1.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ber(mid) > 1e-6 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        assert!((ber(s) - 1e-6).abs() < 1e-8);
        assert_rel(s, SINR_TARGET, 2e-3, "target constant");
    }

    #[test]
    fn mrc_adds_per_pixel_sinrs() {
        let eye = EyePowers {
            p_s1: 2e-6,
            p_s0: 0.0,
        };
        let single = mrc_sinr(0.4, &[(eye, 1e-7, 0.0)]);
        assert_rel(single, sinr(eye, 0.4, 1e-7, 0.0), 1e-15, "one pixel");
        let double = mrc_sinr(0.4, &[(eye, 1e-7, 0.0), (eye, 1e-7, 0.0)]);
        assert_rel(double, 2.0 * single, 1e-15, "two equal pixels");
        let with_dead = mrc_sinr(
            0.4,
            &[
                (eye, 1e-7, 0.0),
                (
                    EyePowers {
                        p_s1: 0.0,
                        p_s0: 0.0,
                    },
                    1e-7,
                    0.0,
                ),
            ],
        );
        assert_rel(with_dead, single, 1e-15, "dead pixel adds nothing");
    }

    /// Toy scene: one unit right above the receiver, no reflections.
    fn los_only_scene() -> Scene {
        Scene {
            width_m: 4.0,
            length_m: 4.0,
            height_m: 3.0,
            surfaces: vec![ReflectingSurface::new(
                Rect::new(
                    Point3::new(0.0, 0.0, 3.0),
                    Vec3::new(0.0, 4.0, 0.0),
                    Vec3::new(4.0, 0.0, 0.0),
                ),
                0.0, // non-reflecting ceiling: LOS only
            )],
            occluders: vec![],
            units: vec![LightUnit::new(1, Point3::new(2.0, 2.0, 3.0))],
            comm_floor_z: 1.0,
        }
    }

    #[test]
    fn clean_los_channel_hits_the_rate_cap() {
        let scene = los_only_scene();
        let tracer = Tracer::new(&scene, 0.25, 0.5);
        let receiver = ImagingReceiver::at(Point3::new(2.0, 2.0, 1.0));
        let channel = tracer.channel(&receiver);
        let h = build_h(&channel);
        let px = h.best_pixel(1) as u16;
        let rate = max_rate(&channel, &h, &receiver, 1, &[px], &[1]);
        let cap = receiver.rate_cap_bps().min(PIXEL_RATE_CAP_BPS);
        let grid_cap = (cap / RATE_STEP_BPS).floor() * RATE_STEP_BPS;
        assert_rel(rate, grid_cap, 1e-12, "flat channel is cap-limited");
    }

    #[test]
    fn zero_power_channel_gets_zero_rate() {
        let scene = los_only_scene();
        let tracer = Tracer::new(&scene, 0.25, 0.5);
        let receiver = ImagingReceiver::at(Point3::new(2.0, 2.0, 1.0));
        let channel = tracer.channel(&receiver);
        let h = build_h(&channel);
        // A pixel with no power from the unit.
        let dark: Vec<u16> = (0..288)
            .filter(|&px| h.get(px as usize, 1) == 0.0)
            .take(1)
            .collect();
        let rate = max_rate(&channel, &h, &receiver, 1, &dark, &[1]);
        assert_eq!(rate, 0.0);
        assert_eq!(max_rate(&channel, &h, &receiver, 1, &[], &[1]), 0.0);
    }

    #[test]
    fn max_rate_nonincreasing_under_interference_and_power_loss() {
        // Synthetic channel: unit 1 with a two-tap eye on pixel 0, unit 2
        // interfering at the same pixel.
        let tap = |delay_s: f64, power_w: f64, unit: u16| Arrival {
            delay_s,
            power_w,
            source_unit: unit,
            bounce: 0,
            pixel: Some(0),
        };
        let receiver = ImagingReceiver::at(Point3::new(2.0, 2.0, 1.0));
        let build = |p_desired: f64| {
            let per_unit = vec![
                vec![tap(0.0, p_desired, 1), tap(0.9e-9, 0.4 * p_desired, 1)],
                vec![tap(0.2e-9, 1.1e-5, 2)],
            ];
            let channel = ChannelMatrix::from_arrivals(288, per_unit, 0.25, 0.5);
            let h = build_h(&channel);
            (channel, h)
        };
        let (channel, h) = build(4e-5);
        let alone = max_rate(&channel, &h, &receiver, 1, &[0], &[1]);
        let contested = max_rate(&channel, &h, &receiver, 1, &[0], &[1, 2]);
        assert!(alone > 0.0);
        assert!(contested > 0.0, "contested case should still carry data");
        assert!(
            contested < alone,
            "adding an interferer must cost rate here"
        );
        // The interference-limited rate sits where the late tap leaves the
        // bit slot: just under 1/(0.9 ns).
        assert!(
            (contested - 1.11e9).abs() <= 2e7,
            "contested rate {contested:.3e}"
        );
        // Weakening the desired power cannot raise the rate either.
        let (channel_weak, h_weak) = build(2e-5);
        let weakened = max_rate(&channel_weak, &h_weak, &receiver, 1, &[0], &[1, 2]);
        assert!(
            weakened <= contested,
            "halving desired power raised the rate"
        );
    }

    #[test]
    fn evaluate_position_is_deterministic_and_consistent() {
        let scene = build_room_a();
        let tracer = Tracer::new(&scene, 0.5, 1.0);
        let template = ImagingReceiver::at(Point3::new(0.0, 0.0, 1.0));
        let pos = Point3::new(1.0, 1.0, 1.0);
        let a = evaluate_position(&tracer, &template, pos, 13.6);
        let b = evaluate_position(&tracer, &template, pos, 13.6);
        assert_eq!(a, b);
        let sum: f64 = a.units.iter().map(|u| u.rate_bps).sum();
        assert_rel(
            a.aggregate_bps.max(1e-300),
            sum.max(1e-300),
            1e-12,
            "aggregate is the sum",
        );
        for u in &a.units {
            assert_eq!(u.active, !u.serving_pixels.is_empty());
            if !u.active {
                assert_eq!(u.rate_bps, 0.0);
            }
        }
    }
}
