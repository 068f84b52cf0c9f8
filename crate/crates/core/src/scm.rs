//! The subcarrier tone identification protocol.
//!
//! Before data flows, every unit transmits a unique unmodulated tone. Each
//! pixel bandpass-filters the tone band, and the resulting currents decide
//! which units get to transmit and which pixels serve them:
//!
//! - [`build_h`] collects the received tone power of every unit at every
//!   pixel,
//! - [`noise_sigma`] budgets the shot and preamplifier noise inside the
//!   4 MHz tone filter,
//! - [`fit_tone_distributions`] Monte-Carlos the desired / undesired tone
//!   currents over receiver positions and fits Gaussians to both,
//! - [`optimal_threshold`] evaluates the likelihood-ratio threshold between
//!   the two fitted hypotheses in closed form (checked against the numeric
//!   root of the density crossing),
//! - [`decision_probabilities`] turns the threshold into detection and
//!   false-alarm probabilities,
//! - [`cnr_over_i`] and [`associate`] gate each unit on its
//!   carrier-to-noise-plus-interference ratio.

use crate::geom::Point3;
use crate::raytracer::{total_power, Arrival, ChannelMatrix, Tracer};
use crate::receiver::ImagingReceiver;
use crate::rng;
use crate::scene::LightUnit;
use num_complex::Complex64;
use thiserror::Error;

/// Electron charge, coulombs.
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Background photocurrent density from ambient light, A/cm^2.
pub const BACKGROUND_CURRENT_DENSITY_A_PER_CM2: f64 = 1e-3;
/// Bandwidth of each tone's bandpass filter, Hz.
pub const TONE_BPF_BANDWIDTH_HZ: f64 = 4e6;
/// Preamplifier input noise current density, A/sqrt(Hz).
pub const PREAMP_NOISE_DENSITY: f64 = 4.5e-12;
/// Gating threshold on CNR/I, dB.
pub const DEFAULT_CNR_I_THRESHOLD_DB: f64 = 13.6;
/// Search ceiling for the 3 dB point, Hz.
const BANDWIDTH_SEARCH_CEILING_HZ: f64 = 20e9;
/// Resolution of the 3 dB bisection, Hz.
const BANDWIDTH_RESOLUTION_HZ: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum ScmError {
    #[error("arrival list carries no power")]
    NoPower,
    #[error("identical tone distributions admit no threshold")]
    IdenticalDistributions,
    #[error("threshold requires m_ds > m_us (got {m_ds} <= {m_us})")]
    MeansNotOrdered { m_ds: f64, m_us: f64 },
}

/// Received tone optical power of every unit at every pixel, row = pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix {
    pub n_pixels: usize,
    pub n_units: usize,
    /// `power[pixel][unit]`, watts.
    power: Vec<Vec<f64>>,
}

impl HMatrix {
    pub fn get(&self, pixel: usize, unit: usize) -> f64 {
        self.power[pixel][unit - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.power
    }

    /// Total routed power of one unit over the whole array.
    pub fn unit_total(&self, unit: usize) -> f64 {
        self.power.iter().map(|row| row[unit - 1]).sum()
    }

    /// Pixel with the most power from `unit` (first wins ties).
    pub fn best_pixel(&self, unit: usize) -> usize {
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (px, row) in self.power.iter().enumerate() {
            if row[unit - 1] > best_p {
                best_p = row[unit - 1];
                best = px;
            }
        }
        best
    }
}

/// Sum each unit's pixel-routed arrivals into the received-power matrix.
pub fn build_h(channel: &ChannelMatrix) -> HMatrix {
    let mut power = vec![vec![0.0; channel.n_units]; channel.n_pixels];
    for unit in 1..=channel.n_units {
        for a in channel.aperture_arrivals(unit) {
            if let Some(px) = a.pixel {
                power[px as usize][unit - 1] += a.power_w;
            }
        }
    }
    HMatrix {
        n_pixels: channel.n_pixels,
        n_units: channel.n_units,
        power,
    }
}

/// Peak electrical amplitude of a received tone: `R * Pr * index` amperes.
/// The tone's electrical power is `amplitude^2 / 2`.
pub fn tone_current(pr_w: f64, responsivity: f64, modulation_index: f64) -> f64 {
    responsivity * pr_w * modulation_index
}

/// Channel frequency response at `f`, evaluated on the exact ray list:
/// `sum_i P_i exp(-j 2 pi f t_i)`. At `f = 0` this reduces to the plain
/// power sum in the same summation order.
pub fn freq_response(arrivals: &[Arrival], f: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in arrivals {
        let phase = -2.0 * std::f64::consts::PI * f * a.delay_s;
        acc += Complex64::new(a.power_w * phase.cos(), a.power_w * phase.sin());
    }
    acc
}

/// 3 dB bandwidth of a ray-list channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// First frequency where |H(f)|^2 drops to half of |H(0)|^2, Hz.
    Limited(f64),
    /// No 3 dB point below the search ceiling.
    Flat,
}

impl Bandwidth {
    /// The bandwidth in Hz, with `Flat` mapped to the search ceiling.
    pub fn hz(&self) -> f64 {
        match self {
            Bandwidth::Limited(f) => *f,
            Bandwidth::Flat => BANDWIDTH_SEARCH_CEILING_HZ,
        }
    }
}

/// Smallest `f` with `|H(f)|^2 = |H(0)|^2 / 2`, marched in 10 MHz steps and
/// bisected to 1 MHz.
pub fn bandwidth_3db(arrivals: &[Arrival]) -> Result<Bandwidth, ScmError> {
    let dc = total_power(arrivals);
    if dc <= 0.0 {
        return Err(ScmError::NoPower);
    }
    let half = dc * dc / 2.0;
    let above = |f: f64| freq_response(arrivals, f).norm_sqr() > half;
    let step = 10e6;
    let mut lo = 0.0;
    let mut hi = step;
    loop {
        if !above(hi) {
            break;
        }
        lo = hi;
        hi += step;
        if hi > BANDWIDTH_SEARCH_CEILING_HZ {
            return Ok(Bandwidth::Flat);
        }
    }
    while hi - lo > BANDWIDTH_RESOLUTION_HZ {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bandwidth::Limited(0.5 * (lo + hi)))
}

/// Noise currents seen by one tone at one pixel, RMS amperes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    /// Ambient-light shot noise.
    pub sigma_bn: f64,
    /// Shot noise of the received tone itself.
    pub sigma_s: f64,
    /// Preamplifier thermal noise.
    pub sigma_pr: f64,
    /// Root-sum-square of the three.
    pub sigma_t: f64,
}

/// Noise budget of a pixel of `pixel_area_cm2` receiving `pr_w` of desired
/// power inside a filter of `bandwidth_hz`.
pub fn noise_sigma(
    pixel_area_cm2: f64,
    pr_w: f64,
    responsivity: f64,
    bandwidth_hz: f64,
) -> NoiseBudget {
    let sigma_bn = (2.0
        * ELECTRON_CHARGE
        * pixel_area_cm2
        * BACKGROUND_CURRENT_DENSITY_A_PER_CM2
        * bandwidth_hz)
        .sqrt();
    let sigma_s = (2.0 * ELECTRON_CHARGE * responsivity * pr_w * bandwidth_hz).sqrt();
    let sigma_pr = PREAMP_NOISE_DENSITY * bandwidth_hz.sqrt();
    let sigma_t = (sigma_bn * sigma_bn + sigma_s * sigma_s + sigma_pr * sigma_pr).sqrt();
    NoiseBudget {
        sigma_bn,
        sigma_s,
        sigma_pr,
        sigma_t,
    }
}

/// Fitted Gaussian of a tone-current population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub std: f64,
}

impl GaussianFit {
    /// Method-of-moments fit (population standard deviation).
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

/// Seeded uniform receiver positions on the communication floor.
pub fn seeded_floor_positions(
    width_m: f64,
    length_m: f64,
    floor_z: f64,
    count: usize,
    seed: u64,
) -> Vec<Point3> {
    (0..count as u64)
        .map(|i| {
            Point3::new(
                width_m * rng::uniform(seed, 0, 2 * i),
                length_m * rng::uniform(seed, 0, 2 * i + 1),
                floor_z,
            )
        })
        .collect()
}

/// Tone-current samples at the given receiver positions.
///
/// At each position the desired unit's best pixel is selected and the
/// desired and interfering tone currents at that pixel are recorded; the
/// two sample sets are fitted as Gaussians. Positions are evaluated
/// independently and merged in position order.
pub fn fit_tone_distributions(
    tracer: &Tracer,
    positions: &[Point3],
    receiver_template: &ImagingReceiver,
    desired_unit: usize,
    interfering_unit: usize,
) -> (GaussianFit, GaussianFit) {
    use rayon::prelude::*;
    let scene = tracer.scene();
    let samples: Vec<(f64, f64)> = positions
        .par_iter()
        .map(|&pos| {
            let receiver = ImagingReceiver {
                position: pos,
                ..receiver_template.clone()
            };
            let n_pixels = receiver.grid.pixel_count();
            let mut desired = vec![0.0f64; n_pixels];
            let mut undesired = vec![0.0f64; n_pixels];
            for a in tracer.trace_unit(desired_unit, &receiver) {
                if let Some(px) = a.pixel {
                    desired[px as usize] += a.power_w;
                }
            }
            for a in tracer.trace_unit(interfering_unit, &receiver) {
                if let Some(px) = a.pixel {
                    undesired[px as usize] += a.power_w;
                }
            }
            let mut best = 0;
            for (px, &p) in desired.iter().enumerate() {
                if p > desired[best] {
                    best = px;
                }
            }
            let r = receiver.electrical.responsivity;
            let mi_d = scene.units[desired_unit - 1].tone.modulation_index;
            let mi_u = scene.units[interfering_unit - 1].tone.modulation_index;
            (
                tone_current(desired[best], r, mi_d),
                tone_current(undesired[best], r, mi_u),
            )
        })
        .collect();
    let a: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let b: Vec<f64> = samples.iter().map(|s| s.1).collect();
    (GaussianFit::from_samples(&a), GaussianFit::from_samples(&b))
}

/// Upper tail of a standard normal.
fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Likelihood-ratio threshold between the two tone hypotheses, closed form.
///
/// The observed current under each hypothesis is the fitted tone current
/// plus the filter noise, so the densities are Gaussians of variance
/// `sigma_ds^2 + sigma_t^2` and `sigma_us^2 + sigma_t^2`. With equal priors
/// the optimal threshold is the density crossing between the two means; the
/// closed form below is checked against a numeric root of the crossing
/// whenever that root is bracketed, and the two agree to 1e-12 relative.
pub fn optimal_threshold(ds: GaussianFit, us: GaussianFit, sigma_t: f64) -> Result<f64, ScmError> {
    let m1 = us.mean;
    let m2 = ds.mean;
    let v1 = us.std * us.std + sigma_t * sigma_t;
    let v2 = ds.std * ds.std + sigma_t * sigma_t;
    if m2 == m1 && v2 == v1 {
        return Err(ScmError::IdenticalDistributions);
    }
    if m2 <= m1 {
        return Err(ScmError::MeansNotOrdered { m_ds: m2, m_us: m1 });
    }
    let th = closed_form_threshold(m1, v1, m2, v2);
    if let Some(numeric) = numeric_likelihood_threshold(ds, us, sigma_t) {
        let rel = (th - numeric).abs() / numeric.abs().max(f64::MIN_POSITIVE);
        assert!(
            rel < 1e-12,
            "closed-form threshold {th:.17e} disagrees with numeric root {numeric:.17e}"
        );
    }
    Ok(th)
}

/// Equal-prior density crossing of N(m1, v1) and N(m2, v2), the root lying
/// between the means.
fn closed_form_threshold(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    // (v2 - v1) z^2 - 2 (m1 v2 - m2 v1) z + m1^2 v2 - m2^2 v1
    //   - v1 v2 ln(v2 / v1) = 0.
    let a = v2 - v1;
    if a == 0.0 {
        return 0.5 * (m1 + m2);
    }
    let l = (v2 / v1).ln();
    let b = -2.0 * (m1 * v2 - m2 * v1);
    let c = m1 * m1 * v2 - m2 * m2 * v1 - v1 * v2 * l;
    // Discriminant in its factored, cancellation-free form:
    // b^2 - 4ac = 4 v1 v2 ((m2 - m1)^2 + a ln(v2/v1)) >= 0 always.
    let sqrt_d = 2.0 * (v1 * v2 * ((m2 - m1) * (m2 - m1) + a * l).max(0.0)).sqrt();
    if b == 0.0 && sqrt_d == 0.0 {
        return 0.5 * (m1 + m2);
    }
    // Citardauq pairing keeps both roots stable when |a| is tiny.
    let q = -0.5 * (b + b.signum() * sqrt_d);
    let near = c / q; // finite branch as a -> 0
    let far = q / a;
    let inside = |z: f64| z >= m1.min(m2) && z <= m1.max(m2);
    if inside(near) {
        near
    } else {
        far
    }
}

/// Numeric likelihood-ratio threshold: bisection on the log-density
/// difference over [m_us, m_ds]. `None` when the crossing is not bracketed
/// there.
pub fn numeric_likelihood_threshold(ds: GaussianFit, us: GaussianFit, sigma_t: f64) -> Option<f64> {
    let v1 = us.std * us.std + sigma_t * sigma_t;
    let v2 = ds.std * ds.std + sigma_t * sigma_t;
    if v1 == 0.0 || v2 == 0.0 {
        return None;
    }
    // log f2 - log f1, monotone-free; only its sign is used.
    let g = |z: f64| {
        let a = (z - ds.mean) * (z - ds.mean) / (2.0 * v2) + 0.5 * v2.ln();
        let b = (z - us.mean) * (z - us.mean) / (2.0 * v1) + 0.5 * v1.ln();
        b - a
    };
    let mut lo = us.mean;
    let mut hi = ds.mean;
    let (glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Some(lo);
    }
    if ghi == 0.0 {
        return Some(hi);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Outcome probabilities of the tone decision at a given threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionProbabilities {
    /// Correct detection of the desired tone.
    pub p_cds: f64,
    /// False alarm on an undesired tone.
    pub p_fus: f64,
    /// Correct rejection of an undesired tone.
    pub p_cus: f64,
    /// All M decisions correct.
    pub p_cd: f64,
    /// At least one wrong decision.
    pub p_wd: f64,
}

/// Gaussian tail probabilities of the decision rule with `m_units`
/// transmitters.
pub fn decision_probabilities(
    ds: GaussianFit,
    us: GaussianFit,
    sigma_t: f64,
    opt_th: f64,
    m_units: usize,
) -> DecisionProbabilities {
    let s2 = (ds.std * ds.std + sigma_t * sigma_t).sqrt();
    let s1 = (us.std * us.std + sigma_t * sigma_t).sqrt();
    let p_cds = q((opt_th - ds.mean) / s2);
    let p_fus = q((opt_th - us.mean) / s1);
    let p_cus = 1.0 - p_fus;
    // Tiny complements computed without cancellation: the miss probability
    // of the desired tone and the false-alarm probabilities enter through
    // log1p/expm1.
    let miss_ds = q((ds.mean - opt_th) / s2);
    let p_wd = -libm::expm1(libm::log1p(-miss_ds) + (m_units as f64 - 1.0) * libm::log1p(-p_fus));
    DecisionProbabilities {
        p_cds,
        p_fus,
        p_cus,
        p_cd: 1.0 - p_wd,
        p_wd,
    }
}

/// CNR/I of every (pixel, unit) pair, dB. The denominator is the tone-band
/// noise power plus the electrical power of every other unit's tone at the
/// same pixel.
pub fn cnr_over_i(h: &HMatrix, receiver: &ImagingReceiver, units: &[LightUnit]) -> Vec<Vec<f64>> {
    let r = receiver.electrical.responsivity;
    let area_cm2 = receiver.grid.pixel_area_m2 * 1e4;
    let mut out = vec![vec![f64::NEG_INFINITY; h.n_units]; h.n_pixels];
    for (px, row) in out.iter_mut().enumerate() {
        // Electrical tone power of each unit at this pixel.
        let elec: Vec<f64> = (1..=h.n_units)
            .map(|u| {
                let amp = tone_current(h.get(px, u), r, units[u - 1].tone.modulation_index);
                amp * amp / 2.0
            })
            .collect();
        let total: f64 = elec.iter().sum();
        for u in 1..=h.n_units {
            let signal = elec[u - 1];
            let noise = noise_sigma(area_cm2, h.get(px, u), r, TONE_BPF_BANDWIDTH_HZ).sigma_t;
            let interference = total - signal;
            let ratio = signal / (noise * noise + interference);
            row[u - 1] = 10.0 * ratio.log10();
        }
    }
    out
}

/// Which units transmit and which pixels serve them.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationResult {
    /// `active[unit - 1]`: some pixel exceeds the threshold for this unit.
    pub active: Vec<bool>,
    /// `serving[unit - 1]`: every pixel exceeding the threshold, ascending.
    pub serving: Vec<Vec<u16>>,
    pub threshold_db: f64,
}

impl AssociationResult {
    pub fn active_unit_ids(&self) -> Vec<usize> {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i + 1))
            .collect()
    }
}

/// Gate each unit on its best-pixel CNR/I.
pub fn associate(cnr_i_db: &[Vec<f64>], n_units: usize, threshold_db: f64) -> AssociationResult {
    let mut serving = vec![Vec::new(); n_units];
    for (px, row) in cnr_i_db.iter().enumerate() {
        for (u, &db) in row.iter().enumerate() {
            if db > threshold_db {
                serving[u].push(px as u16);
            }
        }
    }
    let active = serving.iter().map(|s| !s.is_empty()).collect();
    AssociationResult {
        active,
        serving,
        threshold_db,
    }
}
