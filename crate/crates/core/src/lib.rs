//! Deterministic simulator of an indoor visible-light communication system.
//!
//! Ceiling-mounted laser light units illuminate a room; an imaging receiver
//! on the communication floor collects line-of-sight and reflected light on
//! a 288-pixel detector. The crate ray-traces the multipath optical channel
//! between every unit and every pixel, runs the subcarrier-tone protocol
//! that matches units to pixels and gates them on carrier-to-noise-plus-
//! interference ratio, and searches each active unit's maximum OOK rate
//! under inter-symbol and co-channel interference.
//!
//! Modules follow the processing chain:
//!
//! - [`scene`]: rooms, reflecting surfaces, occluders, light units
//! - [`receiver`]: concentrator optics, pixel array, electrical model
//! - [`raytracer`]: exact (delay, power) ray lists up to second-order
//!   reflections
//! - [`scm`]: tone identification, noise budget, threshold detection,
//!   CNR/I gating
//! - [`link`]: delay spread, eye powers, SINR/BER, rate search, position
//!   reports
//! - [`rng`]: counter-based seeded randomness for reproducible sweeps
//!
//! Everything is deterministic: identical inputs and seeds produce
//! bit-identical outputs regardless of thread count.

pub mod geom;
pub mod link;
pub mod raytracer;
pub mod receiver;
pub mod rng;
pub mod scene;
pub mod scm;

pub use geom::{Direction3, Point3, Vec3};
pub use link::{evaluate_position, evaluate_positions, LinkReport, UnitReport};
pub use raytracer::{trace, Arrival, ChannelMatrix, Tracer, SPEED_OF_LIGHT};
pub use receiver::{ImagingReceiver, PixelIndex};
pub use scene::{build_room_a, build_room_b, parse_scene, serialize_scene, Scene};
pub use scm::{associate, build_h, cnr_over_i, HMatrix};
