//! Built-in room presets.
//!
//! Room A is the unfurnished 4 m x 8 m x 3 m room; room B is the same shell
//! furnished as a small office: three windows and a door that reflect
//! nothing, two bookshelf-covered walls, two cubicles with absorbing
//! partitions, and low furniture. The furniture coordinates are frozen here
//! so every run of the furnished room is comparable.

use super::{LightUnit, Occluder, ReflectingSurface, Scene};
use crate::geom::{Aabb, Point3, Rect, Vec3};

const WIDTH: f64 = 4.0;
const LENGTH: f64 = 8.0;
const HEIGHT: f64 = 3.0;
const COMM_FLOOR: f64 = 1.0;

const RHO_WALL: f64 = 0.8;
const RHO_CEILING: f64 = 0.8;
const RHO_FLOOR: f64 = 0.3;
const RHO_BOOKSHELF: f64 = 0.4;
const RHO_FURNITURE: f64 = 0.3;

/// Unit centres, numbered so that mirror images through the room centre pair
/// up as {1,8}, {2,7}, {3,6}, {4,5}: adjacent ids sit across the width.
const UNIT_CENTERS: [(f64, f64); 8] = [
    (1.0, 1.0),
    (3.0, 1.0),
    (1.0, 3.0),
    (3.0, 3.0),
    (1.0, 5.0),
    (3.0, 5.0),
    (1.0, 7.0),
    (3.0, 7.0),
];

fn units() -> Vec<LightUnit> {
    UNIT_CENTERS
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| LightUnit::new(i + 1, Point3::new(x, y, HEIGHT)))
        .collect()
}

fn floor(rho: f64) -> ReflectingSurface {
    ReflectingSurface::new(
        Rect::new(
            Point3::new(0.0, 0.0, 0.0),
            Vec3::new(WIDTH, 0.0, 0.0),
            Vec3::new(0.0, LENGTH, 0.0),
        ),
        rho,
    )
}

fn ceiling(rho: f64) -> ReflectingSurface {
    ReflectingSurface::new(
        Rect::new(
            Point3::new(0.0, 0.0, HEIGHT),
            Vec3::new(0.0, LENGTH, 0.0),
            Vec3::new(WIDTH, 0.0, 0.0),
        ),
        rho,
    )
}

/// Vertical patch of the x = 0 wall (inward normal +x).
fn wall_x0(y0: f64, y1: f64, z0: f64, z1: f64, rho: f64) -> ReflectingSurface {
    ReflectingSurface::new(
        Rect::new(
            Point3::new(0.0, y0, z0),
            Vec3::new(0.0, y1 - y0, 0.0),
            Vec3::new(0.0, 0.0, z1 - z0),
        ),
        rho,
    )
}

/// Vertical patch of the x = WIDTH wall (inward normal -x).
fn wall_x1(y0: f64, y1: f64, z0: f64, z1: f64, rho: f64) -> ReflectingSurface {
    ReflectingSurface::new(
        Rect::new(
            Point3::new(WIDTH, y0, z0),
            Vec3::new(0.0, 0.0, z1 - z0),
            Vec3::new(0.0, y1 - y0, 0.0),
        ),
        rho,
    )
}

/// Vertical patch of the y = 0 wall (inward normal +y).
fn wall_y0(x0: f64, x1: f64, z0: f64, z1: f64, rho: f64) -> ReflectingSurface {
    ReflectingSurface::new(
        Rect::new(
            Point3::new(x0, 0.0, z0),
            Vec3::new(0.0, 0.0, z1 - z0),
            Vec3::new(x1 - x0, 0.0, 0.0),
        ),
        rho,
    )
}

/// Vertical patch of the y = LENGTH wall (inward normal -y).
fn wall_y1(x0: f64, x1: f64, z0: f64, z1: f64, rho: f64) -> ReflectingSurface {
    ReflectingSurface::new(
        Rect::new(
            Point3::new(x0, LENGTH, z0),
            Vec3::new(x1 - x0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, z1 - z0),
        ),
        rho,
    )
}

/// The unfurnished room: bare shell, eight ceiling units, no occluders.
pub fn build_room_a() -> Scene {
    let scene = Scene {
        width_m: WIDTH,
        length_m: LENGTH,
        height_m: HEIGHT,
        surfaces: vec![
            ceiling(RHO_CEILING),
            wall_x0(0.0, LENGTH, 0.0, HEIGHT, RHO_WALL),
            wall_x1(0.0, LENGTH, 0.0, HEIGHT, RHO_WALL),
            wall_y0(0.0, WIDTH, 0.0, HEIGHT, RHO_WALL),
            wall_y1(0.0, WIDTH, 0.0, HEIGHT, RHO_WALL),
            floor(RHO_FLOOR),
        ],
        occluders: vec![],
        units: units(),
        comm_floor_z: COMM_FLOOR,
    };
    debug_assert!(scene.validate().is_ok());
    scene
}

/// Exposed faces of an axis-aligned furniture box: four sides and the top.
fn furniture_faces(min: Point3, max: Point3, rho: f64) -> Vec<ReflectingSurface> {
    let (dx, dy, dz) = (max.x - min.x, max.y - min.y, max.z - min.z);
    vec![
        // top, normal +z
        ReflectingSurface::interior(
            Rect::new(
                Point3::new(min.x, min.y, max.z),
                Vec3::new(dx, 0.0, 0.0),
                Vec3::new(0.0, dy, 0.0),
            ),
            rho,
        ),
        // -x side
        ReflectingSurface::interior(
            Rect::new(min, Vec3::new(0.0, 0.0, dz), Vec3::new(0.0, dy, 0.0)),
            rho,
        ),
        // +x side
        ReflectingSurface::interior(
            Rect::new(
                Point3::new(max.x, min.y, min.z),
                Vec3::new(0.0, dy, 0.0),
                Vec3::new(0.0, 0.0, dz),
            ),
            rho,
        ),
        // -y side
        ReflectingSurface::interior(
            Rect::new(min, Vec3::new(dx, 0.0, 0.0), Vec3::new(0.0, 0.0, dz)),
            rho,
        ),
        // +y side
        ReflectingSurface::interior(
            Rect::new(
                Point3::new(min.x, max.y, min.z),
                Vec3::new(0.0, 0.0, dz),
                Vec3::new(dx, 0.0, 0.0),
            ),
            rho,
        ),
    ]
}

/// The furnished small office.
///
/// Frozen layout:
/// - windows (rho 0): x = 0 wall at y [1.0, 2.5] and y [5.5, 7.0], both
///   z [1.0, 2.5]; y = 0 wall at x [0.75, 2.25], z [1.0, 2.5]
/// - door (rho 0): y = 0 wall at x [2.9, 3.8], z [0, 2.1]
/// - bookshelf walls (rho 0.4): x = 4 and y = 8, full height
/// - two cubicles: L-shaped absorbing partitions 1.5 m high
/// - desks, a table and two chairs: rho 0.3 boxes below the communication
///   floor
pub fn build_room_b() -> Scene {
    let mut surfaces = vec![ceiling(RHO_CEILING)];

    // x = 0 wall around two windows.
    surfaces.extend([
        wall_x0(0.0, 1.0, 0.0, HEIGHT, RHO_WALL),
        wall_x0(1.0, 2.5, 0.0, 1.0, RHO_WALL),
        wall_x0(1.0, 2.5, 2.5, HEIGHT, RHO_WALL),
        wall_x0(2.5, 5.5, 0.0, HEIGHT, RHO_WALL),
        wall_x0(5.5, 7.0, 0.0, 1.0, RHO_WALL),
        wall_x0(5.5, 7.0, 2.5, HEIGHT, RHO_WALL),
        wall_x0(7.0, LENGTH, 0.0, HEIGHT, RHO_WALL),
        wall_x0(1.0, 2.5, 1.0, 2.5, 0.0), // window
        wall_x0(5.5, 7.0, 1.0, 2.5, 0.0), // window
    ]);

    // y = 0 wall around one window and the door.
    surfaces.extend([
        wall_y0(0.0, 0.75, 0.0, HEIGHT, RHO_WALL),
        wall_y0(0.75, 2.25, 0.0, 1.0, RHO_WALL),
        wall_y0(0.75, 2.25, 2.5, HEIGHT, RHO_WALL),
        wall_y0(2.25, 2.9, 0.0, HEIGHT, RHO_WALL),
        wall_y0(2.9, 3.8, 2.1, HEIGHT, RHO_WALL),
        wall_y0(3.8, WIDTH, 0.0, HEIGHT, RHO_WALL),
        wall_y0(0.75, 2.25, 1.0, 2.5, 0.0), // window
        wall_y0(2.9, 3.8, 0.0, 2.1, 0.0),   // door
    ]);

    // Bookshelf-covered walls.
    surfaces.push(wall_x1(0.0, LENGTH, 0.0, HEIGHT, RHO_BOOKSHELF));
    surfaces.push(wall_y1(0.0, WIDTH, 0.0, HEIGHT, RHO_BOOKSHELF));

    surfaces.push(floor(RHO_FLOOR));

    // Desks inside the cubicles, a table and two chairs in the open area.
    for (min, max) in [
        (Point3::new(0.05, 3.15, 0.0), Point3::new(0.75, 3.85, 0.75)),
        (Point3::new(3.25, 6.15, 0.0), Point3::new(3.95, 6.85, 0.75)),
        (Point3::new(1.45, 1.1, 0.0), Point3::new(2.55, 1.9, 0.75)),
        (Point3::new(1.2, 4.6, 0.0), Point3::new(1.65, 5.05, 0.45)),
        (Point3::new(2.4, 4.9, 0.0), Point3::new(2.85, 5.35, 0.45)),
    ] {
        surfaces.extend(furniture_faces(min, max, RHO_FURNITURE));
    }

    // Two wall-side cubicles, each an L of two absorbing partitions, with a
    // clear aisle through the middle of the room.
    let occluders = vec![
        Occluder {
            aabb: Aabb::new(Point3::new(0.0, 2.95, 0.0), Point3::new(0.85, 3.05, 1.5)),
        },
        Occluder {
            aabb: Aabb::new(Point3::new(0.8, 3.05, 0.0), Point3::new(0.85, 4.45, 1.5)),
        },
        Occluder {
            aabb: Aabb::new(Point3::new(3.15, 5.95, 0.0), Point3::new(4.0, 6.05, 1.5)),
        },
        Occluder {
            aabb: Aabb::new(Point3::new(3.15, 6.05, 0.0), Point3::new(3.2, 7.45, 1.5)),
        },
    ];

    let scene = Scene {
        width_m: WIDTH,
        length_m: LENGTH,
        height_m: HEIGHT,
        surfaces,
        occluders,
        units: units(),
        comm_floor_z: COMM_FLOOR,
    };
    debug_assert!(scene.validate().is_ok());
    scene
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn room_a_matches_reference_parameters() {
        let scene = build_room_a();
        assert_eq!(scene.units.len(), 8);
        assert_eq!(scene.units[0].center, Point3::new(1.0, 1.0, 3.0));
        assert_eq!(scene.units[7].center, Point3::new(3.0, 7.0, 3.0));
        assert!(scene.occluders.is_empty());
        let floor = scene
            .surfaces
            .iter()
            .find(|s| s.rect.origin.z == 0.0 && s.rect.normal().as_vec().z > 0.0)
            .unwrap();
        assert!((floor.rho - 0.3).abs() < 1e-12);
    }

    #[test]
    fn room_a_element_counts_match_both_resolutions() {
        let scene = build_room_a();
        assert_eq!(scene.discretize(0.05).len(), 32_000);
        assert_eq!(scene.discretize(0.20).len(), 2_000);
    }

    #[test]
    fn room_b_walls_windows_and_occluders() {
        let scene = build_room_b();
        scene.validate().unwrap();
        // Bookshelf wall at x = 4 m.
        let shelf = scene
            .surfaces
            .iter()
            .find(|s| (s.rect.origin.x - 4.0).abs() < 1e-12)
            .unwrap();
        assert!((shelf.rho - 0.4).abs() < 1e-12);
        // Windows present.
        assert!(scene.surfaces.iter().any(|s| s.rho == 0.0));
        // Furnished by definition.
        assert!(!scene.occluders.is_empty());
    }

    #[test]
    fn room_b_partition_blocks_cross_cubicle_sight_line() {
        let scene = build_room_b();
        let p = Point3::new(0.5, 2.5, 1.0);
        let q = Point3::new(0.5, 3.5, 1.0);
        assert!(!scene.visible(p, q));
        // Same segment well above the 1.5 m partition passes over it.
        let p2 = Point3::new(0.5, 2.5, 2.5);
        let q2 = Point3::new(0.5, 3.5, 2.5);
        assert!(scene.visible(p2, q2));
    }

    #[test]
    fn room_a_mirror_symmetry_of_units() {
        // Reflecting unit centres through x = 2 or y = 4 permutes the set.
        let scene = build_room_a();
        let centers: Vec<_> = scene.units.iter().map(|u| u.center).collect();
        for c in &centers {
            let mx = Point3::new(4.0 - c.x, c.y, c.z);
            let my = Point3::new(c.x, 8.0 - c.y, c.z);
            assert!(centers.iter().any(|o| o.distance(mx) < 1e-12));
            assert!(centers.iter().any(|o| o.distance(my) < 1e-12));
        }
        // Point reflection through the room centre maps id i to 9 - i.
        for u in &scene.units {
            let reflected = Point3::new(4.0 - u.center.x, 8.0 - u.center.y, u.center.z);
            let partner = &scene.units[8 - u.id];
            assert!(partner.center.distance(reflected) < 1e-12);
        }
    }
}
