//! Minimal 3-D geometry: points, vectors, unit directions, rectangles and
//! axis-aligned boxes, plus the segment intersection tests the visibility
//! queries are built on.

use thiserror::Error;

/// Tolerance for unit-vector and orthogonality checks.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("vector has (near-)zero length, cannot normalize")]
    ZeroLength,
    #[error("direction is not unit length: |v| = {0}")]
    NotUnit(f64),
}

/// A point in room coordinates, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// A displacement between points, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vec(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn offset(self, v: Vec3) -> Point3 {
        Point3::new(self.x + v.x, self.y + v.y, self.z + v.z)
    }

    /// Displacement from `other` to `self`.
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Point3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn distance(self, other: Point3) -> f64 {
        self.sub(other).norm()
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }
}

/// A unit-length direction. The constructor enforces |v| = 1 within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction3(Vec3);

impl Direction3 {
    /// Wrap an already-unit vector, checking the norm.
    pub fn new(v: Vec3) -> Result<Self, GeomError> {
        let n = v.norm();
        if (n - 1.0).abs() > GEOM_EPS {
            return Err(GeomError::NotUnit(n));
        }
        Ok(Self(v))
    }

    /// Normalize an arbitrary vector into a direction.
    pub fn normalize(v: Vec3) -> Result<Self, GeomError> {
        let n = v.norm();
        if n < 1e-300 {
            return Err(GeomError::ZeroLength);
        }
        Ok(Self(v.scale(1.0 / n)))
    }

    pub fn as_vec(self) -> Vec3 {
        self.0
    }

    pub fn dot(self, other: Direction3) -> f64 {
        self.0.dot(other.0)
    }

    pub const UP: Direction3 = Direction3(Vec3::new(0.0, 0.0, 1.0));
    pub const DOWN: Direction3 = Direction3(Vec3::new(0.0, 0.0, -1.0));
}

/// A planar rectangle given by an origin corner and two orthogonal edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub origin: Point3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
}

impl Rect {
    pub fn new(origin: Point3, edge_u: Vec3, edge_v: Vec3) -> Self {
        Self {
            origin,
            edge_u,
            edge_v,
        }
    }

    pub fn area(&self) -> f64 {
        self.edge_u.cross(self.edge_v).norm()
    }

    /// Unit normal (right-handed from edge_u to edge_v).
    pub fn normal(&self) -> Direction3 {
        Direction3::normalize(self.edge_u.cross(self.edge_v)).expect("degenerate rectangle")
    }

    /// True if the open segment (p, q) crosses the rectangle's interior.
    /// Intersections within `eps` of either endpoint (as a fraction of the
    /// segment) do not count, so rays leaving or arriving at a surface are
    /// not blocked by it.
    pub fn blocks_segment(&self, p: Point3, q: Point3, eps: f64) -> bool {
        let d = q.sub(p);
        let n = self.edge_u.cross(self.edge_v);
        let denom = n.dot(d);
        if denom.abs() < 1e-300 {
            return false; // segment parallel to the plane
        }
        let t = n.dot(self.origin.sub(p)) / denom;
        if t <= eps || t >= 1.0 - eps {
            return false;
        }
        let hit = p.offset(d.scale(t));
        let rel = hit.sub(self.origin);
        let uu = self.edge_u.dot(self.edge_u);
        let vv = self.edge_v.dot(self.edge_v);
        let a = rel.dot(self.edge_u) / uu;
        let b = rel.dot(self.edge_v) / vv;
        (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)
    }
}

/// An axis-aligned box, min corner strictly below max corner componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        debug_assert!(min.x < max.x && min.y < max.y && min.z < max.z);
        Self { min, max }
    }

    pub fn contains(&self, p: Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Slab test: true if the open segment (p, q) passes through the box.
    pub fn blocks_segment(&self, p: Point3, q: Point3, eps: f64) -> bool {
        let d = q.sub(p);
        let mut t0: f64 = eps;
        let mut t1: f64 = 1.0 - eps;
        for (p0, dir, lo, hi) in [
            (p.x, d.x, self.min.x, self.max.x),
            (p.y, d.y, self.min.y, self.max.y),
            (p.z, d.z, self.min.z, self.max.z),
        ] {
            if dir.abs() < 1e-300 {
                if p0 < lo || p0 > hi {
                    return false;
                }
            } else {
                let inv = 1.0 / dir;
                let (mut ta, mut tb) = ((lo - p0) * inv, (hi - p0) * inv);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_rejects_non_unit() {
        assert!(Direction3::new(Vec3::new(1.0, 1.0, 0.0)).is_err());
        assert!(Direction3::new(Vec3::new(0.0, 0.0, 1.0)).is_ok());
    }

    #[test]
    fn normalize_zero_fails() {
        assert_eq!(
            Direction3::normalize(Vec3::new(0.0, 0.0, 0.0)),
            Err(GeomError::ZeroLength)
        );
    }

    #[test]
    fn rect_area_and_normal() {
        let r = Rect::new(
            Point3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 3.0, 0.0),
        );
        assert!((r.area() - 6.0).abs() < 1e-12);
        assert_eq!(r.normal().as_vec(), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn rect_blocks_crossing_segment() {
        let r = Rect::new(
            Point3::new(-1.0, -1.0, 1.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
        );
        let p = Point3::new(0.0, 0.0, 0.0);
        let q = Point3::new(0.0, 0.0, 2.0);
        assert!(r.blocks_segment(p, q, 1e-9));
        // Segment ending exactly on the plane is not blocked by it.
        let q_on = Point3::new(0.0, 0.0, 1.0);
        assert!(!r.blocks_segment(p, q_on, 1e-9));
        // Miss to the side.
        let p2 = Point3::new(5.0, 5.0, 0.0);
        let q2 = Point3::new(5.0, 5.0, 2.0);
        assert!(!r.blocks_segment(p2, q2, 1e-9));
    }

    #[test]
    fn aabb_blocks_segment() {
        let b = Aabb::new(Point3::new(1.0, 1.0, 0.0), Point3::new(2.0, 2.0, 1.5));
        let p = Point3::new(0.0, 1.5, 0.75);
        let q = Point3::new(3.0, 1.5, 0.75);
        assert!(b.blocks_segment(p, q, 1e-9));
        // Passing above the box.
        let p2 = Point3::new(0.0, 1.5, 2.0);
        let q2 = Point3::new(3.0, 1.5, 2.0);
        assert!(!b.blocks_segment(p2, q2, 1e-9));
        // Endpoint on a face does not block.
        let on_face = Point3::new(1.0, 1.5, 0.75);
        assert!(!b.blocks_segment(p, on_face, 1e-6));
    }
}
