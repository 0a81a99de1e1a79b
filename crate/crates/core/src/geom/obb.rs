//! Oriented boxes, the separating-axis kernel and FreeSpace synthesis.

use nalgebra::{Matrix3, Vector3};
use sha2::{Digest, Sha256};

use super::{GeomError, Transform};
use crate::graph::{Iri, Literal, Subject, Term, Triple};
use crate::vocab;

const ORTHO_TOL: f64 = 1e-9;

/// Default adjacency tolerance in meters.
pub const DEFAULT_ADJACENCY_EPS: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    center: Vector3<f64>,
    axes: [Vector3<f64>; 3],
    half_extents: Vector3<f64>,
}

impl Obb {
    pub fn new(center: Vector3<f64>, axes: [Vector3<f64>; 3], half_extents: Vector3<f64>) -> Result<Self, GeomError> {
        if half_extents.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(GeomError::InvalidDimension(format!(
                "half extents must be positive, got ({}, {}, {})",
                half_extents.x, half_extents.y, half_extents.z
            )));
        }
        for i in 0..3 {
            if (axes[i].norm() - 1.0).abs() > ORTHO_TOL {
                return Err(GeomError::NotOrthonormal);
            }
            for j in i + 1..3 {
                if axes[i].dot(&axes[j]).abs() > ORTHO_TOL {
                    return Err(GeomError::NotOrthonormal);
                }
            }
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(GeomError::Malformed("non-finite box center".into()));
        }
        Ok(Obb {
            center,
            axes,
            half_extents,
        })
    }

    pub fn axis_aligned(center: Vector3<f64>, half_extents: Vector3<f64>) -> Result<Self, GeomError> {
        Self::new(center, [Vector3::x(), Vector3::y(), Vector3::z()], half_extents)
    }

    /// Box spanned by a rotation matrix's columns.
    pub fn from_rotation(center: Vector3<f64>, rotation: &Matrix3<f64>, half_extents: Vector3<f64>) -> Result<Self, GeomError> {
        Self::new(
            center,
            [rotation.column(0).into(), rotation.column(1).into(), rotation.column(2).into()],
            half_extents,
        )
    }

    pub fn center(&self) -> Vector3<f64> {
        self.center
    }

    pub fn axes(&self) -> [Vector3<f64>; 3] {
        self.axes
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        self.half_extents
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&self.axes)
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let mut out = [Vector3::zeros(); 8];
        for (k, corner) in out.iter_mut().enumerate() {
            let sign = |bit: usize| if k & (1 << bit) == 0 { -1.0 } else { 1.0 };
            *corner = self.center
                + self.axes[0] * (sign(0) * self.half_extents.x)
                + self.axes[1] * (sign(1) * self.half_extents.y)
                + self.axes[2] * (sign(2) * self.half_extents.z);
        }
        out
    }

    /// Projection radius onto a unit direction.
    fn radius_along(&self, l: &Vector3<f64>) -> f64 {
        self.half_extents.x * self.axes[0].dot(l).abs()
            + self.half_extents.y * self.axes[1].dot(l).abs()
            + self.half_extents.z * self.axes[2].dot(l).abs()
    }

    /// World-space axis-aligned bounds `(min, max)`.
    pub fn aabb(&self) -> (Vector3<f64>, Vector3<f64>) {
        let r = Vector3::new(
            self.radius_along(&Vector3::x()),
            self.radius_along(&Vector3::y()),
            self.radius_along(&Vector3::z()),
        );
        (self.center - r, self.center + r)
    }

    pub fn min_z(&self) -> f64 {
        self.center.z - self.radius_along(&Vector3::z())
    }

    pub fn max_z(&self) -> f64 {
        self.center.z + self.radius_along(&Vector3::z())
    }

    pub fn transformed(&self, t: &Transform) -> Result<Obb, GeomError> {
        Obb::new(
            t.apply(&self.center),
            self.axes.map(|a| t.apply_vector(&a)),
            self.half_extents,
        )
    }

    /// Re-labels axes so that `facing` (0 or 1) becomes axis 1 while the
    /// frame stays right-handed. Axis 2 is always vertical.
    pub fn with_facing_axis(&self, facing: usize) -> Obb {
        match facing {
            0 => Obb {
                center: self.center,
                axes: [-self.axes[1], self.axes[0], self.axes[2]],
                half_extents: Vector3::new(self.half_extents.y, self.half_extents.x, self.half_extents.z),
            },
            _ => *self,
        }
    }
}

/// Signed separation along the 15 SAT axes: negative when overlapping,
/// zero when touching, positive gap otherwise.
pub fn separation(a: &Obb, b: &Obb) -> f64 {
    let d = b.center - a.center;
    let gap = |l: &Vector3<f64>| d.dot(l).abs() - (a.radius_along(l) + b.radius_along(l));
    let mut best = f64::NEG_INFINITY;
    for axis in a.axes.iter().chain(b.axes.iter()) {
        best = best.max(gap(axis));
    }
    for ai in &a.axes {
        for bj in &b.axes {
            let c = ai.cross(bj);
            let n = c.norm();
            if n < 1e-9 {
                continue;
            }
            best = best.max(gap(&(c / n)));
        }
    }
    best
}

pub fn intersects(a: &Obb, b: &Obb) -> bool {
    separation(a, b) < 0.0
}

pub fn adjacent(a: &Obb, b: &Obb, eps: f64) -> bool {
    separation(a, b).abs() <= eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LEFT" => Ok(Side::Left),
            "RIGHT" => Ok(Side::Right),
            other => Err(GeomError::Malformed(format!("side must be LEFT or RIGHT, got '{other}'"))),
        }
    }
}

/// A clearance box flush against the anchor's left (−axis 0) or right
/// (+axis 0) face, centered on the anchor along axis 1, base level with
/// the anchor's base along axis 2.
pub fn make_freespace(anchor: &Obb, side: Side, width: f64, depth: f64, height: f64) -> Result<Obb, GeomError> {
    for (name, v) in [("width", width), ("depth", depth), ("height", height)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(GeomError::InvalidDimension(format!("FreeSpace {name} must be positive, got {v}")));
        }
    }
    let [lateral, _, vertical] = anchor.axes;
    let e = anchor.half_extents;
    let sign = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let center = anchor.center + lateral * (sign * (e.x + width / 2.0)) + vertical * (height / 2.0 - e.z);
    Obb::new(center, anchor.axes, Vector3::new(width / 2.0, depth / 2.0, height / 2.0))
}

/// Blank node label for an element's box, stable across runs.
pub fn obb_node(element: &Iri) -> u64 {
    let digest = Sha256::digest(element.as_str().as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes) >> 2
}

pub const CENTER_PREDICATES: [&str; 3] = ["centerX", "centerY", "centerZ"];
pub const AXIS_PREDICATES: [[&str; 3]; 3] = [
    ["axis0X", "axis0Y", "axis0Z"],
    ["axis1X", "axis1Y", "axis1Z"],
    ["axis2X", "axis2Y", "axis2Z"],
];
pub const HALF_EXTENT_PREDICATES: [&str; 3] = ["halfExtent0", "halfExtent1", "halfExtent2"];

/// The box as `geo:` triples: one link plus fifteen numbers.
pub fn geometry_triples(element: &Iri, obb: &Obb) -> Vec<Triple> {
    let node = Subject::Blank(obb_node(element));
    let num = |v: f64| Term::Literal(Literal::decimal_fixed(v, 6));
    let mut out = Vec::with_capacity(16);
    out.push(Triple::new(element.clone(), vocab::geo("hasObb"), Term::from(node.clone())));
    for (i, p) in CENTER_PREDICATES.iter().enumerate() {
        out.push(Triple::new(node.clone(), vocab::geo(p), num(obb.center[i])));
    }
    for (axis, preds) in obb.axes.iter().zip(AXIS_PREDICATES) {
        for (i, p) in preds.iter().enumerate() {
            out.push(Triple::new(node.clone(), vocab::geo(p), num(axis[i])));
        }
    }
    for (i, p) in HALF_EXTENT_PREDICATES.iter().enumerate() {
        out.push(Triple::new(node.clone(), vocab::geo(p), num(obb.half_extents[i])));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn cube(x: f64, y: f64, z: f64) -> Obb {
        Obb::axis_aligned(Vector3::new(x, y, z), Vector3::repeat(0.5)).unwrap()
    }

    #[test]
    fn axis_aligned_gap_and_overlap() {
        assert_eq!(separation(&cube(0.0, 0.0, 0.0), &cube(2.0, 0.0, 0.0)), 1.0);
        assert_eq!(separation(&cube(0.0, 0.0, 0.0), &cube(0.5, 0.0, 0.0)), -0.5);
        assert!(intersects(&cube(0.0, 0.0, 0.0), &cube(0.5, 0.0, 0.0)));
        assert!(!intersects(&cube(0.0, 0.0, 0.0), &cube(2.0, 0.0, 0.0)));
    }

    #[test]
    fn touching_is_adjacent_not_intersecting() {
        let (a, b) = (cube(0.0, 0.0, 0.0), cube(1.0, 0.0, 0.0));
        assert_eq!(separation(&a, &b), 0.0);
        assert!(!intersects(&a, &b));
        assert!(adjacent(&a, &b, DEFAULT_ADJACENCY_EPS));
        assert!(!adjacent(&a, &cube(1.5, 0.0, 0.0), DEFAULT_ADJACENCY_EPS));
        assert!(adjacent(&a, &cube(1.0005, 0.0, 0.0), DEFAULT_ADJACENCY_EPS));
    }

    #[test]
    fn rotated_cube_overlaps() {
        let r = Transform::rotation_z(FRAC_PI_4).rotation;
        let b = Obb::from_rotation(Vector3::new(1.2, 0.0, 0.0), &r, Vector3::repeat(0.5)).unwrap();
        let s = separation(&cube(0.0, 0.0, 0.0), &b);
        // Along global X the rotated cube reaches 1.2 - sqrt(0.5) < 0.5.
        assert!(s < 0.0, "{s}");
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(Obb::axis_aligned(Vector3::zeros(), Vector3::new(1.0, 0.0, 1.0)).is_err());
        assert!(Obb::new(Vector3::zeros(), [Vector3::x(), Vector3::x(), Vector3::z()], Vector3::repeat(1.0)).is_err());
    }

    #[test]
    fn freespace_left_and_right() {
        let anchor = Obb::axis_aligned(Vector3::zeros(), Vector3::new(0.3, 0.4, 0.5)).unwrap();
        let left = make_freespace(&anchor, Side::Left, 0.8, 1.0, 2.0).unwrap();
        assert!((left.center() - Vector3::new(-0.7, 0.0, 0.5)).amax() < 1e-12);
        assert_eq!(left.half_extents(), Vector3::new(0.4, 0.5, 1.0));
        let right = make_freespace(&anchor, Side::Right, 0.8, 1.0, 2.0).unwrap();
        assert!((right.center() - Vector3::new(0.7, 0.0, 0.5)).amax() < 1e-12);
        assert!(make_freespace(&anchor, Side::Left, 0.0, 1.0, 2.0).is_err());
        assert!(make_freespace(&anchor, Side::Left, 0.8, -1.0, 2.0).is_err());
    }

    #[test]
    fn freespace_follows_anchor_rotation() {
        let rot = Transform::rotation_z(std::f64::consts::FRAC_PI_2);
        let anchor = Obb::from_rotation(Vector3::zeros(), &rot.rotation, Vector3::new(0.3, 0.4, 0.5)).unwrap();
        let left = make_freespace(&anchor, Side::Left, 0.8, 1.0, 2.0).unwrap();
        let expected = rot.apply(&Vector3::new(-0.7, 0.0, 0.5));
        assert!((left.center() - expected).amax() < 1e-12);
    }

    #[test]
    fn facing_override_keeps_handedness() {
        let anchor = Obb::axis_aligned(Vector3::zeros(), Vector3::new(0.3, 0.4, 0.5)).unwrap();
        let f = anchor.with_facing_axis(0);
        assert_eq!(f.axes()[1], Vector3::x());
        assert!((f.rotation().determinant() - 1.0).abs() < 1e-12);
        assert_eq!(f.half_extents(), Vector3::new(0.4, 0.3, 0.5));
    }

    #[test]
    fn triples_shape() {
        let e = vocab::inst(3);
        let t = geometry_triples(&e, &cube(0.0, 0.0, 0.0));
        assert_eq!(t.len(), 16);
        assert_eq!(t, geometry_triples(&e, &cube(0.0, 0.0, 0.0)));
        for p in CENTER_PREDICATES {
            let tr = t.iter().find(|tr| tr.predicate == vocab::geo(p)).unwrap();
            assert_eq!(tr.object.as_literal().unwrap().lexical(), "0.000000");
        }
    }

    #[test]
    fn bounds() {
        let r = Transform::rotation_z(FRAC_PI_4).rotation;
        let b = Obb::from_rotation(Vector3::zeros(), &r, Vector3::new(0.5, 0.5, 1.0)).unwrap();
        let (lo, hi) = b.aabb();
        assert!((hi.x - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(lo.z, -1.0);
        assert_eq!(b.min_z(), -1.0);
        assert_eq!(b.max_z(), 1.0);
    }
}
