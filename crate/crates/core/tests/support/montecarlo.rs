//! Point-membership oracle for box overlap. Samples are drawn in the
//! overlap of the two axis-aligned hulls; after each batch the window
//! shrinks around the sample closest to lying in both boxes.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use regcheck::geom::Obb;

pub const SAMPLES: usize = 100_000;
const ROUNDS: usize = 25;

fn local(b: &Obb, p: &Vector3<f64>) -> Vector3<f64> {
    let axes = b.axes();
    let d = p - b.center();
    Vector3::new(d.dot(&axes[0]), d.dot(&axes[1]), d.dot(&axes[2]))
}

pub fn contains(b: &Obb, p: &Vector3<f64>) -> bool {
    let q = local(b, p);
    let e = b.half_extents();
    (0..3).all(|i| q[i].abs() <= e[i])
}

/// Largest per-axis excess of `p` over the box; <= 0 inside.
fn excess(b: &Obb, p: &Vector3<f64>) -> f64 {
    let q = local(b, p);
    let e = b.half_extents();
    (0..3).map(|i| q[i].abs() - e[i]).fold(f64::NEG_INFINITY, f64::max)
}

pub fn overlaps<R: Rng>(a: &Obb, b: &Obb, rng: &mut R) -> bool {
    let (alo, ahi) = a.aabb();
    let (blo, bhi) = b.aabb();
    let mut lo = alo.sup(&blo);
    let mut hi = ahi.inf(&bhi);
    if (0..3).any(|i| lo[i] > hi[i]) {
        return false;
    }
    let batch = SAMPLES / ROUNDS;
    let mut best = (f64::INFINITY, (lo + hi) / 2.0);
    for _ in 0..ROUNDS {
        for _ in 0..batch {
            let p = Vector3::new(
                rng.random_range(lo.x..=hi.x),
                rng.random_range(lo.y..=hi.y),
                rng.random_range(lo.z..=hi.z),
            );
            if contains(a, &p) && contains(b, &p) {
                return true;
            }
            let score = excess(a, &p).max(excess(b, &p));
            if score < best.0 {
                best = (score, p);
            }
        }
        let half = (hi - lo) * 0.3;
        lo = (best.1 - half).sup(&alo.sup(&blo));
        hi = (best.1 + half).inf(&ahi.inf(&bhi));
    }
    false
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ));
    *q.to_rotation_matrix().matrix()
}

pub fn random_obb<R: Rng>(rng: &mut R, spread: f64) -> Obb {
    let c = Vector3::new(
        rng.random_range(-spread..spread),
        rng.random_range(-spread..spread),
        rng.random_range(-spread..spread),
    );
    let e = Vector3::new(
        rng.random_range(0.05..1.0),
        rng.random_range(0.05..1.0),
        rng.random_range(0.05..1.0),
    );
    Obb::from_rotation(c, &random_rotation(rng), e).expect("valid box")
}
