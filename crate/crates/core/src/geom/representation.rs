//! Boxes from IFC shape representations.
//!
//! Supported items: IFCBOUNDINGBOX, IFCEXTRUDEDAREASOLID over an
//! IFCRECTANGLEPROFILEDEF, and clipping results (first operand).
//! Anything else leaves the element without a box.

use nalgebra::{Matrix3, Vector3};

use super::placement::{read_axis_placement, read_direction, read_point, resolve_named};
use super::{GeomError, Obb, Transform};
use crate::lift::UnitScale;
use crate::step::{StepEntity, StepFile, StepValue};

/// Outcome of reading an element's shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Box(Obb),
    Absent { reason: String },
}

fn arg(e: &StepEntity, index: usize) -> &StepValue {
    e.args.get(index).unwrap_or(&StepValue::Unset)
}

fn absent(reason: impl Into<String>) -> Representation {
    Representation::Absent { reason: reason.into() }
}

fn dimension(e: &StepEntity, index: usize, scale: UnitScale) -> Result<f64, GeomError> {
    let v = e
        .args
        .get(index)
        .and_then(StepValue::as_f64)
        .ok_or_else(|| GeomError::Malformed(format!("#{} ({}) lacks a numeric attribute {index}", e.id, e.name)))?;
    if !(v > 0.0) {
        return Err(GeomError::InvalidDimension(format!(
            "#{} ({}) has non-positive dimension {v}",
            e.id, e.name
        )));
    }
    Ok(scale.to_meters(v))
}

/// Box of one representation item in the element's local frame.
fn item_box(file: &StepFile, item: &StepEntity, scale: UnitScale, depth: usize) -> Result<Option<Obb>, GeomError> {
    match item.name.as_str() {
        "IFCBOUNDINGBOX" => {
            let corner = read_point(file, arg(item, 0))?.map(|v| scale.to_meters(v));
            let dims = Vector3::new(dimension(item, 1, scale)?, dimension(item, 2, scale)?, dimension(item, 3, scale)?);
            Obb::axis_aligned(corner + dims / 2.0, dims / 2.0).map(Some)
        }
        "IFCEXTRUDEDAREASOLID" => extruded_box(file, item, scale),
        "IFCBOOLEANCLIPPINGRESULT" | "IFCBOOLEANRESULT" if depth < 8 => {
            if item.args.first().and_then(StepValue::as_enum) != Some("DIFFERENCE") {
                return Ok(None);
            }
            match item.args.get(1).and_then(|v| file.resolve(v)) {
                Some(first) => item_box(file, first, scale, depth + 1),
                None => Ok(None),
            }
        }
        _ => Ok(None),
    }
}

fn extruded_box(file: &StepFile, item: &StepEntity, scale: UnitScale) -> Result<Option<Obb>, GeomError> {
    let profile = arg(item, 0)
        .as_ref_id()
        .and_then(|id| file.get(id))
        .ok_or_else(|| GeomError::Malformed(format!("#{} lacks a swept area", item.id)))?;
    if profile.name != "IFCRECTANGLEPROFILEDEF" {
        return Ok(None);
    }
    let x_dim = dimension(profile, 3, scale)?;
    let y_dim = dimension(profile, 4, scale)?;
    let depth = dimension(item, 3, scale)?;

    // Profile frame inside the solid's position frame.
    let (profile_origin, profile_rot) = match profile.args.get(2) {
        Some(v) if !v.is_unset() => {
            let p = read_axis_placement(file, v)?;
            let t = p.to_transform(scale)?;
            (t.translation, t.rotation)
        }
        _ => (Vector3::zeros(), Matrix3::identity()),
    };
    let solid_frame = match item.args.get(1) {
        Some(v) if !v.is_unset() => read_axis_placement(file, v)?.to_transform(scale)?,
        _ => Transform::identity(),
    };
    let direction = read_direction(file, arg(item, 2))?
        .ok_or_else(|| GeomError::Malformed(format!("#{} lacks an extrusion direction", item.id)))?;
    if direction.norm() < 1e-12 {
        return Err(GeomError::DegenerateDirection(format!("#{}", item.id)));
    }
    let sweep = direction.normalize() * depth;
    // Sweep expressed in the profile's axes.
    let sweep_local = profile_rot.transpose() * sweep;
    let half = Vector3::new(x_dim / 2.0, y_dim / 2.0, 0.0);
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            let base = Vector3::new(sx * half.x, sy * half.y, 0.0);
            for p in [base, base + sweep_local] {
                lo = lo.inf(&p);
                hi = hi.sup(&p);
            }
        }
    }
    let half_extents = (hi - lo) / 2.0;
    if half_extents.z <= 0.0 {
        return Err(GeomError::InvalidDimension(format!(
            "#{} extrudes within the profile plane",
            item.id
        )));
    }
    let center_profile = (hi + lo) / 2.0;
    let local = Obb::from_rotation(profile_origin + profile_rot * center_profile, &profile_rot, half_extents)?;
    local.transformed(&solid_frame).map(Some)
}

fn union_box(boxes: &[Obb]) -> Result<Obb, GeomError> {
    if boxes.len() == 1 {
        return Ok(boxes[0]);
    }
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for b in boxes {
        for c in b.corners() {
            lo = lo.inf(&c);
            hi = hi.sup(&c);
        }
    }
    Obb::axis_aligned((hi + lo) / 2.0, (hi - lo) / 2.0)
}

fn representation_priority(rep: &StepEntity) -> u8 {
    match rep.args.get(1).and_then(StepValue::as_text) {
        Some("Body") => 0,
        Some("Box") => 1,
        _ => 2,
    }
}

/// Reads an element's shape and carries it into world space by `world`.
pub fn obb_from_representation(
    entity: &StepEntity,
    file: &StepFile,
    world: &Transform,
    scale: UnitScale,
) -> Result<Representation, GeomError> {
    let Some(shape) = entity.opt_arg(6) else {
        return Ok(absent("no representation"));
    };
    let shape = resolve_named(file, shape, &["IFCPRODUCTDEFINITIONSHAPE"])?;
    let mut reps: Vec<&StepEntity> = shape
        .args
        .get(2)
        .and_then(StepValue::as_list)
        .unwrap_or(&[])
        .iter()
        .filter_map(|v| file.resolve(v))
        .filter(|r| r.name == "IFCSHAPEREPRESENTATION")
        .collect();
    reps.sort_by_key(|r| representation_priority(r));

    let mut unsupported = Vec::new();
    for rep in reps {
        let items: Vec<&StepEntity> = rep
            .args
            .get(3)
            .and_then(StepValue::as_list)
            .unwrap_or(&[])
            .iter()
            .filter_map(|v| file.resolve(v))
            .collect();
        if items.is_empty() {
            continue;
        }
        let mut boxes = Vec::new();
        for item in &items {
            match item_box(file, item, scale, 0)? {
                Some(b) => boxes.push(b),
                None => unsupported.push(item.name.clone()),
            }
        }
        if boxes.len() == items.len() {
            return Ok(Representation::Box(union_box(&boxes)?.transformed(world)?));
        }
    }
    if unsupported.is_empty() {
        Ok(absent("no representation items"))
    } else {
        unsupported.dedup();
        Ok(absent(format!("unsupported representation: {}", unsupported.join(", "))))
    }
}
