//! Rigid transforms and IFC axis-placement chains.

use nalgebra::{Matrix3, Vector3};

use super::GeomError;
use crate::lift::UnitScale;
use crate::step::{StepEntity, StepFile, StepValue};

/// Rotation followed by translation (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Transform { rotation, translation }
    }

    pub fn translation(t: Vector3<f64>) -> Self {
        Transform::new(Matrix3::identity(), t)
    }

    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Transform::new(
            Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            Vector3::zeros(),
        )
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn then_inner(&self, inner: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
        }
    }

    pub fn is_rigid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        (r.transpose() * r - Matrix3::identity()).amax() <= tol && (r.determinant() - 1.0).abs() <= tol
    }
}

/// One IFCAXIS2PLACEMENT3D in model units.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisPlacement {
    /// Used in error messages, e.g. `#42`.
    pub label: String,
    pub location: Vector3<f64>,
    /// Local Z. Defaults to global Z.
    pub axis: Option<Vector3<f64>>,
    /// Local X (before orthogonalization). Defaults to global X.
    pub ref_direction: Option<Vector3<f64>>,
}

impl AxisPlacement {
    pub fn at(location: Vector3<f64>) -> Self {
        AxisPlacement {
            label: String::new(),
            location,
            axis: None,
            ref_direction: None,
        }
    }

    pub fn rotation(&self) -> Result<Matrix3<f64>, GeomError> {
        let degenerate = || GeomError::DegenerateDirection(self.label.clone());
        let z = self.axis.unwrap_or_else(Vector3::z);
        if z.norm() < 1e-12 {
            return Err(degenerate());
        }
        let z = z.normalize();
        let explicit = self.ref_direction.is_some();
        let x0 = self.ref_direction.unwrap_or_else(Vector3::x);
        if x0.norm() < 1e-12 {
            return Err(degenerate());
        }
        // Gram-Schmidt against the local Z.
        let mut x = x0 - z * x0.dot(&z);
        if x.norm() < 1e-9 {
            if explicit {
                return Err(degenerate());
            }
            let fallback = Vector3::z();
            x = fallback - z * fallback.dot(&z);
        }
        let x = x.normalize();
        let y = z.cross(&x);
        Ok(Matrix3::from_columns(&[x, y, z]))
    }

    pub fn to_transform(&self, scale: UnitScale) -> Result<Transform, GeomError> {
        let t = self.location.map(|v| scale.to_meters(v));
        Ok(Transform::new(self.rotation()?, t))
    }
}

/// Composes a placement chain ordered from the element outward to world.
pub fn compose_placements(chain: &[AxisPlacement], scale: UnitScale) -> Result<Transform, GeomError> {
    let mut world = Transform::identity();
    for placement in chain {
        world = placement.to_transform(scale)?.then_inner(&world);
    }
    Ok(world)
}

pub(crate) fn read_point(file: &StepFile, value: &StepValue) -> Result<Vector3<f64>, GeomError> {
    let e = resolve_named(file, value, &["IFCCARTESIANPOINT"])?;
    read_coords(e)
}

pub(crate) fn read_direction(file: &StepFile, value: &StepValue) -> Result<Option<Vector3<f64>>, GeomError> {
    if value.is_unset() {
        return Ok(None);
    }
    let e = resolve_named(file, value, &["IFCDIRECTION"])?;
    read_coords(e).map(Some)
}

fn read_coords(e: &StepEntity) -> Result<Vector3<f64>, GeomError> {
    let coords: Vec<f64> = e
        .args
        .first()
        .and_then(StepValue::as_list)
        .map(|l| l.iter().filter_map(StepValue::as_f64).collect())
        .unwrap_or_default();
    if coords.is_empty() || coords.len() > 3 {
        return Err(GeomError::Malformed(format!("#{} has no usable coordinates", e.id)));
    }
    Ok(Vector3::new(
        coords[0],
        coords.get(1).copied().unwrap_or(0.0),
        coords.get(2).copied().unwrap_or(0.0),
    ))
}

pub(crate) fn resolve_named<'f>(
    file: &'f StepFile,
    value: &StepValue,
    names: &[&str],
) -> Result<&'f StepEntity, GeomError> {
    let id = value
        .as_ref_id()
        .ok_or_else(|| GeomError::Malformed(format!("expected a reference to {}, found {value}", names.join("/"))))?;
    let e = file.get(id).ok_or(GeomError::Dangling(id))?;
    if names.contains(&e.name.as_str()) {
        Ok(e)
    } else {
        Err(GeomError::Malformed(format!(
            "#{id} is {} where {} was expected",
            e.name,
            names.join("/")
        )))
    }
}

/// Reads an IFCAXIS2PLACEMENT3D (or 2D, lifted to the XY plane).
pub fn read_axis_placement(file: &StepFile, value: &StepValue) -> Result<AxisPlacement, GeomError> {
    let e = resolve_named(file, value, &["IFCAXIS2PLACEMENT3D", "IFCAXIS2PLACEMENT2D"])?;
    let location = read_point(file, e.arg(0).map_err(|er| GeomError::Malformed(er.to_string()))?)?;
    let (axis, ref_direction) = if e.name == "IFCAXIS2PLACEMENT2D" {
        (None, match e.args.get(1) {
            Some(v) => read_direction(file, v)?,
            None => None,
        })
    } else {
        (
            match e.args.get(1) {
                Some(v) => read_direction(file, v)?,
                None => None,
            },
            match e.args.get(2) {
                Some(v) => read_direction(file, v)?,
                None => None,
            },
        )
    };
    Ok(AxisPlacement {
        label: format!("#{}", e.id),
        location,
        axis,
        ref_direction,
    })
}

/// Follows IFCLOCALPLACEMENT.PlacementRelTo up to the world.
pub fn placement_chain(file: &StepFile, placement: &StepValue) -> Result<Vec<AxisPlacement>, GeomError> {
    let mut chain = Vec::new();
    let mut current = placement.clone();
    while !current.is_unset() {
        if chain.len() > 64 {
            return Err(GeomError::Malformed("placement chain too deep or cyclic".into()));
        }
        let e = resolve_named(file, &current, &["IFCLOCALPLACEMENT"])?;
        let relative = e
            .args
            .get(1)
            .ok_or_else(|| GeomError::Malformed(format!("#{} lacks RelativePlacement", e.id)))?;
        chain.push(read_axis_placement(file, relative)?);
        current = e.args.first().cloned().unwrap_or(StepValue::Unset);
    }
    Ok(chain)
}
