//! The 2D observation space: taxel coordinates projected off the body
//! surface and recentered on the taxel centroid.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skin::{ContactResult, SkinPatch, Surface};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ObservationPoint {
    pub u: f64,
    pub v: f64,
}

impl ObservationPoint {
    pub fn new(u: f64, v: f64) -> Self {
        ObservationPoint { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn distance(&self, other: &ObservationPoint) -> f64 {
        distance(self, other)
    }
}

/// Euclidean metric on the observation space.
pub fn distance(a: &ObservationPoint, b: &ObservationPoint) -> f64 {
    let du = a.u - b.u;
    let dv = a.v - b.v;
    (du * du + dv * dv).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionSpec {
    /// Parallel projection onto the plane spanned by `u_axis`, `v_axis`.
    Planar {
        origin: Vector3<f64>,
        u_axis: Vector3<f64>,
        v_axis: Vector3<f64>,
    },
    /// Central projection from the axis onto a cylinder of `radius`,
    /// unwrapped to (arc length, height). The branch cut sits opposite
    /// `reference`.
    Cylindrical {
        center: Vector3<f64>,
        axis: Vector3<f64>,
        reference: Vector3<f64>,
        radius: f64,
    },
}

impl ProjectionSpec {
    /// The projection matching a surface's own geometry.
    pub fn for_surface(surface: &Surface) -> Self {
        match surface {
            Surface::Planar {
                origin,
                u_axis,
                v_axis,
                ..
            } => ProjectionSpec::Planar {
                origin: *origin,
                u_axis: *u_axis,
                v_axis: *v_axis,
            },
            Surface::Cylindrical {
                center,
                axis,
                reference,
                radius,
                ..
            } => ProjectionSpec::Cylindrical {
                center: *center,
                axis: *axis,
                reference: *reference,
                radius: *radius,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        let (a, b) = match self {
            ProjectionSpec::Planar { u_axis, v_axis, .. } => (u_axis, v_axis),
            ProjectionSpec::Cylindrical {
                axis,
                reference,
                radius,
                ..
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("projection radius must be positive".into()));
                }
                (axis, reference)
            }
        };
        if (a.norm() - 1.0).abs() > TOL || (b.norm() - 1.0).abs() > TOL || a.dot(b).abs() > TOL {
            return Err(Error::Config("projection axes must be orthonormal".into()));
        }
        Ok(())
    }

    /// Projection before centroid recentering.
    pub fn project_raw(&self, p: &Vector3<f64>) -> Result<ObservationPoint> {
        match self {
            ProjectionSpec::Planar {
                origin,
                u_axis,
                v_axis,
            } => {
                let w = p - origin;
                Ok(ObservationPoint::new(w.dot(u_axis), w.dot(v_axis)))
            }
            ProjectionSpec::Cylindrical {
                center,
                axis,
                reference,
                radius,
            } => {
                let w = p - center;
                let h = w.dot(axis);
                let radial = w - axis * h;
                if radial.norm() == 0.0 {
                    return Err(Error::UndefinedProjection);
                }
                let side = axis.cross(reference);
                let theta = radial.dot(&side).atan2(radial.dot(reference));
                Ok(ObservationPoint::new(radius * theta, h))
            }
        }
    }
}

/// Axis-aligned rectangle in observation space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.u[1] - self.u[0]
    }

    pub fn height(&self) -> f64 {
        self.v[1] - self.v[0]
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: &ObservationPoint) -> bool {
        p.u >= self.u[0] && p.u <= self.u[1] && p.v >= self.v[0] && p.v <= self.v[1]
    }

    /// Grows each side by `fraction` of the extent along that axis.
    pub fn padded(&self, fraction: f64) -> Bounds {
        let pu = fraction * self.width();
        let pv = fraction * self.height();
        Bounds {
            u: [self.u[0] - pu, self.u[1] + pu],
            v: [self.v[0] - pv, self.v[1] + pv],
        }
    }
}

/// Projection of one patch, recentered so its taxel centroid is the origin,
/// together with the projected coordinates of every taxel.
#[derive(Clone, Debug)]
pub struct ObservationSpace {
    pub spec: ProjectionSpec,
    offset: ObservationPoint,
    taxels: Vec<ObservationPoint>,
}

impl ObservationSpace {
    pub fn new(spec: ProjectionSpec, patch: &SkinPatch) -> Result<Self> {
        spec.validate()?;
        let raw = patch
            .taxels
            .iter()
            .map(|t| spec.project_raw(&t.local_position))
            .collect::<Result<Vec<_>>>()?;
        let n = raw.len().max(1) as f64;
        let offset = ObservationPoint::new(
            raw.iter().map(|p| p.u).sum::<f64>() / n,
            raw.iter().map(|p| p.v).sum::<f64>() / n,
        );
        let taxels = raw
            .into_iter()
            .map(|p| ObservationPoint::new(p.u - offset.u, p.v - offset.v))
            .collect();
        Ok(ObservationSpace {
            spec,
            offset,
            taxels,
        })
    }

    /// Centroid of the raw projected taxels.
    pub fn offset(&self) -> ObservationPoint {
        self.offset
    }

    /// Projects a patch-frame point into the centered observation space.
    pub fn project(&self, p: &Vector3<f64>) -> Result<ObservationPoint> {
        let raw = self.spec.project_raw(p)?;
        Ok(ObservationPoint::new(raw.u - self.offset.u, raw.v - self.offset.v))
    }

    pub fn taxel(&self, id: usize) -> ObservationPoint {
        self.taxels[id]
    }

    pub fn taxels(&self) -> &[ObservationPoint] {
        &self.taxels
    }

    pub fn taxel_bounds(&self) -> Bounds {
        let mut b = Bounds {
            u: [f64::INFINITY, f64::NEG_INFINITY],
            v: [f64::INFINITY, f64::NEG_INFINITY],
        };
        for p in &self.taxels {
            b.u = [b.u[0].min(p.u), b.u[1].max(p.u)];
            b.v = [b.v[0].min(p.v), b.v[1].max(p.v)];
        }
        b
    }

    /// The activated taxel whose center is nearest the contact footprint,
    /// lowest id on ties.
    pub fn touched_taxel(&self, patch: &SkinPatch, contact: &ContactResult) -> Option<usize> {
        let footprint = contact.footprint?;
        let mut best: Option<(f64, usize)> = None;
        for &id in &contact.activated {
            let d = patch.surface.geodesic(footprint, patch.taxels[id].coord);
            if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                best = Some((d, id));
            }
        }
        best.map(|(_, id)| id)
    }

    pub fn observation_of_contact(
        &self,
        patch: &SkinPatch,
        contact: &ContactResult,
    ) -> Option<ObservationPoint> {
        self.touched_taxel(patch, contact).map(|id| self.taxels[id])
    }

    /// Writes `id,u,v` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "u", "v"])?;
        for (id, p) in self.taxels.iter().enumerate() {
            w.write_record(&[id.to_string(), p.u.to_string(), p.v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}
