//! Tactile skin patches on planar and cylindrical body surfaces, and binary
//! contact detection against the pen's sphere tip.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Pose;

/// Catchment radius as a fraction of the taxel pitch when not configured.
pub const DEFAULT_CATCHMENT_FRACTION: f64 = 0.6;

/// Body surface in the patch frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surface {
    Planar {
        origin: Vector3<f64>,
        /// In-plane axes; the outward normal is `u_axis × v_axis`.
        u_axis: Vector3<f64>,
        v_axis: Vector3<f64>,
        /// Full side lengths along `u_axis` and `v_axis`, centered on `origin`.
        extents: [f64; 2],
    },
    Cylindrical {
        /// A point on the cylinder axis (axial coordinate zero).
        center: Vector3<f64>,
        axis: Vector3<f64>,
        /// Unit direction, perpendicular to `axis`, pointing at the middle
        /// of the angular span. Angles are measured from it.
        reference: Vector3<f64>,
        radius: f64,
        /// Total angular span in radians, centered on `reference`.
        angular_span: f64,
        /// `[min, max]` along the axis.
        height_span: [f64; 2],
    },
}

/// Intrinsic 2D coordinates on a surface: `(s, t)` in-plane for planar
/// surfaces, `(angle, height)` for cylinders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceCoord {
    pub a: f64,
    pub b: f64,
}

impl Surface {
    pub fn normal_of_plane(u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        u.cross(v)
    }

    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        match self {
            Surface::Planar {
                u_axis,
                v_axis,
                extents,
                ..
            } => {
                if (u_axis.norm() - 1.0).abs() > TOL
                    || (v_axis.norm() - 1.0).abs() > TOL
                    || u_axis.dot(v_axis).abs() > TOL
                {
                    return Err(Error::Config("planar axes must be orthonormal".into()));
                }
                if !(extents[0] >= 0.0 && extents[1] >= 0.0) {
                    return Err(Error::Config("planar extents must be non-negative".into()));
                }
            }
            Surface::Cylindrical {
                axis,
                reference,
                radius,
                angular_span,
                height_span,
                ..
            } => {
                if (axis.norm() - 1.0).abs() > TOL
                    || (reference.norm() - 1.0).abs() > TOL
                    || axis.dot(reference).abs() > TOL
                {
                    return Err(Error::Config(
                        "cylinder axis and reference must be orthonormal".into(),
                    ));
                }
                if !(*radius > 0.0) {
                    return Err(Error::Config("cylinder radius must be positive".into()));
                }
                if !(*angular_span >= 0.0 && *angular_span < TAU) {
                    return Err(Error::Config("angular span must lie in [0, 2π)".into()));
                }
                if !(height_span[0] <= height_span[1]) {
                    return Err(Error::Config("height span must satisfy min <= max".into()));
                }
            }
        }
        Ok(())
    }

    /// Ranges of the intrinsic coordinates covered by the patch.
    fn coord_ranges(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Surface::Planar { extents, .. } => (
                [-0.5 * extents[0], 0.5 * extents[0]],
                [-0.5 * extents[1], 0.5 * extents[1]],
            ),
            Surface::Cylindrical {
                angular_span,
                height_span,
                ..
            } => ([-0.5 * angular_span, 0.5 * angular_span], *height_span),
        }
    }

    /// Position and outward normal of the surface point at `coord`.
    pub fn point_at(&self, coord: SurfaceCoord) -> (Vector3<f64>, Vector3<f64>) {
        match self {
            Surface::Planar {
                origin,
                u_axis,
                v_axis,
                ..
            } => (
                origin + u_axis * coord.a + v_axis * coord.b,
                u_axis.cross(v_axis),
            ),
            Surface::Cylindrical {
                center,
                axis,
                reference,
                radius,
                ..
            } => {
                let side = axis.cross(reference);
                let radial = reference * coord.a.cos() + side * coord.a.sin();
                (center + axis * coord.b + radial * *radius, radial)
            }
        }
    }

    /// Signed distance of `p` from the surface (positive outside) and the
    /// intrinsic coordinates of its orthogonal projection. `None` for a
    /// point on a cylinder's axis.
    pub fn locate(&self, p: &Vector3<f64>) -> Option<(f64, SurfaceCoord)> {
        match self {
            Surface::Planar {
                origin,
                u_axis,
                v_axis,
                ..
            } => {
                let w = p - origin;
                let n = u_axis.cross(v_axis);
                Some((
                    w.dot(&n),
                    SurfaceCoord {
                        a: w.dot(u_axis),
                        b: w.dot(v_axis),
                    },
                ))
            }
            Surface::Cylindrical {
                center,
                axis,
                reference,
                radius,
                ..
            } => {
                let w = p - center;
                let h = w.dot(axis);
                let radial = w - axis * h;
                let rho = radial.norm();
                if rho == 0.0 {
                    return None;
                }
                let side = axis.cross(reference);
                let theta = radial.dot(&side).atan2(radial.dot(reference));
                Some((rho - radius, SurfaceCoord { a: theta, b: h }))
            }
        }
    }

    /// Geodesic distance between two surface points given in intrinsic
    /// coordinates.
    pub fn geodesic(&self, p: SurfaceCoord, q: SurfaceCoord) -> f64 {
        match self {
            Surface::Planar { .. } => (p.a - q.a).hypot(p.b - q.b),
            Surface::Cylindrical { radius, .. } => {
                let mut dtheta = (p.a - q.a).rem_euclid(TAU);
                if dtheta > PI {
                    dtheta = TAU - dtheta;
                }
                (radius * dtheta).hypot(p.b - q.b)
            }
        }
    }

    /// Scale turning the first intrinsic coordinate into arc length.
    fn arc_scale(&self) -> f64 {
        match self {
            Surface::Planar { .. } => 1.0,
            Surface::Cylindrical { radius, .. } => *radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Taxel {
    pub id: usize,
    pub local_position: Vector3<f64>,
    pub local_normal: Vector3<f64>,
    pub coord: SurfaceCoord,
}

/// Patch layout as read from the experiment config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkinSpec {
    pub name: String,
    /// Kinematic frame the patch is rigidly attached to.
    pub frame: String,
    pub surface: Surface,
    /// Grid rows along the second surface coordinate.
    pub rows: usize,
    /// Grid columns along the first surface coordinate.
    pub cols: usize,
    /// Mandated number of taxels; must equal `rows * cols`.
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catchment_radius: Option<f64>,
    /// Deepest accepted sphere penetration; defaults to the tip radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_penetration: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SkinPatch {
    pub name: String,
    pub frame: String,
    pub surface: Surface,
    pub rows: usize,
    pub cols: usize,
    pub taxels: Vec<Taxel>,
    pub catchment_radius: f64,
    pub max_penetration: Option<f64>,
    index: TaxelIndex,
}

/// Binary activation produced by one tip placement.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactResult {
    /// Activated taxel ids in ascending order.
    pub activated: Vec<usize>,
    pub tip_in_patch_frame: Vector3<f64>,
    /// Orthogonal projection of the tip center onto the surface, when the
    /// sphere intersects the surface within the accepted depth.
    pub footprint: Option<SurfaceCoord>,
}

impl ContactResult {
    pub fn is_touch(&self) -> bool {
        !self.activated.is_empty()
    }
}

pub fn generate_skin(spec: &SkinSpec) -> Result<SkinPatch> {
    spec.surface.validate()?;
    if spec.rows == 0 || spec.cols == 0 || spec.rows * spec.cols != spec.count {
        return Err(Error::Config(format!(
            "skin `{}`: {} x {} grid does not give the mandated {} taxels",
            spec.name, spec.rows, spec.cols, spec.count
        )));
    }
    let (ra, rb) = spec.surface.coord_ranges();
    let lerp = |range: [f64; 2], i: usize, n: usize| {
        range[0] + (range[1] - range[0]) * (i as f64 + 0.5) / n as f64
    };
    let mut taxels = Vec::with_capacity(spec.count);
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let coord = SurfaceCoord {
                a: lerp(ra, col, spec.cols),
                b: lerp(rb, row, spec.rows),
            };
            let (local_position, local_normal) = spec.surface.point_at(coord);
            taxels.push(Taxel {
                id: taxels.len(),
                local_position,
                local_normal,
                coord,
            });
        }
    }

    let scale = spec.surface.arc_scale();
    let pitch_a = scale * (ra[1] - ra[0]) / spec.cols as f64;
    let pitch_b = (rb[1] - rb[0]) / spec.rows as f64;
    let pitch = match (spec.cols > 1, spec.rows > 1) {
        (true, true) => pitch_a.min(pitch_b),
        (true, false) => pitch_a,
        (false, true) => pitch_b,
        (false, false) => pitch_a.max(pitch_b),
    };
    let catchment_radius = match spec.catchment_radius {
        Some(r) => r,
        None => DEFAULT_CATCHMENT_FRACTION * pitch,
    };
    if !(catchment_radius > 0.0) {
        return Err(Error::Config(format!(
            "skin `{}`: catchment radius must be positive",
            spec.name
        )));
    }
    if let Some(depth) = spec.max_penetration {
        if !(depth >= 0.0) {
            return Err(Error::Config(format!(
                "skin `{}`: max penetration must be non-negative",
                spec.name
            )));
        }
    }
    let index = TaxelIndex::build(&spec.surface, &taxels, catchment_radius);
    Ok(SkinPatch {
        name: spec.name.clone(),
        frame: spec.frame.clone(),
        surface: spec.surface.clone(),
        rows: spec.rows,
        cols: spec.cols,
        taxels,
        catchment_radius,
        max_penetration: spec.max_penetration,
        index,
    })
}

impl SkinPatch {
    pub fn len(&self) -> usize {
        self.taxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxels.is_empty()
    }

    /// Grid position `(row, col)` of a taxel id.
    pub fn grid_position(&self, id: usize) -> (usize, usize) {
        (id / self.cols, id % self.cols)
    }

    pub fn max_penetration_for(&self, tip_radius: f64) -> f64 {
        self.max_penetration.unwrap_or(tip_radius)
    }

    /// Taxels whose catchment covers the given surface point.
    pub fn taxels_covering(&self, footprint: SurfaceCoord) -> Vec<usize> {
        let mut hits: Vec<usize> = self
            .index
            .candidates(footprint)
            .filter(|&id| {
                self.surface.geodesic(footprint, self.taxels[id].coord) <= self.catchment_radius
            })
            .collect();
        hits.sort_unstable();
        hits.dedup();
        hits
    }

    pub fn detect_contact(
        &self,
        tip_center_world: &Vector3<f64>,
        tip_radius: f64,
        patch_pose: &Pose,
    ) -> ContactResult {
        let tip = patch_pose.inverse_transform_point(tip_center_world);
        let max_depth = self.max_penetration_for(tip_radius);
        let footprint = self.surface.locate(&tip).and_then(|(distance, coord)| {
            let depth = tip_radius - distance;
            (depth >= 0.0 && depth <= max_depth).then_some(coord)
        });
        let activated = footprint
            .map(|f| self.taxels_covering(f))
            .unwrap_or_default();
        ContactResult {
            activated,
            tip_in_patch_frame: tip,
            footprint,
        }
    }

    /// Writes `id,x,y,z,nx,ny,nz` rows in the patch frame.
    pub fn write_geometry_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "x", "y", "z", "nx", "ny", "nz"])?;
        for t in &self.taxels {
            let p = t.local_position;
            let n = t.local_normal;
            w.write_record(&[
                t.id.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                p.z.to_string(),
                n.x.to_string(),
                n.y.to_string(),
                n.z.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Uniform bucket grid over (arc length, second coordinate). Only narrows the
/// candidate set; membership is always decided by the exact geodesic test.
#[derive(Clone, Debug)]
struct TaxelIndex {
    cell: f64,
    origin: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
    scale: f64,
    /// Full circumference for cylinders, so queries near the angular branch
    /// cut also look at the wrapped side.
    period: Option<f64>,
    reach: f64,
}

impl TaxelIndex {
    fn build(surface: &Surface, taxels: &[Taxel], catchment: f64) -> Self {
        let scale = surface.arc_scale();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for t in taxels {
            let p = [scale * t.coord.a, t.coord.b];
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let cell = catchment;
        let dims = [0, 1].map(|k| (((hi[k] - lo[k]) / cell).floor() as usize) + 1);
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        for t in taxels {
            let i = (((scale * t.coord.a - lo[0]) / cell).floor() as usize).min(dims[0] - 1);
            let j = (((t.coord.b - lo[1]) / cell).floor() as usize).min(dims[1] - 1);
            buckets[j * dims[0] + i].push(t.id);
        }
        let period = match surface {
            Surface::Cylindrical { radius, .. } => Some(TAU * radius),
            Surface::Planar { .. } => None,
        };
        TaxelIndex {
            cell,
            origin: lo,
            dims,
            buckets,
            scale,
            period,
            // widened so rounding in the arc-length product never drops a
            // taxel sitting exactly on the catchment boundary
            reach: catchment * (1.0 + 1e-9) + 1e-12,
        }
    }

    fn range(&self, center: f64, k: usize) -> Option<(usize, usize)> {
        let lo = ((center - self.reach - self.origin[k]) / self.cell).floor();
        let hi = ((center + self.reach - self.origin[k]) / self.cell).floor();
        let max = (self.dims[k] - 1) as f64;
        if hi < 0.0 || lo > max {
            return None;
        }
        Some((lo.max(0.0) as usize, hi.min(max) as usize))
    }

    fn candidates(&self, at: SurfaceCoord) -> impl Iterator<Item = usize> + '_ {
        let s = self.scale * at.a;
        let mut centers = vec![s];
        if let Some(period) = self.period {
            centers.push(s - period);
            centers.push(s + period);
        }
        let rows = self.range(at.b, 1);
        centers
            .into_iter()
            .filter_map(move |c| Some((self.range(c, 0)?, rows?)))
            .flat_map(move |((i0, i1), (j0, j1))| {
                (j0..=j1).flat_map(move |j| {
                    (i0..=i1).flat_map(move |i| self.buckets[j * self.dims[0] + i].iter().copied())
                })
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn planar_spec(rows: usize, cols: usize, count: usize) -> SkinSpec {
        SkinSpec {
            name: "torso".into(),
            frame: "torso".into(),
            surface: Surface::Planar {
                origin: Vector3::new(0.05, 0.0, 0.0),
                u_axis: Vector3::new(0.0, 1.0, 0.0),
                v_axis: Vector3::new(0.0, 0.0, 1.0),
                extents: [0.1, 0.1],
            },
            rows,
            cols,
            count,
            catchment_radius: None,
            max_penetration: None,
        }
    }

    fn cylinder_spec() -> SkinSpec {
        SkinSpec {
            name: "torso".into(),
            frame: "torso".into(),
            surface: Surface::Cylindrical {
                center: Vector3::zeros(),
                axis: Vector3::new(0.0, 0.0, 1.0),
                reference: Vector3::new(1.0, 0.0, 0.0),
                radius: 0.07,
                angular_span: 1.6,
                height_span: [-0.05, 0.05],
            },
            rows: 10,
            cols: 25,
            count: 250,
            catchment_radius: None,
            max_penetration: None,
        }
    }

    #[test]
    fn planar_five_by_five() {
        let patch = generate_skin(&planar_spec(5, 5, 25)).unwrap();
        assert_eq!(patch.len(), 25);
        for (i, a) in patch.taxels.iter().enumerate() {
            assert_eq!(a.id, i);
            assert!((a.local_position.x - 0.05).abs() < 1e-12);
            for b in &patch.taxels[i + 1..] {
                assert!((a.local_position - b.local_position).norm() > 1e-6);
            }
        }
        assert!((patch.catchment_radius - 0.6 * 0.02).abs() < 1e-15);
    }

    #[test]
    fn cylinder_taxels_on_radius() {
        let patch = generate_skin(&cylinder_spec()).unwrap();
        assert_eq!(patch.len(), 250);
        for t in &patch.taxels {
            let radial = Vector3::new(t.local_position.x, t.local_position.y, 0.0);
            assert!((radial.norm() - 0.07).abs() < 1e-9);
            assert!((t.local_normal.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_single_taxel_at_center() {
        let patch = generate_skin(&planar_spec(1, 1, 1)).unwrap();
        assert_eq!(patch.len(), 1);
        assert!((patch.taxels[0].local_position - Vector3::new(0.05, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn count_mismatch_is_config_error() {
        assert!(matches!(
            generate_skin(&planar_spec(5, 5, 24)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn separated_tip_no_contact() {
        let patch = generate_skin(&planar_spec(5, 5, 25)).unwrap();
        let r = 0.01;
        let tip = Vector3::new(0.05 + 2.0 * r + 1e-6, 0.0, 0.0);
        let c = patch.detect_contact(&tip, r, &Pose::identity());
        assert!(c.activated.is_empty());
        assert!(c.footprint.is_none());
    }

    #[test]
    fn direct_hit_single_taxel() {
        let mut spec = planar_spec(5, 5, 25);
        spec.catchment_radius = Some(0.009);
        let patch = generate_skin(&spec).unwrap();
        let r = 0.01;
        let k = 17;
        let target = patch.taxels[k].local_position;
        let tip = target + Vector3::new(r - 1e-4, 0.0, 0.0);
        let c = patch.detect_contact(&tip, r, &Pose::identity());
        assert_eq!(c.activated, vec![k]);
    }

    #[test]
    fn too_deep_no_contact() {
        let patch = generate_skin(&planar_spec(5, 5, 25)).unwrap();
        let r = 0.01;
        let tip = Vector3::new(0.05 - 1e-4, 0.0, 0.0);
        assert!(patch.detect_contact(&tip, r, &Pose::identity()).activated.is_empty());
        let tip = Vector3::new(0.05 + 1e-4, 0.0, 0.0);
        assert!(!patch.detect_contact(&tip, r, &Pose::identity()).activated.is_empty());
    }

    #[test]
    fn tip_on_cylinder_axis_no_contact() {
        let patch = generate_skin(&cylinder_spec()).unwrap();
        let c = patch.detect_contact(&Vector3::new(0.0, 0.0, 0.01), 0.01, &Pose::identity());
        assert!(c.activated.is_empty());
    }

    #[test]
    fn geometry_csv_header_and_rows() {
        let patch = generate_skin(&planar_spec(5, 5, 25)).unwrap();
        let mut buf = Vec::new();
        patch.write_geometry_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("id,x,y,z,nx,ny,nz"));
        assert_eq!(lines.count(), 25);
    }
}
