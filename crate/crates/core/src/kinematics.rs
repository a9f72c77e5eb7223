//! Forward kinematics of a serial arm with a sphere-tipped pen, plus named
//! auxiliary frames (e.g. a head driven by neck joints) that skin patches
//! attach to.
//!
//! Every joint rotates about an axis expressed in its incoming frame and is
//! followed by a fixed translation to the next frame. No DH parameters.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the fixed base frame. Its pose is always the identity.
pub const TORSO_FRAME: &str = "torso";

const AXIS_NORM_TOL: f64 = 1e-9;

/// Joint angles in radians, one per degree of freedom. Arm joints come first,
/// followed by the joints of each auxiliary frame in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointConfig(Vec<f64>);

impl JointConfig {
    pub fn new(angles: Vec<f64>) -> Self {
        JointConfig(angles)
    }

    pub fn zeros(dof: usize) -> Self {
        JointConfig(vec![0.0; dof])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance in joint space.
    pub fn distance(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        JointConfig(v)
    }
}

impl std::ops::Index<usize> for JointConfig {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A revolute joint followed by a fixed translation into the next frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub axis: Vector3<f64>,
    /// `[min, max]` in radians.
    pub limits: [f64; 2],
    /// Translation from the rotated joint frame to the next frame, meters.
    pub translation: Vector3<f64>,
}

impl Joint {
    pub fn new(name: &str, axis: [f64; 3], limits: [f64; 2], translation: [f64; 3]) -> Self {
        Joint {
            name: name.to_string(),
            axis: Vector3::from(axis),
            limits,
            translation: Vector3::from(translation),
        }
    }

    fn rotation(&self, angle: f64) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Unit::new_unchecked(self.axis), angle)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Effector {
    /// Sphere-center offset from the last arm frame, meters.
    pub tip_offset: Vector3<f64>,
    pub tip_radius: f64,
}

/// A named frame positioned by its own joint sub-chain rooted at the torso.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxFrame {
    pub name: String,
    /// Translation from the torso to the first joint of this frame.
    pub base: Vector3<f64>,
    #[serde(default)]
    pub joints: Vec<Joint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    /// Translation from the torso frame to the first arm joint.
    pub base: Vector3<f64>,
    pub joints: Vec<Joint>,
    pub effector: Effector,
    #[serde(default)]
    pub frames: Vec<AuxFrame>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: Rotation3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            position: Vector3::zeros(),
            orientation: Rotation3::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, orientation: Rotation3<f64>) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    /// Maps a point from this frame into the parent frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * p + self.position
    }

    /// Maps a point from the parent frame into this frame.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * (p - self.position)
    }

    /// `self * other`: `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.transform_point(&other.position),
            orientation: self.orientation * other.orientation,
        }
    }

    pub fn rotation_matrix(&self) -> &Matrix3<f64> {
        self.orientation.matrix()
    }

    /// Orthonormal with determinant +1, within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let m = self.orientation.matrix();
        (m.transpose() * m - Matrix3::identity()).abs().max() <= tol
            && (m.determinant() - 1.0).abs() <= tol
    }
}

/// Accumulates rotations and translations down a joint list.
fn walk(base: &Vector3<f64>, joints: &[Joint], angles: &[f64]) -> Pose {
    let mut pose = Pose::new(*base, Rotation3::identity());
    for (joint, &q) in joints.iter().zip(angles) {
        pose.orientation *= joint.rotation(q);
        pose.position += pose.orientation * joint.translation;
    }
    pose
}

impl KinematicChain {
    pub fn dof(&self) -> usize {
        self.joints.len() + self.frames.iter().map(|f| f.joints.len()).sum::<usize>()
    }

    pub fn all_joints(&self) -> impl Iterator<Item = &Joint> {
        self.joints
            .iter()
            .chain(self.frames.iter().flat_map(|f| f.joints.iter()))
    }

    pub fn limits(&self) -> Vec<[f64; 2]> {
        self.all_joints().map(|j| j.limits).collect()
    }

    pub fn tip_radius(&self) -> f64 {
        self.effector.tip_radius
    }

    /// Sum of all translation magnitudes and the tip offset along the arm.
    pub fn reach(&self) -> f64 {
        self.base.norm()
            + self.joints.iter().map(|j| j.translation.norm()).sum::<f64>()
            + self.effector.tip_offset.norm()
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::Config("chain has no arm joints".into()));
        }
        for joint in self.all_joints() {
            if (joint.axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
                return Err(Error::Config(format!(
                    "joint `{}` axis is not unit-norm",
                    joint.name
                )));
            }
            let [lo, hi] = joint.limits;
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "joint `{}` limits must satisfy min < max",
                    joint.name
                )));
            }
        }
        if !(self.effector.tip_radius > 0.0) {
            return Err(Error::Config("tip radius must be positive".into()));
        }
        let mut names: Vec<&str> = self.frames.iter().map(|f| f.name.as_str()).collect();
        names.push(TORSO_FRAME);
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate frame name".into()));
        }
        Ok(())
    }

    fn check_dim(&self, q: &JointConfig) -> Result<()> {
        let dof = self.dof();
        if q.len() != dof {
            return Err(Error::DimensionMismatch {
                expected: dof,
                got: q.len(),
            });
        }
        Ok(())
    }

    /// World (torso-frame) position of the pen's sphere center.
    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<Vector3<f64>> {
        self.check_dim(q)?;
        let wrist = walk(&self.base, &self.joints, &q.as_slice()[..self.joints.len()]);
        Ok(wrist.transform_point(&self.effector.tip_offset))
    }

    pub fn frame_pose(&self, frame_name: &str, q: &JointConfig) -> Result<Pose> {
        self.check_dim(q)?;
        if frame_name == TORSO_FRAME {
            return Ok(Pose::identity());
        }
        let mut offset = self.joints.len();
        for frame in &self.frames {
            let n = frame.joints.len();
            if frame.name == frame_name {
                return Ok(walk(
                    &frame.base,
                    &frame.joints,
                    &q.as_slice()[offset..offset + n],
                ));
            }
            offset += n;
        }
        Err(Error::UnknownFrame(frame_name.to_string()))
    }

    pub fn has_frame(&self, frame_name: &str) -> bool {
        frame_name == TORSO_FRAME || self.frames.iter().any(|f| f.name == frame_name)
    }

    pub fn clamp(&self, q: &JointConfig) -> JointConfig {
        JointConfig(
            q.iter()
                .zip(self.all_joints())
                .map(|(&a, j)| a.clamp(j.limits[0], j.limits[1]))
                .collect(),
        )
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.len() == self.dof()
            && q
                .iter()
                .zip(self.all_joints())
                .all(|(&a, j)| a >= j.limits[0] && a <= j.limits[1])
    }

    /// Uniform sample over the centered fraction `sub_range` of every joint
    /// range. `sub_range = 1` covers the full limits.
    pub fn sample_uniform_config<R: Rng + ?Sized>(&self, sub_range: f64, rng: &mut R) -> JointConfig {
        let frac = sub_range.clamp(f64::MIN_POSITIVE, 1.0);
        JointConfig(
            self.all_joints()
                .map(|j| {
                    let [lo, hi] = j.limits;
                    let center = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo) * frac;
                    let u: f64 = rng.random();
                    (center - half + 2.0 * half * u).clamp(lo, hi)
                })
                .collect(),
        )
    }

    /// Midpoint of every joint range.
    pub fn center_config(&self) -> JointConfig {
        JointConfig(
            self.all_joints()
                .map(|j| 0.5 * (j.limits[0] + j.limits[1]))
                .collect(),
        )
    }
}
