//! Built-in geometry: a small humanoid's right arm with a pen, optional
//! 2-DoF neck, and torso/head skin patches at two resolutions.
//!
//! Lengths are in meters, angles in radians. Torso frame: x forward,
//! y left, z up, origin at the chest center.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::evaluation::Resolution;
use crate::kinematics::{AuxFrame, Effector, Joint, KinematicChain};
use crate::skin::{SkinSpec, Surface};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyPart {
    Torso,
    Head,
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BodyPart::Torso => "torso",
            BodyPart::Head => "head",
        })
    }
}

impl std::str::FromStr for BodyPart {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "torso" => Ok(BodyPart::Torso),
            "head" => Ok(BodyPart::Head),
            _ => Err(crate::Error::validation("body_part", format!("unknown body part `{s}`"))),
        }
    }
}

pub const HEAD_FRAME: &str = "head";

pub const SHOULDER: [f64; 3] = [0.0, -0.098, 0.100];
pub const UPPER_ARM: f64 = 0.105;
pub const FOREARM: f64 = 0.056;
pub const PEN: [f64; 3] = [0.056, 0.0, -0.015];
pub const TIP_RADIUS: f64 = 0.008;
pub const NECK: [f64; 3] = [0.0, 0.0, 0.1265];

fn limits_around(center: f64, half: f64) -> [f64; 2] {
    [center - half, center + half]
}

const ARM_HALF_RANGE: [f64; 5] = [0.35, 0.55, 0.55, 0.80, 0.70];

/// Center postures and half-ranges of the arm joints, per target body part:
/// shoulder pitch, shoulder roll, elbow yaw, elbow roll, wrist yaw.
pub fn arm_posture(body: BodyPart) -> ([f64; 5], [f64; 5]) {
    match body {
        BodyPart::Torso => ([1.99, 0.50, 1.04, 1.45, 1.80], ARM_HALF_RANGE),
        BodyPart::Head => ([-2.07, 0.51, 2.08, -1.83, 0.67], ARM_HALF_RANGE),
    }
}

/// Neck yaw and pitch center and half-range.
pub fn neck_posture() -> ([f64; 2], [f64; 2]) {
    ([0.0, 0.0], [0.4, 0.25])
}

pub fn arm_joints(body: BodyPart) -> Vec<Joint> {
    let (c, h) = arm_posture(body);
    vec![
        Joint::new("shoulder_pitch", [0.0, 1.0, 0.0], limits_around(c[0], h[0]), [0.0; 3]),
        Joint::new("shoulder_roll", [0.0, 0.0, 1.0], limits_around(c[1], h[1]), [UPPER_ARM, 0.0, 0.0]),
        Joint::new("elbow_yaw", [1.0, 0.0, 0.0], limits_around(c[2], h[2]), [0.0; 3]),
        Joint::new("elbow_roll", [0.0, 0.0, 1.0], limits_around(c[3], h[3]), [FOREARM, 0.0, 0.0]),
        Joint::new("wrist_yaw", [1.0, 0.0, 0.0], limits_around(c[4], h[4]), [0.0; 3]),
    ]
}

pub fn head_frame() -> AuxFrame {
    let (c, h) = neck_posture();
    AuxFrame {
        name: HEAD_FRAME.into(),
        base: Vector3::from(NECK),
        joints: vec![
            Joint::new("neck_yaw", [0.0, 0.0, 1.0], limits_around(c[0], h[0]), [0.0; 3]),
            Joint::new("neck_pitch", [0.0, 1.0, 0.0], limits_around(c[1], h[1]), [0.0; 3]),
        ],
    }
}

/// 5-DoF arm for torso experiments, 7-DoF arm + neck for head experiments.
pub fn chain(body: BodyPart) -> KinematicChain {
    KinematicChain {
        base: Vector3::from(SHOULDER),
        joints: arm_joints(body),
        effector: Effector {
            tip_offset: Vector3::from(PEN),
            tip_radius: TIP_RADIUS,
        },
        frames: match body {
            BodyPart::Torso => vec![],
            BodyPart::Head => vec![head_frame()],
        },
    }
}

const X: [f64; 3] = [1.0, 0.0, 0.0];
const Y: [f64; 3] = [0.0, 1.0, 0.0];
const Z: [f64; 3] = [0.0, 0.0, 1.0];

pub const TORSO_RADIUS: f64 = 0.07;
pub const TORSO_CENTER: [f64; 3] = [-0.01, 0.0, 0.0];
pub const HEAD_RADIUS: f64 = 0.055;
pub const HEAD_CENTER: [f64; 3] = [0.0, 0.0, 0.055];

/// Skin patch layout for a body part and resolution: 25/250 torso taxels,
/// 24/240 head taxels.
pub fn skin(body: BodyPart, resolution: Resolution) -> SkinSpec {
    let (name, frame) = match body {
        BodyPart::Torso => ("torso", crate::kinematics::TORSO_FRAME),
        BodyPart::Head => ("head", HEAD_FRAME),
    };
    let (center, radius) = match body {
        BodyPart::Torso => (TORSO_CENTER, TORSO_RADIUS),
        BodyPart::Head => (HEAD_CENTER, HEAD_RADIUS),
    };
    let (surface, rows, cols) = match (body, resolution) {
        (BodyPart::Torso, Resolution::Low) => (
            Surface::Planar {
                origin: Vector3::new(center[0] + radius, center[1], center[2]),
                u_axis: Vector3::from(Y),
                v_axis: Vector3::from(Z),
                extents: [0.08, 0.08],
            },
            5,
            5,
        ),
        (BodyPart::Head, Resolution::Low) => (
            Surface::Planar {
                origin: Vector3::new(center[0] + radius, center[1], center[2]),
                u_axis: Vector3::from(Y),
                v_axis: Vector3::from(Z),
                extents: [0.078, 0.052],
            },
            4,
            6,
        ),
        (BodyPart::Torso, Resolution::High) => (
            Surface::Cylindrical {
                center: Vector3::from(center),
                axis: Vector3::from(Z),
                reference: Vector3::from(X),
                radius,
                angular_span: 0.14 / radius,
                height_span: [-0.028, 0.028],
            },
            10,
            25,
        ),
        (BodyPart::Head, Resolution::High) => (
            Surface::Cylindrical {
                center: Vector3::from(center),
                axis: Vector3::from(Z),
                reference: Vector3::from(X),
                radius,
                angular_span: 0.11 / radius,
                height_span: [-0.033, 0.033],
            },
            12,
            20,
        ),
    };
    SkinSpec {
        name: name.into(),
        frame: frame.into(),
        surface,
        rows,
        cols,
        count: rows * cols,
        catchment_radius: None,
        max_penetration: None,
    }
}

/// Column and row stride of the high-resolution test grid.
pub fn test_stride(body: BodyPart) -> [usize; 2] {
    match body {
        BodyPart::Torso => [4, 3],
        BodyPart::Head => [3, 3],
    }
}
