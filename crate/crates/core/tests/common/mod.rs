//! Independent reference implementations used to cross-check the library.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3, Vector4};
use selftouch_core::explorer::ExplorationOutcome;
use selftouch_core::kinematics::Joint;
use selftouch_core::{
    JointConfig, KinematicChain, ObservationPoint, SampleDatabase, SkinPatch, Surface,
};

/// Rodrigues rotation matrix for a unit axis.
pub fn rotation(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = Matrix3::new(
        0.0, -axis.z, axis.y, //
        axis.z, 0.0, -axis.x, //
        -axis.y, axis.x, 0.0,
    );
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

pub fn homogeneous(r: &Matrix3<f64>, t: &Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
    m
}

fn chain_transform(base: &Vector3<f64>, joints: &[Joint], angles: &[f64]) -> Matrix4<f64> {
    let mut t = homogeneous(&Matrix3::identity(), base);
    for (j, &a) in joints.iter().zip(angles) {
        t *= homogeneous(&rotation(&j.axis, a), &Vector3::zeros());
        t *= homogeneous(&Matrix3::identity(), &j.translation);
    }
    t
}

/// Tip position from a product of 4x4 homogeneous transforms.
pub fn fk_oracle(chain: &KinematicChain, q: &[f64]) -> Vector3<f64> {
    let n = chain.joints.len();
    let t = chain_transform(&chain.base, &chain.joints, &q[..n]);
    let off = chain.effector.tip_offset;
    let p = t * Vector4::new(off.x, off.y, off.z, 1.0);
    Vector3::new(p.x, p.y, p.z)
}

/// 4x4 pose of an auxiliary frame.
pub fn frame_oracle(chain: &KinematicChain, name: &str, q: &[f64]) -> Option<Matrix4<f64>> {
    if name == "torso" {
        return Some(Matrix4::identity());
    }
    let mut offset = chain.joints.len();
    for f in &chain.frames {
        let n = f.joints.len();
        if f.name == name {
            return Some(chain_transform(&f.base, &f.joints, &q[offset..offset + n]));
        }
        offset += n;
    }
    None
}

fn wrap(d: f64) -> f64 {
    let d = d.rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Activated taxels by scanning every taxel; the tip is given in the patch
/// frame. Taxel surface coordinates are recovered from their 3D positions.
pub fn contact_oracle(patch: &SkinPatch, tip: &Vector3<f64>, tip_radius: f64) -> Vec<usize> {
    let max_depth = patch.max_penetration.unwrap_or(tip_radius);
    let mut hits = Vec::new();
    match &patch.surface {
        Surface::Planar {
            origin,
            u_axis,
            v_axis,
            ..
        } => {
            let n = u_axis.cross(v_axis).normalize();
            let dist = (tip - origin).dot(&n);
            let depth = tip_radius - dist;
            if !(depth >= 0.0 && depth <= max_depth) {
                return hits;
            }
            let foot = tip - n * dist;
            for (id, t) in patch.taxels.iter().enumerate() {
                if (foot - t.local_position).norm() <= patch.catchment_radius {
                    hits.push(id);
                }
            }
        }
        Surface::Cylindrical {
            center,
            axis,
            reference,
            radius,
            ..
        } => {
            let side = axis.cross(reference);
            let polar = |p: &Vector3<f64>| {
                let w = p - center;
                let h = w.dot(axis);
                let r = w - axis * h;
                (r.norm(), r.dot(&side).atan2(r.dot(reference)), h)
            };
            let (rho, theta, h) = polar(tip);
            if rho == 0.0 {
                return hits;
            }
            let depth = tip_radius - (rho - radius);
            if !(depth >= 0.0 && depth <= max_depth) {
                return hits;
            }
            for (id, t) in patch.taxels.iter().enumerate() {
                let (_, tt, th) = polar(&t.local_position);
                let d = (radius * wrap(theta - tt)).hypot(h - th);
                if d <= patch.catchment_radius {
                    hits.push(id);
                }
            }
        }
    }
    hits
}

/// Unwrapped cylinder coordinates `(R * angle, height)` via atan2.
pub fn cylinder_oracle(
    center: &Vector3<f64>,
    axis: &Vector3<f64>,
    reference: &Vector3<f64>,
    radius: f64,
    p: &Vector3<f64>,
) -> (f64, f64) {
    let w = p - center;
    let h = axis.dot(&w);
    let x = reference.dot(&w);
    let y = axis.cross(reference).dot(&w);
    (radius * y.atan2(x), h)
}

/// Index of the nearest stored outcome by exhaustive scan, earliest on ties.
pub fn nn_oracle(db: &SampleDatabase, goal: &ObservationPoint) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for i in 0..db.len() {
        let x = db.x(i);
        let d = ((x.u - goal.u).powi(2) + (x.v - goal.v).powi(2)).sqrt();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Weighted least squares through the normal equations `(AᵀWA + Λ) β =
/// AᵀWy`, with the design `[1, q_i - q]` and Gaussian weights at bandwidth
/// equal to the k-th neighbor distance.
pub fn wls_oracle(db: &SampleDatabase, q: &[f64], k: usize, ridge: f64) -> (f64, f64) {
    let mut order: Vec<(f64, usize)> = (0..db.len())
        .map(|i| {
            let d = db.q(i).iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            (d, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    order.truncate(k);
    let h = order.last().unwrap().0;
    let n = q.len() + 1;
    let mut a = DMatrix::<f64>::zeros(order.len(), n);
    let mut w = DMatrix::<f64>::zeros(order.len(), order.len());
    let mut y = DMatrix::<f64>::zeros(order.len(), 2);
    for (r, &(d, i)) in order.iter().enumerate() {
        a[(r, 0)] = 1.0;
        for (j, (qi, qq)) in db.q(i).iter().zip(q).enumerate() {
            a[(r, j + 1)] = qi - qq;
        }
        w[(r, r)] = if h > 0.0 { (-(d * d) / (2.0 * h * h)).exp() } else { 1.0 };
        y[(r, 0)] = db.x(i).u;
        y[(r, 1)] = db.x(i).v;
    }
    let mut lhs = a.transpose() * &w * &a;
    for j in 1..n {
        lhs[(j, j)] += ridge;
    }
    let rhs = a.transpose() * &w * &y;
    let beta = lhs.lu().solve(&rhs).expect("non-singular normal equations");
    (beta[(0, 0)], beta[(0, 1)])
}

/// Replays per-cell interest from an outcome log: the first competence
/// leaves the initial interest, later ones set it to `|C_t - C_{t-1}|`.
/// Returns the final interest vector and the value after every logged row.
pub fn replay_interest(
    outcomes: &[ExplorationOutcome],
    cells: usize,
    initial: f64,
    miss: f64,
) -> (Vec<f64>, Vec<Option<f64>>) {
    let mut interest = vec![initial; cells];
    let mut last: Vec<Option<f64>> = vec![None; cells];
    let mut per_row = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let Some(cell) = o.cell else {
            per_row.push(None);
            continue;
        };
        let goal = o.goal.expect("cell without goal");
        let c = match o.touched {
            Some((_, x)) => ((goal.u - x.u).powi(2) + (goal.v - x.v).powi(2)).sqrt(),
            None => miss,
        };
        if let Some(prev) = last[cell] {
            interest[cell] = (c - prev).abs();
        }
        last[cell] = Some(c);
        per_row.push(Some(interest[cell]));
    }
    (interest, per_row)
}

/// Grid-subsampled test taxels by enumerating every `(row, col)`.
pub fn enumerate_test_set(rows: usize, cols: usize, stride: [usize; 2]) -> Vec<usize> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if r % stride[1] == 0 && c % stride[0] == 0 {
                out.push(r * cols + c);
            }
        }
    }
    out
}

pub fn config(v: &[f64]) -> JointConfig {
    JointConfig::new(v.to_vec())
}
