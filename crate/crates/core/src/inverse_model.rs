//! Sample database of `(q, x)` pairs: strict 1-nearest-neighbor inverse
//! lookup in observation space and locally weighted linear regression in
//! joint space.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::JointConfig;
use crate::observation::{distance, ObservationPoint};

#[derive(Clone, Debug)]
pub struct SampleDatabase {
    dim: usize,
    qs: Vec<JointConfig>,
    xs: Vec<ObservationPoint>,
    index: KdTree,
}

impl SampleDatabase {
    pub fn new(dim: usize) -> Self {
        SampleDatabase {
            dim,
            qs: Vec::new(),
            xs: Vec::new(),
            index: KdTree::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.qs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qs.is_empty()
    }

    pub fn q(&self, i: usize) -> &JointConfig {
        &self.qs[i]
    }

    pub fn x(&self, i: usize) -> ObservationPoint {
        self.xs[i]
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&JointConfig, ObservationPoint)> {
        self.qs.iter().zip(self.xs.iter().copied())
    }

    pub fn insert(&mut self, q: JointConfig, x: ObservationPoint) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: q.len(),
            });
        }
        if !x.is_finite() {
            return Err(Error::Config("observation must be finite".into()));
        }
        self.index.insert(&self.xs, self.xs.len(), x);
        self.qs.push(q);
        self.xs.push(x);
        Ok(())
    }

    /// Index of the entry whose observation is nearest `goal`, earliest
    /// insertion on ties.
    pub fn nearest(&self, goal: &ObservationPoint) -> Result<usize> {
        self.index.nearest(&self.xs, goal).ok_or(Error::EmptyModel)
    }

    pub fn nn_inverse(&self, goal: &ObservationPoint) -> Result<&JointConfig> {
        Ok(&self.qs[self.nearest(goal)?])
    }

    /// Writes `q1..qn,u,v` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("q{i}")).collect();
        header.push("u".into());
        header.push("v".into());
        w.write_record(&header)?;
        for (q, x) in self.iter() {
            let mut row: Vec<String> = q.iter().map(|a| a.to_string()).collect();
            row.push(x.u.to_string());
            row.push(x.v.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers()?.len();
        if width < 3 {
            return Err(Error::Config("database csv needs q columns plus u,v".into()));
        }
        let mut db = SampleDatabase::new(width - 2);
        for record in r.records() {
            let record = record?;
            let values = record
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("bad number `{s}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let (q, x) = values.split_at(width - 2);
            db.insert(JointConfig::new(q.to_vec()), ObservationPoint::new(x[0], x[1]))?;
        }
        Ok(db)
    }
}

/// Incremental 2-d tree over the stored observations. Points are never
/// removed, so nodes are just insertion indices.
#[derive(Clone, Debug, Default)]
struct KdTree {
    nodes: Vec<KdNode>,
}

#[derive(Clone, Debug)]
struct KdNode {
    point: usize,
    children: [Option<usize>; 2],
}

fn coord(p: &ObservationPoint, axis: usize) -> f64 {
    if axis == 0 {
        p.u
    } else {
        p.v
    }
}

impl KdTree {
    fn insert(&mut self, points: &[ObservationPoint], id: usize, x: ObservationPoint) {
        let new = self.nodes.len();
        self.nodes.push(KdNode {
            point: id,
            children: [None, None],
        });
        if new == 0 {
            return;
        }
        let mut node = 0;
        let mut depth = 0;
        loop {
            let axis = depth % 2;
            let side = usize::from(coord(&x, axis) >= coord(&points[self.nodes[node].point], axis));
            match self.nodes[node].children[side] {
                Some(child) => {
                    node = child;
                    depth += 1;
                }
                None => {
                    self.nodes[node].children[side] = Some(new);
                    return;
                }
            }
        }
    }

    fn nearest(&self, points: &[ObservationPoint], goal: &ObservationPoint) -> Option<usize> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        // (node, depth, lower bound on the distance of anything below it)
        let mut stack = vec![(0usize, 0usize, 0.0f64)];
        while let Some((node, depth, bound)) = stack.pop() {
            if bound > best.0 * (1.0 + 1e-12) {
                continue;
            }
            let n = &self.nodes[node];
            let p = &points[n.point];
            let d = distance(p, goal);
            if d < best.0 || (d == best.0 && n.point < best.1) {
                best = (d, n.point);
            }
            let axis = depth % 2;
            let diff = coord(goal, axis) - coord(p, axis);
            let (near, far) = if diff >= 0.0 {
                (n.children[1], n.children[0])
            } else {
                (n.children[0], n.children[1])
            };
            // pushed first so the near side is explored first
            if let Some(f) = far {
                stack.push((f, depth + 1, bound.max(diff.abs())));
            }
            if let Some(c) = near {
                stack.push((c, depth + 1, bound));
            }
        }
        Some(best.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LwlrParams {
    pub k_neighbors: usize,
    /// Gaussian kernel width in joint space; `None` uses the distance to the
    /// k-th neighbor of each query.
    pub bandwidth: Option<f64>,
    pub ridge: f64,
}

impl Default for LwlrParams {
    fn default() -> Self {
        LwlrParams {
            k_neighbors: 20,
            bandwidth: None,
            ridge: 1e-6,
        }
    }
}

impl SampleDatabase {
    /// Indices of the `k` entries nearest `q` in joint space, ordered by
    /// distance then insertion.
    pub fn joint_neighbors(&self, q: &JointConfig, k: usize) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self
            .qs
            .iter()
            .enumerate()
            .map(|(i, qi)| (qi.distance(q), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < all.len() {
            all.select_nth_unstable_by(k, cmp);
            all.truncate(k);
        }
        all.sort_by(cmp);
        all
    }

    /// Local affine prediction of the observation at `q_query`.
    pub fn lwlr_forward(&self, q_query: &JointConfig, params: &LwlrParams) -> Result<ObservationPoint> {
        if q_query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: q_query.len(),
            });
        }
        let needed = params.k_neighbors.max(self.dim + 1);
        if self.len() < needed {
            return Err(Error::InsufficientNeighbors {
                needed,
                available: self.len(),
            });
        }
        let neighbors = self.joint_neighbors(q_query, params.k_neighbors.max(self.dim + 1));
        let h = params
            .bandwidth
            .unwrap_or_else(|| neighbors.last().map_or(0.0, |n| n.0));
        let mut weights: Vec<f64> = neighbors
            .iter()
            .map(|&(d, _)| if h > 0.0 { (-(d * d) / (2.0 * h * h)).exp() } else { 1.0 })
            .collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            weights.iter_mut().for_each(|w| *w = 1.0);
        }

        let cols = self.dim + 1;
        let mut normal = DMatrix::<f64>::zeros(cols, cols);
        let mut rhs = DMatrix::<f64>::zeros(cols, 2);
        let mut row = DVector::<f64>::zeros(cols);
        for (&(_, i), &w) in neighbors.iter().zip(&weights) {
            row[0] = 1.0;
            for (j, (a, b)) in self.qs[i].iter().zip(q_query.iter()).enumerate() {
                row[j + 1] = a - b;
            }
            normal.ger(w, &row, &row, 1.0);
            let x = self.xs[i];
            for j in 0..cols {
                rhs[(j, 0)] += w * row[j] * x.u;
                rhs[(j, 1)] += w * row[j] * x.v;
            }
        }
        // intercept is left unpenalized so constants and shifts are exact
        for j in 1..cols {
            normal[(j, j)] += params.ridge;
        }
        let beta = match normal.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => normal
                .svd(true, true)
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::Optimizer(format!("lwlr solve: {e}")))?,
        };
        Ok(ObservationPoint::new(beta[(0, 0)], beta[(0, 1)]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(v: &[f64]) -> JointConfig {
        JointConfig::new(v.to_vec())
    }

    #[test]
    fn insert_counts() {
        let mut db = SampleDatabase::new(2);
        db.insert(q(&[0.0, 0.0]), ObservationPoint::new(1.0, 1.0)).unwrap();
        assert_eq!(db.len(), 1);
        db.insert(q(&[0.0, 0.0]), ObservationPoint::new(1.0, 1.0)).unwrap();
        assert_eq!(db.len(), 2);
        for i in 0..998 {
            db.insert(q(&[i as f64, 0.0]), ObservationPoint::new(i as f64, 0.5)).unwrap();
        }
        assert_eq!(db.len(), 1000);
    }

    #[test]
    fn insert_dimension_mismatch() {
        let mut db = SampleDatabase::new(2);
        assert!(matches!(
            db.insert(q(&[0.0]), ObservationPoint::default()),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(db
            .insert(q(&[0.0, 0.0]), ObservationPoint::new(f64::NAN, 0.0))
            .is_err());
    }

    #[test]
    fn empty_model() {
        let db = SampleDatabase::new(3);
        assert!(matches!(
            db.nn_inverse(&ObservationPoint::default()),
            Err(Error::EmptyModel)
        ));
    }

    #[test]
    fn singleton_and_exact_recall() {
        let mut db = SampleDatabase::new(1);
        db.insert(q(&[0.3]), ObservationPoint::new(0.1, 0.2)).unwrap();
        assert_eq!(db.nn_inverse(&ObservationPoint::new(-5.0, 9.0)).unwrap(), &q(&[0.3]));
        db.insert(q(&[0.7]), ObservationPoint::new(0.4, -0.2)).unwrap();
        db.insert(q(&[0.9]), ObservationPoint::new(0.41, -0.2)).unwrap();
        assert_eq!(db.nn_inverse(&ObservationPoint::new(0.4, -0.2)).unwrap(), &q(&[0.7]));
    }

    #[test]
    fn ties_prefer_earliest() {
        let mut db = SampleDatabase::new(1);
        db.insert(q(&[1.0]), ObservationPoint::new(1.0, 0.0)).unwrap();
        db.insert(q(&[2.0]), ObservationPoint::new(-1.0, 0.0)).unwrap();
        db.insert(q(&[3.0]), ObservationPoint::new(0.0, 1.0)).unwrap();
        db.insert(q(&[4.0]), ObservationPoint::new(1.0, 0.0)).unwrap();
        assert_eq!(db.nn_inverse(&ObservationPoint::default()).unwrap(), &q(&[1.0]));
        assert_eq!(db.nn_inverse(&ObservationPoint::new(1.0, 0.0)).unwrap(), &q(&[1.0]));
    }

    #[test]
    fn lwlr_constant_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut db = SampleDatabase::new(3);
        for _ in 0..30 {
            let qi: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            db.insert(JointConfig::new(qi), ObservationPoint::new(0.25, -0.5)).unwrap();
        }
        let p = db.lwlr_forward(&q(&[0.1, 0.0, -0.2]), &LwlrParams::default()).unwrap();
        assert!((p.u - 0.25).abs() < 1e-12 && (p.v + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lwlr_insufficient_neighbors() {
        let mut db = SampleDatabase::new(5);
        for i in 0..10 {
            db.insert(JointConfig::new(vec![i as f64; 5]), ObservationPoint::default()).unwrap();
        }
        assert!(matches!(
            db.lwlr_forward(&JointConfig::zeros(5), &LwlrParams::default()),
            Err(Error::InsufficientNeighbors { needed: 20, available: 10 })
        ));
    }

    #[test]
    fn lwlr_rank_deficient_is_not_an_error() {
        // every sample on one line in joint space
        let mut db = SampleDatabase::new(3);
        for i in 0..25 {
            let t = i as f64 * 0.01;
            db.insert(q(&[t, t, t]), ObservationPoint::new(t, 2.0 * t)).unwrap();
        }
        let p = db.lwlr_forward(&q(&[0.1, 0.1, 0.1]), &LwlrParams::default()).unwrap();
        assert!((p.u - 0.1).abs() < 1e-4 && (p.v - 0.2).abs() < 1e-4);
    }

    #[test]
    fn csv_round_trip() {
        let mut db = SampleDatabase::new(2);
        db.insert(q(&[0.1, -0.2]), ObservationPoint::new(0.01, 0.02)).unwrap();
        db.insert(q(&[1.0 / 3.0, 2.5]), ObservationPoint::new(-0.003, 1e-17)).unwrap();
        let mut buf = Vec::new();
        db.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("q1,q2,u,v\n"));
        let back = SampleDatabase::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for ((qa, xa), (qb, xb)) in db.iter().zip(back.iter()) {
            assert_eq!(qa, qb);
            assert_eq!(xa, xb);
        }
    }
}
