//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selftouch_core::evaluation::Resolution;
use selftouch_core::presets::BodyPart;
use selftouch_core::runner::ExperimentConfig;
use selftouch_core::{Environment, JointConfig, ObservationPoint, SampleDatabase};

pub fn environment(body: BodyPart, resolution: Resolution) -> Environment {
    ExperimentConfig::new(body, resolution, selftouch_core::Strategy::Rmb)
        .environment()
        .expect("preset environment")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` random joint configurations within the chain limits.
pub fn configs(env: &Environment, n: usize, seed: u64) -> Vec<JointConfig> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| env.chain.sample_uniform_config(1.0, &mut r))
        .collect()
}

/// A database of `n` synthetic samples with outcomes spread over the goal
/// space.
pub fn database(env: &Environment, n: usize, seed: u64) -> SampleDatabase {
    let mut r = rng(seed);
    let mut db = SampleDatabase::new(env.dof());
    for q in configs(env, n, seed.wrapping_add(1)) {
        let x = env.uniform_goal(&mut r);
        db.insert(q, ObservationPoint::new(x.u, x.v)).expect("finite sample");
    }
    db
}
