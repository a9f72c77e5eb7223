//! (μ/μ_w, λ)-CMA-ES with cumulative step-size adaptation and rank-one plus
//! rank-μ covariance updates. Candidates are clamped into the box bounds
//! before evaluation and the clamped points drive the update.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kinematics::JointConfig;

/// Relative eigenvalue floor for the covariance repair.
const EIGEN_FLOOR: f64 = 1e-14;

/// Strategy constants derived from the dimension.
#[derive(Clone, Debug)]
pub struct CmaParameters {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl CmaParameters {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        let lambda = 4 + (3.0 * nf.ln()).floor() as usize;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        CmaParameters {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CmaState {
    pub params: CmaParameters,
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub covariance: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub generation: usize,
    bounds: Vec<[f64; 2]>,
    // eigendecomposition of `covariance`: columns of `basis`, sqrt eigenvalues in `scales`
    basis: DMatrix<f64>,
    scales: DVector<f64>,
}

impl CmaState {
    pub fn new(mean: &[f64], sigma: f64, bounds: &[[f64; 2]]) -> Result<Self> {
        let n = mean.len();
        if n == 0 || bounds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                got: n,
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Optimizer("initial step size must be positive".into()));
        }
        Ok(CmaState {
            params: CmaParameters::new(n),
            mean: DVector::from_column_slice(mean),
            sigma,
            covariance: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
            bounds: bounds.to_vec(),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn clamp(&self, x: &mut DVector<f64>) {
        for (xi, b) in x.iter_mut().zip(&self.bounds) {
            *xi = xi.clamp(b[0], b[1]);
        }
    }

    /// Draws λ candidates, already clamped into bounds.
    pub fn ask<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<DVector<f64>> {
        let n = self.dim();
        (0..self.params.lambda)
            .map(|_| {
                let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let y = &self.basis * z.component_mul(&self.scales);
                let mut x = &self.mean + y * self.sigma;
                self.clamp(&mut x);
                x
            })
            .collect()
    }

    /// Updates the distribution from evaluated candidates. Non-finite
    /// fitness counts as +∞.
    pub fn tell(&mut self, candidates: &[DVector<f64>], fitness: &[f64]) -> Result<()> {
        let p = &self.params;
        let n = self.dim();
        let fitness: Vec<f64> = fitness
            .iter()
            .map(|&f| if f.is_finite() { f } else { f64::INFINITY })
            .collect();
        if fitness.iter().all(|f| f.is_infinite()) {
            return Err(Error::Optimizer(format!(
                "generation {}: every candidate evaluated to a non-finite objective",
                self.generation
            )));
        }
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));

        let steps: Vec<DVector<f64>> = order[..p.mu]
            .iter()
            .map(|&i| (&candidates[i] - &self.mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in p.weights.iter().zip(&steps) {
            y_w += y * *w;
        }
        self.mean += &y_w * self.sigma;
        let mut mean = self.mean.clone();
        self.clamp(&mut mean);
        self.mean = mean;

        // C^{-1/2} y_w
        let inv_sqrt = &self.basis
            * DMatrix::from_diagonal(&self.scales.map(|s| 1.0 / s))
            * self.basis.transpose();
        self.p_sigma = &self.p_sigma * (1.0 - p.c_sigma)
            + inv_sqrt * &y_w * (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt();
        let ps_norm = self.p_sigma.norm();
        self.sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();

        let g = (self.generation + 1) as f64;
        let h_sigma = if ps_norm / (1.0 - (1.0 - p.c_sigma).powf(2.0 * g)).sqrt()
            < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n
        {
            1.0
        } else {
            0.0
        };
        self.p_c = &self.p_c * (1.0 - p.c_c) + &y_w * (h_sigma * (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt());

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in p.weights.iter().zip(&steps) {
            rank_mu.ger(*w, y, y, 1.0);
        }
        let rank_one = &self.p_c * self.p_c.transpose()
            + &self.covariance * ((1.0 - h_sigma) * p.c_c * (2.0 - p.c_c));
        self.covariance = &self.covariance * (1.0 - p.c_1 - p.c_mu) + rank_one * p.c_1 + rank_mu * p.c_mu;
        self.generation += 1;
        self.refresh_decomposition();
        Ok(())
    }

    /// Symmetrizes the covariance, floors its eigenvalues and caches the
    /// decomposition used for sampling.
    fn refresh_decomposition(&mut self) {
        let sym = (&self.covariance + self.covariance.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let max = eig.eigenvalues.max().max(f64::MIN_POSITIVE);
        let floor = EIGEN_FLOOR * max;
        let values = eig.eigenvalues.map(|e| if e.is_finite() { e.max(floor) } else { floor });
        let repaired = values.iter().zip(eig.eigenvalues.iter()).any(|(a, b)| a != b);
        self.basis = eig.eigenvectors;
        self.scales = values.map(f64::sqrt);
        self.covariance = if repaired {
            &self.basis * DMatrix::from_diagonal(&values) * self.basis.transpose()
        } else {
            (&self.covariance + self.covariance.transpose()) * 0.5
        };
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.scales.map(|s| s * s)
    }
}

#[derive(Clone, Debug)]
pub struct CmaOutcome {
    pub best: JointConfig,
    pub f_best: f64,
    /// Best-ever value after the initial evaluation and after each generation.
    pub best_history: Vec<f64>,
}

/// Default initial step size: 0.3 × mean joint half-range.
pub fn default_sigma(bounds: &[[f64; 2]]) -> f64 {
    let n = bounds.len().max(1) as f64;
    0.3 * bounds.iter().map(|b| 0.5 * (b[1] - b[0])).sum::<f64>() / n
}

/// Minimizes `objective` from `q_init` for a fixed number of generations,
/// returning the best point ever evaluated (including `q_init`).
pub fn cma_minimize<F, R>(
    mut objective: F,
    q_init: &JointConfig,
    bounds: &[[f64; 2]],
    generations: usize,
    sigma: Option<f64>,
    rng: &mut R,
) -> Result<CmaOutcome>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if generations == 0 {
        return Err(Error::Optimizer("generations must be at least 1".into()));
    }
    let sigma = sigma.unwrap_or_else(|| default_sigma(bounds));
    let mut state = CmaState::new(q_init.as_slice(), sigma, bounds)?;
    let sanitize = |f: f64| if f.is_finite() { f } else { f64::INFINITY };

    let mut best = q_init.clone();
    let mut f_best = sanitize(objective(q_init.as_slice()));
    let mut best_history = vec![f_best];
    for _ in 0..generations {
        let candidates = state.ask(rng);
        let fitness: Vec<f64> = candidates
            .iter()
            .map(|x| sanitize(objective(x.as_slice())))
            .collect();
        for (x, &f) in candidates.iter().zip(&fitness) {
            if f < f_best {
                f_best = f;
                best = JointConfig::new(x.as_slice().to_vec());
            }
        }
        best_history.push(f_best);
        state.tell(&candidates, &fitness)?;
        if !state.sigma.is_finite() || state.sigma == 0.0 {
            break;
        }
    }
    Ok(CmaOutcome {
        best,
        f_best,
        best_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_population() {
        let p = CmaParameters::new(5);
        assert_eq!(p.lambda, 8);
        assert_eq!(p.mu, 4);
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.weights.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(CmaParameters::new(7).lambda, 9);
    }

    #[test]
    fn one_generation_keeps_better_initial_point() {
        let target = [0.0; 5];
        let bounds = vec![[-1.0, 1.0]; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q0 = JointConfig::new(target.to_vec());
        let out = cma_minimize(
            |x| x.iter().map(|v| v * v).sum(),
            &q0,
            &bounds,
            1,
            None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.best, q0);
        assert_eq!(out.f_best, 0.0);
    }

    #[test]
    fn all_infinite_generation_is_error() {
        let bounds = vec![[-1.0, 1.0]; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q0 = JointConfig::zeros(3);
        let res = cma_minimize(|_| f64::NAN, &q0, &bounds, 3, None, &mut rng);
        assert!(matches!(res, Err(Error::Optimizer(_))));
    }

    #[test]
    fn zero_generations_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(cma_minimize(|_| 0.0, &JointConfig::zeros(2), &[[-1.0, 1.0]; 2], 0, None, &mut rng).is_err());
    }

    #[test]
    fn candidates_respect_bounds() {
        let bounds = vec![[-0.1, 0.2]; 4];
        let state = CmaState::new(&[0.0; 4], 5.0, &bounds).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for x in state.ask(&mut rng) {
            assert!(x.iter().all(|v| (-0.1..=0.2).contains(v)));
        }
    }
}
