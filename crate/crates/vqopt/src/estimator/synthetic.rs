//! Synthetic quadratic objectives with planted curvature, used by the
//! optimizer and stability test benches.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimator::{EvalCounts, NoiseModel, Objective};

/// `f(θ) = ½·Σ λᵢθᵢ²` with additive Gaussian noise on costs and partials.
///
/// The planted constants are exactly `L = max λ`, `L_i = λᵢ`,
/// `L_avg = mean λ`, and the PL constant `μ = min λ`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    lambda: Vec<f64>,
    sigma_cost: f64,
    sigma_partial: f64,
    rng: ChaCha8Rng,
    report_rng: ChaCha8Rng,
    counts: EvalCounts,
}

impl QuadraticObjective {
    pub fn new(lambda: Vec<f64>, sigma_cost: f64, sigma_partial: f64, seed: u64) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidInput("need at least one eigenvalue".into()));
        }
        if lambda.iter().any(|l| *l <= 0.0) {
            return Err(Error::InvalidInput(
                "planted eigenvalues must be positive".into(),
            ));
        }
        if sigma_cost < 0.0 || sigma_partial < 0.0 {
            return Err(Error::InvalidInput("noise σ must be ≥ 0".into()));
        }
        Ok(QuadraticObjective {
            lambda,
            sigma_cost,
            sigma_partial,
            rng: ChaCha8Rng::seed_from_u64(seed),
            report_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15),
            counts: EvalCounts::default(),
        })
    }

    /// `f = ‖θ‖²/2`.
    pub fn isotropic(d: usize, sigma_cost: f64, sigma_partial: f64, seed: u64) -> Self {
        QuadraticObjective::new(vec![1.0; d], sigma_cost, sigma_partial, seed)
            .expect("valid by construction")
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lipschitz(&self) -> f64 {
        self.lambda.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn lipschitz_avg(&self) -> f64 {
        self.lambda.iter().sum::<f64>() / self.lambda.len() as f64
    }

    pub fn pl_constant(&self) -> f64 {
        self.lambda.iter().cloned().fold(f64::MAX, f64::min)
    }

    pub fn noise(&self) -> NoiseModel {
        if self.sigma_cost == 0.0 && self.sigma_partial == 0.0 {
            NoiseModel::Exact
        } else {
            NoiseModel::Gaussian {
                sigma_cost: self.sigma_cost,
                sigma_partial: self.sigma_partial,
            }
        }
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.lambda.len() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.lambda.len(),
                theta.len()
            )));
        }
        Ok(())
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn noisy_cost(&mut self, theta: &[f64]) -> Result<f64> {
        self.counts.cost_evals += 1;
        let noise: f64 = self.rng.sample(StandardNormal);
        Ok(self.exact_cost(theta)? + self.sigma_cost * noise)
    }

    fn noisy_partial(&mut self, theta: &[f64], i: usize) -> Result<f64> {
        self.counts.partial_evals += 1;
        let noise: f64 = self.rng.sample(StandardNormal);
        Ok(self.exact_partial(theta, i)? + self.sigma_partial * noise)
    }

    fn exact_cost(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        Ok(0.5
            * theta
                .iter()
                .zip(&self.lambda)
                .map(|(t, l)| l * t * t)
                .sum::<f64>())
    }

    fn exact_partial(&self, theta: &[f64], i: usize) -> Result<f64> {
        self.check(theta)?;
        if i >= self.lambda.len() {
            return Err(Error::InvalidInput(format!("index {i} out of range")));
        }
        Ok(self.lambda[i] * theta[i])
    }

    fn report_cost(&mut self, theta: &[f64]) -> Result<f64> {
        let noise: f64 = self.report_rng.sample(StandardNormal);
        Ok(self.exact_cost(theta)? + self.sigma_cost * noise)
    }

    fn counts(&self) -> EvalCounts {
        self.counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_constants() {
        let q = QuadraticObjective::new(vec![1.0, 2.0, 5.0], 0.0, 0.0, 0).unwrap();
        assert_eq!(q.lipschitz(), 5.0);
        assert_eq!(q.pl_constant(), 1.0);
        assert!((q.lipschitz_avg() - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.exact_cost(&[1.0, 1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(q.exact_partial(&[1.0, 1.0, 1.0], 2).unwrap(), 5.0);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(QuadraticObjective::new(vec![], 0.0, 0.0, 0).is_err());
        assert!(QuadraticObjective::new(vec![1.0, -1.0], 0.0, 0.0, 0).is_err());
        assert!(QuadraticObjective::new(vec![1.0], -0.1, 0.0, 0).is_err());
    }
}
