use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::configuration::{ConfigurationVector, WeightScheme};

use super::interactions::{resolve_interactions, Resolved};

/// Default offspring count `4 + floor(3 ln D)`.
pub fn default_lambda(dimension: usize) -> usize {
    4 + (3.0 * (dimension as f64).ln()).floor() as usize
}

/// Recombination weights for `mu` parents, best first; they sum to one.
pub fn recombination_weights(mu: usize, scheme: WeightScheme) -> Vec<f64> {
    let raw: Vec<f64> = match scheme {
        WeightScheme::Equal => vec![1.0; mu],
        WeightScheme::LogRank => (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect(),
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Expected norm of a standard-normal vector in `dimension` dimensions.
pub fn expected_normal_norm(dimension: usize) -> f64 {
    let n = dimension as f64;
    n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
}

/// Step-size multiplier of cumulative step-size adaptation.
pub fn csa_factor(p_sigma_norm: f64, chi_n: f64, c_sigma: f64, d_sigma: f64) -> f64 {
    ((c_sigma / d_sigma) * (p_sigma_norm / chi_n - 1.0)).exp()
}

/// All endogenous strategy parameters of one local run.
#[derive(Debug, Clone)]
pub struct StrategyParams {
    pub dimension: usize,
    pub lambda: usize,
    pub mu: usize,
    pub lambda_eff: usize,
    pub seq_cutoff: usize,
    pub sigma: f64,
    pub sigma0: f64,
    pub mean: DVector<f64>,
    pub c: DMatrix<f64>,
    /// Eigenvectors of `c` (columns).
    pub b: DMatrix<f64>,
    /// Square roots of the eigenvalues of `c`.
    pub d: DVector<f64>,
    pub inv_sqrt_c: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
    /// Active-update learning rate before any positive-definiteness truncation.
    pub active_beta: f64,
    pub tpa_state: f64,
    pub threshold: f64,
    pub generation: u64,
    pub eigen_interval: u64,
    pub last_eigen_generation: u64,
    /// Number of eigenvalue-floor repairs applied to `c`.
    pub repairs: u32,
}

impl StrategyParams {
    /// Fresh parameters for `cfg` with the requested population size.
    ///
    /// `mu` defaults to `lambda / 2` before module interactions are resolved.
    pub fn new(
        cfg: &ConfigurationVector,
        dimension: usize,
        lambda: usize,
        mean: DVector<f64>,
        sigma0: f64,
    ) -> Self {
        let lambda = lambda.max(2);
        let Resolved {
            lambda,
            mu,
            lambda_eff,
            seq_cutoff,
        } = resolve_interactions(cfg, lambda, (lambda / 2).max(1));
        let n = dimension as f64;
        let weights = recombination_weights(mu, cfg.weights());
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu =
            (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let c_mu = c_mu.max(0.0);
        let active_beta = (4.0 * mu_eff - 2.0) / ((n + 12.0).powi(2) + 4.0 * mu_eff);
        let eigen_interval = ((1.0 / (10.0 * n * (c_1 + c_mu))).floor() as u64).max(1);
        StrategyParams {
            dimension,
            lambda,
            mu,
            lambda_eff,
            seq_cutoff,
            sigma: sigma0,
            sigma0,
            mean,
            c: DMatrix::identity(dimension, dimension),
            b: DMatrix::identity(dimension, dimension),
            d: DVector::from_element(dimension, 1.0),
            inv_sqrt_c: DMatrix::identity(dimension, dimension),
            p_sigma: DVector::zeros(dimension),
            p_c: DVector::zeros(dimension),
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n: expected_normal_norm(dimension),
            active_beta,
            tpa_state: 0.0,
            threshold: 0.0,
            generation: 0,
            eigen_interval,
            last_eigen_generation: 0,
            repairs: 0,
        }
    }

    /// `B * diag(d) * z`: maps a raw sample into the current covariance shape.
    pub fn shape(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.b * self.d.component_mul(z)
    }

    /// Candidate solution for raw sample `z` around the current mean.
    pub fn candidate(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.mean + self.shape(z) * self.sigma
    }

    pub fn condition_number(&self) -> f64 {
        let max = self.d.max();
        let min = self.d.min();
        (max / min).powi(2)
    }

    /// Largest standard deviation along a principal axis, times sigma.
    pub fn max_axis_std(&self) -> f64 {
        self.sigma * self.d.max()
    }

    /// Symmetrizes `c`, recomputes its eigendecomposition and floors
    /// non-positive eigenvalues. Returns true when a repair was needed.
    pub fn update_eigensystem(&mut self) -> bool {
        let dim = self.dimension;
        symmetrize(&mut self.c);
        let mut repaired = false;
        if self.c.iter().any(|v| !v.is_finite()) {
            self.c = DMatrix::identity(dim, dim);
            repaired = true;
        }
        let eigen = SymmetricEigen::new(self.c.clone());
        let mut values = eigen.eigenvalues.clone();
        let max = values.max().max(f64::MIN_POSITIVE);
        let floor = max * 1e-14;
        if values.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            for v in values.iter_mut() {
                if !(*v > floor) {
                    *v = floor;
                }
            }
            repaired = true;
        }
        let vectors = eigen.eigenvectors;
        if repaired {
            self.c = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
            symmetrize(&mut self.c);
            self.repairs += 1;
        }
        self.d = values.map(f64::sqrt);
        self.inv_sqrt_c =
            &vectors * DMatrix::from_diagonal(&self.d.map(|v| 1.0 / v)) * vectors.transpose();
        self.b = vectors;
        self.last_eigen_generation = self.generation;
        repaired
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_defaults() {
        assert_eq!(default_lambda(2), 6);
        assert_eq!(default_lambda(5), 8);
        assert_eq!(default_lambda(10), 10);
        assert_eq!(default_lambda(20), 12);
    }

    #[test]
    fn weight_schemes() {
        assert_eq!(recombination_weights(4, WeightScheme::Equal), vec![0.25; 4]);
        assert_eq!(recombination_weights(1, WeightScheme::LogRank), vec![1.0]);
        // high-precision oracle: ln(3.5) - ln(i), normalised (computed with mpmath)
        let expected = [
            0.637_042_571_241_216_8,
            0.284_570_257_438_032_9,
            0.078_387_171_320_750_36,
        ];
        let w = recombination_weights(3, WeightScheme::LogRank);
        for (a, b) in w.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for mu in 1..30 {
            let w = recombination_weights(mu, WeightScheme::LogRank);
            assert!(w.windows(2).all(|p| p[0] >= p[1]));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csa_fixed_point() {
        let chi = expected_normal_norm(5);
        assert!((csa_factor(chi, chi, 0.3, 1.3) - 1.0).abs() < 1e-12);
        assert!(csa_factor(2.0 * chi, chi, 0.3, 1.3) > 1.0);
        assert!(csa_factor(0.5 * chi, chi, 0.3, 1.3) < 1.0);
    }

    #[test]
    fn eigen_repair_floors_negative_eigenvalues() {
        let cfg = ConfigurationVector::DEFAULT;
        let mut p = StrategyParams::new(&cfg, 2, 6, DVector::zeros(2), 1.0);
        p.c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(p.update_eigensystem());
        assert_eq!(p.repairs, 1);
        let e = SymmetricEigen::new(p.c.clone());
        assert!(e.eigenvalues.min() > 0.0);
        assert!((p.c[(0, 1)] - p.c[(1, 0)]).abs() == 0.0);
    }
}
