//! Seeded random instances for property tests and cross-validation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market::{MarketScenario, SensingDistribution};
use crate::pt::RiskProfile;

pub const SEED_ENV: &str = "PTSOLVER_SEED";

/// Seed from `PTSOLVER_SEED` if set and parseable, else `default`. The seed
/// in use is written to stderr so failures can be replayed.
pub fn seed_from_env(default: u64) -> u64 {
    let seed = std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default);
    eprintln!("{SEED_ENV}={seed}");
    seed
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub scenario: MarketScenario,
    pub dist: SensingDistribution,
    pub profile: RiskProfile,
}

pub struct InstanceGenerator {
    rng: ChaCha8Rng,
}

impl InstanceGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn alphas(&mut self, n: usize, allow_zero: bool) -> Vec<f64> {
        loop {
            let mut a: Vec<f64> = (0..n).map(|_| self.rng.gen_range(0.01..0.99)).collect();
            if allow_zero && self.rng.gen_bool(0.25) {
                a[0] = 0.0;
            }
            a.sort_by(f64::total_cmp);
            if a.windows(2).all(|w| w[1] - w[0] > 1e-3) {
                return a;
            }
        }
    }

    /// Flat Dirichlet draw via normalized exponentials.
    fn probabilities(&mut self, n: usize) -> Vec<f64> {
        let e: Vec<f64> = (0..n)
            .map(|_| -(1.0 - self.rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = e.iter().sum();
        e.iter().map(|x| x / total).collect()
    }

    fn market(&mut self) -> MarketScenario {
        let cl = self.rng.gen_range(1.0..10.0);
        let cs = cl * self.rng.gen_range(0.05..0.95);
        let price = cl * self.rng.gen_range(1.05..3.0);
        let demand = 10f64.powf(self.rng.gen_range(-1.0..2.0));
        MarketScenario::new(cs, cl, price, demand).expect("generated scenario is valid")
    }

    fn distribution(&mut self, allow_zero: bool) -> SensingDistribution {
        let n = self.rng.gen_range(2..=8);
        let alphas = self.alphas(n, allow_zero);
        let probs = self.probabilities(n);
        SensingDistribution::new(alphas.into_iter().zip(probs).collect())
            .expect("generated distribution is valid")
    }

    /// Profile with β < γ.
    pub fn pt_profile(&mut self) -> RiskProfile {
        let beta = self.rng.gen_range(0.1..0.9);
        let gamma = self.rng.gen_range(beta + 0.05..=1.0);
        let lambda = self.rng.gen_range(1.0..4.0);
        let mu = self.rng.gen_range(0.3..=1.0);
        RiskProfile::new(lambda, beta, gamma, mu).expect("generated profile is valid")
    }

    /// Instance covered by the risk-free PT closed form: β < γ and
    /// α_1 < c_s/c_l < α_I.
    pub fn table2(&mut self) -> Instance {
        loop {
            let scenario = self.market();
            let dist = self.distribution(false);
            let ratio = scenario.sensing_cost() / scenario.leasing_cost();
            if dist.alpha(0) < ratio && ratio < dist.alpha(dist.len() - 1) {
                let profile = self.pt_profile();
                return Instance {
                    scenario,
                    dist,
                    profile,
                };
            }
        }
    }

    /// Risk-neutral instance; the lowest outcome may yield nothing.
    pub fn eut(&mut self) -> Instance {
        let scenario = self.market();
        let dist = self.distribution(true);
        Instance {
            scenario,
            dist,
            profile: RiskProfile::eut(),
        }
    }
}
