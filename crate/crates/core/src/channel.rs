//! Scenario description and random channel realizations.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::linalg::{CMatrix, CRowVector, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemModel {
    /// Independent SU pairs, all mutually interfering.
    Ic,
    /// One SU transmitter serving `n_s` receivers; shared power budget.
    Bc,
    /// `n_s` SU transmitters towards one receiver.
    Mac,
}

impl SystemModel {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemModel::Ic => "ic",
            SystemModel::Bc => "bc",
            SystemModel::Mac => "mac",
        }
    }
}

impl std::str::FromStr for SystemModel {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ic" => Ok(SystemModel::Ic),
            "bc" => Ok(SystemModel::Bc),
            "mac" => Ok(SystemModel::Mac),
            other => Err(ConfigError::new(
                "model",
                format!("unknown system model '{other}' (expected ic, bc or mac)"),
            )),
        }
    }
}

impl std::fmt::Display for SystemModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_s: usize,
    pub n_p: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub model: SystemModel,
    pub snr_db: f64,
    /// Standard deviation of the per-stream log-normal SNR spread, in dB.
    pub snr_dev_db: f64,
    /// Transmit power budget, linear units.
    pub p_t: f64,
    /// Interference cap at every PU receiver, same units as `noise_var`.
    pub gamma: f64,
    pub noise_var: f64,
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut cfg = Self {
            n_s: 2,
            n_p: 1,
            n_t: 2,
            n_r: 2,
            model: SystemModel::Ic,
            snr_db: 10.0,
            snr_dev_db: 0.0,
            p_t: 0.0,
            gamma: 1e-10,
            noise_var: 1.0,
            epsilon: 1e-2,
            max_outer_iters: 200,
            seed: 0,
        };
        cfg.p_t = nominal_power_budget(&cfg);
        cfg
    }
}

impl ScenarioConfig {
    /// Sets `snr_db` and re-derives the power budget from it.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self.p_t = nominal_power_budget(&self);
        self
    }

    /// Structural bounds that every algorithm needs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_s < 1 {
            return Err(ConfigError::new("n_s", "must be at least 1"));
        }
        if self.n_t < 1 {
            return Err(ConfigError::new("n_t", "must be at least 1"));
        }
        if self.n_r < 1 {
            return Err(ConfigError::new("n_r", "must be at least 1"));
        }
        if self.n_p + 1 > self.n_t {
            return Err(ConfigError::new(
                "n_p",
                format!(
                    "n_p exceeds n_t-1 (n_p = {}, n_t = {}): at most n_t-1 primary receivers can be protected",
                    self.n_p, self.n_t
                ),
            ));
        }
        if !(self.p_t > 0.0) || !self.p_t.is_finite() {
            return Err(ConfigError::new("p_t", format!("must be positive, got {}", self.p_t)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(ConfigError::new("gamma", format!("must be non-negative, got {}", self.gamma)));
        }
        if !(self.noise_var > 0.0) || !self.noise_var.is_finite() {
            return Err(ConfigError::new(
                "noise_var",
                format!("must be positive, got {}", self.noise_var),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(ConfigError::new("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if !self.snr_db.is_finite() {
            return Err(ConfigError::new("snr_db", "must be finite"));
        }
        if !(self.snr_dev_db >= 0.0) || !self.snr_dev_db.is_finite() {
            return Err(ConfigError::new(
                "snr_dev_db",
                format!("must be a non-negative standard deviation, got {}", self.snr_dev_db),
            ));
        }
        if self.max_outer_iters < 1 {
            return Err(ConfigError::new("max_outer_iters", "must be at least 1"));
        }
        Ok(())
    }

    /// Stream-count limits of the broadcast and multiple-access models,
    /// which the fairness algorithm must respect.
    pub fn validate_fairness(&self) -> Result<(), ConfigError> {
        self.validate()?;
        match self.model {
            SystemModel::Bc if self.n_s > self.n_t => Err(ConfigError::new(
                "n_s",
                format!(
                    "broadcast-channel stream limit n_s <= n_t violated (n_s = {}, n_t = {}) for the fairness algorithm",
                    self.n_s, self.n_t
                ),
            )),
            SystemModel::Mac if self.n_s > self.n_r => Err(ConfigError::new(
                "n_s",
                format!(
                    "multiple-access stream limit n_s <= n_r violated (n_s = {}, n_r = {}) for the fairness algorithm",
                    self.n_s, self.n_r
                ),
            )),
            _ => Ok(()),
        }
    }

    pub fn power_rule(&self) -> crate::convex::PowerRule {
        match self.model {
            SystemModel::Bc => crate::convex::PowerRule::TotalTrace(self.p_t),
            SystemModel::Ic | SystemModel::Mac => crate::convex::PowerRule::PerBlock(self.p_t),
        }
    }
}

/// Transmit budget that makes the nominal per-stream SNR over a unit-gain
/// channel equal to `snr_db`, with the noise variance held fixed.
pub fn nominal_power_budget(config: &ScenarioConfig) -> f64 {
    config.noise_var * 10f64.powf(config.snr_db / 10.0)
}

/// One realization of every channel in the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub model: SystemModel,
    /// `h_ss[k][l]`: `n_r x n_t`, SU transmitter `k` to SU receiver `l`.
    pub h_ss: Vec<Vec<CMatrix>>,
    /// `h_ps[i][l]`: length `n_r`, PU transmitter `i` to SU receiver `l`.
    pub h_ps: Vec<Vec<CVector>>,
    /// `h_sp[k][j]`: `1 x n_t`, SU transmitter `k` to PU receiver `j`.
    pub h_sp: Vec<Vec<CRowVector>>,
    /// `h_pp[i][j]`: PU transmitter `i` to PU receiver `j`. Unused by the optimizers.
    pub h_pp: Vec<Vec<C64>>,
    pub dev_gain: Vec<f64>,
    pub noise_var: Vec<f64>,
}

impl ChannelSet {
    pub fn n_s(&self) -> usize {
        self.h_ss.len()
    }

    pub fn n_p(&self) -> usize {
        self.h_pp.len()
    }

    pub fn n_t(&self) -> usize {
        self.h_ss[0][0].ncols()
    }

    pub fn n_r(&self) -> usize {
        self.h_ss[0][0].nrows()
    }

    /// Checks the equality structure the system model imposes.
    pub fn tying_holds(&self) -> bool {
        let n_s = self.n_s();
        match self.model {
            SystemModel::Ic => true,
            SystemModel::Bc => (0..n_s).all(|l| {
                (1..n_s).all(|k| self.h_ss[k][l] == self.h_ss[0][l])
            }) && (0..self.n_p()).all(|j| (1..n_s).all(|k| self.h_sp[k][j] == self.h_sp[0][j])),
            SystemModel::Mac => (0..n_s).all(|k| {
                (1..n_s).all(|l| self.h_ss[k][l] == self.h_ss[k][0])
            }) && (0..self.n_p()).all(|i| (1..n_s).all(|l| self.h_ps[i][l] == self.h_ps[i][0])),
        }
    }

    /// Hex SHA-256 prefix over every stored number, used to show that paired
    /// runs consumed the same realization.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut feed = |x: f64| h.update(x.to_le_bytes());
        for row in &self.h_ss {
            for m in row {
                m.iter().for_each(|z| {
                    feed(z.re);
                    feed(z.im);
                });
            }
        }
        for row in &self.h_ps {
            for v in row {
                v.iter().for_each(|z| {
                    feed(z.re);
                    feed(z.im);
                });
            }
        }
        for row in &self.h_sp {
            for v in row {
                v.iter().for_each(|z| {
                    feed(z.re);
                    feed(z.im);
                });
            }
        }
        for row in &self.h_pp {
            row.iter().for_each(|z| {
                feed(z.re);
                feed(z.im);
            });
        }
        self.dev_gain.iter().for_each(|&g| feed(g));
        self.noise_var.iter().for_each(|&s| feed(s));
        hex::encode(&h.finalize()[..8])
    }
}

/// Zero-mean, unit-variance circularly-symmetric complex normal sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng))
}

fn complex_normal_row<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CRowVector {
    CRowVector::from_fn(len, |_, _| complex_normal(rng))
}

/// Draws a full channel realization.
///
/// Draw order is fixed (deviation, SU-SU, PU-SU, SU-PU, PU-PU) and does not
/// depend on `snr_dev_db`, so two configs that differ only in deviation
/// produce paired realizations from the same seed.
pub fn generate_channels<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelSet, ConfigError> {
    config.validate()?;
    let (n_s, n_p, n_t, n_r) = (config.n_s, config.n_p, config.n_t, config.n_r);

    let dev_gain: Vec<f64> = (0..n_s)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            10f64.powf(config.snr_dev_db * z / 10.0)
        })
        .collect();

    let mut h_ss: Vec<Vec<CMatrix>> = match config.model {
        SystemModel::Ic => (0..n_s)
            .map(|_| (0..n_s).map(|_| complex_normal_matrix(rng, n_r, n_t)).collect())
            .collect(),
        SystemModel::Bc => {
            let per_rx: Vec<CMatrix> = (0..n_s).map(|_| complex_normal_matrix(rng, n_r, n_t)).collect();
            (0..n_s).map(|_| per_rx.clone()).collect()
        }
        SystemModel::Mac => (0..n_s)
            .map(|_| {
                let h = complex_normal_matrix(rng, n_r, n_t);
                vec![h; n_s]
            })
            .collect(),
    };

    let h_ps: Vec<Vec<CVector>> = match config.model {
        SystemModel::Mac => (0..n_p)
            .map(|_| vec![complex_normal_vector(rng, n_r); n_s])
            .collect(),
        SystemModel::Ic | SystemModel::Bc => (0..n_p)
            .map(|_| (0..n_s).map(|_| complex_normal_vector(rng, n_r)).collect())
            .collect(),
    };

    let h_sp: Vec<Vec<CRowVector>> = match config.model {
        SystemModel::Bc => {
            let shared: Vec<CRowVector> = (0..n_p).map(|_| complex_normal_row(rng, n_t)).collect();
            (0..n_s).map(|_| shared.clone()).collect()
        }
        SystemModel::Ic | SystemModel::Mac => (0..n_s)
            .map(|_| (0..n_p).map(|_| complex_normal_row(rng, n_t)).collect())
            .collect(),
    };

    let h_pp: Vec<Vec<C64>> = (0..n_p)
        .map(|_| (0..n_p).map(|_| complex_normal(rng)).collect())
        .collect();

    // Deviation scales the direct link; for the tied models that link is the
    // shared receiver (BC) or transmitter (MAC) channel.
    for (l, &g) in dev_gain.iter().enumerate() {
        let a = C64::new(g.sqrt(), 0.0);
        match config.model {
            SystemModel::Ic => h_ss[l][l] *= a,
            SystemModel::Bc => (0..n_s).for_each(|k| h_ss[k][l] *= a),
            SystemModel::Mac => (0..n_s).for_each(|r| h_ss[l][r] *= a),
        }
    }

    Ok(ChannelSet {
        model: config.model,
        h_ss,
        h_ps,
        h_sp,
        h_pp,
        dev_gain,
        noise_var: vec![config.noise_var; n_s],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(model: SystemModel) -> ScenarioConfig {
        ScenarioConfig {
            model,
            n_s: 2,
            n_p: 1,
            n_t: 3,
            n_r: 2,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn bc_tying_shares_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ch = generate_channels(&cfg(SystemModel::Bc), &mut rng).unwrap();
        for l in 0..2 {
            assert_eq!(ch.h_ss[0][l], ch.h_ss[1][l]);
        }
        assert_eq!(ch.h_sp[0][0], ch.h_sp[1][0]);
        assert!(ch.tying_holds());
    }

    #[test]
    fn mac_tying_shares_draws() {
        let mut config = cfg(SystemModel::Mac);
        config.snr_dev_db = 5.0;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = generate_channels(&config, &mut rng).unwrap();
        assert!(ch.tying_holds());
        assert_eq!(ch.h_ps[0][0], ch.h_ps[0][1]);
    }

    #[test]
    fn bc_tying_survives_deviation() {
        let mut config = cfg(SystemModel::Bc);
        config.snr_dev_db = 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(generate_channels(&config, &mut rng).unwrap().tying_holds());
    }

    #[test]
    fn zero_deviation_gives_unit_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = generate_channels(&cfg(SystemModel::Ic), &mut rng).unwrap();
        assert!(ch.dev_gain.iter().all(|&g| g == 1.0));
    }

    #[test]
    fn same_seed_same_channels() {
        let a = generate_channels(&cfg(SystemModel::Ic), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = generate_channels(&cfg(SystemModel::Ic), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        let c = generate_channels(&cfg(SystemModel::Ic), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn unit_variance_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| complex_normal(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean |h|^2 = {mean}");
    }

    #[test]
    fn too_many_pus_rejected() {
        let mut config = cfg(SystemModel::Ic);
        config.n_p = 3;
        let err = generate_channels(&config, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert_eq!(err.field, "n_p");
        assert!(err.message.contains("n_p exceeds n_t-1"));
    }

    #[test]
    fn fairness_limits() {
        let mut config = cfg(SystemModel::Bc);
        config.n_s = 4;
        assert!(config.validate().is_ok());
        let err = config.validate_fairness().unwrap_err();
        assert!(err.message.contains("n_s <= n_t"));
        config.model = SystemModel::Mac;
        assert!(config.validate_fairness().unwrap_err().message.contains("n_s <= n_r"));
    }

    #[test]
    fn power_budget_from_snr() {
        let mut c = ScenarioConfig::default();
        c.noise_var = 1.0;
        c.snr_db = 0.0;
        assert_eq!(nominal_power_budget(&c), 1.0);
        c.snr_db = 10.0;
        assert!((nominal_power_budget(&c) - 10.0).abs() < 1e-12);
        c.snr_db = 30.0;
        c.noise_var = 1e-2;
        assert!((nominal_power_budget(&c) - 10.0).abs() < 1e-12);
    }
}
