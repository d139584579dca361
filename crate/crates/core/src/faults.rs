//! Transient and manufacturing fault sampling, and rate translations for sped-up automata.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::dependence_ball;
use crate::error::{Error, Result};
use crate::tessellation::Tessellation;

const PERMANENT_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultModel {
    Transient,
    Combined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl FaultConfig {
    pub fn new(alpha: f64, beta: f64, seed: u64) -> Result<Self> {
        let c = FaultConfig { alpha, beta, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidSpec(format!("alpha must lie in [0,1), got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidSpec(format!("beta must lie in [0,1], got {}", self.beta)));
        }
        Ok(())
    }

    pub fn model(&self) -> FaultModel {
        if self.beta == 0.0 {
            FaultModel::Transient
        } else {
            FaultModel::Combined
        }
    }

    /// Same rates, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        FaultConfig { seed, ..*self }
    }
}

/// Probability that a given cell is adversary-controlled at a given time.
pub fn epsilon(config: &FaultConfig) -> f64 {
    config.alpha + config.beta - config.alpha * config.beta
}

fn cutoff(prob: f64) -> u64 {
    (prob * 4_294_967_296.0).round() as u64
}

/// Fault indicators of one run, reproducible from the seed alone.
#[derive(Clone, Debug)]
pub struct FaultTrace {
    seed: u64,
    alpha_cut: u64,
    permanent: Vec<bool>,
}

impl FaultTrace {
    pub fn new(config: &FaultConfig, cells: usize) -> Self {
        let beta_cut = cutoff(config.beta);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(PERMANENT_STREAM);
        let permanent = (0..cells).map(|_| (rng.next_u32() as u64) < beta_cut).collect();
        FaultTrace {
            seed: config.seed,
            alpha_cut: cutoff(config.alpha),
            permanent,
        }
    }

    pub fn cells(&self) -> usize {
        self.permanent.len()
    }

    pub fn permanent(&self) -> &[bool] {
        &self.permanent
    }

    pub fn is_permanent(&self, cell: u32) -> bool {
        self.permanent[cell as usize]
    }

    fn stream(&self, t: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        rng
    }

    /// Transient indicator of one (cell, time) pair.
    pub fn transient(&self, cell: u32, t: u32) -> bool {
        let mut rng = self.stream(t);
        rng.set_word_pos(cell as u128);
        (rng.next_u32() as u64) < self.alpha_cut
    }

    /// Whether the adversary controls `cell` at time t.
    pub fn is_faulty(&self, cell: u32, t: u32) -> bool {
        self.permanent[cell as usize] || self.transient(cell, t)
    }

    /// Cells with a transient fault at time t, ascending.
    pub fn transient_cells(&self, t: u32) -> Vec<u32> {
        if self.alpha_cut == 0 {
            return Vec::new();
        }
        let mut rng = self.stream(t);
        let mut buf = vec![0u32; self.cells()];
        rng.fill(&mut buf[..]);
        buf.iter()
            .enumerate()
            .filter(|(_, &u)| (u as u64) < self.alpha_cut)
            .map(|(c, _)| c as u32)
            .collect()
    }

    /// Full fault mask at time t (permanent or transient).
    pub fn mask(&self, t: u32) -> Vec<bool> {
        let mut m = self.permanent.clone();
        for c in self.transient_cells(t) {
            m[c as usize] = true;
        }
        m
    }
}

/// Fault mask for time t; `trace` must have been built from `config`.
pub fn sample_mask(config: &FaultConfig, trace: &FaultTrace, t: u32) -> Result<Vec<bool>> {
    if config.seed != trace.seed || cutoff(config.alpha) != trace.alpha_cut {
        return Err(Error::InvalidSpec("fault trace was built from a different configuration".into()));
    }
    Ok(trace.mask(t))
}

/// Fault rates of the sped-up process: (eta, zeta) = (xi^lambda, 1 - (1-xi)^(kappa lambda)).
pub fn rate_translation(xi: f64, kappa: u32, lambda: u32) -> Result<(f64, f64)> {
    check_rate_args(xi, kappa, lambda)?;
    let eta = xi.powf(lambda as f64);
    let zeta = -(((kappa as f64) * (lambda as f64)) * (-xi).ln_1p()).exp_m1();
    Ok((eta, zeta))
}

/// Inverse of the zeta map, composed with the eta map: eta as a function of zeta.
pub fn eta_from_zeta(zeta: f64, kappa: u32, lambda: u32) -> Result<f64> {
    check_rate_args(zeta, kappa, lambda)?;
    let xi = -(((-zeta).ln_1p()) / ((kappa as f64) * (lambda as f64))).exp_m1();
    Ok(xi.powf(lambda as f64))
}

fn check_rate_args(x: f64, kappa: u32, lambda: u32) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!("rate {x} outside [0,1]")));
    }
    if kappa == 0 || lambda == 0 {
        return Err(Error::DomainError("kappa and lambda must be positive".into()));
    }
    Ok(())
}

/// Number of cells within dependence distance kappa of the origin, checked to be the same
/// at every vertex whose kappa-ball lies inside the truncation.
pub fn lambda_for(t: &Tessellation, kappa: u32) -> Result<u32> {
    if t.generations_built < kappa {
        return Err(Error::InsufficientMargin(format!(
            "need {kappa} generations, tessellation has {}",
            t.generations_built
        )));
    }
    let lambda = dependence_ball(t, t.origin, kappa).len();
    for v in &t.vertices {
        if v.generation + kappa <= t.generations_built {
            let here = dependence_ball(t, v.id, kappa).len();
            if here != lambda {
                return Err(Error::DomainError(format!(
                    "kappa-ball size {here} at vertex {} differs from {lambda} at the origin",
                    v.id
                )));
            }
        }
    }
    Ok(lambda as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::{build_tessellation, FaceDegree, TessellationSpec};

    #[test]
    fn epsilon_formula() {
        let c = FaultConfig::new(0.1, 0.2, 0).unwrap();
        assert!((epsilon(&c) - 0.28).abs() < 1e-15);
        assert_eq!(epsilon(&FaultConfig::new(0.3, 0.0, 0).unwrap()), 0.3);
        assert_eq!(epsilon(&FaultConfig::new(0.0, 0.4, 0).unwrap()), 0.4);
        assert!(FaultConfig::new(1.0, 0.0, 0).is_err());
    }

    #[test]
    fn extremes() {
        let none = FaultConfig::new(0.0, 0.0, 3).unwrap();
        let tr = FaultTrace::new(&none, 50);
        assert!((0..20).all(|t| tr.mask(t).iter().all(|&b| !b)));
        let all = FaultConfig::new(0.0, 1.0, 3).unwrap();
        let tr = FaultTrace::new(&all, 50);
        assert!(tr.mask(7).iter().all(|&b| b));
    }

    #[test]
    fn pointwise_matches_stream() {
        let c = FaultConfig::new(0.3, 0.0, 99).unwrap();
        let tr = FaultTrace::new(&c, 200);
        for t in [0, 1, 17] {
            let m = sample_mask(&c, &tr, t).unwrap();
            for cell in 0..200 {
                assert_eq!(m[cell as usize], tr.is_faulty(cell, t));
            }
        }
    }

    #[test]
    fn rates() {
        assert_eq!(rate_translation(0.0, 2, 8).unwrap(), (0.0, 0.0));
        assert_eq!(rate_translation(1.0, 2, 8).unwrap(), (1.0, 1.0));
        let (eta, zeta) = rate_translation(0.01, 2, 8).unwrap();
        assert!((eta / 1e-16 - 1.0).abs() < 1e-9);
        assert!((zeta - (1.0 - 0.99f64.powi(16))).abs() < 1e-15);
        assert!((zeta - 0.1485).abs() < 1e-4);
        let back = eta_from_zeta(zeta, 2, 8).unwrap();
        assert!((back / eta - 1.0).abs() < 1e-9);
        assert!(rate_translation(1.5, 2, 8).is_err());
    }

    #[test]
    fn lambda_of_triangle_seven() {
        let t = build_tessellation(&TessellationSpec::new(FaceDegree::Finite(3), 7, 4)).unwrap();
        assert_eq!(lambda_for(&t, 2).unwrap(), 29);
    }
}
