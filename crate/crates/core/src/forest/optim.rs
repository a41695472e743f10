//! Flat-parameter optimizers: SGD, Adam and quasi-hyperbolic Adam.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    QhAdam,
}

impl OptimizerKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            "qhadam" => Ok(Self::QhAdam),
            other => Err(Error::config(format!("unknown optimizer '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Adam => "adam",
            Self::QhAdam => "qhadam",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig<S> {
    pub kind: OptimizerKind,
    pub learning_rate: S,
    pub beta1: S,
    pub beta2: S,
    /// Immediate-gradient mixing weights; both 1 reduce QHAdam to Adam.
    pub nu1: S,
    pub nu2: S,
    pub epsilon: S,
}

impl<S: Scalar> Default for OptimConfig<S> {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::QhAdam,
            learning_rate: cast(1e-3),
            beta1: cast(0.995),
            beta2: cast(0.999),
            nu1: cast(0.7),
            nu2: S::one(),
            epsilon: cast(1e-8),
        }
    }
}

impl<S: Scalar> OptimConfig<S> {
    pub fn sgd(learning_rate: S) -> Self {
        Self { kind: OptimizerKind::Sgd, learning_rate, ..Self::default() }
    }

    pub fn adam(learning_rate: S) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate,
            beta1: cast(0.9),
            beta2: cast(0.999),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < S::zero() {
            return Err(Error::argument("learning rate must be non-negative"));
        }
        Ok(())
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState<S> {
    t: u64,
    m: Vec<S>,
    v: Vec<S>,
}

impl<S: Scalar> OptimState<S> {
    pub fn new(n_params: usize) -> Self {
        Self { t: 0, m: vec![S::zero(); n_params], v: vec![S::zero(); n_params] }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One parameter update from a gradient; moments persist across calls.
pub fn optimizer_step<S: Scalar>(
    params: &mut [S],
    grads: &[S],
    state: &mut OptimState<S>,
    cfg: &OptimConfig<S>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::argument(format!(
            "shape mismatch: {} params, {} gradients, {} state entries",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let lr = cfg.learning_rate;
    match cfg.kind {
        OptimizerKind::Sgd => {
            for (p, &g) in params.iter_mut().zip(grads) {
                *p = *p - lr * g;
            }
        }
        OptimizerKind::Adam | OptimizerKind::QhAdam => {
            let one = S::one();
            let t = state.t as i32;
            let bc1 = one - cfg.beta1.powi(t);
            let bc2 = one - cfg.beta2.powi(t);
            let quasi = cfg.kind == OptimizerKind::QhAdam;
            for ((p, &g), (m, v)) in params
                .iter_mut()
                .zip(grads)
                .zip(state.m.iter_mut().zip(state.v.iter_mut()))
            {
                *m = cfg.beta1 * *m + (one - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (one - cfg.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                let (num, den) = if quasi {
                    (
                        (one - cfg.nu1) * g + cfg.nu1 * m_hat,
                        ((one - cfg.nu2) * g * g + cfg.nu2 * v_hat).sqrt(),
                    )
                } else {
                    (m_hat, v_hat.sqrt())
                };
                *p = *p - lr * num / (den + cfg.epsilon);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_is_identity() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::QhAdam] {
            let cfg = OptimConfig { kind, learning_rate: 0.0, ..OptimConfig::<f64>::default() };
            let mut p = vec![1.5, -0.25, 3.0];
            let mut st = OptimState::new(3);
            optimizer_step(&mut p, &[1.0, -2.0, 0.5], &mut st, &cfg).unwrap();
            assert_eq!(p, vec![1.5, -0.25, 3.0]);
        }
    }

    #[test]
    fn sgd_hand_example() {
        let cfg = OptimConfig::sgd(0.1);
        let mut p = vec![1.0f64];
        let mut st = OptimState::new(1);
        optimizer_step(&mut p, &[2.0], &mut st, &cfg).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn qhadam_with_unit_nus_is_adam() {
        let adam_cfg = OptimConfig::<f64>::adam(0.05);
        let qh_cfg = OptimConfig { kind: OptimizerKind::QhAdam, nu1: 1.0, nu2: 1.0, ..adam_cfg.clone() };
        let mut pa = vec![0.7, -1.1, 2.0];
        let mut pq = pa.clone();
        let mut sa = OptimState::new(3);
        let mut sq = OptimState::new(3);
        // scripted gradient sequence
        for t in 0..10 {
            let g: Vec<f64> = (0..3).map(|i| ((t * 3 + i) as f64 * 0.37).sin() * 2.0).collect();
            optimizer_step(&mut pa, &g, &mut sa, &adam_cfg).unwrap();
            optimizer_step(&mut pq, &g, &mut sq, &qh_cfg).unwrap();
            for (a, q) in pa.iter().zip(&pq) {
                assert!((a - q).abs() <= 1e-12, "step {t}: {a} vs {q}");
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let cfg = OptimConfig::<f64>::default();
        let mut p = vec![1.0, 2.0];
        let mut st = OptimState::new(2);
        assert!(optimizer_step(&mut p, &[1.0], &mut st, &cfg).is_err());
        let mut st3 = OptimState::new(3);
        assert!(optimizer_step(&mut p, &[1.0, 2.0], &mut st3, &cfg).is_err());
    }

    #[test]
    fn moments_carry_across_calls() {
        let cfg = OptimConfig::<f64>::adam(0.1);
        let mut p = vec![0.0f64];
        let mut st = OptimState::new(1);
        optimizer_step(&mut p, &[1.0], &mut st, &cfg).unwrap();
        let after_one = p[0];
        optimizer_step(&mut p, &[1.0], &mut st, &cfg).unwrap();
        assert_eq!(st.step_count(), 2);
        // constant gradient keeps moving the parameter the same way
        assert!(p[0] < after_one && after_one < 0.0);
    }
}
