//! Coherent-state (linear Langevin) dynamics of a single driven node under a
//! constant two-photon drive.
//!
//! With the node starting in a small coherent state `α0` on the qubit and an
//! empty cavity, and no input field, the amplitudes stay coherent and follow
//!
//! ```text
//! α(t) = α0 e^{-γt/4} (cosh(λt/4) + (γ/λ) sinh(λt/4))
//! β(t) = -4i g* α0 / λ · e^{-γt/4} sinh(λt/4)
//! ```
//!
//! with `γ = κ + 2iδ` and `λ = sqrt(γ² − 16|g|²)`. For a single excitation the
//! same amplitudes are exact, so `|α(t)/α0|²` is the two-photon Rabi
//! population of the initially excited level.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Below this value of `|λ| t` the series limit replaces the hyperbolic
/// functions.
pub const SERIES_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemiclassicalError {
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("time grid must be ascending (t[{index}] = {value} after {previous})")]
    NotAscending { index: usize, value: f64, previous: f64 },
}

/// Constant-drive parameters with the derived complex rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiParams {
    g: C64,
    kappa: f64,
    delta: f64,
    gamma: C64,
    lambda: C64,
}

impl RabiParams {
    pub fn new(g: C64, kappa: f64, delta: f64) -> Self {
        let gamma = C64::new(kappa, 2.0 * delta);
        // Principal root: Re(λ) ≥ 0.
        let lambda = (gamma * gamma - 16.0 * g.norm_sqr()).sqrt();
        Self { g, kappa, delta, gamma, lambda }
    }

    pub fn real(g: f64, kappa: f64, delta: f64) -> Self {
        Self::new(C64::new(g, 0.0), kappa, delta)
    }

    pub fn g(&self) -> C64 {
        self.g
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    /// `f(t)` such that `α(t) = α0 f(t)`.
    fn qubit_factor(&self, t: f64) -> C64 {
        qubit_factor_with(self.gamma, self.lambda, t, (self.lambda.norm() * t) < SERIES_THRESHOLD)
    }

    /// `β(t)/α0`.
    fn cavity_factor(&self, t: f64) -> C64 {
        let z = self.lambda * (t / 4.0);
        let use_series = self.lambda.norm() * t < SERIES_THRESHOLD;
        // -4i g*/λ sinh(λt/4) = -i g* t sinhc(z)
        C64::new(0.0, -1.0) * self.g.conj() * t * sinhc(z, use_series) * (-self.gamma * (t / 4.0)).exp()
    }
}

/// sinh(z)/z, with its second-order series when `series` is set.
fn sinhc(z: C64, series: bool) -> C64 {
    if series || z.norm() == 0.0 {
        1.0 + z * z / 6.0
    } else {
        z.sinh() / z
    }
}

fn cosh_c(z: C64, series: bool) -> C64 {
    if series {
        1.0 + z * z / 2.0
    } else {
        z.cosh()
    }
}

fn qubit_factor_with(gamma: C64, lambda: C64, t: f64, series: bool) -> C64 {
    let z = lambda * (t / 4.0);
    let bracket = cosh_c(z, series) + gamma * (t / 4.0) * sinhc(z, series);
    (-gamma * (t / 4.0)).exp() * bracket
}

/// Population of the initially excited level after driving for `t` µs.
pub fn rabi_excited_population(rp: &RabiParams, t: f64) -> Result<f64, SemiclassicalError> {
    if t < 0.0 {
        return Err(SemiclassicalError::NegativeTime(t));
    }
    Ok(rp.qubit_factor(t).norm_sqr())
}

/// Qubit (`alpha`) and cavity (`beta`) coherent amplitudes at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentAmplitudes {
    pub alpha: C64,
    pub beta: C64,
}

pub fn coherent_trajectory(
    rp: &RabiParams,
    alpha0: C64,
    t_grid: &[f64],
) -> Result<Vec<CoherentAmplitudes>, SemiclassicalError> {
    let mut previous = f64::NEG_INFINITY;
    for (index, &t) in t_grid.iter().enumerate() {
        if t < 0.0 {
            return Err(SemiclassicalError::NegativeTime(t));
        }
        if t < previous {
            return Err(SemiclassicalError::NotAscending { index, value: t, previous });
        }
        previous = t;
    }
    Ok(t_grid
        .iter()
        .map(|&t| CoherentAmplitudes { alpha: alpha0 * rp.qubit_factor(t), beta: alpha0 * rp.cavity_factor(t) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::from_mhz;
    use proptest::prelude::*;

    const KAPPA: f64 = std::f64::consts::TAU;

    #[test]
    fn undriven_population_stays_one() {
        for delta in [0.0, 1.3, -4.0] {
            let rp = RabiParams::real(0.0, KAPPA, delta);
            for t in [0.0, 0.1, 1.0, 7.5, 40.0] {
                assert!((rabi_excited_population(&rp, t).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn population_starts_at_one() {
        let rp = RabiParams::real(from_mhz(0.7), KAPPA, 0.4);
        assert_eq!(rabi_excited_population(&rp, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_time_rejected() {
        let rp = RabiParams::real(1.0, KAPPA, 0.0);
        assert_eq!(rabi_excited_population(&rp, -1.0), Err(SemiclassicalError::NegativeTime(-1.0)));
        assert!(coherent_trajectory(&rp, C64::new(1.0, 0.0), &[0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn critical_point_uses_series_limit() {
        let rp = RabiParams::real(KAPPA / 4.0, KAPPA, 0.0);
        assert_eq!(rp.lambda().norm(), 0.0);
        let t = 4.0 / KAPPA;
        let p = rabi_excited_population(&rp, t).unwrap();
        // e^{-κt/2} (1 + κt/4)² at κt = 4
        let oracle = (-2.0f64).exp() * 4.0;
        assert!((p - oracle).abs() < 1e-14, "{p} vs {oracle}");
        assert!((p - 0.5413).abs() < 1e-4);
        for t in [0.1, 0.5, 2.0] {
            let p = rabi_excited_population(&rp, t).unwrap();
            let oracle = (-KAPPA * t / 2.0).exp() * (1.0 + KAPPA * t / 4.0).powi(2);
            assert!((p - oracle).abs() < 1e-13);
        }
    }

    #[test]
    fn series_switch_is_continuous() {
        let gamma = C64::new(KAPPA, 0.8);
        for &mag in &[0.3, 2.0, 17.0] {
            for phase in [0.0, 0.7, 2.1] {
                let lambda_t = SERIES_THRESHOLD;
                let t = mag;
                let lambda = C64::from_polar(lambda_t / t, phase);
                let series = qubit_factor_with(gamma, lambda, t, true);
                let exact = qubit_factor_with(gamma, lambda, t, false);
                assert!((series.norm_sqr() - exact.norm_sqr()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_amplitude_is_a_fixed_point() {
        let rp = RabiParams::real(2.0, KAPPA, 0.5);
        let traj = coherent_trajectory(&rp, C64::new(0.0, 0.0), &[0.0, 0.5, 3.0]).unwrap();
        assert!(traj.iter().all(|a| a.alpha.norm() == 0.0 && a.beta.norm() == 0.0));
    }

    #[test]
    fn cavity_starts_empty() {
        let rp = RabiParams::real(2.0, KAPPA, 0.5);
        let traj = coherent_trajectory(&rp, C64::new(0.3, 0.1), &[0.0]).unwrap();
        assert_eq!(traj[0].beta.norm(), 0.0);
    }

    /// |α|² + |β|² + κ ∫|β|² = |α0|², integrated by the trapezoid rule.
    fn energy_balance_error(rp: &RabiParams, alpha0: C64, t_end: f64, steps: usize) -> f64 {
        let grid: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        let traj = coherent_trajectory(rp, alpha0, &grid).unwrap();
        let dt = t_end / steps as f64;
        let mut leaked = 0.0;
        let mut worst = 0.0f64;
        for i in 0..traj.len() {
            if i > 0 {
                leaked += 0.5 * dt * rp.kappa() * (traj[i].beta.norm_sqr() + traj[i - 1].beta.norm_sqr());
            }
            let total = traj[i].alpha.norm_sqr() + traj[i].beta.norm_sqr() + leaked;
            worst = worst.max((total - alpha0.norm_sqr()).abs());
            // monotone envelope: excitation only leaks out
            assert!(traj[i].alpha.norm_sqr() + traj[i].beta.norm_sqr() <= alpha0.norm_sqr() + 1e-12);
        }
        worst
    }

    #[test]
    fn excitation_is_conserved_with_leakage() {
        for (g, delta) in [(0.3, 0.0), (KAPPA / 4.0, 0.0), (5.0, 2.0), (1.1, -3.0)] {
            let rp = RabiParams::real(g, KAPPA, delta);
            let err = energy_balance_error(&rp, C64::new(0.8, -0.2), 4.0, 40_000);
            assert!(err < 1e-8, "g={g} delta={delta}: {err}");
        }
    }

    #[test]
    fn trajectory_matches_langevin_rk4() {
        // Independent route: integrate ċ = -iδc - i g* q - κ/2 c, q̇ = -i g c.
        let g = C64::new(1.7, 0.9);
        let (kappa, delta) = (KAPPA, 1.4);
        let rp = RabiParams::new(g, kappa, delta);
        let rhs = |q: C64, c: C64| {
            let dq = C64::new(0.0, -1.0) * g * c;
            let dc = C64::new(0.0, -delta) * c - C64::new(0.0, 1.0) * g.conj() * q - 0.5 * kappa * c;
            (dq, dc)
        };
        let (mut q, mut c) = (C64::new(0.5, 0.2), C64::new(0.0, 0.0));
        let alpha0 = q;
        let dt = 1e-4;
        let steps = 20_000;
        for _ in 0..steps {
            let (k1q, k1c) = rhs(q, c);
            let (k2q, k2c) = rhs(q + k1q * (dt / 2.0), c + k1c * (dt / 2.0));
            let (k3q, k3c) = rhs(q + k2q * (dt / 2.0), c + k2c * (dt / 2.0));
            let (k4q, k4c) = rhs(q + k3q * dt, c + k3c * dt);
            q += (k1q + 2.0 * k2q + 2.0 * k3q + k4q) * (dt / 6.0);
            c += (k1c + 2.0 * k2c + 2.0 * k3c + k4c) * (dt / 6.0);
        }
        let t = dt * steps as f64;
        let amp = coherent_trajectory(&rp, alpha0, &[t]).unwrap()[0];
        assert!((amp.alpha - q).norm() < 1e-10);
        assert!((amp.beta - c).norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn population_agrees_with_trajectory(g in 0.0f64..20.0, delta in -10.0f64..10.0, t in 0.0f64..5.0) {
            let rp = RabiParams::real(g, KAPPA, delta);
            let alpha0 = C64::new(0.6, 0.3);
            let amp = coherent_trajectory(&rp, alpha0, &[t]).unwrap()[0];
            let p = rabi_excited_population(&rp, t).unwrap();
            prop_assert!((p - (amp.alpha / alpha0).norm_sqr()).abs() < 1e-13);
        }

        #[test]
        fn lambda_branch_does_not_matter(g in 0.0f64..20.0, delta in -10.0f64..10.0, t in 0.0f64..5.0) {
            let rp = RabiParams::real(g, KAPPA, delta);
            prop_assume!(rp.lambda().norm() * t > SERIES_THRESHOLD);
            prop_assert!(rp.lambda().re >= 0.0);
            let a = qubit_factor_with(rp.gamma(), rp.lambda(), t, false);
            let b = qubit_factor_with(rp.gamma(), -rp.lambda(), t, false);
            prop_assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
        }
    }
}
