//! Parameter settings and regret bounds for the perturbed-leader policies.

use crate::error::{Error, Result};

fn check_domain(horizon: usize, n_arms: usize, budget: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::param("horizon T must be at least 1"));
    }
    if n_arms < 2 {
        return Err(Error::param(format!("need at least 2 arms, got {n_arms}")));
    }
    if budget == 0 || budget > n_arms {
        return Err(Error::BudgetOutOfRange { budget, n_arms });
    }
    Ok(())
}

/// `((ln N + 1) / T)^(1/(B+1))`, the full-feedback perturbation rate.
pub fn theoretical_epsilon_full(horizon: usize, n_arms: usize, budget: usize) -> Result<f64> {
    check_domain(horizon, n_arms, budget)?;
    Ok(epsilon_full_raw(horizon as f64, n_arms as f64, budget))
}

fn epsilon_full_raw(horizon: f64, n_arms: f64, budget: usize) -> f64 {
    ((n_arms.ln() + 1.0) / horizon).powf(1.0 / (budget as f64 + 1.0))
}

/// `2 T^(1/(B+1)) (1 + ln N)^(B/(B+1))`.
pub fn theoretical_regret_bound_full(horizon: usize, n_arms: usize, budget: usize) -> Result<f64> {
    check_domain(horizon, n_arms, budget)?;
    let b = budget as f64;
    Ok(2.0
        * (horizon as f64).powf(1.0 / (b + 1.0))
        * (1.0 + (n_arms as f64).ln()).powf(b / (b + 1.0)))
}

/// `(ln N / (T K^B))^(1/(B+1))` for estimates bounded by `K`.
pub fn theoretical_epsilon_partial(
    horizon: usize,
    n_arms: usize,
    budget: usize,
    bound_k: f64,
) -> Result<f64> {
    check_domain(horizon, n_arms, budget)?;
    if !(bound_k > 0.0) {
        return Err(Error::OutOfRange {
            what: "K",
            value: bound_k,
            range: "(0, inf)",
        });
    }
    let b = budget as f64;
    Ok(((n_arms as f64).ln() / (horizon as f64 * bound_k.powf(b))).powf(1.0 / (b + 1.0)))
}

fn check_resampling(n_arms: usize, horizon: usize, box_budget: usize) -> Result<()> {
    if n_arms < 2 {
        return Err(Error::param(format!("need at least 2 arms, got {n_arms}")));
    }
    if horizon == 0 {
        return Err(Error::param("horizon T must be at least 1"));
    }
    if box_budget == 0 {
        return Err(Error::param("box budget must be at least 1"));
    }
    Ok(())
}

/// Geometric-resampling cap `M = ceil((N (T N / ln N)^B)^(1/(2B+1)))`.
pub fn resampling_cap(n_arms: usize, horizon: usize, box_budget: usize) -> Result<u32> {
    check_resampling(n_arms, horizon, box_budget)?;
    let (n, t, b) = (n_arms as f64, horizon as f64, box_budget as f64);
    let m = (n * (t * n / n.ln()).powf(b)).powf(1.0 / (2.0 * b + 1.0));
    Ok(m.ceil().max(1.0) as u32)
}

/// Perturbation rate paired with [`resampling_cap`]:
/// `((ln N / T) (ln N / (T N))^B)^(1/(2B+1))`.
pub fn resampling_epsilon(n_arms: usize, horizon: usize, box_budget: usize) -> Result<f64> {
    check_resampling(n_arms, horizon, box_budget)?;
    let (n, t, b) = (n_arms as f64, horizon as f64, box_budget as f64);
    Ok(((n.ln() / t) * (n.ln() / (t * n)).powf(b)).powf(1.0 / (2.0 * b + 1.0)))
}

/// Hedge learning rate `sqrt(ln N / T)`.
pub fn default_hedge_rate(n_arms: usize, horizon: usize) -> f64 {
    ((n_arms.max(2) as f64).ln() / horizon.max(1) as f64).sqrt()
}

/// Exp3 exploration `min(1, sqrt(N ln N / ((e - 1) T)))`.
pub fn default_exp3_gamma(n_arms: usize, horizon: usize) -> f64 {
    let n = n_arms.max(2) as f64;
    (n * n.ln() / ((std::f64::consts::E - 1.0) * horizon.max(1) as f64))
        .sqrt()
        .min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn epsilon_full_values() {
        // sqrt((ln 9 + 1) / 368)
        assert!(close(theoretical_epsilon_full(368, 9, 1).unwrap(), 0.093210, 1e-5));
        // cube root of (ln 16 + 1) / 1000
        assert!(close(theoretical_epsilon_full(1000, 16, 2).unwrap(), 0.155673, 1e-5));
        let t = 3.0_f64.ln() + 1.0;
        assert!(close(epsilon_full_raw(t, 3.0, 2), 1.0, 1e-12));
        assert!(theoretical_epsilon_full(0, 9, 1).is_err());
        assert!(theoretical_epsilon_full(10, 1, 1).is_err());
        assert!(theoretical_epsilon_full(10, 4, 5).is_err());
    }

    #[test]
    fn regret_bound_values() {
        assert!(close(theoretical_regret_bound_full(1000, 16, 2).unwrap(), 48.468, 1e-3));
        assert!(close(theoretical_regret_bound_full(100, 2, 1).unwrap(), 26.025, 1e-3));
        let n = 7usize;
        let expect = 2.0 * (1.0 + (n as f64).ln()).powf(3.0 / 4.0);
        assert!(close(theoretical_regret_bound_full(1, n, 3).unwrap(), expect, 1e-12));
    }

    #[test]
    fn epsilon_partial_values() {
        assert!(close(theoretical_epsilon_partial(1000, 10, 2, 5.0).unwrap(), 0.045160, 1e-5));
        assert!(close(theoretical_epsilon_partial(368, 9, 1, 1.0).unwrap(), 0.077271, 1e-5));
        assert!(theoretical_epsilon_partial(368, 9, 1, 0.0).is_err());
    }

    #[test]
    fn resampling_values() {
        assert_eq!(resampling_cap(9, 368, 1).unwrap(), 24);
        // ((ln 9 / 368) (ln 9 / 3312))^(1/3)
        assert!(close(resampling_epsilon(9, 368, 1).unwrap(), 0.015822, 1e-5));
        assert!(resampling_cap(1, 368, 1).is_err());
        assert!(resampling_epsilon(9, 0, 1).is_err());
    }

    #[test]
    fn default_rates() {
        assert!(close(default_hedge_rate(16, 1000), (16f64.ln() / 1000.0).sqrt(), 1e-15));
        assert_eq!(default_exp3_gamma(16, 1), 1.0);
        assert!(default_exp3_gamma(4, 1000) < 1.0);
    }
}
