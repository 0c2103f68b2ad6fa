//! Power of the constrained test against the standard two-sided test.
//!
//! The scalar case uses one observation `α̃ ~ N(α*, 1)`: the constrained test
//! rejects when `α̃ > τ₂ = Φ⁻¹(1−γ)`, the standard test when
//! `|α̃| > τ₁ = Φ⁻¹(1−γ/2)`.

use alloc::format;
use alloc::vec::Vec;

use crate::chibar::{self, ChiBarDist};
use crate::error::{Error, Result};
use crate::rng;
use crate::special::{norm_cdf, norm_quantile, norm_sf};

/// Default margin grid.
pub const DEFAULT_MARGINS: [f64; 7] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0];

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::input(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// `(τ₁, τ₂)`: two-sided and one-sided normal critical values.
pub fn thresholds(gamma: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    Ok((norm_quantile(1.0 - gamma / 2.0), norm_quantile(1.0 - gamma)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPower {
    pub constrained: f64,
    pub standard: f64,
    /// `f(α*) = constrained − standard`.
    pub gap: f64,
}

/// Analytic power of both tests at `α*`.
pub fn power_scalar(alpha_star: f64, gamma: f64) -> Result<ScalarPower> {
    if !alpha_star.is_finite() {
        return Err(Error::input("alpha* must be finite"));
    }
    check_gamma(gamma)?;
    if alpha_star == 0.0 {
        // Both tests have size γ at the null by construction.
        return Ok(ScalarPower {
            constrained: gamma,
            standard: gamma,
            gap: 0.0,
        });
    }
    let (t1, t2) = thresholds(gamma)?;
    let constrained = norm_sf(t2 - alpha_star);
    let standard = norm_sf(t1 - alpha_star) + norm_cdf(-t1 - alpha_star);
    Ok(ScalarPower {
        constrained,
        standard,
        gap: gap(alpha_star, gamma)?,
    })
}

/// `f(α*) = Φ(τ₁ − α*) − Φ(τ₂ − α*) − Φ(−τ₁ − α*)`, evaluated without
/// cancellation between the two large terms.
pub fn gap(alpha_star: f64, gamma: f64) -> Result<f64> {
    let (t1, t2) = thresholds(gamma)?;
    // Φ(τ₁ − a) − Φ(τ₂ − a) as the normal mass on (τ₂ − a, τ₁ − a].
    let (lo, hi) = (t2 - alpha_star, t1 - alpha_star);
    let band = if lo >= 0.0 {
        norm_sf(lo) - norm_sf(hi)
    } else {
        norm_cdf(hi) - norm_cdf(lo)
    };
    Ok(band - norm_cdf(-t1 - alpha_star))
}

/// Rejection frequencies on a grid of `α₁*`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub alphas: Vec<f64>,
    pub power_constrained: Vec<f64>,
    pub power_standard: Vec<f64>,
    pub gamma: f64,
    /// Monte Carlo draws per grid point; zero for the analytic curve.
    pub samples: usize,
}

impl PowerCurve {
    /// Binomial standard error of a rate at this sample size.
    pub fn std_error(&self, rate: f64) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            libm::sqrt(rate * (1.0 - rate) / self.samples as f64)
        }
    }
}

/// Analytic scalar power on a grid.
pub fn power_curve_scalar(alphas: &[f64], gamma: f64) -> Result<PowerCurve> {
    let mut pc = Vec::with_capacity(alphas.len());
    let mut ps = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let p = power_scalar(a, gamma)?;
        pc.push(p.constrained);
        ps.push(p.standard);
    }
    Ok(PowerCurve {
        alphas: alphas.to_vec(),
        power_constrained: pc,
        power_standard: ps,
        gamma,
        samples: 0,
    })
}

/// Monte Carlo power with `α̃ ~ N((α₁*, 0, …, 0), I_d)`: the constrained test
/// uses `Σ max(α̃ᵢ, 0)²` against binomial χ̄² weights, the standard test
/// `‖α̃‖²` against `χ²_d`. Grid point `g` draws from sub-stream `(seed, g)`.
pub fn power_vector_mc(d: usize, alpha1_grid: &[f64], gamma: f64, n_mc: usize, seed: u64) -> Result<PowerCurve> {
    if d == 0 {
        return Err(Error::input("dimension must be at least 1"));
    }
    if n_mc == 0 {
        return Err(Error::input("Monte Carlo sample size must be positive"));
    }
    check_gamma(gamma)?;
    let bar = ChiBarDist::new(chibar::binomial_weights(d), "orthant, V = I")?;
    let c_bar = chibar::critical_value(&bar, gamma)?;
    let mut w = alloc::vec![0.0; d + 1];
    w[d] = 1.0;
    let c_std = chibar::critical_value(&ChiBarDist::new(w, "chi-squared")?, gamma)?;

    let mut pc = Vec::with_capacity(alpha1_grid.len());
    let mut ps = Vec::with_capacity(alpha1_grid.len());
    for (g, &a1) in alpha1_grid.iter().enumerate() {
        if !a1.is_finite() {
            return Err(Error::input("grid values must be finite"));
        }
        let mut stream = rng::stream_at(seed, g as u64);
        let (mut hits_c, mut hits_s) = (0usize, 0usize);
        for _ in 0..n_mc {
            let (mut t_bar, mut t_std) = (0.0, 0.0);
            for i in 0..d {
                let z = rng::std_normal(&mut stream) + if i == 0 { a1 } else { 0.0 };
                t_std += z * z;
                if z > 0.0 {
                    t_bar += z * z;
                }
            }
            hits_c += (t_bar >= c_bar) as usize;
            hits_s += (t_std >= c_std) as usize;
        }
        pc.push(hits_c as f64 / n_mc as f64);
        ps.push(hits_s as f64 / n_mc as f64);
    }
    Ok(PowerCurve {
        alphas: alpha1_grid.to_vec(),
        power_constrained: pc,
        power_standard: ps,
        gamma,
        samples: n_mc,
    })
}
