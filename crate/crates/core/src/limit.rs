//! Limit energy on nonnegative measures, its closed-form minimizer, and the
//! bracket for the threshold `λ_c = 2^{-1/3} σ^{2/3} κ² f*`.

use serde::{Deserialize, Serialize};

use crate::droplets::MeasureField;
use crate::energy::{ModelParams, WellPotential};
use crate::error::{Error, Result};
use crate::gamow::f_star_bounds;
use crate::greens::{solve, KernelSpec};
use crate::grid::{grad_norm_integrals, integrate, Field3};

/// `λ_c` for a given optimal per-volume energy `f*`.
pub fn lambda_c_from_f_star(sigma: f64, kappa: f64, f_star: f64) -> f64 {
    2f64.powf(-1.0 / 3.0) * sigma.powf(2.0 / 3.0) * kappa * kappa * f_star
}

/// `λ_c` evaluated at both ends of the `f*` bracket. For the quartic well this
/// is `(3/(4·2^{1/3}), 3/(2·5^{1/3})) ≈ (0.595275, 0.877205)`.
pub fn lambda_c_bracket(well: &WellPotential) -> (f64, f64) {
    let (lo, hi) = f_star_bounds();
    (lambda_c_from_f_star(well.sigma(), well.kappa(), lo), lambda_c_from_f_star(well.sigma(), well.kappa(), hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "choice", content = "value")]
pub enum LambdaCChoice {
    Lower,
    Upper,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub lambda: f64,
    pub ell: f64,
    pub kappa: f64,
    pub lambda_c: f64,
}

impl LimitParams {
    pub fn new(lambda: f64, ell: f64, kappa: f64, lambda_c: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("ell", ell), ("kappa", kappa), ("lambda_c", lambda_c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { lambda, ell, kappa, lambda_c })
    }

    pub fn from_model(p: &ModelParams, choice: LambdaCChoice) -> Result<Self> {
        let (lo, hi) = p.lambda_c_bracket();
        let lambda_c = match choice {
            LambdaCChoice::Lower => lo,
            LambdaCChoice::Upper => hi,
            LambdaCChoice::Value(v) => v,
        };
        Self::new(p.lambda, p.ell, p.kappa(), lambda_c)
    }

    fn kappa2(&self) -> f64 {
        self.kappa * self.kappa
    }

    fn volume(&self) -> f64 {
        self.ell.powi(3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitMinimizer {
    pub mbar: f64,
    pub vbar: f64,
    pub e0min: f64,
}

/// Limit energy of the uniform measure of density `m`:
/// `ℓ³ (λ²/(2κ²) - 2(λ - λ_c)m/κ² + 2m²/κ²)`.
pub fn e0_uniform(m: f64, lp: &LimitParams) -> Result<f64> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::InvalidParameter(format!("density must be nonnegative, got {m}")));
    }
    let k2 = lp.kappa2();
    Ok(lp.volume() * (lp.lambda * lp.lambda / (2.0 * k2) - 2.0 * (lp.lambda - lp.lambda_c) * m / k2 + 2.0 * m * m / k2))
}

/// `λ²ℓ³/(2κ²) - 2(λ - λ_c)∫v + 2∫(|∇v|² + κ²v²)` with `-Δv + κ²v = μ`.
pub fn e0_measure(mu: &MeasureField, lp: &LimitParams) -> Result<f64> {
    let v = solve(&KernelSpec::screened(lp.kappa, mu.density.ell()), &mu.density)?;
    Ok(e0_from_potential(&v, lp))
}

fn e0_from_potential(v: &Field3, lp: &LimitParams) -> f64 {
    let k2 = lp.kappa2();
    let (dirichlet, _) = grad_norm_integrals(v);
    let v2 = integrate(&v.map(|x| x * x).expect("finite"));
    lp.lambda * lp.lambda * lp.volume() / (2.0 * k2) - 2.0 * (lp.lambda - lp.lambda_c) * integrate(v)
        + 2.0 * (dirichlet + k2 * v2)
}

/// Closed-form minimizer: the zero measure for `λ ≤ λ_c`, otherwise the
/// uniform density `(λ - λ_c)/2` with potential `(λ - λ_c)/(2κ²)`.
pub fn minimize_e0(lp: &LimitParams) -> LimitMinimizer {
    let k2 = lp.kappa2();
    if lp.lambda <= lp.lambda_c {
        LimitMinimizer { mbar: 0.0, vbar: 0.0, e0min: lp.lambda * lp.lambda * lp.volume() / (2.0 * k2) }
    } else {
        let mbar = 0.5 * (lp.lambda - lp.lambda_c);
        LimitMinimizer {
            mbar,
            vbar: mbar / k2,
            e0min: lp.lambda_c * (2.0 * lp.lambda - lp.lambda_c) * lp.volume() / (2.0 * k2),
        }
    }
}

/// Limit quantities over the `λ_c` bracket; every comparison downstream uses
/// these intervals rather than a single value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitBand {
    pub lambda: f64,
    pub lambda_c_lower: f64,
    pub lambda_c_upper: f64,
    /// Total limit mass `m̄ ℓ³` range.
    pub mbar_band: (f64, f64),
    pub e0min_band: (f64, f64),
}

pub fn limit_band(lambda: f64, ell: f64, well: &WellPotential) -> Result<LimitBand> {
    let (lo, hi) = lambda_c_bracket(well);
    let at = |lc: f64| LimitParams::new(lambda, ell, well.kappa(), lc).map(|lp| minimize_e0(&lp));
    let (a, b) = (at(lo)?, at(hi)?);
    let vol = ell.powi(3);
    Ok(LimitBand {
        lambda,
        lambda_c_lower: lo,
        lambda_c_upper: hi,
        mbar_band: (b.mbar * vol, a.mbar * vol),
        e0min_band: (a.e0min.min(b.e0min), a.e0min.max(b.e0min)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic_lp(lambda: f64, lambda_c: f64) -> LimitParams {
        LimitParams::new(lambda, 1.0, std::f64::consts::FRAC_1_SQRT_2, lambda_c).unwrap()
    }

    #[test]
    fn bracket_for_quartic() {
        let (lo, hi) = lambda_c_bracket(&WellPotential::quartic());
        assert!((lo - 3.0 / (4.0 * 2f64.cbrt())).abs() < 1e-14);
        assert!((hi - 3.0 / (2.0 * 5f64.cbrt())).abs() < 1e-14);
        assert!(lo < hi);
    }

    #[test]
    fn bracket_homogeneity() {
        let base = WellPotential::quartic();
        let (lo, hi) = lambda_c_bracket(&base);
        let f = f_star_bounds();
        let s2 = lambda_c_from_f_star(2.0 * base.sigma(), base.kappa(), f.0);
        assert!((s2 / lo - 2f64.powf(2.0 / 3.0)).abs() < 1e-14);
        let k2 = lambda_c_from_f_star(base.sigma(), 2.0 * base.kappa(), f.1);
        assert!((k2 / hi - 4.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_energy_values() {
        let lp = quartic_lp(1.0, 0.877205);
        assert!((e0_uniform(0.0, &lp).unwrap() - 1.0).abs() < 1e-15);
        let lp = quartic_lp(2.0, 0.877205);
        let m = minimize_e0(&lp);
        assert!((e0_uniform(m.mbar, &lp).unwrap() - m.e0min).abs() < 1e-14);
        assert!(e0_uniform(-0.1, &lp).is_err());
    }

    #[test]
    fn minimizer_branches() {
        let lc = 3.0 / (2.0 * 5f64.cbrt());
        let below = minimize_e0(&quartic_lp(0.5, lc));
        assert_eq!((below.mbar, below.vbar), (0.0, 0.0));
        assert!((below.e0min - 0.25).abs() < 1e-15);
        let above = minimize_e0(&quartic_lp(2.0, lc));
        assert!((above.mbar - (2.0 - lc) / 2.0).abs() < 1e-15);
        assert!((above.vbar - (2.0 - lc)).abs() < 1e-14);
        assert!((above.e0min - lc * (4.0 - lc)).abs() < 1e-14);
        let at = minimize_e0(&quartic_lp(lc, lc));
        assert!((at.e0min - lc * lc).abs() < 1e-15);
    }

    #[test]
    fn grid_scan_locates_minimizer() {
        let lp = quartic_lp(2.0, 0.877205);
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 0..20000 {
            let m = i as f64 * 1e-4;
            let e = e0_uniform(m, &lp).unwrap();
            if e < best {
                best = e;
                arg = m;
            }
        }
        let exact = minimize_e0(&lp);
        assert!((arg - exact.mbar).abs() <= 1e-4);
        assert!((best - exact.e0min).abs() <= 1e-6);
    }

    #[test]
    fn threshold_kink() {
        let lc = 0.7;
        let e = |l: f64| minimize_e0(&quartic_lp(l, lc)).e0min;
        let d = 1e-6;
        assert!((e(lc - 1e-13) - e(lc + 1e-13)).abs() < 1e-12);
        let left = (e(lc) - e(lc - d)) / d;
        let right = (e(lc + d) - e(lc)) / d;
        // left derivative λℓ³/κ², right derivative λ_c ℓ³/κ²: equal here, the
        // kink shows in the second derivative
        assert!((left - 2.0 * lc).abs() < 1e-5 && (right - 2.0 * lc).abs() < 1e-5);
        let second_left = (e(lc) - 2.0 * e(lc - d) + e(lc - 2.0 * d)) / (d * d);
        let second_right = (e(lc + 2.0 * d) - 2.0 * e(lc + d) + e(lc)) / (d * d);
        assert!((second_left - 2.0).abs() < 1e-2 && second_right.abs() < 1e-2);
    }

    #[test]
    fn measure_form_matches_uniform() {
        let lp = quartic_lp(2.0, 0.877205);
        for m in [0.0, 0.3, 0.56] {
            let mu = MeasureField::new(Field3::constant(8, 1.0, m).unwrap()).unwrap();
            let a = e0_measure(&mu, &lp).unwrap();
            assert!((a - e0_uniform(m, &lp).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn band_for_lambda_two() {
        let b = limit_band(2.0, 1.0, &WellPotential::quartic()).unwrap();
        assert!(b.mbar_band.0 < b.mbar_band.1);
        assert!((b.mbar_band.0 - (2.0 - b.lambda_c_upper) / 2.0).abs() < 1e-15);
        assert!(b.e0min_band.0 < b.e0min_band.1);
    }
}
