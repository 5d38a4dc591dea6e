//! Periodic ball arrays: explicit competitors for the sharp energy and
//! droplet-shaped initial data for the flow.

use serde::{Deserialize, Serialize};

use crate::energy::{sharp_energy_with, EnergyReport, ModelParams, PerimeterEstimator};
use crate::error::{Error, Result};
use crate::gamow::optimal_ball;
use crate::grid::Field3;
use crate::limit::{limit_band, LimitBand};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum RadiusSpec {
    Physical(f64),
    /// Radius on the rescaled torus; physical radius is `R (σε/4)^{1/3}`.
    Rescaled(f64),
    /// The optimal liquid-drop ball `R* = (15/2)^{1/3}`.
    Optimal,
    /// Equal balls whose total measure mass `ε^{-2/3}|balls|` equals the limit
    /// mass `½(λ - λ_c)ℓ³` at the upper end of the `λ_c` bracket.
    MassMatched,
}

/// Physical radius of each of `count` balls.
pub fn resolve_radius(spec: &RadiusSpec, p: &ModelParams, count: usize) -> Result<f64> {
    let to_physical = |r: f64| r / p.rescale_factor();
    let r = match *spec {
        RadiusSpec::Physical(r) => r,
        RadiusSpec::Rescaled(r) => to_physical(r),
        RadiusSpec::Optimal => to_physical(optimal_ball().0),
        RadiusSpec::MassMatched => {
            let (_, hi) = p.lambda_c_bracket();
            if p.lambda <= hi {
                return Err(Error::InvalidParameter(format!(
                    "mass-matched balls need lambda above {hi}, got {}",
                    p.lambda
                )));
            }
            if count == 0 {
                return Err(Error::InvalidParameter("mass-matched radius needs at least one ball".into()));
            }
            let mass = 0.5 * (p.lambda - hi) * p.ell.powi(3);
            let volume = mass * p.eps.powf(2.0 / 3.0) / count as f64;
            (volume * 3.0 / (4.0 * std::f64::consts::PI)).cbrt()
        }
    };
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
    }
    Ok(r)
}

/// First `count` sites, in x-fastest order, of the cell-centered cubic lattice
/// with `ceil(count^{1/3})` sites per axis.
pub fn ball_centers(count: usize, ell: f64) -> Result<Vec<[f64; 3]>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut k = (count as f64).cbrt().round() as usize;
    while k * k * k < count {
        k += 1;
    }
    let step = ell / k as f64;
    let site = |i: usize| (i as f64 + 0.5) * step;
    Ok((0..count).map(|m| [site(m % k), site((m / k) % k), site(m / (k * k))]).collect())
}

fn periodic_dist(a: [f64; 3], b: [f64; 3], ell: f64) -> f64 {
    (0..3)
        .map(|d| {
            let t = (a[d] - b[d]).rem_euclid(ell);
            t.min(ell - t).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Rejects overlapping or touching balls and balls too small for the grid.
/// Gaps must exceed two cells so the discrete balls stay separate components.
pub fn check_ball_layout(n: usize, ell: f64, centers: &[[f64; 3]], r: f64) -> Result<()> {
    let h = ell / n as f64;
    if r < 2.0 * h {
        return Err(Error::UnderResolved(format!("ball radius {r} below two grid cells ({})", 2.0 * h)));
    }
    if 2.0 * r + 2.0 * h >= ell {
        return Err(Error::Overlap(format!("ball of radius {r} wraps onto itself on a torus of side {ell}")));
    }
    for (i, a) in centers.iter().enumerate() {
        for b in &centers[i + 1..] {
            let d = periodic_dist(*a, *b, ell);
            if d <= 2.0 * r + 2.0 * h {
                return Err(Error::Overlap(format!("centers {d:.6} apart, need more than {:.6}", 2.0 * r + 2.0 * h)));
            }
        }
    }
    Ok(())
}

fn nearest(x: [f64; 3], centers: &[[f64; 3]], ell: f64) -> f64 {
    centers.iter().map(|c| periodic_dist(x, *c, ell)).fold(f64::INFINITY, f64::min)
}

/// Indicator of the union of balls, sampled at grid points.
pub fn ball_indicator(n: usize, ell: f64, centers: &[[f64; 3]], r: f64) -> Result<Field3> {
    Field3::from_fn(n, ell, |x| if nearest(x, centers, ell) <= r { 1.0 } else { 0.0 })
}

/// Diffuse balls `tanh((r - d)/(√2 ε))` in `[-1, 1]`; mean not adjusted.
pub fn diffuse_balls(n: usize, p: &ModelParams, centers: &[[f64; 3]], r: f64) -> Result<Field3> {
    check_ball_layout(n, p.ell, centers, r)?;
    let w = std::f64::consts::SQRT_2 * p.eps;
    Field3::from_fn(n, p.ell, |x| ((r - nearest(x, centers, p.ell)) / w).tanh())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallArray {
    #[serde(skip)]
    pub chi: Option<Field3>,
    pub count: usize,
    pub centers: Vec<[f64; 3]>,
    pub radius: f64,
    pub rescaled_radius: f64,
    /// Nominal measure mass `ε^{-2/3} · count · 4πr³/3`.
    pub measure_mass: f64,
    pub report: EnergyReport,
    pub band: LimitBand,
}

/// `count` equal balls on a (possibly partially filled) cubic lattice with
/// their sharp energy and the limit band for comparison.
pub fn ball_array(p: &ModelParams, n: usize, count: usize, radius: &RadiusSpec, estimator: PerimeterEstimator) -> Result<BallArray> {
    if count == 0 {
        return Err(Error::InvalidParameter("ball array needs at least one ball".into()));
    }
    let r = resolve_radius(radius, p, count)?;
    let centers = ball_centers(count, p.ell)?;
    check_ball_layout(n, p.ell, &centers, r)?;
    let chi = ball_indicator(n, p.ell, &centers, r)?;
    let report = sharp_energy_with(&chi, p, None, estimator)?;
    let band = limit_band(p.lambda, p.ell, &p.well)?;
    let measure_mass = p.eps.powf(-2.0 / 3.0) * count as f64 * 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    Ok(BallArray {
        chi: Some(chi),
        count,
        centers,
        radius: r,
        rescaled_radius: r * p.rescale_factor(),
        measure_mass,
        report,
        band,
    })
}

/// Full `k³` lattice.
pub fn ball_array_per_axis(p: &ModelParams, n: usize, k: usize, radius: &RadiusSpec) -> Result<BallArray> {
    ball_array(p, n, k * k * k, radius, PerimeterEstimator::default())
}

/// Ball count whose optimal balls carry the limit mass `½(λ - λ_c)ℓ³` at the
/// upper end of the bracket: `round(N*)`, at least one.
pub fn optimal_ball_count(p: &ModelParams) -> usize {
    let (_, hi) = p.lambda_c_bracket();
    let mass = 0.5 * (p.lambda - hi).max(0.0) * p.ell.powi(3);
    let r = resolve_radius(&RadiusSpec::Optimal, p, 1).expect("optimal radius is positive");
    let per_ball = p.eps.powf(-2.0 / 3.0) * 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    ((mass / per_ball).round() as usize).max(1)
}
