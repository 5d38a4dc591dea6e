//! Whole-space liquid-drop energy `P(F) + (1/8π)∫∫_{F×F} |x-y|⁻¹`: closed
//! forms for balls, quadrature for axisymmetric star-shaped sets, dilation
//! optimization, and the bounds on the optimal energy per unit volume.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, legendre_table, legendre_with_derivative};

pub const MAX_DEGREE: usize = 16;
pub const DEFAULT_LMAX_KERNEL: usize = 32;
pub const DEFAULT_ANGULAR_NODES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropEnergy {
    pub perimeter: f64,
    pub coulomb: f64,
    pub mass: f64,
    /// `(perimeter + coulomb) / mass`.
    pub ratio: f64,
    /// `coulomb / perimeter`.
    pub equipartition_ratio: f64,
}

impl DropEnergy {
    fn new(perimeter: f64, coulomb: f64, mass: f64) -> Self {
        Self {
            perimeter,
            coulomb,
            mass,
            ratio: (perimeter + coulomb) / mass,
            equipartition_ratio: coulomb / perimeter,
        }
    }

    /// Energy of the set dilated by `t`.
    pub fn dilated(&self, t: f64) -> Self {
        Self::new(self.perimeter * t * t, self.coulomb * t.powi(5), self.mass * t.powi(3))
    }
}

/// Ball of radius `r`: `P = 4πr²`, `V = 4πr⁵/15`, `|B| = 4πr³/3`, `f = 3/r + r²/5`.
pub fn ball_energy(r: f64) -> Result<DropEnergy> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
    }
    Ok(DropEnergy::new(4.0 * PI * r * r, 4.0 * PI * r.powi(5) / 15.0, 4.0 * PI * r.powi(3) / 3.0))
}

/// Per-volume energy of a ball, `3/r + r²/5`.
pub fn ball_ratio(r: f64) -> f64 {
    3.0 / r + r * r / 5.0
}

/// `(R*, f(R*)) = ((15/2)^{1/3}, 3^{5/3} 2^{-2/3} 5^{-1/3})`.
pub fn optimal_ball() -> (f64, f64) {
    let r = 7.5f64.cbrt();
    (r, 3f64.powf(5.0 / 3.0) * 2f64.powf(-2.0 / 3.0) * 5f64.powf(-1.0 / 3.0))
}

/// Golden-section search on `[lo, hi]` driven by a comparison `less(a, b)`
/// meaning `f(a) < f(b)`, so that it can be fed a cancellation-free comparison.
pub fn golden_section_by(mut lo: f64, mut hi: f64, tol: f64, less: impl Fn(f64, f64) -> bool) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        if less(x1, x2) {
            hi = x2;
            x2 = x1;
            x1 = hi - g * (hi - lo);
        } else {
            lo = x1;
            x1 = x2;
            x2 = lo + g * (hi - lo);
        }
        if x1 >= x2 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes `f(r) = 3/r + r²/5` starting from `r0`: the bracket is grown
/// geometrically around `r0`, then refined by golden section.
pub fn search_optimal_radius(r0: f64) -> Result<f64> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("start radius must be positive, got {r0}")));
    }
    // f(a) - f(b) = (b - a) (3/(ab) - (a + b)/5), free of cancellation
    let less = |a: f64, b: f64| (b - a) * (3.0 / (a * b) - (a + b) / 5.0) < 0.0;
    let (mut lo, mut hi) = (r0 / 2.0, r0 * 2.0);
    while less(lo, r0.min(hi)) && lo > 1e-12 {
        lo /= 2.0;
    }
    while less(hi, r0.max(lo)) && hi < 1e12 {
        hi *= 2.0;
    }
    Ok(golden_section_by(lo, hi, 1e-15, less))
}

/// `(3^{5/3}/4, f_ball)`. The lower end follows the chain
/// `f* ≥ (243π / (2|F*|))^{1/3}` with the volume bound `|F*| ≤ 32π`.
pub fn f_star_bounds() -> (f64, f64) {
    (f_star_lower_from_volume(32.0 * PI), optimal_ball().1)
}

/// `(243π / (2V))^{1/3}` for a bound `V` on the optimal set's volume.
pub fn f_star_lower_from_volume(volume_bound: f64) -> f64 {
    (243.0 * PI / (2.0 * volume_bound)).cbrt()
}

/// Axisymmetric star-shaped set `r(θ) = R (1 + Σ_{l=2}^{L} a_l P_l(cos θ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarShape {
    pub base_radius: f64,
    /// `a_2, …, a_L`.
    pub coeffs: Vec<f64>,
}

impl StarShape {
    pub fn new(base_radius: f64, coeffs: Vec<f64>) -> Result<Self> {
        let s = Self { base_radius, coeffs };
        s.validate()?;
        Ok(s)
    }

    pub fn ball(r: f64) -> Result<Self> {
        Self::new(r, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_radius.is_finite() && self.base_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("base radius must be positive, got {}", self.base_radius)));
        }
        if self.degree() > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!("degree {} exceeds {MAX_DEGREE}", self.degree())));
        }
        if let Some(a) = self.coeffs.iter().find(|a| !(a.is_finite() && a.abs() <= 0.5)) {
            return Err(Error::InvalidParameter(format!("coefficient {a} outside [-0.5, 0.5]")));
        }
        for i in 0..512 {
            let theta = PI * i as f64 / 511.0;
            let r = self.radius(theta.cos());
            if r <= 0.0 {
                return Err(Error::NotStarShaped(format!("r({theta:.4}) = {r}")));
            }
        }
        Ok(())
    }

    /// Highest Legendre degree present (0 for a ball).
    pub fn degree(&self) -> usize {
        if self.coeffs.is_empty() {
            0
        } else {
            self.coeffs.len() + 1
        }
    }

    /// `r` at `μ = cos θ`.
    pub fn radius(&self, mu: f64) -> f64 {
        let p = legendre_table(self.degree(), mu);
        self.base_radius * (1.0 + self.coeffs.iter().enumerate().map(|(i, a)| a * p[i + 2]).sum::<f64>())
    }

    /// `dr/dμ`.
    pub fn radius_derivative(&self, mu: f64) -> f64 {
        self.base_radius
            * self.coeffs.iter().enumerate().map(|(i, a)| a * legendre_with_derivative(i + 2, mu).1).sum::<f64>()
    }

    pub fn dilated(&self, t: f64) -> Self {
        Self { base_radius: self.base_radius * t, coeffs: self.coeffs.clone() }
    }

    /// Whether `x` lies inside the set.
    pub fn contains(&self, x: [f64; 3]) -> bool {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r == 0.0 {
            return true;
        }
        r < self.radius(x[2] / r)
    }

    /// Largest radius over a fine polar grid (a bound for rejection sampling).
    pub fn max_radius(&self) -> f64 {
        (0..=2048).map(|i| self.radius((PI * i as f64 / 2048.0).cos())).fold(0.0, f64::max) * 1.001
    }

    /// Random shape of degree `degree` with `|a_l| ≤ amplitude / l`, resampled until star-shaped.
    pub fn random(rng: &mut impl Rng, base_radius: f64, degree: usize, amplitude: f64) -> Result<Self> {
        if !(2..=MAX_DEGREE).contains(&degree) {
            return Err(Error::InvalidParameter(format!("degree must be in 2..={MAX_DEGREE}")));
        }
        for _ in 0..1000 {
            let coeffs = (2..=degree).map(|l| rng.gen_range(-amplitude..amplitude) / l as f64).collect();
            if let Ok(s) = Self::new(base_radius, coeffs) {
                return Ok(s);
            }
        }
        Err(Error::NotStarShaped("no star-shaped sample found".into()))
    }
}

/// `∫_0^a ∫_0^b s² t² min(s,t)^l / max(s,t)^{l+1} dt ds` in closed form for
/// all `l ≤ lmax`, written into `out`.
fn radial_kernels(a: f64, b: f64, out: &mut [f64]) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let a5 = a.powi(5);
    let q = a / b;
    // q^{l-2}, starting from l = 0
    let mut ql = 1.0 / (q * q);
    for (l, k) in out.iter_mut().enumerate() {
        let lf = l as f64;
        let head = 2.0 * a5 / (5.0 * (lf + 3.0));
        *k = if l == 2 {
            head + a5 / 5.0 * (1.0 / q).ln()
        } else {
            head + a5 * (ql - 1.0) / ((lf + 3.0) * (2.0 - lf))
        };
        ql *= q;
    }
}

/// Perimeter, Coulomb self-energy and volume of a star shape, with the size of
/// the last retained Legendre term of the Coulomb series as a tail estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEvaluation {
    pub energy: DropEnergy,
    pub tail_estimate: f64,
}

pub fn shape_energy(s: &StarShape, lmax_kernel: usize) -> Result<DropEnergy> {
    Ok(shape_energy_with(s, lmax_kernel, DEFAULT_ANGULAR_NODES)?.energy)
}

/// `nodes`-point Gauss-Legendre in `μ = cos θ` for all three integrals; the
/// radial integrals of the Coulomb series are exact.
pub fn shape_energy_with(s: &StarShape, lmax_kernel: usize, nodes: usize) -> Result<ShapeEvaluation> {
    s.validate()?;
    let required = 2 * s.degree();
    if lmax_kernel < required {
        return Err(Error::KernelTruncation { lmax: lmax_kernel, required });
    }
    let (mu, w) = gauss_legendre(nodes);
    let r: Vec<f64> = mu.iter().map(|&m| s.radius(m)).collect();
    let mut perimeter = 0.0;
    let mut mass = 0.0;
    for i in 0..nodes {
        let dr = s.radius_derivative(mu[i]);
        perimeter += w[i] * r[i] * (r[i] * r[i] + (1.0 - mu[i] * mu[i]) * dr * dr).sqrt();
        mass += w[i] * r[i].powi(3);
    }
    perimeter *= 2.0 * PI;
    mass *= 2.0 * PI / 3.0;

    // p[l][i] = w_i P_l(μ_i)
    let tables: Vec<Vec<f64>> = mu.iter().map(|&m| legendre_table(lmax_kernel, m)).collect();
    let wp: Vec<Vec<f64>> = (0..=lmax_kernel).map(|l| (0..nodes).map(|i| w[i] * tables[i][l]).collect()).collect();
    let mut terms = vec![0.0; lmax_kernel + 1];
    let mut k = vec![0.0; lmax_kernel + 1];
    for i in 0..nodes {
        let mut row = vec![0.0; lmax_kernel + 1];
        for j in 0..nodes {
            radial_kernels(r[i], r[j], &mut k);
            for l in 0..=lmax_kernel {
                row[l] += wp[l][j] * k[l];
            }
        }
        for l in 0..=lmax_kernel {
            terms[l] += wp[l][i] * row[l];
        }
    }
    // (1/8π)(2π)² = π/2; ascending-l summation
    let coulomb = 0.5 * PI * terms.iter().sum::<f64>();
    let tail_estimate = 0.5 * PI * terms[lmax_kernel].abs();
    Ok(ShapeEvaluation { energy: DropEnergy::new(perimeter, coulomb, mass), tail_estimate })
}

/// Minimizes the per-volume energy over dilations: `t*³ = P / (2V)`, where
/// `V(t*s) / P(t*s) = 1/2`. The returned energy is re-evaluated on the dilated shape.
pub fn dilation_optimize(s: &StarShape) -> Result<(f64, DropEnergy)> {
    let lmax = DEFAULT_LMAX_KERNEL.max(2 * s.degree());
    let e = shape_energy(s, lmax)?;
    let t = (e.perimeter / (2.0 * e.coulomb)).cbrt();
    Ok((t, shape_energy(&s.dilated(t), lmax)?))
}

/// Isoperimetric lower bound `(36π)^{1/3} |F|^{2/3}` on the perimeter.
pub fn isoperimetric_bound(mass: f64) -> f64 {
    (36.0 * PI).cbrt() * mass.powf(2.0 / 3.0)
}

/// JSON record for `shapes.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    #[serde(rename = "R")]
    pub base_radius: f64,
    pub coeffs: Vec<f64>,
    #[serde(rename = "P")]
    pub perimeter: f64,
    #[serde(rename = "V")]
    pub coulomb: f64,
    pub mass: f64,
    pub f: f64,
    pub equipartition_ratio: f64,
}

impl ShapeRecord {
    pub fn new(s: &StarShape, e: &DropEnergy) -> Self {
        Self {
            base_radius: s.base_radius,
            coeffs: s.coeffs.clone(),
            perimeter: e.perimeter,
            coulomb: e.coulomb,
            mass: e.mass,
            f: e.ratio,
            equipartition_ratio: e.equipartition_ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_closed_forms() {
        let e = ball_energy(1.0).unwrap();
        assert!((e.ratio - 3.2).abs() < 1e-15);
        let (r, f) = optimal_ball();
        assert!((r - 1.957_433_820_584_4).abs() < 1e-12);
        assert!((ball_energy(r).unwrap().ratio - f).abs() < 1e-14);
        assert!((ball_energy(r).unwrap().equipartition_ratio - 0.5).abs() < 1e-15);
        assert!(ball_ratio(r * 1.01) > f && ball_ratio(r * 0.99) > f);
        assert!(ball_energy(0.0).is_err());
    }

    #[test]
    fn golden_section_finds_ball_optimum() {
        let (r, _) = optimal_ball();
        let a = search_optimal_radius(0.5).unwrap();
        let b = search_optimal_radius(10.0).unwrap();
        assert!((a - r).abs() < 1e-10 && (b - r).abs() < 1e-10);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn bounds_and_chain() {
        let (lo, hi) = f_star_bounds();
        assert!((lo - 3f64.powf(5.0 / 3.0) / 4.0).abs() < 1e-14);
        assert!(((243.0f64 / 64.0).cbrt() - 3f64.powf(5.0 / 3.0) / 4.0).abs() < 1e-14);
        assert_eq!(hi, optimal_ball().1);
        assert!(lo < hi);
    }

    #[test]
    fn degenerate_shape_is_ball() {
        let e = shape_energy(&StarShape::ball(1.0).unwrap(), 32).unwrap();
        let b = ball_energy(1.0).unwrap();
        assert!((e.perimeter - b.perimeter).abs() < 1e-10);
        assert!((e.coulomb - b.coulomb).abs() < 1e-10);
        assert!((e.mass - b.mass).abs() < 1e-10);
    }

    #[test]
    fn radial_kernel_matches_quadrature() {
        for (a, b) in [(0.7, 1.3), (1.2, 0.4), (1.0, 1.0)] {
            let mut k = vec![0.0; 6];
            radial_kernels(a, b, &mut k);
            for (l, &kl) in k.iter().enumerate() {
                // split at min(a, b) so each piece is smooth
                let m = a.min(b);
                let inner = |s: f64| {
                    let lo = crate::quadrature::integrate_gl(40, 0.0, s.min(b), |t| t * t * t.powi(l as i32) / s.powi(l as i32 + 1));
                    let hi = if s < b {
                        crate::quadrature::integrate_gl(40, s, b, |t| t * t * s.powi(l as i32) / t.powi(l as i32 + 1))
                    } else {
                        0.0
                    };
                    s * s * (lo + hi)
                };
                let num = crate::quadrature::integrate_gl(60, 0.0, m, inner)
                    + if a > m { crate::quadrature::integrate_gl(60, m, a, inner) } else { 0.0 };
                assert!((num - kl).abs() < 1e-11 * kl.abs().max(1e-3), "l = {l}: {num} vs {kl}");
            }
        }
    }

    #[test]
    fn truncation_and_star_shape_errors() {
        let s = StarShape::new(1.0, vec![0.1, 0.0, 0.05]).unwrap();
        assert!(matches!(shape_energy(&s, 4), Err(Error::KernelTruncation { lmax: 4, required: 8 })));
        assert!(matches!(StarShape::new(1.0, vec![-0.5, 0.5, -0.5, 0.5]), Err(Error::NotStarShaped(_))));
        assert!(StarShape::new(1.0, vec![0.6]).is_err());
        assert!(StarShape::new(1.0, vec![0.0; 16]).is_err());
    }

    #[test]
    fn homogeneity() {
        let s = StarShape::new(1.1, vec![0.1, -0.05, 0.02]).unwrap();
        let e = shape_energy(&s, 32).unwrap();
        for t in [0.5, 2.0] {
            let d = shape_energy(&s.dilated(t), 32).unwrap();
            assert!((d.perimeter / (e.perimeter * t * t) - 1.0).abs() < 1e-8);
            assert!((d.coulomb / (e.coulomb * t.powi(5)) - 1.0).abs() < 1e-8);
            assert!((d.mass / (e.mass * t.powi(3)) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn quadrature_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = StarShape::random(&mut rng, 1.5, 8, 0.3).unwrap();
        let a = shape_energy_with(&s, 32, 256).unwrap().energy;
        let b = shape_energy_with(&s, 32, 512).unwrap().energy;
        assert!((a.coulomb / b.coulomb - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dilation_equipartition() {
        let (t, e) = dilation_optimize(&StarShape::ball(1.0).unwrap()).unwrap();
        assert!((t - optimal_ball().0).abs() < 1e-12);
        assert!((e.equipartition_ratio - 0.5).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = StarShape::random(&mut rng, 1.0, 6, 0.4).unwrap();
        let (t, e) = dilation_optimize(&s).unwrap();
        assert!((e.equipartition_ratio - 0.5).abs() < 1e-10);
        let worse = shape_energy(&s.dilated(1.1 * t), 32).unwrap();
        assert!(e.ratio <= worse.ratio);
    }

    #[test]
    fn perturbed_ball_is_worse() {
        let (r, f) = optimal_ball();
        let s = StarShape::new(r, vec![0.1]).unwrap();
        let e = shape_energy(&s, 32).unwrap();
        assert!(e.ratio > f);
        assert!(e.perimeter >= isoperimetric_bound(e.mass) - 1e-9);
    }
}
