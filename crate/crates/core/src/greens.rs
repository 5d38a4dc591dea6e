//! Green's functions on the torus: the zero-mean Poisson kernel, the screened
//! (Yukawa) kernel and its rescaled variant, evaluated spectrally or by direct
//! image sums, plus the smooth near/far partition of the screened kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate, spectral_apply, Field3, Multiplier};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum KernelVariant {
    /// `-ΔG = δ - ell⁻³`, zero mean.
    UnscreenedZeroMean,
    /// `-ΔG + κ²G = δ`.
    Screened,
    /// Screened kernel on the rescaled torus with mass term `4^{-2/3} κ² ε^{2/3} σ^{2/3}`.
    RescaledEps { eps: f64, sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kappa: f64,
    pub ell: f64,
    pub variant: KernelVariant,
}

impl KernelSpec {
    pub fn unscreened(ell: f64) -> Self {
        Self { kappa: 0.0, ell, variant: KernelVariant::UnscreenedZeroMean }
    }

    pub fn screened(kappa: f64, ell: f64) -> Self {
        Self { kappa, ell, variant: KernelVariant::Screened }
    }

    pub fn rescaled(kappa: f64, ell: f64, eps: f64, sigma: f64) -> Self {
        Self { kappa, ell, variant: KernelVariant::RescaledEps { eps, sigma } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell.is_finite() && self.ell > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel ell must be positive, got {}", self.ell)));
        }
        match self.variant {
            KernelVariant::UnscreenedZeroMean => Ok(()),
            KernelVariant::Screened | KernelVariant::RescaledEps { .. } => {
                if !(self.kappa.is_finite() && self.kappa > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "screened kernels need kappa > 0, got {}",
                        self.kappa
                    )));
                }
                if let KernelVariant::RescaledEps { eps, sigma } = self.variant {
                    if !(eps > 0.0 && eps.is_finite() && sigma > 0.0 && sigma.is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "rescaled kernel needs eps, sigma > 0, got {eps}, {sigma}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Zeroth-order coefficient of the operator (`0` for the Poisson kernel).
    pub fn mass2(&self) -> f64 {
        match self.variant {
            KernelVariant::UnscreenedZeroMean => 0.0,
            KernelVariant::Screened => self.kappa * self.kappa,
            KernelVariant::RescaledEps { eps, sigma } => {
                4f64.powf(-2.0 / 3.0) * self.kappa * self.kappa * (eps * sigma).powf(2.0 / 3.0)
            }
        }
    }

    /// Effective decay rate of the image sum.
    pub fn decay(&self) -> f64 {
        self.mass2().sqrt()
    }

    pub fn multiplier(&self, n: usize) -> Multiplier {
        match self.variant {
            KernelVariant::UnscreenedZeroMean => Multiplier::inverse_neg_laplacian(n, self.ell),
            _ => Multiplier::screened(n, self.ell, self.mass2()),
        }
    }

    fn check_field(&self, f: &Field3) -> Result<()> {
        self.validate()?;
        if (f.ell() - self.ell).abs() > 1e-12 * self.ell {
            return Err(Error::InvalidParameter(format!(
                "kernel ell {} does not match field ell {}",
                self.ell,
                f.ell()
            )));
        }
        Ok(())
    }
}

/// Solves `-Δv = f - mean(f)` (zero-mean `v`) or `-Δv + m²v = f`.
pub fn solve(kernel: &KernelSpec, f: &Field3) -> Result<Field3> {
    kernel.check_field(f)?;
    spectral_apply(f, &kernel.multiplier(f.n()))
}

/// Discrete Green's function: `solve` applied to the grid delta `h⁻³` at the origin.
pub fn sampled_green(kernel: &KernelSpec, n: usize) -> Result<Field3> {
    kernel.validate()?;
    let mut values = vec![0.0; n * n * n];
    values[0] = (n as f64 / kernel.ell).powi(3);
    let delta = Field3::new(n, kernel.ell, values)?;
    solve(kernel, &delta)
}

/// Number of image shells after which the remaining tail of the image sum is
/// below `1e-13` in absolute value, for points in the fundamental cell.
pub fn default_shells(kernel: &KernelSpec) -> Result<usize> {
    kernel.validate()?;
    let (a, ell) = (kernel.decay(), kernel.ell);
    if a == 0.0 {
        return Err(Error::InvalidParameter("image sums need a screened kernel".into()));
    }
    // shell s holds 24 s² + 2 images, each at distance >= (s - 1/2) ell
    let term = |s: f64| (24.0 * s * s + 2.0) * (-a * (s - 0.5) * ell).exp() / (4.0 * PI * (s - 0.5) * ell);
    let mut shells = 1usize;
    loop {
        let mut tail = 0.0;
        let mut s = shells as f64 + 1.0;
        loop {
            let t = term(s);
            tail += t;
            if t < 1e-18 * tail.max(1e-300) || s > shells as f64 + 1e5 {
                break;
            }
            s += 1.0;
        }
        if tail < 1e-13 {
            return Ok(shells);
        }
        shells += 1;
    }
}

fn axis_offsets(a: f64, ell: f64, shells: usize) -> Vec<f64> {
    let s = shells as i64;
    let mut d: Vec<f64> = (-s..=s)
        .map(|m| {
            let t = a - m as f64 * ell;
            t * t
        })
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Direct image sum `(1/4π) Σ_{|n|∞ ≤ shells} e^{-m|x - nℓ|} / |x - nℓ|` for
/// the screened kernels (`m` the kernel's decay rate). `x` is first reduced to
/// the fundamental cell. The summation order depends only on the multiset of
/// per-axis offsets, so the value is exactly invariant under `x → -x` and
/// coordinate permutations. [`default_shells`] certifies a `1e-13` tail.
pub fn lattice_sum(kernel: &KernelSpec, x: [f64; 3], shells: usize) -> Result<f64> {
    kernel.validate()?;
    let a = kernel.decay();
    if a == 0.0 {
        return Err(Error::InvalidParameter("image sums need a screened kernel".into()));
    }
    let ell = kernel.ell;
    let reduce = |t: f64| t - ell * (t / ell).round();
    let mut axes: Vec<Vec<f64>> = x.iter().map(|&t| axis_offsets(reduce(t), ell, shells)).collect();
    if axes.iter().all(|d| d[0] == 0.0) {
        return Err(Error::SingularPoint);
    }
    axes.sort_by(|p, q| {
        p.iter().zip(q).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut total = 0.0;
    for &dx in &axes[0] {
        let mut plane = 0.0;
        for &dy in &axes[1] {
            let mut line = 0.0;
            for &dz in &axes[2] {
                let r = (dx + dy + dz).sqrt();
                line += (-a * r).exp() / r;
            }
            plane += line;
        }
        total += plane;
    }
    Ok(total / (4.0 * PI))
}

/// `∫ G` over the torus for the sampled discrete kernel; equals `1/κ²` for the
/// screened variants.
pub fn mass_identity_check(kernel: &KernelSpec, n: usize) -> Result<f64> {
    if kernel.variant == KernelVariant::UnscreenedZeroMean {
        return Err(Error::InvalidParameter("mass identity applies to screened kernels".into()));
    }
    Ok(integrate(&sampled_green(kernel, n)?))
}

/// Smooth radial cutoff at radius `rho`: zero inside `rho/2`, one outside `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearFarSplit {
    pub rho: f64,
}

impl NearFarSplit {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff radius must be positive, got {rho}")));
        }
        Ok(Self { rho })
    }

    /// Quintic smoothstep in `(r - rho/2) / (rho/2)`.
    pub fn eta(&self, r: f64) -> f64 {
        let t = ((r - 0.5 * self.rho) / (0.5 * self.rho)).clamp(0.0, 1.0);
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }

    fn check(&self, ell: f64, n: usize) -> Result<()> {
        if self.rho > 0.25 * ell {
            return Err(Error::InvalidParameter(format!(
                "cutoff radius {} exceeds a quarter of the torus side {ell}",
                self.rho
            )));
        }
        let h = ell / n as f64;
        if 0.5 * self.rho < 4.0 * h {
            return Err(Error::UnderResolved(format!(
                "rho/2 = {} spans fewer than 4 cells of width {h}",
                0.5 * self.rho
            )));
        }
        Ok(())
    }

    /// `eta` at every grid node, using the minimal-image distance to the origin.
    pub fn eta_field(&self, n: usize, ell: f64) -> Result<Field3> {
        Field3::from_fn(n, ell, |x| {
            let r2: f64 = x.iter().map(|&t| (t - ell * (t / ell).round()).powi(2)).sum();
            self.eta(r2.sqrt())
        })
    }
}

/// Splits the sampled kernel into `near = η·G` (vanishing for `|x| < ρ/2`) and
/// `far = (1 - η)·G` (supported in `|x| ≤ ρ`); they add back to `G` exactly.
pub fn split_kernels(kernel: &KernelSpec, split: &NearFarSplit, n: usize) -> Result<(Field3, Field3)> {
    if kernel.variant == KernelVariant::UnscreenedZeroMean {
        return Err(Error::InvalidParameter("near/far split applies to screened kernels".into()));
    }
    split.check(kernel.ell, n)?;
    let g = sampled_green(kernel, n)?;
    let eta = split.eta_field(n, kernel.ell)?;
    let near: Vec<f64> = g.values().iter().zip(eta.values()).map(|(g, e)| e * g).collect();
    let far: Vec<f64> = g.values().iter().zip(&near).map(|(g, nr)| g - nr).collect();
    Ok((Field3::new(n, kernel.ell, near)?, Field3::new(n, kernel.ell, far)?))
}

/// Fourier multipliers of convolution with the near and far kernels; their sum
/// is the kernel's own multiplier.
pub fn split_multipliers(kernel: &KernelSpec, split: &NearFarSplit, n: usize) -> Result<(Multiplier, Multiplier)> {
    let (near, _) = split_kernels(kernel, split, n)?;
    let spectral = crate::grid::Spectral::get(n);
    let cell = near.cell_volume();
    let near_coeffs: Vec<f64> = spectral.forward(near.values()).iter().map(|z| cell * z.re).collect();
    let full = kernel.multiplier(n);
    let far_coeffs = full.coeffs().iter().zip(&near_coeffs).map(|(f, nr)| f - nr).collect();
    Ok((Multiplier::new(n, near_coeffs)?, Multiplier::new(n, far_coeffs)?))
}

/// Extrapolates a sequence of values on grids `n, 2n, 4n` (Aitken's Δ²), falling
/// back to the finest value when the differences are at round-off level.
pub fn richardson(values: [f64; 3]) -> f64 {
    let [a, b, c] = values;
    let (d1, d2) = (b - a, c - b);
    let denom = d2 - d1;
    if d2.abs() <= 1e-14 * c.abs().max(1.0) || denom.abs() <= 1e-300 || d2.abs() >= d1.abs() {
        return c;
    }
    c - d2 * d2 / denom
}

/// Grid-based estimate of the continuum kernel at the coarse node `index` of an
/// `n`-grid: the sampled discrete kernel at `n`, `2n`, `4n`, extrapolated.
pub fn spectral_point_value(kernel: &KernelSpec, n: usize, index: [usize; 3]) -> Result<f64> {
    Ok(spectral_point_values(kernel, n, &[index])?[0])
}

/// [`spectral_point_value`] at several nodes, sampling each grid once.
pub fn spectral_point_values(kernel: &KernelSpec, n: usize, indices: &[[usize; 3]]) -> Result<Vec<f64>> {
    if let Some(bad) = indices.iter().find(|idx| idx.iter().any(|&i| i >= n)) {
        return Err(Error::InvalidParameter(format!("node {bad:?} outside an {n}-grid")));
    }
    let mut vals = vec![[0.0; 3]; indices.len()];
    for level in 0..3 {
        let g = sampled_green(kernel, n << level)?;
        let s = 1 << level;
        for (v, idx) in vals.iter_mut().zip(indices) {
            v[level] = g.get(idx[0] * s, idx[1] * s, idx[2] * s);
        }
    }
    Ok(vals.into_iter().map(richardson).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KAPPA: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn screened_constant() {
        let k = KernelSpec::screened(KAPPA, 1.0);
        let v = solve(&k, &Field3::constant(8, 1.0, 0.3).unwrap()).unwrap();
        for x in v.values() {
            assert!((x - 0.6).abs() < 1e-13);
        }
    }

    #[test]
    fn unscreened_cosine_and_projection() {
        let ell = 1.3;
        let f = Field3::from_fn(16, ell, |x| 0.7 + (2.0 * PI * x[0] / ell).cos()).unwrap();
        let v = solve(&KernelSpec::unscreened(ell), &f).unwrap();
        let c = (2.0 * PI / ell).powi(2);
        let expect = Field3::from_fn(16, ell, |x| (2.0 * PI * x[0] / ell).cos() / c).unwrap();
        for (a, b) in v.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(v.mean().abs() < 1e-15);
    }

    #[test]
    fn invalid_kernels_rejected() {
        let f = Field3::constant(8, 1.0, 1.0).unwrap();
        assert!(solve(&KernelSpec::screened(0.0, 1.0), &f).is_err());
        assert!(solve(&KernelSpec::screened(1.0, 2.0), &f).is_err());
        assert!(solve(&KernelSpec::rescaled(1.0, 1.0, -0.1, 1.0), &f).is_err());
    }

    #[test]
    fn rescaled_mass_term() {
        let k = KernelSpec::rescaled(KAPPA, 10.0, 0.01, 0.9);
        let expect = 4f64.powf(-2.0 / 3.0) * 0.5 * (0.009f64).powf(2.0 / 3.0);
        assert!((k.mass2() - expect).abs() < 1e-16);
    }

    #[test]
    fn lattice_sum_symmetries_are_exact() {
        let k = KernelSpec::screened(KAPPA, 1.0);
        let s = 12;
        let x = [0.13, -0.31, 0.07];
        let v = lattice_sum(&k, x, s).unwrap();
        assert_eq!(v, lattice_sum(&k, [-0.13, 0.31, -0.07], s).unwrap());
        for p in [[x[1], x[0], x[2]], [x[2], x[1], x[0]], [x[1], x[2], x[0]]] {
            assert_eq!(v, lattice_sum(&k, p, s).unwrap());
        }
    }

    #[test]
    fn lattice_sum_heavy_screening() {
        // two-shell hand sum: the six nearest images of (0.5, 0, 0) dominate
        let k = KernelSpec::screened(20.0, 1.0);
        let mut hand = 0.0;
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                for l in -2i32..=2 {
                    let r = ((0.5 - i as f64).powi(2) + (j * j + l * l) as f64).sqrt();
                    hand += (-20.0 * r).exp() / r;
                }
            }
        }
        hand /= 4.0 * PI;
        let v = lattice_sum(&k, [0.5, 0.0, 0.0], 2).unwrap();
        assert!((v - hand).abs() <= 1e-15 * hand);
        let nearest = 2.0 * (-10.0f64).exp() / 0.5 / (4.0 * PI);
        assert!((v / nearest - 1.0).abs() < 1e-3);
    }

    #[test]
    fn lattice_sum_rejects_lattice_points() {
        let k = KernelSpec::screened(1.0, 1.0);
        assert!(matches!(lattice_sum(&k, [1.0, 0.0, -2.0], 3), Err(Error::SingularPoint)));
    }

    #[test]
    fn default_shells_certify_tail() {
        let k = KernelSpec::screened(KAPPA, 1.0);
        let s = default_shells(&k).unwrap();
        let x = [0.21, 0.37, -0.12];
        let a = lattice_sum(&k, x, s).unwrap();
        let b = lattice_sum(&k, x, s + 1).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn lattice_sum_matches_spectral_kernel() {
        let k = KernelSpec::screened(KAPPA, 1.0);
        let shells = default_shells(&k).unwrap();
        let direct = lattice_sum(&k, [0.25, 0.25, 0.25], shells).unwrap();
        let spectral = spectral_point_value(&k, 32, [8, 8, 8]).unwrap();
        assert!((direct - spectral).abs() < 1e-6, "{direct} vs {spectral}");
    }

    #[test]
    fn small_distance_asymptotics() {
        // strong screening: the regular part is negative and 4π|x|G sits in [0.9, 1]
        let k = KernelSpec::screened(5.0, 1.0);
        let shells = default_shells(&k).unwrap();
        for r in [0.01, 0.005, 0.001] {
            let v = 4.0 * PI * r * lattice_sum(&k, [r, 0.0, 0.0], shells).unwrap();
            assert!((0.9..=1.0).contains(&v), "r = {r}: {v}");
        }
        // moderate screening: 4π|x|G → 1 linearly in |x|
        let k = KernelSpec::screened(KAPPA, 1.0);
        let shells = default_shells(&k).unwrap();
        let dev: Vec<f64> = [0.01, 0.005, 0.0025]
            .iter()
            .map(|&r| (4.0 * PI * r * lattice_sum(&k, [r, 0.0, 0.0], shells).unwrap() - 1.0).abs())
            .collect();
        assert!(dev[0] < 0.3 && (dev[1] / dev[0] - 0.5).abs() < 0.05 && (dev[2] / dev[1] - 0.5).abs() < 0.05);
    }

    #[test]
    fn mass_identity() {
        for (kappa, ell) in [(KAPPA, 1.0), (1.0, 2.0), (2.0, 1.0)] {
            let k = KernelSpec::screened(kappa, ell);
            let m = mass_identity_check(&k, 64).unwrap();
            assert!((m - 1.0 / (kappa * kappa)).abs() < 1e-6, "{m}");
        }
    }

    #[test]
    fn sampled_kernel_is_positive() {
        let g = sampled_green(&KernelSpec::screened(KAPPA, 1.0), 32).unwrap();
        assert!(g.min() > 0.0);
    }

    #[test]
    fn solve_is_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 16;
        let mut rand_field = || Field3::new(n, 1.0, (0..n * n * n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let (f, g) = (rand_field(), rand_field());
        for k in [KernelSpec::screened(KAPPA, 1.0), KernelSpec::unscreened(1.0)] {
            let a = f.inner(&solve(&k, &g).unwrap()).unwrap();
            let b = g.inner(&solve(&k, &f).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn energy_identity_matches_double_sum() {
        let n = 8;
        let k = KernelSpec::screened(KAPPA, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mu = Field3::new(n, 1.0, (0..n * n * n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let v = solve(&k, &mu).unwrap();
        let (dirichlet, _) = crate::grid::grad_norm_integrals(&v);
        let quadratic = dirichlet + k.mass2() * v.inner(&v).unwrap();
        let g = sampled_green(&k, n).unwrap();
        let h3 = mu.cell_volume();
        let mut double = 0.0;
        for a in 0..n * n * n {
            let (ai, aj, ak) = (a % n, (a / n) % n, a / (n * n));
            for b in 0..n * n * n {
                let (bi, bj, bk) = (b % n, (b / n) % n, b / (n * n));
                let d = g.get((ai + n - bi) % n, (aj + n - bj) % n, (ak + n - bk) % n);
                double += mu.values()[a] * mu.values()[b] * d;
            }
        }
        double *= h3 * h3;
        assert!((quadratic - double).abs() < 1e-4 * double);
    }

    fn gauss_yukawa(r: f64, kappa: f64, s: f64) -> f64 {
        let a = (kappa * kappa * s * s / 2.0).exp() / (8.0 * PI * r);
        let q = std::f64::consts::SQRT_2 * s;
        a * ((-kappa * r).exp() * libm::erfc((kappa * s * s - r) / q)
            - (kappa * r).exp() * libm::erfc((kappa * s * s + r) / q))
    }

    #[test]
    fn gaussian_bump_matches_image_sum() {
        let (n, ell, s) = (64, 1.0, 0.05);
        let c = [0.5 + 0.004, 0.5 - 0.003, 0.5 + 0.001];
        let images = 2i32;
        let bump = Field3::from_fn(n, ell, |x| {
            let mut acc = 0.0;
            for i in -images..=images {
                for j in -images..=images {
                    for l in -images..=images {
                        let d2 = (x[0] - c[0] - i as f64).powi(2)
                            + (x[1] - c[1] - j as f64).powi(2)
                            + (x[2] - c[2] - l as f64).powi(2);
                        acc += (-d2 / (2.0 * s * s)).exp();
                    }
                }
            }
            acc / (2.0 * PI * s * s).powf(1.5)
        })
        .unwrap();
        let k = KernelSpec::screened(KAPPA, ell);
        let v = solve(&k, &bump).unwrap();
        let shells = default_shells(&k).unwrap() as i32;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..6 {
            let idx = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            let x = idx.map(|i| i as f64 * ell / n as f64);
            let mut oracle = 0.0;
            for i in -shells..=shells {
                for j in -shells..=shells {
                    for l in -shells..=shells {
                        let r = ((x[0] - c[0] - i as f64).powi(2)
                            + (x[1] - c[1] - j as f64).powi(2)
                            + (x[2] - c[2] - l as f64).powi(2))
                        .sqrt();
                        oracle += gauss_yukawa(r, KAPPA, s);
                    }
                }
            }
            let got = v.get(idx[0], idx[1], idx[2]);
            assert!((got - oracle).abs() < 1e-6, "{idx:?}: {got} vs {oracle}");
        }
    }

    #[test]
    fn split_partition_and_supports() {
        let (n, ell, rho) = (64, 1.0, 0.25);
        let k = KernelSpec::screened(KAPPA, ell);
        let split = NearFarSplit::new(rho).unwrap();
        let (near, far) = split_kernels(&k, &split, n).unwrap();
        let g = sampled_green(&k, n).unwrap();
        let h = ell / n as f64;
        for idx in 0..n * n * n {
            let p = [idx % n, (idx / n) % n, idx / (n * n)].map(|i| {
                let t = i as f64 * h;
                t - ell * (t / ell).round()
            });
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let (a, b) = (near.values()[idx], far.values()[idx]);
            assert!((a + b - g.values()[idx]).abs() <= 1e-10 * g.values()[idx].abs());
            if r > rho {
                assert_eq!(b, 0.0);
                assert_eq!(a, g.values()[idx]);
            }
            if r < 0.5 * rho {
                assert_eq!(a, 0.0);
            }
        }
        assert!(near.sup_norm() < g.values()[0]);
        let total = integrate(&near) + integrate(&far);
        assert!((total - 2.0).abs() < 1e-6);
    }

    #[test]
    fn split_multipliers_add_up() {
        let k = KernelSpec::screened(KAPPA, 1.0);
        let (a, b) = split_multipliers(&k, &NearFarSplit::new(0.25).unwrap(), 32).unwrap();
        let full = k.multiplier(32);
        for ((x, y), z) in a.coeffs().iter().zip(b.coeffs()).zip(full.coeffs()) {
            assert!((x + y - z).abs() < 1e-12 * z);
        }
    }

    #[test]
    fn under_resolved_split_is_rejected() {
        let k = KernelSpec::screened(KAPPA, 1.0);
        let err = split_kernels(&k, &NearFarSplit::new(0.1).unwrap(), 32).unwrap_err();
        assert!(matches!(err, Error::UnderResolved(_)));
    }

    #[test]
    fn eta_is_monotone_cutoff() {
        let s = NearFarSplit::new(0.2).unwrap();
        assert_eq!(s.eta(0.05), 0.0);
        assert_eq!(s.eta(0.25), 1.0);
        let mut prev = 0.0;
        for i in 0..=200 {
            let e = s.eta(i as f64 * 0.001);
            assert!((0.0..=1.0).contains(&e) && e >= prev);
            prev = e;
        }
    }
}
