//! Diffuse-interface energy, its constrained gradient, and the sharp-interface
//! energy with screened kernel, in physical and rescaled variables.

use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{split_multipliers, KernelSpec, NearFarSplit};
use crate::grid::{integrate, slab_sum, total_variation, Field3, Multiplier, Spectral};
use crate::quadrature::integrate_gl;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WellKind {
    Quartic,
    Custom,
}

/// Symmetric double-well potential with wells at ±1, plus its derived
/// surface tension `σ = ∫_{-1}^{1} √(2W)` and screening constant `κ = 1/√W''(1)`.
#[derive(Clone)]
pub struct WellPotential {
    kind: WellKind,
    w: ScalarFn,
    w1: ScalarFn,
    w2: ScalarFn,
    growth: f64,
    sigma: f64,
    kappa: f64,
}

impl fmt::Debug for WellPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WellPotential")
            .field("kind", &self.kind)
            .field("growth", &self.growth)
            .field("sigma", &self.sigma)
            .field("kappa", &self.kappa)
            .finish()
    }
}

fn surface_tension(w: &ScalarFn) -> f64 {
    integrate_gl(129, -1.0, 1.0, |s| (2.0 * w(s)).max(0.0).sqrt())
}

impl WellPotential {
    /// `W(u) = (1 - u²)² / 4`.
    pub fn quartic() -> Self {
        let w: ScalarFn = Arc::new(|u: f64| {
            let a = (1.0 - u) * (1.0 + u);
            0.25 * a * a
        });
        let sigma = surface_tension(&w);
        Self {
            kind: WellKind::Quartic,
            w,
            w1: Arc::new(|u: f64| u * (u - 1.0) * (u + 1.0)),
            w2: Arc::new(|u: f64| 3.0 * u * u - 1.0),
            growth: 4.0,
            sigma,
            kappa: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    /// A user-supplied well. `growth` is the exponent `q ∈ (1, 5)` of its growth at infinity.
    pub fn custom(w: ScalarFn, w1: ScalarFn, w2: ScalarFn, growth: f64) -> Result<Self> {
        if !(growth > 1.0 && growth < 5.0) {
            return Err(Error::InvalidParameter(format!("growth exponent must lie in (1, 5), got {growth}")));
        }
        for i in 0..=400 {
            let u = -2.0 + 0.01 * i as f64;
            let (a, b) = (w(u), w(-u));
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidParameter(format!("W({u}) = {a} is not a nonnegative number")));
            }
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(Error::InvalidParameter(format!("W is not even: W({u}) = {a}, W({}) = {b}", -u)));
            }
        }
        if w(1.0).abs() > 1e-14 || w(-1.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter("W must vanish at ±1".into()));
        }
        let curvature = w2(1.0);
        if !(curvature.is_finite() && curvature > 0.0) {
            return Err(Error::InvalidParameter(format!("W''(1) must be positive, got {curvature}")));
        }
        let sigma = surface_tension(&w);
        Ok(Self { kind: WellKind::Custom, w, w1, w2, growth, sigma, kappa: 1.0 / curvature.sqrt() })
    }

    pub fn kind(&self) -> WellKind {
        self.kind
    }

    #[inline]
    pub fn w(&self, u: f64) -> f64 {
        (self.w)(u)
    }

    #[inline]
    pub fn w1(&self, u: f64) -> f64 {
        (self.w1)(u)
    }

    #[inline]
    pub fn w2(&self, u: f64) -> f64 {
        (self.w2)(u)
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `max(2, sup W'' on [-1.2, 1.2])`, sampled.
    pub fn default_stabilizer(&self) -> f64 {
        (0..=2400).map(|i| self.w2(-1.2 + 0.001 * i as f64)).fold(2.0, f64::max)
    }
}

/// Model parameters with the derived background state `ū = -1 + λ ε^{2/3}`
/// and the rescaled torus side `ell_eps = (4/(σε))^{1/3} ell`.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub eps: f64,
    pub lambda: f64,
    pub ell: f64,
    pub well: WellPotential,
}

/// Serializable parameter echo carried by every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub epsilon: f64,
    pub lambda: f64,
    pub ell: f64,
    pub well: WellKind,
    pub sigma: f64,
    pub kappa: f64,
    pub ubar: f64,
    pub ell_eps: f64,
    pub lambda_c_lower: f64,
    pub lambda_c_upper: f64,
}

impl ModelParams {
    pub fn new(eps: f64, lambda: f64, ell: f64, well: WellPotential) -> Result<Self> {
        for (name, v) in [("epsilon", eps), ("lambda", lambda), ("ell", ell)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let p = Self { eps, lambda, ell, well };
        let ubar = p.ubar();
        if !(ubar > -1.0 && ubar < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "background state {ubar} outside (-1, 1); need lambda * eps^(2/3) < 2"
            )));
        }
        Ok(p)
    }

    pub fn quartic(eps: f64, lambda: f64, ell: f64) -> Result<Self> {
        Self::new(eps, lambda, ell, WellPotential::quartic())
    }

    pub fn ubar(&self) -> f64 {
        -1.0 + self.lambda * self.eps.powf(2.0 / 3.0)
    }

    pub fn sigma(&self) -> f64 {
        self.well.sigma()
    }

    pub fn kappa(&self) -> f64 {
        self.well.kappa()
    }

    pub fn kappa2(&self) -> f64 {
        self.well.kappa() * self.well.kappa()
    }

    /// Length scale factor from physical to rescaled coordinates.
    pub fn rescale_factor(&self) -> f64 {
        (4.0 / (self.sigma() * self.eps)).cbrt()
    }

    pub fn ell_eps(&self) -> f64 {
        self.rescale_factor() * self.ell
    }

    pub fn lambda_c_bracket(&self) -> (f64, f64) {
        crate::limit::lambda_c_bracket(&self.well)
    }

    /// `ε^{-4/3}`, the scale of the droplet-regime energy.
    pub fn energy_scale(&self) -> f64 {
        self.eps.powf(-4.0 / 3.0)
    }

    /// Diffuse energy of `u ≡ ū`: `ell³ W(ū)`.
    pub fn diffuse_trivial(&self) -> f64 {
        self.ell.powi(3) * self.well.w(self.ubar())
    }

    /// Sharp energy of `χ ≡ 0`: `ε^{4/3} λ² ell³ / (2κ²)`.
    pub fn sharp_trivial(&self) -> f64 {
        self.eps.powf(4.0 / 3.0) * self.lambda * self.lambda * self.ell.powi(3) / (2.0 * self.kappa2())
    }

    pub fn echo(&self) -> ParamsEcho {
        let (lo, hi) = self.lambda_c_bracket();
        ParamsEcho {
            epsilon: self.eps,
            lambda: self.lambda,
            ell: self.ell,
            well: self.well.kind(),
            sigma: self.sigma(),
            kappa: self.kappa(),
            ubar: self.ubar(),
            ell_eps: self.ell_eps(),
            lambda_c_lower: lo,
            lambda_c_upper: hi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyKind {
    Diffuse,
    Sharp,
    RescaledSharp,
}

/// Itemized energy. `total = interfacial + well + nonlocal`; for the sharp
/// energies `well` holds the constant background term plus the volume term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kind: EnergyKind,
    pub total: f64,
    pub interfacial: f64,
    pub well: f64,
    pub nonlocal: f64,
    pub near: Option<f64>,
    pub far: Option<f64>,
    /// `total · ε^{-4/3}`.
    pub rescaled: f64,
    pub trivial_reference: f64,
    pub rescaled_trivial: f64,
    pub params: ParamsEcho,
}

impl EnergyReport {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: EnergyKind,
        interfacial: f64,
        well: f64,
        nonlocal: f64,
        near: Option<f64>,
        far: Option<f64>,
        trivial: f64,
        p: &ModelParams,
    ) -> Self {
        let total = interfacial + well + nonlocal;
        let scale = p.energy_scale();
        Self {
            kind,
            total,
            interfacial,
            well,
            nonlocal,
            near,
            far,
            rescaled: total * scale,
            trivial_reference: trivial,
            rescaled_trivial: trivial * scale,
            params: p.echo(),
        }
    }
}

/// Half-spectrum `|k|²` table and transform plans for one grid.
pub(crate) struct SpectralOps {
    pub spectral: Arc<Spectral>,
    pub k2: Vec<f64>,
    pub ell: f64,
}

impl SpectralOps {
    pub fn new(n: usize, ell: f64) -> Self {
        let spectral = Spectral::get(n);
        let k2 = Multiplier::neg_laplacian(n, ell).coeffs().to_vec();
        Self { spectral, k2, ell }
    }

    /// `(∫|∇u|², ∫|∇(-Δ)^{-1/2}(u - mean u)|²)` from `û`.
    pub fn quadratic_parts(&self, uhat: &[Complex64]) -> (f64, f64) {
        let k2 = &self.k2;
        let dirichlet = self.spectral.parseval(self.ell, uhat, uhat, |i| k2[i]);
        let coulomb = self.spectral.parseval(self.ell, uhat, uhat, |i| if k2[i] > 0.0 { 1.0 / k2[i] } else { 0.0 });
        (dirichlet, coulomb)
    }

    /// Symbol of the linear part of the gradient, `ε²|k|² + 1/|k|²`, zero at `k = 0`.
    pub fn linear_symbol(&self, eps: f64) -> Vec<f64> {
        self.k2.iter().map(|&k2| if k2 > 0.0 { eps * eps * k2 + 1.0 / k2 } else { 0.0 }).collect()
    }
}

fn check_params_grid(f: &Field3, ell: f64) -> Result<()> {
    if (f.ell() - ell).abs() > 1e-10 * ell {
        return Err(Error::InvalidParameter(format!("field torus side {} differs from {ell}", f.ell())));
    }
    Ok(())
}

fn check_mass(u: &Field3, p: &ModelParams) -> Result<()> {
    check_params_grid(u, p.ell)?;
    let (mean, target) = (u.mean(), p.ubar());
    if (mean - target).abs() > 1e-10 {
        return Err(Error::ConstraintViolation { mean, target });
    }
    if p.eps < 2.0 * u.h() {
        log::warn!("interface unresolved: eps = {} < 2h = {}", p.eps, 2.0 * u.h());
    }
    Ok(())
}

/// `(ε²/2 ∫|∇u|², ∫W(u))` without the mass constraint.
pub fn local_terms(u: &Field3, eps: f64, well: &WellPotential) -> (f64, f64) {
    let (dirichlet, _) = crate::grid::grad_norm_integrals(u);
    let wu = u.map(|x| well.w(x)).map(|f| integrate(&f)).unwrap_or(f64::NAN);
    (0.5 * eps * eps * dirichlet, wu)
}

pub(crate) fn diffuse_parts(ops: &SpectralOps, u: &[f64], uhat: &[Complex64], p: &ModelParams) -> (f64, f64, f64) {
    let n = ops.spectral.n();
    let (dirichlet, coulomb) = ops.quadratic_parts(uhat);
    let wsum: Vec<f64> = u.iter().map(|&x| p.well.w(x)).collect();
    let well = (ops.ell / n as f64).powi(3) * slab_sum(&wsum, n);
    (0.5 * p.eps * p.eps * dirichlet, well, 0.5 * coulomb)
}

/// `ε²/2 ∫|∇u|² + ∫W(u) + ½∫|∇v|²` with `-Δv = u - ū`.
pub fn diffuse_energy(u: &Field3, p: &ModelParams) -> Result<EnergyReport> {
    check_mass(u, p)?;
    let ops = SpectralOps::new(u.n(), u.ell());
    let uhat = ops.spectral.forward(u.values());
    let (interfacial, well, nonlocal) = diffuse_parts(&ops, u.values(), &uhat, p);
    Ok(EnergyReport::assemble(EnergyKind::Diffuse, interfacial, well, nonlocal, None, None, p.diffuse_trivial(), p))
}

pub(crate) fn diffuse_gradient_parts(
    ops: &SpectralOps,
    symbol: &[f64],
    u: &[f64],
    uhat: &[Complex64],
    p: &ModelParams,
) -> (Vec<f64>, f64) {
    let n = ops.spectral.n();
    let mut lin: Vec<Complex64> = uhat.iter().zip(symbol).map(|(z, s)| z * *s).collect();
    lin[0] = Complex64::default();
    let mut g = ops.spectral.inverse(lin);
    let w1: Vec<f64> = u.iter().map(|&x| p.well.w1(x)).collect();
    let lagrange = slab_sum(&w1, n) / w1.len() as f64;
    g.iter_mut().zip(&w1).for_each(|(gi, wi)| *gi += wi - lagrange);
    (g, lagrange)
}

/// Constrained `L²` gradient `-ε²Δu + W'(u) + v - Λ` and the multiplier
/// `Λ = mean(W'(u) + v)`.
pub fn diffuse_gradient(u: &Field3, p: &ModelParams) -> Result<(Field3, f64)> {
    check_mass(u, p)?;
    let ops = SpectralOps::new(u.n(), u.ell());
    let uhat = ops.spectral.forward(u.values());
    let symbol = ops.linear_symbol(p.eps);
    let (g, lagrange) = diffuse_gradient_parts(&ops, &symbol, u.values(), &uhat, p);
    Ok((Field3::from_parts(u.n(), u.ell(), g)?, lagrange))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerimeterEstimator {
    /// `h²` times the number of cell faces separating 0 from 1. Exact for
    /// unions of cells; overestimates smooth surfaces (up to a factor 1.5).
    FaceCount,
    /// `∫|∇(χ * g)|` with a Gaussian `g` of standard deviation `2h`.
    #[default]
    Mollified,
}

pub fn check_binary(chi: &Field3) -> Result<()> {
    match chi.values().iter().position(|&v| v != 0.0 && v != 1.0) {
        Some(index) => Err(Error::NonBinary { index, value: chi.values()[index] }),
        None => Ok(()),
    }
}

pub fn perimeter(chi: &Field3, estimator: PerimeterEstimator) -> f64 {
    match estimator {
        PerimeterEstimator::FaceCount => face_count_perimeter(chi),
        PerimeterEstimator::Mollified => {
            let s = 2.0 * chi.h();
            let m = Multiplier::radial(chi.n(), chi.ell(), |k2| (-0.5 * k2 * s * s).exp());
            let smooth = crate::grid::spectral_apply(chi, &m).expect("multiplier built for this grid");
            total_variation(&smooth)
        }
    }
}

fn face_count_perimeter(chi: &Field3) -> f64 {
    let n = chi.n();
    let mut faces = 0usize;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let c = chi.get(i, j, k);
                faces += usize::from(c != chi.get((i + 1) % n, j, k));
                faces += usize::from(c != chi.get(i, (j + 1) % n, k));
                faces += usize::from(c != chi.get(i, j, (k + 1) % n));
            }
        }
    }
    faces as f64 * chi.h() * chi.h()
}

/// `(∫χ, 2∫∫Gχχ, near, far)` for a screened kernel.
fn screened_terms(chi: &Field3, kernel: &KernelSpec, split: Option<&NearFarSplit>) -> Result<(f64, f64, Option<f64>, Option<f64>)> {
    let n = chi.n();
    let spectral = Spectral::get(n);
    let hat = spectral.forward(chi.values());
    let m = kernel.multiplier(n);
    let c = m.coeffs();
    let nonlocal = 2.0 * spectral.parseval(chi.ell(), &hat, &hat, |i| c[i]);
    let (near, far) = match split {
        Some(s) => {
            let (mn, mf) = split_multipliers(kernel, s, n)?;
            let (cn, cf) = (mn.coeffs(), mf.coeffs());
            (
                Some(2.0 * spectral.parseval(chi.ell(), &hat, &hat, |i| cn[i])),
                Some(2.0 * spectral.parseval(chi.ell(), &hat, &hat, |i| cf[i])),
            )
        }
        None => (None, None),
    };
    Ok((integrate(chi), nonlocal, near, far))
}

/// `ε^{4/3}λ²ℓ³/(2κ²) + εσ Per(χ) - (2ε^{2/3}λ/κ²)∫χ + 2∫∫G(x-y)χ(x)χ(y)`.
pub fn sharp_energy(chi: &Field3, p: &ModelParams, split: Option<&NearFarSplit>) -> Result<EnergyReport> {
    sharp_energy_with(chi, p, split, PerimeterEstimator::default())
}

pub fn sharp_energy_with(
    chi: &Field3,
    p: &ModelParams,
    split: Option<&NearFarSplit>,
    estimator: PerimeterEstimator,
) -> Result<EnergyReport> {
    check_binary(chi)?;
    check_params_grid(chi, p.ell)?;
    let kernel = KernelSpec::screened(p.kappa(), p.ell);
    let (mass, nonlocal, near, far) = screened_terms(chi, &kernel, split)?;
    let interfacial = p.eps * p.sigma() * perimeter(chi, estimator);
    let volume = -2.0 * p.eps.powf(2.0 / 3.0) * p.lambda / p.kappa2() * mass;
    let well = p.sharp_trivial() + volume;
    Ok(EnergyReport::assemble(EnergyKind::Sharp, interfacial, well, nonlocal, near, far, p.sharp_trivial(), p))
}

/// The sharp energy written on the rescaled torus of side `ell_eps`:
/// `ε^{4/3}λ²ℓ³/(2κ²) - ε^{5/3}σλ/(2κ²)∫χ̃ + ε^{5/3}σ^{5/3}4^{-2/3}[Per(χ̃) + ½∫∫G_ε χ̃χ̃]`.
pub fn rescaled_sharp_energy(chi_tilde: &Field3, p: &ModelParams) -> Result<EnergyReport> {
    rescaled_sharp_energy_with(chi_tilde, p, PerimeterEstimator::default())
}

pub fn rescaled_sharp_energy_with(chi_tilde: &Field3, p: &ModelParams, estimator: PerimeterEstimator) -> Result<EnergyReport> {
    check_binary(chi_tilde)?;
    check_params_grid(chi_tilde, p.ell_eps())?;
    let kernel = KernelSpec::rescaled(p.kappa(), p.ell_eps(), p.eps, p.sigma());
    let (mass, double, _, _) = screened_terms(chi_tilde, &kernel, None)?;
    let e53 = p.eps.powf(5.0 / 3.0);
    let prefactor = e53 * p.sigma().powf(5.0 / 3.0) / 4f64.powf(2.0 / 3.0);
    let interfacial = prefactor * perimeter(chi_tilde, estimator);
    // `double` is 2∫∫G_ε χ̃χ̃; the bracket carries half of ∫∫
    let nonlocal = prefactor * 0.25 * double;
    let volume = -e53 * p.sigma() * p.lambda / (2.0 * p.kappa2()) * mass;
    let well = p.sharp_trivial() + volume;
    Ok(EnergyReport::assemble(EnergyKind::RescaledSharp, interfacial, well, nonlocal, None, None, p.sharp_trivial(), p))
}
