//! Mass-constrained gradient flow for the diffuse energy.
//!
//! Semi-implicit spectral scheme: `ε²Δ` and a stabilizing `S·u` are implicit,
//! `W'(u) - S·u` and the nonlocal potential explicit. In Fourier space
//! `û ← û - ĝ / (1/dt + S + ε²|k|²)` with the zero mode held at `n³ ū`, so the
//! mean is conserved exactly at the discrete level.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::construct::{ball_centers, diffuse_balls, optimal_ball_count, resolve_radius, RadiusSpec};
use crate::energy::{diffuse_energy, diffuse_gradient, diffuse_gradient_parts, diffuse_parts, EnergyReport, ModelParams, SpectralOps};
use crate::error::{Error, Result};
use crate::grid::{read_dump, Field3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitSpec {
    /// `ū` plus mean-corrected uniform noise in `[-amplitude, amplitude]`.
    ConstantPlusNoise { amplitude: f64 },
    /// Diffuse balls (tanh profile) on the first `count` sites of a cubic lattice,
    /// shifted to the required mean.
    BallArray { count: usize, radius: RadiusSpec },
    /// A field dump, shifted to the required mean.
    FromFile { path: PathBuf },
    /// Noise below the upper end of the `λ_c` bracket, where the constant state
    /// is expected to win; above it, mass-matched balls at the optimal count.
    /// Noise alone stays near the constant state there, which is a strict
    /// local minimizer.
    Auto { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub n: usize,
    /// Time step; `None` means `0.1 ε²`.
    pub dt: Option<f64>,
    pub max_steps: usize,
    pub grad_tol: f64,
    /// Stop once a step lowers the energy by less than this (0 disables).
    pub energy_tol: f64,
    /// `None` means `max(2, sup W'' on [-1.2, 1.2])`.
    pub stabilizer: Option<f64>,
    pub seed: u64,
    pub init: InitSpec,
    pub max_halvings: u32,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            n: 64,
            dt: None,
            max_steps: 2000,
            grad_tol: 1e-6,
            energy_tol: 0.0,
            stabilizer: None,
            seed: 0,
            init: InitSpec::Auto { amplitude: 0.01 },
            max_halvings: 8,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if !(self.energy_tol >= 0.0) {
            return Err(Error::InvalidParameter("energy_tol must be nonnegative".into()));
        }
        if let Some(s) = self.stabilizer {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidParameter(format!("stabilizer must be nonnegative, got {s}")));
            }
        }
        if let InitSpec::ConstantPlusNoise { amplitude } | InitSpec::Auto { amplitude } = self.init {
            if !(amplitude >= 0.0 && amplitude < 1.0 + p.ubar()) {
                return Err(Error::InvalidParameter(format!(
                    "noise amplitude {amplitude} must lie in [0, 1 + ubar) = [0, {})",
                    1.0 + p.ubar()
                )));
            }
        }
        Ok(())
    }

    pub fn time_step(&self, p: &ModelParams) -> f64 {
        self.dt.unwrap_or(0.1 * p.eps * p.eps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub energy: f64,
    pub rescaled_energy: f64,
    pub lagrange: f64,
    pub sup_grad: f64,
}

#[derive(Clone, Debug)]
pub struct MinimizerResult {
    pub u: Field3,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub report: EnergyReport,
    pub final_dt: f64,
}

impl MinimizerResult {
    /// Writes `step,energy,rescaled_energy,lagrange,sup_grad`.
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        write_trace(&self.trace, path)
    }
}

pub fn write_trace(trace: &[TraceRow], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "step,energy,rescaled_energy,lagrange,sup_grad")?;
    for r in trace {
        writeln!(w, "{},{:.17e},{:.17e},{:.17e},{:.17e}", r.step, r.energy, r.rescaled_energy, r.lagrange, r.sup_grad)?;
    }
    w.flush()?;
    Ok(())
}

fn shift_to_mean(u: Field3, target: f64) -> Result<Field3> {
    let c = target - u.mean();
    u.map(|x| x + c)
}

/// Builds the initial field described by `cfg.init`.
pub fn initial_field(p: &ModelParams, cfg: &FlowConfig) -> Result<Field3> {
    let n = cfg.n;
    match &cfg.init {
        InitSpec::ConstantPlusNoise { amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let noise: Vec<f64> = (0..n * n * n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let m = noise.iter().sum::<f64>() / noise.len() as f64;
            let ub = p.ubar();
            Field3::new(n, p.ell, noise.iter().map(|x| ub + amplitude * (x - m)).collect())
        }
        InitSpec::BallArray { count, radius } => {
            let r = resolve_radius(radius, p, *count)?;
            let centers = ball_centers(*count, p.ell)?;
            shift_to_mean(diffuse_balls(n, p, &centers, r)?, p.ubar())
        }
        InitSpec::Auto { amplitude } => {
            let (_, hi) = p.lambda_c_bracket();
            let init = if p.lambda > hi {
                InitSpec::BallArray { count: optimal_ball_count(p), radius: RadiusSpec::MassMatched }
            } else {
                InitSpec::ConstantPlusNoise { amplitude: *amplitude }
            };
            initial_field(p, &FlowConfig { init, ..cfg.clone() })
        }
        InitSpec::FromFile { path } => {
            let (u, _) = read_dump(path)?;
            if u.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: u.n() });
            }
            shift_to_mean(u.with_ell(p.ell)?, p.ubar())
        }
    }
}

pub fn minimize(p: &ModelParams, cfg: &FlowConfig) -> Result<MinimizerResult> {
    cfg.validate(p)?;
    let u0 = initial_field(p, cfg)?;
    minimize_from(p, cfg, u0)
}

/// Runs the flow from `u0` (whose mean must already equal `ū`).
pub fn minimize_from(p: &ModelParams, cfg: &FlowConfig, u0: Field3) -> Result<MinimizerResult> {
    cfg.validate(p)?;
    let n = u0.n();
    let ops = SpectralOps::new(n, u0.ell());
    // validates the mass constraint and grid
    diffuse_energy(&u0, p)?;
    let symbol = ops.linear_symbol(p.eps);
    let stab = cfg.stabilizer.unwrap_or_else(|| p.well.default_stabilizer());
    let implicit: Vec<f64> = ops.k2.iter().map(|k2| stab + p.eps * p.eps * k2).collect();
    let nn = (n * n * n) as f64;
    let zero_mode = Complex64::new(nn * p.ubar(), 0.0);
    let scale = p.energy_scale();

    let mut u = u0.into_values();
    let mut uhat = ops.spectral.forward(&u);
    uhat[0] = zero_mode;
    let total = |u: &[f64], uhat: &[Complex64]| {
        let (a, b, c) = diffuse_parts(&ops, u, uhat, p);
        a + b + c
    };
    let mut energy = total(&u, &uhat);
    let mut dt = cfg.time_step(p);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut failures = 0u32;

    for step in 0..=cfg.max_steps {
        let (g, lagrange) = diffuse_gradient_parts(&ops, &symbol, &u, &uhat, p);
        let sup_grad = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        trace.push(TraceRow { step, energy, rescaled_energy: energy * scale, lagrange, sup_grad });
        if step % 100 == 0 {
            log::info!("step {step}: energy {:.12e} sup|g| {sup_grad:.3e} dt {dt:.3e}", energy * scale);
        }
        if sup_grad <= cfg.grad_tol {
            converged = true;
            break;
        }
        if step == cfg.max_steps {
            break;
        }
        let ghat = ops.spectral.forward(&g);
        let mut accepted = None;
        for halving in 0..=cfg.max_halvings {
            let inv_dt = 1.0 / dt;
            let mut cand: Vec<Complex64> =
                uhat.iter().zip(&ghat).zip(&implicit).map(|((a, b), s)| a - b / (inv_dt + s)).collect();
            cand[0] = zero_mode;
            let cu = ops.spectral.inverse(cand.clone());
            let e = total(&cu, &cand);
            if e.is_finite() && e <= energy + 1e-12 * energy.abs().max(1e-300) {
                accepted = Some((cu, cand, e, true));
                break;
            }
            if halving == cfg.max_halvings {
                accepted = Some((cu, cand, e, false));
            } else {
                dt *= 0.5;
            }
        }
        let (cu, cand, e, ok) = accepted.expect("loop always produces a candidate");
        if ok {
            failures = 0;
        } else {
            failures += 1;
            log::warn!("step {step}: energy rose to {e:e} from {energy:e} at dt {dt:e}");
            if failures >= 10 || !e.is_finite() {
                return Err(Error::Divergence(format!(
                    "energy failed to decrease for {failures} consecutive steps at step {step} (dt = {dt:e}, energy {e:e})"
                )));
            }
        }
        let decrease = energy - e;
        u = cu;
        uhat = cand;
        energy = e;
        if ok && cfg.energy_tol > 0.0 && decrease < cfg.energy_tol {
            let (g, lagrange) = diffuse_gradient_parts(&ops, &symbol, &u, &uhat, p);
            let sup_grad = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            trace.push(TraceRow { step: step + 1, energy, rescaled_energy: energy * scale, lagrange, sup_grad });
            converged = sup_grad <= cfg.grad_tol;
            break;
        }
    }
    let u = Field3::from_parts(n, p.ell, u)?;
    let report = diffuse_energy(&u, p)?;
    Ok(MinimizerResult { u, trace, converged, report, final_dt: dt })
}

/// Sup norm of the constrained gradient `-ε²Δu + W'(u) + v - Λ`.
pub fn el_residual(u: &Field3, p: &ModelParams) -> Result<f64> {
    Ok(diffuse_gradient(u, p)?.0.sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> ModelParams {
        ModelParams::quartic(0.1, 2.0, 1.0).unwrap()
    }

    #[test]
    fn trivial_state_residual() {
        let p = small_params();
        let u = Field3::constant(16, 1.0, p.ubar()).unwrap();
        assert!(el_residual(&u, &p).unwrap() < 1e-15);
    }

    #[test]
    fn residual_matches_gradient() {
        let p = small_params();
        let cfg = FlowConfig { n: 16, init: InitSpec::ConstantPlusNoise { amplitude: 0.3 }, seed: 4, ..Default::default() };
        let u = initial_field(&p, &cfg).unwrap();
        let (g, _) = diffuse_gradient(&u, &p).unwrap();
        let r = el_residual(&u, &p).unwrap();
        assert!(r > 0.0 && r == g.sup_norm());
    }

    #[test]
    fn invalid_configs_rejected() {
        let p = small_params();
        let bad_dt = FlowConfig { dt: Some(-1.0), ..Default::default() };
        assert!(bad_dt.validate(&p).is_err());
        let bad_amp = FlowConfig { init: InitSpec::ConstantPlusNoise { amplitude: 1.0 }, ..Default::default() };
        assert!(bad_amp.validate(&p).is_err());
    }

    #[test]
    fn flow_dissipates_and_conserves_mass() {
        let p = small_params();
        let cfg = FlowConfig {
            n: 16,
            dt: Some(0.5),
            max_steps: 60,
            grad_tol: 1e-10,
            init: InitSpec::ConstantPlusNoise { amplitude: 0.3 },
            seed: 1,
            ..Default::default()
        };
        let res = minimize(&p, &cfg).unwrap();
        for w in res.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs());
        }
        assert!((res.u.mean() - p.ubar()).abs() < 1e-13);
        assert!(res.trace.last().unwrap().energy < res.trace[0].energy);
    }

    #[test]
    fn flow_is_deterministic() {
        let p = small_params();
        let cfg = FlowConfig {
            n: 16,
            dt: Some(0.5),
            max_steps: 20,
            init: InitSpec::ConstantPlusNoise { amplitude: 0.2 },
            seed: 8,
            ..Default::default()
        };
        let a = minimize(&p, &cfg).unwrap();
        let b = minimize(&p, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn symmetric_init_stays_symmetric() {
        let p = small_params();
        let ub = p.ubar();
        let u0 = Field3::from_fn(16, 1.0, |x| {
            let c = |t: f64| (2.0 * std::f64::consts::PI * t).cos();
            ub + 0.2 * c(x[0]) * c(x[1]) + 0.1 * c(2.0 * x[2]) + 0.05 * (2.0 * std::f64::consts::PI * (x[0] + x[1])).cos()
        })
        .unwrap();
        let u0 = shift_to_mean(u0, ub).unwrap();
        let cfg = FlowConfig { n: 16, dt: Some(0.2), max_steps: 100, grad_tol: 1e-14, ..Default::default() };
        let res = minimize_from(&p, &cfg, u0).unwrap();
        let r = res.u.reflected();
        for (a, b) in res.u.values().iter().zip(r.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let row = TraceRow { step: 0, energy: 1.0, rescaled_energy: 2.0, lagrange: 0.1, sup_grad: 0.5 };
        write_trace(&[row], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,energy,rescaled_energy,lagrange,sup_grad\n0,"));
    }
}
