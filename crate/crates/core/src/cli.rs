//! Experiment runner behind the `okdrop` binary: one JSON config in, a
//! directory of reports, traces and field dumps out.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::construct::{ball_array, optimal_ball_count, RadiusSpec};
use crate::droplets::{droplet_diagnostics, label_components, measure_of, potential_of, threshold_sign, MeasureVariant};
use crate::energy::{ModelParams, PerimeterEstimator, WellPotential};
use crate::error::{Error, Result};
use crate::flow::{el_residual, minimize, FlowConfig, MinimizerResult};
use crate::gamow::{
    ball_energy, dilation_optimize, f_star_bounds, isoperimetric_bound, optimal_ball, shape_energy, ShapeRecord, StarShape,
    DEFAULT_LMAX_KERNEL,
};
use crate::greens::{
    default_shells, lattice_sum, mass_identity_check, sampled_green, spectral_point_values, split_kernels, KernelSpec,
    NearFarSplit,
};
use crate::grid::{write_dump, FieldKind};
use crate::limit::{limit_band, minimize_e0, LimitParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Minimize,
    SweepLambda,
    SweepEps,
    Gamow,
    GreensCheck,
    E0Report,
    BallArray,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WellChoice {
    #[default]
    Quartic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub epsilon: f64,
    pub lambda: f64,
    pub ell: f64,
    pub well: WellChoice,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { epsilon: 0.02, lambda: 2.0, ell: 1.0, well: WellChoice::Quartic }
    }
}

impl ParamsConfig {
    pub fn model(&self) -> Result<ModelParams> {
        let well = match self.well {
            WellChoice::Quartic => WellPotential::quartic(),
        };
        ModelParams::new(self.epsilon, self.lambda, self.ell, well)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallArrayConfig {
    pub n: usize,
    /// `k`, giving `k³` balls; overrides `count`.
    pub count_per_axis: Option<usize>,
    /// Total ball count on a partially filled lattice; `None` picks the count
    /// whose optimal balls carry the limit mass.
    pub count: Option<usize>,
    pub radius: RadiusSpec,
    pub estimator: PerimeterEstimator,
}

impl Default for BallArrayConfig {
    fn default() -> Self {
        Self { n: 64, count_per_axis: None, count: None, radius: RadiusSpec::Optimal, estimator: PerimeterEstimator::Mollified }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensConfig {
    pub n: usize,
    /// Defaults to the well's `κ`.
    pub kappa: Option<f64>,
    pub points: usize,
    pub seed: u64,
    pub rho: f64,
}

impl Default for GreensConfig {
    fn default() -> Self {
        Self { n: 64, kappa: None, points: 10, seed: 0, rho: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GamowConfig {
    pub random_shapes: usize,
    pub degree: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub lmax_kernel: usize,
}

impl Default for GamowConfig {
    fn default() -> Self {
        Self { random_shapes: 20, degree: 4, amplitude: 0.3, seed: 0, lmax_kernel: DEFAULT_LMAX_KERNEL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    /// `λ` values for `sweep-lambda` and `e0-report`, `ε` values for `sweep-eps`.
    #[serde(default)]
    pub sweep: Vec<f64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub ball_array: BallArrayConfig,
    #[serde(default)]
    pub greens: GreensConfig,
    #[serde(default)]
    pub gamow: GamowConfig,
    /// Write binary field dumps next to the reports.
    #[serde(default = "default_true")]
    pub dump_fields: bool,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_threads() -> usize {
    1
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        serde_json::from_value(json!({ "command": command })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Seed override applied to every random source.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.flow.seed = seed;
        self.greens.seed = seed;
        self.gamow.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if matches!(self.command, Command::SweepLambda | Command::SweepEps) && self.sweep.is_empty() {
            return Err(Error::Config("sweep commands need a non-empty sweep list".into()));
        }
        if self.sweep.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
        Ok(())
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Runs one config, writes its artifacts and returns the report that went to
/// `report.json`.
pub fn run(config: &RunConfig) -> Result<Value> {
    config.validate()?;
    prepare_dir(&config.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let body = pool.install(|| match config.command {
        Command::Minimize => run_minimize(config),
        Command::SweepLambda => run_sweep(config, SweepAxis::Lambda),
        Command::SweepEps => run_sweep(config, SweepAxis::Eps),
        Command::Gamow => run_gamow(config),
        Command::GreensCheck => run_greens(config),
        Command::E0Report => run_e0(config),
        Command::BallArray => run_ball_array(config),
    })?;
    let report = json!({ "command": config.command, "config": config, "result": body });
    write_json(&config.output_dir.join("report.json"), &report)?;
    Ok(report)
}

/// Flow run plus the droplet and measure analysis of its output; artifacts go to `dir`.
fn minimize_and_report(p: &ModelParams, flow: &FlowConfig, dir: &Path, dump: bool) -> Result<Value> {
    let res: MinimizerResult = minimize(p, flow)?;
    res.write_trace(&dir.join("energy_trace.csv"))?;
    let chi = threshold_sign(&res.u);
    let ds = label_components(&chi)?.with_params(p);
    ds.write_csv(&dir.join("droplets.csv"))?;
    let mu = measure_of(&res.u, p, MeasureVariant::Thresholded)?;
    let raw = measure_of(&res.u, p, MeasureVariant::SignedRaw).ok().map(|m| m.total);
    if dump {
        write_dump(&dir.join("u.bin"), &res.u, p.eps, p.lambda, FieldKind::U)?;
        write_dump(&dir.join("chi.bin"), &chi, p.eps, p.lambda, FieldKind::Chi)?;
        let v = potential_of(&mu, p)?;
        write_dump(&dir.join("v.bin"), &v, p.eps, p.lambda, FieldKind::V)?;
    }
    let band = limit_band(p.lambda, p.ell, &p.well)?;
    let last = res.trace.last().expect("trace has the initial row");
    Ok(json!({
        "params": p.echo(),
        "converged": res.converged,
        "steps": last.step,
        "final_dt": res.final_dt,
        "el_residual": el_residual(&res.u, p)?,
        "energy": res.report,
        "rescaled_energy": res.report.rescaled,
        "trivial_reference": p.lambda * p.lambda * p.ell.powi(3) / (2.0 * p.kappa2()),
        "diffuse_trivial_rescaled": p.diffuse_trivial() * p.energy_scale(),
        "sup_deviation_from_ubar": res.u.values().iter().map(|x| (x - p.ubar()).abs()).fold(0.0, f64::max),
        "measure_total": mu.total,
        "measure_total_raw": raw,
        "limit_band": band,
        "droplets": droplet_diagnostics(&ds, p),
    }))
}

fn run_minimize(config: &RunConfig) -> Result<Value> {
    let p = config.params.model()?;
    minimize_and_report(&p, &config.flow, &config.output_dir, config.dump_fields)
}

#[derive(Clone, Copy)]
enum SweepAxis {
    Lambda,
    Eps,
}

fn run_sweep(config: &RunConfig, axis: SweepAxis) -> Result<Value> {
    let runs: Vec<Result<Value>> = config
        .sweep
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut pc = config.params.clone();
            match axis {
                SweepAxis::Lambda => pc.lambda = x,
                SweepAxis::Eps => pc.epsilon = x,
            }
            let p = pc.model()?;
            let dir = config.output_dir.join(format!("run_{i:03}"));
            prepare_dir(&dir)?;
            let mut r = minimize_and_report(&p, &config.flow, &dir, config.dump_fields)?;
            r["value"] = json!(x);
            r["dir"] = json!(dir.file_name().map(|s| s.to_string_lossy().into_owned()));
            Ok(r)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let key = match axis {
        SweepAxis::Lambda => "lambda",
        SweepAxis::Eps => "epsilon",
    };
    Ok(json!({ "axis": key, "runs": runs }))
}

fn run_gamow(config: &RunConfig) -> Result<Value> {
    let g = &config.gamow;
    let (r_star, f_ball) = optimal_ball();
    let ball = shape_energy(&StarShape::ball(r_star)?, g.lmax_kernel)?;
    let (lo, hi) = f_star_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut records = vec![ShapeRecord::new(&StarShape::ball(r_star)?, &ball)];
    let mut min_slack = ball.perimeter - isoperimetric_bound(ball.mass);
    for _ in 0..g.random_shapes {
        let base = rng.gen_range(0.5 * r_star..2.0 * r_star);
        let s = StarShape::random(&mut rng, base, g.degree, g.amplitude)?;
        let (t, e) = dilation_optimize(&s)?;
        let dilated = s.dilated(t);
        min_slack = min_slack.min(e.perimeter - isoperimetric_bound(e.mass));
        records.push(ShapeRecord::new(&dilated, &e));
    }
    write_json(&config.output_dir.join("shapes.json"), &serde_json::to_value(&records)?)?;
    let best = records.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    Ok(json!({
        "r_star": r_star,
        "f_ball": f_ball,
        "ball_closed_form": ball_energy(r_star)?,
        "ball_quadrature": ball,
        "f_star_bounds": [lo, hi],
        "volume_bound": 32.0 * std::f64::consts::PI,
        "shape_count": records.len(),
        "best_competitor_f": best,
        "min_isoperimetric_slack": min_slack,
    }))
}

fn run_greens(config: &RunConfig) -> Result<Value> {
    let gc = &config.greens;
    let p = config.params.model()?;
    let kappa = gc.kappa.unwrap_or_else(|| p.kappa());
    let kernel = KernelSpec::screened(kappa, p.ell);
    kernel.validate()?;
    let n = gc.n;
    let mass = mass_identity_check(&kernel, n)?;
    let shells = default_shells(&kernel)?;
    // nodes at least an eighth of the side from the singular origin
    let mut rng = ChaCha8Rng::seed_from_u64(gc.seed);
    let far_node = |rng: &mut ChaCha8Rng| {
        loop {
            let idx = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            let r2: f64 = idx.iter().map(|&i| (i.min(n - i) as f64 / n as f64).powi(2)).sum();
            if r2.sqrt() >= 0.125 {
                return idx;
            }
        }
    };
    let nodes: Vec<[usize; 3]> = (0..gc.points).map(|_| far_node(&mut rng)).collect();
    let spectral = spectral_point_values(&kernel, n, &nodes)?;
    let h = p.ell / n as f64;
    let mut points = Vec::new();
    let mut max_dev = 0.0f64;
    for (idx, s) in nodes.iter().zip(&spectral) {
        let x = idx.map(|i| i as f64 * h);
        let direct = lattice_sum(&kernel, x, shells)?;
        max_dev = max_dev.max((direct - s).abs());
        points.push(json!({ "index": idx, "x": x, "lattice_sum": direct, "spectral": s }));
    }
    let split = NearFarSplit::new(gc.rho)?;
    let (near, far) = split_kernels(&kernel, &split, n)?;
    let g = sampled_green(&kernel, n)?;
    let partition = g
        .values()
        .iter()
        .zip(near.values().iter().zip(far.values()))
        .map(|(g, (a, b))| (a + b - g).abs())
        .fold(0.0, f64::max);
    Ok(json!({
        "kappa": kappa,
        "ell": p.ell,
        "n": n,
        "mass_identity": mass,
        "mass_identity_expected": 1.0 / (kappa * kappa),
        "shells": shells,
        "lattice_vs_spectral_max_deviation": max_dev,
        "points": points,
        "rho": gc.rho,
        "near_far_partition_max_deviation": partition,
    }))
}

fn run_e0(config: &RunConfig) -> Result<Value> {
    // the limit problem does not involve ε, so only λ, ℓ and the well enter
    let base = config.params.model()?;
    let (lo, hi) = base.lambda_c_bracket();
    let lambdas = if config.sweep.is_empty() { vec![base.lambda] } else { config.sweep.clone() };
    let kappa = base.kappa();
    let ell = base.ell;
    let entries = lambdas
        .iter()
        .map(|&lambda| {
            Ok(json!({
                "lambda": lambda,
                "lambda_c_lower": minimize_e0(&LimitParams::new(lambda, ell, kappa, lo)?),
                "lambda_c_upper": minimize_e0(&LimitParams::new(lambda, ell, kappa, hi)?),
                "band": limit_band(lambda, ell, &base.well)?,
                "trivial": lambda * lambda * ell.powi(3) / (2.0 * kappa * kappa),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "lambda_c_bracket": [lo, hi], "kappa": kappa, "ell": ell, "entries": entries }))
}

fn run_ball_array(config: &RunConfig) -> Result<Value> {
    let p = config.params.model()?;
    let bc = &config.ball_array;
    let count = match (bc.count_per_axis, bc.count) {
        (Some(k), _) => k.pow(3),
        (None, Some(c)) => c,
        (None, None) => optimal_ball_count(&p),
    };
    let arr = ball_array(&p, bc.n, count, &bc.radius, bc.estimator)?;
    let chi = arr.chi.as_ref().expect("construction keeps its indicator");
    let ds = label_components(chi)?.with_params(&p);
    ds.write_csv(&config.output_dir.join("droplets.csv"))?;
    if config.dump_fields {
        write_dump(&config.output_dir.join("chi.bin"), chi, p.eps, p.lambda, FieldKind::Chi)?;
    }
    Ok(json!({
        "params": p.echo(),
        "construction": arr,
        "rescaled_energy": arr.report.rescaled,
        "droplets": droplet_diagnostics(&ds, &p),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_defaults() {
        let c = RunConfig::from_json(r#"{"command": "greens-check", "params": {"epsilon": 0.05}}"#).unwrap();
        assert_eq!(c.command, Command::GreensCheck);
        assert_eq!(c.params.epsilon, 0.05);
        assert_eq!(c.params.lambda, 2.0);
        assert_eq!(c.threads, 1);
        let again = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn bad_configs() {
        assert!(matches!(RunConfig::from_json("{"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"command": "fly"}"#), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"command": "gamow", "colour": 1}"#).is_err());
        let mut c = RunConfig::new(Command::SweepLambda);
        assert!(c.validate().is_err());
        c.sweep = vec![0.5, 0.3];
        assert!(c.validate().is_err());
        c.sweep = vec![0.3, 0.5];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn seed_override_reaches_all_sources() {
        let c = RunConfig::new(Command::Minimize).with_seed(77);
        assert_eq!((c.flow.seed, c.greens.seed, c.gamow.seed), (77, 77, 77));
    }
}
