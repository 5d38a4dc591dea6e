//! Minority-phase extraction, periodic connected-component labeling, droplet
//! statistics, and the rescaled measures with their screened potentials.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{check_binary, ModelParams};
use crate::error::{Error, Result};
use crate::greens::{solve, KernelSpec};
use crate::grid::{integrate, Field3};

/// Indicator of `{u > 0}`.
pub fn threshold_sign(u: &Field3) -> Field3 {
    u.map(|x| if x > 0.0 { 1.0 } else { 0.0 }).expect("indicator values are finite")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Droplet {
    pub id: usize,
    pub cells: usize,
    /// `h³ · cells`.
    pub volume: f64,
    /// Euclidean norm of the three wrapped per-axis extents.
    pub diameter: f64,
    /// Periodic mean position, in `[0, ell)³`.
    pub centroid: [f64; 3],
    /// `ε^{-2/3} · volume`, once parameters are attached.
    pub rescaled_mass: Option<f64>,
}

/// Components of `{χ = 1}` under face adjacency with periodic wrap; label 0 is
/// the majority phase and droplet labels run from 1 in scan order.
#[derive(Clone, Debug, PartialEq)]
pub struct DropletSet {
    pub n: usize,
    pub ell: f64,
    pub labels: Vec<u32>,
    pub droplets: Vec<Droplet>,
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        Self { parent: (0..len as u32).collect(), size: vec![1; len] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
    }
}

/// Largest run of unoccupied indices on a cyclic axis, as `(start, length)`.
fn largest_gap(occupied: &[bool]) -> Option<(usize, usize)> {
    let n = occupied.len();
    let first = occupied.iter().position(|&o| o)?;
    let mut best = (0, 0);
    let mut run = 0;
    // walk once around the circle starting just after an occupied index
    for step in 1..=n {
        let i = (first + step) % n;
        if occupied[i] {
            if run > best.1 {
                best = ((i + n - run) % n, run);
            }
            run = 0;
        } else {
            run += 1;
        }
    }
    Some(best)
}

pub fn label_components(chi: &Field3) -> Result<DropletSet> {
    check_binary(chi)?;
    let n = chi.n();
    let len = n * n * n;
    let v = chi.values();
    let mut uf = UnionFind::new(len);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let a = chi.index(i, j, k);
                if v[a] != 1.0 {
                    continue;
                }
                for b in [chi.index((i + 1) % n, j, k), chi.index(i, (j + 1) % n, k), chi.index(i, j, (k + 1) % n)] {
                    if v[b] == 1.0 {
                        uf.union(a as u32, b as u32);
                    }
                }
            }
        }
    }
    let mut labels = vec![0u32; len];
    let mut root_label = vec![0u32; len];
    let mut next = 0u32;
    for a in 0..len {
        if v[a] == 1.0 {
            let r = uf.find(a as u32) as usize;
            if root_label[r] == 0 {
                next += 1;
                root_label[r] = next;
            }
            labels[a] = root_label[r];
        }
    }
    let count = next as usize;
    let mut cells = vec![0usize; count];
    let mut occupied = vec![vec![vec![false; n]; 3]; count];
    for a in 0..len {
        let l = labels[a] as usize;
        if l > 0 {
            let c = [a % n, (a / n) % n, a / (n * n)];
            cells[l - 1] += 1;
            for ax in 0..3 {
                occupied[l - 1][ax][c[ax]] = true;
            }
        }
    }
    // per axis: start of the unwrapped window, or None when the axis is spanned
    let h = chi.h();
    let mut windows = vec![[None; 3]; count];
    let mut extents = vec![[0.0; 3]; count];
    for d in 0..count {
        for ax in 0..3 {
            let (start, gap) = largest_gap(&occupied[d][ax]).expect("nonempty component");
            if gap == 0 {
                extents[d][ax] = n as f64 * h;
            } else {
                windows[d][ax] = Some((start + gap) % n);
                extents[d][ax] = (n - gap) as f64 * h;
            }
        }
    }
    let mut lin = vec![[0.0; 3]; count];
    let mut trig = vec![[(0.0, 0.0); 3]; count];
    for a in 0..len {
        let l = labels[a] as usize;
        if l == 0 {
            continue;
        }
        let c = [a % n, (a / n) % n, a / (n * n)];
        for ax in 0..3 {
            match windows[l - 1][ax] {
                Some(s) => lin[l - 1][ax] += ((c[ax] + n - s) % n) as f64,
                None => {
                    let t = 2.0 * PI * c[ax] as f64 / n as f64;
                    trig[l - 1][ax].0 += t.cos();
                    trig[l - 1][ax].1 += t.sin();
                }
            }
        }
    }
    let droplets = (0..count)
        .map(|d| {
            let m = cells[d] as f64;
            let mut centroid = [0.0; 3];
            for ax in 0..3 {
                let idx = match windows[d][ax] {
                    Some(s) => lin[d][ax] / m + s as f64,
                    None => {
                        let (c, s) = trig[d][ax];
                        s.atan2(c).rem_euclid(2.0 * PI) * n as f64 / (2.0 * PI)
                    }
                };
                centroid[ax] = (idx * h).rem_euclid(chi.ell());
            }
            Droplet {
                id: d + 1,
                cells: cells[d],
                volume: m * h * h * h,
                diameter: extents[d].iter().map(|e| e * e).sum::<f64>().sqrt(),
                centroid,
                rescaled_mass: None,
            }
        })
        .collect();
    Ok(DropletSet { n, ell: chi.ell(), labels, droplets })
}

impl DropletSet {
    pub fn count(&self) -> usize {
        self.droplets.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.droplets.iter().map(|d| d.volume).sum()
    }

    /// Fills in `ε^{-2/3} · volume` for every droplet.
    pub fn with_params(mut self, p: &ModelParams) -> Self {
        let s = p.eps.powf(-2.0 / 3.0);
        for d in &mut self.droplets {
            d.rescaled_mass = Some(s * d.volume);
        }
        self
    }

    /// Largest distance between cell centers of droplet `id`, with each axis
    /// unwrapped across its largest gap. Quadratic in the droplet's cell count.
    pub fn exact_diameter(&self, id: usize) -> Option<f64> {
        let n = self.n;
        let h = self.ell / n as f64;
        let pts: Vec<[usize; 3]> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l as usize == id)
            .map(|(a, _)| [a % n, (a / n) % n, a / (n * n)])
            .collect();
        if pts.is_empty() {
            return None;
        }
        let mut unwrapped = vec![[0.0; 3]; pts.len()];
        for ax in 0..3 {
            let mut occ = vec![false; n];
            pts.iter().for_each(|p| occ[p[ax]] = true);
            let (start, gap) = largest_gap(&occ).expect("nonempty");
            let s = (start + gap) % n;
            for (u, p) in unwrapped.iter_mut().zip(&pts) {
                u[ax] = ((p[ax] + n - s) % n) as f64 * h;
            }
        }
        let mut best = 0.0f64;
        for (i, a) in unwrapped.iter().enumerate() {
            for b in &unwrapped[i + 1..] {
                best = best.max((0..3).map(|ax| (a[ax] - b[ax]).powi(2)).sum::<f64>());
            }
        }
        Some(best.sqrt())
    }

    /// Writes `id,volume,diameter,centroid_x,centroid_y,centroid_z,rescaled_mass`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "id,volume,diameter,centroid_x,centroid_y,centroid_z,rescaled_mass")?;
        for d in &self.droplets {
            let rm = d.rescaled_mass.map(|m| format!("{m:.17e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                d.id, d.volume, d.diameter, d.centroid[0], d.centroid[1], d.centroid[2], rm
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropletRatio {
    pub id: usize,
    pub diameter_over_eps13: f64,
    pub volume_over_eps: f64,
}

/// Scale-free droplet statistics; no thresholds are applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropletDiagnostics {
    pub count: usize,
    pub droplets: Vec<DropletRatio>,
    pub diameter_spread: f64,
    pub volume_spread: f64,
    /// `(λ - λ_c) ε^{-1/3}` at the lower and upper ends of the `λ_c` bracket.
    pub count_reference_lambda_c_lower: f64,
    pub count_reference_lambda_c_upper: f64,
    pub total_rescaled_mass: f64,
}

pub fn droplet_diagnostics(ds: &DropletSet, p: &ModelParams) -> DropletDiagnostics {
    let e13 = p.eps.cbrt();
    let droplets: Vec<DropletRatio> = ds
        .droplets
        .iter()
        .map(|d| DropletRatio { id: d.id, diameter_over_eps13: d.diameter / e13, volume_over_eps: d.volume / p.eps })
        .collect();
    let spread = |f: &dyn Fn(&DropletRatio) -> f64| {
        let (lo, hi) = droplets.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if droplets.is_empty() {
            0.0
        } else {
            hi - lo
        }
    };
    let (lo, hi) = p.lambda_c_bracket();
    DropletDiagnostics {
        count: ds.count(),
        diameter_spread: spread(&|d| d.diameter_over_eps13),
        volume_spread: spread(&|d| d.volume_over_eps),
        droplets,
        count_reference_lambda_c_lower: (p.lambda - lo) / e13,
        count_reference_lambda_c_upper: (p.lambda - hi) / e13,
        total_rescaled_mass: ds.total_volume() * p.eps.powf(-2.0 / 3.0),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("slope fit needs two or more paired points".into()));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("slope fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureVariant {
    /// `½ε^{-2/3}(1 + u)`, requiring `u ≥ -1`.
    SignedRaw,
    /// `½ε^{-2/3}(1 + u⁰)` with `u⁰ = ±1` the sign of `u`.
    Thresholded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureField {
    pub density: Field3,
    pub total: f64,
}

impl MeasureField {
    pub fn new(density: Field3) -> Result<Self> {
        let min = density.min();
        if min < 0.0 {
            return Err(Error::NegativeDensity { min });
        }
        let total = integrate(&density);
        Ok(Self { density, total })
    }
}

pub fn measure_of(u: &Field3, p: &ModelParams, variant: MeasureVariant) -> Result<MeasureField> {
    let s = 0.5 * p.eps.powf(-2.0 / 3.0);
    let density = match variant {
        MeasureVariant::SignedRaw => {
            let min = u.min();
            if min < -1.0 {
                return Err(Error::NegativeDensity { min: s * (1.0 + min) });
            }
            u.map(|x| s * (1.0 + x))?
        }
        MeasureVariant::Thresholded => u.map(|x| if x > 0.0 { 2.0 * s } else { 0.0 })?,
    };
    MeasureField::new(density)
}

/// `v` with `-Δv + κ²v = μ`.
pub fn potential_of(mu: &MeasureField, p: &ModelParams) -> Result<Field3> {
    solve(&KernelSpec::screened(p.kappa(), mu.density.ell()), &mu.density)
}
