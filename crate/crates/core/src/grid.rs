//! Periodic scalar fields on a uniform `n³` grid over the torus of side `ell`,
//! quadrature, and spectral application of Fourier multipliers.
//!
//! Storage is x-fastest: `index = i + n * (j + n * k)`. The real-to-complex
//! transform runs along x, so a spectrum holds `(n/2 + 1) * n * n` coefficients
//! with the same ordering (`kx` fastest). Wave vectors are `2π m / ell` with
//! `m ∈ {-n/2, …, n/2 - 1}` on every axis.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real scalar field sampled on the periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field3 {
    n: usize,
    ell: f64,
    values: Vec<f64>,
}

impl Field3 {
    pub fn new(n: usize, ell: f64, values: Vec<f64>) -> Result<Self> {
        check_grid(n, ell)?;
        if values.len() != n * n * n {
            return Err(Error::InvalidField(format!(
                "expected {} values for n = {n}, got {}",
                n * n * n,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at index {i}")));
        }
        Ok(Self { n, ell, values })
    }

    pub fn constant(n: usize, ell: f64, c: f64) -> Result<Self> {
        Self::new(n, ell, vec![c; n * n * n])
    }

    /// Samples `f` at the grid nodes `x = h * (i, j, k)`.
    pub fn from_fn(n: usize, ell: f64, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        check_grid(n, ell)?;
        let h = ell / n as f64;
        let mut values = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    values.push(f([i as f64 * h, j as f64 * h, k as f64 * h]));
                }
            }
        }
        Self::new(n, ell, values)
    }

    /// Wraps values produced by this crate's own arithmetic, re-checking finiteness.
    pub(crate) fn from_parts(n: usize, ell: f64, values: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(values.len(), n * n * n);
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at index {i}")));
        }
        Ok(Self { n, ell, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Grid spacing `ell / n`.
    pub fn h(&self) -> f64 {
        self.ell / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Same grid, values replaced by `f` applied pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_parts(self.n, self.ell, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Same torus, values rescaled onto a torus of side `ell` (the values are untouched).
    pub fn with_ell(&self, ell: f64) -> Result<Self> {
        check_grid(self.n, ell)?;
        Ok(Self { n: self.n, ell, values: self.values.clone() })
    }

    pub fn check_same_grid(&self, other: &Field3) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if (self.ell - other.ell).abs() > 1e-12 * self.ell {
            return Err(Error::InvalidParameter(format!(
                "torus sides differ: {} vs {}",
                self.ell, other.ell
            )));
        }
        Ok(())
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Field3, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::from_parts(self.n, self.ell, values)
    }

    pub fn mean(&self) -> f64 {
        slab_sum(&self.values, self.n) / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ self · other dx` by the grid rule.
    pub fn inner(&self, other: &Field3) -> Result<f64> {
        self.check_same_grid(other)?;
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(self.cell_volume() * slab_sum(&prod, self.n))
    }

    /// Translation by whole cells: `out(x) = self(x - shift·h)`.
    pub fn translated(&self, shift: [isize; 3]) -> Self {
        let n = self.n;
        let wrap = |a: usize, s: isize| (a as isize - s).rem_euclid(n as isize) as usize;
        let mut values = vec![0.0; self.values.len()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    values[self.index(i, j, k)] =
                        self.get(wrap(i, shift[0]), wrap(j, shift[1]), wrap(k, shift[2]));
                }
            }
        }
        Self { n, ell: self.ell, values }
    }

    /// Point reflection `out(x) = self(-x)`.
    pub fn reflected(&self) -> Self {
        let n = self.n;
        let neg = |a: usize| (n - a) % n;
        let mut values = vec![0.0; self.values.len()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    values[self.index(i, j, k)] = self.get(neg(i), neg(j), neg(k));
                }
            }
        }
        Self { n, ell: self.ell, values }
    }
}

fn check_grid(n: usize, ell: f64) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidField(format!("grid size must be even and >= 4, got {n}")));
    }
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::InvalidField(format!("torus side must be positive, got {ell}")));
    }
    Ok(())
}

fn pairwise(parts: &[f64]) -> f64 {
    match parts.len() {
        0 => 0.0,
        1 => parts[0],
        len => {
            let mid = len / 2;
            pairwise(&parts[..mid]) + pairwise(&parts[mid..])
        }
    }
}

/// Deterministic reduction: each x-row is summed in storage order, then the
/// row partials are combined pairwise.
pub(crate) fn slab_sum(values: &[f64], n: usize) -> f64 {
    let parts: Vec<f64> = values.chunks(n).map(|c| c.iter().sum()).collect();
    pairwise(&parts)
}

/// `∫ f dx = h³ Σ f`.
pub fn integrate(f: &Field3) -> f64 {
    f.cell_volume() * slab_sum(&f.values, f.n)
}

/// Signed mode number of storage index `j` along an axis of length `n`.
#[inline]
pub fn signed_mode(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Cached FFT plans for one grid size.
pub struct Spectral {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn get(n: usize) -> Arc<Spectral> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Spectral>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(n)
            .or_insert_with(|| {
                let mut real = RealFftPlanner::<f64>::new();
                let mut cplx = FftPlanner::<f64>::new();
                Arc::new(Spectral {
                    n,
                    r2c: real.plan_fft_forward(n),
                    c2r: real.plan_fft_inverse(n),
                    fwd: cplx.plan_fft_forward(n),
                    inv: cplx.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of retained `kx` modes, `n/2 + 1`.
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn spectrum_len(&self) -> usize {
        self.half() * self.n * self.n
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let (n, nh) = (self.n, self.half());
        assert_eq!(values.len(), n * n * n);
        let mut out = vec![Complex64::default(); self.spectrum_len()];
        let mut row = vec![0.0; n];
        let mut scratch = self.r2c.make_scratch_vec();
        for (r, chunk) in values.chunks_exact(n).enumerate() {
            row.copy_from_slice(chunk);
            self.r2c
                .process_with_scratch(&mut row, &mut out[r * nh..(r + 1) * nh], &mut scratch)
                .expect("r2c lengths are fixed by construction");
        }
        self.transform_yz(&mut out, self.fwd.as_ref());
        out
    }

    /// Inverse transform including the `1/n³` normalization.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        let (n, nh) = (self.n, self.half());
        assert_eq!(spectrum.len(), self.spectrum_len());
        self.transform_yz(&mut spectrum, self.inv.as_ref());
        let scale = 1.0 / (n * n * n) as f64;
        let mut out = vec![0.0; n * n * n];
        let mut scratch = self.c2r.make_scratch_vec();
        for (r, row) in spectrum.chunks_exact_mut(nh).enumerate() {
            // the DC and Nyquist bins of a real row are real; drop round-off
            row[0].im = 0.0;
            row[nh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(row, &mut out[r * n..(r + 1) * n], &mut scratch)
                .expect("c2r input is Hermitian after clearing the edge bins");
        }
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    fn transform_yz(&self, spec: &mut [Complex64], fft: &dyn Fft<f64>) {
        let (n, nh) = (self.n, self.half());
        let mut buf = vec![Complex64::default(); nh * n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for plane in spec.chunks_exact_mut(n * nh) {
            for j in 0..n {
                for i in 0..nh {
                    buf[i * n + j] = plane[j * nh + i];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                for i in 0..nh {
                    plane[j * nh + i] = buf[i * n + j];
                }
            }
        }
        for j in 0..n {
            for k in 0..n {
                let base = nh * (j + n * k);
                for i in 0..nh {
                    buf[i * n + k] = spec[base + i];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..n {
                let base = nh * (j + n * k);
                for i in 0..nh {
                    spec[base + i] = buf[i * n + k];
                }
            }
        }
    }

    /// Visits every retained mode as `(storage index, [mx, my, mz])`.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [i64; 3])) {
        let (n, nh) = (self.n, self.half());
        for k in 0..n {
            let mz = signed_mode(k, n);
            for j in 0..n {
                let my = signed_mode(j, n);
                for i in 0..nh {
                    f(i + nh * (j + n * k), [signed_mode(i, n), my, mz]);
                }
            }
        }
    }

    /// Multiplicity of a half-spectrum mode in the full spectrum (1 or 2).
    #[inline]
    pub fn mode_weight(&self, index: usize) -> f64 {
        let i = index % self.half();
        if i == 0 || i == self.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// `∫ f g dx` from the two half spectra (Parseval), optionally weighted per mode.
    pub fn parseval(
        &self,
        ell: f64,
        fhat: &[Complex64],
        ghat: &[Complex64],
        weight: impl Fn(usize) -> f64,
    ) -> f64 {
        let nn = (self.n * self.n * self.n) as f64;
        let parts: Vec<f64> = fhat
            .chunks(self.half() * self.n)
            .zip(ghat.chunks(self.half() * self.n))
            .enumerate()
            .map(|(slab, (fs, gs))| {
                let base = slab * self.half() * self.n;
                fs.iter()
                    .zip(gs)
                    .enumerate()
                    .map(|(o, (a, b))| {
                        let idx = base + o;
                        self.mode_weight(idx) * weight(idx) * (a * b.conj()).re
                    })
                    .sum()
            })
            .collect();
        ell.powi(3) / (nn * nn) * pairwise(&parts)
    }
}

/// Real Fourier multiplier over the half spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier {
    n: usize,
    coeffs: Vec<f64>,
}

impl Multiplier {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = (n / 2 + 1) * n * n;
        if coeffs.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "multiplier for n = {n} needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("multiplier coefficients must be finite".into()));
        }
        Ok(Self { n, coeffs })
    }

    /// Builds the multiplier from a function of the wave vector `k = 2π m / ell`.
    pub fn from_wavevector(n: usize, ell: f64, f: impl Fn([f64; 3]) -> f64) -> Self {
        let spectral = Spectral::get(n);
        let dk = 2.0 * std::f64::consts::PI / ell;
        let mut coeffs = vec![0.0; spectral.spectrum_len()];
        spectral.for_each_mode(|idx, m| {
            coeffs[idx] = f([m[0] as f64 * dk, m[1] as f64 * dk, m[2] as f64 * dk]);
        });
        Self { n, coeffs }
    }

    /// Builds the multiplier from a function of `|k|²`.
    pub fn radial(n: usize, ell: f64, f: impl Fn(f64) -> f64) -> Self {
        Self::from_wavevector(n, ell, |k| f(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
    }

    pub fn identity(n: usize) -> Self {
        Self { n, coeffs: vec![1.0; (n / 2 + 1) * n * n] }
    }

    /// Symbol of `-Δ`.
    pub fn neg_laplacian(n: usize, ell: f64) -> Self {
        Self::radial(n, ell, |k2| k2)
    }

    /// Symbol of `(-Δ)^{-1}` on zero-mean functions; the zero mode maps to 0.
    pub fn inverse_neg_laplacian(n: usize, ell: f64) -> Self {
        Self::radial(n, ell, |k2| if k2 == 0.0 { 0.0 } else { 1.0 / k2 })
    }

    /// Symbol of `(-Δ + mass2)^{-1}`.
    pub fn screened(n: usize, ell: f64, mass2: f64) -> Self {
        Self::radial(n, ell, move |k2| 1.0 / (k2 + mass2))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn apply_to(&self, spectrum: &mut [Complex64]) {
        spectrum.iter_mut().zip(&self.coeffs).for_each(|(z, c)| *z *= *c);
    }
}

/// Multiplies the Fourier coefficients of `f` by `m`.
pub fn spectral_apply(f: &Field3, m: &Multiplier) -> Result<Field3> {
    if f.n != m.n {
        return Err(Error::DimensionMismatch { expected: f.n, found: m.n });
    }
    let spectral = Spectral::get(f.n);
    let mut hat = spectral.forward(&f.values);
    m.apply_to(&mut hat);
    Field3::from_parts(f.n, f.ell, spectral.inverse(hat))
}

/// Spectral gradient `∇f`. Nyquist components of the odd symbol `i k` are zeroed.
pub fn spectral_gradient(f: &Field3) -> Result<[Field3; 3]> {
    let n = f.n;
    let spectral = Spectral::get(n);
    let hat = spectral.forward(&f.values);
    let dk = 2.0 * std::f64::consts::PI / f.ell;
    let nyq = -(n as i64 / 2);
    let mut parts = Vec::with_capacity(3);
    for axis in 0..3 {
        let mut d = hat.clone();
        spectral.for_each_mode(|idx, m| {
            let k = if m[axis] == nyq { 0.0 } else { m[axis] as f64 * dk };
            d[idx] *= Complex64::new(0.0, k);
        });
        parts.push(Field3::from_parts(n, f.ell, spectral.inverse(d))?);
    }
    let [gx, gy, gz]: [Field3; 3] = parts.try_into().expect("three components");
    Ok([gx, gy, gz])
}

/// `(∫|∇f|², ∫|∇f|)`: the first spectrally (exact for band-limited `f`), the
/// second with centered differences (first-order accurate; `|·|` is not smooth).
pub fn grad_norm_integrals(f: &Field3) -> (f64, f64) {
    let spectral = Spectral::get(f.n);
    let hat = spectral.forward(&f.values);
    let dk2 = (2.0 * std::f64::consts::PI / f.ell).powi(2);
    let mut k2 = vec![0.0; hat.len()];
    spectral.for_each_mode(|idx, m| {
        k2[idx] = dk2 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
    });
    let dirichlet = spectral.parseval(f.ell, &hat, &hat, |idx| k2[idx]);
    (dirichlet.max(0.0), total_variation(f))
}

/// `∫|∇f|` with centered differences.
pub fn total_variation(f: &Field3) -> f64 {
    let n = f.n;
    let inv2h = 0.5 / f.h();
    let up = |a: usize| if a + 1 == n { 0 } else { a + 1 };
    let dn = |a: usize| if a == 0 { n - 1 } else { a - 1 };
    let mut density = vec![0.0; f.values.len()];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let gx = f.get(up(i), j, k) - f.get(dn(i), j, k);
                let gy = f.get(i, up(j), k) - f.get(i, dn(j), k);
                let gz = f.get(i, j, up(k)) - f.get(i, j, dn(k));
                density[f.index(i, j, k)] = inv2h * (gx * gx + gy * gy + gz * gz).sqrt();
            }
        }
    }
    f.cell_volume() * slab_sum(&density, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    U,
    Chi,
    V,
}

/// JSON sidecar describing a raw field dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub n: usize,
    pub ell: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub kind: FieldKind,
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `path` as raw little-endian f64 (x-fastest) plus a `.json` sidecar.
pub fn write_dump(path: &Path, field: &Field3, epsilon: f64, lambda: f64, kind: FieldKind) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let meta = DumpMeta { n: field.n, ell: field.ell, epsilon, lambda, kind };
    fs::write(sidecar_path(path), serde_json::to_string(&meta)?)?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<(Field3, DumpMeta)> {
    let meta: DumpMeta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * meta.n.pow(3) {
        return Err(Error::InvalidField(format!(
            "dump {} has {} bytes, sidecar says n = {}",
            path.display(),
            bytes.len(),
            meta.n
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((Field3::new(meta.n, meta.ell, values)?, meta))
}
