//! Spectral ground truth on the periodic unit torus: DFT, Leray projection,
//! derivatives and synthetic field generators.
//!
//! A field is u(x) = Σ_k û_k e^{2πi k·x} with k ∈ (−N/2, N/2]^n; the forward DFT
//! carries the 1/Nⁿ factor.

use std::f64::consts::PI;

use ndarray::{ArrayD, Axis, Dimension, IxDyn, Zip};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{log2_exact, Error, Result};
use crate::sampling::{standard_offsets, StaggeredField};

/// Signed wavenumber of DFT index `m` on an `n`-point grid, in (−n/2, n/2].
pub fn wavenumber(m: usize, n: usize) -> f64 {
    if m <= n / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

pub(crate) fn fft_axis(a: &mut ArrayD<Complex64>, axis: usize, inverse: bool) {
    let n = a.shape()[axis];
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for mut lane in a.lanes_mut(Axis(axis)) {
        buf.iter_mut().zip(lane.iter()).for_each(|(b, v)| *b = *v);
        plan.process(&mut buf);
        lane.iter_mut().zip(&buf).for_each(|(v, b)| *v = *b);
    }
}

/// Unnormalised n-dimensional DFT (`inverse` flips the exponent sign).
pub fn fft_nd(a: &mut ArrayD<Complex64>, inverse: bool) {
    for axis in 0..a.ndim() {
        fft_axis(a, axis, inverse);
    }
}

/// Spectral representation of an `ncomp`-component field on an `n`ⁿᵈⁱᵐ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub n: usize,
    pub ndim: usize,
    pub components: Vec<ArrayD<Complex64>>,
    /// Set when the modes come from a real field (conjugate symmetry).
    pub real: bool,
}

impl SpectralField {
    pub fn zeros(n: usize, ndim: usize, ncomp: usize) -> Self {
        SpectralField {
            n,
            ndim,
            components: vec![ArrayD::zeros(IxDyn(&vec![n; ndim])); ncomp],
            real: true,
        }
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    /// DFT of grids sampled at `(m + s)/N`, with the stagger phase removed.
    pub fn from_samples(grids: &[ArrayD<f64>], offsets: &[Vec<f64>]) -> Result<Self> {
        let first = grids.first().ok_or_else(|| Error::Shape("no components".into()))?;
        let n = first.shape()[0];
        log2_exact(n)?;
        let ndim = first.ndim();
        if grids.len() != offsets.len() {
            return Err(Error::Shape("one offset vector per component".into()));
        }
        let norm = (n as f64).powi(ndim as i32);
        let mut components = Vec::with_capacity(grids.len());
        for (g, s) in grids.iter().zip(offsets) {
            if g.shape().iter().any(|&d| d != n) || s.len() != ndim {
                return Err(Error::Shape("grids must be square with matching offsets".into()));
            }
            let mut a = g.mapv(|v| Complex64::new(v, 0.0));
            fft_nd(&mut a, false);
            a.indexed_iter_mut().for_each(|(idx, v)| {
                let phase: f64 = (0..ndim).map(|ax| wavenumber(idx[ax], n) * s[ax]).sum();
                *v *= Complex64::from_polar(1.0 / norm, -2.0 * PI * phase / n as f64);
            });
            components.push(a);
        }
        Ok(SpectralField {
            n,
            ndim,
            components,
            real: true,
        })
    }

    pub fn from_field(field: &StaggeredField) -> Result<Self> {
        Self::from_samples(&field.components, &field.offsets)
    }

    /// Scalar grid sampled at collocation points.
    pub fn from_scalar(grid: &ArrayD<f64>) -> Result<Self> {
        Self::from_samples(std::slice::from_ref(grid), &[vec![0.0; grid.ndim()]])
    }

    /// Samples every component at `(m + s_c)/N` by exact trigonometric evaluation.
    pub fn sample(&self, offsets: &[Vec<f64>]) -> Vec<ArrayD<f64>> {
        let n = self.n;
        self.components
            .iter()
            .zip(offsets)
            .map(|(c, s)| {
                let mut a = c.clone();
                a.indexed_iter_mut().for_each(|(idx, v)| {
                    let phase: f64 = (0..self.ndim).map(|ax| wavenumber(idx[ax], n) * s[ax]).sum();
                    *v *= Complex64::from_polar(1.0, 2.0 * PI * phase / n as f64);
                });
                fft_nd(&mut a, true);
                a.mapv(|v| v.re)
            })
            .collect()
    }

    /// Components sampled at the standard staggered points.
    pub fn to_staggered(&self) -> Result<StaggeredField> {
        if self.ncomp() != self.ndim {
            return Err(Error::Shape("staggered layout needs ndim components".into()));
        }
        let off = standard_offsets(self.ndim);
        StaggeredField::new(self.sample(&off), off)
    }

    pub fn to_collocated(&self) -> Vec<ArrayD<f64>> {
        self.sample(&vec![vec![0.0; self.ndim]; self.ncomp()])
    }

    /// Wavenumber vector of a multi-index.
    pub fn k_of(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&m| wavenumber(m, self.n)).collect()
    }

    fn map_modes(&self, f: impl Fn(&[f64], &[Complex64]) -> Vec<Complex64>, ncomp_out: usize) -> SpectralField {
        let mut out = SpectralField::zeros(self.n, self.ndim, ncomp_out);
        out.real = self.real;
        let mut vals = vec![Complex64::new(0.0, 0.0); self.ncomp()];
        for (idx, _) in self.components[0].indexed_iter() {
            let k = self.k_of(idx.slice());
            for (c, v) in self.components.iter().zip(vals.iter_mut()) {
                *v = c[&idx];
            }
            for (o, r) in out.components.iter_mut().zip(f(&k, &vals)) {
                o[&idx] = r;
            }
        }
        out
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        let mut out = self.clone();
        for c in out.components.iter_mut() {
            c.mapv_inplace(|v| v * alpha);
        }
        out
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        if self.n != other.n || self.ndim != other.ndim || self.ncomp() != other.ncomp() {
            return Err(Error::Shape("spectral fields differ in layout".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            *a += b;
        }
        out.real = self.real && other.real;
        Ok(out)
    }

    /// Σ_k Σ_c conj(a) b, the torus inner product up to the cell volume.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    /// Spectral divergence Σ 2πi k_α û_α as a scalar field.
    pub fn divergence(&self) -> SpectralField {
        self.map_modes(
            |k, u| {
                vec![k
                    .iter()
                    .zip(u)
                    .map(|(kk, uu)| Complex64::new(0.0, 2.0 * PI * kk) * uu)
                    .sum()]
            },
            1,
        )
    }

    /// Gradient of a scalar field.
    pub fn gradient(&self) -> SpectralField {
        self.map_modes(
            |k, u| k.iter().map(|kk| Complex64::new(0.0, 2.0 * PI * kk) * u[0]).collect(),
            self.ndim,
        )
    }

    /// Partial derivative of every component along `axis`.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let nc = self.ncomp();
        self.map_modes(
            |k, u| u.iter().map(|v| Complex64::new(0.0, 2.0 * PI * k[axis]) * v).collect(),
            nc,
        )
    }

    /// Curl: a scalar in 2D, a vector in 3D.
    pub fn curl(&self) -> Result<SpectralField> {
        let i2pi = Complex64::new(0.0, 2.0 * PI);
        match (self.ndim, self.ncomp()) {
            (2, 2) => Ok(self.map_modes(|k, u| vec![i2pi * (k[0] * u[1] - k[1] * u[0])], 1)),
            (3, 3) => Ok(self.map_modes(
                |k, u| {
                    vec![
                        i2pi * (k[1] * u[2] - k[2] * u[1]),
                        i2pi * (k[2] * u[0] - k[0] * u[2]),
                        i2pi * (k[0] * u[1] - k[1] * u[0]),
                    ]
                },
                3,
            )),
            _ => Err(Error::Shape("curl needs a 2D or 3D vector field".into())),
        }
    }

    /// Zeroes every mode with |k_α| > `cutoff` along some axis.
    pub fn truncate(&self, cutoff: f64) -> SpectralField {
        let nc = self.ncomp();
        self.map_modes(
            |k, u| {
                if k.iter().any(|kk| kk.abs() > cutoff) {
                    vec![Complex64::new(0.0, 0.0); nc]
                } else {
                    u.to_vec()
                }
            },
            nc,
        )
    }

    /// Zeroes every mode touching the Nyquist index.
    pub fn zero_nyquist(&self) -> SpectralField {
        self.truncate(self.n as f64 / 2.0 - 0.5)
    }
}

/// û ← û − k (k·û)/|k|² for k ≠ 0.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let nc = f.ncomp();
    f.map_modes(
        |k, u| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            if k2 == 0.0 {
                return u.to_vec();
            }
            let kd: Complex64 = k.iter().zip(u).map(|(kk, uu)| uu * *kk).sum::<Complex64>() / k2;
            u.iter().zip(k).map(|(uu, kk)| uu - kd * *kk).collect()
        },
        nc,
    )
}

/// Real random field with |û_k| ∝ |k|^{−exponent/2}, zero mean and no Nyquist modes.
pub fn random_spectrum(n: usize, ndim: usize, ncomp: usize, exponent: f64, seed: u64) -> Result<SpectralField> {
    log2_exact(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grids: Vec<ArrayD<f64>> = (0..ncomp)
        .map(|_| ArrayD::from_shape_simple_fn(IxDyn(&vec![n; ndim]), || StandardNormal.sample(&mut rng)))
        .collect();
    let white = SpectralField::from_samples(&grids, &vec![vec![0.0; ndim]; ncomp])?;
    let shaped = white.map_modes(
        |k, u| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            let a = if k2 == 0.0 { 0.0 } else { k2.powf(-exponent / 4.0) };
            u.iter().map(|v| v * a).collect()
        },
        ncomp,
    );
    Ok(shaped.zero_nyquist())
}

/// Random incompressible field; returns samples at the staggered points and its spectrum.
pub fn gen_divfree_random(n: usize, ndim: usize, exponent: f64, seed: u64) -> Result<(StaggeredField, SpectralField)> {
    let u = leray_project(&random_spectrum(n, ndim, ndim, exponent, seed)?);
    Ok((u.to_staggered()?, u))
}

/// Random field with no divergence constraint (same spectrum shape).
pub fn gen_compressible_random(n: usize, ndim: usize, exponent: f64, seed: u64) -> Result<(StaggeredField, SpectralField)> {
    let u = random_spectrum(n, ndim, ndim, exponent, seed)?;
    Ok((u.to_staggered()?, u))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vortex {
    pub center: [f64; 2],
    pub radius: f64,
    pub circulation: f64,
}

/// Periodised Gaussian vorticity Σ Γ/(πr²) exp(−|x−c|²/r²) at collocation points.
pub fn vortex_vorticity(n: usize, vortices: &[Vortex]) -> ArrayD<f64> {
    let h = 1.0 / n as f64;
    ArrayD::from_shape_fn(IxDyn(&[n, n]), |idx| {
        let x = [idx[0] as f64 * h, idx[1] as f64 * h];
        let mut w = 0.0;
        for v in vortices {
            for p in -2..=2 {
                for q in -2..=2 {
                    let dx = x[0] - v.center[0] + p as f64;
                    let dy = x[1] - v.center[1] + q as f64;
                    let r2 = (dx * dx + dy * dy) / (v.radius * v.radius);
                    w += v.circulation / (PI * v.radius * v.radius) * (-r2).exp();
                }
            }
        }
        w
    })
}

/// Three Gaussian vortices: two equal positive ones and a negative one of half intensity.
pub fn default_vortices() -> Vec<Vortex> {
    vec![
        Vortex { center: [0.35, 0.5], radius: 0.06, circulation: 1.0 },
        Vortex { center: [0.62, 0.5], radius: 0.06, circulation: 1.0 },
        Vortex { center: [0.5, 0.25], radius: 0.06, circulation: -0.5 },
    ]
}

/// Velocity u = (∂ψ/∂y, −∂ψ/∂x) with −Δψ = ω − mean(ω).
pub fn velocity_from_vorticity(omega: &SpectralField) -> SpectralField {
    omega.map_modes(
        |k, w| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            if k2 == 0.0 {
                return vec![Complex64::new(0.0, 0.0); 2];
            }
            let psi = w[0] / (4.0 * PI * PI * k2);
            let i2pi = Complex64::new(0.0, 2.0 * PI);
            vec![i2pi * k[1] * psi, -i2pi * k[0] * psi]
        },
        2,
    )
}

pub fn gen_vortices(n: usize, vortices: &[Vortex]) -> Result<(StaggeredField, SpectralField)> {
    let omega = SpectralField::from_scalar(&vortex_vorticity(n, vortices))?;
    let u = velocity_from_vorticity(&omega).zero_nyquist();
    Ok((u.to_staggered()?, u))
}

/// Random scalar with the spectrum shape of [`random_spectrum`].
pub fn random_scalar(n: usize, ndim: usize, exponent: f64, seed: u64) -> Result<SpectralField> {
    random_spectrum(n, ndim, 1, exponent, seed)
}

/// ∇p at the staggered points, p at collocation points.
pub fn gen_gradient(p: &SpectralField) -> Result<(StaggeredField, ArrayD<f64>)> {
    if p.ncomp() != 1 {
        return Err(Error::Shape("pressure must be a scalar field".into()));
    }
    let g = p.gradient();
    let pg = p.to_collocated().remove(0);
    Ok((g.to_staggered()?, pg))
}

/// Spectral vorticity sampled at collocation points (one grid in 2D, three in 3D).
pub fn vorticity(u: &SpectralField) -> Result<Vec<ArrayD<f64>>> {
    Ok(u.curl()?.to_collocated())
}

/// (u·∇)u computed pseudo-spectrally. With `dealias`, the 2/3 rule is applied
/// to the velocity before the products and to the result.
pub fn nonlinear_term(u: &SpectralField, dealias: bool) -> Result<SpectralField> {
    if u.ncomp() != u.ndim {
        return Err(Error::Shape("velocity needs ndim components".into()));
    }
    let cutoff = u.n as f64 / 3.0;
    let u = if dealias { u.truncate(cutoff) } else { u.clone() };
    let vel = u.to_collocated();
    let grads: Vec<Vec<ArrayD<f64>>> = (0..u.ndim).map(|j| u.derivative(j).to_collocated()).collect();
    let mut out = vec![ArrayD::<f64>::zeros(IxDyn(&vec![u.n; u.ndim])); u.ndim];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, g) in grads.iter().enumerate() {
            Zip::from(&mut *o).and(&vel[j]).and(&g[i]).for_each(|o, a, b| *o += a * b);
        }
    }
    let r = SpectralField::from_samples(&out, &vec![vec![0.0; u.ndim]; u.ndim])?;
    Ok(if dealias { r.truncate(cutoff) } else { r })
}

/// u = (sin 2πx cos 2πy, −cos 2πx sin 2πy).
pub fn taylor_green(n: usize) -> Result<SpectralField> {
    log2_exact(n)?;
    let mut u = SpectralField::zeros(n, 2, 2);
    let q = Complex64::new(0.0, -0.25);
    // sin a cos b = Σ over (±1, ±1) of ∓(i/4) e^{i(±a ±b)}
    for (sx, sy) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
        let ix = sx.rem_euclid(n as i64) as usize;
        let iy = sy.rem_euclid(n as i64) as usize;
        u.components[0][[ix, iy].as_ref()] = q * sx as f64;
        u.components[1][[ix, iy].as_ref()] = -q * sy as f64;
    }
    Ok(u)
}
