//! Photon-number distributions from moment-generating functions.
//!
//! With `M(chi) = sum_n p_n exp(-i chi n)` the probabilities follow from an
//! inverse discrete Fourier transform over a uniform grid `chi_j = 2 pi j / N`.

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::counting::{
    central_derivatives, dynamical_mgf, initial_mgf, validity_window, CountingFields, CountingModel, EngineOptions,
    InitialLaw,
};
use crate::error::{invalid, Error, Result};
use crate::model_jc::{check_weights, jc_quasienergies, JcParams};
use crate::superop::{GeneralizedDensityMatrix, C64};

/// Probabilities below `-CLIP_THRESHOLD` are reported as ringing.
pub const CLIP_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    /// Photon-number axis of each reconstructed mode.
    pub axes: Vec<Vec<i64>>,
    /// Row-major over `axes`, first mode slowest.
    pub probabilities: Vec<f64>,
    pub grid: Vec<usize>,
    pub time: f64,
    pub model: String,
    /// Drive modes reconstructed, in axis order.
    pub modes: Vec<usize>,
    /// Sum of the raw inverse transform before clipping.
    pub raw_total: f64,
    /// Total mass of negative entries set to zero.
    pub clipped_mass: f64,
    /// Most negative raw probability.
    pub min_raw: f64,
    /// Largest imaginary residue of the inverse transform.
    pub max_imag: f64,
    pub advisory: Option<String>,
}

impl PhotonDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Marginal of axis `k` as `(n, p)` pairs.
    pub fn marginal(&self, k: usize) -> Vec<(i64, f64)> {
        let mut p = vec![0.0; self.axes[k].len()];
        let inner: usize = self.axes[k + 1..].iter().map(Vec::len).product();
        let len = self.axes[k].len();
        for (idx, v) in self.probabilities.iter().enumerate() {
            p[(idx / inner) % len] += v;
        }
        self.axes[k].iter().copied().zip(p).collect()
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.marginal(k).iter().map(|(n, p)| *n as f64 * p).sum()
    }

    pub fn variance(&self, k: usize) -> f64 {
        let m = self.marginal(k);
        let mean: f64 = m.iter().map(|(n, p)| *n as f64 * p).sum();
        m.iter().map(|(n, p)| (*n as f64 - mean).powi(2) * p).sum()
    }

    /// Probability at photon numbers `n` (one per axis), zero outside the window.
    pub fn probability(&self, n: &[i64]) -> f64 {
        let mut idx = 0;
        for (axis, &v) in self.axes.iter().zip(n) {
            let off = v - axis[0];
            if off < 0 || off as usize >= axis.len() {
                return 0.0;
            }
            idx = idx * axis.len() + off as usize;
        }
        self.probabilities[idx]
    }
}

/// Mean `Re[i d log M]` and variance `Re[-d^2 log M]` at zero field.
pub fn mgf_moments<F: Fn(f64) -> Result<C64>>(mgf: F, h: f64) -> Result<(f64, f64)> {
    let d = central_derivatives(|x| Ok(mgf(x)?.ln()), h)?;
    Ok(((C64::i() * d.first).re, -d.second.re))
}

/// Window `[n_min, n_min + n)` centred on `mean`, refused when `n < 12 sigma + 1`.
pub fn window(mean: f64, variance: f64, n: usize) -> Result<i64> {
    if !mean.is_finite() || !variance.is_finite() {
        return Err(Error::NonFinite("moment estimate"));
    }
    let needed = (12.0 * variance.max(0.0).sqrt()).ceil() as usize + 1;
    if needed > n {
        return Err(Error::WindowOverflow { needed, grid: n, suggested: needed.next_power_of_two().max(128) });
    }
    Ok(mean.round() as i64 - (n / 2) as i64)
}

fn check_grid(n: usize) -> Result<()> {
    if n < 128 || !n.is_power_of_two() {
        return Err(invalid("grid", format!("{n} is not a power of two >= 128")));
    }
    Ok(())
}

/// Grid node `2 pi j / N` wrapped into `[-pi, pi)`, where continuous initial laws are defined.
fn chi_node(j: usize, n: usize) -> f64 {
    let j = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * std::f64::consts::PI * j / n as f64
}

/// Clipped and renormalized inverse transform with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Inversion {
    pub probabilities: Vec<f64>,
    pub raw_total: f64,
    pub clipped_mass: f64,
    pub min_raw: f64,
    pub max_imag: f64,
}

/// Inverse transform of an `axes.len()`-dimensional MGF sampled on the uniform grid.
///
/// `starts` are the lowest photon numbers of each window; `mgf` receives one field per axis.
pub fn invert_mgf<F>(mgf: F, grid: &[usize], starts: &[i64]) -> Result<Inversion>
where
    F: Fn(&[f64]) -> Result<C64> + Sync,
{
    if grid.is_empty() || grid.len() > 2 || grid.len() != starts.len() {
        return Err(invalid("modes", "reconstruction supports one or two modes"));
    }
    for &n in grid {
        check_grid(n)?;
    }
    let total: usize = grid.iter().product();
    let mut data: Vec<C64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let mut chi = vec![0.0; grid.len()];
            let mut shift = 0.0;
            for k in (0..grid.len()).rev() {
                let j = rest % grid[k];
                rest /= grid[k];
                chi[k] = chi_node(j, grid[k]);
                shift += chi[k] * starts[k] as f64;
            }
            Ok(mgf(&chi)? * C64::new(0.0, shift).exp())
        })
        .collect::<Result<_>>()?;
    let mut planner = FftPlanner::new();
    if grid.len() == 1 {
        planner.plan_fft_inverse(grid[0]).process(&mut data);
    } else {
        let (n0, n1) = (grid[0], grid[1]);
        planner.plan_fft_inverse(n1).process(&mut data);
        let col = planner.plan_fft_inverse(n0);
        let mut buf = vec![C64::new(0.0, 0.0); n0];
        for j in 0..n1 {
            for i in 0..n0 {
                buf[i] = data[i * n1 + j];
            }
            col.process(&mut buf);
            for i in 0..n0 {
                data[i * n1 + j] = buf[i];
            }
        }
    }
    let scale = 1.0 / total as f64;
    let raw_total: f64 = data.iter().map(|z| z.re * scale).sum();
    let mut clipped = 0.0;
    let mut min_raw = f64::INFINITY;
    let mut max_imag: f64 = 0.0;
    let mut p: Vec<f64> = data
        .iter()
        .map(|z| {
            let v = z.re * scale;
            max_imag = max_imag.max((z.im * scale).abs());
            min_raw = min_raw.min(v);
            if v < 0.0 {
                clipped -= v;
                0.0
            } else {
                v
            }
        })
        .collect();
    let sum: f64 = p.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::NonFinite("reconstructed distribution"));
    }
    p.iter_mut().for_each(|v| *v /= sum);
    Ok(Inversion { probabilities: p, raw_total, clipped_mass: clipped, min_raw, max_imag })
}

#[derive(Clone, Debug)]
pub struct ReconstructOptions {
    pub engine: EngineOptions,
    /// Step for the moment estimates that place the window.
    pub moment_step: f64,
    /// `(g, gamma, eps)` for the semiclassical validity advisory.
    pub validity: Option<(f64, f64, f64)>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { engine: EngineOptions::default(), moment_step: 1e-3, validity: None }
    }
}

/// Total MGF `M_dy(chi) M_0(chi)` with fields on the listed drive modes only.
pub fn total_mgf(
    model: &dyn CountingModel,
    rho0: &GeneralizedDensityMatrix,
    law: &InitialLaw,
    t: f64,
    modes: &[usize],
    chi: &[f64],
    opts: &EngineOptions,
) -> Result<C64> {
    let nd = model.drive_modes();
    let mut full = vec![0.0; nd];
    for (&k, &x) in modes.iter().zip(chi) {
        full[k] = x;
    }
    let fields = CountingFields::new(full.clone(), vec![0.0; model.bath_channels()])?;
    let dy = dynamical_mgf(model, &fields, rho0, t, opts)?.value;
    let mut init = vec![0.0; law.modes()];
    for (k, x) in full.iter().enumerate().take(law.modes()) {
        init[k] = *x;
    }
    Ok(dy * initial_mgf(law, &init)?)
}

/// Distribution of the drive-mode photon numbers at time `t`, one or two modes.
pub fn reconstruct(
    model: &dyn CountingModel,
    rho0: &GeneralizedDensityMatrix,
    law: &InitialLaw,
    t: f64,
    modes: &[usize],
    grid: &[usize],
    opts: &ReconstructOptions,
) -> Result<PhotonDistribution> {
    if modes.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), found: grid.len() });
    }
    if law.modes() < model.drive_modes() {
        return Err(Error::DimensionMismatch { expected: model.drive_modes(), found: law.modes() });
    }
    if let Some(&k) = modes.iter().find(|&&k| k >= model.drive_modes()) {
        return Err(invalid("modes", format!("drive mode {k} does not exist")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", "must be finite and nonnegative"));
    }
    let mgf = |chi: &[f64]| total_mgf(model, rho0, law, t, modes, chi, &opts.engine);
    let mut starts = Vec::with_capacity(modes.len());
    let mut advisory = None;
    for (i, &n) in grid.iter().enumerate() {
        let (mean, var) = mgf_moments(
            |x| {
                let mut chi = vec![0.0; modes.len()];
                chi[i] = x;
                mgf(&chi)
            },
            opts.moment_step,
        )?;
        starts.push(window(mean, var, n)?);
        if let Some((g, gamma, eps)) = opts.validity {
            let w = validity_window(g, gamma, law.mean(modes[i]), law.variance(modes[i]).sqrt(), eps)?;
            let note = match w.flag {
                Some(f) => Some(f),
                None if t > w.t_max => Some(format!("t = {t} exceeds the semiclassical validity time {:.3e}", w.t_max)),
                None => None,
            };
            if note.is_some() {
                advisory = note;
            }
        }
    }
    let inv = invert_mgf(mgf, grid, &starts)?;
    let axes = grid.iter().zip(&starts).map(|(&n, &s)| (s..s + n as i64).collect()).collect();
    Ok(PhotonDistribution {
        axes,
        probabilities: inv.probabilities,
        grid: grid.to_vec(),
        time: t,
        model: model.label(),
        modes: modes.to_vec(),
        raw_total: inv.raw_total,
        clipped_mass: inv.clipped_mass,
        min_raw: inv.min_raw,
        max_imag: inv.max_imag,
        advisory,
    })
}

/// Stroboscopic MGF of the closed two-level model for Floquet weights `|c_mu|^2`.
pub fn closed_mgf(p: &JcParams, weights: [f64; 2], chi: [f64; 2], t: f64) -> Result<C64> {
    check_weights(&weights)?;
    let e0 = jc_quasienergies(p, [0.0, 0.0]);
    let em = jc_quasienergies(p, [-chi[0], -chi[1]]);
    let ep = jc_quasienergies(p, chi);
    let branch = |w: f64, a: f64, b: f64, c: f64| {
        (C64::new(0.0, (a - b) * t).exp() + C64::new(0.0, (a - c) * t).exp().conj()) * (0.5 * w)
    };
    Ok(branch(weights[0], e0.0, em.0, ep.0) + branch(weights[1], e0.1, em.1, ep.1))
}

/// Mean and variance of the closed-model photon-number change from the exact
/// first and second field derivatives of the quasienergies.
pub fn closed_cumulants(p: &JcParams, weights: [f64; 2], mode: usize, t: f64) -> Result<(f64, f64)> {
    check_weights(&weights)?;
    if mode > 1 {
        return Err(invalid("mode", "drive mode must be 0 or 1"));
    }
    let (d1, d2) = crate::model_jc::jc_quasienergy_derivatives(p, mode)?;
    let mean = -(weights[0] * d1 + weights[1] * d2) * t;
    let second = weights[0] * d1 * d1 + weights[1] * d2 * d2;
    Ok((mean, second * t * t - mean * mean))
}

/// Distribution of drive mode `mode` in the closed model, starting from a
/// Gaussian of variance `initial_variance` centred on zero.
pub fn closed_distribution(
    p: &JcParams,
    weights: [f64; 2],
    mode: usize,
    t: f64,
    initial_variance: f64,
    n: usize,
) -> Result<PhotonDistribution> {
    if mode > 1 {
        return Err(invalid("mode", "drive mode must be 0 or 1"));
    }
    let law = InitialLaw::Gaussian { mean: vec![0.0], variance: vec![initial_variance] };
    let f = |chi: &[f64]| {
        let mut c = [0.0; 2];
        c[mode] = chi[0];
        Ok(closed_mgf(p, weights, c, t)? * initial_mgf(&law, chi)?)
    };
    let (mean, var) = mgf_moments(|x| f(&[x]), 1e-3)?;
    let start = window(mean, var, n)?;
    let inv = invert_mgf(f, &[n], &[start])?;
    Ok(PhotonDistribution {
        axes: vec![(start..start + n as i64).collect()],
        probabilities: inv.probabilities,
        grid: vec![n],
        time: t,
        model: "jaynes-cummings-closed".into(),
        modes: vec![mode],
        raw_total: inv.raw_total,
        clipped_mass: inv.clipped_mass,
        min_raw: inv.min_raw,
        max_imag: inv.max_imag,
        advisory: None,
    })
}
