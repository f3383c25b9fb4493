//! Counting-field generating functions, slow-eigenvalue tracking and
//! finite-difference cumulant extraction.

use crate::error::{invalid, Error, Result};
use crate::superop::{
    devectorize, eigenvalues, floquet_exponents, one_period_propagator, propagate_vector, rk4_propagator,
    spectral_decompose_matrix, spectral_norm, stationary_state_with, trace_functional, vectorize, Basis, CMatrix,
    CVector, GeneralizedDensityMatrix, IntegratorOptions, PropagationRoute, SpectralOptions, Superoperator, C64,
};

/// Counting fields: `chi` per coherent drive mode, `xi` per bath channel.
#[derive(Clone, Debug, PartialEq)]
pub struct CountingFields {
    pub chi: Vec<f64>,
    pub xi: Vec<f64>,
}

impl CountingFields {
    pub fn zero(n_drive: usize, n_bath: usize) -> Self {
        Self { chi: vec![0.0; n_drive], xi: vec![0.0; n_bath] }
    }

    pub fn new(chi: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if chi.iter().chain(xi.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("fields", "entries must be finite"));
        }
        Ok(Self { chi, xi })
    }

    pub fn is_zero(&self) -> bool {
        self.chi.iter().chain(self.xi.iter()).all(|&x| x == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { chi: self.chi.iter().map(|x| x * s).collect(), xi: self.xi.iter().map(|x| x * s).collect() }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }
}

/// Which photon ledger a counting field is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Counted {
    Drive(usize),
    Bath(usize),
    /// One common field on every drive mode.
    AllDrives,
    /// One common field on every bath channel.
    AllBaths,
}

impl Counted {
    pub fn fields(self, n_drive: usize, n_bath: usize, x: f64) -> CountingFields {
        let mut f = CountingFields::zero(n_drive, n_bath);
        match self {
            Counted::Drive(k) => f.chi[k] = x,
            Counted::Bath(k) => f.xi[k] = x,
            Counted::AllDrives => f.chi.iter_mut().for_each(|c| *c = x),
            Counted::AllBaths => f.xi.iter_mut().for_each(|c| *c = x),
        }
        f
    }

    fn check(self, n_drive: usize, n_bath: usize) -> Result<()> {
        match self {
            Counted::Drive(k) if k >= n_drive => Err(invalid("mode", format!("drive mode {k} out of range"))),
            Counted::Bath(k) if k >= n_bath => Err(invalid("mode", format!("bath channel {k} out of range"))),
            Counted::AllBaths if n_bath == 0 => Err(invalid("mode", "model has no bath channel")),
            _ => Ok(()),
        }
    }
}

pub type PeriodicGenerator = Box<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// Counting-field-dressed generator of a model.
pub enum Generator {
    Static(Superoperator),
    Periodic { period: f64, basis: Basis, matter_dim: usize, at: PeriodicGenerator },
}

impl Generator {
    pub fn basis(&self) -> Basis {
        match self {
            Generator::Static(s) => s.basis(),
            Generator::Periodic { basis, .. } => *basis,
        }
    }

    pub fn matter_dim(&self) -> usize {
        match self {
            Generator::Static(s) => s.matter_dim(),
            Generator::Periodic { matter_dim, .. } => *matter_dim,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Generator::Periodic { .. })
    }

    pub fn monodromy(&self, opts: &IntegratorOptions) -> Result<Superoperator> {
        match self {
            Generator::Static(s) => Ok(s.clone()),
            Generator::Periodic { period, basis, matter_dim, at } => {
                Ok(one_period_propagator(at, *basis, *matter_dim, *period, opts)?.propagator)
            }
        }
    }

    /// Eigenvalues of the generator, or Floquet exponents of the one-period map.
    pub fn spectrum(&self, opts: &EngineOptions) -> Result<Vec<C64>> {
        match self {
            Generator::Static(s) => Ok(eigenvalues(s.matrix())),
            Generator::Periodic { period, .. } => {
                let u = self.monodromy(&opts.integrator)?;
                Ok(floquet_exponents(&eigenvalues(u.matrix()), *period).0)
            }
        }
    }

    /// Time-independent generator reproducing the stroboscopic dynamics.
    pub fn effective(&self, opts: &EngineOptions) -> Result<Superoperator> {
        match self {
            Generator::Static(s) => Ok(s.clone()),
            Generator::Periodic { period, .. } => {
                let u = self.monodromy(&opts.integrator)?;
                Ok(crate::superop::effective_liouvillian(&u, *period)?.generator)
            }
        }
    }

    pub fn propagate(&self, v: &CVector, t: f64, opts: &EngineOptions) -> Result<CVector> {
        if !(t >= 0.0) {
            return Err(invalid("t", "must be nonnegative"));
        }
        match self {
            Generator::Static(s) => Ok(propagate_vector(s.matrix(), v, t, PropagationRoute::Spectral).0),
            Generator::Periodic { period, at, .. } => {
                let cycles = (t / period + 1e-9).floor();
                let rest = (t - cycles * period).max(0.0);
                let mut out = v.clone();
                let mut n = cycles as u64;
                if n > 0 {
                    let mut power = self.monodromy(&opts.integrator)?.into_matrix();
                    while n > 0 {
                        if n & 1 == 1 {
                            out = &power * out;
                        }
                        n >>= 1;
                        if n > 0 {
                            power = &power * &power;
                        }
                    }
                }
                if rest > 1e-12 * period {
                    let steps = ((opts.integrator.steps as f64) * rest / period).ceil().max(1.0) as usize;
                    out = rk4_propagator(at, v.len(), 0.0, rest, 2 * steps) * out;
                }
                Ok(out)
            }
        }
    }
}

/// A model that supplies a dressed generator for any counting fields.
pub trait CountingModel: Sync {
    fn drive_modes(&self) -> usize;
    fn bath_channels(&self) -> usize;
    fn generator(&self, fields: &CountingFields) -> Result<Generator>;
    /// `dH/dphi_k` at time `t` in the frame of `generator`.
    fn phase_derivative(&self, mode: usize, t: f64) -> CMatrix;
    fn label(&self) -> String;

    fn zero_fields(&self) -> CountingFields {
        CountingFields::zero(self.drive_modes(), self.bath_channels())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    /// Finite-difference step in radians.
    pub h: f64,
    /// Relative stencil disagreement above which a report is flagged.
    pub richardson_tol: f64,
    /// Shrink `h` below `step_gap_fraction * gap / |dL/dchi|` when the spectral gap is small.
    pub adaptive_step: bool,
    pub step_gap_fraction: f64,
    /// Largest continuation move as a fraction of the zero-field spectral gap.
    pub gap_fraction: f64,
    /// Competitor distance, as a fraction of the gap, that counts as a branch collision.
    pub collision_fraction: f64,
    pub spectral: SpectralOptions,
    pub integrator: IntegratorOptions,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            h: 1e-3,
            richardson_tol: 1e-6,
            adaptive_step: true,
            step_gap_fraction: 0.05,
            gap_fraction: 0.25,
            collision_fraction: 1e-3,
            spectral: SpectralOptions::default(),
            integrator: IntegratorOptions::default(),
        }
    }
}

pub fn evolve_generalized(
    model: &dyn CountingModel,
    fields: &CountingFields,
    rho0: &GeneralizedDensityMatrix,
    t: f64,
    opts: &EngineOptions,
) -> Result<GeneralizedDensityMatrix> {
    let g = model.generator(fields)?;
    let v = vectorize(rho0, g.basis())?;
    devectorize(&g.propagate(&v, t, opts)?, g.basis())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MgfValue {
    pub value: C64,
    pub time: f64,
    pub left: C64,
    pub right: C64,
}

/// Dynamical moment-generating function `(tr rho_L(xi, chi) + conj tr rho_L(-xi, -chi)) / 2`.
///
/// The bath dressing is one-sided (`exp(-i xi)` on the jump term), so the
/// right branch negates `xi` together with `chi`.
pub fn dynamical_mgf(
    model: &dyn CountingModel,
    fields: &CountingFields,
    rho0: &GeneralizedDensityMatrix,
    t: f64,
    opts: &EngineOptions,
) -> Result<MgfValue> {
    let left = evolve_generalized(model, fields, rho0, t, opts)?.trace() * 0.5;
    let right = if fields.is_zero() {
        left.conj()
    } else {
        evolve_generalized(model, &fields.negated(), rho0, t, opts)?.trace().conj() * 0.5
    };
    Ok(MgfValue { value: left + right, time: t, left, right })
}

/// Long-time form of the dynamical MGF keeping only the slow eigenvalue,
/// including its overlap amplitude.
pub fn asymptotic_mgf(
    model: &dyn CountingModel,
    fields: &CountingFields,
    rho0: &GeneralizedDensityMatrix,
    t: f64,
    opts: &EngineOptions,
) -> Result<MgfValue> {
    let tracker = Lambda0Tracker::new(model, opts)?;
    let branch = |f: &CountingFields| -> Result<C64> {
        let lambda = tracker.at(f)?;
        let g = model.generator(f)?.effective(opts)?;
        let sd = spectral_decompose_matrix(g.matrix(), &opts.spectral)?;
        let k = sd.nearest(lambda);
        let v = vectorize(rho0, g.basis())?;
        let tr = trace_functional(g.basis(), g.matter_dim());
        let amp = (tr.transpose() * sd.right.column(k))[(0, 0)] * (sd.left.row(k) * &v)[(0, 0)];
        Ok(amp * (lambda * t).exp() * 0.5)
    };
    let left = branch(fields)?;
    let right = branch(&fields.negated())?.conj();
    Ok(MgfValue { value: left + right, time: t, left, right })
}

/// Initial photon statistics of the drive modes.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw {
    /// Coherent states with `|alpha_k|^2` photons on average.
    Poisson { alpha_sq: Vec<f64> },
    Gaussian { mean: Vec<f64>, variance: Vec<f64> },
}

impl InitialLaw {
    pub fn poisson_from_amplitudes(alpha: &[f64]) -> Result<Self> {
        if alpha.iter().any(|a| !(*a >= 0.0)) {
            return Err(invalid("alpha", "coherent amplitudes must be nonnegative"));
        }
        Ok(InitialLaw::Poisson { alpha_sq: alpha.iter().map(|a| a * a).collect() })
    }

    pub fn modes(&self) -> usize {
        match self {
            InitialLaw::Poisson { alpha_sq } => alpha_sq.len(),
            InitialLaw::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn mean(&self, k: usize) -> f64 {
        match self {
            InitialLaw::Poisson { alpha_sq } => alpha_sq[k],
            InitialLaw::Gaussian { mean, .. } => mean[k],
        }
    }

    pub fn variance(&self, k: usize) -> f64 {
        match self {
            InitialLaw::Poisson { alpha_sq } => alpha_sq[k],
            InitialLaw::Gaussian { variance, .. } => variance[k],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::Poisson { alpha_sq } if alpha_sq.iter().any(|a| !(*a >= 0.0)) => {
                Err(invalid("alpha", "coherent amplitudes must be nonnegative"))
            }
            InitialLaw::Gaussian { mean, variance } if mean.len() != variance.len() => {
                Err(Error::DimensionMismatch { expected: mean.len(), found: variance.len() })
            }
            InitialLaw::Gaussian { variance, .. } if variance.iter().any(|v| !(*v >= 0.0)) => {
                Err(invalid("variance", "must be nonnegative"))
            }
            _ => Ok(()),
        }
    }
}

/// Initial moment-generating function of the drive modes at fields `chi`.
pub fn initial_mgf(law: &InitialLaw, chi: &[f64]) -> Result<C64> {
    law.validate()?;
    if chi.len() > law.modes() {
        return Err(Error::DimensionMismatch { expected: law.modes(), found: chi.len() });
    }
    let i = C64::i();
    let exponent: C64 = match law {
        InitialLaw::Poisson { alpha_sq } => chi.iter().zip(alpha_sq).map(|(&x, &a)| ((-i * x).exp() - 1.0) * a).sum(),
        InitialLaw::Gaussian { mean, variance } => {
            chi.iter().zip(mean.iter().zip(variance)).map(|(&x, (&m, &v))| -i * m * x - 0.5 * v * x * x).sum()
        }
    };
    Ok(exponent.exp())
}

/// Continuation of the eigenvalue connected to the zero-field stationary value.
pub struct Lambda0Tracker<'a> {
    model: &'a dyn CountingModel,
    opts: EngineOptions,
    origin: C64,
    gap: f64,
    norm: f64,
}

impl<'a> Lambda0Tracker<'a> {
    pub fn new(model: &'a dyn CountingModel, opts: &EngineOptions) -> Result<Self> {
        let spectrum = model.generator(&model.zero_fields())?.spectrum(opts)?;
        let k0 = nearest(&spectrum, C64::new(0.0, 0.0)).0;
        let origin = spectrum[k0];
        let norm = spectrum.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
        let gap = spectrum
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != k0)
            .map(|(_, z)| (z - origin).norm())
            .fold(f64::INFINITY, f64::min);
        if gap <= opts.spectral.degeneracy_tol * norm {
            return Err(Error::NearDegenerate { separation: gap });
        }
        Ok(Self { model, opts: *opts, origin, gap, norm })
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn origin(&self) -> C64 {
        self.origin
    }

    pub fn at(&self, fields: &CountingFields) -> Result<C64> {
        if fields.is_zero() {
            return Ok(self.origin);
        }
        let mut lambda = self.origin;
        let mut s: f64 = 0.0;
        let mut ds: f64 = 1.0;
        while s < 1.0 {
            let s1 = (s + ds).min(1.0);
            let spectrum = self.model.generator(&fields.scaled(s1))?.spectrum(&self.opts)?;
            let (j, moved) = nearest(&spectrum, lambda);
            if moved > self.opts.gap_fraction * self.gap {
                ds *= 0.5;
                if ds < 1e-6 {
                    return Err(Error::BranchCollision { value: lambda, competitor: spectrum[j], gap: self.gap });
                }
                continue;
            }
            let limit = self.opts.collision_fraction * self.gap;
            if let Some(k) = (0..spectrum.len()).find(|&k| k != j && (spectrum[k] - spectrum[j]).norm() < limit) {
                return Err(Error::BranchCollision { value: spectrum[j], competitor: spectrum[k], gap: self.gap });
            }
            lambda = spectrum[j];
            s = s1;
            ds = (2.0 * ds).min(1.0);
        }
        Ok(lambda)
    }

    /// Spectral norm scale of the zero-field spectrum.
    pub fn norm(&self) -> f64 {
        self.norm
    }
}

fn nearest(spectrum: &[C64], z: C64) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, l) in spectrum.iter().enumerate() {
        let d = (l - z).norm();
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

pub fn track_lambda0(model: &dyn CountingModel, fields: &CountingFields, opts: &EngineOptions) -> Result<C64> {
    Lambda0Tracker::new(model, opts)?.at(fields)
}

/// Fourth-order central differences at `h` and `h/2` combined by one Richardson step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivatives {
    pub first: C64,
    pub second: C64,
    pub h: f64,
    /// `|D(h) - D(h/2)|` for each order.
    pub first_change: f64,
    pub second_change: f64,
}

/// Abscissae of the stencil: `-2h, -h, -h/2, 0, h/2, h, 2h`.
pub fn stencil_nodes(h: f64) -> [f64; 7] {
    [-2.0 * h, -h, -0.5 * h, 0.0, 0.5 * h, h, 2.0 * h]
}

/// Combines samples taken at `stencil_nodes(h)`.
pub fn derivatives_from_samples(s: &[C64; 7], h: f64) -> Derivatives {
    let [m2, m1, mq, f0, pq, p1, p2] = *s;
    let q = 0.5 * h;
    let d1 = |a2: C64, a1: C64, b1: C64, b2: C64, w: f64| (a2 - b2 + (b1 - a1) * 8.0) / (12.0 * w);
    let d2 = |a2: C64, a1: C64, b1: C64, b2: C64, w: f64| (-(a2 + b2) + (a1 + b1) * 16.0 - f0 * 30.0) / (12.0 * w * w);
    let (coarse1, fine1) = (d1(m2, m1, p1, p2, h), d1(m1, mq, pq, p1, q));
    let (coarse2, fine2) = (d2(m2, m1, p1, p2, h), d2(m1, mq, pq, p1, q));
    Derivatives {
        first: (fine1 * 16.0 - coarse1) / 15.0,
        second: (fine2 * 16.0 - coarse2) / 15.0,
        h,
        first_change: (fine1 - coarse1).norm(),
        second_change: (fine2 - coarse2).norm(),
    }
}

pub fn central_derivatives<F: Fn(f64) -> Result<C64>>(f: F, h: f64) -> Result<Derivatives> {
    if !(h > 0.0) {
        return Err(invalid("h", "must be positive"));
    }
    let x = stencil_nodes(h);
    let mut s = [C64::new(0.0, 0.0); 7];
    for (v, &xi) in s.iter_mut().zip(x.iter()) {
        *v = f(xi)?;
    }
    Ok(derivatives_from_samples(&s, h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    SpectralFD,
    CharPoly,
    AnalyticOracle,
    PerturbationTheory,
    PeriodicNumeric,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SpectralFD => "spectral-fd",
            Method::CharPoly => "charpoly",
            Method::AnalyticOracle => "analytic-oracle",
            Method::PerturbationTheory => "perturbation-theory",
            Method::PeriodicNumeric => "periodic-numeric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Method::SpectralFD, Method::CharPoly, Method::AnalyticOracle, Method::PerturbationTheory, Method::PeriodicNumeric]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilInfo {
    pub h: f64,
    pub flux_change: f64,
    pub noise_change: f64,
    pub flagged: bool,
}

impl StencilInfo {
    pub fn exact() -> Self {
        Self { h: 0.0, flux_change: 0.0, noise_change: 0.0, flagged: false }
    }

    /// Larger of the two relative stencil disagreements.
    pub fn relative_error(&self, flux: f64, noise: Option<f64>) -> f64 {
        let rel = |c: f64, v: f64| if v.abs() > 0.0 { c / v.abs() } else { c };
        let f = rel(self.flux_change, flux);
        noise.map_or(f, |n| f.max(rel(self.noise_change, n)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CumulantReport {
    pub mode: Counted,
    /// Mean photon flux.
    pub flux: f64,
    /// Flux noise, present when the second cumulant was requested.
    pub noise: Option<f64>,
    pub method: Method,
    pub stencil: StencilInfo,
}

impl CumulantReport {
    pub fn snr(&self) -> Option<f64> {
        self.noise.filter(|n| *n > 0.0).map(|n| self.flux / n.sqrt())
    }

    pub(crate) fn from_derivatives(mode: Counted, d: &Derivatives, order: usize, method: Method, tol: f64) -> Self {
        let flux = (C64::i() * d.first).re;
        let noise = (order >= 2).then(|| (-d.second).re);
        let mut stencil = StencilInfo { h: d.h, flux_change: d.first_change, noise_change: d.second_change, flagged: false };
        stencil.flagged = stencil.relative_error(flux, noise) > tol;
        Self { mode, flux, noise, method, stencil }
    }
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    match order {
        1 | 2 => Ok(()),
        _ => Err(Error::Unsupported(format!(
            "cumulant order {order}: only flux (1) and noise (2) rates are linear in time for the two-branch generating function"
        ))),
    }
}

/// Step used for the stencil: `h`, reduced when the spectral gap is small
/// compared with the sensitivity of the generator to the counting field.
pub fn effective_step(model: &dyn CountingModel, mode: Counted, tracker: &Lambda0Tracker, opts: &EngineOptions) -> Result<f64> {
    if !opts.adaptive_step {
        return Ok(opts.h);
    }
    let (nd, nb) = (model.drive_modes(), model.bath_channels());
    let delta = 1e-6;
    let g1 = model.generator(&mode.fields(nd, nb, delta))?;
    let g0 = model.generator(&mode.fields(nd, nb, 0.0))?;
    let scale = match (g1, g0) {
        (Generator::Static(a), Generator::Static(b)) => spectral_norm(&(a.matrix() - b.matrix())) / delta,
        _ => return Ok(opts.h),
    };
    if scale == 0.0 {
        return Ok(opts.h);
    }
    Ok(opts.h.min(opts.step_gap_fraction * tracker.gap() / scale))
}

/// Slow eigenvalue of a static generator of the form `A + B e^{ix} + C e^{-ix}`
/// in one counting field. The shift from the zero-field value is obtained by
/// a Feshbach fixed point in the zero-field eigenbasis, driven by
/// `B (e^{ix} - 1) + C (e^{-ix} - 1)`, so its rounding error scales with the
/// shift rather than with the norm of the generator.
struct HarmonicBranch {
    origin: C64,
    k0: usize,
    others: Vec<usize>,
    spectrum: Vec<C64>,
    b: CMatrix,
    c: CMatrix,
}

impl HarmonicBranch {
    fn new(model: &dyn CountingModel, mode: Counted, opts: &EngineOptions) -> Result<Option<Self>> {
        let (nd, nb) = (model.drive_modes(), model.bath_channels());
        let at = |x: f64| -> Result<Option<CMatrix>> {
            Ok(match model.generator(&mode.fields(nd, nb, x))? {
                Generator::Static(s) => Some(s.into_matrix()),
                Generator::Periodic { .. } => None,
            })
        };
        use std::f64::consts::{FRAC_PI_2, PI};
        let (Some(l0), Some(lp), Some(lpi), Some(lm)) = (at(0.0)?, at(FRAC_PI_2)?, at(PI)?, at(-FRAC_PI_2)?) else {
            return Ok(None);
        };
        let half = C64::new(0.5, 0.0);
        let a = (&l0 + &lpi) * half;
        let sum = (&l0 - &lpi) * half;
        let diff = (&lp - &lm) * C64::new(0.0, -0.5);
        let b = (&sum + &diff) * half;
        let c = (&sum - &diff) * half;
        let scale = spectral_norm(&l0).max(f64::MIN_POSITIVE);
        for x in [0.7, -1.9] {
            let Some(lx) = at(x)? else { return Ok(None) };
            let fit = &a + &b * C64::new(0.0, x).exp() + &c * C64::new(0.0, -x).exp();
            if spectral_norm(&(fit - lx)) > 1e-12 * scale {
                return Ok(None);
            }
        }
        let sd = spectral_decompose_matrix(&l0, &opts.spectral)?;
        let k0 = sd.nearest(C64::new(0.0, 0.0));
        let others = (0..sd.eigenvalues.len()).filter(|&k| k != k0).collect();
        Ok(Some(Self {
            origin: sd.eigenvalues[k0],
            k0,
            others,
            b: &sd.left * b * &sd.right,
            c: &sd.left * c * &sd.right,
            spectrum: sd.eigenvalues,
        }))
    }

    fn at(&self, x: f64) -> Result<C64> {
        let s = (0.5 * x).sin();
        let up = C64::new(-2.0 * s * s, x.sin());
        let m = &self.b * up + &self.c * up.conj();
        let q = self.others.len();
        let row = CMatrix::from_fn(1, q, |_, j| m[(self.k0, self.others[j])]);
        let col = CMatrix::from_fn(q, 1, |i, _| m[(self.others[i], self.k0)]);
        let mut shift = m[(self.k0, self.k0)];
        for _ in 0..200 {
            let z = self.origin + shift;
            let block = CMatrix::from_fn(q, q, |i, j| {
                let (ki, kj) = (self.others[i], self.others[j]);
                let d = if i == j { z - self.spectrum[ki] } else { C64::new(0.0, 0.0) };
                d - m[(ki, kj)]
            });
            let y = block.lu().solve(&col).ok_or(Error::NearDegenerate { separation: 0.0 })?;
            let next = m[(self.k0, self.k0)] + (&row * y)[(0, 0)];
            let done = (next - shift).norm() <= 4.0 * f64::EPSILON * next.norm();
            shift = next;
            if done {
                return Ok(self.origin + shift);
            }
        }
        Err(Error::BranchCollision { value: self.origin + shift, competitor: self.origin, gap: 0.0 })
    }
}

/// Flux and (for `order == 2`) noise from derivatives of the tracked slow eigenvalue.
pub fn cumulants_spectral(model: &dyn CountingModel, mode: Counted, order: usize, opts: &EngineOptions) -> Result<CumulantReport> {
    check_order(order)?;
    let (nd, nb) = (model.drive_modes(), model.bath_channels());
    mode.check(nd, nb)?;
    let tracker = Lambda0Tracker::new(model, opts)?;
    let h = effective_step(model, mode, &tracker, opts)?;
    let d = match HarmonicBranch::new(model, mode, opts)? {
        Some(branch) => match central_derivatives(|x| branch.at(x), h) {
            Ok(d) => d,
            Err(_) => central_derivatives(|x| tracker.at(&mode.fields(nd, nb, x)), h)?,
        },
        None => central_derivatives(|x| tracker.at(&mode.fields(nd, nb, x)), h)?,
    };
    let method = if model.generator(&model.zero_fields())?.is_periodic() { Method::PeriodicNumeric } else { Method::SpectralFD };
    Ok(CumulantReport::from_derivatives(mode, &d, order, method, opts.richardson_tol))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationReport {
    pub drive_flux: f64,
    pub bath_flux: f64,
    pub drive_noise: f64,
    pub bath_noise: f64,
    /// Sum of the individually counted drive-mode fluxes.
    pub mode_flux_sum: f64,
    pub flux_violation: f64,
    pub mode_violation: f64,
    pub noise_violation: f64,
    pub passed: bool,
}

/// Compares photons taken from the drives with photons emitted into the bath.
pub fn conservation_check(model: &dyn CountingModel, flux_tol: f64, noise_tol: f64, opts: &EngineOptions) -> Result<ConservationReport> {
    if model.bath_channels() == 0 {
        return Err(invalid("model", "no bath counting field"));
    }
    let d = cumulants_spectral(model, Counted::AllDrives, 2, opts)?;
    let b = cumulants_spectral(model, Counted::AllBaths, 2, opts)?;
    let mut mode_flux_sum = 0.0;
    for k in 0..model.drive_modes() {
        mode_flux_sum += cumulants_spectral(model, Counted::Drive(k), 1, opts)?.flux;
    }
    let (dn, bn) = (d.noise.unwrap_or(f64::NAN), b.noise.unwrap_or(f64::NAN));
    let flux_violation = (d.flux + b.flux).abs();
    let mode_violation = (mode_flux_sum + b.flux).abs();
    let noise_violation = (dn - bn).abs();
    let passed = flux_violation <= flux_tol && mode_violation <= flux_tol && noise_violation <= noise_tol;
    Ok(ConservationReport {
        drive_flux: d.flux,
        bath_flux: b.flux,
        drive_noise: dn,
        bath_noise: bn,
        mode_flux_sum,
        flux_violation,
        mode_violation,
        noise_violation,
        passed,
    })
}

/// Stationary flux `-<dH/dphi_k>`, averaged over one period for periodic models.
pub fn semiclassical_flux(model: &dyn CountingModel, mode: usize, opts: &EngineOptions) -> Result<f64> {
    if mode >= model.drive_modes() {
        return Err(invalid("mode", format!("drive mode {mode} out of range")));
    }
    let g = model.generator(&model.zero_fields())?;
    match &g {
        Generator::Static(s) => {
            let rho = stationary_state_with(s, &opts.spectral)?;
            Ok(-rho.expectation(&model.phase_derivative(mode, 0.0)).re)
        }
        Generator::Periodic { period, basis, at, .. } => {
            let eff = g.effective(opts)?;
            let rho = stationary_state_with(&eff, &opts.spectral)?;
            let mut v = vectorize(&rho, *basis)?;
            let n = opts.integrator.steps.max(64);
            let n = n + n % 2;
            let dt = period / n as f64;
            let value = |v: &CVector, t: f64| -> Result<f64> {
                Ok(-devectorize(v, *basis)?.expectation(&model.phase_derivative(mode, t)).re)
            };
            let mut acc = value(&v, 0.0)?;
            for j in 1..=n {
                let t0 = (j - 1) as f64 * dt;
                v = rk4_propagator(at, v.len(), t0, t0 + dt, 1) * v;
                let w = if j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * value(&v, j as f64 * dt)?;
            }
            Ok(acc * dt / 3.0 / period)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityWindow {
    pub t_max: f64,
    pub flag: Option<String>,
}

/// Largest time for which the semiclassical error estimate stays below `eps`.
pub fn validity_window(g: f64, gamma: f64, nbar: f64, sigma: f64, eps: f64) -> Result<ValidityWindow> {
    if !(nbar > 0.0) || !(sigma > 0.0) {
        return Err(invalid("nbar/sigma", "must be positive"));
    }
    if sigma / nbar > eps {
        return Ok(ValidityWindow {
            t_max: 0.0,
            flag: Some(format!("sigma/nbar = {:.3e} exceeds tolerance {:.3e} at all times", sigma / nbar, eps)),
        });
    }
    let mut t = f64::INFINITY;
    if g > 0.0 {
        t = t.min(eps * sigma * sigma / g).min(eps * nbar / g);
    }
    if gamma > 0.0 {
        t = t.min(eps * nbar / gamma);
    }
    Ok(ValidityWindow { t_max: t, flag: None })
}
