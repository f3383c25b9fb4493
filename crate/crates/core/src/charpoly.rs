//! Characteristic polynomials of dressed generators and cumulants from
//! truncated roots.

use crate::counting::{
    check_order, derivatives_from_samples, stencil_nodes, Counted, CountingModel, CumulantReport, Derivatives, EngineOptions,
    Method, StencilInfo,
};
use crate::error::{invalid, Error, Result};
use crate::superop::{spectral_norm, CMatrix, C64};

/// Monic coefficients `a_0 .. a_D` in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct CharPolyCoeffs {
    pub coeffs: Vec<C64>,
}

impl CharPolyCoeffs {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("coeffs", "empty polynomial"));
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn a(&self, j: usize) -> C64 {
        self.coeffs.get(j).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// Faddeev–LeVerrier recursion on the norm-scaled matrix. The constant
/// coefficient is replaced by the LU determinant, which keeps its accuracy
/// relative to the smallest eigenvalue instead of to the matrix norm.
pub fn char_poly(a: &CMatrix) -> Result<CharPolyCoeffs> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if n > 64 {
        return Err(invalid("matrix", "dimension above 64"));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("char_poly input"));
    }
    let scale = spectral_norm(a);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let b = a / C64::new(scale, 0.0);
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        m = &b * &m;
        for i in 0..n {
            m[(i, i)] += c[n + 1 - k];
        }
        c[n - k] = -(&b * &m).trace() / k as f64;
    }
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= scale.powi((n - j) as i32);
    }
    c[0] = (-a).determinant();
    Ok(CharPolyCoeffs { coeffs: c })
}

#[derive(Clone, Copy, Debug)]
pub struct CharPolyOptions {
    /// Stencil step for the coefficient derivatives. The coefficients are
    /// trigonometric polynomials of low degree, so the step can be
    /// larger than the one used on the tracked eigenvalue.
    pub h: f64,
    /// Smallest admissible `|a_1| / norm^(D-1)`.
    pub degeneracy_tol: f64,
    pub richardson_tol: f64,
}

impl Default for CharPolyOptions {
    fn default() -> Self {
        Self { h: 5e-3, degeneracy_tol: 1e-14, richardson_tol: 1e-6 }
    }
}

/// Derivatives of `a_0`, `a_1` and the value of `a_1`, `a_2` at zero field.
#[derive(Clone, Copy, Debug)]
pub struct CoefficientJet {
    pub a0: Derivatives,
    pub a1: Derivatives,
    pub a1_value: C64,
    pub a2_value: C64,
    pub scale: f64,
    pub degree: usize,
}

pub fn coefficient_jet<F: Fn(f64) -> Result<CharPolyCoeffs>>(coeff_fn: F, h: f64) -> Result<CoefficientJet> {
    if !(h > 0.0) {
        return Err(invalid("h", "must be positive"));
    }
    let nodes = stencil_nodes(h);
    let samples = nodes.iter().map(|&x| coeff_fn(x)).collect::<Result<Vec<_>>>()?;
    let pick = |j: usize| {
        let mut s = [C64::new(0.0, 0.0); 7];
        for (v, c) in s.iter_mut().zip(samples.iter()) {
            *v = c.a(j);
        }
        s
    };
    let zero = &samples[3];
    let degree = zero.degree();
    let scale = zero.coeffs.iter().enumerate().map(|(j, c)| c.norm().powf(1.0 / (degree - j).max(1) as f64)).fold(0.0, f64::max);
    Ok(CoefficientJet {
        a0: derivatives_from_samples(&pick(0), h),
        a1: derivatives_from_samples(&pick(1), h),
        a1_value: zero.a(1),
        a2_value: zero.a(2),
        scale,
        degree,
    })
}

impl CoefficientJet {
    fn check(&self, tol: f64) -> Result<()> {
        let floor = tol * self.scale.max(f64::MIN_POSITIVE).powi(self.degree as i32 - 1);
        if !(self.a1_value.norm() > floor) {
            return Err(Error::DegenerateRoot(format!(
                "|a1| = {:.3e} below {:.3e}; the stationary root is degenerate, use the perturbative route",
                self.a1_value.norm(),
                floor
            )));
        }
        Ok(())
    }

    /// `d lambda / d chi` of the first-order truncated root `-a0/a1`.
    pub fn root_first(&self) -> C64 {
        -self.a0.first / self.a1_value
    }

    /// `d^2 lambda / d chi^2` of the second-order truncated root, by implicit
    /// differentiation of `a0 + a1 lambda + a2 lambda^2 = 0` about `lambda = 0`.
    pub fn root_second(&self) -> C64 {
        let l1 = self.root_first();
        -(self.a0.second + self.a1.first * l1 * 2.0 + self.a2_value * l1 * l1 * 2.0) / self.a1_value
    }
}

/// `-Re[(d a0 / d(-i chi)) / a1]` at zero field.
pub fn first_cumulant_rate<F: Fn(f64) -> Result<CharPolyCoeffs>>(coeff_fn: F, opts: &CharPolyOptions) -> Result<f64> {
    let jet = coefficient_jet(coeff_fn, opts.h)?;
    jet.check(opts.degeneracy_tol)?;
    Ok((C64::i() * jet.root_first()).re)
}

/// `Re[-d^2 lambda / d chi^2]` of the quadratic truncated root at zero field.
pub fn second_cumulant_rate<F: Fn(f64) -> Result<CharPolyCoeffs>>(coeff_fn: F, opts: &CharPolyOptions) -> Result<f64> {
    let jet = coefficient_jet(coeff_fn, opts.h)?;
    jet.check(opts.degeneracy_tol)?;
    Ok((-jet.root_second()).re)
}

/// Quadratic truncated root `(-a1 + sqrt(a1^2 - 4 a0 a2)) / (2 a2)` with the
/// branch that vanishes with `a0`, evaluated in cancellation-free form.
pub fn quadratic_root(c: &CharPolyCoeffs) -> Result<C64> {
    let (a0, a1, a2) = (c.a(0), c.a(1), c.a(2));
    let disc = a1 * a1 - a0 * a2 * 4.0;
    let mut s = disc.sqrt();
    if (s.conj() * a1).re < 0.0 {
        s = -s;
    }
    let den = a1 + s;
    if den.norm() <= 1e-300 {
        return Err(Error::DegenerateRoot("vanishing discriminant and a1".into()));
    }
    Ok(-a0 * 2.0 / den)
}

/// Flux and noise of a counted mode from the dressed generator's characteristic polynomial.
pub fn cumulants_charpoly(
    model: &dyn CountingModel,
    mode: Counted,
    order: usize,
    engine: &EngineOptions,
    opts: &CharPolyOptions,
) -> Result<CumulantReport> {
    check_order(order)?;
    let (nd, nb) = (model.drive_modes(), model.bath_channels());
    let coeff_fn = |x: f64| -> Result<CharPolyCoeffs> {
        let g = model.generator(&mode.fields(nd, nb, x))?.effective(engine)?;
        char_poly(g.matrix())
    };
    let jet = coefficient_jet(coeff_fn, opts.h)?;
    jet.check(opts.degeneracy_tol)?;
    let flux = (C64::i() * jet.root_first()).re;
    let noise = (order >= 2).then(|| (-jet.root_second()).re);
    let flux_change = jet.a0.first_change / jet.a1_value.norm();
    let noise_change = jet.a0.second_change / jet.a1_value.norm();
    let mut stencil = StencilInfo { h: opts.h, flux_change, noise_change, flagged: false };
    stencil.flagged = stencil.relative_error(flux, noise) > opts.richardson_tol;
    Ok(CumulantReport { mode, flux, noise, method: Method::CharPoly, stencil })
}
