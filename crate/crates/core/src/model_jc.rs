//! Two-mode dissipative Jaynes–Cummings model in the Pauli basis.
//!
//! Vector components are `(tr rho, <sigma_x>, <sigma_y>, <sigma_z>)`. The
//! Hamiltonian is `eps/2 sigma_z + Omega_x sigma_x + Omega_y sigma_y` with
//! `Omega_x + i Omega_y = sum_k Omega_k exp(i (phi_k - chi_k))` on the ket
//! side, and the emission dissipator carries `exp(-i xi)` on its jump term.

use crate::charpoly::{cumulants_charpoly, CharPolyCoeffs, CharPolyOptions};
use crate::counting::{
    cumulants_spectral, Counted, CountingFields, CountingModel, CumulantReport, EngineOptions, Generator, Method,
    StencilInfo,
};
use crate::error::{invalid, Error, Result};
use crate::superop::{pauli, Basis, CMatrix, CVector, Superoperator, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JcParams {
    pub eps_delta: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub gamma: f64,
}

impl JcParams {
    pub fn new(eps_delta: f64, omega1: f64, omega2: f64, phi1: f64, phi2: f64, gamma: f64) -> Result<Self> {
        let p = Self { eps_delta, omega1, omega2, phi1, phi2, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.eps_delta, self.omega1, self.omega2, self.phi1, self.phi2, self.gamma];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("JcParams"));
        }
        for (name, v) in [("omega1", self.omega1), ("omega2", self.omega2), ("gamma", self.gamma)] {
            if v < 0.0 {
                return Err(invalid(name, "must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Phase difference `phi2 - phi1`.
    pub fn phi(&self) -> f64 {
        self.phi2 - self.phi1
    }

    pub fn drive(&self, chi: [f64; 2]) -> (f64, f64) {
        let a1 = self.phi1 - chi[0];
        let a2 = self.phi2 - chi[1];
        (self.omega1 * a1.cos() + self.omega2 * a2.cos(), self.omega1 * a1.sin() + self.omega2 * a2.sin())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JcCoeffs {
    pub c_minus: C64,
    pub c_plus: C64,
    pub s_minus: C64,
    pub s_plus: C64,
    pub gamma_minus: C64,
    pub gamma_plus: C64,
}

pub fn jc_coeffs(p: &JcParams, chi: [f64; 2], xi: f64) -> JcCoeffs {
    let (x0, y0) = p.drive([0.0, 0.0]);
    let (x, y) = p.drive(chi);
    let e = C64::new(0.0, -xi).exp();
    JcCoeffs {
        c_minus: C64::new(x0 - x, 0.0),
        c_plus: C64::new(x0 + x, 0.0),
        s_minus: C64::new(y0 - y, 0.0),
        s_plus: C64::new(y0 + y, 0.0),
        gamma_minus: (e - 1.0) * 2.0 * p.gamma,
        gamma_plus: (e + 1.0) * 2.0 * p.gamma,
    }
}

pub fn jc_liouvillian(p: &JcParams, chi: [f64; 2], xi: f64) -> Result<Superoperator> {
    p.validate()?;
    let k = jc_coeffs(p, chi, xi);
    let i = C64::i();
    let g = C64::new(2.0 * p.gamma, 0.0);
    let e = C64::new(p.eps_delta, 0.0);
    #[rustfmt::skip]
    let m = CMatrix::from_row_slice(4, 4, &[
        k.gamma_minus, i * k.c_minus, i * k.s_minus, k.gamma_minus,
        i * k.c_minus, -g, -e, k.s_plus,
        i * k.s_minus, e, -g, -k.c_plus,
        -k.gamma_plus, -k.s_plus, k.c_plus, -k.gamma_plus,
    ]);
    Superoperator::new(m, Basis::Pauli, 2)
}

pub fn jc_hamiltonian(p: &JcParams) -> CMatrix {
    let [_, sx, sy, sz] = pauli();
    let (x, y) = p.drive([0.0, 0.0]);
    sz * C64::new(0.5 * p.eps_delta, 0.0) + sx * C64::new(x, 0.0) + sy * C64::new(y, 0.0)
}

/// Counting model with drive modes `k = 0, 1` and one bath channel.
#[derive(Clone, Copy, Debug)]
pub struct JcModel {
    pub params: JcParams,
}

impl JcModel {
    pub fn new(params: JcParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl CountingModel for JcModel {
    fn drive_modes(&self) -> usize {
        2
    }

    fn bath_channels(&self) -> usize {
        1
    }

    fn generator(&self, fields: &CountingFields) -> Result<Generator> {
        if fields.chi.len() != 2 || fields.xi.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 3, found: fields.chi.len() + fields.xi.len() });
        }
        Ok(Generator::Static(jc_liouvillian(&self.params, [fields.chi[0], fields.chi[1]], fields.xi[0])?))
    }

    fn phase_derivative(&self, mode: usize, _t: f64) -> CMatrix {
        let [_, sx, sy, _] = pauli();
        let (om, ph) = if mode == 0 { (self.params.omega1, self.params.phi1) } else { (self.params.omega2, self.params.phi2) };
        (sx * C64::new(-ph.sin(), 0.0) + sy * C64::new(ph.cos(), 0.0)) * C64::new(om, 0.0)
    }

    fn label(&self) -> String {
        "jaynes-cummings".into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CharPolyVariant {
    /// Consistent with `jc_liouvillian`: `W = Omega_x^2 + Omega_y^2`, `exp(-i (xi - chi))`.
    Resolved,
    /// `Omega_phi = Omega_x cos(phi1) + Omega_y sin(phi2)` and `exp(+i (xi - chi))`.
    Printed,
}

/// Quartic characteristic polynomial for equal drive fields `chi1 = chi2 = chi`.
pub fn jc_charpoly_analytic(p: &JcParams, chi: f64, xi: f64, variant: CharPolyVariant) -> CharPolyCoeffs {
    let (x0, y0) = p.drive([0.0, 0.0]);
    let (w, e) = match variant {
        CharPolyVariant::Resolved => (x0 * x0 + y0 * y0, C64::new(0.0, -(xi - chi)).exp()),
        CharPolyVariant::Printed => {
            let o = x0 * p.phi1.cos() + y0 * p.phi2.sin();
            (o * o, C64::new(0.0, xi - chi).exp())
        }
    };
    let (g, eps) = (p.gamma, p.eps_delta);
    let one = C64::new(1.0, 0.0);
    CharPolyCoeffs {
        coeffs: vec![
            (one - e) * 16.0 * w * g * g,
            (e * (-8.0 * w) + 16.0 * w + 16.0 * g * g + 4.0 * eps * eps) * g,
            C64::new(4.0 * w + 20.0 * g * g + eps * eps, 0.0),
            C64::new(8.0 * g, 0.0),
            one,
        ],
    }
}

/// Stationary flux into mode 1, with `phi = phi2 - phi1`.
pub fn jc_flux_oracle(p: &JcParams) -> f64 {
    let (e, o1, o2, g, ph) = (p.eps_delta, p.omega1, p.omega2, p.gamma, p.phi());
    o1 * (2.0 * e * o2 * ph.sin() - 4.0 * g * o1 - 4.0 * g * o2 * ph.cos())
        / (e * e + 4.0 * g * g + 2.0 * o1 * o1 + 4.0 * o1 * o2 * ph.cos() + 2.0 * o2 * o2)
}

/// Cumulant rates of one ledger by the requested method.
pub fn jc_cumulants(
    p: &JcParams,
    mode: Counted,
    order: usize,
    method: Method,
    engine: &EngineOptions,
    cp: &CharPolyOptions,
) -> Result<CumulantReport> {
    let model = JcModel::new(*p)?;
    match method {
        Method::SpectralFD => cumulants_spectral(&model, mode, order, engine),
        Method::CharPoly => cumulants_charpoly(&model, mode, order, engine, cp),
        Method::AnalyticOracle => {
            crate::counting::check_order(order)?;
            let q = match mode {
                Counted::Drive(0) => *p,
                Counted::Drive(1) => JcParams { omega1: p.omega2, omega2: p.omega1, phi1: p.phi2, phi2: p.phi1, ..*p },
                _ => return Err(Error::Unsupported("closed-form rates exist for the individual drive modes only".into())),
            };
            let noise = if order == 2 { Some(jc_noise_oracle(&q, NoiseOracle::Exact)?) } else { None };
            Ok(CumulantReport { mode, flux: jc_flux_oracle(&q), noise, method, stencil: StencilInfo::exact() })
        }
        Method::PerturbationTheory | Method::PeriodicNumeric => {
            Err(Error::Unsupported(format!("method {} is not available for the two-level model", method.name())))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseOracle {
    /// Leading order in small `gamma`.
    WeakGamma,
    /// Rational expression `c_num / c_den` as published, real part.
    Exact,
}

pub fn jc_noise_oracle(p: &JcParams, mode: NoiseOracle) -> Result<f64> {
    let (e, o1, o2, g, ph) = (p.eps_delta, p.omega1, p.omega2, p.gamma, p.phi());
    let (s, c) = ph.sin_cos();
    if !(g > 0.0) {
        return Err(invalid("gamma", "noise diverges as gamma -> 0"));
    }
    match mode {
        NoiseOracle::WeakGamma => {
            let a = o1 * o1 + 2.0 * o1 * o2 * c + o2 * o2;
            let b = e * e + 2.0 * o1 * o1 + 4.0 * o1 * o2 * c + 2.0 * o2 * o2;
            Ok(8.0 * o1 * o1 * o2 * o2 * a * a * s * s / (g * b.powi(3)))
        }
        NoiseOracle::Exact => {
            let i = C64::i();
            let a = e * e + g * g + 2.0 * o1 * o1 + o1 * o2 * c + 2.0 * o2 * o2;
            let b = 4.0 * e * e + 16.0 * g * g + 8.0 * o1 * o1 + 16.0 * o1 * o2 * c + 8.0 * o2 * o2;
            let t1 = i / 64.0 * g * o1 * o1 * (i * o1 - o2 * s + i * o2 * c) * (8.0 * e * o2 * s + 10.0 * g * o1 + 16.0 * g * o2 * c) * a * b;
            let t2 = o1 * o1 / 8.0
                * (0.5 * e * o2 * s + g * o1 + g * o2 * c).powi(2)
                * (e * e + 20.0 * g * g + 4.0 * o1 * o1 + 8.0 * o1 * o2 * c + 4.0 * o2 * o2)
                * b;
            let t3 = (8.0 * i * e * g * o2 * c + 16.0 * g * g * o1 - 16.0 * i * g * g * o2 * s + 8.0 * o1 * o2 * o2 * s * s) * (o1 / 64.0) * a.powi(3);
            let num = t1 + t2 - t3;
            let den = g / 64.0 * a.powi(3) * b;
            Ok((num / den).re)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Closed-form stationary Bloch vector of `jc_liouvillian` at zero fields.
pub fn jc_stationary_bloch(p: &JcParams) -> BlochVector {
    let (ox, oy) = p.drive([0.0, 0.0]);
    let (e, g) = (p.eps_delta, p.gamma);
    let d = e * e + 4.0 * g * g;
    let w = ox * ox + oy * oy;
    if d + w == 0.0 {
        return BlochVector { x: 0.0, y: 0.0, z: -1.0 };
    }
    let z = -d / (d + 2.0 * w);
    if d == 0.0 {
        return BlochVector { x: 0.0, y: 0.0, z };
    }
    BlochVector { x: 2.0 * (2.0 * g * oy + e * ox) * z / d, y: -2.0 * (2.0 * g * ox - e * oy) * z / d, z }
}

/// The stationary Bloch vector exactly as published (drive amplitudes at half scale).
pub fn jc_stationary_bloch_printed(p: &JcParams) -> BlochVector {
    let (ox, oy) = p.drive([0.0, 0.0]);
    let (e, g) = (p.eps_delta, p.gamma);
    let d = e * e + 4.0 * g * g;
    let z = 4.0 * g / ((ox * (2.0 * g * ox - e * oy) - oy * (2.0 * g * oy + e * ox)) / d - 4.0 * g);
    BlochVector { x: (2.0 * g * oy + e * ox) * z / d, y: (2.0 * g * ox - e * oy) * z / d, z }
}

/// Quasienergies `(-, +)` of the closed model with drive fields `chi`.
pub fn jc_quasienergies(p: &JcParams, chi: [f64; 2]) -> (f64, f64) {
    let r = radicand(p, chi);
    let e = 0.5 * r.max(0.0).sqrt();
    (-e, e)
}

fn radicand(p: &JcParams, chi: [f64; 2]) -> f64 {
    let (e, o1, o2) = (p.eps_delta, p.omega1, p.omega2);
    e * e + o1 * o1 + o2 * o2 + 2.0 * o1 * o2 * (p.phi2 - p.phi1 + chi[1] - chi[0]).cos()
}

/// `(dE_1/dchi_k, dE_2/dchi_k)` at zero fields.
pub fn jc_quasienergy_derivatives(p: &JcParams, mode: usize) -> Result<(f64, f64)> {
    if mode > 1 {
        return Err(invalid("mode", "drive mode must be 0 or 1"));
    }
    let r = radicand(p, [0.0, 0.0]);
    if !(r > 0.0) {
        return Err(Error::NearDegenerate { separation: 0.0 });
    }
    let sign = if mode == 0 { 1.0 } else { -1.0 };
    let d = sign * p.omega1 * p.omega2 * p.phi().sin() / (2.0 * r.sqrt());
    Ok((-d, d))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedStatistics {
    pub mean: f64,
    /// Known only for a single Floquet state or the balanced superposition.
    pub variance: Option<f64>,
}

pub(crate) fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|x| !(*x >= 0.0)) {
        return Err(invalid("weights", "must be nonnegative"));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(invalid("weights", format!("sum to {s}, not 1")));
    }
    Ok(())
}

/// Photon-number change of drive mode `mode` after time `t` for Floquet weights `|c_mu|^2`.
pub fn jc_closed_statistics(p: &JcParams, weights: [f64; 2], mode: usize, t: f64) -> Result<ClosedStatistics> {
    check_weights(&weights)?;
    let (d1, d2) = jc_quasienergy_derivatives(p, mode)?;
    let mean = -(weights[0] * d1 + weights[1] * d2) * t;
    let variance = if weights.contains(&0.0) {
        Some(0.0)
    } else if (weights[0] - weights[1]).abs() <= 1e-12 {
        Some((d2 - d1).powi(2) * t * t)
    } else {
        None
    };
    Ok(ClosedStatistics { mean, variance })
}

/// Heuristic per-unit-time variance from random switching between Floquet
/// states every `1/gamma`.
pub fn jc_floquet_switching_noise(p: &JcParams) -> Result<f64> {
    if p.eps_delta != 0.0 {
        return Err(invalid("eps_delta", "the switching picture assumes resonance"));
    }
    if !(p.gamma > 0.0) {
        return Err(invalid("gamma", "must be positive"));
    }
    let (o1, o2, ph) = (p.omega1, p.omega2, p.phi());
    let den = o1 * o1 + o2 * o2 + 2.0 * o1 * o2 * ph.cos();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * o1 * o1 * o2 * o2 * ph.sin() / den / p.gamma)
}

/// Eigenpairs of the closed Hamiltonian, ascending in energy.
pub fn jc_floquet_states(p: &JcParams) -> [(f64, CVector); 2] {
    let (x, y) = p.drive([0.0, 0.0]);
    let h = 0.5 * p.eps_delta;
    let r = (h * h + x * x + y * y).sqrt();
    let off = C64::new(x, -y);
    let state = |e: f64| -> CVector {
        // (H - e) v = 0 with H = [[h, off], [off*, -h]]
        let v = if (h - e).abs() + off.norm() > 0.0 && off.norm() > 1e-300 {
            CVector::from_vec(vec![off, C64::new(e - h, 0.0)])
        } else if (h - e).abs() < (-h - e).abs() {
            CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
        } else {
            CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
        };
        let n = v.norm();
        v / C64::new(n, 0.0)
    };
    [(-r, state(-r)), (r, state(r))]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charpoly::char_poly;
    use crate::counting::{cumulants_spectral, semiclassical_flux, Counted, EngineOptions};
    use crate::superop::{eigenvalues, max_abs, spectral_decompose, stationary_state, vectorize, GeneralizedDensityMatrix};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params(e: f64, o1: f64, o2: f64, phi: f64, g: f64) -> JcParams {
        JcParams::new(e, o1, o2, 0.0, phi, g).unwrap()
    }

    #[test]
    fn zero_field_coefficients() {
        let k = jc_coeffs(&params(0.3, 1.0, 0.5, 0.7, 0.2), [0.0, 0.0], 0.0);
        assert_eq!(k.c_minus, C64::new(0.0, 0.0));
        assert_eq!(k.s_minus, C64::new(0.0, 0.0));
        assert_eq!(k.gamma_minus, C64::new(0.0, 0.0));
        assert!((k.gamma_plus - C64::new(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decay_only_spectrum() {
        let l = jc_liouvillian(&params(0.0, 0.0, 0.0, 0.0, 0.25), [0.0, 0.0], 0.0).unwrap();
        let mut ev: Vec<f64> = eigenvalues(l.matrix()).iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in ev.iter().zip([0.0, -0.5, -0.5, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_example() {
        let l = jc_liouvillian(&params(0.1, 1.0, 1.0, FRAC_PI_2, 0.001), [0.0, 0.0], 0.0).unwrap();
        let sd = spectral_decompose(&l).unwrap();
        assert!(sd.eigenvalues[0].norm() < 1e-10);
        assert!(sd.eigenvalues[1..].iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn stationary_bloch_closed_form() {
        for p in [params(0.1, 1.0, 1.0, FRAC_PI_2, 0.001), params(0.3, 0.7, 1.2, 0.4, 0.2), params(-1.0, 0.2, 0.0, 0.0, 0.05)] {
            let rho = stationary_state(&jc_liouvillian(&p, [0.0, 0.0], 0.0).unwrap()).unwrap();
            let v = vectorize(&rho, Basis::Pauli).unwrap();
            let b = jc_stationary_bloch(&p);
            assert!((v[1].re - b.x).abs() < 1e-8 && (v[2].re - b.y).abs() < 1e-8 && (v[3].re - b.z).abs() < 1e-8);
        }
    }

    #[test]
    fn resonant_weak_damping_is_fully_mixed() {
        let p = params(0.0, 1.0, 1.0, FRAC_PI_2, 1e-6);
        let rho = stationary_state(&jc_liouvillian(&p, [0.0, 0.0], 0.0).unwrap()).unwrap();
        let v = vectorize(&rho, Basis::Pauli).unwrap();
        assert!(v.iter().skip(1).all(|z| z.norm() < 1e-5));
    }

    #[test]
    fn pure_decay_reaches_ground_state() {
        let rho = stationary_state(&jc_liouvillian(&params(0.4, 0.0, 0.0, 0.0, 0.1), [0.0, 0.0], 0.0).unwrap()).unwrap();
        assert!((vectorize(&rho, Basis::Pauli).unwrap()[3].re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolved_charpoly_matches_numeric() {
        let mut seed = 3u64;
        let mut r = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let p = JcParams::new(4.0 * r() - 2.0, 2.0 * r(), 2.0 * r(), 6.0 * r(), 6.0 * r(), r()).unwrap();
            let (chi, xi) = (6.0 * r() - 3.0, 6.0 * r() - 3.0);
            let num = char_poly(jc_liouvillian(&p, [chi, chi], xi).unwrap().matrix()).unwrap();
            let ana = jc_charpoly_analytic(&p, chi, xi, CharPolyVariant::Resolved);
            for (a, b) in num.coeffs.iter().zip(&ana.coeffs) {
                assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn charpoly_special_values() {
        let p = params(0.2, 1.0, 0.5, 0.3, 0.1);
        for v in [CharPolyVariant::Resolved, CharPolyVariant::Printed] {
            let same = jc_charpoly_analytic(&p, 0.4, 0.4, v);
            assert_eq!(same.a(0), C64::new(0.0, 0.0));
            let w = match v {
                CharPolyVariant::Resolved => {
                    let (x, y) = p.drive([0.0, 0.0]);
                    x * x + y * y
                }
                CharPolyVariant::Printed => {
                    let (x, y) = p.drive([0.0, 0.0]);
                    (x * p.phi1.cos() + y * p.phi2.sin()).powi(2)
                }
            };
            assert!((same.a(1) - C64::new(p.gamma * (8.0 * w + 16.0 * p.gamma.powi(2) + 4.0 * p.eps_delta.powi(2)), 0.0)).norm() < 1e-14);
            let opposite = jc_charpoly_analytic(&p, 0.0, PI, v);
            assert!((opposite.a(0) - C64::new(32.0 * w * p.gamma.powi(2), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn flux_oracle_values() {
        assert_eq!(jc_flux_oracle(&params(0.3, 0.0, 1.0, 0.2, 0.1)), 0.0);
        assert!(jc_flux_oracle(&params(0.3, 1.0, 1.0, PI, 0.1)).abs() < 1e-15);
        assert!((jc_flux_oracle(&params(1.0, 1.0, 1.0, FRAC_PI_2, 0.0)) - 0.4).abs() < 1e-15);
        let weak = jc_flux_oracle(&params(0.0, 0.01, 0.0, 0.0, 0.1));
        assert!((weak + 9.95e-4).abs() < 1e-6);
        assert!((weak / -1e-3 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn flux_oracle_sign_matches_spectral_and_semiclassical() {
        let opts = EngineOptions::default();
        for phi in [0.3, FRAC_PI_2, 2.0, -1.0] {
            let m = JcModel::new(params(0.4, 1.0, 0.8, phi, 0.05)).unwrap();
            let spectral = cumulants_spectral(&m, Counted::Drive(0), 1, &opts).unwrap().flux;
            let semi = semiclassical_flux(&m, 0, &opts).unwrap();
            let oracle = jc_flux_oracle(&m.params);
            assert!((spectral - oracle).abs() < 1e-9 * oracle.abs().max(1e-3), "{spectral} {oracle}");
            assert!((semi - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_oracles() {
        let p = params(0.0, 1.0, 1.0, FRAC_PI_2, 1e-3);
        assert!((jc_noise_oracle(&p, NoiseOracle::WeakGamma).unwrap() - 500.0).abs() < 1e-9);
        assert_eq!(jc_noise_oracle(&params(0.3, 1.0, 1.0, 0.0, 0.1), NoiseOracle::WeakGamma).unwrap(), 0.0);
        assert!(jc_noise_oracle(&params(0.3, 1.0, 1.0, PI, 0.1), NoiseOracle::WeakGamma).unwrap().abs() < 1e-25);
        assert!(jc_noise_oracle(&params(0.0, 1.0, 1.0, 0.0, 0.0), NoiseOracle::WeakGamma).is_err());
        assert!(jc_noise_oracle(&p, NoiseOracle::Exact).unwrap().is_finite());
    }

    #[test]
    fn quasienergies() {
        let (a, b) = jc_quasienergies(&params(0.6, 0.8, 0.0, 0.0, 0.0), [0.0, 0.0]);
        assert!((b - 0.5).abs() < 1e-15 && (a + 0.5).abs() < 1e-15);
        let (a, b) = jc_quasienergies(&params(0.0, 1.0, 1.0, PI, 0.0), [0.0, 0.0]);
        assert!(a.abs() < 1e-8 && b.abs() < 1e-8);
        let (d1, d2) = jc_quasienergy_derivatives(&params(0.0, 1.0, 1.0, FRAC_PI_2, 0.0), 0).unwrap();
        let want = 1.0 / (2.0 * 2f64.sqrt());
        assert!((d1 + want).abs() < 1e-15 && (d2 - want).abs() < 1e-15);
        let h = 1e-5;
        let p = params(0.0, 1.0, 1.0, FRAC_PI_2, 0.0);
        let fd = (jc_quasienergies(&p, [h, 0.0]).1 - jc_quasienergies(&p, [-h, 0.0]).1) / (2.0 * h);
        assert!((fd - d2).abs() < 1e-9);
    }

    #[test]
    fn closed_statistics() {
        let p = params(0.0, 1.0, 1.0, FRAC_PI_2, 0.0);
        let t = 7.0;
        let single = jc_closed_statistics(&p, [1.0, 0.0], 0, t).unwrap();
        assert!((single.mean - t / (2.0 * 2f64.sqrt())).abs() < 1e-14);
        assert_eq!(single.variance, Some(0.0));
        let other = jc_closed_statistics(&p, [0.0, 1.0], 0, t).unwrap();
        assert!((other.mean + single.mean).abs() < 1e-14);
        let bal = jc_closed_statistics(&p, [0.5, 0.5], 0, t).unwrap();
        assert!((bal.variance.unwrap() - t * t / 2.0).abs() < 1e-12);
        assert_eq!(jc_closed_statistics(&p, [0.3, 0.7], 0, t).unwrap().variance, None);
        assert!(jc_closed_statistics(&p, [0.3, 0.3], 0, t).is_err());
    }

    #[test]
    fn switching_heuristic() {
        assert_eq!(jc_floquet_switching_noise(&params(0.0, 1.0, 1.0, 0.0, 0.01)).unwrap(), 0.0);
        let g = 1e-3;
        let v = jc_floquet_switching_noise(&params(0.0, 1.0, 1.0, FRAC_PI_2, g)).unwrap();
        assert!((v - 0.25 / g).abs() < 1e-9);
        let slope = (jc_floquet_switching_noise(&params(0.0, 1.0, 1.0, 1.0, 1e-2)).unwrap()
            / jc_floquet_switching_noise(&params(0.0, 1.0, 1.0, 1.0, 1e-4)).unwrap())
        .log10()
            / 2.0;
        assert!((slope + 1.0).abs() < 1e-12);
        assert!(jc_floquet_switching_noise(&params(0.1, 1.0, 1.0, 1.0, 0.1)).is_err());
    }

    #[test]
    fn floquet_states_diagonalize_hamiltonian() {
        let p = params(0.3, 1.0, 0.6, 1.1, 0.0);
        let h = jc_hamiltonian(&p);
        for (e, v) in jc_floquet_states(&p) {
            assert!(max_abs(&(&h * &v - &v * C64::new(e, 0.0))) < 1e-14);
        }
        let flat = params(0.3, 0.0, 0.0, 0.0, 0.0);
        for (e, v) in jc_floquet_states(&flat) {
            assert!(max_abs(&(jc_hamiltonian(&flat) * &v - &v * C64::new(e, 0.0))) < 1e-14);
        }
    }

    #[test]
    fn hermitian_generator_at_zero_fields() {
        let p = params(0.3, 1.0, 0.6, 1.1, 0.2);
        let rho = GeneralizedDensityMatrix::pure(&jc_floquet_states(&p)[0].1).unwrap();
        let m = JcModel::new(p).unwrap();
        let out = crate::counting::evolve_generalized(&m, &m.zero_fields(), &rho, 3.0, &EngineOptions::default()).unwrap();
        assert!(out.is_hermitian(1e-12));
        assert!((out.trace() - 1.0).norm() < 1e-12);
    }
}
