//! ac-driven lambda system with levels `(a, b, c)` in the element basis.
//!
//! The rotating frame turns `|c>` at `omega_1` and `|b>` at `omega_1 - omega_p`,
//! leaving time dependence only at the modulation frequency `omega_d`. Both
//! decay channels `|a><b|` and `|a><c|` share one bath counting field.

use rayon::prelude::*;

use crate::bessel::bessel_j;
use crate::charpoly::{cumulants_charpoly, CharPolyOptions};
use crate::counting::{
    central_derivatives, cumulants_spectral, Counted, CountingFields, CountingModel, CumulantReport, EngineOptions,
    Generator, Method,
};
use crate::error::{invalid, Error, Result};
use crate::perturbation::{nhpt_eigenvalue_near, PerturbationSplit, SubspacePartition, TaggedLiouvillian};
use crate::superop::{commutator, dissipator, Basis, CMatrix, Superoperator, C64};

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

fn ket_bra(i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(3, 3);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn phase(x: f64) -> C64 {
    C64::new(0.0, x).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaParams {
    pub eps_a: f64,
    pub eps_b: f64,
    pub eps_c: f64,
    pub omega_p: f64,
    pub omega_1: f64,
    pub omega_d: f64,
    /// Resonance order, `omega_2 = omega_1 + r omega_d`.
    pub r: u32,
    pub omega_s: f64,
    pub omega_p0: f64,
    pub omega_p1: f64,
    pub gamma: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl LambdaParams {
    /// Resonantly pumped system with `eps_a = 0`, `eps_c - eps_b = omega_p` and detuning `omega_delta = eps_c - omega_1`.
    #[allow(clippy::too_many_arguments)]
    pub fn resonant(
        omega_delta: f64,
        omega_d: f64,
        r: u32,
        omega_s: f64,
        omega_p0: f64,
        omega_p1: f64,
        gamma: f64,
        phi1: f64,
        phi2: f64,
    ) -> Result<Self> {
        let p = Self {
            eps_a: 0.0,
            eps_b: 0.0,
            eps_c: 10.0,
            omega_p: 10.0,
            omega_1: 10.0 - omega_delta,
            omega_d,
            r,
            omega_s,
            omega_p0,
            omega_p1,
            gamma,
            phi1,
            phi2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.eps_a, self.eps_b, self.eps_c, self.omega_p, self.omega_1, self.omega_d, self.omega_s, self.omega_p0,
            self.omega_p1, self.gamma, self.phi1, self.phi2,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("LambdaParams"));
        }
        if self.gamma < 0.0 {
            return Err(invalid("gamma", "must be nonnegative"));
        }
        if self.omega_s < 0.0 {
            return Err(invalid("omega_s", "must be nonnegative"));
        }
        if !(self.omega_d > 0.0) {
            return Err(invalid("omega_d", "must be positive"));
        }
        if self.bessel_argument().abs() > crate::bessel::MAX_ARGUMENT {
            return Err(invalid("omega_p1", "omega_p1 / (2 omega_d) exceeds the Bessel range"));
        }
        Ok(())
    }

    pub fn eps_b_delta(&self) -> f64 {
        self.eps_b + self.omega_p - self.omega_1
    }

    pub fn eps_c_delta(&self) -> f64 {
        self.eps_c - self.omega_1
    }

    /// Signal detuning `eps_c - omega_1`.
    pub fn omega_delta(&self) -> f64 {
        self.eps_c_delta()
    }

    /// Moves `omega_1` so that `eps_c - omega_1` equals `w`.
    pub fn with_omega_delta(mut self, w: f64) -> Self {
        self.omega_1 = self.eps_c - w;
        self
    }

    pub fn bessel_argument(&self) -> f64 {
        self.omega_p1 / (2.0 * self.omega_d)
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_d
    }

    pub fn pump_mismatch(&self) -> f64 {
        self.eps_c - self.eps_b - self.omega_p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RwaAdvisory {
    pub passed: bool,
    /// `omega_s / gamma`.
    pub signal_ratio: f64,
    /// `max(gamma, omega_p0, |eps_delta|) / omega_d`.
    pub drive_ratio: f64,
    pub message: String,
}

pub fn rwa_advisory(p: &LambdaParams) -> RwaAdvisory {
    let signal_ratio = if p.gamma > 0.0 { p.omega_s / p.gamma } else if p.omega_s > 0.0 { f64::INFINITY } else { 0.0 };
    let slow = p.gamma.max(p.omega_p0.abs()).max(p.eps_b_delta().abs()).max(p.eps_c_delta().abs());
    let drive_ratio = slow / p.omega_d;
    let passed = signal_ratio <= 0.1 && drive_ratio <= 0.1;
    let message = if passed {
        "within the rotating-wave regime".to_string()
    } else {
        format!("outside the rotating-wave regime: omega_s/gamma = {signal_ratio:.3}, slow scale/omega_d = {drive_ratio:.3} (both should be <= 0.1)")
    };
    RwaAdvisory { passed, signal_ratio, drive_ratio, message }
}

/// Signal couplings `<b|H|a>` and `<c|H|a>` of the RWA Hamiltonian.
fn bare_couplings(p: &LambdaParams, chi: [f64; 2]) -> Result<(C64, C64)> {
    let x = p.bessel_argument();
    let j0 = bessel_j(0, x)?;
    let jr = bessel_j(p.r as usize, x)?;
    let one = phase(chi[0] - p.phi1) * (p.omega_s * j0);
    let two = phase(chi[1] - p.phi2) * (p.omega_s * jr);
    Ok(if p.r.is_multiple_of(2) { (C64::new(0.0, 0.0), one + two) } else { (two, one) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveCouplings {
    pub omega_b_chi: C64,
    pub omega_c_chi: C64,
    pub theta: f64,
    pub eps_tilde_b: f64,
    pub eps_tilde_c: f64,
}

impl EffectiveCouplings {
    /// Dressed states as columns in the `(a, b, c)` basis: `a`, lower, upper.
    pub fn rotation(&self) -> CMatrix {
        let (s, c) = (0.5 * self.theta).sin_cos();
        CMatrix::from_row_slice(3, 3, &[
            real(1.0), real(0.0), real(0.0),
            real(0.0), real(-s), real(c),
            real(0.0), real(c), real(s),
        ])
    }
}

pub fn effective_couplings(p: &LambdaParams, chi: [f64; 2]) -> Result<EffectiveCouplings> {
    p.validate()?;
    let j0d = bessel_j(0, 2.0 * p.bessel_argument())?;
    let mean = 0.5 * (p.eps_b_delta() + p.eps_c_delta());
    let delta = j0d * 0.5 * (p.eps_b_delta() - p.eps_c_delta());
    let theta = p.omega_p0.atan2(delta);
    let split = delta.hypot(p.omega_p0);
    let (gb, gc) = bare_couplings(p, chi)?;
    let (s, c) = (0.5 * theta).sin_cos();
    Ok(EffectiveCouplings {
        omega_b_chi: gb * (-s) + gc * c,
        omega_c_chi: gb * c + gc * s,
        theta,
        eps_tilde_b: mean - split,
        eps_tilde_c: mean + split,
    })
}

/// Time-independent Hamiltonian after the rotating-wave approximation.
pub fn rwa_hamiltonian(p: &LambdaParams, chi: [f64; 2]) -> Result<CMatrix> {
    Ok(rwa_bare(p)? + rwa_signal(p, chi)?)
}

fn rwa_bare(p: &LambdaParams) -> Result<CMatrix> {
    let j0d = bessel_j(0, 2.0 * p.bessel_argument())?;
    let (eb, ec) = (p.eps_b_delta(), p.eps_c_delta());
    let mean = 0.5 * (eb + ec);
    let half = j0d * 0.5 * (eb - ec);
    let mut h = ket_bra(A, A) * real(p.eps_a);
    h[(B, B)] = real(mean + half);
    h[(C, C)] = real(mean - half);
    h[(B, C)] = real(p.omega_p0);
    h[(C, B)] = real(p.omega_p0);
    Ok(h)
}

fn rwa_signal(p: &LambdaParams, chi: [f64; 2]) -> Result<CMatrix> {
    let (gb, gc) = bare_couplings(p, chi)?;
    let up = ket_bra(B, A) * gb + ket_bra(C, A) * gc;
    Ok(&up + up.adjoint())
}

/// Rotating-frame Hamiltonian at time `t` with drive fields `chi` on the ket side.
pub fn frame_hamiltonian(p: &LambdaParams, chi: [f64; 2], t: f64) -> CMatrix {
    let parts = FrameParts::new(p, chi);
    parts.hamiltonian(p, t)
}

struct FrameParts {
    fixed: CMatrix,
    pump: CMatrix,
    second: CMatrix,
}

impl FrameParts {
    fn new(p: &LambdaParams, chi: [f64; 2]) -> Self {
        let mut fixed = ket_bra(A, A) * real(p.eps_a) + ket_bra(B, B) * real(p.eps_b_delta()) + ket_bra(C, C) * real(p.eps_c_delta());
        let x = ket_bra(B, C) + ket_bra(C, B);
        fixed += &x * real(p.omega_p0);
        let first = ket_bra(C, A) * (phase(chi[0] - p.phi1) * p.omega_s);
        fixed += &first + first.adjoint();
        Self { fixed, pump: x * real(0.5 * p.omega_p1), second: ket_bra(C, A) * (phase(chi[1] - p.phi2) * p.omega_s) }
    }

    fn hamiltonian(&self, p: &LambdaParams, t: f64) -> CMatrix {
        let w = p.omega_d * t;
        let s = &self.second * phase(-(p.r as f64) * w);
        &self.fixed + &self.pump * real(w.cos()) + &s + s.adjoint()
    }
}

fn dissipators(gamma: f64, xi: f64) -> CMatrix {
    let w = phase(-xi);
    dissipator(&ket_bra(A, B), gamma, w) + dissipator(&ket_bra(A, C), gamma, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaFrame {
    RwaEffective,
    RotatingFramePeriodic,
}

/// Dressed generator in the requested frame. The RWA frame is refused
/// outside its regime unless `allow_outside_rwa` is set.
pub fn lambda_liouvillian(p: &LambdaParams, chi: [f64; 2], xi: f64, frame: LambdaFrame, allow_outside_rwa: bool) -> Result<Generator> {
    p.validate()?;
    match frame {
        LambdaFrame::RwaEffective => {
            let adv = rwa_advisory(p);
            if !adv.passed && !allow_outside_rwa {
                return Err(invalid("frame", adv.message));
            }
            let l = commutator(&rwa_hamiltonian(p, chi)?, &rwa_hamiltonian(p, [0.0, 0.0])?) + dissipators(p.gamma, xi);
            Ok(Generator::Static(Superoperator::new(l, Basis::Element, 3)?))
        }
        LambdaFrame::RotatingFramePeriodic => {
            let ket = FrameParts::new(p, chi);
            let bra = FrameParts::new(p, [0.0, 0.0]);
            let fixed = commutator(&ket.fixed, &bra.fixed) + dissipators(p.gamma, xi);
            let pump = commutator(&ket.pump, &bra.pump);
            let down = commutator(&ket.second, &bra.second);
            let up = commutator(&ket.second.adjoint(), &bra.second.adjoint());
            let (wd, r) = (p.omega_d, p.r as f64);
            let at = move |t: f64| -> CMatrix {
                let w = wd * t;
                &fixed + &pump * real(w.cos()) + &down * phase(-r * w) + &up * phase(r * w)
            };
            Ok(Generator::Periodic { period: p.period(), basis: Basis::Element, matter_dim: 3, at: Box::new(at) })
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LambdaModel {
    pub params: LambdaParams,
    pub frame: LambdaFrame,
    pub allow_outside_rwa: bool,
}

impl LambdaModel {
    pub fn new(params: LambdaParams, frame: LambdaFrame) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, frame, allow_outside_rwa: false })
    }
}

impl CountingModel for LambdaModel {
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
        lambda_liouvillian(&self.params, [fields.chi[0], fields.chi[1]], fields.xi[0], self.frame, self.allow_outside_rwa)
    }

    fn phase_derivative(&self, mode: usize, t: f64) -> CMatrix {
        let p = &self.params;
        let i = C64::i();
        let up = match self.frame {
            LambdaFrame::RotatingFramePeriodic => {
                let ph = if mode == 0 { p.phi1 } else { p.phi2 + p.r as f64 * p.omega_d * t };
                ket_bra(C, A) * (-i * phase(-ph) * p.omega_s)
            }
            LambdaFrame::RwaEffective => {
                let x = p.bessel_argument();
                let (j, ph, target) = if mode == 0 {
                    (bessel_j(0, x).unwrap_or(f64::NAN), p.phi1, C)
                } else {
                    (bessel_j(p.r as usize, x).unwrap_or(f64::NAN), p.phi2, if p.r.is_multiple_of(2) { C } else { B })
                };
                ket_bra(target, A) * (-i * phase(-ph) * (p.omega_s * j))
            }
        };
        &up + up.adjoint()
    }

    fn label(&self) -> String {
        match self.frame {
            LambdaFrame::RwaEffective => "lambda-rwa".into(),
            LambdaFrame::RotatingFramePeriodic => "lambda-periodic".into(),
        }
    }
}

fn dressed_hamiltonians(p: &LambdaParams, chi: [f64; 2]) -> Result<(CMatrix, CMatrix, CMatrix)> {
    let eff = effective_couplings(p, [0.0, 0.0])?;
    let u = eff.rotation();
    let rot = |h: CMatrix| u.adjoint() * h * &u;
    Ok((rot(rwa_bare(p)?), rot(rwa_signal(p, chi)?), rot(rwa_signal(p, [0.0, 0.0])?)))
}

/// RWA generator in the pump-dressed basis, signal terms tagged as first order.
pub fn lambda_tagged_rwa(p: &LambdaParams, chi: [f64; 2], xi: f64) -> Result<TaggedLiouvillian> {
    let (h0, s_chi, s_0) = dressed_hamiltonians(p, chi)?;
    Ok(TaggedLiouvillian::new().with(0, commutator(&h0, &h0) + dissipators(p.gamma, xi)).with(1, commutator(&s_chi, &s_0)))
}

/// Split into dressed energies plus dissipators and signal couplings.
pub fn lambda_split(p: &LambdaParams, chi: [f64; 2]) -> Result<PerturbationSplit> {
    let tagged = lambda_tagged_rwa(p, chi, 0.0)?;
    PerturbationSplit::new(tagged.terms[0].1.clone(), tagged.terms[1].1.clone(), p.omega_s)
}

/// Partition with `rho_aa` stationary and every other element transient.
pub fn lambda_partition() -> SubspacePartition {
    SubspacePartition::new(9, vec![0]).expect("static partition")
}

/// Closed-form second-order slow eigenvalue of the resonantly pumped RWA model.
pub fn lambda_lambda0_pt2(p: &LambdaParams, chi: [f64; 2]) -> Result<C64> {
    p.validate()?;
    let scale = 1.0 + p.eps_b.abs() + p.eps_c.abs() + p.omega_p.abs();
    if p.pump_mismatch().abs() > 1e-12 * scale {
        return Err(Error::Unsupported(format!(
            "pump detuning {:.3e}: the closed form assumes eps_c - eps_b = omega_p; use the numeric RWA or periodic route",
            p.pump_mismatch()
        )));
    }
    let at = effective_couplings(p, chi)?;
    let zero = effective_couplings(p, [0.0, 0.0])?;
    let g = real(p.gamma);
    let i = C64::i();
    let mut total = C64::new(0.0, 0.0);
    for (oc, o0, e) in [
        (at.omega_b_chi, zero.omega_b_chi, at.eps_tilde_b - p.eps_a),
        (at.omega_c_chi, zero.omega_c_chi, at.eps_tilde_c - p.eps_a),
    ] {
        total += oc * (o0.conj() - oc.conj()) / (i * e + g) + o0.conj() * (oc - o0) / (-i * e + g);
    }
    Ok(total)
}

/// Flux and noise of drive mode `mode` from the closed-form eigenvalue.
pub fn cumulants_pt2(p: &LambdaParams, mode: usize, order: usize, opts: &EngineOptions) -> Result<CumulantReport> {
    crate::counting::check_order(order)?;
    if mode > 1 {
        return Err(invalid("mode", "drive mode must be 0 or 1"));
    }
    let d = central_derivatives(
        |x| {
            let mut chi = [0.0, 0.0];
            chi[mode] = x;
            lambda_lambda0_pt2(p, chi)
        },
        opts.h,
    )?;
    Ok(CumulantReport::from_derivatives(Counted::Drive(mode), &d, order, Method::PerturbationTheory, opts.richardson_tol))
}

/// Cumulant rates of one ledger. Drive-mode ledgers support every method
/// except the analytic oracle; the bath ledger needs a numeric route.
pub fn lambda_cumulants(
    p: &LambdaParams,
    mode: Counted,
    order: usize,
    method: Method,
    opts: &EngineOptions,
    allow_outside_rwa: bool,
) -> Result<CumulantReport> {
    let rwa = || -> Result<LambdaModel> { Ok(LambdaModel { allow_outside_rwa, ..LambdaModel::new(*p, LambdaFrame::RwaEffective)? }) };
    match method {
        Method::PerturbationTheory => match mode {
            Counted::Drive(k) => cumulants_pt2(p, k, order, opts),
            _ => Err(Error::Unsupported("the closed-form eigenvalue carries no bath counting field".into())),
        },
        Method::PeriodicNumeric => {
            cumulants_spectral(&LambdaModel::new(*p, LambdaFrame::RotatingFramePeriodic)?, mode, order, opts)
        }
        Method::SpectralFD => cumulants_spectral(&rwa()?, mode, order, opts),
        Method::CharPoly => cumulants_charpoly(&rwa()?, mode, order, opts, &CharPolyOptions::default()),
        Method::AnalyticOracle => Err(Error::Unsupported("no closed-form oracle beyond second-order perturbation theory for the lambda system".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaSweep {
    /// `omega_delta = eps_c - omega_1`.
    Detuning,
    /// ac pump amplitude `omega_p1`.
    PumpAmplitude,
}

impl LambdaSweep {
    pub fn apply(self, p: &LambdaParams, v: f64) -> LambdaParams {
        match self {
            LambdaSweep::Detuning => p.with_omega_delta(v),
            LambdaSweep::PumpAmplitude => LambdaParams { omega_p1: v, ..*p },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    pub value: f64,
    /// Reports for drive modes 0 and 1, or the error that stopped the point.
    pub reports: std::result::Result<[CumulantReport; 2], String>,
}

/// Flux and noise of both signal modes over a sweep, evaluated in parallel and returned in grid order.
pub fn lambda_flux_scan(p: &LambdaParams, sweep: LambdaSweep, grid: &[f64], method: Method, opts: &EngineOptions) -> Result<Vec<ScanPoint>> {
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(invalid("grid", "values must be finite"));
    }
    Ok(grid
        .par_iter()
        .map(|&v| {
            let q = sweep.apply(p, v);
            let run = || -> Result<[CumulantReport; 2]> {
                Ok([
                    lambda_cumulants(&q, Counted::Drive(0), 2, method, opts, false)?,
                    lambda_cumulants(&q, Counted::Drive(1), 2, method, opts, false)?,
                ])
            };
            ScanPoint { value: v, reports: run().map_err(|e| e.to_string()) }
        })
        .collect())
}

/// `lambda_0` of the RWA model through the second-order Neumann elimination of everything except `rho_aa`.
pub fn lambda_lambda0_elimination(p: &LambdaParams, chi: [f64; 2]) -> Result<C64> {
    let tagged = lambda_tagged_rwa(p, chi, 0.0)?;
    let eff = crate::perturbation::adiabatic_eliminate(&tagged, &lambda_partition(), 2)?;
    Ok(eff.matrix[(0, 0)])
}

/// `lambda_0` of the programmatic split by second-order non-Hermitian perturbation theory.
pub fn lambda_lambda0_nhpt(p: &LambdaParams, chi: [f64; 2]) -> Result<C64> {
    nhpt_eigenvalue_near(&lambda_split(p, chi)?, C64::new(0.0, 0.0), 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_zero;
    use crate::counting::{semiclassical_flux, track_lambda0};
    use crate::superop::{max_abs, stationary_state, vectorize};
    use std::f64::consts::FRAC_PI_2;

    fn fig4(w: f64, r: u32, omega_s: f64) -> LambdaParams {
        LambdaParams::resonant(w, 40.0, r, omega_s, 1.0, 80.0, 0.2, FRAC_PI_2, 0.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(LambdaParams::resonant(0.0, 0.0, 1, 0.02, 1.0, 80.0, 0.2, 0.0, 0.0).is_err());
        assert!(LambdaParams::resonant(0.0, 40.0, 1, -0.02, 1.0, 80.0, 0.2, 0.0, 0.0).is_err());
        assert!(LambdaParams::resonant(0.0, 1.0, 1, 0.02, 1.0, 200.0, 0.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn no_signal_relaxes_to_a() {
        for frame in [LambdaFrame::RwaEffective, LambdaFrame::RotatingFramePeriodic] {
            let m = LambdaModel::new(fig4(0.5, 1, 0.0), frame).unwrap();
            let g = m.generator(&m.zero_fields()).unwrap().effective(&EngineOptions::default()).unwrap();
            let rho = stationary_state(&g).unwrap();
            assert!((rho.entries()[(0, 0)] - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn unmodulated_couplings_are_bare() {
        let p = LambdaParams { omega_p1: 0.0, ..fig4(0.3, 0, 0.05) };
        let (gb, gc) = bare_couplings(&p, [0.2, -0.1]).unwrap();
        assert_eq!(gb, C64::new(0.0, 0.0));
        let want = (phase(0.2 - p.phi1) + phase(-0.1 - p.phi2)) * 0.05;
        assert!((gc - want).norm() < 1e-15);
    }

    #[test]
    fn odd_order_loses_second_field_at_bessel_zero() {
        let z = bessel_zero(1, 1).unwrap();
        let p = LambdaParams { omega_p1: 2.0 * 40.0 * z, ..fig4(0.3, 1, 0.05) };
        let a = effective_couplings(&p, [0.0, 0.0]).unwrap();
        let b = effective_couplings(&p, [0.0, 1.3]).unwrap();
        assert!((a.omega_b_chi - b.omega_b_chi).norm() < 1e-14);
        assert!((a.omega_c_chi - b.omega_c_chi).norm() < 1e-14);
    }

    #[test]
    fn resonant_pump_mixing_angle() {
        let e = effective_couplings(&fig4(0.7, 1, 0.02), [0.0, 0.0]).unwrap();
        assert!((e.theta - FRAC_PI_2).abs() < 1e-15);
        assert!((e.eps_tilde_b - (0.7 - 1.0)).abs() < 1e-12);
        assert!((e.eps_tilde_c - (0.7 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dressed_basis_diagonalizes_pump() {
        let p = LambdaParams { eps_b: 0.4, ..fig4(0.7, 2, 0.02) };
        let e = effective_couplings(&p, [0.0, 0.0]).unwrap();
        let u = e.rotation();
        let h = u.adjoint() * rwa_bare(&p).unwrap() * &u;
        assert!(h[(1, 2)].norm() < 1e-13);
        assert!((h[(1, 1)].re - e.eps_tilde_b).abs() < 1e-13 && (h[(2, 2)].re - e.eps_tilde_c).abs() < 1e-13);
    }

    #[test]
    fn pt2_vanishes_at_zero_field() {
        assert_eq!(lambda_lambda0_pt2(&fig4(0.4, 1, 0.02), [0.0, 0.0]).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn pt2_refuses_detuned_pump() {
        let p = LambdaParams { eps_b: 0.5, ..fig4(0.4, 1, 0.02) };
        assert!(matches!(lambda_lambda0_pt2(&p, [0.1, 0.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn pt2_matches_perturbation_and_elimination() {
        for r in 0..3 {
            let p = fig4(0.4, r, 0.02);
            for chi in [[0.3, 0.0], [0.0, -0.7], [1.1, 2.0]] {
                let closed = lambda_lambda0_pt2(&p, chi).unwrap();
                let nh = lambda_lambda0_nhpt(&p, chi).unwrap();
                let ae = lambda_lambda0_elimination(&p, chi).unwrap();
                assert!((closed - nh).norm() < 1e-12, "{closed} {nh}");
                assert!((closed - ae).norm() < 1e-12, "{closed} {ae}");
            }
        }
    }

    #[test]
    fn pt2_approximates_rwa_eigenvalue() {
        let p = fig4(0.4, 1, 1e-3);
        let m = LambdaModel::new(p, LambdaFrame::RwaEffective).unwrap();
        let f = CountingFields::new(vec![0.2, -0.4], vec![0.0]).unwrap();
        let exact = track_lambda0(&m, &f, &EngineOptions::default()).unwrap();
        let pt = lambda_lambda0_pt2(&p, [0.2, -0.4]).unwrap();
        assert!((exact - pt).norm() < 1e-9, "{}", (exact - pt).norm());
    }

    #[test]
    fn periodic_frame_hamiltonian_is_periodic() {
        let p = fig4(0.4, 2, 0.02);
        let h0 = frame_hamiltonian(&p, [0.1, 0.2], 0.03);
        let h1 = frame_hamiltonian(&p, [0.1, 0.2], 0.03 + p.period());
        assert!(max_abs(&(h0 - h1)) < 1e-12);
    }

    #[test]
    fn rwa_advisory_regimes() {
        assert!(rwa_advisory(&fig4(3.0, 1, 0.02)).passed);
        assert!(!rwa_advisory(&fig4(3.0, 1, 0.5)).passed);
        let slow = LambdaParams::resonant(0.0, 5.0, 1, 0.02, 1.0, 10.0, 0.2, 0.0, 0.0).unwrap();
        assert!(!rwa_advisory(&slow).passed);
        assert!(lambda_liouvillian(&slow, [0.0, 0.0], 0.0, LambdaFrame::RwaEffective, false).is_err());
        assert!(lambda_liouvillian(&slow, [0.0, 0.0], 0.0, LambdaFrame::RwaEffective, true).is_ok());
    }

    #[test]
    fn zero_signal_gives_zero_flux() {
        let opts = EngineOptions::default();
        let p = fig4(0.5, 1, 0.0);
        for method in [Method::PerturbationTheory, Method::SpectralFD] {
            let r = lambda_cumulants(&p, Counted::Drive(1), 2, method, &opts, false).unwrap();
            assert_eq!(r.flux, 0.0);
            assert_eq!(r.noise, Some(0.0));
        }
    }

    #[test]
    fn semiclassical_flux_matches_rwa_spectral() {
        let opts = EngineOptions::default();
        let m = LambdaModel::new(fig4(0.5, 1, 0.02), LambdaFrame::RwaEffective).unwrap();
        for k in 0..2 {
            let a = semiclassical_flux(&m, k, &opts).unwrap();
            let b = cumulants_spectral(&m, Counted::Drive(k), 1, &opts).unwrap().flux;
            assert!((a - b).abs() < 1e-9 * b.abs(), "{a} {b}");
        }
    }

    #[test]
    fn rwa_zero_field_state_is_physical() {
        let m = LambdaModel::new(fig4(0.5, 1, 0.02), LambdaFrame::RwaEffective).unwrap();
        let Generator::Static(l) = m.generator(&m.zero_fields()).unwrap() else { panic!() };
        let rho = stationary_state(&l).unwrap();
        assert!(rho.is_hermitian(1e-12));
        let v = vectorize(&rho, Basis::Element).unwrap();
        assert!((v[0] + v[4] + v[8] - 1.0).norm() < 1e-12);
    }
}
