//! Dense superoperator algebra: vectorization, spectral decomposition,
//! propagation and one-period propagators.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Representation of a vectorized density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Column-stacked matrix elements, `v[i + d*j] = rho[i, j]`.
    Element,
    /// `(tr rho, tr rho sx, tr rho sy, tr rho sz)` for a two-level system.
    Pauli,
}

impl Basis {
    pub fn vector_dim(self, matter_dim: usize) -> usize {
        match self {
            Basis::Element => matter_dim * matter_dim,
            Basis::Pauli => 4,
        }
    }
}

pub fn pauli() -> [CMatrix; 4] {
    [
        CMatrix::identity(2, 2),
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// A d x d complex matrix; a density matrix at zero counting fields.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedDensityMatrix {
    entries: CMatrix,
}

impl GeneralizedDensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: entries.nrows().max(1), found: entries.ncols() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        Ok(Self { entries })
    }

    pub fn pure(state: &CVector) -> Result<Self> {
        let norm = state.norm();
        let psi = state / C64::from(norm);
        Self::new(&psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs(&(&self.entries - self.entries.adjoint())) <= tol
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (op * &self.entries).trace()
    }
}

pub fn vectorize(rho: &GeneralizedDensityMatrix, basis: Basis) -> Result<CVector> {
    let d = rho.dim();
    match basis {
        Basis::Element => Ok(CVector::from_iterator(d * d, rho.entries.iter().copied())),
        Basis::Pauli => {
            if d != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: d });
            }
            let s = pauli();
            Ok(CVector::from_iterator(4, s.iter().map(|p| (&rho.entries * p).trace())))
        }
    }
}

pub fn devectorize(v: &CVector, basis: Basis) -> Result<GeneralizedDensityMatrix> {
    match basis {
        Basis::Element => {
            let d = (v.len() as f64).sqrt().round() as usize;
            if d * d != v.len() {
                return Err(Error::DimensionMismatch { expected: d * d, found: v.len() });
            }
            GeneralizedDensityMatrix::new(CMatrix::from_column_slice(d, d, v.as_slice()))
        }
        Basis::Pauli => {
            if v.len() != 4 {
                return Err(Error::DimensionMismatch { expected: 4, found: v.len() });
            }
            let s = pauli();
            let mut m = CMatrix::zeros(2, 2);
            for (k, p) in s.iter().enumerate() {
                m += p * (v[k] * 0.5);
            }
            GeneralizedDensityMatrix::new(m)
        }
    }
}

/// Row functional returning the trace of a vectorized matrix.
pub fn trace_functional(basis: Basis, matter_dim: usize) -> CVector {
    match basis {
        Basis::Element => {
            let mut t = CVector::zeros(matter_dim * matter_dim);
            for i in 0..matter_dim {
                t[i + matter_dim * i] = ONE;
            }
            t
        }
        Basis::Pauli => {
            let mut t = CVector::zeros(4);
            t[0] = ONE;
            t
        }
    }
}

/// Superoperator of `rho -> -i (h_ket rho - rho h_bra)` in the element basis.
pub fn commutator(h_ket: &CMatrix, h_bra: &CMatrix) -> CMatrix {
    let d = h_ket.nrows();
    let id = CMatrix::identity(d, d);
    id.kronecker(h_ket) * (-I) + h_bra.transpose().kronecker(&id) * I
}

/// Element-basis superoperator of `rate * (2 w L rho L^+ - {L^+ L, rho})`,
/// where `w` is the counting weight of a jump.
pub fn dissipator(l: &CMatrix, rate: f64, weight: C64) -> CMatrix {
    let d = l.nrows();
    let id = CMatrix::identity(d, d);
    let ldl = l.adjoint() * l;
    let jump = l.conjugate().kronecker(l) * (weight * 2.0);
    (jump - id.kronecker(&ldl) - ldl.transpose().kronecker(&id)) * C64::from(rate)
}

/// Dense generator acting on vectorized generalized density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    matrix: CMatrix,
    basis: Basis,
    matter_dim: usize,
}

impl Superoperator {
    pub fn new(matrix: CMatrix, basis: Basis, matter_dim: usize) -> Result<Self> {
        let dim = basis.vector_dim(matter_dim);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("superoperator"));
        }
        Ok(Self { matrix, basis, matter_dim })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matter_dim(&self) -> usize {
        self.matter_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest violation of trace conservation, relative to the largest entry.
    pub fn trace_defect(&self) -> f64 {
        let t = trace_functional(self.basis, self.matter_dim);
        let scale = max_abs(&self.matrix);
        if scale == 0.0 {
            return 0.0;
        }
        max_abs(&(t.transpose() * &self.matrix)) / scale
    }
}

/// Largest entry modulus.
pub fn max_abs<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, C>>(m: &nalgebra::Matrix<C64, R, C, S>) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    /// Maximum accepted condition number of the right-eigenvector matrix.
    pub defect_threshold: f64,
    /// Relative separation below which eigenvalues are flagged as degenerate.
    pub degeneracy_tol: f64,
    /// Relative magnitude below which an eigenvalue counts as stationary.
    pub stationarity_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { defect_threshold: 1e12, degeneracy_tol: 1e-9, stationarity_tol: 1e-10 }
    }
}

/// Biorthonormal eigen-decomposition `A = sum_mu lambda_mu |u_mu><u~_mu|`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as columns.
    pub right: CMatrix,
    /// Left eigenvectors as rows.
    pub left: CMatrix,
    pub condition: f64,
    pub norm: f64,
    /// Index pairs closer than `degeneracy_tol * norm`.
    pub near_degenerate: Vec<(usize, usize)>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let diag = CMatrix::from_diagonal(&CVector::from_vec(self.eigenvalues.clone()));
        &self.right * diag * &self.left
    }

    pub fn is_degenerate(&self, mu: usize) -> bool {
        self.near_degenerate.iter().any(|&(a, b)| a == mu || b == mu)
    }

    /// Index of the eigenvalue closest to `z`.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        for (k, l) in self.eigenvalues.iter().enumerate() {
            if (l - z).norm() < (self.eigenvalues[best] - z).norm() {
                best = k;
            }
        }
        best
    }

    /// `exp(A t) v`.
    pub fn apply_exp(&self, v: &CVector, t: f64) -> CVector {
        let coeff = &self.left * v;
        let mut out = CVector::zeros(v.len());
        for (k, l) in self.eigenvalues.iter().enumerate() {
            let c = coeff[k] * (l * t).exp();
            if c != ZERO {
                out += self.right.column(k) * c;
            }
        }
        out
    }
}

fn sort_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

fn schur(a: &CMatrix) -> (CMatrix, CMatrix) {
    Schur::new(a.clone()).unpack()
}

/// Eigenvalues only, unsorted.
pub fn eigenvalues(a: &CMatrix) -> Vec<C64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let (_, t) = schur(a);
    t.diagonal().iter().copied().collect()
}

/// Right eigenvectors of an upper-triangular Schur factor by back substitution.
fn triangular_eigenvectors(t: &CMatrix, norm: f64) -> CMatrix {
    let n = t.nrows();
    let small = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut x = CMatrix::zeros(n, n);
    for k in 0..n {
        let lk = t[(k, k)];
        x[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in (i + 1)..=k {
                s += t[(i, j)] * x[(j, k)];
            }
            let d = t[(i, i)] - lk;
            x[(i, k)] = if d.norm() > 10.0 * small {
                -s / d
            } else if s.norm() <= 100.0 * small * max_abs(&x.column(k)).max(1.0) {
                ZERO
            } else {
                -s / C64::from(small)
            };
        }
        let nk = x.column(k).norm();
        x.column_mut(k).scale_mut(1.0 / nk);
    }
    x
}

pub fn spectral_decompose(a: &Superoperator) -> Result<SpectralDecomposition> {
    spectral_decompose_matrix(a.matrix(), &SpectralOptions::default())
}

pub fn spectral_decompose_matrix(a: &CMatrix, opts: &SpectralOptions) -> Result<SpectralDecomposition> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let norm = spectral_norm(a);
    if norm == 0.0 {
        return Ok(SpectralDecomposition {
            eigenvalues: vec![ZERO; n],
            right: CMatrix::identity(n, n),
            left: CMatrix::identity(n, n),
            condition: 1.0,
            norm,
            near_degenerate: degenerate_pairs(&vec![ZERO; n], 0.0),
        });
    }
    let (q, t) = schur(a);
    let x = triangular_eigenvectors(&t, norm);
    let v = q * x;
    let sv = v.clone().singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > opts.defect_threshold {
        return Err(Error::Defective { condition, threshold: opts.defect_threshold });
    }
    let vinv = v.clone().try_inverse().ok_or(Error::Defective { condition: f64::INFINITY, threshold: opts.defect_threshold })?;
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<C64> = t.diagonal().iter().copied().collect();
    order.sort_by(|&i, &j| sort_key(&diag[i], &diag[j]));
    let eigenvalues: Vec<C64> = order.iter().map(|&k| diag[k]).collect();
    let mut right = CMatrix::zeros(n, n);
    let mut left = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &v.column(src));
        let row = vinv.row(src);
        let overlap = (row * v.column(src))[(0, 0)];
        left.set_row(dst, &(row / overlap));
    }
    let near_degenerate = degenerate_pairs(&eigenvalues, opts.degeneracy_tol * norm);
    Ok(SpectralDecomposition { eigenvalues, right, left, condition, norm, near_degenerate })
}

fn degenerate_pairs(ev: &[C64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..ev.len() {
        for j in (i + 1)..ev.len() {
            if (ev[i] - ev[j]).norm() <= tol {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn stationary_state(a: &Superoperator) -> Result<GeneralizedDensityMatrix> {
    stationary_state_with(a, &SpectralOptions::default())
}

pub fn stationary_state_with(a: &Superoperator, opts: &SpectralOptions) -> Result<GeneralizedDensityMatrix> {
    let sd = spectral_decompose_matrix(a.matrix(), opts)?;
    let tol = opts.stationarity_tol * sd.norm;
    let idx: Vec<usize> = (0..sd.eigenvalues.len()).filter(|&k| sd.eigenvalues[k].norm() <= tol).collect();
    match idx.len() {
        0 => Err(Error::NoStationaryState { tolerance: tol }),
        1 => {
            let v: CVector = sd.right.column(idx[0]).into();
            let tr = (trace_functional(a.basis(), a.matter_dim()).transpose() * &v)[(0, 0)];
            devectorize(&(v / tr), a.basis())
        }
        _ => Err(Error::DegenerateStationary { eigenvalues: idx.iter().map(|&k| sd.eigenvalues[k]).collect() }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagationRoute {
    Spectral,
    Series,
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub state: GeneralizedDensityMatrix,
    pub route: PropagationRoute,
    /// Set when the spectral route was requested but the decomposition was rejected.
    pub fell_back: bool,
}

pub fn propagate(a: &Superoperator, rho0: &GeneralizedDensityMatrix, t: f64) -> Result<Propagation> {
    propagate_via(a, rho0, t, PropagationRoute::Spectral)
}

pub fn propagate_via(a: &Superoperator, rho0: &GeneralizedDensityMatrix, t: f64, route: PropagationRoute) -> Result<Propagation> {
    if !(t >= 0.0) {
        return Err(crate::error::invalid("t", "must be nonnegative"));
    }
    let v = vectorize(rho0, a.basis())?;
    let (out, route, fell_back) = propagate_vector(a.matrix(), &v, t, route);
    Ok(Propagation { state: devectorize(&out, a.basis())?, route, fell_back })
}

/// `exp(A t) v` by the requested route, falling back to the series route
/// when the spectral decomposition is rejected.
pub fn propagate_vector(a: &CMatrix, v: &CVector, t: f64, route: PropagationRoute) -> (CVector, PropagationRoute, bool) {
    if t == 0.0 {
        return (v.clone(), route, false);
    }
    if route == PropagationRoute::Spectral {
        if let Ok(sd) = spectral_decompose_matrix(a, &SpectralOptions { defect_threshold: 1e8, ..Default::default() }) {
            return (sd.apply_exp(v, t), PropagationRoute::Spectral, false);
        }
        return ((a * C64::from(t)).exp() * v, PropagationRoute::Series, true);
    }
    ((a * C64::from(t)).exp() * v, PropagationRoute::Series, false)
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions {
    pub steps: usize,
    /// Maximum relative change of the monodromy matrix under step doubling.
    pub doubling_tol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { steps: 512, doubling_tol: 1e-8 }
    }
}

/// Monodromy matrix of a periodic generator with its step-doubling check.
#[derive(Clone, Debug)]
pub struct Monodromy {
    pub propagator: Superoperator,
    pub period: f64,
    pub steps: usize,
    /// Relative change between `steps` and `2 * steps`.
    pub doubling_change: f64,
}

/// Integrates `dU/dt = L(t) U` over `[t0, t1]` with fixed-step RK4.
pub fn rk4_propagator<F: Fn(f64) -> CMatrix>(l: &F, dim: usize, t0: f64, t1: f64, steps: usize) -> CMatrix {
    let mut u = CMatrix::identity(dim, dim);
    if steps == 0 || t1 == t0 {
        return u;
    }
    let dt = (t1 - t0) / steps as f64;
    let hdt = C64::from(0.5 * dt);
    let fdt = C64::from(dt);
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        let la = l(t);
        let lm = l(t + 0.5 * dt);
        let lb = l(t + dt);
        let k1 = &la * &u;
        let k2 = &lm * (&u + &k1 * hdt);
        let k3 = &lm * (&u + &k2 * hdt);
        let k4 = &lb * (&u + &k3 * fdt);
        u += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(dt / 6.0);
    }
    u
}

pub fn one_period_propagator<F: Fn(f64) -> CMatrix>(
    l: F,
    basis: Basis,
    matter_dim: usize,
    period: f64,
    opts: &IntegratorOptions,
) -> Result<Monodromy> {
    if opts.steps < 64 {
        return Err(crate::error::invalid("steps", "must be at least 64"));
    }
    if !(period > 0.0) {
        return Err(crate::error::invalid("period", "must be positive"));
    }
    let dim = basis.vector_dim(matter_dim);
    let coarse = rk4_propagator(&l, dim, 0.0, period, opts.steps);
    let fine = rk4_propagator(&l, dim, 0.0, period, 2 * opts.steps);
    let change = max_abs(&(&fine - &coarse)) / max_abs(&fine).max(f64::MIN_POSITIVE);
    if !(change <= opts.doubling_tol) {
        return Err(Error::StepDoubling { change, coarse: opts.steps, fine: 2 * opts.steps });
    }
    Ok(Monodromy { propagator: Superoperator::new(fine, basis, matter_dim)?, period, steps: 2 * opts.steps, doubling_change: change })
}

#[derive(Clone, Debug)]
pub struct EffectiveLiouvillian {
    pub generator: Superoperator,
    pub eigenvalues: Vec<C64>,
    /// Indices (into `eigenvalues`) lying within 1e-6 of the logarithm's branch cut.
    pub near_branch_cut: Vec<usize>,
}

/// Principal-branch logarithm of each Floquet multiplier divided by the period.
pub fn floquet_exponents(multipliers: &[C64], period: f64) -> (Vec<C64>, Vec<usize>) {
    let mut flagged = Vec::new();
    let ex: Vec<C64> = multipliers
        .iter()
        .enumerate()
        .map(|(k, w)| {
            if std::f64::consts::PI - w.arg().abs() < 1e-6 {
                flagged.push(k);
            }
            w.ln() / period
        })
        .collect();
    (ex, flagged)
}

pub fn effective_liouvillian(u: &Superoperator, period: f64) -> Result<EffectiveLiouvillian> {
    let sd = spectral_decompose_matrix(u.matrix(), &SpectralOptions::default())?;
    let (logs, flagged) = floquet_exponents(&sd.eigenvalues, period);
    let g = &sd.right * CMatrix::from_diagonal(&CVector::from_vec(logs.clone())) * &sd.left;
    let mut order: Vec<usize> = (0..logs.len()).collect();
    order.sort_by(|&i, &j| sort_key(&logs[i], &logs[j]));
    let eigenvalues = order.iter().map(|&k| logs[k]).collect();
    let near_branch_cut = order.iter().enumerate().filter(|(_, k)| flagged.contains(k)).map(|(i, _)| i).collect();
    Ok(EffectiveLiouvillian { generator: Superoperator::new(g, u.basis(), u.matter_dim())?, eigenvalues, near_branch_cut })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn decay(gamma: f64) -> Superoperator {
        let m = CMatrix::from_row_slice(
            4,
            4,
            &[
                c(0.0), c(0.0), c(0.0), c(0.0),
                c(0.0), c(-2.0 * gamma), c(0.0), c(0.0),
                c(0.0), c(0.0), c(-2.0 * gamma), c(0.0),
                c(-4.0 * gamma), c(0.0), c(0.0), c(-4.0 * gamma),
            ],
        );
        Superoperator::new(m, Basis::Pauli, 2).unwrap()
    }

    #[test]
    fn half_identity_is_unit_trace_vector() {
        let rho = GeneralizedDensityMatrix::new(CMatrix::identity(2, 2) * c(0.5)).unwrap();
        let v = vectorize(&rho, Basis::Pauli).unwrap();
        assert!((v[0] - ONE).norm() < 1e-15);
        assert!(v.iter().skip(1).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn zero_matrix_vectorizes_to_zero() {
        let rho = GeneralizedDensityMatrix::new(CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(max_abs(&vectorize(&rho, Basis::Element).unwrap()), 0.0);
    }

    #[test]
    fn pauli_basis_rejects_qutrit() {
        let rho = GeneralizedDensityMatrix::new(CMatrix::identity(3, 3)).unwrap();
        assert!(matches!(vectorize(&rho, Basis::Pauli), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn element_round_trip() {
        let m = CMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let h = &m + m.adjoint();
        let rho = GeneralizedDensityMatrix::new(h).unwrap();
        let back = devectorize(&vectorize(&rho, Basis::Element).unwrap(), Basis::Element).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn commutator_matches_direct_action() {
        let h = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64 + 1.0, i as f64 - j as f64));
        let rho = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64 * 0.5));
        let direct = (&h * &rho - &rho * &h) * (-I);
        let v = CVector::from_column_slice(rho.as_slice());
        let out = commutator(&h, &h) * v;
        assert!(max_abs(&(CMatrix::from_column_slice(3, 3, out.as_slice()) - direct)) < 1e-12);
    }

    #[test]
    fn diagonal_spectrum() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(-2.0), c(0.0), c(-3.0), c(-1.0)]));
        let sd = spectral_decompose_matrix(&m, &SpectralOptions::default()).unwrap();
        let ev: Vec<f64> = sd.eigenvalues.iter().map(|z| z.re).collect();
        assert_eq!(ev, vec![0.0, -1.0, -2.0, -3.0]);
        for (k, src) in [1usize, 3, 0, 2].into_iter().enumerate() {
            assert!((sd.right[(src, k)].norm() - 1.0).abs() < 1e-15);
            assert!((sd.right.column(k).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(spectral_decompose_matrix(&m, &SpectralOptions::default()), Err(Error::Defective { .. })));
    }

    #[test]
    fn decay_relaxes_to_ground_state() {
        let rho = stationary_state(&decay(0.3)).unwrap();
        let v = vectorize(&rho, Basis::Pauli).unwrap();
        assert!((v[3] + ONE).norm() < 1e-12);
    }

    #[test]
    fn decay_population_solution() {
        let gamma = 0.25;
        let a = decay(gamma);
        let up = GeneralizedDensityMatrix::new(CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])).unwrap();
        for route in [PropagationRoute::Spectral, PropagationRoute::Series] {
            let t = 1.0 / (4.0 * gamma);
            let out = propagate_via(&a, &up, t, route).unwrap();
            let z = vectorize(&out.state, Basis::Pauli).unwrap()[3].re;
            assert!((z - (-1.0 + 2.0 * (-4.0 * gamma * t).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let rho = GeneralizedDensityMatrix::new(CMatrix::identity(2, 2) * c(0.5)).unwrap();
        assert_eq!(propagate(&decay(1.0), &rho, 0.0).unwrap().state, rho);
    }

    #[test]
    fn constant_generator_monodromy() {
        let a = decay(0.7);
        let m = a.matrix().clone();
        let mono = one_period_propagator(|_| m.clone(), Basis::Pauli, 2, 0.5, &IntegratorOptions::default()).unwrap();
        let exact = (a.matrix() * c(0.5)).exp();
        assert!(max_abs(&(mono.propagator.matrix() - &exact)) < 1e-12);
        let eff = effective_liouvillian(&mono.propagator, 0.5).unwrap();
        assert!(max_abs(&(eff.generator.matrix() - a.matrix())) < 1e-8);
        assert!(eff.near_branch_cut.is_empty());
    }

    #[test]
    fn zero_generator_monodromy_is_identity() {
        let mono = one_period_propagator(|_| CMatrix::zeros(4, 4), Basis::Pauli, 2, 1.0, &IntegratorOptions::default()).unwrap();
        assert_eq!(mono.propagator.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn too_few_steps_rejected() {
        let opts = IntegratorOptions { steps: 32, ..Default::default() };
        assert!(one_period_propagator(|_| CMatrix::zeros(4, 4), Basis::Pauli, 2, 1.0, &opts).is_err());
    }

    #[test]
    fn branch_cut_flagged() {
        let (_, flagged) = floquet_exponents(&[C64::new(-1.0, 1e-9), ONE], 1.0);
        assert_eq!(flagged, vec![0]);
    }
}
