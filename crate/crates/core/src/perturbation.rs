//! Non-Hermitian eigenvalue perturbation theory and adiabatic elimination.

use crate::error::{invalid, Error, Result};
use crate::superop::{max_abs, spectral_decompose_matrix, spectral_norm, CMatrix, SpectralDecomposition, SpectralOptions, C64};

/// `L = L0 + L1`, with the perturbation strength folded into `L1`.
#[derive(Clone, Debug)]
pub struct PerturbationSplit {
    pub l0: CMatrix,
    pub l1: CMatrix,
    pub g: f64,
}

impl PerturbationSplit {
    pub fn new(l0: CMatrix, l1: CMatrix, g: f64) -> Result<Self> {
        if l0.shape() != l1.shape() || l0.nrows() != l0.ncols() {
            return Err(Error::DimensionMismatch { expected: l0.nrows(), found: l1.nrows() });
        }
        Ok(Self { l0, l1, g })
    }

    /// Split of `full` with the given unperturbed part; the remainder becomes `L1`.
    pub fn from_full(full: &CMatrix, l0: CMatrix, g: f64) -> Result<Self> {
        let l1 = full - &l0;
        Self::new(l0, l1, g)
    }

    pub fn full(&self) -> CMatrix {
        &self.l0 + &self.l1
    }
}

/// Corrections to one eigenvalue of `L0` from biorthonormal left/right vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenvalueSeries {
    pub zeroth: C64,
    pub first: C64,
    pub second: C64,
}

impl EigenvalueSeries {
    pub fn up_to(&self, order: usize) -> C64 {
        match order {
            0 => self.zeroth,
            1 => self.zeroth + self.first,
            _ => self.zeroth + self.first + self.second,
        }
    }
}

pub fn eigenvalue_series(split: &PerturbationSplit, target: usize, opts: &SpectralOptions) -> Result<EigenvalueSeries> {
    let sd = spectral_decompose_matrix(&split.l0, opts)?;
    series_from(&sd, &split.l1, target, opts)
}

fn series_from(sd: &SpectralDecomposition, l1: &CMatrix, target: usize, opts: &SpectralOptions) -> Result<EigenvalueSeries> {
    let n = sd.eigenvalues.len();
    if target >= n {
        return Err(invalid("target", format!("index {target} out of range")));
    }
    let lm = sd.eigenvalues[target];
    let l1v = l1 * sd.right.column(target);
    let ul1 = sd.left.row(target) * l1;
    let first = (sd.left.row(target) * &l1v)[(0, 0)];
    let mut second = C64::new(0.0, 0.0);
    for k in (0..n).filter(|&k| k != target) {
        let gap = lm - sd.eigenvalues[k];
        let a = (sd.left.row(k) * &l1v)[(0, 0)];
        let b = (&ul1 * sd.right.column(k))[(0, 0)];
        if (a * b).norm() == 0.0 {
            continue;
        }
        if gap.norm() <= opts.degeneracy_tol * sd.norm {
            return Err(Error::NearDegenerate { separation: gap.norm() });
        }
        second += a * b / gap;
    }
    Ok(EigenvalueSeries { zeroth: lm, first, second })
}

/// Eigenvalue of `L0 + L1` continuing the `target`-th eigenvalue of `L0`
/// (ordered by descending real part), to first or second order.
pub fn nhpt_eigenvalue(split: &PerturbationSplit, target: usize, order: usize) -> Result<C64> {
    if !(1..=2).contains(&order) {
        return Err(Error::Unsupported(format!("perturbation order {order}")));
    }
    Ok(eigenvalue_series(split, target, &SpectralOptions::default())?.up_to(order))
}

/// Same as `nhpt_eigenvalue`, targeting the eigenvalue of `L0` nearest `z`.
pub fn nhpt_eigenvalue_near(split: &PerturbationSplit, z: C64, order: usize) -> Result<C64> {
    let sd = spectral_decompose_matrix(&split.l0, &SpectralOptions::default())?;
    let target = sd.nearest(z);
    if !(1..=2).contains(&order) {
        return Err(Error::Unsupported(format!("perturbation order {order}")));
    }
    Ok(series_from(&sd, &split.l1, target, &SpectralOptions::default())?.up_to(order))
}

/// Stationary (s) and transient (t) index sets over the vectorized basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspacePartition {
    pub stationary: Vec<usize>,
    pub transient: Vec<usize>,
}

impl SubspacePartition {
    pub fn new(dim: usize, stationary: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in &stationary {
            if i >= dim {
                return Err(invalid("stationary", format!("index {i} outside dimension {dim}")));
            }
            if seen[i] {
                return Err(invalid("stationary", format!("index {i} listed twice")));
            }
            seen[i] = true;
        }
        let transient = (0..dim).filter(|&i| !seen[i]).collect();
        Ok(Self { stationary, transient })
    }

    pub fn dim(&self) -> usize {
        self.stationary.len() + self.transient.len()
    }

    /// True when the weight of `v` sits on the stationary indices to `tol`.
    pub fn holds(&self, v: &crate::superop::CVector, tol: f64) -> bool {
        self.transient.iter().all(|&i| v[i].norm() <= tol)
            && (self.stationary.iter().map(|&i| v[i]).sum::<C64>() - 1.0).norm() <= tol
    }

    fn block(&self, m: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    }
}

/// Liouvillian assembled as `sum_n L_n` where `L_n` carries order `n` in the perturbative scale.
#[derive(Clone, Debug, Default)]
pub struct TaggedLiouvillian {
    pub terms: Vec<(usize, CMatrix)>,
}

impl TaggedLiouvillian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, order: usize, term: CMatrix) {
        self.terms.push((order, term));
    }

    pub fn with(mut self, order: usize, term: CMatrix) -> Self {
        self.push(order, term);
        self
    }

    pub fn dim(&self) -> usize {
        self.terms.first().map_or(0, |(_, m)| m.nrows())
    }

    pub fn total(&self) -> CMatrix {
        let d = self.dim();
        self.terms.iter().fold(CMatrix::zeros(d, d), |acc, (_, m)| acc + m)
    }

    fn order_sum(&self, order: usize) -> CMatrix {
        let d = self.dim();
        self.terms.iter().filter(|(n, _)| *n == order).fold(CMatrix::zeros(d, d), |acc, (_, m)| acc + m)
    }
}

/// Effective generator on the stationary subspace.
#[derive(Clone, Debug)]
pub struct EliminatedGenerator {
    pub matrix: CMatrix,
    pub stationary: Vec<usize>,
    pub order: Option<usize>,
}

fn series_product(a: &[CMatrix], b: &[CMatrix], order: usize) -> Vec<CMatrix> {
    (0..=order)
        .map(|k| {
            let mut acc = CMatrix::zeros(a[0].nrows(), b[0].ncols());
            for i in 0..=k {
                acc += &a[i] * &b[k - i];
            }
            acc
        })
        .collect()
}

fn invert_block(tt: &CMatrix) -> Result<CMatrix> {
    let sv = tt.clone().svd(false, false).singular_values;
    let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if !(smallest > 1e-13 * largest.max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularBlock { smallest });
    }
    tt.clone().lu().try_inverse().ok_or(Error::SingularBlock { smallest })
}

/// `L_ss - L_st L_tt^{-1} L_ts`, expanded in the tagged scale and truncated at `order`.
pub fn adiabatic_eliminate(l: &TaggedLiouvillian, partition: &SubspacePartition, order: usize) -> Result<EliminatedGenerator> {
    if partition.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: partition.dim() });
    }
    let (s, t) = (&partition.stationary, &partition.transient);
    let parts: Vec<CMatrix> = (0..=order).map(|k| l.order_sum(k)).collect();
    let ss: Vec<CMatrix> = parts.iter().map(|m| partition.block(m, s, s)).collect();
    let st: Vec<CMatrix> = parts.iter().map(|m| partition.block(m, s, t)).collect();
    let ts: Vec<CMatrix> = parts.iter().map(|m| partition.block(m, t, s)).collect();
    let tt: Vec<CMatrix> = parts.iter().map(|m| partition.block(m, t, t)).collect();
    if t.is_empty() {
        let matrix = ss.iter().fold(CMatrix::zeros(s.len(), s.len()), |acc, m| acc + m);
        return Ok(EliminatedGenerator { matrix, stationary: s.clone(), order: Some(order) });
    }
    let t0inv = invert_block(&tt[0])?;
    let mut inv = vec![t0inv.clone()];
    for k in 1..=order {
        let mut acc = CMatrix::zeros(t.len(), t.len());
        for j in 1..=k {
            acc += &tt[j] * &inv[k - j];
        }
        inv.push(-(&t0inv * acc));
    }
    let p = series_product(&series_product(&st, &inv, order), &ts, order);
    let mut matrix = CMatrix::zeros(s.len(), s.len());
    for k in 0..=order {
        matrix += &ss[k] - &p[k];
    }
    Ok(EliminatedGenerator { matrix, stationary: s.clone(), order: Some(order) })
}

/// Untruncated Schur complement `L_ss - L_st L_tt^{-1} L_ts`.
pub fn schur_complement(l: &CMatrix, partition: &SubspacePartition) -> Result<EliminatedGenerator> {
    let (s, t) = (&partition.stationary, &partition.transient);
    let ss = partition.block(l, s, s);
    if t.is_empty() {
        return Ok(EliminatedGenerator { matrix: ss, stationary: s.clone(), order: None });
    }
    let inv = invert_block(&partition.block(l, t, t))?;
    let matrix = ss - partition.block(l, s, t) * inv * partition.block(l, t, s);
    Ok(EliminatedGenerator { matrix, stationary: s.clone(), order: None })
}

/// Relative size of the largest entry of `a - b`.
pub fn relative_difference(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b)) / spectral_norm(a).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superop::{dissipator, commutator, eigenvalues};
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn hermitian_rayleigh_schrodinger() {
        let l0 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0), c(1.0), c(3.0)]));
        let v = 0.01;
        let mut l1 = CMatrix::zeros(3, 3);
        l1[(0, 1)] = c(v);
        l1[(1, 0)] = c(v);
        l1[(0, 2)] = c(2.0 * v);
        l1[(2, 0)] = c(2.0 * v);
        l1[(0, 0)] = c(0.5 * v);
        let split = PerturbationSplit::new(l0, l1, v).unwrap();
        let got = nhpt_eigenvalue_near(&split, c(0.0), 2).unwrap();
        let want = 0.5 * v + v * v / (0.0 - 1.0) + 4.0 * v * v / (0.0 - 3.0);
        assert!((got - c(want)).norm() < 1e-15);
        let first = nhpt_eigenvalue_near(&split, c(0.0), 1).unwrap();
        assert!((first - c(0.5 * v)).norm() < 1e-15);
    }

    fn random_split(seed: u64, g: f64) -> PerturbationSplit {
        let mut s = seed;
        let l0 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0), C64::new(-1.0, 0.5), C64::new(-2.0, -1.0), c(-3.5)]));
        let l1 = CMatrix::from_fn(4, 4, |_, _| C64::new(lcg(&mut s), lcg(&mut s)) * g);
        PerturbationSplit::new(l0, l1, g).unwrap()
    }

    fn exact_near(m: &CMatrix, z: C64) -> C64 {
        let ev = eigenvalues(m);
        *ev.iter().min_by(|a, b| (*a - z).norm().partial_cmp(&(*b - z).norm()).unwrap()).unwrap()
    }

    #[test]
    fn random_diagonal_error_is_cubic() {
        let g = 1e-3;
        let split = random_split(7, g);
        let exact = exact_near(&split.full(), c(0.0));
        let pt = nhpt_eigenvalue_near(&split, c(0.0), 2).unwrap();
        assert!((exact - pt).norm() <= 10.0 * g.powi(3) * spectral_norm(&split.l0));
    }

    #[test]
    fn order_scaling_slope() {
        let gs: Vec<f64> = (0..5).map(|k| 1e-4 * 10f64.powf(0.5 * k as f64)).collect();
        let errs: Vec<f64> = gs
            .iter()
            .map(|&g| {
                let split = random_split(11, g);
                (exact_near(&split.full(), c(0.0)) - nhpt_eigenvalue_near(&split, c(0.0), 2).unwrap()).norm()
            })
            .collect();
        let slope = (errs[4].ln() - errs[0].ln()) / (gs[4].ln() - gs[0].ln());
        assert!((slope - 3.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn degenerate_target_refused() {
        let l0 = CMatrix::zeros(2, 2);
        let l1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1e-3), c(1e-3), c(0.0)]);
        let split = PerturbationSplit::new(l0, l1, 1e-3).unwrap();
        assert!(matches!(nhpt_eigenvalue(&split, 0, 2), Err(Error::NearDegenerate { .. })));
    }

    #[test]
    fn block_diagonal_unchanged() {
        let mut l = CMatrix::zeros(3, 3);
        l[(0, 0)] = c(-0.5);
        l[(1, 1)] = c(-1.0);
        l[(2, 2)] = c(-2.0);
        l[(1, 2)] = c(0.3);
        let tagged = TaggedLiouvillian::new().with(0, l.clone());
        let part = SubspacePartition::new(3, vec![0]).unwrap();
        let e = adiabatic_eliminate(&tagged, &part, 2).unwrap();
        assert_eq!(e.matrix[(0, 0)], c(-0.5));
    }

    #[test]
    fn singular_block_reported() {
        let tagged = TaggedLiouvillian::new().with(0, CMatrix::zeros(2, 2));
        let part = SubspacePartition::new(2, vec![0]).unwrap();
        assert!(matches!(adiabatic_eliminate(&tagged, &part, 1), Err(Error::SingularBlock { .. })));
    }

    #[test]
    fn partition_validation() {
        assert!(SubspacePartition::new(3, vec![3]).is_err());
        assert!(SubspacePartition::new(3, vec![1, 1]).is_err());
        let p = SubspacePartition::new(4, vec![2]).unwrap();
        assert_eq!(p.transient, vec![0, 1, 3]);
    }

    /// Driven two-level system with counted emission; states (g, e), element basis.
    fn two_level(omega: f64, delta: f64, gamma: f64, xi: f64) -> (CMatrix, CMatrix) {
        let mut h0 = CMatrix::zeros(2, 2);
        h0[(1, 1)] = c(delta);
        let mut h1 = CMatrix::zeros(2, 2);
        h1[(0, 1)] = c(omega);
        h1[(1, 0)] = c(omega);
        let mut lower = CMatrix::zeros(2, 2);
        lower[(0, 1)] = c(1.0);
        let l0 = commutator(&h0, &h0) + dissipator(&lower, gamma, C64::new(0.0, -xi).exp());
        (l0, commutator(&h1, &h1))
    }

    #[test]
    fn two_level_elimination_is_fourth_order_accurate() {
        let (delta, gamma, xi) = (0.3, 0.5, 0.7);
        let errs: Vec<f64> = [1e-3, 1e-2]
            .iter()
            .map(|&om| {
                let (l0, l1) = two_level(om, delta, gamma, xi);
                let tagged = TaggedLiouvillian::new().with(0, l0.clone()).with(1, l1.clone());
                let part = SubspacePartition::new(4, vec![0]).unwrap();
                let eff = adiabatic_eliminate(&tagged, &part, 2).unwrap().matrix[(0, 0)];
                let exact = exact_near(&(l0 + l1), c(0.0));
                let rate = 2.0 * gamma * om * om / (gamma * gamma + delta * delta);
                let closed = (C64::new(0.0, -xi).exp() - 1.0) * rate;
                assert!((eff - closed).norm() < 1e-14);
                (eff - exact).norm()
            })
            .collect();
        let slope = (errs[1] / errs[0]).log10();
        assert!((slope - 4.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn elimination_agrees_with_second_order_perturbation() {
        let (l0, l1) = two_level(1e-2, 0.3, 0.5, 0.7);
        let tagged = TaggedLiouvillian::new().with(0, l0.clone()).with(1, l1.clone());
        let eff = adiabatic_eliminate(&tagged, &SubspacePartition::new(4, vec![0]).unwrap(), 2).unwrap().matrix[(0, 0)];
        let pt = nhpt_eigenvalue_near(&PerturbationSplit::new(l0, l1, 1e-2).unwrap(), c(0.0), 2).unwrap();
        assert!((eff - pt).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn split_reassembles(seed in 0u64..1000, g in 1e-4f64..1e-1) {
            let s = random_split(seed, g);
            let full = s.full();
            let again = PerturbationSplit::from_full(&full, s.l0.clone(), g).unwrap();
            prop_assert!(max_abs(&(again.full() - &full)) <= 1e-12);
            prop_assert!(max_abs(&(again.l1 - &s.l1)) <= 1e-12);
        }

        #[test]
        fn full_order_matches_schur(seed in 0u64..500) {
            let s = random_split(seed, 0.05);
            let tagged = TaggedLiouvillian::new().with(0, s.l0.clone()).with(1, s.l1.clone());
            let part = SubspacePartition::new(4, vec![0, 2]).unwrap();
            let trunc = adiabatic_eliminate(&tagged, &part, 12).unwrap().matrix;
            let exact = schur_complement(&s.full(), &part).unwrap().matrix;
            prop_assert!(max_abs(&(trunc - exact)) < 1e-12);
        }
    }
}
