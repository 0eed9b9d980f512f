//! Permutation-symmetric (Dicke) basis for `N` qudits with `d` levels.
//!
//! States that start permutation-symmetric and evolve under collective
//! operators never leave the symmetric subspace, whose dimension
//! `binomial(N + d - 1, d - 1)` is polynomial in `N` instead of the full
//! `d^N`. This module provides the basis enumeration, coherent (product)
//! states, inner products, the induced action of global single-qudit
//! unitaries, and the expansion back to the full tensor-product space used
//! as a brute-force oracle in tests.
//!
//! A basis state `|N, l>` is labeled by the occupations `l = (l_1, ...,
//! l_{d-1})` of levels `1..d`; the population of level `0` is fixed by
//! number conservation. Labels are ordered lexicographically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::comb::{binomial, ln_factorials, tuples_with_sum_at_most};
use crate::error::{Error, Result};

/// Norm tolerance for states produced by construction or unitary evolution.
pub const NORM_TOL: f64 = 1e-12;

/// Tolerance for accepting a matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// Default cap on the full tensor-product dimension `d^N` (3^10).
pub const DEFAULT_EXPAND_CAP: usize = 59049;

/// Particle number and level count of a qudit register.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemDims {
    n: usize,
    d: usize,
}

impl SystemDims {
    /// Requires `n >= 1` and `d >= 2`.
    pub fn new(n_particles: usize, n_levels: usize) -> Result<Self> {
        if n_particles < 1 || n_levels < 2 {
            return Err(Error::InvalidDims {
                n: n_particles,
                d: n_levels,
            });
        }
        Ok(Self {
            n: n_particles,
            d: n_levels,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn n_levels(&self) -> usize {
        self.d
    }

    /// Dimension of the symmetric subspace, `binomial(N + d - 1, d - 1)`.
    pub fn basis_size(&self) -> usize {
        binomial(self.n + self.d - 1, self.d - 1) as usize
    }

    /// Dimension of the full tensor-product space, `d^N`, if it fits `usize`.
    pub fn full_size(&self) -> Option<usize> {
        self.d.checked_pow(u32::try_from(self.n).ok()?)
    }
}

/// Occupations `(l_1, ..., l_{d-1})` of levels `1..d`; level `0` holds the
/// remaining `N - sum(l)` particles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DickeLabel(Vec<usize>);

impl DickeLabel {
    pub fn new(occupations: Vec<usize>, dims: SystemDims) -> Result<Self> {
        if occupations.len() != dims.d - 1 || occupations.iter().sum::<usize>() > dims.n {
            return Err(Error::InvalidLabel {
                label: occupations,
                n: dims.n,
                d: dims.d,
            });
        }
        Ok(Self(occupations))
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    /// Total occupation of the excited levels `1..d`.
    pub fn excited_total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Occupation of level `0`.
    pub fn level0(&self, dims: SystemDims) -> usize {
        dims.n - self.excited_total()
    }

    /// Full occupation vector `(n_0, l_1, ..., l_{d-1})`.
    pub fn full_occupations(&self, dims: SystemDims) -> Vec<usize> {
        let mut occ = Vec::with_capacity(dims.d);
        occ.push(self.level0(dims));
        occ.extend_from_slice(&self.0);
        occ
    }
}

/// A `d - 1` dimensional vector of phases, in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "phase vector entries must be finite".into(),
            ));
        }
        Ok(Self(phases))
    }

    /// All-zero phases for a `d`-level system.
    pub fn zero(d: usize) -> Self {
        Self(vec![0.0; d - 1])
    }

    pub fn phases(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Each phase reduced into `[0, 2*pi)`. Not applied automatically.
    pub fn canonicalized(&self) -> Self {
        use std::f64::consts::TAU;
        Self(self.0.iter().map(|p| p.rem_euclid(TAU)).collect())
    }

    /// Entrywise sum with another phase vector of the same length.
    pub fn shifted(&self, offsets: &[f64]) -> Self {
        debug_assert_eq!(offsets.len(), self.0.len());
        Self(
            self.0
                .iter()
                .zip(offsets)
                .map(|(p, o)| p + o)
                .collect(),
        )
    }
}

/// Enumerated symmetric basis for fixed dimensions, with label lookup.
///
/// Labels are stored in lexicographic order, so lookup is a binary search.
#[derive(Clone, Debug)]
pub struct DickeBasis {
    dims: SystemDims,
    labels: Vec<DickeLabel>,
}

impl DickeBasis {
    pub fn new(dims: SystemDims) -> Self {
        let labels = tuples_with_sum_at_most(dims.d - 1, dims.n)
            .into_iter()
            .map(DickeLabel)
            .collect::<Vec<_>>();
        debug_assert_eq!(labels.len(), dims.basis_size());
        Self { dims, labels }
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[DickeLabel] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &DickeLabel {
        &self.labels[index]
    }

    /// Index of a label, `O(log size)`.
    pub fn index_of(&self, label: &DickeLabel) -> Option<usize> {
        self.labels.binary_search(label).ok()
    }

    /// Index of the label with all `N` particles in `level`.
    pub fn extreme_index(&self, level: usize) -> usize {
        let mut occ = vec![0usize; self.dims.d - 1];
        if level > 0 {
            occ[level - 1] = self.dims.n;
        }
        self.index_of(&DickeLabel(occ))
            .expect("extreme label always present")
    }
}

/// Amplitude `C_{N,l}` of the equal-superposition product state on `|N, l>`:
/// `d^{-N/2} sqrt(N! / ((N - sum l)! prod l_a!))`.
///
/// Evaluated in log space so it neither overflows nor underflows for
/// N well beyond 100.
pub fn multinomial_amplitude(dims: SystemDims, label: &DickeLabel) -> Result<f64> {
    validate_label(dims, label)?;
    let lnf = ln_factorials(dims.n);
    Ok(multinomial_amplitude_ln(dims, label, &lnf))
}

fn multinomial_amplitude_ln(dims: SystemDims, label: &DickeLabel, lnf: &[f64]) -> f64 {
    let mut log_mult = lnf[dims.n] - lnf[label.level0(dims)];
    for &l in label.occupations() {
        log_mult -= lnf[l];
    }
    (0.5 * log_mult - 0.5 * dims.n as f64 * (dims.d as f64).ln()).exp()
}

fn validate_label(dims: SystemDims, label: &DickeLabel) -> Result<()> {
    if label.occupations().len() != dims.d - 1 || label.excited_total() > dims.n {
        return Err(Error::InvalidLabel {
            label: label.occupations().to_vec(),
            n: dims.n,
            d: dims.d,
        });
    }
    Ok(())
}

/// A pure state of the symmetric subspace: complex amplitudes over the
/// lexicographically ordered Dicke labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricState {
    dims: SystemDims,
    amplitudes: DVector<C64>,
}

impl SymmetricState {
    /// Wraps an amplitude vector, which must have the basis length and unit
    /// norm within 1e-9.
    pub fn from_amplitudes(dims: SystemDims, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dims.basis_size() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} amplitudes", dims.basis_size()),
                actual: format!("{}", amplitudes.len()),
            });
        }
        let v = DVector::from_vec(amplitudes);
        let deviation = (v.norm() - 1.0).abs();
        if deviation > 1e-9 {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self {
            dims,
            amplitudes: v,
        })
    }

    /// The basis state `|N, l>`.
    pub fn basis_state(dims: SystemDims, label: &DickeLabel) -> Result<Self> {
        validate_label(dims, label)?;
        let basis = DickeBasis::new(dims);
        let idx = basis.index_of(label).expect("validated label");
        let mut amplitudes = DVector::zeros(basis.len());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self { dims, amplitudes })
    }

    /// The product state `|0>^(x)N`.
    pub fn ground(dims: SystemDims) -> Self {
        let mut amplitudes = DVector::zeros(dims.basis_size());
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { dims, amplitudes }
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Amplitude at a specific label.
    pub fn amplitude(&self, basis: &DickeBasis, label: &DickeLabel) -> Option<C64> {
        basis.index_of(label).map(|i| self.amplitudes[i])
    }

    pub(crate) fn from_raw(dims: SystemDims, amplitudes: DVector<C64>) -> Self {
        Self { dims, amplitudes }
    }

    /// Rescales amplitudes by a phase-free positive factor to exact unit
    /// norm. Used after numerically noisy constructions in callers that
    /// need it; the library itself produces states normalized to `NORM_TOL`
    /// without this.
    pub fn renormalized(&self) -> Self {
        let n = self.amplitudes.norm();
        Self {
            dims: self.dims,
            amplitudes: self.amplitudes.map(|a| a / n),
        }
    }
}

/// The coherent product state with phase vector `phi`:
/// amplitude `C_{N,l} exp(i phi . l)` on each label `l`.
pub fn coherent_state(dims: SystemDims, phases: &PhaseVector) -> Result<SymmetricState> {
    if phases.len() != dims.d - 1 {
        return Err(Error::DimensionMismatch {
            expected: format!("{} phases", dims.d - 1),
            actual: format!("{}", phases.len()),
        });
    }
    let basis = DickeBasis::new(dims);
    let lnf = ln_factorials(dims.n);
    let amplitudes = DVector::from_iterator(
        basis.len(),
        basis.labels().iter().map(|label| {
            let mag = multinomial_amplitude_ln(dims, label, &lnf);
            let phase: f64 = label
                .occupations()
                .iter()
                .zip(phases.phases())
                .map(|(&l, &p)| l as f64 * p)
                .sum();
            C64::from_polar(mag, phase)
        }),
    );
    Ok(SymmetricState {
        dims,
        amplitudes,
    })
}

/// Inner product `<a|b>`.
pub fn overlap(a: &SymmetricState, b: &SymmetricState) -> Result<C64> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", a.dims),
            actual: format!("{:?}", b.dims),
        });
    }
    Ok(a.amplitudes.dotc(&b.amplitudes))
}

/// Squared-magnitude overlap, the usual global-phase-free comparison.
pub fn overlap_abs(a: &SymmetricState, b: &SymmetricState) -> Result<f64> {
    Ok(overlap(a, b)?.norm())
}

/// Expands to the full `d^N` tensor-product space with the default cap.
///
/// Index convention: particle 0 is the most significant base-`d` digit.
pub fn expand_to_full(state: &SymmetricState) -> Result<DVector<C64>> {
    expand_to_full_capped(state, DEFAULT_EXPAND_CAP)
}

/// Expands to the full space, refusing if `d^N` exceeds `cap`.
pub fn expand_to_full_capped(state: &SymmetricState, cap: usize) -> Result<DVector<C64>> {
    let dims = state.dims;
    let full = dims.full_size().filter(|&f| f <= cap).ok_or_else(|| {
        Error::ExpandCapExceeded {
            required: dims.full_size().unwrap_or(usize::MAX),
            cap,
        }
    })?;
    let basis = DickeBasis::new(dims);
    let lnf = ln_factorials(dims.n);
    // 1/sqrt(multiplicity) per label
    let weights: Vec<f64> = basis
        .labels()
        .iter()
        .map(|label| {
            let mut log_mult = lnf[dims.n] - lnf[label.level0(dims)];
            for &l in label.occupations() {
                log_mult -= lnf[l];
            }
            (-0.5 * log_mult).exp()
        })
        .collect();
    let mut out = DVector::zeros(full);
    let mut occ = vec![0usize; dims.d - 1];
    for b in 0..full {
        occ.iter_mut().for_each(|o| *o = 0);
        let mut rest = b;
        for _ in 0..dims.n {
            let digit = rest % dims.d;
            rest /= dims.d;
            if digit > 0 {
                occ[digit - 1] += 1;
            }
        }
        let label = DickeLabel(occ.clone());
        let idx = basis.index_of(&label).expect("occupation always valid");
        out[b] = state.amplitudes[idx] * weights[idx];
    }
    Ok(out)
}

/// Checks `u` is square of size `d` and unitary within `UNITARY_TOL`.
pub fn check_unitary(u: &DMatrix<C64>, d: usize) -> Result<()> {
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("{d}x{d} matrix"),
            actual: format!("{}x{}", u.nrows(), u.ncols()),
        });
    }
    let gram = u.adjoint() * u;
    let mut deviation = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            deviation = deviation.max((gram[(i, j)] - target).norm());
        }
    }
    if deviation > UNITARY_TOL {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(())
}

/// The matrix of `u^(x)N` restricted to the symmetric subspace, computed
/// natively from occupation combinatorics.
///
/// Matrix element between source occupations `n` and target occupations
/// `n'` is a sum over d-by-d nonnegative integer transfer matrices `k`
/// (row sums `n'`, column sums `n`):
/// `sqrt(prod n'! prod n!) / prod k! * prod u[a][c]^k[a][c]`.
/// The enumeration walks every transfer matrix with total `N` once, so the
/// cost is `binomial(N + d^2 - 1, d^2 - 1)` table visits.
pub fn induced_unitary(dims: SystemDims, u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_unitary(u, dims.d)?;
    Ok(induced_matrix_unchecked(dims, u))
}

/// Same construction without the unitarity check; also valid for arbitrary
/// (non-unitary) single-particle operators.
pub fn induced_matrix_unchecked(dims: SystemDims, u: &DMatrix<C64>) -> DMatrix<C64> {
    let d = dims.d;
    let basis = DickeBasis::new(dims);
    let lnf = ln_factorials(dims.n);
    let mut out = DMatrix::zeros(basis.len(), basis.len());
    crate::comb::for_each_composition(d * d, dims.n, |k| {
        // k is a d*d matrix in row-major order: k[a*d + c] transfers
        // k entries from source level c to target level a.
        let mut src = vec![0usize; d];
        let mut dst = vec![0usize; d];
        let mut log_w = 0.0f64;
        let mut term = C64::new(1.0, 0.0);
        for a in 0..d {
            for c in 0..d {
                let count = k[a * d + c];
                if count > 0 {
                    dst[a] += count;
                    src[c] += count;
                    log_w -= lnf[count];
                    term *= u[(a, c)].powu(count as u32);
                }
            }
        }
        if term == C64::new(0.0, 0.0) {
            return;
        }
        for lvl in 0..d {
            log_w += 0.5 * (lnf[src[lvl]] + lnf[dst[lvl]]);
        }
        let row = basis
            .index_of(&DickeLabel(dst[1..].to_vec()))
            .expect("row occupation valid");
        let col = basis
            .index_of(&DickeLabel(src[1..].to_vec()))
            .expect("col occupation valid");
        out[(row, col)] += term * log_w.exp();
    });
    out
}

/// Applies a global single-qudit unitary `u` to every particle,
/// staying in the symmetric basis.
pub fn apply_global_unitary(state: &SymmetricState, u: &DMatrix<C64>) -> Result<SymmetricState> {
    let m = induced_unitary(state.dims, u)?;
    Ok(SymmetricState {
        dims: state.dims,
        amplitudes: &m * &state.amplitudes,
    })
}

/// The unitary `d`-dimensional DFT matrix, `F[j][k] = exp(2 pi i j k / d) / sqrt(d)`.
/// Its column 0 is the equal superposition with zero phases.
pub fn dft_matrix(d: usize) -> DMatrix<C64> {
    use std::f64::consts::TAU;
    let scale = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |j, k| {
        C64::from_polar(scale, TAU * (j * k % d) as f64 / d as f64)
    })
}

mod json {
    //! JSON wire format: `{"n": N, "d": d, "amplitudes": [[re, im], ...]}`
    //! in lexicographic label order.

    use super::*;

    #[derive(Serialize, Deserialize)]
    struct StateRepr {
        n: usize,
        d: usize,
        amplitudes: Vec<[f64; 2]>,
    }

    impl Serialize for SymmetricState {
        fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
            StateRepr {
                n: self.dims.n,
                d: self.dims.d,
                amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
            }
            .serialize(serializer)
        }
    }

    impl<'de> Deserialize<'de> for SymmetricState {
        fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
            use serde::de::Error as DeError;
            let repr = StateRepr::deserialize(deserializer)?;
            let dims = SystemDims::new(repr.n, repr.d).map_err(DeError::custom)?;
            let amps = repr
                .amplitudes
                .into_iter()
                .map(|[re, im]| C64::new(re, im))
                .collect();
            SymmetricState::from_amplitudes(dims, amps).map_err(DeError::custom)
        }
    }
}
