//! Multipartite entanglement certification for GHZ-type states.
//!
//! Exceeding fidelity `(d-1)/d` with the `d`-dimensional GHZ state rules
//! out entanglement of dimension below `d` in every bipartition. When only
//! the populations and coherence *magnitudes* of the GHZ sub-block are
//! known, the fidelity (maximized over the free GHZ phases) can still be
//! bracketed: the upper bound sets all coherence phases favorable; the
//! lower bound constrains the one residual unknown phase `theta` with the
//! positive-semidefiniteness requirement `cos theta >= s`, where `s`
//! follows from the sign of the characteristic cubic's constant term.
//!
//! Pure-state entanglement structure is measured by the Schmidt vector:
//! the Schmidt rank of every one of the `2^(N-1) - 1` bipartitions. The
//! rank-restricted fidelity maximizer provides a numerical soundness check
//! that no state of lower Schmidt rank across any bipartition beats the
//! `(d-1)/d` threshold.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dicke::{DickeBasis, SystemDims};
use crate::error::{Error, Result};
use crate::mqc::{CoherenceMagnitudes, SymmetricDensity};

/// Coherence magnitudes below this are treated as absent when forming the
/// positivity parameter.
const DEGENERATE_TOL: f64 = 1e-12;

/// `s` values beyond `1 +` this margin mean no PSD completion exists.
const S_DIAGNOSTIC_TOL: f64 = 1e-9;

/// Populations and coherence magnitudes of the 3x3 GHZ sub-block, with
/// optional phases when fully known.
///
/// `magnitudes = [|rho_01|, |rho_02|, |rho_12|]` and, when present,
/// `phases = [theta_1, theta_2, theta_3]` are the arguments of
/// `rho_01, rho_02, rho_12`.
#[derive(Clone, Debug, PartialEq)]
pub struct GhzBlock {
    populations: [f64; 3],
    magnitudes: [f64; 3],
    phases: Option<[f64; 3]>,
}

fn pair_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (1, 2) => 2,
        _ => unreachable!("level pair out of range"),
    }
}

impl GhzBlock {
    pub fn new(populations: [f64; 3], magnitudes: [f64; 3]) -> Result<Self> {
        Self::build(populations, magnitudes, None)
    }

    pub fn with_phases(
        populations: [f64; 3],
        magnitudes: [f64; 3],
        phases: [f64; 3],
    ) -> Result<Self> {
        Self::build(populations, magnitudes, Some(phases))
    }

    fn build(
        populations: [f64; 3],
        magnitudes: [f64; 3],
        phases: Option<[f64; 3]>,
    ) -> Result<Self> {
        for v in populations.iter().chain(magnitudes.iter()) {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "block entries must be nonnegative reals, got {v}"
                )));
            }
        }
        let total: f64 = populations.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "populations sum to {total} > 1"
            )));
        }
        for i in 0..3 {
            for j in i + 1..3 {
                let limit = (populations[i] * populations[j]).sqrt();
                let magnitude = magnitudes[pair_index(i, j)];
                if magnitude > limit + 1e-12 {
                    return Err(Error::CauchySchwarzViolation {
                        i,
                        j,
                        magnitude,
                        limit,
                    });
                }
            }
        }
        Ok(Self {
            populations,
            magnitudes,
            phases,
        })
    }

    /// Phase-free block from population readout plus the echo-protocol
    /// magnitudes.
    pub fn from_measurements(populations: [f64; 3], magnitudes: &CoherenceMagnitudes) -> Result<Self> {
        Self::new(populations, magnitudes.as_array())
    }

    pub fn populations(&self) -> [f64; 3] {
        self.populations
    }

    pub fn magnitudes(&self) -> [f64; 3] {
        self.magnitudes
    }

    pub fn phases(&self) -> Option<[f64; 3]> {
        self.phases
    }

    /// The full 3x3 complex block; requires phases.
    pub fn to_matrix(&self) -> Option<DMatrix<C64>> {
        let phases = self.phases?;
        let mut m = DMatrix::zeros(3, 3);
        for i in 0..3 {
            m[(i, i)] = C64::new(self.populations[i], 0.0);
        }
        for (idx, (i, j)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
            let entry = C64::from_polar(self.magnitudes[idx], phases[idx]);
            m[(i, j)] = entry;
            m[(j, i)] = entry.conj();
        }
        Some(m)
    }
}

mod block_json {
    //! Block wire format:
    //! `{"populations": [..], "magnitudes": [..], "phases": [..]?}`.

    use super::*;

    #[derive(Serialize, Deserialize)]
    struct BlockRepr {
        populations: [f64; 3],
        magnitudes: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phases: Option<[f64; 3]>,
    }

    impl Serialize for GhzBlock {
        fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
            BlockRepr {
                populations: self.populations,
                magnitudes: self.magnitudes,
                phases: self.phases,
            }
            .serialize(serializer)
        }
    }

    impl<'de> Deserialize<'de> for GhzBlock {
        fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
            use serde::de::Error as DeError;
            let repr = BlockRepr::deserialize(deserializer)?;
            GhzBlock::build(repr.populations, repr.magnitudes, repr.phases).map_err(DeError::custom)
        }
    }
}

/// Extracts the GHZ sub-block of a qutrit density matrix: the entries
/// among the labels `(0,0)`, `(N,0)`, `(0,N)`, i.e. `|a>^(x)N`.
pub fn ghz_block(rho: &SymmetricDensity) -> Result<GhzBlock> {
    if rho.dims().n_levels() != 3 {
        return Err(Error::UnsupportedDimension {
            expected: 3,
            actual: rho.dims().n_levels(),
        });
    }
    let basis = DickeBasis::new(rho.dims());
    let idx = [
        basis.extreme_index(0),
        basis.extreme_index(1),
        basis.extreme_index(2),
    ];
    let m = rho.matrix();
    let populations = [
        m[(idx[0], idx[0])].re,
        m[(idx[1], idx[1])].re,
        m[(idx[2], idx[2])].re,
    ];
    let entries = [
        m[(idx[0], idx[1])],
        m[(idx[0], idx[2])],
        m[(idx[1], idx[2])],
    ];
    GhzBlock::with_phases(
        populations,
        [entries[0].norm(), entries[1].norm(), entries[2].norm()],
        [entries[0].arg(), entries[1].arg(), entries[2].arg()],
    )
}

/// Fidelity bracket computed from a phase-free block.
///
/// `relabeling[new] = old` records the level permutation applied so that
/// the coherence magnitudes satisfy `|rho_01| >= |rho_02| >= |rho_12|`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct FidelityBounds {
    pub lower: f64,
    pub upper: f64,
    pub s: f64,
    pub relabeling: [usize; 3],
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Upper and lower bounds on the best fidelity against the GHZ family.
///
/// After relabeling, `upper` sets every coherence phase favorable while
/// `lower` replaces the smallest coherence term with `|rho_12| s`, the
/// worst value its phase can take on a positive semidefinite completion.
/// `s > 1` (beyond numerical tolerance) means the magnitudes cannot come
/// from any physical state and is reported as an error.
pub fn fidelity_bounds(block: &GhzBlock) -> Result<FidelityBounds> {
    let relabeling = *PERMUTATIONS
        .iter()
        .find(|perm| {
            let m = relabeled_magnitudes(block, perm);
            m[0] >= m[1] && m[1] >= m[2]
        })
        .expect("some permutation sorts three magnitudes");
    let mags = relabeled_magnitudes(block, &relabeling);
    let pops = [
        block.populations[relabeling[0]],
        block.populations[relabeling[1]],
        block.populations[relabeling[2]],
    ];
    let (m01, m02, m12) = (mags[0], mags[1], mags[2]);
    let pop_sum = pops[0] + pops[1] + pops[2];

    let s = if m12 < DEGENERATE_TOL {
        // theta term absent; bounds differ by the (negligible) m12 term
        0.0
    } else if m01 * m02 < DEGENERATE_TOL {
        // positivity argument needs all three coherences; use worst case
        -1.0
    } else {
        let numerator =
            m12 * m12 * pops[0] + m01 * m01 * pops[2] + m02 * m02 * pops[1] - pops[0] * pops[1] * pops[2];
        let raw = numerator / (2.0 * m01 * m02 * m12);
        if raw > 1.0 + S_DIAGNOSTIC_TOL {
            return Err(Error::NotPsdCompletable { s: raw });
        }
        if (raw - 1.0).abs() <= DEGENERATE_TOL {
            // snap exact-GHZ rounding residue so the bounds coincide exactly
            1.0
        } else {
            raw.clamp(-1.0, 1.0)
        }
    };

    let upper = (pop_sum + 2.0 * (m01 + m02 + m12)) / 3.0;
    let lower = (pop_sum + 2.0 * (m01 + m02 + m12 * s)) / 3.0;
    Ok(FidelityBounds {
        lower,
        upper,
        s,
        relabeling,
    })
}

fn relabeled_magnitudes(block: &GhzBlock, perm: &[usize; 3]) -> [f64; 3] {
    [
        block.magnitudes[pair_index(perm[0], perm[1])],
        block.magnitudes[pair_index(perm[0], perm[2])],
        block.magnitudes[pair_index(perm[1], perm[2])],
    ]
}

/// Smallest `cos theta` admitting a PSD completion of the block, found by
/// an eigenvalue scan over the residual phase. Reported for comparison
/// with the closed-form `s`; `None` if no phase is feasible.
pub fn feasible_cos_theta_min(block: &GhzBlock, grid: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for k in 0..=grid {
        let theta = std::f64::consts::PI * k as f64 / grid as f64;
        let mut m = DMatrix::<C64>::zeros(3, 3);
        for i in 0..3 {
            m[(i, i)] = C64::new(block.populations[i], 0.0);
        }
        // phases theta_1 = theta_2 = 0 lose no generality: the spectrum
        // depends on the phases only through theta_1 + theta_3 - theta_2
        let entries = [
            C64::new(block.magnitudes[0], 0.0),
            C64::new(block.magnitudes[1], 0.0),
            C64::from_polar(block.magnitudes[2], theta),
        ];
        for (idx, (i, j)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
            m[(i, j)] = entries[idx];
            m[(j, i)] = entries[idx].conj();
        }
        let min_eig = m
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig >= -1e-12 {
            let c = theta.cos();
            best = Some(best.map_or(c, |b: f64| b.min(c)));
        }
    }
    best
}

/// Certification verdict against the `(d-1)/d` threshold.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub d: usize,
    pub threshold: f64,
    pub lower: f64,
    pub upper: f64,
    pub s: f64,
    pub certified: bool,
    pub margin: f64,
    pub relabeling: [usize; 3],
}

/// Certified iff the fidelity lower bound exceeds `(d-1)/d`, which rules
/// out entanglement of dimension below `d` in every bipartition.
pub fn certify(bounds: &FidelityBounds, d: usize) -> Verdict {
    let threshold = (d as f64 - 1.0) / d as f64;
    Verdict {
        d,
        threshold,
        lower: bounds.lower,
        upper: bounds.upper,
        s: bounds.s,
        certified: bounds.lower > threshold,
        margin: bounds.lower - threshold,
        relabeling: bounds.relabeling,
    }
}

/// Schmidt ranks of all `2^(N-1) - 1` bipartitions of a pure state.
///
/// Bipartition `k` (1-based index into `ranks`) is the particle subset
/// with bitmask `k` over particles `0..N-1`, which never contains particle
/// `N - 1`; every bipartition is visited exactly once.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchmidtVector {
    pub ranks: Vec<usize>,
}

impl SchmidtVector {
    /// The particle subset defining bipartition `index` (0-based).
    pub fn bipartition_subset(index: usize, n_particles: usize) -> Vec<usize> {
        let mask = index + 1;
        (0..n_particles - 1).filter(|j| mask >> j & 1 == 1).collect()
    }

    pub fn all_equal_to(&self, value: usize) -> bool {
        self.ranks.iter().all(|&r| r == value)
    }
}

/// Computes the Schmidt vector of a full-space pure state by reshaping
/// across each bipartition and counting singular values above
/// `tol * sigma_max`.
pub fn schmidt_vector(
    full_state: &DVector<C64>,
    dims: SystemDims,
    tol: f64,
) -> Result<SchmidtVector> {
    let n = dims.n_particles();
    let d = dims.n_levels();
    let full = dims.full_size().ok_or(Error::ExpandCapExceeded {
        required: usize::MAX,
        cap: usize::MAX,
    })?;
    if full_state.len() != full {
        return Err(Error::DimensionMismatch {
            expected: format!("{full} amplitudes"),
            actual: format!("{}", full_state.len()),
        });
    }
    let n_bipartitions = (1usize << (n - 1)) - 1;
    let mut ranks = Vec::with_capacity(n_bipartitions);
    // digit strides, particle 0 most significant
    let strides: Vec<usize> = (0..n).map(|j| d.pow((n - 1 - j) as u32)).collect();
    for mask in 1..=n_bipartitions {
        let side_a: Vec<usize> = (0..n - 1).filter(|j| mask >> j & 1 == 1).collect();
        let side_b: Vec<usize> = (0..n).filter(|j| !side_a.contains(j)).collect();
        let dim_a = d.pow(side_a.len() as u32);
        let dim_b = d.pow(side_b.len() as u32);
        let mut m = DMatrix::<C64>::zeros(dim_a, dim_b);
        for (b, &amp) in full_state.iter().enumerate() {
            let mut row = 0usize;
            for &j in &side_a {
                row = row * d + (b / strides[j]) % d;
            }
            let mut col = 0usize;
            for &j in &side_b {
                col = col * d + (b / strides[j]) % d;
            }
            m[(row, col)] = amp;
        }
        let singular = m.singular_values();
        let sigma_max = singular.iter().cloned().fold(0.0f64, f64::max);
        let rank = singular.iter().filter(|&&s| s > tol * sigma_max).count();
        ranks.push(rank);
    }
    Ok(SchmidtVector { ranks })
}

/// Default relative tolerance for Schmidt rank counting.
pub const SCHMIDT_TOL: f64 = 1e-8;

/// The full-space generalized GHZ state `(1/sqrt d) sum_a |a>^(x)N`.
pub fn ghz_full_state(dims: SystemDims) -> Result<DVector<C64>> {
    let full = dims.full_size().ok_or(Error::ExpandCapExceeded {
        required: usize::MAX,
        cap: usize::MAX,
    })?;
    let d = dims.n_levels();
    let n = dims.n_particles();
    let mut v = DVector::zeros(full);
    let weight = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for level in 0..d {
        // index of |level level ... level>
        let mut idx = 0usize;
        for _ in 0..n {
            idx = idx * d + level;
        }
        v[idx] = weight;
    }
    Ok(v)
}

fn orthonormalize_columns(m: &mut DMatrix<C64>) -> bool {
    let cols = m.ncols();
    for c in 0..cols {
        for _ in 0..2 {
            for prev in 0..c {
                let proj = m.column(prev).dotc(&m.column(c));
                let prev_col = m.column(prev).clone_owned();
                let mut col = m.column_mut(c);
                col.axpy(-proj, &prev_col, C64::new(1.0, 0.0));
            }
        }
        let norm = m.column(c).norm();
        if norm < 1e-12 {
            return false;
        }
        m.column_mut(c).scale_mut(1.0 / norm);
    }
    true
}

/// Best fidelity with the GHZ state attainable by a pure state of Schmidt
/// rank at most `rank` across the single-particle bipartition, found by
/// subspace iteration with random restarts.
///
/// For `rank = d - 1` the result approaches `(d-1)/d` from below; an
/// unrestricted `rank = d` recovers 1.
pub fn max_fidelity_rank_limited(
    dims: SystemDims,
    rank: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if rank < 1 {
        return Err(Error::InvalidParameter("rank must be >= 1".into()));
    }
    let d = dims.n_levels();
    let n = dims.n_particles();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 particles for a bipartition".into(),
        ));
    }
    let psi = ghz_full_state(dims)?;
    // reshape across A = {particle 0}: M[a][rest]
    let dim_b = d.pow((n - 1) as u32);
    let m = DMatrix::from_fn(d, dim_b, |a, rest| psi[a * dim_b + rest]);
    let rank = rank.min(d.min(dim_b));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..trials {
        let mut b = DMatrix::from_fn(dim_b, rank, |_, _| {
            C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
        });
        if !orthonormalize_columns(&mut b) {
            continue;
        }
        let mut value = 0.0f64;
        for _ in 0..500 {
            let mb = &m * &b; // d x rank
            let new_value = mb.norm_squared();
            let mut next = m.adjoint() * mb; // dim_b x rank
            if !orthonormalize_columns(&mut next) {
                break;
            }
            b = next;
            if (new_value - value).abs() < 1e-14 {
                value = new_value;
                break;
            }
            value = new_value;
        }
        best = best.max(value);
    }
    Ok(best)
}

/// Appendix-style soundness run: maximization restricted to Schmidt rank
/// `d - 1`, which can never exceed `(d-1)/d`.
pub fn max_fidelity_lower_rank(dims: SystemDims, trials: usize, seed: u64) -> Result<f64> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "need >= 100 restarts for a trustworthy maximum, got {trials}"
        )));
    }
    max_fidelity_rank_limited(dims, dims.n_levels() - 1, trials, seed)
}
