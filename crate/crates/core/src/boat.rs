//! Balanced one-axis twisting: exact evolution in the Dicke basis and the
//! Fourier-series structure of the evolved state at times `2 pi / m`.
//!
//! The interaction twists every pair of levels at the same rate. Dicke
//! states are its eigenstates, with phases set by the quadratic form
//! `g(l) = sum_{a <= b} l_a l_b` plus a term linear in `l` that only
//! drifts the coherent-state phases. At `chi tau = 2 pi / m` the quadratic
//! phase factor is periodic in every `l_a` with period `m`, so it expands
//! in a `(d-1)`-dimensional discrete Fourier series whose coefficients
//! decide whether the evolved state is a superposition of exactly `d`
//! orthogonal coherent states, i.e. a GHZ state.
//!
//! Times are the dimensionless product `t = chi tau` with `chi = 1`, where
//! `chi = (d/2) chi'` relates to the per-pair twisting rate `chi'`; see
//! [`chi_prime_tau`].

use std::f64::consts::TAU;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::comb::gcd;
use crate::dicke::{DickeBasis, DickeLabel, PhaseVector, SymmetricState, SystemDims};
use crate::error::{Error, Result};

/// Magnitude threshold separating true zeros (~1e-16 from cancellation)
/// from physical Fourier coefficients (at least ~d^{-(d-1)/2}).
pub const NONZERO_TOL: f64 = 1e-10;

/// Orthogonality tolerance for single-particle coherent components.
pub const ORTHO_TOL: f64 = 1e-10;

/// Evolution time as the dimensionless product `chi tau`.
///
/// The values `2 pi p / q` are kept as exact rationals so that phases
/// which are mathematically integer multiples of `2 pi` evaluate to
/// exactly 1; in particular `evolve(s, 2 pi)` is a bitwise revival.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EvolutionTime {
    /// `t = 2 pi * numer / denom`.
    TwoPiRational { numer: i64, denom: i64 },
    /// Arbitrary time in radian units of `chi tau`.
    Radians(f64),
}

impl EvolutionTime {
    /// The special time `2 pi / m`, `m >= 1`.
    pub fn two_pi_over(m: i64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter(format!(
                "period m must be >= 1, got {m}"
            )));
        }
        Ok(Self::TwoPiRational { numer: 1, denom: m })
    }

    /// `t = 2 pi * numer / denom` in lowest terms.
    pub fn two_pi_rational(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        let sign = if denom < 0 { -1 } else { 1 };
        let g = gcd(numer.unsigned_abs() as usize, denom.unsigned_abs() as usize).max(1) as i64;
        Ok(Self::TwoPiRational {
            numer: sign * numer / g,
            denom: (denom / g).abs(),
        })
    }

    pub fn radians(t: f64) -> Self {
        Self::Radians(t)
    }

    pub fn value(&self) -> f64 {
        match *self {
            Self::TwoPiRational { numer, denom } => TAU * numer as f64 / denom as f64,
            Self::Radians(t) => t,
        }
    }

    pub fn negated(&self) -> Self {
        match *self {
            Self::TwoPiRational { numer, denom } => Self::TwoPiRational {
                numer: -numer,
                denom,
            },
            Self::Radians(t) => Self::Radians(-t),
        }
    }

    /// If the time is `2 pi / m` for integer `m >= 1`, that `m`.
    pub fn fourier_period(&self) -> Option<usize> {
        match *self {
            Self::TwoPiRational { numer: 1, denom } if denom >= 1 => Some(denom as usize),
            _ => None,
        }
    }

    /// `exp(i t k)` for integer `k`, exactly periodic for rational times.
    pub(crate) fn phase(&self, k: i64) -> C64 {
        match *self {
            Self::TwoPiRational { numer, denom } => {
                let r = (numer.wrapping_mul(k)).rem_euclid(denom);
                if r == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::from_polar(1.0, TAU * r as f64 / denom as f64)
                }
            }
            Self::Radians(t) => C64::from_polar(1.0, t * k as f64),
        }
    }
}

/// Per-pair twisting time `chi' tau = (2/d) chi tau` corresponding to a
/// dimensionless `t = chi tau`. Only a unit conversion; all module
/// results are stated in `t`.
pub fn chi_prime_tau(t: f64, d: usize) -> f64 {
    2.0 * t / d as f64
}

/// The quadratic form `g(l) = sum_{a <= b} l_a l_b` over the excited
/// occupations.
pub fn quadratic_form(occupations: &[usize]) -> i64 {
    let mut g = 0i64;
    for (i, &a) in occupations.iter().enumerate() {
        for &b in &occupations[i..] {
            g += (a * b) as i64;
        }
    }
    g
}

/// Eigenphase data of a Dicke label: the integer `g(l)` and the eigenvalue
/// `lambda_l = -(g(l) - N sum_a l_a)` in `chi = 1` units.
pub fn interaction_phase(dims: SystemDims, label: &DickeLabel) -> Result<(i64, f64)> {
    // reuse label validation from the amplitude path
    crate::dicke::multinomial_amplitude(dims, label)?;
    let g = quadratic_form(label.occupations());
    let h = (dims.n_particles() * label.excited_total()) as i64;
    Ok((g, (h - g) as f64))
}

/// Evolves a symmetric state for time `t` under balanced twisting.
///
/// Diagonal in the Dicke basis: the amplitude at `l` picks up the phase
/// `exp(i t (g(l) - N sum_a l_a))`; the linear part is the drift of the
/// coherent-state phases `phi_a(t) = phi_a' - t N`.
pub fn evolve(state: &SymmetricState, t: EvolutionTime) -> SymmetricState {
    let dims = state.dims();
    let basis = DickeBasis::new(dims);
    let n = dims.n_particles() as i64;
    let amplitudes = nalgebra::DVector::from_iterator(
        basis.len(),
        basis
            .labels()
            .iter()
            .zip(state.amplitudes().iter())
            .map(|(label, &a)| {
                let g = quadratic_form(label.occupations());
                let k = g - n * label.excited_total() as i64;
                a * t.phase(k)
            }),
    );
    SymmetricState::from_raw(dims, amplitudes)
}

/// Fourier coefficients `f_q` of `exp(2 pi i g(l) / m)` on the periodic
/// lattice `l in {0..m-1}^{d-1}`, indexed lexicographically by `q`.
#[derive(Clone, Debug)]
pub struct FourierSpectrum {
    m: usize,
    d: usize,
    coeffs: Vec<C64>,
}

impl FourierSpectrum {
    pub fn period(&self) -> usize {
        self.m
    }

    pub fn n_levels(&self) -> usize {
        self.d
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coefficient(&self, q: &[usize]) -> C64 {
        self.coeffs[self.index_of(q)]
    }

    fn index_of(&self, q: &[usize]) -> usize {
        debug_assert_eq!(q.len(), self.d - 1);
        q.iter().fold(0, |acc, &qi| acc * self.m + qi)
    }

    /// `(q, f_q)` pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, C64)> + '_ {
        std::iter::repeat_n(0..self.m, self.d - 1)
            .multi_cartesian_product()
            .zip(self.coeffs.iter().copied())
    }

    /// Coefficients with `|f_q| > tol`.
    pub fn nonzero(&self, tol: f64) -> Vec<(Vec<usize>, C64)> {
        self.iter().filter(|(_, f)| f.norm() > tol).collect()
    }

    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.coeffs.iter().filter(|f| f.norm() > tol).count()
    }

    /// `sum_q |f_q|^2`, equal to 1 by unitarity of the phase function.
    pub fn total_weight(&self) -> f64 {
        self.coeffs.iter().map(|f| f.norm_sqr()).sum()
    }
}

impl Serialize for FourierSpectrum {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            m: usize,
            d: usize,
            coeffs: Vec<[f64; 2]>,
            #[serde(skip_serializing_if = "Option::is_none")]
            _marker: Option<&'a ()>,
        }
        Repr {
            m: self.m,
            d: self.d,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            _marker: None,
        }
        .serialize(serializer)
    }
}

/// Computes the spectrum by a `(d-1)`-dimensional inverse DFT:
/// `f_q = m^{-(d-1)} sum_l exp(2 pi i g(l)/m) exp(-2 pi i q.l/m)`.
///
/// The transform is applied one axis at a time (`O((d-1) m^d)` total),
/// which evaluates the same sums as the direct nested summation; the
/// direct form is kept as a test oracle.
pub fn fourier_spectrum(m: usize, d: usize) -> Result<FourierSpectrum> {
    if m < 1 {
        return Err(Error::InvalidParameter(format!("m must be >= 1, got {m}")));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d must be >= 2, got {d}")));
    }
    let nd = d - 1;
    let total = m.pow(nd as u32);
    // phase table exp(2 pi i r / m), exact at the lattice points
    let twiddle: Vec<C64> = (0..m)
        .map(|r| C64::from_polar(1.0, TAU * r as f64 / m as f64))
        .collect();
    let mut data: Vec<C64> = Vec::with_capacity(total);
    for l in std::iter::repeat_n(0..m, nd).multi_cartesian_product() {
        let g = quadratic_form(&l);
        data.push(twiddle[g.rem_euclid(m as i64) as usize]);
    }
    if nd == 0 {
        // d = 1 is excluded; nothing to do
        unreachable!();
    }
    let mut line_in = vec![C64::new(0.0, 0.0); m];
    for axis in 0..nd {
        let stride = m.pow((nd - 1 - axis) as u32);
        for base in 0..total {
            if !(base / stride).is_multiple_of(m) {
                continue;
            }
            for (j, slot) in line_in.iter_mut().enumerate() {
                *slot = data[base + j * stride];
            }
            for q in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for (j, &v) in line_in.iter().enumerate() {
                    acc += v * twiddle[(q * j) % m].conj();
                }
                data[base + q * stride] = acc / m as f64;
            }
        }
    }
    Ok(FourierSpectrum { m, d, coeffs: data })
}

/// Nonzero-count check against the empirical closed form
/// `K_{m,d} = m^{d-1} / gcd(m, d)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KCheck {
    pub m: usize,
    pub d: usize,
    pub counted: usize,
    pub formula: usize,
    pub agree: bool,
}

/// Counts nonzero Fourier coefficients at the default threshold and
/// compares against the closed form.
pub fn verify_k(m: usize, d: usize) -> Result<KCheck> {
    let spectrum = fourier_spectrum(m, d)?;
    let counted = spectrum.nonzero_count(NONZERO_TOL);
    let formula = m.pow((d - 1) as u32) / gcd(m, d);
    Ok(KCheck {
        m,
        d,
        counted,
        formula,
        agree: counted == formula,
    })
}

/// Outcome of the two GHZ-formation criteria for a `(m, d)` pair.
///
/// The report depends only on `m` and `d`, not the particle number: the
/// component phase vectors are the offsets `2 pi q / m` relative to the
/// drifted initial phases, and the orthogonality of the underlying
/// single-particle states implies orthogonality of the `N`-particle
/// coherent states for every `N`.
#[derive(Clone, Debug, Serialize)]
pub struct GhzReport {
    pub m: usize,
    pub d: usize,
    pub is_ghz: bool,
    pub nonzero_count: usize,
    pub nonzero_q: Vec<Vec<usize>>,
    pub magnitudes: Vec<f64>,
    pub component_phases: Vec<PhaseVector>,
    pub equal_magnitudes: bool,
    pub pairwise_orthogonal: bool,
}

/// Single-particle overlap of two coherent components whose phase vectors
/// differ by `delta`: `(1 + sum_a exp(i delta_a)) / d`.
fn component_overlap(d: usize, delta: &[f64]) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for &x in delta {
        acc += C64::from_polar(1.0, x);
    }
    acc / d as f64
}

/// Evaluates GHZ-formation criteria at time `2 pi / m`:
/// exactly `d` nonzero coefficients of equal magnitude, belonging to
/// mutually orthogonal coherent states.
///
/// The magnitude and orthogonality flags are only evaluated when the
/// count is exactly `d`; with the wrong count the state is not a `d`
/// component superposition and both flags read `false`.
pub fn ghz_check(m: usize, d: usize) -> Result<GhzReport> {
    let spectrum = fourier_spectrum(m, d)?;
    let nonzero = spectrum.nonzero(NONZERO_TOL);
    let nonzero_count = nonzero.len();
    let magnitudes: Vec<f64> = nonzero.iter().map(|(_, f)| f.norm()).collect();
    let offsets: Vec<Vec<f64>> = nonzero
        .iter()
        .map(|(q, _)| q.iter().map(|&qi| TAU * qi as f64 / m as f64).collect())
        .collect();
    let mut equal_magnitudes = false;
    let mut pairwise_orthogonal = false;
    if nonzero_count == d {
        let lo = magnitudes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = magnitudes.iter().cloned().fold(0.0f64, f64::max);
        equal_magnitudes = hi - lo <= 1e-10;
        pairwise_orthogonal = true;
        'outer: for i in 0..offsets.len() {
            for j in i + 1..offsets.len() {
                let delta: Vec<f64> = offsets[j]
                    .iter()
                    .zip(&offsets[i])
                    .map(|(a, b)| a - b)
                    .collect();
                if component_overlap(d, &delta).norm() > ORTHO_TOL {
                    pairwise_orthogonal = false;
                    break 'outer;
                }
            }
        }
    }
    let is_ghz = nonzero_count == d && equal_magnitudes && pairwise_orthogonal;
    Ok(GhzReport {
        m,
        d,
        is_ghz,
        nonzero_count,
        nonzero_q: nonzero.iter().map(|(q, _)| q.clone()).collect(),
        magnitudes,
        component_phases: offsets
            .into_iter()
            .map(|v| PhaseVector::new(v).expect("finite offsets"))
            .collect(),
        equal_magnitudes,
        pairwise_orthogonal,
    })
}

/// One coherent component of the evolved state: coefficient `f_q` and the
/// phase vector `phi_q = phi' - (2 pi / m) N + 2 pi q / m`.
#[derive(Clone, Debug)]
pub struct CoherentComponent {
    pub coefficient: C64,
    pub phases: PhaseVector,
    pub q: Vec<usize>,
}

/// Decomposes `evolve(coherent(phi'), 2 pi / m)` into coherent states.
///
/// Returns every component with `|f_q|` above the default threshold. The
/// reconstruction `sum_q f_q |phi_q>` equals the evolved state.
pub fn coherent_decomposition(
    dims: SystemDims,
    phases: &PhaseVector,
    m: usize,
) -> Result<Vec<CoherentComponent>> {
    if m < 1 {
        return Err(Error::InvalidParameter(format!("m must be >= 1, got {m}")));
    }
    if phases.len() != dims.n_levels() - 1 {
        return Err(Error::DimensionMismatch {
            expected: format!("{} phases", dims.n_levels() - 1),
            actual: format!("{}", phases.len()),
        });
    }
    let spectrum = fourier_spectrum(m, dims.n_levels())?;
    let drift = -(TAU / m as f64) * dims.n_particles() as f64;
    let base: Vec<f64> = phases.phases().iter().map(|p| p + drift).collect();
    Ok(spectrum
        .nonzero(NONZERO_TOL)
        .into_iter()
        .map(|(q, f)| {
            let component: Vec<f64> = base
                .iter()
                .zip(&q)
                .map(|(b, &qi)| b + TAU * qi as f64 / m as f64)
                .collect();
            CoherentComponent {
                coefficient: f,
                phases: PhaseVector::new(component).expect("finite phases"),
                q,
            }
        })
        .collect())
}

/// Builds the single-particle unitary that maps component `k`'s coherent
/// state onto `|k>^(x)N`, turning the evolved state into
/// `sum_k f_k |k>^(x)N` (a GHZ state with free phases `arg f_k`).
///
/// Requires exactly `d` components with mutually orthogonal underlying
/// single-particle states; anything else signals a non-GHZ `(m, d)`.
pub fn alignment_unitary(components: &[CoherentComponent], d: usize) -> Result<DMatrix<C64>> {
    if components.len() != d {
        return Err(Error::InvalidParameter(format!(
            "expected {d} coherent components, got {}",
            components.len()
        )));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let vectors: Vec<Vec<C64>> = components
        .iter()
        .map(|c| {
            let mut v = Vec::with_capacity(d);
            v.push(C64::new(scale, 0.0));
            v.extend(c.phases.phases().iter().map(|&p| C64::from_polar(scale, p)));
            v
        })
        .collect();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            let ov: C64 = vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
            worst = worst.max(ov.norm());
        }
    }
    if worst > ORTHO_TOL {
        return Err(Error::NonOrthogonalComponents { overlap: worst });
    }
    // u = sum_k |k><chi_k|
    Ok(DMatrix::from_fn(d, d, |k, j| vectors[k][j].conj()))
}
