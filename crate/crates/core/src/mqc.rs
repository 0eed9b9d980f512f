//! Time-reversal multiple-quantum-coherence (MQC) protocol for qutrits.
//!
//! The protocol prepares the GHZ state, perturbs it with a probe rotation
//! `R(phi) = exp(-i phi (p S_11 + q S_22))`, undoes the preparation, and
//! reads out the population of `|0>^(x)N`. The resulting echo fidelity
//! `F(phi) = Tr[R rho R' rho]` oscillates in `phi`; its Fourier
//! coefficients `I_m` group the squared coherence magnitudes
//! `|rho_{l,l'}|^2` by the index `m = p (l1 - l1') + q (l2 - l2')`.
//! Three probe settings isolate `I_{2N}` as the squared magnitude of one
//! GHZ coherence each, giving `|rho_01|, |rho_02|, |rho_12|` with global
//! control only.
//!
//! Time reversal is simulated as the exact inverse unitaries; on hardware
//! it corresponds to flipping the sign of the applied Hamiltonian and
//! rotations. Readout is an exact projection by default, with an optional
//! binomial shot sampler.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::boat::{alignment_unitary, coherent_decomposition, evolve, EvolutionTime};
use crate::dicke::{
    apply_global_unitary, dft_matrix, induced_unitary, DickeBasis, PhaseVector, SymmetricState,
    SystemDims,
};
use crate::error::{Error, Result};

const QUTRIT: usize = 3;

fn require_qutrit(dims: SystemDims) -> Result<()> {
    if dims.n_levels() != QUTRIT {
        return Err(Error::UnsupportedDimension {
            expected: QUTRIT,
            actual: dims.n_levels(),
        });
    }
    Ok(())
}

/// Integer weights `(p, q)` of `S_11` and `S_22` in the probe rotation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSettings {
    p: i64,
    q: i64,
}

impl ProbeSettings {
    /// `(p, q) != (0, 0)` and `|p|, |q| <= 4`.
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if (p, q) == (0, 0) {
            return Err(Error::InvalidParameter(
                "probe settings (p, q) = (0, 0) generate no rotation".into(),
            ));
        }
        if p.abs() > 4 || q.abs() > 4 {
            return Err(Error::InvalidParameter(format!(
                "probe weights |p|, |q| <= 4; got ({p}, {q})"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// The three settings that isolate the GHZ coherences via `I_{2N}`.
    pub fn coherence_settings() -> [Self; 3] {
        [
            Self { p: 2, q: 1 },  // |rho_{(N,0),(0,0)}| : 0 <-> 1
            Self { p: 1, q: 2 },  // |rho_{(0,N),(0,0)}| : 0 <-> 2
            Self { p: -1, q: 1 }, // |rho_{(0,N),(N,0)}| : 1 <-> 2
        ]
    }

    /// `p l1 + q l2` for a label.
    fn weight(&self, occupations: &[usize]) -> i64 {
        self.p * occupations[0] as i64 + self.q * occupations[1] as i64
    }
}

/// A mixed state over the Dicke basis: Hermitian, unit trace, PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricDensity {
    dims: SystemDims,
    matrix: DMatrix<C64>,
}

impl SymmetricDensity {
    pub fn from_pure(state: &SymmetricState) -> Self {
        let v = state.amplitudes();
        Self {
            dims: state.dims(),
            matrix: v * v.adjoint(),
        }
    }

    /// Validates Hermiticity (1e-12), unit trace (1e-12), and positivity
    /// (eigenvalues >= -1e-10).
    pub fn from_matrix(dims: SystemDims, matrix: DMatrix<C64>) -> Result<Self> {
        let size = dims.basis_size();
        if matrix.nrows() != size || matrix.ncols() != size {
            return Err(Error::DimensionMismatch {
                expected: format!("{size}x{size} matrix"),
                actual: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let mut herm_dev = 0.0f64;
        for i in 0..size {
            for j in i..size {
                herm_dev = herm_dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm_dev > 1e-12 {
            return Err(Error::NonHermitian { deviation: herm_dev });
        }
        let trace = matrix.diagonal().iter().map(|z| z.re).sum::<f64>();
        if (trace - 1.0).abs() > 1e-12 {
            return Err(Error::UnphysicalDensity {
                reason: format!("trace = {trace}, expected 1"),
            });
        }
        let min_eig = matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::UnphysicalDensity {
                reason: format!("minimum eigenvalue = {min_eig:.3e}"),
            });
        }
        Ok(Self { dims, matrix })
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Population of `|0>^(x)N`.
    pub fn ground_population(&self) -> f64 {
        self.matrix[(0, 0)].re
    }

    /// `u rho u'` for an induced symmetric-basis matrix `u`.
    fn conjugated_by(&self, u: &DMatrix<C64>) -> Self {
        Self {
            dims: self.dims,
            matrix: u * &self.matrix * u.adjoint(),
        }
    }

    pub(crate) fn from_raw(dims: SystemDims, matrix: DMatrix<C64>) -> Self {
        Self { dims, matrix }
    }
}

/// Diagonal evolution of a density matrix for time `t`.
pub fn evolve_density(rho: &SymmetricDensity, t: EvolutionTime) -> SymmetricDensity {
    let dims = rho.dims();
    let basis = DickeBasis::new(dims);
    let n = dims.n_particles() as i64;
    let phases: Vec<C64> = basis
        .labels()
        .iter()
        .map(|label| {
            let g = crate::boat::quadratic_form(label.occupations());
            t.phase(g - n * label.excited_total() as i64)
        })
        .collect();
    let size = basis.len();
    let matrix = DMatrix::from_fn(size, size, |i, j| {
        rho.matrix[(i, j)] * phases[i] * phases[j].conj()
    });
    SymmetricDensity::from_raw(dims, matrix)
}

/// Probe rotation on a pure state: the amplitude at `l` picks up
/// `exp(-i phi (p l1 + q l2))`.
pub fn probe_rotation(
    state: &SymmetricState,
    settings: ProbeSettings,
    phi: f64,
) -> Result<SymmetricState> {
    require_qutrit(state.dims())?;
    let basis = DickeBasis::new(state.dims());
    let amplitudes = DVector::from_iterator(
        basis.len(),
        basis
            .labels()
            .iter()
            .zip(state.amplitudes().iter())
            .map(|(label, &a)| {
                a * C64::from_polar(1.0, -phi * settings.weight(label.occupations()) as f64)
            }),
    );
    Ok(SymmetricState::from_raw(state.dims(), amplitudes))
}

/// Probe rotation on a density matrix:
/// `rho_{l,l'} -> rho_{l,l'} exp(-i phi (p (l1-l1') + q (l2-l2')))`.
pub fn probe_rotation_density(
    rho: &SymmetricDensity,
    settings: ProbeSettings,
    phi: f64,
) -> Result<SymmetricDensity> {
    require_qutrit(rho.dims())?;
    let basis = DickeBasis::new(rho.dims());
    let weights: Vec<i64> = basis
        .labels()
        .iter()
        .map(|l| settings.weight(l.occupations()))
        .collect();
    let size = basis.len();
    let matrix = DMatrix::from_fn(size, size, |i, j| {
        rho.matrix()[(i, j)] * C64::from_polar(1.0, -phi * (weights[i] - weights[j]) as f64)
    });
    Ok(SymmetricDensity::from_raw(rho.dims(), matrix))
}

/// Echo fidelity `F(phi) = Tr[R(phi) rho R'(phi) rho]`, evaluated as
/// `sum_{l,l'} |rho_{l,l'}|^2 exp(-i m phi)` (real by Hermiticity).
pub fn loschmidt_fidelity(rho: &SymmetricDensity, settings: ProbeSettings, phi: f64) -> Result<f64> {
    require_qutrit(rho.dims())?;
    let basis = DickeBasis::new(rho.dims());
    let weights: Vec<i64> = basis
        .labels()
        .iter()
        .map(|l| settings.weight(l.occupations()))
        .collect();
    let size = basis.len();
    let mut acc = 0.0f64;
    for i in 0..size {
        for j in 0..size {
            let w = rho.matrix()[(i, j)].norm_sqr();
            if w > 0.0 {
                acc += w * ((weights[i] - weights[j]) as f64 * phi).cos();
            }
        }
    }
    Ok(acc)
}

/// The MQC spectrum: real coefficients `I_m` on `m in [-m_max, m_max]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MqcSpectrum {
    m_max: i64,
    values: Vec<f64>,
}

impl MqcSpectrum {
    pub fn m_max(&self) -> i64 {
        self.m_max
    }

    /// `I_m`, zero outside the stored range.
    pub fn get(&self, m: i64) -> f64 {
        if m.abs() > self.m_max {
            0.0
        } else {
            self.values[(m + self.m_max) as usize]
        }
    }

    /// `(m, I_m)` pairs in increasing `m`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as i64 - self.m_max, v))
    }

    /// `sum_m I_m`, equal to `Tr rho^2`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Largest reachable `|m|` for the given dimensions and probe weights.
fn coherence_order_bound(dims: SystemDims, settings: ProbeSettings) -> i64 {
    let basis = DickeBasis::new(dims);
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for label in basis.labels() {
        let v = settings.weight(label.occupations());
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Default sweep resolution: Nyquist with a 2x margin,
/// `4 (|p| + |q|) N + 1` uniform samples on `[0, 2 pi)`.
pub fn default_samples(dims: SystemDims, settings: ProbeSettings) -> usize {
    4 * (settings.p.unsigned_abs() + settings.q.unsigned_abs()) as usize * dims.n_particles() + 1
}

fn spectrum_from_curve(fidelity: &[f64], m_max: i64) -> MqcSpectrum {
    let s = fidelity.len();
    let mut values = Vec::with_capacity(2 * m_max as usize + 1);
    for m in -m_max..=m_max {
        let mut acc = 0.0f64;
        for (j, &f) in fidelity.iter().enumerate() {
            acc += f * (m as f64 * TAU * j as f64 / s as f64).cos();
        }
        values.push(acc / s as f64);
    }
    MqcSpectrum { m_max, values }
}

/// MQC spectrum by uniform sampling of `F(phi)` and a discrete Fourier
/// transform, at the default resolution.
pub fn mqc_spectrum(rho: &SymmetricDensity, settings: ProbeSettings) -> Result<MqcSpectrum> {
    mqc_spectrum_sampled(rho, settings, default_samples(rho.dims(), settings))
}

/// Sampled-DFT spectrum with an explicit sample count; refuses to alias.
pub fn mqc_spectrum_sampled(
    rho: &SymmetricDensity,
    settings: ProbeSettings,
    samples: usize,
) -> Result<MqcSpectrum> {
    require_qutrit(rho.dims())?;
    let m_max = coherence_order_bound(rho.dims(), settings);
    let required = 2 * m_max as usize + 1;
    if samples < required {
        return Err(Error::Undersampled {
            samples,
            required,
            m_max,
        });
    }
    let curve: Vec<f64> = (0..samples)
        .map(|j| loschmidt_fidelity(rho, settings, TAU * j as f64 / samples as f64))
        .collect::<Result<_>>()?;
    Ok(spectrum_from_curve(&curve, m_max))
}

/// Spectrum by direct summation of `|rho_{l,l'}|^2` over label pairs with
/// `p (l1 - l1') + q (l2 - l2') = m`; the independent check of the
/// sampled path.
pub fn mqc_spectrum_direct(rho: &SymmetricDensity, settings: ProbeSettings) -> Result<MqcSpectrum> {
    require_qutrit(rho.dims())?;
    let basis = DickeBasis::new(rho.dims());
    let weights: Vec<i64> = basis
        .labels()
        .iter()
        .map(|l| settings.weight(l.occupations()))
        .collect();
    let m_max = coherence_order_bound(rho.dims(), settings);
    let mut values = vec![0.0f64; 2 * m_max as usize + 1];
    let size = basis.len();
    for i in 0..size {
        for j in 0..size {
            let m = weights[i] - weights[j];
            values[(m + m_max) as usize] += rho.matrix()[(i, j)].norm_sqr();
        }
    }
    Ok(MqcSpectrum { m_max, values })
}

/// The three GHZ coherence magnitudes `(|rho_01|, |rho_02|, |rho_12|)`,
/// each `sqrt(I_{2N})` of one probe setting.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceMagnitudes {
    pub rho01: f64,
    pub rho02: f64,
    pub rho12: f64,
}

impl CoherenceMagnitudes {
    pub fn as_array(&self) -> [f64; 3] {
        [self.rho01, self.rho02, self.rho12]
    }
}

/// Extracts the GHZ coherence magnitudes from three spectrum runs.
pub fn coherence_magnitudes(rho: &SymmetricDensity) -> Result<CoherenceMagnitudes> {
    require_qutrit(rho.dims())?;
    let target = 2 * rho.dims().n_particles() as i64;
    let mut out = [0.0f64; 3];
    for (slot, settings) in out.iter_mut().zip(ProbeSettings::coherence_settings()) {
        let spectrum = mqc_spectrum(rho, settings)?;
        *slot = spectrum.get(target).max(0.0).sqrt();
    }
    Ok(CoherenceMagnitudes {
        rho01: out[0],
        rho02: out[1],
        rho12: out[2],
    })
}

/// Collective dephasing: `rho_{l,l'}` is damped by
/// `exp(-gamma ((dl1)^2 + (dl2)^2 + (dl1 + dl2)^2) / 2)`, symmetric among
/// the three level pairs. Trace and positivity preserving (the damping
/// kernel is a Gaussian, hence PSD, and the map is a Schur product).
pub fn collective_dephase(rho: &SymmetricDensity, gamma: f64) -> Result<SymmetricDensity> {
    require_qutrit(rho.dims())?;
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "dephasing strength must be >= 0, got {gamma}"
        )));
    }
    let basis = DickeBasis::new(rho.dims());
    let size = basis.len();
    let occ: Vec<(i64, i64)> = basis
        .labels()
        .iter()
        .map(|l| (l.occupations()[0] as i64, l.occupations()[1] as i64))
        .collect();
    let matrix = DMatrix::from_fn(size, size, |i, j| {
        let d1 = (occ[i].0 - occ[j].0) as f64;
        let d2 = (occ[i].1 - occ[j].1) as f64;
        let exponent = -gamma * (d1 * d1 + d2 * d2 + (d1 + d2) * (d1 + d2)) / 2.0;
        rho.matrix()[(i, j)] * exponent.exp()
    });
    Ok(SymmetricDensity::from_raw(rho.dims(), matrix))
}

/// Options for the full protocol run.
#[derive(Copy, Clone, Debug, Default)]
pub struct ProtocolOptions {
    /// Sweep resolution; `None` uses [`default_samples`].
    pub samples: Option<usize>,
    /// Simulate readout with a finite number of shots per sweep point.
    /// `None` (the default) reads out the exact population.
    pub shots: Option<u64>,
    /// RNG seed for shot sampling.
    pub seed: u64,
}

/// Full protocol output: the sampled echo curve for the requested probe,
/// its spectrum, and the three coherence magnitudes.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub dims: SystemDims,
    pub settings: ProbeSettings,
    pub gamma: Option<f64>,
    pub samples: usize,
    pub phi: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub spectrum: MqcSpectrum,
    pub magnitudes: CoherenceMagnitudes,
}

struct Preparation {
    dims: SystemDims,
    aligned: SymmetricState,
    /// Induced symmetric-basis matrices of the two global rotations.
    m_rp: DMatrix<C64>,
    m_align: DMatrix<C64>,
}

impl Preparation {
    /// `R_p`, BOAT for `2 pi / 3`, then the alignment rotation.
    fn new(dims: SystemDims, phases: &PhaseVector) -> Result<Self> {
        require_qutrit(dims)?;
        if phases.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: "2 phases".into(),
                actual: format!("{}", phases.len()),
            });
        }
        // R_p = diag(1, e^{i phi_1}, e^{i phi_2}) . DFT: column 0 is the
        // initial product state.
        let mut r_p = dft_matrix(QUTRIT);
        for (row, &p) in phases.phases().iter().enumerate() {
            let factor = C64::from_polar(1.0, p);
            for col in 0..QUTRIT {
                r_p[(row + 1, col)] *= factor;
            }
        }
        let prepared = apply_global_unitary(&SymmetricState::ground(dims), &r_p)?;
        let evolved = evolve(&prepared, EvolutionTime::two_pi_over(3)?);
        let components = coherent_decomposition(dims, phases, 3)?;
        let align = alignment_unitary(&components, QUTRIT)?;
        let aligned = apply_global_unitary(&evolved, &align)?;
        Ok(Self {
            dims,
            aligned,
            m_rp: induced_unitary(dims, &r_p)?,
            m_align: induced_unitary(dims, &align)?,
        })
    }

    /// Echo readout for one probe angle, pure path.
    fn echo_pure(&self, settings: ProbeSettings, phi: f64) -> Result<f64> {
        let probed = probe_rotation(&self.aligned, settings, phi)?;
        let mut v = self.m_align.adjoint() * probed.amplitudes();
        let undone = evolve(
            &SymmetricState::from_raw(self.dims, v),
            EvolutionTime::two_pi_over(3)?.negated(),
        );
        v = self.m_rp.adjoint() * undone.amplitudes();
        Ok(v[0].norm_sqr())
    }

    /// Echo readout for one probe angle through the dephased density
    /// pipeline. The channel acts once after preparation and once after
    /// the probe, modeling equal noise in the forward and reversed halves.
    fn echo_dephased(&self, rho_prepared: &SymmetricDensity, gamma: f64, settings: ProbeSettings, phi: f64) -> Result<f64> {
        let probed = probe_rotation_density(rho_prepared, settings, phi)?;
        let noisy = collective_dephase(&probed, gamma)?;
        let un_aligned = noisy.conjugated_by(&self.m_align.adjoint());
        let un_evolved = evolve_density(&un_aligned, EvolutionTime::two_pi_over(3)?.negated());
        let un_prepared = un_evolved.conjugated_by(&self.m_rp.adjoint());
        Ok(un_prepared.ground_population())
    }
}

fn sample_shots(f: f64, shots: u64, rng: &mut impl Rng) -> f64 {
    let p = f.clamp(0.0, 1.0);
    let mut hits = 0u64;
    for _ in 0..shots {
        if rng.random::<f64>() < p {
            hits += 1;
        }
    }
    hits as f64 / shots as f64
}

/// Runs the complete protocol of the qutrit echo measurement with default
/// options: exact readout and the default sweep resolution.
pub fn full_protocol(
    dims: SystemDims,
    phases: &PhaseVector,
    settings: ProbeSettings,
    dephasing: Option<f64>,
) -> Result<ProtocolRun> {
    full_protocol_with(dims, phases, settings, dephasing, ProtocolOptions::default())
}

/// Runs the complete protocol with explicit options.
pub fn full_protocol_with(
    dims: SystemDims,
    phases: &PhaseVector,
    settings: ProbeSettings,
    dephasing: Option<f64>,
    options: ProtocolOptions,
) -> Result<ProtocolRun> {
    let prep = Preparation::new(dims, phases)?;
    let rho_prepared = dephasing
        .map(|gamma| collective_dephase(&SymmetricDensity::from_pure(&prep.aligned), gamma))
        .transpose()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(options.seed);

    let mut sweep = |settings: ProbeSettings, samples: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let required = 2 * coherence_order_bound(dims, settings) as usize + 1;
        if samples < required {
            return Err(Error::Undersampled {
                samples,
                required,
                m_max: coherence_order_bound(dims, settings),
            });
        }
        let mut phi = Vec::with_capacity(samples);
        let mut fidelity = Vec::with_capacity(samples);
        for j in 0..samples {
            let angle = TAU * j as f64 / samples as f64;
            let mut f = match (&rho_prepared, dephasing) {
                (Some(rho), Some(gamma)) => prep.echo_dephased(rho, gamma, settings, angle)?,
                _ => prep.echo_pure(settings, angle)?,
            };
            if let Some(shots) = options.shots {
                f = sample_shots(f, shots, &mut rng);
            }
            phi.push(angle);
            fidelity.push(f);
        }
        Ok((phi, fidelity))
    };

    let samples = options.samples.unwrap_or_else(|| default_samples(dims, settings));
    let (phi, fidelity) = sweep(settings, samples)?;
    let spectrum = spectrum_from_curve(&fidelity, coherence_order_bound(dims, settings));

    let target = 2 * dims.n_particles() as i64;
    let mut magnitudes = [0.0f64; 3];
    for (slot, probe) in magnitudes.iter_mut().zip(ProbeSettings::coherence_settings()) {
        let (_, curve) = sweep(probe, default_samples(dims, probe))?;
        let sp = spectrum_from_curve(&curve, coherence_order_bound(dims, probe));
        *slot = sp.get(target).max(0.0).sqrt();
    }

    Ok(ProtocolRun {
        dims,
        settings,
        gamma: dephasing,
        samples,
        phi,
        fidelity,
        spectrum,
        magnitudes: CoherenceMagnitudes {
            rho01: magnitudes[0],
            rho02: magnitudes[1],
            rho12: magnitudes[2],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{coherent_state, DickeLabel};
    use approx::assert_relative_eq;

    fn dims(n: usize) -> SystemDims {
        SystemDims::new(n, 3).unwrap()
    }

    /// GHZ state aligned with the population basis, optional branch phases.
    fn aligned_ghz(n: usize, theta1: f64, theta2: f64) -> SymmetricState {
        let dm = dims(n);
        let basis = DickeBasis::new(dm);
        let w = 1.0 / 3.0f64.sqrt();
        let mut amps = vec![C64::new(0.0, 0.0); basis.len()];
        amps[basis.extreme_index(0)] = C64::new(w, 0.0);
        amps[basis.extreme_index(1)] = C64::from_polar(w, theta1);
        amps[basis.extreme_index(2)] = C64::from_polar(w, theta2);
        SymmetricState::from_amplitudes(dm, amps).unwrap()
    }

    #[test]
    fn probe_settings_validation() {
        assert!(ProbeSettings::new(0, 0).is_err());
        assert!(ProbeSettings::new(5, 0).is_err());
        assert!(ProbeSettings::new(2, 1).is_ok());
    }

    #[test]
    fn probe_rotation_phase_and_identity() {
        let dm = dims(3);
        let label = DickeLabel::new(vec![2, 1], dm).unwrap();
        let s = SymmetricState::basis_state(dm, &label).unwrap();
        let settings = ProbeSettings::new(2, 1).unwrap();

        let same = probe_rotation(&s, settings, 0.0).unwrap();
        assert_eq!(s.amplitudes(), same.amplitudes());

        // exponent p l1 + q l2 = 5; phase exp(-i 5 pi) = -1
        let flipped = probe_rotation(&s, settings, std::f64::consts::PI).unwrap();
        let basis = DickeBasis::new(dm);
        let idx = basis.index_of(&label).unwrap();
        assert!((flipped.amplitudes()[idx] + C64::new(1.0, 0.0)).norm() < 1e-12);
        assert_relative_eq!(flipped.norm(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn probe_rotation_density_preserves_trace() {
        let dm = dims(4);
        let s = coherent_state(dm, &PhaseVector::new(vec![0.7, 2.1]).unwrap()).unwrap();
        let rho = SymmetricDensity::from_pure(&s);
        let rotated =
            probe_rotation_density(&rho, ProbeSettings::new(1, 2).unwrap(), 1.234).unwrap();
        assert_relative_eq!(rotated.trace(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(rotated.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn loschmidt_at_zero_is_purity() {
        let dm = dims(5);
        let s = aligned_ghz(5, 0.3, 1.1);
        let rho = SymmetricDensity::from_pure(&s);
        let settings = ProbeSettings::new(2, 1).unwrap();
        assert_relative_eq!(
            loschmidt_fidelity(&rho, settings, 0.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // 2 pi periodicity for integer weights
        let f0 = loschmidt_fidelity(&rho, settings, 0.77).unwrap();
        let f1 = loschmidt_fidelity(&rho, settings, 0.77 + TAU).unwrap();
        assert_relative_eq!(f0, f1, epsilon = 1e-12);
        let _ = dm;
    }

    #[test]
    fn ghz_spectrum_n6() {
        let rho = SymmetricDensity::from_pure(&aligned_ghz(6, 0.0, 0.0));
        let settings = ProbeSettings::new(2, 1).unwrap();
        let spectrum = mqc_spectrum(&rho, settings).unwrap();
        assert_relative_eq!(spectrum.get(12), 1.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(spectrum.get(-12), 1.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(spectrum.get(0), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(spectrum.get(6), 2.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(spectrum.get(-6), 2.0 / 9.0, epsilon = 1e-12);
        for (m, v) in spectrum.iter() {
            if ![0, 6, -6, 12, -12].contains(&m) {
                assert!(v.abs() < 1e-12, "I_{m} = {v}");
            }
        }
        assert_relative_eq!(spectrum.total(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sampled_and_direct_spectra_agree() {
        let dm = dims(4);
        let s = evolve(
            &coherent_state(dm, &PhaseVector::new(vec![0.2, 0.9]).unwrap()).unwrap(),
            EvolutionTime::radians(0.437),
        );
        let rho = SymmetricDensity::from_pure(&s);
        for (p, q) in [(2i64, 1i64), (1, 2), (-1, 1), (1, 1)] {
            let settings = ProbeSettings::new(p, q).unwrap();
            let a = mqc_spectrum(&rho, settings).unwrap();
            let b = mqc_spectrum_direct(&rho, settings).unwrap();
            assert_eq!(a.m_max(), b.m_max());
            for ((m1, v1), (m2, v2)) in a.iter().zip(b.iter()) {
                assert_eq!(m1, m2);
                assert!((v1 - v2).abs() < 1e-10, "m = {m1}: {v1} vs {v2}");
            }
            assert_relative_eq!(a.total(), rho.purity(), epsilon = 1e-8);
        }
    }

    #[test]
    fn diagonal_mixture_has_only_zero_order() {
        let dm = dims(2);
        let basis = DickeBasis::new(dm);
        let mut m = DMatrix::<C64>::zeros(basis.len(), basis.len());
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(3, 3)] = C64::new(0.5, 0.0);
        let rho = SymmetricDensity::from_matrix(dm, m).unwrap();
        let spectrum = mqc_spectrum(&rho, ProbeSettings::new(2, 1).unwrap()).unwrap();
        assert_relative_eq!(spectrum.get(0), 0.5, epsilon = 1e-12);
        for (m, v) in spectrum.iter() {
            if m != 0 {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn undersampling_is_refused() {
        let rho = SymmetricDensity::from_pure(&aligned_ghz(6, 0.0, 0.0));
        let settings = ProbeSettings::new(2, 1).unwrap();
        assert!(matches!(
            mqc_spectrum_sampled(&rho, settings, 24),
            Err(Error::Undersampled { .. })
        ));
        assert!(mqc_spectrum_sampled(&rho, settings, 25).is_ok());
    }

    #[test]
    fn magnitudes_of_perfect_and_empty_states() {
        let rho = SymmetricDensity::from_pure(&aligned_ghz(4, 0.9, 2.2));
        let mags = coherence_magnitudes(&rho).unwrap();
        for v in mags.as_array() {
            assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-11);
        }

        // sqrt turns the ~1e-16 DFT noise floor into ~1e-8
        let ground = SymmetricDensity::from_pure(&SymmetricState::ground(dims(4)));
        let mags = coherence_magnitudes(&ground).unwrap();
        for v in mags.as_array() {
            assert!(v.abs() < 1e-7);
        }
    }

    #[test]
    fn dephasing_limits() {
        let rho = SymmetricDensity::from_pure(&aligned_ghz(3, 0.0, 0.0));
        let same = collective_dephase(&rho, 0.0).unwrap();
        assert_eq!(rho.matrix(), same.matrix());

        let dead = collective_dephase(&rho, 1e9).unwrap();
        for i in 0..dead.matrix().nrows() {
            for j in 0..dead.matrix().ncols() {
                if i != j {
                    assert!(dead.matrix()[(i, j)].norm() < 1e-300);
                }
            }
        }
        assert_relative_eq!(dead.trace(), 1.0, epsilon = 1e-12);

        assert!(collective_dephase(&rho, -0.1).is_err());
    }

    #[test]
    fn dephased_magnitudes_match_matrix_entries() {
        let n = 4;
        let gamma = 0.05;
        let rho = collective_dephase(
            &SymmetricDensity::from_pure(&aligned_ghz(n, 0.4, 1.7)),
            gamma,
        )
        .unwrap();
        let basis = DickeBasis::new(dims(n));
        let (a, b, c) = (
            basis.extreme_index(0),
            basis.extreme_index(1),
            basis.extreme_index(2),
        );
        let mags = coherence_magnitudes(&rho).unwrap();
        assert_relative_eq!(mags.rho01, rho.matrix()[(b, a)].norm(), epsilon = 1e-11);
        assert_relative_eq!(mags.rho02, rho.matrix()[(c, a)].norm(), epsilon = 1e-11);
        assert_relative_eq!(mags.rho12, rho.matrix()[(c, b)].norm(), epsilon = 1e-11);
        // the damping exponent is gamma N^2 for each GHZ coherence
        let expected = (1.0 / 3.0) * (-gamma * (n * n) as f64).exp();
        assert_relative_eq!(mags.rho01, expected, epsilon = 1e-11);
    }

    #[test]
    fn echo_with_coherent_state_factorizes() {
        // without evolution the echo is an N-th power of a single-particle
        // overlap: F(phi) = |(1 + e^{-i p phi} + e^{-i q phi}) / 3|^{2N}
        let n = 5;
        let dm = dims(n);
        let s = coherent_state(dm, &PhaseVector::zero(3)).unwrap();
        let rho = SymmetricDensity::from_pure(&s);
        let settings = ProbeSettings::new(2, 1).unwrap();
        for k in 0..7 {
            let phi = 0.13 + 0.9 * k as f64;
            let single = (C64::new(1.0, 0.0)
                + C64::from_polar(1.0, -2.0 * phi)
                + C64::from_polar(1.0, -phi))
                / 3.0;
            let expected = single.norm_sqr().powi(n as i32);
            assert_relative_eq!(
                loschmidt_fidelity(&rho, settings, phi).unwrap(),
                expected,
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn full_protocol_matches_direct_loschmidt() {
        let dm = dims(4);
        let phases = PhaseVector::new(vec![0.0, 0.0]).unwrap();
        let settings = ProbeSettings::new(2, 1).unwrap();
        let run = full_protocol(dm, &phases, settings, None).unwrap();
        let rho = SymmetricDensity::from_pure(&aligned_ghz_from_protocol(dm, &phases));
        for (j, &phi) in run.phi.iter().enumerate() {
            let direct = loschmidt_fidelity(&rho, settings, phi).unwrap();
            assert!(
                (run.fidelity[j] - direct).abs() < 1e-10,
                "phi = {phi}: {} vs {direct}",
                run.fidelity[j]
            );
        }
        for v in run.magnitudes.as_array() {
            assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-10);
        }
    }

    /// The aligned state exactly as the protocol prepares it.
    fn aligned_ghz_from_protocol(dm: SystemDims, phases: &PhaseVector) -> SymmetricState {
        let prep = Preparation::new(dm, phases).unwrap();
        prep.aligned
    }

    #[test]
    fn full_protocol_with_dephasing_matches_loschmidt_on_dephased_state() {
        let dm = dims(3);
        let phases = PhaseVector::new(vec![0.3, 1.2]).unwrap();
        let settings = ProbeSettings::new(2, 1).unwrap();
        let gamma = 0.02;
        let run = full_protocol(dm, &phases, settings, Some(gamma)).unwrap();
        let rho = collective_dephase(
            &SymmetricDensity::from_pure(&aligned_ghz_from_protocol(dm, &phases)),
            gamma,
        )
        .unwrap();
        for (j, &phi) in run.phi.iter().enumerate() {
            let direct = loschmidt_fidelity(&rho, settings, phi).unwrap();
            assert!(
                (run.fidelity[j] - direct).abs() < 1e-10,
                "phi = {phi}: {} vs {direct}",
                run.fidelity[j]
            );
        }
    }

    #[test]
    fn shot_sampling_is_deterministic_and_plausible() {
        let dm = dims(3);
        let phases = PhaseVector::zero(3);
        let settings = ProbeSettings::new(2, 1).unwrap();
        let options = ProtocolOptions {
            shots: Some(400),
            seed: 7,
            ..Default::default()
        };
        let a = full_protocol_with(dm, &phases, settings, None, options).unwrap();
        let b = full_protocol_with(dm, &phases, settings, None, options).unwrap();
        assert_eq!(a.fidelity, b.fidelity);
        let exact = full_protocol(dm, &phases, settings, None).unwrap();
        let mean_err: f64 = a
            .fidelity
            .iter()
            .zip(&exact.fidelity)
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            / a.fidelity.len() as f64;
        assert!(mean_err < 0.1, "mean shot-noise deviation {mean_err}");
    }

    #[test]
    fn density_validation_rejects_bad_matrices() {
        let dm = dims(2);
        let size = dm.basis_size();
        let mut m = DMatrix::<C64>::zeros(size, size);
        m[(0, 0)] = C64::new(0.7, 0.0);
        assert!(SymmetricDensity::from_matrix(dm, m.clone()).is_err()); // trace != 1
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0); // not Hermitian
        assert!(SymmetricDensity::from_matrix(dm, m).is_err());

        let mut neg = DMatrix::<C64>::zeros(size, size);
        neg[(0, 0)] = C64::new(1.5, 0.0);
        neg[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(
            SymmetricDensity::from_matrix(dm, neg),
            Err(Error::UnphysicalDensity { .. })
        ));
    }
}
