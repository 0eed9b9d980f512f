//! Serial realization of balanced twisting with two-level entangling gates.
//!
//! The pairwise twisting terms all commute, so the full interaction splits
//! into a sequence of one-axis-twisting pulses between a fixed pair of
//! levels, conjugated by global level-swap rotations that route each level
//! pair onto the fixed one:
//! `S_{gd,z}^2 = U S_{ab,z}^2 U'` with swap unitaries
//! `U_{ga} = exp(-i pi S_{ga}^x)`. A compiled circuit is an ordered list
//! of abstract global gates; dense-matrix verification against
//! `exp(-i H tau)` is available whenever `d^N` is small enough, and a
//! polynomial symmetric-basis replay covers larger particle numbers.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::boat::{evolve, EvolutionTime};
use crate::dicke::{
    apply_global_unitary, coherent_state, expand_to_full_capped, DickeBasis, PhaseVector,
    SymmetricState, SystemDims,
};
use crate::error::{Error, Result};

/// Cap on `d^N` for dense unitary construction and verification (3^6).
pub const DENSE_VERIFY_CAP: usize = 729;

/// Axis of a one-axis-twisting pulse.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OatAxis {
    Z,
    X,
}

/// Axis of a global two-level rotation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    X,
    Y,
}

/// One abstract global gate.
///
/// All gates act identically on every particle. Time order in a
/// [`Circuit`] is list order: the first element is applied first.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GateOp {
    /// `exp(-i pi S^x_{levels})`, exchanging the two levels with a `-i`
    /// phase on the pair block; `dagger` applies the inverse.
    Swap {
        levels: (usize, usize),
        #[serde(default)]
        dagger: bool,
    },
    /// `exp(-i duration (S^axis_{levels})^2)`, the entangling pulse.
    #[serde(rename = "oat")]
    OatPair {
        levels: (usize, usize),
        axis: OatAxis,
        duration: f64,
    },
    /// `exp(-i angle S^axis_{levels})`.
    #[serde(rename = "rotation")]
    GlobalRotation {
        levels: (usize, usize),
        axis: RotationAxis,
        angle: f64,
    },
}

impl GateOp {
    fn levels(&self) -> (usize, usize) {
        match *self {
            GateOp::Swap { levels, .. }
            | GateOp::OatPair { levels, .. }
            | GateOp::GlobalRotation { levels, .. } => levels,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let (a, b) = self.levels();
        if a >= d || b >= d {
            return Err(Error::InvalidGate {
                reason: format!("levels ({a}, {b}) out of range for d = {d}"),
            });
        }
        if a == b {
            return Err(Error::InvalidGate {
                reason: format!("levels ({a}, {b}) must differ"),
            });
        }
        let scalar = match *self {
            GateOp::Swap { .. } => 0.0,
            GateOp::OatPair { duration, .. } => duration,
            GateOp::GlobalRotation { angle, .. } => angle,
        };
        if !scalar.is_finite() {
            return Err(Error::InvalidGate {
                reason: format!("non-finite gate parameter {scalar}"),
            });
        }
        Ok(())
    }
}

/// An ordered sequence of global gates for fixed dimensions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Circuit {
    n: usize,
    d: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(dims: SystemDims, ops: Vec<GateOp>) -> Result<Self> {
        for op in &ops {
            op.validate(dims.n_levels())?;
        }
        Ok(Self {
            n: dims.n_particles(),
            d: dims.n_levels(),
            ops,
        })
    }

    pub fn dims(&self) -> SystemDims {
        SystemDims::new(self.n, self.d).expect("validated at construction")
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn oat_pulse_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, GateOp::OatPair { .. }))
            .count()
    }

    pub fn swap_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, GateOp::Swap { .. }))
            .count()
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        struct Repr {
            n: usize,
            d: usize,
            ops: Vec<GateOp>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let dims = SystemDims::new(repr.n, repr.d).map_err(DeError::custom)?;
        Circuit::new(dims, repr.ops).map_err(DeError::custom)
    }
}

/// Compiles evolution for time `t` into `d(d-1)/2` commuting blocks: each
/// level pair is routed onto `fixed_pair` by at most two swaps, twisted
/// there, and routed back.
///
/// The pulse duration is `-(2/d) t`, so the whole circuit equals
/// `exp(-i H tau)` exactly (one global phase at most), not merely up to
/// per-pair phases.
pub fn boat_circuit(
    dims: SystemDims,
    t: EvolutionTime,
    fixed_pair: (usize, usize),
) -> Result<Circuit> {
    let d = dims.n_levels();
    let (alpha, beta) = fixed_pair;
    if alpha >= beta || beta >= d {
        return Err(Error::InvalidGate {
            reason: format!("fixed pair ({alpha}, {beta}) must satisfy 0 <= a < b < d = {d}"),
        });
    }
    let duration = -2.0 * t.value() / d as f64;
    let mut ops = Vec::new();
    for gamma in 0..d {
        for delta in gamma + 1..d {
            // Route (alpha, beta) -> (gamma, delta) by up to two
            // transpositions applied to level indices in list order:
            // s1 = (alpha gamma), then s2 = (s1(beta), delta). s2 cannot
            // touch gamma, so the pair lands exactly on (gamma, delta).
            let s1 = (alpha != gamma).then_some((alpha, gamma));
            let beta_moved = match s1 {
                Some((x, y)) if beta == x => y,
                Some((x, y)) if beta == y => x,
                _ => beta,
            };
            let s2 = (beta_moved != delta).then_some((beta_moved, delta));
            // conjugation applies the innermost listed swap first
            let routing: Vec<(usize, usize)> = [s2, s1].into_iter().flatten().collect();
            for &levels in routing.iter() {
                ops.push(GateOp::Swap {
                    levels,
                    dagger: false,
                });
            }
            ops.push(GateOp::OatPair {
                levels: (alpha, beta),
                axis: OatAxis::Z,
                duration,
            });
            for &levels in routing.iter().rev() {
                ops.push(GateOp::Swap {
                    levels,
                    dagger: true,
                });
            }
        }
    }
    Circuit::new(dims, ops)
}

/// Wraps an x-axis twisting pulse (the native Molmer-Sorensen form) in
/// `pi/2` y-rotations so the composite equals the z-axis pulse
/// `exp(-i duration (S^z)^2)` on the same pair.
pub fn ms_to_z_wrapper(pair: (usize, usize), duration: f64) -> Vec<GateOp> {
    vec![
        GateOp::GlobalRotation {
            levels: pair,
            axis: RotationAxis::Y,
            angle: FRAC_PI_2,
        },
        GateOp::OatPair {
            levels: pair,
            axis: OatAxis::X,
            duration,
        },
        GateOp::GlobalRotation {
            levels: pair,
            axis: RotationAxis::Y,
            angle: -FRAC_PI_2,
        },
    ]
}

fn check_dense_cap(dims: SystemDims, cap: usize) -> Result<usize> {
    dims.full_size()
        .filter(|&f| f <= cap)
        .ok_or(Error::ExpandCapExceeded {
            required: dims.full_size().unwrap_or(usize::MAX),
            cap,
        })
}

/// Single-particle swap matrix: identity except `-i sigma_x` (or `+i`
/// for the inverse) on the pair block.
fn single_swap(d: usize, levels: (usize, usize), dagger: bool) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::identity(d, d);
    let (a, b) = levels;
    let off = C64::new(0.0, if dagger { 1.0 } else { -1.0 });
    u[(a, a)] = C64::new(0.0, 0.0);
    u[(b, b)] = C64::new(0.0, 0.0);
    u[(a, b)] = off;
    u[(b, a)] = off;
    u
}

/// Single-particle rotation `exp(-i (angle/2) sigma_axis)` on the pair
/// block. For the y axis, `sigma_y = -i|a><b| + i|b><a|` with
/// `(a, b)` the stored level order.
fn single_rotation(d: usize, levels: (usize, usize), axis: RotationAxis, angle: f64) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::identity(d, d);
    let (a, b) = levels;
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    u[(a, a)] = C64::new(c, 0.0);
    u[(b, b)] = C64::new(c, 0.0);
    match axis {
        RotationAxis::X => {
            u[(a, b)] = C64::new(0.0, -s);
            u[(b, a)] = C64::new(0.0, -s);
        }
        RotationAxis::Y => {
            u[(a, b)] = C64::new(-s, 0.0);
            u[(b, a)] = C64::new(s, 0.0);
        }
    }
    u
}

fn kron_power(u: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let mut out = u.clone();
    for _ in 1..n {
        out = out.kronecker(u);
    }
    out
}

/// Diagonal of `exp(-i duration (S^z_{levels})^2)` in the product basis.
fn oat_z_diagonal(dims: SystemDims, levels: (usize, usize), duration: f64) -> DVector<C64> {
    let d = dims.n_levels();
    let n = dims.n_particles();
    let full = dims.full_size().expect("cap checked by caller");
    DVector::from_iterator(
        full,
        (0..full).map(|b| {
            let mut diff = 0i64;
            let mut rest = b;
            for _ in 0..n {
                let digit = rest % d;
                rest /= d;
                if digit == levels.1 {
                    diff += 1;
                } else if digit == levels.0 {
                    diff -= 1;
                }
            }
            let sz = diff as f64 / 2.0;
            C64::from_polar(1.0, -duration * sz * sz)
        }),
    )
}

fn gate_unitary(dims: SystemDims, op: &GateOp) -> DMatrix<C64> {
    let d = dims.n_levels();
    let n = dims.n_particles();
    match *op {
        GateOp::Swap { levels, dagger } => kron_power(&single_swap(d, levels, dagger), n),
        GateOp::GlobalRotation {
            levels,
            axis,
            angle,
        } => kron_power(&single_rotation(d, levels, axis, angle), n),
        GateOp::OatPair {
            levels,
            axis: OatAxis::Z,
            duration,
        } => DMatrix::from_diagonal(&oat_z_diagonal(dims, levels, duration)),
        GateOp::OatPair {
            levels,
            axis: OatAxis::X,
            duration,
        } => {
            // S_x = W S_z W' with W the pi/2 y-rotation on the pair
            let w = kron_power(&single_rotation(d, levels, RotationAxis::Y, FRAC_PI_2), n);
            let diag = DMatrix::from_diagonal(&oat_z_diagonal(dims, levels, duration));
            &w * diag * w.adjoint()
        }
    }
}

/// Dense product of the per-gate unitaries, first op rightmost.
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<C64>> {
    circuit_unitary_capped(circuit, DENSE_VERIFY_CAP)
}

/// Dense circuit unitary with an explicit size cap.
pub fn circuit_unitary_capped(circuit: &Circuit, cap: usize) -> Result<DMatrix<C64>> {
    let dims = circuit.dims();
    let full = check_dense_cap(dims, cap)?;
    let mut u = DMatrix::<C64>::identity(full, full);
    for op in circuit.ops() {
        u = gate_unitary(dims, op) * u;
    }
    Ok(u)
}

/// Replays a circuit on a symmetric state; polynomial in `N`, valid for
/// particle numbers beyond the dense cap.
pub fn apply_to_symmetric(circuit: &Circuit, state: &SymmetricState) -> Result<SymmetricState> {
    let dims = state.dims();
    if dims != circuit.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", circuit.dims()),
            actual: format!("{:?}", dims),
        });
    }
    let d = dims.n_levels();
    let basis = DickeBasis::new(dims);
    let mut current = state.clone();
    for op in circuit.ops() {
        current = match *op {
            GateOp::Swap { levels, dagger } => {
                apply_global_unitary(&current, &single_swap(d, levels, dagger))?
            }
            GateOp::GlobalRotation {
                levels,
                axis,
                angle,
            } => apply_global_unitary(&current, &single_rotation(d, levels, axis, angle))?,
            GateOp::OatPair {
                levels,
                axis,
                duration,
            } => {
                let rotate = match axis {
                    OatAxis::Z => None,
                    OatAxis::X => Some(single_rotation(d, levels, RotationAxis::Y, FRAC_PI_2)),
                };
                let mut s = current;
                if let Some(w) = &rotate {
                    s = apply_global_unitary(&s, &w.adjoint())?;
                }
                let amplitudes = DVector::from_iterator(
                    basis.len(),
                    basis.labels().iter().zip(s.amplitudes().iter()).map(|(label, &a)| {
                        let occ = label.full_occupations(dims);
                        let sz = (occ[levels.1] as f64 - occ[levels.0] as f64) / 2.0;
                        a * C64::from_polar(1.0, -duration * sz * sz)
                    }),
                );
                let mut s = SymmetricState::from_raw(dims, amplitudes);
                if let Some(w) = &rotate {
                    s = apply_global_unitary(&s, w)?;
                }
                s
            }
        };
    }
    Ok(current)
}

/// Dense target unitary `exp(-i H tau)` for the balanced-twisting
/// interaction, built from explicit collective operators and a Hermitian
/// eigendecomposition. Test oracle; independent of the diagonal fast path.
pub fn target_unitary(dims: SystemDims, t: EvolutionTime) -> Result<DMatrix<C64>> {
    target_unitary_capped(dims, t, DENSE_VERIFY_CAP)
}

/// Dense target unitary with an explicit size cap.
pub fn target_unitary_capped(
    dims: SystemDims,
    t: EvolutionTime,
    cap: usize,
) -> Result<DMatrix<C64>> {
    let full = check_dense_cap(dims, cap)?;
    let d = dims.n_levels();
    let n = dims.n_particles();
    // single-particle sigma_z/2 embedded at each site, then squared sums
    let mut h_tau = DMatrix::<C64>::zeros(full, full);
    let eye = DMatrix::<C64>::identity(d, d);
    for alpha in 0..d {
        for beta in alpha + 1..d {
            let mut sz = DMatrix::<C64>::zeros(full, full);
            for j in 0..n {
                let mut single = DMatrix::<C64>::zeros(d, d);
                single[(beta, beta)] = C64::new(0.5, 0.0);
                single[(alpha, alpha)] = C64::new(-0.5, 0.0);
                let mut factor = DMatrix::<C64>::identity(1, 1);
                for k in 0..n {
                    factor = factor.kronecker(if k == j { &single } else { &eye });
                }
                sz += factor;
            }
            h_tau += &sz * &sz;
        }
    }
    // H tau = -chi' tau sum S^2 with chi' tau = (2/d) t
    h_tau *= C64::new(-2.0 * t.value() / d as f64, 0.0);
    // exp(-i H tau) by Hermitian eigendecomposition
    let eigen = h_tau.symmetric_eigen();
    let phases = DVector::from_iterator(
        full,
        eigen.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e)),
    );
    Ok(&eigen.eigenvectors * DMatrix::from_diagonal(&phases) * eigen.eigenvectors.adjoint())
}

/// Residuals of a compiled circuit against exact evolution.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    /// Operator-norm distance to `exp(-i H tau)`, minimized over a global
    /// phase.
    pub unitary_residual: f64,
    /// Norm distance of the circuit acting on the zero-phase coherent
    /// state from the exactly evolved state, up to a global phase.
    pub state_residual: f64,
}

fn min_phase_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let tr = (b.adjoint() * a).trace();
    let phase = if tr.norm() > 0.0 {
        tr / tr.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let diff = a - b * phase;
    diff.singular_values()
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
}

/// Dense verification: compares the circuit unitary with `exp(-i H tau)`
/// up to one global phase, and the circuit action on the zero-phase
/// coherent state with exact evolution.
pub fn verify_equivalence(circuit: &Circuit, t: EvolutionTime) -> Result<EquivalenceReport> {
    verify_equivalence_capped(circuit, t, DENSE_VERIFY_CAP)
}

/// Dense verification with an explicit size cap.
pub fn verify_equivalence_capped(
    circuit: &Circuit,
    t: EvolutionTime,
    cap: usize,
) -> Result<EquivalenceReport> {
    let dims = circuit.dims();
    let u_circuit = circuit_unitary_capped(circuit, cap)?;
    let u_target = target_unitary_capped(dims, t, cap)?;
    let unitary_residual = min_phase_distance(&u_circuit, &u_target);

    let initial = coherent_state(dims, &PhaseVector::zero(dims.n_levels()))?;
    let full_initial = expand_to_full_capped(&initial, cap)?;
    let circuit_state = &u_circuit * &full_initial;
    let evolved = expand_to_full_capped(&evolve(&initial, t), cap)?;
    let ov = evolved.dotc(&circuit_state);
    let phase = if ov.norm() > 0.0 {
        ov / ov.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let state_residual = (circuit_state - evolved * phase).norm();

    Ok(EquivalenceReport {
        unitary_residual,
        state_residual,
    })
}

/// State-level verification in the symmetric basis, polynomial in `N`:
/// the norm distance (up to global phase) between the circuit replay and
/// exact evolution of the zero-phase coherent state.
pub fn verify_state_level(circuit: &Circuit, t: EvolutionTime) -> Result<f64> {
    let dims = circuit.dims();
    let initial = coherent_state(dims, &PhaseVector::zero(dims.n_levels()))?;
    let replayed = apply_to_symmetric(circuit, &initial)?;
    let evolved = evolve(&initial, t);
    let ov = evolved.amplitudes().dotc(replayed.amplitudes());
    let phase = if ov.norm() > 0.0 {
        ov / ov.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    Ok((replayed.amplitudes() - evolved.amplitudes() * phase).norm())
}
