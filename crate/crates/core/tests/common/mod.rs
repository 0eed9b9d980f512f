//! Shared helpers for the integration and acceptance suites: random
//! inputs and independent brute-force oracles. Everything here stays off
//! the implementation paths it is used to check.
#![allow(dead_code)] // each test target uses its own subset

use boat_core::{GhzBlock, SymmetricState, SystemDims};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
}

/// Haar-ish random unitary from the QR decomposition of a random matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> DMatrix<C64> {
    let m = DMatrix::from_fn(d, d, |_, _| random_complex(rng));
    m.qr().q()
}

/// Random normalized symmetric state.
pub fn random_state(rng: &mut impl Rng, dims: SystemDims) -> SymmetricState {
    let mut amps: Vec<C64> = (0..dims.basis_size()).map(|_| random_complex(rng)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    SymmetricState::from_amplitudes(dims, amps).unwrap()
}

/// `u ^ (x) n` built directly, the dense oracle for induced unitaries.
pub fn kron_power(u: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let mut out = u.clone();
    for _ in 1..n {
        out = out.kronecker(u);
    }
    out
}

/// Random PSD GHZ block with known phases, from `G G^dagger` scaled to a
/// random trace in (0, 1].
pub fn random_psd_block(rng: &mut impl Rng) -> GhzBlock {
    let g = DMatrix::from_fn(3, 3, |_, _| random_complex(rng));
    let mut rho = &g * g.adjoint();
    let trace: f64 = (0..3).map(|i| rho[(i, i)].re).sum();
    let scale = (0.3 + 0.7 * rng.random::<f64>()) / trace;
    rho *= C64::new(scale, 0.0);
    GhzBlock::with_phases(
        [rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re],
        [
            rho[(0, 1)].norm(),
            rho[(0, 2)].norm(),
            rho[(1, 2)].norm(),
        ],
        [rho[(0, 1)].arg(), rho[(0, 2)].arg(), rho[(1, 2)].arg()],
    )
    .expect("GG' blocks always satisfy Cauchy-Schwarz")
}

/// Best fidelity of a fully known block against the GHZ family,
/// maximized over the two free phases.
///
/// With `u = theta1 + phi1` and `v = theta2 + phi2` free, the objective
/// reduces to a one-dimensional maximization over `w = v - u`:
/// `sqrt(m01^2 + m02^2 + 2 m01 m02 cos w) + m12 cos(theta~ + w)` with
/// `theta~ = theta3 + theta1 - theta2`. Every local maximum of a coarse
/// circular grid is refined by golden-section search, giving the global
/// maximum to ~1e-12.
pub fn max_fidelity_over_phases(block: &GhzBlock) -> f64 {
    let [p0, p1, p2] = block.populations();
    let [m01, m02, m12] = block.magnitudes();
    let [t1, t2, t3] = block.phases().expect("oracle needs phases");
    let theta = t3 + t1 - t2;
    let h = |w: f64| {
        (m01 * m01 + m02 * m02 + 2.0 * m01 * m02 * w.cos()).sqrt() + m12 * (theta + w).cos()
    };
    let grid = 512;
    let step = std::f64::consts::TAU / grid as f64;
    let values: Vec<f64> = (0..grid).map(|k| h(step * k as f64)).collect();
    let mut best = f64::NEG_INFINITY;
    for k in 0..grid {
        let (prev, next) = (values[(k + grid - 1) % grid], values[(k + 1) % grid]);
        if values[k] >= prev && values[k] >= next {
            best = best.max(golden_max(&h, step * k as f64 - step, step * k as f64 + step));
        }
    }
    (p0 + p1 + p2 + 2.0 * best) / 3.0
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..90 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Norm distance between two vectors after optimal global-phase alignment.
pub fn phase_aligned_distance(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let ov = b.dotc(a);
    let phase = if ov.norm() > 0.0 {
        ov / ov.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    (a - b * phase).norm()
}
