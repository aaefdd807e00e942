//! Interval-to-interval correlations through a separable kernel.
//!
//! When consecutive field angles are coupled by `P(phi, phi') = sum_n
//! p_n(phi) p_n(phi')`, the chain average of rotation products factors into
//! powers of the block matrix
//!
//! ```text
//! S[(n', i), (n'', j)] = integral dphi p_n'(phi) T_ij(phi) p_n''(phi)
//! ```
//!
//! where `T(phi)` is the single-interval rotation at that field value. After
//! `m` intervals, `sigma_i(m tau) = w . S^(m-1) . v` with entry/exit vectors
//! carrying the first and last basis contractions. Asymptotics come from the
//! eigenvalues of S: transients die at the scale of the kernel's mixing
//! weight, and the surviving modes are the physical 1/T1 and 1/T2 channels,
//! identified by where their eigenvectors put their weight.

use crate::linalg::{dense_eigenvalues, inverse_iteration, DMat};
use crate::noise::{NoiseError, QuadratureRule, SeparableKernel};
use crate::su2::{adjoint_rotation, BlochVector, FieldVector};
use crate::transfer::{
    decay_rate, DampingClass, ModeLabel, ModeMetrics, RelaxationReport, TransferMatrix,
};
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorrelatedError {
    #[error("kernel row marginal at node {node} integrates to {value}, not 1")]
    KernelMarginal { node: usize, value: f64 },
    #[error("block matrix eigenvalue magnitude {0} exceeds 1 beyond tolerance")]
    EigenvalueBound(f64),
    #[error("no eigenvalue above the transient cut {0}; nothing asymptotic to report")]
    NoSurvivors(f64),
    #[error("chain propagation needs at least one interval")]
    NoIntervals,
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Eigensolver(#[from] crate::linalg::LinalgError),
}

/// The rotation of one interval at a fixed field draw.
pub fn pointwise_transfer(b: FieldVector, b_ext: f64, tau: f64) -> TransferMatrix {
    TransferMatrix(adjoint_rotation(b.with_static(b_ext), tau).0)
}

/// Block matrix on (kernel basis) x (Bloch component) space, row/column
/// index `3 * basis + component`.
#[derive(Clone, Debug)]
pub struct SMatrix {
    pub a: DMat,
    pub n_basis: usize,
    pub b_ext: f64,
    pub tau: f64,
}

/// Entry and exit contractions for a chain starting at `s0`.
///
/// `exit_basis[n] = integral dphi p_n(phi) / sqrt(2 pi)` — the uniform-basis
/// normalization makes this exactly `(1, 0, 0)` for the built-in kernel —
/// and `entry[3n + j] = integral dphi p_n(phi) (T(phi) s0)_j / sqrt(2 pi)`.
/// Measuring component i of the state after `m` intervals contracts
/// `S^(m-1) entry` with `exit_basis[n] delta_ij`.
#[derive(Clone, Debug)]
pub struct BoundaryVectors {
    pub exit_basis: Vec<f64>,
    pub entry: Vec<f64>,
}

fn node_angles(quad: &QuadratureRule) -> Vec<f64> {
    quad.nodes
        .iter()
        .map(|(b, _)| b.by.atan2(b.bx).rem_euclid(TAU))
        .collect()
}

/// Verify that the kernel's row marginal is one at every node of the rule;
/// a failure means kernel and quadrature do not describe the same chain.
fn check_marginal(
    kernel: &SeparableKernel,
    quad: &QuadratureRule,
    angles: &[f64],
) -> Result<(), CorrelatedError> {
    for (i, &phi) in angles.iter().enumerate() {
        let mut total = 0.0;
        for (k, &(_, w)) in quad.nodes.iter().enumerate() {
            total += TAU * w * kernel.kernel_value(phi, angles[k]);
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(CorrelatedError::KernelMarginal {
                node: i,
                value: total,
            });
        }
    }
    Ok(())
}

pub fn build_s_matrix(
    kernel: &SeparableKernel,
    b_ext: f64,
    tau: f64,
    quad: &QuadratureRule,
) -> Result<SMatrix, CorrelatedError> {
    let nb = kernel.basis_count();
    let angles = node_angles(quad);
    check_marginal(kernel, quad, &angles)?;
    let mut a = DMat::zeros(3 * nb);
    for (k, &(b, w)) in quad.nodes.iter().enumerate() {
        let t = pointwise_transfer(b, b_ext, tau);
        let phi = angles[k];
        let p: Vec<f64> = (0..nb).map(|n| kernel.basis_value(n, phi)).collect();
        let dphi_weight = TAU * w;
        for np in 0..nb {
            for npp in 0..nb {
                let f = dphi_weight * p[np] * p[npp];
                if f == 0.0 {
                    continue;
                }
                for i in 0..3 {
                    for j in 0..3 {
                        a.add_at(3 * np + i, 3 * npp + j, f * t.0[i][j]);
                    }
                }
            }
        }
    }
    Ok(SMatrix {
        a,
        n_basis: nb,
        b_ext,
        tau,
    })
}

pub fn boundary_vectors(
    kernel: &SeparableKernel,
    b_ext: f64,
    tau: f64,
    quad: &QuadratureRule,
    s0: BlochVector,
) -> BoundaryVectors {
    let nb = kernel.basis_count();
    let angles = node_angles(quad);
    let mut exit_basis = vec![0.0; nb];
    let mut entry = vec![0.0; 3 * nb];
    let root = TAU.sqrt();
    for (k, &(b, w)) in quad.nodes.iter().enumerate() {
        let phi = angles[k];
        let ts0 = pointwise_transfer(b, b_ext, tau).apply(s0).to_array();
        for n in 0..nb {
            let p = kernel.basis_value(n, phi);
            exit_basis[n] += TAU * w * p / root;
            for j in 0..3 {
                entry[3 * n + j] += TAU * w * p * ts0[j] / root;
            }
        }
    }
    BoundaryVectors { exit_basis, entry }
}

/// State after `m >= 1` correlated intervals.
pub fn propagate_correlated(
    kernel: &SeparableKernel,
    b_ext: f64,
    tau: f64,
    quad: &QuadratureRule,
    s0: BlochVector,
    m: u64,
) -> Result<BlochVector, CorrelatedError> {
    if m == 0 {
        return Err(CorrelatedError::NoIntervals);
    }
    let s = build_s_matrix(kernel, b_ext, tau, quad)?;
    let bv = boundary_vectors(kernel, b_ext, tau, quad, s0);
    let mut v = bv.entry.clone();
    for _ in 1..m {
        v = s.a.matvec(&v);
    }
    let mut out = [0.0; 3];
    for n in 0..s.n_basis {
        for (i, o) in out.iter_mut().enumerate() {
            *o += bv.exit_basis[n] * v[3 * n + i];
        }
    }
    Ok(BlochVector::from_array(out))
}

/// Asymptotic relaxation rates from the spectrum of S.
///
/// Eigenvalues at or below `transient_cut` in magnitude are transients of the
/// kernel contraction, not physical decay channels, and are dropped. Each
/// survivor is labeled by its eigenvector: weight of at least 0.9 on the
/// uniform basis block's z component marks the longitudinal (1/T1) channel,
/// the same weight on that block's x and y components marks the transverse
/// (1/T2) channel, anything else is reported as ambiguous with a warning.
pub fn asymptotic_rates(
    s: &SMatrix,
    transient_cut: f64,
) -> Result<RelaxationReport, CorrelatedError> {
    let eig = dense_eigenvalues(&s.a)?;
    for z in &eig {
        if z.norm() > 1.0 + 1e-9 {
            return Err(CorrelatedError::EigenvalueBound(z.norm()));
        }
    }
    let mut survivors: Vec<Complex64> = eig
        .into_iter()
        .filter(|z| z.norm() > transient_cut)
        .collect();
    if survivors.is_empty() {
        return Err(CorrelatedError::NoSurvivors(transient_cut));
    }
    survivors.sort_by(|a, b| (b.norm(), b.im).partial_cmp(&(a.norm(), a.im)).unwrap());

    let mut warnings = Vec::new();
    let mut modes = Vec::with_capacity(survivors.len());
    for z in survivors {
        let (rate, flag) = decay_rate(z, s.tau);
        let (label, vector) = match inverse_iteration(&s.a, z) {
            Some(v) => {
                let total: f64 = v.iter().map(|c| c.norm_sqr()).sum();
                let wz = v[2].norm_sqr() / total;
                let wxy = (v[0].norm_sqr() + v[1].norm_sqr()) / total;
                let label = if wz >= 0.9 {
                    ModeLabel::Longitudinal
                } else if wxy >= 0.9 {
                    ModeLabel::Transverse
                } else {
                    warnings.push(format!(
                        "eigenvalue {z} above the transient cut but its weight \
                         (z {wz:.3}, xy {wxy:.3}) identifies no channel; labeled ambiguous"
                    ));
                    ModeLabel::Ambiguous
                };
                (label, v)
            }
            None => {
                warnings.push(format!(
                    "no converged eigenvector for eigenvalue {z}; labeled ambiguous"
                ));
                (ModeLabel::Ambiguous, Vec::new())
            }
        };
        modes.push(ModeMetrics {
            eigenvalue: z,
            rate,
            flag,
            label,
            vector,
        });
    }

    // longitudinal first, then the transverse pair (positive imaginary part
    // first), ambiguous modes last
    modes.sort_by(|a, b| {
        let rank = |m: &ModeMetrics| match m.label {
            ModeLabel::Longitudinal => 0,
            ModeLabel::Transverse => 1,
            ModeLabel::Ambiguous => 2,
        };
        (rank(a), -a.eigenvalue.im)
            .partial_cmp(&(rank(b), -b.eigenvalue.im))
            .unwrap()
    });

    let precession = modes
        .iter()
        .find(|m| m.label == ModeLabel::Transverse && m.eigenvalue.im > 0.0)
        .map(|m| m.eigenvalue.im.atan2(m.eigenvalue.re).abs() / s.tau)
        .unwrap_or(0.0);
    let pair_present = modes.iter().any(|m| {
        m.label == ModeLabel::Transverse
            && m.eigenvalue.im.abs() > 1e-10 * m.eigenvalue.norm().max(1.0)
    });
    let damping = if pair_present {
        DampingClass::Underdamped
    } else {
        DampingClass::Overdamped
    };
    Ok(RelaxationReport {
        modes,
        precession,
        damping,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{quadrature, SeparableKernel};
    use crate::transfer::{
        build_transfer_matrix, compute_integrals, relaxation_report, spectral_decompose,
    };

    const N_PHI: usize = 64;

    fn setup(r: f64, b0: f64) -> (SeparableKernel, QuadratureRule) {
        let kernel = SeparableKernel::sp_wave_mixture(b0, r).unwrap();
        let quad = quadrature(&kernel.marginal(), N_PHI).unwrap();
        (kernel, quad)
    }

    #[test]
    fn uncorrelated_kernel_reduces_to_the_averaged_map() {
        let (b0, b_ext, tau) = (0.05, 0.5, 1.0);
        let (kernel, quad) = setup(0.0, b0);
        let s = build_s_matrix(&kernel, b_ext, tau, &quad).unwrap();

        let ints = compute_integrals(&quad, b_ext, tau).unwrap();
        let t = build_transfer_matrix(&ints);
        let spec = spectral_decompose(&t).unwrap();
        let plain = relaxation_report(&spec, tau);

        let mut s_eigs = dense_eigenvalues(&s.a).unwrap();
        s_eigs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        // top three match the 3x3 spectrum, the other six vanish
        let mut t_mags: Vec<f64> = spec.d.iter().map(|z| z.norm()).collect();
        t_mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (se, tm) in s_eigs.iter().take(3).zip(&t_mags) {
            assert!((se.norm() - tm).abs() < 1e-9);
        }
        for z in s_eigs.iter().skip(3) {
            assert!(z.norm() < 1e-9);
        }

        let report = asymptotic_rates(&s, 0.5).unwrap();
        let r1 = report.rate(ModeLabel::Longitudinal).unwrap();
        let r2 = report.rate(ModeLabel::Transverse).unwrap();
        let p1 = plain.rate(ModeLabel::Longitudinal).unwrap();
        let p2 = plain.rate(ModeLabel::Transverse).unwrap();
        assert!((r1 - p1).abs() <= 1e-9 * p1.max(1e-30));
        assert!((r2 - p2).abs() <= 1e-9 * p2.max(1e-30));
        assert!((report.precession - plain.precession).abs() < 1e-9);
    }

    #[test]
    fn one_interval_is_the_marginal_average() {
        let (b0, b_ext, tau) = (0.4, 0.7, 1.0);
        let (kernel, quad) = setup(0.8, b0);
        let s0 = BlochVector::new(0.8, -0.1, 0.55);
        let via_chain = propagate_correlated(&kernel, b_ext, tau, &quad, s0, 1).unwrap();
        let mut want = [0.0; 3];
        for &(b, w) in &quad.nodes {
            let out = pointwise_transfer(b, b_ext, tau).apply(s0).to_array();
            for i in 0..3 {
                want[i] += w * out[i];
            }
        }
        assert!((via_chain.sx - want[0]).abs() < 1e-12);
        assert!((via_chain.sy - want[1]).abs() < 1e-12);
        assert!((via_chain.sz - want[2]).abs() < 1e-12);
    }

    #[test]
    fn mismatched_rule_fails_the_marginal_check() {
        let (kernel, quad) = setup(0.5, 0.3);
        let mut bad = quad.clone();
        for node in &mut bad.nodes {
            node.1 *= 0.9;
        }
        assert!(matches!(
            build_s_matrix(&kernel, 0.0, 1.0, &bad),
            Err(CorrelatedError::KernelMarginal { .. })
        ));
    }

    #[test]
    fn boundary_exit_vector_is_the_uniform_basis_unit() {
        let (kernel, quad) = setup(0.7, 0.2);
        let bv = boundary_vectors(&kernel, 0.1, 1.0, &quad, BlochVector::new(1.0, 0.0, 0.0));
        assert!((bv.exit_basis[0] - 1.0).abs() < 1e-12);
        assert!(bv.exit_basis[1].abs() < 1e-12);
        assert!(bv.exit_basis[2].abs() < 1e-12);
    }

    #[test]
    fn survivors_carry_clean_channel_labels() {
        let (b0, b_ext, tau) = (0.005, 0.05, 1.0);
        let (kernel, quad) = setup(0.5, b0);
        let s = build_s_matrix(&kernel, b_ext, tau, &quad).unwrap();
        let report = asymptotic_rates(&s, 0.5).unwrap();
        assert!(report.warnings.is_empty());
        let longs: Vec<_> = report
            .modes
            .iter()
            .filter(|m| m.label == ModeLabel::Longitudinal)
            .collect();
        let trans: Vec<_> = report
            .modes
            .iter()
            .filter(|m| m.label == ModeLabel::Transverse)
            .collect();
        assert_eq!(longs.len(), 1);
        assert_eq!(trans.len(), 2);
        assert!((trans[0].eigenvalue.conj() - trans[1].eigenvalue).norm() < 1e-9);
        assert!(trans[0].eigenvalue.im > 0.0);
        assert!(longs[0].rate > 0.0 && trans[0].rate > 0.0);
        // transverse-only noise: the factor-two relation between the channel
        // rates survives correlation in this kernel family (exact only to
        // second order in the per-interval decay, hence the loose tolerance)
        assert!((longs[0].rate - 2.0 * trans[0].rate).abs() < 1e-3 * longs[0].rate);
        assert_eq!(report.damping, DampingClass::Underdamped);
        assert!(report.precession > 0.0);
    }

    #[test]
    fn impossible_cut_reports_no_survivors() {
        let (kernel, quad) = setup(0.5, 0.01);
        let s = build_s_matrix(&kernel, 0.05, 1.0, &quad).unwrap();
        assert!(matches!(
            asymptotic_rates(&s, 1.0),
            Err(CorrelatedError::NoSurvivors(_))
        ));
    }

    #[test]
    fn eigenvalue_bound_holds_across_mixing() {
        for &r in &[0.0, 0.3, 0.6, 0.9, 1.0] {
            let (kernel, quad) = setup(r, 0.4);
            let s = build_s_matrix(&kernel, 0.7, 1.0, &quad).unwrap();
            let eig = dense_eigenvalues(&s.a).unwrap();
            for z in eig {
                assert!(z.norm() <= 1.0 + 1e-9, "r {r}: |{z}|");
            }
        }
    }

    #[test]
    fn zero_steps_is_an_error() {
        let (kernel, quad) = setup(0.2, 0.1);
        assert!(matches!(
            propagate_correlated(&kernel, 0.0, 1.0, &quad, BlochVector::new(1.0, 0.0, 0.0), 0),
            Err(CorrelatedError::NoIntervals)
        ));
    }
}
