//! One-interval SU(2) propagators and their adjoint action on Bloch vectors.
//!
//! For a constant field B over an interval t the propagator is
//! `U = c + i (s . sigma)` with `c = cos(|B| t)` and `s = Bhat sin(|B| t)`.
//! Conjugating the Pauli decomposition of the density matrix by `U` rotates
//! the Bloch vector by the 3x3 matrix written out in `adjoint_rotation`; the
//! matrix-free form in `rotate_bloch` is what the Monte Carlo loops use.

use crate::linalg::Mat3;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldVector {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl FieldVector {
    pub fn new(bx: f64, by: f64, bz: f64) -> Self {
        FieldVector { bx, by, bz }
    }

    pub fn zero() -> Self {
        FieldVector::new(0.0, 0.0, 0.0)
    }

    pub fn norm(&self) -> f64 {
        (self.bx * self.bx + self.by * self.by + self.bz * self.bz).sqrt()
    }

    /// The total field seen by the qubit: this random draw plus a static
    /// longitudinal field of magnitude `b_ext`.
    pub fn with_static(&self, b_ext: f64) -> Self {
        FieldVector::new(self.bx, self.by, self.bz + b_ext)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochVector {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Self {
        BlochVector { sx, sy, sz }
    }

    pub fn norm(&self) -> f64 {
        (self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.sx, self.sy, self.sz]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        BlochVector::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum Su2Error {
    #[error("Bloch vector norm {0} lies outside the unit ball")]
    UnphysicalState(f64),
}

/// `(c, s)` of the propagator `U = c + i (s . sigma)` for field `b` over
/// `duration`. `c^2 + |s|^2 = 1`; a zero field gives the identity `(1, 0)`.
/// The rotation angle argument switches to a series below 1e-6 so the
/// direction of a vanishing field never produces 0/0.
pub fn su2_params(b: FieldVector, duration: f64) -> (f64, [f64; 3]) {
    let mag = b.norm();
    let arg = mag * duration;
    if mag == 0.0 {
        return (1.0, [0.0, 0.0, 0.0]);
    }
    let c = arg.cos();
    // sin(|B| t) / |B| = t * sinc(arg)
    let k = if arg.abs() < 1e-6 {
        duration * (1.0 - arg * arg / 6.0)
    } else {
        arg.sin() / mag
    };
    (c, [b.bx * k, b.by * k, b.bz * k])
}

/// Apply the adjoint rotation defined by `(c, s)` to a Bloch vector:
/// `v' = (c^2 - |s|^2) v + 2 (s . v) s - 2 c (s x v)`.
#[inline]
pub fn rotate_bloch(c: f64, s: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    let s2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    let cc = c * c - s2;
    let sv = s[0] * v[0] + s[1] * v[1] + s[2] * v[2];
    let cross = [
        s[1] * v[2] - s[2] * v[1],
        s[2] * v[0] - s[0] * v[2],
        s[0] * v[1] - s[1] * v[0],
    ];
    [
        cc * v[0] + 2.0 * sv * s[0] - 2.0 * c * cross[0],
        cc * v[1] + 2.0 * sv * s[1] - 2.0 * c * cross[1],
        cc * v[2] + 2.0 * sv * s[2] - 2.0 * c * cross[2],
    ]
}

/// Proper rotation of Bloch space (orthogonal, determinant +1).
#[derive(Clone, Copy, Debug)]
pub struct Rotation3(pub Mat3);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(crate::linalg::mat3_identity())
    }

    pub fn apply(&self, s: BlochVector) -> BlochVector {
        BlochVector::from_array(crate::linalg::mat3_vec(&self.0, s.to_array()))
    }

    /// `self` after `other`: the composed matrix `self.0 * other.0`.
    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(crate::linalg::mat3_mul(&self.0, &other.0))
    }

    pub fn transpose(&self) -> Rotation3 {
        Rotation3(crate::linalg::mat3_transpose(&self.0))
    }
}

/// The 3x3 adjoint rotation for field `b` over `duration`.
///
/// With only the static field (b along +z, magnitude B), the first row reads
/// `(cos 2Bt, sin 2Bt, 0)`: transverse components precess at 2B and the z
/// component is untouched.
pub fn adjoint_rotation(b: FieldVector, duration: f64) -> Rotation3 {
    let (c, s) = su2_params(b, duration);
    let cc = c * c - (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
    Rotation3([
        [
            cc + 2.0 * s[0] * s[0],
            2.0 * s[0] * s[1] + 2.0 * c * s[2],
            2.0 * s[0] * s[2] - 2.0 * c * s[1],
        ],
        [
            2.0 * s[0] * s[1] - 2.0 * c * s[2],
            cc + 2.0 * s[1] * s[1],
            2.0 * s[1] * s[2] + 2.0 * c * s[0],
        ],
        [
            2.0 * s[0] * s[2] + 2.0 * c * s[1],
            2.0 * s[1] * s[2] - 2.0 * c * s[0],
            cc + 2.0 * s[2] * s[2],
        ],
    ])
}

/// Density matrix `(1 + s . sigma) / 2` of a Bloch vector.
pub fn density_from_bloch(s: BlochVector) -> [[Complex64; 2]; 2] {
    let c = Complex64::new;
    [
        [c((1.0 + s.sz) / 2.0, 0.0), c(s.sx / 2.0, -s.sy / 2.0)],
        [c(s.sx / 2.0, s.sy / 2.0), c((1.0 - s.sz) / 2.0, 0.0)],
    ]
}

/// Bloch vector of a density matrix (the Hermitian part of it, strictly).
pub fn bloch_from_density(rho: &[[Complex64; 2]; 2]) -> BlochVector {
    BlochVector::new(
        2.0 * rho[1][0].re,
        2.0 * rho[1][0].im,
        rho[0][0].re - rho[1][1].re,
    )
}

/// Round-trip a Bloch vector through its density matrix. Vectors outside the
/// unit ball (beyond a 1e-9 tolerance) do not describe a qubit state and are
/// rejected.
pub fn bloch_roundtrip(s: BlochVector) -> Result<BlochVector, Su2Error> {
    let norm = s.norm();
    if norm > 1.0 + 1e-9 {
        return Err(Su2Error::UnphysicalState(norm));
    }
    Ok(bloch_from_density(&density_from_bloch(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat3_det, mat3_mul, mat3_transpose};
    use proptest::prelude::*;

    /// 2x2 oracle: conjugate the density matrix by `U = c + i s.sigma`
    /// explicitly and read the Bloch vector back off.
    fn rotate_via_conjugation(b: FieldVector, t: f64, s0: BlochVector) -> BlochVector {
        let (c, s) = su2_params(b, t);
        let cc = Complex64::new;
        let u = [
            [cc(c, s[2]), cc(s[1], s[0])],
            [cc(-s[1], s[0]), cc(c, -s[2])],
        ];
        let udag = [
            [u[0][0].conj(), u[1][0].conj()],
            [u[0][1].conj(), u[1][1].conj()],
        ];
        let rho = density_from_bloch(s0);
        let mut tmp = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    tmp[i][j] += u[i][k] * rho[k][j];
                }
            }
        }
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += tmp[i][k] * udag[k][j];
                }
            }
        }
        bloch_from_density(&out)
    }

    #[test]
    fn zero_field_is_identity() {
        let (c, s) = su2_params(FieldVector::zero(), 2.3);
        assert_eq!(c, 1.0);
        assert_eq!(s, [0.0, 0.0, 0.0]);
        let r = adjoint_rotation(FieldVector::zero(), 2.3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(r.0[i][j], want);
            }
        }
    }

    #[test]
    fn static_field_precesses_at_twice_the_field() {
        let b0 = 0.37;
        let tau = 1.9;
        let r = adjoint_rotation(FieldVector::new(0.0, 0.0, b0), tau);
        assert!((r.0[0][0] - (2.0 * b0 * tau).cos()).abs() < 1e-12);
        assert!((r.0[0][1] - (2.0 * b0 * tau).sin()).abs() < 1e-12);
        assert!((r.0[2][2] - 1.0).abs() < 1e-12);
        assert!(r.0[0][2].abs() < 1e-12 && r.0[2][0].abs() < 1e-12);
    }

    #[test]
    fn series_branch_joins_smoothly() {
        // straddle the 1e-6 switch on the rotation angle
        let t = 1.0;
        for mag in [9.9e-7, 1.01e-6] {
            let b = FieldVector::new(mag / 2.0, mag / 3.0, mag * 0.74);
            let scale = mag / b.norm();
            let b = FieldVector::new(b.bx * scale, b.by * scale, b.bz * scale);
            let (c, s) = su2_params(b, t);
            let unit = c * c + s.iter().map(|x| x * x).sum::<f64>();
            assert!((unit - 1.0).abs() < 1e-12);
            assert!((s[2] / b.bz - t).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_accepts_states_and_rejects_excess_norm() {
        let s = BlochVector::new(0.3, -0.4, 0.5);
        let back = bloch_roundtrip(s).unwrap();
        assert!((back.sx - s.sx).abs() < 1e-15);
        assert!((back.sy - s.sy).abs() < 1e-15);
        assert!((back.sz - s.sz).abs() < 1e-15);
        bloch_roundtrip(BlochVector::new(1.0 - 1e-12, 0.0, 0.0)).unwrap();

        let too_big = BlochVector::new(1.0 + 2e-9, 0.0, 0.0);
        assert!(matches!(
            bloch_roundtrip(too_big),
            Err(Su2Error::UnphysicalState(_))
        ));
    }

    fn field_strategy() -> impl Strategy<Value = (FieldVector, f64)> {
        (
            -10.0f64..10.0,
            -10.0f64..10.0,
            -10.0f64..10.0,
            0.0f64..5.0,
            // exercise tiny and large magnitudes too
            prop_oneof![Just(1.0f64), Just(1e-8), Just(1e3)],
        )
            .prop_map(|(x, y, z, t, scale)| (FieldVector::new(x * scale, y * scale, z * scale), t))
    }

    proptest! {
        #[test]
        fn unitarity((b, t) in field_strategy()) {
            let (c, s) = su2_params(b, t);
            let unit = c * c + s.iter().map(|x| x * x).sum::<f64>();
            prop_assert!((unit - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rotations_are_proper((b, t) in field_strategy()) {
            let r = adjoint_rotation(b, t);
            let rtr = mat3_mul(&mat3_transpose(&r.0), &r.0);
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((rtr[i][j] - want).abs() < 1e-12);
                }
            }
            prop_assert!((mat3_det(&r.0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn same_field_rotations_compose((b, t) in field_strategy(), t2 in 0.0f64..5.0) {
            let whole = adjoint_rotation(b, t + t2);
            let split = adjoint_rotation(b, t2).compose(&adjoint_rotation(b, t));
            // the two routes round the total angle differently, so the
            // comparison degrades with one ulp of the accumulated phase
            let tol = 1e-12 * (1.0 + b.norm() * (t + t2));
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((whole.0[i][j] - split.0[i][j]).abs() < tol);
                }
            }
        }

        #[test]
        fn adjoint_matches_conjugation(
            (b, t) in field_strategy(),
            sx in -0.57f64..0.57,
            sy in -0.57f64..0.57,
            sz in -0.57f64..0.57,
        ) {
            let s0 = BlochVector::new(sx, sy, sz);
            let via_matrix = adjoint_rotation(b, t).apply(s0);
            let via_su2 = rotate_via_conjugation(b, t, s0);
            prop_assert!((via_matrix.sx - via_su2.sx).abs() < 1e-12);
            prop_assert!((via_matrix.sy - via_su2.sy).abs() < 1e-12);
            prop_assert!((via_matrix.sz - via_su2.sz).abs() < 1e-12);
        }

        #[test]
        fn matrix_free_rotation_matches_matrix((b, t) in field_strategy()) {
            let (c, s) = su2_params(b, t);
            let v = [0.3, -0.7, 0.55];
            let direct = rotate_bloch(c, s, v);
            let via_matrix = adjoint_rotation(b, t).apply(BlochVector::from_array(v));
            prop_assert!((direct[0] - via_matrix.sx).abs() < 1e-13);
            prop_assert!((direct[1] - via_matrix.sy).abs() < 1e-13);
            prop_assert!((direct[2] - via_matrix.sz).abs() < 1e-13);
        }
    }
}
