//! Just enough dense linear algebra for this crate: closed-form eigenvalues
//! of 3x3 maps (with a QR fallback near degeneracies), a real Hessenberg-QR
//! eigenvalue solver for the small block matrices of the correlated problem,
//! and complex LU solves backing inverse-iteration eigenvectors.
//!
//! Everything here is plain `f64` on stack arrays or a flat `Vec`; the
//! matrices never exceed a few dozen rows.

use num_complex::Complex64;
use thiserror::Error;

pub type Mat3 = [[f64; 3]; 3];
pub type CMat3 = [[Complex64; 3]; 3];

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("QR iteration failed to converge")]
    NoConvergence,
}

pub fn mat3_identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mat3_vec(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    }
    out
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn mat3_det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn mat3_max_abs(a: &Mat3) -> f64 {
    let mut m = 0.0f64;
    for row in a {
        for &x in row {
            m = m.max(x.abs());
        }
    }
    m
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending (trigonometric form).
pub fn sym3_eigenvalues(m: &Mat3) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = *m;
    for i in 0..3 {
        b[i][i] -= q;
        for j in 0..3 {
            b[i][j] /= p;
        }
    }
    let r = (mat3_det(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3 * 2.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e3, e2, e1]
}

/// Largest singular value, via the symmetric eigenproblem of `m^T m`.
pub fn max_singular_value(m: &Mat3) -> f64 {
    let mtm = mat3_mul(&mat3_transpose(m), m);
    let eigs = sym3_eigenvalues(&mtm);
    eigs[2].max(0.0).sqrt()
}

/// Roots of `x^3 + a2 x^2 + a1 x + a0`.
#[derive(Clone, Copy, Debug)]
pub enum CubicRoots {
    ThreeReal([f64; 3]),
    /// One real root plus a conjugate pair; `pair` carries positive imaginary part.
    OnePair {
        real: f64,
        pair: Complex64,
    },
    /// Discriminant too close to zero to trust the closed form.
    Degenerate,
}

pub fn cubic_roots(a2: f64, a1: f64, a0: f64) -> CubicRoots {
    let shift = a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let scale = 1.0f64
        .max(a2.abs())
        .max(a1.abs().sqrt())
        .max(a0.abs().cbrt());
    if disc.abs() < 1e-10 * scale.powi(6) {
        return CubicRoots::Degenerate;
    }
    if disc < 0.0 {
        // three distinct real roots (p < 0 is implied)
        let rho = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = rho * (theta - 2.0 * std::f64::consts::FRAC_PI_3 * k as f64).cos() - shift;
        }
        CubicRoots::ThreeReal(out)
    } else {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        let real = u + v - shift;
        let re = -(u + v) / 2.0 - shift;
        let im = (3.0f64.sqrt() / 2.0 * (u - v)).abs();
        CubicRoots::OnePair {
            real,
            pair: Complex64::new(re, im),
        }
    }
}

pub fn cmat3_mul(a: &CMat3, b: &CMat3) -> CMat3 {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = [[zero; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn cmat3_vec(a: &CMat3, v: [Complex64; 3]) -> [Complex64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = [zero; 3];
    for i in 0..3 {
        out[i] = a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2];
    }
    out
}

/// Adjugate (transposed cofactor matrix): `m * adjugate(m) = det(m) * I`.
pub fn cmat3_adjugate(m: &CMat3) -> CMat3 {
    let minor =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    [
        [minor(1, 2, 1, 2), -minor(0, 2, 1, 2), minor(0, 1, 1, 2)],
        [-minor(1, 2, 0, 2), minor(0, 2, 0, 2), -minor(0, 1, 0, 2)],
        [minor(1, 2, 0, 1), -minor(0, 2, 0, 1), minor(0, 1, 0, 1)],
    ]
}

pub fn cmat3_det(m: &CMat3) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn cmat3_inv(m: &CMat3) -> Option<CMat3> {
    let det = cmat3_det(m);
    let mut scale = 0.0f64;
    for row in m {
        for &x in row {
            scale = scale.max(x.norm());
        }
    }
    if det.norm() < 1e-14 * scale.max(1e-300).powi(3) {
        return None;
    }
    let adj = cmat3_adjugate(m);
    let mut out = adj;
    for row in &mut out {
        for x in row.iter_mut() {
            *x /= det;
        }
    }
    Some(out)
}

/// `z^m` by repeated squaring; `0^0 = 1`.
pub fn cpow_u64(z: Complex64, m: u64) -> Complex64 {
    let mut result = Complex64::new(1.0, 0.0);
    let mut base = z;
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
        }
        base *= base;
        e >>= 1;
    }
    result
}

/// Small dense real matrix, row-major.
#[derive(Clone, Debug)]
pub struct DMat {
    n: usize,
    a: Vec<f64>,
}

impl DMat {
    pub fn zeros(n: usize) -> Self {
        DMat {
            n,
            a: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "DMat::from_rows wants a square matrix");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn mul(&self, other: &DMat) -> DMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.at(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.add_at(i, j, aik * other.at(k, j));
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Eigenvalues of a general real matrix: Hessenberg reduction by stabilized
/// elementary similarity transforms, then Francis double-shift QR.
pub fn dense_eigenvalues(m: &DMat) -> Result<Vec<Complex64>, LinalgError> {
    let mut h = m.clone();
    hessenberg(&mut h);
    hqr(&mut h)
}

fn hessenberg(a: &mut DMat) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    for m in 1..n - 1 {
        // pivot: largest entry in the column below the subdiagonal
        let mut x = 0.0f64;
        let mut piv = m;
        for i in m..n {
            if a.at(i, m - 1).abs() > x.abs() {
                x = a.at(i, m - 1);
                piv = i;
            }
        }
        if piv != m {
            for j in 0..n {
                let t = a.at(piv, j);
                a.set(piv, j, a.at(m, j));
                a.set(m, j, t);
            }
            for i in 0..n {
                let t = a.at(i, piv);
                a.set(i, piv, a.at(i, m));
                a.set(i, m, t);
            }
        }
        if x == 0.0 {
            continue;
        }
        for i in m + 1..n {
            let mut y = a.at(i, m - 1);
            if y == 0.0 {
                continue;
            }
            y /= x;
            a.set(i, m - 1, 0.0);
            for j in m..n {
                let v = a.at(i, j) - y * a.at(m, j);
                a.set(i, j, v);
            }
            for j in 0..n {
                let v = a.at(j, m) + y * a.at(j, i);
                a.set(j, m, v);
            }
        }
    }
}

fn hqr(a: &mut DMat) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.dim();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a.at(i, j).abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nnu = nn as usize;
            // smallest l with a negligible subdiagonal entry at (l, l-1)
            let mut l = 0usize;
            for ll in (1..=nnu).rev() {
                let mut s = a.at(ll - 1, ll - 1).abs() + a.at(ll, ll).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a.at(ll, ll - 1).abs() + s == s {
                    l = ll;
                    break;
                }
            }
            let x = a.at(nnu, nnu);
            if l == nnu {
                wr[nnu] = x + t;
                wi[nnu] = 0.0;
                nn -= 1;
                break;
            }
            let y = a.at(nnu - 1, nnu - 1);
            let w = a.at(nnu, nnu - 1) * a.at(nnu - 1, nnu);
            if l == nnu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nnu - 1] = x + z;
                    wr[nnu] = wr[nnu - 1];
                    if z != 0.0 {
                        wr[nnu] = x - w / z;
                    }
                    wi[nnu - 1] = 0.0;
                    wi[nnu] = 0.0;
                } else {
                    wr[nnu - 1] = x + p;
                    wr[nnu] = x + p;
                    wi[nnu - 1] = -z;
                    wi[nnu] = z;
                }
                nn -= 2;
                break;
            }
            if its == 30 {
                return Err(LinalgError::NoConvergence);
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nnu {
                    let v = a.at(i, i) - x;
                    a.set(i, i, v);
                }
                let s = a.at(nnu, nnu - 1).abs() + a.at(nnu - 1, nnu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            // two consecutive small subdiagonals
            let (mut p, mut q, mut r);
            let mut m = nnu - 2;
            loop {
                let z = a.at(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a.at(m + 1, m) + a.at(m, m + 1);
                q = a.at(m + 1, m + 1) - z - rr - ss;
                r = a.at(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a.at(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (a.at(m - 1, m - 1).abs() + z.abs() + a.at(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nnu {
                a.set(i, i - 2, 0.0);
                if i != m + 2 {
                    a.set(i, i - 3, 0.0);
                }
            }
            // double-shift QR sweep over rows l..=nn
            for k in m..nnu {
                if k != m {
                    p = a.at(k, k - 1);
                    q = a.at(k + 1, k - 1);
                    r = if k != nnu - 1 {
                        a.at(k + 2, k - 1)
                    } else {
                        0.0
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        let v = -a.at(k, k - 1);
                        a.set(k, k - 1, v);
                    }
                } else {
                    a.set(k, k - 1, -s * x);
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nnu {
                    let mut pp = a.at(k, j) + q * a.at(k + 1, j);
                    if k != nnu - 1 {
                        pp += r * a.at(k + 2, j);
                        let v = a.at(k + 2, j) - pp * z;
                        a.set(k + 2, j, v);
                    }
                    let v = a.at(k + 1, j) - pp * y;
                    a.set(k + 1, j, v);
                    let v = a.at(k, j) - pp * x;
                    a.set(k, j, v);
                }
                let mmin = nnu.min(k + 3);
                for i in l..=mmin {
                    let mut pp = x * a.at(i, k) + y * a.at(i, k + 1);
                    if k != nnu - 1 {
                        pp += z * a.at(i, k + 2);
                        let v = a.at(i, k + 2) - pp * r;
                        a.set(i, k + 2, v);
                    }
                    let v = a.at(i, k + 1) - pp * q;
                    a.set(i, k + 1, v);
                    let v = a.at(i, k) - pp;
                    a.set(i, k, v);
                }
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// Complex LU factorization with partial pivoting. Pivots below
/// `tiny` are bumped to `tiny` so the factorization stays usable on
/// (near-)singular shifts, which is exactly what inverse iteration wants.
struct CLu {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

impl CLu {
    fn factor(mut lu: Vec<Complex64>, n: usize, tiny: f64) -> Self {
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pmag = lu[k * n + k].norm();
            let mut prow = k;
            for i in k + 1..n {
                let m = lu[i * n + k].norm();
                if m > pmag {
                    pmag = m;
                    prow = i;
                }
            }
            if prow != k {
                for j in 0..n {
                    lu.swap(k * n + j, prow * n + j);
                }
                piv.swap(k, prow);
            }
            if lu[k * n + k].norm() < tiny {
                lu[k * n + k] = Complex64::new(tiny, 0.0);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in k + 1..n {
                    let sub = f * lu[k * n + j];
                    lu[i * n + j] -= sub;
                }
            }
        }
        CLu { n, lu, piv }
    }

    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for k in 0..i {
                let sub = self.lu[i * n + k] * x[k];
                x[i] -= sub;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let sub = self.lu[i * n + k] * x[k];
                x[i] -= sub;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Right eigenvector of `m` for (approximate) eigenvalue `lambda`, by inverse
/// iteration. Returns a unit vector with its largest component rotated to the
/// positive real axis, or `None` if the residual never gets small.
pub fn inverse_iteration(m: &DMat, lambda: Complex64) -> Option<Vec<Complex64>> {
    let n = m.dim();
    let scale = m.max_abs() + lambda.norm();
    let tiny = (scale.max(1e-30)) * 1e-15 * n as f64;
    let mut shifted = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            shifted[i * n + j] = Complex64::new(m.at(i, j), 0.0);
        }
        shifted[i * n + i] -= lambda;
    }
    let lu = CLu::factor(shifted, n, tiny);
    // deterministic start with no accidental symmetry
    let mut v: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(1.0 + 0.5 * (j as f64 * 0.7).sin(), 0.0))
        .collect();
    normalize(&mut v);
    for it in 0..16 {
        v = lu.solve(&v);
        normalize(&mut v);
        if it >= 1 && residual(m, lambda, &v) <= 1e-10 * scale {
            fix_phase(&mut v);
            return Some(v);
        }
    }
    if residual(m, lambda, &v) <= 1e-7 * scale {
        fix_phase(&mut v);
        return Some(v);
    }
    None
}

fn residual(m: &DMat, lambda: Complex64, v: &[Complex64]) -> f64 {
    let n = m.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut acc = -lambda * v[i];
        for j in 0..n {
            acc += m.at(i, j) * v[j];
        }
        worst = worst.max(acc.norm());
    }
    worst
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
}

fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut mag = 0.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > mag {
            mag = z.norm();
            best = i;
        }
    }
    if mag == 0.0 {
        return;
    }
    let phase = v[best] / mag;
    for z in v.iter_mut() {
        *z /= phase;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sort_complex(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn cubic_three_real() {
        // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        match cubic_roots(-6.0, 11.0, -6.0) {
            CubicRoots::ThreeReal(mut r) => {
                r.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert!((r[0] - 1.0).abs() < 1e-12);
                assert!((r[1] - 2.0).abs() < 1e-12);
                assert!((r[2] - 3.0).abs() < 1e-12);
            }
            other => panic!("expected three real roots, got {other:?}"),
        }
    }

    #[test]
    fn cubic_one_pair() {
        // (x-1)(x^2+1) = x^3 - x^2 + x - 1
        match cubic_roots(-1.0, 1.0, -1.0) {
            CubicRoots::OnePair { real, pair } => {
                assert!((real - 1.0).abs() < 1e-12);
                assert!(pair.re.abs() < 1e-12);
                assert!((pair.im - 1.0).abs() < 1e-12);
            }
            other => panic!("expected a conjugate pair, got {other:?}"),
        }
    }

    #[test]
    fn cubic_flags_double_root() {
        // (x-1)^2 (x-2) = x^3 - 4x^2 + 5x - 2
        assert!(matches!(
            cubic_roots(-4.0, 5.0, -2.0),
            CubicRoots::Degenerate
        ));
    }

    #[test]
    fn singular_value_of_rotation_is_one() {
        let th = 0.7f64;
        let rot = [
            [th.cos(), th.sin(), 0.0],
            [-th.sin(), th.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ];
        assert!((max_singular_value(&rot) - 1.0).abs() < 1e-12);
        let contraction = [[0.5, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 0.9]];
        assert!((max_singular_value(&contraction) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn adjugate_times_matrix_is_det() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let m = [
            [c(1.0, 0.2), c(0.3, -0.1), c(0.0, 0.5)],
            [c(-0.4, 0.0), c(2.0, 0.1), c(0.7, 0.0)],
            [c(0.2, 0.2), c(-0.3, 0.4), c(1.5, -0.6)],
        ];
        let adj = cmat3_adjugate(&m);
        let prod = cmat3_mul(&m, &adj);
        let det = cmat3_det(&m);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j {
                    det
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((prod[i][j] - want).norm() < 1e-12);
            }
        }
        let inv = cmat3_inv(&m).unwrap();
        let prod = cmat3_mul(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cpow_matches_repeated_multiplication() {
        let z = Complex64::new(0.93, 0.31);
        let mut direct = Complex64::new(1.0, 0.0);
        for m in 0..40u64 {
            assert!((cpow_u64(z, m) - direct).norm() < 1e-12 * direct.norm().max(1.0));
            direct *= z;
        }
    }

    #[test]
    fn dense_eigenvalues_diagonal_and_rotation() {
        let d = DMat::from_rows(&[
            vec![3.0, 0.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 2.0],
        ]);
        let eig = sort_complex(dense_eigenvalues(&d).unwrap());
        let want = [-1.0, 0.5, 2.0, 3.0];
        for (e, w) in eig.iter().zip(want) {
            assert!((e - Complex64::new(w, 0.0)).norm() < 1e-10);
        }

        let th = 1.1f64;
        let r = DMat::from_rows(&[
            vec![th.cos(), th.sin(), 0.0],
            vec![-th.sin(), th.cos(), 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let eig = dense_eigenvalues(&r).unwrap();
        let mut mags: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for m in mags {
            assert!((m - 1.0).abs() < 1e-10);
        }
        let max_im = eig.iter().map(|z| z.im).fold(f64::MIN, f64::max);
        assert!((max_im - th.sin()).abs() < 1e-10);
    }

    #[test]
    fn dense_eigenvalues_survive_similarity() {
        // known spectrum, scrambled by L . A . L^{-1} with unit-triangular L
        let lam = [2.0, -0.7, 0.3, 1.4, -1.1, 0.05];
        let n = lam.len();
        let mut a = DMat::zeros(n);
        for (i, &l) in lam.iter().enumerate() {
            a.set(i, i, l);
        }
        // L x = similarity; apply row ops then inverse column ops
        let mults = [
            (1usize, 0usize, 0.4),
            (2, 0, -0.3),
            (3, 1, 0.8),
            (4, 2, -0.6),
            (5, 0, 0.2),
            (5, 3, -0.9),
            (4, 1, 0.5),
        ];
        for &(i, j, c) in &mults {
            // A <- L_ij A L_ij^{-1} with L_ij = I + c e_i e_j^T
            for col in 0..n {
                let v = a.at(i, col) + c * a.at(j, col);
                a.set(i, col, v);
            }
            for row in 0..n {
                let v = a.at(row, j) - c * a.at(row, i);
                a.set(row, j, v);
            }
        }
        let eig = dense_eigenvalues(&a).unwrap();
        let mut re: Vec<f64> = eig.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = lam.to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, w) in re.iter().zip(want) {
            assert!((e - w).abs() < 1e-8, "eig {e} vs {w}");
        }
        for z in &eig {
            assert!(z.im.abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_iteration_recovers_eigenvector() {
        let m = DMat::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![0.0, 0.5, 1.0],
            vec![0.0, 0.0, -0.3],
        ]);
        let v = inverse_iteration(&m, Complex64::new(2.0, 0.0)).unwrap();
        // eigenvector of the triangular matrix for eigenvalue 2 is e_0
        assert!((v[0].norm() - 1.0).abs() < 1e-9);
        assert!(v[1].norm() < 1e-9);
        assert!(v[2].norm() < 1e-9);

        let th = 0.9f64;
        let rot = DMat::from_rows(&[vec![th.cos(), th.sin()], vec![-th.sin(), th.cos()]]);
        let lam = Complex64::new(th.cos(), th.sin());
        let v = inverse_iteration(&rot, lam).unwrap();
        let mut worst = 0.0f64;
        for i in 0..2 {
            let mut acc = -lam * v[i];
            for j in 0..2 {
                acc += rot.at(i, j) * v[j];
            }
            worst = worst.max(acc.norm());
        }
        assert!(worst < 1e-10);
    }
}
