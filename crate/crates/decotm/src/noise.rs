//! Random-field ensembles: analytic moments, deterministic quadrature rules,
//! samplers, and the separable interval-to-interval kernel used by the
//! correlated solver.
//!
//! All ensembles are zero-mean by construction. Component moments are the
//! only statistics the perturbative oracles need, so they are tabulated in
//! closed form per family and cross-checked against the quadrature rules.

use crate::su2::FieldVector;
use rand::Rng;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("quadrature order must be at least 1")]
    InvalidOrder,
    #[error("discrete ensemble weight {0} is negative")]
    NegativeWeight(f64),
    #[error("discrete ensemble weights sum to {0}, not 1")]
    UnnormalizedWeights(f64),
    #[error("ensemble parameter {name} = {value} is not finite and nonnegative")]
    BadParameter { name: &'static str, value: f64 },
    #[error("kernel mixing weight r = {0} must lie in [0, 1]")]
    BadMixing(f64),
}

/// A zero-mean random transverse/longitudinal field drawn once per interval.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseDistribution {
    /// Fixed magnitude `b0`, direction uniform on the x-y circle.
    PlanarRing { b0: f64 },
    /// Fixed magnitude `b0`, direction uniform on the sphere.
    SphereShell { b0: f64 },
    /// Independent sign flips of the three fixed components.
    AxisFlip { bx: f64, by: f64, bz: f64 },
    /// A deterministic field (no randomness at all).
    Point { b: FieldVector },
    /// Finitely many atoms with probability weights.
    Discrete { atoms: Vec<(FieldVector, f64)> },
}

impl NoiseDistribution {
    /// In-plane field with unequal axis amplitudes: `(+-bx, +-by, 0)`.
    pub fn planar_anisotropic(bx: f64, by: f64) -> Self {
        NoiseDistribution::AxisFlip { bx, by, bz: 0.0 }
    }

    pub fn discrete(atoms: Vec<(FieldVector, f64)>) -> Result<Self, NoiseError> {
        let mut total = 0.0;
        for &(_, w) in &atoms {
            if w < 0.0 {
                return Err(NoiseError::NegativeWeight(w));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(NoiseError::UnnormalizedWeights(total));
        }
        Ok(NoiseDistribution::Discrete { atoms })
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let check = |name: &'static str, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(NoiseError::BadParameter { name, value })
            }
        };
        match self {
            NoiseDistribution::PlanarRing { b0 } => check("b0", *b0),
            NoiseDistribution::SphereShell { b0 } => check("b0", *b0),
            NoiseDistribution::AxisFlip { bx, by, bz } => {
                check("bx", *bx)?;
                check("by", *by)?;
                check("bz", *bz)
            }
            NoiseDistribution::Point { b } => check("|b|", b.norm()),
            NoiseDistribution::Discrete { atoms } => {
                let mut total = 0.0;
                for &(_, w) in atoms {
                    if w < 0.0 {
                        return Err(NoiseError::NegativeWeight(w));
                    }
                    total += w;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(NoiseError::UnnormalizedWeights(total));
                }
                Ok(())
            }
        }
    }
}

/// Second and fourth component moments of an ensemble (`bx2` is E[bx^2],
/// `bx2by2` is E[bx^2 by^2], and so on).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    pub bx2: f64,
    pub by2: f64,
    pub bz2: f64,
    pub bx4: f64,
    pub by4: f64,
    pub bz4: f64,
    pub bx2by2: f64,
    pub bx2bz2: f64,
    pub by2bz2: f64,
}

pub fn moments(dist: &NoiseDistribution) -> MomentSet {
    match dist {
        NoiseDistribution::PlanarRing { b0 } => {
            let b2 = b0 * b0;
            let b4 = b2 * b2;
            MomentSet {
                bx2: b2 / 2.0,
                by2: b2 / 2.0,
                bz2: 0.0,
                bx4: 3.0 * b4 / 8.0,
                by4: 3.0 * b4 / 8.0,
                bz4: 0.0,
                bx2by2: b4 / 8.0,
                bx2bz2: 0.0,
                by2bz2: 0.0,
            }
        }
        NoiseDistribution::SphereShell { b0 } => {
            let b2 = b0 * b0;
            let b4 = b2 * b2;
            MomentSet {
                bx2: b2 / 3.0,
                by2: b2 / 3.0,
                bz2: b2 / 3.0,
                bx4: b4 / 5.0,
                by4: b4 / 5.0,
                bz4: b4 / 5.0,
                bx2by2: b4 / 15.0,
                bx2bz2: b4 / 15.0,
                by2bz2: b4 / 15.0,
            }
        }
        NoiseDistribution::AxisFlip { bx, by, bz } => MomentSet {
            bx2: bx * bx,
            by2: by * by,
            bz2: bz * bz,
            bx4: bx.powi(4),
            by4: by.powi(4),
            bz4: bz.powi(4),
            bx2by2: bx * bx * by * by,
            bx2bz2: bx * bx * bz * bz,
            by2bz2: by * by * bz * bz,
        },
        NoiseDistribution::Point { b } => MomentSet {
            bx2: b.bx * b.bx,
            by2: b.by * b.by,
            bz2: b.bz * b.bz,
            bx4: b.bx.powi(4),
            by4: b.by.powi(4),
            bz4: b.bz.powi(4),
            bx2by2: b.bx * b.bx * b.by * b.by,
            bx2bz2: b.bx * b.bx * b.bz * b.bz,
            by2bz2: b.by * b.by * b.bz * b.bz,
        },
        NoiseDistribution::Discrete { atoms } => {
            let mut m = MomentSet {
                bx2: 0.0,
                by2: 0.0,
                bz2: 0.0,
                bx4: 0.0,
                by4: 0.0,
                bz4: 0.0,
                bx2by2: 0.0,
                bx2bz2: 0.0,
                by2bz2: 0.0,
            };
            for &(b, w) in atoms {
                accumulate_moments(&mut m, b, w);
            }
            m
        }
    }
}

fn accumulate_moments(m: &mut MomentSet, b: FieldVector, w: f64) {
    let (x2, y2, z2) = (b.bx * b.bx, b.by * b.by, b.bz * b.bz);
    m.bx2 += w * x2;
    m.by2 += w * y2;
    m.bz2 += w * z2;
    m.bx4 += w * x2 * x2;
    m.by4 += w * y2 * y2;
    m.bz4 += w * z2 * z2;
    m.bx2by2 += w * x2 * y2;
    m.bx2bz2 += w * x2 * z2;
    m.by2bz2 += w * y2 * z2;
}

/// Moments as a quadrature rule sees them; disagreement with `moments` means
/// the rule is too coarse for the ensemble (or outright wrong).
pub fn moments_from_rule(rule: &QuadratureRule) -> MomentSet {
    let mut m = MomentSet {
        bx2: 0.0,
        by2: 0.0,
        bz2: 0.0,
        bx4: 0.0,
        by4: 0.0,
        bz4: 0.0,
        bx2by2: 0.0,
        bx2bz2: 0.0,
        by2bz2: 0.0,
    };
    for &(b, w) in &rule.nodes {
        accumulate_moments(&mut m, b, w);
    }
    m
}

/// Deterministic averaging rule: nodes and probability weights
/// (nonnegative, summing to one).
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<(FieldVector, f64)>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn weight_sum(&self) -> f64 {
        self.nodes.iter().map(|&(_, w)| w).sum()
    }
}

/// Build the averaging rule for an ensemble.
///
/// Rings use `order` equally spaced azimuthal nodes (trigonometric
/// quadrature, exact for modes below the node count). Shells use
/// Gauss-Legendre in cos(theta) with `order` polar nodes times `2 * order`
/// azimuthal ones. Atomic ensembles ignore `order` and average exactly.
pub fn quadrature(dist: &NoiseDistribution, order: usize) -> Result<QuadratureRule, NoiseError> {
    if order < 1 {
        return Err(NoiseError::InvalidOrder);
    }
    dist.validate()?;
    let nodes = match dist {
        NoiseDistribution::PlanarRing { b0 } => {
            let w = 1.0 / order as f64;
            (0..order)
                .map(|k| {
                    let phi = TAU * k as f64 / order as f64;
                    (FieldVector::new(b0 * phi.cos(), b0 * phi.sin(), 0.0), w)
                })
                .collect()
        }
        NoiseDistribution::SphereShell { b0 } => {
            let polar = gauss_legendre(order);
            let n_phi = 2 * order;
            let w_phi = 1.0 / n_phi as f64;
            let mut nodes = Vec::with_capacity(order * n_phi);
            for &(u, wu) in &polar {
                let rho = (1.0 - u * u).max(0.0).sqrt();
                for k in 0..n_phi {
                    let phi = TAU * k as f64 / n_phi as f64;
                    nodes.push((
                        FieldVector::new(b0 * rho * phi.cos(), b0 * rho * phi.sin(), b0 * u),
                        0.5 * wu * w_phi,
                    ));
                }
            }
            nodes
        }
        NoiseDistribution::AxisFlip { bx, by, bz } => {
            // enumerate sign choices only over axes that are actually present
            let mut nodes = vec![(FieldVector::zero(), 1.0)];
            for (axis, amp) in [(0usize, *bx), (1, *by), (2, *bz)] {
                if amp == 0.0 {
                    continue;
                }
                let mut next = Vec::with_capacity(nodes.len() * 2);
                for &(b, w) in &nodes {
                    for sign in [1.0, -1.0] {
                        let mut b = b;
                        match axis {
                            0 => b.bx = sign * amp,
                            1 => b.by = sign * amp,
                            _ => b.bz = sign * amp,
                        }
                        next.push((b, w * 0.5));
                    }
                }
                nodes = next;
            }
            nodes
        }
        NoiseDistribution::Point { b } => vec![(*b, 1.0)],
        NoiseDistribution::Discrete { atoms } => atoms.clone(),
    };
    let rule = QuadratureRule { nodes, order };
    debug_assert!((rule.weight_sum() - 1.0).abs() < 1e-13);
    Ok(rule)
}

/// Draw one field from the ensemble.
pub fn sample<R: Rng + ?Sized>(dist: &NoiseDistribution, rng: &mut R) -> FieldVector {
    match dist {
        NoiseDistribution::PlanarRing { b0 } => {
            let phi = TAU * rng.random::<f64>();
            FieldVector::new(b0 * phi.cos(), b0 * phi.sin(), 0.0)
        }
        NoiseDistribution::SphereShell { b0 } => {
            // cos(theta) first, then azimuth; the order is frozen by tests
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let phi = TAU * rng.random::<f64>();
            let rho = (1.0 - u * u).max(0.0).sqrt();
            FieldVector::new(b0 * rho * phi.cos(), b0 * rho * phi.sin(), b0 * u)
        }
        NoiseDistribution::AxisFlip { bx, by, bz } => {
            let sx = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let sy = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let sz = if rng.random::<bool>() { 1.0 } else { -1.0 };
            FieldVector::new(sx * bx, sy * by, sz * bz)
        }
        NoiseDistribution::Point { b } => *b,
        NoiseDistribution::Discrete { atoms } => {
            let mut u = rng.random::<f64>();
            for &(b, w) in atoms {
                if u < w {
                    return b;
                }
                u -= w;
            }
            atoms.last().map(|&(b, _)| b).unwrap_or(FieldVector::zero())
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // Newton from the Chebyshev-like initial guess
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

const INV_CDF_RES: usize = 4096;

/// Separable interval-to-interval kernel for an in-plane field of fixed
/// magnitude: the joint density of consecutive angles factors through a
/// finite basis, `P(phi, phi') = sum_n p_n(phi) p_n(phi')`, so chain averages
/// become powers of a (basis x Bloch)-indexed block matrix.
///
/// The built-in kernel mixes a uniform next angle with a single-harmonic pull
/// toward the previous one: `P = (1 + r cos(phi - phi')) / (2 pi)`, giving
/// basis functions `1/sqrt(2 pi)`, `sqrt(r/(2 pi)) cos`, `sqrt(r/(2 pi)) sin`
/// and `E[cos(phi - phi')] = r/2`. Its row marginal is exactly uniform, so
/// the one-interval statistics remain the planar ring for every `r`.
#[derive(Clone, Debug)]
pub struct SeparableKernel {
    b0: f64,
    r: f64,
    /// inverse CDF of the angle increment, tabulated on a uniform u-grid
    inv_cdf: Vec<f64>,
}

impl SeparableKernel {
    pub fn sp_wave_mixture(b0: f64, r: f64) -> Result<Self, NoiseError> {
        if !(b0.is_finite() && b0 >= 0.0) {
            return Err(NoiseError::BadParameter {
                name: "b0",
                value: b0,
            });
        }
        if !(0.0..=1.0).contains(&r) || !r.is_finite() {
            return Err(NoiseError::BadMixing(r));
        }
        // F(d) = (d + r sin d) / (2 pi) is monotone on [0, 2 pi]; bisect it
        let mut inv_cdf = Vec::with_capacity(INV_CDF_RES + 1);
        for j in 0..=INV_CDF_RES {
            let u = j as f64 / INV_CDF_RES as f64;
            let (mut lo, mut hi) = (0.0f64, TAU);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (mid + r * mid.sin()) / TAU < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            inv_cdf.push(0.5 * (lo + hi));
        }
        Ok(SeparableKernel { b0, r, inv_cdf })
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn mixing(&self) -> f64 {
        self.r
    }

    /// Single-interval (marginal) statistics of the chain.
    pub fn marginal(&self) -> NoiseDistribution {
        NoiseDistribution::PlanarRing { b0: self.b0 }
    }

    pub fn basis_count(&self) -> usize {
        3
    }

    /// `p_n(phi)`, n = 0..basis_count().
    pub fn basis_value(&self, n: usize, phi: f64) -> f64 {
        match n {
            0 => 1.0 / TAU.sqrt(),
            1 => (self.r / TAU).sqrt() * phi.cos(),
            2 => (self.r / TAU).sqrt() * phi.sin(),
            _ => panic!("kernel basis index {n} out of range"),
        }
    }

    /// `P(phi, phi') = sum_n p_n(phi) p_n(phi')`.
    pub fn kernel_value(&self, phi: f64, phi_next: f64) -> f64 {
        (0..self.basis_count())
            .map(|n| self.basis_value(n, phi) * self.basis_value(n, phi_next))
            .sum()
    }

    pub fn field_at(&self, phi: f64) -> FieldVector {
        FieldVector::new(self.b0 * phi.cos(), self.b0 * phi.sin(), 0.0)
    }

    /// Draw the first field of a chain (from the marginal).
    pub fn marginal_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldVector {
        self.field_at(TAU * rng.random::<f64>())
    }

    /// Draw the next field given the previous one, through the tabulated
    /// inverse CDF of the angle increment (linear interpolation between
    /// knots).
    pub fn conditional_sample<R: Rng + ?Sized>(
        &self,
        prev: FieldVector,
        rng: &mut R,
    ) -> FieldVector {
        let u = rng.random::<f64>();
        let x = u * INV_CDF_RES as f64;
        let j = (x as usize).min(INV_CDF_RES - 1);
        let frac = x - j as f64;
        let delta = self.inv_cdf[j] + frac * (self.inv_cdf[j + 1] - self.inv_cdf[j]);
        let phi = prev.by.atan2(prev.bx) + delta;
        self.field_at(phi.rem_euclid(TAU))
    }
}
