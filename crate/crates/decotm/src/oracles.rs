//! Independent ground truth: brute-force Monte Carlo ensembles, perturbative
//! (Redfield) rates from the noise spectral density, and the small-tau series
//! for the relaxation rates. None of these share code with the
//! transfer-matrix solvers they check.

use crate::noise::{moments, sample, MomentSet, NoiseDistribution, SeparableKernel};
use crate::parallel::map_indexed;
use crate::su2::{rotate_bloch, su2_params, BlochVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Ensemble average of the Bloch vector with per-component standard errors.
#[derive(Clone, Copy, Debug)]
pub struct MonteCarloResult {
    pub mean: BlochVector,
    pub stderr: [f64; 3],
    pub n_traj: u64,
    pub seed: u64,
}

/// Trajectories per accumulation chunk. Chunks are summed internally in
/// trajectory order and merged in chunk order, so the result is bit-identical
/// for any worker count.
const CHUNK: u64 = 4096;

/// Running mean and sum of squared deviations per Bloch component
/// (Welford's update inside a chunk, pairwise merge across chunks). Centered
/// accumulation keeps zero-variance ensembles at exactly zero standard error.
#[derive(Clone, Copy)]
struct RunningStats {
    count: u64,
    mean: [f64; 3],
    m2: [f64; 3],
}

impl RunningStats {
    fn empty() -> Self {
        RunningStats {
            count: 0,
            mean: [0.0; 3],
            m2: [0.0; 3],
        }
    }

    fn push(&mut self, s: [f64; 3]) {
        self.count += 1;
        let n = self.count as f64;
        for i in 0..3 {
            let delta = s[i] - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (s[i] - self.mean[i]);
        }
    }

    fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..3 {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }
}

fn ensemble<F>(n_traj: u64, seed: u64, trajectory: F) -> MonteCarloResult
where
    F: Fn(&mut ChaCha8Rng) -> [f64; 3] + Sync + Send,
{
    assert!(n_traj >= 1, "ensemble needs at least one trajectory");
    let n_chunks = n_traj.div_ceil(CHUNK) as usize;
    let partials: Vec<RunningStats> = map_indexed(n_chunks, |chunk| {
        let lo = chunk as u64 * CHUNK;
        let hi = (lo + CHUNK).min(n_traj);
        let mut acc = RunningStats::empty();
        for idx in lo..hi {
            // one counter-mode substream per trajectory: reproducible
            // independent of scheduling
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx);
            acc.push(trajectory(&mut rng));
        }
        acc
    });
    let mut total = RunningStats::empty();
    for p in &partials {
        total.merge(p);
    }
    let mut stderr = [0.0; 3];
    if n_traj > 1 {
        let n = n_traj as f64;
        for i in 0..3 {
            stderr[i] = (total.m2[i].max(0.0) / (n - 1.0) / n).sqrt();
        }
    }
    MonteCarloResult {
        mean: BlochVector::from_array(total.mean),
        stderr,
        n_traj,
        seed,
    }
}

/// Simulate `n_traj` spins under i.i.d. interval fields and average.
pub fn monte_carlo_white(
    dist: &NoiseDistribution,
    b_ext: f64,
    tau: f64,
    m: u64,
    s0: BlochVector,
    n_traj: u64,
    seed: u64,
) -> MonteCarloResult {
    ensemble(n_traj, seed, |rng| {
        let mut s = s0.to_array();
        for _ in 0..m {
            let b = sample(dist, rng).with_static(b_ext);
            let (c, sv) = su2_params(b, tau);
            s = rotate_bloch(c, sv, s);
        }
        s
    })
}

/// Simulate spins whose interval fields form a Markov chain: the first angle
/// from the kernel's marginal, each later one from the conditional law.
pub fn monte_carlo_correlated(
    kernel: &SeparableKernel,
    b_ext: f64,
    tau: f64,
    m: u64,
    s0: BlochVector,
    n_traj: u64,
    seed: u64,
) -> MonteCarloResult {
    ensemble(n_traj, seed, |rng| {
        let mut s = s0.to_array();
        if m == 0 {
            return s;
        }
        let mut b = kernel.marginal_sample(rng);
        let (c, sv) = su2_params(b.with_static(b_ext), tau);
        s = rotate_bloch(c, sv, s);
        for _ in 1..m {
            b = kernel.conditional_sample(b, rng);
            let (c, sv) = su2_params(b.with_static(b_ext), tau);
            s = rotate_bloch(c, sv, s);
        }
        s
    })
}

/// Perturbation-theory rates and the spectral densities they came from.
#[derive(Clone, Copy, Debug)]
pub struct PerturbativeRates {
    pub t1_rate: f64,
    pub t2_rate: f64,
    pub k_xx_w0: f64,
    pub k_yy_w0: f64,
    pub k_zz_0: f64,
}

/// (sin x / x)^2, series-expanded near zero.
fn fejer(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 45.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Redfield rates for piecewise-constant noise.
///
/// Averaging the one-interval correlation over the interval gives the
/// triangular function `C_i(s) = mean(b_i^2) (1 - |s|/tau)` for `|s| < tau`,
/// whose transform is the Fejer kernel:
/// `k_ii(w) = 2 mean(b_i^2) tau (sin(w tau/2) / (w tau/2))^2`.
/// Then `1/T1 = k_xx(w0) + k_yy(w0)` at the splitting `w0 = 2 B0`, and
/// `1/T2 = 1/(2 T1) + k_zz(0)`.
pub fn redfield_rates(dist: &NoiseDistribution, b_ext: f64, tau: f64) -> PerturbativeRates {
    let mom = moments(dist);
    let w0 = 2.0 * b_ext;
    let k = |b2: f64, w: f64| 2.0 * b2 * tau * fejer(0.5 * w * tau);
    let k_xx_w0 = k(mom.bx2, w0);
    let k_yy_w0 = k(mom.by2, w0);
    let k_zz_0 = k(mom.bz2, 0.0);
    let t1_rate = k_xx_w0 + k_yy_w0;
    PerturbativeRates {
        t1_rate,
        t2_rate: 0.5 * t1_rate + k_zz_0,
        k_xx_w0,
        k_yy_w0,
        k_zz_0,
    }
}

/// Relaxation rates to third order in tau.
#[derive(Clone, Copy, Debug)]
pub struct SeriesRates {
    pub t1_rate: f64,
    pub t2_rate: f64,
}

/// The closed-form small-tau expansion of the exact rates; the static field
/// first enters at order tau^3.
pub fn series_rates(mom: &MomentSet, b_ext: f64, tau: f64) -> SeriesRates {
    let b02 = b_ext * b_ext;
    let bplus2 = mom.bx2 + mom.by2;
    let t1_rate = 2.0 * bplus2 * tau
        + (2.0 * bplus2 * bplus2
            - (2.0 * b02 * bplus2
                + 2.0 * mom.bx4
                + 2.0 * mom.by4
                + 2.0 * mom.bx2by2
                + mom.bx2bz2
                + mom.by2bz2)
                / 3.0)
            * tau.powi(3);
    let w2 = bplus2 + 2.0 * mom.bz2;
    let bplus2_bz2 = mom.bx2bz2 + mom.by2bz2;
    let t2_rate = w2 * tau
        + (w2 * w2 - b02 * bplus2 / 3.0
            + (mom.bx4 + mom.by4 + 2.0 * mom.bz4 + 2.0 * mom.bx2by2 + 3.0 * bplus2_bz2) / 3.0
            - 0.5 * (mom.bx2 - mom.by2) * (mom.bx2 - mom.by2))
            * tau.powi(3);
    SeriesRates { t1_rate, t2_rate }
}

/// Small-tau approximations of the map's eigenvalues.
#[derive(Clone, Copy, Debug)]
pub struct EigenvalueApprox {
    pub d_z: f64,
    /// The transverse pair; complex conjugates when the radicand
    /// `tau^2 B0^2 - tau^4 (mean bx^2 - mean by^2)^2 / 4` is positive, a real
    /// split pair when it is negative (overdamped branch).
    pub d_pair: [Complex64; 2],
}

pub fn eigenvalue_expansions(mom: &MomentSet, b_ext: f64, tau: f64) -> EigenvalueApprox {
    let t2 = tau * tau;
    let d_z = 1.0 - 2.0 * t2 * (mom.bx2 + mom.by2);
    let re = 1.0 - 2.0 * t2 * b_ext * b_ext - t2 * (mom.bx2 + mom.by2 + 2.0 * mom.bz2);
    let aniso = mom.bx2 - mom.by2;
    let radicand = t2 * b_ext * b_ext - 0.25 * t2 * t2 * aniso * aniso;
    let d_pair = if radicand >= 0.0 {
        let im = 2.0 * radicand.sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    } else {
        let sep = 2.0 * (-radicand).sqrt();
        [Complex64::new(re + sep, 0.0), Complex64::new(re - sep, 0.0)]
    };
    EigenvalueApprox { d_z, d_pair }
}
