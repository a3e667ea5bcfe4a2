//! Negativities, fidelity, purity and decay-curve analysis.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigs, ComplexMatrix, DensityMatrix, NUM_QUBITS};

/// Eigenvalues this close to zero are treated as round-off.
pub const NEGATIVITY_FLOOR: f64 = 1e-12;
/// Samples at or below this tripartite negativity are excluded from rate fits.
pub const FIT_THRESHOLD: f64 = 0.02;
pub const FIT_MIN_SAMPLES: usize = 10;

/// `2·max(0, -λ_min(ρ^{T_q}))`; the factor 2 puts the GHZ state at 1.
pub fn negativity(rho: &DensityMatrix, qubit: usize) -> Result<f64> {
    let pt = rho.partial_transpose(qubit)?;
    let lmin = hermitian_eigs(&pt)?.values[0];
    let n = 2.0 * (-lmin).max(0.0);
    Ok(if n < 2.0 * NEGATIVITY_FLOOR { 0.0 } else { n.min(1.0) })
}

pub fn negativities(rho: &DensityMatrix) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (q, n) in out.iter_mut().enumerate() {
        *n = negativity(rho, q + 1).expect("three-qubit state");
    }
    out
}

/// Geometric mean of the three one-versus-rest negativities.
pub fn tripartite_negativity(rho: &DensityMatrix) -> f64 {
    tripartite_from(&negativities(rho))
}

fn tripartite_from(n: &[f64; 3]) -> f64 {
    if n.iter().any(|&x| x <= 0.0) {
        0.0
    } else {
        (n[0] * n[1] * n[2]).cbrt()
    }
}

/// Eigenvalues this far below the largest one are roundoff; their square roots
/// (~1e-8) would otherwise leak into the fidelity.
fn spectral_floor(values: &[f64]) -> f64 {
    let top = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    64.0 * f64::EPSILON * top
}

fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigs(m)?;
    let floor = spectral_floor(&eig.values);
    Ok(eig.map_values(|x| if x > floor { x.sqrt() } else { 0.0 }))
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.dim(), |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()))
}

/// Uhlmann–Jozsa fidelity `(Tr √(√a b √a))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let sa = sqrt_psd(a.matrix())?;
    let inner = hermitian_part(&(&(&sa * b.matrix()) * &sa));
    let eig = hermitian_eigs(&inner)?;
    let floor = spectral_floor(&eig.values);
    let tr: f64 = eig.values.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().trace_product(rho.matrix()).re
}

/// Metrics of a state series sampled on a time grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
    pub n3: Vec<f64>,
    pub n_tri: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub purity: Vec<f64>,
}

impl DecayCurve {
    /// Fidelities are taken against `reference`.
    pub fn from_states(times: &[f64], states: &[DensityMatrix], reference: &DensityMatrix) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: states.len() });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("times must be strictly increasing".into()));
        }
        let mut c = DecayCurve { times: times.to_vec(), ..Default::default() };
        for rho in states {
            let n = negativities(rho);
            c.n1.push(n[0]);
            c.n2.push(n[1]);
            c.n3.push(n[2]);
            c.n_tri.push(tripartite_from(&n));
            c.fidelity.push(fidelity(reference, rho)?);
            c.purity.push(purity(rho).clamp(0.0, 1.0));
        }
        Ok(c)
    }

    /// Curve holding only times and tripartite negativity.
    pub fn from_tripartite(times: Vec<f64>, n_tri: Vec<f64>) -> Self {
        DecayCurve { times, n_tri, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Per-qubit negativity columns as an array indexed by qubit - 1.
    pub fn per_qubit(&self) -> [&[f64]; NUM_QUBITS] {
        [&self.n1, &self.n2, &self.n3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    /// Root-mean-square residual of `N - A·exp(-γt)` over the fitted samples.
    pub residual: f64,
    pub samples: usize,
}

fn fit_window(curve: &DecayCurve) -> Result<(Vec<f64>, Vec<f64>)> {
    let (t, y): (Vec<f64>, Vec<f64>) = curve
        .times
        .iter()
        .zip(&curve.n_tri)
        .filter(|(_, &n)| n > FIT_THRESHOLD)
        .map(|(&t, &n)| (t, n))
        .unzip();
    if t.len() < FIT_MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: FIT_MIN_SAMPLES, found: t.len() });
    }
    Ok((t, y))
}

fn rms(t: &[f64], y: &[f64], a: f64, g: f64) -> f64 {
    let ss: f64 = t.iter().zip(y).map(|(&t, &y)| (y - a * (-g * t).exp()).powi(2)).sum();
    (ss / t.len() as f64).sqrt()
}

/// Straight-line fit of `ln N` against `t`.
pub fn fit_decay_rate_log(curve: &DecayCurve) -> Result<DecayFit> {
    let (t, y) = fit_window(curve)?;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples { needed: 2, found: 1 });
    }
    let slope = sxy / sxx;
    let amp = (my - slope * mt).exp();
    Ok(DecayFit { rate: -slope, amplitude: amp, residual: rms(&t, &y, amp, -slope), samples: t.len() })
}

/// Least-squares fit of `N(t) ≈ A·exp(-γt)` on the samples above
/// [`FIT_THRESHOLD`], minimizing residuals of `N` itself. The log-space line
/// seeds a damped Gauss–Newton iteration.
pub fn fit_decay_rate(curve: &DecayCurve) -> Result<DecayFit> {
    let (t, y) = fit_window(curve)?;
    let seed = fit_decay_rate_log(curve)?;
    let (mut a, mut g) = (seed.amplitude, seed.rate);
    let mut cost = rms(&t, &y, a, g);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        // Normal equations of the 2-parameter problem.
        let (mut jaa, mut jag, mut jgg, mut ra, mut rg) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(&y) {
            let e = (-g * ti).exp();
            let r = yi - a * e;
            let da = e;
            let dg = -a * ti * e;
            jaa += da * da;
            jag += da * dg;
            jgg += dg * dg;
            ra += da * r;
            rg += dg * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (m11, m22) = (jaa * (1.0 + lambda), jgg * (1.0 + lambda));
            let det = m11 * m22 - jag * jag;
            if det == 0.0 {
                break;
            }
            let step_a = (m22 * ra - jag * rg) / det;
            let step_g = (m11 * rg - jag * ra) / det;
            let (na, ng) = (a + step_a, g + step_g);
            let nc = rms(&t, &y, na, ng);
            if nc <= cost {
                let done = (step_a.abs() <= 1e-14 * a.abs().max(1.0)) && (step_g.abs() <= 1e-14 * g.abs().max(1.0));
                a = na;
                g = ng;
                cost = nc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(DecayFit { rate: g, amplitude: a, residual: cost, samples: t.len() })
}

/// First time the tripartite negativity falls to `threshold` or below,
/// linearly interpolated between the bracketing samples.
pub fn disentanglement_time(curve: &DecayCurve, threshold: f64) -> Result<f64> {
    let (t, n) = (&curve.times, &curve.n_tri);
    match n.first() {
        None => return Err(Error::InsufficientSamples { needed: 1, found: 0 }),
        Some(&n0) if n0 <= threshold => return Err(Error::NotEntangled),
        _ => {}
    }
    for k in 1..n.len() {
        if n[k] <= threshold {
            let f = (n[k - 1] - threshold) / (n[k - 1] - n[k]);
            return Ok(t[k - 1] + f * (t[k] - t[k - 1]));
        }
    }
    Err(Error::NoCrossing { threshold })
}
