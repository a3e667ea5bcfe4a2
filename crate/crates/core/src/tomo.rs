//! Seven-setting readout simulation and maximum-likelihood reconstruction.
//!
//! Each setting rotates the state with spin-selective `π/2` pulses and then
//! reads 24 line-resolved transverse signals: for every qubit `i`, both
//! quadratures `σx`, `σy` of that qubit times each computational projector
//! of the other two qubits. Observable index `k` decodes as
//! `qubit = k / 8 + 1`, `quadrature = (k / 4) % 2` (0 = x, 1 = y) and
//! `k % 4` = the two-bit state of the remaining qubits in ascending order.
//! Together the seven settings determine every traceless component of an
//! arbitrary three-qubit state.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{kron, pauli_x, pauli_y, ComplexMatrix, DensityMatrix, C64, DIM, NUM_QUBITS, ZERO};
use crate::measures::fidelity;
use crate::states::rotation_2x2;

pub const SETTING_LABELS: [&str; 7] = ["III", "IIY", "IYY", "YII", "XYX", "XXY", "XXX"];
pub const OBSERVABLES_PER_SETTING: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutSetting {
    pub label: String,
    pub unitary: ComplexMatrix,
}

impl ReadoutSetting {
    pub fn new(label: &str) -> Result<Self> {
        let upper = label.trim().to_ascii_uppercase();
        if !SETTING_LABELS.contains(&upper.as_str()) {
            return Err(Error::InvalidParameter(format!("unknown readout setting '{label}'")));
        }
        let factors: Vec<ComplexMatrix> = upper
            .chars()
            .map(|c| match c {
                'X' => rotation_2x2(FRAC_PI_2, 0.0),
                'Y' => rotation_2x2(FRAC_PI_2, FRAC_PI_2),
                _ => ComplexMatrix::identity(2),
            })
            .collect();
        let unitary = kron(&kron(&factors[0], &factors[1]), &factors[2]);
        Ok(Self { label: upper, unitary })
    }

    pub fn all() -> Vec<Self> {
        SETTING_LABELS.iter().map(|l| Self::new(l).expect("fixed label")).collect()
    }
}

/// The 24 detection operators, in index order.
pub fn observables() -> Vec<ComplexMatrix> {
    let proj = [
        ComplexMatrix::from_real_diagonal(&[1.0, 0.0]),
        ComplexMatrix::from_real_diagonal(&[0.0, 1.0]),
    ];
    let quads = [pauli_x(), pauli_y()];
    let mut out = Vec::with_capacity(OBSERVABLES_PER_SETTING);
    for q in 0..NUM_QUBITS {
        let others: Vec<usize> = (0..NUM_QUBITS).filter(|&o| o != q).collect();
        for quad in &quads {
            for cfg in 0..4 {
                let mut f: Vec<&ComplexMatrix> = vec![quad; NUM_QUBITS];
                f[others[0]] = &proj[cfg >> 1];
                f[others[1]] = &proj[cfg & 1];
                out.push(kron(&kron(f[0], f[1]), f[2]));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomoRecord {
    pub setting: String,
    pub values: Vec<f64>,
    pub noise_sigma: f64,
}

/// Expectation values after the setting's rotation, plus Gaussian noise.
pub fn simulate_readout(rho: &DensityMatrix, setting: &ReadoutSetting, noise_sigma: f64, seed: u64) -> Result<TomoRecord> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma {noise_sigma} must be non-negative")));
    }
    let rotated = rho.evolve_unitary(&setting.unitary);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).expect("finite sigma");
    let values = observables()
        .iter()
        .map(|o| {
            let v = rotated.matrix().trace_product(o).re;
            if noise_sigma > 0.0 {
                v + normal.sample(&mut rng)
            } else {
                v
            }
        })
        .collect();
    Ok(TomoRecord { setting: setting.label.clone(), values, noise_sigma })
}

/// Records for all seven settings; setting `i` uses seed `seed + i`.
pub fn simulate_all(rho: &DensityMatrix, noise_sigma: f64, seed: u64) -> Result<Vec<TomoRecord>> {
    ReadoutSetting::all()
        .iter()
        .enumerate()
        .map(|(i, s)| simulate_readout(rho, s, noise_sigma, seed.wrapping_add(i as u64)))
        .collect()
}

pub const MAX_ITERATIONS: usize = 10_000;
pub const GRADIENT_TOL: f64 = 1e-8;
/// Beyond the iteration cap, a gradient above this is reported as failure.
pub const STALL_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct MleReport {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted step, starting with the initial point.
    pub log_likelihood: Vec<f64>,
}

pub fn mle_reconstruct(records: &[TomoRecord]) -> Result<DensityMatrix> {
    Ok(mle_reconstruct_detailed(records)?.rho)
}

const NPARAM: usize = DIM * DIM;

/// Real coordinates of a Hermitian matrix, scaled so that the plain dot
/// product of two packed matrices equals `Tr(AB)`.
fn pack(m: &ComplexMatrix) -> [f64; NPARAM] {
    let mut v = [0.0; NPARAM];
    let mut k = DIM;
    for i in 0..DIM {
        v[i] = m[(i, i)].re;
        for j in i + 1..DIM {
            let z = m[(i, j)] * std::f64::consts::SQRT_2;
            v[k] = z.re;
            v[k + 1] = z.im;
            k += 2;
        }
    }
    v
}

fn unpack(v: &[f64; NPARAM]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(DIM);
    let mut k = DIM;
    for i in 0..DIM {
        m[(i, i)] = C64::new(v[i], 0.0);
        for j in i + 1..DIM {
            let z = C64::new(v[k], v[k + 1]) * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

fn dot_packed(a: &[f64; NPARAM], b: &[f64; NPARAM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Problem {
    /// Heisenberg-picture observables `U† O U`, packed.
    ops: Vec<[f64; NPARAM]>,
    data: Vec<f64>,
}

impl Problem {
    fn new(records: &[TomoRecord]) -> Result<Self> {
        let missing: Vec<String> = SETTING_LABELS
            .iter()
            .filter(|l| !records.iter().any(|r| r.setting.eq_ignore_ascii_case(l)))
            .map(|l| l.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingSettings(missing));
        }
        let obs = observables();
        let mut ops = Vec::new();
        let mut data = Vec::new();
        for r in records {
            let s = ReadoutSetting::new(&r.setting)?;
            if r.values.len() != OBSERVABLES_PER_SETTING {
                return Err(Error::DimensionMismatch { expected: OBSERVABLES_PER_SETTING, found: r.values.len() });
            }
            if r.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite value in setting {}", r.setting)));
            }
            let ud = s.unitary.adjoint();
            for (o, &v) in obs.iter().zip(&r.values) {
                ops.push(pack(&o.conjugated_by(&ud)));
                data.push(v);
            }
        }
        Ok(Self { ops, data })
    }

    fn rho(t: &ComplexMatrix) -> (ComplexMatrix, f64) {
        let m = &t.adjoint() * t;
        let n = m.trace().re;
        (m.scale_real(1.0 / n), n)
    }

    fn log_likelihood(&self, rho: &ComplexMatrix) -> f64 {
        let r = pack(rho);
        -0.5 * self.ops.iter().zip(&self.data).map(|(a, &m)| (m - dot_packed(a, &r)).powi(2)).sum::<f64>()
    }

    /// Log-likelihood and its gradient with respect to the free entries of
    /// `T` (lower triangle, real diagonal), packed as a matrix.
    fn evaluate(&self, t: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let (rho, n) = Self::rho(t);
        let r = pack(&rho);
        let mut gv = [0.0; NPARAM];
        let mut ll = 0.0;
        for (a, &m) in self.ops.iter().zip(&self.data) {
            let res = m - dot_packed(a, &r);
            ll -= 0.5 * res * res;
            for (x, y) in gv.iter_mut().zip(a) {
                *x += y * res;
            }
        }
        let mut g = unpack(&gv);
        let shift = dot_packed(&r, &gv);
        for i in 0..DIM {
            g[(i, i)] -= shift;
        }
        let m = (&g * &t.adjoint()).scale_real(2.0 / n);
        let grad = ComplexMatrix::from_fn(DIM, |i, j| {
            if j > i {
                ZERO
            } else if i == j {
                C64::new(m[(j, i)].re, 0.0)
            } else {
                m[(j, i)].conj()
            }
        });
        (ll, grad)
    }
}

fn dot(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.entries().iter().zip(b.entries()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Gradient ascent on `T` with Barzilai–Borwein steps and Armijo
/// backtracking, so the likelihood never decreases.
pub fn mle_reconstruct_detailed(records: &[TomoRecord]) -> Result<MleReport> {
    let p = Problem::new(records)?;
    let mut t = ComplexMatrix::identity(DIM).scale_real(1.0 / (DIM as f64).sqrt());
    let (mut ll, mut g) = p.evaluate(&t);
    let mut trace = vec![ll];
    let mut alpha = 1.0;
    let mut iterations = 0;
    let mut gnorm = g.frobenius_norm();

    while gnorm >= GRADIENT_TOL && iterations < MAX_ITERATIONS {
        iterations += 1;
        let g2 = gnorm * gnorm;
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &t + &g.scale_real(step);
            let (cll, cg) = p.evaluate(&cand);
            if cll >= ll + 1e-4 * step * g2 {
                accepted = Some((cand, cll, cg));
                break;
            }
            step *= 0.5;
        }
        let Some((nt, nll, ng)) = accepted else {
            break;
        };
        let s = &nt - &t;
        let y = &g - &ng;
        let sy = dot(&s, &y);
        alpha = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-10, 1e10) } else { (step * 2.0).min(1e10) };
        t = nt;
        ll = nll;
        g = ng;
        gnorm = g.frobenius_norm();
        trace.push(ll);
    }

    if gnorm >= STALL_TOL {
        return Err(Error::NonConvergence { gradient_norm: gnorm });
    }
    let (rho, _) = Problem::rho(&t);
    let rho = DensityMatrix::new(ComplexMatrix::from_fn(DIM, |r, c| 0.5 * (rho[(r, c)] + rho[(c, r)].conj())))?;
    debug_assert!((p.log_likelihood(rho.matrix()) - ll).abs() < 1e-9);
    Ok(MleReport { rho, iterations, gradient_norm: gnorm, log_likelihood: trace })
}

/// Terminal step of the pipeline: fidelity of the estimate with the reference.
pub fn fidelity_report(rho_est: &DensityMatrix, rho_ref: &DensityMatrix) -> Result<f64> {
    fidelity(rho_est, rho_ref)
}

/// Text form: one `setting,observable_index,value` line per value.
pub fn write_records(records: &[TomoRecord]) -> String {
    let mut out = String::from("setting,observable_index,value\n");
    for r in records {
        for (k, v) in r.values.iter().enumerate() {
            out.push_str(&format!("{},{},{:.16e}\n", r.setting, k, v));
        }
    }
    out
}

/// Parses the text form. Every setting present must list all 24 indices
/// exactly once. The noise width is not stored and reads back as 0.
pub fn parse_records(text: &str) -> Result<Vec<TomoRecord>> {
    let mut by_setting: BTreeMap<usize, (String, Vec<Option<f64>>)> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() || body.starts_with("setting,") {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let f: Vec<&str> = body.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", f.len())));
        }
        let label = f[0].to_ascii_uppercase();
        if !SETTING_LABELS.contains(&label.as_str()) {
            return Err(err(format!("unknown setting '{}'", f[0])));
        }
        let k: usize = f[1].parse().map_err(|_| err(format!("bad observable index '{}'", f[1])))?;
        if k >= OBSERVABLES_PER_SETTING {
            return Err(err(format!("observable index {k} out of range")));
        }
        let v: f64 = f[2].parse().map_err(|_| err(format!("bad value '{}'", f[2])))?;
        let pos = match order.iter().position(|l| *l == label) {
            Some(p) => p,
            None => {
                order.push(label.clone());
                order.len() - 1
            }
        };
        let entry = by_setting
            .entry(pos)
            .or_insert_with(|| (label.clone(), vec![None; OBSERVABLES_PER_SETTING]));
        if entry.1[k].replace(v).is_some() {
            return Err(err(format!("duplicate value for {label} index {k}")));
        }
    }
    by_setting
        .into_values()
        .map(|(label, vals)| {
            let values: Option<Vec<f64>> = vals.into_iter().collect();
            values
                .map(|values| TomoRecord { setting: label.clone(), values, noise_sigma: 0.0 })
                .ok_or_else(|| Error::Parse { line: 0, message: format!("setting {label} is incomplete") })
        })
        .collect()
}
