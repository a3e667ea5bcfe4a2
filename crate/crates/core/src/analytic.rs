//! Closed-form evolution of the GHZ, W and WW̄ states under the σx/σz
//! dissipators with no coherent Hamiltonian.
//!
//! Used as the oracle for the numerical integrator. The element placement
//! for W and WW̄ follows the integrated master equation; see `CONFORMANCE.md`
//! for where that differs from the commonly printed tables.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, C64, DIM};
use crate::measures::tripartite_negativity;
use crate::noise::{NoiseModel, SpinSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub kx: [f64; 3],
    pub kz: [f64; 3],
}

impl RateSet {
    pub fn new(kx: [f64; 3], kz: [f64; 3]) -> Result<Self> {
        if kx.iter().chain(&kz).any(|&k| !(k >= 0.0 && k.is_finite())) {
            return Err(Error::InvalidParameter("rates must be finite and non-negative".into()));
        }
        Ok(Self { kx, kz })
    }

    pub fn from_spins(spins: &SpinSystem) -> Self {
        let n = NoiseModel::from_spins(spins);
        Self { kx: n.kappa_x, kz: n.kappa_z }
    }

    pub fn default_rates() -> Self {
        Self::from_spins(&SpinSystem::default())
    }
}

/// Sign of the GHZ corner coherences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CornerSign {
    /// `(|000> - |111>)/√2`, the prepared state.
    #[default]
    Minus,
    Plus,
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time {t} must be non-negative")))
    }
}

fn real(m: [[f64; DIM]; DIM]) -> DensityMatrix {
    let cm = ComplexMatrix::from_fn(DIM, |r, c| C64::new(m[r][c], 0.0));
    DensityMatrix::from_matrix_unchecked(cm)
}

pub fn ghz_analytic(t: f64, rates: &RateSet) -> Result<DensityMatrix> {
    ghz_analytic_signed(t, rates, CornerSign::Minus)
}

pub fn ghz_analytic_signed(t: f64, rates: &RateSet, sign: CornerSign) -> Result<DensityMatrix> {
    check_t(t)?;
    let [x1, x2, x3] = rates.kx;
    let x = x1 + x2 + x3;
    let z: f64 = rates.kz.iter().sum();
    let e = |r: f64| (r * t).exp();
    let (e12, e13, e23) = (e(-(x1 + x2)), e(-(x1 + x3)), e(-(x2 + x3)));
    let a1 = (1.0 + e12 + e13 + e23) / 8.0;
    let a2 = (1.0 + e12 - e13 - e23) / 8.0;
    let a3 = (1.0 - e12 + e13 - e23) / 8.0;
    let a4 = (1.0 - e12 - e13 + e23) / 8.0;
    let pre = e(-(x + z)) / 8.0;
    let (p1, p2, p3, px) = (e(x1), e(x2), e(x3), e(x));
    let b1 = pre * (p1 + p2 + p3 + px);
    let b2 = pre * (-p1 - p2 + p3 + px);
    let b3 = pre * (-p1 + p2 - p3 + px);
    let b4 = pre * (p1 - p2 - p3 + px);
    let s = match sign {
        CornerSign::Minus => -1.0,
        CornerSign::Plus => 1.0,
    };
    let mut m = [[0.0; DIM]; DIM];
    let alphas = [a1, a2, a3, a4, a4, a3, a2, a1];
    for i in 0..DIM {
        m[i][i] = alphas[i];
    }
    for (i, b) in [b1, b2, b3, b4].into_iter().enumerate() {
        m[i][7 - i] = s * b;
        m[7 - i][i] = s * b;
    }
    Ok(real(m))
}

pub fn w_analytic(t: f64, rates: &RateSet) -> Result<DensityMatrix> {
    check_t(t)?;
    let [x1, x2, x3] = rates.kx;
    let [z1, z2, z3] = rates.kz;
    let x = x1 + x2 + x3;
    let e = |r: f64| (r * t).exp();
    let p = e(-x) / 24.0;
    let (e1, e2, e3) = (e(x1), e(x2), e(x3));
    let (e12, e13, e23) = (e(x1 + x2), e(x1 + x3), e(x2 + x3));
    let alpha = [
        0.125 - p * (3.0 + e1 + e2 - e12 + e3 - e13 - e23),
        0.125 + p * (3.0 + e1 + e2 - e12 - e3 + e13 + e23),
        0.125 + p * (3.0 + e1 - e2 + e12 + e3 - e13 + e23),
        0.125 - p * (3.0 + e1 - e2 + e12 - e3 + e13 - e23),
        0.125 + p * (3.0 - e1 + e2 + e12 + e3 + e13 - e23),
        0.125 + p * (-3.0 + e1 - e2 - e12 + e3 + e13 - e23),
        0.125 + p * (-3.0 + e1 + e2 + e12 - e3 - e13 - e23),
        0.125 - p * (-3.0 + e1 + e2 + e12 + e3 + e13 + e23),
    ];
    let q = |zz: f64| e(-(x + zz)) / 12.0;
    let (q23, q13, q12) = (q(z2 + z3), q(z1 + z3), q(z1 + z2));
    let beta = [
        q23 * (1.0 + e1) * (-1.0 + e23),
        q23 * (1.0 + e1) * (1.0 + e23),
        q23 * (-1.0 + e1) * (-1.0 + e23),
        q23 * (-1.0 + e1) * (1.0 + e23),
        q13 * (1.0 + e2) * (-1.0 + e13),
        q13 * (1.0 + e2) * (1.0 + e13),
        q13 * (-1.0 + e2) * (-1.0 + e13),
        q13 * (-1.0 + e2) * (1.0 + e13),
        q12 * (-1.0 + e12) * (1.0 + e3),
        q12 * (-1.0 + e12) * (-1.0 + e3),
        q12 * (1.0 + e12) * (1.0 + e3),
        q12 * (1.0 + e12) * (-1.0 + e3),
    ];
    // (row, col) of β1..β12; each coherence pairs indices differing in two
    // bits, grouped by which qubit is left untouched.
    const SLOTS: [(usize, usize); 12] = [
        (0, 3),
        (1, 2),
        (4, 7),
        (5, 6),
        (0, 5),
        (1, 4),
        (2, 7),
        (3, 6),
        (0, 6),
        (1, 7),
        (2, 4),
        (3, 5),
    ];
    let mut m = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        m[i][i] = alpha[i];
    }
    for (&(r, c), &b) in SLOTS.iter().zip(&beta) {
        m[r][c] = b;
        m[c][r] = b;
    }
    Ok(real(m))
}

pub fn wwbar_analytic(t: f64, rates: &RateSet) -> Result<DensityMatrix> {
    check_t(t)?;
    let [x1, x2, x3] = rates.kx;
    let [z1, z2, z3] = rates.kz;
    let x = x1 + x2 + x3;
    let zs = z1 + z2 + z3;
    let e = |r: f64| (r * t).exp();
    let (m12, m13, m23) = (e(-(x1 + x2)), e(-(x1 + x3)), e(-(x2 + x3)));
    let a1 = (3.0 - m12 - m13 - m23) / 24.0;
    let a2 = (3.0 - m12 + m13 + m23) / 24.0;
    let a3 = (3.0 + m12 - m13 + m23) / 24.0;
    let a4 = (3.0 + m12 + m13 - m23) / 24.0;
    let f = |xa: f64, xb: f64, zz: f64, s: f64| {
        e(-(xa + xb + 2.0 * zz)) * (s * e(zz) + e(xa + xb + zz)) / 12.0
    };
    let p = e(-(x + zs));
    let (p1, p2, p3, px) = (e(x1), e(x2), e(x3), e(x));
    let mut b = [0.0; 19];
    b[1] = f(x1, x2, z3, -1.0);
    b[2] = f(x1, x3, z2, -1.0);
    b[3] = f(x2, x3, z2 + z3, -1.0);
    b[4] = f(x2, x3, z1, -1.0);
    b[5] = f(x1, x3, z1 + z3, -1.0);
    b[6] = f(x1, x2, z1 + z2, -1.0);
    b[7] = -p * (p1 + p2 + p3 - 3.0 * px) / 24.0;
    b[8] = f(x2, x3, z2 + z3, 1.0);
    b[9] = f(x1, x3, z2, 1.0);
    b[10] = f(x1, x3, z1 + z3, 1.0);
    b[11] = f(x2, x3, z1, 1.0);
    b[12] = p * (p1 + p2 - p3 + 3.0 * px) / 24.0;
    b[13] = f(x1, x2, z1 + z2, -1.0);
    b[14] = f(x1, x2, z3, 1.0);
    b[15] = f(x1, x2, z1 + z2, 1.0);
    b[16] = p * (p1 - p2 + p3 + 3.0 * px) / 24.0;
    b[17] = p * (-p1 + p2 + p3 + 3.0 * px) / 24.0;
    // Upper triangle, β index per element (0 marks the diagonal). The
    // (|100>,|101>) and (|100>,|111>) slots hold β14 and β3 as required by
    // the bit-flip symmetry of the state.
    const PATTERN: [[usize; DIM]; DIM] = [
        [0, 1, 2, 3, 4, 5, 6, 7],
        [0, 0, 8, 9, 10, 11, 12, 13],
        [0, 0, 0, 14, 15, 16, 11, 5],
        [0, 0, 0, 0, 17, 15, 10, 4],
        [0, 0, 0, 0, 0, 14, 9, 3],
        [0, 0, 0, 0, 0, 0, 8, 2],
        [0, 0, 0, 0, 0, 0, 0, 1],
        [0, 0, 0, 0, 0, 0, 0, 0],
    ];
    let alphas = [a1, a2, a3, a4, a4, a3, a2, a1];
    let mut m = [[0.0; DIM]; DIM];
    for r in 0..DIM {
        m[r][r] = alphas[r];
        for c in r + 1..DIM {
            let v = b[PATTERN[r][c]];
            m[r][c] = v;
            m[c][r] = v;
        }
    }
    Ok(real(m))
}

/// Analytic state of the named family.
pub fn analytic_state(kind: crate::states::StateKind, t: f64, rates: &RateSet) -> Result<DensityMatrix> {
    use crate::states::StateKind;
    match kind {
        StateKind::Ghz => ghz_analytic(t, rates),
        StateKind::W => w_analytic(t, rates),
        StateKind::WWbar => wwbar_analytic(t, rates),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayTimes {
    pub ghz: f64,
    pub w: f64,
    pub wwbar: f64,
}

const SCAN_STEP: f64 = 1e-3;
const SCAN_LIMIT: f64 = 100.0;

/// First time the tripartite negativity of the family reaches zero.
pub fn disentanglement_time_analytic(kind: crate::states::StateKind, rates: &RateSet) -> Result<f64> {
    let n = |t: f64| -> Result<f64> { Ok(tripartite_negativity(&analytic_state(kind, t, rates)?)) };
    if n(0.0)? <= 0.0 {
        return Err(Error::NotEntangled);
    }
    let mut prev = 0.0;
    let mut t = SCAN_STEP;
    while t <= SCAN_LIMIT {
        if n(t)? <= 0.0 {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if n(mid)? <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        prev = t;
        t += SCAN_STEP;
    }
    Err(Error::NoCrossing { threshold: 0.0 })
}

pub fn decay_times(rates: &RateSet) -> Result<DecayTimes> {
    use crate::states::StateKind;
    Ok(DecayTimes {
        ghz: disentanglement_time_analytic(StateKind::Ghz, rates)?,
        w: disentanglement_time_analytic(StateKind::W, rates)?,
        wwbar: disentanglement_time_analytic(StateKind::WWbar, rates)?,
    })
}
