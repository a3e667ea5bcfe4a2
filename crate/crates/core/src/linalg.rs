//! Dense complex matrices, the Hermitian eigensolver and qubit-structured helpers.
//!
//! Qubit 1 is the leftmost tensor factor, so it owns the most significant bit
//! of a basis index. For three qubits `|q1 q2 q3>` has index `4*q1 + 2*q2 + q3`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::NotSquare { dim, len: entries.len() });
        }
        Ok(Self { dim, data: entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Projector `|v><v|` (not normalized).
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * s).collect() }
    }

    /// Largest `|m_rc - conj(m_cr)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |U U† - 1|` elementwise.
    pub fn unitarity_error(&self) -> f64 {
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.dim))
    }

    /// `u · self · u†`
    pub fn conjugated_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut acc = ZERO;
        for r in 0..n {
            for k in 0..n {
                acc += self.data[r * n + k] * other.data[k * n + r];
            }
        }
        acc
    }

    fn num_qubits(&self) -> Option<usize> {
        self.dim.is_power_of_two().then(|| self.dim.trailing_zeros() as usize)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out[r * n..(r + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { dim: n, data: out }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { dim: self.dim, data }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { dim: self.dim, data }
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    ComplexMatrix::from_fn(na * nb, |r, c| a[(r / nb, c / nb)] * b[(r % nb, c % nb)])
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ZERO, ONE, ONE, ZERO] }
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ZERO, -I, I, ZERO] }
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ONE, ZERO, ZERO, -ONE] }
}

pub const NUM_QUBITS: usize = 3;
pub const DIM: usize = 8;

/// Bit mask of a 1-based qubit within a three-qubit basis index.
pub fn qubit_mask(qubit: usize) -> Result<usize> {
    check_qubit(qubit)?;
    Ok(1 << (NUM_QUBITS - qubit))
}

pub(crate) fn check_qubit(qubit: usize) -> Result<()> {
    if (1..=NUM_QUBITS).contains(&qubit) {
        Ok(())
    } else {
        Err(Error::QubitOutOfRange(qubit))
    }
}

/// Places a 2x2 operator on one qubit of the three-qubit register.
pub fn embed(op: &ComplexMatrix, qubit: usize) -> Result<ComplexMatrix> {
    check_qubit(qubit)?;
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: op.dim() });
    }
    let id = ComplexMatrix::identity(2);
    let factors: Vec<&ComplexMatrix> =
        (1..=NUM_QUBITS).map(|q| if q == qubit { op } else { &id }).collect();
    Ok(kron(&kron(factors[0], factors[1]), factors[2]))
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvectors are the columns
/// of `vectors`, in the same (ascending) order as `values`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }

    /// `V f(Λ) V†`
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d: Vec<C64> = self.values.iter().map(|&x| C64::new(f(x), 0.0)).collect();
        self.map_complex(&d)
    }

    fn map_complex(&self, d: &[C64]) -> ComplexMatrix {
        let v = &self.vectors;
        let n = v.dim();
        ComplexMatrix::from_fn(n, |r, c| {
            (0..n).map(|k| v[(r, k)] * d[k] * v[(c, k)].conj()).sum()
        })
    }
}

const HERMITIAN_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi diagonalization.
pub fn hermitian_eigs(m: &ComplexMatrix) -> Result<Eigen> {
    let asym = m.max_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let n = m.dim;
    // Symmetrize so round-off in the input does not leak into the rotations.
    let mut a = ComplexMatrix::from_fn(n, |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()));
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let e = apq / mag;
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J = diag phase · real rotation, acting on columns p and q.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -s * e.conj();
    let jqq = c * e.conj();
    let n = a.dim;

    for r in 0..n {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = x * jpp + y * jqp;
        a[(r, q)] = x * jpq + y * jqq;
    }
    for col in 0..n {
        let (x, y) = (a[(p, col)], a[(q, col)]);
        a[(p, col)] = jpp.conj() * x + jqp.conj() * y;
        a[(q, col)] = jpq.conj() * x + jqq.conj() * y;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for r in 0..n {
        let (x, y) = (v[(r, p)], v[(r, q)]);
        v[(r, p)] = x * jpp + y * jqp;
        v[(r, q)] = x * jpq + y * jqq;
    }
}

/// `V diag(exp(i·scale·λ)) V†`, so `exp(-iHt)` is `matrix_exp_hermitian(h, -t)`.
pub fn matrix_exp_hermitian(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eigs(h)?;
    let d: Vec<C64> = eig.values.iter().map(|&l| C64::from_polar(1.0, scale * l)).collect();
    Ok(eig.map_complex(&d))
}

/// Transposes the index block of one qubit (1-based) of a `2^n` matrix.
pub fn partial_transpose(m: &ComplexMatrix, qubit: usize) -> Result<ComplexMatrix> {
    let n = m.num_qubits().ok_or(Error::DimensionMismatch {
        expected: m.dim.next_power_of_two(),
        found: m.dim,
    })?;
    if qubit == 0 || qubit > n {
        return Err(Error::QubitOutOfRange(qubit));
    }
    let mask = 1 << (n - qubit);
    Ok(ComplexMatrix::from_fn(m.dim, |r, c| {
        // Swap the chosen qubit's bit between row and column index.
        let (rb, cb) = (r & mask, c & mask);
        m[((r & !mask) | cb, (c & !mask) | rb)]
    }))
}

/// Reduced matrix on the `keep` qubits (1-based, any order, duplicates
/// ignored). The kept qubits stay in ascending order in the result.
pub fn partial_trace(m: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix> {
    let n = m.num_qubits().ok_or(Error::DimensionMismatch {
        expected: m.dim.next_power_of_two(),
        found: m.dim,
    })?;
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&q| q == 0 || q > n) {
        return Err(Error::QubitOutOfRange(bad));
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !kept.contains(q)).collect();
    let bit = |q: usize| n - q;
    let assemble = |kv: usize, tv: usize| -> usize {
        let mut idx = 0;
        for (i, &q) in kept.iter().enumerate() {
            if kv >> (kept.len() - 1 - i) & 1 == 1 {
                idx |= 1 << bit(q);
            }
        }
        for (i, &q) in traced.iter().enumerate() {
            if tv >> (traced.len() - 1 - i) & 1 == 1 {
                idx |= 1 << bit(q);
            }
        }
        idx
    };
    let dk = 1 << kept.len();
    let dt = 1 << traced.len();
    Ok(ComplexMatrix::from_fn(dk, |r, c| {
        (0..dt).map(|t| m[(assemble(r, t), assemble(c, t))]).sum()
    }))
}

/// Physicality tolerances attached to a [`DensityMatrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub hermitian: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { hermitian: 1e-10, trace: 1e-9, min_eigenvalue: -1e-8 }
    }
}

impl Tolerance {
    /// Looser bounds used for states that went through a numerical integrator.
    pub fn evolved() -> Self {
        Self { hermitian: 1e-9, trace: 1e-8, min_eigenvalue: -1e-6 }
    }
}

/// Three-qubit state: 8x8, Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    tolerance: Tolerance,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerance::default())
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tolerance: Tolerance) -> Result<Self> {
        let rho = Self { matrix, tolerance };
        rho.validate()?;
        Ok(rho)
    }

    /// Skips validation; callers guarantee physicality by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix, tolerance: Tolerance::default() }
    }

    /// `|ψ><ψ|` for a ket of length 8; the ket is normalized first.
    pub fn from_ket(ket: &[C64]) -> Result<Self> {
        if ket.len() != DIM {
            return Err(Error::DimensionMismatch { expected: DIM, found: ket.len() });
        }
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotPhysical("ket has zero or non-finite norm".into()));
        }
        let v: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Ok(Self::from_matrix_unchecked(ComplexMatrix::outer(&v)))
    }

    pub fn basis_state(index: usize) -> Result<Self> {
        if index >= DIM {
            return Err(Error::InvalidParameter(format!("basis index {index} outside 0..8")));
        }
        let mut ket = vec![ZERO; DIM];
        ket[index] = ONE;
        Self::from_ket(&ket)
    }

    pub fn maximally_mixed() -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::identity(DIM).scale_real(1.0 / DIM as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    pub fn set_tolerance(&mut self, tolerance: Tolerance) {
        self.tolerance = tolerance;
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.matrix[(r, c)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // The matrix is Hermitian to tolerance by invariant.
        hermitian_eigs(&self.matrix).map(|e| e.values[0]).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        check_physical(&self.matrix, &self.tolerance)
    }

    /// `u ρ u†`; physicality is preserved exactly by unitary conjugation.
    pub fn evolve_unitary(&self, u: &ComplexMatrix) -> Self {
        Self { matrix: self.matrix.conjugated_by(u), tolerance: self.tolerance }
    }

    pub fn partial_transpose(&self, qubit: usize) -> Result<ComplexMatrix> {
        partial_transpose(&self.matrix, qubit)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<ComplexMatrix> {
        partial_trace(&self.matrix, keep)
    }

    /// Serializes to the `{"dim": .., "entries": [[re, im], ..]}` document
    /// with 17 significant digits per number.
    pub fn to_interchange(&self) -> String {
        matrix_to_interchange(&self.matrix)
    }

    pub fn from_interchange(text: &str) -> Result<Self> {
        Self::new(matrix_from_interchange(text)?)
    }
}

pub(crate) fn check_physical(m: &ComplexMatrix, tol: &Tolerance) -> Result<()> {
    if m.dim() != DIM {
        return Err(Error::DimensionMismatch { expected: DIM, found: m.dim() });
    }
    if m.entries().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotPhysical("non-finite entry".into()));
    }
    let asym = m.max_asymmetry();
    if asym > tol.hermitian {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
        return Err(Error::NotPhysical(format!("trace {:.12} differs from 1", tr.re)));
    }
    let sym = ComplexMatrix::from_fn(DIM, |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()));
    let lmin = hermitian_eigs(&sym)?.values[0];
    if lmin < tol.min_eigenvalue {
        return Err(Error::NotPhysical(format!("minimum eigenvalue {lmin:.3e}")));
    }
    Ok(())
}

#[derive(serde::Serialize, serde::Deserialize)]
struct Interchange {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

pub fn matrix_to_interchange(m: &ComplexMatrix) -> String {
    let mut out = format!("{{\n  \"dim\": {},\n  \"entries\": [\n", m.dim());
    let n = m.entries().len();
    for (i, z) in m.entries().iter().enumerate() {
        let sep = if i + 1 == n { "" } else { "," };
        out.push_str(&format!("    [{:.16e}, {:.16e}]{sep}\n", z.re, z.im));
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn matrix_from_interchange(text: &str) -> Result<ComplexMatrix> {
    let doc: Interchange = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let entries = doc.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
    ComplexMatrix::new(doc.dim, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ghz() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut ket = vec![ZERO; 8];
        ket[0] = c(s);
        ket[7] = c(-s);
        DensityMatrix::from_ket(&ket).unwrap()
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let zi = kron(&pauli_z(), &i2);
        assert_eq!(zi.diagonal(), vec![c(1.0), c(1.0), c(-1.0), c(-1.0)]);
        let xx = kron(&pauli_x(), &pauli_x());
        assert_eq!(xx.apply(&[ONE, ZERO, ZERO, ZERO]), vec![ZERO, ZERO, ZERO, ONE]);
    }

    #[test]
    fn eigs_of_small_cases() {
        let e = hermitian_eigs(&pauli_z()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        let e = hermitian_eigs(&ComplexMatrix::identity(8).scale_real(0.125)).unwrap();
        assert!(e.values.iter().all(|&x| (x - 0.125).abs() < 1e-15));
        let e = hermitian_eigs(&pauli_y()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert!(e.reconstruct().max_abs_diff(&pauli_y()) < 1e-14);
    }

    #[test]
    fn eigs_rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = c(0.5);
        match hermitian_eigs(&m) {
            Err(Error::NotHermitian { asymmetry }) => assert_abs_diff_eq!(asymmetry, 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ghz_partial_transpose_spectrum() {
        let pt = ghz().partial_transpose(1).unwrap();
        let e = hermitian_eigs(&pt).unwrap();
        assert_abs_diff_eq!(e.values[0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn w_partial_transpose_spectrum() {
        let s = 1.0 / 3f64.sqrt();
        let mut ket = vec![ZERO; 8];
        for i in [1, 2, 4] {
            ket[i] = c(s);
        }
        let w = DensityMatrix::from_ket(&ket).unwrap();
        let e = hermitian_eigs(&w.partial_transpose(1).unwrap()).unwrap();
        // Oracle: -sqrt(2)/3 from the 2x2 block {|000>, |011>, ...} by hand.
        assert_abs_diff_eq!(e.values[0], -(2f64.sqrt()) / 3.0, epsilon = 1e-12);
        let red = w.partial_trace(&[1, 2]).unwrap();
        assert_abs_diff_eq!(red[(1, 2)].re, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_transpose_edge_cases() {
        let p = DensityMatrix::basis_state(0).unwrap();
        assert_eq!(&p.partial_transpose(2).unwrap(), p.matrix());
        let g = ghz();
        let twice = partial_transpose(&g.partial_transpose(3).unwrap(), 3).unwrap();
        assert_eq!(&twice, g.matrix());
        assert!(matches!(g.partial_transpose(4), Err(Error::QubitOutOfRange(4))));
        assert!(matches!(g.partial_transpose(0), Err(Error::QubitOutOfRange(0))));
    }

    #[test]
    fn partial_trace_examples() {
        let p = DensityMatrix::basis_state(0).unwrap();
        let r = p.partial_trace(&[1]).unwrap();
        assert_eq!(r, ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
        let r = ghz().partial_trace(&[2, 3]).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
        assert!(matches!(p.partial_trace(&[]), Err(Error::EmptySubset)));
        assert!(matches!(p.partial_trace(&[1, 5]), Err(Error::QubitOutOfRange(5))));
    }

    #[test]
    fn exp_examples() {
        let z = ComplexMatrix::zeros(4);
        assert!(matrix_exp_hermitian(&z, 1.0).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        // exp(-i π σx / 2) |0> = -i |1>
        let u = matrix_exp_hermitian(&pauli_x(), -std::f64::consts::FRAC_PI_2).unwrap();
        let v = u.apply(&[ONE, ZERO]);
        assert!(v[0].norm() < 1e-15);
        assert!((v[1] - (-I)).norm() < 1e-15);
        assert!(u.unitarity_error() < 1e-12);
    }

    #[test]
    fn embed_places_factor_by_significance() {
        let x1 = embed(&pauli_x(), 1).unwrap();
        // X on qubit 1 maps |000> (index 0) to |100> (index 4).
        assert_eq!(x1[(4, 0)], ONE);
        let x3 = embed(&pauli_x(), 3).unwrap();
        assert_eq!(x3[(1, 0)], ONE);
        assert_eq!(qubit_mask(1).unwrap(), 4);
        assert!(embed(&pauli_x(), 4).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(8)).is_err());
        let mut m = ComplexMatrix::from_real_diagonal(&[1.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(DensityMatrix::new(m.clone()), Err(Error::NotPhysical(_))));
        m[(0, 1)] = c(0.1);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            DensityMatrix::new(ComplexMatrix::identity(4).scale_real(0.25)),
            Err(Error::DimensionMismatch { expected: 8, found: 4 })
        ));
        assert!(DensityMatrix::maximally_mixed().validate().is_ok());
    }

    #[test]
    fn interchange_round_trip_is_exact() {
        let g = ghz();
        let rho = DensityMatrix::new(
            &g.matrix().scale_real(0.7) + &ComplexMatrix::identity(8).scale_real(0.3 / 8.0),
        )
        .unwrap();
        let text = rho.to_interchange();
        assert!(text.contains("\"dim\": 8"));
        let back = DensityMatrix::from_interchange(&text).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn interchange_reports_bad_documents() {
        assert!(matches!(matrix_from_interchange("{\"dim\": 2}"), Err(Error::Parse { .. })));
        let short = "{\"dim\": 2, \"entries\": [[1,0],[0,0],[0,0]]}";
        assert!(matches!(matrix_from_interchange(short), Err(Error::NotSquare { dim: 2, len: 3 })));
    }
}
