//! Lindblad evolution under σx/σz dissipators and trajectory averaging over a
//! classical Ornstein–Uhlenbeck dephasing bath.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::ddseq::DDSchedule;
use crate::error::{Error, Result};
use crate::linalg::{
    embed, pauli_x, pauli_z, ComplexMatrix, DensityMatrix, Tolerance, C64, DIM, I, NUM_QUBITS, ZERO,
};

const N2: usize = DIM * DIM;
type Block = [C64; N2];

/// Default relaxation times, seconds.
pub const DEFAULT_T1: [f64; 3] = [5.42, 5.65, 4.36];
pub const DEFAULT_T2: [f64; 3] = [0.53, 0.55, 0.52];
/// Placeholder couplings (Hz) for the J12, J13, J23 pairs.
pub const DEFAULT_COUPLINGS_HZ: [f64; 3] = [69.65, -128.32, 47.67];

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    /// Resonance offsets from the carrier, Hz.
    pub offsets_hz: [f64; 3],
    /// Scalar couplings J12, J13, J23 in Hz.
    pub couplings_hz: [f64; 3],
    pub t1: [f64; 3],
    pub t2: [f64; 3],
    /// When false the coherent part of the dynamics is dropped (on-resonance,
    /// decoupled frame), which is the setting of the closed-form solutions.
    pub include_hamiltonian: bool,
}

impl Default for SpinSystem {
    fn default() -> Self {
        Self {
            offsets_hz: [0.0; 3],
            couplings_hz: DEFAULT_COUPLINGS_HZ,
            t1: DEFAULT_T1,
            t2: DEFAULT_T2,
            include_hamiltonian: false,
        }
    }
}

impl SpinSystem {
    pub fn validate(&self) -> Result<()> {
        for q in 0..NUM_QUBITS {
            let (t1, t2) = (self.t1[q], self.t2[q]);
            if !(t1 > 0.0 && t1.is_finite()) {
                return Err(Error::InvalidParameter(format!("T1 of qubit {} must be positive", q + 1)));
            }
            if !(t2 > 0.0 && t2 <= 2.0 * t1) {
                return Err(Error::InvalidParameter(format!(
                    "T2 of qubit {} must lie in (0, 2·T1]",
                    q + 1
                )));
            }
        }
        if self.offsets_hz.iter().chain(&self.couplings_hz).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("offsets and couplings must be finite".into()));
        }
        Ok(())
    }

    pub fn coupling(&self, a: usize, b: usize) -> Result<f64> {
        crate::linalg::check_qubit(a)?;
        crate::linalg::check_qubit(b)?;
        match (a.min(b), a.max(b)) {
            (1, 2) => Ok(self.couplings_hz[0]),
            (1, 3) => Ok(self.couplings_hz[1]),
            (2, 3) => Ok(self.couplings_hz[2]),
            _ => Err(Error::SameQubit(a)),
        }
    }

    /// Diagonal of `H = -Σ 2πν_i I_iz + Σ 2πJ_ij I_iz I_jz` in rad/s,
    /// regardless of `include_hamiltonian`.
    pub fn energies(&self) -> [f64; DIM] {
        let pi = std::f64::consts::PI;
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let mut e = [0.0; DIM];
        for (a, ea) in e.iter_mut().enumerate() {
            let m = spin_z(a);
            let zeeman: f64 = (0..NUM_QUBITS).map(|q| -2.0 * pi * self.offsets_hz[q] * m[q]).sum();
            let j: f64 = pairs
                .iter()
                .zip(&self.couplings_hz)
                .map(|(&(p, q), &jj)| 2.0 * pi * jj * m[p] * m[q])
                .sum();
            *ea = zeeman + j;
        }
        e
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        if self.include_hamiltonian {
            ComplexMatrix::from_real_diagonal(&self.energies())
        } else {
            ComplexMatrix::zeros(DIM)
        }
    }

    fn active_energies(&self) -> [f64; DIM] {
        if self.include_hamiltonian {
            self.energies()
        } else {
            [0.0; DIM]
        }
    }
}

/// `m_z = ±1/2` of each qubit (index 0 is qubit 1) for basis index `a`.
fn spin_z(a: usize) -> [f64; 3] {
    let mut m = [0.0; 3];
    for (q, mq) in m.iter_mut().enumerate() {
        *mq = if a >> (NUM_QUBITS - 1 - q) & 1 == 0 { 0.5 } else { -0.5 };
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuBath {
    /// Stationary standard deviation of each qubit's frequency noise, rad/s.
    pub sigma: f64,
    pub tau_c: f64,
    pub trajectories: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bath {
    Markovian,
    /// Classical OU dephasing replaces the σz dissipator; σx damping stays.
    Correlated(OuBath),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub kappa_x: [f64; 3],
    pub kappa_z: [f64; 3],
    pub bath: Bath,
}

impl NoiseModel {
    /// `κx = 1/T1`, `κz = 1/T2`, memoryless bath.
    pub fn from_spins(spins: &SpinSystem) -> Self {
        let mut kx = [0.0; 3];
        let mut kz = [0.0; 3];
        for q in 0..NUM_QUBITS {
            kx[q] = 1.0 / spins.t1[q];
            kz[q] = 1.0 / spins.t2[q];
        }
        Self { kappa_x: kx, kappa_z: kz, bath: Bath::Markovian }
    }

    pub fn noiseless() -> Self {
        Self { kappa_x: [0.0; 3], kappa_z: [0.0; 3], bath: Bath::Markovian }
    }

    pub fn with_bath(mut self, bath: Bath) -> Self {
        self.bath = bath;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_x.iter().chain(&self.kappa_z).any(|&k| !(k >= 0.0 && k.is_finite())) {
            return Err(Error::InvalidParameter("rates must be finite and non-negative".into()));
        }
        if let Bath::Correlated(b) = &self.bath {
            if !(b.tau_c > 0.0 && b.tau_c.is_finite()) {
                return Err(Error::InvalidParameter("tau_c must be positive".into()));
            }
            if !(b.sigma >= 0.0 && b.sigma.is_finite()) {
                return Err(Error::InvalidParameter("sigma must be non-negative".into()));
            }
            if b.trajectories == 0 {
                return Err(Error::InvalidParameter("trajectories must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn lindblad_operators(&self) -> Vec<ComplexMatrix> {
        let mut ops = Vec::with_capacity(6);
        for q in 1..=NUM_QUBITS {
            let x = embed(&pauli_x(), q).expect("valid qubit");
            let z = embed(&pauli_z(), q).expect("valid qubit");
            ops.push(x.scale_real((self.kappa_x[q - 1] / 2.0).sqrt()));
            ops.push(z.scale_real((self.kappa_z[q - 1] / 2.0).sqrt()));
        }
        ops
    }
}

/// Dense `dρ/dt = -i[H, ρ] + Σ (L ρ L† - ½{L†L, ρ})`.
pub fn lindblad_rhs(rho: &ComplexMatrix, spins: &SpinSystem, noise: &NoiseModel) -> Result<ComplexMatrix> {
    if rho.dim() != DIM {
        return Err(Error::DimensionMismatch { expected: DIM, found: rho.dim() });
    }
    let h = spins.hamiltonian();
    let comm = &(&h * rho) - &(rho * &h);
    let mut out = comm.scale(-I);
    for l in noise.lindblad_operators() {
        let ld = l.adjoint();
        let ldl = &ld * &l;
        let jump = &(&l * rho) * &ld;
        let anti = &(&ldl * rho) + &(rho * &ldl);
        out = &out + &(&jump - &anti.scale_real(0.5));
    }
    Ok(out)
}

/// The same generator written element-wise: every σx dissipator couples
/// `ρ_ab` to `ρ_{a^m, b^m}`, everything else is diagonal in Liouville space.
#[derive(Clone)]
struct Generator {
    diag: Block,
    kx_half: [f64; 3],
    /// Liouville index of `(a^m, b^m)` for each qubit mask.
    partner: [[usize; N2]; 3],
}

impl Generator {
    fn new(energies: &[f64; DIM], kx: &[f64; 3], kz: &[f64; 3]) -> Self {
        let kx_sum: f64 = kx.iter().sum::<f64>() / 2.0;
        let mut diag = [ZERO; N2];
        let mut partner = [[0usize; N2]; 3];
        for a in 0..DIM {
            for b in 0..DIM {
                let mut re = -kx_sum;
                for q in 0..NUM_QUBITS {
                    let m = 1 << (NUM_QUBITS - 1 - q);
                    if (a ^ b) & m != 0 {
                        re -= kz[q];
                    }
                    partner[q][a * DIM + b] = (a ^ m) * DIM + (b ^ m);
                }
                diag[a * DIM + b] = C64::new(re, -(energies[a] - energies[b]));
            }
        }
        let mut kx_half = [0.0; 3];
        for q in 0..NUM_QUBITS {
            kx_half[q] = kx[q] / 2.0;
        }
        Self { diag, kx_half, partner }
    }

    /// Diagonal with an extra diagonal Hamiltonian (rad/s) folded in.
    fn shifted_diag(&self, extra: &[f64; DIM], out: &mut Block) {
        for a in 0..DIM {
            for b in 0..DIM {
                let k = a * DIM + b;
                out[k] = self.diag[k] + C64::new(0.0, -(extra[a] - extra[b]));
            }
        }
    }

    #[inline]
    fn apply(&self, diag: &Block, r: &Block, out: &mut Block) {
        let [p0, p1, p2] = &self.partner;
        let [h0, h1, h2] = self.kx_half;
        for k in 0..N2 {
            out[k] = diag[k] * r[k] + r[p0[k]] * h0 + r[p1[k]] * h1 + r[p2[k]] * h2;
        }
    }

    fn rk4(&self, diag: &Block, r: &mut Block, h: f64, s: &mut Scratch) {
        self.apply(diag, r, &mut s.k1);
        for k in 0..N2 {
            s.tmp[k] = r[k] + s.k1[k] * (0.5 * h);
        }
        self.apply(diag, &s.tmp, &mut s.k2);
        for k in 0..N2 {
            s.tmp[k] = r[k] + s.k2[k] * (0.5 * h);
        }
        self.apply(diag, &s.tmp, &mut s.k3);
        for k in 0..N2 {
            s.tmp[k] = r[k] + s.k3[k] * h;
        }
        self.apply(diag, &s.tmp, &mut s.k4);
        let w = h / 6.0;
        for k in 0..N2 {
            r[k] += (s.k1[k] + (s.k2[k] + s.k3[k]) * 2.0 + s.k4[k]) * w;
        }
    }
}

struct Scratch {
    k1: Block,
    k2: Block,
    k3: Block,
    k4: Block,
    tmp: Block,
}

impl Scratch {
    fn new() -> Self {
        Self { k1: [ZERO; N2], k2: [ZERO; N2], k3: [ZERO; N2], k4: [ZERO; N2], tmp: [ZERO; N2] }
    }
}

fn to_block(m: &ComplexMatrix) -> Block {
    let mut b = [ZERO; N2];
    b.copy_from_slice(m.entries());
    b
}

fn from_block(b: &Block) -> ComplexMatrix {
    ComplexMatrix::new(DIM, b.to_vec()).expect("8x8")
}

fn conjugate_block(r: &mut Block, u: &ComplexMatrix, ud: &ComplexMatrix) {
    let m = from_block(r);
    r.copy_from_slice((&(u * &m) * ud).entries());
}

/// Sampled states of one evolution.
#[derive(Debug, Clone)]
pub struct StateSeries {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl StateSeries {
    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `min(T2)/2000`, further capped at a fiftieth of the shortest free delay
/// when a schedule is present.
pub fn default_dt(spins: &SpinSystem, schedule: Option<&DDSchedule>) -> f64 {
    // Pulses land on interval boundaries, so the step only has to resolve the
    // decay, the coherent frequencies and a few points per delay.
    let mut dt = spins.t2.iter().cloned().fold(f64::INFINITY, f64::min) / 2000.0;
    if spins.include_hamiltonian {
        let e = spins.energies();
        let spread = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - e.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > 0.0 {
            dt = dt.min(0.05 / spread);
        }
    }
    match schedule.and_then(|s| s.min_delay()) {
        Some(d) => dt.min(d / 4.0),
        None => dt,
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time step {dt} must be positive")))
    }
}

fn check_sample_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("sample times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sample times must be strictly increasing".into()));
    }
    Ok(())
}

fn validate_sample(m: ComplexMatrix, time: f64) -> Result<DensityMatrix> {
    DensityMatrix::with_tolerance(m, Tolerance::evolved())
        .map_err(|e| Error::NumericalDrift { time, reason: e.to_string() })
}

/// RK4 with a fixed step, one sample per step from 0 to `t_final`.
/// The step is shrunk slightly so the grid ends exactly on `t_final`.
pub fn evolve_markovian(
    rho0: &DensityMatrix,
    spins: &SpinSystem,
    noise: &NoiseModel,
    t_final: f64,
    dt: f64,
) -> Result<StateSeries> {
    check_dt(dt)?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final {t_final} must be non-negative")));
    }
    let n = steps_for(t_final, dt);
    let times: Vec<f64> = (0..=n).map(|k| t_final * k as f64 / n.max(1) as f64).collect();
    let times = if n == 0 { vec![0.0] } else { times };
    evolve_markovian_at(rho0, spins, noise, &times, dt)
}

/// RK4 landing exactly on each requested sample time.
pub fn evolve_markovian_at(
    rho0: &DensityMatrix,
    spins: &SpinSystem,
    noise: &NoiseModel,
    sample_times: &[f64],
    dt: f64,
) -> Result<StateSeries> {
    let plain = NoiseModel { bath: Bath::Markovian, ..noise.clone() };
    evolve_protocol(rho0, spins, &plain, None, sample_times, dt)
}

fn steps_for(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        0
    } else {
        ((span / dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Evolution of the trajectory-averaged state under the OU bath, with the
/// schedule's pulses applied as instantaneous unitaries.
pub fn evolve_correlated(
    rho0: &DensityMatrix,
    spins: &SpinSystem,
    noise: &NoiseModel,
    schedule: Option<&DDSchedule>,
    sample_times: &[f64],
    dt: f64,
) -> Result<StateSeries> {
    if !matches!(noise.bath, Bath::Correlated(_)) {
        return Err(Error::InvalidParameter("evolve_correlated needs a correlated bath".into()));
    }
    evolve_protocol(rho0, spins, noise, schedule, sample_times, dt)
}

/// Dispatches on the bath: a single deterministic run for the Markovian
/// model, a trajectory average for the correlated one.
pub fn evolve_protocol(
    rho0: &DensityMatrix,
    spins: &SpinSystem,
    noise: &NoiseModel,
    schedule: Option<&DDSchedule>,
    sample_times: &[f64],
    dt: f64,
) -> Result<StateSeries> {
    spins.validate()?;
    noise.validate()?;
    check_dt(dt)?;
    check_sample_times(sample_times)?;
    let t_final = sample_times.last().copied().unwrap_or(0.0);
    let pulses = match schedule {
        Some(s) => s.timeline(t_final)?,
        None => Vec::new(),
    };
    let plan = Plan::new(&pulses, sample_times, dt);
    let energies = spins.active_energies();

    let blocks = match noise.bath {
        Bath::Markovian => {
            let g = Generator::new(&energies, &noise.kappa_x, &noise.kappa_z);
            plan.run(&g, rho0, None)
        }
        Bath::Correlated(bath) => {
            let g = Generator::new(&energies, &noise.kappa_x, &[0.0; 3]);
            average_trajectories(bath, |traj| {
                let ou = TrajectoryBath::new(&bath, traj);
                plan.run(&g, rho0, Some(ou))
            })
        }
    };

    let mut states = Vec::with_capacity(blocks.len());
    for (b, &t) in blocks.iter().zip(sample_times) {
        states.push(validate_sample(from_block(b), t)?);
    }
    Ok(StateSeries { times: sample_times.to_vec(), states })
}

const CHUNK: usize = 8;

/// Parallel over fixed chunks, summed in index order, so the result does not
/// depend on the thread count.
fn average_trajectories(bath: OuBath, run: impl Fn(usize) -> Vec<Block> + Sync) -> Vec<Block> {
    let n = bath.trajectories;
    let chunks: Vec<Vec<Block>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc: Option<Vec<Block>> = None;
            for traj in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let r = run(traj);
                acc = Some(match acc {
                    None => r,
                    Some(mut a) => {
                        add_into(&mut a, &r);
                        a
                    }
                });
            }
            acc.unwrap_or_default()
        })
        .collect();
    let mut total = chunks[0].clone();
    for c in &chunks[1..] {
        add_into(&mut total, c);
    }
    let inv = 1.0 / n as f64;
    for b in &mut total {
        for z in b.iter_mut() {
            *z *= inv;
        }
    }
    total
}

fn add_into(acc: &mut [Block], other: &[Block]) {
    for (a, o) in acc.iter_mut().zip(other) {
        for (x, y) in a.iter_mut().zip(o) {
            *x += y;
        }
    }
}

/// Precomputed breakpoints: pulses and samples merged on one time line.
struct Plan {
    /// (time, pulses at that time, whether a sample is taken there)
    stops: Vec<(f64, Vec<(ComplexMatrix, ComplexMatrix)>, bool)>,
    dt: f64,
}

impl Plan {
    fn new(pulses: &[(f64, ComplexMatrix)], samples: &[f64], dt: f64) -> Self {
        const EPS: f64 = 1e-12;
        let mut stops: Vec<(f64, Vec<(ComplexMatrix, ComplexMatrix)>, bool)> = Vec::new();
        let mut push = |t: f64, pulse: Option<&ComplexMatrix>, sample: bool| {
            let pos = stops.iter().position(|s| (s.0 - t).abs() <= EPS);
            let idx = match pos {
                Some(i) => i,
                None => {
                    stops.push((t, Vec::new(), false));
                    stops.len() - 1
                }
            };
            if let Some(u) = pulse {
                stops[idx].1.push((u.clone(), u.adjoint()));
            }
            stops[idx].2 |= sample;
        };
        for (t, u) in pulses {
            push(*t, Some(u), false);
        }
        for &t in samples {
            push(t, None, true);
        }
        stops.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { stops, dt }
    }

    fn run(&self, g: &Generator, rho0: &DensityMatrix, mut bath: Option<TrajectoryBath>) -> Vec<Block> {
        let mut r = to_block(rho0.matrix());
        let mut s = Scratch::new();
        let mut out = Vec::new();
        let mut extra = [0.0; DIM];
        let mut diag = g.diag;
        let mut t = 0.0;
        for (stop, pulses, sample) in &self.stops {
            let n = steps_for(stop - t, self.dt);
            if n > 0 {
                let h = (stop - t) / n as f64;
                for _ in 0..n {
                    if let Some(b) = bath.as_mut() {
                        b.energies(&mut extra);
                        g.shifted_diag(&extra, &mut diag);
                        g.rk4(&diag, &mut r, h, &mut s);
                        b.advance(h);
                    } else {
                        g.rk4(&diag, &mut r, h, &mut s);
                    }
                }
            }
            t = *stop;
            for (u, ud) in pulses {
                conjugate_block(&mut r, u, ud);
            }
            if *sample {
                out.push(r);
            }
        }
        out
    }
}

/// Seed of trajectory `index` derived from the master seed.
pub fn trajectory_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(index as u64 ^ 0x5851_F42D_4C95_7F2D))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exactly discretized OU process; starts in the stationary distribution.
pub struct OuProcess {
    x: f64,
    sigma: f64,
    tau_c: f64,
}

impl OuProcess {
    pub fn new(sigma: f64, tau_c: f64, rng: &mut ChaCha8Rng) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        Self { x: sigma * z, sigma, tau_c }
    }

    pub fn value(&self) -> f64 {
        self.x
    }

    pub fn advance(&mut self, h: f64, rng: &mut ChaCha8Rng) {
        let z: f64 = StandardNormal.sample(rng);
        let decay = (-h / self.tau_c).exp();
        self.x = self.x * decay + self.sigma * (1.0 - decay * decay).sqrt() * z;
    }
}

struct TrajectoryBath {
    rng: ChaCha8Rng,
    qubits: [OuProcess; 3],
}

impl TrajectoryBath {
    fn new(bath: &OuBath, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(bath.seed, index));
        let qubits = [
            OuProcess::new(bath.sigma, bath.tau_c, &mut rng),
            OuProcess::new(bath.sigma, bath.tau_c, &mut rng),
            OuProcess::new(bath.sigma, bath.tau_c, &mut rng),
        ];
        Self { rng, qubits }
    }

    /// Diagonal of `Σ b_q σz_q / 2`, held over the coming step.
    fn energies(&self, out: &mut [f64; DIM]) {
        let b = [self.qubits[0].x * 0.5, self.qubits[1].x * 0.5, self.qubits[2].x * 0.5];
        for (a, e) in out.iter_mut().enumerate() {
            let s = |q: usize| if a >> (NUM_QUBITS - 1 - q) & 1 == 0 { b[q] } else { -b[q] };
            *e = s(0) + s(1) + s(2);
        }
    }

    fn advance(&mut self, h: f64) {
        for q in &mut self.qubits {
            q.advance(h, &mut self.rng);
        }
    }
}

/// `n_steps` samples of a stationary OU path spaced by `dt`.
pub fn sample_ou_path(tau_c: f64, sigma: f64, dt: f64, n_steps: usize, seed: u64) -> Result<Vec<f64>> {
    if !(tau_c > 0.0 && dt > 0.0 && sigma >= 0.0) {
        return Err(Error::InvalidParameter("tau_c and dt must be positive, sigma non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = OuProcess::new(sigma, tau_c, &mut rng);
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        out.push(p.value());
        p.advance(dt, &mut rng);
    }
    Ok(out)
}

/// Result of [`calibrate_ou_sigma`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub sigma: f64,
    /// 1/e time of the single-qubit coherence reached with `sigma`.
    pub coherence_time: f64,
}

/// Settings of the bath calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    pub t2: f64,
    pub tau_c: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub dt: f64,
    pub sigma_bounds: (f64, f64),
}

impl CalibrationTarget {
    pub fn new(t2: f64, tau_c: f64, trajectories: usize, seed: u64) -> Self {
        Self { t2, tau_c, trajectories, seed, dt: t2 / 2000.0, sigma_bounds: (0.1, 1000.0) }
    }
}

/// Ensemble coherence `|<exp(-iσΦ)>|` of the three qubits of `|+++>` under
/// the bath alone, evaluated from the integrated phase of each path.
///
/// With no damping and no coherent terms each trajectory only accumulates
/// the phase `∫ b dt` (held per step, as in the integrator), and that phase
/// is linear in σ, so all bisection steps reuse the same paths.
struct PhaseEnsemble {
    times: Vec<f64>,
    /// phases[traj][qubit][time] for σ = 1
    phases: Vec<[Vec<f64>; 3]>,
}

impl PhaseEnsemble {
    fn new(target: &CalibrationTarget, horizon: f64) -> Self {
        let n = steps_for(horizon, target.dt);
        let h = horizon / n as f64;
        let stride = (n / 800).max(1);
        let times: Vec<f64> = (0..=n).step_by(stride).map(|k| k as f64 * h).collect();
        let unit = OuBath { sigma: 1.0, tau_c: target.tau_c, trajectories: target.trajectories, seed: target.seed };
        let phases = (0..target.trajectories)
            .into_par_iter()
            .map(|traj| {
                let mut b = TrajectoryBath::new(&unit, traj);
                let mut acc = [0.0f64; 3];
                let mut rec: [Vec<f64>; 3] = Default::default();
                for k in 0..=n {
                    if k % stride == 0 {
                        for q in 0..3 {
                            rec[q].push(acc[q]);
                        }
                    }
                    if k == n {
                        break;
                    }
                    for q in 0..3 {
                        acc[q] += b.qubits[q].x * h;
                    }
                    b.advance(h);
                }
                rec
            })
            .collect();
        Self { times, phases }
    }

    fn coherence(&self, sigma: f64) -> Vec<f64> {
        let n = self.phases.len() as f64;
        (0..self.times.len())
            .map(|k| {
                let mut total = 0.0;
                for q in 0..3 {
                    let s: C64 =
                        self.phases.iter().map(|p| C64::from_polar(1.0, -sigma * p[q][k])).sum();
                    total += (s / n).norm();
                }
                total / 3.0
            })
            .collect()
    }

    fn one_over_e_time(&self, sigma: f64) -> f64 {
        let c = self.coherence(sigma);
        let level = (-1.0f64).exp();
        for k in 1..c.len() {
            if c[k] <= level {
                let (t0, t1) = (self.times[k - 1], self.times[k]);
                let f = (c[k - 1] - level) / (c[k - 1] - c[k]);
                return t0 + f * (t1 - t0);
            }
        }
        f64::INFINITY
    }
}

/// Bisection on σ so that the unprotected coherence decays to 1/e at `t2`.
pub fn calibrate_ou_sigma(target: &CalibrationTarget) -> Result<Calibration> {
    let (lo0, hi0) = target.sigma_bounds;
    if !(target.t2 > 0.0 && target.tau_c > 0.0 && target.trajectories > 0 && lo0 > 0.0 && hi0 > lo0) {
        return Err(Error::InvalidParameter("calibration needs positive t2, tau_c, trajectories and bounds".into()));
    }
    check_dt(target.dt)?;
    let ens = PhaseEnsemble::new(target, 3.0 * target.t2);
    let (mut lo, mut hi) = (lo0, hi0);
    let (t_lo, t_hi) = (ens.one_over_e_time(lo), ens.one_over_e_time(hi));
    if !(t_lo > target.t2 && t_hi < target.t2) {
        return Err(Error::Calibration(format!(
            "sigma bounds [{lo}, {hi}] give 1/e times [{t_lo:.4}, {t_hi:.4}] s, which do not bracket {:.4} s",
            target.t2
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ens.one_over_e_time(mid) > target.t2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    let sigma = 0.5 * (lo + hi);
    Ok(Calibration { sigma, coherence_time: ens.one_over_e_time(sigma) })
}

/// Mean transverse coherence `2|ρ_01|` of the three single-qubit marginals.
pub fn mean_coherence(rho: &DensityMatrix) -> f64 {
    (1..=NUM_QUBITS)
        .map(|q| 2.0 * rho.partial_trace(&[q]).expect("valid qubit")[(0, 1)].norm())
        .sum::<f64>()
        / NUM_QUBITS as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{prepare_ghz, prepare_w};

    fn random_state(seed: u64) -> DensityMatrix {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = ComplexMatrix::from_fn(DIM, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &a * &a.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
    }

    fn default_noise() -> (SpinSystem, NoiseModel) {
        let s = SpinSystem::default();
        let n = NoiseModel::from_spins(&s);
        (s, n)
    }

    #[test]
    fn maximally_mixed_is_stationary() {
        let (mut s, n) = default_noise();
        s.include_hamiltonian = true;
        s.offsets_hz = [100.0, -50.0, 20.0];
        let d = lindblad_rhs(DensityMatrix::maximally_mixed().matrix(), &s, &n).unwrap();
        assert!(d.frobenius_norm() < 1e-15);
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let (mut s, n) = default_noise();
        s.include_hamiltonian = true;
        s.offsets_hz = [30.0, 10.0, -70.0];
        for seed in 0..100 {
            let rho = random_state(seed);
            let d = lindblad_rhs(rho.matrix(), &s, &n).unwrap();
            assert!(d.trace().norm() < 1e-12);
            assert!(d.max_asymmetry() < 1e-12);
        }
        assert!(matches!(
            lindblad_rhs(&ComplexMatrix::identity(4), &s, &n),
            Err(Error::DimensionMismatch { expected: 8, found: 4 })
        ));
    }

    #[test]
    fn structured_generator_matches_dense() {
        let (mut s, n) = default_noise();
        s.include_hamiltonian = true;
        s.offsets_hz = [120.0, -35.0, 60.0];
        let g = Generator::new(&s.energies(), &n.kappa_x, &n.kappa_z);
        for seed in 0..10 {
            let rho = random_state(seed);
            let dense = lindblad_rhs(rho.matrix(), &s, &n).unwrap();
            let mut out = [ZERO; N2];
            g.apply(&g.diag, &to_block(rho.matrix()), &mut out);
            assert!(from_block(&out).max_abs_diff(&dense) < 1e-9);
        }
    }

    #[test]
    fn ghz_corner_rate() {
        // Corner coherence of GHZ loses Σκz + Σκx/2 per unit time.
        let (s, n) = default_noise();
        let g = prepare_ghz();
        let d = lindblad_rhs(g.matrix(), &s, &n).unwrap();
        let rate: f64 = n.kappa_z.iter().sum::<f64>() + n.kappa_x.iter().sum::<f64>() / 2.0;
        // d(ρ07)/dt also receives κx/2 feeds from other corners, which are zero here.
        assert!((d[(0, 7)].re - rate * 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let (s, n) = default_noise();
        let g = prepare_ghz();
        let out = evolve_markovian(&g, &s, &n, 0.0, 1e-3).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.states[0].matrix(), g.matrix());
    }

    #[test]
    fn pure_dephasing_keeps_populations() {
        let (s, mut n) = default_noise();
        n.kappa_x = [0.0; 3];
        let w = prepare_w();
        let out = evolve_markovian(&w, &s, &n, 0.3, 1e-3).unwrap();
        for st in &out.states {
            assert_eq!(st.matrix().diagonal(), w.matrix().diagonal());
        }
    }

    #[test]
    fn halving_dt_converges() {
        let (s, n) = default_noise();
        let g = prepare_w();
        let times = [0.1, 0.3, 0.5];
        let dt = default_dt(&s, None);
        let a = evolve_markovian_at(&g, &s, &n, &times, dt).unwrap();
        let b = evolve_markovian_at(&g, &s, &n, &times, dt / 2.0).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(x.matrix().max_abs_diff(y.matrix()) < 1e-8);
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let (s, n) = default_noise();
        let g = prepare_ghz();
        assert!(evolve_markovian(&g, &s, &n, 1.0, 0.0).is_err());
        assert!(evolve_markovian_at(&g, &s, &n, &[0.2, 0.1], 1e-3).is_err());
        assert!(evolve_correlated(&g, &s, &n, None, &[0.1], 1e-3).is_err());
        let mut bad = s.clone();
        bad.t2[1] = 20.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ou_path_basics() {
        let p = sample_ou_path(0.01, 0.0, 1e-4, 100, 3).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));
        let a = sample_ou_path(0.01, 2.0, 1e-4, 100, 3).unwrap();
        let b = sample_ou_path(0.01, 2.0, 1e-4, 100, 3).unwrap();
        assert_eq!(a, b);
        assert!(sample_ou_path(0.0, 1.0, 1e-4, 10, 0).is_err());
    }

    #[test]
    fn seeds_differ_per_trajectory() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| trajectory_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
    }

    #[test]
    fn calibration_bounds_must_bracket() {
        let mut t = CalibrationTarget::new(0.53, 0.01, 50, 1);
        t.sigma_bounds = (100.0, 200.0);
        assert!(matches!(calibrate_ou_sigma(&t), Err(Error::Calibration(_))));
    }
}
