//! Gate-level preparation of the GHZ, W and WW̄ states and of the `|000>`
//! pseudopure state.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::linalg::{
    check_qubit, embed, kron, ComplexMatrix, DensityMatrix, C64, DIM, I, NUM_QUBITS, ONE, ZERO,
};
use crate::noise::SpinSystem;

/// Phase of a rotation about `-y`.
pub const PHASE_MINUS_Y: f64 = 3.0 * FRAC_PI_2;

/// Exact flip angle behind the rounded `0.39π` of the W circuit.
pub fn w_angle() -> f64 {
    2.0 * (2.0f64 / 3.0).sqrt().acos()
}

/// Exact flip angle behind the rounded `0.61π` of the WW̄ circuit.
pub fn wwbar_angle() -> f64 {
    2.0 * (1.0 / 3f64.sqrt()).acos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub label: String,
    pub unitary: ComplexMatrix,
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        rho.evolve_unitary(&self.unitary)
    }

    pub fn apply_ket(&self, ket: &[C64]) -> Vec<C64> {
        self.unitary.apply(ket)
    }

    /// `other` after `self`.
    pub fn then(&self, other: &Gate) -> Gate {
        let mut targets = self.targets.clone();
        targets.extend(other.targets.iter().filter(|q| !self.targets.contains(q)));
        Gate {
            label: format!("{} ; {}", self.label, other.label),
            unitary: &other.unitary * &self.unitary,
            targets,
        }
    }
}

/// 2x2 `exp(-i·angle·(cos φ σx + sin φ σy)/2)`.
pub fn rotation_2x2(angle: f64, phase: f64) -> ComplexMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let off = -I * s;
    ComplexMatrix::new(
        2,
        vec![
            C64::new(c, 0.0),
            off * C64::from_polar(1.0, -phase),
            off * C64::from_polar(1.0, phase),
            C64::new(c, 0.0),
        ],
    )
    .expect("2x2")
}

pub fn rotation(qubit: usize, angle: f64, phase: f64) -> Result<Gate> {
    Ok(Gate {
        label: format!("R{qubit}({angle:.6})_{phase:.6}"),
        unitary: embed(&rotation_2x2(angle, phase), qubit)?,
        targets: vec![qubit],
    })
}

/// The same rotation applied simultaneously to every listed qubit.
pub fn collective_rotation(qubits: &[usize], angle: f64, phase: f64) -> Result<Gate> {
    if qubits.is_empty() {
        return Err(Error::EmptySubset);
    }
    let r = rotation_2x2(angle, phase);
    let id = ComplexMatrix::identity(2);
    for &q in qubits {
        check_qubit(q)?;
    }
    let f: Vec<&ComplexMatrix> =
        (1..=NUM_QUBITS).map(|q| if qubits.contains(&q) { &r } else { &id }).collect();
    Ok(Gate {
        label: format!("R{qubits:?}({angle:.6})_{phase:.6}"),
        unitary: kron(&kron(f[0], f[1]), f[2]),
        targets: qubits.to_vec(),
    })
}

fn controlled(control: usize, target: usize, op: &ComplexMatrix, label: String) -> Result<Gate> {
    check_qubit(control)?;
    check_qubit(target)?;
    if control == target {
        return Err(Error::SameQubit(control));
    }
    let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
    let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
    let idle = embed(&p0, control)?;
    let active = &embed(&p1, control)? * &embed(op, target)?;
    Ok(Gate { label, unitary: &idle + &active, targets: vec![control, target] })
}

pub fn cnot(control: usize, target: usize) -> Result<Gate> {
    let x = ComplexMatrix::new(2, vec![ZERO, ONE, ONE, ZERO]).expect("2x2");
    controlled(control, target, &x, format!("CNOT{control}{target}"))
}

pub fn controlled_rotation(control: usize, target: usize, angle: f64, phase: f64) -> Result<Gate> {
    controlled(
        control,
        target,
        &rotation_2x2(angle, phase),
        format!("CR{control}{target}({angle:.6})_{phase:.6}"),
    )
}

fn ground_ket() -> Vec<C64> {
    let mut k = vec![ZERO; DIM];
    k[0] = ONE;
    k
}

fn run_circuit(gates: &[Gate]) -> DensityMatrix {
    let ket = gates.iter().fold(ground_ket(), |k, g| g.apply_ket(&k));
    DensityMatrix::from_ket(&ket).expect("unitary circuits keep the norm")
}

pub fn ghz_circuit() -> Vec<Gate> {
    vec![
        rotation(1, FRAC_PI_2, PHASE_MINUS_Y).unwrap(),
        cnot(1, 2).unwrap(),
        cnot(1, 3).unwrap(),
    ]
}

pub fn w_circuit() -> Vec<Gate> {
    vec![
        rotation(1, PI, FRAC_PI_2).unwrap(),
        rotation(2, w_angle(), FRAC_PI_2).unwrap(),
        cnot(2, 1).unwrap(),
        controlled_rotation(1, 3, FRAC_PI_2, FRAC_PI_2).unwrap(),
        cnot(3, 1).unwrap(),
    ]
}

pub fn wwbar_circuit() -> Vec<Gate> {
    vec![
        rotation(1, FRAC_PI_3, PHASE_MINUS_Y).unwrap(),
        controlled_rotation(1, 2, wwbar_angle(), FRAC_PI_2).unwrap(),
        controlled_rotation(2, 1, FRAC_PI_2, PHASE_MINUS_Y).unwrap(),
        cnot(1, 3).unwrap(),
        cnot(2, 3).unwrap(),
        collective_rotation(&[1, 2, 3], FRAC_PI_2, FRAC_PI_2).unwrap(),
    ]
}

/// `(|000> - |111>)/√2`
pub fn prepare_ghz() -> DensityMatrix {
    run_circuit(&ghz_circuit())
}

/// `(|100> + |010> + |001>)/√3`
pub fn prepare_w() -> DensityMatrix {
    run_circuit(&w_circuit())
}

/// Equal superposition of the six basis states with one or two excitations.
pub fn prepare_wwbar() -> DensityMatrix {
    run_circuit(&wwbar_circuit())
}

/// Named target states accepted throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Ghz,
    W,
    WWbar,
}

impl StateKind {
    pub const ALL: [StateKind; 3] = [StateKind::Ghz, StateKind::W, StateKind::WWbar];

    pub fn prepare(self) -> DensityMatrix {
        match self {
            StateKind::Ghz => prepare_ghz(),
            StateKind::W => prepare_w(),
            StateKind::WWbar => prepare_wwbar(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateKind::Ghz => "ghz",
            StateKind::W => "w",
            StateKind::WWbar => "wwbar",
        }
    }
}

impl std::str::FromStr for StateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ghz" => Ok(StateKind::Ghz),
            "w" => Ok(StateKind::W),
            "wwbar" | "ww" => Ok(StateKind::WWbar),
            other => Err(Error::InvalidParameter(format!("unknown state '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudopureParams {
    pub epsilon: f64,
}

impl PseudopureParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon <= 1.0 {
            Ok(Self { epsilon })
        } else {
            Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1]")))
        }
    }
}

/// `(1-ε)/8 · 1 + ε · pure`
pub fn pseudopure(pure: &DensityMatrix, params: PseudopureParams) -> Result<DensityMatrix> {
    let p = PseudopureParams::new(params.epsilon)?;
    let mixed = ComplexMatrix::identity(DIM).scale_real((1.0 - p.epsilon) / DIM as f64);
    DensityMatrix::new(&mixed + &pure.matrix().scale_real(p.epsilon))
}

/// Keeps only the zero-quantum elements (equal excitation number in bra and ket).
pub fn crusher(rho: &DensityMatrix) -> DensityMatrix {
    let m = rho.matrix();
    let kept = ComplexMatrix::from_fn(DIM, |a, b| {
        if (a as u32).count_ones() == (b as u32).count_ones() {
            m[(a, b)]
        } else {
            ZERO
        }
    });
    let mut out = DensityMatrix::from_matrix_unchecked(kept);
    out.set_tolerance(rho.tolerance());
    out
}

/// Free-evolution times for the three coupling-selective periods, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDelays {
    pub d12: f64,
    pub d13: f64,
    pub d23: f64,
}

impl PairDelays {
    /// Solves for `τ_ij = 1/(4|J_ij|)`, the time a zz coupling needs to
    /// produce the quarter-turn conditional phase each controlled step uses.
    pub fn solve(spins: &SpinSystem) -> Result<Self> {
        let t = |j: f64| {
            if j == 0.0 || !j.is_finite() {
                Err(Error::InvalidParameter("coupling must be non-zero".into()))
            } else {
                Ok(1.0 / (4.0 * j.abs()))
            }
        };
        let [j12, j13, j23] = spins.couplings_hz;
        Ok(Self { d12: t(j12)?, d13: t(j13)?, d23: t(j23)? })
    }

    fn for_pair(&self, a: usize, b: usize) -> f64 {
        match (a.min(b), a.max(b)) {
            (1, 2) => self.d12,
            (1, 3) => self.d13,
            _ => self.d23,
        }
    }
}

/// Flip angles and polarization of the pseudopure preparation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudopureSequence {
    pub theta1: f64,
    pub theta2: f64,
    pub epsilon: f64,
}

impl Default for PseudopureSequence {
    fn default() -> Self {
        Self { theta1: 5.0 * PI / 12.0, theta2: FRAC_PI_3, epsilon: 1e-5 }
    }
}

impl PseudopureSequence {
    /// Thermal state `(1 + ε Σ I_iz)/8`.
    pub fn thermal(&self) -> DensityMatrix {
        let diag: Vec<f64> = (0..DIM)
            .map(|a| {
                let mz: f64 = (0..NUM_QUBITS)
                    .map(|k| if a >> k & 1 == 0 { 0.5 } else { -0.5 })
                    .sum();
                (1.0 + self.epsilon * mz) / DIM as f64
            })
            .collect();
        DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_real_diagonal(&diag))
    }

    pub fn run(&self, spins: &SpinSystem, delays: &PairDelays) -> Result<DensityMatrix> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {} outside (0, 1]", self.epsilon)));
        }
        for d in [delays.d12, delays.d13, delays.d23] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter(format!("delay {d} must be positive")));
            }
        }
        let mut rho = self.thermal();
        rho = rotation(1, self.theta1, 0.0)?.apply(&rho);
        rho = rotation(2, self.theta2, 0.0)?.apply(&rho);
        rho = checked(crusher(&rho))?;
        for (c, t) in [(1, 2), (1, 3), (2, 3)] {
            let u = coupled_controlled_rotation(spins, c, t, delays.for_pair(c, t))?;
            rho = checked(crusher(&rho.evolve_unitary(&u)))?;
        }
        Ok(rho)
    }
}

fn checked(rho: DensityMatrix) -> Result<DensityMatrix> {
    rho.validate()?;
    Ok(rho)
}

/// Builds the pulse/free-evolution realization of `CR_ct(π/2)_y`:
/// `R_t(π/4)_y · exp(iπ/8 Z_c Y_t)`, with the `Z_c Y_t` term produced by
/// refocused zz evolution sandwiched between `π/2` pulses on the target.
fn coupled_controlled_rotation(
    spins: &SpinSystem,
    control: usize,
    target: usize,
    tau: f64,
) -> Result<ComplexMatrix> {
    let spectator = 6 - control - target;
    let j = spins.coupling(control, target)?;
    let energies = spins.energies();
    let free = |t: f64| {
        let d: Vec<C64> = energies.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        ComplexMatrix::from_diagonal(&d)
    };
    let pi_k = rotation(spectator, PI, 0.0)?.unitary;
    let pi_all = collective_rotation(&[1, 2, 3], PI, 0.0)?.unitary;
    let quarter = free(tau / 4.0);
    let half_block = &(&pi_k * &quarter) * &(&pi_k * &quarter);
    let refocused = &(&pi_all * &half_block) * &(&pi_all * &half_block);

    // Sign of J decides which π/2 pulse opens the window.
    let open_phase = if j > 0.0 { PI } else { 0.0 };
    let open = rotation(target, FRAC_PI_2, open_phase)?.unitary;
    let close = rotation(target, FRAC_PI_2, open_phase + PI)?.unitary;
    let delta = rotation(target, FRAC_PI_4, FRAC_PI_2)?.unitary;
    Ok(&delta * &(&close * &(&refocused * &open)))
}

/// Runs the pseudopure preparation with the default angles and `ε = 1e-5`.
pub fn prepare_pseudopure_sequence(spins: &SpinSystem, delays: &PairDelays) -> Result<DensityMatrix> {
    PseudopureSequence::default().run(spins, delays)
}

/// Cosine between the traceless parts of `rho` and `|000><000|`; 1 means
/// the deviation is exactly of pseudopure form.
pub fn pseudopure_correlation(rho: &DensityMatrix) -> f64 {
    let dev: Vec<C64> = (0..DIM * DIM)
        .map(|k| {
            let (a, b) = (k / DIM, k % DIM);
            let id = if a == b { 1.0 / DIM as f64 } else { 0.0 };
            rho.get(a, b) - id
        })
        .collect();
    let target: Vec<f64> = (0..DIM * DIM)
        .map(|k| {
            let (a, b) = (k / DIM, k % DIM);
            let p = if k == 0 { 1.0 } else { 0.0 };
            p - if a == b { 1.0 / DIM as f64 } else { 0.0 }
        })
        .collect();
    let dot: f64 = dev.iter().zip(&target).map(|(d, t)| d.re * t).sum();
    let nd = dev.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
    let nt = target.iter().map(|t| t * t).sum::<f64>().sqrt();
    if nd == 0.0 {
        0.0
    } else {
        dot / (nd * nt)
    }
}

/// Parses an angle such as `1.2`, `pi`, `-pi/2`, `0.5pi` or `3pi/4`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let t = text.trim().to_ascii_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().ok().filter(|d| *d != 0.0)?),
        None => (t.as_str(), 1.0),
    };
    let coeff = num.strip_suffix("pi")?.trim_end_matches('*');
    let k = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    Some(k * PI / den)
}

/// Phase given as an angle or one of the axis names `x`, `y`, `-x`, `-y`.
pub fn parse_phase(text: &str) -> Option<f64> {
    match text.trim().to_ascii_lowercase().as_str() {
        "x" => Some(0.0),
        "y" => Some(FRAC_PI_2),
        "-x" => Some(PI),
        "-y" => Some(PHASE_MINUS_Y),
        other => parse_angle(other),
    }
}

/// Parses a circuit, one gate per line: `NAME TARGETS [ANGLE [PHASE]]`.
///
/// `NAME` is `R`, `CNOT` or `CR`; `TARGETS` is a comma-separated qubit list
/// (`R` accepts several qubits, the two-qubit gates take `control,target`).
/// Blank lines and text after `#` are ignored.
pub fn parse_circuit(text: &str) -> Result<Vec<Gate>> {
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = body.split_whitespace().collect();
        let targets: Vec<usize> = fields
            .get(1)
            .ok_or_else(|| err("missing targets".into()))?
            .split(',')
            .map(|q| q.trim().parse::<usize>().map_err(|_| err(format!("bad qubit '{q}'"))))
            .collect::<Result<_>>()?;
        let angle = fields
            .get(2)
            .map(|a| parse_angle(a).ok_or_else(|| err(format!("bad angle '{a}'"))))
            .transpose()?;
        let phase = fields
            .get(3)
            .map(|p| parse_phase(p).ok_or_else(|| err(format!("bad phase '{p}'"))))
            .transpose()?
            .unwrap_or(0.0);
        if fields.len() > 4 {
            return Err(err("too many fields".into()));
        }
        let need_pair = |t: &[usize]| -> Result<(usize, usize)> {
            match t {
                [c, t] => Ok((*c, *t)),
                _ => Err(err("expected control,target".into())),
            }
        };
        let gate = match fields[0].to_ascii_uppercase().as_str() {
            "R" => {
                let a = angle.ok_or_else(|| err("R needs an angle".into()))?;
                collective_rotation(&targets, a, phase)
            }
            "CNOT" => {
                if angle.is_some() {
                    return Err(err("CNOT takes no angle".into()));
                }
                let (c, t) = need_pair(&targets)?;
                cnot(c, t)
            }
            "CR" => {
                let a = angle.ok_or_else(|| err("CR needs an angle".into()))?;
                let (c, t) = need_pair(&targets)?;
                controlled_rotation(c, t, a, phase)
            }
            other => return Err(err(format!("unknown gate '{other}'"))),
        }
        .map_err(|e| err(e.to_string()))?;
        gates.push(gate);
    }
    Ok(gates)
}

/// Applies a circuit to `|000>`.
pub fn run_gates(gates: &[Gate]) -> DensityMatrix {
    run_circuit(gates)
}
