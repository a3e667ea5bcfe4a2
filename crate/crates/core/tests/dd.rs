use triq::ddseq::{
    build_cpmg, build_kddxy, build_xy16s, cycle_duration, cycle_sample_times, run_protected, run_protected_with_dt,
    run_unprotected, DDSchedule,
};
use triq::linalg::DensityMatrix;
use triq::measures::DecayCurve;
use triq::noise::{default_dt, Bath, NoiseModel, OuBath, SpinSystem};
use triq::states::StateKind;

/// Fidelities closer than this count as equal, same as the net-identity check.
const FIDELITY_EQ: f64 = 1e-9;

fn schedules(tau: f64) -> Vec<DDSchedule> {
    vec![build_xy16s(tau).unwrap(), build_kddxy(tau).unwrap(), build_cpmg(tau, 16).unwrap()]
}

fn in_unit_range(c: &DecayCurve) -> bool {
    [&c.n1, &c.n2, &c.n3, &c.n_tri, &c.fidelity, &c.purity]
        .iter()
        .all(|v| v.iter().all(|x| (0.0..=1.0 + 1e-12).contains(x)))
}

#[test]
fn noiseless_schedules_are_net_identity() {
    // Offsets are refocused by every cycle; scalar couplings commute with
    // collective π pulses and are not, so they stay off here.
    let offsets = SpinSystem {
        offsets_hz: [35.0, -80.0, 12.5],
        couplings_hz: [0.0; 3],
        include_hamiltonian: true,
        ..SpinSystem::default()
    };
    for spins in [SpinSystem::default(), offsets] {
        for s in schedules(0.25e-3) {
            let period = cycle_duration(&s);
            for kind in StateKind::ALL {
                let r = run_protected(&kind.prepare(), &spins, &NoiseModel::noiseless(), &s, 7.0 * period).unwrap();
                assert_eq!(r.curve.len(), 8);
                for f in &r.curve.fidelity {
                    assert!((f - 1.0).abs() < FIDELITY_EQ, "{} {}: {f}", s.name, kind.name());
                }
            }
        }
    }
}

#[test]
fn flip_error_robustness_ordering() {
    let spins = SpinSystem::default();
    let tau = 0.25e-3;
    for kind in StateKind::ALL {
        let rho0 = kind.prepare();
        let run = |s: DDSchedule| {
            let total = 100.0 * cycle_duration(&s);
            run_protected(&rho0, &spins, &NoiseModel::noiseless(), &s.with_flip_error(0.01), total).unwrap().curve.fidelity
        };
        let xy = run(build_xy16s(tau).unwrap());
        let kdd = run(build_kddxy(tau).unwrap());
        let cpmg = run(build_cpmg(tau, 16).unwrap());
        assert_eq!(xy.len(), 101);
        assert_eq!(kdd.len(), 101);
        for k in 1..=100 {
            assert!(kdd[k] >= xy[k] - FIDELITY_EQ, "{} cycle {k}", kind.name());
            assert!(xy[k] >= cpmg[k] - FIDELITY_EQ, "{} cycle {k}", kind.name());
        }
        let worst = |v: &[f64]| v.iter().cloned().fold(1.0, f64::min);
        assert!(worst(&cpmg) < 0.9, "single-axis control should visibly fail");
        assert!(worst(&kdd) > 1.0 - 1e-9);
    }
}

#[test]
fn markovian_noise_is_transparent_to_decoupling() {
    let spins = SpinSystem::default();
    let noise = NoiseModel::from_spins(&spins);
    let rho0 = StateKind::Ghz.prepare();
    for s in [build_xy16s(0.25e-3).unwrap(), build_kddxy(2.5e-3).unwrap()] {
        let p = run_protected(&rho0, &spins, &noise, &s, 0.4).unwrap();
        let dt = default_dt(&spins, Some(&s));
        let u = run_unprotected(&rho0, &spins, &noise, &p.series.times, dt).unwrap();
        assert!(in_unit_range(&p.curve) && in_unit_range(&u.curve));
        for (a, b) in p.curve.n_tri.iter().zip(&u.curve.n_tri) {
            assert!((a - b).abs() <= 0.02 * b.max(1e-3), "{}: {a} vs {b}", s.name);
        }
    }
}

#[test]
fn correlated_runs_are_deterministic_and_bounded() {
    let spins = SpinSystem::default();
    let noise = NoiseModel::from_spins(&spins)
        .with_bath(Bath::Correlated(OuBath { sigma: 14.0, tau_c: 1e-2, trajectories: 16, seed: 2024 }));
    let s = build_xy16s(0.25e-3).unwrap();
    let rho0: DensityMatrix = StateKind::WWbar.prepare();
    let a = run_protected(&rho0, &spins, &noise, &s, 0.06).unwrap();
    let b = run_protected(&rho0, &spins, &noise, &s, 0.06).unwrap();
    assert!(in_unit_range(&a.curve));
    assert_eq!(a.curve.n_tri, b.curve.n_tri);
    assert_eq!(a.curve.fidelity, b.curve.fidelity);
    for (x, y) in a.series.states.iter().zip(&b.series.states) {
        assert_eq!(x.matrix(), y.matrix());
    }
}

#[test]
fn sampling_lands_on_cycle_boundaries() {
    let s = build_xy16s(0.25e-3).unwrap();
    let t = cycle_sample_times(&s, 0.0405).unwrap();
    assert_eq!(t.len(), 11);
    assert!((t[10] - 0.04).abs() < 1e-15);
    let spins = SpinSystem::default();
    let r = run_protected_with_dt(&StateKind::Ghz.prepare(), &spins, &NoiseModel::noiseless(), &s, 0.0405, 1e-4).unwrap();
    assert_eq!(r.series.times, t);
}
