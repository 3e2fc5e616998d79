use cavity_ising::ising::{dsx_dbx, ChainSize};
use cavity_ising::selfconsistency::*;
use cavity_ising::SystemParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TL: ChainSize = ChainSize::ThermodynamicLimit;

fn baseline() -> SystemParams {
    SystemParams::baseline()
}

fn roots(p: &SystemParams) -> Vec<BranchPoint> {
    find_fixed_points(p, &FixedPointOptions::default()).unwrap()
}

#[test]
fn root_structure_across_the_bistable_window() {
    for size in [ChainSize::Finite(200), TL] {
        let p = SystemParams { size, ..baseline() };
        let crit = critical_points(&p, &CriticalPointOptions::default()).unwrap();
        assert!(crit.g1 < crit.g2 && !crit.merged);

        let below = roots(&p.with_drive(0.5 * crit.g1));
        assert_eq!(below.len(), 1);
        assert!(below[0].stable && below[0].is_vacuum());

        let inside = roots(&p.with_drive(0.5 * (crit.g1 + crit.g2)));
        assert_eq!(inside.len(), 5);
        assert!(inside[0].is_vacuum() && inside[0].stable);
        // Middle branch unstable, outer branch stable.
        assert!(!inside[1].stable && !inside[2].stable);
        assert!(inside[3].stable && inside[4].stable);
        assert!(inside[1].phi_s > 0.0 && inside[1].phi_s < inside[3].phi_s);

        let above = roots(&p.with_drive(1.4 * crit.g2));
        assert_eq!(above.len(), 3);
        assert!(!above[0].stable);
        assert!(above[1].stable && above[2].stable);
    }
}

#[test]
fn reported_roots_are_zeros_of_the_residual() {
    let p = baseline();
    for g0 in [0.7, 0.85, 0.9, 1.1] {
        for b in roots(&p.with_drive(g0)) {
            assert!(residual(b.phi_s, &p.with_drive(g0)).unwrap().abs() < 1e-9);
        }
    }
}

#[test]
fn vacuum_is_marginal_at_the_upper_critical_drive() {
    let p = baseline();
    let crit = critical_points(&p, &CriticalPointOptions::default()).unwrap();
    let c = stability_coefficient(0.0, &p.with_drive(crit.g2)).unwrap();
    assert!(c.m_consistent.abs() < 1e-6, "{}", c.m_consistent);
}

#[test]
fn upper_critical_drive_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = CriticalPointOptions { g0_max: 50.0, ..CriticalPointOptions::default() };
    for _ in 0..10 {
        let size = if rng.gen_bool(0.5) { ChainSize::Finite(2 * rng.gen_range(10..150)) } else { TL };
        let p = SystemParams {
            detuning: rng.gen_range(0.2..2.0),
            loss: rng.gen_range(0.1..2.0),
            splitting: rng.gen_range(0.05..0.95),
            coupling: 1.0,
            drive: 0.0,
            size,
            drive_phase: 0.0,
        };
        let slope = dsx_dbx(&p.chain(0.0)).unwrap();
        let closed = (p.cavity_denominator() / (-2.0 * p.detuning * slope)).sqrt();
        let crit = critical_points(&p, &opts).unwrap();
        assert!((crit.g2 / closed - 1.0).abs() < 1e-6, "{p:?}: {} vs {closed}", crit.g2);
    }
}

#[test]
fn drive_phase_only_rotates_the_field() {
    let base = baseline();
    let crit0 = critical_points(&base, &CriticalPointOptions::default()).unwrap();
    for theta in [std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2] {
        let turned = SystemParams { drive_phase: theta, ..base };
        let crit = critical_points(&turned, &CriticalPointOptions::default()).unwrap();
        assert!((crit.g1 - crit0.g1).abs() < 1e-10 && (crit.g2 - crit0.g2).abs() < 1e-10);
        for g0 in [0.5, 0.87, 1.2] {
            let a = roots(&base.with_drive(g0));
            let b = roots(&turned.with_drive(g0));
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x.phi_s - y.phi_s).abs() < 1e-10);
                assert!((x.s_x - y.s_x).abs() < 1e-10);
                assert!((x.c_s - y.c_s).abs() < 1e-10);
                let rotated = x.a_s * num_complex::Complex64::from_polar(1.0, theta);
                assert!((rotated - y.a_s).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn forward_and_backward_sweeps_enclose_a_loop() {
    let p = baseline();
    let grid: Vec<f64> = (0..=150).map(|k| 0.01 * k as f64).collect();
    let sweep = sweep_hysteresis(&p, &grid, &FixedPointOptions::default(), Execution::Parallel).unwrap();
    let crit = critical_points(&p, &CriticalPointOptions::default()).unwrap();
    let jump = sweep.forward_jump().unwrap();
    let drop = sweep.backward_drop().unwrap();
    assert!(jump > drop);
    assert!(jump >= crit.g2 && jump - crit.g2 <= 0.01 + 1e-12);
    assert!(drop >= crit.g1 && drop - crit.g1 <= 0.01 + 1e-12);
    // Outside the window the traces agree.
    for (f, b) in sweep.forward.iter().zip(&sweep.backward) {
        if f.g0 < crit.g1 || f.g0 > crit.g2 {
            assert_eq!(f.phi_s, b.phi_s);
        }
    }
}

#[test]
fn no_loop_above_the_merge_point() {
    let p = SystemParams { splitting: 1.5, ..baseline() };
    let grid: Vec<f64> = (0..=80).map(|k| 0.025 * k as f64).collect();
    let sweep = sweep_hysteresis(&p, &grid, &FixedPointOptions::default(), Execution::Serial).unwrap();
    assert_eq!(sweep.forward, sweep.backward);
    assert!(sweep.forward_jump().is_some());
}

#[test]
fn traces_vanish_below_the_lower_critical_drive() {
    let grid: Vec<f64> = (0..40).map(|k| 0.02 * k as f64).collect();
    let sweep = sweep_hysteresis(&baseline(), &grid, &FixedPointOptions::default(), Execution::Serial).unwrap();
    assert!(sweep.forward.iter().chain(&sweep.backward).all(|t| t.phi_s == 0.0 && t.s_x == 0.0));
}

#[test]
fn serial_and_parallel_sweeps_are_identical() {
    let grid: Vec<f64> = (0..=60).map(|k| 0.02 * k as f64).collect();
    let opts = FixedPointOptions::default();
    let serial = sweep_hysteresis(&baseline(), &grid, &opts, Execution::Serial).unwrap();
    let parallel = sweep_hysteresis(&baseline(), &grid, &opts, Execution::Parallel).unwrap();
    assert_eq!(serial, parallel);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn branch_invariants(
        g0 in 0.0f64..1.6,
        detuning in 0.2f64..1.5,
        loss in 0.1f64..1.0,
        splitting in 0.0f64..1.4,
        theta in 0.0f64..6.3,
    ) {
        let p = SystemParams { detuning, loss, splitting, drive: g0, size: TL, drive_phase: theta, ..baseline() };
        let bound = p.phi_bound();
        let found = roots(&p);
        prop_assert_eq!(found[0].phi_s, 0.0);
        for b in &found {
            prop_assert!(b.phi_s.abs() <= bound + 1e-9);
            prop_assert_eq!(b.stable, b.c_s > 0.0);
            if b.stable {
                prop_assert_eq!(b.phi_s.abs() > VACUUM_TOL, b.s_x.abs() > VACUUM_TOL);
            }
            // Quadrature consistency and Cauchy-Schwarz.
            let rotated = b.a_s * num_complex::Complex64::from_polar(1.0, -theta);
            prop_assert!((rotated.re - b.phi_s).abs() <= 1e-10);
            prop_assert!(b.a_s.norm_sqr() >= b.phi_s * b.phi_s - 1e-15);
            if !b.is_vacuum() {
                let mirror = found.iter().find(|m| (m.phi_s + b.phi_s).abs() <= 1e-8);
                prop_assert!(mirror.is_some());
                let m = mirror.unwrap();
                prop_assert!((m.c_s.abs() - b.c_s.abs()).abs() <= 1e-8);
                prop_assert_eq!(m.stable, b.stable);
            }
        }
    }
}

#[test]
fn lower_critical_drive_never_exceeds_upper() {
    for splitting in [0.1, 0.5, 0.9, 1.2, 2.0] {
        let p = SystemParams { splitting, ..baseline() };
        let c = critical_points(&p, &CriticalPointOptions::default()).unwrap();
        assert!(c.g1 <= c.g2);
        assert_eq!(c.merged, (c.g2 - c.g1) / c.g2 < 1e-6);
    }
}

#[test]
fn missing_branch_is_reported() {
    let opts = CriticalPointOptions { g0_max: 0.5, ..CriticalPointOptions::default() };
    assert!(matches!(
        critical_points(&baseline(), &opts),
        Err(cavity_ising::Error::CriticalPointNotFound { .. })
    ));
}
