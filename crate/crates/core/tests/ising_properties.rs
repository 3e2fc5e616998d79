use cavity_ising::exact_diag::exact_diag_sx;
use cavity_ising::ising::{dsx_dbx, ground_state_sx, ChainSize, IsingChainParams};
use proptest::prelude::*;

const TL: ChainSize = ChainSize::ThermodynamicLimit;

fn chain(delta: f64, b_x: f64, j: f64, size: ChainSize) -> IsingChainParams {
    IsingChainParams::new(delta, b_x, j, size)
}

#[test]
fn fermionic_solution_matches_exact_diagonalization_on_ten_sites() {
    let p = chain(0.3, 0.2, 1.0, ChainSize::Finite(10));
    let jw = ground_state_sx(&p).unwrap();
    let ed = exact_diag_sx(&p).unwrap();
    assert!((jw - ed).abs() < 1e-10, "{jw} vs {ed}");
}

#[test]
fn cross_check_on_twelve_sites() {
    let p = chain(0.3, 0.2, 1.0, ChainSize::Finite(12));
    let jw = ground_state_sx(&p).unwrap();
    let ed = exact_diag_sx(&p).unwrap();
    assert!((jw - ed).abs() < 1e-10, "{jw} vs {ed}");
}

#[test]
fn slope_matches_oracle_finite_difference() {
    let p = chain(0.3, 0.2, 1.0, ChainSize::Finite(10));
    let h = 1e-4;
    let oracle = (exact_diag_sx(&p.with_b_x(0.2 + h)).unwrap()
        - exact_diag_sx(&p.with_b_x(0.2 - h)).unwrap())
        / (2.0 * h);
    let d = dsx_dbx(&p).unwrap();
    // The oracle's own O(h²) truncation is far below 1e-6 at this step.
    assert!((d - oracle).abs() < 1e-6, "{d} vs {oracle}");
}

#[test]
fn two_hundred_sites_close_to_thermodynamic_limit() {
    // Default chain fields: zero x-field, and across the paramagnetic branch.
    for b_x in [0.0, 0.2, 0.5, 1.0, 1.5, 2.5] {
        let finite = ground_state_sx(&chain(0.3, b_x, 1.0, ChainSize::Finite(200))).unwrap();
        let tl = ground_state_sx(&chain(0.3, b_x, 1.0, TL)).unwrap();
        assert!((finite - tl).abs() < 1e-4, "b_x = {b_x}: {finite} vs {tl}");
    }
}

#[test]
fn finite_size_error_shrinks_with_length() {
    let tl = ground_state_sx(&chain(0.3, 0.9, 1.0, TL)).unwrap();
    let errors: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| (ground_state_sx(&chain(0.3, 0.9, 1.0, ChainSize::Finite(n))).unwrap() - tl).abs())
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn saturates_at_large_field() {
    for size in [ChainSize::Finite(12), TL] {
        let sx = ground_state_sx(&chain(0.3, 100.0, 1.0, size)).unwrap();
        assert!(sx.abs() > 0.999, "{sx}");
    }
}

fn sizes() -> impl Strategy<Value = ChainSize> {
    prop_oneof![
        (1usize..40).prop_map(|h| ChainSize::Finite(2 * h)),
        Just(TL),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn odd_in_x_field(delta in 0.0f64..2.0, b_x in 0.0f64..3.0, size in sizes()) {
        let plus = ground_state_sx(&chain(delta, b_x, 1.0, size)).unwrap();
        let minus = ground_state_sx(&chain(delta, -b_x, 1.0, size)).unwrap();
        prop_assert!((plus + minus).abs() <= 1e-12);
    }

    #[test]
    fn bounded_and_anti_aligned(delta in -2.0f64..2.0, b_x in -3.0f64..3.0, j in 0.0f64..3.0, size in sizes()) {
        let sx = ground_state_sx(&chain(delta, b_x, j, size)).unwrap();
        prop_assert!(sx.abs() <= 1.0);
        prop_assert!(sx * b_x <= 0.0);
    }

    #[test]
    fn magnitude_non_decreasing_in_x_field(delta in 0.0f64..2.0, a in 0.0f64..3.0, b in 0.0f64..3.0, size in sizes()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = ground_state_sx(&chain(delta, lo, 1.0, size)).unwrap().abs();
        let s_hi = ground_state_sx(&chain(delta, hi, 1.0, size)).unwrap().abs();
        prop_assert!(s_hi >= s_lo - 1e-12, "{} -> {}, {} -> {}", lo, s_lo, hi, s_hi);
    }

    #[test]
    fn invariant_under_energy_rescaling(delta in 0.0f64..2.0, b_x in -3.0f64..3.0, scale in 0.01f64..100.0, size in sizes()) {
        let base = ground_state_sx(&chain(delta, b_x, 1.0, size)).unwrap();
        let scaled = ground_state_sx(&chain(scale * delta, scale * b_x, scale, size)).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12);
    }
}
