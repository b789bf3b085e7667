//! Cross-module invariants exercised on randomized inputs.
//!
//! Everything here goes through the public API only, so these double as a
//! check that the exported surface is sufficient for downstream use.

use proptest::prelude::*;
use timekernel_core::boundary::{BoundaryConditionSpec, DiagonalSlope, ShiftSpec};
use timekernel_core::distribution::{
    mtke_classify, mtke_free_solution, weyl_transform_distribution, DistributionBoundary,
    PiecewiseTerm, PolyVar,
};
use timekernel_core::frobenius::{classify_symmetry, conjugacy_check, solve_tke, tke_residual};
use timekernel_core::phase_space::{weyl_transform_sgn, PieceWeight};
use timekernel_core::picard::{picard_bound, picard_solve, GridSpec};
use timekernel_core::potential::PolynomialPotential;
use timekernel_core::scalar::{rat, GradedScalar};
use timekernel_core::series::series_equal;
use timekernel_core::tables::{leading_shift_table, leading_shift_ww_check, power_identity_check};

fn small_rational() -> impl Strategy<Value = GradedScalar> {
    (-6i64..=6, 1i64..=5).prop_map(|(p, q)| GradedScalar::rational(p, q))
}

fn small_potential() -> impl Strategy<Value = PolynomialPotential> {
    proptest::collection::vec(small_rational(), 1..=4).prop_map(|coeffs| {
        PolynomialPotential::from_coeffs(
            coeffs
                .into_iter()
                .enumerate()
                .map(|(i, c)| (i as u32 + 1, c)),
        )
    })
}

fn axis_boundary() -> impl Strategy<Value = BoundaryConditionSpec> {
    (
        prop_oneof![Just(DiagonalSlope::Conjugate), Just(DiagonalSlope::Commutant)],
        small_rational(),
        proptest::collection::vec((1u32..=4, small_rational()), 0..=3),
    )
        .prop_map(|(slope, constant, g)| {
            BoundaryConditionSpec::new(slope, constant, dedup_powers(g)).unwrap()
        })
}

fn dedup_powers(pairs: Vec<(u32, GradedScalar)>) -> Vec<(u32, GradedScalar)> {
    let mut seen = std::collections::BTreeMap::new();
    for (k, c) in pairs {
        seen.entry(k).or_insert(c);
    }
    seen.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The solver is linear in the axis data: solving the superposed
    /// boundary condition equals adding the two solutions.
    #[test]
    fn solver_is_linear_in_boundary_data(
        v in small_potential(),
        a in axis_boundary(),
        b in axis_boundary(),
    ) {
        let order = 10;
        let combined = match a.superpose(&b) {
            Ok(bc) => solve_tke(&v, &bc, order).unwrap(),
            // Mixed diagonal slopes cannot be superposed; nothing to check.
            Err(_) => return Ok(()),
        };
        let summed = solve_tke(&v, &a, order)
            .unwrap()
            .add(&solve_tke(&v, &b, order).unwrap())
            .unwrap();
        prop_assert!(series_equal(&combined, &summed, order).unwrap());
    }

    /// Substituting a truncated solution back into the equation leaves only
    /// terms the truncation cannot determine.
    #[test]
    fn residual_vanishes_below_the_truncation_boundary(
        v in small_potential(),
        bc in axis_boundary(),
    ) {
        let order = 12;
        let t = solve_tke(&v, &bc, order).unwrap();
        let residual = tke_residual(&t, &v).unwrap();
        let guaranteed = order - v.max_degree().max(2);
        prop_assert!(residual.vanishes_through(guaranteed));
    }

    /// Kernels built from conjugate-slope data stay conjugacy-consistent
    /// (`T(u, -v)` solves the adjoint-ordering problem termwise).
    #[test]
    fn conjugacy_of_random_solutions(v in small_potential(), c in small_rational()) {
        let with_constant =
            BoundaryConditionSpec::new(DiagonalSlope::Commutant, c, []).unwrap();
        let bc = BoundaryConditionSpec::time_of_arrival()
            .superpose(&with_constant)
            .unwrap();
        let t = solve_tke(&v, &bc, 10).unwrap();
        prop_assert!(conjugacy_check(&t).conjugate);
    }

    /// Real even data on a real potential stays Hermitian and time-reversal
    /// invariant; an imaginary axis constant breaks Hermiticity only.
    #[test]
    fn symmetry_flags_track_the_data(v in small_potential(), k in 1u32..=3) {
        let real_even = BoundaryConditionSpec::new(
            DiagonalSlope::Conjugate,
            GradedScalar::zero(),
            [(2 * k, GradedScalar::rational(1, 3))],
        )
        .unwrap();
        let t = solve_tke(&v, &real_even, 10).unwrap();
        let class = classify_symmetry(&t);
        prop_assert!(class.hermitian && class.time_reversal);

        let tilted = BoundaryConditionSpec::new(
            DiagonalSlope::Conjugate,
            GradedScalar::imaginary(1, 2),
            [],
        )
        .unwrap();
        let t = solve_tke(&v, &tilted, 10).unwrap();
        let class = classify_symmetry(&t);
        prop_assert!(!class.hermitian && !class.time_reversal);
    }

    /// The phase-space transform is linear.
    #[test]
    fn transform_is_linear(v in small_potential(), a in axis_boundary(), b in axis_boundary()) {
        let ta = solve_tke(&v, &a, 8).unwrap();
        let tb = solve_tke(&v, &b, 8).unwrap();
        let sum_first = weyl_transform_sgn(&ta.add(&tb).unwrap());
        let transform_first = weyl_transform_sgn(&ta).add(&weyl_transform_sgn(&tb));
        prop_assert_eq!(sum_first, transform_first);
    }

    /// `k! [q^m] C(m, k)`-style table consistency for arbitrary potentials.
    #[test]
    fn power_identity_on_random_potentials(v in small_potential()) {
        let report = power_identity_check(&v, 4, 10).unwrap();
        prop_assert!(report.holds, "worst entry {:?}", report.worst_entry);
    }

    /// The closed-form leading table agrees with its own recurrence (checked
    /// internally) and with the full phase-space route at low order.
    #[test]
    fn leading_table_cross_checks(v in small_potential(), n in 1u32..=2) {
        let beta = rat(2, 3);
        let table = leading_shift_table(&v, n, &beta, 8, 2).unwrap();
        prop_assert!(leading_shift_ww_check(&table, 2).unwrap());
    }

    /// Hermitian distributional data always produces a real phase-space
    /// image, including the delta sector.
    #[test]
    fn hermitian_data_has_real_image(
        im in -3i64..=3,
        k in 0u32..=3,
        c in -4i64..=4,
    ) {
        // alpha + beta = 1 with beta = conj(alpha) forces Re(alpha) = 1/2.
        let alpha = GradedScalar::new(
            timekernel_core::scalar::GaussianRational::new(rat(1, 2), rat(im, 6)),
            0,
            0,
        );
        let beta = alpha.conj();
        // sgn-weighted g with the Hermitian parity: real coefficients on odd
        // powers, imaginary on even powers.
        let g_coeff = if k % 2 == 1 {
            GradedScalar::rational(c, 5)
        } else {
            GradedScalar::imaginary(c, 5)
        };
        let dbc = DistributionBoundary::new(
            alpha,
            beta,
            vec![],
            vec![PiecewiseTerm::new(PolyVar::V, k, PieceWeight::Sgn, g_coeff)],
        )
        .unwrap();
        prop_assert!(mtke_classify(&dbc).hermitian);
        let kernel = mtke_free_solution(&dbc);
        let image = weyl_transform_distribution(&kernel);
        for (_, value) in image.regular_iter() {
            prop_assert!(value.is_real());
        }
        for (_, value) in image.delta_iter() {
            prop_assert!(value.is_real());
        }
    }

    /// Serialized kernels survive a round trip bit-for-bit.
    #[test]
    fn series_serde_round_trip(v in small_potential(), bc in axis_boundary()) {
        let t = solve_tke(&v, &bc, 8).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: timekernel_core::series::KernelSeries = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}

/// The grid solver reproduces the series solution for a modest random
/// sample of potentials (kept small: each case runs a full iteration).
#[test]
fn picard_agrees_with_series_on_random_potentials() {
    for seed in [3u64, 17, 29] {
        let v = PolynomialPotential::random(seed, 3);
        let bc = BoundaryConditionSpec::time_of_arrival();
        let grid = GridSpec::symmetric(rat(1, 2), 81).unwrap();
        let numeric = picard_solve(&v, &bc, &grid, 1.0, 1.0, 1e-11, 60).unwrap();
        let series = solve_tke(&v, &bc, 24).unwrap();
        let error = numeric.max_error_vs(|u, w| series.evaluate_uv(u, w, 1.0, 1.0));
        assert!(error < 1e-7, "seed {seed}: sup error {error}");
        for (index, &observed) in numeric.increments.iter().enumerate() {
            let envelope = picard_bound(&v, &bc, &grid, index as u32 + 1, 1.0, 1.0);
            assert!(
                observed <= 2.0 * envelope + 1e-14,
                "seed {seed}, increment {}: {observed} vs {envelope}",
                index + 1
            );
        }
    }
}

/// Shift data of every order transforms into the inverse-power sector with
/// the expected leading `1/p^(2N)` pole.
#[test]
fn shift_orders_populate_expected_poles() {
    let v = PolynomialPotential::harmonic(&rat(1, 1));
    for n in 1..=3u32 {
        let bc = ShiftSpec::new(n, rat(1, 2)).unwrap().expand();
        let t = solve_tke(&v, &bc, 2 * n + 7).unwrap();
        // The arrival-time branch sits at grade 0; the shift ladder opens at
        // grade 2N - 1 with leading pole 1/p^(2N).
        let shifted = weyl_transform_sgn(&t).filter_hbar(i64::from(2 * n) - 1);
        let min_pole = shifted
            .regular_iter()
            .map(|(key, _)| key.p_inv)
            .min()
            .unwrap();
        assert_eq!(min_pole, 2 * n, "order {n}");
    }
}

/// A second grid solve with eight worker threads reproduces the
/// single-threaded values bit for bit.
#[test]
fn grid_solver_is_thread_deterministic() {
    let v = PolynomialPotential::random(11, 4);
    let bc = BoundaryConditionSpec::time_of_arrival();
    let grid = GridSpec::symmetric(rat(1, 1), 61).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| picard_solve(&v, &bc, &grid, 1.0, 1.0, 1e-10, 60))
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap()
        .install(|| picard_solve(&v, &bc, &grid, 1.0, 1.0, 1e-10, 60))
        .unwrap();
    assert_eq!(single.values, many.values);
}

/// End-to-end: distributional data with both symmetries transforms to a
/// purely regular, purely real image whose classical part is the local
/// time-of-arrival series.
#[test]
fn symmetric_distribution_recovers_classical_arrival_time() {
    use timekernel_core::phase_space::RegularKey;
    use timekernel_core::scalar::GaussianRational;
    let dbc = DistributionBoundary::symmetric();
    let kernel = mtke_free_solution(&dbc);
    let image = weyl_transform_distribution(&kernel);
    assert_eq!(image.delta_len(), 0);
    let key = RegularKey {
        p_inv: 1,
        q_pow: 1,
        hbar: 0,
        mu: 1,
    };
    assert_eq!(
        image.regular_coeff(&key),
        Some(&GaussianRational::from_rat(rat(-1, 1)))
    );
}
