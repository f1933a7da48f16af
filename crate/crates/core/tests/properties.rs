use num_complex::Complex64;
use proptest::prelude::*;

use qclock::clock::{free_step, make_gaussian_pulse, ClockPulse, DispersionRelation, SpatialGrid};
use qclock::config::SimConfig;
use qclock::engine::{GeneratorSchedule, HermitianOp};
use qclock::propagator::{JointState, Model, SplitStepIntegrator, StepConfig, WindowMap};
use qclock::protocol::{modulation_factors, ModulationMode};
use qclock::timeops::{cov_time_lambda, hc_stats, lambda_stats, time_stats};

fn grid() -> SpatialGrid {
    SpatialGrid::new(512, 64.0, -32.0).unwrap()
}

fn engine_vector(theta: f64, phi: f64) -> [Complex64; 2] {
    [
        Complex64::new(theta.cos(), 0.0),
        Complex64::from_polar(theta.sin(), phi),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coupled_evolution_conserves_norm(
        x0 in -12.0..12.0f64,
        omega in 0.5..1.5f64,
        k0 in -3.0..3.0f64,
        theta in 0.0..1.5f64,
        phi in 0.0..6.2f64,
        steps in 1usize..60,
        lie in any::<bool>(),
    ) {
        let g = grid();
        let schedule = GeneratorSchedule::alternating(8.0, -16.0, vec![HermitianOp::pauli_x(), HermitianOp::pauli_z()]).unwrap();
        let model = Model::new(g, DispersionRelation::massive(1.0, 4.0).unwrap(), HermitianOp::pauli_z().scaled(0.3), schedule).unwrap();
        let mut cfg = StepConfig::new(0.05, 1);
        if lie {
            cfg = cfg.with_splitting(qclock::propagator::Splitting::Lie);
        }
        let clock = make_gaussian_pulse(g, ClockPulse::new(x0, omega, k0)).unwrap();
        let mut s = JointState::product(&engine_vector(theta, phi), &clock).unwrap();
        SplitStepIntegrator::new(&model, &cfg).unwrap().run(&mut s, steps);
        prop_assert!((s.norm() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn linear_free_motion_is_rigid_translation(
        x0 in -15.0..0.0f64,
        omega in 0.6..1.5f64,
        k0 in -4.0..4.0f64,
        t in 0.0..12.0f64,
    ) {
        let g = grid();
        let disp = DispersionRelation::linear(1.0);
        let clock = make_gaussian_pulse(g, ClockPulse::new(x0, omega, k0)).unwrap();
        let moved = free_step(&clock, &disp, t);
        let a = time_stats(&clock, 1.0);
        let b = time_stats(&moved, 1.0);
        prop_assert!((b.mean - a.mean - t).abs() < 1e-9);
        prop_assert!((b.var - a.var).abs() < 1e-9);
    }

    #[test]
    fn free_variance_follows_quadratic_law(
        omega in 0.6..1.5f64,
        k0 in -3.0..3.0f64,
        mass in 2.0..50.0f64,
        chirp in -0.05..0.05f64,
        t in 0.0..8.0f64,
    ) {
        let g = grid();
        let disp = DispersionRelation::massive(1.0, mass).unwrap();
        let clock = make_gaussian_pulse(g, ClockPulse::new(-8.0, omega, k0).with_chirp(chirp)).unwrap();
        let moved = free_step(&clock, &disp, t);
        let v0 = time_stats(&clock, 1.0).var;
        let cov = cov_time_lambda(&clock, &disp, 1.0);
        let vl = lambda_stats(&clock, &disp, 1.0).var;
        let predicted = v0 + 2.0 * t * cov + t * t * vl;
        let measured = time_stats(&moved, 1.0).var;
        prop_assert!((measured - predicted).abs() <= 1e-6 * measured, "{measured} vs {predicted}");
        let l1 = lambda_stats(&moved, &disp, 1.0);
        prop_assert!((l1.var - vl).abs() < 1e-9);
    }

    #[test]
    fn uncertainty_relation_holds_for_free_pulses(
        omega in 0.6..1.5f64,
        k0 in 0.0..4.0f64,
        mass in 2.0..50.0f64,
        t in 0.0..8.0f64,
    ) {
        let g = grid();
        let disp = DispersionRelation::massive(1.0, mass).unwrap();
        let clock = make_gaussian_pulse(g, ClockPulse::new(-8.0, omega, k0)).unwrap();
        let moved = free_step(&clock, &disp, t);
        let lhs = time_stats(&moved, 1.0).var.sqrt() * hc_stats(&moved, &disp).var.sqrt();
        let rhs = lambda_stats(&moved, &disp, 1.0).mean.abs() / 2.0;
        prop_assert!(lhs >= rhs - 1e-9, "{lhs} < {rhs}");
    }

    #[test]
    fn intensity_weights_are_bounded_by_pair_mass(
        x0 in -10.0..20.0f64,
        omega in 0.5..2.0f64,
    ) {
        let g = grid();
        let w = 8.0;
        let schedule = GeneratorSchedule::alternating(w, -24.0, vec![HermitianOp::pauli_x(); 3]).unwrap();
        let map = WindowMap::new(&g, &schedule).unwrap();
        let clock = make_gaussian_pulse(g, ClockPulse::new(x0, omega, 0.0)).unwrap();
        let s = JointState::basis_product(2, 0, &clock).unwrap();
        let m = modulation_factors(&s, &schedule, &map, ModulationMode::Intensity).unwrap();
        prop_assert!(m.alpha >= 0.0 && m.beta >= 0.0);
        prop_assert!(m.alpha + m.beta <= 1.0 / w + 1e-12);
        prop_assert!(m.alpha <= m.max_weight + 1e-12 && m.beta <= m.max_weight + 1e-12);
    }

    #[test]
    fn config_round_trip_is_identity(
        n_pow in 6u32..12,
        length in 10.0..500.0f64,
        origin in -300.0..0.0f64,
        x0 in -50.0..50.0f64,
        omega in 0.1..5.0f64,
        k0 in -20.0..20.0f64,
        chirp in -0.1..0.1f64,
        mass in proptest::option::of(0.5..100.0f64),
        w in 1.0..50.0f64,
        dt in 0.001..0.5f64,
        spr in 1usize..100,
        duration in 0.1..100.0f64,
        lie in any::<bool>(),
        sqrt_mode in any::<bool>(),
        omegas in proptest::collection::vec(0.1..5.0f64, 0..4),
    ) {
        let dispersion = match mass {
            Some(m) => format!(r#"{{"kind": "massive", "v_g": 1.0, "mass": {m:?}}}"#),
            None => r#"{"kind": "linear", "v_g": 1.0}"#.to_string(),
        };
        let text = format!(
            r#"{{
                "grid": {{"n_points": {}, "length": {length:?}, "origin": {origin:?}}},
                "pulse": {{"x0": {x0:?}, "omega": {omega:?}, "k0": {k0:?}, "chirp": {chirp:?}}},
                "dispersion": {dispersion},
                "engine": {{"dim": 2, "h_e": [[[0.5, 0.0], [0.0, -0.25]], [[0.0, 0.25], [-0.5, 0.0]]],
                            "schedule": {{"source": "explicit", "generators": ["pauli_x", "dead", "pauli_z"]}}}},
                "windows": {{"W": {w:?}, "pattern": "explicit", "origin": {origin:?}}},
                "stepping": {{"dt": {dt:?}, "splitting": "{}", "steps_per_record": {spr}}},
                "run": {{"duration": {duration:?}, "mode": "{}", "seed": 7}},
                "sweep": {{"omega": {omegas:?}}}
            }}"#,
            1usize << n_pow,
            if lie { "lie" } else { "strang" },
            if sqrt_mode { "paper_sqrt" } else { "intensity" },
        );
        let cfg = SimConfig::from_json(&text).unwrap();
        let again = SimConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.to_json(), again.to_json());
    }
}
