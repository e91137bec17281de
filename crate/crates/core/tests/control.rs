use lasso_core::control::*;
use lasso_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PHASES: [GripperPhase; 4] = [
    GripperPhase::Launch,
    GripperPhase::Maintain,
    GripperPhase::Retract,
    GripperPhase::Release,
];
const EVENTS: [PhaseEvent; 4] = [
    PhaseEvent::BeginMaintain,
    PhaseEvent::BeginRetract,
    PhaseEvent::Reopen,
    PhaseEvent::Release,
];

// written out by hand so it does not share code with the machine
fn expected(phase: GripperPhase, event: PhaseEvent) -> Option<GripperPhase> {
    use GripperPhase::*;
    use PhaseEvent::*;
    match (phase, event) {
        (Launch, BeginMaintain) => Some(Maintain),
        (Maintain, BeginRetract) => Some(Retract),
        (Retract, Reopen) => Some(Maintain),
        (Launch | Maintain | Retract, PhaseEvent::Release) => Some(GripperPhase::Release),
        _ => None,
    }
}

fn f64_state(phase: GripperPhase) -> GripperState<f64> {
    let mut s = GripperState::new(1.0, 0.02, 0.33, 0.61 / 0.12, ControlLimits::default()).unwrap();
    s.phase = phase;
    s
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn exact_conservation_in_rational_arithmetic() {
    let limits = ControlLimits {
        l_min: ratio(1, 20),
        l_max: ratio(5, 1),
        omega_max: Some(ratio(50, 1)),
        allow_launch_to_retract: false,
    };
    let l0 = ratio(1, 1);
    let mut state = GripperState::new(
        l0.clone(),
        ratio(1, 50),
        ratio(33, 100),
        ratio(61, 12),
        limits,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut sum, mut excess) = (ratio(0, 1), ratio(0, 1));
    let mut clamps = 0;
    for _ in 0..10_000 {
        let cmd = MotorCommand::new(
            ratio(rng.random_range(0..=5000), 100),
            ratio(rng.random_range(0..=5000), 100),
        );
        let dt = ratio(rng.random_range(1..=100), 1000);
        let delta = state.wheel_radius.clone()
            * (cmd.omega_out.clone() - cmd.omega_in.clone())
            * dt.clone();
        let requested = state.deployed_length.clone() + delta.clone();
        let (next, clamp) = step(&state, &cmd, dt).unwrap();
        let outside = requested < state.limits.l_min || requested > state.limits.l_max;
        assert_eq!(clamp.is_some(), outside);
        if let Some(c) = clamp {
            assert_eq!(c.requested, requested);
            excess += c.excess;
            clamps += 1;
        }
        sum += delta;
        state = next;
    }
    assert!(clamps > 0, "sequence never reached a limit");
    assert_eq!(state.deployed_length, l0 + sum - excess);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn float_conservation(seed in any::<u64>()) {
        let mut state = f64_state(GripperPhase::Maintain);
        let l0 = state.deployed_length;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sum, mut excess) = (0.0, 0.0);
        for _ in 0..10_000 {
            let cmd = MotorCommand::new(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0));
            let dt = rng.random_range(1e-3..0.1);
            let (next, clamp) = step(&state, &cmd, dt).unwrap();
            let requested = state.deployed_length + state.wheel_radius * (cmd.omega_out - cmd.omega_in) * dt;
            prop_assert_eq!(clamp.is_some(), !(0.05..=5.0).contains(&requested));
            if let Some(c) = &clamp {
                let bound = match c.side {
                    ClampSide::Min => 0.05,
                    ClampSide::Max => 5.0,
                };
                prop_assert_eq!(next.deployed_length, bound);
                excess += c.excess;
            }
            sum += state.wheel_radius * (cmd.omega_out - cmd.omega_in) * dt;
            state = next;
        }
        let want = l0 + sum - excess;
        prop_assert!((state.deployed_length - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn random_event_sequences_stay_on_the_graph(events in prop::collection::vec(0usize..4, 1..60)) {
        let mut state = f64_state(GripperPhase::Launch);
        for e in events {
            let event = EVENTS[e];
            match (expected(state.phase, event), transition(&state, event)) {
                (Some(p), Ok(next)) => {
                    prop_assert_eq!(next.phase, p);
                    state = next;
                }
                (None, Err(Error::PhaseError(_))) => {}
                (want, got) => prop_assert!(false, "{:?} + {:?}: expected {:?}, got {:?}", state.phase, event, want, got),
            }
        }
    }

    #[test]
    fn retracting_never_grows(speeds in prop::collection::vec((0.0f64..20.0, 0.1f64..20.0), 1..200)) {
        let mut state = f64_state(GripperPhase::Retract);
        for (out, extra) in speeds {
            let (next, _) = step(&state, &MotorCommand::new(out + extra, out), 0.01).unwrap();
            prop_assert!(next.deployed_length <= state.deployed_length);
            state = next;
        }
    }
}

#[test]
fn every_illegal_pair_is_rejected() {
    let mut illegal = 0;
    for phase in PHASES {
        for event in EVENTS {
            let got = transition(&f64_state(phase), event);
            match expected(phase, event) {
                Some(p) => assert_eq!(got.unwrap().phase, p),
                None => {
                    illegal += 1;
                    assert!(
                        matches!(got, Err(Error::PhaseError(_))),
                        "{phase:?} + {event:?}"
                    );
                }
            }
        }
    }
    assert_eq!(illegal, 10);
    let mut lax = f64_state(GripperPhase::Launch);
    lax.limits.allow_launch_to_retract = true;
    assert_eq!(
        transition(&lax, PhaseEvent::BeginRetract).unwrap().phase,
        GripperPhase::Retract
    );
}

#[test]
fn speed_limits_and_time_step() {
    let mut s = f64_state(GripperPhase::Maintain);
    assert!(step(&s, &MotorCommand::new(-1.0, 0.0), 0.1).is_err());
    assert!(step(&s, &MotorCommand::new(1.0, 1.0), 0.0).is_err());
    s.limits.omega_max = Some(10.0);
    assert!(step(&s, &MotorCommand::new(0.0, 11.0), 0.1).is_err());
    let (n, _) = step(&s, &MotorCommand::new(0.0, 10.0), 0.5).unwrap();
    assert!((n.deployed_length - 1.1).abs() < 1e-15);
}

#[test]
fn smallest_loop() {
    let mut s = f64_state(GripperPhase::Maintain);
    s.deployed_length = s.limits.l_min;
    let p = current_loop(&s).unwrap();
    let big = current_loop(&f64_state(GripperPhase::Maintain)).unwrap();
    assert!(p.x_plus() < big.x_plus());
    assert!((p.x_plus() / p.x_minus() - 0.61 / 0.12).abs() < 1e-12);
}
