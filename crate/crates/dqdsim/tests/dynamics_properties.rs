use proptest::prelude::*;

use dqdsim::dynamics::{
    adiabatic_prepare, evolve, evolve_reverse, initial_state, product_ground, Drive, EvolveOptions, InitialState,
    PulseSchedule, Segment,
};
use dqdsim::model::DeviceParams;

/// A continuous schedule visiting the given detunings, alternately ramping and dwelling.
fn schedule(points: &[(f64, f64)], drive_amp: f64) -> PulseSchedule {
    let mut segments = Vec::new();
    let mut eps = -50.0;
    for (k, &(to, dur)) in points.iter().enumerate() {
        segments.push(Segment::ramp(eps, to, dur));
        eps = to;
        segments.push(if k % 2 == 0 {
            Segment::dwell(eps, dur)
        } else {
            Segment::drive(eps, dur, Drive { freq: 4.2, amp: drive_amp, phase: 0.1 * k as f64 })
        });
    }
    PulseSchedule::new(segments, InitialState::Ground02S).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_is_unitary_and_reversible(
        points in prop::collection::vec((-40.0f64..600.0, 0.5f64..20.0), 1..4),
        b in 0.0f64..250.0,
        d11 in 0.0f64..10.0,
        amp in 0.0f64..2.0,
    ) {
        let p = DeviceParams { b0z: b, delta11: d11, ..DeviceParams::default() };
        let s = schedule(&points, amp);
        let opts = EvolveOptions::default();
        let fwd = evolve(&s, &p, &opts).unwrap();
        prop_assert!(fwd.norm_drift < 1e-9, "drift {}", fwd.norm_drift);
        let back = evolve_reverse(&s, &p, &fwd.state, &opts).unwrap();
        prop_assert!(back.fidelity(&initial_state(&s, &p)) > 1.0 - 1e-6);
    }
}

#[test]
fn slow_ramp_reaches_the_product_state() {
    let p = DeviceParams { b0z: 200.0, ..DeviceParams::default() };
    let prep = adiabatic_prepare(&p, 1000.0, 2000.0).unwrap();
    assert!(prep.state.overlap_real(&product_ground(&p)) > 0.9);
}
