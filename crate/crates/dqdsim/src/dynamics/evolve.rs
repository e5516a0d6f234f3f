use num_complex::Complex64 as C64;
use std::f64::consts::TAU;

use super::drive::{frame_rotation, half_spread_drive, lab_matrix, rotating_matrix, Frame, SpinOperators};
use super::kernel::{expm_hermitian, expm_real, half_spread_hermitian, half_spread_real, taylor_complex, taylor_real, State};
use super::schedule::{InitialState, PulseSchedule, Segment, StateVector};
use crate::error::{Error, Result};
use crate::model::{h5_real, singlet_state, DeviceParams};

const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// ε samples per ramp used to bound its eigenfrequencies.
const RAMP_PROBES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Largest phase (rad) any eigencomponent may advance in one step.
    pub max_phase_per_step: f64,
    pub frame: Frame,
    pub record_trajectory: bool,
    /// Record every this many steps; segment ends are always recorded.
    pub trajectory_stride: u64,
    /// Refuse schedules needing more integrated steps than this.
    pub step_budget: u64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { max_phase_per_step: 0.05, frame: Frame::Rotating, record_trajectory: false, trajectory_stride: 1, step_budget: 100_000_000 }
    }
}

impl EvolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_phase_per_step > 0.0 && self.max_phase_per_step <= 0.2) {
            return Err(Error::param("max_phase_per_step", format!("must lie in (0, 0.2], got {}", self.max_phase_per_step)));
        }
        if self.trajectory_stride == 0 {
            return Err(Error::param("trajectory_stride", "must be at least 1"));
        }
        Ok(())
    }
}

/// Step layout of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGrid {
    pub steps: u64,
    pub dt: f64,
    /// Largest eigenfrequency seen on the segment, GHz (relative to mid-spectrum).
    pub max_frequency: f64,
    /// Time-independent Hamiltonian: propagated with one exact exponential.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub segments: Vec<SegmentGrid>,
}

impl TimeGrid {
    pub fn total_steps(&self) -> u64 {
        self.segments.iter().map(|s| s.steps).sum()
    }

    /// Steps that must be taken one by one (ramps and lab-frame drives).
    pub fn integrated_steps(&self) -> u64 {
        self.segments.iter().filter(|s| !s.constant).map(|s| s.steps).sum()
    }
}

/// Steps needed so that `max_frequency`·dt ≤ max_phase/2π.
pub fn steps_for(duration: f64, max_frequency: f64, max_phase: f64) -> u64 {
    if max_frequency <= 0.0 {
        return 1;
    }
    ((duration * max_frequency * TAU / max_phase).ceil() as u64).max(1)
}

pub fn compile(schedule: &PulseSchedule, params: &DeviceParams, opts: &EvolveOptions) -> Result<TimeGrid> {
    schedule.validate()?;
    compile_segments(&schedule.segments, params, opts)
}

pub(crate) fn compile_segments(segments: &[Segment], params: &DeviceParams, opts: &EvolveOptions) -> Result<TimeGrid> {
    opts.validate()?;
    let ops = SpinOperators::new();
    let mut out = Vec::with_capacity(segments.len());
    for seg in segments {
        let d = seg.duration();
        let (w, constant, min_steps) = match *seg {
            Segment::Ramp { .. } => {
                let w = (0..RAMP_PROBES)
                    .map(|k| half_spread_real(&h5_real(params, seg.eps_at(d * k as f64 / (RAMP_PROBES - 1) as f64))))
                    .fold(0.0, f64::max);
                (w, false, 1)
            }
            Segment::Dwell { eps, .. } => (half_spread_real(&h5_real(params, eps)), true, 1),
            Segment::Drive { eps, drive, .. } => match opts.frame {
                Frame::Rotating => (half_spread_hermitian(&rotating_matrix(&ops, params, eps, &drive)), true, 1),
                Frame::Lab => {
                    let per_cycle = (20.0 * drive.freq * d).ceil() as u64;
                    (half_spread_drive(params, eps, &drive), false, per_cycle.max(1))
                }
            },
        };
        let steps = steps_for(d, w, opts.max_phase_per_step).max(min_steps);
        out.push(SegmentGrid { steps, dt: d / steps as f64, max_frequency: w, constant });
    }
    let grid = TimeGrid { segments: out };
    let needed = grid.integrated_steps();
    if needed > opts.step_budget {
        return Err(Error::StepBudget { needed, budget: opts.step_budget });
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub eps: f64,
    pub state: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub state: StateVector,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    pub grid: TimeGrid,
    /// Largest |‖ψ‖² − 1| seen at segment boundaries.
    pub norm_drift: f64,
}

/// The schedule's starting state.
pub fn initial_state(schedule: &PulseSchedule, params: &DeviceParams) -> StateVector {
    match &schedule.initial {
        InitialState::Ground02S => StateVector::from_real(&singlet_state(params, schedule.eps_start())),
        InitialState::Custom(s) => *s,
    }
}

/// Integrates the schedule from its initial state.
pub fn evolve(schedule: &PulseSchedule, params: &DeviceParams, opts: &EvolveOptions) -> Result<Evolution> {
    params.validate()?;
    let grid = compile(schedule, params, opts)?;
    let mut psi = initial_state(schedule, params).amps;
    let mut traj = opts.record_trajectory.then(Vec::new);
    if let Some(tr) = traj.as_mut() {
        tr.push(TrajectoryPoint { t: 0.0, eps: schedule.eps_start(), state: StateVector::new(psi) });
    }
    let runner = Runner::new(params);
    let norm_drift = runner.forward(&schedule.segments, &grid, &mut psi, 0.0, traj.as_mut().map(|tr| (tr, opts.trajectory_stride)))?;
    Ok(Evolution { state: StateVector::new(psi), trajectory: traj, grid, norm_drift })
}

/// Applies the segments to `state`, starting at absolute time `t_start`.
pub fn propagate(
    params: &DeviceParams,
    segments: &[Segment],
    state: &StateVector,
    opts: &EvolveOptions,
    t_start: f64,
) -> Result<StateVector> {
    let grid = compile_segments(segments, params, opts)?;
    let mut psi = state.amps;
    Runner::new(params).forward(segments, &grid, &mut psi, t_start, None)?;
    Ok(StateVector::new(psi))
}

/// Applies the inverse (Hermitian adjoint) of the evolution over `segments`, i.e.
/// integrates backwards in time from `t_start + total duration` to `t_start`.
pub fn propagate_adjoint(
    params: &DeviceParams,
    segments: &[Segment],
    state: &StateVector,
    opts: &EvolveOptions,
    t_start: f64,
) -> Result<StateVector> {
    let grid = compile_segments(segments, params, opts)?;
    let mut psi = state.amps;
    Runner::new(params).backward(segments, &grid, &mut psi, t_start)?;
    Ok(StateVector::new(psi))
}

/// Undoes [`evolve`]: maps the final state of `schedule` back to its initial state.
pub fn evolve_reverse(
    schedule: &PulseSchedule,
    params: &DeviceParams,
    state: &StateVector,
    opts: &EvolveOptions,
) -> Result<StateVector> {
    schedule.validate()?;
    propagate_adjoint(params, &schedule.segments, state, opts, 0.0)
}

struct Runner<'a> {
    params: &'a DeviceParams,
    ops: SpinOperators,
}

/// Drive segments compiled as constant run in the rotating frame.
fn frame_of(g: &SegmentGrid) -> Frame {
    if g.constant {
        Frame::Rotating
    } else {
        Frame::Lab
    }
}

fn apply_diag(d: &[C64; 5], psi: &mut State) {
    for i in 0..5 {
        psi[i] *= d[i];
    }
}

fn check_norm(psi: &State, reference: f64, segment: usize, worst: &mut f64) -> Result<()> {
    let drift = (psi.norm_squared() - reference).abs();
    *worst = worst.max(drift);
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift { segment, drift });
    }
    Ok(())
}

impl<'a> Runner<'a> {
    fn new(params: &'a DeviceParams) -> Self {
        Runner { params, ops: SpinOperators::new() }
    }

    fn forward(
        &self,
        segments: &[Segment],
        grid: &TimeGrid,
        psi: &mut State,
        t_start: f64,
        mut traj: Option<(&mut Vec<TrajectoryPoint>, u64)>,
    ) -> Result<f64> {
        let reference = psi.norm_squared();
        let mut worst = 0.0;
        let mut t0 = t_start;
        for (k, (seg, g)) in segments.iter().zip(&grid.segments).enumerate() {
            let n = g.steps;
            let dt = g.dt;
            let recording = traj.is_some();
            let mut record = |i: u64, psi: &State| {
                if let Some((tr, stride)) = traj.as_mut() {
                    if i % *stride != 0 && i != n {
                        return;
                    }
                    let tl = (i as f64) * dt;
                    tr.push(TrajectoryPoint { t: t0 + tl, eps: seg.eps_at(tl.min(seg.duration())), state: StateVector::new(*psi) });
                }
            };
            match (*seg, frame_of(g)) {
                (Segment::Ramp { .. }, _) => {
                    for i in 0..n {
                        let h = h5_real(self.params, seg.eps_at((i as f64 + 0.5) * dt));
                        taylor_real(&h, dt, 1.0, psi);
                        record(i + 1, psi);
                    }
                }
                (Segment::Dwell { eps, duration }, _) => {
                    let h = h5_real(self.params, eps);
                    if recording {
                        let u = expm_real(&h, dt, 1.0);
                        for i in 0..n {
                            *psi = u * *psi;
                            record(i + 1, psi);
                        }
                    } else {
                        *psi = expm_real(&h, duration, 1.0) * *psi;
                    }
                }
                (Segment::Drive { eps, duration, drive }, Frame::Rotating) => {
                    let h = rotating_matrix(&self.ops, self.params, eps, &drive);
                    apply_diag(&frame_rotation(drive.freq, t0, 1.0), psi);
                    if recording {
                        let u = expm_hermitian(&h, dt, 1.0);
                        for i in 0..n {
                            *psi = u * *psi;
                            let mut lab = *psi;
                            apply_diag(&frame_rotation(drive.freq, t0 + (i + 1) as f64 * dt, -1.0), &mut lab);
                            record(i + 1, &lab);
                        }
                    } else {
                        *psi = expm_hermitian(&h, duration, 1.0) * *psi;
                    }
                    apply_diag(&frame_rotation(drive.freq, t0 + duration, -1.0), psi);
                }
                (Segment::Drive { eps, drive, .. }, Frame::Lab) => {
                    for i in 0..n {
                        let h = lab_matrix(&self.ops, self.params, eps, &drive, t0 + (i as f64 + 0.5) * dt);
                        taylor_complex(&h, dt, 1.0, psi);
                        record(i + 1, psi);
                    }
                }
            }
            check_norm(psi, reference, k, &mut worst)?;
            t0 += seg.duration();
        }
        Ok(worst)
    }

    fn backward(&self, segments: &[Segment], grid: &TimeGrid, psi: &mut State, t_start: f64) -> Result<f64> {
        let reference = psi.norm_squared();
        let mut worst = 0.0;
        let mut t1 = t_start + segments.iter().map(Segment::duration).sum::<f64>();
        for (k, (seg, g)) in segments.iter().zip(&grid.segments).enumerate().rev() {
            let n = g.steps;
            let dt = g.dt;
            let t0 = t1 - seg.duration();
            match (*seg, frame_of(g)) {
                (Segment::Ramp { .. }, _) => {
                    for i in (0..n).rev() {
                        let h = h5_real(self.params, seg.eps_at((i as f64 + 0.5) * dt));
                        taylor_real(&h, dt, -1.0, psi);
                    }
                }
                (Segment::Dwell { eps, duration }, _) => {
                    *psi = expm_real(&h5_real(self.params, eps), duration, -1.0) * *psi;
                }
                (Segment::Drive { eps, duration, drive }, Frame::Rotating) => {
                    let h = rotating_matrix(&self.ops, self.params, eps, &drive);
                    apply_diag(&frame_rotation(drive.freq, t1, 1.0), psi);
                    *psi = expm_hermitian(&h, duration, -1.0) * *psi;
                    apply_diag(&frame_rotation(drive.freq, t0, -1.0), psi);
                }
                (Segment::Drive { eps, drive, .. }, Frame::Lab) => {
                    for i in (0..n).rev() {
                        let h = lab_matrix(&self.ops, self.params, eps, &drive, t0 + (i as f64 + 0.5) * dt);
                        taylor_complex(&h, dt, -1.0, psi);
                    }
                }
            }
            check_norm(psi, reference, k, &mut worst)?;
            t1 = t0;
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::schedule::Drive;
    use crate::model::{diabatic_levels, labeled_levels, Level, T_MINUS};
    use crate::units::to_energy;

    fn singlet_block(tc: f64) -> DeviceParams {
        DeviceParams {
            tc0: tc,
            tc_decay: f64::INFINITY,
            delta11: 0.0,
            b0z: 0.0,
            b_offset: 0.0,
            ..DeviceParams::default()
        }
    }

    /// Transition probability out of the hybridized singlet for a linear sweep of f_ε
    /// over ±`f_edge` GHz at velocity `nu` (GHz/ns).
    fn charge_lz(tc: f64, nu: f64, f_edge: f64, max_phase: f64) -> f64 {
        let p = singlet_block(tc);
        let e = to_energy(f_edge);
        let sched = PulseSchedule::new(vec![Segment::ramp(-e, e, 2.0 * f_edge / nu)], InitialState::Ground02S).unwrap();
        let opts = EvolveOptions { max_phase_per_step: max_phase, ..EvolveOptions::default() };
        let out = evolve(&sched, &p, &opts).unwrap();
        1.0 - out.state.overlap_real(labeled_levels(&p, e).vector(Level::SH))
    }

    #[test]
    fn charge_anticrossing_follows_landau_zener() {
        let tc = 0.05;
        for nu in [0.94, 0.142, 0.0214] {
            let expect = (-4.0 * std::f64::consts::PI.powi(2) * tc * tc / nu).exp();
            let got = charge_lz(tc, nu, 20.0, 0.05);
            assert!((got - expect).abs() < 1e-3, "nu={nu}: {got} vs {expect}");
        }
    }

    #[test]
    fn halving_the_step_changes_little() {
        let a = charge_lz(0.05, 0.142, 10.0, 0.05);
        let b = charge_lz(0.05, 0.142, 10.0, 0.025);
        assert!((a - b).abs() < 1e-4, "{a} {b}");
    }

    #[test]
    fn dwell_in_eigenstate_is_stationary() {
        let p = DeviceParams { b0z: 120.0, delta11: 3.0, ..DeviceParams::default() };
        let v = *labeled_levels(&p, 20.0).vector(Level::SH);
        let psi = StateVector::from_real(&v);
        let sched = PulseSchedule::new(vec![Segment::dwell(20.0, 137.0)], InitialState::Custom(psi)).unwrap();
        let out = evolve(&sched, &p, &EvolveOptions::default()).unwrap();
        assert!((out.state.fidelity(&psi) - 1.0).abs() < 1e-12);
    }

    /// Far-(1,1) point with strongly different g-factors so each spin has its own line.
    fn esr_device() -> DeviceParams {
        DeviceParams { g1: 1.99, g2: 2.01, b0z: 150.0, b_offset: 0.0, delta11: 0.0, tc_decay: 100.0, ..DeviceParams::default() }
    }

    /// Frequency flipping dot 1 out of T−: ↓↓ → ↑↓ (the lower m=0 level).
    fn spin1_resonance(p: &DeviceParams, eps: f64) -> f64 {
        let lv = diabatic_levels(p, eps);
        lv.energy(Level::SH) - lv.energy(Level::TMinus)
    }

    fn drive_from_t_minus(p: &DeviceParams, freq: f64, amp: f64, duration: f64, frame: Frame) -> StateVector {
        let sched = PulseSchedule::new(
            vec![Segment::drive(300.0, duration, Drive { freq, amp, phase: 0.0 })],
            InitialState::Custom(StateVector::basis_state(T_MINUS)),
        )
        .unwrap();
        let opts = EvolveOptions { frame, ..EvolveOptions::default() };
        evolve(&sched, p, &opts).unwrap().state
    }

    #[test]
    fn resonant_drive_gives_full_flip_after_half_period() {
        let p = esr_device();
        let f = spin1_resonance(&p, 300.0);
        assert!((f - crate::units::zeeman(1.99, 150.0)).abs() < 1e-3);
        let psi = drive_from_t_minus(&p, f, 1.0, 500.0, Frame::Rotating);
        let flipped = 1.0 - psi.populations()[T_MINUS];
        assert!((flipped - 1.0).abs() < 1e-3, "{flipped}");
        // quarter period: half flip, sin²(π/4)
        let psi = drive_from_t_minus(&p, f, 1.0, 250.0, Frame::Rotating);
        assert!((1.0 - psi.populations()[T_MINUS] - 0.5).abs() < 1e-2);
    }

    #[test]
    fn lab_and_rotating_frames_agree() {
        let p = esr_device();
        let f = spin1_resonance(&p, 300.0);
        let a = drive_from_t_minus(&p, f, 1.0, 250.0, Frame::Rotating).populations();
        let b = drive_from_t_minus(&p, f, 1.0, 250.0, Frame::Lab).populations();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 5e-3, "{a:?} {b:?}");
        }
    }

    #[test]
    fn off_resonant_drive_stays_perturbative() {
        let p = esr_device();
        let detuning = 0.02;
        let psi = drive_from_t_minus(&p, spin1_resonance(&p, 300.0) - detuning, 1.0, 500.0, Frame::Rotating);
        let flipped = 1.0 - psi.populations()[T_MINUS];
        assert!(flipped < (1e-3 / detuning).powi(2), "{flipped}");
    }

    #[test]
    fn reversal_restores_the_initial_state() {
        let p = DeviceParams { b0z: 150.0, delta11: 5.0, ..DeviceParams::default() };
        let drive = Drive { freq: 4.2, amp: 2.0, phase: 0.4 };
        let sched = PulseSchedule::new(
            vec![
                Segment::ramp(-50.0, 200.0, 40.0),
                Segment::dwell(200.0, 30.0),
                Segment::drive(200.0, 50.0, drive),
                Segment::ramp(200.0, 60.0, 15.0),
            ],
            InitialState::Ground02S,
        )
        .unwrap();
        for frame in [Frame::Rotating, Frame::Lab] {
            let opts = EvolveOptions { frame, ..EvolveOptions::default() };
            let fwd = evolve(&sched, &p, &opts).unwrap();
            assert!(fwd.norm_drift < 1e-9);
            let back = evolve_reverse(&sched, &p, &fwd.state, &opts).unwrap();
            let psi0 = initial_state(&sched, &p);
            assert!(back.fidelity(&psi0) > 1.0 - 1e-6);
            assert!((back.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trajectory_ends_at_final_state() {
        let p = DeviceParams { b0z: 100.0, ..DeviceParams::default() };
        let sched = PulseSchedule::new(vec![Segment::ramp(-50.0, 20.0, 5.0), Segment::dwell(20.0, 2.0)], InitialState::Ground02S).unwrap();
        let plain = evolve(&sched, &p, &EvolveOptions::default()).unwrap();
        let opts = EvolveOptions { record_trajectory: true, ..EvolveOptions::default() };
        let rec = evolve(&sched, &p, &opts).unwrap();
        let tr = rec.trajectory.unwrap();
        assert_eq!(tr.len() as u64, rec.grid.total_steps() + 1);
        assert!((tr.last().unwrap().t - 7.0).abs() < 1e-9);
        assert!((tr.last().unwrap().state.amps - plain.state.amps).norm() < 1e-10);

        let thin = evolve(&sched, &p, &EvolveOptions { trajectory_stride: 7, ..opts }).unwrap().trajectory.unwrap();
        let expect: u64 = 1 + rec.grid.segments.iter().map(|g| g.steps.div_ceil(7)).sum::<u64>();
        assert_eq!(thin.len() as u64, expect);
        assert_eq!(thin.last().unwrap().state, tr.last().unwrap().state);
    }

    #[test]
    fn compile_step_rule() {
        let n = steps_for(100.0, 5.0, 0.05);
        assert!((n as f64 - 62_832.0).abs() <= 1.0, "{n}");
        assert!((100.0 / n as f64 - 0.00159).abs() < 1e-5);
        assert_eq!(steps_for(100.0, 0.0, 0.05), 1);
    }

    #[test]
    fn only_lab_frame_resolves_the_carrier() {
        let p = esr_device();
        let seg = Segment::drive(300.0, 100.0, Drive { freq: 4.2, amp: 1.0, phase: 0.0 });
        let rot = compile_segments(&[seg], &p, &EvolveOptions::default()).unwrap();
        let lab = compile_segments(&[seg], &p, &EvolveOptions { frame: Frame::Lab, ..EvolveOptions::default() }).unwrap();
        assert_eq!(rot.integrated_steps(), 0);
        assert!(lab.integrated_steps() >= 20 * 420);
        let tight = EvolveOptions { frame: Frame::Lab, step_budget: 1000, ..EvolveOptions::default() };
        assert!(matches!(compile_segments(&[seg], &p, &tight), Err(Error::StepBudget { .. })));
        let bad = EvolveOptions { max_phase_per_step: 0.3, ..EvolveOptions::default() };
        assert!(compile_segments(&[seg], &p, &bad).is_err());
    }
}
