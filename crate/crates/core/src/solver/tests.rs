use super::*;
use crate::grid::Grid;
use crate::oracle::spectral_propagator;

fn max_abs(f: &Field) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn rel_err(a: &Field, b: &Field) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_abs(b).max(1e-300)
}

fn hom_1d(n: usize, dx: f64, c: f64, rho: f64) -> (Grid, Medium) {
    let g = Grid::new_1d(n, dx).unwrap();
    let m = Medium::homogeneous(&g, c, rho).unwrap();
    (g, m)
}

fn solver(g: &Grid, m: &Medium, mode: CorrectionMode) -> Solver {
    Solver::new(g.clone(), m.clone(), mode, PmlConfig::disabled()).unwrap()
}

fn gaussian(g: &Grid, w: f64) -> Field {
    g.sample(|x, y| (-(x * x + y * y) / (w * w)).exp())
}

// pressure from the oracle at t_p, velocity from the oracle at t_u
fn oracle_state(
    s: &Solver,
    p0: &Field,
    u0: &[Field],
    t_p: f64,
    t_u: f64,
) -> (Field, Vec<Field>) {
    let (p, _) = spectral_propagator(p0, u0, s.medium(), s.wavevectors(), t_p).unwrap();
    let (_, u) = spectral_propagator(p0, u0, s.medium(), s.wavevectors(), t_u).unwrap();
    (p, u)
}

#[test]
fn zero_state_is_fixed_point() {
    let (g, m) = hom_1d(16, 0.1, 1.0, 1.0);
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let mut st = s.initialize(g.zeros(), g.velocity_zeros(), 0.01).unwrap();
    s.advance_pressure(&mut st, 0.01).unwrap();
    s.advance_velocity(&mut st, 0.01, 0.03).unwrap();
    s.advance_pressure(&mut st, 0.03).unwrap();
    assert_eq!(max_abs(&st.p), 0.0);
    assert_eq!(max_abs(&st.u[0]), 0.0);
    assert_eq!(max_abs(&s.finalize_velocity(&st).unwrap()[0]), 0.0);
}

#[test]
fn plane_wave_steps_match_rotation_oracle() {
    let (g, m) = hom_1d(32, 0.1, 1.3, 0.9);
    let k0 = 2.0 * std::f64::consts::PI * 5.0 / 3.2;
    let p0 = g.sample(|x, _| (k0 * x).cos());
    let u0 = vec![g.sample(|x, _| 0.3 * (k0 * x).sin())];
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let (d1, d2) = (0.005, 0.015);
    let mut st = s.initialize(p0.clone(), u0.clone(), d1).unwrap();
    let (_, u) = oracle_state(&s, &p0, &u0, 0.0, d1 / 2.0);
    assert!(rel_err(&st.u[0], &u[0]) < 1e-12);

    // equal steps
    s.advance_pressure(&mut st, d1).unwrap();
    s.advance_velocity(&mut st, d1, d1).unwrap();
    let (p, u) = oracle_state(&s, &p0, &u0, d1, 1.5 * d1);
    assert!(rel_err(&st.p, &p) < 1e-12);
    assert!(rel_err(&st.u[0], &u[0]) < 1e-12);

    // 5 ms -> 15 ms transition
    s.advance_pressure(&mut st, d1).unwrap();
    s.advance_velocity(&mut st, d1, d2).unwrap();
    let (p, u) = oracle_state(&s, &p0, &u0, 2.0 * d1, 2.0 * d1 + d2 / 2.0);
    assert!(rel_err(&st.p, &p) < 1e-12);
    assert!(rel_err(&st.u[0], &u[0]) < 1e-12);
    assert!((st.t_u - (2.0 * d1 + d2 / 2.0)).abs() < 1e-15);

    s.advance_pressure(&mut st, d2).unwrap();
    let (p, u) = oracle_state(&s, &p0, &u0, 2.0 * d1 + d2, 2.0 * d1 + d2);
    assert!(rel_err(&st.p, &p) < 1e-12);
    let fin = s.finalize_velocity(&st).unwrap();
    assert!(rel_err(&fin[0], &u[0]) < 1e-12);
}

#[test]
fn caller_supplied_kernels_checked() {
    let (g, m) = hom_1d(16, 0.1, 1.0, 1.0);
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let mut st = s.initialize(gaussian(&g, 0.3), g.velocity_zeros(), 0.01).unwrap();
    s.advance_pressure(&mut st, 0.01).unwrap();
    let wv = s.wavevectors().clone();
    let wrong = kspace::kappa12_staggered(&wv, 1.0, 0.01, 0.02).unwrap();
    let r = s.velocity_update(&mut st, &wrong, 0.01, 0.03);
    assert!(matches!(r, Err(Error::KernelMismatch(_))));
    let sym = kspace::kappa12_symmetric(&wv, 1.0, 0.01, 0.03).unwrap();
    assert!(matches!(
        s.velocity_update(&mut st, &sym, 0.01, 0.03),
        Err(Error::KernelMismatch(_))
    ));
    let ok = kspace::kappa12_staggered(&wv, 1.0, 0.01, 0.03).unwrap();
    s.velocity_update(&mut st, &ok, 0.01, 0.03).unwrap();
    assert!((st.t_u - 0.025).abs() < 1e-15);
    // wrong staggering: velocity is already ahead
    let r = s.velocity_update(&mut st, &ok, 0.01, 0.03);
    assert!(matches!(r, Err(Error::Staggering { .. })));
}

#[test]
fn pressure_update_trivial_cases() {
    let g = Grid::new_2d(8, 8, 0.1, 0.1).unwrap();
    let m = Medium::homogeneous(&g, 1.0, 1.0).unwrap();
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let kappa = kspace::kappa_uniform(s.wavevectors(), 1.0, 0.01).unwrap();
    let p0 = gaussian(&g, 0.2);
    let mut st = FieldState::new(&g, p0.clone(), g.velocity_zeros(), 0.0).unwrap();
    st.t_u = 0.005;
    s.pressure_update(&mut st, &kappa, 0.01).unwrap();
    assert_eq!(st.p, p0);
    assert!((st.t_p - 0.01).abs() < 1e-16);

    let mut st = FieldState::new(&g, p0.clone(), vec![g.zeros() + 2.0, g.zeros() - 1.0], 0.0).unwrap();
    st.t_u = 0.005;
    s.pressure_update(&mut st, &kappa, 0.01).unwrap();
    assert!(rel_err(&st.p, &p0) < 1e-15);

    // staggering violated
    let mut st = FieldState::new(&g, p0, g.velocity_zeros(), 0.0).unwrap();
    assert!(matches!(
        s.pressure_update(&mut st, &kappa, 0.01),
        Err(Error::Staggering { .. })
    ));
}

#[test]
fn gaussian_initialisation_matches_oracle_2d() {
    let g = Grid::new_2d(32, 24, 0.1, 0.1).unwrap();
    let m = Medium::homogeneous(&g, 1.0, 1.2).unwrap();
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let p0 = gaussian(&g, 0.4);
    let st = s.initialize(p0.clone(), g.velocity_zeros(), 0.04).unwrap();
    let (_, u) = oracle_state(&s, &p0, &g.velocity_zeros(), 0.0, 0.02);
    let scale = max_abs(&u[0]);
    for a in 0..2 {
        let e = st.u[a].iter().zip(&u[a]).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(e < 1e-12 * scale, "{e}");
    }
}

#[test]
fn backward_initialisation_paths_agree() {
    let g = Grid::new_2d(24, 24, 0.1, 0.1).unwrap();
    let m = Medium::homogeneous(&g, 1.0, 1.0).unwrap();
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let p0 = gaussian(&g, 0.35);
    let u0 = vec![g.sample(|x, y| 0.2 * (-(x * x + y * y) / 0.2).exp()), g.zeros()];
    let (d0, d1) = (0.03, 0.05);
    let a = s.initialize(p0.clone(), u0.clone(), d1).unwrap();
    let mut b = s.initialize_backward(p0.clone(), u0.clone(), d0).unwrap();
    assert!((b.t_u + d0 / 2.0).abs() < 1e-16);
    s.advance_velocity(&mut b, d0, d1).unwrap();
    for ax in 0..2 {
        let e = a.u[ax].iter().zip(&b.u[ax]).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(e < 1e-12, "{e}");
    }

    let z = s.initialize_backward(p0, g.velocity_zeros(), 0.0).unwrap();
    assert_eq!(max_abs(&z.u[0]), 0.0);
    assert_eq!(max_abs(&z.u[1]), 0.0);
}

#[test]
fn fixed_step_reduction_matches_plain_kspace_loop() {
    let (g, m) = hom_1d(64, 0.1, 1.0, 1.0);
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let dt = 0.02;
    let p0 = gaussian(&g, 0.4);
    let mut st = s.initialize_backward(p0.clone(), g.velocity_zeros(), dt).unwrap();
    let (mut p, mut u) = (st.p.clone(), st.u[0].clone());
    let wv = s.wavevectors().clone();
    let sp = Spectral::for_wavevectors(&wv);
    let kappa = kspace::kappa_uniform(&wv, 1.0, dt).unwrap();
    let deriv = |f: &Field| {
        let mut h = Spectral::derivative_factor(&wv, &sp.forward(f).unwrap(), 0);
        Zip::from(&mut h).and(&kappa).for_each(|v, k| *v *= *k);
        sp.inverse_real(h).unwrap()
    };
    for _ in 0..50 {
        s.advance_velocity(&mut st, dt, dt).unwrap();
        s.advance_pressure(&mut st, dt).unwrap();
        u = &u - &(deriv(&p) * dt);
        p = &p - &(deriv(&u) * dt);
    }
    assert!(rel_err(&st.p, &p) < 1e-14);
}

#[test]
fn empty_schedule_returns_initial_state() {
    let (g, m) = hom_1d(16, 0.1, 1.0, 1.0);
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let p0 = gaussian(&g, 0.3);
    let out = s.run(p0.clone(), g.velocity_zeros(), &StepSchedule::empty(), &[0.0]).unwrap();
    assert_eq!(out.steps, 0);
    assert_eq!(out.final_state.p, p0);
    assert_eq!(out.snapshots.len(), 1);
}

#[test]
fn split_segments_are_bit_identical() {
    let (g, m) = hom_1d(64, 0.1, 1.0, 1.0);
    let p0 = gaussian(&g, 0.4);
    let one = StepSchedule::uniform(0.01, 40).unwrap();
    let two = StepSchedule::new(vec![
        Segment { dt: 0.01, count: 17 },
        Segment { dt: 0.01, count: 23 },
    ])
    .unwrap();
    let a = solver(&g, &m, CorrectionMode::Full)
        .run(p0.clone(), g.velocity_zeros(), &one, &[])
        .unwrap();
    let b = solver(&g, &m, CorrectionMode::Full)
        .run(p0, g.velocity_zeros(), &two, &[])
        .unwrap();
    assert_eq!(a.final_state.p, b.final_state.p);
    assert_eq!(a.final_velocity, b.final_velocity);
}

#[test]
fn kernels_built_once_per_pair() {
    let (g, m) = hom_1d(32, 0.1, 1.0, 1.0);
    let sched = StepSchedule::new(vec![
        Segment { dt: 0.01, count: 10 },
        Segment { dt: 0.03, count: 10 },
        Segment { dt: 0.01, count: 10 },
    ])
    .unwrap();
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let out = s.run(gaussian(&g, 0.3), g.velocity_zeros(), &sched, &[]).unwrap();
    // velocity: (0,.01) (.01,.01) (.01,.03) (.03,.03) (.03,.01) (.01,0); pressure: .01 .03
    assert_eq!(out.kernel_builds, 8);
    assert_eq!(out.steps, 30);
}

#[test]
fn run_snapshots_and_time_errors() {
    let (g, m) = hom_1d(32, 0.1, 1.0, 1.0);
    let sched = StepSchedule::uniform(0.45, 0).err();
    assert!(sched.is_some());
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let coarse = StepSchedule::uniform(0.45, 4).unwrap();
    // too big for this grid
    assert!(matches!(
        s.run(gaussian(&g, 0.3), g.velocity_zeros(), &coarse, &[]),
        Err(Error::UnstableSchedule { .. })
    ));

    let (g, m) = hom_1d(32, 1.0, 1.0, 1.0);
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let err = s
        .run(gaussian(&g, 3.0), g.velocity_zeros(), &coarse, &[1.0])
        .unwrap_err();
    match err {
        Error::SnapshotTime { nearest, .. } => {
            assert!(nearest.contains("0.9") && nearest.contains("1.35"), "{nearest}");
        }
        e => panic!("{e}"),
    }
    let out = s
        .run(gaussian(&g, 3.0), g.velocity_zeros(), &coarse, &[0.0, 0.9, 1.8])
        .unwrap();
    let times: Vec<f64> = out.snapshots.iter().map(|s| s.time).collect();
    assert_eq!(out.snapshots.len(), 3);
    assert!((times[1] - 0.9).abs() < 1e-15 && out.snapshots[2].step == 4);
    assert_eq!(out.snapshots[2].p, out.final_state.p);
}

#[test]
fn schedule_bookkeeping() {
    let s = StepSchedule::from_steps(&[0.1, 0.1, 0.2, 0.2, 0.2, 0.1]).unwrap();
    assert_eq!(
        s.segments(),
        &[
            Segment { dt: 0.1, count: 2 },
            Segment { dt: 0.2, count: 3 },
            Segment { dt: 0.1, count: 1 }
        ]
    );
    assert_eq!(s.total_steps(), 6);
    assert!((s.total_time() - 0.9).abs() < 1e-15);
    let lv = s.time_levels();
    assert_eq!(lv.len(), 7);
    assert!((lv[2] - 0.2).abs() < 1e-15 && (lv[5] - 0.8).abs() < 1e-15);
    let tt = s.transition_times();
    assert_eq!(tt.len(), 2);
    assert!(StepSchedule::new(vec![]).is_err());
    assert!(StepSchedule::uniform(-1.0, 3).is_err());
    assert_eq!("half-corrected".parse::<CorrectionMode>().unwrap(), CorrectionMode::HalfCorrected);
    assert!("bogus".parse::<CorrectionMode>().is_err());
}

#[test]
fn transition_inside_mismatched_region_warns() {
    let g = Grid::new_1d(64, 0.1).unwrap();
    let c = g.sample(|x, _| if x.abs() < 0.5 { 0.8 } else { 1.0 });
    let rho = g.sample(|_, _| 1.0);
    let m = Medium::new(c, rho, 1.0).unwrap();
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let sched = StepSchedule::from_steps(&[0.01, 0.01, 0.02]).unwrap();
    let out = s.run(gaussian(&g, 0.3), g.velocity_zeros(), &sched, &[]).unwrap();
    assert_eq!(out.warnings.len(), 1);
    // no transition, no warning
    let out = s
        .run(gaussian(&g, 0.3), g.velocity_zeros(), &StepSchedule::uniform(0.01, 3).unwrap(), &[])
        .unwrap();
    assert!(out.warnings.is_empty());
}

#[test]
fn non_finite_input_detected() {
    let (g, m) = hom_1d(16, 0.1, 1.0, 1.0);
    let mut s = solver(&g, &m, CorrectionMode::Full);
    let mut p0 = g.zeros();
    p0[[3, 0]] = f64::NAN;
    let r = s.run(p0, g.velocity_zeros(), &StepSchedule::uniform(0.01, 3).unwrap(), &[]);
    assert!(matches!(r, Err(Error::NonFinite { .. })));
}

#[test]
fn pml_absorbs_outgoing_pulse() {
    let g = Grid::new_1d(256, 0.1).unwrap();
    let m = Medium::homogeneous(&g, 1.0, 1.0).unwrap();
    let cfg = PmlConfig::from_alpha(PmlConfig::DEFAULT_THICKNESS, PmlConfig::DEFAULT_ALPHA, 1.0, 0.1);
    let mut s = Solver::new(g.clone(), m, CorrectionMode::Full, cfg).unwrap();
    let p0 = gaussian(&g, 0.4);
    // pulses reach the layers at about t = 10.8 s and are gone by 16 s
    let out = s
        .run(p0, g.velocity_zeros(), &StepSchedule::uniform(0.05, 400).unwrap(), &[])
        .unwrap();
    let interior = out.final_state.p.slice(ndarray::s![20..236, ..]).to_owned();
    let peak = max_abs(&interior);
    assert!(peak <= 1e-4, "{peak}");
}

#[test]
fn half_corrected_errors_are_one_sided() {
    let (g, m) = hom_1d(256, 0.1, 1.0, 1.0);
    let p0 = gaussian(&g, 0.4);
    let sched = StepSchedule::new(vec![
        Segment { dt: 0.01, count: 300 },
        Segment { dt: 0.03, count: 50 },
    ])
    .unwrap();
    let mut s = solver(&g, &m, CorrectionMode::HalfCorrected);
    let out = s.run(p0.clone(), g.velocity_zeros(), &sched, &[]).unwrap();
    let exact = crate::oracle::dalembert_1d(&p0, s.wavevectors(), 1.0, 4.5).unwrap();
    let (mut left, mut right) = (0.0f64, 0.0f64);
    for i in 0..g.nx() {
        let e = (out.final_state.p[[i, 0]] - exact[[i, 0]]).abs();
        if g.x(i) < 0.0 {
            left = left.max(e);
        } else {
            right = right.max(e);
        }
    }
    assert!(left > 1e-6, "{left}");
    assert!(left >= 100.0 * right, "left {left} right {right}");
}
