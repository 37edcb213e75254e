use ksnut::grid::build_wavevectors;
use ksnut::oracle::{compare, spectral_propagator};
use ksnut::solver::planewave::{decompose_plane_waves, reconstruct_plane_waves};
use ksnut::{CorrectionMode, Field, Grid, Medium, PmlConfig, Segment, Solver, StepSchedule};
use proptest::prelude::*;

fn max_abs(f: &Field) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn smooth_field(g: &Grid, coeffs: &[(f64, f64, f64)]) -> Field {
    // a few low-order Fourier modes, so the field is well resolved
    let [lx, ly] = g.extent();
    g.sample(|x, y| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, &(a, b, phase))| {
                let kx = 2.0 * std::f64::consts::PI * (m + 1) as f64 / lx;
                let ky = 2.0 * std::f64::consts::PI * m as f64 / ly;
                a * (kx * x + ky * y + phase).cos() + b * (kx * x - phase).sin()
            })
            .sum()
    })
}

fn schedule_from(fracs: &[(f64, usize)], dt_max: f64) -> StepSchedule {
    StepSchedule::new(
        fracs
            .iter()
            .map(|&(f, count)| Segment { dt: f * dt_max, count })
            .collect(),
    )
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.0f64..6.0), 1..4)
}

fn segments() -> impl Strategy<Value = Vec<(f64, usize)>> {
    prop::collection::vec((0.05f64..0.98, 1usize..25), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn homogeneous_runs_match_the_oracle(
        two_d in any::<bool>(),
        c in 0.5f64..2.0,
        rho in 0.5f64..2.0,
        p_modes in coeffs(),
        u_modes in coeffs(),
        segs in segments(),
    ) {
        let g = if two_d {
            Grid::new_2d(24, 20, 0.1, 0.15).unwrap()
        } else {
            Grid::new_1d(48, 0.1).unwrap()
        };
        let m = Medium::homogeneous(&g, c, rho).unwrap();
        let wv = build_wavevectors(&g);
        let dt_max = ksnut::kspace::max_stable_step(wv.kmax(), c);
        let sched = schedule_from(&segs, dt_max);
        let p0 = smooth_field(&g, &p_modes);
        let u0: Vec<Field> = (0..g.dims()).map(|_| smooth_field(&g, &u_modes).mapv(|v| v / (rho * c))).collect();
        let mut s = Solver::new(g.clone(), m.clone(), CorrectionMode::Full, PmlConfig::disabled()).unwrap();
        let out = s.run(p0.clone(), u0.clone(), &sched, &[]).unwrap();
        let (p, u) = spectral_propagator(&p0, &u0, &m, &wv, sched.total_time()).unwrap();
        let scale = max_abs(&p0).max(rho * c * max_abs(&u0[0]));
        let ep = out.final_state.p.iter().zip(&p).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        prop_assert!(ep <= 1e-10 * scale, "pressure {ep:e} vs scale {scale:e}");
        for (a, b) in out.final_velocity.iter().zip(&u) {
            let eu = a.iter().zip(b).fold(0.0f64, |e, (x, y)| e.max((x - y).abs()));
            prop_assert!(rho * c * eu <= 1e-10 * scale, "velocity {eu:e}");
        }
    }

    #[test]
    fn splitting_a_segment_changes_nothing(
        f in 0.05f64..0.98,
        n1 in 1usize..30,
        n2 in 1usize..30,
        mode_ix in 0usize..4,
        p_modes in coeffs(),
    ) {
        let g = Grid::new_1d(40, 0.1).unwrap();
        let m = Medium::homogeneous(&g, 1.0, 1.0).unwrap();
        let dt = f * ksnut::kspace::max_stable_step(build_wavevectors(&g).kmax(), 1.0);
        let mode = CorrectionMode::ALL[mode_ix];
        let p0 = smooth_field(&g, &p_modes);
        let run = |sched: StepSchedule| {
            let mut s = Solver::new(g.clone(), m.clone(), mode, PmlConfig::disabled()).unwrap();
            s.run(p0.clone(), g.velocity_zeros(), &sched, &[]).unwrap().final_state
        };
        let whole = run(StepSchedule::uniform(dt, n1 + n2).unwrap());
        let split = run(StepSchedule::new(vec![Segment { dt, count: n1 }, Segment { dt, count: n2 }]).unwrap());
        prop_assert_eq!(whole.p, split.p);
        prop_assert_eq!(whole.u, split.u);
    }

    #[test]
    fn branch_amplitudes_are_conserved(
        p_modes in coeffs(),
        u_modes in coeffs(),
        segs in segments(),
    ) {
        let g = Grid::new_2d(16, 16, 0.1, 0.1).unwrap();
        let m = Medium::homogeneous(&g, 1.0, 1.2).unwrap();
        let wv = build_wavevectors(&g);
        let sched = schedule_from(&segs, ksnut::kspace::max_stable_step(wv.kmax(), 1.0));
        let p0 = smooth_field(&g, &p_modes);
        let u0 = vec![smooth_field(&g, &u_modes), g.zeros()];
        let mut s = Solver::new(g.clone(), m.clone(), CorrectionMode::Full, PmlConfig::disabled()).unwrap();
        let out = s.run(p0.clone(), u0.clone(), &sched, &[]).unwrap();
        let a = decompose_plane_waves(&p0, &u0, 0.0, &m, &wv).unwrap();
        let b = decompose_plane_waves(&out.final_state.p, &out.final_velocity, sched.total_time(), &m, &wv).unwrap();
        let scale = a.forward.iter().chain(a.backward.iter()).fold(0.0f64, |s, v| s.max(v.norm()));
        for (x, y) in a.forward.iter().zip(&b.forward).chain(a.backward.iter().zip(&b.backward)) {
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn decomposition_round_trip(p_modes in coeffs(), u_modes in coeffs(), t in 0.0f64..5.0) {
        let g = Grid::new_2d(12, 18, 0.2, 0.1).unwrap();
        let m = Medium::homogeneous(&g, 1.5, 0.8).unwrap();
        let wv = build_wavevectors(&g);
        let p = smooth_field(&g, &p_modes);
        let u = vec![smooth_field(&g, &u_modes), smooth_field(&g, &p_modes).mapv(|v| 0.3 * v)];
        let c = decompose_plane_waves(&p, &u, t, &m, &wv).unwrap();
        let (p2, u2) = reconstruct_plane_waves(&c, &m, &wv, t).unwrap();
        prop_assert!(compare(&p2, &p).unwrap().linf_rel <= 1e-12);
        for (a, b) in u2.iter().zip(&u) {
            prop_assert!(compare(a, b).unwrap().linf_rel <= 1e-12);
        }
    }
}

#[test]
fn naive_swap_is_exact_only_without_changes() {
    let g = Grid::new_1d(64, 0.1).unwrap();
    let m = Medium::homogeneous(&g, 1.0, 1.0).unwrap();
    let wv = build_wavevectors(&g);
    let p0 = g.sample(|x, _| (-x * x / 0.16).exp());
    let run = |sched: &StepSchedule| {
        let mut s = Solver::new(g.clone(), m.clone(), CorrectionMode::NaiveSwap, PmlConfig::disabled()).unwrap();
        let out = s.run(p0.clone(), g.velocity_zeros(), sched, &[]).unwrap();
        let (p, _) = spectral_propagator(&p0, &g.velocity_zeros(), &m, &wv, sched.total_time()).unwrap();
        compare(&out.final_state.p, &p).unwrap().linf_rel
    };
    assert!(run(&StepSchedule::uniform(0.01, 200).unwrap()) < 1e-12);
    let changed = StepSchedule::new(vec![Segment { dt: 0.01, count: 100 }, Segment { dt: 0.03, count: 30 }]).unwrap();
    assert!(run(&changed) > 1e-6);
}
