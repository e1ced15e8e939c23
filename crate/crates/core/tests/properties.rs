use gftlqr_core::dynamics::{
    coriolis_vector, forward_dynamics, inertia_matrix, kinetic_energy, linearize, rk4_step,
};
use gftlqr_core::evo::{decode_gft, encode_constant_gft, run_ga, GFT_GENOME_LEN};
use gftlqr_core::fuzzy::{fis_eval, MembershipPartition};
use gftlqr_core::gft::{bids, q_gains, BID_SETS, QGAIN_SETS};
use gftlqr_core::harness::sim::within_tolerance;
use gftlqr_core::harness::{simulate_case, GftLaw, StaticLqr};
use gftlqr_core::riccati::{
    care_residual_norm, feedback_torque, lqr_gain, solve_care, synthesize_gain, GainMatrix,
    LqrWeights,
};
use gftlqr_core::*;
use nalgebra::{DMatrix, Vector2, Vector4};
use proptest::prelude::*;

fn reference() -> ManipulatorParams {
    ManipulatorParams::reference()
}

fn angle() -> impl Strategy<Value = f64> {
    -std::f64::consts::PI..std::f64::consts::PI
}

fn arm() -> impl Strategy<Value = ManipulatorParams> {
    (5.0..40.0f64, 2.0..20.0f64, 0.5..2.0f64, 0.5..2.0f64).prop_map(|(m1, m2, l1, l2)| {
        ManipulatorParams::from_mass_length(m1, m2, l1, l2, [400.0, 150.0]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inertia_is_spd(p in arm(), th2 in angle()) {
        let m = inertia_matrix(&p, th2);
        prop_assert_eq!(m[(0, 1)], m[(1, 0)]);
        let eig = m.symmetric_eigenvalues();
        prop_assert!(eig.min() > 0.0);
    }

    #[test]
    fn coriolis_vanishes_at_rest_or_aligned(
        th1 in angle(), th2 in angle(), w1 in -5.0..5.0f64, w2 in -5.0..5.0f64, flip in any::<bool>()
    ) {
        let p = reference();
        for variant in [CoriolisVariant::PaperVerbatim, CoriolisVariant::StandardPhysical] {
            let rest = State4::new(th1, th2, 0.0, 0.0);
            prop_assert_eq!(coriolis_vector(&p, &rest, variant), Vector2::zeros());
            let aligned = State4::new(th1, if flip { 0.0 } else { std::f64::consts::PI }, w1, w2);
            let c = coriolis_vector(&p, &aligned, variant);
            prop_assert!(c.amax() <= 1e-12);
        }
    }

    #[test]
    fn energy_conserved_for_standard_model(th2 in angle(), w1 in -2.0..2.0f64, w2 in -2.0..2.0f64) {
        prop_assume!(w1.abs() + w2.abs() > 0.1);
        let p = reference();
        let mut x = State4::new(0.3, th2, w1, w2);
        let e0 = kinetic_energy(&p, &x);
        for _ in 0..120 {
            x = rk4_step(&p, &x, &Vector2::zeros(), 0.0167, CoriolisVariant::StandardPhysical).unwrap();
        }
        prop_assert!((kinetic_energy(&p, &x) - e0).abs() <= 1e-5 * e0);
    }

    #[test]
    fn linear_model_tracks_small_perturbations(
        th1 in angle(), th2 in angle(),
        d in prop::array::uniform4(-1.0..1.0f64),
    ) {
        let p = reference();
        let d = Vector4::from(d);
        let d = d * (1e-3 / d.norm().max(1e-12));
        let (a, _) = linearize(&p, &Vector2::new(th1, th2)).unwrap();
        let base = State4::at_rest(th1, th2).to_vector();
        let mut x = State4::from_vector(&(base + d));
        let mut z = d;
        let dt = 0.001;
        for _ in 0..100 {
            x = rk4_step(&p, &x, &Vector2::zeros(), dt, CoriolisVariant::PaperVerbatim).unwrap();
            let k1 = a * z;
            let k2 = a * (z + 0.5 * dt * k1);
            let k3 = a * (z + 0.5 * dt * k2);
            let k4 = a * (z + dt * k3);
            z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        prop_assert!((x.to_vector() - base - z).amax() <= 1e-4);
    }

    #[test]
    fn forward_dynamics_inverts_inertia(th2 in angle(), t1 in -400.0..400.0f64, t2 in -150.0..150.0f64) {
        let p = reference();
        let x = State4::at_rest(0.0, th2);
        let tau = Vector2::new(t1, t2);
        let acc = forward_dynamics(&p, &x, &tau, CoriolisVariant::PaperVerbatim).unwrap();
        let back = inertia_matrix(&p, th2) * acc;
        prop_assert!((back - tau).amax() <= 1e-9 * (1.0 + tau.amax()));
    }
}

fn random_system(seed: u64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut g = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let a = g(4, 4) * 2.0;
    let b = g(4, 2);
    let lq = g(4, 4);
    let lr = g(2, 2);
    let q = &lq * lq.transpose() + DMatrix::identity(4, 4) * 0.1;
    let r = &lr * lr.transpose() + DMatrix::identity(2, 2) * 0.1;
    (a, b, q, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn care_solution_properties(seed in any::<u64>()) {
        let (a, b, q, r) = random_system(seed);
        let p = solve_care(&a, &b, &q, &r).unwrap();
        let qn = q.abs().row_sum().max();
        prop_assert!(care_residual_norm(&a, &b, &q, &r, &p).unwrap() <= 1e-8 * qn.max(1.0));
        prop_assert!((&p - p.transpose()).amax() <= 1e-10 * p.amax().max(1.0));
        prop_assert!(p.clone().symmetric_eigen().eigenvalues.min() >= -1e-10);
        let k = lqr_gain(&p, &b, &r).unwrap();
        let closed = &a - &b * k;
        let abscissa = closed.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max);
        prop_assert!(abscissa < 0.0);
    }

    #[test]
    fn gain_invariant_under_joint_scaling(
        th2 in angle(), q in prop::array::uniform4(1e-2..1e4f64), s in 1e-3..1e3f64
    ) {
        let p = reference();
        let th = Vector2::new(0.2, th2);
        let k1 = synthesize_gain(&p, &th, &LqrWeights::new(q, 1e-4)).unwrap();
        let k2 = synthesize_gain(&p, &th, &LqrWeights::new(q.map(|v| v * s), 1e-4 * s)).unwrap();
        prop_assert!((k1.0 - k2.0).amax() <= 1e-6 * k1.0.amax().max(1.0));
    }

    #[test]
    fn feedback_is_odd(k in prop::array::uniform8(-50.0..50.0f64), e in prop::array::uniform4(-1.0..1.0f64)) {
        let gain = GainMatrix::from_rows([[k[0], k[1], k[2], k[3]], [k[4], k[5], k[6], k[7]]]);
        let target = State4::at_rest(0.7, -0.4);
        let e = Vector4::from(e);
        let plus = State4::from_vector(&(target.to_vector() + e));
        let minus = State4::from_vector(&(target.to_vector() - e));
        let a = feedback_torque(&gain, &plus, &target, None);
        let b = feedback_torque(&gain, &minus, &target, None);
        prop_assert!((a + b).amax() <= 1e-12 * a.amax().max(1.0));
    }

    #[test]
    fn fis_output_within_bounds(
        genes in prop::collection::vec(any::<u8>(), GFT_GENOME_LEN),
        x in -2.0..2.0f64, y in -2.0..2.0f64,
    ) {
        let ctrl = decode_gft(&Chromosome::new(genes));
        for fis in ctrl.bid_fis.iter().chain(ctrl.qgain_fis.iter()) {
            let v = fis_eval(fis, x, y);
            prop_assert!(v >= fis.out_lo && v <= fis.out_hi);
        }
        let state = State4::new(x, y, x * y, -x);
        let b = bids(&ctrl, &state, &State4::at_rest(0.0, 0.0));
        prop_assert!(b.iter().all(|v| (-1.0..=1.0).contains(v)));
        let q = q_gains(&ctrl, b[0], b[1]);
        prop_assert!(q.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn fis_is_continuous(
        genes in prop::collection::vec(any::<u8>(), GFT_GENOME_LEN),
        x in -1.0..1.0f64, y in -1.0..1.0f64, dx in -1e-7..1e-7f64, dy in -1e-7..1e-7f64,
    ) {
        let ctrl = decode_gft(&Chromosome::new(genes));
        for fis in &ctrl.qgain_fis {
            let span = fis.out_hi - fis.out_lo;
            // Lipschitz constant of a multilinear interpolant on this grid.
            let lip = span * (QGAIN_SETS - 1) as f64;
            let d = (fis_eval(fis, x + dx, y + dy) - fis_eval(fis, x, y)).abs();
            prop_assert!(d <= lip * (dx.abs() + dy.abs()) + 1e-9 * span);
        }
    }

    #[test]
    fn partition_of_unity(x in -3.0..3.0f64, n in 2usize..9) {
        let part = MembershipPartition::new(n).unwrap();
        let total: f64 = (0..n).map(|j| part.membership(j, x)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn partition_of_unity_dense_sweep() {
    for n in [BID_SETS, QGAIN_SETS] {
        let part = MembershipPartition::new(n).unwrap();
        for i in 0..=10_000 {
            let x = -1.0 + 2.0 * i as f64 / 10_000.0;
            let total: f64 = (0..n).map(|j| part.membership(j, x)).sum();
            assert!((total - 1.0).abs() <= 1e-12, "n={n} x={x}");
        }
    }
}

fn short_case() -> ScenarioCase {
    ScenarioCase::from_degrees(0, (0.0, 0.0), (45.0, -90.0))
}

#[test]
fn settled_runs_satisfy_band_at_settle_time_and_iac_is_additive() {
    let p = reference();
    let cfg = SimConfig::default();
    let case = short_case();
    let weights = LqrWeights::new([100.0, 100.0, 10.0, 10.0], 1e-4);
    let law = StaticLqr {
        gain: synthesize_gain(&p, &case.target.angles(), &weights).unwrap(),
        limits: cfg.limits(&p),
    };
    let r = simulate_case(&law, &case, &p, &cfg);
    assert!(r.settled);
    assert!(r.settle_time <= cfg.t_max);
    let last = r.trajectory.last().unwrap();
    assert_eq!(last.t, r.settle_time);
    assert!(within_tolerance(&last.state, &case.target, cfg.settle_tol));
    assert!(r.trajectory[..r.trajectory.len() - 1]
        .iter()
        .all(|s| !within_tolerance(&s.state, &case.target, cfg.settle_tol)));
    for w in r.trajectory.windows(2) {
        assert!((w[1].t - w[0].t - cfg.dt).abs() < 1e-12);
    }

    // Any split of the applied steps sums to the total IAC.
    let applied = &r.trajectory[..r.steps];
    for split in [1, applied.len() / 3, applied.len() / 2] {
        let part = |s: &[gftlqr_core::harness::sim::Sample], k: usize| -> f64 {
            s.iter().map(|x| x.tau[k].abs() * cfg.dt).sum()
        };
        for k in 0..2 {
            let total = part(&applied[..split], k) + part(&applied[split..], k);
            assert!((total - r.iac[k]).abs() <= 1e-9 * r.iac[k].max(1.0));
        }
    }
    assert!(r.iac.iter().all(|v| *v >= 0.0));
}

#[test]
fn constant_tree_reproduces_scheduled_static_weights() {
    let p = reference();
    let cfg = SimConfig::default();
    let q = [316.2, 12.0, 3.1, 0.7];
    let chrom = encode_constant_gft(q);
    let ctrl = decode_gft(&chrom);
    let decoded_q = ctrl.qgain_fis.iter().map(|f| f.out_lo).collect::<Vec<_>>();
    let gft = GftLaw {
        controller: &ctrl,
        model: p,
        limits: cfg.limits(&p),
    };
    let case = short_case();
    let a = simulate_case(&gft, &case, &p, &cfg);
    // Equivalent hand-rolled law: static weights, gain re-synthesized each step.
    struct PerStep {
        p: ManipulatorParams,
        w: LqrWeights,
        limits: Option<[f64; 2]>,
    }
    impl harness::ControlLaw for PerStep {
        fn torque(&self, case: &ScenarioCase, state: &State4) -> Result<Vector2<f64>, harness::ControlError> {
            let k = synthesize_gain(&self.p, &state.angles(), &self.w)?;
            Ok(feedback_torque(&k, state, &case.target, self.limits.as_ref()))
        }
    }
    let per_step = PerStep {
        p,
        w: LqrWeights::new([decoded_q[0], decoded_q[1], decoded_q[2], decoded_q[3]], ctrl.r_value),
        limits: cfg.limits(&p),
    };
    let b = simulate_case(&per_step, &case, &p, &cfg);
    let ca = harness::case_cost(&a, &p, &cfg);
    let cb = harness::case_cost(&b, &p, &cfg);
    assert!((ca - cb).abs() <= 1e-9, "{ca} vs {cb}");
}

#[test]
fn ga_results_independent_of_worker_count() {
    let cfg = GaConfig {
        population_size: 16,
        n_islands: 4,
        n_generations: 30,
        migration_interval: 5,
        seed: 42,
        ..GaConfig::default()
    };
    let cost = |c: &Chromosome| c.genes.iter().map(|&g| (g as f64 - 77.0).abs()).sum::<f64>();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ga(&cfg, 12, &[], cost, |_| {}).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.best, four.best);
    assert_eq!(one.history, four.history);
    assert!(one.best.genes.len() == 12);
    for w in one.history.windows(2) {
        assert!(w[1].best_cost <= w[0].best_cost);
    }
}
