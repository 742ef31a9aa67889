use nalgebra::{DMatrix, DVector};
use nhaqo_core::evolve::{
    evolve, evolve_pair, evolve_with, initial_ground_state, initial_state, EvolveConfig, InitialState,
};
use nhaqo_core::linalg::{norm, pauli, ComplexSquareMatrix};
use nhaqo_core::model::{
    build_transverse, linear_schedule, total_hamiltonian, AnnealSpec, IsingInstance, Schedule, ScheduleWeights,
};
use nhaqo_core::spectrum::trace_gap;
use nhaqo_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Classic fixed-step RK4 on `i dpsi/dt = H(t/tau) psi`.
fn rk4(spec: &AnnealSpec, psi: &[C64], steps: usize) -> Vec<C64> {
    let tau = spec.tau();
    let dt = tau / steps as f64;
    let f = |t: f64, y: &[C64]| -> Vec<C64> {
        let h = total_hamiltonian(spec, (t / tau).clamp(0.0, 1.0));
        h.mul_vec(y).into_iter().map(|z| z * c(0.0, -1.0)).collect()
    };
    let axpy = |y: &[C64], k: &[C64], a: f64| -> Vec<C64> { y.iter().zip(k).map(|(y, k)| y + k * a).collect() };
    let mut y = psi.to_vec();
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = f(t, &y);
        let k2 = f(t + dt / 2.0, &axpy(&y, &k1, dt / 2.0));
        let k3 = f(t + dt / 2.0, &axpy(&y, &k2, dt / 2.0));
        let k4 = f(t + dt, &axpy(&y, &k3, dt));
        for j in 0..y.len() {
            y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
    }
    y
}

#[test]
fn frozen_evolution_matches_nalgebra_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..100 {
        let dim = [2usize, 4, 8, 16][trial % 4];
        let m = DMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
        });
        // M = A + iB with A, B Hermitian; f0 = 1, f1 = 0, f2 = 1 gives A - i h1
        let a = (&m + m.adjoint()) * c(0.5, 0.0);
        let b = (&m - m.adjoint()) * c(0.0, -0.5);
        let h0 = ComplexSquareMatrix::from_rows(&rows(&a)).unwrap();
        let h1 = ComplexSquareMatrix::from_rows(&rows(&(-b))).unwrap();
        let w = ScheduleWeights {
            f0: 1.0,
            f1: 0.0,
            f2: 1.0,
        };
        let tau = 1.5;
        let spec = AnnealSpec::new_allow_commuting(h0, h1, Schedule::frozen(w), tau).unwrap();
        let psi = random_unit(dim, &mut rng);
        let out = evolve(&spec, &psi, false).unwrap();
        let oracle = (&m * c(0.0, -tau)).exp() * DVector::from_vec(psi.clone());
        let scale = oracle.norm().max(1.0);
        for (x, y) in out.final_state.iter().zip(oracle.iter()) {
            assert!((x - y).norm() < 1e-8 * scale, "trial {trial}: {:e}", (x - y).norm());
        }
    }
}

fn rows(m: &DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[test]
fn hermitian_anneal_conserves_norm() {
    let spec = IsingInstance::random(3, 7)
        .anneal_spec(linear_schedule(0.0), 50.0)
        .unwrap();
    let psi = initial_ground_state(&spec).unwrap();
    let out = evolve(&spec, &psi, false).unwrap();
    assert!(out.norm_history.len() >= 201);
    let worst = out
        .norm_history
        .iter()
        .map(|(_, n)| (n - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst:e}");
}

#[test]
fn decaying_driver_never_gains_norm() {
    let spec = IsingInstance::random(3, 7)
        .anneal_spec(linear_schedule(0.5), 20.0)
        .unwrap()
        .with_decaying_driver(true)
        .unwrap();
    let psi = initial_ground_state(&spec).unwrap();
    let out = evolve(&spec, &psi, false).unwrap();
    for w in out.norm_history.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-10, "{:?}", w);
    }
    assert!(out.final_norm() < 1.0);
}

#[test]
fn adjoint_pairing_is_conserved() {
    for decaying in [false, true] {
        let spec = IsingInstance::random(3, 11)
            .anneal_spec(linear_schedule(0.5), 20.0)
            .unwrap()
            .with_decaying_driver(decaying)
            .unwrap();
        let psi = initial_ground_state(&spec).unwrap();
        let phi: Vec<C64> = psi.iter().map(|z| z.conj()).collect();
        let out = evolve_pair(&spec, &psi, &phi, &EvolveConfig::default()).unwrap();
        assert!(
            out.pairing_drift() < 1e-7,
            "decaying {decaying}: {:e}",
            out.pairing_drift()
        );
    }
}

#[test]
fn pairing_of_random_states_is_conserved_relative_to_norms() {
    // gain modes of -i f2 h1 amplify both vectors, so the absolute pairing
    // suffers cancellation; the relative drift stays at rounding level
    let spec = IsingInstance::random(3, 11)
        .anneal_spec(linear_schedule(0.5), 20.0)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let psi = random_unit(8, &mut rng);
    let phi = random_unit(8, &mut rng);
    let out = evolve_pair(&spec, &psi, &phi, &EvolveConfig::default()).unwrap();
    let scale = norm(&out.right) * norm(&out.left);
    assert!(out.pairing_drift() / scale < 1e-12, "{:e}", out.pairing_drift() / scale);
}

#[test]
fn adjoint_of_hermitian_run_is_conjugate_of_forward_run() {
    let spec = IsingInstance::random(2, 1)
        .anneal_spec(linear_schedule(0.0), 5.0)
        .unwrap();
    let psi = initial_ground_state(&spec).unwrap();
    let forward = evolve(&spec, &psi, false).unwrap();
    let phi: Vec<C64> = psi.iter().map(|z| z.conj()).collect();
    let backward = evolve(&spec, &phi, true).unwrap();
    for (a, b) in forward.final_state.iter().zip(&backward.final_state) {
        assert!((a - b.conj()).norm() < 1e-8);
    }
    assert!((forward.success_probability - backward.success_probability).abs() < 1e-8);
}

#[test]
fn halving_tolerance_changes_result_by_little() {
    let spec = AnnealSpec::two_level(1.0, 0.8, linear_schedule(0.25), 10.0).unwrap();
    let psi = initial_ground_state(&spec).unwrap();
    let tol = 1e-8;
    let coarse = evolve_with(
        &spec,
        &psi,
        false,
        &EvolveConfig {
            tolerance: tol,
            ..Default::default()
        },
    )
    .unwrap();
    let fine = evolve_with(
        &spec,
        &psi,
        false,
        &EvolveConfig {
            tolerance: tol / 2.0,
            ..Default::default()
        },
    )
    .unwrap();
    let diff = coarse
        .final_state
        .iter()
        .zip(&fine.final_state)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 10.0 * tol, "{diff:e}");
}

#[test]
fn single_qubit_anneal_matches_fixed_step_oracle() {
    let h1 = pauli::sigma_x().scale(c(-1.0, 0.0));
    let spec = AnnealSpec::new(pauli::sigma_z(), h1, linear_schedule(0.0), 100.0).unwrap();
    let psi = initial_ground_state(&spec).unwrap();
    let out = evolve(&spec, &psi, false).unwrap();
    let oracle = rk4(&spec, &psi, 40_000);
    for (a, b) in out.final_state.iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-7);
    }
    // ground state of sigma_z is |1>
    assert!(oracle[1].norm_sqr() > 0.999);
    assert!(out.success_probability > 0.999);
}

#[test]
fn success_probability_grows_with_tau() {
    let inst = IsingInstance::random(3, 7);
    let spec = inst.anneal_spec(linear_schedule(0.0), 1.0).unwrap();
    let g_m = trace_gap(&spec, 1001).unwrap().g_m;
    let psi = initial_ground_state(&spec).unwrap();
    let probs: Vec<f64> = [1.0, 4.0, 16.0]
        .iter()
        .map(|k| {
            let s = spec.clone().with_tau(k / (g_m * g_m)).unwrap();
            evolve(&s, &psi, false).unwrap().success_probability
        })
        .collect();
    assert!(probs[0] <= probs[2] && probs[1] <= probs[2] + 1e-3, "{probs:?}");
}

#[test]
fn initial_state_with_problem_admixture_matches_dense_solver() {
    let inst = IsingInstance::random(2, 4);
    let start = ScheduleWeights {
        f0: 0.05,
        f1: 1.0,
        f2: 0.0,
    };
    let end = ScheduleWeights {
        f0: 1.0,
        f1: 0.0,
        f2: 0.0,
    };
    let spec = AnnealSpec::new(
        inst.hamiltonian().unwrap(),
        build_transverse(2).unwrap(),
        Schedule::affine(start, end),
        1.0,
    )
    .unwrap();
    let v = initial_ground_state(&spec).unwrap();
    let h = total_hamiltonian(&spec, 0.0);
    let dense = DMatrix::from_fn(4, 4, |i, j| h[(i, j)]);
    let eig = dense.symmetric_eigen();
    let k = (0..4)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap();
    let oracle = eig.eigenvectors.column(k);
    let overlap: C64 = v.iter().zip(oracle.iter()).map(|(a, b)| a.conj() * b).sum();
    assert!((overlap.norm() - 1.0).abs() < 1e-10);

    let driver_only = initial_state(&spec, InitialState::DriverOnly).unwrap();
    assert!(driver_only.iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-12));
}
