use nalgebra::DMatrix;
use noisy_grover::analytic;
use noisy_grover::dense::DenseState;
use noisy_grover::linalg::c;
use noisy_grover::tensornet::{build_diffusion_mpo, build_oracle_mpo, run_grover_mps, Mpo, MpsState, TruncationPolicy};
use noisy_grover::Bitstring;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn bits(s: &str) -> Bitstring {
    s.parse().unwrap()
}

fn random_state(n: usize, seed: u64) -> Vec<C64> {
    let mut x = (seed as f64 * 0.7548776662).fract() + 0.1;
    let mut v: Vec<C64> = (0..1usize << n)
        .map(|_| {
            x = (x * 12.9898 + 0.233).fract();
            let re = x - 0.5;
            x = (x * 78.233 + 0.719).fract();
            C64::new(re, x - 0.5)
        })
        .collect();
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= nrm);
    v
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn oracle_mpo_matches_dense_oracle() {
    for n in [2usize, 5, 8, 10] {
        let omega = Bitstring::from_index(n, (0x2d5 * n) % (1 << n));
        let mpo = build_oracle_mpo(&omega);
        assert_eq!(mpo.max_bond(), 2);
        let v = random_state(n, n as u64);
        let mut psi = MpsState::from_dense(&v, &TruncationPolicy::exact()).unwrap();
        psi.apply_mpo(&mpo, &TruncationPolicy::exact()).unwrap();
        let mut d = DenseState::from_amplitudes(v).unwrap();
        d.apply_oracle(&omega).unwrap();
        assert!(max_diff(&psi.to_dense(), d.amplitudes()) < 1e-12, "n={n}");
    }
}

#[test]
fn diffusion_mpo_matches_dense_diffusion() {
    for n in [2usize, 4, 7, 10] {
        let mpo = build_diffusion_mpo(n).unwrap();
        assert_eq!(mpo.max_bond(), 2);
        let v = random_state(n, 100 + n as u64);
        let mut psi = MpsState::from_dense(&v, &TruncationPolicy::exact()).unwrap();
        psi.apply_mpo(&mpo, &TruncationPolicy::exact()).unwrap();
        let mut d = DenseState::from_amplitudes(v).unwrap();
        d.apply_diffusion();
        assert!(max_diff(&psi.to_dense(), d.amplitudes()) < 1e-12, "n={n}");
    }
    assert!(build_diffusion_mpo(1).is_err());
}

#[test]
fn mpo_dense_matrix_is_reflection() {
    let omega = bits("0110");
    let dense = build_oracle_mpo(&omega).to_dense();
    let mut expect = DMatrix::<C64>::identity(16, 16);
    expect[(6, 6)] = c(-1.0);
    assert!((dense - expect).norm() < 1e-14);
    let diff = build_diffusion_mpo(3).unwrap().to_dense();
    let expect = DMatrix::from_fn(8, 8, |r, k| c(0.25 - if r == k { 1.0 } else { 0.0 }));
    assert!((diff - expect).norm() < 1e-14);
}

#[test]
fn oracle_acting_on_target_flips_sign() {
    let omega = bits("10110");
    let mut psi = MpsState::basis(&omega).unwrap();
    let orig = psi.clone();
    psi.apply_mpo(&build_oracle_mpo(&omega), &TruncationPolicy::default()).unwrap();
    assert!((psi.overlap(&orig) + c(1.0)).norm() < 1e-12);
}

#[test]
fn diffusion_fixes_uniform_state() {
    let mut psi = MpsState::uniform(9).unwrap();
    let orig = psi.clone();
    psi.apply_mpo(&build_diffusion_mpo(9).unwrap(), &TruncationPolicy::default()).unwrap();
    assert!((psi.overlap(&orig) - c(1.0)).norm() < 1e-12);
}

#[test]
fn two_qubit_search_is_exact_in_one_iteration() {
    let omega = bits("10");
    let mut psi = MpsState::uniform(2).unwrap();
    let policy = TruncationPolicy::default();
    psi.apply_mpo(&build_oracle_mpo(&omega), &policy).unwrap();
    psi.apply_mpo(&build_diffusion_mpo(2).unwrap(), &policy).unwrap();
    assert!((psi.success_probability(&omega).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn identity_mpo_leaves_state_unchanged() {
    let v = random_state(6, 7);
    let mut psi = MpsState::from_dense(&v, &TruncationPolicy::exact()).unwrap();
    let before = psi.discarded_weight();
    psi.apply_mpo(&Mpo::identity(6, 2), &TruncationPolicy::default()).unwrap();
    assert!(max_diff(&psi.to_dense(), &v) < 1e-12);
    assert_eq!(psi.discarded_weight(), before);
}

#[test]
fn oracle_twice_is_identity() {
    let omega = bits("0101101");
    let mut psi = MpsState::uniform(7).unwrap();
    let policy = TruncationPolicy::default();
    psi.apply_mpo(&build_diffusion_mpo(7).unwrap(), &policy).unwrap();
    psi.apply_mpo(&build_oracle_mpo(&omega), &policy).unwrap();
    psi.apply_mpo(&build_diffusion_mpo(7).unwrap(), &policy).unwrap();
    let orig = psi.clone();
    psi.apply_mpo(&build_oracle_mpo(&omega), &policy).unwrap();
    psi.apply_mpo(&build_oracle_mpo(&omega), &policy).unwrap();
    assert!((psi.overlap(&orig).norm() - 1.0).abs() < 1e-10);
}

#[test]
fn chi_two_noiseless_grover_is_exact() {
    let n = 10;
    let omega = bits("1100101001");
    let policy = TruncationPolicy::new(2, 1e-12, true).unwrap();
    let trace = run_grover_mps(&omega, analytic::optimal_iterations(n), &policy).unwrap();
    assert!(noisy_grover::tensornet::max_deviation_from_analytic(&trace, n).unwrap() < 1e-10);
    for r in &trace.records {
        let exact = analytic::two_level_entropy(n, analytic::grover_angle(n, r.k).unwrap()).unwrap();
        assert!((r.entropy - exact).abs() < 1e-10, "k={} {} vs {}", r.k, r.entropy, exact);
        assert!(r.entropy <= 1.0);
    }
    assert!(trace.last().unwrap().discarded_weight < 1e-20);
}

#[test]
fn two_level_state_entropy_at_quarter_angle() {
    // |ψ⟩ = sinθ|ω⟩ + cosθ|r⟩ at θ = π/4, n = 4.
    let n = 4;
    let theta = std::f64::consts::FRAC_PI_4;
    let w = 9usize;
    let rest = theta.cos() / 15f64.sqrt();
    let amps: Vec<C64> = (0..16).map(|i| c(if i == w { theta.sin() } else { rest })).collect();
    let mut psi = MpsState::from_dense(&amps, &TruncationPolicy::exact()).unwrap();
    let s = psi.bipartite_entropy(2).unwrap();
    assert!((s - analytic::two_level_entropy(n, theta).unwrap()).abs() < 1e-12);
    assert!((s - 0.439_073_459_226_713_55).abs() < 1e-12);
}

#[test]
fn entropy_bounded_by_log_bond_dimension() {
    let v = random_state(8, 21);
    for chi in [1usize, 2, 3, 5] {
        let policy = TruncationPolicy::new(chi, 0.0, true).unwrap();
        let mut psi = MpsState::from_dense(&v, &policy).unwrap();
        psi.normalize();
        for cut in 1..8 {
            let s = psi.bipartite_entropy(cut).unwrap();
            assert!(s >= 0.0 && s <= (chi as f64).log2() + 1e-12);
        }
    }
}

#[test]
fn norm_survives_many_applications() {
    let n = 8;
    let omega = bits("10010110");
    let policy = TruncationPolicy::new(2, 1e-12, true).unwrap();
    let oracle = build_oracle_mpo(&omega);
    let diffusion = build_diffusion_mpo(n).unwrap();
    let mut psi = MpsState::uniform(n).unwrap();
    for _ in 0..500 {
        psi.apply_mpo(&oracle, &policy).unwrap();
        psi.apply_mpo(&diffusion, &policy).unwrap();
    }
    assert!((psi.norm() - 1.0).abs() < 1e-8);
    assert!(psi.discarded_weight() < 1e-16);
}

#[test]
fn exact_policy_reproduces_dense_circuit() {
    for n in [4usize, 6, 8] {
        let omega = Bitstring::from_index(n, 3 * n + 1);
        let v = random_state(n, 40 + n as u64);
        let mut psi = MpsState::from_dense(&v, &TruncationPolicy::exact()).unwrap();
        let mut d = DenseState::from_amplitudes(v).unwrap();
        for _ in 0..3 {
            psi.apply_mpo(&build_oracle_mpo(&omega), &TruncationPolicy::exact()).unwrap();
            psi.apply_mpo(&build_diffusion_mpo(n).unwrap(), &TruncationPolicy::exact()).unwrap();
            d.apply_oracle(&omega).unwrap();
            d.apply_diffusion();
        }
        assert!(max_diff(&psi.to_dense(), d.amplitudes()) < 1e-12);
    }
}

proptest! {
    #[test]
    fn product_round_trip_through_dense(angles in proptest::collection::vec((0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU), 2..10)) {
        let locals: Vec<[C64; 2]> = angles
            .iter()
            .map(|&(t, ph)| [c((t / 2.0).cos()), C64::from_polar((t / 2.0).sin(), ph)])
            .collect();
        let psi = MpsState::from_product(&locals).unwrap();
        let dense = psi.to_dense();
        let back = MpsState::from_dense(&dense, &TruncationPolicy::new(usize::MAX, 1e-12, false).unwrap()).unwrap();
        prop_assert!(max_diff(&back.to_dense(), &dense) < 1e-12);
        prop_assert!(back.max_bond() == 1);
    }
}
