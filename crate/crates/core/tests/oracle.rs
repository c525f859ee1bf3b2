mod common;

use common::*;
use faer::c64;
use kickchain::dynamics::{entanglement_entropy, evolve_stroboscopic, imbalance, neel_state};
use kickchain::floquet::{build_floquet, diagonalize_floquet, diagonalize_unitary, FloquetModel};
use kickchain::hamiltonian::{build_hamiltonian, hamiltonian_spectrum};
use kickchain::{ChainConfig, Exponent, KickAngles, PairSum, SectorBasis, SectorState, TimeGrid};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn config(sites: usize, a: f64, b: f64, theta: f64, tau: f64) -> ChainConfig {
    ChainConfig { sites, a: Exponent(a), b: Exponent(b), theta, tau, ..ChainConfig::default() }
}

fn random_state(dim: usize, seed: u64) -> SectorState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amplitudes: Vec<c64> = (0..dim)
        .map(|_| c64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amplitudes.iter_mut().for_each(|a| *a /= norm);
    SectorState { amplitudes }
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![0.5f64..5.0, Just(Exponent::NEAREST_NEIGHBOR.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sector_hamiltonian_is_a_block_of_the_full_one(
        sites in prop_oneof![Just(4usize), Just(6)],
        a in exponent(),
        b in exponent(),
        jx in -2.0f64..2.0,
        jz in -2.0f64..2.0,
        double in any::<bool>(),
    ) {
        let pair_sum = if double { PairSum::Double } else { PairSum::Single };
        let cfg = ChainConfig { jx, jz, pair_sum, ..config(sites, a, b, 1.0, 0.3) };
        let basis = SectorBasis::half_filling(sites).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let full = full_hamiltonian(&cfg);
        let states = basis.states();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let f = full[(states[i] as usize, states[j] as usize)];
                prop_assert!((f.re - h[(i, j)]).abs() < 1e-12 && f.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sector_floquet_is_a_block_of_the_full_one(
        a in exponent(),
        theta in 0.0f64..std::f64::consts::PI,
        tau in 0.01f64..2.0,
        seed in any::<u64>(),
    ) {
        let cfg = config(6, a, a, theta, tau);
        let basis = SectorBasis::half_filling(6).unwrap();
        let spectrum = hamiltonian_spectrum(&cfg, &basis).unwrap();
        let kick = KickAngles::from_seed(theta, 6, seed).unwrap();
        let u = build_floquet(&spectrum, &kick, tau, &basis).unwrap();
        let full = full_floquet(&cfg, &kick.angles);
        let states = basis.states();
        let mut worst: f64 = 0.0;
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                worst = worst.max((full[(states[i] as usize, states[j] as usize)] - u[(i, j)]).norm());
            }
        }
        prop_assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn entropy_matches_partial_trace(sites in prop_oneof![Just(4usize), Just(6), Just(8)], seed in any::<u64>()) {
        let basis = SectorBasis::half_filling(sites).unwrap();
        let psi = random_state(basis.dim(), seed);
        let ours = entanglement_entropy(&psi, &basis).unwrap();
        let reference = partial_trace_entropy(&embed(&psi, &basis), sites);
        prop_assert!((ours - reference).abs() < 1e-10);
        prop_assert!(ours >= -1e-14 && ours <= (sites / 2) as f64 * std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn imbalance_is_bounded(seed in any::<u64>()) {
        let basis = SectorBasis::half_filling(8).unwrap();
        let i = imbalance(&random_state(basis.dim(), seed), &basis).unwrap();
        prop_assert!((-1.0..=1.0).contains(&i));
    }

    #[test]
    fn both_eigensolvers_reconstruct_random_floquet_operators(
        a in 0.5f64..4.0,
        tau in 0.05f64..2.0,
        seed in any::<u64>(),
    ) {
        let model = FloquetModel::prepare(&config(8, a, a, std::f64::consts::PI, tau)).unwrap();
        let u = model.operator(&model.kick(seed).unwrap()).unwrap();
        let cayley = diagonalize_unitary(u.as_ref()).unwrap();
        let general = diagonalize_floquet(u.as_ref()).unwrap();
        prop_assert!(cayley.reconstruction_error(u.as_ref()) < 1e-9);
        prop_assert!(general.reconstruction_error(u.as_ref()) < 1e-9);
        for (p, q) in cayley.phases.iter().zip(&general.phases) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }
}

#[test]
fn stroboscopic_states_match_repeated_full_multiplication() {
    let cfg = config(6, 1.5, 2.0, std::f64::consts::PI, 0.4);
    let model = FloquetModel::prepare(&cfg).unwrap();
    let kick = model.kick(99).unwrap();
    let decomp = diagonalize_unitary(model.operator(&kick).unwrap().as_ref()).unwrap();
    let psi0 = neel_state(&model.basis).unwrap();
    let grid = TimeGrid::new(vec![0, 1, 2, 3, 5, 8, 40, 333]).unwrap();
    let states = evolve_stroboscopic(&decomp, &psi0, &grid).unwrap();
    let u_full = full_floquet(&cfg, &kick.angles);
    let start = embed(&psi0, &model.basis);
    for (&t, psi) in grid.times().iter().zip(&states) {
        let reference = mat_vec(&power(&u_full, t), &start);
        assert!(max_diff(&embed(psi, &model.basis), &reference) < 1e-10, "t = {t}");
    }
}

#[test]
fn spin_flip_preserves_the_floquet_spectrum_without_kicks() {
    let cfg = config(8, 2.0, 1.0, 0.0, 0.7);
    let basis = SectorBasis::half_filling(8).unwrap();
    let spectrum = hamiltonian_spectrum(&cfg, &basis).unwrap();
    let u = build_floquet(&spectrum, &KickAngles::zeros(8), cfg.tau, &basis).unwrap();
    for i in 0..basis.dim() {
        for j in 0..basis.dim() {
            let fi = basis.rank(basis.flip_all(basis.state(i))).unwrap();
            let fj = basis.rank(basis.flip_all(basis.state(j))).unwrap();
            assert!((u[(i, j)] - u[(fi, fj)]).norm() < 1e-12);
        }
    }
}
