mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use qkrylov::exact::SpectralDecomposition;
use qkrylov::experiment::{geometric_stats, System, SystemOptions};
use qkrylov::filters::{ground_energy, imaginary_filter, unitary_filter, GroundEnergy};
use qkrylov::gevp::{self, GevpOutcome, RegularizationMethod, RegularizationSpec};
use qkrylov::krylov::{ElementSource, Generator, KrylovConfig, Variant};
use qkrylov::noise::{allocate_shots, NoiseSpec};
use qkrylov::pauli::{ModelKind, PauliString, PauliSum, DEFAULT_DENSE_CAP};
use qkrylov::reference::select_references;

fn label(n: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n)
        .prop_map(|v| v.into_iter().collect())
}

fn pauli_sum(n: usize) -> impl Strategy<Value = PauliSum> {
    proptest::collection::vec((-2.0f64..2.0, label(n)), 1..8).prop_map(move |terms| {
        PauliSum::new(n, terms.into_iter().map(|(c, l)| (c, l.parse::<PauliString>().unwrap()))).unwrap()
    })
}

fn tfim_system() -> impl Strategy<Value = System> {
    (2usize..=5, 0.3f64..1.5, 0.3f64..1.5).prop_map(|(n, j, g)| {
        let h = PauliSum::model(ModelKind::TfimChain, n, &[j, g]).unwrap();
        System::new("tfim", h, SystemOptions::default()).unwrap()
    })
}

fn model_system() -> impl Strategy<Value = System> {
    prop_oneof![
        tfim_system(),
        (2usize..=5, 0.3f64..1.5).prop_map(|(n, j)| {
            let h = PauliSum::model(ModelKind::HeisenbergChain, n, &[j]).unwrap();
            System::new("heisenberg", h, SystemOptions { grouping: false, ..SystemOptions::default() }).unwrap()
        }),
    ]
}

fn exact_matrices(sys: &System, cfg: KrylovConfig) -> qkrylov::krylov::KrylovMatrices {
    let mut asm = sys.assembler(cfg, ElementSource::Exact).unwrap();
    asm.grow_to(cfg.k).unwrap();
    asm.matrices()
}

fn eigenvalues(s: &CMat, t: &CMat, sigma: f64) -> Vec<Complex64> {
    let spec = RegularizationSpec { method: RegularizationMethod::Fixed(sigma), noise_level: 0.0, n_f: 1.0 };
    match gevp::solve_gevp(s, t, &spec, false).unwrap() {
        GevpOutcome::Solved(sol) => sol.eigenvalues,
        GevpOutcome::Eliminated { .. } => Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pauli_is_an_involution(l in (1usize..=5).prop_flat_map(label), seed in any::<u64>()) {
        let p: PauliString = l.parse().unwrap();
        let mut rng = Lcg(seed);
        let v = DVector::from_fn(p.dim(), |_, _| c(rng.normal(), rng.normal()));
        let back = p.apply(&p.apply(&v).unwrap()).unwrap();
        prop_assert!((back - &v).norm() < 1e-14 * v.norm().max(1.0));
        prop_assert_eq!(p.to_string(), l);
    }

    #[test]
    fn dense_form_is_hermitian_and_matches_apply(h in (1usize..=4).prop_flat_map(pauli_sum)) {
        let m = h.to_dense(DEFAULT_DENSE_CAP).unwrap();
        prop_assert!(max_abs(&(&m - m.adjoint())) < 1e-13);
        for j in 0..h.dim() {
            let e = qkrylov::pauli::basis_state(h.dim(), j);
            prop_assert!(max_abs(&(m.column(j) - h.apply(&e).unwrap())) < 1e-13);
        }
    }

    #[test]
    fn one_norm_ignores_term_order(h in (1usize..=4).prop_flat_map(pauli_sum), rot in 0usize..8) {
        let mut terms = h.terms().to_vec();
        let r = rot % terms.len();
        terms.rotate_left(r);
        let shuffled = PauliSum::new(h.n_qubits(), terms).unwrap();
        prop_assert!((shuffled.one_norm() - h.one_norm()).abs() < 1e-12);
    }

    #[test]
    fn evolution_properties(h in (1usize..=4).prop_flat_map(pauli_sum), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0, seed in any::<u64>()) {
        let d = SpectralDecomposition::diagonalize(&h, DEFAULT_DENSE_CAP).unwrap();
        let mut rng = Lcg(seed);
        let v = DVector::from_fn(h.dim(), |_, _| c(rng.normal(), rng.normal()));
        let v = &v / c(v.norm(), 0.0);
        let joint = d.evolve(&v, t1 + t2).unwrap();
        let split = d.evolve(&d.evolve(&v, t1).unwrap(), t2).unwrap();
        prop_assert!((joint - split).norm() < 1e-11);
        let e = d.eigenvectors().column(0).into_owned();
        prop_assert!((e.dotc(&d.evolve(&e, t1).unwrap()).norm() - 1.0).abs() < 1e-12);
        let m = h.to_dense(DEFAULT_DENSE_CAP).unwrap();
        prop_assert!(max_abs(&(d.reconstruct() - m)) < 1e-10 * d.spectral_norm().max(1.0));
    }

    #[test]
    fn reference_ranking(n in prop_oneof![Just(2usize), Just(4)], grouping in any::<bool>(), seed in any::<u64>()) {
        let mut rng = Lcg(seed);
        let dim = 1 << n;
        let gs = DVector::from_fn(dim, |_, _| c(rng.normal(), rng.normal()));
        let gs = &gs / c(gs.norm(), 0.0);
        let refs = select_references(&gs, n, 4, grouping, Default::default()).unwrap();
        prop_assert!(refs.windows(2).all(|w| w[0].overlap_sq >= w[1].overlap_sq));
        for (i, a) in refs.iter().enumerate() {
            prop_assert!((a.state.norm() - 1.0).abs() < 1e-12);
            if !grouping {
                prop_assert_eq!(a.state.iter().filter(|z| z.norm() > 0.0).count(), 1);
            }
            for b in &refs[i + 1..] {
                prop_assert!(a.state.dotc(&b.state).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn noiseless_krylov_structure(sys in model_system(), variant in prop_oneof![Just(Variant::QksU), Just(Variant::QksH)], k in 0usize..8) {
        let cfg = sys.default_config(variant, k, 1);
        let m = exact_matrices(&sys, cfg);
        prop_assert!(max_abs(&(&m.s - m.s.adjoint())) < 1e-12);
        for i in 0..=k {
            prop_assert!((m.s[(i, i)] - c(1.0, 0.0)).norm() < 1e-12);
        }
        let min_eig = jacobi_hermitian_eigenvalues(&m.s)[0];
        prop_assert!(min_eig > -1e-10, "{}", min_eig);
        if variant == Variant::QksH {
            prop_assert!(max_abs(&(&m.t - m.t.adjoint())) < 1e-12);
        }
        // nesting: growing K leaves the leading block unchanged
        let bigger = exact_matrices(&sys, KrylovConfig { k: k + 1, ..cfg });
        prop_assert!(max_abs(&(bigger.s.view((0, 0), (k + 1, k + 1)) - &m.s)) < 1e-15);
        prop_assert!(max_abs(&(bigger.t.view((0, 0), (k + 1, k + 1)) - &m.t)) < 1e-15);
    }

    #[test]
    fn single_reference_overlap_is_toeplitz(sys in model_system(), t in 0.2f64..3.0) {
        let cfg = KrylovConfig { t, tau: t, ..KrylovConfig::qks_u(8, 1) };
        let m = exact_matrices(&sys, cfg);
        for i in 0..9 {
            for j in 0..9 {
                let expected = if j >= i { m.s[(0, j - i)] } else { m.s[(0, i - j)].conj() };
                prop_assert!((m.s[(i, j)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_power_basis_matches_dense_powers(sys in tfim_system(), k in 0usize..4) {
        let cfg = KrylovConfig { generator: Generator::HamiltonianPower, ..sys.default_config(Variant::QksH, k, 1) };
        let m = exact_matrices(&sys, cfg);
        let h = sys.hamiltonian.to_dense(DEFAULT_DENSE_CAP).unwrap();
        let mut basis = vec![sys.references[0].state.clone()];
        for _ in 0..k {
            let next = &h * basis.last().unwrap();
            basis.push(next);
        }
        for i in 0..=k {
            for j in 0..=k {
                let scale = basis[i].norm() * basis[j].norm();
                prop_assert!((m.s[(i, j)] - basis[i].dotc(&basis[j])).norm() < 1e-11 * scale.max(1.0));
                prop_assert!((m.t[(i, j)] - basis[i].dotc(&(&h * &basis[j]))).norm() < 1e-11 * scale.max(1.0) * sys.h_norm);
            }
        }
    }

    #[test]
    fn noisy_matrices_are_hermitian_and_reproducible(sys in tfim_system(), seed in any::<u64>(), variant in prop_oneof![Just(Variant::QksU), Just(Variant::QksH)]) {
        let cfg = sys.default_config(variant, 4, 1);
        let build = || {
            let mut asm = sys.assembler(cfg, ElementSource::Sampled(NoiseSpec::with_shots(10_000, seed))).unwrap();
            asm.grow_to(4).unwrap();
            asm.matrices()
        };
        let (a, b) = (build(), build());
        prop_assert_eq!(&a.s, &b.s);
        prop_assert_eq!(&a.t, &b.t);
        prop_assert!(max_abs(&(&a.s - a.s.adjoint())) == 0.0);
        if variant == Variant::QksH {
            prop_assert!(max_abs(&(&a.t - a.t.adjoint())) == 0.0);
        }
    }

    #[test]
    fn shot_allocation_drift(coeffs in proptest::collection::vec(-3.0f64..3.0, 1..40), m in 1u64..10_000_000) {
        prop_assume!(coeffs.iter().any(|c| c.abs() > 1e-9));
        let alloc = allocate_shots(&coeffs, m).unwrap();
        let total: u64 = alloc.iter().sum();
        let slack = coeffs.len() as f64 / 2.0;
        prop_assert!((total as f64 - m as f64).abs() <= slack);
    }

    #[test]
    fn zero_threshold_keeps_the_eigenvalue_set(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = Lcg(seed);
        let s = random_psd(&mut rng, n, 1e3);
        let t = rng.complex_matrix(n);
        let got = eigenvalues(&s, &t, 0.0);
        prop_assert!(matching_distance(&got, &gevp_oracle(&s, &t)) < 1e-8);
    }

    #[test]
    fn unitary_congruence_invariance(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = Lcg(seed);
        let s = random_psd(&mut rng, n, 1e3);
        let t = rng.complex_matrix(n);
        let q = rng.unitary(n);
        let a = eigenvalues(&s, &t, 0.0);
        let b = eigenvalues(&(q.adjoint() * &s * &q), &(q.adjoint() * &t * &q), 0.0);
        prop_assert!(matching_distance(&a, &b) < 1e-8);
    }

    #[test]
    fn well_conditioned_noiseless_eigenvalues(sys in model_system(), k in 0usize..3) {
        let h = sys.default_config(Variant::QksH, k, 1);
        let m = exact_matrices(&sys, h);
        prop_assume!(gevp::condition_number(&m.s).unwrap() < 1e6);
        let lams = eigenvalues(&m.s, &m.t, 0.0);
        for l in &lams {
            prop_assert!(l.im.abs() < 1e-9);
            prop_assert!(l.re >= sys.exact_gs - 1e-9);
        }
        let u = sys.default_config(Variant::QksU, k, 1);
        let m = exact_matrices(&sys, u);
        prop_assume!(gevp::condition_number(&m.s).unwrap() < 1e6);
        // Ritz values of a compressed unitary stay in the closed unit disk
        for l in eigenvalues(&m.s, &m.t, 0.0) {
            prop_assert!(l.norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn unitary_energy_round_trip(e in -10.0f64..10.0, tau in 0.1f64..3.0, h_norm in 0.5f64..20.0) {
        prop_assume!((e * tau / h_norm).abs() < std::f64::consts::PI - 1e-9);
        let lam = Complex64::from_polar(1.0, -e * tau / h_norm);
        let v = unitary_filter(&[lam], tau, h_norm).unwrap()[0];
        prop_assert!((v.energy - e).abs() < 1e-12 * e.abs().max(1.0));
        prop_assert!(v.accepted);
    }

    #[test]
    fn filters_only_classify(lams in proptest::collection::vec((-2.0f64..2.0, -0.1f64..0.1), 1..10)) {
        let lams: Vec<Complex64> = lams.into_iter().map(|(a, b)| c(a, b)).collect();
        let verdicts = imaginary_filter(&lams);
        prop_assert!(verdicts.iter().zip(&lams).all(|(v, l)| v.eigenvalue == *l));
        let unfiltered_min = lams.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
        match ground_energy(&verdicts, false).unwrap() {
            GroundEnergy::Selected { energy, .. } => prop_assert_eq!(energy, unfiltered_min),
            GroundEnergy::AllEliminated => prop_assert!(false),
        }
        let uv = unitary_filter(&lams, 1.0, 2.0).unwrap();
        prop_assert!(uv.iter().zip(&lams).all(|(v, l)| v.eigenvalue == *l));
    }

    #[test]
    fn geometric_mean_scales(xs in proptest::collection::vec(1e-6f64..1e3, 2..20), k in 1e-3f64..1e3) {
        let a = geometric_stats(&xs).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
        let b = geometric_stats(&scaled).unwrap();
        prop_assert!((b.geo_mean / (k * a.geo_mean) - 1.0).abs() < 1e-12);
        prop_assert!((b.geo_std / a.geo_std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qks_u_times_limited_to_pi(t in -1.0f64..8.0, tau in -1.0f64..8.0) {
        let cfg = KrylovConfig { t, tau, ..KrylovConfig::qks_u(3, 1) };
        let inside = |x: f64| x > 0.0 && x <= std::f64::consts::PI;
        prop_assert_eq!(cfg.validate().is_ok(), inside(t) && inside(tau));
    }
}
