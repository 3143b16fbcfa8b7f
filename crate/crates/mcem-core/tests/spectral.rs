use std::collections::BTreeSet;
use std::sync::Arc;

use mcem_core::reachability::{blocked_core_config, find_legal_path, DEFAULT_CAP};
use mcem_core::spectral::*;
use mcem_core::{BoundaryCondition, Configuration, Domain, ModelSpec, Region, VacancyType, NEUTRAL};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vt(bits: &[u8]) -> VacancyType {
    VacancyType::from_bits(bits).unwrap()
}

fn domain(spec: ModelSpec, sides: &[usize], boundary: BoundaryCondition) -> Arc<Domain> {
    let region = Region::new_box(&vec![0; sides.len()], sides).unwrap();
    Arc::new(Domain::new(spec, region, boundary).unwrap())
}

fn single_site(types: &[VacancyType], q: &[f64]) -> GeneratorMatrix {
    let spec = ModelSpec::new(types, q).unwrap();
    let d = types[0].dim();
    let dom = domain(spec, &vec![1; d], BoundaryCondition::AllFacilitating(BTreeSet::from([0])));
    build_generator(&dom, GENERATOR_CAP).unwrap()
}

fn random_f(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
}

#[test]
fn single_site_matrix() {
    let g = single_site(&[vt(&[0]), vt(&[1])], &[0.3, 0.1]);
    assert_eq!(g.dim(), 3);
    let l = g.to_dense();
    assert!((l[(0, 1)] - 0.3).abs() < 1e-15);
    assert!((l[(0, 2)] - 0.1).abs() < 1e-15);
    assert!((l[(1, 0)] - 0.6).abs() < 1e-15);
    assert!((l[(2, 0)] - 0.6).abs() < 1e-15);
    assert_eq!(l[(1, 2)], 0.0);
    assert!(g.row_sum_residual() < 1e-12);
}

#[test]
fn blocked_row_is_zero() {
    let types = VacancyType::hypercube(2);
    let spec = ModelSpec::new(&types, &[0.2; 4]).unwrap();
    let core = blocked_core_config(&spec).unwrap();
    let g = build_generator(core.domain(), GENERATOR_CAP).unwrap();
    let i = g.encode(core.states()).unwrap();
    assert_eq!(g.row(i).count(), 0);
    assert_eq!(g.diag(i), 0.0);
    let r = spectral_gap_exact(&g).unwrap();
    assert!(r.gap <= 1e-9 && !r.ergodic);
    let mut ind = vec![0.0; g.dim()];
    ind[i] = 1.0;
    assert_eq!(dirichlet_form(&g, &ind).unwrap(), 0.0);
    assert!(variance(&g, &ind).unwrap() > 0.0);
}

#[test]
fn codec_round_trip() {
    let spec = ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 0])], &[0.2, 0.3]).unwrap();
    let g = build_generator(&domain(spec, &[2, 2], BoundaryCondition::Closed), GENERATOR_CAP).unwrap();
    for i in 0..g.dim() {
        assert_eq!(g.encode(&g.decode(i)), Some(i));
    }
}

#[test]
fn single_site_gaps() {
    for q in [0.1, 0.4, 0.7] {
        let g = single_site(&[vt(&[0])], &[q]);
        assert!((spectral_gap_exact(&g).unwrap().gap - 1.0).abs() < 1e-10);
    }
    let g = single_site(&[vt(&[0]), vt(&[1])], &[0.12, 0.08]);
    assert!((spectral_gap_exact(&g).unwrap().gap - 0.8).abs() < 1e-10);
}

#[test]
fn lanczos_matches_dense() {
    let spec = ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 0]), vt(&[0, 1])], &[0.2, 0.1, 0.15]).unwrap();
    let dom = domain(spec, &[2, 2], BoundaryCondition::AllFacilitating(BTreeSet::from([0, 1, 2, 3])));
    let g = build_generator(&dom, GENERATOR_CAP).unwrap();
    let a = spectral_gap_with(&g, GapMethod::Dense).unwrap();
    let b = spectral_gap_with(&g, GapMethod::Lanczos).unwrap();
    assert!((a.gap - b.gap).abs() < 1e-9, "{} vs {}", a.gap, b.gap);
    assert!(a.ergodic && b.ergodic);

    let types = VacancyType::hypercube(2);
    let core = blocked_core_config(&ModelSpec::new(&types, &[0.2; 4]).unwrap()).unwrap();
    let g = build_generator(core.domain(), GENERATOR_CAP).unwrap();
    assert!(!spectral_gap_with(&g, GapMethod::Lanczos).unwrap().ergodic);
}

#[test]
fn symmetrization_preserves_spectrum() {
    let spec = ModelSpec::new(&[vt(&[0]), vt(&[1])], &[0.25, 0.15]).unwrap();
    let g =
        build_generator(&domain(spec, &[3], BoundaryCondition::AllFacilitating(BTreeSet::from([0]))), GENERATOR_CAP)
            .unwrap();
    let sym = spectrum_dense(&g);
    let l = -g.to_dense();
    let ev = l.complex_eigenvalues();
    let mut re: Vec<f64> = ev.iter().map(|c| c.re).collect();
    re.sort_by(f64::total_cmp);
    for (a, b) in sym.iter().zip(&re) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(ev.iter().all(|c| c.im.abs() < 1e-9));
}

#[test]
fn dirichlet_matches_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 1]), vt(&[0, 1])], &[0.2, 0.1, 0.15]).unwrap();
    let g =
        build_generator(&domain(spec, &[2, 2], BoundaryCondition::AllFacilitating(BTreeSet::from([0]))), GENERATOR_CAP)
            .unwrap();
    for _ in 0..20 {
        let f = random_f(g.dim(), &mut rng);
        let a = dirichlet_form(&g, &f).unwrap();
        let b = g.quadratic_form(&f).unwrap();
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "{a} vs {b}");
    }
    assert_eq!(dirichlet_form(&g, &vec![2.5; g.dim()]).unwrap(), 0.0);
}

#[test]
fn dirichlet_vanishes_on_class_indicators() {
    let types = VacancyType::hypercube(2);
    let spec = ModelSpec::new(&types, &[0.15; 4]).unwrap();
    let g = build_generator(&domain(spec, &[2, 2], BoundaryCondition::Closed), GENERATOR_CAP).unwrap();
    assert!(communicating_classes(&g) > 1);
    let start = Configuration::new(g.domain().clone(), g.decode(0)).unwrap();
    let class = mcem_core::reachability::reachable_set(&start, DEFAULT_CAP);
    let mut f = vec![0.0; g.dim()];
    for s in &class.states {
        f[g.encode(s).unwrap()] = 1.0;
    }
    assert!(dirichlet_form(&g, &f).unwrap() < 1e-15);
    assert!(variance(&g, &f).unwrap() > 0.0);
}

#[test]
fn variational_bounds_exact_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 0])], &[0.2, 0.3]).unwrap();
    let g =
        build_generator(&domain(spec, &[2, 2], BoundaryCondition::AllFacilitating(BTreeSet::from([0]))), GENERATOR_CAP)
            .unwrap();
    let exact = spectral_gap_exact(&g).unwrap().gap;
    let (lam, v) = gap_eigenfunction(&g).unwrap();
    assert!((lam - exact).abs() < 1e-9);
    let mut trials: Vec<Vec<f64>> = (0..30).map(|_| random_f(g.dim(), &mut rng)).collect();
    assert!(spectral_gap_variational(&g, &trials).unwrap() >= exact - 1e-10);
    trials.push(v);
    assert!((spectral_gap_variational(&g, &trials).unwrap() - exact).abs() < 1e-9);
    let mut ind = vec![0.0; g.dim()];
    ind[5] = 1.0;
    let r = spectral_gap_variational(&g, &[ind]).unwrap();
    assert!(r.is_finite() && r > 0.0);
    assert_eq!(spectral_gap_variational(&g, &[vec![1.0; g.dim()]]), Err(SpectralError::ConstantTrial(0)));
}

#[test]
fn gap_zero_iff_reducible() {
    let cases: Vec<(ModelSpec, Vec<usize>, BoundaryCondition)> = vec![
        (ModelSpec::new(&VacancyType::hypercube(2), &[0.2; 4]).unwrap(), vec![2, 2], BoundaryCondition::Closed),
        (ModelSpec::new(&[vt(&[0])], &[0.3]).unwrap(), vec![3], BoundaryCondition::Closed),
        (
            ModelSpec::new(&[vt(&[0])], &[0.3]).unwrap(),
            vec![3],
            BoundaryCondition::AllFacilitating(BTreeSet::from([0])),
        ),
        (
            ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 1])], &[0.2, 0.2]).unwrap(),
            vec![2, 2],
            BoundaryCondition::AllFacilitating(BTreeSet::from([0, 3])),
        ),
        (
            ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 1])], &[0.2, 0.2]).unwrap(),
            vec![2, 2],
            BoundaryCondition::AllFacilitating(BTreeSet::from([0])),
        ),
    ];
    for (spec, sides, b) in cases {
        let g = build_generator(&domain(spec, &sides, b), GENERATOR_CAP).unwrap();
        let r = spectral_gap_exact(&g).unwrap();
        assert_eq!(r.gap == 0.0, communicating_classes(&g) > 1);
        assert_eq!(r.ergodic, communicating_classes(&g) == 1);
    }
}

#[test]
fn monotonicity_examples() {
    let spec = ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 1]), vt(&[0, 1])], &[0.2, 0.1, 0.15]).unwrap();
    let dom = domain(spec, &[2, 2], BoundaryCondition::AllFacilitating(BTreeSet::from([0, 1, 2])));
    let r = gap_monotonicity_report(&dom, &[vt(&[1, 1])]).unwrap();
    assert!(r.pass, "{r:?}");
    let all = dom.spec().types().to_vec();
    let r = gap_monotonicity_report(&dom, &all).unwrap();
    assert!((r.gap_full - r.gap_sub).abs() < 1e-12);
}

#[test]
fn projection_is_idempotent() {
    let full = ModelSpec::new(&[vt(&[0, 0]), vt(&[1, 1]), vt(&[0, 1])], &[0.2, 0.1, 0.15]).unwrap();
    let sub = full.restrict(&[vt(&[0, 0]), vt(&[0, 1])]).unwrap();
    let states = vec![0, 1, 2, 3, 2, 1];
    let once = project_states(&full, &sub, &states);
    let back: Vec<u8> =
        once.iter().map(|&t| if t == NEUTRAL { NEUTRAL } else { full.tag_of(sub.vacancy(t)).unwrap() }).collect();
    let twice = project_states(&full, &sub, &back);
    assert_eq!(once, twice);
    assert_eq!(once[3], NEUTRAL);
    assert_ne!(once[2], NEUTRAL);
}

#[test]
fn east_asymptotic_reference() {
    assert!((east_gap_asymptotic(0.5, 1) - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((east_gap_asymptotic(0.25, 2) - 0.5).abs() < 1e-15);
    let mut last = 1.0;
    for q in [0.5, 0.25, 0.1, 0.01, 0.001] {
        let g = east_gap_asymptotic(q, 2);
        assert!(g < last);
        last = g;
    }
}

#[test]
fn var_transition_examples() {
    let spec = ModelSpec::new(&[vt(&[0])], &[0.3]).unwrap();
    let r = var_transition_bound_check(&spec, &[1.0, 0.0]).unwrap();
    assert!((r.lhs - 0.21).abs() < 1e-12);
    assert!((r.rhs - 0.6).abs() < 1e-12);
    assert!(r.pass);
    let r = var_transition_bound_check(&spec, &[4.0, 4.0]).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    assert!(r.pass);
}

#[test]
fn path_method_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = ModelSpec::new(&[vt(&[0])], &[0.3]).unwrap();
    let dom = domain(spec, &[2], BoundaryCondition::AllFacilitating(BTreeSet::from([0])));
    let a = Configuration::neutral(dom.clone());
    let b = Configuration::new(dom, vec![1, 1]).unwrap();
    let p = find_legal_path(&a, &b, DEFAULT_CAP).unwrap();
    for _ in 0..20 {
        let f = random_f(path_function_len(&p), &mut rng);
        assert!(path_method_bound(&p, &f).unwrap().pass);
    }
    let p = find_legal_path(&a, &a, DEFAULT_CAP).unwrap();
    let r = path_method_bound(&p, &[0.7]).unwrap();
    assert_eq!(r.lhs, 0.0);
}

#[test]
fn block_relax_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let nu = [0.7, 0.2, 0.1];
    for _ in 0..50 {
        let f = random_f(9, &mut rng);
        assert!(block_relax_check(&nu, &nu, &[true; 3], &f).unwrap().pass);
        let r = block_relax_check(&nu, &nu, &[false, true, false], &f).unwrap();
        assert!(r.pass);
    }
    assert_eq!(block_relax_check(&nu, &nu, &[false; 3], &[0.0; 9]), Err(SpectralError::ZeroEventMass));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn var_transition_holds(q in prop::collection::vec(0.01f64..1.0, 1..5), f in prop::collection::vec(-5.0f64..5.0, 5)) {
        let k = q.len();
        let total: f64 = q.iter().sum();
        let q: Vec<f64> = q.iter().map(|x| x / total * 0.9).collect();
        let types: Vec<VacancyType> = VacancyType::hypercube(2).into_iter().take(k).collect();
        let spec = ModelSpec::new(&types, &q).unwrap();
        prop_assert!(var_transition_bound_check(&spec, &f[..k + 1]).unwrap().pass);
    }

    #[test]
    fn dirichlet_nonnegative(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = ModelSpec::new(&[vt(&[0]), vt(&[1])], &[0.2, 0.3]).unwrap();
        let g = build_generator(&domain(spec, &[3], BoundaryCondition::Closed), GENERATOR_CAP).unwrap();
        let f = random_f(g.dim(), &mut rng);
        prop_assert!(dirichlet_form(&g, &f).unwrap() >= 0.0);
    }
}
