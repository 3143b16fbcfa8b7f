use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use mcem_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vt(bits: &[u8]) -> VacancyType {
    VacancyType::from_bits(bits).unwrap()
}

fn spec(types: &[&[u8]], q: &[f64]) -> ModelSpec {
    let t: Vec<VacancyType> = types.iter().map(|b| vt(b)).collect();
    ModelSpec::new(&t, q).unwrap()
}

fn domain(spec: &ModelSpec, origin: &[i64], sides: &[usize], boundary: BoundaryCondition) -> Arc<Domain> {
    Arc::new(Domain::new(spec.clone(), Region::new_box(origin, sides).unwrap(), boundary).unwrap())
}

#[test]
fn directions_examples() {
    let dirs = |b: &[u8]| -> BTreeSet<Point> {
        propagation_directions(vt(b), b.len()).unwrap().into_iter().map(|d| d.vector()).collect()
    };
    assert_eq!(dirs(&[0, 0]), [Point::new(&[1, 0]), Point::new(&[0, 1])].into());
    assert_eq!(dirs(&[1, 1]), [Point::new(&[-1, 0]), Point::new(&[0, -1])].into());
    assert_eq!(dirs(&[1, 0, 0]), [Point::new(&[-1, 0, 0]), Point::new(&[0, 1, 0]), Point::new(&[0, 0, 1])].into());
    assert!(propagation_directions(vt(&[1, 0]), 3).is_err());
}

#[test]
fn directions_brute_force() {
    for d in 1..=4 {
        for h in VacancyType::hypercube(d) {
            let mut expect = BTreeSet::new();
            for axis in 0..d {
                for s in [-1i64, 1] {
                    let v = h.bits()[axis] as i64 + s;
                    if v == 0 || v == 1 {
                        expect.insert(Point::unit(axis).scale(s));
                    }
                }
            }
            let got: BTreeSet<Point> = propagation_directions(h, d).unwrap().into_iter().map(|x| x.vector()).collect();
            assert_eq!(got, expect);
            assert_eq!(got.len(), d);
        }
    }
}

#[test]
fn constraint_examples() {
    let s = spec(&[&[0, 0], &[1, 1]], &[0.1, 0.2]);
    let dom = domain(&s, &[0, 0], &[3, 3], BoundaryCondition::Closed);
    let x = dom.region().index_of(&Point::new(&[1, 1])).unwrap();
    let mut cfg = Configuration::neutral(dom.clone());
    assert!(!constraint(&cfg, x, vt(&[0, 0])).unwrap());
    cfg.set_at(&Point::new(&[0, 1]), SiteState::Vacancy(vt(&[1, 1]))).unwrap();
    assert!(!constraint(&cfg, x, vt(&[0, 0])).unwrap());
    cfg.set_at(&Point::new(&[0, 1]), SiteState::Vacancy(vt(&[0, 0]))).unwrap();
    assert!(constraint(&cfg, x, vt(&[0, 0])).unwrap());
    assert!(!constraint(&cfg, x, vt(&[1, 1])).unwrap());
    assert!(constraint(&cfg, 99, vt(&[0, 0])).is_err());
    assert!(constraint(&cfg, x, vt(&[0, 1])).is_err());
}

#[test]
fn boundary_conditions_resolve_off_region() {
    let s = spec(&[&[0, 0], &[1, 1]], &[0.1, 0.2]);
    let region = Region::new_box(&[0, 0], &[2, 2]).unwrap();
    let frame = region.outer_frame(s.types());
    assert_eq!(frame.len(), 8);
    let mut map: BTreeMap<Point, SiteState> = frame.iter().map(|p| (*p, SiteState::Neutral)).collect();
    map.insert(Point::new(&[-1, 0]), SiteState::Vacancy(vt(&[0, 0])));
    let dom = Arc::new(Domain::new(s.clone(), region.clone(), BoundaryCondition::Frozen(map.clone())).unwrap());
    let cfg = Configuration::neutral(dom);
    let origin = cfg.region().index_of(&Point::zero()).unwrap();
    assert!(constraint(&cfg, origin, vt(&[0, 0])).unwrap());
    assert!(!constraint(&cfg, origin, vt(&[1, 1])).unwrap());
    map.remove(&Point::new(&[-1, 0]));
    assert!(Domain::new(s.clone(), region.clone(), BoundaryCondition::Frozen(map)).is_err());
    let fac = Configuration::neutral(domain(&s, &[0, 0], &[2, 2], BoundaryCondition::AllFacilitating([3].into())));
    assert!(constraint(&fac, 3, vt(&[1, 1])).unwrap());
    assert!(!constraint(&fac, 0, vt(&[0, 0])).unwrap());
}

#[test]
fn validation_errors() {
    let t = [vt(&[0, 0]), vt(&[1, 1]), vt(&[0, 1])];
    let ok = ModelSpec::new(&t, &[0.1, 0.1, 0.1]).unwrap();
    assert!((ok.p() - 0.7).abs() < 1e-15);
    assert!(matches!(ModelSpec::new(&t, &[0.5, 0.5, 0.1]), Err(LatticeError::DensitySumNotBelowOne { .. })));
    assert!(matches!(ModelSpec::new(&t, &[0.5, 0.0, 0.1]), Err(LatticeError::NonPositiveDensity { .. })));
    assert!(matches!(validate_params(2, &[[0u8, 2]], &[0.1]), Err(LatticeError::TypeOutsideHypercube { .. })));
    assert!(matches!(ModelSpec::new(&[t[0], t[0]], &[0.1, 0.1]), Err(LatticeError::DuplicateType { .. })));
    assert!((ok.theta()[0] - 0.1f64.log2().abs()).abs() < 1e-12);
}

#[test]
fn weights_examples() {
    let s = spec(&[&[0, 0], &[1, 1], &[0, 1]], &[0.1, 0.1, 0.1]);
    let dom = domain(&s, &[0, 0], &[2, 1], BoundaryCondition::Closed);
    let mut cfg = Configuration::neutral(dom.clone());
    assert!((measure_weight(&cfg) - 0.49).abs() < 1e-15);
    cfg.set(0, SiteState::Vacancy(vt(&[0, 0]))).unwrap();
    assert!((measure_weight(&cfg) - 0.07).abs() < 1e-15);
    assert!((log_measure_weight(&cfg) - 0.07f64.ln()).abs() < 1e-12);
    assert!(cfg.set(0, SiteState::Vacancy(vt(&[1, 0]))).is_err());
}

#[test]
fn weights_sum_to_one() {
    let s = spec(&[&[0, 0], &[1, 1], &[0, 1], &[1, 0]], &[0.1, 0.15, 0.2, 0.05]);
    for sides in [[1usize, 1], [2, 1], [3, 1]] {
        let dom = domain(&s, &[0, 0], &sides, BoundaryCondition::Closed);
        let n = dom.len();
        let mut total = 0.0;
        for code in 0..5usize.pow(n as u32) {
            let states: Vec<u8> = (0..n).map(|i| ((code / 5usize.pow(i as u32)) % 5) as u8).collect();
            total += measure_weight(&Configuration::new(dom.clone(), states).unwrap());
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sampling_is_seeded_and_unbiased() {
    let s = spec(&[&[0, 0], &[1, 1]], &[0.85, 0.05]);
    let dom = domain(&s, &[0, 0], &[400, 250], BoundaryCondition::Closed);
    let c1 = sample_config(&dom, &mut stream_rng(7, 0));
    let c2 = sample_config(&dom, &mut stream_rng(7, 0));
    assert_eq!(c1, c2);
    assert_ne!(c1, sample_config(&dom, &mut stream_rng(7, 1)));
    let n = c1.states().len() as f64;
    let freq = c1.states().iter().filter(|&&t| t == 1).count() as f64 / n;
    let sigma = (0.85 * 0.15 / n).sqrt();
    assert!((freq - 0.85).abs() < 3.0 * sigma, "{freq}");
}

#[test]
fn region_indexing() {
    let r = Region::new_box(&[-2, 3, 1], &[3, 2, 4]).unwrap();
    for (i, p) in r.points().enumerate() {
        assert_eq!(r.index_of(&p), Some(i));
        assert_eq!(r.point(i), p);
    }
    assert!(Region::new_box(&[0, 0], &[0, 3]).is_err());
    let pts = [Point::new(&[5, 1]), Point::new(&[-1, 0]), Point::new(&[2, 2])];
    let s = Region::from_sites(2, &pts).unwrap();
    assert_eq!(s.len(), 3);
    for p in pts {
        assert_eq!(s.point(s.index_of(&p).unwrap()), p);
    }
    assert!(!s.contains(&Point::zero()));
}

fn point2() -> impl Strategy<Value = Point> {
    (-6i64..6, -6i64..6).prop_map(|(x, y)| Point::new(&[x, y]))
}

proptest! {
    #[test]
    fn order_is_partial(h in 0u8..4, x in point2(), y in point2(), z in point2()) {
        let h = VacancyType::from_mask(2, h);
        prop_assert!(partial_order_leq(h, &x, &x));
        if partial_order_leq(h, &x, &y) && partial_order_leq(h, &y, &z) {
            prop_assert!(partial_order_leq(h, &x, &z));
        }
        if partial_order_leq(h, &x, &y) && partial_order_leq(h, &y, &x) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn constraint_ignores_own_site(seed in any::<u64>(), x in 0usize..12, t in 0usize..3, own in 0u8..4) {
        let s = spec(&[&[0, 0], &[1, 1], &[0, 1]], &[0.2, 0.2, 0.2]);
        let dom = domain(&s, &[0, 0], &[4, 3], BoundaryCondition::Closed);
        let mut cfg = sample_config(&dom, &mut ChaCha8Rng::seed_from_u64(seed));
        let h = s.types()[t];
        let before = constraint(&cfg, x, h).unwrap();
        cfg.set_tag(x, own);
        prop_assert_eq!(constraint(&cfg, x, h).unwrap(), before);
    }

    #[test]
    fn one_direction_per_axis(d in 1usize..6, mask in any::<u8>()) {
        let h = VacancyType::from_mask(d, mask & ((1 << d) - 1) as u8);
        let dirs = propagation_directions(h, d).unwrap();
        let axes: BTreeSet<u8> = dirs.iter().map(|x| x.axis).collect();
        prop_assert_eq!(axes.len(), d);
        for x in dirs {
            prop_assert_eq!(x.positive, h.bit(x.axis as usize) == 0);
        }
    }
}
