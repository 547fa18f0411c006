//! Operator-level invariants across fock, ergodic and kms.

use std::sync::Arc;

use kronlab_core::apalgebra::{FourierIndex, TrigPolynomial};
use kronlab_core::ergodic::tau_e;
use kronlab_core::fock::{FockSpace, Statistics};
use kronlab_core::frequencies::{FrequencySystem, SystemKind};
use kronlab_core::kms::{self, ThermalContext};
use kronlab_core::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn three_halves(bound: f64) -> Arc<FrequencySystem> {
    Arc::new(FrequencySystem::covering(SystemKind::power_law(1.0, 1.5), bound).unwrap())
}

fn poly(sys: &Arc<FrequencySystem>, terms: &[((i64, i64), (f64, f64))]) -> TrigPolynomial {
    TrigPolynomial::from_terms(
        sys.clone(),
        terms
            .iter()
            .map(|&((a, b), (re, im))| (FourierIndex::from_pairs([(0, a), (1, b)]), c(re, im))),
    )
}

fn small_terms() -> impl Strategy<Value = Vec<((i64, i64), (f64, f64))>> {
    prop::collection::vec(((-2i64..=2, -1i64..=1), (-1.0f64..1.0, -1.0f64..1.0)), 1..5)
}

#[test]
fn witten_index_is_beta_independent_up_to_tails() {
    let omegas = vec![1.0, 2f64.powf(1.5)];
    for m in [6u32, 12, 24] {
        let space = FockSpace::occupancy(Statistics::Graded, omegas.clone(), m).unwrap();
        let betas = [0.5, 1.0, 2.0, 4.0];
        let indices: Vec<f64> = betas
            .iter()
            .map(|&b| ThermalContext::new(space.clone(), b).unwrap().witten_index())
            .collect();
        let tails: f64 = omegas.iter().map(|w| (-betas[0] * w * (m as f64 + 1.0)).exp()).sum();
        for (i, a) in indices.iter().enumerate() {
            for b in &indices[i + 1..] {
                assert!((a - b).abs() <= tails, "M={m}: {a} vs {b} (tails {tails:e})");
            }
            assert!((a - 1.0).abs() <= tails);
        }
    }
}

#[test]
fn fermion_witten_index_vanishes() {
    // A fermion without a bosonic partner: Str e^{−βH} = 1 − e^{−βω}.
    let space = FockSpace::occupancy(Statistics::Fermion, vec![1.3], 1).unwrap();
    let ctx = ThermalContext::new(space, 0.7).unwrap();
    assert!((ctx.witten_index() - (1.0 - (-0.7f64 * 1.3).exp())).abs() < 1e-14);
}

#[test]
fn hamiltonians_are_positive() {
    let sys = three_halves(12.0);
    for space in [
        FockSpace::energy_cut(&sys, 10.0).unwrap(),
        FockSpace::occupancy(Statistics::Graded, vec![1.0, 2.8], 3).unwrap(),
        FockSpace::doubled(Statistics::Boson, &sys, 2, 2).unwrap(),
    ] {
        let h = space.hamiltonian();
        assert!(h.is_diagonal());
        assert!(h.diagonal_entries().iter().all(|z| z.re >= 0.0 && z.im == 0.0));
        assert_eq!(h.get(0, 0), c(0.0, 0.0));
    }
}

#[test]
fn doubled_halves_are_unitarily_equivalent() {
    // Swapping the ± blocks maps H₋ onto H₊, so their spectra coincide.
    let sys = three_halves(6.0);
    let space = FockSpace::doubled(Statistics::Boson, &sys, 2, 3).unwrap();
    let split = |positive: bool| {
        let mut v: Vec<f64> = space
            .basis()
            .iter()
            .map(|s| {
                (0..2)
                    .map(|j| {
                        let slot = if positive { j } else { j + 2 };
                        s.bosons.get(slot) as f64 * sys.omegas()[j]
                    })
                    .sum()
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    assert_eq!(split(true), split(false));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjoint_reverses_products(seed in 0u64..1000) {
        let space = FockSpace::occupancy(Statistics::Graded, vec![1.0, 2.5], 3).unwrap();
        let mut rng = kms::seeded_rng(seed);
        let a = kms::random_operator(&space, &mut rng, 12, None);
        let b = kms::random_operator(&space, &mut rng, 12, None);
        prop_assert!(a.adjoint().adjoint().max_defect(&a).unwrap() == 0.0);
        let lhs = a.mul(&b).unwrap().adjoint();
        let rhs = b.adjoint().mul(&a.adjoint()).unwrap();
        prop_assert!(lhs.max_defect(&rhs).unwrap() < 1e-14);
    }

    #[test]
    fn tau_e_is_a_state(terms in small_terms(), e in 4.0f64..14.0) {
        let sys = three_halves(e + 12.0);
        let f = poly(&sys, &terms);
        let space = FockSpace::energy_cut(&sys, e + 12.0).unwrap();
        let a = space.toeplitz(&f).unwrap();
        prop_assert!((tau_e(&space, &space.identity(), e).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let positive = tau_e(&space, &a.adjoint().mul(&a).unwrap(), e).unwrap();
        prop_assert!(positive.re >= -1e-12 && positive.im.abs() < 1e-12);
        let value = tau_e(&space, &a, e).unwrap();
        prop_assert!(value.norm() <= f.l1_norm() + 1e-12);
    }

    #[test]
    fn flow_matches_conjugation(terms in small_terms(), t in -3.0f64..3.0, e in 4.0f64..12.0) {
        let sys = three_halves(e + 12.0);
        let f = poly(&sys, &terms);
        let space = FockSpace::energy_cut(&sys, e + 12.0).unwrap();
        let moved = space.toeplitz(&f.kronecker_flow(t)).unwrap();
        let conj = space
            .evolution(t)
            .mul(&space.toeplitz(&f).unwrap())
            .unwrap()
            .mul(&space.evolution(-t))
            .unwrap();
        // Equal as operators on every state whose images stay inside the cut.
        let low: Vec<bool> = space.energies().iter().map(|&x| x <= e).collect();
        for col in (0..space.dim()).filter(|&j| low[j]) {
            for row in 0..space.dim() {
                prop_assert!((moved.get(row, col) - conj.get(row, col)).norm() < 1e-12);
            }
        }
        let lhs = tau_e(&space, &moved, e).unwrap();
        let rhs = tau_e(&space, &conj, e).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert!((lhs - tau_e(&space, &space.toeplitz(&f).unwrap(), e).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn gibbs_is_a_state(seed in 0u64..1000, beta in 0.1f64..4.0) {
        let space = FockSpace::occupancy(Statistics::Boson, vec![1.0, 1.7], 4).unwrap();
        let ctx = ThermalContext::new(space.clone(), beta).unwrap();
        let mut rng = kms::seeded_rng(seed);
        let a = kms::random_operator(&space, &mut rng, 20, None);
        prop_assert!((ctx.gibbs(&space.identity()).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        let g = ctx.gibbs(&a.adjoint().mul(&a).unwrap()).unwrap();
        prop_assert!(g.re >= -1e-12 && g.im.abs() < 1e-12);
        let b = kms::random_operator(&space, &mut rng, 20, None);
        prop_assert!(ctx.kms_check(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn super_kms_properties(seed in 0u64..1000, beta in 0.2f64..3.0, t in -2.0f64..2.0) {
        let space = FockSpace::occupancy(Statistics::Graded, vec![1.0, 2f64.powf(1.5)], 3).unwrap();
        let q = space.supercharge(2).unwrap();
        let ctx = ThermalContext::new(space.clone(), beta).unwrap();
        let mut rng = kms::seeded_rng(seed);
        let pa = (seed % 2) as u32;
        let pb = ((seed / 2) % 2) as u32;
        let a = kms::random_operator(&space, &mut rng, 30, Some(pa));
        let b = kms::random_operator(&space, &mut rng, 30, Some(pb));
        let mu = |x: &kronlab_core::sparse::SparseOperator| ctx.skms(x).unwrap();

        let flowed = space.evolution(t).mul(&a).unwrap().mul(&space.evolution(-t)).unwrap();
        prop_assert!((mu(&flowed) - mu(&a)).norm() < 1e-10);
        prop_assert!((mu(&kms::grade(&space, &a)) - mu(&a)).norm() < 1e-10);

        let da = kms::super_d(&space, &q, &a).unwrap();
        let db = kms::super_d(&space, &q, &b).unwrap();
        prop_assert!(mu(&da).norm() < 1e-10);
        let lhs = mu(&a.mul(&db).unwrap());
        let rhs = mu(&da.mul(&kms::grade(&space, &b)).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-10, "{lhs} vs {rhs}");
        prop_assert!(ctx.twisted_kms_check(&a, &b).unwrap() < 1e-10);
    }
}
