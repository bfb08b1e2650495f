mod common;

use cellnet::decompose::{canonical_form, is_indecomposable};
use cellnet::infer::{condition, forward, pullback, validity, Predicate};
use cellnet::kleisli::{compose_arrows, interpret, interpret_lex, permutation_arrow};
use cellnet::oracle::{check_correspondence, enumerate_outcome_distribution};
use cellnet::{compile_net, scells, Dist, MarkedNet, Term, Wiring, STOCHASTIC_TOL};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_net() -> impl Strategy<Value = MarkedNet> {
    (
        2..=MAX_PLACES,
        prop::collection::vec((any::<u8>(), any::<u8>()), 0..=MAX_TRANSITIONS),
        any::<u8>(),
    )
        .prop_filter_map("self-conflicting net", |(n, specs, mark)| {
            build_net(n, &specs, mark)
        })
}

/// A random net that compiles, with a random δ for its term.
fn arb_compiled() -> impl Strategy<Value = (MarkedNet, Term, u64)> {
    (arb_net(), any::<u64>()).prop_filter_map("net with stranded places", |(m, seed)| {
        compile_net(&m).ok().map(|t| (m, t, seed))
    })
}

fn arb_prob() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn canonical_form_recomposes_to_the_net(m in arb_net()) {
        prop_assert_eq!(canonical_form(&m).recompose().unwrap(), m);
    }

    #[test]
    fn computed_cells_are_indecomposable(m in arb_net()) {
        for c in &scells(&m).cells {
            prop_assert!(is_indecomposable(c), "{}", c);
        }
    }

    #[test]
    fn compiled_terms_typecheck_with_the_net_interface((m, t, _) in arb_compiled()) {
        let ty = t.typecheck().unwrap();
        prop_assert_eq!(ty.inputs, m.inputs());
        prop_assert_eq!(ty.outputs, m.outputs());
    }

    #[test]
    fn interpreted_arrows_are_row_stochastic((_, t, seed) in arb_compiled()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = interpret_lex(&t, &random_delta(&t, &mut rng)).unwrap();
        prop_assert!(a.is_row_stochastic(STOCHASTIC_TOL));
    }

    #[test]
    fn normalization_preserves_type_and_meaning((_, t, seed) in arb_compiled()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let delta = random_delta(&t, &mut rng);
        let n = t.normalize().unwrap();
        prop_assert_eq!(n.typecheck().unwrap(), t.typecheck().unwrap());
        prop_assert_eq!(n.normalize().unwrap(), n.clone());
        let (a, b) = (interpret_lex(&t, &delta).unwrap(), interpret_lex(&n, &delta).unwrap());
        prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn rewiring_is_conjugation_by_permutations((_, t, seed) in arb_compiled()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let delta = random_delta(&t, &mut rng);
        let lex = interpret_lex(&t, &delta).unwrap();
        let other = interpret_shuffled(&t, &delta, &mut rng);
        let conj = compose_arrows(
            &compose_arrows(&permutation_arrow(other.input(), lex.input()).unwrap(), &lex).unwrap(),
            &permutation_arrow(lex.output(), other.output()).unwrap(),
        )
        .unwrap();
        prop_assert!(conj.max_abs_diff(&other).unwrap() <= 1e-12);
        prop_assert!(subsetwise_diff(&lex, &other) <= 1e-12);
    }

    #[test]
    fn term_text_round_trips((_, t, _) in arb_compiled()) {
        let back: Term = t.to_string().parse().unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn enumeration_matches_the_matrix_pipeline((m, t, seed) in arb_compiled()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let delta = random_delta(&t, &mut rng);
        let a = interpret_lex(&t, &delta).unwrap();
        for j in a.input().subsets() {
            let exact = enumerate_outcome_distribution(&m, &delta, &j).unwrap();
            let pushed = forward(&Dist::point(a.input().clone(), &j).unwrap(), &a).unwrap();
            for (p, w) in exact.marginals() {
                prop_assert!((pushed.marginal(&p).unwrap() - w).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn term_configurations_match_recursively_stopped_ones((m, _, _) in arb_compiled()) {
        let report = check_correspondence(&m).unwrap();
        prop_assert!(report.is_ok(), "{}\n{}", cellnet::io::net_to_toml(&m), report);
    }

    #[test]
    fn running_example_par_commutes(pa in arb_prob(), pc in arb_prob()) {
        let delta = cellnet::fixtures::running_delta(pa, pc, 0.5, 0.5, 0.25);
        let t = running_term();
        let Term::Seq(left, _) = &t else { panic!("expected a sequence") };
        let Term::Par(a, b) = left.as_ref() else { panic!("expected a parallel pair") };
        let ab = Term::par((**a).clone(), (**b).clone());
        let ba = Term::par((**b).clone(), (**a).clone());
        let ty = ab.typecheck().unwrap();
        let (pi, rho) = (Wiring::lexicographic(&ty.inputs), Wiring::lexicographic(&ty.outputs));
        let x = interpret(&ab, &delta, &pi, &rho).unwrap();
        let y = interpret(&ba, &delta, &pi, &rho).unwrap();
        prop_assert!(x.max_abs_diff(&y).unwrap() <= 1e-12);
    }

    #[test]
    fn inference_identities(pa in arb_prob(), pc in arb_prob(), pf in arb_prob(), prior in arb_prob()) {
        let p = Params { pa, pc, pf, pg: 0.5, pg2: 0.0 };
        let a = running_arrow(&p);
        let omega = Dist::new(a.input().clone(), vec![1.0 - prior, prior]).unwrap();
        let truth = Predicate::constant(a.output().clone(), 1.0).unwrap();
        prop_assert!(pullback(&a, &truth).unwrap().values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let falsity = Predicate::constant(a.output().clone(), 0.0).unwrap();
        prop_assert!(pullback(&a, &falsity).unwrap().values().iter().all(|v| *v == 0.0));

        // pushing forward then testing equals testing the pulled-back predicate
        let q = Predicate::place(a.output().clone(), &cellnet::PlaceId::new("p8"), false).unwrap();
        let lhs = validity(&forward(&omega, &a).unwrap(), &q).unwrap();
        let back = pullback(&a, &q).unwrap();
        prop_assert!((lhs - validity(&omega, &back).unwrap()).abs() < 1e-12);

        if let Ok(post) = condition(&omega, &back) {
            prop_assert!((post.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let same = condition(&omega, &Predicate::constant(a.input().clone(), 1.0).unwrap()).unwrap();
        prop_assert!(same.probs().iter().zip(omega.probs()).all(|(x, y)| (x - y).abs() < 1e-15));
    }
}
