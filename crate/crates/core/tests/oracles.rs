mod support;

use std::collections::BTreeSet;

use patternforge::expansion::expand;
use patternforge::graph::{find_injective_morphisms, GraphMorphism};
use patternforge::solver::{enumerate_solutions, minimal_solutions};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use support::*;

#[test]
fn solver_matches_nested_loops_on_200_systems() {
    let mut rng = StdRng::seed_from_u64(0x5017);
    for case in 0..200 {
        let sys = random_system(&mut rng);
        let all = brute_solutions(&sys, 10);
        let got: BTreeSet<_> = enumerate_solutions(&sys, 10).into_iter().collect();
        assert_eq!(got, all, "case {case}: {sys}");
        let min: BTreeSet<_> = minimal_solutions(&sys, 10).into_iter().collect();
        assert_eq!(min, dominance_filter(&all), "case {case}: {sys}");
    }
}

#[test]
fn expansion_is_isomorphic_to_union_then_quotient_on_100_trees() {
    let mut rng = StdRng::seed_from_u64(0xC011);
    for case in 0..100 {
        let (p, a) = random_part_tree(&mut rng);
        match (expand(&p, &a), naive_colimit(&p, &a)) {
            (Ok(e), Ok(o)) => {
                if let Err(msg) = isomorphic_to_oracle(&e, &o) {
                    panic!("case {case} at {a}: {msg}");
                }
            }
            (Err(_), Err(_)) => {}
            (e, o) => panic!("case {case}: expansion {:?} but oracle {:?}", e.err(), o.err()),
        }
    }
}

#[test]
fn matcher_matches_exhaustive_search_on_300_instances() {
    let mut rng = StdRng::seed_from_u64(0x3A7C);
    let mut nonempty = 0;
    for case in 0..300 {
        let (pat, host) = random_match_instance(&mut rng);
        let got = find_injective_morphisms(&pat, &host, &GraphMorphism::empty());
        let want = brute_force_morphisms(&pat, &host);
        assert_eq!(got, want, "case {case}");
        nonempty += usize::from(!want.is_empty());
    }
    // the generator must exercise positive cases too
    assert!(nonempty > 30, "{nonempty}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_oracle(seed in any::<u64>()) {
        let sys = random_system(&mut StdRng::seed_from_u64(seed));
        let all = brute_solutions(&sys, 6);
        let got: BTreeSet<_> = enumerate_solutions(&sys, 6).into_iter().collect();
        prop_assert_eq!(&got, &all);
        let min: BTreeSet<_> = minimal_solutions(&sys, 6).into_iter().collect();
        prop_assert_eq!(min, dominance_filter(&all));
    }

    #[test]
    fn colimit_oracle(seed in any::<u64>()) {
        let (p, a) = random_part_tree(&mut StdRng::seed_from_u64(seed));
        match (expand(&p, &a), naive_colimit(&p, &a)) {
            (Ok(e), Ok(o)) => prop_assert_eq!(isomorphic_to_oracle(&e, &o), Ok(())),
            (e, o) => prop_assert!(e.is_err() && o.is_err()),
        }
    }

    #[test]
    fn matching_oracle(seed in any::<u64>()) {
        let (pat, host) = random_match_instance(&mut StdRng::seed_from_u64(seed));
        let got = find_injective_morphisms(&pat, &host, &GraphMorphism::empty());
        prop_assert_eq!(got, brute_force_morphisms(&pat, &host));
    }

    /// Every morphism found is a valid injective morphism, and seeding the
    /// search with one of them finds it again.
    #[test]
    fn matches_are_valid_and_reproducible(seed in any::<u64>()) {
        let (pat, host) = random_match_instance(&mut StdRng::seed_from_u64(seed));
        for m in find_injective_morphisms(&pat, &host, &GraphMorphism::empty()) {
            prop_assert!(m.is_injective());
            prop_assert!(m.is_valid(&pat, &host), "{:?}", m.check(&pat, &host));
            let again = find_injective_morphisms(&pat, &host, &m);
            prop_assert_eq!(again, vec![m]);
        }
    }
}
