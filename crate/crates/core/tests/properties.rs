use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uniatt::compose::restrict_att_output;
use uniatt::dsl::{parse_att, serialize_att};
use uniatt::eval::{
    enumerate_derivations_bounded, enumerate_uniform, relabel_then_eval_fiber, relabel_then_eval_fiber_brute,
    run_lookaround, run_topdown_relabeling_all,
};
use uniatt::model::normalize_root_rules;
use uniatt::random::{random_att, random_topdown, RandomSizes};
use uniatt::trees::enumerate_trees;
use uniatt::uniformize::{build_annotation_relabeling, build_rule_applier, uniformize_topdown};
use uniatt::{parse_tree, render_tree, BottomUpAutomaton, Name, RankedAlphabet, Tree};

fn arb_tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![Just(Tree::leaf("e")), Just(Tree::leaf("c'"))];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Tree::new("g", vec![t])),
            (inner.clone(), inner).prop_map(|(a, b)| Tree::new("f", vec![a, b])),
        ]
    })
}

/// The `index`-th tree (cyclically) of size at most `max` over `alphabet`.
fn some_tree(alphabet: &RankedAlphabet, max: usize, index: usize) -> Tree {
    let all: Vec<Tree> = enumerate_trees(alphabet, max).collect();
    all[index % all.len()].clone()
}

fn random_automaton(seed: u64, alphabet: &RankedAlphabet) -> BottomUpAutomaton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<Name> = vec!["x".into(), "y".into()];
    let finals: Vec<Name> = if rng.gen_bool(0.5) {
        vec!["x".into()]
    } else {
        states.clone()
    };
    let mut trans = Vec::new();
    for (sym, k) in alphabet.iter() {
        let tuples: Vec<Vec<Name>> = (0..1usize << k)
            .map(|bits| (0..k).map(|i| states[bits >> i & 1].clone()).collect())
            .collect();
        for kids in tuples {
            if rng.gen_bool(0.9) {
                trans.push((sym.clone(), kids, states[rng.gen_range(0..2)].clone()));
            }
        }
    }
    BottomUpAutomaton::new("m", alphabet.clone(), states, &finals, trans).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trees_round_trip(t in arb_tree()) {
        prop_assert_eq!(parse_tree(&render_tree(&t), None).unwrap(), t);
    }

    #[test]
    fn random_atts_round_trip(seed in any::<u64>()) {
        let a = random_att(seed, &RandomSizes::default());
        let text = serialize_att(&a);
        let back = parse_att(&text).unwrap();
        prop_assert_eq!(serialize_att(&back), text);
        prop_assert_eq!(back, a);
    }

    #[test]
    fn lazy_fiber_matches_materialized(seed in 0u64..10_000, index in any::<usize>()) {
        let a = normalize_root_rules(&random_att(seed, &RandomSizes::default()));
        let t = build_annotation_relabeling(&a).unwrap();
        let d = build_rule_applier(&a).unwrap();
        let s = some_tree(&a.input, 4, index);
        prop_assert_eq!(
            relabel_then_eval_fiber(&t, &d, &s).unwrap(),
            relabel_then_eval_fiber_brute(&t, &d, &s).unwrap()
        );
    }

    #[test]
    fn uniform_fiber_is_part_of_full_fiber(seed in 0u64..10_000, index in any::<usize>()) {
        let a = normalize_root_rules(&random_att(seed, &RandomSizes::default()));
        let s = some_tree(&a.input, 4, index);
        let full = enumerate_derivations_bounded(&a, &s, 5_000).unwrap();
        if full.complete {
            for t in enumerate_uniform(&a, &s).unwrap() {
                prop_assert!(full.trees.contains(&t), "{} missing at {}", t, s);
            }
        }
    }

    #[test]
    fn output_restriction_only_filters(seed in 0u64..10_000, index in any::<usize>()) {
        let sizes = RandomSizes { inh: 0, ..RandomSizes::default() };
        let a = random_att(seed, &sizes);
        let m = random_automaton(seed, &a.output);
        let r = restrict_att_output(&a, &m).unwrap();
        let s = some_tree(&a.input, 4, index);
        let orig = enumerate_derivations_bounded(&a, &s, 5_000).unwrap();
        let rest = enumerate_derivations_bounded(&r, &s, 5_000).unwrap();
        if orig.complete && rest.complete {
            let filtered: Vec<Tree> = orig.trees.into_iter().filter(|t| m.accepts(t)).collect();
            prop_assert_eq!(rest.trees, filtered);
        }
    }

    #[test]
    fn selected_relabeling_is_allowed(seed in any::<u64>(), index in any::<usize>()) {
        let t = random_topdown(seed, 3, 2);
        let u = uniformize_topdown(&t);
        let s = some_tree(t.input(), 5, index);
        let all = run_topdown_relabeling_all(&t, &s);
        match run_lookaround(&u, &s) {
            Some(out) => prop_assert!(all.contains(&out)),
            None => prop_assert!(all.is_empty()),
        }
    }
}
