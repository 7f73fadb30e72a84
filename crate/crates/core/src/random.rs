//! Seeded generators for property tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Att, Lhs, Rhs, Rule, TopDownRelabeling};
use crate::trees::{Name, RankedAlphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSizes {
    pub input_symbols: usize,
    pub output_symbols: usize,
    pub max_rank: usize,
    pub syn: usize,
    pub inh: usize,
    /// Upper bound on the rules sharing one left-hand side; 1 gives a
    /// deterministic att.
    pub rules_per_lhs: usize,
}

impl Default for RandomSizes {
    fn default() -> Self {
        RandomSizes {
            input_symbols: 3,
            output_symbols: 3,
            max_rank: 2,
            syn: 2,
            inh: 1,
            rules_per_lhs: 2,
        }
    }
}

/// The first symbol is always nullary so the alphabet has trees.
fn alphabet(rng: &mut ChaCha8Rng, prefix: &str, n: usize, max_rank: usize) -> RankedAlphabet {
    let mut a = RankedAlphabet::new();
    for i in 0..n.max(1) {
        let rank = if i == 0 { 0 } else { rng.gen_range(0..=max_rank) };
        a.insert(&format!("{prefix}{i}"), rank).expect("fresh names");
    }
    a
}

fn leaf(rng: &mut ChaCha8Rng, a: &Att, rank: usize, root: bool) -> Rhs {
    let mut options: Vec<Rhs> = Vec::new();
    for i in 1..=rank {
        for x in &a.syn {
            options.push(Rhs::Syn(x.clone(), i));
        }
    }
    if !root {
        for b in &a.inh {
            options.push(Rhs::Inh(b.clone()));
        }
    }
    for (o, k) in a.output.iter() {
        if k == 0 {
            options.push(Rhs::leaf(o.clone()));
        }
    }
    options
        .choose(rng)
        .expect("output alphabet has a nullary symbol")
        .clone()
}

fn rhs(rng: &mut ChaCha8Rng, a: &Att, rank: usize, root: bool) -> Rhs {
    let wide: Vec<(Name, usize)> = a
        .output
        .iter()
        .filter(|(_, k)| *k > 0)
        .map(|(o, k)| (o.clone(), k))
        .collect();
    if wide.is_empty() || rng.gen_bool(0.5) {
        return leaf(rng, a, rank, root);
    }
    let (o, k) = wide.choose(rng).expect("non-empty").clone();
    Rhs::Out(o, (0..k).map(|_| leaf(rng, a, rank, root)).collect())
}

fn rules_for(rng: &mut ChaCha8Rng, a: &Att, lhs: Lhs, rank: usize, root: bool, max: usize) -> Vec<Rule> {
    let n = if max <= 1 {
        usize::from(rng.gen_bool(0.85))
    } else {
        match rng.gen_range(0..10) {
            0 => 0,
            1..=6 => 1,
            _ => rng.gen_range(2..=max),
        }
    };
    let mut out: Vec<Rule> = Vec::new();
    for _ in 0..n {
        let r = Rule::new(lhs.clone(), rhs(rng, a, rank, root));
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

/// A valid att, reproducible per seed. Right-hand sides have depth at most
/// 2 and every inherited attribute gets one root rule.
pub fn random_att(seed: u64, sizes: &RandomSizes) -> Att {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = alphabet(&mut rng, "s", sizes.input_symbols, sizes.max_rank);
    let output = alphabet(&mut rng, "o", sizes.output_symbols, sizes.max_rank);
    let syn: Vec<Name> = (0..sizes.syn.max(1)).map(|i| Name::from(format!("a{i}"))).collect();
    let inh: Vec<Name> = (0..sizes.inh).map(|i| Name::from(format!("b{i}"))).collect();
    let initial = syn[0].clone();
    let mut a = Att::new(format!("rand{seed}"), input.clone(), output, syn, inh, initial);
    for (sym, rank) in input.iter() {
        let mut list = Vec::new();
        for x in a.syn.clone() {
            list.extend(rules_for(&mut rng, &a, Lhs::Syn(x), rank, false, sizes.rules_per_lhs));
        }
        for i in 1..=rank {
            for b in a.inh.clone() {
                list.extend(rules_for(
                    &mut rng,
                    &a,
                    Lhs::Inh(b, i),
                    rank,
                    false,
                    sizes.rules_per_lhs,
                ));
            }
        }
        a.rules.insert(sym.clone(), list);
    }
    for b in a.inh.clone() {
        let r = Rule::new(Lhs::Inh(b, 1), rhs(&mut rng, &a, 1, true));
        a.root_rules.push(r);
    }
    a
}

/// A single-state top-down relabeling from a random alphabet, allowing up to
/// three output labels per input symbol (possibly none).
pub fn random_topdown(seed: u64, input_symbols: usize, max_rank: usize) -> TopDownRelabeling {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = alphabet(&mut rng, "s", input_symbols, max_rank);
    let mut output = RankedAlphabet::new();
    let mut by_rank: Vec<Vec<Name>> = vec![Vec::new(); max_rank + 1];
    for (rank, names) in by_rank.iter_mut().enumerate() {
        for j in 0..rng.gen_range(1..=3) {
            let n = format!("o{rank}_{j}");
            output.insert(&n, rank).expect("fresh names");
            names.push(Name::from(n));
        }
    }
    let q = Name::from("q");
    let mut rules = Vec::new();
    for (sym, rank) in input.iter() {
        let count = rng.gen_range(0..=3usize.min(by_rank[rank].len()));
        let mut outs = by_rank[rank].clone();
        outs.shuffle(&mut rng);
        // Nullary symbols keep at least one rule so the domain is not empty.
        let count = if rank == 0 { count.max(1) } else { count };
        for o in outs.into_iter().take(count) {
            rules.push((q.clone(), sym.clone(), o, vec![q.clone(); rank]));
        }
    }
    TopDownRelabeling::new(format!("rtd{seed}"), input, output, vec![q.clone()], &[q], rules)
        .expect("generated rules are well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::serialize_att;
    use crate::model::{is_deterministic, validate_att};

    #[test]
    fn seeds_are_reproducible() {
        let s = RandomSizes::default();
        assert_eq!(serialize_att(&random_att(0, &s)), serialize_att(&random_att(0, &s)));
        assert_ne!(serialize_att(&random_att(0, &s)), serialize_att(&random_att(1, &s)));
    }

    #[test]
    fn generated_atts_are_valid() {
        let s = RandomSizes::default();
        for seed in 0..100 {
            let a = random_att(seed, &s);
            assert!(validate_att(&a).is_empty(), "seed {seed}: {:?}", validate_att(&a));
            for rules in a.rules.values() {
                assert!(rules.iter().all(|r| r.rhs.depth() <= 2));
            }
        }
    }

    #[test]
    fn one_rule_per_lhs_is_deterministic() {
        let s = RandomSizes {
            rules_per_lhs: 1,
            ..RandomSizes::default()
        };
        assert!((0..50).all(|seed| is_deterministic(&random_att(seed, &s))));
    }
}
