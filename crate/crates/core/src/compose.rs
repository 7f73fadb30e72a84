//! Closure constructions: composing relabelings and look-arounds, and
//! restricting the output of an att to a regular tree language.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::eval::EvalError;
use crate::model::{
    explore, validate_att, Att, BottomUpAutomaton, BottomUpRelabeling, BuRule, Lhs, LookAround, ModelError, Rhs, Rule,
    TdRule, TopDownRelabeling,
};
use crate::names::NameGen;
use crate::trees::{cartesian, Name, RankedAlphabet};

/// Runs `b1` and then `b2` in one bottom-up pass over pairs of states.
pub fn compose_bottomup(b1: &BottomUpRelabeling, b2: &BottomUpRelabeling) -> Result<BottomUpRelabeling, EvalError> {
    if b1.output() != b2.input() {
        return Err(EvalError::AlphabetMismatch(format!(
            "{} does not read the output of {}",
            b2.name, b1.name
        )));
    }
    let reach = explore(b1.input(), |sym, _, kids: &[(usize, usize, Name)]| {
        let p1: Vec<usize> = kids.iter().map(|k| k.0).collect();
        let p2: Vec<usize> = kids.iter().map(|k| k.1).collect();
        let r1 = b1.transition(sym, &p1)?;
        let r2 = b2.transition(&r1.output, &p2)?;
        Some((r1.state, r2.state, r2.output.clone()))
    });
    // The explored state carries the output label, so one pair may appear as
    // several states; merge them by pair.
    let mut gen = NameGen::new([]);
    let mut pair_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut names = Vec::new();
    let mut finals = Vec::new();
    let ids: Vec<usize> = reach
        .states
        .iter()
        .map(|&(p1, p2, _)| {
            *pair_ids.entry((p1, p2)).or_insert_with(|| {
                names.push(gen.fresh(&format!("{}*{}", b1.states()[p1], b2.states()[p2])));
                finals.push(b1.is_final(p1) && b2.is_final(p2));
                names.len() - 1
            })
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut rules = Vec::new();
    for (sym, kids, to) in reach.transitions {
        let children: Vec<usize> = kids.iter().map(|&k| ids[k]).collect();
        if seen.insert((sym.clone(), children.clone())) {
            rules.push(BuRule {
                symbol: sym,
                children,
                state: ids[to],
                output: reach.states[to].2.clone(),
            });
        }
    }
    Ok(BottomUpRelabeling::from_parts(
        format!("{}_{}", b1.name, b2.name),
        b1.input().clone(),
        b2.output().clone(),
        names,
        finals,
        rules,
    )?)
}

/// A single look-around realizing `u1` followed by `u2`.
///
/// The top-down part of `u1` and the bottom-up part of `u2` are folded into a
/// bottom-up pass whose states are tables from `u1`'s top-down states to
/// `u2`'s bottom-up states; that pass is composed with `u1`'s bottom-up part.
/// The new top-down part runs pairs of top-down states and recovers the
/// labels of `u2`'s bottom-up output from the tables stored in each symbol.
pub fn compose_lookarounds(u1: &LookAround, u2: &LookAround) -> Result<LookAround, EvalError> {
    if u1.output() != u2.input() {
        return Err(EvalError::AlphabetMismatch(format!(
            "{} does not read the output of {}",
            u2.name, u1.name
        )));
    }
    let (b1, t1, b2, t2) = (&u1.bottom, &u1.top, &u2.bottom, &u2.top);
    let nq1 = t1.states().len();
    let q1_0 = t1.initials()[0];
    let q2_0 = t2.initials()[0];

    // bottom part: state = (state of b1, table q1 -> state of b2)
    type State = (usize, Vec<Option<usize>>);
    let reach = explore(b1.input(), |sym, _, kids: &[State]| {
        let ps: Vec<usize> = kids.iter().map(|k| k.0).collect();
        let r1 = b1.transition(sym, &ps)?;
        let table = (0..nq1)
            .map(|q| {
                let tr = t1.rules_for(q, &r1.output).next()?;
                let ks = tr
                    .children
                    .iter()
                    .zip(kids)
                    .map(|(&qi, k)| k.1[qi])
                    .collect::<Option<Vec<_>>>()?;
                b2.transition(&tr.output, &ks).map(|r| r.state)
            })
            .collect();
        Some((r1.state, table))
    });
    let state_names: Vec<Name> = (0..reach.states.len()).map(|i| Name::from(format!("s{i}"))).collect();
    let finals: Vec<bool> = reach
        .states
        .iter()
        .map(|(p, table)| b1.is_final(*p) && table[q1_0].is_some_and(|x| b2.is_final(x)))
        .collect();
    let mut mid = RankedAlphabet::new();
    let mut bottom_rules = Vec::new();
    // per mid symbol: b1 output label, own state, child states
    let mut entries: Vec<(Name, Name, usize, Vec<usize>)> = Vec::new();
    for (sym, kids, own) in &reach.transitions {
        let ps: Vec<usize> = kids.iter().map(|&k| reach.states[k].0).collect();
        let label1 = b1.transition(sym, &ps).expect("explored").output.clone();
        let mut label = format!("{label1}[{}", state_names[*own]);
        for &k in kids {
            label.push('|');
            label.push_str(&state_names[k]);
        }
        label.push(']');
        let label = Name::from(label);
        mid.insert(&label, kids.len()).expect("one symbol per transition");
        bottom_rules.push(BuRule {
            symbol: sym.clone(),
            children: kids.clone(),
            state: *own,
            output: label.clone(),
        });
        entries.push((label, label1, *own, kids.clone()));
    }
    let bottom = BottomUpRelabeling::from_parts(
        format!("{}_{}_bottom", u1.name, u2.name),
        b1.input().clone(),
        mid.clone(),
        state_names,
        finals,
        bottom_rules,
    )?;

    // top part: pairs of top-down states reachable from the initial pair
    let mut gen = NameGen::new([]);
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut names = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern =
        |p: (usize, usize), names: &mut Vec<Name>, queue: &mut VecDeque<((usize, usize), usize)>| -> usize {
            *ids.entry(p).or_insert_with(|| {
                names.push(gen.fresh(&format!("{}*{}", t1.states()[p.0], t2.states()[p.1])));
                queue.push_back((p, names.len() - 1));
                names.len() - 1
            })
        };
    intern((q1_0, q2_0), &mut names, &mut queue);
    let mut top_rules = Vec::new();
    while let Some(((q1, q2), here)) = queue.pop_front() {
        for (label, label1, _own, kids) in &entries {
            let Some(r1) = t1.rules_for(q1, label1).next() else {
                continue;
            };
            let Some(ks) = r1
                .children
                .iter()
                .zip(kids)
                .map(|(&qi, &k)| reach.states[k].1[qi])
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            let Some(r2b) = b2.transition(&r1.output, &ks) else {
                continue;
            };
            let Some(r2) = t2.rules_for(q2, &r2b.output).next() else {
                continue;
            };
            let children = r1
                .children
                .iter()
                .zip(&r2.children)
                .map(|(&a, &b)| intern((a, b), &mut names, &mut queue))
                .collect();
            top_rules.push(TdRule {
                state: here,
                symbol: label.clone(),
                output: r2.output.clone(),
                children,
            });
        }
    }
    let top = TopDownRelabeling::from_parts(
        format!("{}_{}_top", u1.name, u2.name),
        mid,
        t2.output().clone(),
        names,
        vec![0],
        top_rules,
    )?;
    Ok(LookAround::new(format!("{}_{}", u1.name, u2.name), bottom, top)?)
}

/// An att translating like `a` but only to outputs accepted by `m`.
///
/// Every attribute is paired with an automaton state it must evaluate to;
/// each rule spawns one variant per way of running `m` top-down through its
/// right-hand side. A fresh initial attribute starts in every accepting
/// state. Attributes unreachable from it are dropped.
pub fn restrict_att_output(a: &Att, m: &BottomUpAutomaton) -> Result<Att, EvalError> {
    let v = validate_att(a);
    if !v.is_empty() {
        return Err(ModelError::invalid(&v).into());
    }
    if m.alphabet() != &a.output {
        return Err(EvalError::AlphabetMismatch(format!(
            "automaton {} does not read the output of {}",
            m.name, a.name
        )));
    }
    let pre = m.preimages();
    let nd = m.states().len();
    let mut gen = NameGen::new([]);
    let mut paired: BTreeMap<(Name, usize), Name> = BTreeMap::new();
    for alpha in a.syn.iter().chain(&a.inh) {
        for d in 0..nd {
            paired.insert((alpha.clone(), d), gen.fresh(&format!("{alpha}*{}", m.states()[d])));
        }
    }
    let init = gen.fresh(&format!("{}_init", a.initial));

    fn variants(
        rhs: &Rhs,
        d: usize,
        pre: &HashMap<(Name, usize), Vec<Vec<usize>>>,
        paired: &BTreeMap<(Name, usize), Name>,
    ) -> Vec<Rhs> {
        match rhs {
            Rhs::Syn(x, i) => vec![Rhs::Syn(paired[&(x.clone(), d)].clone(), *i)],
            Rhs::Inh(x) => vec![Rhs::Inh(paired[&(x.clone(), d)].clone())],
            Rhs::Out(sym, kids) => {
                let mut out = Vec::new();
                for tuple in pre.get(&(sym.clone(), d)).into_iter().flatten() {
                    let pools: Vec<Vec<Rhs>> = kids
                        .iter()
                        .zip(tuple)
                        .map(|(k, &dk)| variants(k, dk, pre, paired))
                        .collect();
                    let refs: Vec<&Vec<Rhs>> = pools.iter().collect();
                    out.extend(cartesian(&refs).into_iter().map(|ks| Rhs::Out(sym.clone(), ks)));
                }
                out
            }
        }
    }
    let lift = |rule: &Rule, d: usize, lhs_name: Option<&Name>| -> Vec<Rule> {
        let lhs = match &rule.lhs {
            Lhs::Syn(x) => Lhs::Syn(lhs_name.cloned().unwrap_or_else(|| paired[&(x.clone(), d)].clone())),
            Lhs::Inh(x, i) => Lhs::Inh(paired[&(x.clone(), d)].clone(), *i),
        };
        variants(&rule.rhs, d, &pre, &paired)
            .into_iter()
            .map(|rhs| Rule::new(lhs.clone(), rhs))
            .collect()
    };

    let mut rules: Vec<(Name, Vec<Rule>)> = Vec::new();
    for (sym, list) in &a.rules {
        let mut out = Vec::new();
        for rule in list {
            if rule.lhs == Lhs::Syn(a.initial.clone()) {
                for d in m.finals() {
                    out.extend(lift(rule, d, Some(&init)));
                }
            }
        }
        for rule in list {
            for d in 0..nd {
                out.extend(lift(rule, d, None));
            }
        }
        rules.push((sym.clone(), out));
    }
    let mut root_rules = Vec::new();
    for rule in &a.root_rules {
        for d in 0..nd {
            root_rules.extend(lift(rule, d, None));
        }
    }

    // prune attributes unreachable from the new initial attribute
    let mut live: BTreeSet<Name> = BTreeSet::from([init.clone()]);
    loop {
        let before = live.len();
        for rule in rules.iter().flat_map(|(_, l)| l).chain(&root_rules) {
            if live.contains(rule.lhs.attribute()) {
                rule.rhs.for_each_ref(&mut |r| match r {
                    Rhs::Syn(x, _) | Rhs::Inh(x) => {
                        live.insert(x.clone());
                    }
                    Rhs::Out(..) => {}
                });
            }
        }
        if live.len() == before {
            break;
        }
    }
    let keep = |r: &Rule| live.contains(r.lhs.attribute());
    let mut syn = vec![init.clone()];
    let mut inh = Vec::new();
    for ((alpha, _), name) in &paired {
        if live.contains(name) {
            if a.is_syn(alpha) {
                syn.push(name.clone());
            } else {
                inh.push(name.clone());
            }
        }
    }
    let mut out = Att::new(
        format!("{}_{}", a.name, m.name),
        a.input.clone(),
        a.output.clone(),
        syn,
        inh,
        init,
    );
    for (sym, list) in rules {
        out.rules.insert(sym, list.into_iter().filter(|r| keep(r)).collect());
    }
    out.root_rules = root_rules.into_iter().filter(|r| keep(r)).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{enumerate_derivations_bounded, run_bottomup_relabeling, run_lookaround};
    use crate::fixtures;
    use crate::model::identity_lookaround;
    use crate::trees::{enumerate_trees, parse_tree, Tree};

    #[test]
    fn identity_laws_for_lookarounds() {
        let p = fixtures::prime();
        let id_in = identity_lookaround(p.input());
        let id_out = identity_lookaround(p.output());
        let left = compose_lookarounds(&id_in, &p).unwrap();
        let right = compose_lookarounds(&p, &id_out).unwrap();
        for s in enumerate_trees(p.input(), 5) {
            let want = run_lookaround(&p, &s);
            assert_eq!(run_lookaround(&left, &s), want);
            assert_eq!(run_lookaround(&right, &s), want);
        }
    }

    #[test]
    fn bottomup_composition_runs_both() {
        let p = fixtures::prime();
        let b = compose_bottomup(&p.bottom, &p.bottom).unwrap();
        for s in enumerate_trees(p.input(), 5) {
            let once = run_bottomup_relabeling(&p.bottom, &s).unwrap();
            let twice = run_bottomup_relabeling(&p.bottom, &once.tree).unwrap();
            assert_eq!(run_bottomup_relabeling(&b, &s).unwrap().tree, twice.tree);
        }
    }

    #[test]
    fn restricting_to_no_primed_g() {
        let a = fixtures::run();
        // accepts trees without g'
        let m = BottomUpAutomaton::new(
            "nog",
            a.output.clone(),
            vec!["ok".into()],
            &["ok".into()],
            vec![
                ("g".into(), vec!["ok".into(), "ok".into()], "ok".into()),
                ("h".into(), vec!["ok".into()], "ok".into()),
                ("e".into(), vec![], "ok".into()),
            ],
        )
        .unwrap();
        let r = restrict_att_output(&a, &m).unwrap();
        let s = parse_tree("g(g(e))", None).unwrap();
        let budget = 3000;
        let orig = enumerate_derivations_bounded(&a, &s, budget).unwrap();
        let rest = enumerate_derivations_bounded(&r, &s, budget).unwrap();
        let filtered: Vec<Tree> = orig.trees.into_iter().filter(|t| !t.contains_label("g'")).collect();
        for t in &rest.trees {
            assert!(!t.contains_label("g'"));
        }
        assert!(rest.trees.contains(&parse_tree("g(g(e,e),g(e,e))", None).unwrap()));
        assert!(filtered.iter().take(3).all(|t| rest.trees.contains(t) || t.size() > 7));
    }
}
