//! Uniformization: annotate every node with an unambiguous rule subset, apply
//! the chosen rules deterministically, keep only annotations the applier can
//! evaluate, and pick one annotation per input with a look-around.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::compose::compose_lookarounds;
use crate::domain::datt_domain_automaton;
use crate::eval::EvalError;
use crate::model::{
    explore, normalize_root_rules, root_rules_unambiguous, unambiguous_subsets, validate_att, Att, AttWithLookAround,
    BottomUpAutomaton, BottomUpRelabeling, BuRule, LookAround, ModelError, TdRule, TopDownRelabeling,
};
use crate::names::NameGen;
use crate::trees::{Name, RankedAlphabet};

/// The name of the annotated symbol `⟨σ, R̄⟩`, e.g. `f@{0,2}` or `e@{}`.
pub fn annotated_name(symbol: &str, subset: &[usize]) -> Name {
    let body: Vec<String> = subset.iter().map(usize::to_string).collect();
    Name::from(format!("{symbol}@{{{}}}", body.join(",")))
}

/// Splits an annotated name into its base symbol and rule indices.
pub fn parse_annotated_name(name: &str) -> Option<(&str, Vec<usize>)> {
    let (base, rest) = name.rsplit_once("@{")?;
    let body = rest.strip_suffix('}')?;
    if body.is_empty() {
        return Some((base, Vec::new()));
    }
    let idx = body.split(',').map(|n| n.parse().ok()).collect::<Option<Vec<_>>>()?;
    Some((base, idx))
}

/// Everything built by [`uniformize_att`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformizerBundle {
    /// Relabels each node with every admissible annotation.
    pub annotation: TopDownRelabeling,
    /// Applies the annotated rule subsets; deterministic.
    pub applier: Att,
    /// Accepts the annotated trees on which the applier produces output.
    pub applier_domain: BottomUpAutomaton,
    /// `annotation` with its range restricted to `applier_domain`.
    pub restricted: TopDownRelabeling,
    /// Picks one restricted annotation per input.
    pub around: LookAround,
    pub result: AttWithLookAround,
}

fn prepared(a: &Att) -> Result<(), EvalError> {
    let v = validate_att(a);
    if !v.is_empty() {
        return Err(ModelError::invalid(&v).into());
    }
    if !root_rules_unambiguous(a) {
        return Err(EvalError::AmbiguousRoot(a.name.clone()));
    }
    Ok(())
}

fn annotated_alphabet(a: &Att) -> (RankedAlphabet, Vec<(Name, usize, Vec<usize>)>) {
    let mut alphabet = RankedAlphabet::new();
    let mut entries = Vec::new();
    for (sym, k) in a.input.iter() {
        for subset in unambiguous_subsets(a.rules_for(sym)) {
            let name = annotated_name(sym, &subset);
            alphabet.insert(&name, k).expect("annotated names are fresh");
            entries.push((sym.clone(), k, subset));
        }
    }
    (alphabet, entries)
}

/// The single-state top-down relabeling that maps each `σ` to every
/// `⟨σ, R̄⟩` with `R̄` an unambiguous subset of the rules of `σ`.
pub fn build_annotation_relabeling(a: &Att) -> Result<TopDownRelabeling, EvalError> {
    prepared(a)?;
    let (alphabet, entries) = annotated_alphabet(a);
    let rules = entries
        .iter()
        .map(|(sym, k, subset)| TdRule {
            state: 0,
            symbol: sym.clone(),
            output: annotated_name(sym, subset),
            children: vec![0; *k],
        })
        .collect();
    Ok(TopDownRelabeling::from_parts(
        format!("{}_annotate", a.name),
        a.input.clone(),
        alphabet,
        vec![Name::from("q")],
        vec![0],
        rules,
    )?)
}

/// The deterministic att over annotated symbols whose rules at `⟨σ, R̄⟩` are
/// exactly `R̄`, with the root rules of `a`.
pub fn build_rule_applier(a: &Att) -> Result<Att, EvalError> {
    prepared(a)?;
    let (alphabet, entries) = annotated_alphabet(a);
    let mut d = Att::new(
        format!("{}_apply", a.name),
        alphabet,
        a.output.clone(),
        a.syn.clone(),
        a.inh.clone(),
        a.initial.clone(),
    );
    for (sym, _, subset) in &entries {
        let all = a.rules_for(sym);
        d.rules.insert(
            annotated_name(sym, subset),
            subset.iter().map(|&i| all[i].clone()).collect(),
        );
    }
    d.root_rules = a.root_rules.clone();
    Ok(d)
}

/// The product of `t` with `m`: state `(q, d)` produces from a subtree exactly
/// the outputs of `q` on which `m` reaches `d`. Initial states pair initial
/// states of `t` with accepting states of `m`.
pub fn restrict_range(t: &TopDownRelabeling, m: &BottomUpAutomaton) -> Result<TopDownRelabeling, EvalError> {
    if m.alphabet() != t.output() {
        return Err(EvalError::AlphabetMismatch(format!(
            "automaton {} does not read the output of {}",
            m.name, t.name
        )));
    }
    let pre = m.preimages();
    let mut gen = NameGen::new([]);
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut names = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern =
        |p: (usize, usize), names: &mut Vec<Name>, queue: &mut VecDeque<((usize, usize), usize)>| -> usize {
            *ids.entry(p).or_insert_with(|| {
                names.push(gen.fresh(&format!("{}*{}", t.states()[p.0], m.states()[p.1])));
                queue.push_back((p, names.len() - 1));
                names.len() - 1
            })
        };
    let mut initials = Vec::new();
    for &q in t.initials() {
        for d in m.finals() {
            initials.push(intern((q, d), &mut names, &mut queue));
        }
    }
    let mut rules = Vec::new();
    while let Some(((q, d), here)) = queue.pop_front() {
        for r in t.rules().iter().filter(|r| r.state == q) {
            let Some(tuples) = pre.get(&(r.output.clone(), d)) else {
                continue;
            };
            for tuple in tuples {
                let children = r
                    .children
                    .iter()
                    .zip(tuple)
                    .map(|(&qi, &di)| intern((qi, di), &mut names, &mut queue))
                    .collect();
                rules.push(TdRule {
                    state: here,
                    symbol: r.symbol.clone(),
                    output: r.output.clone(),
                    children,
                });
            }
        }
    }
    Ok(TopDownRelabeling::from_parts(
        format!("{}_restricted", t.name),
        t.input().clone(),
        t.output().clone(),
        names,
        initials,
        rules,
    )?)
}

/// The bottom-up states of the look-ahead: sets of `t`-states from which the
/// subtree has a complete run, plus the relabeled alphabet entries.
struct Lookahead {
    relabeling: BottomUpRelabeling,
    /// Per output symbol of the relabeling: base symbol, own set, child sets.
    entries: Vec<(Name, usize, Vec<usize>)>,
    sets: Vec<Vec<bool>>,
}

fn build_lookahead(t: &TopDownRelabeling, name: String) -> Lookahead {
    let nq = t.states().len();
    let by_symbol: HashMap<&Name, Vec<&TdRule>> = {
        let mut m: HashMap<&Name, Vec<&TdRule>> = HashMap::new();
        for r in t.rules() {
            m.entry(&r.symbol).or_default().push(r);
        }
        m
    };
    let reach = explore(t.input(), |sym, _, kids: &[Vec<bool>]| {
        let mut own = vec![false; nq];
        for r in by_symbol.get(sym).into_iter().flatten() {
            if !own[r.state] && r.children.iter().zip(kids).all(|(&qi, set)| set[qi]) {
                own[r.state] = true;
            }
        }
        Some(own)
    });
    let state_names: Vec<Name> = (0..reach.states.len()).map(|i| Name::from(format!("p{i}"))).collect();
    let mut output = RankedAlphabet::new();
    let mut rules = Vec::new();
    let mut entries = Vec::new();
    for (sym, kids, own) in &reach.transitions {
        let mut label = format!("{sym}[{}", state_names[*own]);
        for &k in kids {
            label.push('|');
            label.push_str(&state_names[k]);
        }
        label.push(']');
        let label = Name::from(label);
        output.insert(&label, kids.len()).expect("one symbol per transition");
        rules.push(BuRule {
            symbol: sym.clone(),
            children: kids.clone(),
            state: *own,
            output: label,
        });
        entries.push((sym.clone(), *own, kids.clone()));
    }
    let relabeling = BottomUpRelabeling::from_parts(
        name,
        t.input().clone(),
        output,
        state_names,
        vec![true; reach.states.len()],
        rules,
    )
    .expect("explored relabeling is well-formed");
    Lookahead {
        relabeling,
        entries,
        sets: reach.states,
    }
}

/// The deterministic, total bottom-up relabeling that tags every node with
/// the set of `t`-states admitting a complete run on its subtree. A node
/// labelled `σ` becomes `σ[p|p1|...|pk]`, naming its own set and the sets of
/// its children; the set named `pi` is reported by [`lookahead_state_sets`].
pub fn state_domain_lookahead(t: &TopDownRelabeling) -> BottomUpRelabeling {
    build_lookahead(t, format!("{}_lookahead", t.name)).relabeling
}

/// For each state `pi` of [`state_domain_lookahead`], the names of the
/// `t`-states it contains.
pub fn lookahead_state_sets(t: &TopDownRelabeling) -> Vec<(Name, Vec<Name>)> {
    let la = build_lookahead(t, String::new());
    la.relabeling
        .states()
        .iter()
        .zip(&la.sets)
        .map(|(p, set)| {
            let members = (0..set.len())
                .filter(|&q| set[q])
                .map(|q| t.states()[q].clone())
                .collect();
            (p.clone(), members)
        })
        .collect()
}

/// A look-around realizing a uniformizer of `t`: the look-ahead tells which
/// states can finish, and the top-down part applies, at every node, the first
/// rule (declaration order) whose child states can all finish. At the root it
/// starts from the first initial state that can finish.
pub fn uniformize_topdown(t: &TopDownRelabeling) -> LookAround {
    let la = build_lookahead(t, format!("{}_lookahead", t.name));
    let mut gen = NameGen::new(t.states().iter().cloned());
    let init = gen.fresh("init");
    let mut states: Vec<Name> = vec![init];
    states.extend(t.states().iter().cloned());
    let shift = |q: usize| q + 1;
    let mut by_key: BTreeMap<(usize, &Name), Vec<&TdRule>> = BTreeMap::new();
    for r in t.rules() {
        by_key.entry((r.state, &r.symbol)).or_default().push(r);
    }
    let mut rules = Vec::new();
    let outputs: Vec<Name> = la.relabeling.output().iter().map(|(s, _)| s.clone()).collect();
    for ((sym, own, kids), label) in la.entries.iter().zip(&outputs) {
        let own_set = &la.sets[*own];
        let first = |q: usize| -> Option<&TdRule> {
            by_key
                .get(&(q, sym))?
                .iter()
                .copied()
                .find(|r| r.children.iter().zip(kids).all(|(&qi, &k)| la.sets[k][qi]))
        };
        if let Some(&q0) = t.initials().iter().find(|&&q| own_set[q]) {
            let r = first(q0).expect("a state in the own set has a finishing rule");
            rules.push(TdRule {
                state: 0,
                symbol: label.clone(),
                output: r.output.clone(),
                children: r.children.iter().map(|&c| shift(c)).collect(),
            });
        }
        for q in (0..t.states().len()).filter(|&q| own_set[q]) {
            let r = first(q).expect("a state in the own set has a finishing rule");
            rules.push(TdRule {
                state: shift(q),
                symbol: label.clone(),
                output: r.output.clone(),
                children: r.children.iter().map(|&c| shift(c)).collect(),
            });
        }
    }
    let top = TopDownRelabeling::from_parts(
        format!("{}_select", t.name),
        la.relabeling.output().clone(),
        t.output().clone(),
        states,
        vec![0],
        rules,
    )
    .expect("selected rules are well-formed");
    LookAround::new(format!("{}_around", t.name), la.relabeling, top).expect("selection is deterministic")
}

/// Builds a deterministic att with look-around realizing a uniformizer of
/// the translation of `a`.
pub fn uniformize_att(a: &Att) -> Result<UniformizerBundle, EvalError> {
    let v = validate_att(a);
    if !v.is_empty() {
        return Err(ModelError::invalid(&v).into());
    }
    let a = normalize_root_rules(a);
    let annotation = build_annotation_relabeling(&a)?;
    let applier = build_rule_applier(&a)?;
    let applier_domain = datt_domain_automaton(&applier)?;
    let restricted = restrict_range(&annotation, &applier_domain)?;
    let around = uniformize_topdown(&restricted);
    let result = AttWithLookAround::new(format!("{}_det", a.name), around.clone(), applier.clone())?;
    Ok(UniformizerBundle {
        annotation,
        applier,
        applier_domain,
        restricted,
        around,
        result,
    })
}

/// Uniformizes an att with look-around: the core is uniformized and the
/// resulting look-around is composed after the given one.
pub fn uniformize_attu(a: &AttWithLookAround) -> Result<AttWithLookAround, EvalError> {
    let bundle = uniformize_att(&a.core)?;
    let around = compose_lookarounds(&a.around, &bundle.around)?;
    Ok(AttWithLookAround::new(
        format!("{}_det", a.name),
        around,
        bundle.applier,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{enumerate_uniform, eval_dattu, run_lookaround, run_topdown_relabeling_all};
    use crate::fixtures;
    use crate::trees::{enumerate_trees, parse_tree};

    #[test]
    fn annotated_names_round_trip() {
        assert_eq!(&*annotated_name("f", &[0, 2]), "f@{0,2}");
        assert_eq!(&*annotated_name("e", &[]), "e@{}");
        assert_eq!(parse_annotated_name("f@{0,2}"), Some(("f", vec![0, 2])));
        assert_eq!(parse_annotated_name("e@{}"), Some(("e", vec![])));
    }

    #[test]
    fn annotation_counts_follow_subsets() {
        let a = fixtures::run();
        let t = build_annotation_relabeling(&a).unwrap();
        assert_eq!(t.rules_for(0, "f").count(), 12);
        assert_eq!(t.rules_for(0, "g").count(), 24);
        assert_eq!(t.rules_for(0, "e").count(), 4);
        let outs = run_topdown_relabeling_all(&t, &parse_tree("e", None).unwrap());
        assert_eq!(outs.len(), 4);
    }

    #[test]
    fn applier_copies_chosen_rules() {
        let a = fixtures::run();
        let d = build_rule_applier(&a).unwrap();
        assert!(crate::model::is_deterministic(&d));
        let rules = d.rules_for("f@{0,3}");
        assert_eq!(rules, &[a.rules_for("f")[0].clone(), a.rules_for("f")[3].clone()]);
        assert!(d.rules_for("e@{}").is_empty());
    }

    #[test]
    fn identity_topdown_is_kept() {
        let al = fixtures::ex1().input;
        let id = crate::model::identity_lookaround(&al);
        let u = uniformize_topdown(&id.top);
        for s in enumerate_trees(&al, 5) {
            assert_eq!(run_lookaround(&u, &s), Some(s.clone()));
        }
    }

    #[test]
    fn uniformized_run_example_stays_uniform() {
        let a = fixtures::run();
        let b = uniformize_att(&a).unwrap();
        let s = parse_tree("g(g(e))", None).unwrap();
        let out = eval_dattu(&b.result, &s).unwrap().unwrap().into_ground().unwrap();
        assert!(enumerate_uniform(&a, &s).unwrap().contains(&out));
    }

    #[test]
    fn rebuilding_is_stable() {
        let a = fixtures::run();
        assert_eq!(uniformize_att(&a).unwrap(), uniformize_att(&a).unwrap());
    }
}
