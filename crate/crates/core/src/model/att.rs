use std::collections::{BTreeMap, HashSet};
use std::fmt;

use indexmap::IndexMap;

use crate::names::NameGen;
use crate::trees::{Name, RankedAlphabet};

/// Left-hand side of a rule: `a(pi)` or `b(pi.i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lhs {
    Syn(Name),
    Inh(Name, usize),
}

impl Lhs {
    pub fn attribute(&self) -> &Name {
        match self {
            Lhs::Syn(a) | Lhs::Inh(a, _) => a,
        }
    }
}

impl fmt::Display for Lhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lhs::Syn(a) => write!(f, "{a}(pi)"),
            Lhs::Inh(b, i) => write!(f, "{b}(pi.{i})"),
        }
    }
}

/// Right-hand side: an output tree whose leaves may be `a(pi.i)` or `b(pi)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rhs {
    Out(Name, Vec<Rhs>),
    Syn(Name, usize),
    Inh(Name),
}

impl Rhs {
    pub fn leaf(name: impl Into<Name>) -> Self {
        Rhs::Out(name.into(), Vec::new())
    }

    /// Visits every attribute leaf, left to right.
    pub fn for_each_ref(&self, f: &mut impl FnMut(&Rhs)) {
        match self {
            Rhs::Out(_, kids) => kids.iter().for_each(|k| k.for_each_ref(f)),
            leaf => f(leaf),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Rhs::Out(_, kids) => 1 + kids.iter().map(Rhs::depth).max().unwrap_or(0),
            _ => 1,
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Out(s, kids) => {
                f.write_str(s)?;
                if !kids.is_empty() {
                    f.write_str("(")?;
                    for (i, k) in kids.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{k}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            Rhs::Syn(a, i) => write!(f, "{a}(pi.{i})"),
            Rhs::Inh(b) => write!(f, "{b}(pi)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub lhs: Lhs,
    pub rhs: Rhs,
}

impl Rule {
    pub fn new(lhs: Lhs, rhs: Rhs) -> Self {
        Self { lhs, rhs }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)
    }
}

/// A (possibly nondeterministic, possibly circular) attributed tree transducer.
///
/// `rules` holds the ordered rule list of every input symbol; `root_rules` is
/// the rule list of the root marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Att {
    pub name: String,
    pub input: RankedAlphabet,
    pub output: RankedAlphabet,
    pub syn: Vec<Name>,
    pub inh: Vec<Name>,
    pub initial: Name,
    pub rules: IndexMap<Name, Vec<Rule>>,
    pub root_rules: Vec<Rule>,
}

impl Att {
    /// An att with no rules; every input symbol gets an empty rule list.
    pub fn new(
        name: impl Into<String>,
        input: RankedAlphabet,
        output: RankedAlphabet,
        syn: Vec<Name>,
        inh: Vec<Name>,
        initial: Name,
    ) -> Self {
        let rules = input.iter().map(|(s, _)| (s.clone(), Vec::new())).collect();
        Self {
            name: name.into(),
            input,
            output,
            syn,
            inh,
            initial,
            rules,
            root_rules: Vec::new(),
        }
    }

    pub fn rules_for(&self, symbol: &str) -> &[Rule] {
        self.rules.get(symbol).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_syn(&self, name: &str) -> bool {
        self.syn.iter().any(|a| &**a == name)
    }

    pub fn is_inh(&self, name: &str) -> bool {
        self.inh.iter().any(|a| &**a == name)
    }

    pub fn rule_count(&self) -> usize {
        self.rules.values().map(Vec::len).sum::<usize>() + self.root_rules.len()
    }

    fn all_rule_sets(&self) -> impl Iterator<Item = (Option<&Name>, &[Rule])> + '_ {
        self.rules
            .iter()
            .map(|(s, r)| (Some(s), r.as_slice()))
            .chain(std::iter::once((None, self.root_rules.as_slice())))
    }
}

/// One problem found by [`validate_att`], with a locator such as `rules f #2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub locator: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.locator, self.message)
    }
}

/// Checks every structural invariant of an att; an empty list means valid.
pub fn validate_att(a: &Att) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |locator: String, message: &str| {
        out.push(Violation {
            locator,
            message: message.to_string(),
        })
    };
    let mut seen = HashSet::new();
    for x in a.syn.iter().chain(&a.inh) {
        if !seen.insert(x.clone()) {
            push(format!("attribute {x}"), "attribute declared twice or in both S and I");
        }
    }
    if !a.is_syn(&a.initial) {
        push(format!("initial {}", a.initial), "initial attribute is not synthesized");
    }
    for sym in a.rules.keys() {
        if !a.input.contains(sym) {
            push(format!("rules {sym}"), "rules for unknown input symbol");
        }
    }
    for (sym, rules) in a.all_rule_sets() {
        let set_name = sym.map(|s| s.to_string()).unwrap_or_else(|| "root".to_string());
        let rank = match sym {
            Some(s) => a.input.rank(s).unwrap_or(0),
            None => 1,
        };
        let mut distinct = HashSet::new();
        for (i, rule) in rules.iter().enumerate() {
            let loc = format!("rules {set_name} #{i}");
            if !distinct.insert(rule) {
                push(loc.clone(), "duplicate rule");
            }
            match &rule.lhs {
                Lhs::Syn(x) => {
                    if sym.is_none() {
                        push(loc.clone(), "root rule has a synthesized attribute on the left");
                    }
                    if !a.is_syn(x) {
                        push(loc.clone(), "undeclared synthesized attribute on the left");
                    }
                }
                Lhs::Inh(x, j) => {
                    if !a.is_inh(x) {
                        push(loc.clone(), "undeclared inherited attribute on the left");
                    }
                    if *j == 0 || *j > rank {
                        push(loc.clone(), "child index exceeds rank");
                    }
                }
            }
            check_rhs(a, &rule.rhs, rank, sym.is_none(), &loc, &mut push);
        }
    }
    out
}

fn check_rhs(a: &Att, rhs: &Rhs, rank: usize, root: bool, loc: &str, push: &mut impl FnMut(String, &str)) {
    match rhs {
        Rhs::Out(s, kids) => {
            match a.output.rank(s) {
                None => push(loc.to_string(), "unknown output symbol"),
                Some(k) if k != kids.len() => push(loc.to_string(), "output arity mismatch"),
                Some(_) => {}
            }
            for k in kids {
                check_rhs(a, k, rank, root, loc, push);
            }
        }
        Rhs::Syn(x, j) => {
            if !a.is_syn(x) {
                push(loc.to_string(), "undeclared synthesized attribute on the right");
            }
            if *j == 0 || *j > rank {
                push(loc.to_string(), "child index exceeds rank");
            }
        }
        Rhs::Inh(x) => {
            if root {
                push(loc.to_string(), "root rule rhs contains inherited reference");
            } else if !a.is_inh(x) {
                push(loc.to_string(), "undeclared inherited attribute on the right");
            }
        }
    }
}

fn unambiguous_list(rules: &[Rule]) -> bool {
    let mut seen = HashSet::new();
    rules.iter().all(|r| seen.insert(&r.lhs))
}

/// True iff no rule set, including the root rules, has two rules with the
/// same left-hand side.
pub fn is_deterministic(a: &Att) -> bool {
    a.all_rule_sets().all(|(_, rules)| unambiguous_list(rules))
}

pub fn root_rules_unambiguous(a: &Att) -> bool {
    unambiguous_list(&a.root_rules)
}

/// Every subset of `rules` with at most one rule per left-hand side, as
/// sorted index lists in lexicographic order (the empty subset first).
pub fn unambiguous_subsets(rules: &[Rule]) -> Vec<Vec<usize>> {
    let mut groups: IndexMap<&Lhs, Vec<usize>> = IndexMap::new();
    for (i, r) in rules.iter().enumerate() {
        groups.entry(&r.lhs).or_default().push(i);
    }
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new()];
    for members in groups.values() {
        let mut next = Vec::with_capacity(subsets.len() * (members.len() + 1));
        for s in &subsets {
            next.push(s.clone());
            for &m in members {
                let mut t = s.clone();
                t.push(m);
                next.push(t);
            }
        }
        subsets = next;
    }
    for s in &mut subsets {
        s.sort_unstable();
    }
    subsets.sort();
    subsets
}

/// Rewrites `a` so that the root rules contain at most one rule per
/// inherited attribute, without changing the translation.
///
/// An inherited `b` with `m > 1` root rules is split into fresh copies
/// `b^1..b^m`; copy `j` inherits all of `b`'s rules and exactly the `j`-th
/// root rule, and every occurrence `c(pi)` on a right-hand side may be
/// redirected to `c` or any of its copies.
pub fn normalize_root_rules(a: &Att) -> Att {
    if root_rules_unambiguous(a) {
        return a.clone();
    }
    let mut root_by_attr: IndexMap<Name, Vec<usize>> = IndexMap::new();
    for (i, r) in a.root_rules.iter().enumerate() {
        if let Lhs::Inh(b, _) = &r.lhs {
            root_by_attr.entry(b.clone()).or_default().push(i);
        }
    }
    let mut gen = NameGen::new(a.syn.iter().chain(&a.inh).cloned());
    let mut copies: BTreeMap<Name, Vec<Name>> = BTreeMap::new();
    let mut inh = a.inh.clone();
    for (b, idx) in &root_by_attr {
        if idx.len() > 1 {
            let fresh: Vec<Name> = (1..=idx.len()).map(|j| gen.fresh(&format!("{b}^{j}"))).collect();
            inh.extend(fresh.iter().cloned());
            copies.insert(b.clone(), fresh);
        }
    }

    let mut rules: IndexMap<Name, Vec<Rule>> = IndexMap::new();
    for (sym, list) in &a.rules {
        let mut out = Vec::new();
        for rule in list {
            let mut lhss = vec![rule.lhs.clone()];
            if let Lhs::Inh(b, i) = &rule.lhs {
                if let Some(cs) = copies.get(b) {
                    lhss.extend(cs.iter().map(|c| Lhs::Inh(c.clone(), *i)));
                }
            }
            let variants = rhs_variants(&rule.rhs, &copies);
            for lhs in lhss {
                for rhs in &variants {
                    out.push(Rule::new(lhs.clone(), rhs.clone()));
                }
            }
        }
        rules.insert(sym.clone(), out);
    }

    let mut root_rules = Vec::new();
    for (k, r) in a.root_rules.iter().enumerate() {
        match &r.lhs {
            Lhs::Inh(b, i) if copies.contains_key(b) => {
                let j = root_by_attr[b].iter().position(|&x| x == k).expect("root rule indexed");
                root_rules.push(Rule::new(Lhs::Inh(copies[b][j].clone(), *i), r.rhs.clone()));
            }
            _ => root_rules.push(r.clone()),
        }
    }

    Att {
        name: a.name.clone(),
        input: a.input.clone(),
        output: a.output.clone(),
        syn: a.syn.clone(),
        inh,
        initial: a.initial.clone(),
        rules,
        root_rules,
    }
}

fn rhs_variants(rhs: &Rhs, copies: &BTreeMap<Name, Vec<Name>>) -> Vec<Rhs> {
    match rhs {
        Rhs::Inh(c) => {
            let mut v = vec![rhs.clone()];
            if let Some(cs) = copies.get(c) {
                v.extend(cs.iter().map(|x| Rhs::Inh(x.clone())));
            }
            v
        }
        Rhs::Syn(..) => vec![rhs.clone()],
        Rhs::Out(s, kids) => {
            let pools: Vec<Vec<Rhs>> = kids.iter().map(|k| rhs_variants(k, copies)).collect();
            let refs: Vec<&Vec<Rhs>> = pools.iter().collect();
            crate::trees::cartesian(&refs)
                .into_iter()
                .map(|ks| Rhs::Out(s.clone(), ks))
                .collect()
        }
    }
}
