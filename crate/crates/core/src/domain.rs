//! Domains of deterministic atts as bottom-up tree automata.
//!
//! A subtree is summarized, per synthesized attribute, by whether its normal
//! form exists within the subtree and, if so, which inherited attributes of
//! the subtree root occur in it. Groundness in any context depends only on
//! that summary, so summaries are the states of a deterministic automaton.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::eval::{CRhs, CRule, Compiled, EvalError};
use crate::model::{explore, is_deterministic, root_rules_unambiguous, Att, AttWithLookAround, BottomUpAutomaton};
use crate::trees::{Name, Tree};

/// A set of attribute indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    fn insert(&mut self, i: usize) {
        let (w, b) = (i / 64, i % 64);
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }

    fn union_with(&mut self, other: &Bits) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (x, y) in self.0.iter_mut().zip(&other.0) {
            *x |= y;
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(w, &word)| (0..64).filter(move |b| word >> b & 1 == 1).map(move |b| w * 64 + b))
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

/// Per synthesized attribute: the inherited attributes occurring in its
/// normal form, or `None` if it has none.
pub(crate) type Summary = Vec<Option<Bits>>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SynSummary {
    /// The inherited attributes (declaration order) left in the normal form.
    Defined(Vec<Name>),
    /// Stuck or cyclic.
    Undefined,
}

/// One [`SynSummary`] per synthesized attribute, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DomainSummary(pub Vec<SynSummary>);

impl DomainSummary {
    fn from_internal(c: &Compiled, s: &Summary) -> Self {
        DomainSummary(
            s.iter()
                .map(|e| match e {
                    None => SynSummary::Undefined,
                    Some(bits) => SynSummary::Defined(bits.iter().map(|b| c.attrs[c.n_syn + b].clone()).collect()),
                })
                .collect(),
        )
    }

    fn to_internal(&self, c: &Compiled) -> Result<Summary, EvalError> {
        if self.0.len() != c.n_syn {
            return Err(EvalError::MalformedForm(
                "summary does not cover every synthesized attribute".into(),
            ));
        }
        self.0
            .iter()
            .map(|e| match e {
                SynSummary::Undefined => Ok(None),
                SynSummary::Defined(names) => {
                    let mut bits = Bits::default();
                    for n in names {
                        let i = c.attrs[c.n_syn..]
                            .iter()
                            .position(|a| a == n)
                            .ok_or_else(|| EvalError::MalformedForm(format!("`{n}` is not inherited")))?;
                        bits.insert(i);
                    }
                    Ok(Some(bits))
                }
            })
            .collect()
    }
}

impl fmt::Display for DomainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match e {
                SynSummary::Undefined => f.write_str("undefined")?,
                SynSummary::Defined(bs) => {
                    f.write_str("{")?;
                    for (j, b) in bs.iter().enumerate() {
                        if j > 0 {
                            f.write_str(",")?;
                        }
                        f.write_str(b)?;
                    }
                    f.write_str("}")?;
                }
            }
        }
        f.write_str("]")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    /// A synthesized attribute at the current node.
    Top(usize),
    /// A synthesized attribute at child `i` (1-based).
    Kid(usize, usize),
    /// An inherited attribute of child `i`, resolved by the current rules.
    Res(usize, usize),
}

enum Mark {
    Active,
    Done(Option<Bits>),
}

/// Demand-driven evaluation over the finite set of occurrences visible from
/// one node: its own synthesized attributes, those of its children (through
/// their summaries), and the inherited attributes it passes down.
struct Abstract<'a> {
    c: &'a Compiled,
    rules: &'a [CRule],
    kids: &'a [&'a Summary],
    memo: HashMap<Key, Mark>,
}

impl Abstract<'_> {
    fn reach(&mut self, key: Key) -> Option<Bits> {
        match self.memo.get(&key) {
            Some(Mark::Active) => return None,
            Some(Mark::Done(r)) => return r.clone(),
            None => {}
        }
        self.memo.insert(key, Mark::Active);
        let r = self.compute(key);
        self.memo.insert(key, Mark::Done(r.clone()));
        r
    }

    fn compute(&mut self, key: Key) -> Option<Bits> {
        match key {
            Key::Top(a) => {
                let rule = self.rules.iter().find(|r| r.attr == a && r.child == 0)?;
                self.rhs(&rule.rhs)
            }
            Key::Res(b, i) => {
                let rule = self.rules.iter().find(|r| r.attr == b && r.child == i)?;
                self.rhs(&rule.rhs)
            }
            Key::Kid(a, i) => {
                let beta = self.kids[i - 1][a].clone()?;
                let mut acc = Bits::default();
                for b in beta.iter() {
                    acc.union_with(&self.reach(Key::Res(self.c.n_syn + b, i))?);
                }
                Some(acc)
            }
        }
    }

    fn rhs(&mut self, rhs: &CRhs) -> Option<Bits> {
        match rhs {
            CRhs::Out(_, kids) => {
                let mut acc = Bits::default();
                for k in kids {
                    acc.union_with(&self.rhs(k)?);
                }
                Some(acc)
            }
            CRhs::Syn(a, i) => self.reach(Key::Kid(*a, *i)),
            CRhs::Inh(b) => {
                let mut bits = Bits::default();
                bits.insert(b - self.c.n_syn);
                Some(bits)
            }
        }
    }
}

pub(crate) fn transition(c: &Compiled, sym: usize, kids: &[&Summary]) -> Summary {
    let mut abs = Abstract {
        c,
        rules: &c.rules[sym],
        kids,
        memo: HashMap::new(),
    };
    (0..c.n_syn).map(|a| abs.reach(Key::Top(a))).collect()
}

pub(crate) fn accepts_at_root(c: &Compiled, summary: &Summary) -> bool {
    let kids = [summary];
    let mut abs = Abstract {
        c,
        rules: &c.root,
        kids: &kids,
        memo: HashMap::new(),
    };
    abs.reach(Key::Kid(c.initial, 1)).is_some_and(|b| b.is_empty())
}

fn check_datt(d: &Att) -> Result<Compiled, EvalError> {
    if !is_deterministic(d) {
        return Err(EvalError::Nondeterministic(d.name.clone()));
    }
    if !root_rules_unambiguous(d) {
        return Err(EvalError::AmbiguousRoot(d.name.clone()));
    }
    Compiled::new(d)
}

/// The summary of `σ(s1..sk)` given the summaries of `s1..sk`.
pub fn summary_transition(d: &Att, sigma: &str, children: &[DomainSummary]) -> Result<DomainSummary, EvalError> {
    let c = check_datt(d)?;
    let sym = d
        .input
        .index_of(sigma)
        .ok_or_else(|| EvalError::Tree(crate::trees::TreeError::UnknownSymbol(sigma.to_string())))?;
    let rank = d.input.rank(sigma).expect("indexed symbol");
    if rank != children.len() {
        return Err(EvalError::Tree(crate::trees::TreeError::ArityMismatch {
            symbol: sigma.to_string(),
            expected: rank,
            found: children.len(),
        }));
    }
    let kids = children
        .iter()
        .map(|k| k.to_internal(&c))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&Summary> = kids.iter().collect();
    Ok(DomainSummary::from_internal(&c, &transition(&c, sym, &refs)))
}

/// The summary of a whole tree.
pub fn tree_summary(d: &Att, s: &Tree) -> Result<DomainSummary, EvalError> {
    let c = check_datt(d)?;
    s.validate(&d.input)?;
    fn go(c: &Compiled, s: &Tree) -> Summary {
        let kids: Vec<Summary> = s.children().iter().map(|k| go(c, k)).collect();
        let refs: Vec<&Summary> = kids.iter().collect();
        transition(c, c.input.index_of(s.label()).expect("validated"), &refs)
    }
    Ok(DomainSummary::from_internal(&c, &go(&c, s)))
}

/// Whether `a0(1)` grounds for a tree with this summary, resolving the
/// remaining inherited attributes through the root rules.
pub fn root_accepts(d: &Att, summary: &DomainSummary) -> Result<bool, EvalError> {
    let c = check_datt(d)?;
    Ok(accepts_at_root(&c, &summary.to_internal(&c)?))
}

pub(crate) fn compiled_domain_automaton(c: &Compiled, name: &str) -> BottomUpAutomaton {
    let reach = explore(&c.input, |sym, _, kids: &[Summary]| {
        let refs: Vec<&Summary> = kids.iter().collect();
        Some(transition(c, c.input.index_of(sym).expect("alphabet symbol"), &refs))
    });
    let states: Vec<Name> = (0..reach.states.len()).map(|i| Name::from(format!("d{i}"))).collect();
    let finals = reach.states.iter().map(|s| accepts_at_root(c, s)).collect();
    let transitions: BTreeMap<(Name, Vec<usize>), usize> =
        reach.transitions.into_iter().map(|(s, k, t)| ((s, k), t)).collect();
    BottomUpAutomaton::from_parts(name, c.input.clone(), states, finals, transitions)
        .expect("explored transitions are well-formed")
}

/// A deterministic bottom-up automaton accepting exactly the trees on which
/// `d` produces an output. States are the reachable summaries, named `d0`,
/// `d1`, ... in discovery order.
pub fn datt_domain_automaton(d: &Att) -> Result<BottomUpAutomaton, EvalError> {
    let c = check_datt(d)?;
    Ok(compiled_domain_automaton(&c, &format!("{}_dom", d.name)))
}

pub fn automaton_accepts(m: &BottomUpAutomaton, s: &Tree) -> bool {
    m.accepts(s)
}

/// A deterministic bottom-up automaton accepting exactly the trees on which
/// the look-around is defined and the core att then produces an output.
///
/// A state pairs the look-around's bottom-up state with a table giving, for
/// each top-down state, the core-domain state reached by the relabeled
/// subtree (or nothing when the top-down part is stuck).
pub fn dattu_domain_automaton(d: &AttWithLookAround) -> Result<BottomUpAutomaton, EvalError> {
    let m = datt_domain_automaton(&d.core)?;
    let b = &d.around.bottom;
    let t = &d.around.top;
    let nq = t.states().len();
    type State = (usize, Vec<Option<usize>>);
    let reach = explore(b.input(), |sym, _, kids: &[State]| {
        let ps: Vec<usize> = kids.iter().map(|k| k.0).collect();
        let r = b.transition(sym, &ps)?;
        let table = (0..nq)
            .map(|q| {
                let tr = t.rules_for(q, &r.output).next()?;
                let ms = tr
                    .children
                    .iter()
                    .zip(kids)
                    .map(|(&qi, k)| k.1[qi])
                    .collect::<Option<Vec<_>>>()?;
                m.step(&tr.output, &ms)
            })
            .collect();
        Some((r.state, table))
    });
    let q0 = t.initials()[0];
    let finals = reach
        .states
        .iter()
        .map(|(p, table)| b.is_final(*p) && table[q0].is_some_and(|x| m.is_final(x)))
        .collect();
    let states: Vec<Name> = (0..reach.states.len()).map(|i| Name::from(format!("u{i}"))).collect();
    let transitions = reach.transitions.into_iter().map(|(s, k, t)| ((s, k), t)).collect();
    Ok(BottomUpAutomaton::from_parts(
        format!("{}_dom", d.name),
        b.input().clone(),
        states,
        finals,
        transitions,
    )
    .expect("explored transitions are well-formed"))
}
