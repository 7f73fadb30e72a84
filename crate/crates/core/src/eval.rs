//! Derivation semantics: demand-driven evaluation of deterministic atts,
//! relabeling and look-around runs, and two oracles for the translation of a
//! nondeterministic att (uniform rule-choice search and bounded derivation
//! search).

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexSet;

use thiserror::Error;

use crate::model::{
    is_deterministic, root_rules_unambiguous, validate_att, Att, AttWithLookAround, BottomUpRelabeling, Lhs,
    LookAround, ModelError, Rhs, TopDownRelabeling,
};
use crate::trees::{canonical_order, cartesian, Name, NodeAddress, RankedAlphabet, Tree, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("att `{0}` is not deterministic")]
    Nondeterministic(String),
    #[error("att `{0}` has more than one root rule for some inherited attribute")]
    AmbiguousRoot(String),
    #[error("malformed sentential form: {0}")]
    MalformedForm(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
}

/// `α(v)`, with `v` an address of the input tree (the real root is `ε`).
/// Displayed under the root marker, so the real root prints as `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrOccurrence {
    pub attribute: Name,
    pub node: NodeAddress,
}

impl fmt::Display for AttrOccurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.attribute, self.node.marked())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    Ground(Tree),
    /// The first demanded occurrence without an applicable rule.
    Stuck(AttrOccurrence),
    /// A dependency cycle; the first and last entries coincide.
    Divergent(Vec<AttrOccurrence>),
}

impl EvalOutcome {
    pub fn ground(&self) -> Option<&Tree> {
        match self {
            EvalOutcome::Ground(t) => Some(t),
            _ => None,
        }
    }

    pub fn into_ground(self) -> Option<Tree> {
        match self {
            EvalOutcome::Ground(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for EvalOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalOutcome::Ground(t) => write!(f, "{t}"),
            EvalOutcome::Stuck(o) => write!(f, "stuck at {o}"),
            EvalOutcome::Divergent(w) => {
                f.write_str("divergent: ")?;
                for (i, o) in w.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" -> ")?;
                    }
                    write!(f, "{o}")?;
                }
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Index-compiled atts and subject trees

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum CRhs {
    Out(Name, Vec<CRhs>),
    Syn(usize, usize),
    Inh(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct CRule {
    pub attr: usize,
    pub child: usize,
    pub rhs: CRhs,
}

/// An att with attributes and input symbols replaced by indices. Attributes
/// are numbered synthesized first, then inherited.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub attrs: Vec<Name>,
    pub n_syn: usize,
    pub rules: Vec<Vec<CRule>>,
    pub root: Vec<CRule>,
    pub initial: usize,
    pub input: RankedAlphabet,
}

impl Compiled {
    pub fn new(a: &Att) -> Result<Self, EvalError> {
        let violations = validate_att(a);
        if !violations.is_empty() {
            return Err(ModelError::invalid(&violations).into());
        }
        let attrs: Vec<Name> = a.syn.iter().chain(&a.inh).cloned().collect();
        let ix: HashMap<&Name, usize> = attrs.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let compile_rhs = |r: &Rhs| -> CRhs {
            fn go(r: &Rhs, ix: &HashMap<&Name, usize>) -> CRhs {
                match r {
                    Rhs::Out(s, kids) => CRhs::Out(s.clone(), kids.iter().map(|k| go(k, ix)).collect()),
                    Rhs::Syn(a, i) => CRhs::Syn(ix[a], *i),
                    Rhs::Inh(b) => CRhs::Inh(ix[b]),
                }
            }
            go(r, &ix)
        };
        let compile_rule = |r: &crate::model::Rule| -> CRule {
            let (attr, child) = match &r.lhs {
                Lhs::Syn(a) => (ix[a], 0),
                Lhs::Inh(b, i) => (ix[b], *i),
            };
            CRule {
                attr,
                child,
                rhs: compile_rhs(&r.rhs),
            }
        };
        let rules = a
            .input
            .iter()
            .map(|(s, _)| a.rules_for(s).iter().map(compile_rule).collect())
            .collect();
        let root = a.root_rules.iter().map(compile_rule).collect();
        Ok(Self {
            n_syn: a.syn.len(),
            initial: ix[&a.initial],
            rules,
            root,
            input: a.input.clone(),
            attrs,
        })
    }

    pub fn n_attrs(&self) -> usize {
        self.attrs.len()
    }

    pub fn rule_list(&self, site: Site, s: &Subject) -> &[CRule] {
        match site {
            Site::Root => &self.root,
            Site::Node(v) => &self.rules[s.sym[v]],
        }
    }

    /// Where the rule defining `(attr, node)` lives, and its child index.
    pub fn site_of(&self, attr: usize, node: usize, s: &Subject) -> (Site, usize) {
        if attr < self.n_syn {
            (Site::Node(node), 0)
        } else if node == 0 {
            (Site::Root, 1)
        } else {
            (Site::Node(s.parent[node]), s.index[node])
        }
    }
}

/// An input tree flattened in pre-order (node 0 is the real root).
#[derive(Debug, Clone)]
pub(crate) struct Subject {
    pub sym: Vec<usize>,
    pub parent: Vec<usize>,
    pub index: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    pub addr: Vec<NodeAddress>,
}

impl Subject {
    pub fn new(t: &Tree, alphabet: &RankedAlphabet) -> Result<Self, TreeError> {
        t.validate(alphabet)?;
        let mut s = Subject {
            sym: Vec::new(),
            parent: Vec::new(),
            index: Vec::new(),
            children: Vec::new(),
            addr: Vec::new(),
        };
        fn go(t: &Tree, parent: usize, index: usize, addr: NodeAddress, al: &RankedAlphabet, s: &mut Subject) -> usize {
            let id = s.sym.len();
            s.sym.push(al.index_of(t.label()).expect("validated"));
            s.parent.push(parent);
            s.index.push(index);
            s.children.push(Vec::new());
            s.addr.push(addr.clone());
            for (i, c) in t.children().iter().enumerate() {
                let k = go(c, id, i + 1, addr.child(i + 1), al, s);
                s.children[id].push(k);
            }
            id
        }
        go(t, usize::MAX, 0, NodeAddress::root(), alphabet, &mut s);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.sym.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Site {
    Root,
    Node(usize),
}

pub(crate) enum Pick<'c> {
    Rule(&'c CRule),
    Missing,
    Need,
}

/// Chooses the rule used for an occurrence during evaluation.
pub(crate) trait Resolver<'c> {
    fn pick(&mut self, occ: usize, site: Site, attr: usize, child: usize) -> Pick<'c>;
}

pub(crate) enum Halt {
    Stuck(usize),
    Divergent(Vec<usize>),
    Need,
}

enum Slot {
    Todo,
    Active,
    Done(usize),
}

/// Memoizing demand-driven evaluator; re-entering an active occurrence is a
/// cycle. Values are nodes of a shared output graph, so an attribute used
/// many times is built once; the tree is unfolded only at the end.
pub(crate) struct Evaluator<'c, 's, R> {
    c: &'c Compiled,
    s: &'s Subject,
    res: R,
    memo: Vec<Slot>,
    stack: Vec<usize>,
    nodes: Vec<(Name, Vec<usize>)>,
}

impl<'c, 's, R: Resolver<'c>> Evaluator<'c, 's, R> {
    pub fn new(c: &'c Compiled, s: &'s Subject, res: R) -> Self {
        let n = c.n_attrs() * s.len();
        Self {
            c,
            s,
            res,
            memo: (0..n).map(|_| Slot::Todo).collect(),
            stack: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn resolver(&self) -> &R {
        &self.res
    }

    pub fn eval_root(&mut self) -> Result<Tree, Halt> {
        let root = self.eval(self.c.initial)?;
        Ok(self.unfold(root))
    }

    fn unfold(&self, id: usize) -> Tree {
        let (sym, kids) = &self.nodes[id];
        Tree::new(sym.clone(), kids.iter().map(|&k| self.unfold(k)).collect())
    }

    fn eval(&mut self, occ: usize) -> Result<usize, Halt> {
        match &self.memo[occ] {
            Slot::Done(t) => return Ok(*t),
            Slot::Active => {
                let pos = self
                    .stack
                    .iter()
                    .position(|&o| o == occ)
                    .expect("active occurrence on stack");
                let mut cycle = self.stack[pos..].to_vec();
                cycle.push(occ);
                return Err(Halt::Divergent(cycle));
            }
            Slot::Todo => {}
        }
        let na = self.c.n_attrs();
        let (attr, node) = (occ % na, occ / na);
        let (site, child) = self.c.site_of(attr, node, self.s);
        let rule = match self.res.pick(occ, site, attr, child) {
            Pick::Rule(r) => r,
            Pick::Missing => return Err(Halt::Stuck(occ)),
            Pick::Need => return Err(Halt::Need),
        };
        self.memo[occ] = Slot::Active;
        self.stack.push(occ);
        let t = self.instantiate(&rule.rhs, site)?;
        self.stack.pop();
        self.memo[occ] = Slot::Done(t);
        Ok(t)
    }

    fn instantiate(&mut self, rhs: &'c CRhs, site: Site) -> Result<usize, Halt> {
        let na = self.c.n_attrs();
        match rhs {
            CRhs::Out(sym, kids) => {
                let kids = kids
                    .iter()
                    .map(|k| self.instantiate(k, site))
                    .collect::<Result<Vec<_>, _>>()?;
                self.nodes.push((sym.clone(), kids));
                Ok(self.nodes.len() - 1)
            }
            CRhs::Syn(a, i) => {
                let node = match site {
                    Site::Root => 0,
                    Site::Node(v) => self.s.children[v][i - 1],
                };
                self.eval(node * na + a)
            }
            CRhs::Inh(b) => match site {
                Site::Node(v) => self.eval(v * na + b),
                Site::Root => unreachable!("root rules never reference inherited attributes"),
            },
        }
    }
}

fn occurrence(c: &Compiled, s: &Subject, occ: usize) -> AttrOccurrence {
    let na = c.n_attrs();
    AttrOccurrence {
        attribute: c.attrs[occ % na].clone(),
        node: s.addr[occ / na].clone(),
    }
}

fn outcome(c: &Compiled, s: &Subject, r: Result<Tree, Halt>) -> EvalOutcome {
    match r {
        Ok(t) => EvalOutcome::Ground(t),
        Err(Halt::Stuck(o)) => EvalOutcome::Stuck(occurrence(c, s, o)),
        Err(Halt::Divergent(w)) => EvalOutcome::Divergent(w.into_iter().map(|o| occurrence(c, s, o)).collect()),
        Err(Halt::Need) => unreachable!("deterministic resolution never branches"),
    }
}

/// Resolves each occurrence with the first matching rule.
pub(crate) struct FirstRule<'c, 's> {
    pub c: &'c Compiled,
    pub s: &'s Subject,
}

impl<'c> Resolver<'c> for FirstRule<'c, '_> {
    fn pick(&mut self, _occ: usize, site: Site, attr: usize, child: usize) -> Pick<'c> {
        match self
            .c
            .rule_list(site, self.s)
            .iter()
            .find(|r| r.attr == attr && r.child == child)
        {
            Some(r) => Pick::Rule(r),
            None => Pick::Missing,
        }
    }
}

/// Evaluates a deterministic att on `s`.
pub fn eval_datt(d: &Att, s: &Tree) -> Result<EvalOutcome, EvalError> {
    if !is_deterministic(d) {
        return Err(EvalError::Nondeterministic(d.name.clone()));
    }
    let c = Compiled::new(d)?;
    let subj = Subject::new(s, &d.input)?;
    let mut ev = Evaluator::new(&c, &subj, FirstRule { c: &c, s: &subj });
    let r = ev.eval_root();
    Ok(outcome(&c, &subj, r))
}

// ---------------------------------------------------------------------------
// Relabelings and look-arounds

/// Result of a complete bottom-up relabeling run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BottomUpRun {
    pub state: Name,
    pub is_final: bool,
    pub tree: Tree,
}

pub(crate) fn bottomup_states(b: &BottomUpRelabeling, s: &Tree) -> Option<(usize, Tree)> {
    let mut states = Vec::with_capacity(s.rank());
    let mut kids = Vec::with_capacity(s.rank());
    for c in s.children() {
        let (q, t) = bottomup_states(b, c)?;
        states.push(q);
        kids.push(t);
    }
    let r = b.transition(s.label(), &states)?;
    Some((r.state, Tree::new(r.output.clone(), kids)))
}

pub fn run_bottomup_relabeling(b: &BottomUpRelabeling, s: &Tree) -> Option<BottomUpRun> {
    let (q, tree) = bottomup_states(b, s)?;
    Some(BottomUpRun {
        state: b.states()[q].clone(),
        is_final: b.is_final(q),
        tree,
    })
}

fn topdown_from(t: &TopDownRelabeling, q: usize, s: &Tree) -> Vec<Tree> {
    let mut out = Vec::new();
    for r in t.rules_for(q, s.label()) {
        let pools: Vec<Vec<Tree>> = r
            .children
            .iter()
            .zip(s.children())
            .map(|(&qi, c)| topdown_from(t, qi, c))
            .collect();
        let refs: Vec<&Vec<Tree>> = pools.iter().collect();
        for kids in cartesian(&refs) {
            out.push(Tree::new(r.output.clone(), kids));
        }
    }
    out
}

/// Every output of `t` on `s`, over all initial states and rule choices.
pub fn run_topdown_relabeling_all(t: &TopDownRelabeling, s: &Tree) -> Vec<Tree> {
    canonical_order(t.initials().iter().flat_map(|&q| topdown_from(t, q, s)))
}

/// The output of `t` on `s` taking the first applicable rule everywhere; for a
/// deterministic relabeling this is its unique output.
pub fn run_topdown_first(t: &TopDownRelabeling, s: &Tree) -> Option<Tree> {
    fn go(t: &TopDownRelabeling, q: usize, s: &Tree) -> Option<Tree> {
        let r = t.rules_for(q, s.label()).next()?;
        let kids = r
            .children
            .iter()
            .zip(s.children())
            .map(|(&qi, c)| go(t, qi, c))
            .collect::<Option<Vec<_>>>()?;
        Some(Tree::new(r.output.clone(), kids))
    }
    go(t, *t.initials().first()?, s)
}

pub fn run_lookaround(u: &LookAround, s: &Tree) -> Option<Tree> {
    let run = run_bottomup_relabeling(&u.bottom, s)?;
    if !run.is_final {
        return None;
    }
    run_topdown_first(&u.top, &run.tree)
}

/// `None` when `s` lies outside the look-around's domain.
pub fn eval_dattu(d: &AttWithLookAround, s: &Tree) -> Result<Option<EvalOutcome>, EvalError> {
    if !is_deterministic(&d.core) {
        return Err(EvalError::Nondeterministic(d.core.name.clone()));
    }
    s.validate(d.input())?;
    match run_lookaround(&d.around, s) {
        None => Ok(None),
        Some(t) => eval_datt(&d.core, &t).map(Some),
    }
}

// ---------------------------------------------------------------------------
// Branching search over partial choices

enum Searched<S> {
    Leaf(Option<Tree>),
    Branch(Vec<S>),
}

fn search<S>(init: S, mut run: impl FnMut(&S) -> Searched<S>) -> Vec<Tree> {
    let mut found = Vec::new();
    let mut stack = vec![init];
    while let Some(st) = stack.pop() {
        match run(&st) {
            Searched::Leaf(Some(t)) => found.push(t),
            Searched::Leaf(None) => {}
            Searched::Branch(next) => stack.extend(next.into_iter().rev()),
        }
    }
    canonical_order(found)
}

/// Per-occurrence rule choice; only occurrences with several candidate rules
/// are ever recorded.
struct Uniform<'c, 's, 'm> {
    c: &'c Compiled,
    s: &'s Subject,
    chosen: &'m HashMap<usize, usize>,
    need: Option<(usize, Vec<usize>)>,
}

impl<'c> Resolver<'c> for Uniform<'c, '_, '_> {
    fn pick(&mut self, occ: usize, site: Site, attr: usize, child: usize) -> Pick<'c> {
        let list = self.c.rule_list(site, self.s);
        let options: Vec<usize> = (0..list.len())
            .filter(|&i| list[i].attr == attr && list[i].child == child)
            .collect();
        match options.len() {
            0 => Pick::Missing,
            1 => Pick::Rule(&list[options[0]]),
            _ => match self.chosen.get(&occ) {
                Some(&i) => Pick::Rule(&list[i]),
                None => {
                    self.need = Some((occ, options));
                    Pick::Need
                }
            },
        }
    }
}

/// The uniform translations of `a` at `s`: the ground results of
/// deterministic evaluation under every assignment of an unambiguous rule
/// subset to every node, in canonical order.
pub fn enumerate_uniform(a: &Att, s: &Tree) -> Result<Vec<Tree>, EvalError> {
    if !root_rules_unambiguous(a) {
        return Err(EvalError::AmbiguousRoot(a.name.clone()));
    }
    let c = Compiled::new(a)?;
    let subj = Subject::new(s, &a.input)?;
    Ok(search(HashMap::new(), |chosen: &HashMap<usize, usize>| {
        let res = Uniform {
            c: &c,
            s: &subj,
            chosen,
            need: None,
        };
        let mut ev = Evaluator::new(&c, &subj, res);
        match ev.eval_root() {
            Ok(t) => Searched::Leaf(Some(t)),
            Err(Halt::Need) => {
                let (occ, options) = ev.resolver().need.clone().expect("need recorded");
                Searched::Branch(
                    options
                        .into_iter()
                        .map(|i| {
                            let mut next = chosen.clone();
                            next.insert(occ, i);
                            next
                        })
                        .collect(),
                )
            }
            Err(_) => Searched::Leaf(None),
        }
    }))
}

/// Candidate labels per node, refined only where the choice matters.
struct Labels<'c, 'l> {
    c: &'c Compiled,
    cands: &'l [Vec<usize>],
    need: Option<(usize, usize, usize)>,
}

fn rule_at(c: &Compiled, sym: usize, attr: usize, child: usize) -> Option<&CRule> {
    c.rules[sym].iter().find(|r| r.attr == attr && r.child == child)
}

impl<'c> Resolver<'c> for Labels<'c, '_> {
    fn pick(&mut self, _occ: usize, site: Site, attr: usize, child: usize) -> Pick<'c> {
        let v = match site {
            Site::Root => {
                return match self.c.root.iter().find(|r| r.attr == attr && r.child == child) {
                    Some(r) => Pick::Rule(r),
                    None => Pick::Missing,
                }
            }
            Site::Node(v) => v,
        };
        let mut it = self.cands[v].iter().map(|&sym| rule_at(self.c, sym, attr, child));
        let first = it.next().expect("candidate sets are never empty");
        let key = first.map(|r| &r.rhs);
        if it.all(|r| r.map(|r| &r.rhs) == key) {
            match first {
                Some(r) => Pick::Rule(r),
                None => Pick::Missing,
            }
        } else {
            self.need = Some((v, attr, child));
            Pick::Need
        }
    }
}

/// The set `{ d(s') | s' in t(s) }` of ground outputs of the deterministic
/// att `d` on every relabeling of `s` by `t`, in canonical order.
///
/// For a single-state `t` the relabeled trees are never materialized: labels
/// stay undetermined until `d` consults a rule that distinguishes them.
pub fn relabel_then_eval_fiber(t: &TopDownRelabeling, d: &Att, s: &Tree) -> Result<Vec<Tree>, EvalError> {
    if !is_deterministic(d) {
        return Err(EvalError::Nondeterministic(d.name.clone()));
    }
    if t.output() != &d.input {
        return Err(EvalError::AlphabetMismatch(format!(
            "{} does not read the output of {}",
            d.name, t.name
        )));
    }
    let single =
        t.states().len() == 1 && t.initials() == [0] && t.rules().iter().all(|r| r.children.iter().all(|&q| q == 0));
    if !single {
        return relabel_then_eval_fiber_brute(t, d, s);
    }
    let c = Compiled::new(d)?;
    let subj = Subject::new(s, t.input())?;
    let mut cands = Vec::with_capacity(subj.len());
    for v in 0..subj.len() {
        let label = t.input().iter().nth(subj.sym[v]).expect("indexed symbol").0;
        let options: Vec<usize> = t
            .rules_for(0, label)
            .map(|r| d.input.index_of(&r.output).expect("chained alphabets"))
            .collect();
        if options.is_empty() {
            return Ok(Vec::new());
        }
        cands.push(options);
    }
    Ok(search(cands, |cands: &Vec<Vec<usize>>| {
        let res = Labels {
            c: &c,
            cands,
            need: None,
        };
        let mut ev = Evaluator::new(&c, &subj, res);
        match ev.eval_root() {
            Ok(t) => Searched::Leaf(Some(t)),
            Err(Halt::Need) => {
                let (v, attr, child) = ev.resolver().need.expect("need recorded");
                let mut classes: Vec<(Option<&CRhs>, Vec<usize>)> = Vec::new();
                for &sym in &cands[v] {
                    let key = rule_at(&c, sym, attr, child).map(|r| &r.rhs);
                    match classes.iter_mut().find(|(k, _)| *k == key) {
                        Some((_, members)) => members.push(sym),
                        None => classes.push((key, vec![sym])),
                    }
                }
                Searched::Branch(
                    classes
                        .into_iter()
                        .map(|(_, members)| {
                            let mut next = cands.clone();
                            next[v] = members;
                            next
                        })
                        .collect(),
                )
            }
            Err(_) => Searched::Leaf(None),
        }
    }))
}

/// Same set as [`relabel_then_eval_fiber`], by materializing every
/// relabeled tree.
pub fn relabel_then_eval_fiber_brute(t: &TopDownRelabeling, d: &Att, s: &Tree) -> Result<Vec<Tree>, EvalError> {
    let mut out = Vec::new();
    for annotated in run_topdown_relabeling_all(t, s) {
        if let EvalOutcome::Ground(u) = eval_datt(d, &annotated)? {
            out.push(u);
        }
    }
    Ok(canonical_order(out))
}

// ---------------------------------------------------------------------------
// Sentential forms and bounded derivation search

/// A partially derived output: an output tree whose leaves may be attribute
/// occurrences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SententialForm {
    Node(Name, Vec<SententialForm>),
    Occ(AttrOccurrence),
}

impl fmt::Display for SententialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SententialForm::Occ(o) => write!(f, "{o}"),
            SententialForm::Node(s, kids) => {
                f.write_str(s)?;
                if !kids.is_empty() {
                    f.write_str("(")?;
                    for (i, k) in kids.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{k}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl SententialForm {
    /// The initial form `a0(1)`.
    pub fn initial(a: &Att) -> Self {
        SententialForm::Occ(AttrOccurrence {
            attribute: a.initial.clone(),
            node: NodeAddress::root(),
        })
    }

    pub fn to_tree(&self) -> Option<Tree> {
        match self {
            SententialForm::Occ(_) => None,
            SententialForm::Node(s, kids) => Some(Tree::new(
                s.clone(),
                kids.iter().map(SententialForm::to_tree).collect::<Option<Vec<_>>>()?,
            )),
        }
    }
}

/// Identifies a rule: its position in the rule list of `symbol`, or in the
/// root rules when `symbol` is `None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleLocator {
    pub symbol: Option<Name>,
    pub index: usize,
}

impl fmt::Display for RuleLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.symbol {
            Some(s) => write!(f, "rules {s} #{}", self.index),
            None => write!(f, "rules root #{}", self.index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum CForm {
    Out(Name, Vec<CForm>),
    Occ(usize),
}

impl CForm {
    fn leftmost(&self) -> Option<usize> {
        match self {
            CForm::Occ(o) => Some(*o),
            CForm::Out(_, kids) => kids.iter().find_map(CForm::leftmost),
        }
    }

    /// Replaces the leftmost occurrence leaf.
    fn replace_leftmost(&self, with: &CForm) -> CForm {
        fn go(f: &CForm, with: &CForm, done: &mut bool) -> CForm {
            if *done {
                return f.clone();
            }
            match f {
                CForm::Occ(_) => {
                    *done = true;
                    with.clone()
                }
                CForm::Out(s, kids) => CForm::Out(s.clone(), kids.iter().map(|k| go(k, with, done)).collect()),
            }
        }
        go(self, with, &mut false)
    }
}

struct Deriver {
    c: Compiled,
    s: Subject,
    by_addr: HashMap<NodeAddress, usize>,
    input: RankedAlphabet,
}

impl Deriver {
    fn new(a: &Att, s: &Tree) -> Result<Self, EvalError> {
        let c = Compiled::new(a)?;
        let subj = Subject::new(s, &a.input)?;
        let by_addr = subj.addr.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        Ok(Self {
            c,
            s: subj,
            by_addr,
            input: a.input.clone(),
        })
    }

    fn instantiate(&self, rhs: &CRhs, site: Site) -> CForm {
        let na = self.c.n_attrs();
        match rhs {
            CRhs::Out(sym, kids) => CForm::Out(sym.clone(), kids.iter().map(|k| self.instantiate(k, site)).collect()),
            CRhs::Syn(a, i) => {
                let node = match site {
                    Site::Root => 0,
                    Site::Node(v) => self.s.children[v][i - 1],
                };
                CForm::Occ(node * na + a)
            }
            CRhs::Inh(b) => match site {
                Site::Node(v) => CForm::Occ(v * na + b),
                Site::Root => unreachable!("root rules never reference inherited attributes"),
            },
        }
    }

    /// Every right-hand side that may replace `occ`, in rule order.
    fn expansions(&self, occ: usize) -> Vec<(CForm, RuleLocator)> {
        let na = self.c.n_attrs();
        let (attr, node) = (occ % na, occ / na);
        let (site, child) = self.c.site_of(attr, node, &self.s);
        let symbol = match site {
            Site::Root => None,
            Site::Node(v) => Some(self.input.iter().nth(self.s.sym[v]).expect("indexed").0.clone()),
        };
        self.c
            .rule_list(site, &self.s)
            .iter()
            .enumerate()
            .filter(|(_, r)| r.attr == attr && r.child == child)
            .map(|(index, r)| {
                (
                    self.instantiate(&r.rhs, site),
                    RuleLocator {
                        symbol: symbol.clone(),
                        index,
                    },
                )
            })
            .collect()
    }

    fn compact(&self, f: &SententialForm) -> Result<CForm, EvalError> {
        match f {
            SententialForm::Node(s, kids) => Ok(CForm::Out(
                s.clone(),
                kids.iter().map(|k| self.compact(k)).collect::<Result<_, _>>()?,
            )),
            SententialForm::Occ(o) => {
                let attr = self
                    .c
                    .attrs
                    .iter()
                    .position(|a| *a == o.attribute)
                    .ok_or_else(|| EvalError::MalformedForm(format!("unknown attribute in {o}")))?;
                let node = *self
                    .by_addr
                    .get(&o.node)
                    .ok_or_else(|| EvalError::MalformedForm(format!("no node {} for {o}", o.node.marked())))?;
                Ok(CForm::Occ(node * self.c.n_attrs() + attr))
            }
        }
    }

    fn expand(&self, f: &CForm) -> SententialForm {
        match f {
            CForm::Out(s, kids) => SententialForm::Node(s.clone(), kids.iter().map(|k| self.expand(k)).collect()),
            CForm::Occ(o) => SententialForm::Occ(occurrence(&self.c, &self.s, *o)),
        }
    }
}

/// All one-step successors of `t`: every occurrence leaf rewritten by every
/// applicable rule, leaves left to right and rules in declaration order.
pub fn derivation_step(a: &Att, s: &Tree, t: &SententialForm) -> Result<Vec<(SententialForm, RuleLocator)>, EvalError> {
    let d = Deriver::new(a, s)?;
    let form = d.compact(t)?;
    let mut leaves = Vec::new();
    fn collect(f: &CForm, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, usize)>) {
        match f {
            CForm::Occ(o) => out.push((path.clone(), *o)),
            CForm::Out(_, kids) => {
                for (i, k) in kids.iter().enumerate() {
                    path.push(i);
                    collect(k, path, out);
                    path.pop();
                }
            }
        }
    }
    collect(&form, &mut Vec::new(), &mut leaves);
    fn replace(f: &CForm, path: &[usize], with: &CForm) -> CForm {
        match (f, path.split_first()) {
            (_, None) => with.clone(),
            (CForm::Out(s, kids), Some((&i, rest))) => {
                let mut kids = kids.clone();
                kids[i] = replace(&kids[i], rest, with);
                CForm::Out(s.clone(), kids)
            }
            (CForm::Occ(_), Some(_)) => unreachable!("paths end at occurrence leaves"),
        }
    }
    let mut out = Vec::new();
    for (path, occ) in leaves {
        for (rhs, loc) in d.expansions(occ) {
            out.push((d.expand(&replace(&form, &path, &rhs)), loc));
        }
    }
    Ok(out)
}

/// Result of [`enumerate_derivations_bounded`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedFiber {
    pub trees: Vec<Tree>,
    /// True iff the search finished without hitting the budget, in which
    /// case `trees` is the full set of outputs.
    pub complete: bool,
}

/// Preorder token of a flattened sentential form; `Out` indexes an interned
/// (symbol, rank) table. Leftmost expansion is a splice at the first `Occ`,
/// and hashing never recurses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Tok {
    Out(u32),
    Occ(usize),
}

#[derive(Default)]
struct Flattener {
    syms: IndexSet<(Name, usize)>,
}

impl Flattener {
    fn flatten(&mut self, f: &CForm, out: &mut Vec<Tok>) {
        match f {
            CForm::Occ(o) => out.push(Tok::Occ(*o)),
            CForm::Out(s, kids) => {
                let (id, _) = self.syms.insert_full((s.clone(), kids.len()));
                out.push(Tok::Out(id as u32));
                for k in kids {
                    self.flatten(k, out);
                }
            }
        }
    }

    fn to_tree(&self, toks: &[Tok]) -> Tree {
        let mut stack: Vec<(&Name, usize, Vec<Tree>)> = Vec::new();
        for tok in toks {
            let Tok::Out(id) = tok else {
                unreachable!("ground forms only")
            };
            let (s, k) = &self.syms[*id as usize];
            stack.push((s, *k, Vec::with_capacity(*k)));
            while let Some((_, k, kids)) = stack.last() {
                if kids.len() < *k {
                    break;
                }
                let (s, _, kids) = stack.pop().expect("non-empty");
                let t = Tree::new(s.clone(), kids);
                match stack.last_mut() {
                    Some((_, _, up)) => up.push(t),
                    None => return t,
                }
            }
        }
        unreachable!("well-formed preorder")
    }
}

/// Longest sentential form (in nodes) the bounded search keeps.
pub const MAX_FORM_NODES: usize = 512;

/// Breadth-first search over leftmost derivations from `a0(1)`, deduplicating
/// sentential forms. `budget` bounds the number of non-ground forms expanded;
/// forms longer than [`MAX_FORM_NODES`] are dropped, which also makes the
/// result incomplete.
pub fn enumerate_derivations_bounded(a: &Att, s: &Tree, budget: usize) -> Result<BoundedFiber, EvalError> {
    let d = Deriver::new(a, s)?;
    let mut flat = Flattener::default();
    let start = vec![Tok::Occ(d.c.initial)];
    let mut seen: HashSet<Vec<Tok>> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut ground = Vec::new();
    seen.insert(start.clone());
    queue.push_back(start);
    let mut expanded = 0usize;
    let mut complete = true;
    while let Some(form) = queue.pop_front() {
        if expanded >= budget {
            return Ok(BoundedFiber {
                trees: canonical_order(ground),
                complete: false,
            });
        }
        expanded += 1;
        let pos = form
            .iter()
            .position(|t| matches!(t, Tok::Occ(_)))
            .expect("only non-ground forms are queued");
        let Tok::Occ(occ) = form[pos] else { unreachable!() };
        for (rhs, _) in d.expansions(occ) {
            let mut next = Vec::with_capacity(form.len() + 4);
            next.extend_from_slice(&form[..pos]);
            flat.flatten(&rhs, &mut next);
            next.extend_from_slice(&form[pos + 1..]);
            if next.len() > MAX_FORM_NODES {
                complete = false;
                continue;
            }
            if seen.contains(&next) {
                continue;
            }
            if next[pos..].iter().any(|t| matches!(t, Tok::Occ(_))) {
                queue.push_back(next.clone());
            } else {
                ground.push(flat.to_tree(&next));
            }
            seen.insert(next);
        }
    }
    Ok(BoundedFiber {
        trees: canonical_order(ground),
        complete,
    })
}

/// The leftmost derivation that always applies the first applicable rule,
/// as a list of forms each paired with the rule that produced it. Stops at a
/// ground form, at a stuck leaf, or after `max_steps` steps.
pub fn leftmost_trace(
    a: &Att,
    s: &Tree,
    max_steps: usize,
) -> Result<Vec<(SententialForm, Option<RuleLocator>)>, EvalError> {
    let d = Deriver::new(a, s)?;
    let mut form = CForm::Occ(d.c.initial);
    let mut out = vec![(d.expand(&form), None)];
    for _ in 0..max_steps {
        let Some(occ) = form.leftmost() else { break };
        let Some((rhs, loc)) = d.expansions(occ).into_iter().next() else {
            break;
        };
        form = form.replace_leftmost(&rhs);
        out.push((d.expand(&form), Some(loc)));
    }
    Ok(out)
}
