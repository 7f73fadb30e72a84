//! Executable property checks over all input trees up to a size bound.
//!
//! Every check compares a construction against an oracle computed by a
//! different route and returns a [`CheckReport`]; failures carry the first
//! offending input (in canonical order) together with both fibers.

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::compose::restrict_att_output;
use crate::domain::dattu_domain_automaton;
use crate::dsl::{serialize_att, serialize_attu, serialize_item, Item};
use crate::eval::{
    enumerate_derivations_bounded, enumerate_uniform, eval_datt, eval_dattu, relabel_then_eval_fiber, run_lookaround,
    EvalError, EvalOutcome,
};
use crate::model::{is_deterministic, normalize_root_rules, Att, AttWithLookAround, TopDownRelabeling};
use crate::trees::{canonical_order, enumerate_trees, RankedAlphabet, Tree};
use crate::uniformize::{
    build_annotation_relabeling, build_rule_applier, uniformize_att, uniformize_attu, uniformize_topdown,
};

/// Derivation budget used when a caller does not pick one.
pub const DEFAULT_BUDGET: usize = 20_000;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("empty chain")]
    EmptyChain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    PreconditionFailed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::PreconditionFailed => "PRECONDITION-FAILED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub input: Tree,
    pub expected: Vec<Tree>,
    pub actual: Vec<Tree>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    /// Number of input trees examined.
    pub inputs: usize,
    /// Inputs whose oracle had to fall back to a weaker method.
    pub notes: Vec<String>,
    /// DSL of the checked objects, filled in when the check does not pass.
    pub dsl: String,
    /// Wall time; kept out of `Display` so reports are reproducible.
    pub elapsed: Duration,
}

impl CheckReport {
    fn new(name: &str, params: Vec<(&str, String)>) -> Self {
        CheckReport {
            name: name.to_string(),
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            verdict: Verdict::Pass,
            counterexample: None,
            inputs: 0,
            notes: Vec::new(),
            dsl: String::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn fail(&mut self, verdict: Verdict, input: &Tree, expected: Vec<Tree>, actual: Vec<Tree>, reason: &str) {
        self.verdict = verdict;
        self.counterexample = Some(Counterexample {
            input: input.clone(),
            expected,
            actual,
            reason: reason.to_string(),
        });
    }
}

fn set(trees: &[Tree]) -> String {
    let body: Vec<String> = trees.iter().map(Tree::to_string).collect();
    format!("{{{}}}", body.join(", "))
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(
            f,
            "check {} [{}]: {} ({} inputs)",
            self.name,
            params.join(", "),
            self.verdict,
            self.inputs
        )?;
        if let Some(c) = &self.counterexample {
            writeln!(f, "  input:    {}", c.input)?;
            writeln!(f, "  reason:   {}", c.reason)?;
            writeln!(f, "  expected: {}", set(&c.expected))?;
            writeln!(f, "  actual:   {}", set(&c.actual))?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        if !self.dsl.is_empty() {
            writeln!(f, "  objects:")?;
            for line in self.dsl.lines() {
                writeln!(f, "    {line}")?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Fiber oracles

/// Something with a translation: an att, possibly deterministic, or an att
/// with look-around.
#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Evaluable {
    Att(Att),
    AttU(AttWithLookAround),
}

impl Evaluable {
    pub fn name(&self) -> &str {
        match self {
            Evaluable::Att(a) => &a.name,
            Evaluable::AttU(d) => &d.name,
        }
    }

    pub fn input(&self) -> &RankedAlphabet {
        match self {
            Evaluable::Att(a) => &a.input,
            Evaluable::AttU(d) => d.input(),
        }
    }

    pub fn output(&self) -> &RankedAlphabet {
        match self {
            Evaluable::Att(a) => &a.output,
            Evaluable::AttU(d) => &d.core.output,
        }
    }

    pub fn dsl(&self) -> String {
        match self {
            Evaluable::Att(a) => serialize_att(a),
            Evaluable::AttU(d) => serialize_attu(d),
        }
    }

    /// The fiber at `s`. Deterministic objects are evaluated directly;
    /// nondeterministic ones go through [`att_fiber`]. The flag is false
    /// when the result may be a proper subset of the fiber.
    pub fn fiber(&self, s: &Tree, budget: usize) -> Result<(Vec<Tree>, bool), EvalError> {
        match self {
            Evaluable::Att(a) => att_fiber(a, s, budget),
            Evaluable::AttU(d) => match run_lookaround(&d.around, s) {
                None => Ok((Vec::new(), true)),
                Some(t) => att_fiber(&d.core, &t, budget),
            },
        }
    }
}

/// The fiber of `a` at `s`. Deterministic atts are evaluated. Otherwise
/// the bounded derivation search is used when it completes within `budget`;
/// if it does not, the uniform fiber is returned (flag `false`), which is
/// the full fiber whenever the translation of `a` is functional.
pub fn att_fiber(a: &Att, s: &Tree, budget: usize) -> Result<(Vec<Tree>, bool), EvalError> {
    if is_deterministic(a) {
        return Ok((eval_datt(a, s)?.into_ground().into_iter().collect(), true));
    }
    let bounded = enumerate_derivations_bounded(a, s, budget)?;
    if bounded.complete {
        return Ok((bounded.trees, true));
    }
    Ok((enumerate_uniform(&normalize_root_rules(a), s)?, false))
}

fn dattu_output(d: &AttWithLookAround, s: &Tree) -> Result<Option<Tree>, EvalError> {
    Ok(eval_dattu(d, s)?.and_then(EvalOutcome::into_ground))
}

fn finish(mut r: CheckReport, start: Instant, dsl: impl FnOnce() -> String) -> CheckReport {
    r.elapsed = start.elapsed();
    if !r.passed() {
        r.dsl = dsl();
    }
    r
}

// ---------------------------------------------------------------------------
// Checks

/// Uniformizes `a` and checks, on every input up to `max_size`, that the
/// result is deterministic, that its output is a uniform translation of `a`,
/// and that it is defined exactly where `a` has a uniform translation.
pub fn check_uniformizer(a: &Att, max_size: usize) -> Result<CheckReport, CheckError> {
    let start = Instant::now();
    let mut r = CheckReport::new(
        "uniformizer",
        vec![("att", a.name.clone()), ("max_size", max_size.to_string())],
    );
    let bundle = uniformize_att(a)?;
    let d = &bundle.result;
    let normal = normalize_root_rules(a);
    if !d.is_deterministic() {
        r.verdict = Verdict::Fail;
        r.notes
            .push("constructed att with look-around is not deterministic".into());
        return Ok(finish(r, start, || serialize_att(a)));
    }
    for s in enumerate_trees(&a.input, max_size) {
        r.inputs += 1;
        let expected = enumerate_uniform(&normal, &s)?;
        let first = dattu_output(d, &s)?;
        if dattu_output(d, &s)? != first {
            r.fail(
                Verdict::Fail,
                &s,
                expected,
                first.into_iter().collect(),
                "two evaluations disagree",
            );
            break;
        }
        let ok = match &first {
            Some(t) => expected.contains(t),
            None => expected.is_empty(),
        };
        if !ok {
            let reason = match &first {
                Some(_) => "output is not a uniform translation",
                None => "undefined although a uniform translation exists",
            };
            r.fail(Verdict::Fail, &s, expected, first.into_iter().collect(), reason);
            break;
        }
    }
    Ok(finish(r, start, || serialize_att(a)))
}

/// Fiber equality of two objects on every input up to `max_size`.
pub fn check_equivalence(
    x: &Evaluable,
    y: &Evaluable,
    max_size: usize,
    budget: usize,
) -> Result<CheckReport, CheckError> {
    let start = Instant::now();
    if x.input() != y.input() || x.output() != y.output() {
        return Err(CheckError::AlphabetMismatch(format!(
            "{} and {} have different signatures",
            x.name(),
            y.name()
        )));
    }
    let mut r = CheckReport::new(
        "equivalence",
        vec![
            ("left", x.name().to_string()),
            ("right", y.name().to_string()),
            ("max_size", max_size.to_string()),
            ("budget", budget.to_string()),
        ],
    );
    for s in enumerate_trees(x.input(), max_size) {
        r.inputs += 1;
        let (fx, cx) = x.fiber(&s, budget)?;
        let (fy, cy) = y.fiber(&s, budget)?;
        for (complete, who) in [(cx, x.name()), (cy, y.name())] {
            if !complete {
                r.notes.push(format!(
                    "{s}: derivation budget exhausted for {who}, compared uniform fibers"
                ));
            }
        }
        if fx != fy {
            r.fail(Verdict::Fail, &s, fx, fy, "fibers differ");
            break;
        }
    }
    Ok(finish(r, start, || format!("{}\n{}", x.dsl(), y.dsl())))
}

/// Checks that the annotate-then-apply construction has exactly the uniform
/// translations of `a` as fibers, on every input up to `max_size`.
pub fn check_lemma2(a: &Att, max_size: usize) -> Result<CheckReport, CheckError> {
    let start = Instant::now();
    let mut r = CheckReport::new(
        "lemma2",
        vec![("att", a.name.clone()), ("max_size", max_size.to_string())],
    );
    let normal = normalize_root_rules(a);
    let t = build_annotation_relabeling(&normal)?;
    let applier = build_rule_applier(&normal)?;
    for s in enumerate_trees(&a.input, max_size) {
        r.inputs += 1;
        let uniform = enumerate_uniform(&normal, &s)?;
        let composed = relabel_then_eval_fiber(&t, &applier, &s)?;
        if uniform != composed {
            r.fail(
                Verdict::Fail,
                &s,
                uniform,
                composed,
                "annotate-then-apply fiber differs from the uniform fiber",
            );
            break;
        }
    }
    Ok(finish(r, start, || serialize_att(a)))
}

/// Whether `out` is one of the relabelings of `s` by `t` from state `q`.
fn td_member(t: &TopDownRelabeling, q: usize, s: &Tree, out: &Tree) -> bool {
    s.rank() == out.rank()
        && t.rules_for(q, s.label()).any(|r| {
            r.output == *out.label()
                && r.children
                    .iter()
                    .zip(s.children().iter().zip(out.children()))
                    .all(|(&qi, (si, oi))| td_member(t, qi, si, oi))
        })
}

fn td_defined(t: &TopDownRelabeling, q: usize, s: &Tree, memo: &mut HashMap<(usize, Tree), bool>) -> bool {
    if let Some(&b) = memo.get(&(q, s.clone())) {
        return b;
    }
    let rules: Vec<Vec<usize>> = t.rules_for(q, s.label()).map(|r| r.children.clone()).collect();
    let b = rules.iter().any(|kids| {
        kids.iter()
            .zip(s.children())
            .all(|(&qi, si)| td_defined(t, qi, si, memo))
    });
    memo.insert((q, s.clone()), b);
    b
}

/// Checks the look-around built by [`uniformize_topdown`] against `t`: it
/// must be deterministic, pick a relabeling `t` allows, and be defined
/// exactly where `t` is.
pub fn check_prop4(t: &TopDownRelabeling, max_size: usize) -> Result<CheckReport, CheckError> {
    let start = Instant::now();
    let mut r = CheckReport::new(
        "prop4",
        vec![("tdrelab", t.name.clone()), ("max_size", max_size.to_string())],
    );
    let u = uniformize_topdown(t);
    if !u.top.is_deterministic() {
        r.verdict = Verdict::Fail;
        r.notes.push("selected top-down relabeling is not deterministic".into());
        return Ok(finish(r, start, || serialize_item(&Item::TopDown(t.clone()))));
    }
    let mut memo = HashMap::new();
    for s in enumerate_trees(t.input(), max_size) {
        r.inputs += 1;
        let defined = t.initials().iter().any(|&q| td_defined(t, q, &s, &mut memo));
        let picked = run_lookaround(&u, &s);
        let ok = match &picked {
            Some(out) => t.initials().iter().any(|&q| td_member(t, q, &s, out)),
            None => !defined,
        };
        if !ok {
            let reason = if picked.is_some() {
                "picked a tree outside the relabeling's fiber"
            } else {
                "undefined on an input in the relabeling's domain"
            };
            r.fail(Verdict::Fail, &s, Vec::new(), picked.into_iter().collect(), reason);
            break;
        }
    }
    Ok(finish(r, start, || serialize_item(&Item::TopDown(t.clone()))))
}

/// One stage of a chain given to [`check_composition`].
pub type Stage = Evaluable;

fn chained_fiber(chain: &[Stage], s: &Tree, budget: usize) -> Result<(Vec<Tree>, bool), EvalError> {
    let mut current = vec![s.clone()];
    let mut complete = true;
    for stage in chain {
        let mut next = Vec::new();
        for t in &current {
            let (f, c) = stage.fiber(t, budget)?;
            complete &= c;
            next.extend(f);
        }
        current = canonical_order(next);
    }
    Ok((current, complete))
}

fn uniformize_stage(stage: &Stage) -> Result<AttWithLookAround, EvalError> {
    match stage {
        Stage::Att(a) => Ok(uniformize_att(a)?.result),
        Stage::AttU(d) => uniformize_attu(d),
    }
}

fn restrict_stage(stage: &Stage, next: &AttWithLookAround) -> Result<Stage, EvalError> {
    let m = dattu_domain_automaton(next)?;
    Ok(match stage {
        Stage::Att(a) => Stage::Att(restrict_att_output(a, &m)?),
        Stage::AttU(d) => Stage::AttU(AttWithLookAround::new(
            d.name.clone(),
            d.around.clone(),
            restrict_att_output(&d.core, &m)?,
        )?),
    })
}

/// Builds one deterministic att with look-around per stage, working from the
/// last stage backwards so that each stage only produces outputs the next
/// constructed stage is defined on.
pub fn uniformize_chain(chain: &[Stage]) -> Result<Vec<AttWithLookAround>, EvalError> {
    let mut out: Vec<AttWithLookAround> = Vec::with_capacity(chain.len());
    for stage in chain.iter().rev() {
        let d = match out.last() {
            None => uniformize_stage(stage)?,
            Some(next) => uniformize_stage(&restrict_stage(stage, next)?)?,
        };
        out.push(d);
    }
    out.reverse();
    Ok(out)
}

/// Checks that the stage-wise uniformization of a functional chain has the
/// same composed translation as the chain, on every input up to `max_size`.
/// A chain that is not functional on those inputs yields a
/// precondition-failed report.
pub fn check_composition(chain: &[Stage], max_size: usize, budget: usize) -> Result<CheckReport, CheckError> {
    let start = Instant::now();
    let first = chain.first().ok_or(CheckError::EmptyChain)?;
    for w in chain.windows(2) {
        if w[0].output() != w[1].input() {
            return Err(CheckError::AlphabetMismatch(format!(
                "{} does not read the output of {}",
                w[1].name(),
                w[0].name()
            )));
        }
    }
    let names: Vec<&str> = chain.iter().map(Stage::name).collect();
    let mut r = CheckReport::new(
        "composition",
        vec![
            ("chain", names.join(";")),
            ("max_size", max_size.to_string()),
            ("budget", budget.to_string()),
        ],
    );
    let dsl = || chain.iter().map(Stage::dsl).collect::<Vec<_>>().join("\n");
    let inputs: Vec<Tree> = enumerate_trees(first.input(), max_size).collect();
    let mut expected = Vec::with_capacity(inputs.len());
    for s in &inputs {
        let (f, complete) = chained_fiber(chain, s, budget)?;
        if !complete {
            r.notes
                .push(format!("{s}: derivation budget exhausted, used uniform fibers"));
        }
        if f.len() > 1 {
            r.inputs = expected.len() + 1;
            r.fail(
                Verdict::PreconditionFailed,
                s,
                f,
                Vec::new(),
                "the chain is not functional on this input",
            );
            return Ok(finish(r, start, dsl));
        }
        expected.push(f);
    }
    let stages = uniformize_chain(chain)?;
    for (s, want) in inputs.iter().zip(expected) {
        r.inputs += 1;
        let mut current = Some(s.clone());
        for d in &stages {
            current = match current {
                Some(t) => dattu_output(d, &t)?,
                None => None,
            };
        }
        let got: Vec<Tree> = current.into_iter().collect();
        if got != want {
            r.fail(Verdict::Fail, s, want, got, "composed fibers differ");
            break;
        }
    }
    Ok(finish(r, start, dsl))
}

/// Checks that root-rule normalization preserves the translation. Inputs on
/// which either derivation search runs out of budget are skipped and listed
/// in the notes.
pub fn check_normalization(a: &Att, max_size: usize, budget: usize) -> Result<CheckReport, CheckError> {
    let start = Instant::now();
    let mut r = CheckReport::new(
        "normalization",
        vec![
            ("att", a.name.clone()),
            ("max_size", max_size.to_string()),
            ("budget", budget.to_string()),
        ],
    );
    let normal = normalize_root_rules(a);
    for s in enumerate_trees(&a.input, max_size) {
        let x = enumerate_derivations_bounded(a, &s, budget)?;
        let y = enumerate_derivations_bounded(&normal, &s, budget)?;
        if !x.complete || !y.complete {
            r.notes.push(format!("{s}: skipped, derivation search incomplete"));
            continue;
        }
        r.inputs += 1;
        if x.trees != y.trees {
            r.fail(
                Verdict::Fail,
                &s,
                x.trees,
                y.trees,
                "normalized att has a different fiber",
            );
            break;
        }
    }
    Ok(finish(r, start, || serialize_att(a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::trees::parse_tree;

    #[test]
    fn fibers_of_deterministic_atts_are_exact() {
        let s = parse_tree("f(e,e)", None).unwrap();
        let (f, complete) = att_fiber(&fixtures::ex1(), &s, 10).unwrap();
        assert!(complete);
        assert_eq!(f, vec![parse_tree("d(d(d(e)))", None).unwrap()]);
    }

    #[test]
    fn different_translations_fail_with_counterexample() {
        let x = Evaluable::Att(fixtures::ex1());
        let mut other = fixtures::ex1();
        other.rules.get_mut("e").unwrap()[0] = crate::dsl::parse_att(
            "att y { input { e:0 } output { d:1, e:0 } syn { a } inh { b } initial a rules e { a(pi) -> b(pi); } rules root { b(pi.1) -> e; } }",
        )
        .unwrap()
        .rules_for("e")[0]
            .clone();
        let r = check_equivalence(&x, &Evaluable::Att(other), 3, 100).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let c = r.counterexample.as_ref().unwrap();
        assert_eq!(c.input.to_string(), "e");
        assert!(r.to_string().contains("att ex1"));
    }

    #[test]
    fn membership_oracle_follows_states() {
        let t = fixtures::prime().top;
        let s = parse_tree("f(g(e,e),e)", None).unwrap();
        assert!(td_member(&t, 0, &s, &parse_tree("f(g'(e',e'),e)", None).unwrap()));
        assert!(!td_member(&t, 0, &s, &parse_tree("f(g'(e,e'),e)", None).unwrap()));
    }

    #[test]
    fn non_functional_chain_is_reported() {
        let chain = [Stage::Att(fixtures::branch())];
        let r = check_composition(&chain, 3, 100).unwrap();
        assert_eq!(r.verdict, Verdict::PreconditionFailed);
        assert!(r.counterexample.is_some());
    }
}
