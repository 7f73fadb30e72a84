//! Acceptance suite: one PASS/FAIL line per criterion, each with its time
//! limit. Run with `cargo test --test acceptance`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use uniatt::check::{
    check_composition, check_lemma2, check_normalization, check_prop4, check_uniformizer, Evaluable, DEFAULT_BUDGET,
};
use uniatt::compose::compose_lookarounds;
use uniatt::domain::{automaton_accepts, datt_domain_automaton};
use uniatt::dsl::serialize_bundle;
use uniatt::eval::{enumerate_derivations_bounded, enumerate_uniform, eval_datt, eval_dattu, run_lookaround};
use uniatt::fixtures;
use uniatt::model::{identity_lookaround, is_deterministic, unambiguous_subsets, Lhs, LookAround};
use uniatt::random::{random_att, random_topdown, RandomSizes};
use uniatt::trees::enumerate_trees;
use uniatt::uniformize::{build_annotation_relabeling, uniformize_att};
use uniatt::{parse_tree, Att, Rhs, Tree};

type Outcome = Result<(), String>;

fn tree(s: &str) -> Tree {
    parse_tree(s, None).unwrap()
}

fn d_pow(n: usize) -> Tree {
    (0..n).fold(Tree::leaf("e"), |t, _| Tree::new("d", vec![t]))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Independent uniform-translation oracle: every node gets a rule subset with
// at most one rule per left-hand side, and attribute values are computed by
// plain recursion over node addresses.

fn subsets_by_brute_force(n_rules: usize, lhs: impl Fn(usize) -> Lhs) -> Vec<Vec<usize>> {
    (0u32..1 << n_rules)
        .map(|mask| (0..n_rules).filter(|&i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|set| {
            let lhss: HashSet<Lhs> = set.iter().map(|&i| lhs(i)).collect();
            lhss.len() == set.len()
        })
        .collect()
}

struct Naive<'a> {
    a: &'a Att,
    s: &'a Tree,
    choice: &'a HashMap<Vec<usize>, Vec<usize>>,
    visiting: HashSet<(String, Vec<usize>)>,
}

impl Naive<'_> {
    fn node(&self, v: &[usize]) -> &Tree {
        v.iter().fold(self.s, |t, &i| &t.children()[i - 1])
    }

    fn value(&mut self, attr: &str, v: &[usize]) -> Option<Tree> {
        let key = (attr.to_string(), v.to_vec());
        if !self.visiting.insert(key.clone()) {
            return None;
        }
        let out = self.value_inner(attr, v);
        self.visiting.remove(&key);
        out
    }

    fn value_inner(&mut self, attr: &str, v: &[usize]) -> Option<Tree> {
        if self.a.is_syn(attr) {
            let rules = self.a.rules_for(self.node(v).label());
            let idx = self.choice[v]
                .iter()
                .find(|&&i| matches!(&rules[i].lhs, Lhs::Syn(x) if &**x == attr))?;
            let rhs = rules[*idx].rhs.clone();
            return self.rhs(&rhs, v, false);
        }
        if v.is_empty() {
            let r = self
                .a
                .root_rules
                .iter()
                .find(|r| matches!(&r.lhs, Lhs::Inh(x, 1) if &**x == attr))?
                .rhs
                .clone();
            return self.rhs(&r, v, true);
        }
        let (u, i) = (v[..v.len() - 1].to_vec(), v[v.len() - 1]);
        let rules = self.a.rules_for(self.node(&u).label());
        let idx = self.choice[&u]
            .iter()
            .find(|&&k| matches!(&rules[k].lhs, Lhs::Inh(x, j) if &**x == attr && *j == i))?;
        let rhs = rules[*idx].rhs.clone();
        self.rhs(&rhs, &u, false)
    }

    /// At the root marker, `a(pi.1)` refers to the input root.
    fn rhs(&mut self, r: &Rhs, v: &[usize], at_root: bool) -> Option<Tree> {
        match r {
            Rhs::Out(o, kids) => {
                let kids = kids
                    .iter()
                    .map(|k| self.rhs(k, v, at_root))
                    .collect::<Option<Vec<_>>>()?;
                Some(Tree::new(o.clone(), kids))
            }
            Rhs::Syn(x, j) => {
                let mut w = v.to_vec();
                if !at_root {
                    w.push(*j);
                }
                self.value(x, &w)
            }
            Rhs::Inh(b) => self.value(b, v),
        }
    }
}

fn naive_uniform_fiber(a: &Att, s: &Tree) -> BTreeSet<String> {
    let mut addrs: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::new();
    fn walk(t: &Tree, v: Vec<usize>, a: &Att, out: &mut Vec<(Vec<usize>, Vec<Vec<usize>>)>) {
        let rules = a.rules_for(t.label());
        out.push((v.clone(), subsets_by_brute_force(rules.len(), |i| rules[i].lhs.clone())));
        for (i, c) in t.children().iter().enumerate() {
            let mut w = v.clone();
            w.push(i + 1);
            walk(c, w, a, out);
        }
    }
    walk(s, Vec::new(), a, &mut addrs);
    let mut fiber = BTreeSet::new();
    let mut idx = vec![0usize; addrs.len()];
    loop {
        let choice: HashMap<Vec<usize>, Vec<usize>> = addrs
            .iter()
            .zip(&idx)
            .map(|((v, subs), &k)| (v.clone(), subs[k].clone()))
            .collect();
        let mut n = Naive {
            a,
            s,
            choice: &choice,
            visiting: HashSet::new(),
        };
        if let Some(t) = n.value(&a.initial, &[]) {
            fiber.insert(t.to_string());
        }
        let mut p = 0;
        loop {
            if p == idx.len() {
                return fiber;
            }
            idx[p] += 1;
            if idx[p] < addrs[p].1.len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

fn rendered(ts: &[Tree]) -> BTreeSet<String> {
    ts.iter().map(Tree::to_string).collect()
}

fn report(r: uniatt::check::CheckReport) -> Outcome {
    ensure(r.passed(), || r.to_string())
}

// ---------------------------------------------------------------------------
// Criteria

fn c1_ex1() -> Outcome {
    let a = fixtures::ex1();
    let out = eval_datt(&a, &tree("f(e,e)")).map_err(|e| e.to_string())?;
    ensure(out.ground() == Some(&tree("d(d(d(e)))")), || {
        format!("f(e,e) gave {out}")
    })?;
    for s in enumerate_trees(&a.input, 9) {
        let got = eval_datt(&a, &s).map_err(|e| e.to_string())?;
        ensure(got.ground() == Some(&d_pow(s.size())), || format!("{s} gave {got}"))?;
    }
    Ok(())
}

fn c2_uniform_semantics() -> Outcome {
    let a = fixtures::run();
    let s = tree("g(g(e))");
    let uniform = enumerate_uniform(&a, &s).map_err(|e| e.to_string())?;
    let oracle = naive_uniform_fiber(&a, &s);
    ensure(rendered(&uniform) == oracle, || {
        format!("uniform {:?} vs oracle {oracle:?}", rendered(&uniform))
    })?;
    let has = |t: &str| uniform.contains(&tree(t));
    ensure(has("g'(g'(e,e),g'(e,e))") && has("g(g(e,e),g(e,e))"), || {
        "missing uniform outputs".into()
    })?;
    ensure(!has("g(g(e,e),g'(e,e))"), || "mixed output is uniform".into())?;
    let full = enumerate_derivations_bounded(&a, &s, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    for t in ["g'(g'(e,e),g'(e,e))", "g(g(e,e),g(e,e))", "g(g(e,e),g'(e,e))"] {
        ensure(full.trees.contains(&tree(t)), || {
            format!("bounded derivations miss {t}")
        })?;
    }
    Ok(())
}

fn c3_subset_count() -> Outcome {
    let a = fixtures::run();
    let subsets = unambiguous_subsets(a.rules_for("f"));
    ensure(subsets.len() == 12, || format!("{} subsets", subsets.len()))?;
    ensure(subsets.iter().any(Vec::is_empty), || "empty subset missing".into())?;
    let rules = a.rules_for("f");
    let brute: BTreeSet<Vec<usize>> = subsets_by_brute_force(rules.len(), |i| rules[i].lhs.clone())
        .into_iter()
        .collect();
    let mut ours: Vec<Vec<usize>> = subsets;
    ours.iter_mut().for_each(|s| s.sort());
    ensure(ours.into_iter().collect::<BTreeSet<_>>() == brute, || {
        "subsets differ from brute force".into()
    })
}

fn c4_annotate_then_apply() -> Outcome {
    for a in [fixtures::run(), fixtures::ex1()] {
        report(check_lemma2(&a, 5).map_err(|e| e.to_string())?)?;
    }
    // the uniform fibers themselves agree with the naive oracle
    let a = fixtures::run();
    for s in enumerate_trees(&a.input, 3) {
        let got = rendered(&enumerate_uniform(&a, &s).map_err(|e| e.to_string())?);
        ensure(got == naive_uniform_fiber(&a, &s), || {
            format!("uniform fiber differs at {s}")
        })?;
    }
    Ok(())
}

fn c5_topdown() -> Outcome {
    for a in [fixtures::ex1(), fixtures::run(), fixtures::revg(), fixtures::amb()] {
        let b = uniformize_att(&a).map_err(|e| e.to_string())?;
        report(check_prop4(&b.annotation, 5).map_err(|e| e.to_string())?)?;
        report(check_prop4(&b.restricted, 5).map_err(|e| e.to_string())?)?;
    }
    report(check_prop4(&fixtures::prime().top, 5).map_err(|e| e.to_string())?)?;
    let sizes = RandomSizes::default();
    for seed in 0..20 {
        let b = uniformize_att(&random_att(seed, &sizes)).map_err(|e| e.to_string())?;
        report(check_prop4(&b.restricted, 5).map_err(|e| e.to_string())?)?;
    }
    for seed in 0..50 {
        let t = random_topdown(seed, 3, 2);
        report(check_prop4(&t, 5).map_err(|e| e.to_string())?)?;
    }
    Ok(())
}

fn c6_uniformizer() -> Outcome {
    let revg = fixtures::revg();
    let b = uniformize_att(&revg).map_err(|e| e.to_string())?;
    let s = tree("f(g(f(e,e),e),f(e,g(e,g(e,e))))");
    let out = eval_dattu(&b.result, &s).map_err(|e| e.to_string())?;
    let out = out.and_then(|o| o.into_ground());
    ensure(out == Some(d_pow(5)), || format!("revg gave {out:?}"))?;
    for (a, n) in [(fixtures::ex1(), 9), (fixtures::run(), 5), (revg, 7)] {
        report(check_uniformizer(&a, n).map_err(|e| e.to_string())?)?;
    }
    let sizes = RandomSizes::default();
    for seed in 0..100 {
        report(check_uniformizer(&random_att(seed, &sizes), 4).map_err(|e| e.to_string())?)?;
    }
    Ok(())
}

fn c7_domain() -> Outcome {
    let mut datts: Vec<Att> = vec![
        fixtures::ex1(),
        fixtures::strip(),
        fixtures::mono_id(),
        fixtures::yn().core,
    ];
    let sizes = RandomSizes {
        rules_per_lhs: 1,
        ..RandomSizes::default()
    };
    datts.extend((0..50).map(|seed| random_att(1000 + seed, &sizes)));
    for d in &datts {
        ensure(is_deterministic(d), || format!("{} is not deterministic", d.name))?;
        let m = datt_domain_automaton(d).map_err(|e| e.to_string())?;
        for s in enumerate_trees(&d.input, 7) {
            let defined = eval_datt(d, &s).map_err(|e| e.to_string())?.ground().is_some();
            ensure(automaton_accepts(&m, &s) == defined, || {
                format!("{}: automaton and evaluation disagree on {s}", d.name)
            })?;
        }
    }
    Ok(())
}

fn lookaround_pairs() -> Vec<(LookAround, LookAround)> {
    let prime = fixtures::prime();
    let unprime = fixtures::unprime();
    let yn = fixtures::yn().around;
    let id_fge = identity_lookaround(prime.input());
    let id_primed = identity_lookaround(prime.output());
    let id_yn_in = identity_lookaround(yn.input());
    let id_yn_out = identity_lookaround(yn.output());
    let run_around = uniformize_att(&fixtures::run()).expect("uniformizes").around;
    let id_run = identity_lookaround(run_around.input());
    vec![
        (id_fge.clone(), prime.clone()),
        (prime.clone(), id_primed.clone()),
        (prime.clone(), unprime.clone()),
        (unprime.clone(), prime.clone()),
        (id_primed, unprime),
        (id_yn_in, yn.clone()),
        (yn, id_yn_out),
        (id_run, run_around),
    ]
}

fn c8_composition_of_lookarounds() -> Outcome {
    for (u1, u2) in lookaround_pairs() {
        let u = compose_lookarounds(&u1, &u2).map_err(|e| e.to_string())?;
        for s in enumerate_trees(u1.input(), 5) {
            let seq = run_lookaround(&u1, &s).and_then(|t| run_lookaround(&u2, &t));
            let got = run_lookaround(&u, &s);
            ensure(got == seq, || {
                format!("{} then {}: {s} gave {got:?}, expected {seq:?}", u1.name, u2.name)
            })?;
        }
    }
    Ok(())
}

fn c9_chain() -> Outcome {
    for (name, stages) in fixtures::chains() {
        let chain: Vec<Evaluable> = stages.into_iter().map(Evaluable::Att).collect();
        let r = check_composition(&chain, 4, DEFAULT_BUDGET).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.notes.is_empty(), || {
            format!("{name}: oracle fell back to uniform fibers")
        })?;
        report(r)?;
    }
    Ok(())
}

fn c10_normalization() -> Outcome {
    let r = check_normalization(&fixtures::amb(), 5, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(r.inputs > 0, || "no input had a complete derivation search".into())?;
    report(r)
}

fn c11_determinism() -> Outcome {
    for a in [fixtures::ex1(), fixtures::run(), fixtures::revg(), fixtures::amb()] {
        let first = serialize_bundle(&uniformize_att(&a).map_err(|e| e.to_string())?);
        for _ in 0..3 {
            let again = serialize_bundle(&uniformize_att(&a).map_err(|e| e.to_string())?);
            ensure(again == first, || format!("{}: serializations differ", a.name))?;
        }
    }
    let t = build_annotation_relabeling(&fixtures::run()).map_err(|e| e.to_string())?;
    ensure(t == build_annotation_relabeling(&fixtures::run()).unwrap(), || {
        "annotation differs".into()
    })
}

struct Criterion {
    id: usize,
    title: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

const fn secs(n: u64) -> Option<Duration> {
    Some(Duration::from_secs(n))
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "ex1 outputs d^size(e)",
        limit: secs(5),
        run: c1_ex1,
    },
    Criterion {
        id: 2,
        title: "uniform vs full translations of run",
        limit: secs(10),
        run: c2_uniform_semantics,
    },
    Criterion {
        id: 3,
        title: "unambiguous subsets of run at f",
        limit: None,
        run: c3_subset_count,
    },
    Criterion {
        id: 4,
        title: "annotate-then-apply equals uniform fiber",
        limit: secs(120),
        run: c4_annotate_then_apply,
    },
    Criterion {
        id: 5,
        title: "top-down uniformization contract",
        limit: secs(300),
        run: c5_topdown,
    },
    Criterion {
        id: 6,
        title: "uniformizer contract",
        limit: secs(900),
        run: c6_uniformizer,
    },
    Criterion {
        id: 7,
        title: "domain automaton matches definedness",
        limit: secs(300),
        run: c7_domain,
    },
    Criterion {
        id: 8,
        title: "look-around composition",
        limit: secs(120),
        run: c8_composition_of_lookarounds,
    },
    Criterion {
        id: 9,
        title: "stage-wise uniformization of a chain",
        limit: secs(600),
        run: c9_chain,
    },
    Criterion {
        id: 10,
        title: "root-rule normalization",
        limit: secs(120),
        run: c10_normalization,
    },
    Criterion {
        id: 11,
        title: "byte-identical serializations",
        limit: None,
        run: c11_determinism,
    },
];

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    panic::set_hook(Box::new(|_| {}));
    for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let late = c.limit.is_some_and(|l| elapsed > l);
        let ok = result.is_ok() && !late;
        let limit = c
            .limit
            .map(|l| format!("{}s", l.as_secs()))
            .unwrap_or_else(|| "none".into());
        println!(
            "{} criterion {:>2}: {} ({:.2}s, limit {limit})",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            elapsed.as_secs_f64()
        );
        if let Err(msg) = &result {
            for line in msg.lines() {
                println!("    {line}");
            }
        }
        if late {
            println!("    exceeded the time limit");
        }
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
