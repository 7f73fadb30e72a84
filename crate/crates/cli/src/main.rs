use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use uniatt::check::{
    check_composition, check_equivalence, check_lemma2, check_prop4, check_uniformizer, CheckReport, Evaluable,
    DEFAULT_BUDGET,
};
use uniatt::compose::{compose_bottomup, compose_lookarounds, restrict_att_output};
use uniatt::domain::{datt_domain_automaton, dattu_domain_automaton};
use uniatt::dsl::{
    parse_dsl, serialize_att, serialize_attu, serialize_bundle, serialize_item, serialize_lookaround, Document, Item,
};
use uniatt::eval::{
    enumerate_derivations_bounded, enumerate_uniform, eval_datt, eval_dattu, leftmost_trace, run_bottomup_relabeling,
    run_lookaround, run_topdown_relabeling_all, EvalOutcome,
};
use uniatt::model::is_deterministic;
use uniatt::random::{random_att, RandomSizes};
use uniatt::uniformize::{uniformize_att, uniformize_attu, uniformize_topdown};
use uniatt::{fixtures, parse_tree, RankedAlphabet, Tree};

/// Attributed tree transducers with look-around: evaluation, domains and
/// uniformization.
#[derive(Parser)]
#[command(name = "uniatt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Largest input tree size for checks [default: 5, or 9 when comparing
    /// two deterministic objects]
    #[arg(long, global = true)]
    max_size: Option<usize>,
    /// Expansion budget for bounded derivation search
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Write the result to FILE instead of stdout
    #[arg(short = 'o', global = true, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a DSL file and report every item in it
    Validate { file: PathBuf },
    /// Run the last item of FILE on TREE
    Eval {
        file: PathBuf,
        tree: String,
        /// Print the leftmost first-rule derivation of an att
        #[arg(long)]
        trace: bool,
    },
    /// Print every output of an att (or att with look-around) on TREE
    Enumerate {
        file: PathBuf,
        tree: String,
        /// Only outputs of derivations with one rule per attribute and node
        #[arg(long)]
        uniform: bool,
    },
    /// Print the domain automaton of a deterministic att
    Domain { file: PathBuf },
    /// Build a deterministic transducer with look-around for the last item
    Uniformize { file: PathBuf },
    /// Compose two look-arounds or bottom-up relabelings, or restrict an
    /// att's output by an automaton
    Compose { first: PathBuf, second: PathBuf },
    #[command(subcommand)]
    Check(CheckCommand),
    /// Write the bundled example files into DIR
    Fixtures {
        dir: PathBuf,
        /// Also write a random att generated from this seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// The uniformization of an att selects one of its outputs wherever it has any
    Uniformizer { file: PathBuf },
    /// Two objects have the same translation on small inputs
    Equivalence { first: PathBuf, second: PathBuf },
    /// Stage-wise uniformization of a functional chain keeps the composition
    Composition {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Annotating with rule sets and then applying them gives the uniform outputs
    Lemma2 { file: PathBuf },
    /// The uniformized top-down relabeling picks one of the original outputs
    Prop4 { file: PathBuf },
}

enum Outcome {
    Done,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Document> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dsl(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn main_item(path: &Path) -> Result<Item> {
    load(path)?
        .main()
        .cloned()
        .ok_or_else(|| anyhow!("{}: no items", path.display()))
}

fn evaluable(path: &Path) -> Result<Evaluable> {
    match main_item(path)? {
        Item::Att(a) => Ok(Evaluable::Att(a)),
        Item::AttU(d) => Ok(Evaluable::AttU(d)),
        other => bail!(
            "{}: expected an att or attu, found {} {}",
            path.display(),
            other.kind(),
            other.name()
        ),
    }
}

fn input_alphabet(item: &Item) -> &RankedAlphabet {
    match item {
        Item::Att(a) => &a.input,
        Item::BottomUp(b) => b.input(),
        Item::TopDown(t) => t.input(),
        Item::LookAround(u) => u.input(),
        Item::Automaton(m) => m.alphabet(),
        Item::AttU(d) => d.input(),
    }
}

fn tree_for(item: &Item, text: &str) -> Result<Tree> {
    parse_tree(text, Some(input_alphabet(item))).map_err(|e| anyhow!("tree {text:?}: {e}"))
}

fn lines(trees: &[Tree]) -> String {
    trees.iter().map(|t| format!("{t}\n")).collect()
}

fn report(r: &CheckReport, out: &mut String) -> Outcome {
    out.push_str(&r.to_string());
    eprintln!("{} took {:.2}s", r.name, r.elapsed.as_secs_f64());
    if r.passed() {
        Outcome::Done
    } else {
        Outcome::CheckFailed
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut out = String::new();
    let outcome = match &cli.command {
        Command::Validate { file } => {
            for item in &load(file)?.items {
                let note = match item {
                    Item::Att(a) if is_deterministic(a) => " (deterministic)",
                    Item::AttU(d) if d.is_deterministic() => " (deterministic)",
                    Item::TopDown(t) if t.is_deterministic() => " (deterministic)",
                    _ => "",
                };
                out.push_str(&format!("{} {}: ok{note}\n", item.kind(), item.name()));
            }
            Outcome::Done
        }
        Command::Eval { file, tree, trace } => {
            let item = main_item(file)?;
            let s = tree_for(&item, tree)?;
            eval(&item, &s, *trace, cli.budget, &mut out)?;
            Outcome::Done
        }
        Command::Enumerate { file, tree, uniform } => {
            let item = main_item(file)?;
            let s = tree_for(&item, tree)?;
            let trees = match (&item, uniform) {
                (Item::Att(a), true) => enumerate_uniform(a, &s)?,
                (Item::Att(a), false) => {
                    let f = enumerate_derivations_bounded(a, &s, cli.budget)?;
                    if !f.complete {
                        eprintln!("warning: search stopped early; the list may be incomplete");
                    }
                    f.trees
                }
                (Item::AttU(_), true) => bail!("--uniform needs an att"),
                (Item::AttU(d), false) => {
                    let (trees, complete) = Evaluable::AttU(d.clone()).fiber(&s, cli.budget)?;
                    if !complete {
                        eprintln!("warning: search stopped early; the list may be incomplete");
                    }
                    trees
                }
                (other, _) => bail!("cannot enumerate a {}", other.kind()),
            };
            out.push_str(&lines(&trees));
            Outcome::Done
        }
        Command::Domain { file } => {
            let m = match main_item(file)? {
                Item::Att(a) => datt_domain_automaton(&a)?,
                Item::AttU(d) => dattu_domain_automaton(&d)?,
                other => bail!("cannot build the domain of a {}", other.kind()),
            };
            out.push_str(&serialize_item(&Item::Automaton(m)));
            Outcome::Done
        }
        Command::Uniformize { file } => {
            out.push_str(&match main_item(file)? {
                Item::Att(a) => serialize_bundle(&uniformize_att(&a)?),
                Item::AttU(d) => serialize_attu(&uniformize_attu(&d)?),
                Item::TopDown(t) => serialize_lookaround(&uniformize_topdown(&t)),
                other => bail!("cannot uniformize a {}", other.kind()),
            });
            Outcome::Done
        }
        Command::Compose { first, second } => {
            out.push_str(&match (main_item(first)?, main_item(second)?) {
                (Item::LookAround(u1), Item::LookAround(u2)) => serialize_lookaround(&compose_lookarounds(&u1, &u2)?),
                (Item::BottomUp(b1), Item::BottomUp(b2)) => {
                    serialize_item(&Item::BottomUp(compose_bottomup(&b1, &b2)?))
                }
                (Item::Att(a), Item::Automaton(m)) => serialize_att(&restrict_att_output(&a, &m)?),
                (x, y) => bail!("cannot compose a {} with a {}", x.kind(), y.kind()),
            });
            Outcome::Done
        }
        Command::Check(c) => check(c, cli, &mut out)?,
        Command::Fixtures { dir, seed } => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut files: Vec<(String, String)> = fixtures::SOURCES
                .iter()
                .map(|(n, t)| (n.to_string(), t.to_string()))
                .collect();
            if let Some(seed) = seed {
                files.push((
                    format!("rand{seed}.att"),
                    serialize_att(&random_att(*seed, &RandomSizes::default())),
                ));
            }
            for (name, text) in files {
                let path = dir.join(&name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                out.push_str(&format!("{}\n", path.display()));
            }
            Outcome::Done
        }
    };
    match &cli.output {
        Some(path) => fs::write(path, out).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(outcome)
}

fn outcome(o: EvalOutcome, out: &mut String) {
    match o {
        EvalOutcome::Ground(t) => out.push_str(&format!("{t}\n")),
        other => out.push_str(&format!("undefined: {other}\n")),
    }
}

fn deterministic(e: &Evaluable) -> bool {
    match e {
        Evaluable::Att(a) => is_deterministic(a),
        Evaluable::AttU(d) => d.is_deterministic(),
    }
}

fn eval(item: &Item, s: &Tree, trace: bool, budget: usize, out: &mut String) -> Result<()> {
    let undefined = |why: &dyn std::fmt::Display| format!("undefined: {why}\n");
    match item {
        Item::Att(a) => {
            if trace {
                for (i, (form, rule)) in leftmost_trace(a, s, budget)?.iter().enumerate() {
                    match rule {
                        Some(r) => out.push_str(&format!("{i:>4}  {form}  [{r}]\n")),
                        None => out.push_str(&format!("{i:>4}  {form}\n")),
                    }
                }
            } else if !is_deterministic(a) {
                bail!("{} is nondeterministic; use `enumerate` or `eval --trace`", a.name);
            } else {
                outcome(eval_datt(a, s)?, out);
            }
        }
        Item::AttU(d) => match eval_dattu(d, s)? {
            None => out.push_str(&undefined(&"outside the look-around's domain")),
            Some(o) => outcome(o, out),
        },
        Item::LookAround(u) => match run_lookaround(u, s) {
            Some(t) => out.push_str(&format!("{t}\n")),
            None => out.push_str(&undefined(&"no run")),
        },
        Item::TopDown(t) => {
            let all = run_topdown_relabeling_all(t, s);
            if all.is_empty() {
                out.push_str(&undefined(&"no run"));
            }
            out.push_str(&lines(&all));
        }
        Item::BottomUp(b) => match run_bottomup_relabeling(b, s) {
            Some(r) => {
                let fin = if r.is_final { "final" } else { "not final" };
                out.push_str(&format!("{}\nstate {} ({fin})\n", r.tree, r.state));
            }
            None => out.push_str(&undefined(&"no run")),
        },
        Item::Automaton(m) => out.push_str(if m.accepts(s) { "accept\n" } else { "reject\n" }),
    }
    Ok(())
}

fn check(c: &CheckCommand, cli: &Cli, out: &mut String) -> Result<Outcome> {
    let size = cli.max_size.unwrap_or(5);
    let r = match c {
        CheckCommand::Uniformizer { file } => match main_item(file)? {
            Item::Att(a) => check_uniformizer(&a, size)?,
            other => bail!("expected an att, found {} {}", other.kind(), other.name()),
        },
        CheckCommand::Equivalence { first, second } => {
            let (x, y) = (evaluable(first)?, evaluable(second)?);
            let size = cli
                .max_size
                .unwrap_or(if deterministic(&x) && deterministic(&y) { 9 } else { 5 });
            check_equivalence(&x, &y, size, cli.budget)?
        }
        CheckCommand::Composition { files } => {
            let chain = files.iter().map(|f| evaluable(f)).collect::<Result<Vec<_>>>()?;
            check_composition(&chain, size, cli.budget)?
        }
        CheckCommand::Lemma2 { file } => match main_item(file)? {
            Item::Att(a) => check_lemma2(&a, size)?,
            other => bail!("expected an att, found {} {}", other.kind(), other.name()),
        },
        CheckCommand::Prop4 { file } => match main_item(file)? {
            Item::TopDown(t) => check_prop4(&t, size)?,
            Item::LookAround(u) => check_prop4(&u.top, size)?,
            other => bail!("expected a tdrelab, found {} {}", other.kind(), other.name()),
        },
    };
    Ok(report(&r, out))
}
