//! Text format for atts, relabelings, look-arounds and tree automata.
//!
//! ```text
//! att ex1 {
//!   input { f:2, e:0 } output { d:1, e:0 }
//!   syn { a } inh { b } initial a
//!   rules f { a(pi) -> d(a(pi.2)); b(pi.2) -> a(pi.1); b(pi.1) -> b(pi); }
//!   rules e { a(pi) -> d(b(pi)); }
//!   rules root { b(pi.1) -> e; }
//! }
//! ```
//!
//! Besides `att`, `burelab`, `tdrelab`, `lookaround` and `automaton` items, an
//! `attu NAME { around NAME core NAME }` item pairs a look-around with an att.
//! Items may only refer to items defined earlier in the same file. `//`
//! starts a line comment.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{
    validate_att, Att, AttWithLookAround, BottomUpAutomaton, BottomUpRelabeling, Lhs, LookAround, Rhs, Rule,
    TopDownRelabeling,
};
use crate::trees::{is_annotated_name, scan_name, Name, RankedAlphabet};
use crate::uniformize::UniformizerBundle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Item {
    Att(Att),
    BottomUp(BottomUpRelabeling),
    TopDown(TopDownRelabeling),
    LookAround(LookAround),
    Automaton(BottomUpAutomaton),
    AttU(AttWithLookAround),
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::Att(x) => &x.name,
            Item::BottomUp(x) => &x.name,
            Item::TopDown(x) => &x.name,
            Item::LookAround(x) => &x.name,
            Item::Automaton(x) => &x.name,
            Item::AttU(x) => &x.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Item::Att(_) => "att",
            Item::BottomUp(_) => "burelab",
            Item::TopDown(_) => "tdrelab",
            Item::LookAround(_) => "lookaround",
            Item::Automaton(_) => "automaton",
            Item::AttU(_) => "attu",
        }
    }
}

/// The items of one file, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub items: Vec<Item>,
}

impl Document {
    pub fn get(&self, name: &str) -> Option<&Item> {
        self.items.iter().find(|i| i.name() == name)
    }

    /// The last item; files written by this crate end with their main object.
    pub fn main(&self) -> Option<&Item> {
        self.items.last()
    }

    pub fn push(&mut self, item: Item) -> Result<(), String> {
        match self.get(item.name()) {
            Some(existing) if *existing == item => Ok(()),
            Some(_) => Err(format!("two different items are named `{}`", item.name())),
            None => {
                self.items.push(item);
                Ok(())
            }
        }
    }

    /// Adds an object together with the items it refers to.
    pub fn push_lookaround(&mut self, u: &LookAround) -> Result<(), String> {
        self.push(Item::BottomUp(u.bottom.clone()))?;
        self.push(Item::TopDown(u.top.clone()))?;
        self.push(Item::LookAround(u.clone()))
    }

    pub fn push_attu(&mut self, d: &AttWithLookAround) -> Result<(), String> {
        self.push_lookaround(&d.around)?;
        self.push(Item::Att(d.core.clone()))?;
        self.push(Item::AttU(d.clone()))
    }

    /// Every stage of a uniformization, ending with the resulting att with
    /// look-around.
    pub fn push_bundle(&mut self, b: &UniformizerBundle) -> Result<(), String> {
        self.push(Item::TopDown(b.annotation.clone()))?;
        self.push(Item::Automaton(b.applier_domain.clone()))?;
        self.push(Item::TopDown(b.restricted.clone()))?;
        self.push_attu(&b.result)
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            f.write_str(&serialize_item(item))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Serialization

fn sig(a: &RankedAlphabet) -> String {
    if a.is_empty() {
        return "{ }".into();
    }
    let body: Vec<String> = a.iter().map(|(s, k)| format!("{s}:{k}")).collect();
    format!("{{ {} }}", body.join(", "))
}

fn names<'a>(it: impl IntoIterator<Item = &'a Name>) -> String {
    let body: Vec<&str> = it.into_iter().map(|n| &**n).collect();
    if body.is_empty() {
        "{ }".into()
    } else {
        format!("{{ {} }}", body.join(", "))
    }
}

fn write_rules(out: &mut String, header: &str, rules: &[Rule]) {
    if rules.is_empty() {
        return;
    }
    let _ = writeln!(out, "  rules {header} {{");
    for r in rules {
        let _ = writeln!(out, "    {r};");
    }
    out.push_str("  }\n");
}

pub fn serialize_att(a: &Att) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "att {} {{", a.name);
    let _ = writeln!(out, "  input {}", sig(&a.input));
    let _ = writeln!(out, "  output {}", sig(&a.output));
    let _ = writeln!(out, "  syn {}", names(&a.syn));
    let _ = writeln!(out, "  inh {}", names(&a.inh));
    let _ = writeln!(out, "  initial {}", a.initial);
    for (sym, _) in a.input.iter() {
        write_rules(&mut out, sym, a.rules_for(sym));
    }
    write_rules(&mut out, "root", &a.root_rules);
    out.push_str("}\n");
    out
}

fn serialize_bottomup(b: &BottomUpRelabeling) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "burelab {} {{", b.name);
    let _ = writeln!(out, "  input {}", sig(b.input()));
    let _ = writeln!(out, "  output {}", sig(b.output()));
    let _ = writeln!(out, "  states {}", names(b.states()));
    let finals: Vec<&Name> = (0..b.states().len())
        .filter(|&p| b.is_final(p))
        .map(|p| &b.states()[p])
        .collect();
    let _ = writeln!(out, "  finals {}", names(finals));
    for r in b.rules() {
        let kids: Vec<&str> = r.children.iter().map(|&p| &*b.states()[p]).collect();
        let _ = writeln!(
            out,
            "  rule {}({}) -> {} / {};",
            r.symbol,
            kids.join(", "),
            b.states()[r.state],
            r.output
        );
    }
    out.push_str("}\n");
    out
}

fn serialize_topdown(t: &TopDownRelabeling) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tdrelab {} {{", t.name);
    let _ = writeln!(out, "  input {}", sig(t.input()));
    let _ = writeln!(out, "  output {}", sig(t.output()));
    let _ = writeln!(out, "  states {}", names(t.states()));
    let _ = writeln!(
        out,
        "  initials {}",
        names(t.initials().iter().map(|&q| &t.states()[q]))
    );
    for r in t.rules() {
        let vars: Vec<String> = (1..=r.children.len()).map(|i| format!("x{i}")).collect();
        let stated: Vec<String> = r
            .children
            .iter()
            .enumerate()
            .map(|(i, &q)| format!("{}(x{})", t.states()[q], i + 1))
            .collect();
        let _ = writeln!(
            out,
            "  rule {}({}({})) -> {}({});",
            t.states()[r.state],
            r.symbol,
            vars.join(", "),
            r.output,
            stated.join(", ")
        );
    }
    out.push_str("}\n");
    out
}

fn serialize_automaton(m: &BottomUpAutomaton) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "automaton {} {{", m.name);
    let _ = writeln!(out, "  alphabet {}", sig(m.alphabet()));
    let _ = writeln!(out, "  states {}", names(m.states()));
    let _ = writeln!(out, "  finals {}", names(m.finals().map(|q| &m.states()[q])));
    for ((sym, kids), &to) in m.transitions() {
        let kids: Vec<&str> = kids.iter().map(|&q| &*m.states()[q]).collect();
        let _ = writeln!(out, "  trans {sym}({}) -> {};", kids.join(", "), m.states()[to]);
    }
    out.push_str("}\n");
    out
}

pub fn serialize_item(item: &Item) -> String {
    match item {
        Item::Att(a) => serialize_att(a),
        Item::BottomUp(b) => serialize_bottomup(b),
        Item::TopDown(t) => serialize_topdown(t),
        Item::Automaton(m) => serialize_automaton(m),
        Item::LookAround(u) => format!(
            "lookaround {} {{ bottom {} top {} }}\n",
            u.name, u.bottom.name, u.top.name
        ),
        Item::AttU(d) => format!("attu {} {{ around {} core {} }}\n", d.name, d.around.name, d.core.name),
    }
}

pub fn serialize_lookaround(u: &LookAround) -> String {
    let mut doc = Document::default();
    doc.push_lookaround(u).expect("fresh document");
    doc.to_string()
}

pub fn serialize_attu(d: &AttWithLookAround) -> String {
    let mut doc = Document::default();
    doc.push_attu(d).expect("component names are distinct");
    doc.to_string()
}

pub fn serialize_bundle(b: &UniformizerBundle) -> String {
    let mut doc = Document::default();
    doc.push_bundle(b).expect("component names are distinct");
    doc.to_string()
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCT: [&str; 10] = ["->", "{", "}", "(", ")", ",", ":", ";", ".", "/"];

fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    let mut pos = 0;
    let (mut line, mut line_start) = (1, 0);
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("non-empty");
        let col = text[line_start..pos].chars().count() + 1;
        if c == '\n' {
            line += 1;
            pos += 1;
            line_start = pos;
            continue;
        }
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        if rest.starts_with("//") {
            pos += rest.find('\n').unwrap_or(rest.len());
            continue;
        }
        if let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) {
            out.push(Token {
                tok: Tok::Punct(p),
                line,
                col,
            });
            pos += p.len();
            continue;
        }
        let end = scan_name(text, pos);
        if end == pos {
            return Err(DslError {
                line,
                col,
                message: format!("unexpected character `{c}`"),
            });
        }
        out.push(Token {
            tok: Tok::Name(text[pos..end].to_string()),
            line,
            col,
        });
        pos = end;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    doc: Document,
    /// Atts whose input alphabet uses generated names, with their position.
    annotated_atts: Vec<(String, usize, usize)>,
}

type PResult<T> = Result<T, DslError>;

impl Parser {
    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(DslError {
            line,
            col,
            message: message.into(),
        })
    }

    fn err_at<T>(&self, at: (usize, usize), message: impl Into<String>) -> PResult<T> {
        Err(DslError {
            line: at.0,
            col: at.1,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a name"),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Name(n)) if n == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Name(n)) if n == kw)
    }

    fn nat(&mut self) -> PResult<usize> {
        let at = self.here();
        let n = self.name()?;
        n.parse()
            .or_else(|_| self.err_at(at, format!("expected a number, found `{n}`")))
    }

    fn sig(&mut self) -> PResult<RankedAlphabet> {
        self.expect("{")?;
        let mut a = RankedAlphabet::new();
        if self.eat("}") {
            return Ok(a);
        }
        loop {
            let at = self.here();
            let n = self.name()?;
            self.expect(":")?;
            let k = self.nat()?;
            if let Err(e) = a.insert(&n, k) {
                return self.err_at(at, e.to_string());
            }
            if self.eat("}") {
                return Ok(a);
            }
            self.expect(",")?;
        }
    }

    fn names(&mut self) -> PResult<Vec<Name>> {
        self.expect("{")?;
        let mut out = Vec::new();
        if self.eat("}") {
            return Ok(out);
        }
        loop {
            out.push(Name::from(self.name()?));
            if self.eat("}") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    /// `NAME ("," NAME)*` or nothing, up to the closing parenthesis.
    fn name_list(&mut self) -> PResult<Vec<Name>> {
        let mut out = Vec::new();
        if self.is_punct(")") {
            return Ok(out);
        }
        loop {
            out.push(Name::from(self.name()?));
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn item(&mut self) -> PResult<Item> {
        let at = self.here();
        let kind = self.name()?;
        let item = match kind.as_str() {
            "att" => self.att(at)?,
            "burelab" => self.burelab()?,
            "tdrelab" => self.tdrelab()?,
            "lookaround" => self.lookaround()?,
            "automaton" => self.automaton()?,
            "attu" => self.attu()?,
            other => return self.err_at(at, format!("unknown item kind `{other}`")),
        };
        if self.doc.get(item.name()).is_some() {
            return self.err_at(at, format!("item `{}` defined twice", item.name()));
        }
        Ok(item)
    }

    fn path(&mut self) -> PResult<usize> {
        self.keyword("pi")?;
        if self.eat(".") {
            let at = self.here();
            let i = self.nat()?;
            if i == 0 {
                return self.err_at(at, "child indices start at 1");
            }
            Ok(i)
        } else {
            Ok(0)
        }
    }

    fn looks_like_atref(&self, attrs: &HashMap<String, bool>) -> bool {
        matches!(self.peek(), Some(Tok::Name(n)) if attrs.contains_key(n))
            && matches!(self.peek_at(1), Some(Tok::Punct("(")))
            && matches!(self.peek_at(2), Some(Tok::Name(p)) if p == "pi")
            && matches!(self.peek_at(3), Some(Tok::Punct(")")) | Some(Tok::Punct(".")))
    }

    fn rhs(&mut self, attrs: &HashMap<String, bool>) -> PResult<Rhs> {
        let at = self.here();
        if self.looks_like_atref(attrs) {
            let n = self.name()?;
            self.expect("(")?;
            let i = self.path()?;
            self.expect(")")?;
            return match (attrs[&n], i) {
                (true, 0) => self.err_at(at, format!("synthesized `{n}` needs a child path pi.i")),
                (true, i) => Ok(Rhs::Syn(n.into(), i)),
                (false, 0) => Ok(Rhs::Inh(n.into())),
                (false, _) => self.err_at(at, format!("inherited `{n}` on a right-hand side must use pi")),
            };
        }
        let n = self.name()?;
        let mut kids = Vec::new();
        if self.eat("(") {
            loop {
                kids.push(self.rhs(attrs)?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(Rhs::Out(n.into(), kids))
    }

    fn rule(&mut self, attrs: &HashMap<String, bool>) -> PResult<Rule> {
        let at = self.here();
        let n = self.name()?;
        self.expect("(")?;
        let i = self.path()?;
        self.expect(")")?;
        let lhs = match (attrs.get(&n), i) {
            (None, _) => return self.err_at(at, format!("undeclared attribute `{n}`")),
            (Some(true), 0) => Lhs::Syn(n.into()),
            (Some(true), _) => return self.err_at(at, format!("synthesized `{n}` on the left must use pi")),
            (Some(false), 0) => return self.err_at(at, format!("inherited `{n}` on the left needs pi.i")),
            (Some(false), i) => Lhs::Inh(n.into(), i),
        };
        self.expect("->")?;
        let rhs = self.rhs(attrs)?;
        self.expect(";")?;
        Ok(Rule::new(lhs, rhs))
    }

    fn att(&mut self, at: (usize, usize)) -> PResult<Item> {
        let name = self.name()?;
        self.expect("{")?;
        self.keyword("input")?;
        let input = self.sig()?;
        self.keyword("output")?;
        let output = self.sig()?;
        self.keyword("syn")?;
        let syn = self.names()?;
        self.keyword("inh")?;
        let inh = self.names()?;
        self.keyword("initial")?;
        let initial = Name::from(self.name()?);
        let mut attrs: HashMap<String, bool> = HashMap::new();
        for a in &syn {
            attrs.insert(a.to_string(), true);
        }
        for b in &inh {
            attrs.entry(b.to_string()).or_insert(false);
        }
        if input.iter().any(|(s, _)| is_annotated_name(s)) {
            self.annotated_atts.push((name.clone(), at.0, at.1));
        }
        let mut a = Att::new(name, input, output, syn, inh, initial);
        while self.is_keyword("rules") {
            self.pos += 1;
            let block_at = self.here();
            let target = self.name()?;
            if target != "root" && !a.input.contains(&target) {
                return self.err_at(block_at, format!("rules for unknown input symbol `{target}`"));
            }
            self.expect("{")?;
            let mut list = Vec::new();
            while !self.eat("}") {
                list.push(self.rule(&attrs)?);
            }
            if target == "root" {
                a.root_rules.extend(list);
            } else {
                a.rules.get_mut(target.as_str()).expect("declared symbol").extend(list);
            }
        }
        self.expect("}")?;
        let violations = validate_att(&a);
        if let Some(v) = violations.first() {
            return self.err_at(at, format!("att `{}`: {v}", a.name));
        }
        Ok(Item::Att(a))
    }

    fn burelab(&mut self) -> PResult<Item> {
        let at = self.here();
        let name = self.name()?;
        self.expect("{")?;
        self.keyword("input")?;
        let input = self.sig()?;
        self.keyword("output")?;
        let output = self.sig()?;
        self.keyword("states")?;
        let states = self.names()?;
        self.keyword("finals")?;
        let finals = self.names()?;
        let mut rules = Vec::new();
        while self.is_keyword("rule") {
            self.pos += 1;
            let sym = Name::from(self.name()?);
            self.expect("(")?;
            let kids = self.name_list()?;
            self.expect(")")?;
            self.expect("->")?;
            let state = Name::from(self.name()?);
            self.expect("/")?;
            let out = Name::from(self.name()?);
            self.expect(";")?;
            rules.push((sym, kids, state, out));
        }
        self.expect("}")?;
        match BottomUpRelabeling::new(name, input, output, states, &finals, rules) {
            Ok(b) => Ok(Item::BottomUp(b)),
            Err(e) => self.err_at(at, e.to_string()),
        }
    }

    fn tdrelab(&mut self) -> PResult<Item> {
        let at = self.here();
        let name = self.name()?;
        self.expect("{")?;
        self.keyword("input")?;
        let input = self.sig()?;
        self.keyword("output")?;
        let output = self.sig()?;
        self.keyword("states")?;
        let states = self.names()?;
        self.keyword("initials")?;
        let initials = self.names()?;
        let mut rules = Vec::new();
        while self.is_keyword("rule") {
            self.pos += 1;
            let rule_at = self.here();
            let q = Name::from(self.name()?);
            self.expect("(")?;
            let sym = Name::from(self.name()?);
            let mut vars = Vec::new();
            if self.eat("(") {
                vars = self.name_list()?;
                self.expect(")")?;
            }
            self.expect(")")?;
            self.expect("->")?;
            let out = Name::from(self.name()?);
            let mut kids = Vec::new();
            if self.eat("(") {
                if !self.is_punct(")") {
                    loop {
                        let qi = Name::from(self.name()?);
                        self.expect("(")?;
                        let x = Name::from(self.name()?);
                        self.expect(")")?;
                        kids.push((qi, x));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
            }
            self.expect(";")?;
            if kids.len() != vars.len() || kids.iter().zip(&vars).any(|((_, x), v)| x != v) {
                return self.err_at(rule_at, "a relabeling rule must keep its variables in order");
            }
            rules.push((q, sym, out, kids.into_iter().map(|(q, _)| q).collect()));
        }
        self.expect("}")?;
        match TopDownRelabeling::new(name, input, output, states, &initials, rules) {
            Ok(t) => Ok(Item::TopDown(t)),
            Err(e) => self.err_at(at, e.to_string()),
        }
    }

    fn lookaround(&mut self) -> PResult<Item> {
        let at = self.here();
        let name = self.name()?;
        self.expect("{")?;
        self.keyword("bottom")?;
        let b = self.name()?;
        self.keyword("top")?;
        let t = self.name()?;
        self.expect("}")?;
        let bottom = match self.doc.get(&b) {
            Some(Item::BottomUp(x)) => x.clone(),
            _ => return self.err_at(at, format!("`{b}` is not a burelab defined earlier")),
        };
        let top = match self.doc.get(&t) {
            Some(Item::TopDown(x)) => x.clone(),
            _ => return self.err_at(at, format!("`{t}` is not a tdrelab defined earlier")),
        };
        match LookAround::new(name, bottom, top) {
            Ok(u) => Ok(Item::LookAround(u)),
            Err(e) => self.err_at(at, e.to_string()),
        }
    }

    fn attu(&mut self) -> PResult<Item> {
        let at = self.here();
        let name = self.name()?;
        self.expect("{")?;
        self.keyword("around")?;
        let u = self.name()?;
        self.keyword("core")?;
        let c = self.name()?;
        self.expect("}")?;
        let around = match self.doc.get(&u) {
            Some(Item::LookAround(x)) => x.clone(),
            _ => return self.err_at(at, format!("`{u}` is not a lookaround defined earlier")),
        };
        let core = match self.doc.get(&c) {
            Some(Item::Att(x)) => x.clone(),
            _ => return self.err_at(at, format!("`{c}` is not an att defined earlier")),
        };
        match AttWithLookAround::new(name, around, core) {
            Ok(d) => Ok(Item::AttU(d)),
            Err(e) => self.err_at(at, e.to_string()),
        }
    }

    fn automaton(&mut self) -> PResult<Item> {
        let at = self.here();
        let name = self.name()?;
        self.expect("{")?;
        self.keyword("alphabet")?;
        let alphabet = self.sig()?;
        self.keyword("states")?;
        let states = self.names()?;
        self.keyword("finals")?;
        let finals = self.names()?;
        let mut trans = Vec::new();
        let mut seen = BTreeMap::new();
        while self.is_keyword("trans") {
            self.pos += 1;
            let t_at = self.here();
            let sym = Name::from(self.name()?);
            self.expect("(")?;
            let kids = self.name_list()?;
            self.expect(")")?;
            self.expect("->")?;
            let to = Name::from(self.name()?);
            self.expect(";")?;
            if seen.insert((sym.clone(), kids.clone()), ()).is_some() {
                return self.err_at(t_at, "two transitions for the same symbol and child states");
            }
            trans.push((sym, kids, to));
        }
        self.expect("}")?;
        match BottomUpAutomaton::new(name, alphabet, states, &finals, trans) {
            Ok(m) => Ok(Item::Automaton(m)),
            Err(e) => self.err_at(at, e.to_string()),
        }
    }
}

/// Parses a whole file. Generated (`@{...}`) symbols are accepted in an
/// att's input alphabet only if that att is the core of an `attu` item.
pub fn parse_dsl(text: &str) -> Result<Document, DslError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        doc: Document::default(),
        annotated_atts: Vec::new(),
    };
    while p.pos < p.toks.len() {
        let item = p.item()?;
        p.doc.items.push(item);
    }
    for (name, line, col) in &p.annotated_atts {
        let is_core = p
            .doc
            .items
            .iter()
            .any(|i| matches!(i, Item::AttU(d) if d.core.name == *name));
        if !is_core {
            return Err(DslError {
                line: *line,
                col: *col,
                message: format!("att `{name}` uses generated `@{{...}}` symbols in its input alphabet"),
            });
        }
    }
    Ok(p.doc)
}

fn single<T>(text: &str, what: &str, pick: impl Fn(&Item) -> Option<T>) -> Result<T, DslError> {
    let doc = parse_dsl(text)?;
    doc.items.iter().rev().find_map(&pick).ok_or(DslError {
        line: 1,
        col: 1,
        message: format!("no {what} item found"),
    })
}

/// Parses a file and returns its last `att` item.
pub fn parse_att(text: &str) -> Result<Att, DslError> {
    single(text, "att", |i| match i {
        Item::Att(a) => Some(a.clone()),
        _ => None,
    })
}

/// Parses a file and returns its last `lookaround` item.
pub fn parse_lookaround(text: &str) -> Result<LookAround, DslError> {
    single(text, "lookaround", |i| match i {
        Item::LookAround(u) => Some(u.clone()),
        _ => None,
    })
}

/// Parses a file and returns its last `attu` item.
pub fn parse_attu(text: &str) -> Result<AttWithLookAround, DslError> {
    single(text, "attu", |i| match i {
        Item::AttU(d) => Some(d.clone()),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_round_trip() {
        for (name, src) in fixtures::SOURCES {
            let doc = parse_dsl(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = parse_dsl(&doc.to_string()).unwrap();
            assert_eq!(doc, again, "{name}");
            assert_eq!(doc.to_string(), again.to_string(), "{name}");
        }
    }

    #[test]
    fn duplicate_symbols_are_rejected() {
        let e = parse_dsl("att x { input { e:0, e:0 } output { } syn { a } inh { } initial a }").unwrap_err();
        assert!(e.message.contains("duplicate symbol"), "{e}");
    }

    #[test]
    fn annotated_input_needs_attu() {
        let e = parse_dsl("att x { input { e@{}:0 } output { e:0 } syn { a } inh { } initial a }").unwrap_err();
        assert!(e.message.contains("generated"), "{e}");
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_dsl("att x {\n  input { f:2 }\n  outptu { }").unwrap_err();
        assert_eq!((e.line, e.col), (3, 3));
        let e = parse_att(
            "att x { input { e:0 } output { e:0 } syn { a } inh { } initial a rules e { a(pi) -> a(pi.3); } }",
        )
        .unwrap_err();
        assert!(e.message.contains("child index exceeds rank"), "{e}");
    }

    #[test]
    fn uniformized_output_parses_back() {
        let b = crate::uniformize::uniformize_att(&fixtures::ex1()).unwrap();
        let text = serialize_bundle(&b);
        let doc = parse_dsl(&text).unwrap();
        match doc.main() {
            Some(Item::AttU(d)) => assert_eq!(d, &b.result),
            other => panic!("unexpected main item {other:?}"),
        }
    }
}
