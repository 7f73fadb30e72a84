//! Ranked alphabets, ranked trees, Dewey addresses, textual tree I/O and
//! exhaustive enumeration of small trees.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

/// Interned symbol, attribute and state name.
pub type Name = Arc<str>;

/// The reserved name of the root marker.
pub const ROOT_MARKER: &str = "#";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid address {0}")]
    InvalidAddress(NodeAddress),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("invalid symbol name `{0}`")]
    InvalidName(String),
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || "_'[]|*!?$%&~^=+".contains(c)
}

/// Scans a symbol name starting at byte offset `start` and returns its end.
///
/// A name is a run of name characters, optionally interleaved with generated
/// annotation segments of the form `@{1,2}` / `@{}`.
pub(crate) fn scan_name(text: &str, start: usize) -> usize {
    let bytes = text.as_bytes();
    let mut end = start;
    loop {
        let rest = &text[end..];
        if let Some(c) = rest.chars().next() {
            if is_name_char(c) {
                end += c.len_utf8();
                continue;
            }
        }
        if end > start && rest.starts_with("@{") {
            let mut j = end + 2;
            while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b',') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'}' && well_formed_indices(&text[end + 2..j]) {
                end = j + 1;
                continue;
            }
        }
        return end;
    }
}

fn well_formed_indices(body: &str) -> bool {
    body.is_empty() || body.split(',').all(|n| !n.is_empty())
}

/// Returns true if `name` is a complete, well-formed symbol name.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && scan_name(name, 0) == name.len()
}

/// Returns true if `name` carries a generated annotation segment.
pub fn is_annotated_name(name: &str) -> bool {
    name.contains("@{")
}

/// A finite set of symbols, each with a fixed rank. Iteration follows
/// declaration order; equality ignores order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankedAlphabet {
    symbols: IndexMap<Name, usize>,
}

impl RankedAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: AsRef<str>,
    {
        let mut alphabet = Self::new();
        for (name, rank) in pairs {
            alphabet.insert(name.as_ref(), rank)?;
        }
        Ok(alphabet)
    }

    pub fn insert(&mut self, name: &str, rank: usize) -> Result<(), TreeError> {
        if name == ROOT_MARKER || !is_valid_name(name) {
            return Err(TreeError::InvalidName(name.to_string()));
        }
        if self.symbols.contains_key(name) {
            return Err(TreeError::DuplicateSymbol(name.to_string()));
        }
        self.symbols.insert(Name::from(name), rank);
        Ok(())
    }

    pub fn rank(&self, name: &str) -> Option<usize> {
        self.symbols.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    /// The shared handle for `name`, if declared.
    pub fn name(&self, name: &str) -> Option<&Name> {
        self.symbols.get_key_value(name).map(|(k, _)| k)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.get_index_of(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> + '_ {
        self.symbols.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn max_rank(&self) -> usize {
        self.symbols.values().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for RankedAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return f.write_str("{ }");
        }
        f.write_str("{ ")?;
        for (i, (name, rank)) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}:{rank}")?;
        }
        f.write_str(" }")
    }
}

/// A node address: the sequence of 1-based child indices from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeAddress(pub Vec<usize>);

impl NodeAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: usize) -> Self {
        let mut path = self.0.clone();
        path.push(i);
        Self(path)
    }

    pub fn parent(&self) -> Option<(Self, usize)> {
        let (&last, init) = self.0.split_last()?;
        Some((Self(init.to_vec()), last))
    }

    /// Dotted form under the root marker, where the real root is node `1`.
    pub fn marked(&self) -> String {
        let mut out = String::from("1");
        for i in &self.0 {
            out.push('.');
            out.push_str(&i.to_string());
        }
        out
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

/// A ranked, ordered, labelled tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    label: Name,
    children: Vec<Tree>,
}

impl Tree {
    pub fn new(label: impl Into<Name>, children: Vec<Tree>) -> Self {
        Self {
            label: label.into(),
            children,
        }
    }

    pub fn leaf(label: impl Into<Name>) -> Self {
        Self::new(label, Vec::new())
    }

    pub fn label(&self) -> &Name {
        &self.label
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    pub fn rank(&self) -> usize {
        self.children.len()
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Tree::height).max().unwrap_or(0)
    }

    pub fn subtree_at(&self, v: &NodeAddress) -> Result<&Tree, TreeError> {
        let mut cur = self;
        for &i in &v.0 {
            cur = i
                .checked_sub(1)
                .and_then(|j| cur.children.get(j))
                .ok_or_else(|| TreeError::InvalidAddress(v.clone()))?;
        }
        Ok(cur)
    }

    pub fn replace_at(&self, v: &NodeAddress, replacement: Tree) -> Result<Tree, TreeError> {
        fn go(t: &Tree, path: &[usize], u: Tree, full: &NodeAddress) -> Result<Tree, TreeError> {
            let Some((&i, rest)) = path.split_first() else {
                return Ok(u);
            };
            if i == 0 || i > t.children.len() {
                return Err(TreeError::InvalidAddress(full.clone()));
            }
            let mut children = t.children.clone();
            children[i - 1] = go(&t.children[i - 1], rest, u, full)?;
            Ok(Tree::new(t.label.clone(), children))
        }
        go(self, &v.0, replacement, v)
    }

    /// All node addresses in pre-order.
    pub fn addresses(&self) -> Vec<NodeAddress> {
        fn go(t: &Tree, at: &mut Vec<usize>, out: &mut Vec<NodeAddress>) {
            out.push(NodeAddress(at.clone()));
            for (i, c) in t.children.iter().enumerate() {
                at.push(i + 1);
                go(c, at, out);
                at.pop();
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn contains_label(&self, label: &str) -> bool {
        &*self.label == label || self.children.iter().any(|c| c.contains_label(label))
    }

    /// Checks every label and arity against `alphabet`.
    pub fn validate(&self, alphabet: &RankedAlphabet) -> Result<(), TreeError> {
        match alphabet.rank(&self.label) {
            None => Err(TreeError::UnknownSymbol(self.label.to_string())),
            Some(k) if k != self.children.len() => Err(TreeError::ArityMismatch {
                symbol: self.label.to_string(),
                expected: k,
                found: self.children.len(),
            }),
            Some(_) => self.children.iter().try_for_each(|c| c.validate(alphabet)),
        }
    }

    /// Rewrites every label through `f`, keeping the shape.
    pub fn map_labels(&self, f: &mut impl FnMut(&Name) -> Name) -> Tree {
        let label = f(&self.label);
        Tree::new(label, self.children.iter().map(|c| c.map_labels(f)).collect())
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

pub fn render_tree(t: &Tree) -> String {
    t.to_string()
}

/// Parses `NAME | NAME "(" tree ("," tree)* ")"`; whitespace between tokens
/// is ignored. When `alphabet` is given, labels and arities are checked.
pub fn parse_tree(text: &str, alphabet: Option<&RankedAlphabet>) -> Result<Tree, TreeError> {
    let mut p = TreeParser { text, pos: 0 };
    let t = p.tree()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("trailing input"));
    }
    if let Some(alphabet) = alphabet {
        t.validate(alphabet)?;
    }
    Ok(t)
}

struct TreeParser<'a> {
    text: &'a str,
    pos: usize,
}

impl TreeParser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn error(&self, msg: &str) -> TreeError {
        TreeError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn tree(&mut self) -> Result<Tree, TreeError> {
        self.skip_ws();
        let end = scan_name(self.text, self.pos);
        if end == self.pos {
            return Err(self.error("expected a symbol name"));
        }
        let label = &self.text[self.pos..end];
        self.pos = end;
        let mut children = Vec::new();
        if self.eat('(') {
            loop {
                children.push(self.tree()?);
                if self.eat(',') {
                    continue;
                }
                if self.eat(')') {
                    break;
                }
                return Err(self.error("expected `,` or `)`"));
            }
        }
        Ok(Tree::new(label, children))
    }
}

/// All trees over `alphabet` with at most `max_size` nodes, ordered by size
/// and then by rendering. Alphabets without nullary symbols yield nothing.
pub fn enumerate_trees(alphabet: &RankedAlphabet, max_size: usize) -> impl Iterator<Item = Tree> {
    let by_size = trees_by_size(alphabet, max_size);
    by_size.into_iter().flatten()
}

/// `result[n - 1]` holds every tree of size exactly `n`, sorted by rendering.
pub fn trees_by_size(alphabet: &RankedAlphabet, max_size: usize) -> Vec<Vec<Tree>> {
    let mut table: Vec<Vec<Tree>> = Vec::with_capacity(max_size);
    for n in 1..=max_size {
        let mut level = Vec::new();
        for (sym, k) in alphabet.iter() {
            if k == 0 {
                if n == 1 {
                    level.push(Tree::leaf(sym.clone()));
                }
                continue;
            }
            if n < k + 1 {
                continue;
            }
            for parts in compositions(n - 1, k) {
                let pools: Vec<&Vec<Tree>> = parts.iter().map(|&m| &table[m - 1]).collect();
                for kids in cartesian(&pools) {
                    level.push(Tree::new(sym.clone(), kids));
                }
            }
        }
        let mut keyed: BTreeMap<String, Tree> = BTreeMap::new();
        for t in level {
            keyed.insert(t.to_string(), t);
        }
        table.push(keyed.into_values().collect());
    }
    table
}

/// Sorts trees by size and then by rendering, dropping duplicates. This is
/// the order used for every fiber the crate reports.
pub fn canonical_order(trees: impl IntoIterator<Item = Tree>) -> Vec<Tree> {
    let mut keyed: BTreeMap<(usize, String), Tree> = BTreeMap::new();
    for t in trees {
        keyed.insert((t.size(), t.to_string()), t);
    }
    keyed.into_values().collect()
}

/// Ordered ways of writing `total` as a sum of `parts` positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub(crate) fn cartesian<T: Clone>(pools: &[&Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for pool in pools {
        let mut next = Vec::with_capacity(acc.len() * pool.len());
        for prefix in &acc {
            for item in pool.iter() {
                let mut v = prefix.clone();
                v.push(item.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}
