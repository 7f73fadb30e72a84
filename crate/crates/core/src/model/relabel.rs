use std::collections::HashMap;

use crate::model::{Att, ModelError};
use crate::trees::{Name, RankedAlphabet};

fn index_states(states: &[Name]) -> Result<HashMap<Name, usize>, ModelError> {
    let mut ix = HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        if ix.insert(s.clone(), i).is_some() {
            return Err(ModelError::DuplicateState(s.to_string()));
        }
    }
    Ok(ix)
}

fn lookup(ix: &HashMap<Name, usize>, s: &str) -> Result<usize, ModelError> {
    ix.get(s)
        .copied()
        .ok_or_else(|| ModelError::UnknownState(s.to_string()))
}

fn check_ranked(alphabet: &RankedAlphabet, symbol: &str, arity: usize) -> Result<(), ModelError> {
    match alphabet.rank(symbol) {
        None => Err(ModelError::UnknownSymbol(symbol.to_string())),
        Some(k) if k != arity => Err(ModelError::RankMismatch(symbol.to_string())),
        Some(_) => Ok(()),
    }
}

/// `symbol(children...) -> state / output`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BuRule {
    pub symbol: Name,
    pub children: Vec<usize>,
    pub state: usize,
    pub output: Name,
}

/// Deterministic, possibly partial, bottom-up relabeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BottomUpRelabeling {
    pub name: String,
    input: RankedAlphabet,
    output: RankedAlphabet,
    states: Vec<Name>,
    finals: Vec<bool>,
    rules: Vec<BuRule>,
    index: HashMap<(Name, Vec<usize>), usize>,
}

impl BottomUpRelabeling {
    /// Builds a relabeling from named states; rejects two rules for the same
    /// symbol and child-state sequence.
    pub fn new(
        name: impl Into<String>,
        input: RankedAlphabet,
        output: RankedAlphabet,
        states: Vec<Name>,
        finals: &[Name],
        rules: Vec<(Name, Vec<Name>, Name, Name)>,
    ) -> Result<Self, ModelError> {
        let ix = index_states(&states)?;
        let mut is_final = vec![false; states.len()];
        for f in finals {
            is_final[lookup(&ix, f)?] = true;
        }
        let rules = rules
            .into_iter()
            .map(|(symbol, kids, state, output)| {
                Ok(BuRule {
                    symbol,
                    children: kids.iter().map(|k| lookup(&ix, k)).collect::<Result<_, _>>()?,
                    state: lookup(&ix, &state)?,
                    output,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Self::from_parts(name, input, output, states, is_final, rules)
    }

    pub fn from_parts(
        name: impl Into<String>,
        input: RankedAlphabet,
        output: RankedAlphabet,
        states: Vec<Name>,
        finals: Vec<bool>,
        rules: Vec<BuRule>,
    ) -> Result<Self, ModelError> {
        index_states(&states)?;
        let mut index = HashMap::with_capacity(rules.len());
        for (i, r) in rules.iter().enumerate() {
            check_ranked(&input, &r.symbol, r.children.len())?;
            check_ranked(&output, &r.output, r.children.len())?;
            if r.state >= states.len() || r.children.iter().any(|&c| c >= states.len()) {
                return Err(ModelError::UnknownState(format!("#{}", r.state)));
            }
            if index.insert((r.symbol.clone(), r.children.clone()), i).is_some() {
                return Err(ModelError::Nondeterministic(format!(
                    "two bottom-up rules for {}",
                    r.symbol
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            input,
            output,
            states,
            finals,
            rules,
            index,
        })
    }

    pub fn input(&self) -> &RankedAlphabet {
        &self.input
    }

    pub fn output(&self) -> &RankedAlphabet {
        &self.output
    }

    pub fn states(&self) -> &[Name] {
        &self.states
    }

    pub fn is_final(&self, state: usize) -> bool {
        self.finals[state]
    }

    pub fn rules(&self) -> &[BuRule] {
        &self.rules
    }

    pub fn transition(&self, symbol: &str, children: &[usize]) -> Option<&BuRule> {
        // keyed lookup without allocating a Name for the probe
        let key = (Name::from(symbol), children.to_vec());
        self.index.get(&key).map(|&i| &self.rules[i])
    }
}

/// `state(symbol(x1..xk)) -> output(children[0](x1), ...)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TdRule {
    pub state: usize,
    pub symbol: Name,
    pub output: Name,
    pub children: Vec<usize>,
}

/// Top-down relabeling with a set of initial states. Deterministic iff it has
/// one initial state and at most one rule per (state, symbol).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopDownRelabeling {
    pub name: String,
    input: RankedAlphabet,
    output: RankedAlphabet,
    states: Vec<Name>,
    initials: Vec<usize>,
    rules: Vec<TdRule>,
    index: HashMap<(usize, Name), Vec<usize>>,
}

impl TopDownRelabeling {
    pub fn new(
        name: impl Into<String>,
        input: RankedAlphabet,
        output: RankedAlphabet,
        states: Vec<Name>,
        initials: &[Name],
        rules: Vec<(Name, Name, Name, Vec<Name>)>,
    ) -> Result<Self, ModelError> {
        let ix = index_states(&states)?;
        let initials = initials.iter().map(|q| lookup(&ix, q)).collect::<Result<Vec<_>, _>>()?;
        let rules = rules
            .into_iter()
            .map(|(state, symbol, output, kids)| {
                Ok(TdRule {
                    state: lookup(&ix, &state)?,
                    symbol,
                    output,
                    children: kids.iter().map(|k| lookup(&ix, k)).collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Self::from_parts(name, input, output, states, initials, rules)
    }

    pub fn from_parts(
        name: impl Into<String>,
        input: RankedAlphabet,
        output: RankedAlphabet,
        states: Vec<Name>,
        initials: Vec<usize>,
        rules: Vec<TdRule>,
    ) -> Result<Self, ModelError> {
        index_states(&states)?;
        let mut index: HashMap<(usize, Name), Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            check_ranked(&input, &r.symbol, r.children.len())?;
            check_ranked(&output, &r.output, r.children.len())?;
            if r.state >= states.len() || r.children.iter().any(|&c| c >= states.len()) {
                return Err(ModelError::UnknownState(format!("#{}", r.state)));
            }
            index.entry((r.state, r.symbol.clone())).or_default().push(i);
        }
        if initials.iter().any(|&q| q >= states.len()) {
            return Err(ModelError::UnknownState("initial".into()));
        }
        Ok(Self {
            name: name.into(),
            input,
            output,
            states,
            initials,
            rules,
            index,
        })
    }

    pub fn input(&self) -> &RankedAlphabet {
        &self.input
    }

    pub fn output(&self) -> &RankedAlphabet {
        &self.output
    }

    pub fn states(&self) -> &[Name] {
        &self.states
    }

    pub fn initials(&self) -> &[usize] {
        &self.initials
    }

    pub fn rules(&self) -> &[TdRule] {
        &self.rules
    }

    /// Rules for `(state, symbol)` in declaration order.
    pub fn rules_for<'a>(&'a self, state: usize, symbol: &str) -> impl Iterator<Item = &'a TdRule> + 'a {
        self.index
            .get(&(state, Name::from(symbol)))
            .into_iter()
            .flatten()
            .map(move |&i| &self.rules[i])
    }

    pub fn is_deterministic(&self) -> bool {
        self.initials.len() == 1 && self.index.values().all(|v| v.len() <= 1)
    }
}

/// A bottom-up relabeling followed by a deterministic top-down relabeling
/// that reads its output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookAround {
    pub name: String,
    pub bottom: BottomUpRelabeling,
    pub top: TopDownRelabeling,
}

impl LookAround {
    pub fn new(
        name: impl Into<String>,
        bottom: BottomUpRelabeling,
        top: TopDownRelabeling,
    ) -> Result<Self, ModelError> {
        if bottom.output() != top.input() {
            return Err(ModelError::AlphabetMismatch(format!(
                "top-down part {} does not read the output of {}",
                top.name, bottom.name
            )));
        }
        if !top.is_deterministic() {
            return Err(ModelError::Nondeterministic(format!(
                "top-down part {} of a look-around",
                top.name
            )));
        }
        Ok(Self {
            name: name.into(),
            bottom,
            top,
        })
    }

    pub fn input(&self) -> &RankedAlphabet {
        self.bottom.input()
    }

    pub fn output(&self) -> &RankedAlphabet {
        self.top.output()
    }
}

/// An att whose input is first preprocessed by a look-around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttWithLookAround {
    pub name: String,
    pub around: LookAround,
    pub core: Att,
}

impl AttWithLookAround {
    pub fn new(name: impl Into<String>, around: LookAround, core: Att) -> Result<Self, ModelError> {
        if around.output() != &core.input {
            return Err(ModelError::AlphabetMismatch(format!(
                "att {} does not read the output of look-around {}",
                core.name, around.name
            )));
        }
        Ok(Self {
            name: name.into(),
            around,
            core,
        })
    }

    pub fn input(&self) -> &RankedAlphabet {
        self.around.input()
    }

    pub fn is_deterministic(&self) -> bool {
        crate::model::is_deterministic(&self.core)
    }
}

/// The look-around realizing the identity on trees over `alphabet`.
pub fn identity_lookaround(alphabet: &RankedAlphabet) -> LookAround {
    let p: Name = "p".into();
    let q: Name = "q".into();
    let bottom_rules = alphabet
        .iter()
        .map(|(s, k)| BuRule {
            symbol: s.clone(),
            children: vec![0; k],
            state: 0,
            output: s.clone(),
        })
        .collect();
    let top_rules = alphabet
        .iter()
        .map(|(s, k)| TdRule {
            state: 0,
            symbol: s.clone(),
            output: s.clone(),
            children: vec![0; k],
        })
        .collect();
    let bottom = BottomUpRelabeling::from_parts(
        "id_bottom",
        alphabet.clone(),
        alphabet.clone(),
        vec![p],
        vec![true],
        bottom_rules,
    )
    .expect("identity bottom-up relabeling is well-formed");
    let top = TopDownRelabeling::from_parts(
        "id_top",
        alphabet.clone(),
        alphabet.clone(),
        vec![q],
        vec![0],
        top_rules,
    )
    .expect("identity top-down relabeling is well-formed");
    LookAround::new("id", bottom, top).expect("identity parts chain")
}
