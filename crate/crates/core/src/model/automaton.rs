use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::model::ModelError;
use crate::trees::{Name, RankedAlphabet, Tree};

/// Deterministic bottom-up tree automaton over named states. Missing
/// transitions reject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BottomUpAutomaton {
    pub name: String,
    alphabet: RankedAlphabet,
    states: Vec<Name>,
    finals: Vec<bool>,
    transitions: BTreeMap<(Name, Vec<usize>), usize>,
}

impl BottomUpAutomaton {
    pub fn new(
        name: impl Into<String>,
        alphabet: RankedAlphabet,
        states: Vec<Name>,
        finals: &[Name],
        transitions: Vec<(Name, Vec<Name>, Name)>,
    ) -> Result<Self, ModelError> {
        let ix: HashMap<&Name, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
        if ix.len() != states.len() {
            return Err(ModelError::DuplicateState("automaton state".into()));
        }
        let get = |s: &Name| {
            ix.get(s)
                .copied()
                .ok_or_else(|| ModelError::UnknownState(s.to_string()))
        };
        let mut is_final = vec![false; states.len()];
        for f in finals {
            is_final[get(f)?] = true;
        }
        let mut table = BTreeMap::new();
        for (sym, kids, to) in transitions {
            let kids = kids.iter().map(get).collect::<Result<Vec<_>, _>>()?;
            let to = get(&to)?;
            table.insert((sym, kids), to);
        }
        Self::from_parts(name, alphabet, states, is_final, table)
    }

    pub fn from_parts(
        name: impl Into<String>,
        alphabet: RankedAlphabet,
        states: Vec<Name>,
        finals: Vec<bool>,
        transitions: BTreeMap<(Name, Vec<usize>), usize>,
    ) -> Result<Self, ModelError> {
        for ((sym, kids), &to) in &transitions {
            match alphabet.rank(sym) {
                None => return Err(ModelError::UnknownSymbol(sym.to_string())),
                Some(k) if k != kids.len() => return Err(ModelError::RankMismatch(sym.to_string())),
                _ => {}
            }
            if to >= states.len() || kids.iter().any(|&c| c >= states.len()) {
                return Err(ModelError::UnknownState(format!("#{to}")));
            }
        }
        Ok(Self {
            name: name.into(),
            alphabet,
            states,
            finals,
            transitions,
        })
    }

    pub fn alphabet(&self) -> &RankedAlphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &[Name] {
        &self.states
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals[q]
    }

    pub fn finals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&q| self.finals[q])
    }

    pub fn transitions(&self) -> &BTreeMap<(Name, Vec<usize>), usize> {
        &self.transitions
    }

    pub fn step(&self, symbol: &Name, children: &[usize]) -> Option<usize> {
        self.transitions.get(&(symbol.clone(), children.to_vec())).copied()
    }

    /// The state reached at the root, if every node has a transition.
    pub fn run(&self, t: &Tree) -> Option<usize> {
        let kids = t.children().iter().map(|c| self.run(c)).collect::<Option<Vec<_>>>()?;
        self.step(t.label(), &kids)
    }

    pub fn accepts(&self, t: &Tree) -> bool {
        self.run(t).is_some_and(|q| self.finals[q])
    }

    /// Reverse transition table: for each (symbol, target) the child tuples
    /// reaching it, in lexicographic order.
    pub fn preimages(&self) -> HashMap<(Name, usize), Vec<Vec<usize>>> {
        let mut out: HashMap<(Name, usize), Vec<Vec<usize>>> = HashMap::new();
        for ((sym, kids), &to) in &self.transitions {
            out.entry((sym.clone(), to)).or_default().push(kids.clone());
        }
        out
    }
}

/// Result of exploring a bottom-up state space from the leaves.
pub(crate) struct Reachable<S> {
    pub states: Vec<S>,
    /// `(symbol, child states) -> (target state, per-transition payload)`
    pub transitions: Vec<(Name, Vec<usize>, usize)>,
}

/// Saturates `step` over `alphabet`, discovering states in a deterministic
/// order (alphabet order, then lexicographic child tuples, round by round).
pub(crate) fn explore<S, F>(alphabet: &RankedAlphabet, mut step: F) -> Reachable<S>
where
    S: Clone + Eq + Hash,
    F: FnMut(&Name, &[usize], &[S]) -> Option<S>,
{
    let mut states: Vec<S> = Vec::new();
    let mut ix: HashMap<S, usize> = HashMap::new();
    let mut transitions = Vec::new();
    // `None` in the first round, then the number of states known before
    // the previous round
    let mut old: Option<usize> = None;
    loop {
        let now = states.len();
        for (sym, k) in alphabet.iter() {
            for tuple in new_tuples(k, old, now) {
                let kids: Vec<S> = tuple.iter().map(|&i| states[i].clone()).collect();
                if let Some(s) = step(sym, &tuple, &kids) {
                    let id = match ix.get(&s) {
                        Some(&id) => id,
                        None => {
                            let id = states.len();
                            ix.insert(s.clone(), id);
                            states.push(s);
                            id
                        }
                    };
                    transitions.push((sym.clone(), tuple, id));
                }
            }
        }
        if old.is_some() && states.len() == now {
            break;
        }
        old = Some(now);
    }
    Reachable { states, transitions }
}

/// Tuples over `[0, now)` of length `k` with at least one entry `>= old`,
/// or every tuple (including the empty one) when `old` is `None`.
fn new_tuples(k: usize, old: Option<usize>, now: usize) -> Vec<Vec<usize>> {
    let Some(old) = old else {
        return all_tuples(k, now);
    };
    if k == 0 {
        return Vec::new();
    }
    let mut out = all_tuples(k, now);
    out.retain(|t| t.iter().any(|&c| c >= old));
    out
}

fn all_tuples(k: usize, now: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    if now == 0 {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < now {
                break;
            }
            cur[i] = 0;
        }
    }
}
