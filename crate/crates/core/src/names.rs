use std::collections::HashSet;

use crate::trees::Name;

/// Hands out names that do not collide with any name seen so far.
#[derive(Debug, Default)]
pub(crate) struct NameGen {
    taken: HashSet<Name>,
}

impl NameGen {
    pub(crate) fn new(taken: impl IntoIterator<Item = Name>) -> Self {
        Self {
            taken: taken.into_iter().collect(),
        }
    }

    /// `candidate` itself if free, otherwise `candidate~1`, `candidate~2`, ...
    pub(crate) fn fresh(&mut self, candidate: &str) -> Name {
        let mut name = Name::from(candidate);
        let mut n = 0;
        while self.taken.contains(&name) {
            n += 1;
            name = Name::from(format!("{candidate}~{n}"));
        }
        self.taken.insert(name.clone());
        name
    }
}
