//! Small example transducers used by tests, benchmarks and the CLI.

use crate::dsl::{parse_att, parse_attu, parse_lookaround};
use crate::model::{Att, AttWithLookAround, LookAround};

/// Circular on every `f(t, e)`: `b(pi.2)` reads `a(pi.1)`, which is
/// eventually defined through the root.
pub const EX1: &str = "\
att ex1 {
  input { f:2, e:0 }
  output { d:1, e:0 }
  syn { a }
  inh { b }
  initial a
  rules f {
    a(pi) -> d(a(pi.2));
    b(pi.2) -> a(pi.1);
    b(pi.1) -> b(pi);
  }
  rules e {
    a(pi) -> d(b(pi));
  }
  rules root {
    b(pi.1) -> e;
  }
}
";

/// Nondeterministic and with a productive cycle through `a'` at the leaf.
pub const RUN: &str = "\
att run {
  input { f:1, g:1, h:1, e:0 }
  output { g:2, g':2, h:1, e:0 }
  syn { a, a' }
  inh { b }
  initial a
  rules f {
    a(pi) -> a(pi.1);
    a'(pi) -> a(pi.1);
    a'(pi) -> e;
    b(pi.1) -> b(pi);
  }
  rules g {
    a(pi) -> g(a(pi.1), a(pi.1));
    a(pi) -> g'(a(pi.1), a(pi.1));
    a'(pi) -> g(a(pi.1), a(pi.1));
    a'(pi) -> g'(a(pi.1), a(pi.1));
    a'(pi) -> e;
    b(pi.1) -> b(pi);
  }
  rules h {
    a(pi) -> h(a(pi.1));
    a'(pi) -> h(a(pi.1));
    a'(pi) -> e;
    b(pi.1) -> b(pi);
  }
  rules e {
    a(pi) -> b(pi);
    a'(pi) -> e;
  }
  rules root {
    b(pi.1) -> a'(pi.1);
  }
}
";

/// Meant to output `d^m(e)` with `m` the size of the subtree at the first
/// `g` in reverse pre-order. Each `g` guesses whether it has a `g` ancestor,
/// and only the negative guess is verified, so inputs with two top-level
/// `g` nodes get several outputs.
pub const REVG: &str = "\
att revg {
  input { f:2, g:2, e:0 }
  output { d:1, e:0 }
  syn { a, a_g }
  inh { b, b_g, b_g' }
  initial a
  rules f {
    a(pi) -> a(pi.2);
    b(pi.2) -> a(pi.1);
    b(pi.1) -> b(pi);
    a_g(pi) -> d(a_g(pi.2));
    b_g(pi.2) -> a_g(pi.1);
    b_g(pi.1) -> b_g(pi);
    b_g'(pi.2) -> b_g'(pi);
    b_g'(pi.1) -> b_g'(pi);
  }
  rules g {
    a(pi) -> d(a_g(pi.2));
    a_g(pi) -> d(a_g(pi.2));
    b_g(pi.2) -> a_g(pi.1);
    b_g(pi.1) -> b_g(pi);
    b_g(pi.1) -> b_g'(pi);
  }
  rules e {
    a(pi) -> b(pi);
    a_g(pi) -> d(b_g(pi));
  }
  rules root {
    b_g'(pi.1) -> e;
  }
}
";

/// Look-around that primes everything below the first `g` on each path.
pub const PRIME: &str = "\
burelab prime_bottom {
  input { f:2, g:2, e:0 }
  output { f:2, g:2, e:0 }
  states { p }
  finals { p }
  rule f(p, p) -> p / f;
  rule g(p, p) -> p / g;
  rule e() -> p / e;
}

tdrelab prime_top {
  input { f:2, g:2, e:0 }
  output { f:2, g:2, e:0, f':2, g':2, e':0 }
  states { q, q' }
  initials { q }
  rule q(f(x1, x2)) -> f(q(x1), q(x2));
  rule q(g(x1, x2)) -> g'(q'(x1), q'(x2));
  rule q(e()) -> e();
  rule q'(f(x1, x2)) -> f'(q'(x1), q'(x2));
  rule q'(g(x1, x2)) -> g'(q'(x1), q'(x2));
  rule q'(e()) -> e'();
}

lookaround prime { bottom prime_bottom top prime_top }
";

/// Deterministic att with look-around answering whether the input has an
/// even number of `g` nodes.
pub const YN: &str = "\
burelab yn_bottom {
  input { f:2, g:1, e:0 }
  output { f_even:2, f_odd:2, g_even:1, g_odd:1, e_even:0 }
  states { even, odd }
  finals { even, odd }
  rule e() -> even / e_even;
  rule g(even) -> odd / g_odd;
  rule g(odd) -> even / g_even;
  rule f(even, even) -> even / f_even;
  rule f(even, odd) -> odd / f_odd;
  rule f(odd, even) -> odd / f_odd;
  rule f(odd, odd) -> even / f_even;
}

tdrelab yn_top {
  input { f_even:2, f_odd:2, g_even:1, g_odd:1, e_even:0 }
  output { f_even:2, f_odd:2, g_even:1, g_odd:1, e_even:0 }
  states { q }
  initials { q }
  rule q(f_even(x1, x2)) -> f_even(q(x1), q(x2));
  rule q(f_odd(x1, x2)) -> f_odd(q(x1), q(x2));
  rule q(g_even(x1)) -> g_even(q(x1));
  rule q(g_odd(x1)) -> g_odd(q(x1));
  rule q(e_even()) -> e_even();
}

lookaround yn_around { bottom yn_bottom top yn_top }

att yn_core {
  input { f_even:2, f_odd:2, g_even:1, g_odd:1, e_even:0 }
  output { y:0, n:0 }
  syn { a }
  inh { }
  initial a
  rules f_even { a(pi) -> y; }
  rules f_odd { a(pi) -> n; }
  rules g_even { a(pi) -> y; }
  rules g_odd { a(pi) -> n; }
  rules e_even { a(pi) -> y; }
}

attu yn { around yn_around core yn_core }
";

/// Relates `g^n(e)` to every word over `{d, c}` of length `n`.
pub const BRANCH: &str = "\
att branch {
  input { g:1, e:0 }
  output { d:1, c:1, e:0 }
  syn { a }
  inh { }
  initial a
  rules g {
    a(pi) -> d(a(pi.1));
    a(pi) -> c(a(pi.1));
  }
  rules e {
    a(pi) -> e;
  }
}
";

/// Identity on `d^n(e)`, undefined as soon as a `c` occurs.
pub const STRIP: &str = "\
att strip {
  input { d:1, c:1, e:0 }
  output { d:1, e:0 }
  syn { a }
  inh { }
  initial a
  rules d {
    a(pi) -> d(a(pi.1));
  }
  rules e {
    a(pi) -> e;
  }
}
";

/// Identity on monadic trees over `{d, e}`.
pub const MONO_ID: &str = "\
att mono_id {
  input { d:1, e:0 }
  output { d:1, e:0 }
  syn { a }
  inh { }
  initial a
  rules d {
    a(pi) -> d(a(pi.1));
  }
  rules e {
    a(pi) -> e;
  }
}
";

/// `ex1` with two competing root rules for `b`.
pub const AMB: &str = "\
att amb {
  input { f:2, e:0 }
  output { d:1, e:0 }
  syn { a }
  inh { b }
  initial a
  rules f {
    a(pi) -> d(a(pi.2));
    b(pi.2) -> a(pi.1);
    b(pi.1) -> b(pi);
  }
  rules e {
    a(pi) -> d(b(pi));
  }
  rules root {
    b(pi.1) -> e;
    b(pi.1) -> d(e);
  }
}
";

/// Erases the marks introduced by `prime`.
pub const UNPRIME: &str = "\
burelab unprime_bottom {
  input { f:2, g:2, e:0, f':2, g':2, e':0 }
  output { f:2, g:2, e:0, f':2, g':2, e':0 }
  states { p }
  finals { p }
  rule f(p, p) -> p / f;
  rule g(p, p) -> p / g;
  rule e() -> p / e;
  rule f'(p, p) -> p / f';
  rule g'(p, p) -> p / g';
  rule e'() -> p / e';
}

tdrelab unprime_top {
  input { f:2, g:2, e:0, f':2, g':2, e':0 }
  output { f:2, g:2, e:0 }
  states { q }
  initials { q }
  rule q(f(x1, x2)) -> f(q(x1), q(x2));
  rule q(g(x1, x2)) -> g(q(x1), q(x2));
  rule q(e()) -> e();
  rule q(f'(x1, x2)) -> f(q(x1), q(x2));
  rule q(g'(x1, x2)) -> g(q(x1), q(x2));
  rule q(e'()) -> e();
}

lookaround unprime { bottom unprime_bottom top unprime_top }
";

/// Every fixture source with the file stem it is written under.
pub const SOURCES: &[(&str, &str)] = &[
    ("ex1.att", EX1),
    ("run.att", RUN),
    ("revg.att", REVG),
    ("prime.la", PRIME),
    ("yn.att", YN),
    ("branch.att", BRANCH),
    ("strip.att", STRIP),
    ("mono_id.att", MONO_ID),
    ("amb.att", AMB),
    ("unprime.la", UNPRIME),
];

pub fn ex1() -> Att {
    parse_att(EX1).expect("fixture parses")
}

pub fn run() -> Att {
    parse_att(RUN).expect("fixture parses")
}

pub fn revg() -> Att {
    parse_att(REVG).expect("fixture parses")
}

pub fn prime() -> LookAround {
    parse_lookaround(PRIME).expect("fixture parses")
}

pub fn yn() -> AttWithLookAround {
    parse_attu(YN).expect("fixture parses")
}

pub fn branch() -> Att {
    parse_att(BRANCH).expect("fixture parses")
}

pub fn strip() -> Att {
    parse_att(STRIP).expect("fixture parses")
}

pub fn mono_id() -> Att {
    parse_att(MONO_ID).expect("fixture parses")
}

pub fn amb() -> Att {
    parse_att(AMB).expect("fixture parses")
}

pub fn unprime() -> LookAround {
    parse_lookaround(UNPRIME).expect("fixture parses")
}

/// Chains whose composition is checked: each stage's output alphabet is the
/// next stage's input alphabet.
pub fn chains() -> Vec<(&'static str, Vec<Att>)> {
    vec![
        ("branch-strip", vec![branch(), strip()]),
        ("ex1-id", vec![ex1(), mono_id()]),
        ("revg-id", vec![revg(), mono_id()]),
    ]
}
