//! Reference semi-naive evaluator for small dyadic rule programs.
//!
//! Works on constants and tuples directly and shares no code with the matrix
//! engine, so the two can be checked against each other. Rules have a binary
//! head `h(X,Y)` and a body of unary/binary literals over the variables
//! `X`, `Y`, `Z`; negated literals must refer to predicates completed in an
//! earlier stratum.

use std::collections::{HashMap, HashSet};

use crate::datalog::{Constant, Fact, FactBase};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Args {
    Unary(Var),
    Binary(Var, Var),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub predicate: String,
    pub args: Args,
    pub negated: bool,
}

impl Literal {
    pub fn pos(predicate: &str, a: Var, b: Var) -> Self {
        Literal {
            predicate: predicate.to_string(),
            args: Args::Binary(a, b),
            negated: false,
        }
    }

    pub fn neg(predicate: &str, a: Var, b: Var) -> Self {
        Literal {
            negated: true,
            ..Literal::pos(predicate, a, b)
        }
    }

    pub fn unary(predicate: &str, v: Var) -> Self {
        Literal {
            predicate: predicate.to_string(),
            args: Args::Unary(v),
            negated: false,
        }
    }

    fn vars(&self) -> Vec<Var> {
        match self.args {
            Args::Unary(v) => vec![v],
            Args::Binary(a, b) => vec![a, b],
        }
    }
}

/// `head(X,Y) <- body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub head: String,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: &str, body: Vec<Literal>) -> Self {
        Rule {
            head: head.to_string(),
            body,
        }
    }
}

/// Rules grouped into strata, evaluated in order.
#[derive(Clone, Debug)]
pub struct RuleProgram {
    strata: Vec<Vec<Rule>>,
}

impl RuleProgram {
    /// Checks range restriction and stratification.
    pub fn new(strata: Vec<Vec<Rule>>) -> Result<Self> {
        let mut stratum_of: HashMap<&str, usize> = HashMap::new();
        for (s, rules) in strata.iter().enumerate() {
            for rule in rules {
                if let Some(&prev) = stratum_of.get(rule.head.as_str()) {
                    if prev != s {
                        return Err(Error::Stratification(format!(
                            "`{}` is defined in strata {prev} and {s}",
                            rule.head
                        )));
                    }
                }
                stratum_of.insert(&rule.head, s);
            }
        }
        for (s, rules) in strata.iter().enumerate() {
            for rule in rules {
                let bound: HashSet<Var> = rule
                    .body
                    .iter()
                    .filter(|l| !l.negated)
                    .flat_map(Literal::vars)
                    .collect();
                let needed = rule
                    .body
                    .iter()
                    .flat_map(Literal::vars)
                    .chain([Var::X, Var::Y]);
                if let Some(v) = needed.into_iter().find(|v| !bound.contains(v)) {
                    return Err(Error::Stratification(format!(
                        "variable {v:?} of a `{}` rule is not bound by a positive literal",
                        rule.head
                    )));
                }
                for lit in &rule.body {
                    let Some(&def) = stratum_of.get(lit.predicate.as_str()) else {
                        continue;
                    };
                    if lit.negated && def >= s {
                        return Err(Error::Stratification(format!(
                            "`not {}` in stratum {s} but `{}` is defined in stratum {def}",
                            lit.predicate, lit.predicate
                        )));
                    }
                    if def > s {
                        return Err(Error::Stratification(format!(
                            "`{}` used in stratum {s} before its definition in stratum {def}",
                            lit.predicate
                        )));
                    }
                }
            }
        }
        Ok(RuleProgram { strata })
    }

    pub fn strata(&self) -> &[Vec<Rule>] {
        &self.strata
    }

    /// `closure(X,Y) <- base(X,Y).  closure(X,Y) <- base(X,Z), closure(Z,Y).`
    pub fn transitive_closure(base: &str, closure: &str) -> Self {
        use Var::*;
        RuleProgram::new(vec![vec![
            Rule::new(closure, vec![Literal::pos(base, X, Y)]),
            Rule::new(
                closure,
                vec![Literal::pos(base, X, Z), Literal::pos(closure, Z, Y)],
            ),
        ]])
        .expect("stratified")
    }

    /// The `hasPlace` / `indirectlyPartOf` / `isForeign` program over
    /// `contains`, `adjoins` and the `location` type.
    pub fn is_foreign() -> Self {
        use Var::*;
        RuleProgram::new(vec![
            vec![
                Rule::new("hasPlace", vec![Literal::pos("contains", X, Y)]),
                Rule::new(
                    "hasPlace",
                    vec![
                        Literal::pos("contains", X, Z),
                        Literal::pos("hasPlace", Z, Y),
                    ],
                ),
                Rule::new("indirectlyPartOf", vec![Literal::pos("adjoins", X, Y)]),
                Rule::new("indirectlyPartOf", vec![Literal::pos("adjoins", Y, X)]),
                Rule::new(
                    "indirectlyPartOf",
                    vec![
                        Literal::pos("hasPlace", Z, X),
                        Literal::pos("indirectlyPartOf", Z, Y),
                    ],
                ),
            ],
            vec![Rule::new(
                "isForeign",
                vec![
                    Literal::unary("location", X),
                    Literal::unary("location", Y),
                    Literal::neg("indirectlyPartOf", X, Y),
                ],
            )],
        ])
        .expect("stratified")
    }

    fn heads(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for rule in self.strata.iter().flatten() {
            if !seen.contains(&rule.head.as_str()) {
                seen.push(rule.head.as_str());
            }
        }
        seen
    }
}

type Tuple = (u32, u32);
type Bindings = [Option<u32>; 3];

#[derive(Default, Clone)]
struct Relation {
    tuples: HashSet<Tuple>,
    by_first: HashMap<u32, Vec<u32>>,
    by_second: HashMap<u32, Vec<u32>>,
}

impl Relation {
    fn insert(&mut self, t: Tuple) -> bool {
        if !self.tuples.insert(t) {
            return false;
        }
        self.by_first.entry(t.0).or_default().push(t.1);
        self.by_second.entry(t.1).or_default().push(t.0);
        true
    }

    fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

struct Db {
    names: Vec<Constant>,
    ids: HashMap<Constant, u32>,
    binary: HashMap<String, Relation>,
    unary: HashMap<String, Vec<u32>>,
    unary_sets: HashMap<String, HashSet<u32>>,
}

impl Db {
    fn intern(&mut self, c: &Constant) -> u32 {
        if let Some(&id) = self.ids.get(c) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(c.clone());
        self.ids.insert(c.clone(), id);
        id
    }

    fn load(fb: &FactBase) -> Self {
        let mut db = Db {
            names: Vec::new(),
            ids: HashMap::new(),
            binary: HashMap::new(),
            unary: HashMap::new(),
            unary_sets: HashMap::new(),
        };
        for fact in fb {
            match fact {
                Fact::Unary { predicate, arg } => {
                    let id = db.intern(arg);
                    if db
                        .unary_sets
                        .entry(predicate.to_string())
                        .or_default()
                        .insert(id)
                    {
                        db.unary.entry(predicate.to_string()).or_default().push(id);
                    }
                }
                Fact::Binary {
                    predicate,
                    left,
                    right,
                } => {
                    let t = (db.intern(left), db.intern(right));
                    db.binary
                        .entry(predicate.to_string())
                        .or_default()
                        .insert(t);
                }
            }
        }
        db
    }
}

static EMPTY: std::sync::LazyLock<Relation> = std::sync::LazyLock::new(Relation::default);

struct Join<'a> {
    db: &'a Db,
    delta: Option<(usize, &'a Relation)>,
}

impl Join<'_> {
    fn relation(&self, pos: usize, predicate: &str) -> &Relation {
        match self.delta {
            Some((p, rel)) if p == pos => rel,
            _ => self.db.binary.get(predicate).unwrap_or(&EMPTY),
        }
    }

    fn run(&self, body: &[(usize, &Literal)], b: Bindings, emit: &mut dyn FnMut(Bindings)) {
        let Some((&(pos, lit), rest)) = body.split_first() else {
            emit(b);
            return;
        };
        match lit.args {
            Args::Unary(v) => {
                let set = self.db.unary_sets.get(&lit.predicate);
                let has = |x: u32| set.is_some_and(|s| s.contains(&x));
                match b[v.slot()] {
                    Some(x) => {
                        if has(x) != lit.negated {
                            self.run(rest, b, emit);
                        }
                    }
                    None => {
                        for &x in self.db.unary.get(&lit.predicate).into_iter().flatten() {
                            let mut b2 = b;
                            b2[v.slot()] = Some(x);
                            self.run(rest, b2, emit);
                        }
                    }
                }
            }
            Args::Binary(u, w) => {
                let rel = self.relation(pos, &lit.predicate);
                let (su, sw) = (u.slot(), w.slot());
                match (b[su], b[sw]) {
                    (Some(x), Some(y)) => {
                        if rel.tuples.contains(&(x, y)) != lit.negated {
                            self.run(rest, b, emit);
                        }
                    }
                    (Some(x), None) => {
                        for &y in rel.by_first.get(&x).into_iter().flatten() {
                            let mut b2 = b;
                            b2[sw] = Some(y);
                            self.run(rest, b2, emit);
                        }
                    }
                    (None, Some(y)) => {
                        for &x in rel.by_second.get(&y).into_iter().flatten() {
                            let mut b2 = b;
                            b2[su] = Some(x);
                            self.run(rest, b2, emit);
                        }
                    }
                    (None, None) => {
                        for &(x, y) in &rel.tuples {
                            if su == sw && x != y {
                                continue;
                            }
                            let mut b2 = b;
                            b2[su] = Some(x);
                            b2[sw] = Some(y);
                            self.run(rest, b2, emit);
                        }
                    }
                }
            }
        }
    }
}

/// Orders a body for evaluation: the delta literal first, then positive
/// literals, negated ones last (by then all their variables are bound).
fn plan(rule: &Rule, delta_pos: Option<usize>) -> Vec<(usize, &Literal)> {
    let mut order: Vec<(usize, &Literal)> = rule.body.iter().enumerate().collect();
    order.sort_by_key(|&(i, lit)| (Some(i) != delta_pos, lit.negated));
    order
}

fn fire(db: &Db, rule: &Rule, delta: Option<(usize, &Relation)>, out: &mut Vec<Tuple>) {
    let body = plan(rule, delta.map(|d| d.0));
    let join = Join { db, delta };
    join.run(&body, [None; 3], &mut |b| {
        out.push((b[0].expect("X bound"), b[1].expect("Y bound")));
    });
}

/// Least model of `p` over `fb`, restricted to the head predicates of `p`.
///
/// Facts come out grouped by predicate (in order of first definition) and
/// sorted by the first-appearance order of constants in `fb`.
pub fn evaluate(p: &RuleProgram, fb: &FactBase) -> Result<FactBase> {
    let mut db = Db::load(fb);
    for stratum in &p.strata {
        let local: HashSet<&str> = stratum.iter().map(|r| r.head.as_str()).collect();

        let mut delta: HashMap<String, Relation> = HashMap::new();
        let mut derived = Vec::new();
        for rule in stratum {
            derived.clear();
            fire(&db, rule, None, &mut derived);
            let rel = db.binary.entry(rule.head.clone()).or_default();
            let d = delta.entry(rule.head.clone()).or_default();
            for &t in &derived {
                if !rel.tuples.contains(&t) {
                    d.insert(t);
                }
            }
        }
        // the first round read only facts from before this stratum
        for (pred, d) in &delta {
            let rel = db.binary.entry(pred.clone()).or_default();
            for &t in &d.tuples {
                rel.insert(t);
            }
        }

        while delta.values().any(|d| !d.is_empty()) {
            let mut next: HashMap<String, Relation> = HashMap::new();
            for rule in stratum {
                for (pos, lit) in rule.body.iter().enumerate() {
                    if lit.negated || !local.contains(lit.predicate.as_str()) {
                        continue;
                    }
                    let Some(d) = delta.get(&lit.predicate).filter(|d| !d.is_empty()) else {
                        continue;
                    };
                    derived.clear();
                    fire(&db, rule, Some((pos, d)), &mut derived);
                    let rel = &db.binary[&rule.head];
                    let n = next.entry(rule.head.clone()).or_default();
                    for &t in &derived {
                        if !rel.tuples.contains(&t) {
                            n.insert(t);
                        }
                    }
                }
            }
            for (pred, d) in &next {
                let rel = db.binary.entry(pred.clone()).or_default();
                for &t in &d.tuples {
                    rel.insert(t);
                }
            }
            delta = next;
        }
    }

    let mut out = FactBase::new();
    for head in p.heads() {
        let predicate = Constant::new(head)?;
        let mut tuples: Vec<Tuple> = db.binary[head].tuples.iter().copied().collect();
        tuples.sort_unstable();
        out.extend(tuples.into_iter().map(|(x, y)| Fact::Binary {
            predicate: predicate.clone(),
            left: db.names[x as usize].clone(),
            right: db.names[y as usize].clone(),
        }));
    }
    Ok(out)
}

/// Textbook Warshall closure of an adjacency relation: paths of length >= 1.
#[allow(clippy::needless_range_loop)]
pub fn warshall_closure(adjacency: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adjacency.len();
    let mut reach = adjacency.to_vec();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_facts;
    use proptest::prelude::*;

    fn strings(fb: &FactBase) -> Vec<String> {
        let mut v: Vec<String> = fb.iter().map(ToString::to_string).collect();
        v.sort();
        v
    }

    fn random_graph(n: usize, edges: &[bool]) -> FactBase {
        let mut text = String::new();
        for i in 0..n {
            text.push_str(&format!("node(n{i}).\n"));
        }
        for i in 0..n {
            for j in 0..n {
                if edges[i * n + j] {
                    text.push_str(&format!("edge(n{i},n{j}).\n"));
                }
            }
        }
        parse_facts(&text).unwrap()
    }

    #[test]
    fn transitive_closure_chain_abc() {
        let fb = parse_facts("node(a). node(b). node(c). edge(a,b). edge(b,c).").unwrap();
        let out = evaluate(&RuleProgram::transitive_closure("edge", "path"), &fb).unwrap();
        assert_eq!(strings(&out), ["path(a,b)", "path(a,c)", "path(b,c)"]);
    }

    #[test]
    fn transitive_closure_without_edges() {
        let fb = parse_facts("node(a). node(b).").unwrap();
        let out = evaluate(&RuleProgram::transitive_closure("edge", "path"), &fb).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn is_foreign_program() {
        let fb = parse_facts(
            "location(g1). location(g2). location(g3). location(g4).\n\
             location(t1). location(t2). location(t3).\n\
             contains(t1,g2). contains(g3,t1). adjoins(g3,g4).",
        )
        .unwrap();
        let out = evaluate(&RuleProgram::is_foreign(), &fb).unwrap();
        let ipo: Vec<String> = strings(&out)
            .into_iter()
            .filter(|f| f.starts_with("indirectlyPartOf"))
            .collect();
        assert_eq!(
            ipo,
            [
                "indirectlyPartOf(g2,g4)",
                "indirectlyPartOf(g3,g4)",
                "indirectlyPartOf(g4,g3)",
                "indirectlyPartOf(t1,g4)"
            ]
        );
        let foreign = out
            .iter()
            .filter(|f| f.predicate().as_str() == "isForeign")
            .count();
        assert_eq!(foreign, 45);
        let has_place: Vec<String> = strings(&out)
            .into_iter()
            .filter(|f| f.starts_with("hasPlace"))
            .collect();
        assert_eq!(
            has_place,
            ["hasPlace(g3,g2)", "hasPlace(g3,t1)", "hasPlace(t1,g2)"]
        );
    }

    #[test]
    fn rejects_unstratified_negation() {
        use Var::*;
        let err = RuleProgram::new(vec![vec![
            Rule::new("p", vec![Literal::pos("e", X, Y)]),
            Rule::new("q", vec![Literal::pos("e", X, Y), Literal::neg("p", X, Y)]),
        ]])
        .unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));

        let err = RuleProgram::new(vec![
            vec![Rule::new("q", vec![Literal::pos("p", X, Y)])],
            vec![Rule::new("p", vec![Literal::pos("e", X, Y)])],
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));

        let err = RuleProgram::new(vec![vec![Rule::new("q", vec![Literal::neg("e", X, Y)])]])
            .unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));
    }

    #[test]
    fn warshall_small() {
        let adj = vec![
            vec![false, true, false],
            vec![false, false, true],
            vec![false, false, false],
        ];
        let r = warshall_closure(&adj);
        assert_eq!(
            r,
            vec![
                vec![false, true, true],
                vec![false, false, true],
                vec![false, false, false]
            ]
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn semi_naive_matches_warshall(
            (n, edges) in (1usize..=64, 0.0f64..0.2).prop_flat_map(|(n, p)| {
                (Just(n), prop::collection::vec(prop::bool::weighted(p), n * n))
            })
        ) {
            let fb = random_graph(n, &edges);
            let out = evaluate(&RuleProgram::transitive_closure("edge", "path"), &fb).unwrap();
            let adj: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| edges[i * n + j]).collect()).collect();
            let reach = warshall_closure(&adj);
            let expected: usize = reach.iter().flatten().filter(|&&b| b).count();
            prop_assert_eq!(out.len(), expected);
            for (i, row) in reach.iter().enumerate() {
                for (j, &r) in row.iter().enumerate() {
                    let f = Fact::binary("path", &format!("n{i}"), &format!("n{j}")).unwrap();
                    prop_assert_eq!(out.contains(&f), r);
                }
            }
        }

        #[test]
        fn monotone_in_base_facts(
            (n, edges, extra) in (2usize..=16).prop_flat_map(|n| {
                (Just(n),
                 prop::collection::vec(prop::bool::weighted(0.15), n * n),
                 prop::collection::vec(prop::bool::weighted(0.1), n * n))
            })
        ) {
            let more: Vec<bool> = edges.iter().zip(&extra).map(|(a, b)| *a || *b).collect();
            let p = RuleProgram::transitive_closure("edge", "path");
            let small = evaluate(&p, &random_graph(n, &edges)).unwrap();
            let large = evaluate(&p, &random_graph(n, &more)).unwrap();
            prop_assert!(small.iter().all(|f| large.contains(f)));
        }
    }
}
