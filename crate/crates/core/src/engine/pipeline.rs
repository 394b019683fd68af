//! Pipelines: named sequences of matrix operations and module calls.
//!
//! Text form, one step per line, `%` comments:
//!
//! ```text
//! hasPlace = rms(contains)
//! placeOf = transpose(hasPlace)
//! v = select(a, b)
//! reach = smp(v, edge)
//! ```
//!
//! An input name resolves to the output of an earlier step, or else to the
//! compiled relation of the same name in the fact base. `base(p)` binds a
//! relation explicitly (and yields zeros when `p` has no facts).

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use indexmap::{IndexMap, IndexSet};

use super::modules::{rms_until, smp_until};
use crate::bitmat::{BitMatrix, BitVector};
use crate::datalog::{compile, is_identifier, select, FactBase, SymbolTable};
use crate::error::{Error, Result};

/// `isForeign(X,Y) <- location(X), location(Y), not indirectlyPartOf(X,Y)`
/// over `hasPlace` (closure of `contains`) and `indirectlyPartOf`.
pub const IS_FOREIGN_PIPELINE: &str = "\
% hasPlace(X,Y) <- contains(X,Y) | contains(X,Z), hasPlace(Z,Y)
hasPlace = rms(contains)
% indirectlyPartOf(X,Y) <- adjoins(X,Y) | adjoins(Y,X) | hasPlace(Z,X), indirectlyPartOf(Z,Y)
placeOf = transpose(hasPlace)
placeOfRefl = addI(placeOf)
adjoinsInv = transpose(adjoins)
neighbours = add(adjoins, adjoinsInv)
indirectlyPartOf = mul(placeOfRefl, neighbours)
% isForeign(X,Y) <- location(X), location(Y), not indirectlyPartOf(X,Y)
isForeign = negate(indirectlyPartOf)
";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Base(String),
    Select(Vec<String>),
    Rms(String),
    Smp(String, String),
    Add(String, String),
    Mul(String, String),
    Transpose(String),
    Negate(String),
    AddIdentity(String),
}

impl Op {
    /// Keyword used in the text form.
    pub fn keyword(&self) -> &'static str {
        match self {
            Op::Base(_) => "base",
            Op::Select(_) => "select",
            Op::Rms(_) => "rms",
            Op::Smp(..) => "smp",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::Transpose(_) => "transpose",
            Op::Negate(_) => "negate",
            Op::AddIdentity(_) => "addI",
        }
    }

    /// Names of the matrices this operation reads.
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Op::Base(_) | Op::Select(_) => Vec::new(),
            Op::Rms(a) | Op::Transpose(a) | Op::Negate(a) | Op::AddIdentity(a) => vec![a],
            Op::Smp(a, b) | Op::Add(a, b) | Op::Mul(a, b) => vec![a, b],
        }
    }

    fn args(&self) -> Vec<&str> {
        match self {
            Op::Base(p) => vec![p],
            Op::Select(cs) => cs.iter().map(String::as_str).collect(),
            _ => self.inputs(),
        }
    }

    fn parse(keyword: &str, mut args: Vec<String>) -> std::result::Result<Op, String> {
        let want = match keyword {
            "select" => return Ok(Op::Select(args)),
            "base" | "rms" | "transpose" | "negate" | "addI" => 1,
            "smp" | "add" | "mul" => 2,
            other => return Err(format!("unknown operation `{other}`")),
        };
        if args.len() != want {
            return Err(format!(
                "`{keyword}` takes {want} argument(s), got {}",
                args.len()
            ));
        }
        let second = if want == 2 { args.pop() } else { None };
        let first = args.pop().expect("arity checked");
        Ok(match (keyword, second) {
            ("base", _) => Op::Base(first),
            ("rms", _) => Op::Rms(first),
            ("transpose", _) => Op::Transpose(first),
            ("negate", _) => Op::Negate(first),
            ("addI", _) => Op::AddIdentity(first),
            ("smp", Some(b)) => Op::Smp(first, b),
            ("add", Some(b)) => Op::Add(first, b),
            ("mul", Some(b)) => Op::Mul(first, b),
            _ => unreachable!("arity checked"),
        })
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.keyword(), self.args().join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub output: String,
    pub op: Op,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.output, self.op)
    }
}

/// An ordered list of steps. Output names are unique, and every input is
/// either an earlier output or a base relation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pipeline {
    steps: Vec<Step>,
    outputs: IndexSet<String>,
    // names resolved as base relations so far
    bases: IndexSet<String>,
}

impl Pipeline {
    pub fn new() -> Self {
        Pipeline::default()
    }

    /// Appends a step.
    pub fn push(&mut self, output: impl Into<String>, op: Op) -> Result<()> {
        let output = output.into();
        if !is_identifier(&output) {
            return Err(Error::InvalidIdentifier(output));
        }
        for name in op.args() {
            if !is_identifier(name) {
                return Err(Error::InvalidIdentifier(name.to_string()));
            }
        }
        if self.outputs.contains(&output) || self.bases.contains(&output) {
            return Err(Error::DuplicateStep(output));
        }
        for name in op.inputs() {
            if !self.outputs.contains(name) {
                self.bases.insert(name.to_string());
            }
        }
        self.outputs.insert(output.clone());
        self.steps.push(Step { output, op });
        Ok(())
    }

    pub fn with(mut self, output: impl Into<String>, op: Op) -> Result<Self> {
        self.push(output, op)?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Pipeline::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('%').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::PipelineSyntax { line, message };
            let (output, rhs) = content
                .split_once('=')
                .ok_or_else(|| err("expected `<out> = <op>(<args>)`".into()))?;
            let rhs = rhs.trim();
            let (keyword, rest) = rhs
                .split_once('(')
                .ok_or_else(|| err(format!("expected `(` in `{rhs}`")))?;
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| err(format!("expected `)` at end of `{rhs}`")))?;
            let args: Vec<String> = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|a| a.trim().to_string()).collect()
            };
            let op = Op::parse(keyword.trim(), args).map_err(err)?;
            p.push(output.trim(), op).map_err(|e| match e {
                Error::DuplicateStep(name) => err(format!("`{name}` is already defined")),
                other => err(other.to_string()),
            })?;
        }
        Ok(p)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Pipeline::parse(&fs::read_to_string(path)?)
    }

    /// The built-in `isForeign` composition.
    pub fn is_foreign() -> Self {
        Pipeline::parse(IS_FOREIGN_PIPELINE).expect("built-in pipeline parses")
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Names resolved from the fact base rather than from earlier steps.
    pub fn base_relations(&self) -> impl Iterator<Item = &str> {
        self.bases.iter().map(String::as_str)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            writeln!(f, "{step}")?;
        }
        Ok(())
    }
}

/// Storage for step results across runs. Keys are the operation plus the
/// exact input matrices; output names play no part.
pub trait StepCache {
    fn lookup(&mut self, op: &Op, inputs: &[&BitMatrix]) -> Option<BitMatrix>;
    fn store(&mut self, op: &Op, inputs: &[&BitMatrix], output: &BitMatrix);
}

pub struct NoCache;

impl StepCache for NoCache {
    fn lookup(&mut self, _: &Op, _: &[&BitMatrix]) -> Option<BitMatrix> {
        None
    }

    fn store(&mut self, _: &Op, _: &[&BitMatrix], _: &BitMatrix) {}
}

/// Every named matrix produced by a run, in creation order.
#[derive(Clone, Debug, Default)]
pub struct PipelineOutputs {
    values: IndexMap<String, BitMatrix>,
    iterations: IndexMap<String, usize>,
}

impl PipelineOutputs {
    pub fn get(&self, name: &str) -> Option<&BitMatrix> {
        self.values.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BitMatrix)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Loop passes of the `rms`/`smp` steps that were computed (not cached).
    pub fn iterations(&self, name: &str) -> Option<usize> {
        self.iterations.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_map(self) -> IndexMap<String, BitMatrix> {
        self.values
    }
}

/// Runs every step in order over the relations of `fb`.
pub fn run_pipeline(p: &Pipeline, fb: &FactBase, st: &SymbolTable) -> Result<PipelineOutputs> {
    run_pipeline_with(p, fb, st, &mut NoCache)
}

/// [`run_pipeline`] consulting `cache` before every matrix-input step.
pub fn run_pipeline_with(
    p: &Pipeline,
    fb: &FactBase,
    st: &SymbolTable,
    cache: &mut dyn StepCache,
) -> Result<PipelineOutputs> {
    Ok(execute(p, fb, st, cache, None)?.expect("no deadline"))
}

pub(crate) fn execute(
    p: &Pipeline,
    fb: &FactBase,
    st: &SymbolTable,
    cache: &mut dyn StepCache,
    deadline: Option<Instant>,
) -> Result<Option<PipelineOutputs>> {
    let mut out = PipelineOutputs::default();
    for step in &p.steps {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(None);
        }
        let wrap = |e: Error| Error::Step {
            step: step.output.clone(),
            source: Box::new(e),
        };
        for name in step.op.inputs() {
            if out.values.contains_key(name) {
                continue;
            }
            if fb.binary(name).next().is_none() {
                return Err(Error::PipelineReference {
                    step: step.output.clone(),
                    name: name.to_string(),
                });
            }
            let base = compile(fb, name, st).map_err(wrap)?;
            out.values.insert(name.to_string(), base);
        }
        let inputs: Vec<&BitMatrix> = step.op.inputs().iter().map(|n| &out.values[*n]).collect();

        let value = match &step.op {
            Op::Base(pred) => compile(fb, pred, st).map_err(wrap)?,
            Op::Select(cs) => select(cs, st).map_err(wrap)?.into_matrix(),
            op => match cache.lookup(op, &inputs) {
                Some(hit) => hit,
                None => {
                    let Some((value, iterations)) = apply(op, &inputs, deadline).map_err(wrap)?
                    else {
                        return Ok(None);
                    };
                    cache.store(op, &inputs, &value);
                    if let Some(k) = iterations {
                        out.iterations.insert(step.output.clone(), k);
                    }
                    value
                }
            },
        };
        out.values
            .insert(step.output.clone(), value.with_name(&step.output));
    }
    Ok(Some(out))
}

type Applied = Option<(BitMatrix, Option<usize>)>;

fn apply(op: &Op, inputs: &[&BitMatrix], deadline: Option<Instant>) -> Result<Applied> {
    let plain = |m: BitMatrix| Ok(Some((m, None)));
    match op {
        Op::Rms(_) => Ok(rms_until(inputs[0], deadline)?.map(|r| (r.closure, Some(r.iterations)))),
        Op::Smp(..) => {
            let v = BitVector::try_from(inputs[0].clone())?;
            Ok(smp_until(&v, inputs[1], deadline)?
                .map(|r| (r.reachable.into_matrix(), Some(r.iterations))))
        }
        Op::Add(..) => plain(inputs[0].add(inputs[1])?),
        Op::Mul(..) => plain(inputs[0].mul(inputs[1])?),
        Op::Transpose(_) => plain(inputs[0].transpose()),
        Op::Negate(_) => plain(inputs[0].negate()),
        Op::AddIdentity(_) => plain(inputs[0].add_identity()?),
        Op::Base(_) | Op::Select(_) => unreachable!("handled by the caller"),
    }
}
