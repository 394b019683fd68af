//! Benchmark workloads: seeded random digraphs, knowledge-graph triple
//! ingestion, and a small timing harness around the closure modules.

use std::collections::HashMap;
use std::io::{self, BufRead};
use std::time::{Duration, Instant};

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmat::{BitMatrix, BitVector};
use crate::datalog::{compile, Constant, Fact, FactBase, SymbolTable};
use crate::engine::{self, NoCache, Pipeline};
use crate::error::{Error, Result};

/// Timeout applied to a single benchmark sample unless overridden.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(15_000);

pub const CSV_HEADER: &str = "task,n,p_t,repeat,cpu_seconds,iterations,derived_facts";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphGenParams {
    pub n: usize,
    pub p_t: f64,
    pub seed: u64,
}

impl GraphGenParams {
    pub fn new(n: usize, p_t: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&p_t) {
            return Err(Error::InvalidParameter(format!(
                "p_t = {p_t} is outside [0, 1]"
            )));
        }
        Ok(GraphGenParams { n, p_t, seed })
    }

    /// Node name for index `i`.
    pub fn node(i: usize) -> String {
        format!("n_{i}")
    }

    /// Ordered pairs `(i, j)`, self-loops included, kept when one uniform draw
    /// per pair falls below `p_t`. Draws are taken i-major from a ChaCha
    /// stream, so a pair's draw does not depend on `p_t`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.n;
        let p_t = self.p_t;
        (0..n * n).filter_map(move |k| {
            let draw: f64 = rng.random();
            (draw < p_t).then_some((k / n, k % n))
        })
    }

    /// Universe `n_0 .. n_{n-1}` under the `node` type.
    pub fn symbols(&self) -> SymbolTable {
        let universe = (0..self.n)
            .map(|i| Constant::new(GraphGenParams::node(i)).expect("valid name"))
            .collect();
        SymbolTable::from_universe("node", universe).expect("distinct names")
    }
}

/// `node/1` facts for every node followed by the sampled `edge/2` facts.
pub fn gen_graph(params: &GraphGenParams) -> FactBase {
    let names: Vec<Constant> = params.symbols().universe().to_vec();
    let node = Constant::new("node").unwrap();
    let edge = Constant::new("edge").unwrap();
    let mut fb: FactBase = names
        .iter()
        .map(|c| Fact::Unary {
            predicate: node.clone(),
            arg: c.clone(),
        })
        .collect();
    fb.extend(params.edges().map(|(i, j)| Fact::Binary {
        predicate: edge.clone(),
        left: names[i].clone(),
        right: names[j].clone(),
    }));
    fb
}

/// The `edge` matrix of [`gen_graph`] built without materialising facts.
pub fn gen_graph_matrix(params: &GraphGenParams) -> (BitMatrix, SymbolTable) {
    let m = BitMatrix::from_entries(params.n, params.n, params.edges()).with_name("edge");
    (m, params.symbols())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleRecord {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl TripleRecord {
    pub fn parse(line: &str, line_no: usize) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        let err = |message: String| Error::Ingest {
            line: line_no,
            message,
        };
        let [subject, relation, object] = fields.as_slice() else {
            return Err(err(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        };
        if subject.is_empty() || relation.is_empty() || object.is_empty() {
            return Err(err("empty field".into()));
        }
        Ok(TripleRecord {
            subject: subject.to_string(),
            relation: relation.to_string(),
            object: object.to_string(),
        })
    }
}

/// Raw Freebase relations kept by default and the predicates they map to.
///
/// FB15k-237 spells the adjacency relation through a mediator node; both
/// spellings are accepted.
pub fn default_relation_map() -> HashMap<String, String> {
    [
        ("/location/location/contains", "contains"),
        ("/location/location/adjoins", "adjoins"),
        (
            "/location/location/adjoin_s./location/adjoining_relationship/adjoins",
            "adjoins",
        ),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Maps a raw entity id onto the constant grammar: characters outside
/// `[A-Za-z0-9_]` become `_`, and an `e_` prefix is added unless the result
/// starts with a lowercase letter.
pub fn sanitize_entity(raw: &str) -> Constant {
    let mut s: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if !s.starts_with(|c: char| c.is_ascii_lowercase()) {
        s.insert_str(0, "e_");
    }
    Constant::new(s).expect("sanitized")
}

/// Reads tab-separated triples. Every entity in the stream becomes a
/// `location` fact (in order of first appearance); records whose relation
/// is in `relation_map` become binary facts. Blank lines are skipped.
pub fn ingest_triples<R: BufRead>(
    input: R,
    relation_map: &HashMap<String, String>,
) -> Result<FactBase> {
    let location = Constant::new("location").unwrap();
    let predicates = relation_map
        .iter()
        .map(|(k, v)| Ok((k.as_str(), Constant::new(v.as_str())?)))
        .collect::<Result<HashMap<&str, Constant>>>()?;

    let mut entities: IndexSet<Constant> = IndexSet::new();
    let mut kept = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let rec = TripleRecord::parse(line, k + 1)?;
        let subject = sanitize_entity(&rec.subject);
        let object = sanitize_entity(&rec.object);
        entities.insert(subject.clone());
        entities.insert(object.clone());
        if let Some(predicate) = predicates.get(rec.relation.as_str()) {
            kept.push(Fact::Binary {
                predicate: predicate.clone(),
                left: subject,
                right: object,
            });
        }
    }
    let mut fb: FactBase = entities
        .into_iter()
        .map(|arg| Fact::Unary {
            predicate: location.clone(),
            arg,
        })
        .collect();
    fb.extend(kept);
    Ok(fb)
}

/// Reads several triple files in order into one fact base.
pub fn ingest_triple_files<P: AsRef<std::path::Path>>(
    paths: &[P],
    relation_map: &HashMap<String, String>,
) -> Result<FactBase> {
    let mut joined = Vec::new();
    for p in paths {
        let bytes = std::fs::read(p)?;
        joined.extend_from_slice(&bytes);
        if !joined.ends_with(b"\n") {
            joined.push(b'\n');
        }
    }
    ingest_triples(io::Cursor::new(joined), relation_map)
}

/// What a benchmark sample executes.
pub enum BenchTask<'a> {
    /// Full closure of `matrix`.
    Dg { matrix: &'a BitMatrix },
    /// Closure rows reachable from `source`.
    DgPartial {
        matrix: &'a BitMatrix,
        source: usize,
    },
    /// A pipeline; the derived-fact count is taken from `output`.
    Pipeline {
        pipeline: &'a Pipeline,
        facts: &'a FactBase,
        symbols: &'a SymbolTable,
        output: &'a str,
    },
}

impl BenchTask<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            BenchTask::Dg { .. } => "dg",
            BenchTask::DgPartial { .. } => "dg-partial",
            BenchTask::Pipeline { .. } => "pipeline",
        }
    }

    fn n(&self) -> usize {
        match self {
            BenchTask::Dg { matrix } | BenchTask::DgPartial { matrix, .. } => matrix.rows(),
            BenchTask::Pipeline { symbols, .. } => symbols.len(),
        }
    }

    /// Runs once. `Ok(None)` means the deadline passed.
    fn run_once(&self, deadline: Instant) -> Result<Option<(usize, usize)>> {
        let deadline = Some(deadline);
        Ok(match self {
            BenchTask::Dg { matrix } => {
                engine::rms_until(matrix, deadline)?.map(|r| (r.iterations, r.closure.count_ones()))
            }
            BenchTask::DgPartial { matrix, source } => {
                let v = BitVector::unit(matrix.rows(), *source);
                engine::smp_until(&v, matrix, deadline)?
                    .map(|r| (r.iterations, r.reachable.count_ones()))
            }
            BenchTask::Pipeline {
                pipeline,
                facts,
                symbols,
                output,
            } => engine::execute(pipeline, facts, symbols, &mut NoCache, deadline)?.map(|out| {
                let iterations = out.names().filter_map(|name| out.iterations(name)).sum();
                let derived = out.get(output).map_or(0, BitMatrix::count_ones);
                (iterations, derived)
            }),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSample {
    pub repeat: usize,
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
    /// `None` when the sample timed out.
    pub outcome: Option<(usize, usize)>,
}

impl BenchSample {
    pub fn timed_out(&self) -> bool {
        self.outcome.is_none()
    }

    pub fn iterations(&self) -> Option<usize> {
        self.outcome.map(|o| o.0)
    }

    pub fn derived_facts(&self) -> Option<usize> {
        self.outcome.map(|o| o.1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub task: String,
    pub n: usize,
    pub p_t: Option<f64>,
    pub samples: Vec<BenchSample>,
}

impl BenchReport {
    fn completed(&self) -> impl Iterator<Item = &BenchSample> {
        self.samples.iter().filter(|s| !s.timed_out())
    }

    /// Mean CPU seconds over completed samples.
    pub fn mean_cpu_seconds(&self) -> Option<f64> {
        let times: Vec<f64> = self.completed().map(|s| s.cpu_seconds).collect();
        (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64)
    }

    /// Sample standard deviation of CPU seconds; 0 for a single sample.
    pub fn std_cpu_seconds(&self) -> Option<f64> {
        let mean = self.mean_cpu_seconds()?;
        let times: Vec<f64> = self.completed().map(|s| s.cpu_seconds).collect();
        if times.len() < 2 {
            return Some(0.0);
        }
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (times.len() - 1) as f64;
        Some(var.sqrt())
    }

    pub fn mean_wall_seconds(&self) -> Option<f64> {
        let times: Vec<f64> = self.completed().map(|s| s.wall_seconds).collect();
        (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64)
    }

    /// CSV rows under [`CSV_HEADER`]; timed-out samples carry `timeout` in
    /// the iteration and fact columns.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(','))
            .expect("in-memory write");
        let n = self.n.to_string();
        let p_t = self.p_t.map(|p| p.to_string()).unwrap_or_default();
        for s in &self.samples {
            let (iterations, derived) = match s.outcome {
                Some((i, d)) => (i.to_string(), d.to_string()),
                None => ("timeout".to_string(), "timeout".to_string()),
            };
            w.write_record([
                self.task.as_str(),
                &n,
                &p_t,
                &s.repeat.to_string(),
                &format!("{:.6}", s.cpu_seconds),
                &iterations,
                &derived,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii fields")
    }
}

/// CPU time consumed by the calling thread.
fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Runs `task` `repeats` times in sequence. A sample that exceeds `timeout`
/// is recorded as timed out and ends the run.
pub fn bench_run(
    task: &BenchTask<'_>,
    p_t: Option<f64>,
    repeats: usize,
    timeout: Duration,
) -> Result<BenchReport> {
    let mut samples = Vec::with_capacity(repeats);
    for repeat in 0..repeats {
        let wall = Instant::now();
        let cpu = thread_cpu_time();
        let outcome = task.run_once(wall + timeout)?;
        let cpu_seconds = (thread_cpu_time() - cpu).as_secs_f64();
        let wall_seconds = wall.elapsed().as_secs_f64();
        let timed_out = outcome.is_none();
        samples.push(BenchSample {
            repeat,
            cpu_seconds,
            wall_seconds,
            outcome,
        });
        if timed_out {
            break;
        }
    }
    Ok(BenchReport {
        task: task.label().to_string(),
        n: task.n(),
        p_t,
        samples,
    })
}

/// Compiles the `edge` relation of a generated graph, for callers that hold facts.
pub fn compile_edges(fb: &FactBase, st: &SymbolTable) -> Result<BitMatrix> {
    compile(fb, "edge", st)
}
