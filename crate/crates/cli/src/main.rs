//! `bmlp`: compile facts into boolean matrices, run the closure modules and
//! pipelines over them, check results against the rule evaluator, and time
//! random-graph workloads.

mod cache;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use bmlp::benchgen::{self, BenchTask, GraphGenParams};
use bmlp::datalog::{
    build_symbols, compile, load_matrix, save_matrix, select, to_facts, vector_constants,
};
use bmlp::engine::{run_pipeline_with, NoCache, StepCache};
use bmlp::oracle::{self, RuleProgram};
use bmlp::{BitMatrix, BitVector, Error, FactBase, Pipeline, SymbolTable};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cache::DiskCache;

#[derive(Parser)]
#[command(
    name = "bmlp",
    version,
    about = "Boolean matrix evaluation of dyadic datalog"
)]
struct Cli {
    /// Directory for cached pipeline intermediates.
    #[arg(long, global = true, env = "BMLP_WORKDIR", default_value = "bmlp_temp")]
    workdir: PathBuf,

    /// Do not read or write cached intermediates.
    #[arg(long, global = true)]
    no_cache: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the binary facts of one predicate into a matrix file.
    Compile {
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        pred: String,
        /// Unary predicate whose arguments form the universe.
        #[arg(long = "type")]
        type_name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transitive closure of a matrix by repeated squaring.
    Rms {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the closure as facts.
        #[arg(long)]
        print: bool,
        /// Predicate name for the result.
        #[arg(long, default_value = "path")]
        name: String,
    },
    /// Closure rows reachable from the given source constants.
    Smp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "source", required = true)]
        sources: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the reachable constants.
        #[arg(long)]
        print: bool,
    },
    /// Run a pipeline file over a fact base.
    Pipeline {
        #[arg(long)]
        facts: PathBuf,
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long = "type")]
        type_name: String,
        /// Relation to print.
        #[arg(long)]
        print: Option<String>,
        /// Save the printed relation to this matrix file.
        #[arg(long, requires = "print")]
        out: Option<PathBuf>,
    },
    /// Compare module outputs with the rule evaluator on random graphs.
    Verify {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        cases: usize,
        /// Flip one closure bit before comparing.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Time the modules on random graphs or a fact base.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskKind {
    Dg,
    DgPartial,
    Pipeline,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    task: TaskKind,
    #[arg(long, required_if_eq_any = [("task", "dg"), ("task", "dg-partial")])]
    n: Option<usize>,
    #[arg(long, required_if_eq_any = [("task", "dg"), ("task", "dg-partial")])]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-sample cap in seconds.
    #[arg(long, default_value_t = benchgen::DEFAULT_TIMEOUT.as_secs_f64())]
    timeout: f64,
    /// Source constant for dg-partial.
    #[arg(long, default_value = "n_0")]
    source: String,
    /// Fact base for the pipeline task.
    #[arg(long, required_if_eq("task", "pipeline"))]
    facts: Option<PathBuf>,
    /// Pipeline file; the built-in isForeign pipeline when omitted.
    #[arg(long)]
    pipeline: Option<PathBuf>,
    #[arg(long = "type", default_value = "location")]
    type_name: String,
    /// Step whose fact count is reported; the last step when omitted.
    #[arg(long)]
    output: Option<String>,
}

/// A failed command: message for stderr and the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(exit_code(&e), e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(2, e.to_string())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::UnknownConstant(_) | Error::EmptyUniverse { .. } => 3,
        Error::Shape { .. }
        | Error::NotSquare { .. }
        | Error::Index { .. }
        | Error::PipelineReference { .. }
        | Error::DuplicateStep(_)
        | Error::Step { .. }
        | Error::Stratification(_) => 4,
        _ => 2,
    }
}

/// Attaches the file name to errors raised while reading `path`.
fn at(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::Io(io) if io.kind() == io::ErrorKind::NotFound => {
            Failure::new(2, format!("{}: no such file", path.display()))
        }
        e => {
            let code = exit_code(&e);
            Failure::new(code, format!("{}: {e}", path.display()))
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cache_dir = (!cli.no_cache).then_some(cli.workdir.as_path());
    let result = match cli.command {
        Command::Compile {
            facts,
            pred,
            type_name,
            out,
        } => cmd_compile(&facts, &pred, &type_name, &out),
        Command::Rms {
            input,
            out,
            print,
            name,
        } => cmd_rms(&input, out.as_deref(), print, &name),
        Command::Smp {
            input,
            sources,
            out,
            print,
        } => cmd_smp(&input, &sources, out.as_deref(), print),
        Command::Pipeline {
            facts,
            pipeline,
            type_name,
            print,
            out,
        } => cmd_pipeline(
            &facts,
            &pipeline,
            &type_name,
            print.as_deref(),
            out.as_deref(),
            cache_dir,
        ),
        Command::Verify {
            n,
            p,
            seed,
            cases,
            inject_fault,
        } => cmd_verify(n, p, seed, cases, inject_fault),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_facts(path: &Path, type_name: &str) -> Result<(FactBase, SymbolTable), Failure> {
    let fb = FactBase::from_path(path).map_err(at(path))?;
    let st = build_symbols(&fb, type_name).map_err(at(path))?;
    Ok((fb, st))
}

fn cmd_compile(facts: &Path, pred: &str, type_name: &str, out: &Path) -> CmdResult {
    let (fb, st) = load_facts(facts, type_name)?;
    let m = compile(&fb, pred, &st).map_err(at(facts))?;
    save_matrix(&m, &st, out).map_err(at(out))?;
    println!(
        "compiled {pred} dim {}x{} bits {}",
        m.rows(),
        m.cols(),
        m.count_ones()
    );
    Ok(())
}

fn print_binary(m: &BitMatrix, name: &str, st: &SymbolTable) -> CmdResult {
    let mut stdout = io::stdout().lock();
    for fact in to_facts(m, name, st)?.iter() {
        writeln!(stdout, "{fact}")?;
    }
    Ok(())
}

fn cmd_rms(input: &Path, out: Option<&Path>, print: bool, name: &str) -> CmdResult {
    let (m, st) = load_matrix(input).map_err(at(input))?;
    let r = bmlp::rms(&m)?;
    let closure = r.closure.with_name(name);
    if let Some(out) = out {
        save_matrix(&closure, &st, out).map_err(at(out))?;
    }
    println!(
        "rms iterations {} facts {}",
        r.iterations,
        closure.count_ones()
    );
    if print {
        print_binary(&closure, name, &st)?;
    }
    Ok(())
}

fn cmd_smp(input: &Path, sources: &[String], out: Option<&Path>, print: bool) -> CmdResult {
    let (m, st) = load_matrix(input).map_err(at(input))?;
    let v = select(sources, &st)?;
    let r = bmlp::smp(&v, &m)?;
    let reachable = r.reachable.with_name("reachable");
    if let Some(out) = out {
        save_matrix(reachable.as_matrix(), &st, out).map_err(at(out))?;
    }
    println!(
        "smp iterations {} facts {}",
        r.iterations,
        reachable.count_ones()
    );
    if print {
        let mut stdout = io::stdout().lock();
        for c in vector_constants(&reachable, &st)? {
            writeln!(stdout, "{c}")?;
        }
    }
    Ok(())
}

fn cmd_pipeline(
    facts: &Path,
    pipeline: &Path,
    type_name: &str,
    print: Option<&str>,
    out: Option<&Path>,
    cache_dir: Option<&Path>,
) -> CmdResult {
    let p = Pipeline::from_path(pipeline).map_err(at(pipeline))?;
    let (fb, st) = load_facts(facts, type_name)?;
    let mut disk;
    let mut none = NoCache;
    let cache: &mut dyn StepCache = match cache_dir {
        Some(dir) => {
            disk = DiskCache::open(dir, &st)
                .map_err(|e| Failure::new(2, format!("{}: {e}", dir.display())))?;
            &mut disk
        }
        None => &mut none,
    };
    let outputs = run_pipeline_with(&p, &fb, &st, cache)?;

    let Some(name) = print else {
        for (name, m) in outputs.iter() {
            match outputs.iterations(name) {
                Some(k) => println!("{name} facts {} iterations {k}", m.count_ones()),
                None => println!("{name} facts {}", m.count_ones()),
            }
        }
        return Ok(());
    };
    let m = outputs
        .get(name)
        .ok_or_else(|| Failure::new(4, format!("no relation `{name}` in the pipeline")))?;
    if let Some(out) = out {
        save_matrix(m, &st, out).map_err(at(out))?;
    }
    if m.is_square() && m.rows() == st.len() {
        print_binary(m, name, &st)
    } else {
        let v = BitVector::try_from(m.clone())?;
        let mut stdout = io::stdout().lock();
        for c in vector_constants(&v, &st)? {
            writeln!(stdout, "{name}({c})")?;
        }
        Ok(())
    }
}

/// First cell where `got` and `want` differ, row-major.
fn first_difference(got: &BitMatrix, want: &BitMatrix) -> Option<(usize, usize)> {
    (0..got.rows())
        .flat_map(|i| (0..got.cols()).map(move |j| (i, j)))
        .find(|&(i, j)| got.get(i, j) != want.get(i, j))
}

fn cmd_verify(n: usize, p: f64, seed: u64, cases: usize, inject_fault: bool) -> CmdResult {
    let program = RuleProgram::transitive_closure("edge", "path");
    let bound = n.next_power_of_two().trailing_zeros() as usize + 1;
    let mut first_failure = None;
    for k in 0..cases {
        let params = GraphGenParams::new(n, p, seed.wrapping_add(k as u64))?;
        let fb = benchgen::gen_graph(&params);
        let st = build_symbols(&fb, "node")?;
        let edge = compile(&fb, "edge", &st)?;
        let expected = compile(&oracle::evaluate(&program, &fb)?, "path", &st)?;

        let r = bmlp::rms(&edge)?;
        let mut closure = r.closure;
        if inject_fault {
            closure = BitMatrix::from_fn(n, n, |i, j| closure.get(i, j) ^ (i == 0 && j == 0));
        }
        let mut problem = first_difference(&closure, &expected).map(|(i, j)| {
            format!(
                "rms path({},{}) = {}, oracle says {}",
                st.universe()[i],
                st.universe()[j],
                closure.get(i, j),
                expected.get(i, j)
            )
        });
        if problem.is_none() && r.iterations > bound {
            problem = Some(format!(
                "rms took {} iterations, bound {bound}",
                r.iterations
            ));
        }
        for i in 0..n {
            if problem.is_some() {
                break;
            }
            let s = bmlp::smp(&BitVector::unit(n, i), &edge)?;
            let row = expected.row(i)?;
            if let Some(j) = (0..n).find(|&j| s.reachable.get(j) != row.get(j)) {
                problem = Some(format!(
                    "smp from {} reaches {} = {}, oracle says {}",
                    st.universe()[i],
                    st.universe()[j],
                    s.reachable.get(j),
                    row.get(j)
                ));
            } else if s.iterations > n {
                problem = Some(format!("smp took {} iterations, bound {n}", s.iterations));
            }
        }
        match problem {
            None => println!(
                "case {k}: PASS edges {} path {}",
                edge.count_ones(),
                expected.count_ones()
            ),
            Some(msg) => {
                println!("case {k}: FAIL {msg}");
                first_failure.get_or_insert(format!("case {k}: {msg}"));
            }
        }
    }
    match first_failure {
        None => Ok(()),
        Some(msg) => Err(Failure::new(1, format!("verification mismatch in {msg}"))),
    }
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    if !(args.timeout >= 0.0 && args.timeout.is_finite()) {
        return Err(Failure::new(2, format!("invalid timeout {}", args.timeout)));
    }
    let timeout = Duration::from_secs_f64(args.timeout);
    let report = match args.task {
        TaskKind::Dg | TaskKind::DgPartial => {
            let n = args.n.expect("required by clap");
            let p = args.p.expect("required by clap");
            let params = GraphGenParams::new(n, p, args.seed)?;
            let (m, st) = benchgen::gen_graph_matrix(&params);
            let task = if args.task == TaskKind::Dg {
                BenchTask::Dg { matrix: &m }
            } else {
                let source = st
                    .index_of(&args.source)
                    .ok_or_else(|| Failure::from(Error::UnknownConstant(args.source.clone())))?;
                BenchTask::DgPartial { matrix: &m, source }
            };
            benchgen::bench_run(&task, Some(p), args.repeats, timeout)?
        }
        TaskKind::Pipeline => {
            let facts = args.facts.as_deref().expect("required by clap");
            let (fb, st) = load_facts(facts, &args.type_name)?;
            let pipeline = match &args.pipeline {
                Some(path) => Pipeline::from_path(path).map_err(at(path))?,
                None => Pipeline::is_foreign(),
            };
            let output = match &args.output {
                Some(name) => name.clone(),
                None => pipeline
                    .steps()
                    .last()
                    .map(|s| s.output.clone())
                    .ok_or_else(|| Failure::new(4, "empty pipeline"))?,
            };
            if !pipeline.steps().iter().any(|s| s.output == output) {
                return Err(Failure::new(
                    4,
                    format!("no relation `{output}` in the pipeline"),
                ));
            }
            let task = BenchTask::Pipeline {
                pipeline: &pipeline,
                facts: &fb,
                symbols: &st,
                output: &output,
            };
            benchgen::bench_run(&task, None, args.repeats, timeout)?
        }
    };

    let csv = report.to_csv();
    match &args.csv {
        Some(path) => {
            fs::write(path, csv)
                .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
            let timeouts = report.samples.iter().filter(|s| s.timed_out()).count();
            let fmt = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.6}"));
            println!(
                "{} n {} samples {} timeouts {timeouts} mean_cpu_seconds {} std_cpu_seconds {}",
                report.task,
                report.n,
                report.samples.len(),
                fmt(report.mean_cpu_seconds()),
                fmt(report.std_cpu_seconds()),
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}
