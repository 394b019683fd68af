use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bmlp::engine::IS_FOREIGN_PIPELINE;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Run {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn bmlp(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_bmlp"))
            .args(args)
            .env("BMLP_WORKDIR", self.path("work"))
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn compile_example(run: &Run) -> String {
    let out = run.path("edge.bmlp");
    let o = run.bmlp(&[
        "compile",
        "--facts",
        data("ex.pl").to_str().unwrap(),
        "--pred",
        "edge",
        "--type",
        "node",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "compiled edge dim 3x3 bits 2\n");
    out.to_str().unwrap().to_string()
}

#[test]
fn compile_writes_matrix_file() {
    let run = Run::new();
    let path = compile_example(&run);
    assert_eq!(
        fs::read_to_string(path).unwrap(),
        "bmlp-matrix v1\nname: edge\ndim: 3 3\nuniverse: a b c\nrow 0: 2\nrow 1: 4\nrow 2: 0\n"
    );
}

#[test]
fn compile_missing_file() {
    let run = Run::new();
    let o = run.bmlp(&[
        "compile",
        "--facts",
        "absent.pl",
        "--pred",
        "edge",
        "--type",
        "node",
        "--out",
        "x",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no such file"), "{}", stderr(&o));
}

#[test]
fn compile_predicate_without_facts() {
    let run = Run::new();
    let out = run.path("z.bmlp");
    let o = run.bmlp(&[
        "compile",
        "--facts",
        data("ex.pl").to_str().unwrap(),
        "--pred",
        "link",
        "--type",
        "node",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "compiled link dim 3x3 bits 0\n");
}

#[test]
fn compile_parse_error() {
    let run = Run::new();
    let facts = run.path("bad.pl");
    fs::write(&facts, "node(a).\nedge(a,X).\n").unwrap();
    let o = run.bmlp(&[
        "compile",
        "--facts",
        facts.to_str().unwrap(),
        "--pred",
        "edge",
        "--type",
        "node",
        "--out",
        "x",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("2:"), "{}", stderr(&o));
}

#[test]
fn rms_prints_closure() {
    let run = Run::new();
    let edge = compile_example(&run);
    let closure = run.path("path.bmlp");
    let o = run.bmlp(&[
        "rms",
        "--in",
        &edge,
        "--out",
        closure.to_str().unwrap(),
        "--print",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "rms iterations 2 facts 3\npath(a,b)\npath(a,c)\npath(b,c)\n"
    );
    let text = fs::read_to_string(closure).unwrap();
    assert!(
        text.contains("name: path\n") && text.contains("row 0: 6\n"),
        "{text}"
    );
}

#[test]
fn rms_rejects_vector_input() {
    let run = Run::new();
    let edge = compile_example(&run);
    let v = run.path("v.bmlp");
    let o = run.bmlp(&[
        "smp",
        "--in",
        &edge,
        "--source",
        "a",
        "--out",
        v.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let o = run.bmlp(&["rms", "--in", v.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn smp_reachable_from_a() {
    let run = Run::new();
    let edge = compile_example(&run);
    let o = run.bmlp(&["smp", "--in", &edge, "--source", "a", "--print"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "smp iterations 3 facts 2\nb\nc\n");

    let o = run.bmlp(&[
        "smp", "--in", &edge, "--source", "b", "--source", "a", "--print",
    ]);
    assert_eq!(stdout(&o).lines().skip(1).collect::<Vec<_>>(), ["b", "c"]);
}

#[test]
fn smp_unknown_source() {
    let run = Run::new();
    let edge = compile_example(&run);
    let o = run.bmlp(&["smp", "--in", &edge, "--source", "zzz"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("zzz"));
}

#[test]
fn corrupt_matrix_file() {
    let run = Run::new();
    let bad = run.path("bad.bmlp");
    fs::write(
        &bad,
        "bmlp-matrix v1\nname: e\ndim: 2 2\nuniverse: a b\nrow 0: 1\n",
    )
    .unwrap();
    let o = run.bmlp(&["rms", "--in", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));
}

fn pipeline(run: &Run, extra: &[&str]) -> Output {
    let facts = data("db.pl");
    let p = data("is_foreign.pipeline");
    let mut args = vec![
        "pipeline",
        "--facts",
        facts.to_str().unwrap(),
        "--pipeline",
        p.to_str().unwrap(),
        "--type",
        "location",
    ];
    args.extend_from_slice(extra);
    run.bmlp(&args)
}

#[test]
fn pipeline_file_matches_builtin() {
    assert_eq!(
        fs::read_to_string(data("is_foreign.pipeline")).unwrap(),
        IS_FOREIGN_PIPELINE
    );
}

#[test]
fn pipeline_is_foreign() {
    let run = Run::new();
    let o = pipeline(&run, &["--print", "isForeign"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let facts: Vec<&str> = text.lines().collect();
    assert_eq!(facts.len(), 45);
    assert_eq!(facts[0], "isForeign(g1,g1)");
    for missing in [
        "isForeign(t1,g4)",
        "isForeign(g2,g4)",
        "isForeign(g3,g4)",
        "isForeign(g4,g3)",
    ] {
        assert!(!facts.contains(&missing));
    }
    // second run is served from the cache and prints the same thing
    assert!(fs::read_dir(run.path("work")).unwrap().count() > 0);
    let again = pipeline(&run, &["--print", "isForeign"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn pipeline_no_cache_leaves_workdir_alone() {
    let run = Run::new();
    let o = pipeline(&run, &["--no-cache", "--print", "hasPlace"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "hasPlace(g3,g2)\nhasPlace(g3,t1)\nhasPlace(t1,g2)\n"
    );
    assert!(!run.path("work").exists());
}

#[test]
fn pipeline_workdir_flag_overrides_env() {
    let run = Run::new();
    let dir = run.path("elsewhere");
    let o = pipeline(&run, &["--workdir", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(dir.is_dir());
    assert!(!run.path("work").exists());
}

#[test]
fn pipeline_undefined_print() {
    let run = Run::new();
    let o = pipeline(&run, &["--print", "nothing"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn pipeline_errors_name_the_step() {
    let run = Run::new();
    let p = run.path("bad.pipeline");
    fs::write(&p, "loop = rms(missing)\n").unwrap();
    let o = run.bmlp(&[
        "pipeline",
        "--facts",
        data("db.pl").to_str().unwrap(),
        "--pipeline",
        p.to_str().unwrap(),
        "--type",
        "location",
    ]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("`loop`"), "{}", stderr(&o));

    fs::write(&p, "v = select(g1)\nbad = mul(contains, v)\n").unwrap();
    let o = run.bmlp(&[
        "pipeline",
        "--facts",
        data("db.pl").to_str().unwrap(),
        "--pipeline",
        p.to_str().unwrap(),
        "--type",
        "location",
    ]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("`bad`"), "{}", stderr(&o));

    fs::write(&p, "v = select(nowhere)\n").unwrap();
    let o = run.bmlp(&[
        "pipeline",
        "--facts",
        data("db.pl").to_str().unwrap(),
        "--pipeline",
        p.to_str().unwrap(),
        "--type",
        "location",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn pipeline_single_base_step_echoes_relation() {
    let run = Run::new();
    let p = run.path("echo.pipeline");
    fs::write(&p, "c = base(contains)\n").unwrap();
    let o = run.bmlp(&[
        "pipeline",
        "--facts",
        data("db.pl").to_str().unwrap(),
        "--pipeline",
        p.to_str().unwrap(),
        "--type",
        "location",
        "--print",
        "c",
    ]);
    assert_eq!(stdout(&o), "c(g3,t1)\nc(t1,g2)\n");
}

#[test]
fn pipeline_prints_vectors() {
    let run = Run::new();
    let p = run.path("reach.pipeline");
    fs::write(&p, "v = select(g3)\nr = smp(v, contains)\n").unwrap();
    let o = run.bmlp(&[
        "pipeline",
        "--facts",
        data("db.pl").to_str().unwrap(),
        "--pipeline",
        p.to_str().unwrap(),
        "--type",
        "location",
        "--print",
        "r",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "r(g2)\nr(t1)\n");
}

#[test]
fn verify_passes() {
    let run = Run::new();
    let o = run.bmlp(&[
        "verify", "--n", "16", "--p", "0.2", "--seed", "7", "--cases", "25",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.contains(": PASS")).count(),
        25
    );

    let o = run.bmlp(&["verify", "--n", "1", "--p", "0", "--cases", "1"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn verify_detects_fault() {
    let run = Run::new();
    let o = run.bmlp(&["verify", "--n", "8", "--cases", "3", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL"));
    assert!(stderr(&o).contains("path(n_0,n_0)"), "{}", stderr(&o));
}

#[test]
fn verify_rejects_bad_probability() {
    let run = Run::new();
    let o = run.bmlp(&["verify", "--p", "1.5"]);
    assert_eq!(code(&o), 2);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("task,n,p_t,repeat,cpu_seconds,iterations,derived_facts")
    );
    lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn bench_dg_rows() {
    let run = Run::new();
    let csv = run.path("dg.csv");
    let o = run.bmlp(&[
        "bench",
        "--task",
        "dg",
        "--n",
        "1000",
        "--p",
        "0.01",
        "--repeats",
        "3",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 3);
    assert!(rows
        .iter()
        .all(|r| r[0] == "dg" && r[1] == "1000" && r[2] == "0.01"));
}

#[test]
fn bench_dg_partial_matches_oracle() {
    use bmlp::benchgen::{gen_graph, GraphGenParams};
    use bmlp::oracle::{evaluate, RuleProgram};

    let run = Run::new();
    let csv = run.path("partial.csv");
    let o = run.bmlp(&[
        "bench",
        "--task",
        "dg-partial",
        "--n",
        "1000",
        "--p",
        "0.001",
        "--seed",
        "3",
        "--repeats",
        "2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let fb = gen_graph(&GraphGenParams::new(1000, 0.001, 3).unwrap());
    let derived = evaluate(&RuleProgram::transitive_closure("edge", "path"), &fb).unwrap();
    let expected = derived
        .binary("path")
        .filter(|(x, _)| x.as_str() == "n_0")
        .count();
    for row in csv_rows(&csv) {
        assert_eq!(row[6], expected.to_string());
    }
}

#[test]
fn bench_timeout_and_unknown_source() {
    let run = Run::new();
    let o = run.bmlp(&[
        "bench",
        "--task",
        "dg",
        "--n",
        "50",
        "--p",
        "0.1",
        "--repeats",
        "2",
        "--timeout",
        "0",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .ends_with(",timeout,timeout"));

    let o = run.bmlp(&[
        "bench",
        "--task",
        "dg-partial",
        "--n",
        "10",
        "--p",
        "0.1",
        "--source",
        "x",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bench_pipeline_task() {
    let run = Run::new();
    let o = run.bmlp(&[
        "bench",
        "--task",
        "pipeline",
        "--facts",
        data("db.pl").to_str().unwrap(),
        "--repeats",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let derived: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(derived, ["45", "45"]);
}

#[test]
fn bench_requires_size_for_graph_tasks() {
    let run = Run::new();
    let o = run.bmlp(&["bench", "--task", "dg", "--p", "0.1"]);
    assert_eq!(code(&o), 2);
}
