use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rpts_core::generators::{cycle, gnp};
use rpts_core::lowerbound::build_gfd;
use rpts_core::{load_graph, UndirectedGraph};

fn rpts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_graph(out: &Output) -> UndirectedGraph {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    load_graph(&String::from_utf8(out.stdout.clone()).unwrap()).unwrap()
}

fn write_graph(dir: &Path, name: &str, g: &UndirectedGraph) -> String {
    let path = dir.join(name);
    let text: String = std::iter::once(format!("{} {}\n", g.n(), g.m()))
        .chain(g.edges().iter().map(|e| format!("{} {}\n", e.u, e.v)))
        .collect();
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_cycle_is_c4() {
    let g = stdout_graph(&rpts(&["gen", "cycle", "--n", "4"]));
    assert_eq!(g, cycle(4).unwrap());
}

#[test]
fn gen_gnp_is_deterministic() {
    let args = ["gen", "gnp", "--n", "20", "--p", "0.3", "--seed", "7"];
    let a = rpts(&args);
    let b = rpts(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_graph(&a), gnp(20, 0.3, 7).unwrap());
}

#[test]
fn gen_lb_family_delegates() {
    let g = stdout_graph(&rpts(&["gen", "lb-family", "--f", "1", "--d", "4"]));
    assert_eq!(&g, build_gfd(1, 4).unwrap().graph());
}

#[test]
fn verified_commands_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let g = write_graph(tmp.path(), "g.txt", &gnp(10, 0.4, 3).unwrap());
    let runs: [&[&str]; 6] = [
        &["srp", "--graph", &g, "--sources", "0,4,7", "--verify"],
        &["preserver", "--graph", &g, "--kind", "sxs", "--f", "1", "--sources", "0,5", "--verify"],
        &["spanner", "--graph", &g, "--f", "1", "--verify"],
        &["congest", "spt", "--graph", &g, "--sources", "1,2", "--verify"],
        &["verify", "--graph", &g, "--property", "all,c4", "--f-max", "1"],
        &["lb", "gen", "--f", "1", "--d", "3", "--sigma", "2", "--verify"],
    ];
    for args in runs {
        let out = rpts(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn labels_round_trip_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let g = write_graph(tmp.path(), "c6.txt", &cycle(6).unwrap());
    let dir = tmp.path().join("labels");
    let dir = dir.to_str().unwrap();
    let out = rpts(&["labels", "build", "--graph", &g, "--f", "1", "--out", dir]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(dir).join("0.label").exists());
    let out = rpts(&["labels", "query", "--dir", dir, "--s", "0", "--t", "3", "--fail", "0-1,3-4", "--graph", &g]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // Both routes from 0 to 3 are cut.
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "unreachable");
    let out = rpts(&["labels", "query", "--dir", dir, "--s", "0", "--t", "3", "--fail", "0-1"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "3");
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let g = write_graph(tmp.path(), "c4.txt", &cycle(4).unwrap());
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "3\n0 1\n1 x\n").unwrap();
    let bad = bad.to_str().unwrap();
    let missing = tmp.path().join("missing.txt");
    let missing = missing.to_str().unwrap();

    assert_eq!(code(&rpts(&["frobnicate"])), 2);
    assert_eq!(code(&rpts(&["srp", "--graph", bad, "--sources", "0"])), 3);
    assert_eq!(code(&rpts(&["srp", "--graph", missing, "--sources", "0"])), 4);
    assert_eq!(code(&rpts(&["srp", "--graph", &g, "--sources", "0,9"])), 7);
    assert_eq!(code(&rpts(&["gen", "gnp", "--n", "5", "--p", "1.5"])), 7);
}

#[test]
fn experiment_subcommand_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("exp.toml");
    fs::write(
        &config,
        r#"
name = "preserver"
command = "preserver"
seed = 2
verify = true

[graph.generator]
kind = "grid"
rows = 3
cols = 3

[params]
f = 1
sources = [0, 8]

[output]
dir = "res"
"#,
    )
    .unwrap();
    let out = rpts(&["experiment", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("res/report.json").exists());
    assert!(tmp.path().join("res/table.csv").exists());
}
