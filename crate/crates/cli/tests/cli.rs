use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use spectral_svar::simulate::{SeriesSample, SpectrumEstimate, SpectrumEstimateFile};
use spectral_svar::svar::SpectrumBundle;
use spectral_svar::RatFn;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

struct Out {
    code: i32,
    report: Value,
    stderr: String,
}

fn run(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_spectral-svar")).args(args).output().unwrap();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    Out { code: out.status.code().unwrap(), report, stderr: String::from_utf8_lossy(&out.stderr).into() }
}

fn ok(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(o.code, 0, "{args:?}: {}", o.stderr);
    o.report
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

#[test]
fn validate_accepts_instrument_and_rejects_bad_graphs() {
    let r = ok(&["validate", "--graph", path(&fixture("instrument_graph.json")), "--params", path(&fixture("instrument_params.json"))]);
    assert_eq!(r["outputs"]["valid"], true);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);

    let o = run(&["validate", "--graph", path(&fixture("latent_edge_invalid.json"))]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("latent vertices must have no incoming edges"), "{}", o.stderr);
    assert!(o.report["error"].is_string());

    let o = run(&["validate", "--graph", path(&fixture("negative_lag_invalid.json"))]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("negative lag"), "{}", o.stderr);
}

#[test]
fn separation_queries() {
    let instrument = fixture("instrument_graph.json");
    let r = ok(&["query", "tsep", "--graph", path(&instrument), "--x", "v", "--y", "w"]);
    assert_eq!(r["outputs"]["size"], 1);

    let r = ok(&["query", "dsep", "--graph", path(&instrument), "--x", "u", "--y", "w", "--z", "v,l"]);
    assert_eq!(r["outputs"]["d_separated"], true);
    let r = ok(&["query", "dsep", "--graph", path(&instrument), "--x", "u", "--y", "w", "--z", "v"]);
    assert_eq!(r["outputs"]["d_separated"], false);

    let r = ok(&["query", "treks", "--graph", path(&instrument), "--x", "v", "--y", "w"]);
    let treks = strings(&r["outputs"]["treks"][0]["treks"]);
    assert_eq!(treks.len(), 4);
    assert!(treks.contains(&"v <- l -> w".to_string()));
    assert!(treks.contains(&"v -> w".to_string()));

    let o = run(&["query", "dsep", "--graph", path(&instrument), "--x", "q", "--y", "w"]);
    assert_eq!(o.code, 2);
}

#[test]
fn rank_query_needs_seed_and_records_it() {
    let g = fixture("rank_one_graph.json");
    let r = ok(&["query", "rank", "--graph", path(&g), "--x", "2", "--y", "3", "--seed", "11", "--trials", "3"]);
    assert_eq!(r["outputs"]["generic_rank"], 1);
    assert_eq!(r["seeds"], serde_json::json!([11, 12, 13]));
    assert!(r["warnings"].as_array().unwrap().is_empty());
    assert_eq!(run(&["query", "rank", "--graph", path(&g), "--x", "2", "--y", "3"]).code, 2);
}

#[test]
fn spectrum_of_instrument() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.json");
    ok(&["spectrum", "--graph", path(&fixture("instrument_graph.json")), "--params", path(&fixture("instrument_params.json")), "--out", path(&out)]);
    let b: SpectrumBundle = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let h = |a: &str, c: &str| b.h.entry(a, c).unwrap().clone();
    let si = |a: &str| b.s_i.entry(a, a).unwrap().clone();
    let s = |a: &str, c: &str| b.s.entry(a, c).unwrap().clone();
    assert_eq!(s("w", "u"), &(&h("u", "v") * &h("v", "w")) * &si("u"));
    assert_eq!(s("u", "w"), s("w", "u").conj());
    let two_treks = &(&s("v", "v") * &h("v", "w").conj()) + &(&(&h("l", "v") * &si("l")) * &h("l", "w").conj());
    assert_eq!(s("v", "w"), two_treks);
}

#[test]
fn zero_and_unstable_parameters() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.json");
    let g = fixture("instrument_graph.json");
    ok(&["spectrum", "--graph", path(&g), "--params", path(&fixture("instrument_zero_params.json")), "--out", path(&out)]);
    let b: SpectrumBundle = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(b.s.get(i, j).is_zero(), i != j);
        }
    }
    let o = run(&["spectrum", "--graph", path(&g), "--params", path(&fixture("instrument_unstable_params.json")), "--out", path(&out)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("coefficients| of v is 11/10"), "{}", o.stderr);
}

#[test]
fn identify_latent_chain_from_seed_and_replay() {
    let dir = TempDir::new().unwrap();
    let g = fixture("latent_chain_graph.json");
    let cert = dir.path().join("cert.json");
    let r = ok(&["identify", "--graph", path(&g), "--seed", "5", "--out", path(&cert)]);
    assert_eq!(strings(&r["outputs"]["solved"]), ["v2 -> v3", "v3 -> v4", "v4 -> v5"]);
    assert!(r["outputs"]["unresolved_edges"].as_array().unwrap().is_empty());
    assert_eq!(r["seeds"], serde_json::json!([5]));

    let again = dir.path().join("again.json");
    ok(&["replay", "--graph", path(&g), "--certificate", path(&cert), "--spectrum", path(&spectrum_of_seed(&dir, 5)), "--out", path(&again)]);
    assert_eq!(std::fs::read(&cert).unwrap(), std::fs::read(&again).unwrap());

    let moved = dir.path().join("moved.json");
    let mut c: Value = serde_json::from_slice(&std::fs::read(&cert).unwrap()).unwrap();
    c["steps"].as_array_mut().unwrap().reverse();
    std::fs::write(&moved, c.to_string()).unwrap();
    let o = run(&["replay", "--graph", path(&g), "--certificate", path(&moved), "--spectrum", path(&again_spectrum(&dir))]);
    assert_eq!(o.code, 2, "{}", o.stderr);
}

/// The spectrum the sampler produces for the latent chain with `seed`, via parameters
/// written by the library.
fn spectrum_of_seed(dir: &TempDir, seed: u64) -> PathBuf {
    use spectral_svar::graph::GraphSpec;
    use spectral_svar::svar::{sample_stable_params, DEFAULT_MAGNITUDE};
    let spec: GraphSpec = serde_json::from_str(&std::fs::read_to_string(fixture("latent_chain_graph.json")).unwrap()).unwrap();
    let tsg = spectral_svar::TimeSeriesGraph::from_spec(&spec).unwrap();
    let params = dir.path().join(format!("p{seed}.json"));
    std::fs::write(&params, serde_json::to_string(&sample_stable_params(&tsg, seed, DEFAULT_MAGNITUDE).to_spec(&tsg)).unwrap()).unwrap();
    let out = dir.path().join(format!("s{seed}.json"));
    ok(&["spectrum", "--graph", path(&fixture("latent_chain_graph.json")), "--params", path(&params), "--out", path(&out)]);
    out
}

fn again_spectrum(dir: &TempDir) -> PathBuf {
    spectrum_of_seed(dir, 6)
}

#[test]
fn identify_from_params_and_spectrum_agree() {
    let dir = TempDir::new().unwrap();
    let (g, p) = (fixture("instrument_graph.json"), fixture("instrument_params.json"));
    let (a, b, s) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("s.json"));
    let r = ok(&["identify", "--graph", path(&g), "--params", path(&p), "--out", path(&a)]);
    assert!(strings(&r["outputs"]["solved"]).contains(&"v -> w".to_string()));
    ok(&["spectrum", "--graph", path(&g), "--params", path(&p), "--out", path(&s)]);
    ok(&["identify", "--graph", path(&g), "--spectrum", path(&s), "--out", path(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let bundle: SpectrumBundle = serde_json::from_str(&std::fs::read_to_string(&s).unwrap()).unwrap();
    let cert: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    let links: Vec<&Value> = cert["steps"].as_array().unwrap().iter().flat_map(|s| s["solved"].as_array().unwrap()).collect();
    let vw = links.iter().find(|l| l["from"] == "v" && l["to"] == "w").unwrap();
    let h: RatFn = serde_json::from_value(vw["link"].clone()).unwrap();
    assert_eq!(&h, bundle.h.entry("v", "w").unwrap());
}

#[test]
fn regression_certificate_and_unresolved_listing() {
    let r = ok(&["identify", "--graph", path(&fixture("chain_graph.json")), "--params", path(&fixture("chain_params.json"))]);
    assert!(r["outputs"]["steps"].as_array().unwrap().iter().all(|s| s["method"] == "regression"));
    assert_eq!(strings(&r["outputs"]["solved"]), ["a -> b", "b -> c"]);

    let r = ok(&["identify", "--graph", path(&fixture("confounded_edge_graph.json")), "--seed", "0"]);
    assert!(r["outputs"]["solved"].as_array().unwrap().is_empty());
    assert_eq!(strings(&r["outputs"]["unresolved_edges"]), ["a -> b"]);
}

#[test]
fn singular_systems_warn_resample_and_fail() {
    let g = fixture("two_instruments_graph.json");
    // coefficients n/64 with |n| = 1 make the instrument matrix singular for
    // about half of the seeds
    let r = ok(&["identify", "--graph", path(&g), "--seed", "0", "--magnitude", "1"]);
    assert_eq!(r["seeds"], serde_json::json!([0, 1]));
    assert!(strings(&r["warnings"])[0].contains("seed 0 gave a singular system"));
    assert_eq!(r["outputs"]["seed_used"], 1);

    let o = run(&["identify", "--graph", path(&g), "--seed", "49", "--magnitude", "1", "--retries", "3"]);
    assert_eq!(o.code, 3, "{}", o.stderr);
    assert_eq!(o.report["seeds"], serde_json::json!([49, 50, 51, 52]));

    let o = run(&["identify", "--graph", path(&g), "--params", path(&fixture("two_instruments_singular_params.json"))]);
    assert_eq!(o.code, 3);
    assert!(strings(&o.report["warnings"])[0].contains("singular"));
}

#[test]
fn simulate_estimate_discover_chain() {
    let dir = TempDir::new().unwrap();
    let (g, p) = (fixture("chain_graph.json"), fixture("chain_params.json"));
    let csv = dir.path().join("x.csv");
    let r = ok(&["simulate", "--graph", path(&g), "--params", path(&p), "--length", "65536", "--seed", "8", "--out", path(&csv)]);
    assert_eq!(r["seeds"], serde_json::json!([8]));
    let est = dir.path().join("e.json");
    ok(&["estimate", "--series", path(&csv), "--frequencies", "8", "--segments", "256", "--out", path(&est)]);
    let file: SpectrumEstimateFile = serde_json::from_str(&std::fs::read_to_string(&est).unwrap()).unwrap();
    let e = SpectrumEstimate::from_file(file).unwrap();
    assert_eq!(e.segments, 511);

    let sp = dir.path().join("s.json");
    ok(&["spectrum", "--graph", path(&g), "--params", path(&p), "--out", path(&sp)]);
    let b: SpectrumBundle = serde_json::from_str(&std::fs::read_to_string(&sp).unwrap()).unwrap();
    for (theta, m) in e.frequencies.iter().zip(&e.matrices) {
        for i in 0..3 {
            let exact = b.s.get(i, i).eval_unit(*theta).unwrap();
            assert!(((m[(i, i)] - exact).norm() / exact.norm()) < 0.15, "theta {theta} entry {i}");
        }
    }

    let exact = ok(&["discover", "--graph", path(&g), "--params", path(&p)]);
    let dsep = ok(&["discover", "--graph", path(&g)]);
    let empirical = ok(&["discover", "--spectrum", path(&est), "--threshold", "0.1"]);
    assert_eq!(exact["outputs"], dsep["outputs"]);
    assert_eq!(empirical["outputs"], dsep["outputs"]);
    assert_eq!(dsep["outputs"]["undirected"], serde_json::json!([["a", "b"], ["b", "c"]]));
}

#[test]
fn discover_on_empty_graph() {
    let r = ok(&["discover", "--graph", path(&fixture("empty_graph.json"))]);
    assert!(r["outputs"]["directed"].as_array().unwrap().is_empty());
    assert!(r["outputs"]["undirected"].as_array().unwrap().is_empty());
}

#[test]
fn ill_conditioned_block_warns() {
    // a copy of b placed before c: separating a from d needs two vertices,
    // and the first candidate pair is {b, copy of b}
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("x.csv");
    ok(&["simulate", "--graph", path(&fixture("diamond_graph.json")), "--params", path(&fixture("diamond_params.json")), "--length", "16384", "--seed", "1", "--out", path(&csv)]);
    let s = SeriesSample::read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    let labels = ["a", "b", "b2", "c", "d"].map(String::from).to_vec();
    let dup = SeriesSample::new(labels, s.values.iter().map(|r| vec![r[0], r[1], r[1], r[2], r[3]]).collect()).unwrap();
    let dup_csv = dir.path().join("dup.csv");
    dup.write_csv(std::fs::File::create(&dup_csv).unwrap()).unwrap();
    let est = dir.path().join("e.json");
    ok(&["estimate", "--series", path(&dup_csv), "--frequencies", "4", "--segments", "128", "--out", path(&est)]);
    let r = ok(&["discover", "--spectrum", path(&est)]);
    let warnings = strings(&r["warnings"]);
    assert!(warnings.iter().any(|w| w.contains("ill-conditioned")), "{warnings:?} {}", r["outputs"]);
}

#[test]
fn estimation_preconditions() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("x.csv");
    ok(&["simulate", "--graph", path(&fixture("chain_graph.json")), "--params", path(&fixture("chain_params.json")), "--length", "100", "--seed", "1", "--out", path(&csv)]);
    let est = dir.path().join("e.json");
    assert_eq!(run(&["estimate", "--series", path(&csv), "--frequencies", "4", "--segments", "200", "--out", path(&est)]).code, 4);
    assert_eq!(run(&["estimate", "--series", path(&csv), "--frequencies", "2.0,1.0", "--segments", "50", "--out", path(&est)]).code, 4);
    assert_eq!(run(&["estimate", "--series", path(&csv), "--frequencies", "4", "--segments", "50", "--overlap", "1", "--out", path(&est)]).code, 4);
    // simulate refuses to run without a seed
    assert_ne!(run(&["simulate", "--graph", path(&fixture("chain_graph.json")), "--params", path(&fixture("chain_params.json")), "--length", "100", "--out", path(&csv)]).code, 0);
}

#[test]
fn identical_invocations_give_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let (g, p) = (fixture("chain_graph.json"), fixture("chain_params.json"));
    let mut files = Vec::new();
    for k in 0..2 {
        let csv = dir.path().join(format!("x{k}.csv"));
        let est = dir.path().join(format!("e{k}.json"));
        let cert = dir.path().join(format!("c{k}.json"));
        ok(&["simulate", "--graph", path(&g), "--params", path(&p), "--length", "2048", "--seed", "3", "--out", path(&csv)]);
        ok(&["estimate", "--series", path(&csv), "--frequencies", "0.5,1,2", "--segments", "64", "--out", path(&est)]);
        ok(&["identify", "--graph", path(&fixture("latent_chain_graph.json")), "--seed", "9", "--out", path(&cert)]);
        files.push([csv, est, cert].map(|f| std::fs::read(f).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    let other = dir.path().join("other.csv");
    ok(&["simulate", "--graph", path(&g), "--params", path(&p), "--length", "2048", "--seed", "4", "--out", path(&other)]);
    assert_ne!(std::fs::read(other).unwrap(), files[0][0]);
}
