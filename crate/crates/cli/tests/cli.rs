use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use btx::embed::{save_embeddings, EmbeddingMatrix};
use tempfile::TempDir;

fn btx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btx")).args(args).output().unwrap()
}

fn btx_ok(args: &[&str]) {
    let out = btx(args);
    assert!(
        out.status.success(),
        "btx {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn report(dir: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(dir.join("report.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('\t').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn basis(n: usize) -> EmbeddingMatrix {
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    EmbeddingMatrix::from_rows(n, &rows).unwrap()
}

/// One document pair whose two sides share the same embeddings.
fn identity_doc(dir: &TempDir, id: &str, n: usize) -> String {
    let src: Vec<String> = (0..n).map(|i| format!("sentence {i}")).collect();
    let tgt: Vec<String> = (0..n).map(|i| format!("ប្រយោគ {i}")).collect();
    fs::write(dir.path().join(format!("{id}.src")), src.join("\n") + "\n").unwrap();
    fs::write(dir.path().join(format!("{id}.tgt")), tgt.join("\n") + "\n").unwrap();
    save_embeddings(&basis(n), dir.path().join(format!("{id}.emb"))).unwrap();
    format!("{id}\t{id}.src\t{id}.tgt\t{id}.emb\t{id}.emb\n")
}

#[test]
fn identical_embeddings_align_on_the_diagonal() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("m.tsv"), identity_doc(&dir, "d", 5)).unwrap();
    btx_ok(&["align", "--manifest", &p(&dir, "m.tsv"), "--out", &p(&dir, "out")]);
    let bitext = fs::read_to_string(dir.path().join("out/bitext.tsv")).unwrap();
    let want: String = (0..5).map(|i| format!("sentence {i}\tប្រយោគ {i}\n")).collect();
    assert_eq!(bitext, want);
    let rep = report(&dir.path().join("out"));
    assert_eq!(rep["documents"], "1");
    assert_eq!(rep["null_links"], "0");
}

#[test]
fn empty_manifest_gives_empty_outputs() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("m.tsv"), "# nothing here\n").unwrap();
    btx_ok(&["align", "--manifest", &p(&dir, "m.tsv"), "--out", &p(&dir, "out")]);
    assert_eq!(fs::read_to_string(dir.path().join("out/bitext.tsv")).unwrap(), "");
    assert_eq!(fs::read_to_string(dir.path().join("out/alignments.txt")).unwrap(), "");
    let rep = report(&dir.path().join("out"));
    assert_eq!((rep["documents"].as_str(), rep["links"].as_str()), ("0", "0"));
}

#[test]
fn mismatched_entry_is_rejected_by_name() {
    let dir = TempDir::new().unwrap();
    let mut manifest = identity_doc(&dir, "good", 3);
    manifest += &identity_doc(&dir, "bad", 3);
    fs::write(dir.path().join("bad.src"), "only one line\n").unwrap();
    fs::write(dir.path().join("m.tsv"), &manifest).unwrap();
    btx_ok(&["align", "--manifest", &p(&dir, "m.tsv"), "--out", &p(&dir, "out")]);
    let rep = report(&dir.path().join("out"));
    assert_eq!(rep["documents"], "1");
    assert_eq!(rep["documents_rejected"], "1");
    assert!(rep["rejected.bad"].contains("1 lines but 3"));

    let out = btx(&["align", "--strict", "--manifest", &p(&dir, "m.tsv"), "--out", &p(&dir, "strict")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad"));
}

#[test]
fn preprocess_drops_self_identical_pair() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("b.tsv"), "hello world\thello world\n").unwrap();
    btx_ok(&["preprocess", "--bitext", &p(&dir, "b.tsv"), "--out", &p(&dir, "out")]);
    assert_eq!(fs::read_to_string(dir.path().join("out/bitext.tsv")).unwrap(), "");
    let rep = report(&dir.path().join("out"));
    assert_eq!(rep["removed_overlap"], "1");
    assert_eq!(rep["pairs_out"], "0");
}

#[test]
fn orthonormal_pairs_score_one() {
    let dir = TempDir::new().unwrap();
    let lines: String = (0..4).map(|i| format!("s{i}\tt{i}\n")).collect();
    fs::write(dir.path().join("b.tsv"), lines).unwrap();
    save_embeddings(&basis(4), dir.path().join("e.emb")).unwrap();
    let e = p(&dir, "e.emb");
    btx_ok(&["score", "--bitext", &p(&dir, "b.tsv"), "--src-emb", &e, "--tgt-emb", &e, "-k", "1", "--out", &p(&dir, "out")]);
    let scored = fs::read_to_string(dir.path().join("out/scored.tsv")).unwrap();
    assert_eq!(scored.lines().count(), 4);
    for line in scored.lines() {
        let score: f64 = line.split('\t').next().unwrap().parse().unwrap();
        assert!((score - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn heatmap_of_orthonormal_docs_is_identity() {
    let dir = TempDir::new().unwrap();
    save_embeddings(&basis(3), dir.path().join("e.emb")).unwrap();
    let e = p(&dir, "e.emb");
    btx_ok(&["heatmap", "--src-emb", &e, "--tgt-emb", &e, "--out", &p(&dir, "out")]);
    let tsv = fs::read_to_string(dir.path().join("out/heatmap.tsv")).unwrap();
    let m: Vec<Vec<f64>> = tsv
        .lines()
        .map(|l| l.split('\t').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(m.len(), 3);
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(v, if i == j { 1.0 } else { 0.0 });
        }
    }
}

fn strip_wall_time(s: String) -> String {
    s.lines().filter(|l| !l.starts_with("wall_time_ms")).collect::<Vec<_>>().join("\n")
}

#[test]
fn runs_are_reproducible_across_job_counts() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let o = |s: &str| p(&dir, &format!("{run}/{s}"));
        btx_ok(&["gen-synthetic", "--docs", "3", "--noise-docs", "1", "--pairs-per-doc", "40", "--dim", "32", "--seed", "9", "--out", &o("gen")]);
        btx_ok(&["align", "--jobs", jobs, "--manifest", &o("gen/manifest.tsv"), "--out", &o("align")]);
        btx_ok(&["score", "--jobs", jobs, "--bitext", &o("align/bitext.tsv"), "--src-emb", &o("align/bitext.src.emb"), "--tgt-emb", &o("align/bitext.tgt.emb"), "--out", &o("score")]);
        btx_ok(&["train", "--jobs", jobs, "--src-emb", &o("align/bitext.src.emb"), "--tgt-emb", &o("align/bitext.tgt.emb"), "--epochs", "2", "--out-dim", "16", "--out", &o("train")]);
        let mut files = Vec::new();
        for f in ["gen/manifest.tsv", "gen/gold_pairs.tsv", "gen/docs/doc0001.src.emb", "align/alignments.txt", "align/bitext.tsv", "score/scored.tsv", "train/model.bin", "train/loss_trace.tsv"] {
            files.push(fs::read(dir.path().join(run).join(f)).unwrap());
        }
        for r in ["gen", "align", "score", "train"] {
            let text = fs::read_to_string(dir.path().join(run).join(r).join("report.tsv")).unwrap();
            files.push(strip_wall_time(text).into_bytes());
        }
        outputs.push(files);
    }
    assert!(outputs[0] == outputs[1]);
    assert!(outputs[1] == outputs[2]);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = TempDir::new().unwrap();
    let lines: String = (0..6).map(|i| format!("s{i}\tt{i}\n")).collect();
    fs::write(dir.path().join("b.tsv"), lines).unwrap();
    save_embeddings(&basis(6), dir.path().join("e.emb")).unwrap();
    fs::write(dir.path().join("c.conf"), "# margin\nk = 2\nneighborhood = same\n").unwrap();
    let e = p(&dir, "e.emb");
    let base = ["score", "--bitext", &p(&dir, "b.tsv"), "--src-emb", &e, "--tgt-emb", &e];

    btx_ok(&[&base[..], &["--out", &p(&dir, "d")]].concat());
    assert_eq!(report(&dir.path().join("d"))["config.k"], "4");

    btx_ok(&[&base[..], &["--config", &p(&dir, "c.conf"), "--out", &p(&dir, "c")]].concat());
    let rep = report(&dir.path().join("c"));
    assert_eq!((rep["config.k"].as_str(), rep["config.neighborhood"].as_str()), ("2", "same"));

    btx_ok(&[&base[..], &["--config", &p(&dir, "c.conf"), "-k", "3", "--out", &p(&dir, "f")]].concat());
    assert_eq!(report(&dir.path().join("f"))["config.k"], "3");
}

#[test]
fn config_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("b.tsv"), "").unwrap();
    fs::write(dir.path().join("c.conf"), "k = 2\nnot a setting\n").unwrap();
    let out = btx(&["subsample", "--config", &p(&dir, "c.conf"), "--scored", &p(&dir, "b.tsv"), "--out", &p(&dir, "o")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("c.conf:2"));
}

#[test]
fn subsample_defaults_to_standard_budgets() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.tsv"), "0.5\ta b\tx\n").unwrap();
    btx_ok(&["subsample", "--scored", &p(&dir, "s.tsv"), "--out", &p(&dir, "o")]);
    let rep = report(&dir.path().join("o"));
    assert_eq!(rep["config.budgets"], "2000000,3000000,5000000,7000000");
    for b in ["2000000", "3000000", "5000000", "7000000"] {
        assert!(dir.path().join(format!("o/subsample.{b}.src")).exists());
    }
}

#[test]
fn eval_reports_all_three_metrics() {
    let dir = TempDir::new().unwrap();
    let o = |s: &str| p(&dir, s);
    btx_ok(&["gen-synthetic", "--docs", "2", "--pairs-per-doc", "30", "--dim", "32", "--out", &o("gen")]);
    fs::write(dir.path().join("scored.tsv"), "0.9\ta\tb\n0.1\tc\td\n0.5\te\tf\n").unwrap();
    fs::write(dir.path().join("labels.txt"), "1\n0\n1\n").unwrap();
    btx_ok(&[
        "eval",
        "--pred", &o("gen/gold_alignments.txt"),
        "--gold", &o("gen/gold_alignments.txt"),
        "--scores", &o("scored.tsv"),
        "--labels", &o("labels.txt"),
        "--bitext", &o("gen/gold_pairs.tsv"),
        "--gold-pairs", &o("gen/gold_pairs.tsv"),
        "--out", &o("eval"),
    ]);
    let rep = report(&dir.path().join("eval"));
    assert_eq!(rep["alignment.f1"], "1.000000");
    assert_eq!(rep["auc"], "1.000000");
    assert_eq!(rep["clean.fraction"], "1.000000");

    let out = btx(&["eval", "--out", &o("none")]);
    assert!(!out.status.success());
}
