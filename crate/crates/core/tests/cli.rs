use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ultrakge::geometry::Signature;
use ultrakge::kgdata::load_triples;
use ultrakge::model::{self, init, Names};
use ultrakge::operators::OperatorKind;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ultrakge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    let o = run(&["synth", "--levels", "3", "--branching", "3", "--seed", "1", "--out", p(&data)]);
    assert!(o.status.success(), "{}", stderr(&o));
    data
}

fn data_flags(data: &Path) -> Vec<String> {
    ["train", "valid", "test"]
        .iter()
        .flat_map(|s| [format!("--{s}"), p(&data.join(format!("{s}.txt"))).to_string()])
        .collect()
}

#[test]
fn stats_on_synthetic_tree() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let mut args = vec!["stats".to_string()];
    args.extend(data_flags(&data));
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("13 entities / 2 relations / 21 triples"), "{out}");
    assert!(out.contains("isa,12,1.000000"), "{out}");
    assert!(out.contains("next,9,0.000000"), "{out}");
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.txt");
    std::fs::write(&f, "a\tr\tb\nc\tr\n").unwrap();
    let o = run(&["stats", "--train", p(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn missing_file_exits_with_two() {
    let o = run(&["stats", "--train", "/nonexistent/train.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn wn18rr_shaped_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (n_ent, n_rel) = (40_943usize, 11usize);
    let splits = [("train", 86_835usize), ("valid", 3_034), ("test", 3_134)];
    // 40943 and 11 are coprime, so (k mod 40943, k mod 11) never repeats
    // below their product
    let mut k = 0usize;
    for (name, count) in splits {
        let mut text = String::new();
        for _ in 0..count {
            let h = k % n_ent;
            let r = k % n_rel;
            let t = (h + 1 + k / (n_ent * n_rel)) % n_ent;
            let _ = writeln!(text, "e{h}\tr{r}\te{t}");
            k += 1;
        }
        std::fs::write(dir.path().join(format!("{name}.txt")), text).unwrap();
    }
    let mut args = vec!["stats".to_string()];
    args.extend(data_flags(dir.path()));
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("41k entities / 11 relations / 93k triples"),
        "{}",
        stdout(&o)
    );
}

fn train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec!["train".into()];
    args.extend(data_flags(data));
    args.extend(["--dim", "8", "--time-dims", "2", "--out", p(out)].map(String::from));
    args.extend(extra.iter().map(|s| s.to_string()));
    bin().args(&args).output().unwrap()
}

#[test]
fn zero_epochs_write_the_initial_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = dir.path().join("m.ukge");
    let o = train(&data, &out, &["--epochs", "0", "--seed", "3", "--margin", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let saved = model::load(&out).unwrap();

    let mut store = load_triples(
        &data.join("train.txt"),
        Some(&data.join("valid.txt")),
        Some(&data.join("test.txt")),
    )
    .unwrap();
    store.augment_inverse().unwrap();
    let sig = Signature::new(6, 2, 1.0).unwrap();
    let expect = init(sig, store.num_entities(), store.num_relations(), 4.0, 3).with_names(Names {
        entities: store.entities.names().to_vec(),
        relations: store.relations.names().to_vec(),
    });
    assert_eq!(saved, expect);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let a = dir.path().join("a.ukge");
    let b = dir.path().join("b.ukge");
    let flags = ["--epochs", "60", "--seed", "9", "--batch", "8", "--deterministic"];
    let oa = train(&data, &a, &flags);
    let ob = train(&data, &b, &flags);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let la = std::fs::read_to_string(dir.path().join("a.ukge.loss.csv")).unwrap();
    let lb = std::fs::read_to_string(dir.path().join("b.ukge.loss.csv")).unwrap();
    assert_eq!(la, lb);
    assert_eq!(la.lines().count(), 61);
    assert!(stdout(&oa).contains("epoch 50 valid MRR"), "{}", stdout(&oa));
}

#[test]
fn invalid_signature_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let out = dir.path().join("m.ukge");
    let mut args: Vec<String> = vec!["train".into()];
    args.extend(data_flags(&data));
    args.extend(["--dim", "8", "--time-dims", "3", "--out", p(&out)].map(String::from));
    let o = bin().args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "epochs = 3\noperator = rot\nmargin = 2\n").unwrap();
    let out = dir.path().join("m.ukge");
    let o = train(&data, &out, &["--config", p(&cfg), "--epochs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = model::load(&out).unwrap();
    assert_eq!(m.kind, OperatorKind::Rot);
    assert_eq!(m.params.delta, 2.0);
    let losses = std::fs::read_to_string(dir.path().join("m.ukge.loss.csv")).unwrap();
    assert_eq!(losses.lines().count(), 3);

    std::fs::write(&cfg, "epochs = 3\nwidth = 2\n").unwrap();
    let o = train(&data, &out, &["--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"));
}

/// Store `a r a`, `b r b`, `b r a` in train and `a r b` in test, and a model
/// where `c` is far from the other two. Every competitor of each query is
/// either filtered or far, so the model is perfect.
fn perfect_toy(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("toy");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(data.join("train.txt"), "a\tr\ta\nb\tr\tb\nb\tr\ta\nc\tr\tc\n").unwrap();
    std::fs::write(data.join("valid.txt"), "").unwrap();
    std::fs::write(data.join("test.txt"), "a\tr\tb\n").unwrap();
    let mut store = load_triples(
        &data.join("train.txt"),
        Some(&data.join("valid.txt")),
        Some(&data.join("test.txt")),
    )
    .unwrap();
    store.augment_inverse().unwrap();
    let sig = Signature::new(2, 2, 1.0).unwrap();
    let mut m = init(sig, 3, store.num_relations(), 6.0, 0)
        .with_operator(OperatorKind::Rot)
        .with_names(Names {
            entities: store.entities.names().to_vec(),
            relations: store.relations.names().to_vec(),
        });
    m.params.theta.fill(0.0);
    m.params.phi.fill(0.0);
    m.params.mu.fill(0.0);
    let c = store.entity_id("c").unwrap();
    m.params.entity_space.fill(0.0);
    m.params.entity_space[c * 2] = 5.0;
    m.params.entity_time.fill(0.0);
    for e in 0..3 {
        m.params.entity_time[e * 2] = 1.0;
    }
    m.params.entity_space[store.entity_id("b").unwrap() * 2 + 1] = 0.1;
    let path = dir.join("toy.ukge");
    model::save(&m, &path).unwrap();
    (data, path)
}

#[test]
fn eval_perfect_toy_model() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model_path) = perfect_toy(dir.path());
    let mut args: Vec<String> = vec!["eval".into(), "--model".into(), p(&model_path).into()];
    args.extend(data_flags(&data));
    args.push("--per-relation".into());
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("2 queries  MRR 1.0000"), "{out}");
    assert!(out.contains("TOTAL,2,1.000000,1.000000,1.000000,1.000000"), "{out}");
}

#[test]
fn eval_refuses_other_dictionaries() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model_path) = perfect_toy(dir.path());
    let data = synth(dir.path());
    let mut args: Vec<String> = vec!["eval".into(), "--model".into(), p(&model_path).into()];
    args.extend(data_flags(&data));
    let o = bin().args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dictionary"), "{}", stderr(&o));
}

#[test]
fn predict_top_tails() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model_path) = perfect_toy(dir.path());
    let m = p(&model_path);
    let o = run(&["predict", "--model", m, "--head", "c", "--rel", "r", "--topk", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("1\tc\t"), "{out}");

    let o = run(&["predict", "--model", m, "--head", "a", "--rel", "r", "--topk", "10"]);
    let names: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(names, ["a", "b", "c"]);

    let o = run(&["predict", "--model", m, "--head", "a", "--rel", "rr"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nearest: r"), "{}", stderr(&o));
    let o = run(&["predict", "--model", m, "--head", "z", "--rel", "r"]);
    assert_eq!(o.status.code(), Some(3));
}
