mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use common::{Task, TaskShape};
use prepsense::cli::run;
use prepsense::corpus::{read_conllu, read_sense_annotations, read_spans, write_conllu, PrepInstance, Sentence};
use prepsense::models::{Ensemble, SenseModel};
use prepsense::training::{evaluate, UNKNOWN_PREP};
use prepsense::Real;
use tempfile::TempDir;

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["prepsense"];
    argv.extend_from_slice(args);
    run(argv)
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    /// Sentences, train/test annotations and a config for `variant`/`mode`.
    fn new(variant: &str, mode: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut task = Task::new(TaskShape { fillers: 12, cues: 8 }, 21);
        let train = task.instances(40);
        let test = task.instances(20);
        let mut sentences = common::sentences_of(&train);
        sentences.extend(common::sentences_of(&test));
        let ws = Self { dir };
        let mut conllu = Vec::new();
        write_conllu(&mut conllu, &sentences).unwrap();
        std::fs::write(ws.path("sentences.conllu"), conllu).unwrap();
        ws.write("train.tsv", &common::annotation_rows(&train));
        ws.write("test.tsv", &common::annotation_rows(&test));
        ws.write(
            "config.toml",
            &format!(
                "variant = \"{variant}\"\nmode = \"{mode}\"\n\
                 [training]\nepochs = 2\n\
                 [dims]\nword = 4\nlstm_hidden = 4\nsense_hidden = 8\nprep = 3\nlemma = 3\npos = 2\ndeprel = 2\n\
                 [data]\nsentences = \"sentences.conllu\"\n"
            ),
        );
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, body: &str) {
        std::fs::write(self.path(name), body).unwrap();
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    fn train(&self, out: &str, seed: Option<u64>) -> i32 {
        let config = match seed {
            Some(s) => {
                let name = format!("config{s}.toml");
                self.write(&name, &format!("seed = {s}\n{}", self.read("config.toml")));
                self.p(&name)
            }
            None => self.p("config.toml"),
        };
        cli(&[
            "train",
            "--train",
            &self.p("train.tsv"),
            "--config",
            &config,
            "--out-model",
            &self.p(out),
        ])
    }

    fn sentences(&self) -> Vec<Arc<Sentence>> {
        read_conllu(self.path("sentences.conllu"))
            .unwrap()
            .into_iter()
            .map(Arc::new)
            .collect()
    }

    fn test_set(&self, model: &SenseModel<Real>) -> Vec<PrepInstance> {
        read_sense_annotations(self.path("test.tsv"), &self.sentences(), &model.inventory).unwrap()
    }
}

fn exists(p: &Path) -> bool {
    p.try_exists().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(cli(&["--help"]), 0);
    assert_eq!(cli(&["--version"]), 0);
    assert_eq!(cli(&["train", "--help"]), 0);
}

#[test]
fn argument_errors_exit_one() {
    assert_eq!(cli(&[]), 1);
    assert_eq!(cli(&["frobnicate"]), 1);
    assert_eq!(cli(&["train", "--out-model", "x"]), 1);
    assert_eq!(
        cli(&["eval", "--test", "t", "--sentences", "s", "--report-dir", "r"]),
        1
    );
}

#[test]
fn bad_config_exits_one() {
    let ws = Workspace::new("base", "single-inventory");
    ws.write("bad.toml", "sead = 3\n");
    let code = cli(&[
        "train",
        "--train",
        &ws.p("train.tsv"),
        "--config",
        &ws.p("bad.toml"),
        "--out-model",
        &ws.p("m"),
    ]);
    assert_eq!(code, 1);
    assert!(!exists(&ws.path("m")));
}

#[test]
fn pretrained_variant_without_encoder_exits_one() {
    let ws = Workspace::new("multilingual", "single-inventory");
    assert_eq!(ws.train("m.bin", None), 1);
    assert!(!exists(&ws.path("m.bin")));
}

#[test]
fn missing_and_malformed_inputs_exit_two() {
    let ws = Workspace::new("base", "single-inventory");
    ws.write("bad.tsv", "nosuchsentence\t1\t1\tTemporal\n");
    let bad = cli(&[
        "train",
        "--train",
        &ws.p("bad.tsv"),
        "--config",
        &ws.p("config.toml"),
        "--out-model",
        &ws.p("m"),
    ]);
    assert_eq!(bad, 2);
    let missing = cli(&[
        "train",
        "--train",
        &ws.p("none.tsv"),
        "--config",
        &ws.p("config.toml"),
        "--out-model",
        &ws.p("m"),
    ]);
    assert_eq!(missing, 2);
    assert!(!exists(&ws.path("m")));

    ws.write("garbage.bin", "not a model");
    let code = cli(&[
        "eval",
        "--model",
        &ws.p("garbage.bin"),
        "--test",
        &ws.p("test.tsv"),
        "--sentences",
        &ws.p("sentences.conllu"),
        "--report-dir",
        &ws.p("reports"),
    ]);
    assert_eq!(code, 2);
    assert!(!exists(&ws.path("reports/summary.txt")));
}

#[test]
fn extract_errors() {
    let ws = Workspace::new("base", "single-inventory");
    ws.write("en", "we met in May\n");
    ws.write("fr", "on s'est vu en mai\n");
    ws.write("align", "0-0 1-2 2-3 3-4\n");
    ws.write("preps", "in\n");
    ws.write("fr.preps", "en\n");
    let base = |lang: &'static str, align: String| {
        let args = [
            "extract",
            "--en",
            &ws.p("en"),
            "--foreign",
            &ws.p("fr"),
            "--align",
            &align,
            "--lang",
            lang,
            "--preps",
            &ws.p("preps"),
            "--inventory",
            &format!("fr={}", ws.p("fr.preps")),
            "--out",
            &ws.p("out.tsv"),
        ]
        .map(str::to_string);
        cli(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(base("de", ws.p("align")), 1);
    ws.write("bad.align", "0-0 9-9\n");
    assert_eq!(base("fr", ws.p("bad.align")), 2);
    assert!(!exists(&ws.path("out.tsv")));
    assert_eq!(base("fr", ws.p("align")), 0);
    assert_eq!(ws.read("out.tsv"), "we met in May\t3\t3\tfr\ten\n");
    assert_eq!(
        ws.read("out.tsv.stats.csv"),
        "english_prep,foreign,candidates,kept\nin,en,1,true\n"
    );
}

#[test]
fn empty_pretraining_set_exits_two() {
    let ws = Workspace::new("base", "single-inventory");
    ws.write("empty.tsv", "");
    let code = cli(&[
        "pretrain",
        "--examples",
        &ws.p("empty.tsv"),
        "--out-model",
        &ws.p("pre.bin"),
    ]);
    assert_eq!(code, 2);
    assert!(!exists(&ws.path("pre.bin")));
}

#[test]
fn report_csvs_reconstruct_the_summary() {
    let ws = Workspace::new("context", "unified");
    assert_eq!(ws.train("m.bin", None), 0);
    let code = cli(&[
        "eval",
        "--model",
        &ws.p("m.bin"),
        "--test",
        &ws.p("test.tsv"),
        "--sentences",
        &ws.p("sentences.conllu"),
        "--report-dir",
        &ws.p("reports"),
    ]);
    assert_eq!(code, 0);
    let summary = ws.read("reports/summary.txt");
    let field = |k: &str| -> String {
        summary
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{k}=")))
            .unwrap()
            .to_string()
    };
    let total: usize = field("total").parse().unwrap();
    let correct: usize = field("correct").parse().unwrap();
    assert_eq!(total, 20);
    assert_eq!(field("models"), "1");

    for name in ["per_preposition.csv", "per_sense.csv"] {
        let body = ws.read(&format!("reports/{name}"));
        let mut lines = body.lines();
        assert_eq!(lines.next(), Some("key,correct,incorrect,total"));
        let (mut c, mut t) = (0, 0);
        for row in lines {
            let cols: Vec<usize> = row.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
            assert_eq!(cols[0] + cols[1], cols[2]);
            c += cols[0];
            t += cols[2];
        }
        assert_eq!((c, t), (correct, total), "{name}");
        assert_eq!(format!("{:.6}", c as f64 / t as f64), field("accuracy"));
    }
    let confusion = ws.read("reports/confusion.csv");
    let counted: usize = confusion
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counted, total);
}

#[test]
fn ensemble_eval_matches_library_vote() {
    let ws = Workspace::new("context", "single-inventory");
    let mut models = Vec::new();
    for seed in 1..=5 {
        let name = format!("m{seed}.bin");
        assert_eq!(ws.train(&name, Some(seed)), 0);
        models.push(ws.p(&name));
    }
    let mut args = vec!["eval"];
    for m in &models {
        args.extend(["--model", m]);
    }
    let (test, sents, reports) = (ws.p("test.tsv"), ws.p("sentences.conllu"), ws.p("reports"));
    args.extend(["--test", &test, "--sentences", &sents, "--report-dir", &reports]);
    assert_eq!(cli(&args), 0);

    let loaded: Vec<SenseModel<Real>> = models.iter().map(|m| SenseModel::load(m).unwrap()).collect();
    let data = ws.test_set(&loaded[0]);
    let report = evaluate(&Ensemble::new(loaded).unwrap(), &data).unwrap();
    let summary = ws.read("reports/summary.txt");
    assert!(summary.contains("models=5\n"));
    assert!(summary.contains(&format!("correct={}\n", report.overall.correct)));
    assert!(summary.contains(&format!("accuracy={:.6}\n", report.accuracy())));
}

#[test]
fn predict_round_trips_with_train() {
    let ws = Workspace::new("base", "single-inventory");
    assert_eq!(ws.train("m.bin", None), 0);
    let spans: String = ws
        .read("test.tsv")
        .lines()
        .map(|l| l.rsplit_once('\t').unwrap().0.to_string() + "\n")
        .collect();
    ws.write("spans.tsv", &spans);
    let code = cli(&[
        "predict",
        "--model",
        &ws.p("m.bin"),
        "--input-conllu",
        &ws.p("sentences.conllu"),
        "--spans",
        &ws.p("spans.tsv"),
        "--out",
        &ws.p("pred.tsv"),
    ]);
    assert_eq!(code, 0);
    let model = SenseModel::<Real>::load(ws.path("m.bin")).unwrap();
    let instances = read_spans(ws.path("spans.tsv"), &ws.sentences()).unwrap();
    let out = ws.read("pred.tsv");
    assert_eq!(out.lines().count(), instances.len());
    for (line, inst) in out.lines().zip(&instances) {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols[0], inst.sentence.id);
        assert_eq!(cols[3], inst.preposition());
        assert_eq!(cols[4], model.predict(inst).unwrap());
    }
}

#[test]
fn unknown_preposition_is_flagged_and_empty_spans_give_empty_output() {
    let ws = Workspace::new("base", "disjoint");
    assert_eq!(ws.train("m.bin", None), 0);
    // A sentence whose span covers a word the model has no head for.
    let mut sentences = ws.sentences();
    let mut odd = (*sentences[0]).clone();
    odd.id = "odd".into();
    odd.tokens[0].form = "beneath".into();
    sentences.push(Arc::new(odd));
    let plain: Vec<Sentence> = sentences.iter().map(|s| (**s).clone()).collect();
    let mut conllu = Vec::new();
    write_conllu(&mut conllu, &plain).unwrap();
    std::fs::write(ws.path("more.conllu"), conllu).unwrap();

    ws.write("spans.tsv", "odd\t1\t1\n");
    let predict = |spans: &str, out: &str| {
        cli(&[
            "predict",
            "--model",
            &ws.p("m.bin"),
            "--input-conllu",
            &ws.p("more.conllu"),
            "--spans",
            &ws.p(spans),
            "--out",
            &ws.p(out),
        ])
    };
    assert_eq!(predict("spans.tsv", "pred.tsv"), 0);
    assert_eq!(ws.read("pred.tsv"), format!("odd\t1\t1\tbeneath\t{UNKNOWN_PREP}\n"));

    ws.write("empty.tsv", "");
    assert_eq!(predict("empty.tsv", "empty.out"), 0);
    assert_eq!(ws.read("empty.out"), "");
}

#[test]
fn training_twice_gives_identical_bytes() {
    let ws = Workspace::new("context", "disjoint");
    assert_eq!(ws.train("a.bin", None), 0);
    assert_eq!(ws.train("b.bin", None), 0);
    assert_eq!(
        std::fs::read(ws.path("a.bin")).unwrap(),
        std::fs::read(ws.path("b.bin")).unwrap()
    );
}
