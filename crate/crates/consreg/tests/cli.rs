use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use consreg::csv_io::{load_csv, load_features};
use consreg::ModelFile;
use consreg_core::selection::fit_model;
use consreg_core::{fit_clr, median_heuristic, FitProblem, Model, ModelKind};
use tempfile::TempDir;

fn consreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consreg"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = consreg(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.path(name), text).unwrap();
        self.p(name)
    }

    /// Small generated dataset.
    fn data(&self) -> String {
        ok(&[
            "gen",
            "--n",
            "60",
            "--d",
            "5",
            "--q",
            "2",
            "--seed",
            "5",
            "--out",
            &self.p("d.csv"),
        ]);
        self.p("d.csv")
    }
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {report}"))
        .parse()
        .unwrap()
}

#[test]
fn gen_writes_header_plus_rows_deterministically() {
    let ws = Workspace::new();
    let (a, b) = (ws.p("a.csv"), ws.p("b.csv"));
    let gen = |out: &str| {
        ok(&[
            "gen", "--n", "136", "--d", "62", "--q", "10", "--seed", "42", "--out", out,
        ])
    };
    let stdout = gen(&a);
    assert!(stdout.contains("n=136 x=62 s=10 y=1"), "{stdout}");
    gen(&b);
    let text = read(&a);
    assert_eq!(text.lines().count(), 137);
    assert_eq!(text, read(&b));
}

#[test]
fn gen_rejects_more_sensitive_columns_than_drivers() {
    let ws = Workspace::new();
    let out = consreg(&[
        "gen",
        "--q",
        "70",
        "--d",
        "62",
        "--mode",
        "subset",
        "--out",
        &ws.p("x.csv"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!ws.path("x.csv").exists());
}

#[test]
fn linear_fit_without_penalty_matches_library_ridge() {
    let ws = Workspace::new();
    let data = ws.data();
    ok(&[
        "fit",
        "--model",
        "clr",
        "--lambda",
        "1.0",
        "--mu",
        "0",
        "--data",
        &data,
        "--out",
        &ws.p("m.json"),
    ]);
    let file = ModelFile::read(ws.path("m.json")).unwrap();
    let ds = load_csv(&data).unwrap();
    let direct = fit_clr(&FitProblem::new(ds.x(), ds.s(), ds.y(), 1.0, 0.0).unwrap()).unwrap();
    let Model::Clr(saved) = file.to_model().unwrap() else {
        panic!("expected a linear model")
    };
    assert_eq!(saved.weights, direct.weights);
}

#[test]
fn kernel_fit_with_zero_lambda_fails_with_diagnostic() {
    let ws = Workspace::new();
    let data = ws.data();
    let out = consreg(&[
        "fit",
        "--model",
        "ckr",
        "--lambda",
        "0",
        "--data",
        &data,
        "--out",
        &ws.p("m.json"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rank-deficient"), "{err}");
}

#[test]
fn median_bandwidth_is_recorded() {
    let ws = Workspace::new();
    let data = ws.data();
    ok(&[
        "fit",
        "--model",
        "ckr",
        "--lambda",
        "0.1",
        "--mu",
        "3",
        "--bandwidth",
        "median",
        "--data",
        &data,
        "--out",
        &ws.p("m.json"),
    ]);
    let file = ModelFile::read(ws.path("m.json")).unwrap();
    let ds = load_csv(&data).unwrap();
    let expected = median_heuristic(ds.x()).unwrap();
    match file.kernel_x {
        Some(consreg::model_file::KernelRecord::Rbf { bandwidth }) => {
            assert_eq!(bandwidth, expected)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn persisted_models_predict_like_in_memory_ones() {
    let ws = Workspace::new();
    let data = ws.data();
    let ds = load_csv(&data).unwrap();
    for (model, kind) in [("clr", ModelKind::Clr), ("ckr", ModelKind::ckr_rbf())] {
        let m = ws.p(&format!("{model}.json"));
        let preds = ws.p(&format!("{model}.csv"));
        let report = ok(&[
            "fit", "--model", model, "--lambda", "0.05", "--mu", "10", "--data", &data, "--out", &m,
        ]);
        ok(&["predict", "--model", &m, "--data", &data, "--out", &preds]);

        let bw = median_heuristic(ds.x()).unwrap();
        let fitted = fit_model(&ds, &kind, 0.05, 10.0, Some(bw)).unwrap();
        let in_memory = fitted.model.predict(ds.x()).unwrap();
        let from_file = load_features(&preds).unwrap();
        let diff = from_file.y().sub(&in_memory).max_abs();
        assert!(diff <= 1e-12, "{model}: {diff}");

        // The reported training RMSE is that of the saved predictions.
        let eval = ok(&["evaluate", "--data", &data, "--predictions", &preds]);
        assert_eq!(value(&eval, "rmse"), value(&report, "rmse_train"));

        // Reading and writing the model file reproduces it byte for byte.
        let text = read(&m);
        assert_eq!(
            ModelFile::from_json(&text).unwrap().to_json().unwrap(),
            text
        );
    }
}

#[test]
fn linear_model_maps_training_means_to_target_means() {
    let ws = Workspace::new();
    let data = ws.data();
    ok(&[
        "fit",
        "--model",
        "clr",
        "--lambda",
        "0.5",
        "--mu",
        "2",
        "--data",
        &data,
        "--out",
        &ws.p("m.json"),
    ]);
    let file = ModelFile::read(ws.path("m.json")).unwrap();
    let means = file.x_means.clone().unwrap();
    let header = file.x_names.join(",");
    let row: Vec<String> = means.iter().map(|v| format!("{v:e}")).collect();
    let input = ws.write("means.csv", &format!("{header}\n{}\n", row.join(",")));
    ok(&[
        "predict",
        "--model",
        &ws.p("m.json"),
        "--data",
        &input,
        "--out",
        &ws.p("p.csv"),
    ]);
    let pred = load_features(ws.p("p.csv")).unwrap();
    assert!((pred.y()[(0, 0)] - file.y_means[0]).abs() < 1e-12);
}

#[test]
fn prediction_input_must_carry_the_model_drivers() {
    let ws = Workspace::new();
    let data = ws.data();
    ok(&[
        "fit",
        "--model",
        "clr",
        "--lambda",
        "1",
        "--data",
        &data,
        "--out",
        &ws.p("m.json"),
    ]);
    let input = ws.write("short.csv", "x_1,x_2\n1,2\n");
    let out = consreg(&[
        "predict",
        "--model",
        &ws.p("m.json"),
        "--data",
        &input,
        "--out",
        &ws.p("p.csv"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x_3"));
}

#[test]
fn evaluate_hand_built_files() {
    let ws = Workspace::new();
    let data = ws.write("d.csv", "x_1,s_1,y_1\n0,1,1\n1,0,2\n2,1,3\n");
    let exact = ws.write("exact.csv", "y_1\n1\n2\n3\n");
    let constant = ws.write("const.csv", "y_1\n5\n5\n5\n");
    let off = ws.write("off.csv", "y_1\n1\n3\n5\n");

    let r = ok(&["evaluate", "--data", &data, "--predictions", &exact]);
    assert_eq!(value(&r, "rmse"), 0.0);
    assert_eq!(value(&r, "n_test"), 3.0);

    let r = ok(&["evaluate", "--data", &data, "--predictions", &constant]);
    assert_eq!(value(&r, "hsic_pred_s"), 0.0);

    // squared errors 0, 1, 4
    let r = ok(&["evaluate", "--data", &data, "--predictions", &off]);
    assert!((value(&r, "rmse") - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

#[test]
fn evaluate_reports_per_output_rmse_for_several_targets() {
    let ws = Workspace::new();
    let data = ws.write("d.csv", "x_1,s_1,y_1,y_2\n0,1,1,0\n1,0,2,0\n2,1,3,0\n");
    let preds = ws.write("p.csv", "y_1,y_2\n1,1\n2,1\n3,1\n");
    let r = ok(&["evaluate", "--data", &data, "--predictions", &preds]);
    assert_eq!(value(&r, "rmse_1"), 0.0);
    assert_eq!(value(&r, "rmse_2"), 1.0);
}

#[test]
fn sweep_writes_one_row_per_mu() {
    let ws = Workspace::new();
    let data = ws.data();
    let curve = ws.p("curve.csv");
    ok(&[
        "sweep",
        "--model",
        "ckr",
        "--mu-grid",
        "0,1,1e3,1e6",
        "--lambda-grid",
        "0.01,1",
        "--data",
        &data,
        "--out",
        &curve,
    ]);
    let text = read(&curve);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("mu,lambda,bandwidth,rmse_train,rmse_test,hsic,penalty")
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn single_point_grid_sweep_has_non_increasing_penalty() {
    let ws = Workspace::new();
    let data = ws.data();
    let curve = ws.p("curve.csv");
    ok(&[
        "sweep",
        "--model",
        "clr",
        "--mu-grid",
        "0,1,10,100,1e4,1e6,1e8",
        "--lambda-grid",
        "0.1",
        "--data",
        &data,
        "--out",
        &curve,
    ]);
    let penalties: Vec<f64> = read(&curve)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert_eq!(penalties.len(), 7);
    for w in penalties.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{penalties:?}");
    }
    // Linear models leave the bandwidth cell empty.
    assert!(read(&curve)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .is_empty());
}

#[test]
fn sweep_errors_name_the_failing_mu() {
    let ws = Workspace::new();
    let data = ws.data();
    let out = consreg(&[
        "sweep",
        "--model",
        "ckr",
        "--mu-grid",
        "0,5",
        "--lambda-grid",
        "1e-13",
        "--data",
        &data,
        "--out",
        &ws.p("c.csv"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mu = 0"), "{err}");
}

#[test]
fn schema_errors_exit_one() {
    let ws = Workspace::new();
    let bad = ws.write("bad.csv", "x_1,y_1\n1,2\n3,oops\n");
    let out = consreg(&[
        "fit",
        "--model",
        "clr",
        "--lambda",
        "1",
        "--data",
        &bad,
        "--out",
        &ws.p("m.json"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("oops"), "{err}");
}
