use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use neuralchain::pinn::WeightFile;
use tempfile::TempDir;

fn nchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nchain"))
        .args(args)
        .env("NCHAIN_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nchain(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(args: &[&str], code: i32) -> String {
    let out = nchain(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const TINY_EIKONAL: &str = r#"
problem = "eikonal"
output_dir = "unused"

[mlp]
layer_sizes = [2, 6, 6, 1]
hidden_activation = "leaky_relu(0.01)"
init_seed = 3

[train]
steps = 40
lr = 1e-2
n_interior = 64
n_condition = 16
seed = 3
"#;

fn tiny_model(dir: &Path) -> PathBuf {
    let cfg = dir.join("tiny.toml");
    fs::write(&cfg, TINY_EIKONAL).unwrap();
    let out = dir.join("run");
    ok(&["train", "--config", s(&cfg), "--out", s(&out)]);
    out
}

#[test]
fn stencil_moments_and_manifest() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("id.json");
    let text = ok(&["build-stencil", "--d", "0", "--u", "0", "--n", "16", "--steps", "2", "--out", s(&f)]);
    assert!(text.contains("W0=1.0 W1=0.0 W2=0.0"));
    let chain = WeightFile::read(&f).unwrap().to_chain(1.0).unwrap();
    assert!(chain.layers.iter().all(|l| l.weights == neuralchain::DenseMatrix::identity(16)));

    let f = dir.path().join("heat.json");
    let text = ok(&["build-stencil", "--d", "0.25", "--u", "0", "--n", "16", "--steps", "1", "--out", s(&f)]);
    assert!(text.contains("W0=1.0 W1=0.0 W2=0.25"));
    let moments = fs::read_to_string(dir.path().join("heat.moments.csv")).unwrap();
    assert!(moments.starts_with("node,W0,W1,W2\n0,1.0,0.0,0.25\n"));

    let f = dir.path().join("unstable.json");
    ok(&["build-stencil", "--d", "0.6", "--u", "0", "--n", "16", "--steps", "1", "--out", s(&f)]);
    assert!(f.exists());
    let manifest = fs::read_to_string(dir.path().join("unstable.manifest.toml")).unwrap();
    assert!(manifest.contains("diffusion_number_ok = false"), "{manifest}");
}

#[test]
fn chain_run_diffuses_gaussian_and_omega_zero_is_identity() {
    let dir = TempDir::new().unwrap();
    let n = 128;
    let f = dir.path().join("heat.json");
    ok(&["build-stencil", "--d", "0.25", "--u", "0", "--n", "128", "--steps", "100", "--out", s(&f)]);
    let sigma0: f64 = 6.0;
    let gauss = |sigma: f64, amp: f64| -> Vec<f64> {
        (0..n).map(|i| amp * (-((i as f64 - 64.0).powi(2)) / (2.0 * sigma * sigma)).exp()).collect()
    };
    let z0 = gauss(sigma0, 1.0);
    let header: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    let row: Vec<String> = z0.iter().map(|v| format!("{v:?}")).collect();
    let inputs = dir.path().join("in.csv");
    fs::write(&inputs, format!("{}\n{}\n", header.join(","), row.join(","))).unwrap();

    let out = dir.path().join("out.csv");
    ok(&["chain-run", "--weights", s(&f), "--inputs", s(&inputs), "--out", s(&out)]);
    let z = &read_csv(&out)[0];
    let sigma = (sigma0 * sigma0 + 2.0 * 0.25 * 100.0).sqrt();
    let exact = gauss(sigma, sigma0 / sigma);
    let err = z.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2, "{err}");

    ok(&["chain-run", "--weights", s(&f), "--inputs", s(&inputs), "--omega", "0", "--out", s(&out)]);
    assert_eq!(read_csv(&out)[0], z0);
}

#[test]
fn pinn_chain_run_matches_predict() {
    let dir = TempDir::new().unwrap();
    let run = tiny_model(dir.path());
    let w = run.join("weights.json");
    for f in ["history.csv", "manifest.toml", "prediction.csv", "report.txt"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let pred = dir.path().join("pred.csv");
    let chain = dir.path().join("chain.csv");
    let trace = dir.path().join("trace.csv");
    ok(&["predict", "--weights", s(&w), "--grid", "101", "--time", "0.3", "--out", s(&pred)]);
    ok(&["chain-run", "--weights", s(&w), "--grid", "101", "--time", "0.3", "--trace", s(&trace), "--out", s(&chain)]);
    let (a, b) = (read_csv(&pred), read_csv(&chain));
    assert_eq!(a.len(), 101);
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra[0], rb[0]);
        assert!((ra[2] - rb[2]).abs() <= 1e-9);
    }
    let trace = fs::read_to_string(trace).unwrap();
    // input (2) + two hidden layers (6 each) + output (1), per grid point
    assert_eq!(trace.lines().count(), 1 + 101 * 15);

    let err = fails_with(&["chain-run", "--weights", s(&w), "--grid", "11", "--omega", "0.5", "--out", s(&chain)], 2);
    assert!(err.contains("square"), "{err}");
}

#[test]
fn training_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, TINY_EIKONAL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["train", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["train", "--config", s(&cfg), "--out", s(&b)]);
    assert_eq!(fs::read(a.join("weights.json")).unwrap(), fs::read(b.join("weights.json")).unwrap());
    assert_eq!(fs::read(a.join("history.csv")).unwrap(), fs::read(b.join("history.csv")).unwrap());
    let manifest = fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(manifest.contains("wall_time_s") && manifest.contains("[seeds]"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, TINY_EIKONAL.replace("steps = 40\n", "")).unwrap();
    let err = fails_with(&["train", "--config", s(&cfg)], 2);
    assert!(err.contains("steps"), "{err}");
    fs::write(&cfg, format!("{TINY_EIKONAL}extra = 1\n")).unwrap();
    let err = fails_with(&["train", "--config", s(&cfg)], 2);
    assert!(err.contains("extra"), "{err}");
    fails_with(&["train", "--config", s(&dir.path().join("missing.toml"))], 2);
}

#[test]
fn reference_snapshots() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["solve-ref", "--problem", "eikonal", "--n", "2041", "--times", "0.3", "--out-dir", s(d)]);
    let rows = read_csv(&d.join("eikonal_t0.3.csv"));
    assert!(rows.iter().any(|r| r[0] == 0.0 && (r[1] - 0.7).abs() < 1e-15));

    ok(&["solve-ref", "--problem", "inviscid-burgers", "--exact", "--n", "101", "--times", "0", "--out-dir", s(d)]);
    let rows = read_csv(&d.join("inviscid-burgers_t0.csv"));
    assert!(rows.iter().all(|r| r[1] == if r[0] < 0.5 { 1.0 } else { 0.0 }));

    let err = fails_with(&["solve-ref", "--problem", "viscous-burgers", "--n", "256", "--dt", "0.01", "--out-dir", s(d)], 3);
    assert!(err.contains("required dt"), "{err}");
}

#[test]
fn compare_records() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["solve-ref", "--problem", "eikonal", "--n", "65", "--times", "0.3", "--out-dir", s(d)]);
    let f = d.join("eikonal_t0.3.csv");
    let text = ok(&["compare", "--u", s(&f), "--ref", s(&f)]);
    assert!(text.contains("L1 = 0e0") && text.contains("Linf = 0e0"), "{text}");
    assert!(text.contains("eval_time = 0.3"));

    let other = d.join("coarse");
    ok(&["solve-ref", "--problem", "eikonal", "--n", "33", "--times", "0.3", "--out-dir", s(&other)]);
    let err = fails_with(&["compare", "--u", s(&other.join("eikonal_t0.3.csv")), "--ref", s(&f)], 2);
    assert!(err.contains("grid mismatch"), "{err}");
}

#[test]
fn weight_analysis() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let big = d.join("big.toml");
    fs::write(&big, TINY_EIKONAL.replace("[2, 6, 6, 1]", "[2, 12, 12, 12, 1]").replace("steps = 40", "steps = 5")).unwrap();
    ok(&["train", "--config", s(&big), "--out", s(&d.join("run"))]);
    let text = ok(&["analyze-weights", "--weights", s(&d.join("run/weights.json")), "--out-dir", s(&d.join("a"))]);
    assert!(text.contains("[gen_normal.layer1]\nn_samples = 144\nmu"), "{text}");
    assert!(text.contains("[gen_normal.pooled_hidden]"));
    assert!(text.contains("[gen_normal.layer0]\nn_samples = 24\nstatus = \"degenerate"));
    let hist = read_csv(&d.join("a/histograms.csv"));
    assert_eq!(hist.iter().map(|r| r[3]).sum::<f64>(), (24 + 144 + 144 + 12) as f64);

    let st = d.join("st.json");
    ok(&["build-stencil", "--d", "0.25", "--u", "0.1", "--n", "32", "--steps", "3", "--out", s(&st)]);
    let text = ok(&["analyze-weights", "--weights", s(&st), "--out-dir", s(&d.join("b"))]);
    assert!(text.contains("degenerate: 4 distinct values"), "{text}");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = neuralchain_cli::RunConfig::load(&path).unwrap();
            cfg.validate().unwrap();
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
}
