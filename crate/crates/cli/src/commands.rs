//! Subcommand implementations. Each returns its main result so the commands
//! can be driven from tests as well as from the binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use neuralchain::analysis::{distinct_values, error_norms, fit_generalized_normal, ErrorReport, GenNormalFit, Histogram, MIN_FIT_SAMPLES};
use neuralchain::chain::chain_run;
use neuralchain::pinn::{pinn_predict_batch, train, ProblemKind, ProblemSpec, WeightFile};
use neuralchain::reference::{solve_inviscid_godunov, solve_viscous_burgers_fd, FieldSnapshot, Grid1D};
use neuralchain::stencil::{chain_from_stencil, compute_kernel_moments, stability_flags, Boundary, StabilityFlags, StencilParams};
use serde::Serialize;

use crate::config::{ReferenceConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::eval::{default_viscous_dt, evaluate, evaluation_grid, reference_values};

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", path.display())))
}

fn read_weights(path: &Path) -> CliResult<WeightFile> {
    if !path.exists() {
        return Err(CliError::config(format!("weight file {} not found", path.display())));
    }
    Ok(WeightFile::read(path)?)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

#[derive(Debug, Serialize)]
struct Seeds {
    init: u64,
    train: u64,
}

#[derive(Debug, Serialize)]
struct TrainManifest<'a> {
    command: &'static str,
    version: &'static str,
    seeds: Seeds,
    wall_time_s: f64,
    final_loss: f64,
    report: &'a ErrorReport,
    config: &'a RunConfig,
}

pub struct TrainOutcome {
    pub output_dir: PathBuf,
    pub report: ErrorReport,
}

/// Trains the configured model and writes `weights.json`, `history.csv`,
/// `prediction.csv`, `report.txt` and `manifest.toml`.
pub fn cmd_train(config: &Path, output_dir: Option<&Path>, seed: Option<u64>) -> CliResult<TrainOutcome> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = dir.to_path_buf();
    }
    fs::create_dir_all(&cfg.output_dir)?;
    let start = Instant::now();
    let model = train(&cfg.problem_spec(), &cfg.mlp, &cfg.train)?;
    let wall = start.elapsed().as_secs_f64();
    info!("trained {} in {wall:.1}s", cfg.problem.as_str());
    let dir = &cfg.output_dir;
    WeightFile::from_model(&model)?.write(dir.join("weights.json"))?;

    let mut hist = create(&dir.join("history.csv"))?;
    writeln!(hist, "step,loss")?;
    for (i, l) in model.history.iter().enumerate() {
        writeln!(hist, "{i},{l:?}")?;
    }
    hist.flush()?;

    let ev = evaluate(&model, &cfg.reference, &cfg.evaluation)?;
    let mut pred = create(&dir.join("prediction.csv"))?;
    writeln!(pred, "x,t,u,u_ref")?;
    for i in 0..ev.x.len() {
        writeln!(pred, "{:?},{:?},{:?},{:?}", ev.x[i], ev.t, ev.u[i], ev.u_ref[i])?;
    }
    pred.flush()?;
    fs::write(dir.join("report.txt"), ev.report.to_record())?;

    let manifest = TrainManifest {
        command: "train",
        version: env!("CARGO_PKG_VERSION"),
        seeds: Seeds {
            init: cfg.mlp.init_seed,
            train: cfg.train.seed,
        },
        wall_time_s: wall,
        final_loss: model.final_loss().unwrap_or(f64::NAN),
        report: &ev.report,
        config: &cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::config(format!("manifest: {e}")))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(TrainOutcome {
        output_dir: cfg.output_dir,
        report: ev.report,
    })
}

/// Plain forward pass on `n` uniform x-points at time `t`; CSV `x,t,u`.
pub fn cmd_predict(weights: &Path, n: usize, t: f64, out: &Path) -> CliResult<Vec<f64>> {
    let model = read_weights(weights)?.to_model()?;
    if n < 2 {
        return Err(CliError::config("--grid needs at least 2 points"));
    }
    let xs = evaluation_grid(&model.problem, n);
    let points: Vec<(f64, f64)> = xs.iter().map(|&x| (x, t)).collect();
    let u = pinn_predict_batch(&model, &points)?;
    let mut w = create(out)?;
    writeln!(w, "x,t,u")?;
    for (x, v) in xs.iter().zip(&u) {
        writeln!(w, "{x:?},{t:?},{v:?}")?;
    }
    w.flush()?;
    Ok(u)
}

/// Inputs of `chain-run`: a CSV file with one input vector per row, or a
/// uniform `(x, t)` grid for two-input networks.
pub enum ChainInputs<'a> {
    File(&'a Path),
    Grid { n: usize, t: f64 },
}

fn read_vectors(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| CliError::config(format!("{}: row {}: '{f}' is not a number", path.display(), i + 1))))
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::config(format!("{}: no input rows", path.display())));
    }
    Ok(rows)
}

/// Runs the weight file as a chain; writes outputs (and the optional trace).
pub fn cmd_chain_run(weights: &Path, inputs: ChainInputs<'_>, omega: f64, trace: Option<&Path>, out: &Path) -> CliResult<Vec<Vec<f64>>> {
    let wf = read_weights(weights)?;
    let chain = wf.to_chain(omega)?;
    let dim = chain.input_dim();
    let xs = match inputs {
        ChainInputs::File(p) => read_vectors(p)?,
        ChainInputs::Grid { n, t } => {
            if dim != 2 {
                return Err(CliError::config(format!("--grid needs a network with 2 inputs; this one has {dim}")));
            }
            if n < 2 {
                return Err(CliError::config("--grid needs at least 2 points"));
            }
            let problem = wf.problem.clone().unwrap_or_else(ProblemSpec::viscous_burgers);
            evaluation_grid(&problem, n).into_iter().map(|x| vec![x, t]).collect()
        }
    };
    let mut outputs = Vec::with_capacity(xs.len());
    let mut traces = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        if x.len() != dim {
            return Err(CliError::config(format!("input row {} has {} values; the chain expects {dim}", i + 1, x.len())));
        }
        let (y, tr) = chain_run(x, &chain, trace.is_some())?;
        outputs.push(y);
        traces.extend(tr);
    }
    let mut w = create(out)?;
    let pinn_like = dim == 2 && outputs[0].len() == 1;
    if pinn_like {
        writeln!(w, "x,t,u")?;
    } else {
        let names: Vec<String> = (0..outputs[0].len()).map(|k| format!("y{k}")).collect();
        writeln!(w, "{}", names.join(","))?;
    }
    for (x, y) in xs.iter().zip(&outputs) {
        let vals: Vec<String> = if pinn_like { x.iter().chain(y) } else { [].iter().chain(y) }.map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", vals.join(","))?;
    }
    w.flush()?;
    if let Some(path) = trace {
        let mut w = create(path)?;
        writeln!(w, "layer,neuron,input,value")?;
        for (c, x) in xs.iter().enumerate() {
            for (r, v) in x.iter().enumerate() {
                writeln!(w, "input,{r},{c},{v:?}")?;
            }
        }
        for l in 0..chain.layers.len() {
            for (c, tr) in traces.iter().enumerate() {
                for (r, v) in tr.layers[l].iter().enumerate() {
                    writeln!(w, "layer{},{r},{c},{v:?}", l + 1)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(outputs)
}

pub struct SolveRefArgs {
    pub problem: ProblemKind,
    pub n: usize,
    pub times: Vec<f64>,
    pub dt: Option<f64>,
    pub cfl: f64,
    /// Exact Riemann solution instead of the Godunov scheme.
    pub exact: bool,
}

/// Writes one snapshot CSV per requested time; returns the file paths.
pub fn cmd_solve_ref(args: &SolveRefArgs, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let problem = ProblemSpec::for_kind(args.problem);
    let grid = Grid1D::new(problem.x_range.0, problem.x_range.1, args.n)?;
    let snaps: Vec<FieldSnapshot> = match args.problem {
        ProblemKind::ViscousBurgers => {
            let dt = args.dt.unwrap_or_else(|| default_viscous_dt(&grid, problem.nu));
            let p = problem.clone();
            solve_viscous_burgers_fd(|x| p.time_condition(x), problem.nu, &grid, dt, &args.times)?
        }
        ProblemKind::InviscidBurgers if !args.exact => {
            let p = problem.clone();
            solve_inviscid_godunov(|x| p.time_condition(x), &grid, args.cfl, &args.times)?
        }
        _ => {
            let cfg = ReferenceConfig {
                n: args.n,
                dt: None,
            };
            args.times
                .iter()
                .map(|&t| {
                    Ok(FieldSnapshot {
                        t,
                        values: reference_values(&problem, &cfg, &grid.points(), t)?,
                    })
                })
                .collect::<CliResult<_>>()?
        }
    };
    fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for s in &snaps {
        let path = out_dir.join(format!("{}_t{}.csv", args.problem.as_str(), s.t));
        let mut w = create(&path)?;
        s.write_csv(&grid, &mut w)?;
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// `(x, u, t)` columns of a prediction or snapshot CSV.
fn read_profile(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>, Option<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut time = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("t=").and_then(|v| v.trim().parse().ok()));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (xi, ui) = match (col("x"), col("u")) {
        (Some(x), Some(u)) => (x, u),
        _ => return Err(CliError::config(format!("{}: needs 'x' and 'u' columns", path.display()))),
    };
    let ti = col("t");
    let (mut xs, mut us) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> CliResult<f64> {
            rec.get(k)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| CliError::config(format!("{}: bad number in row {}", path.display(), i + 1)))
        };
        xs.push(num(xi)?);
        us.push(num(ui)?);
        if let (Some(k), None) = (ti, time) {
            time = Some(num(k)?);
        }
    }
    Ok((xs, us, time))
}

/// Error norms of `u` against `reference`; both files must share a grid.
pub fn cmd_compare(u: &Path, reference: &Path) -> CliResult<ErrorReport> {
    let (xu, vu, tu) = read_profile(u)?;
    let (xr, vr, tr) = read_profile(reference)?;
    if xu.len() != xr.len() {
        return Err(CliError::config(format!("grid mismatch: {} points vs {} points", xu.len(), xr.len())));
    }
    if let Some(i) = (0..xu.len()).find(|&i| (xu[i] - xr[i]).abs() > 1e-9 * (1.0 + xr[i].abs())) {
        return Err(CliError::config(format!("grid mismatch at row {}: x = {} vs x = {}", i + 1, xu[i], xr[i])));
    }
    if let (Some(a), Some(b)) = (tu, tr) {
        if (a - b).abs() > 1e-12 {
            return Err(CliError::config(format!("time mismatch: t = {a} vs t = {b}")));
        }
    }
    let report = error_norms(&vu, &vr)?;
    Ok(match tu.or(tr) {
        Some(t) => report.at_time(t),
        None => report,
    })
}

/// Fit of one weight set, or the reason it was refused.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerFit {
    Fit(GenNormalFit),
    Degenerate { distinct: usize, n: usize },
}

impl LayerFit {
    fn of(samples: &[f64]) -> CliResult<Self> {
        let distinct = distinct_values(samples);
        if distinct < MIN_FIT_SAMPLES {
            return Ok(LayerFit::Degenerate {
                distinct,
                n: samples.len(),
            });
        }
        Ok(LayerFit::Fit(fit_generalized_normal(samples)?))
    }

    fn record(&self, label: &str) -> String {
        match self {
            LayerFit::Fit(f) => f.to_record(label),
            LayerFit::Degenerate { distinct, n } => format!(
                "[gen_normal.{label}]\nn_samples = {n}\nstatus = \"degenerate: {distinct} distinct values, fit refused\"\n"
            ),
        }
    }
}

pub struct WeightAnalysis {
    pub layers: Vec<LayerFit>,
    /// Pooled over hidden-to-hidden layers; `None` if there are none.
    pub pooled_hidden: Option<LayerFit>,
    pub histogram_counts: usize,
}

/// Per-layer and pooled generalized-normal fits plus histograms.
pub fn cmd_analyze_weights(weights: &Path, bins: usize, out_dir: &Path) -> CliResult<WeightAnalysis> {
    let wf = read_weights(weights)?;
    fs::create_dir_all(out_dir)?;
    let mut records = String::new();
    let mut layers = Vec::new();
    let mut hist = create(&out_dir.join("histograms.csv"))?;
    let mut histogram_counts = 0;
    for (l, rec) in wf.layers.iter().enumerate() {
        let fit = LayerFit::of(&rec.weights)?;
        records += &fit.record(&format!("layer{l}"));
        layers.push(fit);
        let h = Histogram::new(&rec.weights, bins)?;
        histogram_counts += h.total();
        h.write_csv(l, &mut hist, l == 0)?;
    }
    hist.flush()?;
    let n = wf.layers.len();
    let pooled_hidden = if n > 2 {
        let pooled: Vec<f64> = wf.layers[1..n - 1].iter().flat_map(|r| r.weights.iter().copied()).collect();
        let fit = LayerFit::of(&pooled)?;
        records += &fit.record("pooled_hidden");
        Some(fit)
    } else {
        None
    };
    fs::write(out_dir.join("fits.txt"), &records)?;
    print!("{records}");
    Ok(WeightAnalysis {
        layers,
        pooled_hidden,
        histogram_counts,
    })
}

#[derive(Debug, Serialize)]
struct StencilManifest {
    command: &'static str,
    version: &'static str,
    diffusion: f64,
    advection: f64,
    n: usize,
    steps: usize,
    boundary: Boundary,
    stability: StabilityFlags,
    /// `(W0, W1, W2)` at an interior node.
    interior_moments: Vec<f64>,
}

pub struct StencilOutcome {
    pub stability: StabilityFlags,
    pub interior_moments: Vec<f64>,
}

/// Writes the stencil chain to `out`, plus `<stem>.moments.csv` and
/// `<stem>.manifest.toml` next to it.
pub fn cmd_build_stencil(params: &StencilParams, steps: usize, out: &Path) -> CliResult<StencilOutcome> {
    let chain = chain_from_stencil(params, steps)?;
    let stability = stability_flags(params);
    let wf = WeightFile::from_chain(&chain);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    wf.write(out)?;
    let moments = compute_kernel_moments(&chain.layers[0].weights, 2, 1.0, params.boundary)?;
    let mut w = create(&sibling(out, ".moments.csv"))?;
    moments.write_csv(&mut w)?;
    w.flush()?;
    let interior_moments = moments.at(params.n / 2);
    let manifest = StencilManifest {
        command: "build-stencil",
        version: env!("CARGO_PKG_VERSION"),
        diffusion: params.diffusion,
        advection: params.advection,
        n: params.n,
        steps,
        boundary: params.boundary,
        stability,
        interior_moments: interior_moments.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::config(format!("manifest: {e}")))?;
    fs::write(sibling(out, ".manifest.toml"), text)?;
    if !stability.positivity || !stability.diffusion_number_ok {
        log::warn!("stencil is not stable: {stability:?}");
    }
    Ok(StencilOutcome {
        stability,
        interior_moments,
    })
}
