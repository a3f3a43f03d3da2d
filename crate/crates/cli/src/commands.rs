use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use tcn_soc::data::{
    build_hybrid, fit_normalization, generate_profile, label_by_coulomb_counting, load_csv, simulate_ecm, write_csv, BatterySpec,
    DriveCycle, EcmConfig, NormalizedCycle, SimulationSettings, Truncation, INPUT_FEATURES,
};
use tcn_soc::nn::Tensor3;
use tcn_soc::tcn::{build_model, load_model, receptive_field, save_model, TcnConfig};
use tcn_soc::train::{
    evaluate, format_report_table, measure_latency, run_sweep, synthetic_window, train, write_history_csv, write_report_csv,
    write_trace_csv, EvalMetrics, SweepConfig, TrainConfig,
};

use crate::{BenchArgs, Cli, Command, EvalArgs, FitArgs, ModelArgs, SimulateArgs, SweepArgs, TrainArgs};

pub fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Train(a) => train_cmd(a, cli.seed),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a, cli.seed, cli.jobs as usize),
        Command::Bench(a) => bench(a),
    }
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<ExitCode> {
    if !(a.duration > 0.0) || !(a.dt > 0.0) {
        bail!("--duration and --dt must be positive");
    }
    let profile = generate_profile(a.kind, a.duration, a.dt, seed);
    let settings = SimulationSettings {
        initial_soc: a.initial_soc,
        dt: a.dt,
        soc_floor: a.soc_floor,
        ..SimulationSettings::default()
    };
    let sim = simulate_ecm(&profile, &EcmConfig::default(), &BatterySpec::default(), &settings)?;
    let mut cycle = sim.cycle;
    cycle.name = a.kind.to_string();
    write_csv(&cycle, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    match sim.truncated {
        Some(Truncation::SocBound { step, soc }) => {
            eprintln!("note: stopped at step {step}: SOC {soc:.4} left the allowed range")
        }
        Some(Truncation::VoltageCutoff { step, voltage }) => {
            eprintln!("note: stopped at step {step}: terminal voltage {voltage:.3} V below cutoff")
        }
        None => {}
    }
    println!("rows={}", cycle.len());
    Ok(ExitCode::SUCCESS)
}

/// Loads a CSV, labeling it by coulomb counting when it carries no SOC.
fn load_cycle(path: &Path, initial_soc: f64) -> Result<DriveCycle> {
    let cycle = load_csv(path)?;
    if cycle.records.iter().all(|r| r.soc.is_none()) {
        return Ok(label_by_coulomb_counting(&cycle, &BatterySpec::default(), initial_soc)?);
    }
    Ok(cycle)
}

fn load_cycles(paths: &[std::path::PathBuf], initial_soc: f64) -> Result<Vec<DriveCycle>> {
    paths.iter().map(|p| load_cycle(p, initial_soc)).collect()
}

fn model_config(m: &ModelArgs, stacks: usize, window: usize) -> TcnConfig {
    TcnConfig {
        stacks,
        kernel_size: m.kernel,
        filters: m.filters,
        window,
        p_keep: m.keep_prob,
        ..TcnConfig::default()
    }
}

fn train_config(f: &FitArgs, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: f.lr,
        batch_size: f.batch_size,
        epochs: f.epochs,
        validation_fraction: f.val_frac,
        seed,
        patience: f.patience,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn train_cmd(a: &TrainArgs, seed: u64) -> Result<ExitCode> {
    let cycles = load_cycles(&a.data, a.label.initial_soc)?;
    let params = fit_normalization(&cycles)?;
    let normalized = cycles
        .iter()
        .map(|c| NormalizedCycle::new(c, &params))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = build_hybrid(normalized, a.window, a.fit.stride, seed)?;
    let config = model_config(&a.model, a.stacks, a.window);
    let model = build_model(config, seed)?;
    if a.fit.epochs == 0 {
        eprintln!("warning: --epochs 0 saves the untrained initial weights");
    }
    let (model, history) = train(&model, &dataset, &train_config(&a.fit, seed))?;
    save_model(&model, &a.model_out).with_context(|| format!("writing {}", a.model_out.display()))?;
    if let Some(path) = &a.history_out {
        write_history_csv(&history, create(path)?)?;
    }
    println!("windows={}", dataset.len());
    println!("parameters={}", model.parameter_count());
    println!("receptive_field={}", receptive_field(&config));
    println!("epochs_run={}", history.epochs.len());
    if history.stopped_early {
        println!("stopped_early=true");
    }
    let best = history.best_epoch.and_then(|b| history.epochs.iter().find(|e| e.epoch == b));
    if let Some(e) = best {
        println!("best_epoch={}", e.epoch);
        println!("train_mse={}", e.train_mse);
        match e.val_mse {
            Some(v) => println!("val_mse={v}"),
            None => println!("val_mse=none"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_metrics(m: &EvalMetrics) {
    println!("count={}", m.count);
    println!("mse={}", m.mse);
    println!("mae={}", m.mae);
    println!("accuracy_pct={:.2}", m.accuracy_percent);
    println!("max_error={}", m.max_error);
    println!("out_of_range={}", m.out_of_range);
}

fn eval(a: &EvalArgs) -> Result<ExitCode> {
    let model = load_model(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let cycle = load_cycle(&a.data, a.label.initial_soc)?;
    let result = evaluate(&model, &cycle, a.mode)?;
    println!("mode={}", a.mode);
    print_metrics(&result.metrics);
    if let Some(path) = &a.trace_out {
        write_trace_csv(&result.trace, create(path)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: &SweepArgs, seed: u64, jobs: usize) -> Result<ExitCode> {
    let cycles = load_cycles(&a.data, a.label.initial_soc)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let config = SweepConfig {
        stacks: a.stacks.clone(),
        windows: a.windows.clone(),
        template: model_config(&a.model, 1, 1),
        train: train_config(&a.fit, seed),
        protocol: a.protocol,
        train_stride: a.fit.stride,
        eval_stride: a.eval_stride,
        eval_mode: a.eval_mode,
        latency_warmup: a.warmup,
        latency_iterations: a.iterations,
        out_dir: Some(a.out_dir.clone()),
        jobs,
        master_seed: seed,
    };
    let report = run_sweep(&cycles, &config)?;
    write_report_csv(&report, create(&a.out_dir.join("sweep_report.csv"))?)?;
    let table = format_report_table(&report);
    fs::write(a.out_dir.join("sweep_report.txt"), &table)?;
    print!("{table}");
    for row in &report.rows {
        if let Err(e) = &row.result {
            eprintln!("error: cell S={} L={} failed: {e}", row.stacks, row.window);
        }
    }
    Ok(if report.failed() > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn bench(a: &BenchArgs) -> Result<ExitCode> {
    let model = load_model(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let window = match &a.data {
        Some(path) => {
            let cycle = load_cycle(path, a.label.initial_soc)?;
            let norm = NormalizedCycle::new(&cycle, &model.normalization)?;
            let l = model.config.window;
            if norm.len() < l {
                bail!("{} has {} steps, fewer than the model window {l}", path.display(), norm.len());
            }
            let mut data = vec![0.0; INPUT_FEATURES * l];
            norm.fill_window(0, l, &mut data);
            Tensor3::from_vec(1, INPUT_FEATURES, l, data)?
        }
        None => synthetic_window(&model, model.seed),
    };
    let stats = measure_latency(&model, &window, a.warmup, a.iterations)?;
    let size = fs::metadata(&a.model)?.len();
    println!("parameters={}", model.parameter_count());
    println!("iterations={}", stats.iterations);
    println!("latency_ms_mean={:.6}", stats.mean_ms());
    println!("latency_ms_std={:.6}", stats.std_ms());
    println!("file_size_bytes={size}");
    Ok(ExitCode::SUCCESS)
}
