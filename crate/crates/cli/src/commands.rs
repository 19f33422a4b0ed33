use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rmtlab::eigen::{eig_sym_checked, esd_histogram, lanczos_extremes, DenseMatrix, LanczosOptions, Spectrum, SpectrumMethod};
use rmtlab::entries::EntryDistribution;
use rmtlab::experiments::{
    block_tail_oracle, run_absence_sweep, run_bulk_convergence, run_moment_convergence, run_presence_experiment,
    write_moment_csv, DRule, ProfileFamily, SweepConfig, SweepResult,
};
use rmtlab::format::fmt_f64;
use rmtlab::profiles::{ProfileError, RegularGraph, VarianceProfile, DEFAULT_MAX_RESTARTS};
use rmtlab::sampler::sample_matrix;
use rmtlab::semicircle::{ks_distance, write_table};
use rmtlab::walks::{enumerate_walks, moment_gap, RootedGraph};

use crate::config::{key, runtime, switch, CliError, Key, Resolved};

pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    pub run: fn(&Resolved) -> Result<(), CliError>,
}

const PROFILE: Key = key("profile", Some("full"), "full | clique_union | band | random_regular | custom");
const N: Key = key("n", None, "dimension");
const D: Key = key("d", None, "degree");
const W: Key = key("w", None, "band half-width");
const SEED: Key = key("seed", Some("0"), "master seed");
const DIST: Key = key("dist", Some("gaussian"), "gaussian | rademacher | uniform | weibull:<beta>");
const TRIAL: Key = key("trial", Some("0"), "trial index");
const INPUT: Key = key("input", None, "dense CSV input");
const OUT: Key = key("out", None, "output directory");
const THREADS: Key = key("threads", None, "worker threads (results do not depend on it)");

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "profile",
        about: "Build or validate a variance profile",
        keys: &[PROFILE, N, D, W, SEED, INPUT, OUT, THREADS],
        run: cmd_profile,
    },
    CommandSpec {
        name: "sample",
        about: "Draw one realization of X",
        keys: &[PROFILE, N, D, W, SEED, DIST, TRIAL, key("format", Some("dense"), "dense | triplets"), INPUT, OUT, THREADS],
        run: cmd_sample,
    },
    CommandSpec {
        name: "spectrum",
        about: "Eigenvalues of a stored matrix or of a fresh sample",
        keys: &[
            INPUT,
            PROFILE,
            N,
            D,
            W,
            SEED,
            DIST,
            TRIAL,
            key("method", Some("dense"), "dense | lanczos (extremes only)"),
            OUT,
            THREADS,
        ],
        run: cmd_spectrum,
    },
    CommandSpec {
        name: "esd",
        about: "Spectral histogram and Kolmogorov distance to the semicircle",
        keys: &[
            INPUT,
            PROFILE,
            N,
            D,
            W,
            SEED,
            DIST,
            TRIAL,
            key("bins", Some("50"), "histogram bins"),
            key("range", Some("-2,2"), "histogram range a,b"),
            key("points", Some("401"), "rows of the semicircle table"),
            OUT,
            THREADS,
        ],
        run: cmd_esd,
    },
    CommandSpec {
        name: "moments",
        about: "Exact local moment by closed-walk enumeration",
        keys: &[
            key("graph", Some("clique"), "clique | tree | regular"),
            key("d", Some("3"), "degree"),
            key("length", Some("6"), "walk length 2k"),
            key("dist", Some("rademacher"), "entry law"),
            key("depth", None, "tree depth [default: length/2]"),
            key("n", None, "vertices of the random regular graph"),
            SEED,
            key("root", Some("0"), "root of the random regular graph"),
            OUT,
            THREADS,
        ],
        run: cmd_moments,
    },
    CommandSpec {
        name: "gap",
        about: "Clique minus tree local moment",
        keys: &[
            key("d", Some("3"), "degree"),
            key("length", Some("6"), "walk length 2k"),
            key("dist", Some("rademacher"), "entry law"),
            OUT,
            THREADS,
        ],
        run: cmd_gap,
    },
    CommandSpec {
        name: "sweep",
        about: "Monte-Carlo experiment over a list of dimensions",
        keys: &[
            key("mode", Some("bulk"), "bulk | absence | presence | moments"),
            PROFILE,
            DIST,
            key("n", None, "comma-separated increasing dimensions"),
            key("d", Some("log2"), "degree rule: <d> | fixed:<d> | clog:<c> | log2"),
            key("trials", Some("5"), "trials per dimension"),
            key("delta", Some("0.1"), "outlier margin: flag when norm > 2 + delta"),
            SEED,
            key("epsilon", Some("0"), "reference rate for the per-block tail diagnostic"),
            key("lengths", Some("2,4,6"), "moment orders for mode=moments"),
            key("oracle-samples", None, "presence mode: set delta from this many iid blocks"),
            key("oracle-tail", Some("0.001"), "per-block exceedance probability of the oracle quantile"),
            key("oracle-seed", Some("1"), "seed of the oracle blocks"),
            switch("timing", "record wall-clock milliseconds per row"),
            key("out", Some("out"), "output directory"),
            THREADS,
        ],
        run: cmd_sweep,
    },
    CommandSpec {
        name: "verify",
        about: "Run the golden-value checks",
        keys: &[OUT, THREADS],
        run: cmd_verify,
    },
];

fn out_dir(r: &Resolved) -> Option<PathBuf> {
    r.raw("out").map(PathBuf::from)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn dist(r: &Resolved) -> Result<EntryDistribution, CliError> {
    r.require::<EntryDistribution>("dist")
}

fn profile_error(e: ProfileError) -> CliError {
    match e {
        ProfileError::Io(_) | ProfileError::GenerationFailure(_) => runtime(e),
        _ => CliError::Usage(e.to_string()),
    }
}

fn build_profile(r: &Resolved) -> Result<VarianceProfile, CliError> {
    let kind = r.raw("profile").unwrap_or("full");
    let n = || r.require::<usize>("n");
    let p = match kind {
        "full" => VarianceProfile::full_wigner(n()?),
        "clique_union" | "clique" => VarianceProfile::clique_union(n()?, r.require("d")?),
        "band" => VarianceProfile::band(n()?, r.require("w")?),
        "random_regular" | "regular" => VarianceProfile::random_regular(n()?, r.require("d")?, r.require("seed")?),
        "custom" => {
            let path: String = r.require("input")?;
            let file = File::open(&path).map_err(|e| CliError::Runtime(format!("{path}: {e}")))?;
            VarianceProfile::read_dense_csv(BufReader::new(file))
        }
        other => return Err(CliError::Usage(format!("unknown profile `{other}`"))),
    };
    p.map_err(profile_error)
}

fn cmd_profile(r: &Resolved) -> Result<(), CliError> {
    let p = build_profile(r)?;
    let report = p.validate();
    println!("{report}");
    if let Some(out) = out_dir(r) {
        r.log("profile", &out)?;
        p.write_dense_csv(create(&out.join("profile.csv"))?).map_err(runtime)?;
        let json = serde_json::json!({
            "spec": p.spec(),
            "sigma_star": p.sigma_star(),
            "validation": report,
        });
        std::fs::write(out.join("profile.json"), serde_json::to_string_pretty(&json).map_err(runtime)?)
            .map_err(runtime)?;
    }
    if report.passes {
        Ok(())
    } else {
        Err(CliError::Runtime("profile failed validation".into()))
    }
}

fn cmd_sample(r: &Resolved) -> Result<(), CliError> {
    let p = build_profile(r)?;
    let s = sample_matrix(&p, &dist(r)?, r.require("seed")?, r.require("trial")?).map_err(runtime)?;
    let format = r.raw("format").unwrap_or("dense");
    if !matches!(format, "dense" | "triplets") {
        return Err(CliError::Usage(format!("unknown format `{format}`")));
    }
    match out_dir(r) {
        Some(out) => {
            r.log("sample", &out)?;
            if format == "dense" {
                s.matrix.write_csv(create(&out.join("matrix.csv"))?).map_err(runtime)?;
            } else {
                s.write_triplets(create(&out.join("triplets.csv"))?).map_err(runtime)?;
            }
            std::fs::write(out.join("sample.json"), serde_json::to_string_pretty(&s.meta).map_err(runtime)?)
                .map_err(runtime)?;
            println!("n={} written to {}", s.n(), out.display());
        }
        None => {
            let stdout = std::io::stdout();
            if format == "dense" {
                s.matrix.write_csv(stdout.lock()).map_err(runtime)?;
            } else {
                s.write_triplets(stdout.lock()).map_err(runtime)?;
            }
        }
    }
    Ok(())
}

/// Matrix from `--input`, or a fresh sample from the profile flags.
fn matrix(r: &Resolved) -> Result<DenseMatrix, CliError> {
    if let Some(path) = r.raw("input") {
        if r.raw("profile") == Some("custom") {
            return Err(CliError::Usage("--input is the matrix here; custom profiles are not sampled".into()));
        }
        let file = File::open(path).map_err(|e| CliError::Runtime(format!("{path}: {e}")))?;
        return DenseMatrix::read_csv(BufReader::new(file)).map_err(runtime);
    }
    let p = build_profile(r)?;
    Ok(sample_matrix(&p, &dist(r)?, r.require("seed")?, r.require("trial")?).map_err(runtime)?.matrix)
}

fn cmd_spectrum(r: &Resolved) -> Result<(), CliError> {
    let m = matrix(r)?;
    let method = r.raw("method").unwrap_or("dense");
    let spectrum = match method {
        "dense" => eig_sym_checked(&m).map_err(runtime)?,
        "lanczos" => {
            let l = lanczos_extremes(&m, &LanczosOptions::default()).map_err(runtime)?;
            Spectrum { eigenvalues: vec![l.lambda_max, l.lambda_min], residual_bound: None, method: SpectrumMethod::Lanczos }
        }
        other => return Err(CliError::Usage(format!("unknown method `{other}`"))),
    };
    match out_dir(r) {
        Some(out) => {
            r.log("spectrum", &out)?;
            spectrum.write_csv(create(&out.join("spectrum.csv"))?).map_err(runtime)?;
            println!(
                "lambda_max={} lambda_min={} norm={}",
                fmt_f64(spectrum.eigenvalues[0]),
                fmt_f64(spectrum.eigenvalues[spectrum.len() - 1]),
                fmt_f64(spectrum.norm())
            );
        }
        None => spectrum.write_csv(std::io::stdout().lock()).map_err(runtime)?,
    }
    Ok(())
}

fn cmd_esd(r: &Resolved) -> Result<(), CliError> {
    let range: Vec<f64> = r.list("range")?.unwrap_or_default();
    let [a, b] = range[..] else {
        return Err(CliError::Usage("--range needs two values a,b".into()));
    };
    let bins: usize = r.require("bins")?;
    let m = matrix(r)?;
    let spectrum = eig_sym_checked(&m).map_err(runtime)?;
    let hist = esd_histogram(&spectrum, bins, a, b).map_err(|e| CliError::Usage(e.to_string()))?;
    let ks = ks_distance(&spectrum).map_err(runtime)?;
    println!("ks={}", fmt_f64(ks));
    println!("inside_mass={} outside_mass={}", fmt_f64(hist.in_range_mass()), fmt_f64(hist.outside_mass()));
    if let Some(out) = out_dir(r) {
        r.log("esd", &out)?;
        hist.write_csv(create(&out.join("histogram.csv"))?).map_err(runtime)?;
        write_table(create(&out.join("semicircle.csv"))?, a.min(-2.0), b.max(2.0), r.require("points")?)
            .map_err(runtime)?;
        let json = serde_json::json!({
            "n": spectrum.len(),
            "ks": ks,
            "below": hist.below,
            "above": hist.above,
            "lambda_max": spectrum.eigenvalues[0],
            "lambda_min": spectrum.eigenvalues[spectrum.len() - 1],
        });
        std::fs::write(out.join("esd.json"), serde_json::to_string_pretty(&json).map_err(runtime)?).map_err(runtime)?;
    }
    Ok(())
}

fn walk_error(e: rmtlab::walks::WalkError) -> CliError {
    use rmtlab::walks::WalkError::*;
    match e {
        LengthOdd(_) | LengthTooLong { .. } | BudgetExceeded { .. } | InvalidGraph(_) | DimensionTooLarge { .. } => {
            CliError::Usage(e.to_string())
        }
        _ => runtime(e),
    }
}

fn cmd_moments(r: &Resolved) -> Result<(), CliError> {
    let d: usize = r.require("d")?;
    let length: usize = r.require("length")?;
    let graph = match r.raw("graph").unwrap_or("clique") {
        "clique" => RootedGraph::clique(d),
        "tree" => RootedGraph::truncated_tree(d, r.parse("depth")?.unwrap_or(length / 2)),
        "regular" => {
            let g = RegularGraph::generate(r.require("n")?, d, r.require("seed")?, DEFAULT_MAX_RESTARTS)
                .map_err(profile_error)?;
            RootedGraph::from_regular(&g, r.require("root")?)
        }
        other => return Err(CliError::Usage(format!("unknown graph `{other}`"))),
    }
    .map_err(walk_error)?;
    let report = enumerate_walks(&graph, length).map_err(walk_error)?.with_moment(&dist(r)?).map_err(walk_error)?;
    let scale = (graph.normalizing_degree() as u128).pow(length as u32 / 2);
    let value = report.moment_value.as_ref().expect("moment was just computed");
    println!("{value} ({} even walks / {scale})", report.even_walks);
    if let Some(out) = out_dir(r) {
        r.log("moments", &out)?;
        std::fs::write(out.join("moments.json"), serde_json::to_string_pretty(&report.to_json()).map_err(runtime)?)
            .map_err(runtime)?;
    }
    Ok(())
}

fn cmd_gap(r: &Resolved) -> Result<(), CliError> {
    let gap = moment_gap(r.require("d")?, r.require("length")?, &dist(r)?).map_err(walk_error)?;
    println!("{gap}");
    if let Some(out) = out_dir(r) {
        r.log("gap", &out)?;
        std::fs::write(out.join("gap.txt"), format!("{gap}\n")).map_err(runtime)?;
    }
    Ok(())
}

fn experiment_error(e: rmtlab::experiments::ExperimentError) -> CliError {
    match e {
        rmtlab::experiments::ExperimentError::Config(_) => CliError::Usage(e.to_string()),
        rmtlab::experiments::ExperimentError::Profile(p) => profile_error(p),
        _ => runtime(e),
    }
}

fn sweep_config(r: &Resolved) -> Result<SweepConfig, CliError> {
    let family: ProfileFamily = r.require::<String>("profile")?.parse().map_err(experiment_error)?;
    let n_list: Vec<usize> = r.list("n")?.ok_or_else(|| CliError::Usage("missing --n".into()))?;
    let mut c = SweepConfig::new(family, dist(r)?, n_list);
    c.d_rule = r.require::<String>("d")?.parse::<DRule>().map_err(experiment_error)?;
    c.trials = r.require("trials")?;
    c.delta = r.require("delta")?;
    c.master_seed = r.require("seed")?;
    c.epsilon = r.require("epsilon")?;
    c.lengths = r.list("lengths")?.unwrap_or_default();
    c.timing = r.flag("timing")?;
    c.validate().map_err(experiment_error)?;
    Ok(c)
}

fn print_points(result: &SweepResult) {
    for s in result.summaries() {
        print!(
            "n={} d={} trials={} median_ks={} median_norm={} outlier_frequency={}",
            s.n,
            s.d,
            s.trials,
            fmt_f64(s.median_ks),
            fmt_f64(s.median_norm),
            fmt_f64(s.outlier_frequency)
        );
        if let Some(rate) = s.block_exceedance_rate {
            print!(" block_exceedance_rate={}", fmt_f64(rate));
        }
        println!();
    }
}

fn cmd_sweep(r: &Resolved) -> Result<(), CliError> {
    let mut config = sweep_config(r)?;
    let out = out_dir(r).unwrap_or_else(|| PathBuf::from("out"));
    r.log("sweep", &out)?;
    let mode = r.raw("mode").unwrap_or("bulk");
    if mode == "moments" {
        let rows = run_moment_convergence(&config).map_err(experiment_error)?;
        write_moment_csv(&rows, create(&out.join("moments.csv"))?).map_err(runtime)?;
        for row in &rows {
            println!(
                "n={} length={} mean={} std_err={} exact={} catalan={}",
                row.n,
                row.length,
                fmt_f64(row.mean),
                fmt_f64(row.std_err),
                row.exact.as_deref().unwrap_or("-"),
                row.catalan
            );
        }
        return Ok(());
    }
    let mut oracle = None;
    if let Some(samples) = r.parse::<usize>("oracle-samples")? {
        if mode != "presence" {
            return Err(CliError::Usage("--oracle-samples applies to mode=presence".into()));
        }
        let d = config.d_rule.degree(config.n_list[0]);
        let tail = block_tail_oracle(d, &config.dist, samples, r.require("oracle-tail")?, r.require("oracle-seed")?)
            .map_err(experiment_error)?;
        println!("oracle: d={d} quantile={} delta={}", fmt_f64(tail.quantile), fmt_f64(tail.delta));
        config.delta = tail.delta;
        oracle = Some(tail);
    }
    let result = match mode {
        "bulk" => run_bulk_convergence(&config),
        "absence" => run_absence_sweep(&config),
        "presence" => run_presence_experiment(&config),
        other => return Err(CliError::Usage(format!("unknown mode `{other}`"))),
    }
    .map_err(experiment_error)?;
    let mut w = create(&out.join("sweep.csv"))?;
    result.write_csv(&mut w).map_err(runtime)?;
    w.flush().map_err(runtime)?;
    let mut summary = result.summary_json();
    if let Some(t) = oracle {
        summary["oracle"] = serde_json::json!({
            "d": t.d, "samples": t.samples, "tail": t.tail, "quantile": t.quantile, "delta": t.delta,
        });
    }
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).map_err(runtime)?)
        .map_err(runtime)?;
    print_points(&result);
    Ok(())
}

fn cmd_verify(r: &Resolved) -> Result<(), CliError> {
    let checks = crate::verify::run_checks();
    let mut failed = 0;
    let mut text = String::new();
    for c in &checks {
        let line = format!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        println!("{line}");
        text.push_str(&line);
        text.push('\n');
        failed += usize::from(!c.pass);
    }
    if let Some(out) = out_dir(r) {
        r.log("verify", &out)?;
        std::fs::write(out.join("verify.txt"), text).map_err(runtime)?;
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{failed} of {} checks failed", checks.len())))
    }
}
