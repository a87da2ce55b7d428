//! Command dispatch and output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use entrobound::bounds::{optimize_m, total_bound, BoundParams, ConfidenceBound};
use entrobound::densities::affine_rescale;
use entrobound::estimators::{
    self, coverage, discrete_mi_demo, estimate_entropy_certified, estimate_mi_certified,
    CoverageConfig, DemoConfig, DemoReport, DiscreteMiConfig, ExternalEstimator,
};
use entrobound::oracle::{lemma_tolerance, verify_lemmas};
use entrobound::rng::split;
use entrobound::{BoxSupport, DensityModel, Samples};

use crate::config::{Command, ExperimentConfig, Options};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest, Format};

/// Tabular result plus summary values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Output {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(&'static str, String)>,
}

impl Output {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary_text(&self) -> String {
        self.summary
            .iter()
            .fold(String::new(), |mut s, (k, v)| {
                let _ = writeln!(s, "{k}={v}");
                s
            })
    }
}

/// 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn need<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
    value
        .clone()
        .ok_or_else(|| CliError::Config(format!("missing --{flag}")))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `tent`, `uniform`, `trapezoid:<width>` or `scaled-tent:<side>`.
pub fn parse_density(spec: &str, dim: usize) -> CliResult<DensityModel> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let number = |a: Option<&str>| -> CliResult<f64> {
        a.ok_or_else(|| config_err(format!("density {name} needs a parameter, e.g. {name}:0.5")))?
            .parse()
            .map_err(|_| config_err(format!("invalid parameter in density {spec:?}")))
    };
    let model = match name {
        "tent" => DensityModel::tent(dim)?,
        "uniform" => DensityModel::uniform(dim)?,
        "trapezoid" if dim == 1 => DensityModel::trapezoid(number(arg)?)?,
        "trapezoid" => return Err(config_err("trapezoid is one-dimensional")),
        "scaled-tent" => {
            let side = number(arg)?;
            if side.is_nan() || side <= 0.0 {
                return Err(config_err("scaled-tent side must be positive"));
            }
            DensityModel::scaled_tent(dim, side.ln())?
        }
        _ => return Err(config_err(format!("unknown density {spec:?}"))),
    };
    Ok(model)
}

fn check_delta(delta: f64) -> CliResult<f64> {
    if delta > 0.0 && delta < 1.0 {
        Ok(delta)
    } else {
        Err(config_err(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_lipschitz(l: f64) -> CliResult<f64> {
    if l > 0.0 && l.is_finite() {
        Ok(l)
    } else {
        Err(config_err(format!("L must be positive and finite, got {l}")))
    }
}

fn sample_count(n: u64) -> CliResult<usize> {
    if n < 1 {
        return Err(config_err("N must be >= 1"));
    }
    usize::try_from(n).map_err(|_| config_err(format!("N = {n} is too large")))
}

fn model_lipschitz(o: &Options, model: &DensityModel) -> CliResult<f64> {
    match o.l {
        Some(l) => check_lipschitz(l),
        None => model
            .lipschitz()
            .ok_or_else(|| config_err("this density has no Lipschitz constant; pass --l")),
    }
}

fn input_box(o: &Options, dim: usize) -> CliResult<BoxSupport<f64>> {
    let lo = o.lo.unwrap_or(0.0);
    let hi = o.hi.unwrap_or(1.0);
    BoxSupport::new(vec![lo; dim], vec![hi; dim]).map_err(|e| config_err(e.to_string()))
}

fn read_input(o: &Options, path: &Path) -> CliResult<Samples<f64>> {
    let format = o.format.unwrap_or_else(|| Format::from_extension(path));
    ingest(path, format, o.k)
}

fn bound_row(p: &BoundParams<f64>, b: &ConfidenceBound<f64>) -> Vec<String> {
    vec![
        p.dim.to_string(),
        fmt(p.lipschitz),
        p.steps.to_string(),
        p.samples.to_string(),
        fmt(p.delta),
        fmt(b.quant_bias),
        fmt(b.stat_dev),
        fmt(b.emp_bias),
        fmt(b.total),
    ]
}

const BOUND_HEADER: [&str; 9] = [
    "K",
    "L",
    "M",
    "N",
    "delta",
    "quant_bias",
    "stat_dev",
    "emp_bias",
    "total_bound",
];

fn bound_summary(out: &mut Output, steps: u64, b: &ConfidenceBound<f64>) {
    out.summary.extend([
        ("M", steps.to_string()),
        ("quant_bias", fmt(b.quant_bias)),
        ("stat_dev", fmt(b.stat_dev)),
        ("emp_bias", fmt(b.emp_bias)),
        ("total", fmt(b.total)),
    ]);
}

fn cmd_bound(o: &Options) -> CliResult<Output> {
    let params = BoundParams::new(
        need(&o.k, "k")?,
        check_lipschitz(need(&o.l, "l")?)?,
        need(&o.m, "m")?,
        need(&o.n, "n")?,
        check_delta(need(&o.delta, "delta")?)?,
    )?;
    let b = total_bound(&params)?;
    let mut out = Output {
        header: BOUND_HEADER.to_vec(),
        rows: vec![bound_row(&params, &b)],
        ..Output::default()
    };
    bound_summary(&mut out, params.steps, &b);
    Ok(out)
}

fn cmd_optimize_m(o: &Options) -> CliResult<Output> {
    let k = need(&o.k, "k")?;
    let l = check_lipschitz(need(&o.l, "l")?)?;
    let n = need(&o.n, "n")?;
    let delta = check_delta(need(&o.delta, "delta")?)?;
    let (m, b) = optimize_m(k, l, n, delta)?;
    let params = BoundParams::new(k, l, m, n, delta)?;
    let mut out = Output {
        header: BOUND_HEADER.to_vec(),
        rows: vec![bound_row(&params, &b)],
        ..Output::default()
    };
    bound_summary(&mut out, m, &b);
    Ok(out)
}

/// Samples, the box they live in, the Lipschitz constant on that box, and
/// the truth when known.
struct Source {
    samples: Samples<f64>,
    support: BoxSupport<f64>,
    lipschitz: f64,
    truth: Option<f64>,
}

fn source(o: &Options) -> CliResult<Source> {
    match (&o.density, &o.input) {
        (Some(_), Some(_)) => Err(config_err("pass either --density or --input, not both")),
        (None, None) => Err(config_err("missing --density or --input")),
        (Some(spec), None) => {
            let model = parse_density(spec, o.k.unwrap_or(1))?;
            let lipschitz = model_lipschitz(o, &model)?;
            let n = sample_count(need(&o.n, "n")?)?;
            Ok(Source {
                samples: model.sample(n, o.seed.unwrap_or(0))?,
                support: model.support(),
                lipschitz,
                truth: model.analytic_entropy(),
            })
        }
        (None, Some(path)) => {
            let lipschitz = check_lipschitz(need(&o.l, "l")?)?;
            let samples = read_input(o, path)?;
            Ok(Source {
                support: input_box(o, samples.dim())?,
                samples,
                lipschitz,
                truth: None,
            })
        }
    }
}

fn cmd_estimate(o: &Options) -> CliResult<Output> {
    let delta = check_delta(need(&o.delta, "delta")?)?;
    let src = source(o)?;
    let r = affine_rescale(&src.samples, &src.support, src.lipschitz)?;
    let mut report = estimate_entropy_certified(&r.samples, r.lipschitz, delta, o.m)?;
    report.estimate += r.entropy_offset;
    let b = report.bound;
    let mut out = Output {
        header: vec!["estimate", "total_bound", "quant_bias", "stat_dev", "emp_bias", "M", "N"],
        rows: vec![vec![
            fmt(report.estimate),
            fmt(b.total),
            fmt(b.quant_bias),
            fmt(b.stat_dev),
            fmt(b.emp_bias),
            report.params.steps.to_string(),
            report.params.samples.to_string(),
        ]],
        ..Output::default()
    };
    out.summary.push(("estimate", fmt(report.estimate)));
    bound_summary(&mut out, report.params.steps, &b);
    out.summary.push(("N", report.params.samples.to_string()));
    if let Some(t) = src.truth {
        out.summary.push(("truth", fmt(t)));
        out.summary.push(("covered", report.covers(t).to_string()));
    }
    Ok(out)
}

fn cmd_mi_estimate(o: &Options) -> CliResult<Output> {
    let delta = check_delta(need(&o.delta, "delta")?)?;
    let (x, y, x_box, y_box, l) = match (&o.density, &o.input) {
        (Some(_), Some(_)) => return Err(config_err("pass either --density or --input, not both")),
        (None, None) => return Err(config_err("missing --density or --input")),
        (Some(spec), None) => {
            let model = parse_density(spec, o.k.unwrap_or(1))?;
            let joint = parse_density(spec, 2 * model.dim())?;
            let l = model_lipschitz(o, &joint)?;
            let n = sample_count(need(&o.n, "n")?)?;
            let seed = o.seed.unwrap_or(0);
            let x = model.sample(n, split(seed, 0))?;
            let y = model.sample(n, split(seed, 1))?;
            (x, y, model.support(), model.support(), l)
        }
        (None, Some(path)) => {
            let l = check_lipschitz(need(&o.l, "l")?)?;
            let joint = read_input(o, path)?;
            let kx = need(&o.split, "split")?;
            if kx < 1 || kx >= joint.dim() {
                return Err(config_err(format!(
                    "--split must lie in 1..{} for {}-column input",
                    joint.dim(),
                    joint.dim()
                )));
            }
            let x = joint.columns(0..kx)?;
            let y = joint.columns(kx..joint.dim())?;
            let (bx, by) = (input_box(o, x.dim())?, input_box(o, y.dim())?);
            (x, y, bx, by, l)
        }
    };
    let joint_box = x_box.product(&y_box);
    let lipschitz = affine_rescale(&x.join(&y)?, &joint_box, l)?.lipschitz;
    let rx = affine_rescale(&x, &x_box, 1.0)?;
    let ry = affine_rescale(&y, &y_box, 1.0)?;
    let report = estimate_mi_certified(&rx.samples, &ry.samples, lipschitz, delta)?;
    let b = report.bound;
    let steps: Vec<String> = report.terms.iter().map(|t| t.params.steps.to_string()).collect();
    let mut row = vec![
        fmt(report.estimate),
        fmt(b.total),
        fmt(b.quant_bias),
        fmt(b.stat_dev),
        fmt(b.emp_bias),
    ];
    row.extend(steps.iter().cloned());
    row.push(x.len().to_string());
    let mut out = Output {
        header: vec![
            "estimate",
            "total_bound",
            "quant_bias",
            "stat_dev",
            "emp_bias",
            "M_x",
            "M_y",
            "M_xy",
            "N",
        ],
        rows: vec![row],
        ..Output::default()
    };
    out.summary.extend([
        ("estimate", fmt(report.estimate)),
        ("total", fmt(b.total)),
        ("M_x", steps[0].clone()),
        ("M_y", steps[1].clone()),
        ("M_xy", steps[2].clone()),
    ]);
    Ok(out)
}

fn cmd_coverage(o: &Options) -> CliResult<Output> {
    let model = parse_density(&need(&o.density, "density")?, o.k.unwrap_or(1))?;
    let cfg = CoverageConfig {
        lipschitz: model_lipschitz(o, &model)?,
        samples: sample_count(need(&o.n, "n")?)?,
        delta: check_delta(need(&o.delta, "delta")?)?,
        steps: o.m,
        trials: o.trials.unwrap_or(100),
        seed: o.seed.unwrap_or(0),
        model,
    };
    if cfg.model.analytic_entropy().is_none() {
        return Err(config_err("coverage needs a density with known entropy"));
    }
    if cfg.trials < 1 {
        return Err(config_err("trials must be >= 1"));
    }
    let report = coverage(&cfg)?;
    let mut rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.seed.to_string(),
                r.steps.to_string(),
                fmt(r.estimate),
                fmt(r.truth),
                fmt(r.abs_err),
                fmt(r.bound),
                u8::from(r.covered).to_string(),
            ]
        })
        .collect();
    let mut summary_row = vec![String::new(); 8];
    summary_row[0] = "summary".into();
    summary_row[7] = fmt(report.coverage);
    rows.push(summary_row);
    Ok(Output {
        header: vec!["trial", "seed", "M", "estimate", "truth", "abs_err", "bound", "covered"],
        rows,
        summary: vec![
            ("trials", cfg.trials.to_string()),
            ("coverage", fmt(report.coverage)),
        ],
    })
}

fn demo_config(o: &Options) -> CliResult<DemoConfig> {
    let cfg = DemoConfig {
        c: need(&o.c, "c")?,
        delta: check_delta(need(&o.delta, "delta")?)?,
        samples: sample_count(need(&o.n, "n")?)?,
        trials: o.trials.unwrap_or(100),
        seed: o.seed.unwrap_or(0),
        dim: o.k.unwrap_or(1),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn demo_output(r: &DemoReport) -> Output {
    Output {
        header: vec!["trial", "seed", "estimate", "failed"],
        rows: r
            .outcomes
            .iter()
            .map(|t| {
                vec![
                    t.trial.to_string(),
                    t.seed.to_string(),
                    fmt(t.estimate),
                    u8::from(t.failed).to_string(),
                ]
            })
            .collect(),
        summary: vec![
            ("trials", r.trials.to_string()),
            ("failure_fraction", fmt(r.failure_fraction)),
            ("calibrated_b", fmt(r.calibrated_b)),
            ("true_value", fmt(r.true_value)),
            ("epsilon", fmt(r.epsilon)),
            ("gap", fmt(r.gap)),
            ("c", fmt(r.c)),
            ("delta", fmt(r.delta)),
        ],
    }
}

fn external(o: &Options) -> CliResult<Option<ExternalEstimator>> {
    o.estimator
        .as_deref()
        .map(ExternalEstimator::from_command_line)
        .transpose()
        .map_err(|e| config_err(e.to_string()))
}

fn cmd_demo(command: Command, o: &Options) -> CliResult<Output> {
    let cfg = demo_config(o)?;
    let ext = external(o)?;
    if cfg.dim != 1 && command != Command::Prop1Demo {
        return Err(config_err("this demo is one-dimensional"));
    }
    let report = match (command, &ext) {
        (Command::Prop1Demo, None) => estimators::prop1_demo(&cfg)?,
        (Command::Prop1Demo, Some(e)) => estimators::prop1_demo_with(&cfg, e)?,
        (Command::MiDemo, None) => estimators::mi_adversary_demo(&cfg)?,
        (Command::MiDemo, Some(e)) => estimators::mi_adversary_demo_with(&cfg, e)?,
        (Command::KlDemo, None) => estimators::kl_demo(&cfg)?,
        (Command::KlDemo, Some(e)) => estimators::kl_demo_with(&cfg, e)?,
        _ => unreachable!("not a demo command"),
    };
    Ok(demo_output(&report))
}

fn cmd_discrete_mi_demo(o: &Options) -> CliResult<Output> {
    let cfg = DiscreteMiConfig {
        c: need(&o.c, "c")?,
        bins: o.bins.unwrap_or(1_000_000),
        alphabet: o.alphabet.unwrap_or(16),
        codebooks: o.codebooks.unwrap_or(10),
        samples: sample_count(need(&o.n, "n")?)?,
        trials: o.trials.unwrap_or(100),
        seed: o.seed.unwrap_or(0),
    };
    let r = discrete_mi_demo(&cfg)?;
    Ok(Output {
        header: vec!["codebook", "codebook_seed", "true_mi", "mean_estimate", "failure_fraction"],
        rows: r
            .per_codebook
            .iter()
            .enumerate()
            .map(|(i, c)| {
                vec![
                    i.to_string(),
                    c.codebook_seed.to_string(),
                    fmt(c.true_mi),
                    fmt(c.mean_estimate),
                    fmt(c.failure_fraction),
                ]
            })
            .collect(),
        summary: vec![
            ("averaged_failure_fraction", fmt(r.averaged_failure_fraction)),
            ("steps", r.steps.to_string()),
            ("collision_probability", fmt(r.collision_probability)),
            ("collision_bound", fmt(r.collision_bound)),
        ],
    })
}

fn cmd_verify_lemmas(o: &Options) -> CliResult<Output> {
    let dim = o.k.unwrap_or(1);
    if let Some(tol) = o.tol {
        if tol != lemma_tolerance(dim) {
            return Err(config_err(format!(
                "verify-lemmas uses the fixed tolerance {} for K = {dim}",
                lemma_tolerance(dim)
            )));
        }
    }
    let pairs = o.pairs.unwrap_or(1_000_000);
    if pairs < 1 {
        return Err(config_err("pairs must be >= 1"));
    }
    let checks = verify_lemmas(dim, o.seed.unwrap_or(0), pairs)?;
    let all = checks.iter().all(|c| c.holds);
    Ok(Output {
        header: vec!["lemma", "K", "M", "lhs", "rhs", "holds", "hypothesis_met"],
        rows: checks
            .iter()
            .map(|c| {
                vec![
                    c.lemma.to_string(),
                    c.dim.to_string(),
                    c.steps.to_string(),
                    fmt(c.lhs),
                    fmt(c.rhs),
                    c.holds.to_string(),
                    c.hypothesis_met.to_string(),
                ]
            })
            .collect(),
        summary: vec![("checks", checks.len().to_string()), ("all_hold", all.to_string())],
    })
}

pub fn execute(cfg: &ExperimentConfig) -> CliResult<Output> {
    let o = &cfg.options;
    match cfg.command {
        Command::Estimate => cmd_estimate(o),
        Command::Bound => cmd_bound(o),
        Command::OptimizeM => cmd_optimize_m(o),
        Command::MiEstimate => cmd_mi_estimate(o),
        Command::Coverage => cmd_coverage(o),
        Command::Prop1Demo | Command::MiDemo | Command::KlDemo => cmd_demo(cfg.command, o),
        Command::DiscreteMiDemo => cmd_discrete_mi_demo(o),
        Command::VerifyLemmas => cmd_verify_lemmas(o),
    }
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Runs the command, writes the CSV and its `.meta` sidecar when `--out`
/// is set, and returns the summary text for standard output.
pub fn run(cfg: &ExperimentConfig) -> CliResult<String> {
    let started = Instant::now();
    let output = execute(cfg)?;
    let summary = output.summary_text();
    if let Some(out) = &cfg.options.out {
        write_file(out, &output.to_csv())?;
        let mut meta = cfg.to_text();
        let _ = writeln!(meta, "seed_used = {}", cfg.options.seed.unwrap_or(0));
        let _ = writeln!(meta, "version = {}", env!("CARGO_PKG_VERSION"));
        for (k, v) in &output.summary {
            let _ = writeln!(meta, "summary.{k} = {v}");
        }
        let _ = writeln!(meta, "wall_clock_seconds = {}", started.elapsed().as_secs_f64());
        write_file(&meta_path(out), &meta)?;
    }
    Ok(summary)
}
