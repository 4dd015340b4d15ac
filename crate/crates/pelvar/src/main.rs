//! Command-line harness: every pipeline in the library as a
//! subcommand with CSV or JSON output and a reproducibility manifest.

use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use pelvar::allocation::VarScheme;
use pelvar::backtest::{self, BacktestConfig};
use pelvar::copula::{self, CopulaSpec, ScenarioConfig};
use pelvar::dist::{LossModel, ProbLevel};
use pelvar::empirical::Sample;
use pelvar::error::{Result, RiskError};
use pelvar::measures::{self, RiskSource};

#[derive(Parser)]
#[command(name = "pelvar", version, about = "Tail risk measures built on the flexible expected shortfall mixture")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// RNG seed; overrides any seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write data to this file instead of stdout; a manifest file is
    /// written alongside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Cap the worker thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Linear,
    Kernel,
}

impl From<SchemeArg> for VarScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Linear => VarScheme::Linear,
            SchemeArg::Kernel => VarScheme::Kernel,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Flexibility-index table across standard families and levels.
    ThetaTable {
        /// Comma-separated probability levels.
        #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.95, 0.975, 0.99, 0.995])]
        levels: Vec<f64>,
        /// Restrict to these family columns (default: all).
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
    },
    /// Risk-measure curves (VaR, ES, theta, FES, PELVaR) over a level grid.
    Curves {
        /// TOML file describing a parametric loss model.
        #[arg(long, conflicts_with = "sample")]
        model: Option<PathBuf>,
        /// Text file of observed losses, one value per line.
        #[arg(long)]
        sample: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        p_min: f64,
        #[arg(long, default_value_t = 0.995)]
        p_max: f64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        /// Mixing parameter for the FES column (default: the index at
        /// the first grid level inside D_X).
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Euler allocation for a copula scenario config.
    Allocate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::Kernel)]
        scheme: SchemeArg,
    },
    /// Subadditivity stress grid over copulas and levels.
    Stress {
        #[arg(long)]
        config: PathBuf,
    },
    /// Claims-panel statistics, prediction, and window tuning.
    Backtest {
        /// Claims CSV with a header row.
        #[arg(long)]
        claims: PathBuf,
        #[arg(long, default_value = "year")]
        year_col: String,
        #[arg(long, default_value = "amount")]
        amount_col: String,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// First target year (default: second recorded year).
        #[arg(long)]
        first: Option<i32>,
        /// Last target year (default: last recorded year).
        #[arg(long)]
        last: Option<i32>,
        #[arg(long, default_value_t = 1)]
        window_var: usize,
        #[arg(long, default_value_t = 1)]
        window_theta: usize,
        /// Underestimation penalty for tuning.
        #[arg(long, default_value_t = 2.0)]
        lambda_under: f64,
        /// Emit per-year descriptive statistics instead of predictions.
        #[arg(long)]
        describe: bool,
        /// Tune over this comma-separated window grid (applied to both
        /// windows) and report the score table.
        #[arg(long, value_delimiter = ',')]
        tune: Option<Vec<usize>>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: could not configure thread pool: {e}");
            std::process::exit(2);
        }
    }
    let started = Instant::now();
    match run(&cli, started) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

/// A CSV body plus an equivalent JSON value, ready for `emit`.
struct Output {
    csv: String,
    json: serde_json::Value,
}

fn emit(cli: &Cli, config_echo: serde_json::Value, output: Output, started: Instant) -> Result<()> {
    let body = match cli.format {
        Format::Csv => output.csv,
        Format::Json => format!("{:#}\n", output.json),
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, &body)?;
            let manifest = json!({
                "command": std::env::args().collect::<Vec<_>>().join(" "),
                "version": env!("CARGO_PKG_VERSION"),
                "seed": cli.seed,
                "config": config_echo,
                "wall_ms": started.elapsed().as_millis() as u64,
            });
            let mpath = manifest_path(path);
            fs::write(&mpath, format!("{manifest:#}\n"))?;
            eprintln!("wrote {} and {}", path.display(), mpath.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn run(cli: &Cli, started: Instant) -> Result<()> {
    match &cli.command {
        Command::ThetaTable { levels, families } => {
            let output = theta_table(levels, families.as_deref())?;
            emit(cli, json!({"levels": levels, "families": families}), output, started)
        }
        Command::Curves {
            model,
            sample,
            p_min,
            p_max,
            step,
            theta,
        } => {
            let output = curves(model.as_deref(), sample.as_deref(), *p_min, *p_max, *step, *theta)?;
            emit(
                cli,
                json!({"model": model, "sample": sample, "p_min": p_min, "p_max": p_max, "step": step, "theta": theta}),
                output,
                started,
            )
        }
        Command::Allocate { config, scheme } => {
            let text = fs::read_to_string(config)?;
            let cfg: AllocateFile = toml::from_str(&text)
                .map_err(|e| RiskError::input(format!("{}: {e}", config.display())))?;
            let output = allocate_cmd(&cfg, (*scheme).into(), cli.seed)?;
            emit(cli, toml_echo(&text), output, started)
        }
        Command::Stress { config } => {
            let text = fs::read_to_string(config)?;
            let cfg: StressFile = toml::from_str(&text)
                .map_err(|e| RiskError::input(format!("{}: {e}", config.display())))?;
            let output = stress_cmd(&cfg, cli.seed)?;
            emit(cli, toml_echo(&text), output, started)
        }
        Command::Backtest {
            claims,
            year_col,
            amount_col,
            level,
            first,
            last,
            window_var,
            window_theta,
            lambda_under,
            describe,
            tune,
        } => {
            let table = backtest::load_claims(claims, year_col, amount_col)?;
            let output = backtest_cmd(
                &table,
                *level,
                *first,
                *last,
                *window_var,
                *window_theta,
                *lambda_under,
                *describe,
                tune.as_deref(),
            )?;
            emit(
                cli,
                json!({"claims": claims, "level": level, "window_var": window_var, "window_theta": window_theta, "lambda_under": lambda_under}),
                output,
                started,
            )
        }
    }
}

fn toml_echo(text: &str) -> serde_json::Value {
    toml::from_str::<serde_json::Value>(text).unwrap_or(serde_json::Value::Null)
}

// ---------------------------------------------------------------- theta-table

fn standard_families() -> Vec<(String, LossModel)> {
    vec![
        ("uniform".to_string(), LossModel::uniform(0.0, 1.0).expect("valid")),
        ("exponential".to_string(), LossModel::exponential(1.0).expect("valid")),
        ("normal".to_string(), LossModel::normal(0.0, 1.0).expect("valid")),
        ("lognormal".to_string(), LossModel::log_normal(0.0, 1.0).expect("valid")),
        ("student_t4".to_string(), LossModel::student_t(4.0, 0.0, 1.0).expect("valid")),
        ("pareto_2".to_string(), LossModel::pareto_ii(2.0, 100.0).expect("valid")),
        ("pareto_1.5".to_string(), LossModel::pareto_ii(1.5, 100.0).expect("valid")),
        ("pareto_10".to_string(), LossModel::pareto_ii(10.0, 100.0).expect("valid")),
    ]
}

fn theta_table(levels: &[f64], families: Option<&[String]>) -> Result<Output> {
    let all = standard_families();
    let selected: Vec<&(String, LossModel)> = match families {
        None => all.iter().collect(),
        Some(names) => {
            let mut out = Vec::new();
            for name in names {
                let hit = all
                    .iter()
                    .find(|(n, _)| n == name)
                    .ok_or_else(|| {
                        RiskError::input(format!(
                            "unknown family '{name}'; available: {}",
                            all.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(", ")
                        ))
                    })?;
                out.push(hit);
            }
            out
        }
    };
    let mut csv = String::from("p");
    for (name, _) in &selected {
        write!(csv, ",{name}").unwrap();
    }
    csv.push('\n');
    let mut cells = Vec::new();
    let mut any_na = false;
    for &p in levels {
        let p = ProbLevel::new(p)?;
        write!(csv, "{:.4}", p.value()).unwrap();
        let mut row = Vec::new();
        for (_, model) in &selected {
            match model.theta_closed(p) {
                Ok(theta) => {
                    write!(csv, ",{theta:.4}").unwrap();
                    row.push(Some(theta));
                }
                Err(RiskError::Domain(_)) => {
                    csv.push_str(",n/a");
                    row.push(None);
                    any_na = true;
                }
                Err(e) => return Err(e),
            }
        }
        csv.push('\n');
        cells.push(row);
    }
    if any_na {
        csv.push_str("# n/a: level at or below the D_X bound of that family\n");
    }
    let json = json!({
        "levels": levels,
        "families": selected.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "theta": cells,
    });
    Ok(Output { csv, json })
}

// -------------------------------------------------------------------- curves

fn read_sample_file(path: &Path) -> Result<Sample> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            // tolerate a single header line
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(RiskError::input(format!(
                    "{}: line {}: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Sample::new(values)
}

fn curves(
    model: Option<&Path>,
    sample: Option<&Path>,
    p_min: f64,
    p_max: f64,
    step: f64,
    theta_star: Option<f64>,
) -> Result<Output> {
    if !(step > 0.0 && p_min < p_max) {
        return Err(RiskError::domain(format!(
            "need p_min < p_max and step > 0, got [{p_min}, {p_max}] step {step}"
        )));
    }
    let loaded_model = match model {
        Some(path) => {
            let m: LossModel = toml::from_str(&fs::read_to_string(path)?)
                .map_err(|e| RiskError::input(format!("{}: {e}", path.display())))?;
            m.validate()?;
            Some(m)
        }
        None => None,
    };
    let loaded_sample = sample.map(read_sample_file).transpose()?;
    let source = match (&loaded_model, &loaded_sample) {
        (Some(m), None) => RiskSource::Analytic(m),
        (None, Some(s)) => RiskSource::Empirical(s),
        _ => {
            return Err(RiskError::input(
                "provide exactly one of --model or --sample".to_string(),
            ))
        }
    };
    let mut grid = Vec::new();
    let mut p = p_min;
    while p <= p_max + 1e-12 {
        grid.push(ProbLevel::new(p.min(p_max))?);
        p += step;
    }
    // reference mixing parameter for the FES column
    let theta_star = match theta_star {
        Some(t) if t > 0.0 => t,
        Some(t) => {
            return Err(RiskError::domain(format!("--theta must be positive, got {t}")))
        }
        None => grid
            .iter()
            .find_map(|&p| measures::theta_index(source, p).ok())
            .ok_or_else(|| {
                RiskError::domain("no grid level lies inside D_X; cannot pick a default theta".to_string())
            })?,
    };
    let mut csv = String::from("p,var,es,theta,fes,pelvar\n");
    let mut rows = Vec::new();
    for &p in &grid {
        let var = source.var(p);
        let es = source.es(p).ok();
        let theta = measures::theta_index(source, p).ok();
        let fes = measures::fes(source, p, theta_star).ok();
        let pelvar = theta.is_some().then_some(var);
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            p.value(),
            var,
            opt(es),
            opt(theta),
            opt(fes),
            opt(pelvar)
        )
        .unwrap();
        rows.push(json!({
            "p": p.value(), "var": var, "es": es, "theta": theta,
            "fes": fes, "pelvar": pelvar,
        }));
    }
    Ok(Output {
        csv,
        json: json!({"theta_star": theta_star, "rows": rows}),
    })
}

// ------------------------------------------------------------------ allocate

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CopulaFile {
    kind: String,
    r: Option<f64>,
    nu: Option<u32>,
    xi: Option<f64>,
}

impl CopulaFile {
    fn to_spec(&self, d: usize) -> Result<CopulaSpec> {
        let need_r = || {
            self.r.ok_or_else(|| {
                RiskError::input(format!("copula kind '{}' needs key 'r'", self.kind))
            })
        };
        match self.kind.as_str() {
            "gaussian" => CopulaSpec::gaussian(d, need_r()?),
            "student_t" => CopulaSpec::student_t(d, need_r()?, self.nu.unwrap_or(2)),
            "gumbel" => {
                let xi = self.xi.ok_or_else(|| {
                    RiskError::input("gumbel copula needs key 'xi'".to_string())
                })?;
                CopulaSpec::gumbel(d, xi)
            }
            other => Err(RiskError::input(format!(
                "unknown copula kind '{other}' (expected gaussian, student_t, or gumbel)"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocateFile {
    marginals: Vec<LossModel>,
    copula: CopulaFile,
    n: usize,
    levels: Vec<f64>,
    seed: Option<u64>,
}

fn allocate_cmd(cfg: &AllocateFile, scheme: VarScheme, seed_flag: Option<u64>) -> Result<Output> {
    for m in &cfg.marginals {
        m.validate()?;
    }
    let scenario = ScenarioConfig {
        marginals: cfg.marginals.clone(),
        copula: cfg.copula.to_spec(cfg.marginals.len())?,
        n: cfg.n,
        levels: cfg
            .levels
            .iter()
            .map(|&p| ProbLevel::new(p))
            .collect::<Result<_>>()?,
        seed: seed_flag.or(cfg.seed).unwrap_or(0),
    };
    let reports = copula::run_allocation_scenario(&scenario, scheme)?;
    let mut csv = String::from("p,component,mean,var,es,fes,theta,pelvar\n");
    for r in &reports {
        for c in &r.components {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                r.p.value(),
                c.label,
                c.mean,
                c.var,
                c.es,
                c.fes,
                c.theta,
                c.pelvar
            )
            .unwrap();
        }
        let a = &r.aggregate;
        writeln!(
            csv,
            "{},aggregate,{},{},{},{},{},{}",
            r.p.value(),
            a.mean,
            a.var,
            a.es,
            a.fes,
            a.theta,
            a.pelvar
        )
        .unwrap();
    }
    Ok(Output {
        csv,
        json: serde_json::to_value(&reports)
            .map_err(|e| RiskError::computation(e.to_string()))?,
    })
}

// -------------------------------------------------------------------- stress

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StressFile {
    marginals: Option<Vec<LossModel>>,
    copulas: Vec<CopulaFile>,
    levels: Vec<f64>,
    #[serde(default = "default_stress_n")]
    n: usize,
    #[serde(default = "default_stress_b")]
    b: usize,
    seed: Option<u64>,
}

fn default_stress_n() -> usize {
    5000
}

fn default_stress_b() -> usize {
    100
}

fn stress_cmd(cfg: &StressFile, seed_flag: Option<u64>) -> Result<Output> {
    let marginals = match &cfg.marginals {
        Some(ms) => {
            for m in ms {
                m.validate()?;
            }
            ms.clone()
        }
        None => copula::default_stress_marginals(),
    };
    let d = marginals.len();
    let copulas: Vec<CopulaSpec> = cfg
        .copulas
        .iter()
        .map(|c| c.to_spec(d))
        .collect::<Result<_>>()?;
    let levels: Vec<ProbLevel> = cfg
        .levels
        .iter()
        .map(|&p| ProbLevel::new(p))
        .collect::<Result<_>>()?;
    let seed = seed_flag.or(cfg.seed).unwrap_or(0);
    let reports = copula::run_stress(&marginals, &copulas, &levels, cfg.n, cfg.b, seed)?;
    let mut csv = String::from("copula,p,var_violations,pelvar_violations,es_violations,repetitions,n\n");
    for r in &reports {
        for c in &r.counts {
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                r.copula,
                c.p.value(),
                c.var,
                c.pelvar,
                c.es,
                r.repetitions,
                r.n
            )
            .unwrap();
        }
    }
    Ok(Output {
        csv,
        json: serde_json::to_value(&reports)
            .map_err(|e| RiskError::computation(e.to_string()))?,
    })
}

// ------------------------------------------------------------------ backtest

#[allow(clippy::too_many_arguments)]
fn backtest_cmd(
    table: &backtest::ClaimsTable,
    level: f64,
    first: Option<i32>,
    last: Option<i32>,
    window_var: usize,
    window_theta: usize,
    lambda_under: f64,
    describe: bool,
    tune: Option<&[usize]>,
) -> Result<Output> {
    if describe {
        let stats: Vec<backtest::YearStats> = table
            .years()
            .into_iter()
            .map(|y| backtest::describe(table, y))
            .collect::<Result<_>>()?;
        let mut csv =
            String::from("year,n,mean,sd,skewness,kurtosis,iqr,cv_pct,min,max\n");
        for s in &stats {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                s.year,
                s.n,
                s.mean,
                s.sd,
                opt(s.skewness),
                opt(s.kurtosis),
                s.iqr,
                s.cv_pct,
                s.min,
                s.max
            )
            .unwrap();
        }
        return Ok(Output {
            csv,
            json: serde_json::to_value(&stats)
                .map_err(|e| RiskError::computation(e.to_string()))?,
        });
    }
    let years = table.years();
    let cfg = BacktestConfig {
        first_target: first.unwrap_or(years[0] + 1),
        last_target: last.unwrap_or(years[years.len() - 1]),
        level: ProbLevel::new(level)?,
        window_var,
        window_theta,
        lambda_under,
    };
    if let Some(grid) = tune {
        let (best, scores) = backtest::tune_windows(table, &cfg, grid, grid)?;
        let mut csv = String::from("window_var,window_theta,score,underestimates\n");
        for s in &scores {
            let opt_f = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            let opt_u = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
            writeln!(
                csv,
                "{},{},{},{}",
                s.window_var,
                s.window_theta,
                opt_f(s.score),
                opt_u(s.underestimates)
            )
            .unwrap();
        }
        writeln!(
            csv,
            "# best: window_var={} window_theta={}",
            best.window_var, best.window_theta
        )
        .unwrap();
        return Ok(Output {
            csv,
            json: json!({"best": best, "scores": scores}),
        });
    }
    let records = backtest::predict_var(table, &cfg)?;
    let mut csv = String::from("year,actual_var,var_hat,pelvar_hat,var_bias,pelvar_bias\n");
    for r in &records {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.year, r.actual_var, r.var_hat, r.pelvar_hat, r.var_bias, r.pelvar_bias
        )
        .unwrap();
    }
    Ok(Output {
        csv,
        json: serde_json::to_value(&records)
            .map_err(|e| RiskError::computation(e.to_string()))?,
    })
}
