use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use qualest::estimators::{NShape, NsShape, Preset, Weights};
use qualest::moments::{read_population_csv, write_population_csv};
use qualest::montecarlo::{enumerate_exact, simulate, DEFAULT_ENUMERATION_CAP};
use qualest::report::{
    emit, reproduce_table, Format, MomentsSummary, ParameterSet, TheoryRow, VerificationRow,
};
use qualest::synth::{synthesize, MomentTargets};
use qualest::{compute_moments, Design, EstimatorSpec, Moments, Population};

const OUT_DIR_ENV: &str = "QUALEST_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "qualest",
    version,
    about = "Estimators of a population proportion using an auxiliary variable under SRSWOR"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print population moments and the sampling factor.
    Params {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// First-order bias, MSE and optimal weights of selected estimators.
    Theory {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        selection: Selection,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare theory with exact enumeration or seeded simulation.
    #[command(group(ArgGroup::new("mode").required(true).args(["exact", "simulate"])))]
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        selection: Selection,
        /// Enumerate every possible sample.
        #[arg(long)]
        exact: bool,
        /// Draw seeded SRSWOR replications.
        #[arg(long)]
        simulate: bool,
        /// Number of replications (at least 100).
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Base seed of the replication streams.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest C(N, n) exact enumeration may visit.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Recompute the home-ownership efficiency table and flag printed discrepancies.
    Reproduce {
        #[command(flatten)]
        overrides: ParamOverrides,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a population matching target moments as CSV.
    Synth {
        #[command(flatten)]
        targets: TargetArgs,
        /// Seed of the within-group spread.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file (stdout when absent); relative paths resolve under $QUALEST_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["csv", "params", "synth"])))]
struct InputArgs {
    /// Population CSV with `phi` (0/1) and `x` columns.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Use summary parameters (home-ownership defaults, overridable).
    #[arg(long)]
    params: bool,
    /// Synthesize a population from target moments (home-ownership defaults, overridable).
    #[arg(long)]
    synth: bool,
    /// Seed for --synth.
    #[arg(long, default_value_t = 1)]
    synth_seed: u64,
    #[command(flatten)]
    overrides: ParamOverrides,
}

#[derive(Debug, Args, Default)]
struct ParamOverrides {
    /// Population size N.
    #[arg(long = "N", value_name = "N")]
    population_size: Option<usize>,
    /// Sample size n.
    #[arg(long = "n", value_name = "n")]
    sample_size: Option<usize>,
    /// Population proportion P.
    #[arg(long = "P", value_name = "P")]
    proportion: Option<f64>,
    /// Population mean of x.
    #[arg(long = "Xbar", value_name = "XBAR")]
    xbar: Option<f64>,
    /// Coefficient of variation of the attribute (parameter mode only).
    #[arg(long = "Cphi", value_name = "CPHI")]
    c_phi: Option<f64>,
    /// Coefficient of variation of x.
    #[arg(long = "Cx", value_name = "CX")]
    c_x: Option<f64>,
    /// Point-biserial correlation.
    #[arg(long = "rho", value_name = "RHO", allow_hyphen_values = true)]
    rho: Option<f64>,
}

#[derive(Debug, Args)]
struct TargetArgs {
    #[arg(long = "N", value_name = "N", default_value_t = 40)]
    population_size: usize,
    #[arg(long = "P", value_name = "P", default_value_t = 0.525)]
    proportion: f64,
    #[arg(long = "Xbar", value_name = "XBAR", default_value_t = 14.4)]
    xbar: f64,
    #[arg(long = "Cx", value_name = "CX", default_value_t = 0.308)]
    c_x: f64,
    #[arg(
        long = "rho",
        value_name = "RHO",
        default_value_t = 0.897,
        allow_hyphen_values = true
    )]
    rho: f64,
}

#[derive(Debug, Args)]
struct Selection {
    /// Named estimator (p, t_s, t_GS, t_NS, t_N, t_N1..t_N8, t_NQ1..t_NQ9, t_N_adaptive); repeatable.
    #[arg(long = "preset", value_parser = parse_preset)]
    presets: Vec<Preset>,
    /// Generalized class with optimal weights and shape ALPHA,ETA,LAMBDA; repeatable.
    #[arg(long = "custom-n", value_name = "ALPHA,ETA,LAMBDA", value_parser = parse_list::<3>, allow_hyphen_values = true)]
    custom_n: Vec<[f64; 3]>,
    /// Single-weight class with optimal weight and shape ALPHA,ETA,LAMBDA; repeatable.
    #[arg(long = "custom-nq", value_name = "ALPHA,ETA,LAMBDA", value_parser = parse_list::<3>, allow_hyphen_values = true)]
    custom_nq: Vec<[f64; 3]>,
    /// Two-weight exponential family with optimal weights and shape ALPHA,BETA,A,B; repeatable.
    #[arg(long = "custom-ns", value_name = "ALPHA,BETA,A,B", value_parser = parse_list::<4>, allow_hyphen_values = true)]
    custom_ns: Vec<[f64; 4]>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format: text, csv or json.
    #[arg(long, default_value = "text", value_parser = parse_format)]
    format: Format,
    /// Output file (stdout when absent); relative paths resolve under $QUALEST_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: qualest::Error| e.to_string())
}

fn parse_list<const K: usize>(s: &str) -> Result<[f64; K], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {K} comma-separated numbers, got {}", v.len()))
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: qualest::Error| e.to_string())
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Compute(qualest::Error),
    Io(String),
}

impl From<qualest::Error> for CliError {
    fn from(e: qualest::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Compute(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

struct Resolved {
    moments: Moments,
    design: Design,
    population: Option<Population>,
    parameters: Option<ParameterSet>,
}

impl InputArgs {
    fn resolve(&self) -> CliResult<Resolved> {
        let o = &self.overrides;
        if let Some(path) = &self.csv {
            if o.population_size.is_some()
                || o.proportion.is_some()
                || o.xbar.is_some()
                || o.c_phi.is_some()
                || o.c_x.is_some()
                || o.rho.is_some()
            {
                return Err(CliError::Usage(
                    "--csv takes its moments from the file; only --n may be given".into(),
                ));
            }
            let n = o
                .sample_size
                .ok_or_else(|| CliError::Usage("--csv needs the sample size --n".into()))?;
            let file =
                File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let pop: Population = read_population_csv(file)?;
            let design = Design::new(n, pop.size())?;
            return Ok(Resolved {
                moments: compute_moments(&pop)?,
                design,
                population: Some(pop),
                parameters: None,
            });
        }
        if self.synth {
            if o.c_phi.is_some() {
                return Err(CliError::Usage(
                    "--Cphi is implied by N and P when synthesizing".into(),
                ));
            }
            let d = ParameterSet::home_ownership();
            let targets = MomentTargets {
                population_size: o.population_size.unwrap_or(d.population_size),
                proportion: o.proportion.unwrap_or(d.proportion),
                xbar: o.xbar.unwrap_or(d.xbar),
                c_x: o.c_x.unwrap_or(d.c_x),
                rho: o.rho.unwrap_or(d.rho),
            };
            let pop = synthesize(&targets, self.synth_seed)?;
            let design = Design::new(o.sample_size.unwrap_or(d.sample_size), pop.size())?;
            return Ok(Resolved {
                moments: compute_moments(&pop)?,
                design,
                population: Some(pop),
                parameters: None,
            });
        }
        let ps = o.apply(ParameterSet::home_ownership());
        Ok(Resolved {
            moments: ps.moments()?,
            design: ps.design()?,
            population: None,
            parameters: Some(ps),
        })
    }
}

impl ParamOverrides {
    fn apply(&self, mut ps: ParameterSet) -> ParameterSet {
        ps.population_size = self.population_size.unwrap_or(ps.population_size);
        ps.sample_size = self.sample_size.unwrap_or(ps.sample_size);
        ps.proportion = self.proportion.unwrap_or(ps.proportion);
        ps.xbar = self.xbar.unwrap_or(ps.xbar);
        ps.c_phi = self.c_phi.unwrap_or(ps.c_phi);
        ps.c_x = self.c_x.unwrap_or(ps.c_x);
        ps.rho = self.rho.unwrap_or(ps.rho);
        ps
    }
}

impl Selection {
    fn specs(&self, m: &Moments) -> Vec<(String, EstimatorSpec)> {
        let mut out: Vec<(String, EstimatorSpec)> =
            self.presets.iter().map(|p| (p.name(), p.spec(m))).collect();
        for c in &self.custom_n {
            out.push((
                format!("t_N[{},{},{}]", c[0], c[1], c[2]),
                EstimatorSpec::NClass {
                    shape: NShape::new(c[0], c[1], c[2]),
                    weights: Weights::OptimalFromPopulation,
                },
            ));
        }
        for c in &self.custom_nq {
            out.push((
                format!("t_NQ[{},{},{}]", c[0], c[1], c[2]),
                EstimatorSpec::NqClass {
                    shape: NShape::new(c[0], c[1], c[2]),
                    weights: Weights::OptimalFromPopulation,
                },
            ));
        }
        for c in &self.custom_ns {
            out.push((
                format!("t_NS[{},{},{},{}]", c[0], c[1], c[2], c[3]),
                EstimatorSpec::NsFamily {
                    shape: NsShape::new(c[0], c[1], c[2], c[3]),
                    weights: Weights::OptimalFromPopulation,
                },
            ));
        }
        out
    }

    fn is_empty(&self) -> bool {
        self.presets.is_empty()
            && self.custom_n.is_empty()
            && self.custom_nq.is_empty()
            && self.custom_ns.is_empty()
    }
}

fn resolve_out(path: &PathBuf) -> PathBuf {
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            return PathBuf::from(dir).join(path);
        }
    }
    path.clone()
}

fn write_output(bytes: &[u8], out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => {
            let path = resolve_out(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes)?;
        }
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Params { input, output } => {
            let r = input.resolve()?;
            let mut summary = MomentsSummary::new(&r.moments, &r.design);
            if let Some(ps) = r.parameters {
                summary.lambda12 = ps.lambda12;
                summary.lambda04 = ps.lambda04;
                summary.lambda03 = ps.lambda03;
            }
            write_output(&emit(&[summary], output.format)?, output.out.as_ref())
        }
        Command::Theory {
            input,
            selection,
            output,
        } => {
            let r = input.resolve()?;
            let specs = if selection.is_empty() {
                Preset::all()
                    .iter()
                    .map(|p| (p.name(), p.spec(&r.moments)))
                    .collect()
            } else {
                selection.specs(&r.moments)
            };
            let reference = Preset::P
                .spec(&r.moments)
                .theory(&r.moments, &r.design)?
                .mse;
            let rows = specs
                .iter()
                .map(|(name, spec)| {
                    let t = spec.theory(&r.moments, &r.design)?;
                    TheoryRow::new(name, &t, reference)
                })
                .collect::<qualest::Result<Vec<_>>>()?;
            write_output(&emit(&rows, output.format)?, output.out.as_ref())
        }
        Command::Verify {
            input,
            selection,
            exact,
            simulate: sim,
            reps,
            seed,
            cap,
            output,
        } => {
            debug_assert!(exact != sim);
            let r = input.resolve()?;
            let pop = r.population.as_ref().ok_or_else(|| {
                CliError::Usage("verify needs a concrete population: use --csv or --synth".into())
            })?;
            if selection.is_empty() {
                return Err(CliError::Usage(
                    "verify needs at least one --preset or --custom-* estimator".into(),
                ));
            }
            let n = r.design.sample_size;
            let mut rows = Vec::new();
            for (name, spec) in selection.specs(&r.moments) {
                let t = spec.theory(&r.moments, &r.design)?;
                let row = if exact {
                    let e = enumerate_exact(pop, n, &spec, cap)?;
                    VerificationRow {
                        estimator: name,
                        mode: "exact".into(),
                        theory_bias: t.bias,
                        theory_mse: t.mse,
                        empirical_bias: e.exact_bias,
                        empirical_mse: e.exact_mse,
                        mc_standard_error: None,
                        samples: e.samples_enumerated,
                        degenerate_sample_count: None,
                        seed: None,
                        relative_gap: (t.mse - e.exact_mse).abs() / e.exact_mse,
                    }
                } else {
                    let s = simulate(pop, n, &spec, reps, seed)?;
                    VerificationRow {
                        estimator: name,
                        mode: "simulate".into(),
                        theory_bias: t.bias,
                        theory_mse: t.mse,
                        empirical_bias: s.empirical_bias,
                        empirical_mse: s.empirical_mse,
                        mc_standard_error: Some(s.mc_standard_error),
                        samples: s.replications as u128,
                        degenerate_sample_count: Some(s.degenerate_sample_count),
                        seed: Some(s.seed),
                        relative_gap: (t.mse - s.empirical_mse).abs() / s.empirical_mse,
                    }
                };
                rows.push(row);
            }
            write_output(&emit(&rows, output.format)?, output.out.as_ref())
        }
        Command::Reproduce { overrides, output } => {
            let ps = overrides.apply(ParameterSet::home_ownership());
            let rows = reproduce_table(&ps.moments()?, &ps.design()?)?;
            write_output(&emit(&rows, output.format)?, output.out.as_ref())
        }
        Command::Synth { targets, seed, out } => {
            let t = MomentTargets {
                population_size: targets.population_size,
                proportion: targets.proportion,
                xbar: targets.xbar,
                c_x: targets.c_x,
                rho: targets.rho,
            };
            let pop = synthesize(&t, seed)?;
            let mut buf = Vec::new();
            write_population_csv(&pop, &mut buf)?;
            write_output(&buf, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
