use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qcloseness::amplitude::QaeBackend;
use qcloseness::experiment::{
    fit_scaling, read_records, run_experiment, write_records, ExperimentConfig, FamilyKind, Mode,
    PurificationKind, XAxis,
};
use qcloseness::tester::TRule;
use qcloseness::Error;

#[derive(Parser, Debug)]
#[command(name = "qclose", version, about = "Quantum distribution closeness tester simulator")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment (the default when no subcommand is given).
    Run(RunArgs),
    /// Fit cost against an abscissa on log-log axes over result files.
    Fit(FitArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<CliMode>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, value_enum)]
    t_rule: Option<CliTRule>,
    #[arg(long)]
    repeats: Option<u32>,
    #[arg(long, value_enum)]
    backend: Option<CliBackend>,
    #[arg(long, value_enum)]
    purification: Option<CliPurification>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    family: Option<CliFamily>,
    #[arg(long)]
    target_distance: Option<f64>,
    /// Distribution files for p and q.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    dist_file: Option<Vec<PathBuf>>,
    /// Amplitude for qae_envelope.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Grover budget for qae_envelope.
    #[arg(long)]
    t: Option<u64>,
    /// C in m = ceil(C / epsilon^2) for classical_l2.
    #[arg(long)]
    samples_constant: Option<f64>,
    /// JSON Lines result file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append to the result file instead of replacing it.
    #[arg(long)]
    append: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_enum)]
    x_axis: CliAxis,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliMode {
    L2,
    Equality,
    L1,
    #[value(name = "classical_l2")]
    ClassicalL2,
    #[value(name = "lemma_check")]
    LemmaCheck,
    #[value(name = "qae_envelope")]
    QaeEnvelope,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliTRule {
    Proof,
    Algorithm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliBackend {
    Subspace,
    Dense,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliPurification {
    Mirror,
    Permuted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliFamily {
    Uniform,
    #[value(name = "point_mass")]
    PointMass,
    #[value(name = "bump_pair")]
    BumpPair,
    #[value(name = "dirichlet_random")]
    DirichletRandom,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliAxis {
    #[value(name = "inv_eps")]
    InvEps,
    #[value(name = "inv_nu_eps")]
    InvNuEps,
    #[value(name = "sqrt_n_over_eps")]
    SqrtNOverEps,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut c = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = args.mode {
        c.mode = match m {
            CliMode::L2 => Mode::L2,
            CliMode::Equality => Mode::Equality,
            CliMode::L1 => Mode::L1,
            CliMode::ClassicalL2 => Mode::ClassicalL2,
            CliMode::LemmaCheck => Mode::LemmaCheck,
            CliMode::QaeEnvelope => Mode::QaeEnvelope,
        };
    }
    if let Some(f) = args.family {
        c.family = match f {
            CliFamily::Uniform => FamilyKind::Uniform,
            CliFamily::PointMass => FamilyKind::PointMass,
            CliFamily::BumpPair => FamilyKind::BumpPair,
            CliFamily::DirichletRandom => FamilyKind::DirichletRandom,
        };
    }
    if let Some(r) = args.t_rule {
        c.t_rule = match r {
            CliTRule::Proof => TRule::Proof,
            CliTRule::Algorithm => TRule::Algorithm,
        };
    }
    if let Some(b) = args.backend {
        c.backend = match b {
            CliBackend::Subspace => QaeBackend::SubspaceExact,
            CliBackend::Dense => QaeBackend::DenseQpe,
        };
    }
    if let Some(p) = args.purification {
        c.purification = match p {
            CliPurification::Mirror => PurificationKind::Mirror,
            CliPurification::Permuted => PurificationKind::Permuted,
        };
    }
    if let Some(files) = &args.dist_file {
        c.dist_files = Some((files[0].clone(), files[1].clone()));
    }
    macro_rules! take {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { c.$field = v; } )* };
    }
    take!(n, epsilon, nu, repeats, trials, seed, amplitude, t);
    if args.target_distance.is_some() {
        c.target_distance = args.target_distance;
    }
    if args.samples_constant.is_some() {
        c.samples_constant = args.samples_constant;
    }
    if args.out.is_some() {
        c.out = args.out.clone();
    }
    Ok(c)
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let config = build_config(args)?;
    config.validate()?;
    let record = run_experiment(&config)?;
    if let Some(path) = &config.out {
        write_records(path, std::slice::from_ref(&record), args.append)?;
    }
    println!("{}", record.summary());
    Ok(())
}

fn fit(args: &FitArgs) -> Result<(), Error> {
    let mut records = Vec::new();
    for f in &args.files {
        records.extend(read_records(f)?);
    }
    let axis = match args.x_axis {
        CliAxis::InvEps => XAxis::InvEps,
        CliAxis::InvNuEps => XAxis::InvNuEps,
        CliAxis::SqrtNOverEps => XAxis::SqrtNOverEps,
    };
    let fit = fit_scaling(&records, axis)?;
    println!(
        "slope={:.6} intercept={:.6} r_squared={:.6} points={}",
        fit.slope, fit.intercept, fit.r_squared, fit.points
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::Run(args)) => run(args),
        Some(Command::Fit(args)) => fit(args),
        None => run(&cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qclose: {e}");
            ExitCode::from(match e {
                Error::Capacity(_) => 3,
                Error::Parameter { .. } | Error::Parse { .. } | Error::Distribution(_) => 2,
                Error::Io { .. } | Error::Structural(_) => 1,
            })
        }
    }
}
