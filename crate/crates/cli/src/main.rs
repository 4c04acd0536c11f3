use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hierflow::builder::build_hierarchy;
use hierflow::dimacs::parse_dimacs;
use hierflow::driver::{approx_maxflow, exact_maxflow};
use hierflow::flowfile::FlowFile;
use hierflow::oracle::oracle_maxflow;
use hierflow::profile::{Profile, ProfileKind};
use hierflow::{CapGraph, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "hierflow", version, about = "Exact maximum s-t flow via expander hierarchies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact maximum flow.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        run: RunOpts,
        /// Write the flow as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// One approximate round (integral, within a constant factor).
    Approx {
        file: PathBuf,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build the hierarchy and dump it as JSON.
    Hierarchy {
        file: PathBuf,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long)]
        dump: PathBuf,
    },
    /// Check a JSON flow against an instance.
    Verify {
        file: PathBuf,
        #[arg(long)]
        flow: PathBuf,
    },
}

#[derive(Args)]
struct RunOpts {
    #[arg(long, env = "HIERFLOW_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "practical")]
    profile: ProfileKind,
    #[arg(long, value_enum, default_value_t = AssertLevel::Cheap)]
    assert_level: AssertLevel,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum AssertLevel {
    Off,
    Cheap,
    Full,
}

enum Failure {
    /// Input could not be read or parsed.
    Parse(String),
    /// Infeasible flow, failed assertion, or solver error.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MalformedHeader { .. }
            | Error::MalformedLine { .. }
            | Error::DuplicateTerminal { .. }
            | Error::MissingTerminal(_)
            | Error::NegativeCapacity { .. }
            | Error::VertexOutOfRange { .. } => Failure::Parse(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Check(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(CapGraph, usize, usize), Failure> {
    let bytes = read(path)?;
    parse_dimacs(&bytes).map_err(|e| match Failure::from(e) {
        Failure::Parse(m) | Failure::Check(m) => Failure::Parse(format!("{}: {m}", path.display())),
    })
}

fn check_file(g: &CapGraph, s: usize, t: usize, f: &FlowFile) -> Result<(), Failure> {
    let v = f.verify(g, s, t)?;
    match v.violation {
        None => Ok(()),
        Some(msg) => Err(Failure::Check(msg)),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Solve { file, run, json } => {
            let (g, s, t) = load(&file)?;
            let r = exact_maxflow(&g, s, t, run.profile, run.seed)?;
            let out = FlowFile::new(&g, &r.flow, r.value, 1);
            if run.assert_level >= AssertLevel::Cheap {
                check_file(&g, s, t, &out)?;
            }
            if run.assert_level == AssertLevel::Full {
                let want = oracle_maxflow(&g, s, t);
                if want != r.value {
                    return Err(Failure::Check(format!("value {} differs from reference {want}", r.value)));
                }
            }
            println!("value {}", r.value);
            if let Some(path) = json {
                write(&path, &out.to_json())?;
            }
        }
        Cmd::Approx { file, run, json } => {
            let (g, s, t) = load(&file)?;
            let profile = Profile::new(run.profile, g.n);
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            let a = approx_maxflow(&g, s, t, &profile, &mut rng)?;
            let out = FlowFile::new(&g, &a.flow, a.value, 1);
            if run.assert_level >= AssertLevel::Cheap {
                check_file(&g, s, t, &out)?;
                if a.cut_cap < a.value {
                    return Err(Failure::Check(format!("cut {} below flow {}", a.cut_cap, a.value)));
                }
            }
            if run.assert_level == AssertLevel::Full && !a.unfold_within(&g, s, t, 3)? {
                return Err(Failure::Check("unfolded flow exceeds congestion 3".into()));
            }
            println!("value {}", a.value);
            println!("cut {}", a.cut_cap);
            if let Some(path) = json {
                write(&path, &out.to_json())?;
            }
        }
        Cmd::Hierarchy { file, run, dump } => {
            let (g, _, _) = load(&file)?;
            let profile = Profile::new(run.profile, g.n);
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            let bh = build_hierarchy(&g, &profile, &mut rng)?;
            if run.assert_level >= AssertLevel::Cheap && !bh.contraction_holds() {
                return Err(Failure::Check("a round kept more than 0.9 of its top-level capacity".into()));
            }
            println!("rounds {}", bh.rounds());
            let text = serde_json::to_string_pretty(&bh.dump()).expect("dump serializes") + "\n";
            write(&dump, &text)?;
        }
        Cmd::Verify { file, flow } => {
            let (g, s, t) = load(&file)?;
            let text = String::from_utf8_lossy(&read(&flow)?).into_owned();
            let f = FlowFile::from_json(&text).map_err(|e| Failure::Parse(format!("{}: {e}", flow.display())))?;
            check_file(&g, s, t, &f)?;
            println!("ok value {}", f.value);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Parse(msg)) => {
            eprintln!("parse error: {msg}");
            ExitCode::from(2)
        }
    }
}
