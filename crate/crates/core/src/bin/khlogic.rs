use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use khlogic::formula::{parse, parse_agent_list, AgentId, Formula};
use khlogic::harness::{self, GenConfig};
use khlogic::ltsplan;
use khlogic::mcheck::{self, CheckError};
use khlogic::model::{Lts, Ltsu, ModelFile};
use khlogic::proofcheck::{check_proof, parse_script, System};
use khlogic::sat::{self, SatError, SatLimits, Validity, Verdict};

const OK: u8 = 0;
const NO: u8 = 1;
const INPUT: u8 = 2;
const CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "khlogic", version, about = "Knowing-how logic over uncertainty-based transition systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Limits {
    /// Largest number of Kh truth guesses to try
    #[arg(long, default_value_t = SatLimits::default().max_guesses)]
    max_guesses: u64,
    /// Largest number of candidate states (2^atoms)
    #[arg(long, default_value_t = SatLimits::default().max_candidate_states)]
    max_candidate_states: usize,
}

impl Limits {
    fn get(&self) -> SatLimits {
        SatLimits {
            max_guesses: self.max_guesses,
            max_candidate_states: self.max_candidate_states,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the core syntax tree of a formula
    Parse {
        formula: String,
        #[arg(long, default_value = "i")]
        agents: String,
        /// Print the formula in surface syntax instead
        #[arg(long)]
        render: bool,
    },
    /// Evaluate a formula at a state of an LTS^U
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        state: String,
        formula: String,
        /// Also print the set of states satisfying the formula
        #[arg(long)]
        extension: bool,
    },
    /// Decide satisfiability and print a certificate
    Sat {
        formula: String,
        #[arg(long, default_value = "i")]
        agents: String,
        /// Write the certificate here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Decide validity and print a countermodel if there is one
    Valid {
        formula: String,
        #[arg(long, default_value = "i")]
        agents: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Evaluate a formula under plain LTS semantics
    LtsCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        state: String,
        formula: String,
        #[arg(long, default_value = "i")]
        agents: String,
        #[arg(long)]
        extension: bool,
        /// Refuse models with more states than this
        #[arg(long, default_value_t = ltsplan::DEFAULT_MAX_STATES)]
        max_states: usize,
    },
    /// Check a Hilbert-style proof script
    Prove {
        file: PathBuf,
        #[arg(long)]
        system: Option<System>,
        /// Overrides the script's `agents:` header
        #[arg(long)]
        agents: Option<String>,
    },
    /// Generate a random LTS^U
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = GenConfig::default().max_states)]
        max_states: usize,
        #[arg(long, default_value_t = GenConfig::default().max_actions)]
        max_actions: usize,
        #[arg(long, default_value_t = GenConfig::default().max_plan_len)]
        max_plan_len: usize,
        #[arg(long, default_value_t = GenConfig::default().max_cells)]
        max_cells: usize,
        #[arg(long, default_value_t = GenConfig::default().num_agents)]
        num_agents: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the library against reference evaluators on random cases
    Diff {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

/// An input problem: reported on stderr with exit code 2.
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

type Outcome = Result<u8, Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Fail> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Fail(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn agents(csv: &str) -> Result<Vec<AgentId>, Fail> {
    Ok(parse_agent_list(csv)?)
}

fn sat_failure(e: SatError) -> Outcome {
    match e {
        SatError::TooManyStates { .. } | SatError::TooManyGuesses { .. } => {
            println!("UNKNOWN");
            eprintln!("{e}");
            Ok(CAP)
        }
        other => Err(Fail(other.to_string())),
    }
}

fn load_ltsu(path: &Path) -> Result<Ltsu, Fail> {
    let m = Ltsu::from_json(&read(path)?)?;
    m.validate(&m.agents())
        .map_err(|v| Fail(CheckError::InvalidModel(v).to_string()))?;
    Ok(m)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Parse { formula, agents: a, render } => {
            let f = parse(&formula, &agents(&a)?)?;
            println!("{}", if render { f.render() } else { f.to_sexpr() });
            Ok(OK)
        }
        Command::Check {
            model,
            state,
            formula,
            extension,
        } => {
            let m = load_ltsu(&model)?;
            let f = parse(&formula, &m.agents())?;
            let (holds, _) = mcheck::check_with_witness(&m, &state, &f)?;
            println!("{holds}");
            if extension {
                let ext = mcheck::extension(&m, &f)?;
                println!("{{{}}}", m.base.set_to_names(&ext.states).join(", "));
            }
            Ok(if holds { OK } else { NO })
        }
        Command::Sat {
            formula,
            agents: a,
            out,
            limits,
        } => {
            let ag = agents(&a)?;
            let f = parse(&formula, &ag)?;
            match sat::satisfiable_with(&f, &ag, &limits.get()) {
                Ok(r) => match r.witness {
                    Some(c) if r.verdict == Verdict::Sat => {
                        println!("SAT");
                        write_or_print(out.as_deref(), &c.to_json())?;
                        Ok(OK)
                    }
                    _ => {
                        println!("UNSAT");
                        Ok(NO)
                    }
                },
                Err(e) => sat_failure(e),
            }
        }
        Command::Valid {
            formula,
            agents: a,
            out,
            limits,
        } => {
            let ag = agents(&a)?;
            let f = parse(&formula, &ag)?;
            match sat::valid_with(&f, &ag, &limits.get()) {
                Ok(Validity::Valid) => {
                    println!("VALID");
                    Ok(OK)
                }
                Ok(Validity::Countermodel(c)) => {
                    println!("INVALID");
                    write_or_print(out.as_deref(), &c.to_json())?;
                    Ok(NO)
                }
                Err(e) => sat_failure(e),
            }
        }
        Command::LtsCheck {
            model,
            state,
            formula,
            agents: a,
            extension,
            max_states,
        } => {
            let file = ModelFile::from_json(&read(&model)?)?;
            if file.strategies.is_some() {
                eprintln!("warning: ignoring `strategies` under LTS semantics");
            }
            let m: Lts = file.to_lts()?;
            let f: Formula = parse(&formula, &agents(&a)?)?;
            let holds = ltsplan::check_lts(&m, &state, &f, max_states)?;
            println!("{holds}");
            if extension {
                let ext = ltsplan::extension_lts_with(&m, &f, max_states)?;
                println!("{{{}}}", m.set_to_names(&ext.states).join(", "));
            }
            Ok(if holds { OK } else { NO })
        }
        Command::Prove { file, system, agents: a } => {
            let override_agents = a.as_deref().map(agents).transpose()?;
            let script = parse_script(&read(&file)?, override_agents.as_deref(), system)?;
            match check_proof(&script) {
                Ok(()) => {
                    println!("OK");
                    Ok(OK)
                }
                Err(e) => {
                    println!("{e}");
                    Ok(NO)
                }
            }
        }
        Command::Gen {
            seed,
            max_states,
            max_actions,
            max_plan_len,
            max_cells,
            num_agents,
            out,
        } => {
            let c = GenConfig {
                seed,
                max_states,
                max_actions,
                max_plan_len,
                max_cells,
                num_agents,
                ..GenConfig::default()
            };
            write_or_print(out.as_deref(), &harness::gen_ltsu(&c).to_file().to_json())?;
            Ok(OK)
        }
        Command::Diff { cases, seed, json } => {
            let report = harness::differential_run(cases, &GenConfig::default().with_seed(seed));
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            Ok(if report.is_clean() { OK } else { NO })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(INPUT)
        }
    }
}

