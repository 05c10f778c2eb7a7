//! Command-line front end: configs, random batches, the check suite and
//! the free group demo.

pub mod config;
pub mod random;
pub mod suite;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::freegrp::{commutator_norm, cond_d, rwm_term_free, vanishing_horizon, GroupAlgElement, ShiftPermAut, Word};
use config::{hand_configs, load_config, SCHEMA_VERSION};
use random::{random_batch, DEFAULT_MAX_DIM};
use suite::{run_suite, run_theorem, SuiteFlags};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "relmix",
    version,
    about = "Checks relative weak mixing and relative ergodicity on finite-dimensional systems"
)]
pub struct Cli {
    /// Residual tolerance for algebraic identities.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Tolerance for predicate decisions and joining identities.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub predicate_tol: f64,
    /// Horizon of the finite Cesàro averages used as cross-checks.
    #[arg(long, global = true, default_value_t = 512)]
    pub max_n: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Include wall-clock timings in reports.
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every check on the systems described by JSON configs.
    CheckSystem {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Check only the main theorem on one tracial system.
    CheckTheorem { config: PathBuf },
    /// Run every check on a seeded batch of random tracial systems.
    RandomSuite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
        /// Append the three built-in hand systems.
        #[arg(long)]
        with_hand: bool,
        /// Write the random configs to this directory.
        #[arg(long)]
        dump_configs: Option<PathBuf>,
    },
    /// Eventual vanishing of weak-mixing terms in a free group algebra.
    FreegroupDemo {
        /// Permutation of the finite letter set, comma separated.
        #[arg(long, default_value = "1,0")]
        perm: String,
        /// Element `a`, e.g. `[s0] + 2*[a s1]`.
        #[arg(long, default_value = "[s0]")]
        a: String,
        /// Element `b`.
        #[arg(long, default_value = "[s5^-1]")]
        b: String,
        /// Largest `n` printed.
        #[arg(long, default_value_t = 10)]
        terms: i64,
    },
}

impl Cli {
    fn flags(&self) -> SuiteFlags {
        SuiteFlags {
            tol: self.tol,
            predicate_tol: self.predicate_tol,
            max_n: self.max_n,
            timings: self.timings,
        }
    }
}

#[derive(Debug, Serialize)]
struct FreeTerm {
    n: i64,
    exact: String,
    value: f64,
}

#[derive(Debug, Serialize)]
struct CommutatorRow {
    g: String,
    h: String,
    n: i64,
    norm: f64,
}

#[derive(Debug, Serialize)]
struct FreeGroupDemo {
    schema_version: u32,
    perm: Vec<usize>,
    a: String,
    b: String,
    d_a: String,
    a_centered: String,
    terms: Vec<FreeTerm>,
    horizon: u64,
    commutators: Vec<CommutatorRow>,
}

fn freegroup_demo(perm: &str, a: &str, b: &str, terms: i64) -> Result<FreeGroupDemo> {
    let perm: Vec<usize> = perm
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("cannot parse permutation {perm:?}")))?;
    let aut = ShiftPermAut::new(perm.clone())?;
    let a: GroupAlgElement = a.parse()?;
    let b: GroupAlgElement = b.parse()?;
    aut.check(&a)?;
    aut.check(&b)?;
    let d_a = cond_d(&a);
    let centered = a.sub(&d_a);
    let mut rows = Vec::new();
    for n in 0..=terms {
        let t = rwm_term_free(&aut, &centered, &b, n)?;
        rows.push(FreeTerm {
            n,
            exact: t.to_string(),
            value: t.to_f64().unwrap_or(f64::NAN),
        });
    }
    let horizon = vanishing_horizon(&aut, &centered, &b)?;
    let mut commutators = Vec::new();
    let words = |x: &GroupAlgElement| x.terms().map(|(w, _)| w.clone()).take(2).collect::<Vec<Word>>();
    for g in words(&centered) {
        for h in words(&b) {
            for n in 0..=terms.min(horizon as i64 + 2) {
                commutators.push(CommutatorRow {
                    g: g.to_string(),
                    h: h.to_string(),
                    n,
                    norm: commutator_norm(&aut, &g, &h, n),
                });
            }
        }
    }
    Ok(FreeGroupDemo {
        schema_version: SCHEMA_VERSION,
        perm,
        a: a.to_string(),
        b: b.to_string(),
        d_a: d_a.to_string(),
        a_centered: centered.to_string(),
        terms: rows,
        horizon,
        commutators,
    })
}

fn demo_text(d: &FreeGroupDemo) -> String {
    let mut out = format!(
        "a = {}\nb = {}\nD(a) = {}\na - D(a) = {}\n",
        d.a, d.b, d.d_a, d.a_centered
    );
    for t in &d.terms {
        out += &format!("n = {:>3}: lambda(|D(b alpha^n(a - D(a)))|^2) = {}\n", t.n, t.exact);
    }
    out += &format!("terms vanish for every n > {}\n", d.horizon);
    for c in &d.commutators {
        out += &format!("||[alpha^{}(l({})), l({})] delta_1|| = {:.6}\n", c.n, c.g, c.h, c.norm);
    }
    out
}

fn emit<T: Serialize>(value: &T, text: impl FnOnce() -> String, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("report serializes")),
        Format::Text => print!("{}", text()),
    }
}

fn error_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        1
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let flags = cli.flags();
    match &cli.command {
        Command::CheckSystem { configs } => {
            let configs = configs.iter().map(load_config).collect::<Result<Vec<_>>>()?;
            let report = run_suite(&configs, &flags, None);
            emit(&report, || report.to_text(), cli.format);
            Ok(report.exit_code())
        }
        Command::CheckTheorem { config } => {
            let t = run_theorem(&load_config(config)?, &flags)?;
            emit(
                &t,
                || {
                    format!(
                        "{} {}: weakly mixing={}, product ergodic={}, ergodic={}\n",
                        if t.report.value { "PASS" } else { "FAIL" },
                        t.name,
                        t.relatively_weakly_mixing,
                        t.product_relatively_ergodic,
                        t.relatively_ergodic
                    )
                },
                cli.format,
            );
            Ok(if t.report.value { 0 } else { 1 })
        }
        Command::RandomSuite {
            seed,
            count,
            max_dim,
            with_hand,
            dump_configs,
        } => {
            let mut configs = random_batch(*seed, *count, *max_dim)?;
            if let Some(dir) = dump_configs {
                std::fs::create_dir_all(dir)?;
                for c in &configs {
                    let name = c.name.clone().unwrap_or_else(|| "system".into());
                    let text = serde_json::to_string_pretty(c).expect("config serializes");
                    std::fs::write(dir.join(format!("{name}.json")), text + "\n")?;
                }
            }
            if *with_hand {
                configs.extend(hand_configs());
            }
            let report = run_suite(&configs, &flags, Some(*seed));
            emit(&report, || report.to_text(), cli.format);
            Ok(report.exit_code())
        }
        Command::FreegroupDemo { perm, a, b, terms } => {
            let demo = freegroup_demo(perm, a, b, *terms)?;
            emit(&demo, || demo_text(&demo), cli.format);
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_defaults() {
        let d = freegroup_demo("1,0", "[s0]", "[s5^-1]", 8).unwrap();
        assert_eq!(d.horizon, 5);
        assert_eq!(d.terms[5].exact, "1");
        assert!(d.terms.iter().filter(|t| t.n != 5).all(|t| t.exact == "0"));
    }

    #[test]
    fn demo_rejects_bad_input() {
        assert!(freegroup_demo("1,1", "[s0]", "[a]", 3).is_err());
        assert!(freegroup_demo("1,0", "[z z z]", "[a]", 3).is_err());
        assert!(freegroup_demo("1,0", "[c]", "[a]", 3).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["relmix", "freegroup-demo", "--format", "json"]), 0);
        assert_eq!(run(["relmix", "check-system", "/nonexistent/config.json"]), 2);
        assert_eq!(run(["relmix", "bogus"]), 2);
    }
}
