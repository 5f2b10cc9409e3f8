//! `kappa-forge`: compute psi and kappa intersection numbers, run the
//! verification suites, and keep a persistent cache of computed values.
//!
//! Exit statuses: 0 success, 1 a verification check failed (or an internal
//! error), 2 invalid input, 3 a resource bound was exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kappa_forge::algebra::Rational;
use kappa_forge::kappa::{monomials_of_weight, KappaEngine, KappaKey, KappaTable, MAX_GENUS};
use kappa_forge::psi::{PsiEngine, PsiKey};
use kappa_forge::table::{render, Cache, Format, Kind, ResultRecord};
use kappa_forge::verify::{run_suite, Suite};
use kappa_forge::Error;

#[derive(Parser)]
#[command(
    name = "kappa-forge",
    version,
    about = "Exact psi and kappa intersection numbers on moduli spaces of curves"
)]
struct Cli {
    /// Worker threads for the parallel solver (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kappa-free kappa numbers up to a genus, or one monomial.
    ComputeKappa {
        #[arg(long)]
        max_genus: u32,
        /// Comma-separated `index:multiplicity` pairs, e.g. `2:1,1:1` for kappa_2 kappa_1.
        #[arg(long)]
        monomial: Option<String>,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// One psi number `<tau_{k_1} ... tau_{k_n}>_g`.
    ComputePsi {
        #[arg(long)]
        genus: u32,
        /// Comma-separated exponents, e.g. `0,0,0`.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        exponents: String,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run a verification suite: paper-tables, cross-check, annihilation or all.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 3)]
        max_genus: u32,
    },
}

/// A failure with its exit status.
struct Failure {
    status: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Resource(_) => 3,
            Error::Domain(_) | Error::Parse(_) | Error::Cache(_) | Error::Io(_) => 2,
            _ => 1,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure {
        status: 2,
        message: message.into(),
    }
}

fn parse_monomial(text: &str) -> Result<Vec<(u32, u32)>, Failure> {
    let mut pairs = Vec::new();
    for part in text.split(',') {
        let malformed = || {
            bad_input(format!(
                "malformed monomial {text:?}: expected index:multiplicity pairs like 2:1,1:1"
            ))
        };
        let (i, m) = part.trim().split_once(':').ok_or_else(malformed)?;
        let i: u32 = i.trim().parse().map_err(|_| malformed())?;
        let m: u32 = m.trim().parse().map_err(|_| malformed())?;
        if m == 0 {
            return Err(malformed());
        }
        pairs.push((i, m));
    }
    let mut indices: Vec<u32> = pairs.iter().map(|p| p.0).collect();
    indices.sort_unstable();
    if indices.windows(2).any(|w| w[0] == w[1]) {
        return Err(bad_input(format!(
            "malformed monomial {text:?}: repeated index"
        )));
    }
    pairs.sort_unstable();
    Ok(pairs)
}

fn parse_exponents(text: &str) -> Result<Vec<u32>, Failure> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| bad_input(format!("malformed exponent list {text:?}")))
        })
        .collect()
}

fn parse_format(text: &str) -> Result<Format, Failure> {
    text.parse().map_err(|e: Error| bad_input(e.to_string()))
}

fn load_cache(path: Option<&Path>) -> Result<Cache, Failure> {
    Ok(match path {
        Some(p) => Cache::load(p)?,
        None => Cache::new(),
    })
}

/// Largest genus whose kappa-free values are all present in the cache.
fn cached_genus(cache: &Cache) -> u32 {
    let mut g = 1;
    while g < MAX_GENUS
        && monomials_of_weight(3 * (g + 1) - 3)
            .iter()
            .all(|m| cache.get(Kind::Kappa, g + 1, m).is_some())
    {
        g += 1;
    }
    g
}

fn compute_kappa(
    max_genus: u32,
    monomial: Option<&str>,
    format: &str,
    cache_path: Option<&Path>,
) -> Result<String, Failure> {
    let format = parse_format(format)?;
    if max_genus == 0 {
        return Err(bad_input("--max-genus must be at least 1"));
    }
    if max_genus > MAX_GENUS {
        return Err(Error::Resource(format!(
            "genus {max_genus} exceeds the supported bound {MAX_GENUS}"
        ))
        .into());
    }
    let filter = monomial.map(parse_monomial).transpose()?;
    let mut cache = load_cache(cache_path)?;
    let engine = KappaEngine::new();
    let covered = cached_genus(&cache).min(max_genus);
    if covered >= 2 {
        let mut values = KappaTable::new();
        for g in 2..=covered {
            values.extend(cache.kappa_values(g)?);
        }
        engine.preload(covered, values);
    }

    let records = match filter {
        Some(pairs) => {
            let weight: u32 = pairs.iter().map(|(i, m)| i * m).sum();
            // The only genus where the monomial can be nonzero has 3g - 3 = weight.
            let genus = if weight.is_multiple_of(3) {
                weight / 3 + 1
            } else {
                max_genus
            };
            if genus > max_genus {
                return Err(bad_input(format!("monomial has weight {weight}, which lives in genus {genus} > --max-genus {max_genus}")));
            }
            let key = KappaKey::new(genus, &pairs);
            let value = engine.kappa_number(&key)?;
            vec![ResultRecord::kappa(&key, &value)]
        }
        None => engine
            .table(max_genus)?
            .iter()
            .map(|(k, v)| ResultRecord::kappa(k, v))
            .collect(),
    };

    if let Some(path) = cache_path {
        let solved = engine.solved_genus().min(max_genus);
        if solved >= 2 && solved > cached_genus(&cache) {
            for (k, v) in engine.table(solved)? {
                cache.insert(ResultRecord::kappa(&k, &v));
            }
            cache.save(path)?;
        }
    }
    Ok(render(&records, format))
}

fn compute_psi(
    genus: u32,
    exponents: &str,
    format: &str,
    cache_path: Option<&Path>,
) -> Result<String, Failure> {
    let format = parse_format(format)?;
    let key = PsiKey::new(genus, parse_exponents(exponents)?);
    if !key.is_stable() {
        return Err(bad_input(format!(
            "{key:?} is unstable: need 2g - 2 + n > 0"
        )));
    }
    let mut cache = load_cache(cache_path)?;
    let monomial = key.monomial();
    let record = match cache.get(Kind::Psi, genus, &monomial) {
        Some(r) => r.clone(),
        None => {
            let value: Rational = PsiEngine::new().psi_number(&key)?;
            let record = ResultRecord::psi(&key, &value);
            if let Some(path) = cache_path {
                cache.insert(record.clone());
                cache.save(path)?;
            }
            record
        }
    };
    Ok(render(&[record], format))
}

fn verify(suite: &str, max_genus: u32) -> Result<(String, bool), Failure> {
    let suite: Suite = suite.parse().map_err(|e: Error| bad_input(e.to_string()))?;
    if max_genus > MAX_GENUS {
        return Err(Error::Resource(format!(
            "genus {max_genus} exceeds the supported bound {MAX_GENUS}"
        ))
        .into());
    }
    let report = run_suite(suite, max_genus, &PsiEngine::new(), &KappaEngine::new())?;
    Ok((format!("{report}\n"), report.passed()))
}

fn run(cli: Cli) -> Result<(String, bool), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(bad_input("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                status: 1,
                message: e.to_string(),
            })?;
    }
    match cli.command {
        Command::ComputeKappa {
            max_genus,
            monomial,
            format,
            cache,
        } => compute_kappa(max_genus, monomial.as_deref(), &format, cache.as_deref())
            .map(|s| (s, true)),
        Command::ComputePsi {
            genus,
            exponents,
            format,
            cache,
        } => compute_psi(genus, &exponents, &format, cache.as_deref()).map(|s| (s, true)),
        Command::Verify { suite, max_genus } => verify(&suite, max_genus),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((out, passed)) => {
            print!("{out}");
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}
