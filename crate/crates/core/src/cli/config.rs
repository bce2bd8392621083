//! Command line flags and the structured-text config file.
//!
//! The config file is TOML restricted to two flat sections:
//!
//! ```toml
//! [problem]
//! eta = 0.0            # reaction coefficient, >= 0
//! f = 0.0              # constant source term
//! domain_side = 4.0
//! init = "random-robin" # or "zero"
//!
//! [sweep]
//! p = [1.0, 1.5, 2.0]  # a number or a list
//! q = 40.0
//! layouts = [4]        # subdomains per side
//! cells = 20           # cells per subdomain per side
//! iterations = 50
//! seeds = 3            # a count (seeds 0..N-1) or an explicit list
//! methods = ["osm", "dcs-rjmin"]
//! workers = 8
//! ```
//!
//! Unknown sections or keys are rejected. Flags override file values. The
//! invocation is a single run when `p` is given with one value, every other
//! list has at most one value and `--sweep` is absent; otherwise it is a sweep.

use std::path::PathBuf;

use clap::Parser;
use serde::Deserialize;

use crate::ddm::{Initialization, Method, RunConfig};
use crate::error::{Error, Result};
use crate::fvcore::{ProblemSpec, Source};
use crate::mesh::DecompositionSpec;

use super::sweep::SweepSpec;

#[derive(Debug, Clone, Default, Parser)]
#[command(
    name = "dcs-sweep",
    about = "Optimized Schwarz runs and parameter sweeps with a discontinuous coarse space"
)]
pub struct CliArgs {
    /// Config file (TOML with [problem] and [sweep] sections).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Robin coefficient(s) of the local solves, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Robin coefficient(s) of the coarse jump functional.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Subdomains per side.
    #[arg(long, value_delimiter = ',')]
    pub layout: Option<Vec<usize>>,
    /// Cells per subdomain per side.
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Seed of a single run (or the only seed of a sweep).
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Number of seeds, expanded to 0..N-1.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// `osm`, `dcs-rjmin`, or both, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<String>>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Constant source term.
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<f64>,
    #[arg(long)]
    pub init: Option<String>,
    /// Force a sweep even for single values.
    #[arg(long)]
    pub sweep: bool,
    /// Output directory (sweeps) or history CSV path (single runs).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub eta: Option<f64>,
    pub f: Option<f64>,
    pub domain_side: Option<f64>,
    pub init: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p: Option<OneOrMany<f64>>,
    pub q: Option<OneOrMany<f64>>,
    pub layouts: Option<OneOrMany<usize>>,
    pub cells: Option<usize>,
    pub iterations: Option<usize>,
    pub seeds: Option<Seeds>,
    pub methods: Option<OneOrMany<String>>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub enum Job {
    Run(RunConfig),
    Sweep(SweepSpec),
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub job: Job,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn parse_methods(names: Vec<String>) -> Result<Vec<Method>> {
    names.iter().map(|s| s.parse()).collect()
}

/// Merges the config file (if any) with the flags and validates the result.
pub fn parse_config(args: &CliArgs) -> Result<Invocation> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    parse_with_file(args, file)
}

pub(crate) fn parse_with_file(args: &CliArgs, file: ConfigFile) -> Result<Invocation> {
    let ConfigFile { problem, sweep } = file;
    let defaults = SweepSpec::default();

    let eta = args.eta.or(problem.eta).unwrap_or(0.0);
    let source = match args.f.or(problem.f) {
        None | Some(0.0) => Source::Zero,
        Some(v) => Source::Constant(v),
    };
    let problem_spec = ProblemSpec::new(eta, source);
    problem_spec.validate()?;
    let domain_side = problem.domain_side.unwrap_or(defaults.domain_side);
    let init = match args.init.clone().or(problem.init) {
        Some(s) => s.parse::<Initialization>()?,
        None => defaults.init,
    };

    let p_given = args.p.clone().or(sweep.p.map(OneOrMany::into_vec));
    let q_given = args.q.clone().or(sweep.q.map(OneOrMany::into_vec));
    let layouts_given = args.layout.clone().or(sweep.layouts.map(OneOrMany::into_vec));
    let methods_given = match args.method.clone().or(sweep.methods.map(OneOrMany::into_vec)) {
        Some(m) => Some(parse_methods(m)?),
        None => None,
    };
    let seeds = match (args.seed, args.seeds, sweep.seeds) {
        (Some(s), _, _) => vec![s],
        (None, Some(n), _) => (0..n).collect(),
        (None, None, Some(Seeds::Count(n))) => (0..n).collect(),
        (None, None, Some(Seeds::List(v))) => v,
        (None, None, None) => defaults.seeds.clone(),
    };
    let cells = args.cells.or(sweep.cells).unwrap_or(defaults.cells);
    let iterations = args.iters.or(sweep.iterations).unwrap_or(defaults.iterations);
    let workers = args.workers.or(sweep.workers);
    if workers == Some(0) {
        return Err(Error::parameter("workers", "must be at least 1"));
    }

    let at_most_one = |n: Option<usize>| n.is_none_or(|n| n <= 1);
    let single = !args.sweep
        && p_given.as_ref().is_some_and(|p| p.len() == 1)
        && at_most_one(q_given.as_ref().map(Vec::len))
        && at_most_one(layouts_given.as_ref().map(Vec::len))
        && at_most_one(methods_given.as_ref().map(Vec::len))
        && seeds.len() == 1;

    let job = if single {
        let p = p_given.unwrap()[0];
        let layout = layouts_given.map_or(4, |l| l[0]);
        let config = RunConfig {
            decomposition: DecompositionSpec::square(layout, cells).with_side(domain_side),
            problem: problem_spec,
            p,
            q: q_given.map_or(p, |q| q[0]),
            iterations,
            seed: seeds[0],
            method: methods_given.map_or(Method::DcsRjmin, |m| m[0]),
            init,
        };
        if layout == 0 {
            return Err(Error::parameter("layout", "must be at least 1"));
        }
        if cells == 0 {
            return Err(Error::parameter("cells", "must be at least 1"));
        }
        config.validate()?;
        Job::Run(config)
    } else {
        let spec = SweepSpec {
            p: p_given.unwrap_or(defaults.p),
            q: q_given.unwrap_or(defaults.q),
            layouts: layouts_given.unwrap_or(defaults.layouts),
            cells,
            iterations,
            seeds,
            methods: methods_given.unwrap_or(defaults.methods),
            domain_side,
            problem: problem_spec,
            init,
        };
        spec.validate()?;
        Job::Sweep(spec)
    };
    Ok(Invocation {
        job,
        out: args.out.clone(),
        workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(list: &[&str]) -> CliArgs {
        let mut argv = vec!["dcs-sweep"];
        argv.extend_from_slice(list);
        CliArgs::try_parse_from(argv).unwrap()
    }

    #[test]
    fn defaults_are_the_reference_sweep() {
        let inv = parse_with_file(&flags(&[]), ConfigFile::parse("").unwrap()).unwrap();
        let Job::Sweep(spec) = inv.job else { panic!("expected a sweep") };
        assert_eq!(spec.p.len(), 39);
        assert_eq!(spec.p.first(), Some(&1.0));
        assert_eq!(spec.p.last(), Some(&20.0));
        assert!(spec.p.windows(2).all(|w| w[1] - w[0] == 0.5));
        assert_eq!(spec.q, vec![1.0, 2.0, 4.0, 8.0, 10.0, 20.0, 40.0, 80.0]);
        assert_eq!(spec.layouts, vec![2, 4, 6, 8]);
        assert_eq!(spec.cells, 20);
        assert_eq!(spec.iterations, 50);
        assert_eq!(spec.seeds, vec![0]);
        assert_eq!(spec.methods, vec![Method::Osm, Method::DcsRjmin]);
    }

    #[test]
    fn single_run_from_flags() {
        let inv = parse_config(&flags(&["--p", "5", "--q", "5", "--layout", "4"])).unwrap();
        let Job::Run(cfg) = inv.job else { panic!("expected a single run") };
        assert_eq!((cfg.p, cfg.q), (5.0, 5.0));
        assert_eq!(cfg.decomposition, DecompositionSpec::square(4, 20));
        assert_eq!(cfg.method, Method::DcsRjmin);
    }

    #[test]
    fn negative_p_is_rejected() {
        let err = parse_config(&flags(&["--p", "-1"])).unwrap_err();
        assert!(err.to_string().contains("p must be > 0"), "{err}");
        assert!(matches!(err, Error::Parameter { ref key, .. } if key == "p"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn file_values_and_flag_override() {
        let text = r#"
            [problem]
            eta = 1.0
            [sweep]
            p = [2.0, 3.0]
            q = 40
            layouts = 4
            seeds = 3
            methods = "dcs-rjmin"
        "#;
        let file = ConfigFile::parse(text).unwrap();
        let inv = parse_with_file(&flags(&[]), file.clone()).unwrap();
        let Job::Sweep(spec) = inv.job else { panic!() };
        assert_eq!(spec.p, vec![2.0, 3.0]);
        assert_eq!(spec.q, vec![40.0]);
        assert_eq!(spec.seeds, vec![0, 1, 2]);
        assert_eq!(spec.problem.eta, 1.0);
        assert_eq!(spec.methods, vec![Method::DcsRjmin]);

        let inv = parse_with_file(&flags(&["--p", "7", "--seed", "4"]), file).unwrap();
        let Job::Run(cfg) = inv.job else { panic!() };
        assert_eq!(cfg.p, 7.0);
        assert_eq!(cfg.q, 40.0);
        assert_eq!(cfg.seed, 4);
    }

    #[test]
    fn unknown_keys_and_bad_values() {
        assert!(ConfigFile::parse("[sweep]\nbogus = 1\n").is_err());
        assert!(ConfigFile::parse("[other]\np = 1\n").is_err());
        assert!(ConfigFile::parse("[sweep\np = 1").is_err());
        let file = ConfigFile::parse("[sweep]\nq = [1.0, 0.0]\n").unwrap();
        let err = parse_with_file(&flags(&[]), file).unwrap_err();
        assert!(matches!(err, Error::Parameter { ref key, .. } if key == "q"));
        let file = ConfigFile::parse("[problem]\neta = -2\n").unwrap();
        assert!(parse_with_file(&flags(&[]), file).is_err());
        assert!(parse_config(&flags(&["--method", "krylov"])).is_err());
        assert!(parse_config(&flags(&["--p", "2", "--layout", "0"])).is_err());
    }

    #[test]
    fn sweep_flag_forces_sweep() {
        let inv = parse_config(&flags(&["--p", "5", "--sweep", "--layout", "2"])).unwrap();
        assert!(matches!(inv.job, Job::Sweep(ref s) if s.p == vec![5.0] && s.layouts == vec![2]));
        let inv = parse_config(&flags(&["--p", "5,6"])).unwrap();
        assert!(matches!(inv.job, Job::Sweep(_)));
    }
}
