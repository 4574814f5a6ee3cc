//! Command-line front end for `lagplace_core`: JSON I/O, subcommands and
//! seeded, reproducible runs.

pub mod json;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use lagplace_core::lagrangian::{
    base_locus_search, canonical_diagonal_example, canonical_diagonal_realization, characteristic_cofactors,
    degeneracy_dimension_check, degree_lagrangian, degree_spinor, nondegeneracy_certificate_diagonal, DimensionVerdict,
    MAX_DEGREE_N,
};
use lagplace_core::orthoconstruct::{make_diag_projection_bijective, SymmetricMatrixSpace};
use lagplace_core::polymat::{numerical_rank, symmetry_violation};
use lagplace_core::realization::{
    is_minimal, symmetrize_realization, validate_hamiltonian, RANK_RELATIVE, STRUCTURE_TOL,
};
use lagplace_core::solver::{
    random_generic_system, random_target, solve, PlacementProblem, PlacementSystem, SolverConfig,
};
use lagplace_core::spectral::{jacobian_phi_at_zero, jacobian_psi_at_zero};
use lagplace_core::{Error, HamiltonianSystem, StateSpace, SymmetricSystem};
use thiserror::Error;

use json::{
    BaseLocusJson, BasisJson, CellJson, CensusJson, CensusTrialJson, CertificateJson, CheckJson, CountFrequency,
    DegreeJson, Lemma3Json, MatrixJson, MinimalityJson, RunManifest, SolutionsJson, StructureJson, SystemJson,
    TargetJson,
};

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NO_SOLUTION: u8 = 3;
pub const EXIT_UNRELIABLE: u8 = 4;

/// Environment variable capping solver worker threads.
pub const THREADS_ENV: &str = "LAGPLACE_THREADS";

/// Largest `n` accepted by `census` for symmetric and Hamiltonian systems.
pub const CENSUS_MAX_SYMMETRIC: usize = 3;
pub const CENSUS_MAX_HAMILTONIAN: usize = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::UnreliableRun { .. }) => EXIT_UNRELIABLE,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "lagplace", version, about = "Pole placement by complex symmetric output feedback")]
pub struct Cli {
    /// Seed for every random phase of the run.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Solver configuration file (JSON); missing fields take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degree of the Lagrangian Grassmannian and of its spinor embedding.
    Degree {
        /// Input dimension, 1 to 20.
        #[arg(long)]
        n: usize,
    },
    /// Solve for all symmetric gains placing the target polynomial.
    Place {
        /// System JSON file.
        #[arg(long)]
        system: PathBuf,
        /// Target polynomial JSON file, by coefficients or roots.
        #[arg(long)]
        target: PathBuf,
    },
    /// Structure, minimality, Jacobian and degeneracy report for a system.
    Check {
        /// System JSON file.
        #[arg(long)]
        system: PathBuf,
    },
    /// Solution counts over random generic instances.
    Census {
        /// Input dimension.
        #[arg(long)]
        n: usize,
        /// Random instances to solve.
        #[arg(long, default_value_t = 3)]
        trials: usize,
        /// Use Hamiltonian systems instead of symmetric ones.
        #[arg(long)]
        hamiltonian: bool,
    },
    /// Orthogonal conjugation making the diagonal projection of a basis bijective.
    Lemma3 {
        /// JSON file with a basis of symmetric matrices.
        #[arg(long)]
        basis: PathBuf,
    },
    /// Nondegeneracy certificate for `G(s) = diag(1/s, ..., 1/s^n)`.
    Certify {
        /// Input dimension, 1 to 4.
        #[arg(long)]
        n: usize,
        /// Random starts of the base-locus search (0 disables it).
        #[arg(long, default_value_t = 0)]
        search_starts: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Degree { .. } => "degree",
            Command::Place { .. } => "place",
            Command::Check { .. } => "check",
            Command::Census { .. } => "census",
            Command::Lemma3 { .. } => "lemma3",
            Command::Certify { .. } => "certify",
        }
    }
}

/// Serialized result and the exit code it carries.
#[derive(Debug)]
pub struct Outcome {
    pub output: String,
    pub exit: u8,
}

/// Per-phase stopwatch for the manifest.
#[derive(Default)]
struct Timings(BTreeMap<String, f64>);

impl Timings {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })
}

/// Solver settings from `--config`, with worker threads capped by the
/// environment.
pub fn load_config(path: Option<&PathBuf>, threads_env: Option<&str>) -> Result<SolverConfig, CliError> {
    let mut cfg: SolverConfig = match path {
        Some(p) => json::from_str(&read(p)?, "config")?,
        None => SolverConfig::default(),
    };
    if let Some(text) = threads_env {
        let cap: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {text:?}")))?;
        cfg.threads = Some(cfg.threads.map_or(cap, |t| t.min(cap)));
    }
    Ok(cfg)
}

/// A placement-ready system.
pub fn load_system(sys: &SystemJson) -> Result<PlacementSystem, CliError> {
    Ok(match sys {
        SystemJson::Symmetric { a, b } => SymmetricSystem::new(a.to_matrix("a")?, b.to_matrix("b")?)?.into(),
        SystemJson::Hamiltonian { a, b, c } => {
            HamiltonianSystem::new(a.to_matrix("a")?, b.to_matrix("b")?, c.to_matrix("c")?)?.into()
        }
        SystemJson::StateSpace { a, b, c } => {
            symmetrize_realization(&StateSpace::new(a.to_matrix("a")?, b.to_matrix("b")?, c.to_matrix("c")?)?)?.into()
        }
        SystemJson::CanonicalDiagonal { n } => symmetrize_realization(&canonical_realization(*n)?)?.into(),
    })
}

fn canonical_realization(n: usize) -> Result<StateSpace, CliError> {
    if !(1..=MAX_DEGREE_N).contains(&n) {
        return Err(CliError::Input(format!("canonical_diagonal needs 1 <= n <= {MAX_DEGREE_N}, got {n}")));
    }
    Ok(canonical_diagonal_realization(n)?)
}

pub fn run(cli: &Cli, threads_env: Option<&str>) -> Result<Outcome, CliError> {
    let config = load_config(cli.config.as_ref(), threads_env)?;
    let mut timings = Timings::default();
    let manifest = |timings: Timings| RunManifest {
        command: cli.command.name().to_string(),
        config: config.clone(),
        seed: cli.seed,
        versions: format!("lagplace {}", env!("CARGO_PKG_VERSION")),
        timings: timings.0,
    };
    let seed = cli.seed;
    match &cli.command {
        Command::Degree { n } => {
            let n = *n;
            if !(1..=MAX_DEGREE_N).contains(&n) {
                return Err(CliError::Input(format!("degree needs 1 <= n <= {MAX_DEGREE_N}, got {n}")));
            }
            let (d, d_tilde) = timings.time("degree", || Ok::<_, Error>((degree_lagrangian(n)?, degree_spinor(n)?)))?;
            let out = DegreeJson { manifest: manifest(timings), n, d: d.to_string(), d_tilde: d_tilde.to_string() };
            success(&out)
        }
        Command::Place { system, target } => {
            let sys_json: SystemJson = json::from_str(&read(system)?, "system")?;
            let target_json: TargetJson = json::from_str(&read(target)?, "target")?;
            let sys = timings.time("load", || load_system(&sys_json))?;
            let prob = PlacementProblem::new(sys, target_json.to_poly())?;
            let set = timings.time("solve", || solve(&prob, seed, &config))?;
            let exit = if set.gains.is_empty() { EXIT_NO_SOLUTION } else { EXIT_SUCCESS };
            let out = SolutionsJson {
                manifest: manifest(timings),
                gains: set.gains.iter().map(|g| MatrixJson::from_matrix(g.matrix())).collect(),
                residuals: set.residuals,
                cluster_multiplicities: set.cluster_multiplicities,
                paths_tracked: set.paths_tracked,
                paths_diverged: set.paths_diverged,
                paths_to_base_locus: set.paths_to_base_locus,
                paths_failed: set.paths_failed,
                monodromy_found: set.monodromy_found,
                seed: set.seed,
            };
            Ok(Outcome { output: json::to_string(&out)?, exit })
        }
        Command::Check { system } => {
            let sys_json: SystemJson = json::from_str(&read(system)?, "system")?;
            let out = timings.time("check", || check(&sys_json))?;
            success(&CheckJson { manifest: manifest(timings), ..out })
        }
        Command::Census { n, trials, hamiltonian } => {
            let out = timings.time("census", || census(*n, *trials, *hamiltonian, seed, &config))?;
            success(&CensusJson { manifest: manifest(timings), ..out })
        }
        Command::Lemma3 { basis } => {
            let basis_json: BasisJson = json::from_str(&read(basis)?, "basis")?;
            let mats = basis_json
                .basis
                .iter()
                .enumerate()
                .map(|(i, m)| m.to_matrix(&format!("basis[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let bij =
                timings.time("construct", || make_diag_projection_bijective(&SymmetricMatrixSpace::new(mats)?))?;
            let out = Lemma3Json {
                manifest: manifest(timings),
                s: MatrixJson::from_matrix(&bij.s),
                transformed_basis: bij.transformed_basis.iter().map(MatrixJson::from_matrix).collect(),
                diag_matrix: MatrixJson::from_matrix(&bij.diag_matrix),
                condition: bij.condition,
                rotations: bij.rotations,
            };
            success(&out)
        }
        Command::Certify { n, search_starts } => {
            let cert = timings.time("certificate", || nondegeneracy_certificate_diagonal(*n))?;
            let search = if *search_starts > 0 {
                let (d, n_mat) = canonical_diagonal_example(*n);
                let cd = characteristic_cofactors(&d, &n_mat)?;
                Some(timings.time("base_locus_search", || base_locus_search(&cd, *search_starts, seed)))
            } else {
                None
            };
            let passes = cert.passes && search.as_ref().is_none_or(|s| !s.found());
            let out = CertificateJson {
                manifest: manifest(timings),
                n: cert.n,
                delta: cert.delta,
                pivot_sets_examined: cert.pivot_sets_examined,
                excluded: cert.excluded,
                cells: cert
                    .cells
                    .iter()
                    .map(|c| CellJson {
                        pivots: c.pivots.clone(),
                        satisfies_rule: c.satisfies_rule,
                        alpha: c.alpha,
                        cofactor_sign: c.cofactor_sign,
                        conflicts: c.conflicts.clone(),
                        exact_refutation: c.exact_refutation,
                        passes: c.passes,
                    })
                    .collect(),
                base_locus_search: search.map(|s| BaseLocusJson {
                    starts: s.starts,
                    best_residual: s.best_residual,
                    hits: s.hits,
                    threshold: s.threshold,
                }),
                passes,
            };
            success(&out)
        }
    }
}

fn success<T: serde::Serialize>(value: &T) -> Result<Outcome, CliError> {
    Ok(Outcome { output: json::to_string(value)?, exit: EXIT_SUCCESS })
}

fn placeholder_manifest() -> RunManifest {
    RunManifest {
        command: String::new(),
        config: SolverConfig::default(),
        seed: 0,
        versions: String::new(),
        timings: BTreeMap::new(),
    }
}

/// Consolidated diagnostics; the manifest is filled in by the caller.
pub fn check(sys: &SystemJson) -> Result<CheckJson, CliError> {
    let (kind, ss, structure) = match sys {
        SystemJson::Symmetric { a, b } => {
            let (a, b) = (a.to_matrix("a")?, b.to_matrix("b")?);
            let violation = symmetry_violation(&a);
            let ss = StateSpace::new(a.clone(), b.clone(), b.transpose())?;
            let structure = StructureJson {
                symmetric_violation: Some(violation),
                hamiltonian_aj_violation: None,
                hamiltonian_output_violation: None,
                passes: violation < STRUCTURE_TOL,
            };
            ("symmetric", ss, structure)
        }
        SystemJson::Hamiltonian { a, b, c } => {
            let ss = StateSpace::new(a.to_matrix("a")?, b.to_matrix("b")?, c.to_matrix("c")?)?;
            let raw = HamiltonianSystem::new_unchecked(ss.a.clone(), ss.b.clone(), ss.c.clone())?;
            let report = validate_hamiltonian(&raw);
            let structure = StructureJson {
                symmetric_violation: None,
                hamiltonian_aj_violation: Some(report.aj_violation),
                hamiltonian_output_violation: Some(report.output_violation),
                passes: report.passes,
            };
            ("hamiltonian", ss, structure)
        }
        SystemJson::StateSpace { a, b, c } => {
            let ss = StateSpace::new(a.to_matrix("a")?, b.to_matrix("b")?, c.to_matrix("c")?)?;
            let passes = symmetrize_realization(&ss).is_ok();
            let structure = StructureJson {
                symmetric_violation: None,
                hamiltonian_aj_violation: None,
                hamiltonian_output_violation: None,
                passes,
            };
            ("state_space", ss, structure)
        }
        SystemJson::CanonicalDiagonal { n } => {
            let ss = canonical_realization(*n)?;
            let structure = StructureJson {
                symmetric_violation: None,
                hamiltonian_aj_violation: None,
                hamiltonian_output_violation: None,
                passes: true,
            };
            ("canonical_diagonal", ss, structure)
        }
    };
    let minimal = is_minimal(&ss);
    let n = ss.input_dim();
    let delta = ss.state_dim();
    let hamiltonian = matches!(sys, SystemJson::Hamiltonian { .. });
    let jacobian = if structure.passes && minimal.minimal {
        let jac = match load_system(sys)? {
            PlacementSystem::Symmetric(s) => jacobian_phi_at_zero(&s),
            PlacementSystem::Hamiltonian(h) => jacobian_psi_at_zero(&h)?,
        };
        Some((numerical_rank(&jac, RANK_RELATIVE), jac.nrows().min(jac.ncols())))
    } else {
        None
    };
    let degeneracy = match degeneracy_dimension_check(n, delta, hamiltonian) {
        DimensionVerdict::Degenerate => "degenerate",
        DimensionVerdict::Possible => "possible",
    };
    let certificate_passes = match sys {
        SystemJson::CanonicalDiagonal { n } => Some(nondegeneracy_certificate_diagonal(*n)?.passes),
        _ => None,
    };
    Ok(CheckJson {
        manifest: placeholder_manifest(),
        kind: kind.to_string(),
        state_dim: delta,
        input_dim: n,
        structure,
        minimality: MinimalityJson {
            minimal: minimal.minimal,
            controllability_rank: minimal.controllability_rank,
            observability_rank: minimal.observability_rank,
        },
        jacobian_rank: jacobian.map(|j| j.0),
        jacobian_expected_rank: jacobian.map(|j| j.1),
        degeneracy: degeneracy.to_string(),
        certificate_passes,
    })
}

/// Seed of census trial `trial`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(trial as u64)
}

/// Solution counts over random generic instances; the manifest is filled in
/// by the caller.
pub fn census(
    n: usize,
    trials: usize,
    hamiltonian: bool,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<CensusJson, CliError> {
    let max = if hamiltonian { CENSUS_MAX_HAMILTONIAN } else { CENSUS_MAX_SYMMETRIC };
    if !(1..=max).contains(&n) {
        return Err(CliError::Input(format!("census needs 1 <= n <= {max}, got {n}")));
    }
    let delta = if hamiltonian { n * (n + 1) } else { n * (n + 1) / 2 };
    let expected = degree_lagrangian(n)?;
    let mut rows = Vec::with_capacity(trials);
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for trial in 0..trials {
        let s = trial_seed(seed, trial);
        let prob = PlacementProblem::new(
            random_generic_system(n, delta, hamiltonian, s)?,
            random_target(delta, hamiltonian, s),
        )?;
        let set = solve(&prob, s, cfg)?;
        *histogram.entry(set.finite_count()).or_default() += 1;
        rows.push(CensusTrialJson {
            trial,
            seed: s,
            finite_count: set.finite_count(),
            diverged: set.paths_diverged,
            max_residual: set.max_residual(),
        });
    }
    let pass = rows.iter().all(|r| expected == r.finite_count.into());
    Ok(CensusJson {
        manifest: placeholder_manifest(),
        n,
        hamiltonian,
        expected: expected.to_string(),
        trials: rows,
        distribution: histogram
            .into_iter()
            .map(|(finite_count, trials)| CountFrequency { finite_count, trials })
            .collect(),
        pass,
    })
}
