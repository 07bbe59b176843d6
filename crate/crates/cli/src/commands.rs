use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mfalloc_core::bifidelity::{ScoringMode, SweepOptions};
use mfalloc_core::io::{self as mfa, Manifest};
use mfalloc_core::models::{build_ensemble, synthetic_recovery_instance, Fidelity, ModelSetup};
use mfalloc_core::{linalg, selectors, theory, Ensemble, Method, SelectorConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::{
    CliError, Common, Format, GenerateArgs, OracleArgs, SelectArgs, SweepArgs, VerifyArgs,
    EXIT_CONDITION_FAILED, EXIT_OK,
};

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(CliError::input("workers must be positive"));
        }
        config.workers = Some(w);
    }
    Ok(config)
}

// Runs `f` on a dedicated pool when a worker count is set, else on the global pool.
fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::input(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn load_ensemble(path: &Path) -> Result<(Ensemble, Manifest), CliError> {
    mfa::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::input(format!("cannot write to stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

fn zero_based(indices: &[usize]) -> Result<Vec<usize>, CliError> {
    indices
        .iter()
        .map(|&i| {
            i.checked_sub(1)
                .ok_or_else(|| CliError::input("indices are 1-based; got 0"))
        })
        .collect()
}

/// Parses `1,2,5` or `1..20` (inclusive).
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::input(format!("bad subset sizes `{text}`"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_grid(text: &str) -> Result<[usize; 2], CliError> {
    let bad = || CliError::input(format!("bad grid `{text}`; expected e.g. 20x20"));
    let (a, b) = text.split_once('x').ok_or_else(bad)?;
    Ok([
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ])
}

pub fn generate(args: &GenerateArgs) -> Result<u8, CliError> {
    let mut config = load_config(&args.common)?;
    if let Some(g) = &args.grid {
        config.grid.counts = parse_grid(g)?;
        config.grid.axes = None;
    }
    let dir = args
        .common
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;

    let name = match (&args.model, &config.model) {
        (Some(name), _) => name.clone(),
        (None, Some(setup)) => setup.model_id().to_string(),
        (None, None) => return Err(CliError::input("no model given (use --model)")),
    };
    if name == "synthetic" {
        return generate_synthetic(&config, &dir);
    }

    let setup = match &config.model {
        Some(s) if s.model_id() == name => s.clone(),
        _ => ModelSetup::by_name(&name)?,
    };
    let grid = config.grid_for(&setup)?;
    let hash = mfa::config_hash(
        serde_json::to_string(&json!({ "setup": setup, "grid": grid, "seed": config.seed }))
            .expect("serializable")
            .as_bytes(),
    );

    for fidelity in [Fidelity::Low, Fidelity::High] {
        let ensemble = in_pool(config.workers, || build_ensemble(&setup, &grid, fidelity))??;
        let mut manifest = Manifest::for_ensemble(&ensemble);
        manifest.grid = Some(grid.clone());
        manifest.seed = Some(config.seed);
        manifest.config_hash = Some(hash.clone());
        let path = dir.join(format!("{fidelity}.mfa"));
        mfa::save(&path, &ensemble, &manifest)?;
        eprintln!(
            "wrote {} ({} x {})",
            path.display(),
            ensemble.snapshot_dim(),
            ensemble.len()
        );
    }
    Ok(EXIT_OK)
}

fn generate_synthetic(config: &RunConfig, dir: &Path) -> Result<u8, CliError> {
    let spec = &config.synthetic;
    let inst = synthetic_recovery_instance(spec, config.seed)?;
    let params = (0..spec.n).map(|j| vec![j as f64]).collect();
    let ensemble = Ensemble::new(inst.matrix.clone(), params, "exact", "synthetic")?;
    let mut manifest = Manifest::for_ensemble(&ensemble);
    manifest.seed = Some(config.seed);
    manifest.config_hash = Some(mfa::config_hash(
        serde_json::to_string(spec)
            .expect("serializable")
            .as_bytes(),
    ));
    let path = dir.join("synthetic.mfa");
    mfa::save(&path, &ensemble, &manifest)?;

    let coefficients: Vec<Vec<f64>> = inst
        .coefficients
        .column_iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    let planted = json!({
        "basis": one_based(&inst.basis),
        "non_basis": one_based(&inst.non_basis()),
        "coefficients": coefficients,
    });
    let planted_path = dir.join("planted.json");
    emit(&to_json(&planted), Some(&planted_path))?;
    eprintln!("wrote {} and {}", path.display(), planted_path.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SelectOutput {
    indices: Vec<usize>,
    scores: Vec<f64>,
    termination: String,
}

pub fn select(args: &SelectArgs) -> Result<u8, CliError> {
    let config = load_config(&args.common)?;
    let method: Method = args.method.parse()?;
    let (ensemble, _) = load_ensemble(&args.file)?;
    let mut cfg = SelectorConfig::new(method, args.m)
        .with_seed(config.seed)
        .with_epsilon(args.epsilon)
        .with_lambda(args.lambda)
        .with_leverage_rank(args.rank);
    cfg.normalize_columns = args.normalize;
    let result = in_pool(config.workers, || {
        selectors::select(&ensemble.snapshots, &cfg)
    })??;

    let out = SelectOutput {
        indices: one_based(&result.ordered_indices),
        scores: result.step_scores.clone(),
        termination: result.termination.to_string(),
    };
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut s = String::from("step,index,score\n");
            for (k, (i, v)) in out.indices.iter().zip(&out.scores).enumerate() {
                s.push_str(&format!("{},{i},{v:?}\n", k + 1));
            }
            s
        }
    };
    emit(&text, args.common.out.as_deref())?;
    Ok(EXIT_OK)
}

pub fn sweep(args: &SweepArgs) -> Result<u8, CliError> {
    let mut config = load_config(&args.common)?;
    if let Some(methods) = &args.methods {
        let parsed = methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<Vec<_>, _>>()?;
        config.selectors = parsed
            .into_iter()
            .map(crate::config::SelectorEntry::new)
            .collect();
    }
    if let Some(sizes) = &args.sizes {
        config.sizes = parse_sizes(sizes)?;
    }
    if let Some(t) = args.trials {
        config.random_trials = t;
    }
    if args.all_columns {
        config.scoring = ScoringMode::AllColumns;
    }
    config.validate()?;

    let (low, _) = load_ensemble(&args.low)?;
    let (high, _) = load_ensemble(&args.high)?;
    if low.parameters != high.parameters {
        return Err(CliError::input(
            "low- and high-fidelity files were built on different parameter grids",
        ));
    }
    let options = SweepOptions {
        scoring: config.scoring,
        random_trials: config.random_trials,
    };
    let methods = config.selector_configs();
    let report = in_pool(config.workers, || {
        mfalloc_core::sweep(&low, &high, &methods, &config.sizes, &options)
    })??;

    let text = match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&report.rows),
    };
    let out = args
        .common
        .out
        .clone()
        .or_else(|| config.output.report.clone());
    emit(&text, out.as_deref())?;

    if let Some(plot) = args.plot.clone().or_else(|| config.output.plot.clone()) {
        let total = low.snapshots.norm_squared();
        let limit = low.snapshot_dim().min(low.len());
        let floor: Vec<(usize, f64)> = config
            .sizes
            .iter()
            .filter(|&&k| k <= limit)
            .map(|&k| Ok((k, linalg::rank_k_error(&low.snapshots, k)? / total)))
            .collect::<Result<_, mfalloc_core::Error>>()?;
        emit(&report.plot_table(Some(&floor)), Some(&plot))?;
    }
    Ok(EXIT_OK)
}

pub fn verify(args: &VerifyArgs) -> Result<u8, CliError> {
    if args.basis.is_empty() {
        return Err(CliError::input("basis set is empty"));
    }
    if !(args.eta > 0.0 && args.eta < 0.5) {
        return Err(CliError::input("eta must lie in (0, 0.5)"));
    }
    if !(args.sigma >= 0.0) {
        return Err(CliError::input("sigma must be non-negative"));
    }
    let basis = zero_based(&args.basis)?;
    let (ensemble, _) = load_ensemble(&args.file)?;
    let diag = theory::verify(&ensemble.snapshots, &basis, args.sigma, args.eta)?;

    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&diag),
        Format::Csv => {
            let c = &diag.conditions_met;
            format!(
                "field,value\nd_bar,{:?}\nlambda_bar,{:?}\nepsilon_threshold,{:?}\n\
                 min_row_mass,{:?}\nrequired_row_mass,{:?}\nconsistency,{}\n\
                 basis_conditioned,{}\nrow_mass,{}\nall,{}\n",
                diag.d_bar,
                diag.lambda_bar,
                diag.epsilon_threshold,
                diag.min_row_mass,
                diag.required_row_mass,
                c.consistency,
                c.basis_conditioned,
                c.row_mass,
                c.all
            )
        }
    };
    emit(&text, args.common.out.as_deref())?;
    Ok(if diag.conditions_met.all {
        EXIT_OK
    } else {
        EXIT_CONDITION_FAILED
    })
}

pub fn oracle(args: &OracleArgs) -> Result<u8, CliError> {
    let (ensemble, _) = load_ensemble(&args.file)?;
    let a = &ensemble.snapshots;
    let (subset, residual) = theory::brute_force_cssp(a, args.m)?;
    let floor = if args.m <= a.nrows().min(a.ncols()) {
        Some(linalg::rank_k_error(a, args.m)?)
    } else {
        None
    };
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&json!({
            "m": args.m,
            "indices": one_based(&subset),
            "residual": residual,
            "rank_k_error": floor,
        })),
        Format::Csv => {
            let idx: Vec<String> = one_based(&subset).iter().map(|i| i.to_string()).collect();
            let floor = floor.map(|f| format!("{f:?}")).unwrap_or_default();
            format!(
                "m,indices,residual,rank_k_error\n{},{},{residual:?},{floor}\n",
                args.m,
                idx.join(" ")
            )
        }
    };
    emit(&text, args.common.out.as_deref())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_parse_as_list_or_range() {
        assert_eq!(parse_sizes("1,2,5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_sizes("3..6").unwrap(), vec![3, 4, 5, 6]);
        assert!(parse_sizes("0..3").is_err());
        assert!(parse_sizes("a").is_err());
    }

    #[test]
    fn grid_parses() {
        assert_eq!(parse_grid("20x20").unwrap(), [20, 20]);
        assert!(parse_grid("20").is_err());
    }

    #[test]
    fn index_base_conversion() {
        assert_eq!(one_based(&[0, 2]), vec![1, 3]);
        assert_eq!(zero_based(&[1, 3]).unwrap(), vec![0, 2]);
        assert!(zero_based(&[0]).is_err());
    }
}
