//! Command-line entry point: validate instrument specs, synthesize measuring
//! processes, compute posterior statistics and joint distributions, and run
//! local-net checks. Every command emits a JSON run report.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage/IO/parse error.

mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use instrument_forge::dilation::{
    canonical_extension, synthesize_measuring_process, verify_realization,
};
use instrument_forge::instrument::{joint_distribution, Posterior};
use instrument_forge::io::{
    read_json, write_json, InstrumentSpec, NetSpec, ProcessSpec, SpecError, StateSpec,
};
use instrument_forge::localnet::Region;
use instrument_forge::matrix::hermitian_eigen_sorted;
use instrument_forge::{sampling, tol, CPInstrument, ForgeError, NormalState};

use report::{matrix_value, sig12, CheckLine, RunReport};

#[derive(Parser)]
#[command(
    name = "instrument-forge",
    about = "CP instruments, measuring processes and local nets at desk scale",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instrument spec: complete positivity, unitality, range.
    Validate {
        /// Instrument spec JSON.
        spec: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override every check tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Synthesize a measuring process realizing the instrument.
    Dilate {
        spec: PathBuf,
        /// Write the measuring-process JSON here.
        #[arg(long)]
        process_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Posterior weights and states for an instrument and an input state.
    Posterior {
        instrument: PathBuf,
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Joint outcome distribution of two successive instruments.
    Compose {
        first: PathBuf,
        second: PathBuf,
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Extend a region instrument over a lattice net and check locality.
    Localnet {
        net: PathBuf,
        instrument: PathBuf,
        /// Region O1 carrying the instrument, syntax "a..b".
        #[arg(long)]
        region: String,
        /// Enclosing region O2 (defaults to O1), syntax "a..b".
        #[arg(long)]
        collar: Option<String>,
        /// Seed for the randomized locality probes.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

/// --tol beats INSTRUMENT_FORGE_TOL beats the per-command default.
fn resolve_tol(flag: Option<f64>, default: f64) -> f64 {
    flag.or_else(|| {
        std::env::var("INSTRUMENT_FORGE_TOL")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(default)
}

fn explicit_tol(flag: Option<f64>) -> Option<f64> {
    flag.or_else(|| {
        std::env::var("INSTRUMENT_FORGE_TOL")
            .ok()
            .and_then(|s| s.parse().ok())
    })
}

/// Loads and fully validates an instrument; validation failures exit 1,
/// everything else propagates as a usage error.
fn load_instrument(path: &Path, report: &mut RunReport) -> Result<Result<CPInstrument, i32>, SpecError> {
    report
        .digest_input(&path.display().to_string())
        .map_err(|e| SpecError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let spec: InstrumentSpec = read_json(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    match spec.build(base) {
        Ok(inst) => Ok(Ok(inst)),
        Err(SpecError::Forge(
            e @ (ForgeError::NotUnital { .. }
            | ForgeError::NotCP { .. }
            | ForgeError::RangeViolation { .. }),
        )) => {
            eprintln!("validation failed: {e}");
            Ok(Err(1))
        }
        Err(e) => Err(e),
    }
}

fn load_state(path: &Path, report: &mut RunReport) -> Result<NormalState, SpecError> {
    report
        .digest_input(&path.display().to_string())
        .map_err(|e| SpecError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let spec: StateSpec = read_json(path)?;
    spec.to_state()
}

fn run(command: Command) -> Result<i32, Box<dyn std::error::Error>> {
    match command {
        Command::Validate { spec, out, tol } => cmd_validate(&spec, out.as_deref(), tol),
        Command::Dilate {
            spec,
            process_out,
            out,
            tol,
        } => cmd_dilate(&spec, process_out.as_deref(), out.as_deref(), tol),
        Command::Posterior {
            instrument,
            state,
            out,
            tol,
        } => cmd_posterior(&instrument, &state, out.as_deref(), tol),
        Command::Compose {
            first,
            second,
            state,
            out,
            tol,
        } => cmd_compose(&first, &second, &state, out.as_deref(), tol),
        Command::Localnet {
            net,
            instrument,
            region,
            collar,
            seed,
            out,
            tol,
        } => cmd_localnet(
            &net,
            &instrument,
            &region,
            collar.as_deref(),
            seed,
            out.as_deref(),
            tol,
        ),
    }
}

fn cmd_validate(
    spec_path: &Path,
    out: Option<&Path>,
    tol_flag: Option<f64>,
) -> Result<i32, Box<dyn std::error::Error>> {
    let mut report = RunReport::new("validate");
    report.digest_input(&spec_path.display().to_string())?;
    let spec: InstrumentSpec = read_json(spec_path)?;
    let base = spec_path.parent().unwrap_or_else(|| Path::new("."));
    let inst = spec.build_unvalidated(base)?;

    let override_tol = explicit_tol(tol_flag);
    for check in inst.validate().checks {
        let tolerance = override_tol.unwrap_or(check.tolerance);
        report.push_check(CheckLine::new(check.name, check.residual, tolerance));
    }
    report.set_result("outcomes", json!(inst.outcomes().labels()));
    report.set_result("ambient_dim", json!(inst.algebra().ambient_dim()));
    let pass = report.pass;
    report.emit(out)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_dilate(
    spec_path: &Path,
    process_out: Option<&Path>,
    out: Option<&Path>,
    tol_flag: Option<f64>,
) -> Result<i32, Box<dyn std::error::Error>> {
    let tolerance = resolve_tol(tol_flag, tol::RECONSTRUCTION);
    let mut report = RunReport::new("dilate");
    let inst = match load_instrument(spec_path, &mut report)? {
        Ok(inst) => inst,
        Err(code) => return Ok(code),
    };

    let needs_extension = !inst.algebra().is_full();
    let source = if needs_extension {
        canonical_extension(&inst)?
    } else {
        inst.clone()
    };
    report.set_result("canonical_extension", json!(needs_extension));

    let process = synthesize_measuring_process(&source)?;
    report.set_result("ancilla_dim", json!(process.ancilla_dim()));

    // when a process file is written, reload it and verify the artifact
    // itself; otherwise verify the in-memory process
    let verified_process = if let Some(path) = process_out {
        write_json(path, &ProcessSpec::from_process(&process))?;
        report.artifacts.push(path.display().to_string());
        let reloaded: ProcessSpec = read_json(path)?;
        reloaded.to_process()?
    } else {
        process.clone()
    };

    // realization residual against the original instrument on its algebra
    let verification = verify_realization(&verified_process, &inst, tolerance)?;
    for (label, residual) in &verification.per_atom {
        report.push_check(CheckLine::new(
            format!("realization:{label}"),
            *residual,
            tolerance,
        ));
    }

    // the probe built by the synthesis is a pure state
    let (sigma_eigs, _) = hermitian_eigen_sorted(process.sigma().density());
    let purity_residual = 1.0 - sigma_eigs.first().copied().unwrap_or(0.0);
    report.push_check(CheckLine::new("probe_pure", purity_residual.abs(), 1e-10));

    let pass = report.pass;
    report.emit(out)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_posterior(
    inst_path: &Path,
    state_path: &Path,
    out: Option<&Path>,
    tol_flag: Option<f64>,
) -> Result<i32, Box<dyn std::error::Error>> {
    let tolerance = resolve_tol(tol_flag, tol::PAIRING);
    let mut report = RunReport::new("posterior");
    let inst = match load_instrument(inst_path, &mut report)? {
        Ok(inst) => inst,
        Err(code) => return Ok(code),
    };
    let rho = load_state(state_path, &mut report)?;

    let family = inst.posterior_family(&rho)?;
    let all: Vec<&str> = inst
        .outcomes()
        .labels()
        .iter()
        .map(String::as_str)
        .collect();

    let mut entries = Vec::new();
    let mut weight_sum = 0.0;
    let mut mixture = instrument_forge::matrix::zeros(rho.dim(), rho.dim());
    for e in &family.entries {
        weight_sum += e.weight;
        let posterior_value = match &e.posterior {
            Posterior::State(s) => {
                mixture += s.density() * instrument_forge::matrix::cr(e.weight);
                matrix_value(s.density())
            }
            Posterior::Indefinite => serde_json::Value::Null,
        };
        entries.push(json!({
            "label": e.label,
            "weight": sig12(e.weight),
            "indefinite": matches!(e.posterior, Posterior::Indefinite),
            "posterior": posterior_value,
        }));
    }
    report.set_result("entries", serde_json::Value::Array(entries));

    let total = inst.apply_predual(&rho, &all)?;
    let mixture_residual = (total - mixture).norm();
    report.push_check(CheckLine::new("mixture_identity", mixture_residual, tolerance));
    report.push_check(CheckLine::new(
        "weights_normalized",
        (weight_sum - 1.0).abs(),
        tolerance,
    ));

    let pass = report.pass;
    report.emit(out)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_compose(
    first_path: &Path,
    second_path: &Path,
    state_path: &Path,
    out: Option<&Path>,
    tol_flag: Option<f64>,
) -> Result<i32, Box<dyn std::error::Error>> {
    let tolerance = resolve_tol(tol_flag, tol::PAIRING);
    let mut report = RunReport::new("compose");
    let first = match load_instrument(first_path, &mut report)? {
        Ok(inst) => inst,
        Err(code) => return Ok(code),
    };
    let second = match load_instrument(second_path, &mut report)? {
        Ok(inst) => inst,
        Err(code) => return Ok(code),
    };
    let rho = load_state(state_path, &mut report)?;

    let joint = joint_distribution(&second, &first, &rho)?;

    let mut table = serde_json::Map::new();
    for (t, t_label) in joint.second_labels.iter().enumerate() {
        let mut row = serde_json::Map::new();
        for (s, s_label) in joint.first_labels.iter().enumerate() {
            row.insert(s_label.clone(), json!(sig12(joint.prob[t][s])));
        }
        table.insert(t_label.clone(), serde_json::Value::Object(row));
    }
    report.set_result("joint", serde_json::Value::Object(table));

    // marginal over the second outcome must reproduce the first instrument
    let mut marginal_residual: f64 = 0.0;
    for (s, s_label) in joint.first_labels.iter().enumerate() {
        let direct = first.outcome_probability(&rho, &[s_label.as_str()])?;
        let summed: f64 = joint.prob.iter().map(|row| row[s]).sum();
        marginal_residual = marginal_residual.max((direct - summed).abs());
    }
    report.push_check(CheckLine::new(
        "marginal_consistency",
        marginal_residual,
        tolerance,
    ));
    let total: f64 = joint.prob.iter().flatten().sum();
    report.push_check(CheckLine::new("total_probability", (total - 1.0).abs(), tolerance));
    report.set_result(
        "second_marginal",
        json!(joint
            .second_marginal()
            .iter()
            .map(|p| sig12(*p))
            .collect::<Vec<_>>()),
    );

    let pass = report.pass;
    report.emit(out)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_localnet(
    net_path: &Path,
    inst_path: &Path,
    region: &str,
    collar: Option<&str>,
    seed: u64,
    out: Option<&Path>,
    tol_flag: Option<f64>,
) -> Result<i32, Box<dyn std::error::Error>> {
    let tolerance = resolve_tol(tol_flag, tol::IDENTITY_CHECK);
    let mut report = RunReport::new("localnet");
    report.digest_input(&net_path.display().to_string())?;
    let net_spec: NetSpec = read_json(net_path)?;
    let net = net_spec.to_net()?;

    let o1: Region = region.parse()?;
    let o2: Region = match collar {
        Some(c) => c.parse()?,
        None => o1,
    };
    net.check_region(&o1)?;
    net.check_region(&o2)?;

    let site_inst = match load_instrument(inst_path, &mut report)? {
        Ok(inst) => inst,
        Err(code) => return Ok(code),
    };
    let lifted = net.lift_instrument(&o1, &site_inst)?;
    let extended = net.extend_local(&lifted, &o1, &o2)?;

    let mut rng = sampling::rng(seed);
    let local_report = net.is_local_instrument(&extended, &o1, &o2, &mut rng, 4)?;
    report.push_check(CheckLine::new(
        "locality",
        local_report.locality_residual,
        tolerance,
    ));
    report.push_check(CheckLine::new("range", local_report.range_residual, tolerance));

    // restriction of the extension to A(O1) reproduces the input
    let alg1 = net.region_algebra(&o1)?;
    let mut restriction: f64 = 0.0;
    for s in 0..lifted.outcomes().len() {
        for e in alg1.basis_elements() {
            let x = alg1.embed(&e);
            restriction = restriction
                .max((extended.dual_atom(s, &x) - lifted.dual_atom(s, &x)).norm());
        }
    }
    report.push_check(CheckLine::new("restriction", restriction, tolerance));

    let global = canonical_extension(&extended)?;
    let intertwining = net.intertwining_check(&global, &o2)?;
    report.push_check(CheckLine::new("intertwining", intertwining, tolerance));

    report.set_result("region", json!(o1.to_string()));
    report.set_result("collar", json!(o2.to_string()));
    report.set_result("global_dim", json!(net.global_dim()));
    report.set_result("outcomes", json!(extended.outcomes().labels()));

    let pass = report.pass;
    report.emit(out)?;
    Ok(if pass { 0 } else { 1 })
}
