//! Command-line front end: solve, certify, check, dual.
//!
//! Exit codes are a contract: 0 success, 1 input error, 2 solve failure,
//! 3 certification failure, 4 verification failure.

use clap::{Args, Parser, Subcommand};
use ctlp::certify::{
    beta_sweep, check_beta_a, check_beta_fr, check_beta_rc, check_kkt, lemma1_witness,
    recover_multipliers, RegularityCertificate,
};
use ctlp::duality::{build_dual, complementary_slackness, duality_report, multiplier_to_dual};
use ctlp::instance::{load_instance, save_dual, CTLPInstance, Trajectory};
use ctlp::solver::solve;
use ctlp::timefunc::refine_grid;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INPUT: u8 = 1;
const EXIT_SOLVE: u8 = 2;
const EXIT_CERTIFY: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ctlp",
    about = "Solve and certify continuous-time linear programs with piecewise-polynomial data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Instance JSON file.
    instance: PathBuf,

    /// Directory for output artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve pointwise on a refined grid; writes solution.csv,
    /// multipliers.csv and solve_summary.json.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid density per breakpoint interval.
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
    /// Certify regularity of a trajectory; writes certificate.json.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory CSV (the candidate optimal solution).
        #[arg(long)]
        trajectory: PathBuf,
        /// Activity margin for the beta-active sets.
        #[arg(long, default_value_t = 1e-2)]
        beta: f64,
        /// Also certify at log-spaced beta values, format lo:hi:count.
        #[arg(long, value_parser = parse_sweep)]
        beta_sweep: Option<(f64, f64, usize)>,
    },
    /// Verify KKT, duality, and complementary slackness for a trajectory
    /// (multipliers recovered when not supplied); writes check_report.json.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory CSV (the candidate optimal solution).
        #[arg(long)]
        trajectory: PathBuf,
        /// Multiplier trajectory CSV; recovered from the certificate when
        /// absent.
        #[arg(long)]
        multipliers: Option<PathBuf>,
        /// Dual trajectory CSV; defaults to the negated multipliers.
        #[arg(long)]
        dual_trajectory: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        beta: f64,
    },
    /// Write the dual instance JSON.
    Dual {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_sweep(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:count".into());
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("bad lo: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("bad hi: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("bad count: {e}"))?;
    Ok((lo, hi, count))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_INPUT, e.to_string())
}

fn read_instance(path: &Path) -> Result<CTLPInstance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    load_instance(&text).map_err(input_err)
}

fn read_trajectory(path: &Path) -> Result<Trajectory, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    Trajectory::from_csv(&text).map_err(input_err)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| input_err(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_solve(common: &CommonArgs, nodes: usize) -> Result<(), Failure> {
    let inst = read_instance(&common.instance)?;
    let grid = refine_grid(inst.breakpoints(), nodes).map_err(input_err)?;
    let result = match solve(&inst, &grid) {
        Ok(r) => r,
        Err(e @ ctlp::Error::SolveFailed { .. }) => {
            return Err(Failure::new(EXIT_SOLVE, e.to_string()))
        }
        Err(e) => return Err(input_err(e)),
    };
    write_out(&common.out_dir, "solution.csv", &result.z.to_csv())?;
    write_out(&common.out_dir, "multipliers.csv", &result.u.to_csv())?;
    let summary = json!({
        "schema": 1,
        "version": env!("CARGO_PKG_VERSION"),
        "command": "solve",
        "objective": result.objective,
        "nodes": result.z.len(),
        "nodes_per_interval": nodes,
        "per_node_status": result.per_node_status,
    });
    write_out(
        &common.out_dir,
        "solve_summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    println!("objective {val:.12}", val = result.objective);
    Ok(())
}

fn certificate_json(cert: &RegularityCertificate) -> serde_json::Value {
    serde_json::to_value(cert).unwrap()
}

fn cmd_certify(
    common: &CommonArgs,
    trajectory: &Path,
    beta: f64,
    sweep: Option<(f64, f64, usize)>,
) -> Result<(), Failure> {
    let inst = read_instance(&common.instance)?;
    let z = read_trajectory(trajectory)?;
    let fr = check_beta_fr(&inst, &z, beta).map_err(input_err)?;
    let rc = check_beta_rc(&inst, &z, beta).map_err(input_err)?;
    let combined = check_beta_a(&inst, &z, beta).map_err(input_err)?;
    let lemma = lemma1_witness(&inst, &z, beta).ok();
    let sweep_entries = match sweep {
        Some((lo, hi, count)) => Some(beta_sweep(&inst, &z, lo, hi, count).map_err(input_err)?),
        None => None,
    };
    let doc = json!({
        "schema": 1,
        "version": env!("CARGO_PKG_VERSION"),
        "command": "certify",
        "beta": beta,
        "full_rank": certificate_json(&fr),
        "regularity": certificate_json(&rc),
        "beta_a": certificate_json(&combined),
        "lemma1_witness": lemma,
        "sweep": sweep_entries,
    });
    write_out(
        &common.out_dir,
        "certificate.json",
        &serde_json::to_string_pretty(&doc).unwrap(),
    )?;
    println!(
        "full_rank {fr_s}, regularity {rc_s} (isharp_in_i0 {ii}), beta_a {ba}",
        fr_s = fr.holds(),
        rc_s = rc.holds(),
        ii = rc.isharp_in_i0,
        ba = combined.holds(),
    );
    if fr.holds() || rc.holds() {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_CERTIFY,
            format!(
                "no certificate holds at beta = {beta}: {}",
                rc.failure_reason
                    .as_deref()
                    .unwrap_or("see certificate.json")
            ),
        ))
    }
}

fn cmd_check(
    common: &CommonArgs,
    trajectory: &Path,
    multipliers: Option<&Path>,
    dual_trajectory: Option<&Path>,
    beta: f64,
) -> Result<(), Failure> {
    let inst = read_instance(&common.instance)?;
    let z = read_trajectory(trajectory)?;
    let cert = check_beta_a(&inst, &z, beta).map_err(input_err)?;
    let u = match multipliers {
        Some(path) => read_trajectory(path)?,
        None => {
            if !cert.holds() {
                return Err(Failure::new(
                    EXIT_CERTIFY,
                    "no multipliers supplied and no certificate holds to recover them",
                ));
            }
            recover_multipliers(&inst, &z, beta, &cert)
                .map_err(input_err)?
                .u
        }
    };
    let w = match dual_trajectory {
        Some(path) => read_trajectory(path)?,
        None => multiplier_to_dual(&u),
    };
    let kkt = check_kkt(&inst, &z, &u).map_err(input_err)?;
    let duality = duality_report(&inst, &z, &w, Some(&cert)).map_err(input_err)?;
    let cs = complementary_slackness(&inst, &z, &w, Some(&cert)).map_err(input_err)?;
    let doc = json!({
        "schema": 1,
        "version": env!("CARGO_PKG_VERSION"),
        "command": "check",
        "beta": beta,
        "certificate": certificate_json(&cert),
        "kkt": kkt,
        "duality": duality,
        "complementary_slackness": cs,
    });
    write_out(
        &common.out_dir,
        "check_report.json",
        &serde_json::to_string_pretty(&doc).unwrap(),
    )?;
    println!(
        "kkt {k}, gap {g:.3e}, verdict {v:?}, cs {c:?}",
        k = kkt.pass,
        g = duality.gap,
        v = duality.verdict,
        c = cs.verdict,
    );
    let weak_violated = matches!(
        duality.verdict,
        ctlp::duality::DualityVerdict::WeakDualityViolated
    );
    let cs_failed = matches!(cs.verdict, ctlp::duality::CsVerdict::ConditionsFail);
    if !kkt.pass || weak_violated || cs_failed {
        return Err(Failure::new(
            EXIT_VERIFY,
            "verification failed; see check_report.json",
        ));
    }
    Ok(())
}

fn cmd_dual(common: &CommonArgs) -> Result<(), Failure> {
    let inst = read_instance(&common.instance)?;
    let dual = build_dual(&inst);
    write_out(&common.out_dir, "dual_instance.json", &save_dual(&dual))?;
    println!(
        "dual: {} variables, {} equality rows",
        dual.num_vars(),
        dual.num_eq_rows()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve { common, nodes } => cmd_solve(common, *nodes),
        Command::Certify {
            common,
            trajectory,
            beta,
            beta_sweep,
        } => cmd_certify(common, trajectory, *beta, *beta_sweep),
        Command::Check {
            common,
            trajectory,
            multipliers,
            dual_trajectory,
            beta,
        } => cmd_check(
            common,
            trajectory,
            multipliers.as_deref(),
            dual_trajectory.as_deref(),
            *beta,
        ),
        Command::Dual { common } => cmd_dual(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
