//! `boat`: command-line frontend for the balanced one-axis twisting
//! toolkit. Every subcommand is reproducible: parameters land in a run
//! manifest, numeric output is round-trip exact, and anything randomized
//! takes an explicit seed.

mod manifest;
mod timespec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use boat_core::{
    boat_circuit, certify, coherent_state, evolve, fidelity_bounds, full_protocol_with, ghz_check,
    verify_equivalence_capped, verify_k, Circuit, EquivalenceReport, GhzBlock,
    GhzReport, PhaseVector, ProbeSettings, ProtocolOptions, SymmetricState, SystemDims, Verdict,
    DENSE_VERIFY_CAP,
};
use manifest::{write_sidecar, RunManifest};
use timespec::parse_time_spec;

#[derive(Parser)]
#[command(
    name = "boat",
    version,
    about = "Balanced one-axis twisting: qudit GHZ preparation, MQC echo spectra, fidelity certification, and serial gate compilation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count nonzero Fourier coefficients over an (m, d) grid and compare
    /// with m^(d-1)/gcd(m, d); emits CSV.
    Table {
        /// Largest period m (grid starts at 2), at most 8
        #[arg(long, default_value_t = 6)]
        m_max: usize,
        /// Largest level count d (grid starts at 2), at most 7
        #[arg(long, default_value_t = 7)]
        d_max: usize,
        /// Write CSV here instead of stdout (adds a manifest sidecar)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evolve a coherent state and report GHZ formation at times 2pi/m.
    Evolve {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Evolution time: radians or '[k]pi[/m]' (e.g. '2pi/3')
        #[arg(long)]
        time: String,
        /// Comma-separated initial phases (d-1 values, radians); default 0
        #[arg(long)]
        phases: Option<String>,
        /// Write the state document here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate the qutrit echo protocol: fidelity curve, MQC spectrum,
    /// and coherence magnitudes.
    Mqc {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        p: i64,
        #[arg(long, default_value_t = 1)]
        q: i64,
        /// Collective dephasing strength applied in both protocol halves
        #[arg(long)]
        gamma: Option<f64>,
        /// Probe sweep resolution; default 4(|p|+|q|)N + 1
        #[arg(long)]
        samples: Option<usize>,
        /// Simulate readout with this many shots per sweep point
        #[arg(long)]
        shots: Option<u64>,
        /// RNG seed for shot sampling
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated preparation phases (2 values, radians)
        #[arg(long)]
        phases: Option<String>,
        /// Prefix for <prefix>_fidelity.csv, <prefix>_spectrum.csv,
        /// <prefix>_magnitudes.json
        #[arg(long, default_value = "mqc")]
        out_prefix: String,
    },
    /// Evaluate fidelity bounds for a measured GHZ block and certify
    /// multipartite entanglement against the (d-1)/d threshold.
    Certify {
        /// Path to a block JSON document:
        /// {"populations": [...], "magnitudes": [...], "phases": [...]?}
        #[arg(long)]
        block: PathBuf,
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Write the verdict document here as well
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compile the twisting evolution into swap-conjugated two-level
    /// pulses; optionally verify against the dense matrix exponential.
    Compile {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Evolution time: radians or '[k]pi[/m]'
        #[arg(long, default_value = "2pi/3")]
        time: String,
        /// Fixed entangling pair 'a,b' with a < b
        #[arg(long, default_value = "0,1")]
        fixed_pair: String,
        /// Verify the circuit unitary against exp(-i H tau); requires
        /// d^N within the dense cap
        #[arg(long)]
        verify: bool,
        /// Write the circuit document here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum CliError {
    /// Bad arguments or inputs; exit code 2.
    Usage(String),
    /// The computation itself failed or refused; exit code 1.
    Computation(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }

    fn computation(e: impl std::fmt::Display) -> Self {
        Self::Computation(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Computation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Table { m_max, d_max, output } => cmd_table(m_max, d_max, output),
        Command::Evolve {
            n,
            d,
            time,
            phases,
            output,
        } => cmd_evolve(n, d, &time, phases.as_deref(), output),
        Command::Mqc {
            n,
            p,
            q,
            gamma,
            samples,
            shots,
            seed,
            phases,
            out_prefix,
        } => cmd_mqc(n, p, q, gamma, samples, shots, seed, phases.as_deref(), &out_prefix),
        Command::Certify { block, d, output } => cmd_certify(&block, d, output),
        Command::Compile {
            n,
            d,
            time,
            fixed_pair,
            verify,
            output,
        } => cmd_compile(n, d, &time, &fixed_pair, verify, output),
    }
}

/// 17 significant digits: round-trip exact for f64.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_phases(text: Option<&str>, d: usize) -> Result<PhaseVector, CliError> {
    match text {
        None => Ok(PhaseVector::zero(d)),
        Some(t) => {
            let values: Vec<f64> = t
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("phase '{s}' is not a number")))
                })
                .collect::<Result<_, _>>()?;
            if values.len() != d - 1 {
                return Err(CliError::Usage(format!(
                    "expected {} phases for d = {d}, got {}",
                    d - 1,
                    values.len()
                )));
            }
            PhaseVector::new(values).map_err(CliError::usage)
        }
    }
}

fn expand_cap_override() -> Option<usize> {
    std::env::var("BOAT_EXPAND_CAP").ok().and_then(|v| v.parse().ok())
}

fn cmd_table(m_max: usize, d_max: usize, output: Option<PathBuf>) -> Result<(), CliError> {
    if !(2..=8).contains(&m_max) || !(2..=7).contains(&d_max) {
        return Err(CliError::Usage(format!(
            "grid limits out of range: need 2 <= m_max <= 8 and 2 <= d_max <= 7, got {m_max}, {d_max}"
        )));
    }
    let mut csv = String::from("m,d,counted,formula,agree\n");
    for m in 2..=m_max {
        for d in 2..=d_max {
            let check = verify_k(m, d).map_err(CliError::computation)?;
            csv.push_str(&format!(
                "{m},{d},{},{},{}\n",
                check.counted, check.formula, check.agree
            ));
        }
    }
    match output {
        None => print!("{csv}"),
        Some(path) => {
            fs::write(&path, &csv).map_err(|e| io_error(&path, e))?;
            let manifest = RunManifest::new(
                "table",
                [
                    ("m_max".to_string(), m_max.to_string()),
                    ("d_max".to_string(), d_max.to_string()),
                ],
            );
            write_sidecar(&manifest, &[&path]).map_err(|e| io_error(&path, e))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EvolveDocument {
    manifest: RunManifest,
    state: SymmetricState,
    ghz_report: Option<GhzReport>,
}

fn cmd_evolve(
    n: usize,
    d: usize,
    time: &str,
    phases: Option<&str>,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let dims = SystemDims::new(n, d).map_err(CliError::usage)?;
    let t = parse_time_spec(time).map_err(CliError::Usage)?;
    let phases = parse_phases(phases, d)?;
    let initial = coherent_state(dims, &phases).map_err(CliError::computation)?;
    let state = evolve(&initial, t);
    let ghz_report = t
        .fourier_period()
        .map(|m| ghz_check(m, d))
        .transpose()
        .map_err(CliError::computation)?;

    let manifest = RunManifest::new(
        "evolve",
        [
            ("n".to_string(), n.to_string()),
            ("d".to_string(), d.to_string()),
            ("time".to_string(), time.to_string()),
            (
                "phases".to_string(),
                phases
                    .phases()
                    .iter()
                    .map(|p| fmt(*p))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ],
    );
    if let Some(report) = &ghz_report {
        println!(
            "t = {}: {} nonzero Fourier components, is_ghz = {}",
            fmt(t.value()),
            report.nonzero_count,
            report.is_ghz
        );
    } else {
        println!("t = {} (not of the form 2pi/m; no GHZ report)", fmt(t.value()));
    }
    let doc = EvolveDocument {
        manifest,
        state,
        ghz_report,
    };
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    match output {
        None => println!("{text}"),
        Some(path) => {
            fs::write(&path, &text).map_err(|e| io_error(&path, e))?;
            write_sidecar(&doc.manifest, &[&path]).map_err(|e| io_error(&path, e))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MagnitudesDocument {
    manifest: RunManifest,
    n: usize,
    d: usize,
    p: i64,
    q: i64,
    gamma: Option<f64>,
    samples: usize,
    magnitudes: boat_core::CoherenceMagnitudes,
}

#[allow(clippy::too_many_arguments)]
fn cmd_mqc(
    n: usize,
    p: i64,
    q: i64,
    gamma: Option<f64>,
    samples: Option<usize>,
    shots: Option<u64>,
    seed: u64,
    phases: Option<&str>,
    out_prefix: &str,
) -> Result<(), CliError> {
    let dims = SystemDims::new(n, 3).map_err(CliError::usage)?;
    let settings = ProbeSettings::new(p, q).map_err(CliError::usage)?;
    let phases = parse_phases(phases, 3)?;
    if let Some(g) = gamma {
        if g.is_nan() || g < 0.0 {
            return Err(CliError::Usage(format!("gamma must be >= 0, got {g}")));
        }
    }
    let options = ProtocolOptions {
        samples,
        shots,
        seed,
    };
    let run = full_protocol_with(dims, &phases, settings, gamma, options).map_err(|e| {
        match e {
            boat_core::Error::Undersampled { .. } => CliError::usage(e),
            other => CliError::computation(other),
        }
    })?;

    let fidelity_path = PathBuf::from(format!("{out_prefix}_fidelity.csv"));
    let spectrum_path = PathBuf::from(format!("{out_prefix}_spectrum.csv"));
    let magnitudes_path = PathBuf::from(format!("{out_prefix}_magnitudes.json"));

    let mut curve = String::from("phi,fidelity\n");
    for (phi, f) in run.phi.iter().zip(&run.fidelity) {
        curve.push_str(&format!("{},{}\n", fmt(*phi), fmt(*f)));
    }
    fs::write(&fidelity_path, curve).map_err(|e| io_error(&fidelity_path, e))?;

    let mut spectrum = String::from("m,I_m\n");
    for (m, v) in run.spectrum.iter() {
        spectrum.push_str(&format!("{m},{}\n", fmt(v)));
    }
    fs::write(&spectrum_path, spectrum).map_err(|e| io_error(&spectrum_path, e))?;

    let manifest = RunManifest::new(
        "mqc",
        [
            ("n".to_string(), n.to_string()),
            ("p".to_string(), p.to_string()),
            ("q".to_string(), q.to_string()),
            (
                "gamma".to_string(),
                gamma.map(fmt).unwrap_or_else(|| "none".into()),
            ),
            ("samples".to_string(), run.samples.to_string()),
            (
                "shots".to_string(),
                shots.map(|s| s.to_string()).unwrap_or_else(|| "exact".into()),
            ),
            ("seed".to_string(), seed.to_string()),
        ],
    );
    let doc = MagnitudesDocument {
        manifest: manifest.clone(),
        n,
        d: 3,
        p,
        q,
        gamma,
        samples: run.samples,
        magnitudes: run.magnitudes,
    };
    fs::write(
        &magnitudes_path,
        serde_json::to_string_pretty(&doc).expect("serializable"),
    )
    .map_err(|e| io_error(&magnitudes_path, e))?;
    write_sidecar(
        &manifest,
        &[&fidelity_path, &spectrum_path, &magnitudes_path],
    )
    .map_err(|e| io_error(&fidelity_path, e))?;

    println!(
        "N = {n}, (p, q) = ({p}, {q}), I_{{2N}} = {}; |rho_01| = {}, |rho_02| = {}, |rho_12| = {}",
        fmt(run.spectrum.get(2 * n as i64)),
        fmt(run.magnitudes.rho01),
        fmt(run.magnitudes.rho02),
        fmt(run.magnitudes.rho12),
    );
    println!(
        "wrote {}, {}, {}",
        fidelity_path.display(),
        spectrum_path.display(),
        magnitudes_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct VerdictDocument {
    manifest: RunManifest,
    verdict: Verdict,
}

fn cmd_certify(block_path: &Path, d: usize, output: Option<PathBuf>) -> Result<(), CliError> {
    if d < 2 {
        return Err(CliError::Usage(format!("d must be >= 2, got {d}")));
    }
    let text = fs::read_to_string(block_path).map_err(|e| io_error(block_path, e))?;
    // serde errors carry line/column diagnostics
    let block: GhzBlock = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", block_path.display())))?;
    let bounds = fidelity_bounds(&block).map_err(CliError::computation)?;
    let verdict = certify(&bounds, d);

    println!(
        "{}",
        serde_json::to_string_pretty(&verdict).expect("serializable")
    );
    if let Some(path) = output {
        let manifest = RunManifest::new(
            "certify",
            [
                ("block".to_string(), block_path.display().to_string()),
                ("d".to_string(), d.to_string()),
            ],
        );
        let doc = VerdictDocument { manifest, verdict };
        fs::write(
            &path,
            serde_json::to_string_pretty(&doc).expect("serializable"),
        )
        .map_err(|e| io_error(&path, e))?;
        write_sidecar(&doc.manifest, &[&path]).map_err(|e| io_error(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct CircuitDocument {
    manifest: RunManifest,
    circuit: Circuit,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<EquivalenceReport>,
}

fn cmd_compile(
    n: usize,
    d: usize,
    time: &str,
    fixed_pair: &str,
    verify: bool,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let dims = SystemDims::new(n, d).map_err(CliError::usage)?;
    let t = parse_time_spec(time).map_err(CliError::Usage)?;
    let pair = {
        let parts: Vec<&str> = fixed_pair.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(CliError::Usage(format!(
                "fixed pair must be 'a,b', got '{fixed_pair}'"
            )));
        }
        let a: usize = parts[0]
            .parse()
            .map_err(|_| CliError::Usage(format!("level '{}' is not an integer", parts[0])))?;
        let b: usize = parts[1]
            .parse()
            .map_err(|_| CliError::Usage(format!("level '{}' is not an integer", parts[1])))?;
        (a, b)
    };
    let circuit = boat_circuit(dims, t, pair).map_err(CliError::usage)?;

    let verification = if verify {
        let cap = expand_cap_override().unwrap_or(DENSE_VERIFY_CAP);
        let full = dims.full_size().unwrap_or(usize::MAX);
        if full > cap {
            return Err(CliError::Usage(format!(
                "d^N = {full} exceeds the dense verification cap {cap}; \
                 raise BOAT_EXPAND_CAP or use the symmetric-basis state-level \
                 check instead of --verify"
            )));
        }
        let report = verify_equivalence_capped(&circuit, t, cap).map_err(CliError::computation)?;
        println!(
            "unitary residual = {}, state residual = {}",
            fmt(report.unitary_residual),
            fmt(report.state_residual)
        );
        Some(report)
    } else {
        None
    };

    let manifest = RunManifest::new(
        "compile",
        [
            ("n".to_string(), n.to_string()),
            ("d".to_string(), d.to_string()),
            ("time".to_string(), time.to_string()),
            ("fixed_pair".to_string(), fixed_pair.to_string()),
            ("verify".to_string(), verify.to_string()),
        ],
    );
    println!(
        "{} twisting pulses, {} swaps",
        circuit.oat_pulse_count(),
        circuit.swap_count()
    );
    let doc = CircuitDocument {
        manifest,
        circuit,
        verification,
    };
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    match output {
        None => println!("{text}"),
        Some(path) => {
            fs::write(&path, &text).map_err(|e| io_error(&path, e))?;
            write_sidecar(&doc.manifest, &[&path]).map_err(|e| io_error(&path, e))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
