//! Run orchestration: builds a circuit from a config, drives it through the
//! MPS or MPO engine with ledger-driven truncation, and packages the result
//! as a serializable report.

use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::budget::{FidelityLedger, Strategy, TruncationRecord};
use crate::circuit::{gen_cheng_random, gen_haar_layers, gen_mirror, Circuit, CircuitError};
use crate::mpo::{MpoState, NoiseModel};
use crate::mps::MpsState;
use crate::oracle::{self, OracleError};
use crate::SimError;

/// Relative slack when checking the certified estimate against the
/// requested floor; absorbs product round-off only.
const GUARANTEE_SLACK: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("circuit source `file` requires --circuit-file")]
    MissingCircuitFile,
    #[error("noise is only simulable in mpo mode")]
    NoiseRequiresMpo,
    #[error("chi cap must be at least 1")]
    ZeroChiCap,
    #[error("failed to read circuit file: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Which chain representation carries the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Pure statevector as a matrix product state.
    Mps,
    /// Density operator as a matrix product operator.
    Mpo,
}

/// Circuit source: a seeded generator or an explicit file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CircuitKind {
    /// Brickwork layers of Haar-random two-qubit gates.
    Haar,
    /// Alternating one-qubit Haar / two-qubit brickwork layers.
    Cheng,
    /// A Haar brickwork half followed by its adjoint; `depth` counts the
    /// forward half's layers.
    Mirror,
    /// JSON circuit loaded from `circuit_file`.
    File,
}

/// Everything needed to reproduce a run. Serialized verbatim into the
/// report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub circuit: CircuitKind,
    pub circuit_file: Option<PathBuf>,
    pub qubits: usize,
    pub depth: usize,
    pub seed: u64,
    pub fidelity_min: f64,
    pub strategy: Strategy,
    pub chi_cap: Option<usize>,
    pub eps1: f64,
    pub eps2: f64,
    pub oracle_check: bool,
}

/// One truncation event as reported. Mirrors `TruncationRecord` minus
/// internal diagnostics; `gate_index` is the position of the triggering op
/// in the circuit's op list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerRow {
    pub gate_index: usize,
    pub bond_site: usize,
    pub chi_before: usize,
    pub chi_after: usize,
    pub target_f: f64,
    pub achieved_f: f64,
    pub capped: bool,
}

impl LedgerRow {
    fn from_record(record: &TruncationRecord, gate_index: usize) -> Self {
        LedgerRow {
            gate_index,
            bond_site: record.bond_site,
            chi_before: record.chi_before,
            chi_after: record.chi_after,
            target_f: record.target_f,
            achieved_f: record.achieved_f,
            capped: record.capped,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub ledger: Vec<LedgerRow>,
    /// Bond extents after each circuit layer.
    pub bond_profiles: Vec<Vec<usize>>,
    pub estimate: f64,
    /// Noisy runs report the estimate as a lower bound on the final-state
    /// fidelity; noiseless runs report it as an approximation.
    pub is_lower_bound: bool,
    /// True when no cap fired and the estimate clears `fidelity_min`.
    pub guarantee_held: bool,
    /// Largest bond extent over all layer snapshots.
    pub peak_chi: usize,
    pub wall_ms: f64,
    pub oracle_fidelity: Option<f64>,
}

/// Adaptive run side by side with a fixed-cap rerun at the adaptive peak.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub adaptive: RunReport,
    pub fixed: RunReport,
    /// adaptive wall time over fixed wall time.
    pub wall_ratio: f64,
    /// adaptive estimate minus fixed estimate.
    pub estimate_delta: f64,
}

/// Execute one simulation according to `config`.
pub fn run(config: &RunConfig) -> Result<RunReport, RunError> {
    validate_config(config)?;
    let circuit = build_circuit(config)?;
    match config.mode {
        Mode::Mps => run_mps(config, &circuit),
        Mode::Mpo => run_mpo(config, &circuit),
    }
}

/// Rerun `config` as a standard fixed-cap simulation: every bond is trimmed
/// of numerically zero weight and capped at `chi_max`, with no fidelity
/// targeting. The ledger still records what each cut achieved.
pub fn run_fixed_chi(config: &RunConfig, chi_max: usize) -> Result<RunReport, RunError> {
    let mut fixed = config.clone();
    fixed.fidelity_min = 1.0;
    fixed.strategy = Strategy::Naive;
    fixed.chi_cap = Some(chi_max);
    run(&fixed)
}

/// Run adaptively, then rerun with the bond cap fixed at the adaptive
/// run's peak.
pub fn compare(config: &RunConfig) -> Result<ComparisonReport, RunError> {
    let adaptive = run(config)?;
    let fixed = run_fixed_chi(config, adaptive.peak_chi)?;
    let wall_ratio = adaptive.wall_ms / fixed.wall_ms;
    let estimate_delta = adaptive.estimate - fixed.estimate;
    Ok(ComparisonReport {
        adaptive,
        fixed,
        wall_ratio,
        estimate_delta,
    })
}

fn validate_config(config: &RunConfig) -> Result<(), RunError> {
    if config.mode == Mode::Mps && (config.eps1 > 0.0 || config.eps2 > 0.0) {
        return Err(RunError::NoiseRequiresMpo);
    }
    if config.chi_cap == Some(0) {
        return Err(RunError::ZeroChiCap);
    }
    Ok(())
}

fn build_circuit(config: &RunConfig) -> Result<Circuit, RunError> {
    let circuit = match config.circuit {
        CircuitKind::Haar => gen_haar_layers(config.qubits, config.depth, config.seed),
        CircuitKind::Cheng => gen_cheng_random(config.qubits, config.depth, config.seed),
        CircuitKind::Mirror => gen_mirror(config.qubits, config.depth, config.seed),
        CircuitKind::File => {
            let path = config
                .circuit_file
                .as_ref()
                .ok_or(RunError::MissingCircuitFile)?;
            Circuit::from_json(&std::fs::read_to_string(path)?)?
        }
    };
    circuit.validate()?;
    Ok(circuit)
}

/// Tracks which layer boundaries have been passed and snapshots bond
/// extents at each one.
struct LayerSnapshots {
    ends: Vec<usize>,
    next: usize,
    profiles: Vec<Vec<usize>>,
}

impl LayerSnapshots {
    fn new(ends: Vec<usize>) -> Self {
        LayerSnapshots {
            ends,
            next: 0,
            profiles: Vec::new(),
        }
    }

    fn after_op(&mut self, ops_done: usize, bonds: &dyn Fn() -> Vec<usize>) {
        while self.next < self.ends.len() && self.ends[self.next] == ops_done {
            self.profiles.push(bonds());
            self.next += 1;
        }
    }

    fn finish(mut self, bonds: &dyn Fn() -> Vec<usize>) -> Vec<Vec<usize>> {
        while self.next < self.ends.len() {
            self.profiles.push(bonds());
            self.next += 1;
        }
        self.profiles
    }
}

fn peak_over(profiles: &[Vec<usize>]) -> usize {
    profiles
        .iter()
        .flat_map(|p| p.iter().copied())
        .max()
        .unwrap_or(1)
        .max(1)
}

fn finish_report(
    config: &RunConfig,
    ledger: &FidelityLedger,
    rows: Vec<LedgerRow>,
    bond_profiles: Vec<Vec<usize>>,
    wall_ms: f64,
    oracle_fidelity: Option<f64>,
) -> RunReport {
    let certificate = ledger.certify();
    let any_capped = rows.iter().any(|row| row.capped);
    let guarantee_held = !any_capped
        && certificate.estimate >= config.fidelity_min * (1.0 - GUARANTEE_SLACK);
    let peak_chi = peak_over(&bond_profiles);
    RunReport {
        config: config.clone(),
        ledger: rows,
        bond_profiles,
        estimate: certificate.estimate,
        is_lower_bound: certificate.is_lower_bound,
        guarantee_held,
        peak_chi,
        wall_ms,
        oracle_fidelity,
    }
}

fn run_mps(config: &RunConfig, circuit: &Circuit) -> Result<RunReport, RunError> {
    let mut state = MpsState::zero_state(circuit.n_qubits)?;
    let mut ledger = FidelityLedger::new(
        config.fidelity_min,
        circuit.two_qubit_count(),
        config.strategy,
    )
    .map_err(SimError::from)?;
    let mut rows = Vec::new();
    let mut snapshots = LayerSnapshots::new(circuit.layer_ends());

    let clock = Instant::now();
    for (op_index, op) in circuit.ops.iter().enumerate() {
        match op.sites.as_slice() {
            [site] => state.apply_1q(&op.matrix, *site)?,
            [left, _] => {
                let center = state.center();
                if center < *left {
                    state.canonicalize(*left)?;
                } else if center > *left + 1 {
                    state.canonicalize(*left + 1)?;
                }
                let record = state.apply_2q(&op.matrix, *left, &mut ledger, config.chi_cap)?;
                rows.push(LedgerRow::from_record(&record, op_index));
            }
            _ => unreachable!("validated circuit"),
        }
        snapshots.after_op(op_index + 1, &|| state.bond_dims());
    }
    let bond_profiles = snapshots.finish(&|| state.bond_dims());
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;

    let oracle_fidelity = if config.oracle_check {
        let reference = oracle::dense_run(circuit)?;
        let dense = Array1::from_vec(state.to_dense()?);
        Some(oracle::fidelity_pure_dense(&reference, &dense)?)
    } else {
        None
    };
    Ok(finish_report(
        config,
        &ledger,
        rows,
        bond_profiles,
        wall_ms,
        oracle_fidelity,
    ))
}

fn run_mpo(config: &RunConfig, circuit: &Circuit) -> Result<RunReport, RunError> {
    let noise = NoiseModel::new(config.eps1, config.eps2)?;
    let mut state = MpoState::zero_state(circuit.n_qubits)?;
    // Each two-qubit gate truncates once, plus once more for its trailing
    // two-site channel when that channel is active.
    let cuts_per_gate = if noise.eps2 > 0.0 { 2 } else { 1 };
    let mut ledger = FidelityLedger::new(
        config.fidelity_min,
        circuit.two_qubit_count() * cuts_per_gate,
        config.strategy,
    )
    .map_err(SimError::from)?;
    ledger.set_noisy_regime(!noise.is_noiseless());
    let mut rows = Vec::new();
    let mut snapshots = LayerSnapshots::new(circuit.layer_ends());

    let clock = Instant::now();
    for (op_index, op) in circuit.ops.iter().enumerate() {
        if let Some(record) =
            state.apply_unitary(&op.matrix, &op.sites, &mut ledger, config.chi_cap)?
        {
            rows.push(LedgerRow::from_record(&record, op_index));
        }
        match op.sites.as_slice() {
            [site] if noise.eps1 > 0.0 => {
                state.apply_depolarizing(&[*site], noise.eps1, &mut ledger, config.chi_cap)?;
            }
            [left, _] if noise.eps2 > 0.0 => {
                if let Some(record) = state.apply_depolarizing(
                    &[*left, *left + 1],
                    noise.eps2,
                    &mut ledger,
                    config.chi_cap,
                )? {
                    rows.push(LedgerRow::from_record(&record, op_index));
                }
            }
            _ => {}
        }
        snapshots.after_op(op_index + 1, &|| state.bond_dims());
    }
    let bond_profiles = snapshots.finish(&|| state.bond_dims());
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;

    let oracle_fidelity = if config.oracle_check {
        let reference = oracle::dense_run_noisy(circuit, &noise)?;
        let dense = state.to_dense_matrix()?;
        Some(oracle::fidelity_wang_dense(&reference, &dense)?)
    } else {
        None
    };
    Ok(finish_report(
        config,
        &ledger,
        rows,
        bond_profiles,
        wall_ms,
        oracle_fidelity,
    ))
}
