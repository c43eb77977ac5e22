//! Experiment configuration: a single TOML file of flat key/value sections,
//! overridable from the CLI, hashed into the output manifest for
//! reproducibility.

use crate::forcing::{verify_embedding, KickBasis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const KNOWN_KINDS: &[&str] = &[
    "simulate",
    "contract",
    "omega",
    "midpoint-gap",
    "stationary",
    "dual-lipschitz",
    "oracle-check",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: String,
    pub out_dir: String,
    pub workers: usize,
    pub svg: bool,
    pub override_assumptions: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            kind: "simulate".into(),
            out_dir: "out".into(),
            workers: 4,
            svg: false,
            override_assumptions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub substeps: u32,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 512, substeps: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    /// Substeps between recorded snapshots.
    pub snapshot_every: u32,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            horizon: 30.0,
            snapshot_every: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Min-plus kernel name from the registry.
    pub kernel: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            kernel: "monotone".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingSection {
    /// "kicked" or "white".
    pub mode: String,
    /// Splitting interval for white mode.
    pub dt: f64,
    pub basis: Vec<String>,
    pub sigma: Vec<f64>,
    pub seed: u64,
}

impl Default for ForcingSection {
    fn default() -> Self {
        ForcingSection {
            mode: "kicked".into(),
            dt: 0.05,
            basis: vec!["cos:1".into(), "sin:1".into(), "cos:2".into(), "sin:2".into()],
            sigma: KickBasis::default_sigmas(),
            seed: 20260810,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    /// Sampler specs; experiments cycle through them for diversity.
    pub samplers: Vec<String>,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            samplers: vec![
                "fourier".into(),
                "sawtooth:teeth=3,amplitude=1.0".into(),
                "fourier:amplitude=0.5,modes=8,decay=1.2".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractSection {
    pub seeds: u64,
    pub p: Vec<f64>,
}

impl Default for ContractSection {
    fn default() -> Self {
        ContractSection {
            seeds: 20,
            p: vec![1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaSection {
    pub seeds: u64,
}

impl Default for OmegaSection {
    fn default() -> Self {
        OmegaSection { seeds: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MidpointGapSection {
    pub seeds: u64,
    pub t_grid: Vec<f64>,
    pub harvest_per_t: usize,
}

impl Default for MidpointGapSection {
    fn default() -> Self {
        MidpointGapSection {
            seeds: 20,
            t_grid: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            harvest_per_t: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarySection {
    pub members: u64,
    pub burn_in: f64,
}

impl Default for StationarySection {
    fn default() -> Self {
        StationarySection {
            members: 24,
            burn_in: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualLipschitzSection {
    pub members: u64,
    pub p: f64,
    pub t_grid: Vec<f64>,
}

impl Default for DualLipschitzSection {
    fn default() -> Self {
        DualLipschitzSection {
            members: 32,
            p: 1.0,
            t_grid: vec![0.0, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheckSection {
    pub profiles: usize,
}

impl Default for OracleCheckSection {
    fn default() -> Self {
        OracleCheckSection { profiles: 25 }
    }
}

/// The full experiment configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub grid: GridSection,
    pub run: RunSection,
    pub solver: SolverSection,
    pub forcing: ForcingSection,
    pub initial: InitialSection,
    pub contract: ContractSection,
    pub omega: OmegaSection,
    pub midpoint_gap: MidpointGapSection,
    pub stationary: StationarySection,
    pub dual_lipschitz: DualLipschitzSection,
    pub oracle_check: OracleCheckSection,
}

/// Outcome of the standing-assumption checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    /// Hash of the canonical serialized form.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml().as_bytes());
        hex_string(&h.finalize())
    }

    /// Hash of the fields an oracle validation covers (grid, solver,
    /// forcing); experiments sharing this scope share a validation stamp.
    pub fn validation_scope_hash(&self) -> String {
        let scope = format!(
            "n={};substeps={};kernel={};mode={};dt={};basis={:?};sigma={:?}",
            self.grid.n,
            self.grid.substeps,
            self.solver.kernel,
            self.forcing.mode,
            self.forcing.dt,
            self.forcing.basis,
            self.forcing.sigma,
        );
        let mut h = Sha256::new();
        h.update(scope.as_bytes());
        hex_string(&h.finalize())[..16].to_string()
    }

    pub fn forcing_path(&self, member: u64) -> Result<crate::forcing::ForcingPath, String> {
        let seed = crate::rng::derive_stream(self.forcing.seed, "forcing", member);
        let law = crate::forcing::KickLaw::new(self.forcing.sigma.clone());
        match self.forcing.mode.as_str() {
            "kicked" => Ok(crate::forcing::ForcingPath::kicked(seed, law)),
            "white" => {
                crate::forcing::ForcingPath::white(self.forcing.dt, self.run.horizon, seed, law)
                    .map_err(|e| e.to_string())
            }
            other => Err(format!("unknown forcing mode '{other}'")),
        }
    }

    pub fn basis(&self) -> Result<KickBasis, String> {
        KickBasis::from_descriptors(self.grid.n, &self.forcing.basis).map_err(|e| e.to_string())
    }

    pub fn kernel(&self) -> Result<&'static dyn crate::kernel::MinPlusKernel, String> {
        crate::kernel::by_name(&self.solver.kernel).ok_or_else(|| {
            format!(
                "unknown kernel '{}' (known: {})",
                self.solver.kernel,
                crate::kernel::registry()
                    .iter()
                    .map(|k| k.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
    }

    /// Checks the standing assumptions: positive numeric fields, a basis
    /// that embeds the circle, a non-degenerate absolutely continuous law,
    /// and feasible discretization parameters.
    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        let mut warnings = Vec::new();

        if !KNOWN_KINDS.contains(&self.experiment.kind.as_str()) {
            failures.push(format!(
                "unknown experiment kind '{}' (known: {})",
                self.experiment.kind,
                KNOWN_KINDS.join(", ")
            ));
        }
        if self.grid.n < crate::field::MIN_GRID {
            failures.push(format!("grid n = {} below minimum", self.grid.n));
        }
        if self.grid.substeps == 0 {
            failures.push("substeps must be >= 1".into());
        }
        if !(self.run.horizon > 0.0) {
            failures.push("horizon must be positive".into());
        }
        if self.experiment.workers == 0 {
            failures.push("workers must be >= 1".into());
        }
        if self.forcing.basis.is_empty() {
            failures.push("basis must be nonempty".into());
        }
        if self.forcing.sigma.len() != self.forcing.basis.len() {
            failures.push(format!(
                "sigma list length {} does not match basis size {}",
                self.forcing.sigma.len(),
                self.forcing.basis.len()
            ));
        }
        if self.forcing.mode == "white" && !(self.forcing.dt > 0.0 && self.forcing.dt <= 0.1) {
            failures.push(format!("white-mode dt {} outside (0, 0.1]", self.forcing.dt));
        }
        if self.forcing.mode != "white" && self.forcing.mode != "kicked" {
            failures.push(format!("unknown forcing mode '{}'", self.forcing.mode));
        }
        if let Err(e) = self.kernel() {
            failures.push(e);
        }
        for spec in &self.initial.samplers {
            if let Err(e) = crate::samplers::sampler_from_spec(spec) {
                failures.push(e);
            }
        }

        match self.basis() {
            Err(e) => failures.push(e),
            Ok(basis) => {
                match verify_embedding(&basis, 1e-6) {
                    Err(e) => failures.push(e.to_string()),
                    Ok(report) if !report.pass => {
                        let witness = report
                            .injectivity_witness
                            .map(|(x, y, d)| {
                                format!("points x={x:.4} and y={y:.4} map within {d:.2e}")
                            })
                            .or_else(|| {
                                report
                                    .immersion_witness
                                    .map(|(x, g)| format!("derivative norm {g:.2e} at x={x:.4}"))
                            })
                            .unwrap_or_default();
                        failures.push(format!(
                            "basis fails the embedding hypothesis: {witness}"
                        ));
                    }
                    Ok(_) => {}
                }
                let dd = basis.max_second_difference();
                if dd > 1e4 {
                    warnings.push(format!(
                        "basis second differences reach {dd:.1e}; potentials may be too rough"
                    ));
                }
            }
        }

        if self.forcing.sigma.iter().all(|s| *s == 0.0) {
            warnings.push(
                "degenerate forcing: zero lies in the support trivially but the dynamics \
                 is deterministic"
                    .into(),
            );
        }
        // Winding feasibility: a conservative velocity scale of 10 must give
        // a small window at the configured substep length.
        let dsub = if self.forcing.mode == "white" {
            self.forcing.dt
        } else {
            1.0 / self.grid.substeps as f64
        };
        let w = crate::solver::auto_winding_bound(10.0, dsub);
        if w > 16 {
            warnings.push(format!(
                "substep length {dsub} gives winding window {w}; flights will be slow"
            ));
        }

        ValidationReport {
            pass: failures.is_empty(),
            failures,
            warnings,
        }
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
