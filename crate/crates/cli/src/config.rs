//! Experiment configuration files.
//!
//! A config is a TOML document with a `pipeline` key, a `[model]` table and
//! exactly the parameter tables that pipeline reads. Unknown keys and
//! unused tables are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qextra_core::annealer::{AdaptiveConfig, EvolveConfig, SplitOrder};
use qextra_core::extrapolation::ExtrapolationMode;
use qextra_core::hamiltonian::{random_field_ising, tfim, transverse_field, xyz_chain, PauliSum};
use qextra_core::vqe::{build_hardware_efficient_4q, build_hva, AnsatzCircuit, NoiseSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Oracle,
    Anneal,
    AnnealAdaptive,
    Vqe,
    Qite,
    Theory,
    ErrSweep,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Oracle => "oracle",
            Pipeline::Anneal => "anneal",
            Pipeline::AnnealAdaptive => "anneal-adaptive",
            Pipeline::Vqe => "vqe",
            Pipeline::Qite => "qite",
            Pipeline::Theory => "theory",
            Pipeline::ErrSweep => "err-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `−J Σ Z_j Z_{j+1} − h Σ X_j`
    Tfim {
        n: usize,
        #[serde(default = "one")]
        j: f64,
        #[serde(default = "one")]
        h: f64,
        #[serde(default = "yes")]
        periodic: bool,
    },
    /// Open XYZ chain `Σ (Jx XX + Jy YY + Jz ZZ)`.
    Xyz {
        n: usize,
        #[serde(default = "two")]
        jx: f64,
        #[serde(default = "one")]
        jy: f64,
        #[serde(default = "half")]
        jz: f64,
    },
    /// Open random-field Ising chain with fields drawn from `field_seed`.
    Rfim {
        n: usize,
        #[serde(default)]
        field_seed: u64,
    },
    /// `−Σ X_j`
    Transverse { n: usize },
    /// Explicit Pauli-sum text, one `coeff WORD` per line.
    Pauli { terms: String },
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn build(&self) -> Result<PauliSum, CliError> {
        let h = match self {
            ModelSpec::Tfim { n, j, h, periodic } => tfim(*n, *j, *h, *periodic),
            ModelSpec::Xyz { n, jx, jy, jz } => xyz_chain(*n, *jx, *jy, *jz),
            ModelSpec::Rfim { n, field_seed } => random_field_ising(*n, *field_seed),
            ModelSpec::Transverse { n } => transverse_field(*n),
            ModelSpec::Pauli { terms } => terms.parse(),
        };
        h.map_err(|e| CliError::Schema(format!("model: {e}")))
    }
}

/// Integrator settings shared by the annealing pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_order")]
    pub order: SplitOrder,
    #[serde(default = "yes")]
    pub check_halving: bool,
    #[serde(default = "default_halving_tolerance")]
    pub halving_tolerance: f64,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: usize,
}

fn default_dt() -> f64 {
    EvolveConfig::default().dt
}
fn default_order() -> SplitOrder {
    EvolveConfig::default().order
}
fn default_halving_tolerance() -> f64 {
    EvolveConfig::default().halving_tolerance
}
fn default_max_halvings() -> usize {
    EvolveConfig::default().max_halvings
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let d = EvolveConfig::default();
        Self {
            dt: d.dt,
            order: d.order,
            check_halving: d.check_halving,
            halving_tolerance: d.halving_tolerance,
            max_halvings: d.max_halvings,
        }
    }
}

impl IntegratorSpec {
    pub fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig {
            dt: self.dt,
            order: self.order,
            check_halving: self.check_halving,
            halving_tolerance: self.halving_tolerance,
            max_halvings: self.max_halvings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Number of lowest levels to report.
    #[serde(default = "default_oracle_levels")]
    pub levels: usize,
}

fn default_oracle_levels() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealSpec {
    pub t_a: Vec<f64>,
    pub mode: ExtrapolationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSpec {
    #[serde(default = "adaptive_eta")]
    pub eta: f64,
    #[serde(default = "adaptive_eps_tol")]
    pub eps_tol: f64,
    #[serde(default = "adaptive_points")]
    pub points: usize,
    #[serde(default = "adaptive_mode")]
    pub mode: ExtrapolationMode,
    #[serde(default = "adaptive_t_init")]
    pub t_init: f64,
    #[serde(default = "adaptive_t_max")]
    pub t_max: f64,
}

fn adaptive_eta() -> f64 {
    AdaptiveConfig::default().eta
}
fn adaptive_eps_tol() -> f64 {
    AdaptiveConfig::default().eps_tol
}
fn adaptive_points() -> usize {
    AdaptiveConfig::default().points
}
fn adaptive_mode() -> ExtrapolationMode {
    AdaptiveConfig::default().mode
}
fn adaptive_t_init() -> f64 {
    AdaptiveConfig::default().t_init
}
fn adaptive_t_max() -> f64 {
    AdaptiveConfig::default().t_max
}

impl AdaptiveSpec {
    pub fn adaptive_config(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            eta: self.eta,
            eps_tol: self.eps_tol,
            points: self.points,
            mode: self.mode,
            t_init: self.t_init,
            t_max: self.t_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzChoice {
    Hva,
    HardwareEfficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerChoice {
    Bfgs,
    Spsa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeSpec {
    pub ansatz: AnsatzChoice,
    /// HVA layers; ignored by the hardware-efficient ansatz.
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "vqe_restarts")]
    pub restarts: usize,
    pub optimizer: OptimizerChoice,
    pub max_evals: usize,
}

fn vqe_restarts() -> usize {
    10
}

impl VqeSpec {
    pub fn circuit(&self, n: usize) -> Result<AnsatzCircuit, CliError> {
        match self.ansatz {
            AnsatzChoice::Hva => {
                let p = self.depth.ok_or_else(|| CliError::Schema("vqe: the hva ansatz needs `depth`".into()))?;
                build_hva(n, p).map_err(|e| CliError::Schema(format!("vqe: {e}")))
            }
            AnsatzChoice::HardwareEfficient => {
                if self.depth.is_some() {
                    return Err(CliError::Schema("vqe: `depth` applies only to the hva ansatz".into()));
                }
                if n != 4 {
                    return Err(CliError::Schema(format!("vqe: the hardware-efficient ansatz acts on 4 qubits, model has {n}")));
                }
                Ok(build_hardware_efficient_4q())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Two-qubit depolarizing rate.
    pub eps: f64,
    /// Standard deviation of the Gaussian measurement error.
    pub sigma: f64,
}

impl NoiseConfig {
    pub fn spec(&self, seed: u64) -> NoiseSpec {
        NoiseSpec { eps: self.eps, sigma: self.sigma, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QiteSpec {
    #[serde(default = "qite_dtau")]
    pub dtau: f64,
    pub steps: usize,
    #[serde(default = "qite_reg")]
    pub reg_lambda: f64,
}

fn qite_dtau() -> f64 {
    qextra_core::qite::DEFAULT_DTAU
}
fn qite_reg() -> f64 {
    qextra_core::qite::DEFAULT_REGULARIZATION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySpec {
    pub t_a: Vec<f64>,
    #[serde(default = "theory_grid")]
    pub grid_points: usize,
    /// Tracked levels including the ground level; all levels when omitted.
    #[serde(default)]
    pub levels: Option<usize>,
    /// Also evolve the Schrödinger equation and report the exact overlaps.
    #[serde(default = "yes")]
    pub compare_evolution: bool,
}

fn theory_grid() -> usize {
    4001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrSweepSpec {
    pub t_a: Vec<f64>,
    pub mode: ExtrapolationMode,
    /// Noise levels as multiples of the mean residual energy, mean variance
    /// and mean annealing time of the base sweep.
    pub multipliers: Vec<f64>,
    #[serde(default = "sweep_samples")]
    pub samples: usize,
}

fn sweep_samples() -> usize {
    qextra_core::extrapolation::NoiseSweepSpec::DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out-dir` takes precedence.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<String>,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anneal: Option<AnnealSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vqe: Option<VqeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qite: Option<QiteSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err_sweep: Option<ErrSweepSpec>,
}

/// Largest register the dense kernels accept from a config.
const MAX_QUBITS: usize = 20;
const MAX_NOISY_QUBITS: usize = 10;

fn require<'a, T>(section: &'a Option<T>, name: &str, pipeline: Pipeline) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| CliError::Schema(format!("pipeline '{}' requires a [{name}] table", pipeline.name())))
}

fn check_times(name: &str, ts: &[f64]) -> Result<(), CliError> {
    if ts.len() < 3 {
        return Err(CliError::Schema(format!("{name}.t_a needs at least 3 annealing times")));
    }
    if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Schema(format!("{name}.t_a must be positive and strictly increasing")));
    }
    Ok(())
}

fn schema<E: std::fmt::Display>(ctx: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Schema(format!("{ctx}: {e}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema checks beyond what deserialization enforces: the pipeline's
    /// tables are present, no foreign tables are present, and every value
    /// is in range.
    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.pipeline;
        let present = [
            ("integrator", self.integrator.is_some()),
            ("oracle", self.oracle.is_some()),
            ("anneal", self.anneal.is_some()),
            ("adaptive", self.adaptive.is_some()),
            ("vqe", self.vqe.is_some()),
            ("noise", self.noise.is_some()),
            ("qite", self.qite.is_some()),
            ("theory", self.theory.is_some()),
            ("err_sweep", self.err_sweep.is_some()),
        ];
        let allowed: &[&str] = match p {
            Pipeline::Oracle => &["oracle"],
            Pipeline::Anneal => &["anneal", "integrator"],
            Pipeline::AnnealAdaptive => &["adaptive", "integrator"],
            Pipeline::Vqe => &["vqe", "noise"],
            Pipeline::Qite => &["qite", "noise"],
            Pipeline::Theory => &["theory", "integrator"],
            Pipeline::ErrSweep => &["err_sweep", "integrator"],
        };
        if let Some((name, _)) = present.iter().find(|(name, on)| *on && !allowed.contains(name)) {
            return Err(CliError::Schema(format!("table [{name}] is not used by pipeline '{}'", p.name())));
        }

        let h = self.model.build()?;
        let n = h.n();
        if n > MAX_QUBITS {
            return Err(CliError::Schema(format!("model has {n} qubits; at most {MAX_QUBITS} are supported")));
        }
        let needs_traceless = matches!(p, Pipeline::Anneal | Pipeline::AnnealAdaptive | Pipeline::Theory | Pipeline::ErrSweep);
        if needs_traceless && n < 2 {
            return Err(CliError::Schema("annealing pipelines need at least 2 qubits".into()));
        }
        if let Some(i) = &self.integrator {
            if !(i.dt > 0.0 && i.dt.is_finite()) || !(i.halving_tolerance > 0.0) {
                return Err(CliError::Schema("integrator.dt and integrator.halving_tolerance must be positive".into()));
            }
        }
        if let Some(ns) = &self.noise {
            ns.spec(0).validate().map_err(schema("noise"))?;
            if ns.eps > 0.0 && n > MAX_NOISY_QUBITS {
                return Err(CliError::Schema(format!("noisy runs are limited to {MAX_NOISY_QUBITS} qubits")));
            }
        }

        match p {
            Pipeline::Oracle => {
                let o = require(&self.oracle, "oracle", p)?;
                if o.levels == 0 {
                    return Err(CliError::Schema("oracle.levels must be positive".into()));
                }
            }
            Pipeline::Anneal => check_times("anneal", &require(&self.anneal, "anneal", p)?.t_a)?,
            Pipeline::AnnealAdaptive => {
                require(&self.adaptive, "adaptive", p)?.adaptive_config().validate().map_err(schema("adaptive"))?
            }
            Pipeline::Vqe => {
                let v = require(&self.vqe, "vqe", p)?;
                v.circuit(n)?;
                if v.restarts == 0 || v.max_evals == 0 {
                    return Err(CliError::Schema("vqe.restarts and vqe.max_evals must be positive".into()));
                }
            }
            Pipeline::Qite => {
                let q = require(&self.qite, "qite", p)?;
                let mut qc = qextra_core::qite::QiteConfig::new(q.dtau, q.steps);
                qc.reg_lambda = q.reg_lambda;
                qc.validate().map_err(schema("qite"))?;
                if q.steps < 3 {
                    return Err(CliError::Schema("qite.steps must be at least 3 for a regression".into()));
                }
            }
            Pipeline::Theory => {
                let t = require(&self.theory, "theory", p)?;
                if t.t_a.is_empty() || t.t_a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(CliError::Schema("theory.t_a must list positive annealing times".into()));
                }
                if t.grid_points < 5 || (t.grid_points - 1) % 2 != 0 {
                    return Err(CliError::Schema("theory.grid_points must be odd and at least 5".into()));
                }
                if let Some(k) = t.levels {
                    if k < 2 || k > h.dim() {
                        return Err(CliError::Schema(format!("theory.levels must lie in 2..={}", h.dim())));
                    }
                }
            }
            Pipeline::ErrSweep => {
                let s = require(&self.err_sweep, "err_sweep", p)?;
                check_times("err_sweep", &s.t_a)?;
                if s.multipliers.is_empty() || s.multipliers.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                    return Err(CliError::Schema("err_sweep.multipliers must be a nonempty list of nonnegative numbers".into()));
                }
                if s.samples == 0 {
                    return Err(CliError::Schema("err_sweep.samples must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form; the
    /// output directory is excluded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn integrator(&self) -> EvolveConfig {
        self.integrator.clone().unwrap_or_default().evolve_config()
    }
}
