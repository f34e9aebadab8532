//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use rggmod_core::continuum::ContinuumPartition;
use rggmod_core::domain::{AxisBox, Density, DensityBounds, Domain, Region};
use rggmod_core::kernel::{Kernel, Profile};
use rggmod_core::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};

use crate::rate::{eps_schedule, validate_rate, Condition, RateCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Balance,
    Perimeter,
    Qstar,
    Consistency,
    Resolution,
}

impl ExperimentName {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::Balance => "balance",
            ExperimentName::Perimeter => "perimeter",
            ExperimentName::Qstar => "qstar",
            ExperimentName::Consistency => "consistency",
            ExperimentName::Resolution => "resolution",
        }
    }

    pub fn from_name(name: &str) -> anyhow::Result<Self> {
        Ok(match name {
            "balance" => ExperimentName::Balance,
            "perimeter" => ExperimentName::Perimeter,
            "qstar" => ExperimentName::Qstar,
            "consistency" => ExperimentName::Consistency,
            "resolution" => ExperimentName::Resolution,
            other => bail!("unknown experiment `{other}`"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Disc { center: [f64; 2], radius: f64 },
}

impl DomainSpec {
    pub fn build(&self) -> anyhow::Result<Domain> {
        Ok(match self {
            DomainSpec::Box { lo, hi } => Domain::axis_box(lo, hi)?,
            DomainSpec::Disc { center, radius } => Domain::disc(*center, *radius)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    /// `min(peak · exp(−decay ‖x − center‖²), cap)`, normalized; the bounds
    /// are declared, not inferred.
    TruncatedBump { center: Vec<f64>, decay: f64, peak: f64, cap: f64, lower: f64, upper: f64, lipschitz: f64 },
}

impl DensitySpec {
    pub fn build(&self, domain: Domain, quad: &QuadratureRule) -> anyhow::Result<Density> {
        Ok(match self {
            DensitySpec::Uniform => Density::uniform(domain),
            DensitySpec::TruncatedBump { center, decay, peak, cap, lower, upper, lipschitz } => {
                let bounds = DensityBounds { lower: *lower, upper: *upper, lipschitz: *lipschitz };
                Density::truncated_bump(domain, center, *decay, *peak, *cap, bounds, quad)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// A continuum partition in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    Whole,
    /// Cuts perpendicular to `axis`; regions ordered along the axis.
    Slabs { axis: usize, cuts: Vec<f64> },
    /// Rectilinear grid in the plane, axis 0 fastest.
    Grid { cuts0: Vec<f64>, cuts1: Vec<f64> },
    /// Disc split by the line `normal·(x − center) = offset`.
    DiscHalves { normal: [f64; 2], offset: f64 },
    /// Each region a union of disjoint boxes.
    Regions { regions: Vec<Vec<BoxSpec>> },
}

impl PartitionSpec {
    pub fn build(&self, domain: &Domain) -> anyhow::Result<ContinuumPartition> {
        Ok(match self {
            PartitionSpec::Whole => ContinuumPartition::whole(domain.clone()),
            PartitionSpec::Slabs { axis, cuts } => ContinuumPartition::slabs(domain, *axis, cuts)?,
            PartitionSpec::Grid { cuts0, cuts1 } => ContinuumPartition::grid(domain, cuts0, cuts1)?,
            PartitionSpec::DiscHalves { normal, offset } => ContinuumPartition::disc_halves(domain, *normal, *offset)?,
            PartitionSpec::Regions { regions } => {
                let regions = regions
                    .iter()
                    .map(|boxes| {
                        let boxes = boxes.iter().map(|b| AxisBox::new(&b.lo, &b.hi)).collect::<Result<Vec<_>, _>>()?;
                        Ok(Region::boxes(boxes))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                ContinuumPartition::new(domain.clone(), regions)?
            }
        })
    }

    /// Best-effort inverse of [`PartitionSpec::build`].
    pub fn from_partition(p: &ContinuumPartition) -> Self {
        let regions = p
            .regions()
            .iter()
            .map(|r| match r {
                Region::Boxes(bs) => bs.iter().map(|b| BoxSpec { lo: b.lo().to_vec(), hi: b.hi().to_vec() }).collect(),
                Region::Whole => {
                    let b = p.domain().bounding_box();
                    vec![BoxSpec { lo: b.lo().to_vec(), hi: b.hi().to_vec() }]
                }
                Region::DiscCut { .. } => Vec::new(),
            })
            .collect();
        if let [Region::DiscCut { normal, offset }, _] = p.regions() {
            return PartitionSpec::DiscHalves { normal: *normal, offset: *offset };
        }
        PartitionSpec::Regions { regions }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerChoice {
    /// Spectral then refinement, plus greedy restarts; best Q kept.
    Multistart,
    Greedy,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSchedule {
    pub kappa: f64,
    pub beta_lambda: Vec<f64>,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self { kappa: 1.0, beta_lambda: vec![0.0, 1.0, 2.0] }
    }
}

fn default_kernel() -> String {
    "indicator".into()
}
fn default_trials() -> usize {
    1
}
fn default_restarts() -> usize {
    4
}
fn default_nodes() -> usize {
    rggmod_core::quadrature::DEFAULT_NODES
}
fn default_domain() -> DomainSpec {
    DomainSpec::Box { lo: vec![0.0], hi: vec![1.0] }
}
fn default_k() -> usize {
    2
}
fn default_alpha() -> f64 {
    1.0
}

/// Everything an experiment run needs. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    #[serde(default = "default_domain")]
    pub domain: DomainSpec,
    #[serde(default = "DensitySpec::default_uniform")]
    pub density: DensitySpec,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    pub n: Vec<usize>,
    /// `eps = n^{-beta}`; exclusive with `eps`.
    #[serde(default)]
    pub beta: Option<f64>,
    /// One eps per entry of `n`.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "OptimizerChoice::default_choice")]
    pub optimizer: OptimizerChoice,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Fixed continuum partition (balance, perimeter); defaults to the
    /// reference minimizer for `k`.
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
    /// Cluster counts for the qstar experiment; defaults to `[k]`.
    #[serde(default)]
    pub k_list: Option<Vec<usize>>,
    #[serde(default)]
    pub lambda: Option<LambdaSchedule>,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl DensitySpec {
    fn default_uniform() -> Self {
        DensitySpec::Uniform
    }
}

impl OptimizerChoice {
    fn default_choice() -> Self {
        OptimizerChoice::Multistart
    }
}

/// Built objects shared by every trial.
pub struct Setup {
    pub domain: Domain,
    pub density: Density,
    pub kernel: Kernel,
    pub quad: QuadratureRule,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(!self.n.is_empty(), "n grid is empty");
        ensure!(self.n.windows(2).all(|w| w[0] < w[1]), "n grid must be strictly increasing");
        ensure!(self.n[0] >= 1, "n must be at least 1");
        ensure!(self.trials >= 1, "trials must be at least 1");
        ensure!(self.k >= 1, "k must be at least 1");
        ensure!(self.alpha.is_finite(), "alpha must be finite");
        ensure!(self.restarts >= 1, "restarts must be at least 1");
        match (&self.beta, &self.eps) {
            (Some(b), None) => ensure!(*b > 0.0 && b.is_finite(), "beta must be positive"),
            (None, Some(e)) => {
                ensure!(e.len() == self.n.len(), "eps list needs one entry per n");
                ensure!(e.iter().all(|&x| x > 0.0 && x.is_finite()), "eps must be positive");
            }
            (Some(_), Some(_)) => bail!("give either beta or eps, not both"),
            (None, None) => bail!("one of beta or eps is required"),
        }
        if let Some(ks) = &self.k_list {
            ensure!(!ks.is_empty() && ks.iter().all(|&k| k >= 1), "k_list entries must be at least 1");
        }
        if let Some(t) = self.threads {
            ensure!(t >= 1, "threads must be at least 1");
        }
        Profile::from_name(&self.kernel)?;
        Ok(())
    }

    pub fn eps_for(&self, index: usize) -> f64 {
        match (&self.eps, self.beta) {
            (Some(e), _) => e[index],
            (None, Some(b)) => eps_schedule(self.n[index], b),
            (None, None) => unreachable!("validated config has beta or eps"),
        }
    }

    pub fn setup(&self) -> anyhow::Result<Setup> {
        let quad = QuadratureRule::gauss_legendre(self.quadrature_nodes)?;
        let domain = self.domain.build()?;
        let density = self.density.build(domain.clone(), &quad)?;
        let kernel = Kernel::new(Profile::from_name(&self.kernel)?, domain.dim())?;
        Ok(Setup { domain, density, kernel, quad })
    }

    /// Rate-condition warnings for a `beta` schedule; never fatal.
    pub fn rate_warnings(&self) -> Vec<String> {
        let Some(beta) = self.beta else { return Vec::new() };
        let d = match &self.domain {
            DomainSpec::Box { lo, .. } => lo.len(),
            DomainSpec::Disc { .. } => 2,
        };
        [Condition::I1, Condition::I2]
            .into_iter()
            .filter_map(|c| match validate_rate(self.alpha, d, beta, c) {
                RateCheck::Valid => None,
                RateCheck::Invalid(reason) => Some(reason),
            })
            .collect()
    }
}
