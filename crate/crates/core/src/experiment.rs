//! Config-driven experiments with CSV outputs.
//!
//! A config is a JSON object with a `kind` and the keys that kind needs:
//!
//! ```json
//! {
//!   "kind": "bound",
//!   "layout": { "checkerboard": { "n": 10, "layers": 5, "topology": "ring" } },
//!   "hamiltonian": "1.0 IIIIIXIIII",
//!   "output": "fig2c_bound.csv"
//! }
//! ```
//!
//! Every output file starts with a comment line carrying the SHA-256 of the
//! effective config, the seed and the derivative convention.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{AnsatzLayout, LayoutSpec};
use crate::design::{
    exact_variance_rational, fmt_sci, heatmap_csv, rational_to_f64, variance_heatmap,
    GeneratorChoice, HeatmapMode,
};
use crate::pauli::{Hamiltonian, Pauli};
use crate::sim::{
    block_averages, mc_param_variances, mc_variance, param_variances_csv, Convention, DiffTarget,
    GateFamily, ParamVariance, VarianceEstimate,
};
use crate::tpe::{tpe_csv, tpe_report};
use crate::{Error, Result};

pub const DEFAULT_TPE_SAMPLES: usize = 100_000;

/// Variance gaps below this are round-off (derivatives under `1e-10`) and get
/// a z-score of zero.
pub const VARIANCE_FLOOR: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Bound,
    Exact,
    Mc,
    Tpe,
    Additivity,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bound => "bound",
            ExperimentKind::Exact => "exact",
            ExperimentKind::Mc => "mc",
            ExperimentKind::Tpe => "tpe",
            ExperimentKind::Additivity => "additivity",
            ExperimentKind::OracleCheck => "oracle-check",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, ExperimentKind::Bound | ExperimentKind::Exact)
    }

    /// Parametric sampling reports `Half`; the design engine and the Haar
    /// oracle differentiate `exp(-iθF)` and report `Full`.
    fn default_convention(self) -> Convention {
        match self {
            ExperimentKind::Mc | ExperimentKind::Additivity => Convention::Half,
            _ => Convention::Full,
        }
    }
}

/// A Hamiltonian as one string or as a list of lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianText {
    Text(String),
    Lines(Vec<String>),
}

impl HamiltonianText {
    pub fn parse(&self, n_qubits: usize) -> Result<Hamiltonian> {
        match self {
            HamiltonianText::Text(t) => Hamiltonian::parse(t, n_qubits),
            HamiltonianText::Lines(lines) => Hamiltonian::parse(&lines.join("\n"), n_qubits),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianText>,
    /// `[H1, H2]` for additivity runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonians: Option<Vec<HamiltonianText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<GateFamily>,
    /// Family names for `tpe`, or `["all"]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<Convention>,
    /// Pauli letter placed on each block's first qubit (default `Z`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<char>,
    /// Exact rational arithmetic for `exact` runs.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub rational: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Extra diagnostic columns (trace norm for `tpe`).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub debug: bool,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// Everything a run needs, checked and parsed.
#[derive(Clone, Debug)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub layout: Option<AnsatzLayout>,
    pub hamiltonians: Vec<Hamiltonian>,
    pub families: Vec<GateFamily>,
    pub convention: Convention,
    pub generator: Pauli,
    pub output: PathBuf,
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if o.samples.is_some() {
            self.samples = o.samples;
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        self
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialization cannot fail");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Check kind-specific requirements and parse every embedded input.
    pub fn plan(&self, out_dir: Option<&Path>) -> Result<Plan> {
        let kind = self.kind;
        let need = |present: bool, key: &str| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "kind `{}` requires `{key}`",
                    kind.name()
                )))
            }
        };
        let forbid = |present: bool, key: &str| -> Result<()> {
            if present {
                Err(Error::Config(format!(
                    "kind `{}` does not use `{key}`",
                    kind.name()
                )))
            } else {
                Ok(())
            }
        };
        if kind.is_stochastic() {
            need(self.seed.is_some(), "seed")?;
        }

        let layout = match (&self.layout, kind) {
            (None, ExperimentKind::Tpe) => None,
            (Some(_), ExperimentKind::Tpe) => {
                return Err(Error::Config("kind `tpe` does not use `layout`".into()))
            }
            (None, _) => {
                return Err(Error::Config(format!(
                    "kind `{}` requires `layout`",
                    kind.name()
                )))
            }
            (Some(spec), _) => Some(spec.build()?),
        };
        let n = layout.as_ref().map_or(0, |l| l.n_qubits());

        let hamiltonians = match kind {
            ExperimentKind::Tpe => {
                forbid(self.hamiltonian.is_some(), "hamiltonian")?;
                forbid(self.hamiltonians.is_some(), "hamiltonians")?;
                Vec::new()
            }
            ExperimentKind::Additivity => {
                forbid(self.hamiltonian.is_some(), "hamiltonian")?;
                let hs = self.hamiltonians.as_ref().ok_or_else(|| {
                    Error::Config("kind `additivity` requires `hamiltonians`".into())
                })?;
                if hs.len() != 2 {
                    return Err(Error::Config(format!(
                        "`hamiltonians` must hold exactly two entries, got {}",
                        hs.len()
                    )));
                }
                hs.iter().map(|h| h.parse(n)).collect::<Result<_>>()?
            }
            _ => {
                forbid(self.hamiltonians.is_some(), "hamiltonians")?;
                let h = self.hamiltonian.as_ref().ok_or_else(|| {
                    Error::Config(format!("kind `{}` requires `hamiltonian`", kind.name()))
                })?;
                vec![h.parse(n)?]
            }
        };

        let families = match kind {
            ExperimentKind::Tpe => {
                forbid(self.family.is_some(), "family")?;
                let names = self
                    .families
                    .as_ref()
                    .ok_or_else(|| Error::Config("kind `tpe` requires `families`".into()))?;
                parse_families(names)?
            }
            ExperimentKind::Mc | ExperimentKind::Additivity => {
                forbid(self.families.is_some(), "families")?;
                let f = self.family.ok_or_else(|| {
                    Error::Config(format!("kind `{}` requires `family`", kind.name()))
                })?;
                if kind == ExperimentKind::Additivity && f == GateFamily::Haar4 {
                    return Err(Error::Config("additivity needs a parametric family".into()));
                }
                if f == GateFamily::NumberConserving {
                    return Err(Error::UnsupportedGateSlot {
                        family: f.name().into(),
                        index: 0,
                    });
                }
                vec![f]
            }
            _ => {
                forbid(self.family.is_some(), "family")?;
                forbid(self.families.is_some(), "families")?;
                Vec::new()
            }
        };

        match kind {
            ExperimentKind::Bound | ExperimentKind::Exact => {
                forbid(self.samples.is_some(), "samples")?;
                forbid(self.seed.is_some(), "seed")?;
            }
            ExperimentKind::Tpe => {
                if self.samples.is_some_and(|s| s < 1000) {
                    return Err(Error::Config("tpe needs at least 1000 samples".into()));
                }
            }
            _ => {
                need(self.samples.is_some(), "samples")?;
                if self.samples.is_some_and(|s| s < 2) {
                    return Err(Error::Config("need at least 2 samples".into()));
                }
            }
        }
        if self.rational && kind != ExperimentKind::Exact {
            return Err(Error::Config(
                "`rational` only applies to kind `exact`".into(),
            ));
        }
        if self.debug && kind != ExperimentKind::Tpe {
            return Err(Error::Config("`debug` only applies to kind `tpe`".into()));
        }

        let generator = match self.generator {
            None => Pauli::Z,
            Some(c) => Pauli::from_char(c)
                .ok_or_else(|| Error::Config(format!("generator must be X, Y or Z, got {c:?}")))?,
        };
        if self.generator.is_some() && self.family.is_some_and(|f| f != GateFamily::Haar4) {
            return Err(Error::Config(
                "`generator` only applies to Haar blocks".into(),
            ));
        }
        let convention = self.convention.unwrap_or(kind.default_convention());
        if kind == ExperimentKind::Tpe && self.convention.is_some() {
            return Err(Error::Config(
                "kind `tpe` has no derivative convention".into(),
            ));
        }

        let output = self
            .output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", kind.name())));
        let output = match out_dir {
            Some(dir) => dir.join(output.file_name().ok_or_else(|| {
                Error::Config(format!("output {} has no file name", output.display()))
            })?),
            None => output,
        };

        Ok(Plan {
            config: self.clone(),
            layout,
            hamiltonians,
            families,
            convention,
            generator,
            output,
            config_hash: self.hash(),
        })
    }
}

fn parse_families(names: &[String]) -> Result<Vec<GateFamily>> {
    if names.is_empty() {
        return Err(Error::Config("`families` is empty".into()));
    }
    if names.iter().any(|n| n == "all") {
        if names.len() > 1 {
            return Err(Error::Config(
                "`all` cannot be combined with other families".into(),
            ));
        }
        return Ok(GateFamily::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| {
            n.parse()
                .map_err(|_| Error::Config(format!("unknown family {n:?}")))
        })
        .collect()
}

impl Plan {
    fn header(&self) -> String {
        let seed = self
            .config
            .seed
            .map_or("none".to_string(), |s| s.to_string());
        let convention = match self.config.kind {
            ExperimentKind::Tpe => "none",
            _ => self.convention.name(),
        };
        format!(
            "# config_hash={} seed={} convention={}\n",
            self.config_hash, seed, convention
        )
    }

    /// Variances are computed in the native convention of each backend and
    /// rescaled here.
    fn scale_from(&self, native: Convention) -> f64 {
        match (native, self.convention) {
            (Convention::Half, Convention::Full) => 4.0,
            (Convention::Full, Convention::Half) => 0.25,
            _ => 1.0,
        }
    }

    fn samples(&self) -> usize {
        self.config.samples.unwrap_or(DEFAULT_TPE_SAMPLES)
    }

    fn seed(&self) -> u64 {
        self.config.seed.unwrap_or(0)
    }

    fn layout(&self) -> &AnsatzLayout {
        self.layout.as_ref().expect("planned kinds with a layout")
    }

    /// Run the experiment and write its files. Returns the paths written.
    pub fn execute(&self) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        let header = self.header();
        match self.config.kind {
            ExperimentKind::Bound | ExperimentKind::Exact => {
                let body = self.heatmap()?;
                files.push(write_output(&self.output, &header, &body)?);
            }
            ExperimentKind::Mc => {
                let (main, blocks) = self.monte_carlo()?;
                let note =
                    "# block value = arithmetic mean of the per-parameter variances in the block\n";
                files.push(write_output(&self.output, &header, &main)?);
                if let Some(blocks) = blocks {
                    let path = sibling(&self.output, "_blocks");
                    files.push(write_output(&path, &format!("{header}{note}"), &blocks)?);
                }
            }
            ExperimentKind::Tpe => {
                let reports = self
                    .families
                    .iter()
                    .map(|&f| tpe_report(f, self.samples(), self.seed(), self.config.debug))
                    .collect::<Result<Vec<_>>>()?;
                files.push(write_output(&self.output, &header, &tpe_csv(&reports))?);
            }
            ExperimentKind::Additivity => {
                files.push(write_output(&self.output, &header, &self.additivity()?)?);
            }
            ExperimentKind::OracleCheck => {
                files.push(write_output(&self.output, &header, &self.oracle_check()?)?);
            }
        }
        Ok(files)
    }

    fn heatmap(&self) -> Result<String> {
        let layout = self.layout();
        let h = &self.hamiltonians[0];
        let choice = GeneratorChoice::FirstQubit(self.generator);
        let mut values = if self.config.rational {
            layout
                .blocks()
                .iter()
                .map(|b| {
                    let diff = choice.diff_spec(layout, b)?;
                    Ok((
                        b.id,
                        rational_to_f64(&exact_variance_rational(h, layout, &diff)?),
                    ))
                })
                .collect::<Result<BTreeMap<_, _>>>()?
        } else {
            let mode = match self.config.kind {
                ExperimentKind::Bound => HeatmapMode::Bound,
                _ => HeatmapMode::Exact,
            };
            variance_heatmap(h, layout, mode, choice)?
        };
        let k = self.scale_from(Convention::Full);
        values.values_mut().for_each(|v| *v *= k);
        Ok(heatmap_csv(layout, &values))
    }

    fn monte_carlo(&self) -> Result<(String, Option<String>)> {
        let layout = self.layout();
        let h = &self.hamiltonians[0];
        let family = self.families[0];
        if family == GateFamily::Haar4 {
            let choice = GeneratorChoice::FirstQubit(self.generator);
            let k = self.scale_from(Convention::Full);
            let mut out = String::from("block_id,layer,qubits,variance,std_error,samples,seed\n");
            for b in layout.blocks() {
                let diff = choice.diff_spec(layout, b)?;
                let est = mc_variance(
                    layout,
                    family,
                    h,
                    &DiffTarget::Block(diff),
                    self.samples(),
                    self.seed(),
                )?;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    b.id,
                    b.layer,
                    join_qubits(&b.qubits),
                    fmt_sci(k * est.variance),
                    fmt_sci(k * est.std_error),
                    est.sample_count,
                    est.seed
                );
            }
            return Ok((out, None));
        }
        let rows = self.scaled(mc_param_variances(
            layout,
            family,
            h,
            self.samples(),
            self.seed(),
        )?);
        Ok((
            param_variances_csv(&rows),
            Some(heatmap_csv(layout, &block_averages(&rows))),
        ))
    }

    fn scaled(&self, mut rows: Vec<ParamVariance>) -> Vec<ParamVariance> {
        let k = self.scale_from(Convention::Half);
        for r in rows.iter_mut() {
            r.estimate.variance *= k;
            r.estimate.std_error *= k;
        }
        rows
    }

    fn additivity(&self) -> Result<String> {
        let layout = self.layout();
        let family = self.families[0];
        let (h1, h2) = (&self.hamiltonians[0], &self.hamiltonians[1]);
        let sum = h1.sum(h2)?;
        // same seed for all three runs: the differences see common random numbers
        let run = |h: &Hamiltonian| -> Result<Vec<ParamVariance>> {
            Ok(self.scaled(mc_param_variances(
                layout,
                family,
                h,
                self.samples(),
                self.seed(),
            )?))
        };
        let (r1, r2, r12) = (run(h1)?, run(h2)?, run(&sum)?);
        let mut out = String::from(
            "param_index,block_id,layer,slot,var_h1,se_h1,var_h2,se_h2,var_sum,se_sum,difference,combined_se,z\n",
        );
        for ((a, b), c) in r1.iter().zip(&r2).zip(&r12) {
            let (diff, se) = additivity_gap(&a.estimate, &b.estimate, &c.estimate);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{:.4}",
                a.info.index,
                a.info.block_id,
                a.info.layer,
                a.info.slot,
                fmt_sci(a.estimate.variance),
                fmt_sci(a.estimate.std_error),
                fmt_sci(b.estimate.variance),
                fmt_sci(b.estimate.std_error),
                fmt_sci(c.estimate.variance),
                fmt_sci(c.estimate.std_error),
                fmt_sci(diff),
                fmt_sci(se),
                z_score(diff, se)
            );
        }
        Ok(out)
    }

    fn oracle_check(&self) -> Result<String> {
        let layout = self.layout();
        let h = &self.hamiltonians[0];
        let choice = GeneratorChoice::FirstQubit(self.generator);
        let k = self.scale_from(Convention::Full);
        let exact = variance_heatmap(h, layout, HeatmapMode::Exact, choice)?;
        let mut out = String::from("block_id,layer,qubits,exact,mc,std_error,z\n");
        for b in layout.blocks() {
            let diff = choice.diff_spec(layout, b)?;
            let est = mc_variance(
                layout,
                GateFamily::Haar4,
                h,
                &DiffTarget::Block(diff),
                self.samples(),
                self.seed(),
            )?;
            let e = k * exact[&b.id];
            let (m, se) = (k * est.variance, k * est.std_error);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.4}",
                b.id,
                b.layer,
                join_qubits(&b.qubits),
                fmt_sci(e),
                fmt_sci(m),
                fmt_sci(se),
                z_score(m - e, se)
            );
        }
        Ok(out)
    }
}

/// `Var(H1+H2) − Var(H1) − Var(H2)` and its combined standard error.
pub fn additivity_gap(
    h1: &VarianceEstimate,
    h2: &VarianceEstimate,
    sum: &VarianceEstimate,
) -> (f64, f64) {
    let diff = sum.variance - h1.variance - h2.variance;
    let se = (h1.std_error.powi(2) + h2.std_error.powi(2) + sum.std_error.powi(2)).sqrt();
    (diff, se)
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff.abs() <= VARIANCE_FLOOR {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY.copysign(diff)
    }
}

fn join_qubits(q: &[usize]) -> String {
    q.iter()
        .map(|q| q.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}

fn write_output(path: &Path, header: &str, body: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, format!("{header}{body}"))?;
    Ok(path.to_path_buf())
}

/// Load, override, check and execute.
pub fn run(config: &ExperimentConfig, overrides: &Overrides) -> Result<Vec<PathBuf>> {
    config
        .clone()
        .with_overrides(overrides)
        .plan(overrides.out_dir.as_deref())?
        .execute()
}

/// Process exit code for an error: 3 for numerical non-convergence, 1 for
/// I/O failures, 2 for everything caused by the config or its inputs.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}
