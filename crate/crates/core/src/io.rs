//! JSON documents for groups, algebras, actions, bundles, TROs and run
//! reports. Complex numbers are `[re, im]`, matrices row-major nested arrays.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, BlockStructure, IdealSupport, StarIsomorphism};
use crate::bundle::ConcreteBundle;
use crate::classify::ClassificationResult;
use crate::config::RunConfig;
use crate::error::{Error, RankCertificate, Result};
use crate::group::FiniteGroup;
use crate::linalg::{ComplexMatrix, MatrixSpan, Tolerance};
use crate::report::AxiomReport;
use crate::tpa::{GlobalWitness, TwistedPartialAction};
use crate::tro::TroSpace;

pub const TOOL: &str = "bundleforge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupDoc {
    Preset { preset: String },
    Table { order: usize, table: Vec<Vec<usize>> },
}

impl GroupDoc {
    pub fn from_group(g: &FiniteGroup) -> Self {
        match g.preset() {
            Some(p) => GroupDoc::Preset { preset: p.to_string() },
            None => GroupDoc::Table { order: g.order(), table: g.table().to_vec() },
        }
    }

    pub fn to_group(&self) -> Result<FiniteGroup> {
        match self {
            GroupDoc::Preset { preset } => FiniteGroup::from_preset(preset),
            GroupDoc::Table { order, table } => {
                if *order != table.len() {
                    return Err(Error::Document(format!("group order {order} but table has {} rows", table.len())));
                }
                FiniteGroup::from_table(table.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureDoc {
    pub sizes: Vec<usize>,
}

impl StructureDoc {
    pub fn to_structure(&self) -> Result<BlockStructure> {
        BlockStructure::new(self.sizes.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementDoc {
    pub blocks: Vec<ComplexMatrix>,
}

impl ElementDoc {
    pub fn from_element(x: &AlgebraElement) -> Self {
        ElementDoc { blocks: x.blocks().to_vec() }
    }

    pub fn to_element(&self, s: &BlockStructure) -> Result<AlgebraElement> {
        if self.blocks.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite);
        }
        AlgebraElement::from_blocks(s, self.blocks.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoDoc {
    pub block_map: BTreeMap<usize, usize>,
    pub unitaries: BTreeMap<usize, ComplexMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    /// The full algebra the global action lives on.
    pub structure: StructureDoc,
    /// Blocks of the ideal the action was restricted to.
    pub restriction: Vec<usize>,
    pub unitaries: BTreeMap<usize, ComplexMatrix>,
}

impl WitnessDoc {
    pub fn from_witness(w: &GlobalWitness) -> Self {
        WitnessDoc {
            structure: StructureDoc { sizes: w.structure().sizes().to_vec() },
            restriction: w.restriction().blocks().collect(),
            unitaries: w.unitaries().iter().cloned().enumerate().collect(),
        }
    }

    pub fn to_witness(&self, tol: &Tolerance) -> Result<GlobalWitness> {
        let s = self.structure.to_structure()?;
        let restriction = IdealSupport::new(&s, self.restriction.iter().copied())?;
        let n = self.unitaries.len();
        let unitaries = dense_list(&self.unitaries, n, "witness unitaries")?;
        GlobalWitness::new(s, unitaries, restriction, tol)
    }
}

/// A twisted partial action, optionally with the global witness it was
/// generated from. `kind: "semidirect"` marks the document as standing for
/// its semidirect product bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpaDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub group: GroupDoc,
    pub structure: StructureDoc,
    pub ideals: BTreeMap<usize, Vec<usize>>,
    pub isos: BTreeMap<usize, IsoDoc>,
    pub cocycle: IndexMap<String, ElementDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessDoc>,
}

pub const SEMIDIRECT_KIND: &str = "semidirect";

impl TpaDoc {
    pub fn from_action(tpa: &TwistedPartialAction, witness: Option<&GlobalWitness>) -> Self {
        let g = tpa.group();
        let n = g.order();
        let mut cocycle = IndexMap::new();
        for r in 0..n {
            for s in 0..n {
                cocycle.insert(format!("{r},{s}"), ElementDoc::from_element(tpa.w(r, s)));
            }
        }
        TpaDoc {
            kind: None,
            group: GroupDoc::from_group(g),
            structure: StructureDoc { sizes: tpa.structure().sizes().to_vec() },
            ideals: (0..n).map(|t| (t, tpa.ideal(t).blocks().collect())).collect(),
            isos: (0..n)
                .map(|t| {
                    let iso = tpa.iso(t);
                    (t, IsoDoc { block_map: iso.block_map().clone(), unitaries: iso.unitaries().clone() })
                })
                .collect(),
            cocycle,
            witness: witness.map(WitnessDoc::from_witness),
        }
    }

    pub fn to_action(&self, tol: &Tolerance) -> Result<(TwistedPartialAction, Option<GlobalWitness>)> {
        let g = self.group.to_group()?;
        let s = self.structure.to_structure()?;
        let n = g.order();
        let ideal_lists = dense_list(&self.ideals, n, "ideals")?;
        let ideals = ideal_lists
            .into_iter()
            .map(|blocks| IdealSupport::new(&s, blocks))
            .collect::<Result<Vec<_>>>()?;
        let iso_docs = dense_list(&self.isos, n, "isos")?;
        let isos = iso_docs
            .into_iter()
            .enumerate()
            .map(|(t, d)| {
                if d.unitaries.values().any(|u| !u.is_finite()) {
                    return Err(Error::NonFinite);
                }
                StarIsomorphism::new(ideals[g.inv(t)].clone(), ideals[t].clone(), d.block_map, d.unitaries, tol)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cocycle = Vec::with_capacity(n * n);
        for r in 0..n {
            for s_ in 0..n {
                let key = format!("{r},{s_}");
                let doc = self
                    .cocycle
                    .get(&key)
                    .ok_or_else(|| Error::Document(format!("cocycle entry \"{key}\" missing")))?;
                cocycle.push(doc.to_element(&s)?);
            }
        }
        if self.cocycle.len() != n * n {
            return Err(Error::Document(format!("cocycle has {} entries, expected {}", self.cocycle.len(), n * n)));
        }
        let tpa = TwistedPartialAction::new(g, s, ideals, isos, cocycle)?;
        let witness = self.witness.as_ref().map(|w| w.to_witness(tol)).transpose()?;
        Ok((tpa, witness))
    }
}

/// Values of a map keyed `0..n`, in order; any gap or extra key is an error.
fn dense_list<T: Clone>(map: &BTreeMap<usize, T>, n: usize, what: &str) -> Result<Vec<T>> {
    if map.len() != n || map.keys().copied().ne(0..n) {
        return Err(Error::Document(format!("{what} must have exactly the keys 0..{n}")));
    }
    Ok(map.values().cloned().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcreteBundleDoc {
    pub group: GroupDoc,
    pub hilbert_dim: usize,
    pub fibers: BTreeMap<usize, Vec<ComplexMatrix>>,
}

impl ConcreteBundleDoc {
    pub fn from_bundle(b: &ConcreteBundle) -> Self {
        ConcreteBundleDoc {
            group: GroupDoc::from_group(b.group_ref()),
            hilbert_dim: b.hilbert_dim(),
            fibers: b.fibers().iter().map(|f| f.basis().to_vec()).enumerate().collect(),
        }
    }

    pub fn to_bundle(&self, tol: &Tolerance) -> Result<ConcreteBundle> {
        let g = self.group.to_group()?;
        let fibers = dense_list(&self.fibers, g.order(), "fibers")?;
        ConcreteBundle::new(g, self.hilbert_dim, fibers, tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TroDoc {
    pub dim: usize,
    pub basis: Vec<ComplexMatrix>,
}

impl TroDoc {
    pub fn from_tro(e: &TroSpace) -> Self {
        TroDoc { dim: e.ambient_dim(), basis: e.space().basis().to_vec() }
    }

    pub fn to_tro(&self, tol: &Tolerance) -> Result<TroSpace> {
        if self.basis.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite);
        }
        TroSpace::new(MatrixSpan::from_matrices(self.dim, &self.basis, 0.0, *tol)?)
    }
}

/// Either kind of bundle document.
pub enum BundleInput {
    Concrete(ConcreteBundle),
    Semidirect(TwistedPartialAction),
}

/// Reads a concrete bundle (`"fibers"` present) or a TPA document.
pub fn parse_bundle(text: &str, tol: &Tolerance) -> Result<BundleInput> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("fibers").is_some() {
        let doc: ConcreteBundleDoc = serde_json::from_value(value)?;
        Ok(BundleInput::Concrete(doc.to_bundle(tol)?))
    } else {
        let doc: TpaDoc = serde_json::from_value(value)?;
        Ok(BundleInput::Semidirect(doc.to_action(tol)?.0))
    }
}

/// The block frame of `B_e` found by the classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub sizes: Vec<usize>,
    pub multiplicities: Vec<usize>,
    pub intertwiner: ComplexMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDoc {
    pub frame: FrameDoc,
    pub action: TpaDoc,
    pub isometries: BTreeMap<usize, ComplexMatrix>,
}

impl ClassificationDoc {
    pub fn from_result(r: &ClassificationResult) -> Self {
        let dec = &r.frame.decomposition;
        ClassificationDoc {
            frame: FrameDoc {
                sizes: dec.structure().sizes().to_vec(),
                multiplicities: dec.multiplicities().to_vec(),
                intertwiner: dec.intertwiner().clone(),
            },
            action: TpaDoc::from_action(&r.action, None),
            isometries: r.isometries.iter().cloned().enumerate().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<RankCertificate>,
}

impl ErrorDoc {
    pub fn from_error(e: &Error) -> Self {
        let root = e.root();
        let (kind, fiber, certificate) = match root {
            Error::NonRegularFiber { t, certificate } => ("non-regular-fiber", Some(*t), Some(certificate.clone())),
            Error::NonRegular(c) => ("non-regular", None, Some(c.clone())),
            Error::Inconclusive { .. } => ("inconclusive", None, None),
            Error::NotAnIdeal { t, .. } => ("not-an-ideal", Some(*t), None),
            Error::AxiomExtractionFailed(_) => ("axiom-extraction-failed", None, None),
            Error::NotATro => ("not-a-tro", None, None),
            _ if root.is_input_error() => ("input", None, None),
            _ => ("math", None, None),
        };
        ErrorDoc { kind: kind.into(), message: e.to_string(), fiber, certificate }
    }
}

/// What every command prints: tool identity, the full configuration, the
/// verdict and the named reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorDoc>,
    pub reports: IndexMap<String, AxiomReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunReport {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config: config.clone(),
            passed: true,
            max_residual: None,
            error: None,
            reports: IndexMap::new(),
            result: None,
        }
    }

    pub fn add(&mut self, name: &str, report: AxiomReport) {
        self.passed &= report.all_pass();
        let m = report.max_residual();
        self.max_residual = Some(self.max_residual.map_or(m, |x| x.max(m)));
        self.reports.insert(name.into(), report);
    }

    pub fn fail_with(&mut self, e: &Error) {
        self.passed = false;
        self.error = Some(ErrorDoc::from_error(e));
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable rendering of the same data as [`RunReport::to_json`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} (seed {})\n", self.tool, self.version, self.command, self.config.seed);
        for (name, rep) in &self.reports {
            out.push_str(&format!("== {name} ==\n"));
            out.push_str(&rep.to_text());
        }
        if let Some(e) = &self.error {
            out.push_str(&format!("error [{}]: {}\n", e.kind, e.message));
        }
        if let Some(m) = self.max_residual {
            out.push_str(&format!("max residual: {m:.3e}\n"));
        }
        out.push_str(if self.passed { "RESULT: PASS\n" } else { "RESULT: FAIL\n" });
        out
    }
}
