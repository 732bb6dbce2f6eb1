use std::fmt;

use serde::{Deserialize, Serialize};

/// Which group axiom a Cayley table violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupViolation {
    Identity,
    LatinSquare,
    Associativity,
    Inverses,
}

impl fmt::Display for GroupViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupViolation::Identity => "identity",
            GroupViolation::LatinSquare => "latin-square",
            GroupViolation::Associativity => "associativity",
            GroupViolation::Inverses => "inverses",
        };
        f.write_str(s)
    }
}

/// Evidence that a TRO admits no strictly associated partial isometry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCertificate {
    /// `dim(E·H)`.
    pub range_dim: usize,
    /// `dim(E*·H)`.
    pub source_dim: usize,
    /// Per minimal central projection of `EE*`: `(dim(P E H), dim((P E)* H))`.
    /// Empty when the global dimensions already differ.
    pub blockwise: Vec<(usize, usize)>,
}

impl fmt::Display for RankCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.range_dim != self.source_dim {
            write!(f, "dim(E·H) = {} ≠ dim(E*·H) = {}", self.range_dim, self.source_dim)
        } else {
            write!(f, "blockwise rank mismatch {:?}", self.blockwise)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("invalid tolerance eps_eq={eps_eq}, eps_rank={eps_rank}: both must lie in (0, 1)")]
    InvalidTolerance { eps_eq: f64, eps_rank: f64 },
    #[error("not a group: {0} axiom fails")]
    NotAGroup(GroupViolation),
    #[error("group order {order} exceeds the configured maximum {max}")]
    GroupTooLarge { order: usize, max: usize },
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("invalid *-isomorphism: {0}")]
    InvalidIsomorphism(String),
    #[error("element has mass {mass:.3e} outside the isomorphism domain")]
    DomainViolation { mass: f64 },
    #[error("generated algebra is not closed under the adjoint")]
    NotStarClosed,
    #[error("algebra decomposition failed: {0}")]
    NotSemisimple(String),
    #[error("generator produced an invalid twisted partial action: {0}")]
    GeneratorInvariantViolated(String),
    #[error("product or adjoint left its fiber (relative residual {residual:.3e})")]
    FiberViolation { residual: f64 },
    #[error("the two involution formulas disagree by {residual:.3e}")]
    EquivalentFormMismatch { residual: f64 },
    #[error("witness does not represent the action: {0}")]
    WitnessMismatch(String),
    #[error("not a ternary ring of operators: EE*E is not contained in E")]
    NotATro,
    #[error("TRO is not regular: {0}")]
    NonRegular(RankCertificate),
    #[error("no strict partial isometry found after {attempts} attempts and no rank obstruction certified")]
    Inconclusive { attempts: usize },
    #[error("subspace is not contained in the ambient TRO")]
    NotContained,
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("D_{t} = B_t B_t* is not an ideal of the unit fiber: {reason}")]
    NotAnIdeal { t: usize, reason: String },
    #[error("fiber over {t} is not regular: {certificate}")]
    NonRegularFiber { t: usize, certificate: RankCertificate },
    #[error("extracted data fails the twisted partial action axioms: {0}")]
    AxiomExtractionFailed(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid document: {0}")]
    Document(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by malformed input rather than a mathematical failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::ShapeMismatch(_)
            | Error::NonFinite
            | Error::InvalidTolerance { .. }
            | Error::NotAGroup(_)
            | Error::GroupTooLarge { .. }
            | Error::StructureMismatch(_)
            | Error::InvalidIsomorphism(_)
            | Error::Document(_)
            | Error::Json(_)
            | Error::Io(_) => true,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    /// The error under any stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
