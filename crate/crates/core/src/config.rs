//! Run-wide settings shared by the CLI, the FFI layer and the reports.

use serde::{Deserialize, Serialize};

use crate::algebra::DecomposeConfig;
use crate::bundle::BundleCheckConfig;
use crate::classify::ClassifyConfig;
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::Tolerance;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eps_eq: f64,
    pub eps_rank: f64,
    pub seed: u64,
    pub report: ReportFormat,
    pub max_group_order: usize,
    pub tro_retries: usize,
    pub decompose_redraws: usize,
    /// Random elements per fiber for the bundle norm axioms.
    pub random_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tol = Tolerance::default();
        RunConfig {
            eps_eq: tol.eps_eq,
            eps_rank: tol.eps_rank,
            seed: 0,
            report: ReportFormat::Text,
            max_group_order: 12,
            tro_retries: 8,
            decompose_redraws: 5,
            random_samples: 8,
        }
    }
}

impl RunConfig {
    pub fn tolerance(&self) -> Result<Tolerance> {
        Tolerance::new(self.eps_eq, self.eps_rank)
    }

    pub fn check_group(&self, group: &FiniteGroup) -> Result<()> {
        if group.order() > self.max_group_order {
            return Err(Error::GroupTooLarge { order: group.order(), max: self.max_group_order });
        }
        Ok(())
    }

    pub fn bundle_check(&self) -> BundleCheckConfig {
        BundleCheckConfig { samples: self.random_samples, seed: self.seed }
    }

    pub fn classify(&self) -> ClassifyConfig {
        ClassifyConfig {
            seed: self.seed,
            tro_retries: self.tro_retries,
            decompose: DecomposeConfig { max_redraws: self.decompose_redraws, ..DecomposeConfig::default() },
            bundle_check: self.bundle_check(),
        }
    }
}
