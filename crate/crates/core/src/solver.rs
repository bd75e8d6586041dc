//! Algorithm dispatch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{self, FgSettings, StartStrategy};
use crate::objective::ObjectivePair;
use crate::onedim::{self, EnvelopeFit, OneDimSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "onedim")]
    OneDim,
    #[serde(rename = "fg")]
    Fg,
    #[serde(rename = "fg-warm")]
    FgWarm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::OneDim, Algorithm::Fg, Algorithm::FgWarm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OneDim => "onedim",
            Algorithm::Fg => "fg",
            Algorithm::FgWarm => "fg-warm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidData(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverSettings {
    pub onedim: OneDimSettings,
    pub fg: FgSettings,
}

/// Fits a `u`-dimensional envelope of `pair` with the chosen algorithm.
pub fn fit_envelope(pair: &ObjectivePair, u: usize, algorithm: Algorithm, settings: &SolverSettings) -> Result<EnvelopeFit> {
    match algorithm {
        Algorithm::OneDim => onedim::fit_pair(pair, u, &settings.onedim),
        Algorithm::Fg => grassmann::fit(pair, u, &settings.fg),
        Algorithm::FgWarm => {
            let fg = FgSettings {
                start: StartStrategy::OneDimWarmStart,
                onedim: settings.onedim.clone(),
                ..settings.fg.clone()
            };
            grassmann::fit(pair, u, &fg)
        }
    }
}
