//! Combination of per-modality embedding vectors into one classifier input.
//!
//! Four fixed scenarios: text only, image only, element-wise average, and
//! concatenation (text block first, then image). No learned fusion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingVector;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("fusion mode `{mode}` requires the {modality} embedding")]
    MissingModality { mode: FusionMode, modality: &'static str },
    #[error("embedding dimensions differ: text {text} vs image {image}")]
    DimensionMismatch { text: usize, image: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    TextOnly,
    ImageOnly,
    Average,
    Concatenate,
}

impl FusionMode {
    /// Output dimension for 512-dim inputs per modality.
    pub fn output_dim(self, modality_dim: usize) -> usize {
        match self {
            FusionMode::Concatenate => 2 * modality_dim,
            _ => modality_dim,
        }
    }

    pub fn needs_text(self) -> bool {
        !matches!(self, FusionMode::ImageOnly)
    }

    pub fn needs_image(self) -> bool {
        !matches!(self, FusionMode::TextOnly)
    }

    /// CLI spelling of this mode.
    pub fn flag_name(self) -> &'static str {
        match self {
            FusionMode::TextOnly => "text",
            FusionMode::ImageOnly => "image",
            FusionMode::Average => "avg",
            FusionMode::Concatenate => "concat",
        }
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag_name())
    }
}

impl FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(FusionMode::TextOnly),
            "image" => Ok(FusionMode::ImageOnly),
            "avg" => Ok(FusionMode::Average),
            "concat" => Ok(FusionMode::Concatenate),
            other => Err(format!("unknown fusion mode `{other}` (expected text/image/avg/concat)")),
        }
    }
}

/// Fuses the available modality embeddings under the given mode.
///
/// Average is element-wise (t[i] + v[i]) / 2; concatenation is text block
/// first then image block. Inputs are never modified.
pub fn fuse(
    text_vec: Option<&EmbeddingVector>,
    image_vec: Option<&EmbeddingVector>,
    mode: FusionMode,
) -> Result<Vec<f64>, FusionError> {
    let need_text = || {
        text_vec.ok_or(FusionError::MissingModality { mode, modality: "text" })
    };
    let need_image = || {
        image_vec.ok_or(FusionError::MissingModality { mode, modality: "image" })
    };
    match mode {
        FusionMode::TextOnly => Ok(need_text()?.values().to_vec()),
        FusionMode::ImageOnly => Ok(need_image()?.values().to_vec()),
        FusionMode::Average => {
            let t = need_text()?.values();
            let v = need_image()?.values();
            if t.len() != v.len() {
                return Err(FusionError::DimensionMismatch { text: t.len(), image: v.len() });
            }
            Ok(t.iter().zip(v).map(|(a, b)| (a + b) / 2.0).collect())
        }
        FusionMode::Concatenate => {
            let t = need_text()?.values();
            let v = need_image()?.values();
            let mut out = Vec::with_capacity(t.len() + v.len());
            out.extend_from_slice(t);
            out.extend_from_slice(v);
            Ok(out)
        }
    }
}
