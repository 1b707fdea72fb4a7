//! Reference configurations for the figure reproductions.

use serde::{Deserialize, Serialize};

use crate::error::{PdmpError, Result};
use crate::model::{FamilyParams, FamilyTag, ModelSpec, SwitchLaw};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureName {
    Fig1,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
}

impl FigureName {
    pub const ALL: [FigureName; 5] = [Self::Fig1, Self::Fig2a, Self::Fig2b, Self::Fig3a, Self::Fig3b];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            PdmpError::InvalidConfig(format!("unknown figure `{s}` (expected fig1, fig2a, fig2b, fig3a or fig3b)"))
        })
    }
}

/// A model with the initial condition and horizon used for its figure.
#[derive(Clone, Debug)]
pub struct Preset {
    pub figure: FigureName,
    pub model: ModelSpec,
    pub x0: Vec<f64>,
    /// Zero-based initial environment.
    pub k0: usize,
    pub t_max: f64,
    pub replicates: usize,
}

fn single(a2: f64) -> Result<ModelSpec> {
    ModelSpec::single1d(&[0.5, a2], &[0.0, 0.05], 2.0, 2.0)
}

pub fn fig3a_model() -> Result<ModelSpec> {
    FamilyParams::new(FamilyTag::Expl2D, 2, 2)
        .per_env("a", 1, &[1.0, 1.0])
        .per_env("a", 2, &[0.5, 4.0])
        .set("b", 1, 2, 0.75)
        .set("c", 1, 2, 0.05)
        .set("b", 2, 2, 0.25)
        .set("c", 2, 2, 0.025)
        .build(SwitchLaw::two_state(2.0, 2.0)?)
}

pub fn fig3b_model() -> Result<ModelSpec> {
    FamilyParams::new(FamilyTag::Expl2D, 2, 2)
        .per_env("a", 1, &[0.95, 80.0 / 9.0])
        .per_env("a", 2, &[1.0, 10.0])
        .set("b", 1, 2, 8.0)
        .set("c", 1, 2, 7.5)
        .set("b", 2, 2, 8.0)
        .set("c", 2, 2, 10.0)
        .build(SwitchLaw::two_state(2.0, 2.0)?)
}

pub fn preset(figure: FigureName) -> Result<Preset> {
    let one = |model| Preset { figure, model, x0: vec![1.0], k0: 0, t_max: 100.0, replicates: 1 };
    Ok(match figure {
        FigureName::Fig1 => one(single(1.0)?),
        FigureName::Fig2a => one(single(-0.505)?),
        FigureName::Fig2b => one(single(0.45)?),
        FigureName::Fig3a => {
            Preset { figure, model: fig3a_model()?, x0: vec![1.0, 1.0], k0: 0, t_max: 5000.0, replicates: 100 }
        }
        FigureName::Fig3b => {
            Preset { figure, model: fig3b_model()?, x0: vec![50.0, 100.0], k0: 0, t_max: 5000.0, replicates: 100 }
        }
    })
}
