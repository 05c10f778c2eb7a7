//! JSON system configurations.
//!
//! Complex numbers are `[re, im]`, matrices are row-major lists of rows.
//! Variants are tagged by a `"type"` field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{c64, CMatrix};
use crate::vnalg::{
    fixed_algebra, generate_algebra, validate_subsystem, AutomorphismKind, MatrixStarAlgebra, Subsystem, SystemSpec,
};

pub const SCHEMA_VERSION: u32 = 1;

pub type MatrixData = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub ambient_dim: usize,
    pub algebra: AlgebraConfig,
    pub state: StateConfig,
    pub automorphism: AutomorphismConfig,
    pub subsystem: SubsystemConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraConfig {
    Full,
    BlockDiagonal { sizes: Vec<usize> },
    Generated { matrices: Vec<MatrixData> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    NormalizedTrace,
    Density { matrix: MatrixData },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AutomorphismConfig {
    Identity,
    Inner {
        unitary: MatrixData,
    },
    /// `sizes` defaults to the blocks of a `block_diagonal` algebra.
    BlockPermutation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sizes: Option<Vec<usize>>,
        perm: Vec<usize>,
    },
    /// Applied left to right.
    Compose {
        automorphisms: Vec<AutomorphismConfig>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubsystemConfig {
    Trivial,
    Full,
    FixedAlgebra,
    Generated { matrices: Vec<MatrixData> },
}

/// A validated system with its subsystem.
#[derive(Clone, Debug)]
pub struct BuiltSystem {
    pub name: String,
    pub system: SystemSpec,
    pub subsystem: Subsystem,
}

pub fn matrix_from_data(data: &MatrixData, path: &str) -> Result<CMatrix> {
    let rows = data.len();
    let cols = data.first().map_or(0, |r| r.len());
    if data.iter().any(|r| r.len() != cols) {
        return Err(config_error(path, "rows of unequal length"));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| c64(data[i][j][0], data[i][j][1])))
}

pub fn matrix_to_data(m: &CMatrix) -> MatrixData {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Input errors are located at `path`; internal failures pass through.
fn locate(path: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        e if e.is_input_error() => config_error(path, e.to_string()),
        e => e,
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: SystemConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(&path, e.into_inner().to_string())
    })?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(config_error(
            "schema_version",
            format!(
                "unsupported schema version {}, expected {SCHEMA_VERSION}",
                config.schema_version
            ),
        ));
    }
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

impl SystemConfig {
    fn check_square(&self, m: &CMatrix, path: &str) -> Result<()> {
        let d = self.ambient_dim;
        if m.nrows() != d || m.ncols() != d {
            return Err(config_error(
                path,
                format!("expected a {d}x{d} matrix, found {}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(())
    }

    fn matrices(&self, list: &[MatrixData], path: &str) -> Result<Vec<CMatrix>> {
        list.iter()
            .enumerate()
            .map(|(k, data)| {
                let p = format!("{path}[{k}]");
                let m = matrix_from_data(data, &p)?;
                self.check_square(&m, &p)?;
                Ok(m)
            })
            .collect()
    }

    pub fn build_algebra(&self) -> Result<MatrixStarAlgebra> {
        let d = self.ambient_dim;
        if d == 0 {
            return Err(config_error("ambient_dim", "must be positive"));
        }
        match &self.algebra {
            AlgebraConfig::Full => Ok(MatrixStarAlgebra::full(d)),
            AlgebraConfig::BlockDiagonal { sizes } => {
                if sizes.iter().sum::<usize>() != d || sizes.contains(&0) {
                    return Err(config_error(
                        "algebra.sizes",
                        format!("positive block sizes must sum to {d}, got {sizes:?}"),
                    ));
                }
                Ok(MatrixStarAlgebra::block_diagonal(sizes))
            }
            AlgebraConfig::Generated { matrices } => {
                let gens = self.matrices(matrices, "algebra.matrices")?;
                generate_algebra(&gens, d).map_err(|e| locate("algebra.matrices", e))
            }
        }
    }

    fn automorphism_kind(&self, a: &AutomorphismConfig, path: &str) -> Result<AutomorphismKind> {
        Ok(match a {
            AutomorphismConfig::Identity => AutomorphismKind::Identity,
            AutomorphismConfig::Inner { unitary } => {
                let p = format!("{path}.unitary");
                let u = matrix_from_data(unitary, &p)?;
                self.check_square(&u, &p)?;
                AutomorphismKind::Inner { unitary: u }
            }
            AutomorphismConfig::BlockPermutation { sizes, perm } => {
                let sizes = match (sizes, &self.algebra) {
                    (Some(s), _) => s.clone(),
                    (None, AlgebraConfig::BlockDiagonal { sizes }) => sizes.clone(),
                    (None, _) => {
                        return Err(config_error(
                            &format!("{path}.sizes"),
                            "required unless the algebra is block_diagonal",
                        ))
                    }
                };
                AutomorphismKind::BlockPermutation {
                    sizes,
                    perm: perm.clone(),
                }
            }
            AutomorphismConfig::Compose { automorphisms } => AutomorphismKind::Composition(
                automorphisms
                    .iter()
                    .enumerate()
                    .map(|(k, a)| self.automorphism_kind(a, &format!("{path}.automorphisms[{k}]")))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub fn density(&self) -> Result<CMatrix> {
        let d = self.ambient_dim;
        match &self.state {
            StateConfig::NormalizedTrace => Ok(CMatrix::identity(d, d) * c64(1.0 / d as f64, 0.0)),
            StateConfig::Density { matrix } => {
                let m = matrix_from_data(matrix, "state.matrix")?;
                self.check_square(&m, "state.matrix")?;
                Ok(m)
            }
        }
    }

    /// Validates the system part (algebra, state, automorphism).
    pub fn build_system(&self, tol: f64) -> Result<SystemSpec> {
        let algebra = self.build_algebra()?;
        let density = self.density()?;
        let kind = self.automorphism_kind(&self.automorphism, "automorphism")?;
        SystemSpec::new(algebra, &density, &kind, tol).map_err(|e| {
            let path = match e {
                Error::NotHermitian { .. } | Error::NotFaithful { .. } | Error::TraceNotOne { .. } => "state",
                Error::DimensionMismatch { .. } | Error::InvalidSubsystem(_) => "algebra",
                _ => "automorphism",
            };
            locate(path, e)
        })
    }

    pub fn build(&self, tol: f64) -> Result<BuiltSystem> {
        let system = self.build_system(tol)?;
        let d = self.ambient_dim;
        let f = match &self.subsystem {
            SubsystemConfig::Trivial => MatrixStarAlgebra::scalars(d),
            SubsystemConfig::Full => system.algebra.clone(),
            SubsystemConfig::FixedAlgebra => {
                fixed_algebra(&system.algebra, &system.alpha, tol).map_err(|e| locate("subsystem", e))?
            }
            SubsystemConfig::Generated { matrices } => {
                let gens = self.matrices(matrices, "subsystem.matrices")?;
                generate_algebra(&gens, d).map_err(|e| locate("subsystem.matrices", e))?
            }
        };
        let subsystem = validate_subsystem(&system, f, tol).map_err(|e| locate("subsystem", e))?;
        Ok(BuiltSystem {
            name: self.name.clone().unwrap_or_else(|| "system".into()),
            system,
            subsystem,
        })
    }
}

/// The three small systems used throughout the docs and tests.
pub fn hand_configs() -> Vec<SystemConfig> {
    let m2 = |name: &str, subsystem: SubsystemConfig| SystemConfig {
        schema_version: SCHEMA_VERSION,
        name: Some(name.into()),
        ambient_dim: 2,
        algebra: AlgebraConfig::Full,
        state: StateConfig::NormalizedTrace,
        automorphism: AutomorphismConfig::Inner {
            unitary: vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.0, 1.0]]],
        },
        subsystem,
    };
    vec![
        m2("m2-full", SubsystemConfig::Full),
        m2(
            "m2-diag",
            SubsystemConfig::Generated {
                matrices: vec![vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]]],
            },
        ),
        SystemConfig {
            schema_version: SCHEMA_VERSION,
            name: Some("c2-swap".into()),
            ambient_dim: 2,
            algebra: AlgebraConfig::BlockDiagonal { sizes: vec![1, 1] },
            state: StateConfig::NormalizedTrace,
            automorphism: AutomorphismConfig::BlockPermutation {
                sizes: None,
                perm: vec![1, 0],
            },
            subsystem: SubsystemConfig::Trivial,
        },
    ]
}
