//! Serializable record of a lab experiment.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::geometry::LatticePoint;
use crate::lab::{Measurement, DEFAULT_BAND};

/// Scale at which a constant was measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Scale {
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub big_r: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<i64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
}

impl Scale {
    pub fn radius(r: i64) -> Self {
        Scale { big_r: Some(r), ..Scale::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub scale: Scale,
    pub context: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub constant: String,
    pub scale: Scale,
    pub context: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<LatticePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner: Option<LatticePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<LatticePoint>,
}

/// An asserted property of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabReport {
    pub experiment: String,
    pub config_digest: String,
    pub tool_version: String,
    pub grid: BTreeMap<String, Vec<i64>>,
    pub constants: Vec<Constant>,
    pub witnesses: Vec<Witness>,
    pub tolerance: f64,
    /// Uniformity band; an engineering choice, not a derived bound.
    pub band: f64,
    pub checks: Vec<Check>,
}

impl LabReport {
    pub fn new(experiment: &str, config_digest: &str, tool_version: &str, tolerance: f64) -> Self {
        LabReport {
            experiment: experiment.to_string(),
            config_digest: config_digest.to_string(),
            tool_version: tool_version.to_string(),
            grid: BTreeMap::new(),
            constants: Vec::new(),
            witnesses: Vec::new(),
            tolerance,
            band: DEFAULT_BAND,
            checks: Vec::new(),
        }
    }

    pub fn with_grid(mut self, name: &str, values: &[i64]) -> Self {
        self.grid.insert(name.to_string(), values.to_vec());
        self
    }

    pub fn push_constant(&mut self, name: &str, value: f64, scale: Scale, context: &str) {
        self.constants.push(Constant { name: name.to_string(), value, scale, context: context.to_string() });
    }

    pub fn push_measurement(&mut self, name: &str, m: &Measurement, scale: Scale, context: &str) {
        self.push_constant(name, m.value, scale, context);
        self.witnesses.push(Witness {
            constant: name.to_string(),
            scale,
            context: context.to_string(),
            column: m.column.clone(),
            partner: m.partner.clone(),
            point: m.point.clone(),
        });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Values of one constant in a context, in insertion order.
    pub fn values_of(&self, name: &str, context: &str) -> Vec<f64> {
        self.constants.iter().filter(|c| c.name == name && c.context == context).map(|c| c.value).collect()
    }
}
