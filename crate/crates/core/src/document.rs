//! The JSON interchange document: layout, settings, defects and, once
//! planned, the routing plan and effective layout.

use serde::{Deserialize, Serialize};

use crate::circumvent::{CrossingRole, DefectSpec, RoutingPlan};
use crate::decompose::TransferMatrix;
use crate::error::{Error, Result};
use crate::matrix_io;
use crate::mesh::{Crossing, Mesh, MeshLayout, MeshSettings, MziSetting};
use crate::simulate::VerificationReport;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshDocument {
    pub layout: MeshLayout,
    pub settings: Option<MeshSettings>,
    pub defects: Vec<DefectSpec>,
    pub plan: Option<RoutingPlan>,
    pub effective_layout: Option<MeshLayout>,
    /// Matrix the effective interferometer should implement.
    pub target: Option<TransferMatrix>,
    pub report: Option<VerificationReport>,
    /// Problems that were repaired while parsing.
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawCrossing {
    c: usize,
    m: usize,
    theta: f64,
    phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state: Option<CrossingRole>,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    layout: MeshLayout,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    crossings: Vec<RawCrossing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_phases: Option<Vec<f64>>,
    #[serde(default)]
    defects: Vec<DefectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plan: Option<RoutingPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    effective_layout: Option<MeshLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report: Option<VerificationReport>,
}

impl MeshDocument {
    pub fn new(layout: MeshLayout) -> Self {
        MeshDocument {
            layout,
            settings: None,
            defects: Vec::new(),
            plan: None,
            effective_layout: None,
            target: None,
            report: None,
            warnings: Vec::new(),
        }
    }

    pub fn with_settings(layout: MeshLayout, settings: MeshSettings) -> Self {
        MeshDocument {
            settings: Some(settings),
            ..MeshDocument::new(layout)
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.layout)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawDocument = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        let mesh = Mesh::new(raw.layout)?;
        let mut warnings = Vec::new();
        let settings = if raw.crossings.is_empty() && raw.output_phases.is_none() {
            None
        } else {
            let mut settings = MeshSettings {
                crossings: Default::default(),
                output_phases: Vec::new(),
            };
            for x in &raw.crossings {
                let crossing = Crossing::new(x.c, x.m);
                if !mesh.contains(crossing) {
                    return Err(Error::UnknownCrossing(crossing));
                }
                if settings
                    .crossings
                    .insert(crossing, MziSetting::new(x.theta, x.phi))
                    .is_some()
                {
                    return Err(Error::Document(format!("crossing {crossing} listed twice")));
                }
            }
            settings.output_phases = match raw.output_phases {
                Some(p) => p,
                None => {
                    warnings.push("output_phases missing; defaulted to zero".to_string());
                    vec![0.0; mesh.modes()]
                }
            };
            settings.validate(&mesh)?;
            Some(settings)
        };
        for d in &raw.defects {
            d.validate(&mesh)?;
        }
        if let Some(plan) = &raw.plan {
            plan.check(&mesh)?;
        }
        let target = raw.target.as_deref().map(matrix_io::from_pairs).transpose()?;
        Ok(MeshDocument {
            layout: raw.layout,
            settings,
            defects: raw.defects,
            plan: raw.plan,
            effective_layout: raw.effective_layout,
            target,
            report: raw.report,
            warnings,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let crossings = self
            .settings
            .iter()
            .flat_map(|s| s.crossings.iter())
            .map(|(x, s)| RawCrossing {
                c: x.column,
                m: x.lower_mode,
                theta: s.theta,
                phi: s.phi,
                state: self.plan.as_ref().map(|p| p.role(*x)),
            })
            .collect();
        let raw = RawDocument {
            layout: self.layout,
            crossings,
            output_phases: self.settings.as_ref().map(|s| s.output_phases.clone()),
            defects: self.defects.clone(),
            plan: self.plan.clone(),
            effective_layout: self.effective_layout,
            target: self.target.as_ref().map(matrix_io::to_pairs),
            report: self.report.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}
