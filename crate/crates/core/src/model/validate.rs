//! Structural integrity report: totals, tree connectivity, inertia sanity.

use super::{BodyModel, JointKind};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub model_name: String,
    pub segment_count: usize,
    pub joint_count: usize,
    pub total_mass_kg: f64,
    /// (joint name, kind label, DoF)
    pub joint_dof: Vec<(String, String, usize)>,
    pub internal_dof: usize,
    pub base_dof: usize,
    /// Joint graph is a tree rooted at the base segment spanning all segments.
    pub tree_connected: bool,
    /// Segments whose principal inertias violate Ixx <= Iyy + Izz (cyclic).
    pub inertia_triangle_violations: Vec<String>,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Key-value document form (TOML).
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}", self.model_name)?;
        writeln!(f, "segments: {}", self.segment_count)?;
        writeln!(f, "joints: {}", self.joint_count)?;
        writeln!(f, "total mass: {:.3} kg", self.total_mass_kg)?;
        writeln!(f, "internal DoF: {}", self.internal_dof)?;
        writeln!(f, "base DoF: {}", self.base_dof)?;
        writeln!(f, "tree connected: {}", self.tree_connected)?;
        for (name, kind, dof) in &self.joint_dof {
            writeln!(f, "  {name}: {kind} ({dof} DoF)")?;
        }
        if self.failures.is_empty() {
            writeln!(f, "result: OK")
        } else {
            writeln!(f, "result: {} failure(s)", self.failures.len())?;
            for fail in &self.failures {
                writeln!(f, "  FAIL: {fail}")?;
            }
            Ok(())
        }
    }
}

/// Build the integrity report. Never errors; problems land in `failures`.
pub fn validate_model(model: &BodyModel) -> ValidationReport {
    let mut failures = Vec::new();

    let joint_dof: Vec<(String, String, usize)> = model
        .joints
        .iter()
        .map(|j| (j.name.clone(), j.kind.label().to_string(), j.kind.dof()))
        .collect();
    let internal_dof = model.internal_dof();

    // Reachability from the root over parent->child edges, and in-degree = 1.
    let n = model.segments.len();
    let mut visited = vec![false; n];
    let mut child_seen = vec![false; n];
    let mut tree_connected = true;
    if let Some(root) = model.segment_index(&model.base.segment) {
        let mut stack = vec![root];
        visited[root] = true;
        while let Some(cur) = stack.pop() {
            for j in &model.joints {
                let (Some(p), Some(c)) = (
                    model.segment_index(&j.parent),
                    model.segment_index(&j.child),
                ) else {
                    continue;
                };
                if p == cur {
                    if child_seen[c] || c == root {
                        tree_connected = false; // multiple parents or cycle back to root
                    }
                    child_seen[c] = true;
                    if !visited[c] {
                        visited[c] = true;
                        stack.push(c);
                    }
                }
            }
        }
    } else {
        tree_connected = false;
    }
    if visited.iter().any(|v| !v) {
        tree_connected = false;
    }
    if model.joints.len() != n.saturating_sub(1) {
        tree_connected = false;
    }
    if !tree_connected {
        failures.push("joint graph is not a tree spanning all segments".into());
    }

    let mut inertia_triangle_violations = Vec::new();
    for s in &model.segments {
        let i = s.inertia_diag;
        let ok = i.x <= i.y + i.z + 1e-12 && i.y <= i.x + i.z + 1e-12 && i.z <= i.x + i.y + 1e-12;
        if !ok {
            inertia_triangle_violations.push(s.name.clone());
            failures.push(format!("segment `{}`: inertia triangle inequality violated", s.name));
        }
        if s.mass <= 0.0 {
            failures.push(format!("segment `{}`: non-positive mass", s.name));
        }
    }

    for r in &model.restraints {
        match model.joint_dof_by_name(&r.joint) {
            None => failures.push(format!("restraint references unknown joint `{}`", r.joint)),
            Some(dof) if dof == 0 => {
                failures.push(format!("restraint on locked joint `{}`", r.joint))
            }
            _ => {}
        }
    }

    if matches!(model.base.kind, JointKind::Locked) && model.segments.len() > 1 {
        // Locked base is fine (grounded model), nothing to flag.
    }

    ValidationReport {
        model_name: model.name.clone(),
        segment_count: model.segments.len(),
        joint_count: model.joints.len(),
        total_mass_kg: model.total_mass(),
        joint_dof,
        internal_dof,
        base_dof: model.base.kind.dof(),
        tree_connected,
        inertia_triangle_violations,
        failures,
    }
}
