//! Pluggable time stepper driven by the session loop.

use std::collections::{BTreeMap, BTreeSet};

use steer_core::operators::volume_laplacian;
use steer_core::{SparseMatrix64, TetMesh64};

use crate::{Result, ServerError};

/// Named per-vertex scalar arrays.
pub type Fields = BTreeMap<String, Vec<f64>>;

/// A simulation advanced by the session between deformations.
///
/// `step` only borrows the mesh, so coordinates cannot change during a step.
/// Implementations must be deterministic for fixed inputs.
pub trait SolverPlugin: Send {
    fn name(&self) -> &str;

    fn init(&mut self, mesh: &TetMesh64, fields: &mut Fields) -> Result<()>;

    fn step(&mut self, mesh: &TetMesh64, fields: &mut Fields, dt: f64) -> Result<()>;
}

pub const PHI: &str = "phi";

/// Damped Jacobi relaxation of the volume Laplace problem for `phi`, with
/// `phi = 1` on inlet-tagged boundary faces and `phi = 0` on outlet-tagged
/// ones. Other boundary faces are insulated. One sweep per step.
///
/// The stiffness matrix is rebuilt whenever the coordinates change.
#[derive(Debug, Clone)]
pub struct DemoLaplace {
    pub inlet: BTreeSet<i64>,
    pub outlet: BTreeSet<i64>,
    /// Relaxation weight in `(0, 1]`.
    pub omega: f64,
    cache: Option<(Vec<steer_core::Point3<f64>>, SparseMatrix64)>,
    dirichlet: Vec<Option<f64>>,
}

impl DemoLaplace {
    pub fn new(inlet: impl IntoIterator<Item = i64>, outlet: impl IntoIterator<Item = i64>) -> Self {
        Self {
            inlet: inlet.into_iter().collect(),
            outlet: outlet.into_iter().collect(),
            omega: 2.0 / 3.0,
            cache: None,
            dirichlet: Vec::new(),
        }
    }

    /// Prescribed value per vertex; inlet wins where the two regions touch.
    pub fn dirichlet_values(&self, mesh: &TetMesh64) -> Vec<Option<f64>> {
        let mut values = vec![None; mesh.vertex_count()];
        for (tags, value) in [(&self.outlet, 0.0), (&self.inlet, 1.0)] {
            for f in mesh.boundary_faces.iter().filter(|f| tags.contains(&f.tag)) {
                for &v in &f.verts {
                    values[v] = Some(value);
                }
            }
        }
        values
    }

    fn stiffness(&mut self, mesh: &TetMesh64) -> Result<&SparseMatrix64> {
        let stale = match &self.cache {
            Some((coords, _)) => coords != &mesh.vertices,
            None => true,
        };
        if stale {
            let k = volume_laplacian(mesh)?.scale(-1.0);
            self.cache = Some((mesh.vertices.clone(), k));
        }
        Ok(&self.cache.as_ref().unwrap().1)
    }
}

impl SolverPlugin for DemoLaplace {
    fn name(&self) -> &str {
        "demo-laplace"
    }

    fn init(&mut self, mesh: &TetMesh64, fields: &mut Fields) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(ServerError::Config(format!("relaxation weight {} is outside (0, 1]", self.omega)));
        }
        self.dirichlet = self.dirichlet_values(mesh);
        let phi = self.dirichlet.iter().map(|d| d.unwrap_or(0.0)).collect();
        fields.insert(PHI.to_string(), phi);
        self.cache = None;
        Ok(())
    }

    fn step(&mut self, mesh: &TetMesh64, fields: &mut Fields, _dt: f64) -> Result<()> {
        if self.dirichlet.len() != mesh.vertex_count() {
            return Err(ServerError::Config("solver stepped before init".into()));
        }
        let omega = self.omega;
        let dirichlet = std::mem::take(&mut self.dirichlet);
        let k = self.stiffness(mesh)?;
        let phi = fields.get_mut(PHI).ok_or_else(|| ServerError::MissingField(PHI.into()))?;
        let old = phi.clone();
        for (i, value) in phi.iter_mut().enumerate() {
            if let Some(d) = dirichlet[i] {
                *value = d;
                continue;
            }
            let (cols, vals) = k.row_slices(i);
            let mut diag = 0.0;
            let mut off = 0.0;
            for (&j, &kij) in cols.iter().zip(vals) {
                if j == i {
                    diag = kij;
                } else {
                    off += kij * old[j];
                }
            }
            if diag > 0.0 {
                *value = (1.0 - omega) * old[i] - omega * off / diag;
            }
        }
        self.dirichlet = dirichlet;
        Ok(())
    }
}
