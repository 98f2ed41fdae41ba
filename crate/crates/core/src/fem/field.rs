use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{simplex, Mesh};

/// Piecewise-linear field: one nodal value per mesh vertex.
#[derive(Clone, Debug)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        Ok(Field { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_vertices();
        Field { mesh, values: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..mesh.n_vertices()).map(|v| f(mesh.vertex(v))).collect();
        Field { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field { mesh: self.mesh.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// `self + s·other` on the same mesh.
    pub fn axpy(&self, s: f64, other: &Field) -> Result<Field> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) && self.mesh.fingerprint() != other.mesh.fingerprint() {
            return Err(Error::InvalidArgument("fields live on different meshes".into()));
        }
        Ok(Field {
            mesh: self.mesh.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        })
    }

    /// Value at an arbitrary point; `None` outside the mesh.
    pub fn evaluate(&self, p: &[f64]) -> Option<f64> {
        let (c, b) = self.mesh.locate(p)?;
        Some(self.interpolate(c, &b))
    }

    /// Value in cell `c` at barycentric coordinates `b`.
    pub fn interpolate(&self, c: usize, b: &[f64; 4]) -> f64 {
        self.mesh.cell(c).iter().enumerate().map(|(i, &v)| b[i] * self.values[v]).sum()
    }

    pub fn cell_gradient(&self, c: usize) -> [f64; 3] {
        let dim = self.mesh.dim();
        let (g, _) = simplex::barycentric_gradients(dim, &self.mesh.cell_points(c));
        let mut out = [0.0; 3];
        for (i, &v) in self.mesh.cell(c).iter().enumerate() {
            for k in 0..3 {
                out[k] += g[i][k] * self.values[v];
            }
        }
        out
    }

    /// ∫ u² over the mesh (exact for P1).
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.mesh.dim() + 1;
        (0..self.mesh.n_cells())
            .map(|c| {
                let vol = self.mesh.cell_volume(c);
                let u: Vec<f64> = self.mesh.cell(c).iter().map(|&v| self.values[v]).collect();
                let sq: f64 = u.iter().map(|x| x * x).sum();
                let s: f64 = u.iter().sum();
                vol * (sq + s * s) / ((n * (n + 1)) as f64)
            })
            .sum()
    }

    /// ∫ |∇u|² over the mesh.
    pub fn energy(&self) -> f64 {
        (0..self.mesh.n_cells())
            .map(|c| {
                let g = self.cell_gradient(c);
                self.mesh.cell_volume(c) * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
