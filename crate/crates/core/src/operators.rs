//! The discrete Wentzell generator, the `L²(Ω) × L²(Γ)` inner product and the
//! stationary problem.
//!
//! Boundary nodes carry a single unknown that is both the bulk trace and the
//! boundary state. The normal derivative is defined through the discrete Green
//! identity of the flux graph, which makes `M A` symmetric up to roundoff:
//!
//! ```text
//! w_Ω(b) Δ_h y(b) = Σ_e c_e (y_j - y_b) + w_Γ(b) D_ν y(b)
//! ```
//!
//! In 1D this reproduces the one-sided stencil `(3 y_0 - 4 y_1 + y_2) / 2h`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Layout, Mesh};
use crate::linalg::{csr_from_triplets, norm_inf, spmv, weighted_dot, SpdFactor};

/// Pre-symmetrization defect of `M A` above which assembly fails.
pub const ASSEMBLY_DEFECT_LIMIT: f64 = 1e-8;

/// A pair `(y, y_Γ)`: nodal bulk values and boundary values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledField {
    pub bulk: DVector<f64>,
    pub boundary: DVector<f64>,
}

impl CoupledField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            bulk: DVector::from_element(mesh.node_count(), c),
            boundary: DVector::from_element(mesh.boundary_count(), c),
        }
    }

    /// Field whose boundary part is the trace of `nodal`.
    pub fn from_nodal(mesh: &Mesh, nodal: DVector<f64>) -> Self {
        let boundary = mesh.restrict_to_boundary(&nodal);
        Self { bulk: nodal, boundary }
    }

    pub fn check_dims(&self, mesh: &Mesh) -> Result<()> {
        if self.bulk.len() != mesh.node_count() {
            return Err(Error::Dimension {
                what: "bulk field",
                expected: mesh.node_count(),
                got: self.bulk.len(),
            });
        }
        if self.boundary.len() != mesh.boundary_count() {
            return Err(Error::Dimension {
                what: "boundary field",
                expected: mesh.boundary_count(),
                got: self.boundary.len(),
            });
        }
        Ok(())
    }

    /// Shared-DOF vector: interior nodes keep `y`, boundary nodes take `y_Γ`.
    pub fn to_nodal(&self, mesh: &Mesh) -> DVector<f64> {
        let mut out = self.bulk.clone();
        for (slot, &i) in mesh.boundary_nodes().iter().enumerate() {
            out[i] = self.boundary[slot];
        }
        out
    }

    /// Largest `|y(b) - y_Γ(b)|` over boundary nodes.
    pub fn trace_mismatch(&self, mesh: &Mesh) -> f64 {
        mesh.boundary_nodes()
            .iter()
            .enumerate()
            .map(|(slot, &i)| (self.bulk[i] - self.boundary[slot]).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self, mesh: &Mesh) -> f64 {
        inner_l2(mesh, self, self).sqrt()
    }
}

/// `Σ w_Ω y z + Σ w_Γ y_Γ z_Γ`.
pub fn inner_l2(mesh: &Mesh, y: &CoupledField, z: &CoupledField) -> f64 {
    weighted_dot(mesh.bulk_weights(), &y.bulk, &z.bulk)
        + weighted_dot(mesh.boundary_weights(), &y.boundary, &z.boundary)
}

/// Lumped mass of the shared-DOF layout: `w_Ω`, plus `w_Γ` at boundary nodes.
pub fn nodal_mass(mesh: &Mesh) -> DVector<f64> {
    let mut m = mesh.bulk_weights().clone();
    for (slot, &i) in mesh.boundary_nodes().iter().enumerate() {
        m[i] += mesh.boundary_weights()[slot];
    }
    m
}

/// Discrete generator `A` with its blocks and mass.
#[derive(Clone)]
pub struct WentzellOperator {
    mesh: Mesh,
    d: f64,
    delta: f64,
    laplacian: CsrMatrix<f64>,
    normal_derivative: CsrMatrix<f64>,
    surface_laplacian: CsrMatrix<f64>,
    mass: DVector<f64>,
    stiffness: CsrMatrix<f64>,
    symmetry_defect: f64,
}

impl std::fmt::Debug for WentzellOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WentzellOperator")
            .field("nodes", &self.mesh.node_count())
            .field("d", &self.d)
            .field("delta", &self.delta)
            .field("symmetry_defect", &self.symmetry_defect)
            .finish()
    }
}

/// Assembles `Δ_h`, `D_ν`, `Δ_Γ`, the mass and the stiffness `K = -sym(M A)`.
///
/// On the interval the boundary is two points and `delta` is ignored.
pub fn assemble_operator(mesh: &Mesh, d: f64, delta: f64) -> Result<WentzellOperator> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: format!("must be positive, got {d}"),
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be nonnegative, got {delta}"),
        });
    }
    let delta = match mesh.layout() {
        Layout::Interval { .. } => 0.0,
        Layout::Disk { .. } => delta,
    };
    let n = mesh.node_count();
    let nb = mesh.boundary_count();
    let w = mesh.bulk_weights();
    let wg = mesh.boundary_weights();

    let lap_t = laplacian_triplets(mesh);
    let laplacian = csr_from_triplets(n, n, lap_t.iter().copied());

    // Green identity: w_Γ D_ν y(b) = w_Ω(b) Δ_h y(b) + Σ_e c_e (y_b - y_j)
    let mut dnu_t = Vec::new();
    for &(i, j, v) in &lap_t {
        if let Some(slot) = mesh.boundary_slot(i) {
            dnu_t.push((slot, j, w[i] * v / wg[slot]));
        }
    }
    for e in mesh.bulk_edges() {
        for (p, q) in [(e.a, e.b), (e.b, e.a)] {
            if let Some(slot) = mesh.boundary_slot(p) {
                dnu_t.push((slot, p, e.conductance / wg[slot]));
                dnu_t.push((slot, q, -e.conductance / wg[slot]));
            }
        }
    }
    let normal_derivative = csr_from_triplets(nb, n, dnu_t);

    let mut surf_t = Vec::new();
    for e in mesh.surface_edges() {
        for (p, q) in [(e.a, e.b), (e.b, e.a)] {
            surf_t.push((p, p, -e.conductance / wg[p]));
            surf_t.push((p, q, e.conductance / wg[p]));
        }
    }
    let surface_laplacian = csr_from_triplets(nb, nb, surf_t);

    // M A assembled from the blocks, then checked for symmetry.
    let mut ma: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, j, v) in laplacian.triplet_iter() {
        *ma.entry((i, j)).or_default() += d * w[i] * v;
    }
    let nodes = mesh.boundary_nodes();
    for (slot, j, v) in normal_derivative.triplet_iter() {
        *ma.entry((nodes[slot], j)).or_default() -= d * wg[slot] * v;
    }
    if delta > 0.0 {
        for (a, b, v) in surface_laplacian.triplet_iter() {
            *ma.entry((nodes[a], nodes[b])).or_default() += delta * wg[a] * v;
        }
    }
    let mut row_scale = vec![0.0f64; n];
    let mut row_defect = vec![0.0f64; n];
    for (&(i, j), &v) in &ma {
        row_scale[i] += v.abs();
        let vt = ma.get(&(j, i)).copied().unwrap_or(0.0);
        row_defect[i] += (v - vt).abs();
    }
    let scale = row_scale.iter().copied().fold(0.0, f64::max);
    let symmetry_defect = row_defect.iter().copied().fold(0.0, f64::max) / scale;
    if !(symmetry_defect <= ASSEMBLY_DEFECT_LIMIT) {
        return Err(Error::AssemblyDefect {
            defect: symmetry_defect,
            limit: ASSEMBLY_DEFECT_LIMIT,
        });
    }
    let stiffness = csr_from_triplets(
        n,
        n,
        ma.iter().map(|(&(i, j), &v)| {
            let vt = ma.get(&(j, i)).copied().unwrap_or(0.0);
            (i, j, -0.5 * (v + vt))
        }),
    );

    Ok(WentzellOperator {
        mesh: mesh.clone(),
        d,
        delta,
        laplacian,
        normal_derivative,
        surface_laplacian,
        mass: nodal_mass(mesh),
        stiffness,
        symmetry_defect,
    })
}

fn laplacian_triplets(mesh: &Mesh) -> Vec<(usize, usize, f64)> {
    let w = mesh.bulk_weights();
    let mut t = Vec::new();
    for e in mesh.bulk_edges() {
        for (p, q) in [(e.a, e.b), (e.b, e.a)] {
            if mesh.boundary_slot(p).is_none() {
                t.push((p, p, -e.conductance / w[p]));
                t.push((p, q, e.conductance / w[p]));
            }
        }
    }
    match mesh.layout() {
        Layout::Interval { cells, h, .. } => {
            let h2 = h * h;
            for (b, inward) in [(0usize, 1isize), (cells, -1)] {
                let at = |k: isize| (b as isize + k * inward) as usize;
                t.push((b, at(0), 1.0 / h2));
                t.push((b, at(1), -2.0 / h2));
                t.push((b, at(2), 1.0 / h2));
            }
        }
        Layout::Disk {
            rings,
            sectors,
            radius,
            dr,
            dtheta,
        } => {
            let node = |j: usize, k: usize| Layout::disk_node((rings, sectors), j, k);
            let (dr2, r2dt2) = (dr * dr, radius * radius * dtheta * dtheta);
            for k in 0..sectors {
                let b = node(rings, k);
                let (m1, m2) = (node(rings - 1, k), node(rings - 2, k));
                // y_rr + y_r / R with one-sided second-order stencils
                t.push((b, b, 1.0 / dr2 + 3.0 / (2.0 * dr * radius)));
                t.push((b, m1, -2.0 / dr2 - 4.0 / (2.0 * dr * radius)));
                t.push((b, m2, 1.0 / dr2 + 1.0 / (2.0 * dr * radius)));
                t.push((b, b, -2.0 / r2dt2));
                t.push((b, node(rings, k + 1), 1.0 / r2dt2));
                t.push((b, node(rings, k + sectors - 1), 1.0 / r2dt2));
            }
        }
    }
    t
}

/// Named sparse block for coordinate export.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Laplacian,
    NormalDerivative,
    SurfaceLaplacian,
    Stiffness,
}

impl Block {
    pub const ALL: [Block; 4] = [
        Block::Laplacian,
        Block::NormalDerivative,
        Block::SurfaceLaplacian,
        Block::Stiffness,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Block::Laplacian => "laplacian",
            Block::NormalDerivative => "normal_derivative",
            Block::SurfaceLaplacian => "surface_laplacian",
            Block::Stiffness => "stiffness",
        }
    }
}

impl WentzellOperator {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Effective surface diffusivity (0 on the interval).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.mesh.node_count()
    }

    /// `Δ_h`, nodes × nodes.
    pub fn laplacian(&self) -> &CsrMatrix<f64> {
        &self.laplacian
    }

    /// `D_ν`, boundary slots × nodes (outward).
    pub fn normal_derivative(&self) -> &CsrMatrix<f64> {
        &self.normal_derivative
    }

    /// `Δ_Γ`, boundary slots × boundary slots.
    pub fn surface_laplacian(&self) -> &CsrMatrix<f64> {
        &self.surface_laplacian
    }

    /// Diagonal of `M`.
    pub fn mass(&self) -> &DVector<f64> {
        &self.mass
    }

    /// `K = -M A`, symmetric positive semidefinite.
    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        &self.stiffness
    }

    /// Relative defect `|MA - (MA)^T|_inf / |MA|_inf` before symmetrization.
    pub fn symmetry_defect(&self) -> f64 {
        self.symmetry_defect
    }

    pub fn block(&self, block: Block) -> &CsrMatrix<f64> {
        match block {
            Block::Laplacian => &self.laplacian,
            Block::NormalDerivative => &self.normal_derivative,
            Block::SurfaceLaplacian => &self.surface_laplacian,
            Block::Stiffness => &self.stiffness,
        }
    }

    /// `(row, col, value)` entries of a block.
    pub fn block_triplets(&self, block: Block) -> Vec<(usize, usize, f64)> {
        self.block(block).triplet_iter().map(|(i, j, v)| (i, j, *v)).collect()
    }

    pub fn stiffness_norm_inf(&self) -> f64 {
        norm_inf(&self.stiffness)
    }

    /// `A y` on a shared-DOF vector.
    pub fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        -spmv(&self.stiffness, y).component_div(&self.mass)
    }

    pub fn apply_field(&self, y: &CoupledField) -> CoupledField {
        CoupledField::from_nodal(&self.mesh, self.apply(&y.to_nodal(&self.mesh)))
    }

    /// `Σ m_i y_i z_i`, the inner product of consistent fields.
    pub fn inner(&self, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        weighted_dot(&self.mass, y, z)
    }

    pub fn norm(&self, y: &DVector<f64>) -> f64 {
        self.inner(y, y).sqrt()
    }

    pub fn apply_laplacian(&self, y: &DVector<f64>) -> DVector<f64> {
        spmv(&self.laplacian, y)
    }

    pub fn apply_normal_derivative(&self, y: &DVector<f64>) -> DVector<f64> {
        spmv(&self.normal_derivative, y)
    }

    /// `Δ_Γ` applied to the trace of a nodal vector.
    pub fn apply_surface_laplacian(&self, y: &DVector<f64>) -> DVector<f64> {
        spmv(&self.surface_laplacian, &self.mesh.restrict_to_boundary(y))
    }

    /// `Σ_e c_e (y_a - y_b)^2`, the discrete `|∇y|^2` integral.
    pub fn bulk_gradient_sq(&self, y: &DVector<f64>) -> f64 {
        self.mesh
            .bulk_edges()
            .iter()
            .map(|e| e.conductance * (y[e.a] - y[e.b]).powi(2))
            .sum()
    }

    /// Discrete `|∇_Γ y_Γ|^2` integral (0 on the interval).
    pub fn surface_gradient_sq(&self, y: &DVector<f64>) -> f64 {
        let nodes = self.mesh.boundary_nodes();
        self.mesh
            .surface_edges()
            .iter()
            .map(|e| e.conductance * (y[nodes[e.a]] - y[nodes[e.b]]).powi(2))
            .sum()
    }

    /// `d |∇y|^2 + δ |∇_Γ y_Γ|^2`; equals `-<A y, y>`.
    pub fn dissipation(&self, y: &DVector<f64>) -> f64 {
        self.d * self.bulk_gradient_sq(y) + self.delta * self.surface_gradient_sq(y)
    }

    fn boundary_sq(&self, y: &DVector<f64>) -> f64 {
        let b = self.mesh.restrict_to_boundary(y);
        weighted_dot(self.mesh.boundary_weights(), &b, &b)
    }

    /// `|∇y|^2 + |∇_Γ y_Γ|^2 + |y_Γ|^2`.
    pub fn h1_norm_sq(&self, y: &DVector<f64>) -> f64 {
        self.bulk_gradient_sq(y) + self.surface_gradient_sq(y) + self.boundary_sq(y)
    }

    /// `|Δy|^2 + |Δ_Γ y_Γ|^2 + |y_Γ|^2`.
    pub fn h2_norm_sq(&self, y: &DVector<f64>) -> f64 {
        let ly = self.apply_laplacian(y);
        let lg = self.apply_surface_laplacian(y);
        weighted_dot(self.mesh.bulk_weights(), &ly, &ly)
            + weighted_dot(self.mesh.boundary_weights(), &lg, &lg)
            + self.boundary_sq(y)
    }

    /// Fourth-order proxy `|Δ²y|^2 + |Δ_Γ² y_Γ|^2 + |y_Γ|^2`.
    pub fn h4_proxy_sq(&self, y: &DVector<f64>) -> f64 {
        let l2y = self.apply_laplacian(&self.apply_laplacian(y));
        let lg = self.apply_surface_laplacian(y);
        let l2g = spmv(&self.surface_laplacian, &lg);
        weighted_dot(self.mesh.bulk_weights(), &l2y, &l2y)
            + weighted_dot(self.mesh.boundary_weights(), &l2g, &l2g)
            + self.boundary_sq(y)
    }

    /// Load vector `w_Ω f + w_Γ g` of a source pair.
    pub fn load(&self, f: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
        let mut out = f.component_mul(self.mesh.bulk_weights());
        for (slot, &i) in self.mesh.boundary_nodes().iter().enumerate() {
            out[i] += self.mesh.boundary_weights()[slot] * g[slot];
        }
        out
    }

    /// Load of boundary data only: `w_Γ g` scattered to boundary nodes.
    pub fn boundary_load(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (slot, &i) in self.mesh.boundary_nodes().iter().enumerate() {
            out[i] = self.mesh.boundary_weights()[slot] * g[slot];
        }
        out
    }

    /// Solves `dΔu = f` in the bulk and `δΔ_Γ u_Γ - d ∂_ν u - u_Γ = g` on the
    /// boundary, weakly: `(K + W_Γ) u = -(w_Ω f + w_Γ g)`.
    pub fn elliptic_solve(&self, f: &DVector<f64>, g: &DVector<f64>) -> Result<CoupledField> {
        if f.len() != self.dim() {
            return Err(Error::Dimension {
                what: "bulk source",
                expected: self.dim(),
                got: f.len(),
            });
        }
        if g.len() != self.mesh.boundary_count() {
            return Err(Error::Dimension {
                what: "boundary source",
                expected: self.mesh.boundary_count(),
                got: g.len(),
            });
        }
        let shift = self.boundary_load(&DVector::from_element(self.mesh.boundary_count(), 1.0));
        let matrix = csr_from_triplets(
            self.dim(),
            self.dim(),
            self.stiffness
                .triplet_iter()
                .map(|(i, j, v)| (i, j, *v))
                .chain((0..self.dim()).filter(|&i| shift[i] != 0.0).map(|i| (i, i, shift[i]))),
        );
        let factor = SpdFactor::new(matrix, "elliptic system")?;
        let rhs = -self.load(f, g);
        let (u, residual) = factor.solve_checked(&rhs);
        if !(residual <= 1e-10) {
            return Err(Error::LinearSolve {
                step: 0,
                residual,
                limit: 1e-10,
            });
        }
        Ok(CoupledField::from_nodal(&self.mesh, u))
    }

    /// Smallest nonzero `μ` with `K v = μ M v` and its `M`-normalized vector
    /// (so `A v = -μ v`), by shifted inverse iteration with the constants
    /// deflated.
    pub fn first_nonconstant_mode(&self) -> Result<(f64, DVector<f64>)> {
        let n = self.dim();
        let total_mass = self.mass.sum();
        let shift = self.stiffness_norm_inf() / self.mass.max() * 1e-3;
        let shifted = csr_from_triplets(
            n,
            n,
            self.stiffness
                .triplet_iter()
                .map(|(i, j, v)| (i, j, *v))
                .chain((0..n).map(|i| (i, i, shift * self.mass[i]))),
        );
        let factor = SpdFactor::new(shifted, "shifted stiffness")?;
        let deflate = |v: &mut DVector<f64>| {
            let mean = weighted_dot(&self.mass, v, &DVector::from_element(n, 1.0)) / total_mass;
            v.add_scalar_mut(-mean);
        };
        let mut v = DVector::from_fn(n, |i, _| ((i as f64 + 0.5) * 1.618_033_988_749_895).fract() - 0.5);
        for (i, c) in self.mesh.coords().iter().enumerate() {
            v[i] += c[0];
        }
        deflate(&mut v);
        let mut mu = 0.0;
        for _ in 0..1000 {
            let mut next = factor.solve(&v.component_mul(&self.mass));
            deflate(&mut next);
            let norm = self.norm(&next);
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Factorization {
                    what: "inverse iteration",
                });
            }
            next /= norm;
            let kv = spmv(&self.stiffness, &next);
            mu = next.dot(&kv);
            let residual = (kv.component_div(&self.mass) - &next * mu).amax();
            v = next;
            if residual <= 1e-11 * mu {
                break;
            }
        }
        Ok((mu, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};

    fn interval(n: usize) -> WentzellOperator {
        assemble_operator(&build_mesh(&DomainSpec::interval(1.0, n)).unwrap(), 1.0, 1.0).unwrap()
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let op = interval(8);
        assert!(op.apply(&DVector::from_element(9, 1.0)).amax() < 1e-12);
        let disk = assemble_operator(&build_mesh(&DomainSpec::disk(1.0, 4, 8)).unwrap(), 1.0, 0.5).unwrap();
        let ones = DVector::from_element(disk.dim(), 1.0);
        assert!(disk.apply(&ones).amax() < 1e-12 * disk.stiffness_norm_inf());
    }

    #[test]
    fn assembly_is_symmetric_to_roundoff() {
        let disk = assemble_operator(&build_mesh(&DomainSpec::disk(1.0, 4, 8)).unwrap(), 1.0, 0.5).unwrap();
        assert!(disk.symmetry_defect() <= 1e-12, "{}", disk.symmetry_defect());
        assert!(interval(32).symmetry_defect() <= 1e-12);
    }

    #[test]
    fn interval_normal_derivative_is_one_sided_second_order() {
        let op = interval(4);
        let h = 0.25;
        let t = op.block_triplets(Block::NormalDerivative);
        let row0: BTreeMap<usize, f64> = t.iter().filter(|e| e.0 == 0).map(|e| (e.1, e.2)).collect();
        assert!((row0[&0] - 3.0 / (2.0 * h)).abs() < 1e-12);
        assert!((row0[&1] + 4.0 / (2.0 * h)).abs() < 1e-12);
        assert!((row0[&2] - 1.0 / (2.0 * h)).abs() < 1e-12);
    }

    #[test]
    fn disk_normal_derivative_is_consistent() {
        let mut errs = Vec::new();
        for (nr, nt) in [(8, 32), (16, 64), (32, 128)] {
            let mesh = build_mesh(&DomainSpec::disk(1.0, nr, nt)).unwrap();
            let op = assemble_operator(&mesh, 1.0, 1.0).unwrap();
            // y = r^2 cos(θ)^2 + x: ∂_r at R = 1 is 2 cos^2 θ + cos θ
            let y = DVector::from_iterator(mesh.node_count(), mesh.coords().iter().map(|c| c[0] * c[0] + c[0]));
            let dn = op.apply_normal_derivative(&y);
            let err = mesh
                .normals()
                .iter()
                .zip(dn.iter())
                .map(|(n, v)| (v - (2.0 * n[0] * n[0] + n[0])).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[2] < 0.02, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn dissipation_matches_quadratic_form() {
        let mesh = build_mesh(&DomainSpec::disk(1.5, 5, 12)).unwrap();
        let op = assemble_operator(&mesh, 0.7, 0.3).unwrap();
        let y = DVector::from_fn(op.dim(), |i, _| ((i * 7 % 11) as f64).sin());
        let lhs = op.inner(&op.apply(&y), &y);
        let rhs = -op.dissipation(&y);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
    }

    #[test]
    fn inner_product_of_ones() {
        let mesh = build_mesh(&DomainSpec::interval(1.0, 10)).unwrap();
        let one = CoupledField::constant(&mesh, 1.0);
        assert!((inner_l2(&mesh, &one, &one) - 3.0).abs() < 1e-14);
        let disk = build_mesh(&DomainSpec::disk(1.0, 6, 24)).unwrap();
        let one = CoupledField::constant(&disk, 1.0);
        assert!((inner_l2(&disk, &one, &one) - 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn elliptic_constants() {
        let op = interval(16);
        let f = DVector::zeros(17);
        let u = op.elliptic_solve(&f, &DVector::from_element(2, -1.0)).unwrap();
        assert!((u.bulk.add_scalar(-1.0)).amax() < 1e-12);
        let u = op.elliptic_solve(&f, &DVector::zeros(2)).unwrap();
        assert_eq!(u.bulk.amax(), 0.0);
    }

    #[test]
    fn first_mode_is_an_eigenpair() {
        let op = interval(16);
        let (mu, v) = op.first_nonconstant_mode().unwrap();
        assert!(mu > 0.0);
        let r = op.apply(&v) + &v * mu;
        assert!(r.amax() < 1e-8 * mu);
        assert!((op.norm(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mesh = build_mesh(&DomainSpec::interval(1.0, 8)).unwrap();
        assert!(assemble_operator(&mesh, 0.0, 1.0).is_err());
        assert!(assemble_operator(&mesh, 1.0, -1.0).is_err());
    }
}
