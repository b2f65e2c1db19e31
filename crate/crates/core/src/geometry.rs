//! Discrete domains, quadrature and the boundary weight profile `eta`.
//!
//! Two domains are supported: an interval `[0, L]` whose boundary is the pair
//! of endpoints (counting measure), and a disk of radius `R` on a polar tensor
//! grid with a center node. Quadrature weights come from a control-volume
//! partition, so `sum(w_bulk)` is the exact area and `sum(w_boundary)` the
//! exact boundary measure.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{csr_from_triplets, SpdFactor};

/// Subset of the two interval endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoints {
    pub left: bool,
    pub right: bool,
}

impl Endpoints {
    pub const LEFT: Self = Self {
        left: true,
        right: false,
    };
    pub const RIGHT: Self = Self {
        left: false,
        right: true,
    };
    pub const BOTH: Self = Self {
        left: true,
        right: true,
    };

    pub fn is_empty(&self) -> bool {
        !self.left && !self.right
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        (!self.left || other.left) && (!self.right || other.right)
    }
}

/// Arc of the circle centered at `center` (angles mod 2π).
///
/// Node membership uses the closed arc, with a roundoff allowance, so that
/// nodes sitting exactly on an arc end are marked.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub center: f64,
    pub half_width: f64,
}

impl Arc {
    pub fn contains(&self, theta: f64) -> bool {
        angular_distance(theta, self.center) <= self.half_width * (1.0 + 1e-12)
    }

    /// Closure of `self` lies in the open arc `other`.
    pub fn is_compactly_inside(&self, other: &Arc) -> bool {
        angular_distance(self.center, other.center) + self.half_width < other.half_width
    }
}

/// Distance on the circle, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Geometry, resolution and subboundaries of a discrete domain.
///
/// `gamma` is the region where the weight profile is allowed to be positive on
/// the boundary; `gamma0` is the control/observation region and must contain
/// `gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Interval {
        length: f64,
        cells: usize,
        gamma: Endpoints,
        gamma0: Endpoints,
    },
    Disk {
        radius: f64,
        rings: usize,
        sectors: usize,
        gamma: Arc,
        gamma0: Arc,
    },
}

impl DomainSpec {
    pub fn interval(length: f64, cells: usize) -> Self {
        Self::Interval {
            length,
            cells,
            gamma: Endpoints::RIGHT,
            gamma0: Endpoints::RIGHT,
        }
    }

    /// Disk with `gamma` of half-width π/8 and `gamma0` of half-width π/4,
    /// both centered at angle 0.
    pub fn disk(radius: f64, rings: usize, sectors: usize) -> Self {
        Self::Disk {
            radius,
            rings,
            sectors,
            gamma: Arc {
                center: 0.0,
                half_width: PI / 8.0,
            },
            gamma0: Arc {
                center: 0.0,
                half_width: PI / 4.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::Interval {
                length,
                cells,
                gamma,
                gamma0,
            } => {
                if !(length > 0.0 && length.is_finite()) {
                    return Err(Error::InvalidDomain(format!("length must be positive, got {length}")));
                }
                if cells < 4 {
                    return Err(Error::InvalidDomain(format!(
                        "interval needs at least 4 cells, got {cells}"
                    )));
                }
                if gamma.is_empty() {
                    return Err(Error::InvalidDomain("gamma is empty".into()));
                }
                if !gamma.is_subset_of(&gamma0) {
                    return Err(Error::InvalidDomain("gamma is not contained in gamma0".into()));
                }
            }
            DomainSpec::Disk {
                radius,
                rings,
                sectors,
                gamma,
                gamma0,
            } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidDomain(format!("radius must be positive, got {radius}")));
                }
                if rings < 2 || sectors < 4 {
                    return Err(Error::InvalidDomain(format!(
                        "disk needs at least 2 rings and 4 sectors, got {rings} x {sectors}"
                    )));
                }
                if !(gamma.half_width > 0.0 && gamma.half_width < PI) {
                    return Err(Error::InvalidDomain(format!(
                        "gamma half-width must lie in (0, π), got {}",
                        gamma.half_width
                    )));
                }
                if !(gamma0.half_width > 0.0 && gamma0.half_width <= PI) {
                    return Err(Error::InvalidDomain(format!(
                        "gamma0 half-width must lie in (0, π], got {}",
                        gamma0.half_width
                    )));
                }
                if !gamma.is_compactly_inside(&gamma0) {
                    return Err(Error::InvalidDomain(
                        "gamma arc is not strictly inside the gamma0 arc".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Structured layout of the nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Layout {
    /// Nodes `x_i = i h`, `i = 0..=cells`.
    Interval { cells: usize, h: f64, length: f64 },
    /// Node 0 is the center; node `1 + (j-1) sectors + k` sits at radius
    /// `j dr` and angle `(k + 1/2) dtheta`, `j = 1..=rings`.
    Disk {
        rings: usize,
        sectors: usize,
        radius: f64,
        dr: f64,
        dtheta: f64,
    },
}

impl Layout {
    pub fn disk_node(rings_sectors: (usize, usize), ring: usize, sector: usize) -> usize {
        let (_, sectors) = rings_sectors;
        if ring == 0 {
            0
        } else {
            1 + (ring - 1) * sectors + sector % sectors
        }
    }
}

/// Edge of a flux graph with its conductance (face measure over node distance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
}

/// Nodes, quadrature and boundary structure of a discrete domain.
#[derive(Clone, Debug)]
pub struct Mesh {
    spec: DomainSpec,
    layout: Layout,
    coords: Vec<[f64; 2]>,
    boundary_nodes: Vec<usize>,
    interior_nodes: Vec<usize>,
    boundary_slot: Vec<Option<usize>>,
    bulk_weights: DVector<f64>,
    boundary_weights: DVector<f64>,
    normals: Vec<[f64; 2]>,
    in_gamma: Vec<bool>,
    in_gamma0: Vec<bool>,
    bulk_edges: Vec<Edge>,
    surface_edges: Vec<Edge>,
}

impl Mesh {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_nodes.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Node index of each boundary slot, in boundary order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn boundary_slot(&self, node: usize) -> Option<usize> {
        self.boundary_slot[node]
    }

    /// Bulk quadrature weights `w_Ω`, one per node.
    pub fn bulk_weights(&self) -> &DVector<f64> {
        &self.bulk_weights
    }

    /// Boundary quadrature weights `w_Γ`, one per boundary slot.
    pub fn boundary_weights(&self) -> &DVector<f64> {
        &self.boundary_weights
    }

    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    pub fn gamma_mask(&self) -> &[bool] {
        &self.in_gamma
    }

    pub fn gamma0_mask(&self) -> &[bool] {
        &self.in_gamma0
    }

    /// Flux graph of the bulk control volumes.
    pub fn bulk_edges(&self) -> &[Edge] {
        &self.bulk_edges
    }

    /// Flux graph along the boundary (indices are boundary slots).
    pub fn surface_edges(&self) -> &[Edge] {
        &self.surface_edges
    }

    pub fn volume(&self) -> f64 {
        match self.spec {
            DomainSpec::Interval { length, .. } => length,
            DomainSpec::Disk { radius, .. } => PI * radius * radius,
        }
    }

    pub fn boundary_measure(&self) -> f64 {
        match self.spec {
            DomainSpec::Interval { .. } => 2.0,
            DomainSpec::Disk { radius, .. } => 2.0 * PI * radius,
        }
    }

    /// Boundary values of a nodal vector.
    pub fn restrict_to_boundary(&self, nodal: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.boundary_count(), self.boundary_nodes.iter().map(|&i| nodal[i]))
    }
}

/// Builds the nodes, quadrature weights, normals, subboundary masks and flux
/// graphs of `spec`.
pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh> {
    spec.validate()?;
    let mesh = match *spec {
        DomainSpec::Interval {
            length,
            cells,
            gamma,
            gamma0,
        } => interval_mesh(spec.clone(), length, cells, gamma, gamma0),
        DomainSpec::Disk {
            radius,
            rings,
            sectors,
            gamma,
            gamma0,
        } => disk_mesh(spec.clone(), radius, rings, sectors, gamma, gamma0)?,
    };
    Ok(mesh)
}

fn interval_mesh(spec: DomainSpec, length: f64, cells: usize, gamma: Endpoints, gamma0: Endpoints) -> Mesh {
    let h = length / cells as f64;
    let n = cells + 1;
    let coords = (0..n).map(|i| [i as f64 * h, 0.0]).collect();
    let bulk_weights = DVector::from_fn(n, |i, _| if i == 0 || i == cells { 0.5 * h } else { h });
    let mut boundary_slot = vec![None; n];
    boundary_slot[0] = Some(0);
    boundary_slot[cells] = Some(1);
    let bulk_edges = (0..cells)
        .map(|i| Edge {
            a: i,
            b: i + 1,
            conductance: 1.0 / h,
        })
        .collect();
    Mesh {
        spec,
        layout: Layout::Interval { cells, h, length },
        coords,
        boundary_nodes: vec![0, cells],
        interior_nodes: (1..cells).collect(),
        boundary_slot,
        bulk_weights,
        boundary_weights: DVector::from_element(2, 1.0),
        normals: vec![[-1.0, 0.0], [1.0, 0.0]],
        in_gamma: vec![gamma.left, gamma.right],
        in_gamma0: vec![gamma0.left, gamma0.right],
        bulk_edges,
        surface_edges: Vec::new(),
    }
}

fn disk_mesh(spec: DomainSpec, radius: f64, rings: usize, sectors: usize, gamma: Arc, gamma0: Arc) -> Result<Mesh> {
    let dr = radius / rings as f64;
    let dtheta = 2.0 * PI / sectors as f64;
    let n = 1 + rings * sectors;
    let node = |j: usize, k: usize| Layout::disk_node((rings, sectors), j, k);
    let angle = |k: usize| (k as f64 + 0.5) * dtheta;

    let mut coords = vec![[0.0, 0.0]; n];
    let mut bulk_weights = DVector::zeros(n);
    bulk_weights[0] = PI * (0.5 * dr) * (0.5 * dr);
    for j in 1..=rings {
        let r = j as f64 * dr;
        let inner = r - 0.5 * dr;
        let outer = if j == rings { radius } else { r + 0.5 * dr };
        let area = 0.5 * (outer * outer - inner * inner) * dtheta;
        for k in 0..sectors {
            let i = node(j, k);
            coords[i] = [r * angle(k).cos(), r * angle(k).sin()];
            bulk_weights[i] = area;
        }
    }

    let boundary_nodes: Vec<usize> = (0..sectors).map(|k| node(rings, k)).collect();
    let mut boundary_slot = vec![None; n];
    for (slot, &i) in boundary_nodes.iter().enumerate() {
        boundary_slot[i] = Some(slot);
    }
    let interior_nodes = (0..n).filter(|i| boundary_slot[*i].is_none()).collect();
    let normals = (0..sectors).map(|k| [angle(k).cos(), angle(k).sin()]).collect();
    let in_gamma: Vec<bool> = (0..sectors).map(|k| gamma.contains(angle(k))).collect();
    let in_gamma0: Vec<bool> = (0..sectors).map(|k| gamma0.contains(angle(k))).collect();
    if !in_gamma.iter().any(|&b| b) {
        return Err(Error::EmptySubboundary {
            which: "gamma",
            detail: format!(
                "arc half-width {} marks no node at angular spacing {dtheta}",
                gamma.half_width
            ),
        });
    }
    if !in_gamma0.iter().any(|&b| b) {
        return Err(Error::EmptySubboundary {
            which: "gamma0",
            detail: format!(
                "arc half-width {} marks no node at angular spacing {dtheta}",
                gamma0.half_width
            ),
        });
    }

    let mut bulk_edges = Vec::new();
    for j in 0..rings {
        // face between ring j and j + 1 sits at radius (j + 1/2) dr
        let face = (j as f64 + 0.5) * dr * dtheta;
        for k in 0..sectors {
            bulk_edges.push(Edge {
                a: node(j, k),
                b: node(j + 1, k),
                conductance: face / dr,
            });
        }
    }
    for j in 1..=rings {
        let r = j as f64 * dr;
        let face = if j == rings { 0.5 * dr } else { dr };
        for k in 0..sectors {
            bulk_edges.push(Edge {
                a: node(j, k),
                b: node(j, k + 1),
                conductance: face / (r * dtheta),
            });
        }
    }
    let surface_edges = (0..sectors)
        .map(|k| Edge {
            a: k,
            b: (k + 1) % sectors,
            conductance: 1.0 / (radius * dtheta),
        })
        .collect();

    Ok(Mesh {
        spec,
        layout: Layout::Disk {
            rings,
            sectors,
            radius,
            dr,
            dtheta,
        },
        coords,
        boundary_nodes,
        interior_nodes,
        boundary_slot,
        bulk_weights,
        boundary_weights: DVector::from_element(sectors, radius * dtheta),
        normals,
        in_gamma,
        in_gamma0,
        bulk_edges,
        surface_edges,
    })
}

/// Cartesian gradient estimate at every node: central differences inside,
/// second-order one-sided differences at the boundary. At the disk center the
/// gradient is the first Fourier mode of the first ring.
pub fn nodal_gradient(mesh: &Mesh, values: &DVector<f64>) -> Vec<[f64; 2]> {
    match mesh.layout {
        Layout::Interval { cells, h, .. } => (0..=cells)
            .map(|i| {
                let g = if i == 0 {
                    (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
                } else if i == cells {
                    (3.0 * values[cells] - 4.0 * values[cells - 1] + values[cells - 2]) / (2.0 * h)
                } else {
                    (values[i + 1] - values[i - 1]) / (2.0 * h)
                };
                [g, 0.0]
            })
            .collect(),
        Layout::Disk {
            rings,
            sectors,
            dr,
            dtheta,
            ..
        } => {
            let node = |j: usize, k: usize| Layout::disk_node((rings, sectors), j, k);
            let mut out = vec![[0.0, 0.0]; mesh.node_count()];
            let (mut gx, mut gy) = (0.0, 0.0);
            for k in 0..sectors {
                let th = (k as f64 + 0.5) * dtheta;
                gx += values[node(1, k)] * th.cos();
                gy += values[node(1, k)] * th.sin();
            }
            let scale = 2.0 / (sectors as f64 * dr);
            out[0] = [gx * scale, gy * scale];
            for j in 1..=rings {
                let r = j as f64 * dr;
                for k in 0..sectors {
                    let th = (k as f64 + 0.5) * dtheta;
                    let d_r = if j == rings {
                        (3.0 * values[node(j, k)] - 4.0 * values[node(j - 1, k)] + values[node(j - 2, k)]) / (2.0 * dr)
                    } else {
                        (values[node(j + 1, k)] - values[node(j - 1, k)]) / (2.0 * dr)
                    };
                    let prev = node(j, (k + sectors - 1) % sectors);
                    let d_t = (values[node(j, k + 1)] - values[prev]) / (2.0 * r * dtheta);
                    out[node(j, k)] = [d_r * th.cos() - d_t * th.sin(), d_r * th.sin() + d_t * th.cos()];
                }
            }
            out
        }
    }
}

/// Outward normal derivative estimate at each boundary slot (one-sided,
/// second order).
pub fn boundary_normal_derivative(mesh: &Mesh, values: &DVector<f64>) -> DVector<f64> {
    let grad = nodal_gradient(mesh, values);
    DVector::from_iterator(
        mesh.boundary_count(),
        mesh.boundary_nodes
            .iter()
            .zip(&mesh.normals)
            .map(|(&i, n)| grad[i][0] * n[0] + grad[i][1] * n[1]),
    )
}

/// Tangential derivative along the boundary (periodic central differences on
/// the circle; identically zero on the endpoints of an interval).
pub fn tangential_derivative(mesh: &Mesh, boundary_values: &DVector<f64>) -> DVector<f64> {
    match mesh.layout {
        Layout::Interval { .. } => DVector::zeros(mesh.boundary_count()),
        Layout::Disk {
            sectors,
            radius,
            dtheta,
            ..
        } => DVector::from_fn(sectors, |k, _| {
            let next = boundary_values[(k + 1) % sectors];
            let prev = boundary_values[(k + sectors - 1) % sectors];
            (next - prev) / (2.0 * radius * dtheta)
        }),
    }
}

/// Tangential derivative on the closed set `Γ \ γ`, using only values from
/// that set (one-sided next to `γ`).
fn tangential_derivative_outside_gamma(mesh: &Mesh, boundary_values: &DVector<f64>) -> DVector<f64> {
    let Layout::Disk {
        sectors,
        radius,
        dtheta,
        ..
    } = mesh.layout
    else {
        return DVector::zeros(mesh.boundary_count());
    };
    let ds = radius * dtheta;
    let outside = |k: isize| !mesh.in_gamma[k.rem_euclid(sectors as isize) as usize];
    let val = |k: isize| boundary_values[k.rem_euclid(sectors as isize) as usize];
    DVector::from_fn(sectors, |k, _| {
        let k = k as isize;
        match (outside(k - 1), outside(k + 1)) {
            (true, true) => (val(k + 1) - val(k - 1)) / (2.0 * ds),
            (false, true) if outside(k + 2) => (-3.0 * val(k) + 4.0 * val(k + 1) - val(k + 2)) / (2.0 * ds),
            (false, true) => (val(k + 1) - val(k)) / ds,
            (true, false) if outside(k - 2) => (3.0 * val(k) - 4.0 * val(k - 1) + val(k - 2)) / (2.0 * ds),
            (true, false) => (val(k) - val(k - 1)) / ds,
            (false, false) => (val(k + 1) - val(k - 1)) / (2.0 * ds),
        }
    })
}

/// Boundary profile of the disk weight function.
///
/// On the arc `|theta - c| < support_fraction * half_width(gamma)` the boundary
/// data is `peak * (1 - u^2)^3` with `u` the normalized angular offset; it
/// vanishes elsewhere, with two flat derivatives at the arc ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBump {
    pub peak: f64,
    pub support_fraction: f64,
}

impl Default for EtaBump {
    fn default() -> Self {
        Self {
            peak: 1.0,
            support_fraction: 1.0,
        }
    }
}

impl EtaBump {
    pub fn profile(&self, arc: &Arc, theta: f64) -> f64 {
        let width = self.support_fraction * arc.half_width;
        let u = angular_distance(theta, arc.center) / width;
        if u < 1.0 {
            self.peak * (1.0 - u * u).powi(3)
        } else {
            0.0
        }
    }
}

/// Nodal values of the weight function together with derivative estimates.
#[derive(Clone, Debug)]
pub struct EtaField {
    pub values: DVector<f64>,
    pub gradient: Vec<[f64; 2]>,
    /// Tangential derivative per boundary slot.
    pub tangential: DVector<f64>,
    /// Outward normal derivative per boundary slot.
    pub normal: DVector<f64>,
}

impl EtaField {
    fn from_values(mesh: &Mesh, values: DVector<f64>) -> Self {
        let boundary = mesh.restrict_to_boundary(&values);
        Self {
            gradient: nodal_gradient(mesh, &values),
            tangential: tangential_derivative(mesh, &boundary),
            normal: boundary_normal_derivative(mesh, &values),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }
}

/// Constructs the weight function `eta`.
///
/// Interval: the affine profile vanishing at the endpoint outside `gamma` and
/// equal to 1 at the other one (`eta(x) = x / L` for `gamma = {right}`).
/// Disk: the discrete harmonic extension of the [`EtaBump`] boundary data.
pub fn build_eta(mesh: &Mesh, bump: &EtaBump) -> Result<EtaField> {
    let values = match mesh.spec {
        DomainSpec::Interval { length, gamma, .. } => {
            let slope_right = gamma.right || !gamma.left;
            DVector::from_iterator(
                mesh.node_count(),
                mesh.coords.iter().map(|c| {
                    if slope_right {
                        c[0] / length
                    } else {
                        1.0 - c[0] / length
                    }
                }),
            )
        }
        DomainSpec::Disk { gamma, .. } => {
            if !(bump.support_fraction > 0.0 && bump.support_fraction <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "support_fraction",
                    reason: format!("must lie in (0, 1], got {}", bump.support_fraction),
                });
            }
            let mut values = DVector::zeros(mesh.node_count());
            for (slot, &i) in mesh.boundary_nodes.iter().enumerate() {
                let n = mesh.normals[slot];
                values[i] = bump.profile(&gamma, n[1].atan2(n[0]));
            }
            harmonic_extension(mesh, &mut values)?;
            values
        }
    };
    Ok(EtaField::from_values(mesh, values))
}

/// Fills interior values so that the discrete Laplacian vanishes at every
/// interior node, keeping the boundary values of `values`.
fn harmonic_extension(mesh: &Mesh, values: &mut DVector<f64>) -> Result<()> {
    let mut local = vec![usize::MAX; mesh.node_count()];
    for (li, &i) in mesh.interior_nodes.iter().enumerate() {
        local[i] = li;
    }
    let ni = mesh.interior_nodes.len();
    let mut triplets = Vec::new();
    let mut rhs = DVector::zeros(ni);
    for e in &mesh.bulk_edges {
        for (p, q) in [(e.a, e.b), (e.b, e.a)] {
            if local[p] == usize::MAX {
                continue;
            }
            triplets.push((local[p], local[p], e.conductance));
            if local[q] == usize::MAX {
                rhs[local[p]] += e.conductance * values[q];
            } else {
                triplets.push((local[p], local[q], -e.conductance));
            }
        }
    }
    let factor = SpdFactor::new(csr_from_triplets(ni, ni, triplets), "interior Laplacian")?;
    let (interior, residual) = factor.solve_checked(&rhs);
    if !residual.is_finite() || residual > 1e-10 {
        return Err(Error::Factorization {
            what: "interior Laplacian",
        });
    }
    for (li, &i) in mesh.interior_nodes.iter().enumerate() {
        values[i] = interior[li];
    }
    Ok(())
}

/// Which of the four weight-function conditions failed, and where.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaViolation {
    pub condition: String,
    pub node: usize,
    pub value: f64,
}

/// Outcome of [`verify_eta`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaReport {
    /// Largest `c0` such that `|grad eta| >= c0` everywhere and
    /// `d_nu eta <= -c0` on `Γ \ γ` (clamped at 0).
    pub c0: f64,
    pub min_interior_eta: f64,
    pub min_gradient_norm: f64,
    /// Maximum of `d_nu eta` over `Γ \ γ` (`-inf` when `Γ \ γ` is empty).
    pub max_normal_derivative_outside_gamma: f64,
    pub max_abs_eta_outside_gamma: f64,
    pub max_abs_tangential_outside_gamma: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub violations: Vec<EtaViolation>,
}

/// Checks, node by node: (i) `eta > 0` at interior nodes, (ii)
/// `|grad eta| >= c0`, (iii) `d_nu eta <= -c0` on `Γ \ γ` and (iv) `|eta|` and
/// `|grad_Γ eta|` at most `tol` on `Γ \ γ`.
pub fn verify_eta(eta: &EtaField, mesh: &Mesh, tol: f64) -> EtaReport {
    let mut violations = Vec::new();

    let mut min_interior = f64::INFINITY;
    for &i in &mesh.interior_nodes {
        let v = eta.values[i];
        min_interior = min_interior.min(v);
        if !(v > 0.0) {
            violations.push(EtaViolation {
                condition: "(i) eta > 0 in the interior".into(),
                node: i,
                value: v,
            });
        }
    }

    let mut min_grad = f64::INFINITY;
    let mut argmin_grad = 0;
    for (i, g) in eta.gradient.iter().enumerate() {
        let norm = g[0].hypot(g[1]);
        if norm < min_grad {
            min_grad = norm;
            argmin_grad = i;
        }
    }

    let boundary = mesh.restrict_to_boundary(&eta.values);
    let tangential = tangential_derivative_outside_gamma(mesh, &boundary);
    let mut max_normal = f64::NEG_INFINITY;
    let mut argmax_normal = None;
    let mut max_eta = 0.0f64;
    let mut max_tangential = 0.0f64;
    for (slot, &i) in mesh.boundary_nodes.iter().enumerate() {
        if mesh.in_gamma[slot] {
            continue;
        }
        if eta.normal[slot] > max_normal {
            max_normal = eta.normal[slot];
            argmax_normal = Some(i);
        }
        let abs_eta = boundary[slot].abs();
        max_eta = max_eta.max(abs_eta);
        if abs_eta > tol {
            violations.push(EtaViolation {
                condition: "(iv) eta = 0 on the boundary outside gamma".into(),
                node: i,
                value: boundary[slot],
            });
        }
        let abs_t = tangential[slot].abs();
        max_tangential = max_tangential.max(abs_t);
        if abs_t > tol {
            violations.push(EtaViolation {
                condition: "(iv) tangential gradient = 0 outside gamma".into(),
                node: i,
                value: tangential[slot],
            });
        }
    }

    let c0 = min_grad.min(-max_normal).max(0.0);
    if !(min_grad > 0.0) {
        violations.push(EtaViolation {
            condition: "(ii) |grad eta| >= c0 > 0".into(),
            node: argmin_grad,
            value: min_grad,
        });
    }
    if let Some(node) = argmax_normal {
        if !(max_normal < 0.0) {
            violations.push(EtaViolation {
                condition: "(iii) normal derivative <= -c0 outside gamma".into(),
                node,
                value: max_normal,
            });
        }
    }

    EtaReport {
        c0,
        min_interior_eta: min_interior,
        min_gradient_norm: min_grad,
        max_normal_derivative_outside_gamma: max_normal,
        max_abs_eta_outside_gamma: max_eta,
        max_abs_tangential_outside_gamma: max_tangential,
        tolerance: tol,
        pass: violations.is_empty() && c0 > 0.0,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_trapezoid_weights() {
        let mesh = build_mesh(&DomainSpec::interval(1.0, 4)).unwrap();
        assert_eq!(mesh.node_count(), 5);
        let w: Vec<f64> = mesh.bulk_weights().iter().copied().collect();
        assert_eq!(w, vec![0.125, 0.25, 0.25, 0.25, 0.125]);
        assert_eq!(mesh.bulk_weights().sum(), 1.0);
        assert_eq!(mesh.boundary_weights().sum(), 2.0);
    }

    #[test]
    fn small_disk_node_count_and_circumference() {
        let spec = DomainSpec::Disk {
            radius: 1.0,
            rings: 2,
            sectors: 4,
            gamma: Arc {
                center: 0.0,
                half_width: PI / 2.0,
            },
            gamma0: Arc {
                center: 0.0,
                half_width: 3.0 * PI / 4.0,
            },
        };
        let mesh = build_mesh(&spec).unwrap();
        assert_eq!(mesh.node_count(), 9);
        assert!((mesh.boundary_weights().sum() - 2.0 * PI).abs() < 1e-12 * 2.0 * PI);
        assert!((mesh.bulk_weights().sum() - PI).abs() < 1e-12 * PI);
    }

    #[test]
    fn gamma_mask_counts_nodes_inside_the_arc() {
        let spec = DomainSpec::Disk {
            radius: 1.0,
            rings: 4,
            sectors: 64,
            gamma: Arc {
                center: 0.0,
                half_width: PI / 8.0,
            },
            gamma0: Arc {
                center: 0.0,
                half_width: PI / 4.0,
            },
        };
        let mesh = build_mesh(&spec).unwrap();
        let marked: Vec<usize> = (0..64).filter(|&k| mesh.gamma_mask()[k]).collect();
        assert_eq!(marked.len(), 8);
        for k in 0..64 {
            let n = mesh.normals()[k];
            let theta = n[1].atan2(n[0]);
            assert_eq!(mesh.gamma_mask()[k], theta.abs() < PI / 8.0);
        }
    }

    #[test]
    fn masks_are_nested() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 6, 48)).unwrap();
        for (g, g0) in mesh.gamma_mask().iter().zip(mesh.gamma0_mask()) {
            assert!(!g || *g0);
        }
        assert!(mesh.bulk_weights().iter().all(|w| *w > 0.0));
        assert!(mesh.boundary_weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn arc_narrower_than_spacing_is_rejected() {
        let spec = DomainSpec::Disk {
            radius: 1.0,
            rings: 4,
            sectors: 8,
            gamma: Arc {
                center: 0.0,
                half_width: 0.1,
            },
            gamma0: Arc {
                center: 0.0,
                half_width: 1.0,
            },
        };
        assert!(matches!(
            build_mesh(&spec),
            Err(Error::EmptySubboundary { which: "gamma", .. })
        ));
    }

    #[test]
    fn gamma_must_sit_inside_gamma0() {
        let spec = DomainSpec::Disk {
            radius: 1.0,
            rings: 4,
            sectors: 32,
            gamma: Arc {
                center: 0.0,
                half_width: 0.5,
            },
            gamma0: Arc {
                center: 0.3,
                half_width: 0.6,
            },
        };
        assert!(matches!(build_mesh(&spec), Err(Error::InvalidDomain(_))));
        let interval = DomainSpec::Interval {
            length: 1.0,
            cells: 8,
            gamma: Endpoints::BOTH,
            gamma0: Endpoints::RIGHT,
        };
        assert!(build_mesh(&interval).is_err());
    }

    #[test]
    fn interval_eta_is_the_identity_profile() {
        let mesh = build_mesh(&DomainSpec::interval(1.0, 10)).unwrap();
        let eta = build_eta(&mesh, &EtaBump::default()).unwrap();
        for (i, c) in mesh.coords().iter().enumerate() {
            assert!((eta.values[i] - c[0]).abs() < 1e-15);
        }
        assert_eq!(eta.values[0], 0.0);
        assert_eq!(eta.values[10], 1.0);
        let report = verify_eta(&eta, &mesh, 1e-12);
        assert!(report.pass, "{report:?}");
        assert!((report.c0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_certificate_is_independent_of_resolution() {
        for cells in [4, 7, 32, 129] {
            let mesh = build_mesh(&DomainSpec::interval(1.0, cells)).unwrap();
            let eta = build_eta(&mesh, &EtaBump::default()).unwrap();
            let report = verify_eta(&eta, &mesh, 1e-12);
            assert!(report.pass);
            assert!((report.c0 - 1.0).abs() < 1e-12, "cells {cells}: c0 {}", report.c0);
        }
    }

    #[test]
    fn zero_profile_fails_conditions_one_and_two() {
        let mesh = build_mesh(&DomainSpec::interval(1.0, 8)).unwrap();
        let eta = EtaField::from_values(&mesh, DVector::zeros(9));
        let report = verify_eta(&eta, &mesh, 1e-12);
        assert!(!report.pass);
        assert!(report.violations.iter().any(|v| v.condition.starts_with("(i)")));
        assert!(report.violations.iter().any(|v| v.condition.starts_with("(ii)")));
    }

    #[test]
    fn disk_eta_obeys_the_maximum_principle() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 12, 48)).unwrap();
        let eta = build_eta(&mesh, &EtaBump::default()).unwrap();
        let max_boundary = mesh.restrict_to_boundary(&eta.values).max();
        assert!(eta.values.max() <= max_boundary + 1e-14);
        for &i in mesh.interior_nodes() {
            assert!(eta.values[i] > 0.0);
        }
    }

    #[test]
    fn tangential_derivative_of_a_cosine() {
        let mesh = build_mesh(&DomainSpec::disk(2.0, 4, 128)).unwrap();
        let b = DVector::from_iterator(128, mesh.normals().iter().map(|n| n[0]));
        let t = tangential_derivative(&mesh, &b);
        for (k, n) in mesh.normals().iter().enumerate() {
            // d/ds cos(theta) on a circle of radius 2
            assert!((t[k] + n[1] / 2.0).abs() < 1e-3);
        }
    }
}
