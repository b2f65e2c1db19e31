//! Forward and adjoint time stepping.
//!
//! One step of the θ-scheme with `L = M + θ Δt K` and `R = M - (1-θ) Δt K`:
//!
//! ```text
//! L Y_{k+1} = R Y_k + Δt (P(S_k^θ) + B v_k)
//! ```
//!
//! where `P(f, g) = w_Ω f + w_Γ g`, `S_k^θ = (1-θ) S_k + θ S_{k+1}` and
//! `B v = w_Γ 1_{Γ⁰} v`. The adjoint step is the exact transpose of this map
//! in the `M` inner product, so the duality pairing holds to roundoff.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{csr_from_triplets, spmv, SpdFactor};
use crate::operators::{assemble_operator, CoupledField, WentzellOperator};
use crate::rng::SampleRng;

/// Per-step relative residual allowed in the linear solves.
pub const STEP_RESIDUAL_LIMIT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn theta(&self) -> f64 {
        match self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit-euler",
            Scheme::CrankNicolson => "crank-nicolson",
        }
    }
}

/// Uniform grid `t_k = k T / n_t` on `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
    scheme: Scheme,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize, scheme: Scheme) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("must be positive, got {t_final}"),
            });
        }
        if steps < 4 {
            return Err(Error::InvalidParameter {
                name: "n_t",
                reason: format!("need at least 4 steps, got {steps}"),
            });
        }
        Ok(Self { t_final, steps, scheme })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_final
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// Source pair `(f, g)` sampled at every time node (`n_t + 1` samples).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSeries {
    pub bulk: Vec<DVector<f64>>,
    pub boundary: Vec<DVector<f64>>,
}

impl SourceSeries {
    pub fn zeros(mesh: &Mesh, grid: &TimeGrid) -> Self {
        Self {
            bulk: vec![DVector::zeros(mesh.node_count()); grid.steps() + 1],
            boundary: vec![DVector::zeros(mesh.boundary_count()); grid.steps() + 1],
        }
    }

    /// Samples `(f(t, x), g(t, x))` at nodes and boundary nodes.
    pub fn from_fn(
        mesh: &Mesh,
        grid: &TimeGrid,
        f: impl Fn(f64, [f64; 2]) -> f64,
        g: impl Fn(f64, [f64; 2]) -> f64,
    ) -> Self {
        let times = grid.times();
        let bulk = times
            .iter()
            .map(|&t| DVector::from_iterator(mesh.node_count(), mesh.coords().iter().map(|&c| f(t, c))))
            .collect();
        let boundary = times
            .iter()
            .map(|&t| {
                DVector::from_iterator(
                    mesh.boundary_count(),
                    mesh.boundary_nodes().iter().map(|&i| g(t, mesh.coords()[i])),
                )
            })
            .collect();
        Self { bulk, boundary }
    }

    /// Smooth-in-time random source with a consistent trace. With
    /// `vanish_at_final` the source carries the factor `1 - t/T`.
    pub fn random_smooth(mesh: &Mesh, grid: &TimeGrid, rng: &mut SampleRng, vanish_at_final: bool) -> Self {
        let a = rng.vector(mesh.node_count());
        let b = rng.vector(mesh.node_count());
        let t_final = grid.t_final();
        let bulk: Vec<DVector<f64>> = grid
            .times()
            .iter()
            .map(|&t| {
                let tau = if vanish_at_final { 1.0 - t / t_final } else { 1.0 };
                let u = std::f64::consts::PI * t / t_final;
                (&a * (1.0 + (2.0 * u).sin()) + &b * u.cos()) * tau
            })
            .collect();
        let boundary = bulk.iter().map(|f| mesh.restrict_to_boundary(f)).collect();
        Self { bulk, boundary }
    }

    pub fn len(&self) -> usize {
        self.bulk.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bulk.is_empty()
    }

    pub fn sample(&self, k: usize) -> CoupledField {
        CoupledField {
            bulk: self.bulk[k].clone(),
            boundary: self.boundary[k].clone(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.bulk.iter_mut().chain(self.boundary.iter_mut()) {
            *v *= factor;
        }
    }

    fn check(&self, mesh: &Mesh, grid: &TimeGrid) -> Result<()> {
        if self.bulk.len() != grid.steps() + 1 || self.boundary.len() != grid.steps() + 1 {
            return Err(Error::Dimension {
                what: "source samples",
                expected: grid.steps() + 1,
                got: self.bulk.len().min(self.boundary.len()),
            });
        }
        for k in 0..self.len() {
            self.sample(k).check_dims(mesh)?;
        }
        Ok(())
    }

    /// `P(S)` at the θ-weighted point of step `k`; `lead` is the weight of
    /// sample `k + 1`.
    fn weighted_load(&self, op: &WentzellOperator, k: usize, lead: f64) -> DVector<f64> {
        let f = &self.bulk[k] * (1.0 - lead) + &self.bulk[k + 1] * lead;
        let g = &self.boundary[k] * (1.0 - lead) + &self.boundary[k + 1] * lead;
        op.load(&f, &g)
    }
}

/// Boundary control, one vector per time step (acting on `(t_k, t_{k+1})`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSeries {
    pub values: Vec<DVector<f64>>,
}

impl ControlSeries {
    pub fn zeros(mesh: &Mesh, grid: &TimeGrid) -> Self {
        Self {
            values: vec![DVector::zeros(mesh.boundary_count()); grid.steps()],
        }
    }

    /// Zeroes entries outside `Γ⁰`.
    pub fn mask(&mut self, mesh: &Mesh) {
        for v in &mut self.values {
            for (slot, inside) in mesh.gamma0_mask().iter().enumerate() {
                if !inside {
                    v[slot] = 0.0;
                }
            }
        }
    }

    /// `(Σ_k Δt Σ_b w_Γ v_k(b)^2)^{1/2}`.
    pub fn norm(&self, mesh: &Mesh, grid: &TimeGrid) -> f64 {
        let w = mesh.boundary_weights();
        let sum: f64 = self
            .values
            .iter()
            .map(|v| v.iter().zip(w.iter()).map(|(x, w)| w * x * x).sum::<f64>())
            .sum();
        (grid.dt() * sum).sqrt()
    }

    /// Time at which step `k`'s control is reported.
    pub fn time(grid: &TimeGrid, k: usize) -> f64 {
        grid.time(k) + grid.scheme().theta() * grid.dt()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// Shared-DOF snapshots at every time node. Adjoint trajectories also carry
/// the pairing fields `Ψ_k = L^{-1} M Φ_{k+1}` against which step `k`'s data
/// is tested (equal to `Φ_k` for implicit Euler).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<DVector<f64>>,
    pub pairing: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    pub fn snapshot(&self, mesh: &Mesh, k: usize) -> CoupledField {
        CoupledField::from_nodal(mesh, self.states[k].clone())
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has n_t + 1 snapshots")
    }

    /// `‖Y_k‖_{𝕃²}` per node.
    pub fn norms(&self, op: &WentzellOperator) -> Vec<f64> {
        self.states.iter().map(|y| op.norm(y)).collect()
    }

    /// `⟨Y_k, 1⟩_{𝕃²}` per node.
    pub fn masses(&self, op: &WentzellOperator) -> Vec<f64> {
        self.states.iter().map(|y| op.mass().dot(y)).collect()
    }

    /// Pairing field of step `k`.
    pub fn pairing(&self, k: usize) -> &DVector<f64> {
        match &self.pairing {
            Some(p) => &p[k],
            None => &self.states[k],
        }
    }
}

/// Factored step matrices for one operator and grid.
pub struct Stepper<'a> {
    op: &'a WentzellOperator,
    grid: TimeGrid,
    lhs: SpdFactor,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a WentzellOperator, grid: TimeGrid) -> Result<Self> {
        let c = grid.scheme().theta() * grid.dt();
        let n = op.dim();
        let matrix = csr_from_triplets(
            n,
            n,
            op.stiffness()
                .triplet_iter()
                .map(|(i, j, v)| (i, j, c * v))
                .chain((0..n).map(|i| (i, i, op.mass()[i]))),
        );
        Ok(Self {
            op,
            grid,
            lhs: SpdFactor::new(matrix, "step matrix")?,
        })
    }

    pub fn op(&self) -> &WentzellOperator {
        self.op
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `R y = M y - (1-θ) Δt K y`.
    fn explicit_part(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = y.component_mul(self.op.mass());
        let c = (1.0 - self.grid.scheme().theta()) * self.grid.dt();
        if c != 0.0 {
            out.axpy(-c, &spmv(self.op.stiffness(), y), 1.0);
        }
        out
    }

    fn solve(&self, rhs: &DVector<f64>, step: usize) -> Result<DVector<f64>> {
        let (x, residual) = self.lhs.solve_checked(rhs);
        if !(residual <= STEP_RESIDUAL_LIMIT) {
            return Err(Error::LinearSolve {
                step,
                residual,
                limit: STEP_RESIDUAL_LIMIT,
            });
        }
        Ok(x)
    }

    /// Forward solve from `y0` (projected to the shared-DOF layout). The
    /// control is masked to `Γ⁰`.
    pub fn forward(
        &self,
        y0: &CoupledField,
        sources: Option<&SourceSeries>,
        control: Option<&ControlSeries>,
    ) -> Result<Trajectory> {
        let mesh = self.op.mesh();
        y0.check_dims(mesh)?;
        if let Some(s) = sources {
            s.check(mesh, &self.grid)?;
        }
        if let Some(v) = control {
            if v.values.len() != self.grid.steps() {
                return Err(Error::Dimension {
                    what: "control steps",
                    expected: self.grid.steps(),
                    got: v.values.len(),
                });
            }
        }
        let dt = self.grid.dt();
        let theta = self.grid.scheme().theta();
        let mask = mesh.gamma0_mask();
        let mut states = Vec::with_capacity(self.grid.steps() + 1);
        states.push(y0.to_nodal(mesh));
        for k in 0..self.grid.steps() {
            let mut rhs = self.explicit_part(&states[k]);
            if let Some(s) = sources {
                rhs.axpy(dt, &s.weighted_load(self.op, k, theta), 1.0);
            }
            if let Some(v) = control {
                let wg = mesh.boundary_weights();
                for (slot, &i) in mesh.boundary_nodes().iter().enumerate() {
                    if mask[slot] {
                        rhs[i] += dt * wg[slot] * v.values[k][slot];
                    }
                }
            }
            states.push(self.solve(&rhs, k + 1)?);
        }
        Ok(Trajectory {
            grid: self.grid,
            states,
            pairing: None,
        })
    }

    /// Backward solve of the transposed scheme from `phi_t`, with optional
    /// source `F` entering as `Δt L^{-1} P(F_k^θ)` with `F_k^θ = θ F_k + (1-θ) F_{k+1}`.
    pub fn adjoint(&self, phi_t: &CoupledField, sources: Option<&SourceSeries>) -> Result<Trajectory> {
        let mesh = self.op.mesh();
        phi_t.check_dims(mesh)?;
        if let Some(s) = sources {
            s.check(mesh, &self.grid)?;
        }
        let n = self.grid.steps();
        let dt = self.grid.dt();
        let theta = self.grid.scheme().theta();
        let implicit = theta == 1.0;
        let mut states = vec![DVector::zeros(0); n + 1];
        let mut pairing = vec![DVector::zeros(0); n];
        states[n] = phi_t.to_nodal(mesh);
        for k in (0..n).rev() {
            let psi = self.solve(&states[k + 1].component_mul(self.op.mass()), k)?;
            let mut phi = if implicit {
                psi.clone()
            } else {
                self.explicit_part(&psi).component_div(self.op.mass())
            };
            if let Some(s) = sources {
                let load = s.weighted_load(self.op, k, 1.0 - theta);
                phi.axpy(dt, &self.solve(&load, k)?, 1.0);
            }
            states[k] = phi;
            pairing[k] = psi;
        }
        Ok(Trajectory {
            grid: self.grid,
            states,
            pairing: if implicit { None } else { Some(pairing) },
        })
    }
}

/// Forward controlled solve; see [`Stepper::forward`].
pub fn solve_forward(
    op: &WentzellOperator,
    grid: &TimeGrid,
    y0: &CoupledField,
    sources: Option<&SourceSeries>,
    control: Option<&ControlSeries>,
) -> Result<Trajectory> {
    Stepper::new(op, *grid)?.forward(y0, sources, control)
}

/// Backward adjoint solve; see [`Stepper::adjoint`].
pub fn solve_adjoint(
    op: &WentzellOperator,
    grid: &TimeGrid,
    phi_t: &CoupledField,
    sources: Option<&SourceSeries>,
) -> Result<Trajectory> {
    Stepper::new(op, *grid)?.adjoint(phi_t, sources)
}

/// Both sides of the discrete duality identity
/// `⟨Y_n, Φ_T⟩ = ⟨Y_0, Φ_0⟩ + Σ_k Δt ⟨S_k^θ + (0, 1_{Γ⁰} v_k), Ψ_k⟩`
/// for a homogeneous adjoint trajectory.
pub fn duality_sides(
    op: &WentzellOperator,
    forward: &Trajectory,
    adjoint: &Trajectory,
    sources: Option<&SourceSeries>,
    control: Option<&ControlSeries>,
) -> (f64, f64) {
    let mesh = op.mesh();
    let grid = forward.grid;
    let n = grid.steps();
    let lhs = op.inner(forward.final_state(), &adjoint.states[n]);
    let mut rhs = op.inner(&forward.states[0], &adjoint.states[0]);
    let theta = grid.scheme().theta();
    for k in 0..n {
        let psi = adjoint.pairing(k);
        if let Some(s) = sources {
            rhs += grid.dt() * s.weighted_load(op, k, theta).dot(psi);
        }
        if let Some(v) = control {
            let wg = mesh.boundary_weights();
            for (slot, &i) in mesh.boundary_nodes().iter().enumerate() {
                if mesh.gamma0_mask()[slot] {
                    rhs += grid.dt() * wg[slot] * v.values[k][slot] * psi[i];
                }
            }
        }
    }
    (lhs, rhs)
}

/// Regularity ratios of the adjoint with zero final datum and source `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub t_final: f64,
    pub r1: f64,
    /// `r1` recomputed from the quadratic form of the unit-coefficient
    /// stiffness.
    pub r1_energy: f64,
    pub r2: f64,
    /// Present when requested; requires `F(T) = 0`.
    pub r3: Option<f64>,
    pub source_norm: f64,
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// `r1 = ‖Φ‖_{L²ℍ¹} / ((1+T)‖F‖)`,
/// `r2 = (‖Φ‖_{L²ℍ²} + ‖∂_tΦ‖) / ((1+T)‖F‖)` and, with `third`,
/// `r3 = (‖Φ‖_{L²ℍ⁴} + ‖∂_t²Φ‖) / ((1+T)(‖F‖_{L²ℍ²} + ‖∂_tF‖))`.
///
/// State norms use the trapezoid rule on time nodes; time derivatives are
/// backward differences summed over cells.
pub fn regularity_ratios(
    op: &WentzellOperator,
    grid: &TimeGrid,
    source: &SourceSeries,
    third: bool,
) -> Result<RegularityReport> {
    let mesh = op.mesh();
    source.check(mesh, grid)?;
    let n = grid.steps();
    let dt = grid.dt();
    let t_final = grid.t_final();
    let source_sq: Vec<f64> = (0..=n).map(|k| source.sample(k).norm(mesh).powi(2)).collect();
    let f_max = source_sq.iter().copied().fold(0.0, f64::max).sqrt();
    if third && source_sq[n].sqrt() > 1e-12 * f_max {
        return Err(Error::SourceNotVanishing {
            norm: source_sq[n].sqrt(),
        });
    }
    let source_norm = trapezoid(&source_sq, dt).sqrt();
    if f_max == 0.0 {
        return Ok(RegularityReport {
            t_final,
            r1: 0.0,
            r1_energy: 0.0,
            r2: 0.0,
            r3: third.then_some(0.0),
            source_norm: 0.0,
        });
    }

    let phi = solve_adjoint(op, grid, &CoupledField::zeros(mesh), Some(source))?;
    let states = &phi.states;
    let scale = (1.0 + t_final) * source_norm;

    let h1: Vec<f64> = states.iter().map(|y| op.h1_norm_sq(y)).collect();
    let r1 = trapezoid(&h1, dt).sqrt() / scale;

    let unit = assemble_operator(mesh, 1.0, 1.0)?;
    let wg = mesh.boundary_weights();
    let h1_energy: Vec<f64> = states
        .iter()
        .map(|y| {
            let b = mesh.restrict_to_boundary(y);
            y.dot(&spmv(unit.stiffness(), y)) + b.component_mul(&b).dot(wg)
        })
        .collect();
    let r1_energy = trapezoid(&h1_energy, dt).sqrt() / scale;

    let h2: Vec<f64> = states.iter().map(|y| op.h2_norm_sq(y)).collect();
    let dphi: f64 = (1..=n)
        .map(|k| op.norm(&((&states[k] - &states[k - 1]) / dt)).powi(2))
        .sum::<f64>()
        * dt;
    let r2 = (trapezoid(&h2, dt).sqrt() + dphi.sqrt()) / scale;

    let r3 = if third {
        let h4: Vec<f64> = states.iter().map(|y| op.h4_proxy_sq(y)).collect();
        let d2phi: f64 = (2..=n)
            .map(|k| {
                op.norm(&((&states[k] - &states[k - 1] * 2.0 + &states[k - 2]) / (dt * dt)))
                    .powi(2)
            })
            .sum::<f64>()
            * dt;
        let nodal: Vec<DVector<f64>> = (0..=n).map(|k| source.sample(k).to_nodal(mesh)).collect();
        let f_h2: Vec<f64> = nodal.iter().map(|f| op.h2_norm_sq(f)).collect();
        let df: f64 = (1..=n)
            .map(|k| {
                let diff = CoupledField {
                    bulk: (&source.bulk[k] - &source.bulk[k - 1]) / dt,
                    boundary: (&source.boundary[k] - &source.boundary[k - 1]) / dt,
                };
                diff.norm(mesh).powi(2)
            })
            .sum::<f64>()
            * dt;
        let denom = (1.0 + t_final) * (trapezoid(&f_h2, dt).sqrt() + df.sqrt());
        Some((trapezoid(&h4, dt).sqrt() + d2phi.sqrt()) / denom)
    } else {
        None
    };

    Ok(RegularityReport {
        t_final,
        r1,
        r1_energy,
        r2,
        r3,
        source_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};
    use crate::operators::assemble_operator;

    fn setup(n: usize) -> WentzellOperator {
        assemble_operator(&build_mesh(&DomainSpec::interval(1.0, n)).unwrap(), 1.0, 1.0).unwrap()
    }

    #[test]
    fn constants_are_steady() {
        let op = setup(8);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let grid = TimeGrid::new(1.0, 16, scheme).unwrap();
            let traj = solve_forward(&op, &grid, &CoupledField::constant(op.mesh(), 2.5), None, None).unwrap();
            for y in &traj.states {
                assert!((y.add_scalar(-2.5)).amax() < 1e-12);
            }
            let adj = solve_adjoint(&op, &grid, &CoupledField::constant(op.mesh(), -1.0), None).unwrap();
            for y in &adj.states {
                assert!((y.add_scalar(1.0)).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(-1.0, 10, Scheme::ImplicitEuler).is_err());
        assert!(TimeGrid::new(1.0, 3, Scheme::ImplicitEuler).is_err());
        let g = TimeGrid::new(2.0, 8, Scheme::CrankNicolson).unwrap();
        assert_eq!(g.time(8), 2.0);
        assert_eq!(g.time(0), 0.0);
    }

    #[test]
    fn duality_holds_for_both_schemes() {
        let op = setup(8);
        let mesh = op.mesh().clone();
        let mut rng = SampleRng::new(3);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let grid = TimeGrid::new(0.7, 16, scheme).unwrap();
            let y0 = CoupledField::from_nodal(&mesh, rng.vector(9));
            let sources = SourceSeries {
                bulk: (0..17).map(|_| rng.vector(9)).collect(),
                boundary: (0..17).map(|_| rng.vector(2)).collect(),
            };
            let mut control = ControlSeries {
                values: (0..16).map(|_| rng.vector(2)).collect(),
            };
            control.mask(&mesh);
            let fwd = solve_forward(&op, &grid, &y0, Some(&sources), Some(&control)).unwrap();
            let phi_t = CoupledField::from_nodal(&mesh, rng.vector(9));
            let adj = solve_adjoint(&op, &grid, &phi_t, None).unwrap();
            let (l, r) = duality_sides(&op, &fwd, &adj, Some(&sources), Some(&control));
            assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()), "{scheme:?}: {l} vs {r}");
        }
    }

    #[test]
    fn zero_source_gives_zero_ratios() {
        let op = setup(16);
        let grid = TimeGrid::new(1.0, 32, Scheme::ImplicitEuler).unwrap();
        let r = regularity_ratios(&op, &grid, &SourceSeries::zeros(op.mesh(), &grid), true).unwrap();
        assert_eq!((r.r1, r.r2, r.r3), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn non_vanishing_source_is_rejected_for_r3() {
        let op = setup(16);
        let grid = TimeGrid::new(1.0, 32, Scheme::ImplicitEuler).unwrap();
        let mut rng = SampleRng::new(1);
        let s = SourceSeries::random_smooth(op.mesh(), &grid, &mut rng, false);
        assert!(matches!(
            regularity_ratios(&op, &grid, &s, true),
            Err(Error::SourceNotVanishing { .. })
        ));
        let r = regularity_ratios(&op, &grid, &s, false).unwrap();
        assert!((r.r1 - r.r1_energy).abs() <= 1e-8 * r.r1);
    }
}
