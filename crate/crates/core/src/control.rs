//! Boundary null controls by penalized HUM, the observability constant and
//! the weighted norms of the cost estimate.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carleman::LogSum;
use crate::dynamics::{ControlSeries, SourceSeries, Stepper, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{conjugate_gradient, CgSettings};
use crate::operators::{CoupledField, WentzellOperator};
use crate::rng::SampleRng;

/// Integrand level above which a weighted norm is declared divergent.
pub const OVERFLOW_THRESHOLD: f64 = 1e300;

/// The map `φ_T ↦ 𝒯𝒯* φ_T + ε φ_T` on shared-DOF terminal data.
///
/// `𝒯*` runs the homogeneous adjoint and restricts its trace to `Γ⁰`; `𝒯`
/// drives the forward system from rest with that control. Both are the exact
/// discrete transposes of each other, so the map is symmetric positive
/// semidefinite in the `M` inner product.
pub struct GramianOp<'a> {
    stepper: Stepper<'a>,
    epsilon: f64,
}

impl<'a> GramianOp<'a> {
    pub fn new(op: &'a WentzellOperator, grid: TimeGrid, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be nonnegative, got {epsilon}"),
            });
        }
        if !op.mesh().gamma0_mask().iter().any(|&b| b) {
            return Err(Error::EmptySubboundary {
                which: "gamma0",
                detail: "no control nodes".into(),
            });
        }
        Ok(Self {
            stepper: Stepper::new(op, grid)?,
            epsilon,
        })
    }

    pub fn stepper(&self) -> &Stepper<'a> {
        &self.stepper
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn op(&self) -> &WentzellOperator {
        self.stepper.op()
    }

    /// Control `1_{Γ⁰} Ψ_k|_Γ` read off an adjoint trajectory.
    pub fn control_from_adjoint(&self, adjoint: &Trajectory) -> ControlSeries {
        let mesh = self.op().mesh();
        let values = (0..self.stepper.grid().steps())
            .map(|k| {
                let psi = adjoint.pairing(k);
                DVector::from_iterator(
                    mesh.boundary_count(),
                    mesh.boundary_nodes()
                        .iter()
                        .zip(mesh.gamma0_mask())
                        .map(|(&i, &inside)| if inside { psi[i] } else { 0.0 }),
                )
            })
            .collect();
        ControlSeries { values }
    }

    /// `𝒯*`: the control induced by terminal datum `phi_t`.
    pub fn adjoint_control(&self, phi_t: &DVector<f64>) -> Result<(ControlSeries, Trajectory)> {
        let mesh = self.op().mesh();
        let adjoint = self
            .stepper
            .adjoint(&CoupledField::from_nodal(mesh, phi_t.clone()), None)?;
        Ok((self.control_from_adjoint(&adjoint), adjoint))
    }

    /// `𝒯 𝒯* φ_T + ε φ_T`.
    pub fn apply(&self, phi_t: &DVector<f64>) -> Result<DVector<f64>> {
        let mesh = self.op().mesh();
        let (control, _) = self.adjoint_control(phi_t)?;
        let fwd = self.stepper.forward(&CoupledField::zeros(mesh), None, Some(&control))?;
        Ok(fwd.final_state() + phi_t * self.epsilon)
    }

    /// `⟨𝒯𝒯* x, x⟩ = Σ_k Δt Σ_{Γ⁰} w_Γ Ψ_k²` and `Φ(0)`, from one adjoint solve.
    pub fn observation(&self, phi_t: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let mesh = self.op().mesh();
        let (control, adjoint) = self.adjoint_control(phi_t)?;
        let obs = control.norm(mesh, self.stepper.grid()).powi(2);
        Ok((obs, adjoint.states[0].clone()))
    }
}

/// `(𝒯𝒯* + ε I) φ_T`.
pub fn apply_gramian(g: &GramianOp<'_>, phi_t: &CoupledField) -> Result<CoupledField> {
    let mesh = g.op().mesh();
    phi_t.check_dims(mesh)?;
    Ok(CoupledField::from_nodal(mesh, g.apply(&phi_t.to_nodal(mesh))?))
}

/// Data of a penalized-HUM solve.
#[derive(Clone, Debug)]
pub struct HumProblem<'a> {
    pub op: &'a WentzellOperator,
    pub grid: TimeGrid,
    pub y0: CoupledField,
    pub sources: Option<SourceSeries>,
    pub epsilon: f64,
    pub cg: CgSettings,
}

impl HumProblem<'_> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be positive, got {}", self.epsilon),
            });
        }
        if !(self.cg.tol > 0.0 && self.cg.tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "cg_tol",
                reason: format!("must lie in (0, 1), got {}", self.cg.tol),
            });
        }
        self.y0.check_dims(self.op.mesh())
    }
}

#[derive(Clone, Debug)]
pub struct HumResult {
    pub control: ControlSeries,
    pub phi_t_star: DVector<f64>,
    pub trajectory: Trajectory,
    /// `‖Y(T)‖` of the recomputed controlled trajectory.
    pub final_norm: f64,
    pub control_norm: f64,
    /// `‖Y(T)‖` without control.
    pub uncontrolled_norm: f64,
    pub iterations: usize,
    pub cg_residual: f64,
    pub converged: bool,
    /// Optimal penalized cost `½‖v‖² + ‖Y(T)‖²/(2ε)`, computed as minus the
    /// minimum of the dual functional.
    pub j_epsilon: f64,
    /// Dual functional `½⟨(G+ε)φ, φ⟩ + ⟨S, φ⟩` after each CG update.
    pub energies: Vec<f64>,
    pub epsilon: f64,
}

impl HumResult {
    /// `final_norm² ≤ 2 ε J_ε`, with a roundoff allowance.
    pub fn penalized_bound_holds(&self) -> bool {
        self.final_norm.powi(2) <= 2.0 * self.epsilon * self.j_epsilon * (1.0 + 1e-8) + 1e-300
    }
}

/// Solves `(𝒯𝒯* + ε I) φ = -S` by CG in the `M` inner product, where `S` is
/// the uncontrolled final state, and applies the induced control.
pub fn solve_hum(p: &HumProblem<'_>) -> Result<HumResult> {
    p.validate()?;
    let g = GramianOp::new(p.op, p.grid, p.epsilon)?;
    hum_with(&g, &p.y0, p.sources.as_ref(), p.cg)
}

/// Size of the data `‖Y0‖ + (Σ_k Δt ‖S_k‖²)^{1/2}`, used to normalize.
fn data_size(op: &WentzellOperator, grid: &TimeGrid, y0: &CoupledField, sources: Option<&SourceSeries>) -> f64 {
    let mesh = op.mesh();
    let src = sources.map_or(0.0, |s| {
        let sq: f64 = (0..s.len()).map(|k| s.sample(k).norm(mesh).powi(2)).sum();
        (grid.dt() * sq).sqrt()
    });
    y0.norm(mesh) + src
}

/// [`solve_hum`] with a prebuilt Gramian.
///
/// The data are normalized to unit size before the solve and the outputs
/// rescaled, so the computed control is homogeneous in the data up to
/// roundoff in the normalization.
pub fn hum_with(
    g: &GramianOp<'_>,
    y0: &CoupledField,
    sources: Option<&SourceSeries>,
    cg: CgSettings,
) -> Result<HumResult> {
    let size = data_size(g.op(), g.stepper().grid(), y0, sources);
    if size == 0.0 || !size.is_finite() {
        return hum_unscaled(g, y0, sources, cg);
    }
    let y0_unit = CoupledField {
        bulk: &y0.bulk / size,
        boundary: &y0.boundary / size,
    };
    let src_unit = sources.map(|s| {
        let mut s = s.clone();
        s.scale(1.0 / size);
        s
    });
    let mut r = hum_unscaled(g, &y0_unit, src_unit.as_ref(), cg)?;
    r.control.scale(size);
    r.phi_t_star *= size;
    for y in &mut r.trajectory.states {
        *y *= size;
    }
    r.final_norm *= size;
    r.control_norm *= size;
    r.uncontrolled_norm *= size;
    r.j_epsilon *= size * size;
    for e in &mut r.energies {
        *e *= size * size;
    }
    Ok(r)
}

fn hum_unscaled(
    g: &GramianOp<'_>,
    y0: &CoupledField,
    sources: Option<&SourceSeries>,
    cg: CgSettings,
) -> Result<HumResult> {
    let op = g.op();
    let mesh = op.mesh();
    let stepper = g.stepper();
    let free = stepper.forward(y0, sources, None)?;
    let s = free.final_state().clone();
    let b = -&s;
    let mut failure = None;
    let out = conjugate_gradient(
        |x| match g.apply(x) {
            Ok(y) => y,
            Err(e) => {
                failure.get_or_insert(e);
                DVector::zeros(x.len())
            }
        },
        &b,
        |u, v| op.inner(u, v),
        None,
        cg,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let phi = out.x;
    let (control, _) = g.adjoint_control(&phi)?;
    let trajectory = stepper.forward(y0, sources, Some(&control))?;
    let gphi = g.apply(&phi)?;
    let dual = 0.5 * op.inner(&gphi, &phi) + op.inner(&s, &phi);
    Ok(HumResult {
        control_norm: control.norm(mesh, stepper.grid()),
        final_norm: op.norm(trajectory.final_state()),
        uncontrolled_norm: op.norm(&s),
        control,
        phi_t_star: phi,
        trajectory,
        iterations: out.iterations,
        cg_residual: out.residual,
        converged: out.converged,
        j_epsilon: -dual,
        energies: out.energies,
        epsilon: g.epsilon(),
    })
}

/// Settings of the observability power iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSettings {
    /// Relative change of the quotient that stops the iteration.
    pub tol: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Seed of the starting vector.
    pub seed: u64,
}

impl Default for PowerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50,
            inner_tol: 1e-10,
            inner_max_iter: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservabilityReport {
    pub t_final: f64,
    /// Largest quotient `‖Φ(0)‖² / ∫_{Γ⁰_T} |φ_Γ|²` found.
    pub k_est: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The observation Gramian looked numerically singular.
    pub singular: bool,
    pub last_quotient: f64,
    pub quotients: Vec<f64>,
    #[serde(skip)]
    pub eigenvector: DVector<f64>,
}

/// Quotient `‖Φ(0)‖² / ∫_{Γ⁰_T} |φ_Γ|²` of one terminal datum.
pub fn observability_quotient(g: &GramianOp<'_>, phi_t: &DVector<f64>) -> Result<f64> {
    let (obs, phi0) = g.observation(phi_t)?;
    Ok(g.op().inner(&phi0, &phi0) / obs)
}

/// Power iteration for the largest eigenvalue of `G₀⁻¹ E*E`, where `E` maps
/// terminal data to `Φ(0)` and `G₀ = 𝒯𝒯*`. Inner solves use CG, warm-started
/// from the previous iterate; each quotient is evaluated directly.
pub fn observability_constant(
    op: &WentzellOperator,
    grid: &TimeGrid,
    power: &PowerSettings,
) -> Result<ObservabilityReport> {
    let g = GramianOp::new(op, *grid, 0.0)?;
    let stepper = g.stepper();
    let mesh = op.mesh();
    let mut rng = SampleRng::new(power.seed);
    let mut x = rng.vector(op.dim()).add_scalar(0.5);
    x /= op.norm(&x);
    let mut quotients = Vec::new();
    let mut best = (f64::NEG_INFINITY, x.clone());
    let mut singular = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut previous = f64::NAN;
    for it in 0..power.max_iter {
        iterations = it + 1;
        let (obs, phi0) = g.observation(&x)?;
        if !(obs > 1e-300 * op.inner(&x, &x)) {
            singular = true;
            break;
        }
        let q = op.inner(&phi0, &phi0) / obs;
        quotients.push(q);
        if q > best.0 {
            best = (q, x.clone());
        }
        if (q - previous).abs() <= power.tol * q.abs() {
            converged = true;
            break;
        }
        previous = q;
        let nx = stepper.adjoint(&CoupledField::from_nodal(mesh, phi0), None)?.states[0].clone();
        let mut failure = None;
        let out = conjugate_gradient(
            |v| match g.apply(v) {
                Ok(y) => y,
                Err(e) => {
                    failure.get_or_insert(e);
                    DVector::zeros(v.len())
                }
            },
            &nx,
            |u, v| op.inner(u, v),
            Some(&x * q),
            CgSettings {
                tol: power.inner_tol,
                max_iter: power.inner_max_iter,
            },
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if out.breakdown && out.iterations == 0 {
            singular = true;
            break;
        }
        let norm = op.norm(&out.x);
        if !(norm > 0.0 && norm.is_finite()) {
            singular = true;
            break;
        }
        x = out.x / norm;
    }
    Ok(ObservabilityReport {
        t_final: grid.t_final(),
        k_est: best.0.max(0.0),
        iterations,
        converged,
        singular,
        last_quotient: quotients.last().copied().unwrap_or(f64::NAN),
        quotients,
        eigenvector: best.1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightedKind {
    #[serde(rename = "Z_Omega")]
    ZOmega,
    #[serde(rename = "Z_Gamma")]
    ZGamma,
    #[serde(rename = "X")]
    X,
}

impl WeightedKind {
    pub fn name(&self) -> &'static str {
        match self {
            WeightedKind::ZOmega => "Z_Omega",
            WeightedKind::ZGamma => "Z_Gamma",
            WeightedKind::X => "X",
        }
    }
}

/// Weighted `L²` norm in time, midpoint rule over cells.
///
/// `Z_Omega`: `e^{2sθ} θ⁻³` on `Σ w_Ω f²` (nodal samples);
/// `Z_Gamma`: the same weight on `Σ w_Γ g²` (boundary samples);
/// `X`: `e^{2stθ}` on the `𝕃²` norm of shared-DOF samples.
pub fn weighted_norm(
    op: &WentzellOperator,
    grid: &TimeGrid,
    kind: WeightedKind,
    samples: &[DVector<f64>],
    s: f64,
) -> Result<f64> {
    let mesh = op.mesh();
    if samples.len() != grid.steps() + 1 {
        return Err(Error::Dimension {
            what: "weighted-norm samples",
            expected: grid.steps() + 1,
            got: samples.len(),
        });
    }
    let (weights, expected) = match kind {
        WeightedKind::ZOmega => (mesh.bulk_weights(), mesh.node_count()),
        WeightedKind::ZGamma => (mesh.boundary_weights(), mesh.boundary_count()),
        WeightedKind::X => (op.mass(), mesh.node_count()),
    };
    if let Some(bad) = samples.iter().find(|v| v.len() != expected) {
        return Err(Error::Dimension {
            what: "weighted-norm sample",
            expected,
            got: bad.len(),
        });
    }
    let limit = OVERFLOW_THRESHOLD.ln();
    let mut sum = LogSum::default();
    for k in 0..grid.steps() {
        let t = grid.midpoint(k);
        let theta = 1.0 / (t * (grid.t_final() - t));
        let ln_weight = match kind {
            WeightedKind::ZOmega | WeightedKind::ZGamma => 2.0 * s * theta - 3.0 * theta.ln(),
            WeightedKind::X => 2.0 * s * t * theta,
        };
        let mid = (&samples[k] + &samples[k + 1]) * 0.5;
        let sq: f64 = mid.iter().zip(weights.iter()).map(|(v, w)| w * v * v).sum();
        if sq == 0.0 {
            continue;
        }
        let ln_integrand = ln_weight + sq.ln();
        if ln_integrand > limit {
            return Err(Error::DivergentNorm {
                kind: kind.name(),
                time: t,
                threshold: OVERFLOW_THRESHOLD,
            });
        }
        sum.push_ln(ln_integrand + grid.dt().ln());
    }
    Ok((0.5 * sum.total().ln()).exp())
}

/// Random data of one cost-study sample: `Y0` and sources whose time profile
/// is supported in `(T/4, 3T/4)`.
pub fn cost_sample_data(mesh: &Mesh, grid: &TimeGrid, rng: &mut SampleRng) -> (CoupledField, SourceSeries) {
    let y0 = CoupledField::from_nodal(mesh, rng.vector(mesh.node_count()));
    let a = rng.vector(mesh.node_count());
    let c = rng.vector(mesh.boundary_count());
    let t_final = grid.t_final();
    let bump = |t: f64| {
        let u = (t - 0.25 * t_final) / (0.5 * t_final);
        if u > 0.0 && u < 1.0 {
            (std::f64::consts::PI * u).sin().powi(2)
        } else {
            0.0
        }
    };
    let times = grid.times();
    let sources = SourceSeries {
        bulk: times.iter().map(|&t| &a * bump(t)).collect(),
        boundary: times.iter().map(|&t| &c * bump(t)).collect(),
    };
    (y0, sources)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub sample: usize,
    /// `(‖Y‖_X + ‖v‖) / (‖Y0‖ + ‖f‖_{Z_Ω} + ‖g‖_{Z_Γ})`; absent when skipped.
    pub ratio: Option<f64>,
    pub note: Option<String>,
    pub state_x_norm: f64,
    pub control_norm: f64,
    pub y0_norm: f64,
    pub f_z_norm: f64,
    pub g_z_norm: f64,
    pub final_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub epsilon: f64,
    pub s: f64,
    pub scale: f64,
    pub samples: Vec<CostSample>,
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
}

/// Settings of [`cost_ratio_study`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSettings {
    pub epsilon: f64,
    pub cg: CgSettings,
    pub samples: usize,
    /// Weight parameter `s` of the `Z` and `X` norms.
    pub s: f64,
    /// Factor applied to all data (`Y0`, `f`, `g`).
    pub scale: f64,
}

/// Ratio of `‖Y‖_X + ‖v‖` to `‖Y0‖ + ‖f‖_{Z_Ω} + ‖g‖_{Z_Γ}` over random data.
/// Samples are drawn sequentially and solved in parallel.
pub fn cost_ratio_study(
    op: &WentzellOperator,
    grid: &TimeGrid,
    settings: &CostSettings,
    rng: &mut SampleRng,
) -> Result<CostReport> {
    if settings.samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "need at least one sample".into(),
        });
    }
    if !(settings.epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be positive, got {}", settings.epsilon),
        });
    }
    let mesh = op.mesh();
    let data: Vec<(CoupledField, SourceSeries)> = (0..settings.samples)
        .map(|_| {
            let (mut y0, mut src) = cost_sample_data(mesh, grid, rng);
            y0.bulk *= settings.scale;
            y0.boundary *= settings.scale;
            src.scale(settings.scale);
            (y0, src)
        })
        .collect();
    let g = GramianOp::new(op, *grid, settings.epsilon)?;
    let samples: Vec<Result<CostSample>> = data
        .into_par_iter()
        .enumerate()
        .map(|(idx, (y0, src))| cost_sample(&g, op, grid, settings, idx, &y0, &src))
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = samples.iter().filter_map(|s| s.ratio).collect();
    let (max_ratio, min_ratio, mean_ratio) = if ratios.is_empty() {
        (None, None, None)
    } else {
        (
            Some(ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            Some(ratios.iter().copied().fold(f64::INFINITY, f64::min)),
            Some(ratios.iter().sum::<f64>() / ratios.len() as f64),
        )
    };
    Ok(CostReport {
        epsilon: settings.epsilon,
        s: settings.s,
        scale: settings.scale,
        samples,
        max_ratio,
        min_ratio,
        mean_ratio,
    })
}

fn cost_sample(
    g: &GramianOp<'_>,
    op: &WentzellOperator,
    grid: &TimeGrid,
    settings: &CostSettings,
    idx: usize,
    y0: &CoupledField,
    src: &SourceSeries,
) -> Result<CostSample> {
    let mesh = op.mesh();
    let mut sample = CostSample {
        sample: idx,
        ratio: None,
        note: None,
        state_x_norm: 0.0,
        control_norm: 0.0,
        y0_norm: y0.norm(mesh),
        f_z_norm: 0.0,
        g_z_norm: 0.0,
        final_norm: 0.0,
        iterations: 0,
        converged: true,
    };
    let norms = weighted_norm(op, grid, WeightedKind::ZOmega, &src.bulk, settings.s).and_then(|f| {
        Ok((
            f,
            weighted_norm(op, grid, WeightedKind::ZGamma, &src.boundary, settings.s)?,
        ))
    });
    match norms {
        Ok((f, gz)) => {
            sample.f_z_norm = f;
            sample.g_z_norm = gz;
        }
        Err(e @ Error::DivergentNorm { .. }) => {
            sample.note = Some(format!("skipped: {e}"));
            return Ok(sample);
        }
        Err(e) => return Err(e),
    }
    let denom = sample.y0_norm + sample.f_z_norm + sample.g_z_norm;
    if denom == 0.0 {
        sample.note = Some("skipped: all data zero".into());
        return Ok(sample);
    }
    let hum = hum_with(g, y0, Some(src), settings.cg)?;
    sample.control_norm = hum.control_norm;
    sample.final_norm = hum.final_norm;
    sample.iterations = hum.iterations;
    sample.converged = hum.converged;
    match weighted_norm(op, grid, WeightedKind::X, &hum.trajectory.states, settings.s) {
        Ok(x) => {
            sample.state_x_norm = x;
            sample.ratio = Some((x + hum.control_norm) / denom);
        }
        Err(e @ Error::DivergentNorm { .. }) => sample.note = Some(format!("skipped: {e}")),
        Err(e) => return Err(e),
    }
    Ok(sample)
}
