//! Graded unsplit PML in recursive-convolution form.
//!
//! The interior updates run plain vacuum curls everywhere; this handler adds
//! the stretched-coordinate corrections inside the absorbing slabs. Per slab
//! direction and field component one auxiliary psi array is kept, updated by
//! the usual one-tap recursion
//!
//!   psi <- b psi + c D        b = exp(-(sigma/kappa + alpha) dt/eps0)
//!                              c = sigma (b - 1) / ((sigma + kappa alpha) kappa)
//!
//! where D is the relevant spatial difference. The correction added to the
//! plain update is (1/kappa - 1) D + psi, so kappa = 1 slabs cost exactly the
//! psi term. Corners superpose the x and y stretches. The slab is backed by
//! the untouched outer ring, i.e. a PEC wall.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{FieldGrid, GridSpec};
use crate::scalar::{cast, Scalar, EPS0, ETA0, MU0};
use crate::sim::BoundaryHandler;

/// Grading and loss parameters of the absorbing slab.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlParams<S> {
    /// Slab depth in cells.
    pub thickness: usize,
    /// Polynomial grading order.
    pub m: u32,
    /// Multiplier on the standard optimum sigma_max = 0.8 (m+1) / (eta0 dx).
    pub sigma_max_ratio: S,
    /// Coordinate-stretch maximum; 1 disables stretching.
    pub kappa_max: S,
    /// Constant frequency-shift conductivity (S/m); 0 is the plain regime.
    pub alpha: S,
}

impl<S: Scalar> Default for PmlParams<S> {
    fn default() -> Self {
        Self {
            thickness: 10,
            m: 4,
            sigma_max_ratio: S::one(),
            kappa_max: S::one(),
            alpha: S::zero(),
        }
    }
}

impl<S: Scalar> PmlParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.thickness < 1 {
            return Err(Error::argument("PML thickness must be at least 1 cell"));
        }
        if self.m < 1 {
            return Err(Error::argument("grading order must be at least 1"));
        }
        if self.sigma_max_ratio <= S::zero() {
            return Err(Error::argument("sigma_max_ratio must be positive"));
        }
        if self.kappa_max < S::one() {
            return Err(Error::argument("kappa_max must be at least 1"));
        }
        if self.alpha < S::zero() {
            return Err(Error::argument("alpha must be non-negative"));
        }
        Ok(())
    }

    /// Graded (sigma, kappa, alpha) at depth fraction rho (0 at the
    /// interface, 1 at the outer wall).
    pub fn grade_profile(&self, rho: S, dx: S) -> Result<(S, S, S)> {
        if rho < S::zero() || rho > S::one() {
            return Err(Error::argument(format!("depth fraction {rho} outside [0, 1]")));
        }
        let sigma_max =
            self.sigma_max_ratio * cast::<S>(0.8) * cast::<S>(self.m as f64 + 1.0) / (cast::<S>(ETA0) * dx);
        let shaped = rho.powi(self.m as i32);
        let sigma = sigma_max * shaped;
        let kappa = S::one() + (self.kappa_max - S::one()) * shaped;
        Ok((sigma, kappa, self.alpha))
    }
}

/// Per-position recursion coefficients along one axis.
#[derive(Debug, Clone, PartialEq)]
struct AxisProfile<S> {
    b: Vec<S>,
    c: Vec<S>,
    inv_kappa_minus_1: Vec<S>,
    /// Positions where the slab actually acts; everything else is a no-op.
    active: Vec<bool>,
}

impl<S: Scalar> AxisProfile<S> {
    /// `len` positions along an axis of `n_cells` cells; `offset` is 0.0 for
    /// integer (E) positions and 0.5 for half-integer (Hz) positions.
    fn build(params: &PmlParams<S>, len: usize, n_cells: usize, offset: f64, dcell: S, dt: S) -> Result<Self> {
        let t = params.thickness as f64;
        let mut b = vec![S::one(); len];
        let mut c = vec![S::zero(); len];
        let mut ik1 = vec![S::zero(); len];
        let mut active = vec![false; len];
        for idx in 0..len {
            let x = idx as f64 + offset;
            let depth_left = t - x;
            let depth_right = x - (n_cells as f64 - t);
            let depth = depth_left.max(depth_right);
            if depth <= 0.0 {
                continue;
            }
            let rho = cast::<S>((depth / t).min(1.0));
            let (sigma, kappa, alpha) = params.grade_profile(rho, dcell)?;
            let decay = (sigma / kappa + alpha) * dt / cast::<S>(EPS0);
            let bb = (-decay).exp();
            let denom = (sigma + kappa * alpha) * kappa;
            let cc = if denom > S::zero() { sigma * (bb - S::one()) / denom } else { S::zero() };
            b[idx] = bb;
            c[idx] = cc;
            ik1[idx] = S::one() / kappa - S::one();
            active[idx] = cc != S::zero() || ik1[idx] != S::zero();
        }
        Ok(Self { b, c, inv_kappa_minus_1: ik1, active })
    }
}

/// Recursive-convolution PML boundary handler.
pub struct CpmlBoundary<S> {
    params: PmlParams<S>,
    // profiles at integer x (Ey), half x (Hz), integer y (Ex), half y (Hz)
    ex_profile_y: AxisProfile<S>,
    ey_profile_x: AxisProfile<S>,
    hz_profile_x: AxisProfile<S>,
    hz_profile_y: AxisProfile<S>,
    psi_ex_y: Array2<S>,
    psi_ey_x: Array2<S>,
    psi_hz_x: Array2<S>,
    psi_hz_y: Array2<S>,
}

impl<S: Scalar> CpmlBoundary<S> {
    pub fn new(params: PmlParams<S>, spec: &GridSpec<S>) -> Result<Self> {
        params.validate()?;
        if 2 * params.thickness + 4 > spec.nx.min(spec.ny) {
            return Err(Error::argument(format!(
                "{}-cell PML slabs leave no interior in a {}x{} grid",
                params.thickness, spec.nx, spec.ny
            )));
        }
        Ok(Self {
            ex_profile_y: AxisProfile::build(&params, spec.ny + 1, spec.ny, 0.0, spec.dy, spec.dt)?,
            ey_profile_x: AxisProfile::build(&params, spec.nx + 1, spec.nx, 0.0, spec.dx, spec.dt)?,
            hz_profile_x: AxisProfile::build(&params, spec.nx, spec.nx, 0.5, spec.dx, spec.dt)?,
            hz_profile_y: AxisProfile::build(&params, spec.ny, spec.ny, 0.5, spec.dy, spec.dt)?,
            psi_ex_y: Array2::zeros((spec.nx, spec.ny + 1)),
            psi_ey_x: Array2::zeros((spec.nx + 1, spec.ny)),
            psi_hz_x: Array2::zeros((spec.nx, spec.ny)),
            psi_hz_y: Array2::zeros((spec.nx, spec.ny)),
            params,
        })
    }

    pub fn params(&self) -> &PmlParams<S> {
        &self.params
    }

    fn psi_finite(&self) -> bool {
        (self.psi_ex_y.sum() + self.psi_ey_x.sum() + self.psi_hz_x.sum() + self.psi_hz_y.sum()).is_finite()
    }
}

impl<S: Scalar> BoundaryHandler<S> for CpmlBoundary<S> {
    fn label(&self) -> String {
        format!("cpml{}", self.params.thickness)
    }

    fn apply_after_h(&mut self, grid: &mut FieldGrid<S>, spec: &GridSpec<S>, _step: usize) -> Result<()> {
        let ch = spec.dt / cast::<S>(MU0);
        let inv_dx = S::one() / spec.dx;
        let inv_dy = S::one() / spec.dy;
        // x stretch of the dEy/dx term, half-integer x positions
        for i in 0..spec.nx {
            if !self.hz_profile_x.active[i] {
                continue;
            }
            let (b, c, k1) = (
                self.hz_profile_x.b[i],
                self.hz_profile_x.c[i],
                self.hz_profile_x.inv_kappa_minus_1[i],
            );
            for j in 0..spec.ny {
                let d = (grid.ey[[i + 1, j]] - grid.ey[[i, j]]) * inv_dx;
                let psi = b * self.psi_hz_x[[i, j]] + c * d;
                self.psi_hz_x[[i, j]] = psi;
                grid.hz[[i, j]] = grid.hz[[i, j]] - ch * (k1 * d + psi);
            }
        }
        // y stretch of the dEx/dy term, half-integer y positions
        for j in 0..spec.ny {
            if !self.hz_profile_y.active[j] {
                continue;
            }
            let (b, c, k1) = (
                self.hz_profile_y.b[j],
                self.hz_profile_y.c[j],
                self.hz_profile_y.inv_kappa_minus_1[j],
            );
            for i in 0..spec.nx {
                let d = (grid.ex[[i, j + 1]] - grid.ex[[i, j]]) * inv_dy;
                let psi = b * self.psi_hz_y[[i, j]] + c * d;
                self.psi_hz_y[[i, j]] = psi;
                grid.hz[[i, j]] = grid.hz[[i, j]] + ch * (k1 * d + psi);
            }
        }
        Ok(())
    }

    fn apply_after_e(&mut self, grid: &mut FieldGrid<S>, spec: &GridSpec<S>, step: usize) -> Result<()> {
        let ce = spec.dt / cast::<S>(EPS0);
        let inv_dx = S::one() / spec.dx;
        let inv_dy = S::one() / spec.dy;
        // Ey: x stretch at integer x, interior columns only (ring excluded)
        for i in 1..spec.nx {
            if !self.ey_profile_x.active[i] {
                continue;
            }
            let (b, c, k1) = (
                self.ey_profile_x.b[i],
                self.ey_profile_x.c[i],
                self.ey_profile_x.inv_kappa_minus_1[i],
            );
            for j in 0..spec.ny {
                let d = (grid.hz[[i, j]] - grid.hz[[i - 1, j]]) * inv_dx;
                let psi = b * self.psi_ey_x[[i, j]] + c * d;
                self.psi_ey_x[[i, j]] = psi;
                grid.ey[[i, j]] = grid.ey[[i, j]] - ce * (k1 * d + psi);
            }
        }
        // Ex: y stretch at integer y, interior rows only
        for j in 1..spec.ny {
            if !self.ex_profile_y.active[j] {
                continue;
            }
            let (b, c, k1) = (
                self.ex_profile_y.b[j],
                self.ex_profile_y.c[j],
                self.ex_profile_y.inv_kappa_minus_1[j],
            );
            for i in 0..spec.nx {
                let d = (grid.hz[[i, j]] - grid.hz[[i, j - 1]]) * inv_dy;
                let psi = b * self.psi_ex_y[[i, j]] + c * d;
                self.psi_ex_y[[i, j]] = psi;
                grid.ex[[i, j]] = grid.ex[[i, j]] + ce * (k1 * d + psi);
            }
        }
        if !self.psi_finite() {
            return Err(Error::Instability { step, detail: "non-finite PML auxiliary".into() });
        }
        Ok(())
    }
}
