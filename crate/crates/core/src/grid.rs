//! Yee-grid geometry: grid spec, staggered field arrays, source and PEC sheet.
//!
//! Staggering convention (cell (i, j) spans [i, i+1] x [j, j+1] in units of
//! dx, dy):
//!   Ex[i, j] sits on the horizontal edge at (i+1/2, j),    shape nx x (ny+1)
//!   Ey[i, j] sits on the vertical edge at   (i,     j+1/2), shape (nx+1) x ny
//!   Hz[i, j] sits at the cell center        (i+1/2, j+1/2), shape nx x ny
//!
//! The outermost tangential electric field (Ex on the j = 0 and j = ny lines,
//! Ey on the i = 0 and i = nx lines) is the "ring": the plain curl update
//! cannot compute it and a boundary handler owns it.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar, C0};

/// Largest stable time step of the explicit 2D scheme, 1/(c sqrt(1/dx^2 + 1/dy^2)).
pub fn courant_limit<S: Scalar>(dx: S, dy: S) -> Result<S> {
    if dx <= S::zero() || dy <= S::zero() {
        return Err(Error::argument(format!(
            "cell sizes must be positive (dx = {dx}, dy = {dy})"
        )));
    }
    let c: S = cast(C0);
    let inv = (S::one() / (dx * dx) + S::one() / (dy * dy)).sqrt();
    Ok(S::one() / (c * inv))
}

/// Grid dimensions and time discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<S> {
    pub nx: usize,
    pub ny: usize,
    /// Cell size along x (m).
    pub dx: S,
    /// Cell size along y (m).
    pub dy: S,
    /// Time step (s); must not exceed the Courant limit.
    pub dt: S,
    pub n_steps: usize,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(nx: usize, ny: usize, dx: S, dy: S, dt: S, n_steps: usize) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::argument(format!(
                "grid must be at least 8x8 cells (got {nx}x{ny})"
            )));
        }
        let limit = courant_limit(dx, dy)?;
        if dt <= S::zero() || dt > limit {
            return Err(Error::argument(format!(
                "dt = {dt} outside (0, {limit}] (Courant limit)"
            )));
        }
        Ok(Self { nx, ny, dx, dy, dt, n_steps })
    }

    /// Spec with dt at half the Courant limit, the usual safe choice.
    pub fn with_half_courant_dt(nx: usize, ny: usize, dx: S, dy: S, n_steps: usize) -> Result<Self> {
        let dt = courant_limit(dx, dy)? * cast(0.5);
        Self::new(nx, ny, dx, dy, dt, n_steps)
    }
}

/// The three TEz field arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid<S> {
    pub ex: Array2<S>,
    pub ey: Array2<S>,
    pub hz: Array2<S>,
}

impl<S: Scalar> FieldGrid<S> {
    pub fn zeros(spec: &GridSpec<S>) -> Self {
        Self {
            ex: Array2::zeros((spec.nx, spec.ny + 1)),
            ey: Array2::zeros((spec.nx + 1, spec.ny)),
            hz: Array2::zeros((spec.nx, spec.ny)),
        }
    }

    /// Cheap non-finiteness probe: any NaN or infinity poisons the plain sum.
    /// Field magnitudes stay far below the overflow threshold, so a finite
    /// sum implies every entry is finite.
    pub fn all_finite(&self) -> bool {
        let s = self.ex.sum() + self.ey.sum() + self.hz.sum();
        s.is_finite()
    }

    pub fn max_abs(&self) -> S {
        let fold = |acc: S, v: &S| acc.max(v.abs());
        let m = self.ex.iter().fold(S::zero(), fold);
        let m = self.ey.iter().fold(m, fold);
        self.hz.iter().fold(m, fold)
    }
}

/// Differentiated-Gaussian current source driving one Ey edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec<S> {
    /// Pulse width (s).
    pub t_w: S,
    /// Pulse delay (s); at least 3 t_w so the pulse is effectively zero at t = 0.
    pub t0: S,
    /// Ey edge index (i, j) of the injection point.
    pub i: usize,
    pub j: usize,
    /// Dimensionless amplitude scale.
    pub amplitude: S,
}

impl<S: Scalar> SourceSpec<S> {
    pub fn new(t_w: S, t0: S, i: usize, j: usize, amplitude: S) -> Result<Self> {
        if t_w <= S::zero() {
            return Err(Error::argument(format!("t_w must be positive (got {t_w})")));
        }
        if t0 < t_w * cast(3.0) {
            return Err(Error::argument(format!(
                "t0 = {t0} must be at least 3 t_w = {}",
                t_w * cast(3.0)
            )));
        }
        Ok(Self { t_w, t0, i, j, amplitude })
    }

    /// Paper-style defaults: t_w = 26.53 ps, t0 = 4 t_w, unit amplitude.
    pub fn standard(i: usize, j: usize) -> Self {
        let t_w: S = cast(26.53e-12);
        Self { t_w, t0: t_w * cast(4.0), i, j, amplitude: S::one() }
    }

    /// Current waveform J_y(t) = -2 tau exp(-tau^2), tau = (t - t0)/t_w.
    pub fn waveform(&self, t: S) -> S {
        let tau = (t - self.t0) / self.t_w;
        -(tau + tau) * (-tau * tau).exp()
    }
}

/// One-cell-thick PEC plate occupying cells (i_start..=i_end, j_row).
///
/// The mask zeroes every tangential E edge of those cells: Ex along the top
/// and bottom cell faces and Ey along the vertical faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PecSheet {
    pub j_row: usize,
    pub i_start: usize,
    pub i_end: usize,
}

impl PecSheet {
    pub fn new(j_row: usize, i_start: usize, i_end: usize) -> Result<Self> {
        if i_start > i_end {
            return Err(Error::argument(format!(
                "sheet span is empty (i_start = {i_start} > i_end = {i_end})"
            )));
        }
        Ok(Self { j_row, i_start, i_end })
    }

    /// The sheet must sit strictly inside the non-boundary region so the
    /// handler-owned ring and the masked edges never overlap.
    pub fn validate<S: Scalar>(&self, spec: &GridSpec<S>) -> Result<()> {
        if self.i_start < 1 || self.i_end + 2 > spec.nx || self.j_row < 1 || self.j_row + 2 > spec.ny {
            return Err(Error::argument(format!(
                "PEC sheet (row {}, cols {}..={}) not strictly inside {}x{} grid",
                self.j_row, self.i_start, self.i_end, spec.nx, spec.ny
            )));
        }
        Ok(())
    }

    pub fn apply_mask<S: Scalar>(&self, grid: &mut FieldGrid<S>) {
        for i in self.i_start..=self.i_end {
            grid.ex[[i, self.j_row]] = S::zero();
            grid.ex[[i, self.j_row + 1]] = S::zero();
        }
        for i in self.i_start..=self.i_end + 1 {
            grid.ey[[i, self.j_row]] = S::zero();
        }
    }
}
