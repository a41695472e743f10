//! The physical scene, independent of how the domain is truncated.
//!
//! `nx x ny` is the domain a one-cell boundary layer needs: the scene content
//! (PEC sheet plus free-space gap) surrounded by the single outermost cell
//! ring that the boundary handler owns. Truncation schemes embed this region
//! with an extra padding: 0 cells for a PEC box or the learned layer,
//! `thickness` cells for an absorbing slab, hundreds of cells for the
//! oversized reference. Positions are given in scene coordinates and shifted
//! by the padding at embed time.

use crate::error::Result;
use crate::grid::{GridSpec, PecSheet, SourceSpec};
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec<S> {
    pub nx: usize,
    pub ny: usize,
    pub dx: S,
    pub dy: S,
    pub dt: S,
    pub n_steps: usize,
    pub sheet: Option<PecSheet>,
    pub source: SourceSpec<S>,
    /// Ey node observed by the reflection metric.
    pub probe: (usize, usize),
}

impl<S: Scalar> SceneSpec<S> {
    /// Default benchmark scene: a 100-cell PEC sheet with a 3-cell gap on
    /// all sides plus the boundary ring (108 x 9 cells, 1 mm lattice,
    /// dt at half the Courant limit, 1500 steps), a differentiated-Gaussian
    /// line source two cells above the sheet center and the probe two cells
    /// past the sheet end where the evanescent field is strong.
    pub fn paper() -> Result<Self> {
        let dx: S = cast(1e-3);
        let dt = crate::grid::courant_limit(dx, dx)? * cast(0.5);
        Ok(Self {
            nx: 108,
            ny: 9,
            dx,
            dy: dx,
            dt,
            n_steps: 1500,
            sheet: Some(PecSheet::new(4, 4, 103)?),
            source: SourceSpec::standard(54, 6),
            probe: (106, 4),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.grid_spec(0)?;
        if let Some(sheet) = &self.sheet {
            sheet.validate(&spec)?;
        }
        SourceSpec::new(
            self.source.t_w,
            self.source.t0,
            self.source.i,
            self.source.j,
            self.source.amplitude,
        )?;
        if self.source.i < 1 || self.source.i >= self.nx || self.source.j >= self.ny {
            return Err(crate::error::Error::argument(format!(
                "source Ey[{}, {}] outside the physical region",
                self.source.i, self.source.j
            )));
        }
        if self.probe.0 > self.nx || self.probe.1 >= self.ny {
            return Err(crate::error::Error::argument(format!(
                "probe Ey[{}, {}] outside the domain",
                self.probe.0, self.probe.1
            )));
        }
        Ok(())
    }

    /// Grid spec for this scene embedded with `pad` extra cells per side.
    pub fn grid_spec(&self, pad: usize) -> Result<GridSpec<S>> {
        GridSpec::new(
            self.nx + 2 * pad,
            self.ny + 2 * pad,
            self.dx,
            self.dy,
            self.dt,
            self.n_steps,
        )
    }

    pub fn sheet_at(&self, pad: usize) -> Option<PecSheet> {
        self.sheet.map(|s| PecSheet {
            j_row: s.j_row + pad,
            i_start: s.i_start + pad,
            i_end: s.i_end + pad,
        })
    }

    pub fn source_at(&self, pad: usize) -> SourceSpec<S> {
        let mut src = self.source.clone();
        src.i += pad;
        src.j += pad;
        src
    }

    pub fn probe_at(&self, pad: usize) -> (usize, usize) {
        (self.probe.0 + pad, self.probe.1 + pad)
    }
}
