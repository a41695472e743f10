//! Forest-driven one-cell absorbing boundary.
//!
//! After each interior update the handler assembles, for every outer-ring
//! tangential-E node, the canonicalized stencil features from the two most
//! recent *complete* states (kept in a rotating history, so predictions use
//! steps t and t-1 exactly as the training rows did) and overwrites the ring
//! with the forest outputs. Edge sites and corner sites use separate models.
//! A saturation guard clamps runaway predictions and counts how often it
//! fired.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forest::{load_model, load_model_meta, Forest, ModelMeta};
use crate::grid::{FieldGrid, GridSpec};
use crate::scalar::{cast, Scalar};
use crate::dataset::RingSeries;
use crate::sim::BoundaryHandler;
use crate::stencil::{StencilLayout, StencilSpec};

/// Saturate a prediction to [-clamp, clamp]; reports whether it fired.
pub fn stability_guard<S: Scalar>(value: S, clamp: S) -> (S, bool) {
    if value > clamp {
        (clamp, true)
    } else if value < -clamp {
        (-clamp, true)
    } else {
        (value, false)
    }
}

/// Clamp level recorded at training time: ten times the largest field the
/// teacher produced, or 1.0 when the teacher dataset was all zeros.
pub fn clamp_from_max_field<S: Scalar>(max_abs_field: S) -> S {
    if max_abs_field > S::zero() {
        max_abs_field * cast(10.0)
    } else {
        S::one()
    }
}

pub struct DdfBoundary<S: Scalar> {
    edge_model: Forest<S>,
    corner_model: Forest<S>,
    layout: StencilLayout,
    clamp: Option<S>,
    hist_cur: FieldGrid<S>,
    hist_prev: FieldGrid<S>,
    feature_count: usize,
    clamp_count: u64,
    max_prediction: S,
}

impl<S: Scalar> DdfBoundary<S> {
    pub fn new(
        edge_model: Forest<S>,
        corner_model: Forest<S>,
        stencil: StencilSpec,
        spec: &GridSpec<S>,
        clamp: Option<S>,
    ) -> Result<Self> {
        let m = stencil.feature_count();
        if edge_model.n_features() != m || corner_model.n_features() != m {
            return Err(Error::config(format!(
                "stencil yields {m} features but models expect {} (edge) and {} (corner)",
                edge_model.n_features(),
                corner_model.n_features()
            )));
        }
        let layout = StencilLayout::new(stencil, spec.nx, spec.ny)?;
        let zero = FieldGrid::zeros(spec);
        Ok(Self {
            edge_model,
            corner_model,
            layout,
            clamp,
            hist_cur: zero.clone(),
            hist_prev: zero,
            feature_count: m,
            clamp_count: 0,
            max_prediction: S::zero(),
        })
    }

    /// Load both models next to their sidecar metadata. The sidecar fixes
    /// the stencil and the default clamp; without one, the default stencil
    /// and a unit clamp apply.
    pub fn from_files(
        edge_path: &std::path::Path,
        corner_path: &std::path::Path,
        spec: &GridSpec<S>,
        clamp_override: Option<S>,
    ) -> Result<Self> {
        let edge_model: Forest<S> = load_model(edge_path)?;
        let corner_model: Forest<S> = load_model(corner_path)?;
        let meta = load_model_meta(edge_path)?;
        let stencil = match &meta {
            Some(m) => stencil_from_meta(m)?,
            None => StencilSpec::default(),
        };
        let clamp = clamp_override.or_else(|| {
            meta.as_ref()
                .and_then(|m| m.get_f64("clamp"))
                .map(cast::<S>)
        });
        Self::new(edge_model, corner_model, stencil, spec, Some(clamp.unwrap_or_else(S::one)))
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    pub fn max_prediction(&self) -> S {
        self.max_prediction
    }

    pub fn layout(&self) -> &StencilLayout {
        &self.layout
    }
}

pub fn stencil_from_meta(meta: &ModelMeta) -> Result<StencilSpec> {
    let d = StencilSpec::default();
    let components = match meta.get("stencil.components") {
        Some(s) => StencilSpec::parse_components(s)?,
        None => d.components.clone(),
    };
    Ok(StencilSpec {
        inward_depth: meta.get_usize("stencil.depth").unwrap_or(d.inward_depth),
        tangential_halfwidth: meta.get_usize("stencil.halfwidth").unwrap_or(d.tangential_halfwidth),
        components,
        time_levels: meta.get_usize("stencil.time_levels").unwrap_or(d.time_levels),
    })
}

impl<S: Scalar> BoundaryHandler<S> for DdfBoundary<S> {
    fn label(&self) -> String {
        "ddf".into()
    }

    fn apply_after_e(&mut self, grid: &mut FieldGrid<S>, _spec: &GridSpec<S>, step: usize) -> Result<()> {
        let m = self.feature_count;
        let predict_site = |idx: usize| -> S {
            let mut buf = vec![S::zero(); m];
            self.layout.gather_features(idx, &self.hist_cur, &self.hist_prev, &mut buf);
            let model = if self.layout.sites()[idx].corner {
                &self.corner_model
            } else {
                &self.edge_model
            };
            model.predict(&buf).expect("feature count validated at construction")
        };
        let n_sites = self.layout.n_sites();
        let predictions: Vec<S> = if n_sites >= 64 {
            (0..n_sites).into_par_iter().map(predict_site).collect()
        } else {
            (0..n_sites).map(predict_site).collect()
        };
        for (idx, &raw) in predictions.iter().enumerate() {
            if !raw.is_finite() {
                let site = self.layout.sites()[idx];
                return Err(Error::Instability {
                    step,
                    detail: format!("non-finite boundary prediction at {:?} k={}", site.edge, site.k),
                });
            }
            let value = match self.clamp {
                Some(c) => {
                    let (v, fired) = stability_guard(raw, c);
                    if fired {
                        self.clamp_count += 1;
                    }
                    v
                }
                None => raw,
            };
            self.max_prediction = self.max_prediction.max(raw.abs());
            self.layout.write_target(idx, grid, value);
        }
        // rotate: the grid now holds the completed state for this step
        std::mem::swap(&mut self.hist_prev, &mut self.hist_cur);
        self.hist_cur.ex.assign(&grid.ex);
        self.hist_cur.ey.assign(&grid.ey);
        self.hist_cur.hz.assign(&grid.hz);
        Ok(())
    }

    fn diagnostics(&self) -> Option<String> {
        Some(format!(
            "clamp_triggers={} max_abs_prediction={:.3e}",
            self.clamp_count,
            self.max_prediction.to_f64().unwrap_or(f64::NAN)
        ))
    }
}

/// Boundary that replays prerecorded ring values; used to validate the ring
/// plumbing against the teacher it was recorded from.
pub struct ReplayBoundary<S> {
    layout: StencilLayout,
    ring: RingSeries<S>,
}

impl<S: Scalar> ReplayBoundary<S> {
    pub fn new(stencil: StencilSpec, spec: &GridSpec<S>, ring: RingSeries<S>) -> Result<Self> {
        let layout = StencilLayout::new(stencil, spec.nx, spec.ny)?;
        if ring.n_sites != layout.n_sites() {
            return Err(Error::config(format!(
                "ring record has {} sites, grid needs {}",
                ring.n_sites,
                layout.n_sites()
            )));
        }
        if ring.steps.len() < spec.n_steps {
            return Err(Error::config(format!(
                "ring record covers {} steps, run needs {}",
                ring.steps.len(),
                spec.n_steps
            )));
        }
        Ok(Self { layout, ring })
    }
}

impl<S: Scalar> BoundaryHandler<S> for ReplayBoundary<S> {
    fn label(&self) -> String {
        "replay".into()
    }

    fn apply_after_e(&mut self, grid: &mut FieldGrid<S>, _spec: &GridSpec<S>, step: usize) -> Result<()> {
        self.layout.write_ring_raw(grid, &self.ring.steps[step]);
        Ok(())
    }
}

/// The one-cell layer's domain-size claim, as a checkable statement: the
/// learned run needs exactly the scene grid, the teacher needed the scene
/// grid plus `thickness` cells on every side.
pub fn domain_saving_cells(scene_nx: usize, scene_ny: usize, pml_thickness: usize) -> (usize, usize) {
    let teacher = (scene_nx + 2 * pml_thickness) * (scene_ny + 2 * pml_thickness);
    let learned = scene_nx * scene_ny;
    (teacher, learned)
}
