//! Reference runs, the relative reflection-error metric and scheme
//! comparison.
//!
//! The reference embeds the same scene in a grid enlarged far enough that
//! nothing reflected from its PEC walls can reach the probe within the run,
//! so its probe series stands in for open space. A truncation scheme is then
//! scored by
//!
//!   R_dB(t) = 20 log10( |E_test(t) - E_ref(t)| / max_t |E_ref(t)| )
//!
//! clamped at -300 dB where the numerator vanishes.

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::learned::DdfBoundary;
use crate::pml::{CpmlBoundary, PmlParams};
use crate::scalar::{cast, Scalar, C0};
use crate::scene::SceneSpec;
use crate::sim::{BoundaryHandler, PecWall, Simulation};
use crate::stencil::StencilSpec;

/// Lowest reported reflection level (dB).
pub const R_DB_FLOOR: f64 = -300.0;

/// Per-step reflection error of one run against one reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionReport<S> {
    pub r_db: Vec<S>,
    pub r_db_max: S,
    pub test_id: String,
    pub reference_id: String,
    pub probe: (usize, usize),
    pub n_steps: usize,
}

pub fn reflection_error<S: Scalar>(
    test: &[S],
    reference: &[S],
    test_id: impl Into<String>,
    reference_id: impl Into<String>,
    probe: (usize, usize),
) -> Result<ReflectionReport<S>> {
    if test.len() != reference.len() {
        return Err(Error::argument(format!(
            "series lengths differ: {} vs {}",
            test.len(),
            reference.len()
        )));
    }
    let ref_max = reference.iter().fold(S::zero(), |m, &v| m.max(v.abs()));
    if ref_max == S::zero() {
        return Err(Error::argument("reference series is identically zero"));
    }
    let floor: S = cast(R_DB_FLOOR);
    let twenty: S = cast(20.0);
    let r_db: Vec<S> = test
        .iter()
        .zip(reference)
        .map(|(&t, &r)| {
            let num = (t - r).abs();
            if num == S::zero() {
                floor
            } else {
                (twenty * (num / ref_max).log10()).max(floor)
            }
        })
        .collect();
    let r_db_max = r_db.iter().fold(floor, |m, &v| m.max(v));
    Ok(ReflectionReport {
        n_steps: r_db.len(),
        r_db,
        r_db_max,
        test_id: test_id.into(),
        reference_id: reference_id.into(),
        probe,
    })
}

/// Cells the reference grid grows on every side before the margin:
/// ceil(c n_steps dt / (2 dx)), far enough that a wall echo cannot return.
pub fn enlargement_cells<S: Scalar>(scene: &SceneSpec<S>) -> usize {
    if scene.n_steps == 0 {
        return 0;
    }
    let travel = cast::<S>(C0) * S::from_usize(scene.n_steps).unwrap() * scene.dt
        / (cast::<S>(2.0) * scene.dx);
    travel.ceil().to_usize().unwrap_or(usize::MAX)
}

/// Memory the three field arrays of an embedded run would take.
pub fn estimate_run_bytes<S: Scalar>(scene: &SceneSpec<S>, pad: usize) -> u64 {
    let nx = (scene.nx + 2 * pad) as u64;
    let ny = (scene.ny + 2 * pad) as u64;
    let elem = std::mem::size_of::<S>() as u64;
    // ex + ey + hz
    (nx * (ny + 1) + (nx + 1) * ny + nx * ny) * elem
}

/// Open-space surrogate: the scene in a grid enlarged by
/// `enlargement_cells + margin` per side, PEC outer walls.
pub fn reference_run<S: Scalar>(scene: &SceneSpec<S>, margin: usize, max_bytes: u64) -> Result<Vec<S>> {
    scene.validate()?;
    if scene.n_steps == 0 {
        return Ok(Vec::new());
    }
    let pad = enlargement_cells(scene) + margin;
    let need = estimate_run_bytes(scene, pad);
    if need > max_bytes {
        return Err(Error::config(format!(
            "reference grid of {}x{} cells needs {need} bytes of field storage, cap is {max_bytes}",
            scene.nx + 2 * pad,
            scene.ny + 2 * pad
        )));
    }
    let spec = scene.grid_spec(pad)?;
    let mut sim = Simulation::new(
        spec,
        vec![scene.source_at(pad)],
        scene.sheet_at(pad),
        Box::new(PecWall),
    )?;
    let rec = sim
        .run(&[scene.probe_at(pad)])
        .map_err(|abort| abort.error)?;
    Ok(rec.series.into_iter().next().unwrap())
}

/// Everything the learned scheme needs to build its boundary.
#[derive(Clone)]
pub struct DdfModels<S> {
    pub edge: Forest<S>,
    pub corner: Forest<S>,
    pub stencil: StencilSpec,
    pub clamp: Option<S>,
}

/// One truncation scheme under comparison.
#[derive(Clone)]
pub enum Scheme<S> {
    /// PEC box at the scene boundary (total reflection baseline).
    Pec,
    /// Conventional graded absorbing slab of the given parameters.
    Cpml(PmlParams<S>),
    /// Trained one-cell forest boundary.
    Ddf(DdfModels<S>),
}

impl<S: Scalar> Scheme<S> {
    pub fn label(&self) -> String {
        match self {
            Scheme::Pec => "pec".into(),
            Scheme::Cpml(p) => format!("cpml{}", p.thickness),
            Scheme::Ddf(_) => "ddf".into(),
        }
    }
}

/// A scheme's probe series plus whatever its boundary reported.
#[derive(Debug, Clone)]
pub struct SchemeRun<S> {
    pub label: String,
    pub probe_series: Vec<S>,
    pub diagnostics: Option<String>,
}

pub fn run_scheme<S: Scalar>(scene: &SceneSpec<S>, scheme: &Scheme<S>) -> Result<SchemeRun<S>> {
    scene.validate()?;
    let (pad, boundary): (usize, Box<dyn BoundaryHandler<S>>) = match scheme {
        Scheme::Pec => (0, Box::new(PecWall)),
        Scheme::Cpml(params) => {
            let pad = params.thickness;
            let spec = scene.grid_spec(pad)?;
            (pad, Box::new(CpmlBoundary::new(params.clone(), &spec)?))
        }
        Scheme::Ddf(models) => {
            let spec = scene.grid_spec(0)?;
            (
                0,
                Box::new(DdfBoundary::new(
                    models.edge.clone(),
                    models.corner.clone(),
                    models.stencil.clone(),
                    &spec,
                    models.clamp,
                )?),
            )
        }
    };
    let spec = scene.grid_spec(pad)?;
    let mut sim = Simulation::new(spec, vec![scene.source_at(pad)], scene.sheet_at(pad), boundary)?;
    let rec = sim.run(&[scene.probe_at(pad)]).map_err(|abort| abort.error)?;
    Ok(SchemeRun {
        label: scheme.label(),
        probe_series: rec.series.into_iter().next().unwrap(),
        diagnostics: sim.boundary().diagnostics(),
    })
}

#[derive(Debug, Clone)]
pub struct CompareEntry<S> {
    pub label: String,
    pub report: ReflectionReport<S>,
    pub probe_series: Vec<S>,
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome<S> {
    pub dt: S,
    pub probe: (usize, usize),
    pub reference: Vec<S>,
    pub reference_id: String,
    pub entries: Vec<CompareEntry<S>>,
}

/// Run every scheme against one shared reference.
pub fn compare<S: Scalar>(
    scene: &SceneSpec<S>,
    schemes: &[Scheme<S>],
    margin: usize,
    max_bytes: u64,
) -> Result<CompareOutcome<S>> {
    let reference = reference_run(scene, margin, max_bytes)?;
    let reference_id = format!(
        "reference(pad={}+{margin})",
        enlargement_cells(scene)
    );
    let mut entries = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let run = run_scheme(scene, scheme)?;
        let report = reflection_error(
            &run.probe_series,
            &reference,
            run.label.clone(),
            reference_id.clone(),
            scene.probe,
        )?;
        entries.push(CompareEntry {
            label: run.label,
            report,
            probe_series: run.probe_series,
            diagnostics: run.diagnostics,
        });
    }
    Ok(CompareOutcome { dt: scene.dt, probe: scene.probe, reference, reference_id, entries })
}
