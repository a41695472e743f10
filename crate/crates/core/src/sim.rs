//! Leapfrog time stepping and the boundary-handler contract.
//!
//! One full step advances the state (E at t, Hz at t - 1/2) to
//! (E at t+1, Hz at t+1/2):
//!
//!   step_h -> handler.apply_after_h -> step_e -> inject sources ->
//!   handler.apply_after_e -> PEC mask -> finiteness check -> record probes
//!
//! Interior updates are plain vacuum curls; everything boundary-specific
//! (PML corrections, ring closure) lives in the handler. Sources are
//! injected before `apply_after_e` so the handler and any history snapshot
//! see the completed state; for the PML handler the two operations touch
//! disjoint cells, so the order does not change its result.

use ndarray::{s, Zip};

use crate::error::{Error, Result};
use crate::grid::{FieldGrid, GridSpec, PecSheet, SourceSpec};
use crate::scalar::{cast, Scalar, EPS0, MU0};

/// Grids below this cell count are stepped serially; larger ones go through
/// rayon. Both paths compute each element with identical arithmetic, so the
/// result is bit-identical either way.
const PAR_MIN_CELLS: usize = 32_768;

/// Boundary scheme plugged into the leapfrog loop.
pub trait BoundaryHandler<S: Scalar> {
    fn label(&self) -> String;

    /// Called right after the Hz update, while E still holds time-t values.
    fn apply_after_h(
        &mut self,
        _grid: &mut FieldGrid<S>,
        _spec: &GridSpec<S>,
        _step: usize,
    ) -> Result<()> {
        Ok(())
    }

    /// Called after the E update and source injection; owns the outer ring.
    fn apply_after_e(
        &mut self,
        _grid: &mut FieldGrid<S>,
        _spec: &GridSpec<S>,
        _step: usize,
    ) -> Result<()> {
        Ok(())
    }

    /// One-line run summary (clamp counts and the like), if the handler has one.
    fn diagnostics(&self) -> Option<String> {
        None
    }
}

/// Plain PEC box: the untouched ring stays zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct PecWall;

impl<S: Scalar> BoundaryHandler<S> for PecWall {
    fn label(&self) -> String {
        "pec".into()
    }
}

/// Advance Hz by one step from the curl of E (every cell).
pub fn step_h<S: Scalar>(grid: &mut FieldGrid<S>, spec: &GridSpec<S>) {
    let ch = spec.dt / cast::<S>(MU0);
    let inv_dx = S::one() / spec.dx;
    let inv_dy = S::one() / spec.dy;
    let zip = Zip::from(&mut grid.hz)
        .and(grid.ey.slice(s![1.., ..]))
        .and(grid.ey.slice(s![..-1, ..]))
        .and(grid.ex.slice(s![.., 1..]))
        .and(grid.ex.slice(s![.., ..-1]));
    let f = move |hz: &mut S, &ey_r: &S, &ey_l: &S, &ex_t: &S, &ex_b: &S| {
        *hz = *hz - ch * ((ey_r - ey_l) * inv_dx - (ex_t - ex_b) * inv_dy);
    };
    if spec.nx * spec.ny >= PAR_MIN_CELLS {
        zip.par_for_each(f);
    } else {
        zip.for_each(f);
    }
}

/// Advance Ex and Ey from the curl of Hz, skipping the handler-owned ring,
/// then force tangential E to zero on the PEC sheet.
pub fn step_e<S: Scalar>(grid: &mut FieldGrid<S>, spec: &GridSpec<S>, pec: Option<&PecSheet>) {
    let ce = spec.dt / cast::<S>(EPS0);
    let inv_dx = S::one() / spec.dx;
    let inv_dy = S::one() / spec.dy;
    let par = spec.nx * spec.ny >= PAR_MIN_CELLS;

    // Ex[i, j] += dt/eps0 (Hz[i, j] - Hz[i, j-1]) / dy  for 1 <= j <= ny-1
    let zx = Zip::from(grid.ex.slice_mut(s![.., 1..-1]))
        .and(grid.hz.slice(s![.., 1..]))
        .and(grid.hz.slice(s![.., ..-1]));
    let fx = move |ex: &mut S, &hz_t: &S, &hz_b: &S| {
        *ex = *ex + ce * (hz_t - hz_b) * inv_dy;
    };
    // Ey[i, j] -= dt/eps0 (Hz[i, j] - Hz[i-1, j]) / dx  for 1 <= i <= nx-1
    let zy = Zip::from(grid.ey.slice_mut(s![1..-1, ..]))
        .and(grid.hz.slice(s![1.., ..]))
        .and(grid.hz.slice(s![..-1, ..]));
    let fy = move |ey: &mut S, &hz_r: &S, &hz_l: &S| {
        *ey = *ey - ce * (hz_r - hz_l) * inv_dx;
    };
    if par {
        zx.par_for_each(fx);
        zy.par_for_each(fy);
    } else {
        zx.for_each(fx);
        zy.for_each(fy);
    }

    if let Some(sheet) = pec {
        sheet.apply_mask(grid);
    }
}

/// Soft additive source: ey[i, j] -= dt/eps0 * J_y(t)/dx * amplitude.
pub fn inject_source<S: Scalar>(grid: &mut FieldGrid<S>, src: &SourceSpec<S>, t: S, spec: &GridSpec<S>) {
    let j_y = src.waveform(t);
    grid.ey[[src.i, src.j]] =
        grid.ey[[src.i, src.j]] - spec.dt / cast::<S>(EPS0) * j_y / spec.dx * src.amplitude;
}

/// Per-probe Ey time series (one sample at the end of every step).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord<S> {
    pub dt: S,
    pub probes: Vec<(usize, usize)>,
    pub series: Vec<Vec<S>>,
}

impl<S: Scalar> ProbeRecord<S> {
    fn new(dt: S, probes: &[(usize, usize)]) -> Self {
        Self {
            dt,
            probes: probes.to_vec(),
            series: vec![Vec::new(); probes.len()],
        }
    }
}

/// A run that aborted on instability still reports what it recorded.
#[derive(Debug)]
pub struct RunAbort<S> {
    pub error: Error,
    pub partial: ProbeRecord<S>,
}

/// One truncated simulation instance: grid state, sources, PEC sheet and the
/// boundary handler that owns the outer ring.
pub struct Simulation<S: Scalar> {
    spec: GridSpec<S>,
    grid: FieldGrid<S>,
    sources: Vec<SourceSpec<S>>,
    pec: Option<PecSheet>,
    boundary: Box<dyn BoundaryHandler<S>>,
    step: usize,
}

impl<S: Scalar> Simulation<S> {
    pub fn new(
        spec: GridSpec<S>,
        sources: Vec<SourceSpec<S>>,
        pec: Option<PecSheet>,
        boundary: Box<dyn BoundaryHandler<S>>,
    ) -> Result<Self> {
        for src in &sources {
            // Ey interior: 1 <= i <= nx-1, 0 <= j <= ny-1
            if src.i < 1 || src.i + 1 > spec.nx || src.j + 1 > spec.ny {
                return Err(Error::argument(format!(
                    "source at Ey[{}, {}] outside the physical region of a {}x{} grid",
                    src.i, src.j, spec.nx, spec.ny
                )));
            }
        }
        if let Some(sheet) = &pec {
            sheet.validate(&spec)?;
            for src in &sources {
                if src.j == sheet.j_row && src.i >= sheet.i_start && src.i <= sheet.i_end + 1 {
                    return Err(Error::argument(format!(
                        "source at Ey[{}, {}] sits on a PEC-masked edge",
                        src.i, src.j
                    )));
                }
            }
        }
        let grid = FieldGrid::zeros(&spec);
        Ok(Self { spec, grid, sources, pec, boundary, step: 0 })
    }

    pub fn spec(&self) -> &GridSpec<S> {
        &self.spec
    }

    pub fn grid(&self) -> &FieldGrid<S> {
        &self.grid
    }

    pub fn grid_mut(&mut self) -> &mut FieldGrid<S> {
        &mut self.grid
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn boundary(&self) -> &dyn BoundaryHandler<S> {
        self.boundary.as_ref()
    }

    /// Advance the state by one full leapfrog step.
    pub fn step(&mut self) -> Result<()> {
        let t_half = (S::from_usize(self.step).unwrap() + cast(0.5)) * self.spec.dt;
        step_h(&mut self.grid, &self.spec);
        self.boundary.apply_after_h(&mut self.grid, &self.spec, self.step)?;
        step_e(&mut self.grid, &self.spec, self.pec.as_ref());
        for k in 0..self.sources.len() {
            let src = self.sources[k].clone();
            inject_source(&mut self.grid, &src, t_half, &self.spec);
        }
        self.boundary.apply_after_e(&mut self.grid, &self.spec, self.step)?;
        // Handlers must not leave energy on masked edges either.
        if let Some(sheet) = &self.pec {
            sheet.apply_mask(&mut self.grid);
        }
        if !self.grid.all_finite() {
            return Err(Error::Instability {
                step: self.step,
                detail: "non-finite field entry".into(),
            });
        }
        self.step += 1;
        Ok(())
    }

    /// Run the configured number of steps, recording Ey at each probe.
    pub fn run(&mut self, probes: &[(usize, usize)]) -> std::result::Result<ProbeRecord<S>, Box<RunAbort<S>>> {
        let mut record = ProbeRecord::new(self.spec.dt, probes);
        for &(i, j) in probes {
            if i > self.spec.nx || j >= self.spec.ny {
                return Err(Box::new(RunAbort {
                    error: Error::argument(format!(
                        "probe Ey[{i}, {j}] outside a {}x{} grid",
                        self.spec.nx, self.spec.ny
                    )),
                    partial: record,
                }));
            }
        }
        for _ in 0..self.spec.n_steps {
            if let Err(e) = self.step() {
                return Err(Box::new(RunAbort { error: e, partial: record }));
            }
            for (p, &(i, j)) in probes.iter().enumerate() {
                record.series[p].push(self.grid.ey[[i, j]]);
            }
        }
        Ok(record)
    }
}

/// Probe CSV: `step,t_seconds,ey`, one row per step, 17 significant digits.
pub fn write_probe_csv<S: Scalar, W: std::io::Write>(
    mut w: W,
    record: &ProbeRecord<S>,
    probe_index: usize,
) -> Result<()> {
    writeln!(w, "step,t_seconds,ey")?;
    let dt = record.dt.to_f64().unwrap();
    for (n, v) in record.series[probe_index].iter().enumerate() {
        let t = (n + 1) as f64 * dt;
        writeln!(w, "{},{:.16e},{:.16e}", n, t, v.to_f64().unwrap())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::courant_limit;
    use crate::scalar::C0;

    fn small_spec(n_steps: usize) -> GridSpec<f64> {
        GridSpec::with_half_courant_dt(16, 16, 1e-3, 1e-3, n_steps).unwrap()
    }

    #[test]
    fn waveform_identities() {
        let src = SourceSpec::<f64>::standard(5, 5);
        // zero at the pulse center
        assert_eq!(src.waveform(src.t0), 0.0);
        // tau = 1 gives -2/e
        let v = src.waveform(src.t0 + src.t_w);
        assert!((v - (-2.0 / std::f64::consts::E)).abs() < 1e-15);
        // global maximum sqrt(2) exp(-1/2) at tau = -1/sqrt(2)
        let peak = src.waveform(src.t0 - src.t_w / 2f64.sqrt());
        let expect = 2f64.sqrt() * (-0.5f64).exp();
        assert!((peak - expect).abs() < 1e-12);
        assert!((expect - 0.857763).abs() < 1e-6);
        // dense scan confirms it is the maximum
        let mut best = 0.0f64;
        for k in 0..20_000 {
            let t = src.t0 - 4.0 * src.t_w + (k as f64) * 8.0 * src.t_w / 20_000.0;
            best = best.max(src.waveform(t).abs());
        }
        assert!(best <= expect + 1e-9);
    }

    #[test]
    fn step_h_zero_stays_zero() {
        let spec = small_spec(1);
        let mut g = FieldGrid::zeros(&spec);
        step_h(&mut g, &spec);
        assert_eq!(g.hz.iter().copied().fold(0.0, f64::max), 0.0);
        assert_eq!(g.hz.iter().copied().fold(0.0, f64::min), 0.0);
    }

    #[test]
    fn step_h_single_edge_curl() {
        let spec = small_spec(1);
        let mut g = FieldGrid::zeros(&spec);
        g.ey[[6, 4]] = 1.0; // ey[i+1, j] for cell (5, 4)
        step_h(&mut g, &spec);
        let expect = -spec.dt / (MU0 * spec.dx);
        assert!((g.hz[[5, 4]] - expect).abs() < expect.abs() * 1e-15);
        // the same edge is ey[i, j] for cell (6, 4), opposite sign
        assert!((g.hz[[6, 4]] + expect).abs() < expect.abs() * 1e-15);
        // everything else untouched
        assert_eq!(g.hz[[5, 5]], 0.0);
        assert_eq!(g.hz[[4, 4]], 0.0);
    }

    #[test]
    fn step_h_uniform_field_has_zero_curl() {
        let spec = small_spec(1);
        let mut g = FieldGrid::zeros(&spec);
        g.ey.fill(2.5);
        step_h(&mut g, &spec);
        assert!(g.hz.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_e_single_cell_curl() {
        let spec = small_spec(1);
        let mut g = FieldGrid::zeros(&spec);
        g.hz[[5, 4]] = 1.0;
        step_e(&mut g, &spec, None);
        let c = spec.dt / (EPS0 * spec.dx);
        assert!((g.ey[[5, 4]] + c).abs() < c * 1e-15);
        assert!((g.ey[[6, 4]] - c).abs() < c * 1e-15);
        let cy = spec.dt / (EPS0 * spec.dy);
        assert!((g.ex[[5, 4]] - cy).abs() < cy * 1e-15);
        assert!((g.ex[[5, 5]] + cy).abs() < cy * 1e-15);
    }

    #[test]
    fn step_e_respects_pec_mask() {
        let spec = small_spec(1);
        let sheet = PecSheet::new(6, 4, 10).unwrap();
        let mut g = FieldGrid::zeros(&spec);
        g.hz.fill(1.0);
        g.hz[[7, 6]] = 3.0;
        step_e(&mut g, &spec, Some(&sheet));
        assert_eq!(g.ey[[7, 6]], 0.0);
        assert_eq!(g.ex[[7, 6]], 0.0);
        assert_eq!(g.ex[[7, 7]], 0.0);
    }

    #[test]
    fn ring_is_never_touched_by_interior_updates() {
        let spec = small_spec(1);
        let mut g = FieldGrid::zeros(&spec);
        g.hz.fill(1.0);
        g.ey.fill(0.5);
        g.ex.fill(0.5);
        let nx = spec.nx;
        let ny = spec.ny;
        step_e(&mut g, &spec, None);
        for j in 0..ny {
            assert_eq!(g.ey[[0, j]], 0.5);
            assert_eq!(g.ey[[nx, j]], 0.5);
        }
        for i in 0..nx {
            assert_eq!(g.ex[[i, 0]], 0.5);
            assert_eq!(g.ex[[i, ny]], 0.5);
        }
    }

    #[test]
    fn run_zero_steps_returns_empty_series() {
        let spec = small_spec(0);
        let mut sim = Simulation::new(spec, vec![SourceSpec::standard(8, 8)], None, Box::new(PecWall)).unwrap();
        let rec = sim.run(&[(4, 4)]).unwrap();
        assert!(rec.series[0].is_empty());
    }

    #[test]
    fn run_zero_amplitude_source_stays_zero() {
        let spec = small_spec(50);
        let mut src = SourceSpec::standard(8, 8);
        src.amplitude = 0.0;
        let mut sim = Simulation::new(spec, vec![src], None, Box::new(PecWall)).unwrap();
        let rec = sim.run(&[(4, 4)]).unwrap();
        assert!(rec.series[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_fields_remain_exactly_zero() {
        let spec = small_spec(200);
        let mut sim = Simulation::new(spec, vec![], None, Box::new(PecWall)).unwrap();
        let rec = sim.run(&[(8, 8), (1, 1)]).unwrap();
        for s in &rec.series {
            assert!(s.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn pec_sheet_ey_zero_at_every_recorded_step() {
        let spec = GridSpec::with_half_courant_dt(40, 12, 1e-3f64, 1e-3, 300).unwrap();
        let sheet = PecSheet::new(5, 10, 30).unwrap();
        let src = SourceSpec::standard(20, 8);
        let mut sim = Simulation::new(spec, vec![src], Some(sheet), Box::new(PecWall)).unwrap();
        // probes on the sheet's masked Ey edges
        let rec = sim.run(&[(15, 5), (31, 5), (20, 8)]).unwrap();
        assert!(rec.series[0].iter().all(|&v| v == 0.0));
        assert!(rec.series[1].iter().all(|&v| v == 0.0));
        // the off-sheet probe does see the pulse
        assert!(rec.series[2].iter().any(|&v| v.abs() > 0.0));
    }

    #[test]
    fn source_position_validated() {
        let spec = small_spec(1);
        assert!(Simulation::new(
            spec.clone(),
            vec![SourceSpec::standard(0, 5)],
            None,
            Box::new(PecWall)
        )
        .is_err());
        assert!(Simulation::new(spec, vec![SourceSpec::standard(16, 5)], None, Box::new(PecWall)).is_err());
    }

    #[test]
    fn instability_reports_step_and_partial_record() {
        // bypass the constructor guard to get an unstable dt
        let limit = courant_limit(1e-3f64, 1e-3).unwrap();
        let spec = GridSpec { nx: 16, ny: 16, dx: 1e-3, dy: 1e-3, dt: 3.0 * limit, n_steps: 400 };
        let mut sim = Simulation::new(spec, vec![SourceSpec::standard(8, 8)], None, Box::new(PecWall)).unwrap();
        let abort = sim.run(&[(4, 4)]).unwrap_err();
        match abort.error {
            Error::Instability { step, .. } => {
                assert_eq!(abort.partial.series[0].len(), step);
                assert!(step > 0);
            }
            other => panic!("expected instability, got {other}"),
        }
    }

    #[test]
    fn pulse_travel_time_matches_light_speed() {
        // Two probes 50 cells apart along x; onset difference must be
        // 50 dx / (c dt) ~ 141 steps. Onset = first sample above 1% of the
        // probe's own peak, which cancels the pulse rise time.
        let spec = GridSpec::with_half_courant_dt(160, 40, 1e-3, 1e-3, 420).unwrap();
        let src = SourceSpec::standard(30, 20);
        let mut sim = Simulation::new(spec.clone(), vec![src], None, Box::new(PecWall)).unwrap();
        let rec = sim.run(&[(55, 20), (105, 20)]).unwrap();
        let onset = |s: &[f64]| {
            let peak = s.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            s.iter().position(|&v| v.abs() > 0.01 * peak).unwrap()
        };
        let d = onset(&rec.series[1]) as isize - onset(&rec.series[0]) as isize;
        let expect = (50.0 * spec.dx / (C0 * spec.dt)).round() as isize;
        assert!((expect - 141).abs() <= 1, "oracle arithmetic: {expect}");
        assert!((d - expect).abs() <= 5, "onset difference {d}, expected {expect}");
    }

    #[test]
    fn f32_instantiation_smoke() {
        let spec = GridSpec::<f32>::with_half_courant_dt(16, 16, 1e-3, 1e-3, 40).unwrap();
        let mut sim = Simulation::new(spec, vec![SourceSpec::standard(8, 8)], None, Box::new(PecWall)).unwrap();
        let rec = sim.run(&[(4, 4)]).unwrap();
        assert_eq!(rec.series[0].len(), 40);
        assert!(rec.series[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn probe_csv_full_precision_round_trip() {
        let rec = ProbeRecord {
            dt: 1.17935e-12f64,
            probes: vec![(1, 1)],
            series: vec![vec![1.0 / 3.0, -2.5e-7, 0.0]],
        };
        let mut buf = Vec::new();
        write_probe_csv(&mut buf, &rec, 0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "step,t_seconds,ey");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[2].parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
