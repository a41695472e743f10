//! Supervised-sample harvesting from absorbing-slab teacher runs.
//!
//! The teacher embeds the scene in a graded-slab-truncated grid. At every
//! step n >= 1 and every ring site, the canonicalized stencil fields at
//! steps n and n-1 form a feature row whose target is the site's tangential
//! E value at step n+1, read from the teacher. Rows from all four edges are
//! pooled after canonicalization; sites that cannot center their tangential
//! window go into a separate corner set. Feature assembly runs on the
//! scene-sized subgrid cut out of the teacher, through exactly the code the
//! deployed boundary uses, so training and inference see identical layouts.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{FieldGrid, SourceSpec};
use crate::pml::{CpmlBoundary, PmlParams};
use crate::scalar::{cast, Scalar};
use crate::scene::SceneSpec;
use crate::sim::Simulation;
use crate::stencil::{StencilLayout, StencilSpec};

pub const DATASET_MAGIC: &[u8; 8] = b"DDFDS001";

/// Row-major feature matrix with one scalar target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<S> {
    pub n_features: usize,
    pub features: Vec<S>,
    pub targets: Vec<S>,
    pub metadata: BTreeMap<String, String>,
}

impl<S: Scalar> SampleSet<S> {
    pub fn new(
        n_features: usize,
        features: Vec<S>,
        targets: Vec<S>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::argument("sample set needs at least one feature"));
        }
        if targets.is_empty() {
            return Err(Error::argument("sample set has no rows"));
        }
        if features.len() != targets.len() * n_features {
            return Err(Error::argument(format!(
                "{} feature values do not form {} rows of width {n_features}",
                features.len(),
                targets.len()
            )));
        }
        if !features.iter().all(|v| v.is_finite()) || !targets.iter().all(|v| v.is_finite()) {
            return Err(Error::argument("sample set contains non-finite values"));
        }
        Ok(Self { n_features, features, targets, metadata })
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.features[r * self.n_features..(r + 1) * self.n_features]
    }

    fn gather_rows(&self, rows: &[usize]) -> Self {
        let m = self.n_features;
        let mut features = Vec::with_capacity(rows.len() * m);
        let mut targets = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            targets.push(self.targets[r]);
        }
        Self { n_features: m, features, targets, metadata: self.metadata.clone() }
    }

    /// Deterministic shuffled split into train/valid/test partitions.
    pub fn split(&self, ratios: (f64, f64, f64), seed: u64) -> Result<(Self, Self, Self)> {
        let (r1, r2, r3) = ratios;
        if r1 <= 0.0 || r2 <= 0.0 || r3 <= 0.0 || (r1 + r2 + r3 - 1.0).abs() > 1e-9 {
            return Err(Error::argument(format!(
                "split ratios must be positive and sum to 1 (got {r1}, {r2}, {r3})"
            )));
        }
        let n = self.n_rows();
        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let c1 = (r1 * n as f64).floor() as usize;
        let c2 = ((r1 + r2) * n as f64).floor() as usize;
        if c1 == 0 || c2 == c1 || c2 == n {
            return Err(Error::argument(format!(
                "split of {n} rows at ({r1}, {r2}, {r3}) leaves an empty part"
            )));
        }
        let tag = |set: &mut Self, part: &str| {
            set.metadata.insert("split.part".into(), part.into());
            set.metadata.insert("split.seed".into(), seed.to_string());
        };
        let mut train = self.gather_rows(&order[..c1]);
        let mut valid = self.gather_rows(&order[c1..c2]);
        let mut test = self.gather_rows(&order[c2..]);
        tag(&mut train, "train");
        tag(&mut valid, "valid");
        tag(&mut test, "test");
        Ok((train, valid, test))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut meta = Vec::new();
        for (k, v) in &self.metadata {
            meta.extend_from_slice(k.as_bytes());
            meta.push(b'=');
            meta.extend_from_slice(v.as_bytes());
            meta.push(b'\n');
        }
        let mut out = Vec::with_capacity(20 + meta.len() + 8 * (self.features.len() + self.targets.len()));
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&(self.n_rows() as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_features as u32).to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        for v in &self.features {
            out.extend_from_slice(&v.to_f64().unwrap().to_le_bytes());
        }
        for v in &self.targets {
            out.extend_from_slice(&v.to_f64().unwrap().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 {
            return Err(Error::format("dataset file shorter than its header"));
        }
        if &bytes[..8] != DATASET_MAGIC {
            return Err(Error::format("bad dataset magic"));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let n_rows = u32_at(8) as usize;
        let m = u32_at(12) as usize;
        let meta_len = u32_at(16) as usize;
        if m == 0 || m > 1_000_000 {
            return Err(Error::format(format!("implausible feature count {m}")));
        }
        let expect = 20 + meta_len + 8 * (n_rows * m + n_rows);
        if bytes.len() != expect {
            return Err(Error::format(format!(
                "dataset file is {} bytes, layout requires {expect}",
                bytes.len()
            )));
        }
        let meta_text = std::str::from_utf8(&bytes[20..20 + meta_len])
            .map_err(|_| Error::format("dataset metadata is not UTF-8"))?;
        let mut metadata = BTreeMap::new();
        for line in meta_text.lines() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format("dataset metadata line has no '='"))?;
            metadata.insert(k.to_string(), v.to_string());
        }
        let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let mut off = 20 + meta_len;
        let mut features = Vec::with_capacity(n_rows * m);
        for _ in 0..n_rows * m {
            features.push(cast::<S>(f64_at(off)));
            off += 8;
        }
        let mut targets = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            targets.push(cast::<S>(f64_at(off)));
            off += 8;
        }
        Self::new(m, features, targets, metadata)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// CSV export for external tools: header f1..fM,target.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.n_features).map(|i| format!("f{i}")).collect();
        writeln!(w, "{},target", header.join(","))?;
        for r in 0..self.n_rows() {
            for v in self.row(r) {
                write!(w, "{:.16e},", v.to_f64().unwrap())?;
            }
            writeln!(w, "{:.16e}", self.targets[r].to_f64().unwrap())?;
        }
        Ok(())
    }
}

/// Raw ring values of every site at the end of every step, in site order.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSeries<S> {
    pub n_sites: usize,
    pub steps: Vec<Vec<S>>,
}

/// Everything one teacher campaign produces.
#[derive(Debug, Clone)]
pub struct TeacherHarvest<S> {
    pub edge: SampleSet<S>,
    pub corner: SampleSet<S>,
    /// Ring record of the first scenario, for replay checks.
    pub ring: RingSeries<S>,
    /// Probe series of the first scenario.
    pub probe: Vec<S>,
    /// Largest |field| seen in the scene region across all scenarios.
    pub max_abs_field: S,
}

/// Source variations around a base scene: the first entry is the base source
/// itself, the rest jitter position, pulse width and amplitude.
pub fn scenario_sweep<S: Scalar>(
    scene: &SceneSpec<S>,
    n_scenarios: usize,
    seed: u64,
) -> Vec<SourceSpec<S>> {
    let mut out = vec![scene.source.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < n_scenarios {
        let i = rng.gen_range(1..scene.nx);
        let j = rng.gen_range(0..scene.ny);
        if let Some(sheet) = &scene.sheet {
            // skip positions whose Ey edge is PEC-masked
            if j == sheet.j_row && i >= sheet.i_start && i <= sheet.i_end + 1 {
                continue;
            }
        }
        let t_w = scene.source.t_w * cast(rng.gen_range(0.5..2.0));
        let amplitude = scene.source.amplitude * cast(rng.gen_range(0.5..2.0));
        out.push(SourceSpec { t_w, t0: t_w * cast(4.0), i, j, amplitude });
    }
    out
}

fn subgrid<S: Scalar>(teacher: &FieldGrid<S>, pad: usize, nx: usize, ny: usize) -> FieldGrid<S> {
    use ndarray::s;
    FieldGrid {
        ex: teacher.ex.slice(s![pad..pad + nx, pad..pad + ny + 1]).to_owned(),
        ey: teacher.ey.slice(s![pad..pad + nx + 1, pad..pad + ny]).to_owned(),
        hz: teacher.hz.slice(s![pad..pad + nx, pad..pad + ny]).to_owned(),
    }
}

struct Accumulator<S> {
    features: Vec<S>,
    targets: Vec<S>,
}

impl<S: Scalar> Accumulator<S> {
    fn new() -> Self {
        Self { features: Vec::new(), targets: Vec::new() }
    }
}

/// Run the teacher for every scenario and harvest edge and corner samples.
pub fn extract_samples<S: Scalar>(
    scene: &SceneSpec<S>,
    pml: &PmlParams<S>,
    stencil: &StencilSpec,
    sources: &[SourceSpec<S>],
    max_edge_rows: usize,
    seed: u64,
) -> Result<TeacherHarvest<S>> {
    scene.validate()?;
    if sources.is_empty() {
        return Err(Error::argument("at least one source scenario is required"));
    }
    let layout = StencilLayout::new(stencil.clone(), scene.nx, scene.ny)?;
    let m = stencil.feature_count();
    let pad = pml.thickness;
    let teacher_spec = scene.grid_spec(pad)?;
    let probe = scene.probe_at(pad);

    let mut edge = Accumulator::new();
    let mut corner = Accumulator::new();
    let mut ring = RingSeries { n_sites: layout.n_sites(), steps: Vec::new() };
    let mut probe_series = Vec::new();
    let mut max_abs = S::zero();
    let mut feat_buf = vec![S::zero(); m];

    for (scenario, src) in sources.iter().enumerate() {
        let mut shifted = src.clone();
        shifted.i += pad;
        shifted.j += pad;
        let boundary = CpmlBoundary::new(pml.clone(), &teacher_spec)?;
        let mut sim = Simulation::new(
            teacher_spec.clone(),
            vec![shifted],
            scene.sheet_at(pad),
            Box::new(boundary),
        )?;
        let mut prev_q = subgrid(sim.grid(), pad, scene.nx, scene.ny); // state at step n-1
        let mut cur_q = prev_q.clone(); // state at step n
        for n in 0..scene.n_steps {
            sim.step()?;
            let next_q = subgrid(sim.grid(), pad, scene.nx, scene.ny);
            max_abs = max_abs.max(next_q.max_abs());
            if scenario == 0 {
                ring.steps.push(layout.read_ring_raw(&next_q));
                probe_series.push(sim.grid().ey[[probe.0, probe.1]]);
            }
            if n >= 1 {
                for (idx, site) in layout.sites().iter().enumerate() {
                    layout.gather_features(idx, &cur_q, &prev_q, &mut feat_buf);
                    let target = layout.read_target(idx, &next_q);
                    let acc = if site.corner { &mut corner } else { &mut edge };
                    acc.features.extend_from_slice(&feat_buf);
                    acc.targets.push(target);
                }
            }
            prev_q = std::mem::replace(&mut cur_q, next_q);
        }
    }

    if edge.targets.is_empty() || corner.targets.is_empty() {
        return Err(Error::argument(format!(
            "harvest produced no rows ({} steps is too short)",
            scene.n_steps
        )));
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("m".into(), m.to_string());
    metadata.insert("stencil.depth".into(), stencil.inward_depth.to_string());
    metadata.insert("stencil.halfwidth".into(), stencil.tangential_halfwidth.to_string());
    metadata.insert("stencil.components".into(), stencil.components_string());
    metadata.insert("stencil.time_levels".into(), stencil.time_levels.to_string());
    metadata.insert("scene.nx".into(), scene.nx.to_string());
    metadata.insert("scene.ny".into(), scene.ny.to_string());
    metadata.insert("grid.dx".into(), format!("{:.16e}", scene.dx.to_f64().unwrap()));
    metadata.insert("grid.dy".into(), format!("{:.16e}", scene.dy.to_f64().unwrap()));
    metadata.insert("grid.dt".into(), format!("{:.16e}", scene.dt.to_f64().unwrap()));
    metadata.insert("grid.n_steps".into(), scene.n_steps.to_string());
    metadata.insert("teacher.pml.thickness".into(), pml.thickness.to_string());
    metadata.insert("teacher.pml.m".into(), pml.m.to_string());
    metadata.insert(
        "teacher.pml.sigma_max_ratio".into(),
        format!("{:.16e}", pml.sigma_max_ratio.to_f64().unwrap()),
    );
    metadata.insert("teacher.pml.kappa_max".into(), format!("{:.16e}", pml.kappa_max.to_f64().unwrap()));
    metadata.insert("teacher.pml.alpha".into(), format!("{:.16e}", pml.alpha.to_f64().unwrap()));
    metadata.insert("canonicalized".into(), "true".into());
    metadata.insert("seed".into(), seed.to_string());
    metadata.insert("n_scenarios".into(), sources.len().to_string());
    for (idx, src) in sources.iter().enumerate() {
        metadata.insert(
            format!("scenario.{idx}"),
            format!(
                "i={} j={} tw={:.16e} amp={:.16e}",
                src.i,
                src.j,
                src.t_w.to_f64().unwrap(),
                src.amplitude.to_f64().unwrap()
            ),
        );
    }
    metadata.insert("max_abs_field".into(), format!("{:.16e}", max_abs.to_f64().unwrap()));
    metadata.insert("degenerate".into(), (max_abs == S::zero()).to_string());

    let mut edge_meta = metadata.clone();
    edge_meta.insert("role".into(), "edge".into());
    let mut corner_meta = metadata;
    corner_meta.insert("role".into(), "corner".into());

    let mut edge_set = SampleSet::new(m, edge.features, edge.targets, edge_meta)?;
    let corner_set = SampleSet::new(m, corner.features, corner.targets, corner_meta)?;

    if max_edge_rows > 0 && edge_set.n_rows() > max_edge_rows {
        let mut keep =
            rand::seq::index::sample(&mut ChaCha8Rng::seed_from_u64(seed), edge_set.n_rows(), max_edge_rows)
                .into_vec();
        keep.sort_unstable();
        let mut thinned = edge_set.gather_rows(&keep);
        thinned
            .metadata
            .insert("subsampled_to".into(), max_edge_rows.to_string());
        edge_set = thinned;
    }

    Ok(TeacherHarvest { edge: edge_set, corner: corner_set, ring, probe: probe_series, max_abs_field: max_abs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PecSheet;

    fn tiny_scene(n_steps: usize) -> SceneSpec<f64> {
        let dx = 1e-3;
        let dt = crate::grid::courant_limit(dx, dx).unwrap() * 0.5;
        SceneSpec {
            nx: 20,
            ny: 12,
            dx,
            dy: dx,
            dt,
            n_steps,
            sheet: None,
            source: SourceSpec::standard(10, 6),
            probe: (5, 6),
        }
    }

    fn tiny_pml() -> PmlParams<f64> {
        PmlParams { thickness: 3, ..Default::default() }
    }

    fn toy_set(n: usize) -> SampleSet<f64> {
        let features: Vec<f64> = (0..n * 2).map(|i| i as f64).collect();
        let targets: Vec<f64> = (0..n).map(|i| 10.0 * i as f64).collect();
        SampleSet::new(2, features, targets, BTreeMap::new()).unwrap()
    }

    #[test]
    fn split_sizes_and_partition() {
        let set = toy_set(10);
        let (tr, va, te) = set.split((0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!((tr.n_rows(), va.n_rows(), te.n_rows()), (8, 1, 1));
        // multiset of rows is preserved
        let mut all: Vec<(u64, u64, u64)> = Vec::new();
        for part in [&tr, &va, &te] {
            for r in 0..part.n_rows() {
                let row = part.row(r);
                all.push((row[0] as u64, row[1] as u64, part.targets[r] as u64));
            }
        }
        all.sort_unstable();
        let expect: Vec<(u64, u64, u64)> =
            (0..10u64).map(|i| (2 * i, 2 * i + 1, 10 * i)).collect();
        assert_eq!(all, expect);
    }

    #[test]
    fn split_is_deterministic_and_validates() {
        let set = toy_set(50);
        let a = set.split((0.8, 0.1, 0.1), 3).unwrap();
        let b = set.split((0.8, 0.1, 0.1), 3).unwrap();
        assert_eq!(a.0.features, b.0.features);
        assert_eq!(a.2.targets, b.2.targets);
        assert!(set.split((0.5, 0.5, 0.5), 3).is_err());
        assert!(toy_set(3).split((0.98, 0.01, 0.01), 3).is_err());
    }

    #[test]
    fn sweep_base_first_and_deterministic() {
        let scene = tiny_scene(10);
        let one = scenario_sweep(&scene, 1, 9);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0], scene.source);
        let a = scenario_sweep(&scene, 5, 9);
        let b = scenario_sweep(&scene, 5, 9);
        assert_eq!(a, b);
        for src in &a {
            assert!(src.i >= 1 && src.i < scene.nx);
            assert!(src.j < scene.ny);
            assert!(src.t_w > 0.0);
        }
    }

    #[test]
    fn sweep_avoids_pec_masked_positions() {
        let mut scene = tiny_scene(10);
        scene.sheet = Some(PecSheet::new(3, 2, 17).unwrap());
        let sweep = scenario_sweep(&scene, 40, 123);
        for src in &sweep {
            let masked = src.j == 3 && src.i >= 2 && src.i <= 18;
            assert!(!masked, "source {src:?} sits on the sheet");
        }
    }

    #[test]
    fn extraction_row_counts() {
        let scene = tiny_scene(12);
        let h = extract_samples(&scene, &tiny_pml(), &StencilSpec::default(), &[scene.source.clone()], 0, 1)
            .unwrap();
        let sites = 2 * (scene.nx + scene.ny);
        let steps = scene.n_steps - 1;
        assert_eq!(h.corner.n_rows(), 8 * steps);
        assert_eq!(h.edge.n_rows(), (sites - 8) * steps);
        assert_eq!(h.ring.steps.len(), scene.n_steps);
        assert_eq!(h.ring.n_sites, sites);
        assert_eq!(h.probe.len(), scene.n_steps);
        assert_eq!(h.edge.metadata.get("role").unwrap(), "edge");
        assert_eq!(h.corner.metadata.get("role").unwrap(), "corner");
        assert_eq!(h.edge.metadata.get("m").unwrap(), "54");
    }

    #[test]
    fn extraction_is_deterministic() {
        let scene = tiny_scene(10);
        let sweep = scenario_sweep(&scene, 2, 4);
        let a = extract_samples(&scene, &tiny_pml(), &StencilSpec::default(), &sweep, 0, 4).unwrap();
        let b = extract_samples(&scene, &tiny_pml(), &StencilSpec::default(), &sweep, 0, 4).unwrap();
        assert_eq!(a.edge.to_bytes(), b.edge.to_bytes());
        assert_eq!(a.corner.to_bytes(), b.corner.to_bytes());
        assert_eq!(a.ring, b.ring);
    }

    #[test]
    fn zero_amplitude_harvest_is_degenerate() {
        let mut scene = tiny_scene(8);
        scene.source.amplitude = 0.0;
        let h = extract_samples(&scene, &tiny_pml(), &StencilSpec::default(), &[scene.source.clone()], 0, 1)
            .unwrap();
        assert_eq!(h.edge.metadata.get("degenerate").unwrap(), "true");
        assert!(h.edge.features.iter().all(|&v| v == 0.0));
        assert!(h.edge.targets.iter().all(|&v| v == 0.0));
        assert_eq!(h.max_abs_field, 0.0);
    }

    #[test]
    fn too_short_run_is_an_error() {
        let scene = tiny_scene(1);
        assert!(extract_samples(
            &scene,
            &tiny_pml(),
            &StencilSpec::default(),
            &[scene.source.clone()],
            0,
            1
        )
        .is_err());
    }

    #[test]
    fn subsampling_caps_edge_rows() {
        let scene = tiny_scene(12);
        let h = extract_samples(&scene, &tiny_pml(), &StencilSpec::default(), &[scene.source.clone()], 100, 1)
            .unwrap();
        assert_eq!(h.edge.n_rows(), 100);
        assert_eq!(h.edge.metadata.get("subsampled_to").unwrap(), "100");
        // corner rows untouched
        assert_eq!(h.corner.n_rows(), 8 * 11);
    }

    /// Mirror-symmetric scenario: after canonicalization, left-edge and
    /// right-edge rows must be pairwise identical.
    #[test]
    fn mirror_symmetric_rows_coincide() {
        let scene = tiny_scene(40); // source at i = 10 = nx/2 keeps x-mirror symmetry
        let h = extract_samples(&scene, &tiny_pml(), &StencilSpec::default(), &[scene.source.clone()], 0, 1)
            .unwrap();
        let m = h.edge.n_features;
        let ny = scene.ny;
        let nx = scene.nx;
        let regular_per_step = 2 * (ny - 2) + 2 * (nx - 2);
        for n in 0..(scene.n_steps - 1) {
            let block = n * regular_per_step;
            for k in 1..ny - 1 {
                let left_row = block + (k - 1);
                let right_row = block + (ny - 2) + (k - 1);
                let a = h.edge.row(left_row);
                let b = h.edge.row(right_row);
                for (x, y) in a.iter().zip(b) {
                    assert!(
                        (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0),
                        "step {n} k {k}: {x} vs {y}"
                    );
                }
                let ta = h.edge.targets[left_row];
                let tb = h.edge.targets[right_row];
                assert!((ta - tb).abs() <= 1e-12 * ta.abs().max(tb.abs()).max(1.0));
            }
        }
        let _ = m;
    }

    #[test]
    fn binary_round_trip_and_rejects() {
        let scene = tiny_scene(6);
        let h = extract_samples(&scene, &tiny_pml(), &StencilSpec::default(), &[scene.source.clone()], 0, 1)
            .unwrap();
        let bytes = h.edge.to_bytes();
        let back = SampleSet::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back, h.edge);
        assert_eq!(back.to_bytes(), bytes);

        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(SampleSet::<f64>::from_bytes(&bad).is_err());
        assert!(SampleSet::<f64>::from_bytes(&bytes[..bytes.len() - 4]).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let set = toy_set(3);
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "f1,f2,target");
        assert_eq!(lines.count(), 3);
    }
}
