// Does scenario diversity stabilize the learned-boundary rollout?
use ddfabc::dataset::{extract_samples, scenario_sweep};
use ddfabc::forest::{train, LossKind, LossSpec, OptimConfig, TrainConfig};
use ddfabc::harness::{reference_run, reflection_error, run_scheme, DdfModels, Scheme};
use ddfabc::pml::PmlParams;
use ddfabc::scene::SceneSpec;
use ddfabc::stencil::StencilSpec;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_scen: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let rows: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(60_000);
    let k: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(16);
    let epochs: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(80);
    let delta: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.01);

    let scene = SceneSpec::<f64>::paper().unwrap();
    let pml = PmlParams::default();
    let stencil = StencilSpec::default();
    let sweep = scenario_sweep(&scene, n_scen, 2024);
    let h = extract_samples(&scene, &pml, &stencil, &sweep, rows, 7).unwrap();
    let reference = reference_run(&scene, 10, 8 << 30).unwrap();
    let (etr, eva, _) = h.edge.split((0.8, 0.1, 0.1), 5).unwrap();
    let (ctr, cva, _) = h.corner.split((0.8, 0.1, 0.1), 5).unwrap();
    let cfg = TrainConfig {
        n_trees: k,
        depth: 6,
        epochs,
        batch_size: 256,
        patience: epochs,
        loss: LossSpec { kind: LossKind::Huber, huber_delta: delta, ..LossSpec::default() },
        optimizer: OptimConfig { learning_rate: 0.02, ..OptimConfig::default() },
        ..TrainConfig::<f64>::default()
    };
    let edge = train(&etr, &eva, &cfg).unwrap();
    let corner = train(&ctr, &cva, &TrainConfig { n_trees: 8, depth: 5, ..cfg.clone() }).unwrap();
    let ddf = DdfModels {
        edge: edge.forest,
        corner: corner.forest,
        stencil,
        clamp: Some(10.0 * h.max_abs_field),
    };
    let run = run_scheme(&scene, &Scheme::Ddf(ddf)).unwrap();
    let rep = reflection_error(&run.probe_series, &reference, "ddf", "ref", scene.probe).unwrap();
    println!(
        "scenarios {n_scen} rows {} k {k} epochs {epochs} delta {delta}: edge {:.2e} corner {:.2e} -> r_db_max {:.1} dB [{}]",
        etr.n_rows() + eva.n_rows(),
        edge.best_valid_loss,
        corner.best_valid_loss,
        rep.r_db_max,
        run.diagnostics.unwrap_or_default()
    );
}
