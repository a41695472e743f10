// Loss-kind matrix: which objective yields a stable absorbing rollout?
use ddfabc::dataset::extract_samples;
use ddfabc::forest::{train, LossKind, LossSpec, OptimConfig, TrainConfig};
use ddfabc::harness::{reference_run, reflection_error, run_scheme, DdfModels, Scheme};
use ddfabc::pml::PmlParams;
use ddfabc::scene::SceneSpec;
use ddfabc::stencil::StencilSpec;

fn main() {
    let scene = SceneSpec::<f64>::paper().unwrap();
    let pml = PmlParams::default();
    let stencil = StencilSpec::default();
    let h = extract_samples(&scene, &pml, &stencil, &[scene.source.clone()], 40_000, 7).unwrap();
    let reference = reference_run(&scene, 10, 8 << 30).unwrap();
    let (etr, eva, _) = h.edge.split((0.8, 0.1, 0.1), 5).unwrap();
    let (ctr, cva, _) = h.corner.split((0.8, 0.1, 0.1), 5).unwrap();

    for (label, kind, delta) in [
        ("huber d=0.1", LossKind::Huber, 0.1),
        ("huber d=0.01", LossKind::Huber, 0.01),
        ("mae", LossKind::Mae, 1.0),
    ] {
        let cfg = TrainConfig {
            n_trees: 16,
            depth: 6,
            epochs: 80,
            batch_size: 256,
            patience: 80,
            loss: LossSpec { kind, huber_delta: delta, ..LossSpec::default() },
            optimizer: OptimConfig { learning_rate: 0.02, ..OptimConfig::default() },
            ..TrainConfig::<f64>::default()
        };
        let edge = train(&etr, &eva, &cfg).unwrap();
        let corner = train(&ctr, &cva, &TrainConfig { n_trees: 8, depth: 5, ..cfg.clone() }).unwrap();
        let ddf = DdfModels {
            edge: edge.forest,
            corner: corner.forest,
            stencil: stencil.clone(),
            clamp: Some(10.0 * h.max_abs_field),
        };
        let run = run_scheme(&scene, &Scheme::Ddf(ddf)).unwrap();
        let rep = reflection_error(&run.probe_series, &reference, "ddf", "ref", scene.probe).unwrap();
        println!(
            "{label}: edge loss {:.3e} corner {:.3e} -> r_db_max {:.1} dB  [{}]",
            edge.best_valid_loss,
            corner.best_valid_loss,
            rep.r_db_max,
            run.diagnostics.unwrap_or_default()
        );
    }
}
