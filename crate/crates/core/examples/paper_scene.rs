// Scratch calibration on the benchmark scene: slab baseline, PEC baseline,
// and the full harvest -> train -> deploy pipeline.
use std::time::Instant;

use ddfabc::dataset::{extract_samples, scenario_sweep};
use ddfabc::forest::{OptimConfig, TrainConfig};
use ddfabc::harness::{compare, DdfModels, Scheme};
use ddfabc::pml::PmlParams;
use ddfabc::scene::SceneSpec;
use ddfabc::stencil::StencilSpec;

fn main() {
    let scene = SceneSpec::<f64>::paper().unwrap();
    let pml = PmlParams::default();
    let stencil = StencilSpec::default();

    let t0 = Instant::now();
    let args: Vec<String> = std::env::args().collect();
    let max_rows: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(60_000);
    let k: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(16);
    let depth: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(6);
    let epochs: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(30);
    let lr: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(3e-3);
    let n_scenarios: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1);

    let sweep = scenario_sweep(&scene, n_scenarios, 11);
    let harvest = extract_samples(&scene, &pml, &stencil, &sweep, max_rows, 7).unwrap();
    println!(
        "harvest: edge {} rows, corner {} rows, max|field| {:.3e}  ({:.1?})",
        harvest.edge.n_rows(),
        harvest.corner.n_rows(),
        harvest.max_abs_field,
        t0.elapsed()
    );

    let t1 = Instant::now();
    let cfg = TrainConfig {
        n_trees: k,
        depth,
        epochs,
        batch_size: 256,
        patience: 20,
        optimizer: OptimConfig { learning_rate: lr, ..OptimConfig::default() },
        ..TrainConfig::<f64>::default()
    };
    let (eg_tr, eg_va, _) = harvest.edge.split((0.8, 0.1, 0.1), 5).unwrap();
    let edge_out = ddfabc::forest::train(&eg_tr, &eg_va, &cfg).unwrap();
    for (e, st) in edge_out.history.iter().enumerate() {
        if e % 10 == 0 || e + 1 == edge_out.history.len() {
            println!("  epoch {:3}: train {:.3e} valid {:.3e}", e + 1, st.train_loss, st.valid_loss);
        }
    }
    println!(
        "edge model: best valid mse {:.3e} at epoch {} ({:.1?})",
        edge_out.best_valid_loss,
        edge_out.best_epoch,
        t1.elapsed()
    );
    let t2 = Instant::now();
    let corner_cfg = TrainConfig { n_trees: k.min(8), depth: depth.min(5), ..cfg.clone() };
    let (cn_tr, cn_va, _) = harvest.corner.split((0.8, 0.1, 0.1), 5).unwrap();
    let corner_out = ddfabc::forest::train(&cn_tr, &cn_va, &corner_cfg).unwrap();
    println!(
        "corner model: best valid mse {:.3e} at epoch {} ({:.1?})",
        corner_out.best_valid_loss,
        corner_out.best_epoch,
        t2.elapsed()
    );

    let t3 = Instant::now();
    let ddf = DdfModels {
        edge: edge_out.forest,
        corner: corner_out.forest,
        stencil: stencil.clone(),
        clamp: Some(10.0 * harvest.max_abs_field),
    };
    let schemes = vec![Scheme::Pec, Scheme::Cpml(pml.clone()), Scheme::Ddf(ddf)];
    let out = compare(&scene, &schemes, 10, 8 << 30).unwrap();
    for e in &out.entries {
        println!(
            "{}: r_db_max {:.2} dB   {}",
            e.label,
            e.report.r_db_max,
            e.diagnostics.as_deref().unwrap_or("-")
        );
    }
    println!("compare ({:.1?}); total {:.1?}", t3.elapsed(), t0.elapsed());
}
