// Where does the learned-boundary rollout deviate: at the pulse or by
// late-time pumping?
use ddfabc::dataset::extract_samples;
use ddfabc::forest::{train, OptimConfig, TrainConfig};
use ddfabc::harness::{reference_run, reflection_error, run_scheme, DdfModels, Scheme};
use ddfabc::pml::PmlParams;
use ddfabc::scene::SceneSpec;
use ddfabc::stencil::StencilSpec;

fn main() {
    let scene = SceneSpec::<f64>::paper().unwrap();
    let pml = PmlParams::default();
    let stencil = StencilSpec::default();
    let h = extract_samples(&scene, &pml, &stencil, &[scene.source.clone()], 40_000, 7).unwrap();
    let cfg = TrainConfig {
        n_trees: 16,
        depth: 6,
        epochs: 60,
        batch_size: 256,
        patience: 60,
        optimizer: OptimConfig { learning_rate: 0.02, ..OptimConfig::default() },
        ..TrainConfig::<f64>::default()
    };
    let (etr, eva, _) = h.edge.split((0.8, 0.1, 0.1), 5).unwrap();
    let edge = train(&etr, &eva, &cfg).unwrap();
    let (ctr, cva, _) = h.corner.split((0.8, 0.1, 0.1), 5).unwrap();
    let corner = train(&ctr, &cva, &TrainConfig { n_trees: 8, depth: 5, ..cfg.clone() }).unwrap();
    println!("edge mse {:.2e}, corner mse {:.2e}", edge.best_valid_loss, corner.best_valid_loss);

    // teacher-forcing error: one-step predictions vs teacher targets, by amplitude decade
    let m = h.edge.n_features;
    let mut buckets = vec![(0.0f64, 0.0f64, 0usize); 8];
    for (row, &y) in h.edge.features.chunks_exact(m).zip(&h.edge.targets).step_by(37) {
        let p = edge.forest.predict(row).unwrap();
        let mag = y.abs().max(1e-12);
        let b = ((mag.log10() + 10.0).clamp(0.0, 7.9)) as usize;
        buckets[b].0 += (p - y) * (p - y);
        buckets[b].1 += y * y;
        buckets[b].2 += 1;
    }
    for (i, (sse, sst, n)) in buckets.iter().enumerate() {
        if *n > 0 {
            println!(
                "|y| ~ 1e{}: rel rms {:.2e}  abs rms {:.3e}  (n={})",
                i as i32 - 10,
                (sse / sst).sqrt(),
                (sse / *n as f64).sqrt(),
                n
            );
        }
    }

    let reference = reference_run(&scene, 10, 8 << 30).unwrap();
    let ddf = DdfModels {
        edge: edge.forest,
        corner: corner.forest,
        stencil,
        clamp: Some(10.0 * h.max_abs_field),
    };
    let run = run_scheme(&scene, &Scheme::Ddf(ddf)).unwrap();
    let rep = reflection_error(&run.probe_series, &reference, "ddf", "ref", scene.probe).unwrap();
    let teacher_rep = reflection_error(&h.probe, &reference, "teacher", "ref", scene.probe).unwrap();
    println!("teacher r_db_max {:.1} dB; ddf r_db_max {:.1} dB", teacher_rep.r_db_max, rep.r_db_max);
    print!("r_db(t) every 100: ");
    for k in (0..1500).step_by(100) {
        print!("{:.0} ", rep.r_db[k]);
    }
    println!();
    print!("|probe|(t) ddf vs ref every 150: ");
    for k in (0..1500).step_by(150) {
        print!("{:.1e}/{:.1e} ", run.probe_series[k].abs(), reference[k].abs());
    }
    println!();
}
