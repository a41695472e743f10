// Is the harvested mapping learnable at all? Ridge-regression oracle.
use ddfabc::dataset::extract_samples;
use ddfabc::pml::PmlParams;
use ddfabc::scene::SceneSpec;
use ddfabc::stencil::StencilSpec;

fn ridge_fit(xs: &[f64], ys: &[f64], m: usize, lambda: f64) -> (Vec<f64>, f64) {
    let n = ys.len();
    // normal equations with intercept folded in via centering
    let mut mean = vec![0.0; m];
    for row in xs.chunks_exact(m) {
        for (a, &v) in mean.iter_mut().zip(row) {
            *a += v;
        }
    }
    for a in &mut mean {
        *a /= n as f64;
    }
    let ymean = ys.iter().sum::<f64>() / n as f64;
    let mut ata = vec![0.0; m * m];
    let mut aty = vec![0.0; m];
    for (row, &y) in xs.chunks_exact(m).zip(ys) {
        let yc = y - ymean;
        for i in 0..m {
            let xi = row[i] - mean[i];
            aty[i] += xi * yc;
            for j in i..m {
                ata[i * m + j] += xi * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            ata[i * m + j] = ata[j * m + i];
        }
        ata[i * m + i] += lambda;
    }
    // gaussian elimination
    let mut w = aty.clone();
    let mut a = ata.clone();
    for col in 0..m {
        let mut piv = col;
        for r in col + 1..m {
            if a[r * m + col].abs() > a[piv * m + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..m {
                a.swap(col * m + c, piv * m + c);
            }
            w.swap(col, piv);
        }
        let d = a[col * m + col];
        for r in col + 1..m {
            let f = a[r * m + col] / d;
            for c in col..m {
                a[r * m + c] -= f * a[col * m + c];
            }
            w[r] -= f * w[col];
        }
    }
    for col in (0..m).rev() {
        for r in 0..col {
            let f = a[r * m + col] / a[col * m + col];
            w[r] -= f * w[col];
        }
        w[col] /= a[col * m + col];
    }
    // residual mse normalized by target variance
    let mut sse = 0.0;
    let mut sst = 0.0;
    for (row, &y) in xs.chunks_exact(m).zip(ys) {
        let pred = ymean
            + row
                .iter()
                .zip(&w)
                .zip(&mean)
                .map(|((&x, &wi), &mu)| (x - mu) * wi)
                .sum::<f64>();
        sse += (pred - y) * (pred - y);
        sst += (y - ymean) * (y - ymean);
    }
    (w, sse / sst)
}

fn main() {
    let scene = SceneSpec::<f64>::paper().unwrap();
    let h = extract_samples(
        &scene,
        &PmlParams::default(),
        &StencilSpec::default(),
        &[scene.source.clone()],
        40_000,
        7,
    )
    .unwrap();
    let m = h.edge.n_features;
    let tmax = h.edge.targets.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let tvar = {
        let mu = h.edge.targets.iter().sum::<f64>() / h.edge.targets.len() as f64;
        h.edge.targets.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / h.edge.targets.len() as f64
    };
    println!("edge rows {}  max|target| {tmax:.3e}  std(target) {:.3e}", h.edge.n_rows(), tvar.sqrt());
    let (_, nmse) = ridge_fit(&h.edge.features, &h.edge.targets, m, 1e-8);
    println!("linear ridge normalized mse on edge rows: {nmse:.3e}");
    let (_, nmse_c) = ridge_fit(&h.corner.features, &h.corner.targets, m, 1e-8);
    println!("linear ridge normalized mse on corner rows: {nmse_c:.3e}");
}
