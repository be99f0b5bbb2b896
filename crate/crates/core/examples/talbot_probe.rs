use num_complex::Complex64;
use xmesh_core::invlap::{de_hoog, sloshing_amplitude, talbot, InversionMethod};

fn main() {
    let (nu, k, g) = (0.01, std::f64::consts::PI, 9.81);
    let kappa = g / (nu * nu * k * k * k);
    let omega_t = (g * k).sqrt();
    let period = std::f64::consts::TAU / omega_t;
    for i in [1, 5, 10, 20, 30, 40, 50] {
        let t = 5.0 * period * i as f64 / 50.0;
        let a = sloshing_amplitude(InversionMethod::Talbot, t, nu, k, g).unwrap();
        let b = sloshing_amplitude(InversionMethod::DeHoog, t, nu, k, g).unwrap();
        println!("t={t:.3} tau={:.4} talbot={a:+.9e}  dehoog={b:+.9e}  diff={:.3e}",
                 nu*k*k*t, (a - b).abs());
    }
    // direct G inversion comparison at one bad point
    let gsub = move |s: Complex64| {
        let one = Complex64::new(1.0, 0.0);
        let quad = (s + one) * (s + one) - 4.0 * s.sqrt() + kappa;
        one / ((s - one) * quad) - one / (kappa * (s - one))
    };
    let tau = 0.3;
    for m in [24usize, 36, 48, 64, 80] {
        let v = talbot(gsub, tau, m).unwrap();
        println!("talbot G tau=0.3 M={m}: {v:.9e}");
    }
    for m in [30usize, 40, 60, 80] {
        let v = de_hoog(gsub, tau, 0.05, 0.6, m).unwrap();
        println!("dehoog G tau=0.3 M={m}: {v:.9e}");
    }
}
