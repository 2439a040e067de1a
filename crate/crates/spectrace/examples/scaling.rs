//! Wall-time scaling demo: the fused log-determinant estimator across
//! operand sizes at fixed (m, n). Prints seconds per run and the per-nonzero
//! throughput so cache cliffs are visible.

use spectrace::funcs::logdet_pd;
use spectrace::hutchinson::ProbeConfig;
use spectrace::linop::SpectralInterval;
use spectrace::synth::spd_recipe;

fn main() {
    let reps = 3;
    let cfg = ProbeConfig::rademacher(50, 9);
    for &d in &[50_000usize, 100_000, 200_000, 500_000, 1_000_000] {
        let a = spd_recipe(d, 10, 0.1, 9);
        let interval = SpectralInterval::new(0.1, a.infinity_norm()).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..reps {
            let r = logdet_pd(&a, interval, 25, &cfg).unwrap();
            best = best.min(r.wall_time.as_secs_f64());
        }
        let nnz_ops = (50 * 25) as f64 * a.nnz() as f64;
        println!(
            "d = {d:>9}  nnz = {:>9}  best of {reps}: {best:>7.2}s  ({:.0} Mnnz/s)",
            a.nnz(),
            nnz_ops / best / 1e6
        );
    }
}
