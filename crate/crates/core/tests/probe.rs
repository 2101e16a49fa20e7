#[test]
#[ignore]
fn b10_level_probe() {
    use splitboot::*;
    use rayon::prelude::*;
    for b in [10usize, 50] {
        let reps = 3000;
        let n_null = 400;
        let dist = ErrorDistribution::power_study();
        let results: Vec<(f64, bool)> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let data = generate_level_power_data(
                    100,
                    &[1.0, 1.0, 1.0],
                    0.0,
                    &dist,
                    rng::derive_key(77, &[rep as u64]),
                )
                .unwrap();
                let y = data.y().unwrap();
                let inf =
                    IndexInference::from_dataset(&data, VarianceMode::Known(dist.variance()))
                        .unwrap();
                let engine = NullEngine::ExactParametric(dist);
                let cfg = BootConfig {
                    b,
                    n_null,
                    pi: 0.5,
                    seeds: TestSeeds {
                        split: rng::derive_key(78, &[rep as u64]),
                        null: rng::derive_key(79, &[rep as u64]),
                    },
                };
                let rep = bootstrap_test(&inf, y, &engine, &cfg).unwrap();
                (rep.p_star, rep.rejects(0.05))
            })
            .collect();
        let rate = results.iter().filter(|(_, r)| *r).count() as f64 / reps as f64;
        let ps: Vec<f64> = results.iter().map(|(p, _)| *p).collect();
        let ks = stats::ks_uniform(&ps);
        let crit = stats::ks_critical(reps, 0.01);
        eprintln!(
            "B={b}: rejection {rate:.4} (want 0.05 +- {:.4}), KS {ks:.4} vs crit {crit:.4}",
            3.0 * (0.05f64 * 0.95 / reps as f64).sqrt()
        );
    }
}
