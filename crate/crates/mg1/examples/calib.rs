//! Scratch calibration runs (not part of the deliverable).

use mg1::analytic;
use mg1::sim::{self, Discipline, FirstService};
use mg1::tail::{estimate_decay, EstimatorConfig};
use mg1::{QueueModel, ServiceDistribution};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "fb".into());
    let m = QueueModel::new(0.5, ServiceDistribution::exponential(1.0).unwrap()).unwrap();
    let c = analytic::busy_period_decay(&m).unwrap().rate;
    let theta0 = analytic::fifo_decay(&m).unwrap();
    println!("c = {c}, theta0 = {theta0}");

    let windows = [
        (0.99, 0.9999),
        (0.995, 0.99995),
        (0.998, 0.99995),
        (0.999, 0.99999),
        (0.9995, 0.999995),
    ];

    match which.as_str() {
        "pise20" => {
            // thinned long-run side vs tagged replications, stride sweep
            for stride in [8usize] {
                let mut passes = 0;
                for seed in 0..20u64 {
                    let n = 100_000;
                    let run = sim::run_queue(
                        &m,
                        Discipline::Fb,
                        n * stride + 10_000,
                        10_000,
                        seed,
                    )
                    .unwrap();
                    let long: Vec<f64> = run
                        .sojourns()
                        .into_iter()
                        .step_by(stride)
                        .take(n)
                        .collect();
                    let warm = sim::default_injection_warmup(&m);
                    let mixed =
                        sim::stationary_sojourn_replications(&m, n, seed, warm, 0).unwrap();
                    let ks = mg1::validate::ks_two_sample(&long, &mixed).unwrap();
                    passes += i32::from(ks.pass);
                    println!(
                        "  seed {seed}: stat {:.5} thr {:.5} ratio {:.2} {}",
                        ks.statistic,
                        ks.threshold,
                        ks.statistic / ks.threshold,
                        if ks.pass { "pass" } else { "FAIL" }
                    );
                }
                println!("stride {stride}: {passes}/20");
            }
        }
        "lifo20" => {
            for stride in [1usize, 4, 8] {
                let mut passes = 0;
                for seed in 0..20u64 {
                    let n = 100_000;
                    let run = sim::run_queue(
                        &m,
                        Discipline::LifoPreemptive,
                        n * stride + 10_000,
                        10_000,
                        seed,
                    )
                    .unwrap();
                    let soj: Vec<f64> = run
                        .sojourns()
                        .into_iter()
                        .step_by(stride)
                        .take(n)
                        .collect();
                    let busy =
                        sim::sample_busy_periods(&m, soj.len(), seed, FirstService::Generic, 0)
                            .unwrap();
                    let ks = mg1::validate::ks_two_sample(&soj, &busy).unwrap();
                    passes += i32::from(ks.pass);
                }
                println!("stride {stride}: {passes}/20");
            }
        }
        "timing" => {
            let t0 = std::time::Instant::now();
            let run = sim::run_queue(&m, Discipline::Fb, 1_000_000, 10_000, 0).unwrap();
            println!("fb 1e6 run: {:?} ({} records)", t0.elapsed(), run.records.len());
            let t0 = std::time::Instant::now();
            let warmup = sim::default_injection_warmup(&m);
            let tag = sim::conditional_sojourn_fb(&m, 1.0, 100_000, 0, warmup, 0).unwrap();
            println!(
                "tagged 1e5 (warmup {warmup}): {:?} (busy {})",
                t0.elapsed(),
                tag.busy_fraction
            );
            let t0 = std::time::Instant::now();
            let d = sim::sample_time_to_empty(&m, 100_000, 0, warmup, 0).unwrap();
            println!("time-to-empty 1e5: {:?} (busy {})", t0.elapsed(), d.busy_fraction);
            let t0 = std::time::Instant::now();
            let _ = sim::sample_busy_periods(&m, 1_000_000, 0, FirstService::Generic, 0).unwrap();
            println!("busy 1e6: {:?}", t0.elapsed());
            let t0 = std::time::Instant::now();
            let _ = sim::sample_residual_busy(&m, 100_000, 0, 0).unwrap();
            println!("residual 1e5: {:?}", t0.elapsed());
        }
        "sumlemma" => {
            let rep =
                mg1::validate::check_sum_decay_lemma(1.0, 1_000_000, &[0, 1, 2, 3, 4]).unwrap();
            println!("estimates {:?} median {}", rep.estimates, rep.median);
            let rep =
                mg1::validate::check_sum_decay_lemma(0.1, 1_000_000, &[0, 1, 2, 3, 4]).unwrap();
            println!("alpha 0.1: estimates {:?} median {}", rep.estimates, rep.median);
        }
        "busy20" => {
            let cfg = EstimatorConfig {
                q_lo: 0.999,
                q_hi: 0.99999,
                poly_correction: true,
            };
            let mut errs: Vec<f64> = Vec::new();
            for seed in 0..20u64 {
                let lens = sim::sample_busy_periods(&m, 1_000_000, seed, FirstService::Generic, 0)
                    .unwrap();
                let est = estimate_decay(&lens, cfg).unwrap();
                let rel = (est.rate - c) / c;
                errs.push(rel);
                println!("seed {seed}: {:.5} ({:+.1}%)", est.rate, 100.0 * rel);
            }
            let mut sorted = errs.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            println!(
                "median {:+.1}%  worst {:+.1}%  best {:+.1}%",
                100.0 * 0.5 * (sorted[9] + sorted[10]),
                100.0 * sorted[0],
                100.0 * sorted[19]
            );
        }
        "busy" => {
            for seed in 0..5u64 {
                let lens = sim::sample_busy_periods(&m, 1_000_000, seed, FirstService::Generic, 0)
                    .unwrap();
                print!("seed {seed}:");
                for (qlo, qhi) in windows {
                    for poly in [false, true] {
                        let cfg = EstimatorConfig {
                            q_lo: qlo,
                            q_hi: qhi,
                            poly_correction: poly,
                        };
                        let est = estimate_decay(&lens, cfg).unwrap();
                        print!(
                            "  [{qlo},{qhi},{}] {:.4} ({:+.1}%)",
                            if poly { "P" } else { "-" },
                            est.rate,
                            100.0 * (est.rate - c) / c
                        );
                    }
                }
                println!();
            }
        }
        "fb" | "lifo" | "ps" | "fifo" => {
            let d = match which.as_str() {
                "fb" => Discipline::Fb,
                "lifo" => Discipline::LifoPreemptive,
                "ps" => Discipline::Ps,
                _ => Discipline::Fifo,
            };
            let target = if d == Discipline::Fifo { theta0 } else { c };
            for seed in 0..5u64 {
                let run = sim::run_queue(&m, d, 1_000_000, 10_000, seed).unwrap();
                let sojourns = run.sojourns();
                print!("seed {seed} (n={}):", sojourns.len());
                for (qlo, qhi) in windows {
                    for poly in [false, true] {
                        let cfg = EstimatorConfig {
                            q_lo: qlo,
                            q_hi: qhi,
                            poly_correction: poly,
                        };
                        match estimate_decay(&sojourns, cfg) {
                            Ok(est) => print!(
                                "  [{qlo},{qhi},{}] {:.4} ({:+.1}%)",
                                if poly { "P" } else { "-" },
                                est.rate,
                                100.0 * (est.rate - target) / target
                            ),
                            Err(e) => print!("  [{qlo},{qhi}] ERR {e}"),
                        }
                    }
                }
                println!();
            }
        }
        other => eprintln!("unknown mode {other}"),
    }
}
