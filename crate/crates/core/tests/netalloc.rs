use mosp::baselines::odg_primal;
use mosp::metrics::constraint_variation;
use mosp::netalloc::{
    gen_case1, gen_case2, gen_network, network_problems, read_scenario, run_distributed, run_network_mosp,
    write_scenario, CloudNetwork,
};
use mosp::oco::run_mosp;
use mosp::{MultiplierVector, StepsizePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn autocorrelation(v: &[f64], lag: usize) -> f64 {
    let m = mean(v);
    let var: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    let cov: f64 = v.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    cov / var
}

#[test]
fn case1_price_and_load_means() {
    let s = gen_case1::<f64>(1, 1, 100_000, 11).unwrap();
    let prices: Vec<f64> = s.slots.iter().map(|p| p.prices[0]).collect();
    let loads: Vec<f64> = s.slots.iter().map(|p| p.loads[0]).collect();
    let pm = mean(&prices);
    assert!((1.99..=2.01).contains(&pm), "price mean {pm}");
    let lm = mean(&loads);
    assert!((99.0..=101.0).contains(&lm), "load mean {lm}");
    assert!(autocorrelation(&loads, 1).abs() < 0.02);
}

#[test]
fn case2_load_is_periodic_with_one_day_period() {
    let s = gen_case2::<f64>(1, 1, 2400, 5).unwrap();
    let loads: Vec<f64> = s.slots.iter().map(|p| p.loads[0]).collect();
    let a24 = autocorrelation(&loads, 24);
    let a12 = autocorrelation(&loads, 12);
    assert!(a24 > 0.9, "lag 24: {a24}");
    assert!(a12 < -0.9, "lag 12: {a12}");
    assert!(s.slots.iter().all(|p| p.prices[0] >= 0.0));
}

#[test]
fn ten_by_ten_network_dimensions() {
    let net = gen_network::<f64>(10, 10, 1).unwrap();
    assert_eq!(net.feasible_box().dim(), 110);
    assert_eq!(net.nodes(), 20);
    assert_eq!(net.incidence().rows(), 20);
    assert_eq!(net.incidence().cols(), 110);
}

#[test]
fn distributed_run_equals_centralized() {
    let net = CloudNetwork::new(1, 1, vec![80.0], vec![0.3], vec![90.0]).unwrap();
    let mut s = gen_case1::<f64>(1, 1, 60, 2).unwrap();
    for slot in &mut s.slots {
        slot.loads[0] *= 0.5;
    }
    let steps = StepsizePair::new(0.05, 4.0).unwrap();
    let problems = network_problems(&net, &s, 60).unwrap();
    let bx = net.feasible_box();
    let central = run_mosp(&problems, &bx, steps, bx.lower_corner(), None).unwrap();
    let dist = run_distributed(&net, &s.slots, steps, None).unwrap();
    for (c, d) in central.iter().zip(&dist) {
        for (a, b) in c.x.iter().zip(d.x.iter()) {
            assert!((a - b).abs() <= 1e-12, "slot {}: {a} vs {b}", c.t);
        }
        for (a, b) in c.lambda_next.iter().zip(d.lambda_next.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn distributed_run_on_larger_network_stays_close() {
    let net = gen_network::<f64>(3, 2, 4).unwrap();
    let s = gen_case2::<f64>(3, 2, 40, 4).unwrap();
    let steps = StepsizePair::new(0.01, 2.0).unwrap();
    let bx = net.feasible_box();
    let central = run_mosp(&network_problems(&net, &s, 40).unwrap(), &bx, steps, bx.lower_corner(), None).unwrap();
    let dist = run_distributed(&net, &s.slots, steps, Some(15)).unwrap();
    let restarted = run_mosp(&network_problems(&net, &s, 40).unwrap(), &bx, steps, bx.lower_corner(), Some(15)).unwrap();
    assert_eq!(central.len(), dist.len());
    for (c, d) in restarted.iter().zip(&dist) {
        for (a, b) in c.x.iter().zip(d.x.iter()) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

/// `λ_1 = 0` and `q_1 = 0`, and `[·]⁺` is positively homogeneous, so
/// `μ q_t = λ_t` on every slot.
#[test]
fn queue_scaled_by_mu_equals_multiplier() {
    let net = gen_network::<f64>(2, 2, 8).unwrap();
    let mut s = gen_case1::<f64>(2, 2, 80, 8).unwrap();
    // loads above total capacity keep a backlog at the mapping nodes
    for slot in &mut s.slots {
        for b in &mut slot.loads {
            *b *= 10.0;
        }
    }
    let mu = 3.0;
    let trace = run_network_mosp(&net, &s, 80, StepsizePair::new(0.01, mu).unwrap(), None).unwrap();
    for r in &trace {
        let q = r.queue.as_ref().unwrap();
        for (qi, li) in q.iter().zip(r.lambda_next.iter()) {
            assert!((mu * qi - li).abs() <= 1e-9 * (1.0 + li.abs()), "slot {}", r.t);
        }
    }
    let last = trace.last().unwrap().queue.as_ref().unwrap();
    assert!(last[0] > 0.0 && last[1] > 0.0);
}

#[test]
fn constraint_variation_matches_load_increments() {
    let net = gen_network::<f64>(3, 2, 6).unwrap();
    let s = gen_case2::<f64>(3, 2, 49, 6).unwrap();
    let problems = network_problems(&net, &s, 49).unwrap();
    let v = constraint_variation(&problems, &net.feasible_box()).unwrap();
    assert_eq!(v.per_slot.len(), 48);
    assert!(!v.lower_bound);
    for (t, w) in s.slots.windows(2).enumerate() {
        let direct = w[0]
            .loads
            .iter()
            .zip(&w[1].loads)
            .map(|(a, b)| (b - a).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((v.per_slot[t] - direct).abs() <= 1e-9 * (1.0 + direct), "pair {t}");
    }
    let total: f64 = v.per_slot.iter().sum();
    assert!((v.total - total).abs() <= 1e-9 * (1.0 + total));
}

/// Each coordinate of the Lagrangian minimiser is checked against a scan of
/// that coordinate with step 1e-3, using only loss and constraint evaluations.
#[test]
fn odg_primal_matches_coordinate_scan() {
    let net = gen_network::<f64>(2, 2, 3).unwrap();
    let s = gen_case1::<f64>(2, 2, 1, 3).unwrap();
    let params = &s.slots[0];
    let p = net.slot_problem(params).unwrap();
    let bx = net.feasible_box();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let lam: Vec<f64> = (0..net.nodes()).map(|_| rng.gen_range(0.0..300.0)).collect();
        let x = odg_primal(&MultiplierVector::new(lam.clone()).unwrap(), params, &net).unwrap();
        let lagrangian = |z: &[f64]| {
            let g = p.constraint.value(z);
            p.loss.value(z) + lam.iter().zip(&g).map(|(l, gi)| l * gi).sum::<f64>()
        };
        for i in 0..bx.dim() {
            let steps = (bx.upper()[i] / 1e-3).floor() as usize;
            let mut z = x.to_vec();
            let mut best = (f64::INFINITY, 0.0);
            for s in 0..=steps {
                z[i] = s as f64 * 1e-3;
                let v = lagrangian(&z);
                if v < best.0 {
                    best = (v, z[i]);
                }
            }
            z[i] = x[i];
            assert!(lagrangian(&z) <= best.0 + 1e-9 * (1.0 + best.0.abs()));
            assert!((x[i] - best.1).abs() <= 1e-3, "coordinate {i}: {} vs {}", x[i], best.1);
        }
    }
}

#[test]
fn scenario_text_round_trip() {
    let s = gen_case2::<f64>(2, 3, 30, 12).unwrap();
    let back = read_scenario::<f64>(&write_scenario(&s)).unwrap();
    assert_eq!(back.slots.len(), 30);
    for (a, b) in s.slots.iter().zip(&back.slots) {
        for (x, y) in a.loads.iter().zip(&b.loads) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }
    assert!(read_scenario::<f64>("not a scenario").is_err());
}
