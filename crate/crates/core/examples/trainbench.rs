use pumpstation::agent::*;
use pumpstation::emulator::*;
use pumpstation::features::resample_uniform;
use pumpstation::forecast::*;
use pumpstation::harness::*;
use pumpstation::plant::*;
use pumpstation::seeds::rng_for;
use rand::Rng;
use std::time::Instant;

fn main() {
    let cfg = PlantConfig::default();
    let intake = generate_intake(&cfg, 10).unwrap();
    let mut controller = BaselineController::new(cfg.clone());
    let sim = simulate_plant(&intake, &mut controller, &cfg).unwrap();
    let records = irregularize(&sim.records, &cfg);
    let series = IntakeSeries::from_records(&records).unwrap();
    let (uniform, _) = resample_uniform(&series, 2).unwrap();
    let t0 = Instant::now();
    let gbt = fit_model_set(Family::Gbt, &uniform, (uniform.len() as f64 * 0.8) as usize,
        &GbtParams::default(), 42).unwrap();
    println!("gbt fit: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let sets = make_episodes(&uniform, &records, &gbt, 200).unwrap();
    println!("episodes: {:?} ({} train, {} test)", t0.elapsed(), sets.train.len(), sets.test.len());

    let cleaned = clean_training_records(&records, &cfg);
    let (om, _) = fit_outflow(&cleaned, &GbtParams::default(), &cfg).unwrap();
    let (lm, _) = fit_level(&cleaned, 4).unwrap();
    let env = EmuEnv { outflow: &om, level: &lm, plant: &cfg, reward: RewardConfig::default() };

    let mut rng = rng_for(1, "bench");
    let policy = PolicyNet::new(&mut rng);
    let value = ValueNet::new(&mut rng);
    let ppo = PpoConfig::default();

    // rollout phase
    let t0 = Instant::now();
    let mut total = 0usize;
    let mut n_segments = 0;
    while total < 750 {
        let ep = &sets.train[rng.gen_range(0..sets.train.len())];
        let seg = pumpstation::harness::rollout::rollout_training(
            &policy, &value, &env, ep, 5.0, ForecastMode::Probabilistic, 750 - total, &mut rng);
        total += seg.transitions.len();
        n_segments += 1;
    }
    println!("rollout 750 steps ({n_segments} segments): {:?}", t0.elapsed());

    // update phase
    let mut p2 = policy.clone();
    let mut v2 = value.clone();
    let mut opt = PpoOptimizer::new(&p2, &v2);
    let mut transitions = Vec::new();
    let mut rng2 = rng_for(2, "collect");
    while transitions.len() < 750 {
        let ep = &sets.train[rng2.gen_range(0..sets.train.len())];
        let seg = pumpstation::harness::rollout::rollout_training(
            &p2, &v2, &env, ep, 5.0, ForecastMode::Probabilistic, 750 - transitions.len(), &mut rng2);
        transitions.extend(seg.transitions);
    }
    let adv = vec![0.1; transitions.len()];
    let t0 = Instant::now();
    for it in 0..10 {
        ppo_update(&mut p2, &mut v2, &mut opt, &transitions, &adv, it, &ppo, &mut rng2).unwrap();
    }
    println!("update: {:?}/iter", t0.elapsed() / 10);

    // eval phase
    let t0 = Instant::now();
    let trace = pumpstation::harness::rollout::rollout_policy_eval(&p2, &env, &sets.test[0], ForecastMode::Probabilistic);
    println!("eval full episode ({} steps): {:?}", trace.total_power_kw.len(), t0.elapsed());
}
