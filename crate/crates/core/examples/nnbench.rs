use pumpstation::agent::*;
use pumpstation::emulator::STATE_DIM;
use pumpstation::seeds::rng_for;
use std::time::Instant;

fn main() {
    let mut rng = rng_for(1, "bench");
    let policy = PolicyNet::new(&mut rng);
    let n = 250;
    let feats: Vec<f64> = (0..n * STATE_DIM).map(|i| (i % 97) as f64 / 97.0).collect();
    // forward+backward batch
    let reps = 200;
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..reps {
        let (out, cache) = policy.mlp.forward_batch(&feats, n);
        sink += out[0];
        let grad = vec![1e-3; n * POLICY_OUT];
        let grads = policy.mlp.backward_batch(&cache, &grad);
        sink += grads.to_flat()[0];
    }
    let dt = t0.elapsed();
    let flops = reps as f64 * n as f64 * 3.0 * 2.0 * (72.*64.+64.*64.+64.*10.) ;
    println!("fwd+bwd batch250: {:?}/iter  ~{:.2} Gflop/s  sink {sink}", dt / reps, flops / dt.as_secs_f64() / 1e9);

    let t0 = Instant::now();
    let one: Vec<f64> = feats[..STATE_DIM].to_vec();
    let mut s2 = 0.0;
    for _ in 0..100_000 {
        s2 += policy.mlp.forward_one(&one)[0];
    }
    let dt = t0.elapsed();
    println!("forward_one: {:?} each  sink {s2}", dt / 100_000);
}
