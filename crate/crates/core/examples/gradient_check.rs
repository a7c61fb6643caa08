//! Compares hand-written backpropagation with central finite differences on
//! random networks and on the actor-critic loss.
//!
//! `cargo run --release --example gradient_check`

use rand::Rng;
use slicesched::config::Activation;
use slicesched::nn::gradcheck::{check_actor_critic, check_mlp, A2cLossInputs};
use slicesched::nn::{ActorCritic, Mlp};
use slicesched::rng::{stream, Purpose};

fn main() -> slicesched::Result<()> {
    let mut rng = stream(7, Purpose::Init, 0, 0);
    let mut worst: f64 = 0.0;
    for act in [Activation::Tanh, Activation::Relu] {
        for _ in 0..10 {
            let sizes = [rng.random_range(2..7), rng.random_range(2..9), rng.random_range(2..9), rng.random_range(1..5)];
            let mut net = Mlp::new(&sizes, act, Activation::Identity, 1.0, 1.0, &mut rng);
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..sizes[3]).map(|_| rng.random_range(-1.0..1.0)).collect();
            worst = worst.max(check_mlp(&mut net, &x, &w, 1e-5)?);
        }
        let mut ac = ActorCritic::new(6, &[8, 8], act, true, 5, 3, 1.0, &mut rng);
        let obs: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let inp = A2cLossInputs {
            action_hrllc: 2,
            action_embb: 1,
            target: 0.7,
            advantage: -0.4,
            entropy_coef: 0.01,
            value_coef: 0.5,
        };
        let e = check_actor_critic(&mut ac, &obs, &inp, 1e-5)?;
        println!("{act:?}: actor-critic loss relative error {e:.2e}");
        worst = worst.max(e);
    }
    println!("worst relative error over 22 checks: {worst:.2e}");
    Ok(())
}
