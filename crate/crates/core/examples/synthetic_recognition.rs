//! End-to-end recognition on seeded synthetic data: generate, train the
//! dictionaries on the training split, encode, fit the ridge classifier.
//!
//! `cargo run --release --example synthetic_recognition -- variance-shift`

use std::time::Instant;

use d3_encoding::encoders::Method;
use d3_encoding::eval::DEFAULT_LAMBDA;
use d3_encoding::experiment::{run_method, EncoderBank};
use d3_encoding::synthetic::{generate, Mode, SyntheticConfig};

fn main() -> anyhow::Result<()> {
    let mode: Mode = std::env::args().nth(1).as_deref().unwrap_or("mean-shift").parse()?;
    let start = Instant::now();
    let cfg = SyntheticConfig {
        classes: 3,
        entities_per_class: 100,
        vectors_per_entity: 200,
        dim: 8,
        mode,
        seed: 7,
    };
    let data = generate(&cfg)?;
    let (train, test) = (data.subset(&data.train), data.subset(&data.test));
    let (train_labels, test_labels) = (data.labels(&data.train), data.labels(&data.test));
    let bank = EncoderBank::train(&train, 8, 7)?;
    println!(
        "{mode}: {} train / {} test sets, {} dims per encoding",
        train.len(),
        test.len(),
        bank.plan.target_dims
    );
    println!("encoder,K,accuracy");
    for (method, k) in [
        (Method::D3, bank.plan.d3_k),
        (Method::Vlad, bank.plan.vlad_k),
        (Method::Fv, bank.plan.fv_k),
        (Method::Hybrid, bank.plan.d3_k),
    ] {
        let run = run_method(&bank, method, (&train, &train_labels), (&test, &test_labels), DEFAULT_LAMBDA)?;
        println!("{method},{k},{:.4}", run.accuracy);
    }
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
