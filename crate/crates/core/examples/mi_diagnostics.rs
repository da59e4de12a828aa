//! Per-dimension mutual information of D3 and VLAD encodings on synthetic data.

use d3_encoding::diagnostics::mi_report;
use d3_encoding::encoders::Method;
use d3_encoding::experiment::EncoderBank;
use d3_encoding::io;
use d3_encoding::synthetic::{generate, Mode, SyntheticConfig};

fn main() -> anyhow::Result<()> {
    let cfg = SyntheticConfig {
        classes: 3,
        entities_per_class: 60,
        vectors_per_entity: 150,
        dim: 6,
        mode: Mode::MeanShift,
        seed: 3,
    };
    let data = generate(&cfg)?;
    let train = data.subset(&data.train);
    let labels = data.labels(&data.train);
    let bank = EncoderBank::train(&train, 8, 3)?;

    for method in [Method::D3, Method::Vlad] {
        let report = mi_report(bank.encode_all(method, &train)?.view(), &labels)?;
        let q = |p: usize| report.quantile_curve[p - 1].1;
        println!(
            "{method:>4}: median {:.4} bits, q25 {:.4}, q75 {:.4}, max {:.4}, {} dims above 0.5 bits",
            report.median(),
            q(25),
            q(75),
            q(100),
            report.high_mi_count(0.5)
        );
        if method == Method::D3 {
            print!("{}", io::quantile_csv(&report).lines().step_by(25).collect::<Vec<_>>().join("\n"));
            println!();
        }
    }
    Ok(())
}
