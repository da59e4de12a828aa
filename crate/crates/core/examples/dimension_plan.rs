//! Pick dictionary sizes so that every encoder yields the same length.

use d3_encoding::encoders::{plan_dimensions, Method};

fn main() -> anyhow::Result<()> {
    for (d, k) in [(8, 8), (64, 32), (128, 256)] {
        let plan = plan_dimensions(d, k)?;
        let hybrid: Vec<String> = plan.hybrid.iter().map(|(m, k)| format!("{m} K={k}")).collect();
        println!(
            "d={d:<4} target K={k:<4} -> {} dims: D3 K={}, VLAD K={}, FV K={}, hybrid [{}] = {} dims",
            plan.target_dims,
            plan.d3_k,
            plan.vlad_k,
            plan.fv_k,
            hybrid.join(" + "),
            plan.hybrid_dims(d),
        );
        assert_eq!(plan.hybrid_dims(d), plan.target_dims);
        assert_eq!(plan.hybrid[0].0, Method::D3);
    }
    println!("K=6: {}", plan_dimensions(8, 6).unwrap_err());
    Ok(())
}
