use sketchguard::booterr::{bootstrap_quantile, extrapolate, plan_sketch_size};
use sketchguard::datagen::synth_matrix;
use sketchguard::sketch::apply_spec;
use sketchguard::{BootstrapConfig, BootstrapScheme, RankProfile, SketchKind, SketchSpec, SynthProfile};

fn main() -> Result<(), sketchguard::Error> {
    let a = synth_matrix(&SynthProfile::new(2048, 64, RankProfile::High, 7)?)?;
    let pair = apply_spec(&a, &a, &SketchSpec::new(SketchKind::Srht, 32, 1)?)?;
    let cfg = BootstrapConfig::new(BootstrapScheme::Multiplier, 20, 0.05, 2)?;
    let est = bootstrap_quantile(&pair, &cfg)?;
    println!("q(32) ~ {:.3}, q(512) ~ {:.3}", est.value, extrapolate(&est, 512));
    println!("t for eps = 0.05: {}", plan_sketch_size(&est, 0.05)?);
    Ok(())
}
