use std::path::Path;

use windcast_core::pipeline::{DataSource, PipelineConfig};

fn bundled(name: &str) -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    PipelineConfig::from_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn synthetic_config_matches_the_reduced_preset() {
    let cfg = bundled("synthetic.conf");
    cfg.validate().unwrap();
    let preset = PipelineConfig::synthetic_reduced();
    assert_eq!(cfg.train, preset.train);
    assert_eq!(cfg.sam_period, preset.sam_period);
    assert_eq!(cfg.models, preset.models);
    assert!(matches!(cfg.data, DataSource::Synthetic(_)));
}

#[test]
fn full_config_parses_and_round_trips() {
    let cfg = bundled("full.conf");
    cfg.validate().unwrap();
    assert_eq!(cfg.models.len(), 7);
    assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
}
