/// Experiment files shipped with the binary, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("bound_curves", include_str!("../presets/bound_curves.toml")),
    ("fig_aujsq", include_str!("../presets/fig_aujsq.toml")),
    ("fig_baseline_K2", include_str!("../presets/fig_baseline_K2.toml")),
    ("fig_baseline_K3", include_str!("../presets/fig_baseline_K3.toml")),
    ("fig_extension_tau1", include_str!("../presets/fig_extension_tau1.toml")),
    ("fig_extension_tradeoff", include_str!("../presets/fig_extension_tradeoff.toml")),
    ("fig_gamma", include_str!("../presets/fig_gamma.toml")),
    ("fig_variants", include_str!("../presets/fig_variants.toml")),
    ("fig_work_conserving_tau5", include_str!("../presets/fig_work_conserving_tau5.toml")),
    ("open_count_pmf", include_str!("../presets/open_count_pmf.toml")),
    ("oracles", include_str!("../presets/oracles.toml")),
    ("smoke", include_str!("../presets/smoke.toml")),
];

pub fn find(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
