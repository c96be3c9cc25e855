//! Fixtures shared by the benchmarks.

use coaxial_core::actuation::{forward_wrench, ActuatorCommand, BodyWrench, VehicleParams};
use coaxial_core::scenarios::{parse_config, ScenarioConfig};

/// `n` wrenches spread over the feasible envelope by an additive
/// recurrence, so no RNG is needed and runs are repeatable.
pub fn feasible_wrenches(p: &VehicleParams, n: usize) -> Vec<BodyWrench> {
    const STEPS: [f64; 6] = [0.618_034, 0.414_214, 0.732_051, 0.236_068, 0.645_751, 0.316_625];
    (0..n)
        .map(|i| {
            let u = STEPS.map(|s| (i as f64 * s).fract());
            forward_wrench(&ActuatorCommand::from_unit_cube(p, u), p)
        })
        .collect()
}

pub fn figure8_scenario() -> ScenarioConfig {
    parse_config(include_str!("../../../configs/figure8_bimodal.toml")).expect("bundled config is valid")
}

pub fn hover_scenario(duration: f64) -> ScenarioConfig {
    parse_config(&format!("[sim]\nduration = {duration:?}\n[scenario]\nkind = \"hover\"\ninitial_offset = [0.2, -0.1, 0.1]"))
        .expect("valid hover config")
}

#[cfg(test)]
mod tests {
    use super::*;
    use coaxial_core::actuation::mix;

    #[test]
    fn fixtures_are_valid() {
        let p = VehicleParams::default();
        for w in feasible_wrenches(&p, 200) {
            assert!(forward_wrench(&mix(&w, &p).unwrap(), &p).max_abs_diff(&w) < 1e-9);
        }
        assert_eq!(hover_scenario(1.0).sim.duration, 1.0);
        assert!(figure8_scenario().sim.duration >= 60.0);
    }
}
