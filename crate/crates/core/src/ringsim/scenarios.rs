use super::{PerturbationProfile, RingConfig};
use crate::error::{Error, Result};

pub const BUILTIN_SCENARIOS: [&str; 4] = [
    "normal-equilibrium",
    "standard-shockwave",
    "severe-shockwave",
    "high-speed-shockwave",
];

fn profile(decel_s: f64, hold_s: f64, accel_s: f64) -> PerturbationProfile {
    PerturbationProfile {
        start_time: 50.0,
        decel: 1.0,
        decel_duration: decel_s,
        hold_duration: hold_s,
        accel: 1.0,
        accel_duration: accel_s,
        target_vehicle: 0,
    }
}

/// The four reference ring experiments.
pub fn builtin_scenario(name: &str) -> Result<RingConfig> {
    let urban = RingConfig::default();
    Ok(match name {
        "normal-equilibrium" => urban,
        "standard-shockwave" => RingConfig {
            perturbation: Some(profile(5.0, 10.0, 5.0)),
            ..urban
        },
        "severe-shockwave" => RingConfig {
            perturbation: Some(profile(10.0, 30.0, 10.0)),
            ..urban
        },
        "high-speed-shockwave" => RingConfig {
            n_vehicles: 40,
            v_start: 30.0,
            perturbation: Some(profile(10.0, 30.0, 10.0)),
            ..urban
        },
        other => {
            return Err(Error::Validation(format!(
                "unknown scenario `{other}`; expected one of {}",
                BUILTIN_SCENARIOS.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        for name in BUILTIN_SCENARIOS {
            let c = builtin_scenario(name).unwrap();
            assert!(c.validate().is_ok());
            assert_eq!(c.trials, 20);
            assert_eq!(c.length, 3000.0);
        }
        let sev = builtin_scenario("severe-shockwave").unwrap();
        let p = sev.perturbation.unwrap();
        assert_eq!(
            (p.decel, p.decel_duration, p.hold_duration, p.accel_duration),
            (1.0, 10.0, 30.0, 10.0)
        );
        let hs = builtin_scenario("high-speed-shockwave").unwrap();
        assert_eq!((hs.n_vehicles, hs.v_start), (40, 30.0));
        assert_eq!(
            builtin_scenario("normal-equilibrium").unwrap().v_start,
            5.84
        );
        assert!(builtin_scenario("gridlock").is_err());
    }
}
