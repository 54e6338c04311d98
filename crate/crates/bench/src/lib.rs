//! Shared fixtures for the criterion benchmarks: the benchmark pendulum
//! setup with its offline data and primed controllers.

use ddpc_core::config::{load_config, AnyConfig, Common, CompareConfig, ControllerSpec};
use ddpc_core::experiment::{build_controller, collect_offline};
use ddpc_core::harness::{OfflineData, SeedRecord};
use ddpc_core::plants::Plant;
use ddpc_core::{Controller, Result};

pub struct Fixture {
    pub config: CompareConfig,
    pub plant: Box<dyn Plant>,
    pub offline: OfflineData,
}

impl Fixture {
    pub fn paper_benchmark() -> Result<Self> {
        let AnyConfig::Compare(config) = load_config("preset:paper_benchmark")? else {
            unreachable!("paper_benchmark is a compare preset")
        };
        let plant = config.common.plant.build()?;
        let offline = collect_offline(&config.common, plant.as_ref())?;
        Ok(Self { config, plant, offline })
    }

    pub fn common(&self) -> &Common {
        &self.config.common
    }

    pub fn specs(&self) -> Vec<ControllerSpec> {
        self.config.controllers.specs()
    }

    /// Builds a controller primed with the offline data.
    pub fn controller(&self, spec: &ControllerSpec) -> Result<Box<dyn Controller>> {
        build_controller(spec, &self.offline, &SeedRecord::from_seed(self.common().seed))
    }

    /// Output at the end of the offline experiment.
    pub fn y_now(&self) -> Vec<f64> {
        self.plant.output(&self.offline.final_state)
    }

    /// Reference samples `r_1 .. r_horizon` of the configured scenario.
    pub fn reference(&self, horizon: usize) -> Vec<Vec<f64>> {
        self.common().reference.window(1, horizon, self.common().dt)
    }
}
