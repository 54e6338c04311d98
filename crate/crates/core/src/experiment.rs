//! Configuration-driven experiments: offline data collection, controller
//! construction, and single or comparative closed-loop runs.

use crate::config::{Common, CompareConfig, ControllerSpec, RunConfig};
use crate::controller::Controller;
use crate::deepc::Deepc;
use crate::error::Result;
use crate::harness::{offline_excitation, run_closed_loop, LoopSpec, OfflineData, RunResult, SeedRecord};
use crate::koopman::Wkpc;
use crate::mfapc::Mfapc;
use crate::plants::Plant;

pub fn build_controller(spec: &ControllerSpec, offline: &OfflineData, seeds: &SeedRecord) -> Result<Box<dyn Controller>> {
    Ok(match spec {
        ControllerSpec::Deepc(c) => Box::new(Deepc::new(c.clone(), &offline.u, &offline.y)?),
        ControllerSpec::Wkpc(c) => Box::new(Wkpc::new(c.clone(), &offline.u, &offline.y, &offline.x, seeds.lifter)?),
        ControllerSpec::Mfapc(c) => Box::new(Mfapc::new(c.clone(), offline.u.dt())?),
    })
}

/// Collects the offline dataset described by `common`.
pub fn collect_offline(common: &Common, plant: &dyn Plant) -> Result<OfflineData> {
    let x0 = common.plant.initial_state(plant)?;
    offline_excitation(
        plant,
        &x0,
        common.offline.length_s,
        common.dt,
        common.plant.substeps,
        common.offline.amplitude,
        SeedRecord::from_seed(common.seed).offline,
    )
}

fn run_one(common: &Common, plant: &dyn Plant, offline: &OfflineData, spec: &ControllerSpec) -> Result<RunResult> {
    let seeds = SeedRecord::from_seed(common.seed);
    let mut controller = build_controller(spec, offline, &seeds)?;
    let x0 = if common.offline.start_from_offline_state {
        offline.final_state.clone()
    } else {
        common.plant.initial_state(plant)?
    };
    let loop_spec = LoopSpec {
        plant,
        x0,
        dt: common.dt,
        substeps: common.plant.substeps,
        duration_s: common.duration_s,
        reference: &common.reference,
        scenario: &common.scenario,
        u_box: common.plant.u_box,
        seeds,
        error_scale: common.plant.error_scale(),
    };
    run_closed_loop(&loop_spec, controller.as_mut())
}

pub fn run_experiment(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let plant = config.common.plant.build()?;
    let offline = collect_offline(&config.common, plant.as_ref())?;
    run_one(&config.common, plant.as_ref(), &offline, &config.controller)
}

/// Runs every configured controller on the same offline data, reference and
/// noise stream. Returns `(name, outcome)` in table order.
pub fn run_comparison(config: &CompareConfig) -> Result<Vec<(&'static str, Result<RunResult>)>> {
    config.validate()?;
    let common = &config.common;
    let plant = common.plant.build()?;
    let offline = collect_offline(common, plant.as_ref())?;
    let specs = config.controllers.specs();
    let outcomes: Vec<Result<RunResult>> = if config.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = specs
                .iter()
                .map(|spec| {
                    let (plant, offline) = (plant.as_ref(), &offline);
                    scope.spawn(move || run_one(common, plant, offline, spec))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("controller thread panicked"))
                .collect()
        })
    } else {
        specs.iter().map(|spec| run_one(common, plant.as_ref(), &offline, spec)).collect()
    };
    Ok(specs.iter().map(ControllerSpec::display_name).zip(outcomes).collect())
}
