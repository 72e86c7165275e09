use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pcr, PcrParams, Pool};
use crate::error::{Error, Result};
use crate::partition::PrimerPair;

/// Concentration readings carry uniform multiplicative noise in
/// `[1 - relative_error, 1 + relative_error]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasurementModel {
    pub relative_error: f64,
    pub seed: u64,
}

impl Default for MeasurementModel {
    fn default() -> Self {
        MeasurementModel { relative_error: 0.1, seed: 0 }
    }
}

fn draw(pool: &Pool, eps: f64, rng: &mut ChaCha8Rng) -> f64 {
    let noise = if eps > 0.0 { rng.gen_range(1.0 - eps..=1.0 + eps) } else { 1.0 };
    pool.total() * noise
}

pub fn measure(pool: &Pool, model: &MeasurementModel) -> Result<f64> {
    check(model)?;
    Ok(draw(pool, model.relative_error, &mut ChaCha8Rng::seed_from_u64(model.seed)))
}

fn check(model: &MeasurementModel) -> Result<()> {
    if !(0.0..1.0).contains(&model.relative_error) {
        return Err(Error::Config(format!("relative error {} outside [0, 1)", model.relative_error)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixReport {
    pub pool: Pool,
    /// Factor applied to the update pool before combining.
    pub update_scale: f64,
    pub measured_data: f64,
    pub measured_update: f64,
}

fn equalize(data: &Pool, update: &Pool, n_data: usize, n_update: usize, model: &MeasurementModel) -> Result<MixReport> {
    check(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let measured_data = draw(data, model.relative_error, &mut rng);
    let measured_update = draw(update, model.relative_error, &mut rng);
    if measured_update <= 0.0 {
        return Err(Error::Simulation("update pool has zero concentration".into()));
    }
    let update_scale = (measured_data / n_data as f64) / (measured_update / n_update as f64);
    Ok(MixReport { pool: data.combined(&update.scaled(update_scale)), update_scale, measured_data, measured_update })
}

fn nonempty(data: &Pool, update: &Pool) -> Result<()> {
    if data.is_empty() || update.is_empty() {
        return Err(Error::Simulation("both pools must be non-empty to mix".into()));
    }
    Ok(())
}

/// Dilute the update pool to the data pool's per-oligo concentration,
/// combine, then amplify with the main primers.
pub fn mix_measure_then_amplify(
    data: &Pool,
    update: &Pool,
    main: &PrimerPair,
    model: &MeasurementModel,
    params: &PcrParams,
) -> Result<MixReport> {
    nonempty(data, update)?;
    let mut report = equalize(data, update, data.len(), update.len(), model)?;
    report.pool = pcr(&report.pool, &main.forward, &main.reverse, params)?;
    Ok(report)
}

/// Amplify each pool separately, measure, then mix in proportion to the
/// number of unique oligos in each.
pub fn mix_amplify_then_measure(
    data: &Pool,
    update: &Pool,
    main: &PrimerPair,
    model: &MeasurementModel,
    params: &PcrParams,
) -> Result<MixReport> {
    nonempty(data, update)?;
    let (n_data, n_update) = (data.len(), update.len());
    let data = pcr(data, &main.forward, &main.reverse, params)?;
    let update = pcr(update, &main.forward, &main.reverse, params)?;
    equalize(&data, &update, n_data, n_update, model)
}
