use std::io::Write;

use serde::{Deserialize, Serialize};

use super::formulas::LatencyTerms;
use crate::error::Result;
use crate::scalar::Field;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerTerms<T> {
    pub tx: T,
    pub fog_comp: T,
    pub cloud_comp: T,
}

impl<T: Field> PowerTerms<T> {
    pub fn zero() -> Self {
        PowerTerms {
            tx: T::zero(),
            fog_comp: T::zero(),
            cloud_comp: T::zero(),
        }
    }

    pub fn total(&self) -> T {
        self.tx + self.fog_comp + self.cloud_comp
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown<T> {
    pub comm: T,
    pub comp: T,
    pub cons: T,
    pub ems: T,
    pub total: T,
    /// Request-weighted mean latency contributions, seconds.
    pub latency: LatencyTerms<T>,
    pub power: PowerTerms<T>,
}

impl<T: Field> CostBreakdown<T> {
    pub fn new(comm: T, comp: T, cons: T, ems: T, latency: LatencyTerms<T>, power: PowerTerms<T>) -> Self {
        CostBreakdown {
            comm,
            comp,
            cons,
            ems,
            total: comm + comp + cons + ems,
            latency,
            power,
        }
    }

    pub fn zero() -> Self {
        Self::new(
            T::zero(),
            T::zero(),
            T::zero(),
            T::zero(),
            LatencyTerms::zero(),
            PowerTerms::zero(),
        )
    }

    pub fn service_latency(&self) -> T {
        self.latency.sum()
    }
}

/// One CSV line of a breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub scenario_id: String,
    pub n_consumers: u64,
    pub fne: f64,
    pub comm: f64,
    pub comp: f64,
    pub cons: f64,
    pub ems: f64,
    pub total: f64,
    pub lat_upload: f64,
    pub lat_fogcomp: f64,
    pub lat_interfog: f64,
    pub lat_dispatch: f64,
    pub lat_cloudcomp: f64,
    pub power_tx: f64,
    pub power_fog: f64,
    pub power_cloud: f64,
}

impl BreakdownRow {
    pub fn new<T: Field>(scenario_id: &str, n_consumers: u64, fne: f64, b: &CostBreakdown<T>) -> Self {
        BreakdownRow {
            scenario_id: scenario_id.to_string(),
            n_consumers,
            fne,
            comm: b.comm.as_f64(),
            comp: b.comp.as_f64(),
            cons: b.cons.as_f64(),
            ems: b.ems.as_f64(),
            total: b.total.as_f64(),
            lat_upload: b.latency.upload.as_f64(),
            lat_fogcomp: b.latency.fog_comp.as_f64(),
            lat_interfog: b.latency.interfog.as_f64(),
            lat_dispatch: b.latency.dispatch.as_f64(),
            lat_cloudcomp: b.latency.cloud_comp.as_f64(),
            power_tx: b.power.tx.as_f64(),
            power_fog: b.power.fog_comp.as_f64(),
            power_cloud: b.power.cloud_comp.as_f64(),
        }
    }
}

pub fn write_breakdown_csv<W: Write>(rows: &[BreakdownRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
