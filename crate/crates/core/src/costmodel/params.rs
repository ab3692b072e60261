use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Request payload sizes in bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Volumes {
    /// Whole request.
    pub total: f64,
    /// Sent straight to the cloud.
    pub to_cloud: f64,
    /// Uploaded to the fog node.
    pub to_fog: f64,
    /// Fog output forwarded to the cloud.
    pub fog_output: f64,
}

impl Default for Volumes {
    fn default() -> Self {
        Volumes {
            total: 65536.0,
            to_cloud: 32768.0,
            to_fog: 32768.0,
            fog_output: 8192.0,
        }
    }
}

/// Transmission energy in J/byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TxEnergy {
    pub consumer_fog: f64,
    pub fog_fog: f64,
    pub fog_cloud: f64,
}

impl Default for TxEnergy {
    fn default() -> Self {
        TxEnergy {
            consumer_fog: 1e-8,
            fog_fog: 1e-8,
            fog_cloud: 2e-8,
        }
    }
}

/// Quadratic fog power coefficients in W/(req/s)^2 and W/(req/s). The
/// constant term is the node's idle energy rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FogPower {
    pub a: f64,
    pub b: f64,
}

impl Default for FogPower {
    fn default() -> Self {
        FogPower { a: 1e-6, b: 1e-3 }
    }
}

/// Per-machine cloud power `A * eta^delta + B` in watts, eta in GHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CloudPower {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl Default for CloudPower {
    fn default() -> Self {
        CloudPower {
            a: 10.0,
            b: 100.0,
            delta: 3.0,
        }
    }
}

/// Equipment and traffic prices in USD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Prices {
    /// USD per GB uploaded, or per byte when `tariff_per_byte` is set.
    pub upload_tariff: f64,
    pub tariff_per_byte: bool,
    /// USD per VM-hour.
    pub storage: f64,
    /// USD per router port per year.
    pub router_port: f64,
    pub router_ports_per_fog: u32,
    /// USD per cloud machine per year.
    pub server: f64,
    /// USD per GB per inter-fog hop.
    pub interfog: f64,
    /// USD per GB over the fog-to-cloud WAN.
    pub wan: f64,
}

impl Default for Prices {
    fn default() -> Self {
        Prices {
            upload_tariff: 12.0,
            tariff_per_byte: false,
            storage: 0.005,
            router_port: 50.0,
            router_ports_per_fog: 2,
            server: 4000.0,
            interfog: 0.01,
            wan: 0.05,
        }
    }
}

impl Prices {
    pub fn upload_per_byte(&self) -> f64 {
        if self.tariff_per_byte {
            self.upload_tariff
        } else {
            self.upload_tariff / 1e9
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub horizon: u32,
    /// Slot length in seconds.
    pub slot: f64,
    pub pi_c: f64,
    pub pi_f: f64,
    pub pi_cs: f64,
    /// Offload decision applied to every consumer.
    pub offload: bool,
    /// Requests per second per device.
    pub arrival_rate: f64,
    /// Consumer-to-cloud access rate, bytes/s.
    pub access_rate: f64,
    /// Inter-fog link rate, bytes/s.
    pub interfog_rate: f64,
    pub volumes: Volumes,
    /// Bytes carried between fog nodes per forwarded request.
    pub interfog_payload: f64,
    /// USD per second of request latency.
    pub alpha_comm: f64,
    /// USD per joule.
    pub alpha_cons: f64,
    /// WAN delay per unit of dispatch rate, before distance scaling.
    pub wan_delay_factor: f64,
    /// Distance at which the WAN delay factor doubles, km.
    pub wan_ref_km: f64,
    pub tx_energy: TxEnergy,
    pub fog_comp_energy: f64,
    pub fog_weight: f64,
    pub fog_power: FogPower,
    pub cloud_power: CloudPower,
    /// Requests per second served by one cloud machine.
    pub cloud_service_rate: f64,
    /// Cycles per request; when set, a machine serves `eta * 1e9 / K` req/s.
    pub cycles_per_request: Option<f64>,
    pub target_utilization: f64,
    /// USD per gram of CO2.
    pub emission_price: f64,
    /// g/kWh.
    pub emission_rate: f64,
    pub pue: f64,
    /// Nominal cloud server power, W.
    pub cloud_server_power: f64,
    /// Latency bound per application, s. The last value repeats.
    pub delay_limits: Vec<f64>,
    pub scale_factor: f64,
    /// Per-VM storage demand, bytes.
    pub vm_storage: f64,
    pub big_m: f64,
    pub stability_margin: f64,
    pub prices: Prices,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            horizon: 3600,
            slot: 1.0,
            pi_c: 0.0,
            pi_f: 0.5,
            pi_cs: 0.0,
            offload: true,
            arrival_rate: 1.0,
            access_rate: 125e6,
            interfog_rate: 1.25e9,
            volumes: Volumes::default(),
            interfog_payload: 32768.0,
            alpha_comm: 1e-4,
            alpha_cons: 50.0 / 3.6e9,
            wan_delay_factor: 2e-6,
            wan_ref_km: 1000.0,
            tx_energy: TxEnergy::default(),
            fog_comp_energy: 1.0,
            fog_weight: 1.0,
            fog_power: FogPower::default(),
            cloud_power: CloudPower::default(),
            cloud_service_rate: 20.0,
            cycles_per_request: None,
            target_utilization: 0.8,
            emission_price: 1e-3,
            emission_rate: 475.0,
            pue: 1.5,
            cloud_server_power: 9.7e6,
            delay_limits: vec![1.0],
            scale_factor: 1.0,
            vm_storage: 10e9,
            big_m: 1e9,
            stability_margin: 1e-6,
            prices: Prices::default(),
        }
    }
}

impl ScenarioParams {
    pub fn horizon_seconds(&self) -> f64 {
        self.horizon as f64 * self.slot
    }

    pub fn delay_limit(&self, app: usize) -> f64 {
        let l = &self.delay_limits;
        l.get(app).or(l.last()).copied().unwrap_or(f64::INFINITY)
    }

    pub fn machine_rate(&self, eta: f64) -> f64 {
        match self.cycles_per_request {
            Some(k) if k > 0.0 => eta * 1e9 / k,
            _ => self.cloud_service_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        prob("pi_c", self.pi_c)?;
        prob("pi_f", self.pi_f)?;
        prob("pi_cs", self.pi_cs)?;
        let v = &self.volumes;
        if v.to_cloud + v.to_fog > v.total {
            return Err(Error::Config("to_cloud + to_fog exceeds total volume".into()));
        }
        if v.fog_output > v.to_fog {
            return Err(Error::Config("fog_output exceeds to_fog volume".into()));
        }
        if !(2.5..=3.0).contains(&self.cloud_power.delta) {
            return Err(Error::Config("cloud power exponent must lie in [2.5, 3]".into()));
        }
        if self.fog_power.a <= 0.0 {
            return Err(Error::Config("fog power must be strictly convex (a > 0)".into()));
        }
        let p = &self.prices;
        let nonneg = [
            self.alpha_comm,
            self.alpha_cons,
            self.emission_price,
            self.emission_rate,
            self.pue,
            self.cloud_server_power,
            p.upload_tariff,
            p.storage,
            p.router_port,
            p.server,
            p.interfog,
            p.wan,
            self.wan_delay_factor,
            self.tx_energy.consumer_fog,
            self.tx_energy.fog_fog,
            self.tx_energy.fog_cloud,
        ];
        if nonneg.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Config("prices and coefficients must be non-negative".into()));
        }
        let positive = [
            self.slot,
            self.access_rate,
            self.interfog_rate,
            self.cloud_service_rate,
            self.big_m,
            self.wan_ref_km,
        ];
        if positive.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Config("rates and scales must be positive".into()));
        }
        if !(self.target_utilization > 0.0 && self.target_utilization < 1.0) {
            return Err(Error::Config("target_utilization must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
