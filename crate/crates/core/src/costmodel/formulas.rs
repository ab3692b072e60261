//! Closed-form cost, latency and power terms, generic over the scalar.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyTerms<T> {
    pub upload: T,
    pub fog_comp: T,
    pub interfog: T,
    pub dispatch: T,
    pub cloud_comp: T,
}

impl<T: Field> LatencyTerms<T> {
    pub fn zero() -> Self {
        LatencyTerms {
            upload: T::zero(),
            fog_comp: T::zero(),
            interfog: T::zero(),
            dispatch: T::zero(),
            cloud_comp: T::zero(),
        }
    }

    pub fn sum(&self) -> T {
        self.upload + self.fog_comp + self.interfog + self.dispatch + self.cloud_comp
    }

    pub fn transmission(&self) -> T {
        self.upload + self.interfog + self.dispatch
    }

    pub fn processing(&self) -> T {
        self.fog_comp + self.cloud_comp
    }

    pub fn scale(&self, k: T) -> Self {
        LatencyTerms {
            upload: self.upload * k,
            fog_comp: self.fog_comp * k,
            interfog: self.interfog * k,
            dispatch: self.dispatch * k,
            cloud_comp: self.cloud_comp * k,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        LatencyTerms {
            upload: self.upload + o.upload,
            fog_comp: self.fog_comp + o.fog_comp,
            interfog: self.interfog + o.interfog,
            dispatch: self.dispatch + o.dispatch,
            cloud_comp: self.cloud_comp + o.cloud_comp,
        }
    }

    /// Branch-weighted terms of the fog path: the interfog leg happens with
    /// probability `pi_f`, dispatch with `1 - pi_f`, and cloud computation
    /// only when the dispatched output needs more than storage.
    pub fn weighted(&self, pi_f: T, pi_cs: T) -> Self {
        let away = T::one() - pi_f;
        LatencyTerms {
            upload: self.upload,
            fog_comp: self.fog_comp,
            interfog: pi_f * self.interfog,
            dispatch: away * self.dispatch,
            cloud_comp: away * (T::one() - pi_cs) * self.cloud_comp,
        }
    }
}

pub fn upload_latency<T: Field>(volume: T, allocated_bus: usize, bu_rate: T) -> Result<T> {
    if allocated_bus == 0 {
        return Err(Error::NoBandwidth);
    }
    Ok(volume / (T::from_usize_exact(allocated_bus) * bu_rate))
}

pub fn interfog_latency<T: Field>(payload: T, link_rate: T) -> Result<T> {
    if link_rate <= T::zero() {
        return Err(Error::ZeroRate);
    }
    Ok(payload / link_rate)
}

pub fn dispatch_latency<T: Field>(wan_factor: T, dispatch_rate: T) -> T {
    wan_factor * dispatch_rate
}

/// Communication cost of one request on the fog path.
pub fn fog_comm_cost<T: Field>(lat: &LatencyTerms<T>, pi_f: T, pi_cs: T, alpha: T) -> T {
    alpha * lat.weighted(pi_f, pi_cs).sum()
}

/// Pairwise traffic cost of a VM placement. `placement` is VM x fog and each
/// row holds at most one mark; unplaced VMs contribute nothing.
pub fn traffic_cost<T: Field>(
    placement: &Array2<bool>,
    traffic: &Array2<T>,
    unit_price: &Array2<T>,
) -> Result<T> {
    let n = placement.nrows();
    if traffic.dim() != (n, n) {
        return Err(Error::Length(traffic.nrows(), n));
    }
    let mut host = Vec::with_capacity(n);
    for (i, row) in placement.rows().into_iter().enumerate() {
        let mut marks = row.iter().enumerate().filter(|(_, b)| **b).map(|(f, _)| f);
        let first = marks.next();
        if marks.next().is_some() {
            return Err(Error::NotOneHot(i));
        }
        host.push(first);
    }
    let mut total = T::zero();
    for i in 0..n {
        for j in 0..n {
            if let (Some(f), Some(g)) = (host[i], host[j]) {
                total = total + traffic[[i, j]] * unit_price[[f, g]];
            }
        }
    }
    Ok(total)
}

/// Quadratic fog computation power over a window of loads.
pub fn fog_comp_power<T: Field>(
    loads: &[T],
    coeffs: (T, T, T),
    weight: T,
    energy: T,
    associated: bool,
) -> Result<T> {
    let (a, b, c) = coeffs;
    if a <= T::zero() {
        return Err(Error::Config("fog power must be strictly convex (a > 0)".into()));
    }
    if !associated {
        return Ok(T::zero());
    }
    let s = loads
        .iter()
        .fold(T::zero(), |acc, &y| acc + a * y * y + b * y + c);
    Ok(energy * weight * s)
}

/// Cloud machine power as a function of CPU frequency.
pub fn cloud_comp_power<T: Real>(
    on: bool,
    machines: u32,
    freq: T,
    coeffs: (T, T, T),
    associated: bool,
) -> T {
    if !on || associated {
        return T::zero();
    }
    let (a, b, delta) = coeffs;
    T::from_u32(machines).expect("machine count fits") * (a * freq.powf(delta) + b)
}

/// Transmission power for byte rates on the three link types.
pub fn tx_power<T: Field>(
    energy: (T, T, T),
    upload_bytes: T,
    interfog_bytes: T,
    cloud_bytes: T,
    pi_f: T,
) -> T {
    let (p_up, p_ff, p_fc) = energy;
    p_up * upload_bytes + pi_f * p_ff * interfog_bytes + (T::one() - pi_f) * p_fc * cloud_bytes
}

/// Emission cost of running cloud power `power` (W) for `hours`.
pub fn emission_cost<T: Field>(pi_f: T, price: T, rate: T, pue: T, power: T, hours: T) -> T {
    let kwh = power * hours / T::from_u32(1000).expect("literal fits");
    (T::one() - pi_f) * price * rate * pue * kwh
}

/// Fraction of packets entering the fog layer that are served there.
pub fn fne<T: Field>(packets_to_cloud: T, packets_into_fog: T) -> Result<T> {
    if packets_into_fog <= T::zero() {
        return Err(Error::NoPackets);
    }
    Ok((packets_into_fog - packets_to_cloud) / packets_into_fog)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Edge,
    FogAssisted,
    PureCloud,
}

impl Regime {
    pub fn of<T: Field>(r: T) -> Regime {
        if r >= T::one() {
            Regime::Edge
        } else if r <= T::zero() {
            Regime::PureCloud
        } else {
            Regime::FogAssisted
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Edge => "Edge",
            Regime::FogAssisted => "Fog-assisted",
            Regime::PureCloud => "Pure cloud",
        }
    }
}
