//! Analytic queue formulas and the slotted fog-node buffer.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Field;

fn unstable<T: Field>(arrival: T, capacity: T) -> Error {
    Error::Unstable {
        arrival: arrival.as_f64(),
        capacity: capacity.as_f64(),
    }
}

/// Mean sojourn time of an M/M/1 queue.
pub fn mm1_latency<T: Field>(service_rate: T, arrival_rate: T) -> Result<T> {
    if arrival_rate >= service_rate {
        return Err(unstable(arrival_rate, service_rate));
    }
    Ok(T::one() / (service_rate - arrival_rate))
}

/// Probability that an arrival waits in an M/M/n queue.
///
/// Uses the Erlang-B recursion, which never forms a factorial.
pub fn erlang_c<T: Field>(n: u32, arrival_rate: T, service_rate: T) -> Result<T> {
    let servers = T::from_u32(n.max(1)).expect("server count fits");
    if arrival_rate >= servers * service_rate {
        return Err(unstable(arrival_rate, servers * service_rate));
    }
    let a = arrival_rate / service_rate;
    let mut b = T::one();
    for k in 1..=n.max(1) {
        let k = T::from_u32(k).expect("server count fits");
        b = a * b / (k + a * b);
    }
    Ok(servers * b / (servers - a * (T::one() - b)))
}

/// Mean response time of an M/M/n queue: waiting plus service.
pub fn mmn_response_time<T: Field>(n: u32, arrival_rate: T, service_rate: T) -> Result<T> {
    let c = erlang_c(n, arrival_rate, service_rate)?;
    let servers = T::from_u32(n.max(1)).expect("server count fits");
    Ok(c / (servers * service_rate - arrival_rate) + T::one() / service_rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueState<T> {
    pub input_backlog: T,
    pub output_backlog: T,
    pub input_cap: T,
    pub output_cap: T,
}

impl<T: Field> QueueState<T> {
    pub fn empty(input_cap: T, output_cap: T) -> Self {
        QueueState {
            input_backlog: T::zero(),
            output_backlog: T::zero(),
            input_cap,
            output_cap,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotEvent<T> {
    pub arrivals: T,
    pub admitted: T,
    pub input_drain: T,
    pub output_drain: T,
}

/// Tail-drop admission: admit what fits after this slot's input drain.
pub fn admit<T: Field>(state: &QueueState<T>, arrivals: T, input_drain: T) -> T {
    let free = state.input_cap - (state.input_backlog - input_drain);
    arrivals.min_of(free.max_of(T::zero()))
}

/// Advance both buffers by one slot.
pub fn buffer_step<T: Field>(state: QueueState<T>, event: SlotEvent<T>) -> Result<QueueState<T>> {
    let zero = T::zero();
    if event.input_drain < zero || event.input_drain > state.input_backlog {
        return Err(Error::Drain {
            drain: event.input_drain.as_f64(),
            backlog: state.input_backlog.as_f64(),
        });
    }
    if event.output_drain < zero || event.output_drain > state.output_backlog {
        return Err(Error::Drain {
            drain: event.output_drain.as_f64(),
            backlog: state.output_backlog.as_f64(),
        });
    }
    let free_in = state.input_cap - (state.input_backlog - event.input_drain);
    if event.admitted < zero || event.admitted > event.arrivals || event.admitted > free_in {
        return Err(Error::Admission {
            admitted: event.admitted.as_f64(),
            free: free_in.as_f64(),
        });
    }
    let output = state.output_backlog - event.output_drain + event.input_drain;
    if output > state.output_cap {
        return Err(Error::Admission {
            admitted: event.input_drain.as_f64(),
            free: (state.output_cap - (state.output_backlog - event.output_drain)).as_f64(),
        });
    }
    Ok(QueueState {
        input_backlog: state.input_backlog - event.input_drain + event.admitted,
        output_backlog: output,
        ..state
    })
}

/// Number of requests arriving in one slot.
pub fn poisson_arrivals<R: rand::Rng + ?Sized>(rate: f64, slot: f64, rng: &mut R) -> u64 {
    let mean = rate * slot;
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(mean as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub customers: usize,
    /// Plain sample mean of the sojourn time.
    pub mean_sojourn: f64,
    /// Sample mean corrected with the realised mean service and
    /// inter-arrival times as control variates.
    pub controlled_sojourn: f64,
}

/// First-come first-served M/M/n simulation over `arrivals` customers,
/// starting empty. Control-variate coefficients are fitted on 100 batch
/// means.
pub fn simulate_mmn(n: usize, arrival_rate: f64, service_rate: f64, arrivals: usize, seed: u64) -> Result<SimSummary> {
    if n == 0 || arrivals < 100 {
        return Err(Error::TooFewSamples {
            needed: 100,
            got: arrivals,
        });
    }
    if !(arrival_rate > 0.0 && service_rate > 0.0) {
        return Err(Error::ZeroRate);
    }
    let mut rng = crate::rng::stream(seed, 0x6465_7331, n as u64);
    let mut exp = |rate: f64| -(1.0 - rng.random::<f64>()).ln() / rate;
    // server free-at times in integer picoseconds for a total order
    let scale = 1e12;
    let mut free: BinaryHeap<Reverse<u64>> = (0..n).map(|_| Reverse(0)).collect();
    let batch = arrivals / 100;
    let mut batches = Vec::with_capacity(100);
    let (mut t, mut sums, mut acc) = (0.0, [0.0; 3], [0.0; 3]);
    for k in 0..batch * 100 {
        let gap = exp(arrival_rate);
        t += gap;
        let Reverse(earliest) = free.pop().expect("n servers");
        let service = exp(service_rate);
        let done = t.max(earliest as f64 / scale) + service;
        free.push(Reverse((done * scale) as u64));
        for (a, v) in acc.iter_mut().zip([done - t, service, gap]) {
            *a += v;
        }
        if (k + 1) % batch == 0 {
            batches.push(acc.map(|a| a / batch as f64));
            for (s, a) in sums.iter_mut().zip(acc) {
                *s += a;
            }
            acc = [0.0; 3];
        }
    }
    let m = batches.len() as f64;
    let mean: [f64; 3] = std::array::from_fn(|i| batches.iter().map(|b| b[i]).sum::<f64>() / m);
    let (mut sxx, mut sxy) = ([[0.0; 2]; 2], [0.0; 2]);
    for b in &batches {
        let x = [b[1] - mean[1], b[2] - mean[2]];
        for i in 0..2 {
            sxy[i] += x[i] * (b[0] - mean[0]);
            for j in 0..2 {
                sxx[i][j] += x[i] * x[j];
            }
        }
    }
    let det = sxx[0][0] * sxx[1][1] - sxx[0][1] * sxx[1][0];
    let beta = if det.abs() > 0.0 {
        [
            (sxx[1][1] * sxy[0] - sxx[0][1] * sxy[1]) / det,
            (sxx[0][0] * sxy[1] - sxx[1][0] * sxy[0]) / det,
        ]
    } else {
        [0.0, 0.0]
    };
    let customers = batch * 100;
    let total = customers as f64;
    let plain = sums[0] / total;
    Ok(SimSummary {
        customers,
        mean_sojourn: plain,
        controlled_sojourn: plain
            - beta[0] * (sums[1] / total - 1.0 / service_rate)
            - beta[1] * (sums[2] / total - 1.0 / arrival_rate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    #[test]
    fn mm1_examples() {
        assert_eq!(mm1_latency(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(mm1_latency(1.0, 0.0).unwrap(), 1.0);
        assert!((mm1_latency(1.0f64, 0.999).unwrap() - 1000.0).abs() < 1e-9);
        assert!(matches!(mm1_latency(1.0, 1.0), Err(Error::Unstable { .. })));
    }

    #[test]
    fn erlang_c_exact() {
        assert_eq!(erlang_c(2, Q::from(1), Q::from(1)).unwrap(), Q::new(1, 3));
        assert_eq!(erlang_c(1, Q::new(3, 10), Q::from(1)).unwrap(), Q::new(3, 10));
        assert_eq!(
            mmn_response_time(2, Q::from(1), Q::from(1)).unwrap(),
            Q::new(4, 3)
        );
        assert_eq!(mmn_response_time(1, Q::from(1), Q::from(2)).unwrap(), Q::from(1));
    }

    #[test]
    fn erlang_c_large_n_is_finite() {
        let c = erlang_c(5000, 4900.0, 1.0).unwrap();
        assert!(c > 0.0 && c < 1.0);
        assert!(erlang_c(3, 3.0, 1.0).is_err());
    }

    #[test]
    fn buffer_examples() {
        let s = QueueState {
            input_backlog: 5,
            output_backlog: 0,
            input_cap: 10,
            output_cap: 10,
        };
        let e = SlotEvent {
            arrivals: 3,
            admitted: 3,
            input_drain: 2,
            output_drain: 0,
        };
        let n = buffer_step(s, e).unwrap();
        assert_eq!((n.input_backlog, n.output_backlog), (6, 2));
        let zero = SlotEvent {
            arrivals: 0,
            admitted: 0,
            input_drain: 0,
            output_drain: 0,
        };
        assert_eq!(buffer_step(s, zero).unwrap(), s);
        let over = SlotEvent {
            input_drain: 6,
            ..zero
        };
        assert!(buffer_step(s, over).is_err());
    }

    #[test]
    fn zero_rate_has_no_arrivals() {
        let mut r = crate::rng::root(1);
        assert!((0..100).all(|_| poisson_arrivals(0.0, 1.0, &mut r) == 0));
    }
}
