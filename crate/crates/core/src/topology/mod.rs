//! Synthetic smart-grid network built from a city table.

mod geo;
mod kmeans;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use geo::{distance, euclidean_distance, Coord, Projection, EARTH_RADIUS_KM};
pub use kmeans::{objective as kmeans_objective, weighted_kmeans, KMeans};

pub const SCHEMA_VERSION: u32 = 1;

/// Device capacities a server can be provisioned for, paired with power draw.
pub const DEVICE_TIERS: [u32; 4] = [16_000, 32_000, 64_000, 128_000];
pub const POWER_TIERS_MW: [f64; 4] = [9.7, 19.4, 38.7, 77.4];

const BUNDLED_CITIES: &str = include_str!("../../data/cities.csv");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub id: usize,
    pub name: String,
    pub population: u64,
    pub coord: Coord,
}

#[derive(Debug, Deserialize)]
struct CityRow {
    name: String,
    population: u64,
    lat: f64,
    lon: f64,
}

/// Parse a `name,population,lat,lon` table. Cities are re-indexed in order of
/// decreasing population (stable for equal populations).
pub fn parse_cities(text: &str) -> Result<Vec<City>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        let row: CityRow = row?;
        let coord = Coord::new(row.lat, row.lon);
        if row.population == 0 || !coord.is_valid() {
            return Err(Error::Config(format!("invalid city record {}", row.name)));
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| b.population.cmp(&a.population));
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(id, r)| City {
            id,
            name: r.name,
            population: r.population,
            coord: Coord::new(r.lat, r.lon),
        })
        .collect())
}

pub fn bundled_cities() -> Vec<City> {
    parse_cities(BUNDLED_CITIES).expect("bundled city table is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One consumer node per city carrying all of the city's devices.
    PerCity,
    /// One consumer node per device.
    Individual,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reach {
    /// Radius is the distance to the n-th nearest fog node.
    NthNearest(usize),
    /// Fixed radius in km; the nearest fog is always reachable.
    Radius(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FogSpec {
    pub per_bu_rate: f64,
    pub service_rate: f64,
    pub processing_elements: u32,
    pub physical_servers: u32,
    pub vm_cap_per_server: u32,
    pub storage_cap: f64,
    pub proc_cap: f64,
    pub energy_rate: f64,
}

impl Default for FogSpec {
    fn default() -> Self {
        FogSpec {
            per_bu_rate: 31.25e6,
            service_rate: 5000.0,
            processing_elements: 4,
            physical_servers: 2,
            vm_cap_per_server: 4,
            storage_cap: 100e9,
            proc_cap: 5000.0,
            energy_rate: 3.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerSpec {
    pub machine_count_max: u32,
    pub cpu_freq_range: (f64, f64),
}

impl Default for ServerSpec {
    fn default() -> Self {
        ServerSpec {
            machine_count_max: 10_000,
            cpu_freq_range: (2.0, 3.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopologyConfig {
    /// Total number of consumer devices.
    pub consumers: u64,
    pub granularity: Granularity,
    /// Place consumers only in the first k cities (all cities if unset).
    pub consumer_cities: Option<usize>,
    pub fog_nodes: usize,
    pub servers: usize,
    pub bus_per_fog: usize,
    pub apps: usize,
    pub fog: FogSpec,
    pub server: ServerSpec,
    pub reach: Reach,
    pub consumer_link_bps: f64,
    pub interfog_link_bps: f64,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    /// Replaces the bundled city table.
    pub cities: Option<Vec<City>>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            consumers: 10_000,
            granularity: Granularity::PerCity,
            consumer_cities: None,
            fog_nodes: 100,
            servers: 8,
            bus_per_fog: 8,
            apps: 4,
            fog: FogSpec::default(),
            server: ServerSpec::default(),
            reach: Reach::NthNearest(5),
            consumer_link_bps: 1e9,
            interfog_link_bps: 10e9,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-9,
            cities: None,
        }
    }
}

impl TopologyConfig {
    /// Small network used for optimizer sweeps: individual devices, 50 fog
    /// nodes with 5 bandwidth units each.
    pub fn pilot() -> Self {
        TopologyConfig {
            consumers: 80,
            granularity: Granularity::Individual,
            consumer_cities: Some(20),
            fog_nodes: 50,
            bus_per_fog: 5,
            reach: Reach::Radius(1500.0),
            ..TopologyConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FogNode {
    pub id: usize,
    pub city: usize,
    pub coord: Coord,
    pub bandwidth_units: Vec<usize>,
    pub per_bu_rate: f64,
    pub service_rate: f64,
    pub processing_elements: u32,
    pub physical_servers: u32,
    pub vm_cap_per_server: u32,
    pub storage_cap: f64,
    pub proc_cap: f64,
    pub energy_rate: f64,
}

impl FogNode {
    pub fn max_vms(&self) -> u32 {
        self.physical_servers * self.vm_cap_per_server
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudServer {
    pub id: usize,
    pub coord: Coord,
    pub device_capacity: u32,
    pub power_draw_mw: f64,
    pub machine_count_max: u32,
    pub cpu_freq_range: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consumer {
    pub id: usize,
    pub city: usize,
    pub coord: Coord,
    /// Number of devices this node stands for.
    pub devices: u64,
    pub app: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub schema_version: u32,
    pub cities: Vec<City>,
    pub consumers: Vec<Consumer>,
    pub fog_nodes: Vec<FogNode>,
    pub servers: Vec<CloudServer>,
    pub apps: usize,
    pub consumer_link_bps: f64,
    pub interfog_link_bps: f64,
    pub reach: Reach,
    pub fog_dist: Array2<f64>,
    pub fog_hops: Array2<u32>,
    pub fog_server_dist: Array2<f64>,
    pub consumer_fog_dist: Array2<f64>,
    pub consumer_server_dist: Array2<f64>,
    pub nearest_server_of_fog: Vec<usize>,
    pub nearest_server_of_consumer: Vec<usize>,
    pub reach_radius: Vec<f64>,
    /// Reachable fog nodes per consumer, nearest first.
    pub consumer_reach: Vec<Vec<usize>>,
    /// Reachable consumers per fog node, nearest first.
    pub pref_lists: Vec<Vec<usize>>,
}

/// Largest-remainder apportionment of `total` over `weights`.
fn apportion(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|w| *w as u128).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut out = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        let num = total as u128 * *w as u128;
        out.push((num / sum) as u64);
        rems.push((num % sum, i));
    }
    let assigned: u64 = out.iter().sum();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in rems.into_iter().take((total - assigned) as usize) {
        out[i] += 1;
    }
    out
}

fn argmin_row(row: ndarray::ArrayView1<f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, d) in row.iter().enumerate() {
        if *d < best.1 {
            best = (i, *d);
        }
    }
    best.0
}

pub fn generate_topology(config: &TopologyConfig, seed: u64) -> Result<Topology> {
    let cities = match &config.cities {
        Some(c) => c.clone(),
        None => bundled_cities(),
    };
    if cities.is_empty() {
        return Err(Error::EmptyCities);
    }
    if config.apps == 0 || config.bus_per_fog == 0 {
        return Err(Error::Config("apps and bus_per_fog must be positive".into()));
    }
    if config.servers == 0 {
        return Err(Error::Config("at least one server is required".into()));
    }
    let n_fog = config.fog_nodes.min(cities.len()).max(1);
    if config.servers > n_fog {
        return Err(Error::TooManyServers {
            servers: config.servers,
            fogs: n_fog,
        });
    }

    let m = config.consumer_cities.unwrap_or(cities.len()).min(cities.len());
    let pops: Vec<u64> = cities[..m].iter().map(|c| c.population).collect();
    let per_city = apportion(config.consumers, &pops);
    let mut consumers = Vec::new();
    match config.granularity {
        Granularity::PerCity => {
            for (city, &n) in per_city.iter().enumerate() {
                if n > 0 {
                    consumers.push((city, n));
                }
            }
        }
        Granularity::Individual => {
            // interleave cities so any prefix of the device list is spread out
            let mut keyed = Vec::new();
            for (city, &n) in per_city.iter().enumerate() {
                for k in 0..n {
                    keyed.push(((2 * k + 1) as f64 / (2 * n) as f64, city));
                }
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            consumers.extend(keyed.into_iter().map(|(_, city)| (city, 1)));
        }
    }
    let consumers: Vec<Consumer> = consumers
        .into_iter()
        .enumerate()
        .map(|(id, (city, devices))| Consumer {
            id,
            city,
            coord: cities[city].coord,
            devices,
            app: id % config.apps,
        })
        .collect();

    let fs = &config.fog;
    let fog_nodes: Vec<FogNode> = (0..n_fog)
        .map(|f| FogNode {
            id: f,
            city: f,
            coord: cities[f].coord,
            bandwidth_units: (f * config.bus_per_fog..(f + 1) * config.bus_per_fog).collect(),
            per_bu_rate: fs.per_bu_rate,
            service_rate: fs.service_rate,
            processing_elements: fs.processing_elements,
            physical_servers: fs.physical_servers,
            vm_cap_per_server: fs.vm_cap_per_server,
            storage_cap: fs.storage_cap,
            proc_cap: fs.proc_cap,
            energy_rate: fs.energy_rate,
        })
        .collect();

    let coords: Vec<Coord> = cities.iter().map(|c| c.coord).collect();
    let weights: Vec<f64> = cities.iter().map(|c| c.population as f64).collect();
    let (centroids, shares) = cluster(&coords, &weights, config, seed)?;
    let servers = build_servers(&centroids, &shares, &config.server);

    Ok(Topology::assemble(
        cities,
        consumers,
        fog_nodes,
        servers,
        config.apps,
        config.reach,
        config.consumer_link_bps,
        config.interfog_link_bps,
    ))
}

fn cluster(
    coords: &[Coord],
    weights: &[f64],
    config: &TopologyConfig,
    seed: u64,
) -> Result<(Vec<Coord>, Vec<f64>)> {
    let total: f64 = weights.iter().sum();
    let ref_lat = coords.iter().zip(weights).map(|(c, w)| c.lat * w).sum::<f64>() / total;
    let proj = Projection::new(ref_lat);
    let pts: Vec<[f64; 2]> = coords.iter().map(|c| proj.forward(*c)).collect();
    let mut rng = rng::stream(seed, 0x6b6d, 0);
    let km = weighted_kmeans(
        &pts,
        weights,
        config.servers,
        &mut rng,
        config.kmeans_max_iter,
        config.kmeans_tol,
    )?;
    let mut shares = vec![0.0; config.servers];
    for (l, w) in km.labels.iter().zip(weights) {
        shares[*l] += w;
    }
    Ok((km.centroids.iter().map(|p| proj.inverse(*p)).collect(), shares))
}

fn build_servers(centroids: &[Coord], shares: &[f64], spec: &ServerSpec) -> Vec<CloudServer> {
    let k = centroids.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|a, b| shares[*b].total_cmp(&shares[*a]).then(a.cmp(b)));
    let mut tier = vec![0; k];
    for (rank, &s) in order.iter().enumerate() {
        tier[s] = 3 - (rank * 4 / k).min(3);
    }
    centroids
        .iter()
        .enumerate()
        .map(|(id, c)| CloudServer {
            id,
            coord: *c,
            device_capacity: DEVICE_TIERS[tier[id]],
            power_draw_mw: POWER_TIERS_MW[tier[id]],
            machine_count_max: spec.machine_count_max,
            cpu_freq_range: spec.cpu_freq_range,
        })
        .collect()
}

/// Population-weighted k-means over city coordinates.
pub fn cluster_servers(cities: &[City], k: usize, seed: u64) -> Result<Vec<Coord>> {
    if cities.is_empty() {
        return Err(Error::EmptyCities);
    }
    let config = TopologyConfig {
        servers: k,
        ..TopologyConfig::default()
    };
    let coords: Vec<Coord> = cities.iter().map(|c| c.coord).collect();
    let weights: Vec<f64> = cities.iter().map(|c| c.population as f64).collect();
    Ok(cluster(&coords, &weights, &config, seed)?.0)
}

fn dist_matrix(a: &[Coord], b: &[Coord]) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| distance(a[i], b[j]))
}

impl Topology {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        cities: Vec<City>,
        consumers: Vec<Consumer>,
        fog_nodes: Vec<FogNode>,
        servers: Vec<CloudServer>,
        apps: usize,
        reach: Reach,
        consumer_link_bps: f64,
        interfog_link_bps: f64,
    ) -> Topology {
        let fc: Vec<Coord> = fog_nodes.iter().map(|f| f.coord).collect();
        let sc: Vec<Coord> = servers.iter().map(|s| s.coord).collect();
        let cc: Vec<Coord> = consumers.iter().map(|c| c.coord).collect();
        let nf = fc.len();
        let fog_dist = dist_matrix(&fc, &fc);
        let fog_server_dist = dist_matrix(&fc, &sc);
        let consumer_fog_dist = dist_matrix(&cc, &fc);
        let consumer_server_dist = dist_matrix(&cc, &sc);
        let fog_hops = Array2::from_shape_fn((nf, nf), |(i, j)| u32::from(i != j));
        let mut topo = Topology {
            schema_version: SCHEMA_VERSION,
            cities,
            consumers,
            fog_nodes,
            servers,
            apps,
            consumer_link_bps,
            interfog_link_bps,
            reach,
            nearest_server_of_fog: fog_server_dist.rows().into_iter().map(argmin_row).collect(),
            nearest_server_of_consumer: consumer_server_dist
                .rows()
                .into_iter()
                .map(argmin_row)
                .collect(),
            fog_dist,
            fog_hops,
            fog_server_dist,
            consumer_fog_dist,
            consumer_server_dist,
            reach_radius: Vec::new(),
            consumer_reach: Vec::new(),
            pref_lists: Vec::new(),
        };
        topo.rebuild_reach();
        topo
    }

    /// Recompute radii and reachability lists from `self.reach`.
    pub fn rebuild_reach(&mut self) {
        let nf = self.fog_nodes.len();
        self.reach_radius.clear();
        self.consumer_reach.clear();
        for j in 0..self.consumers.len() {
            let row = self.consumer_fog_dist.row(j);
            let mut order: Vec<usize> = (0..nf).collect();
            order.sort_by(|a, b| row[*a].total_cmp(&row[*b]).then(a.cmp(b)));
            let radius = match self.reach {
                Reach::NthNearest(n) => row[order[n.clamp(1, nf) - 1]],
                Reach::Radius(r) => r.max(row[order[0]]),
            };
            self.reach_radius.push(radius);
            self.consumer_reach
                .push(order.into_iter().filter(|f| row[*f] <= radius).collect());
        }
        self.rebuild_pref_lists();
    }

    pub fn rebuild_pref_lists(&mut self) {
        let mut lists = vec![Vec::new(); self.fog_nodes.len()];
        for (j, fogs) in self.consumer_reach.iter().enumerate() {
            for &f in fogs {
                lists[f].push(j);
            }
        }
        for (f, list) in lists.iter_mut().enumerate() {
            let d = &self.consumer_fog_dist;
            list.sort_by(|a, b| d[[*a, f]].total_cmp(&d[[*b, f]]).then(a.cmp(b)));
        }
        self.pref_lists = lists;
    }

    /// Keep the first `consumers` consumer nodes and the first `fogs` fog
    /// nodes; reachability is recomputed on the smaller network.
    pub fn restrict(&self, consumers: usize, fogs: usize) -> Topology {
        let nc = consumers.min(self.consumers.len());
        let nf = fogs.min(self.fog_nodes.len()).max(1);
        let mut t = self.clone();
        t.consumers.truncate(nc);
        t.fog_nodes.truncate(nf);
        t.fog_dist = self.fog_dist.slice(ndarray::s![..nf, ..nf]).to_owned();
        t.fog_hops = self.fog_hops.slice(ndarray::s![..nf, ..nf]).to_owned();
        t.fog_server_dist = self.fog_server_dist.slice(ndarray::s![..nf, ..]).to_owned();
        t.consumer_fog_dist = self.consumer_fog_dist.slice(ndarray::s![..nc, ..nf]).to_owned();
        t.consumer_server_dist = self.consumer_server_dist.slice(ndarray::s![..nc, ..]).to_owned();
        t.nearest_server_of_fog.truncate(nf);
        t.nearest_server_of_consumer.truncate(nc);
        t.rebuild_reach();
        t
    }

    pub fn n_consumers(&self) -> usize {
        self.consumers.len()
    }

    pub fn n_fogs(&self) -> usize {
        self.fog_nodes.len()
    }

    pub fn n_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn n_bus(&self) -> usize {
        self.fog_nodes.iter().map(|f| f.bandwidth_units.len()).sum()
    }

    /// Fog node owning each bandwidth unit.
    pub fn bu_owner(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.n_bus()];
        for f in &self.fog_nodes {
            for &b in &f.bandwidth_units {
                owner[b] = f.id;
            }
        }
        owner
    }

    pub fn total_devices(&self) -> u64 {
        self.consumers.iter().map(|c| c.devices).sum()
    }

    pub fn consumers_per_city(&self) -> Vec<u64> {
        let mut out = vec![0; self.cities.len()];
        for c in &self.consumers {
            out[c.city] += c.devices;
        }
        out
    }

    pub fn is_reachable(&self, consumer: usize, fog: usize) -> bool {
        self.consumer_reach[consumer].contains(&fog)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Topology> {
        let t: Topology = serde_json::from_str(text)?;
        if t.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema {
                found: t.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(t)
    }
}

/// Preference list of fog node `f`.
pub fn reachable_set(f: usize, topo: &Topology) -> Vec<usize> {
    topo.pref_lists[f].clone()
}

/// Consumers within a closed ball of `radius` km around fog node `f`,
/// nearest first with ties broken by consumer index.
pub fn reachable_within(f: usize, topo: &Topology, radius: f64) -> Vec<usize> {
    let d = &topo.consumer_fog_dist;
    let mut out: Vec<usize> = (0..topo.n_consumers())
        .filter(|j| d[[*j, f]] <= radius)
        .collect();
    out.sort_by(|a, b| d[[*a, f]].total_cmp(&d[[*b, f]]).then(a.cmp(b)));
    out
}
