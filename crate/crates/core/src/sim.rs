//! Monte Carlo simulation of PPP drops on a toroidal square.
//!
//! Each drop places BSs and users, associates users by max received power
//! (cache misses to the macro tier only), lets every BS schedule up to M_k
//! of its users and realizes SINRs with exponential signal and
//! Gamma(M_j, 1/M_j) interference gains from every other active BS.
//!
//! A BS is active exactly when it has at least one attached user; no
//! thinning is imposed. Drop `d` draws from ChaCha8 stream `d` of the seed,
//! so results do not depend on the number of worker threads.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, Zipf};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Mode, NetworkConfig, Tier};

/// Smallest expected macro count accepted for a window.
pub const MIN_EXPECTED_MACROS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub side: f64,
}

impl Window {
    /// Square holding `expected_macros` macro BSs on average.
    pub fn for_config(config: &NetworkConfig, expected_macros: f64) -> Result<Self> {
        let w = Self {
            side: (expected_macros / config.tiers[0].density).sqrt(),
        };
        w.check(config)?;
        Ok(w)
    }

    fn check(&self, config: &NetworkConfig) -> Result<()> {
        let expected = config.tiers[0].density * self.area();
        if !(expected >= MIN_EXPECTED_MACROS) {
            return Err(Error::Simulation(format!(
                "window holds {expected:.1} macro BSs on average; need at least {MIN_EXPECTED_MACROS}"
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Squared wrap-around distance.
    #[inline]
    pub fn dist2(&self, a: Point, b: Point) -> f64 {
        let h = 0.5 * self.side;
        let mut dx = (a.x - b.x).abs();
        let mut dy = (a.y - b.y).abs();
        if dx > h {
            dx = self.side - dx;
        }
        if dy > h {
            dy = self.side - dy;
        }
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Serving {
    pub tier: Tier,
    pub bs: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropSample {
    pub window: Window,
    pub bs: [Vec<Point>; 2],
    pub users: Vec<Point>,
    /// Whether each user's file is cached at the helpers; all false in
    /// conventional mode.
    pub hit: Vec<bool>,
    /// Filled by [`associate`].
    pub serving: Vec<Option<Serving>>,
    /// Filled by [`schedule`]: per tier, whether each BS has users.
    pub active: [Vec<bool>; 2],
    /// Filled by [`schedule`]: users served in this slot.
    pub scheduled: Vec<usize>,
}

impl DropSample {
    pub fn users_on(&self, t: Tier) -> usize {
        self.serving.iter().flatten().filter(|s| s.tier == t).count()
    }
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Simulation(format!("Poisson({mean}): {e}")))?;
    Ok(d.sample(rng) as usize)
}

fn uniform_points<R: Rng>(n: usize, side: f64, rng: &mut R) -> Vec<Point> {
    (0..n)
        .map(|_| Point {
            x: rng.random::<f64>() * side,
            y: rng.random::<f64>() * side,
        })
        .collect()
}

/// Place BSs and users as independent PPPs and draw each user's request.
pub fn sample_drop<R: Rng>(config: &NetworkConfig, window: &Window, rng: &mut R) -> Result<DropSample> {
    window.check(config)?;
    let area = window.area();
    let mut bs: [Vec<Point>; 2] = Default::default();
    for t in Tier::ALL {
        let n = poisson(config.tier(t).density * area, rng)?;
        bs[t.index()] = uniform_points(n, window.side, rng);
    }
    let n_users = poisson(config.user_density * area, rng)?;
    let users = uniform_points(n_users, window.side, rng);
    let hit = match config.mode {
        Mode::Conventional => vec![false; n_users],
        Mode::Cached => {
            let cat = config.catalog()?;
            let whole = cat.cache_files.floor();
            let frac = cat.cache_files - whole;
            let zipf = Zipf::new(cat.files as f64, cat.skew).map_err(|e| Error::Simulation(format!("Zipf: {e}")))?;
            (0..n_users)
                .map(|_| {
                    let f = zipf.sample(rng);
                    // a fractional cache holds the next file with probability `frac`
                    f <= whole || (f == whole + 1.0 && rng.random::<f64>() < frac)
                })
                .collect()
        }
    };
    Ok(DropSample {
        window: *window,
        bs,
        users,
        hit,
        serving: Vec::new(),
        active: Default::default(),
        scheduled: Vec::new(),
    })
}

/// Bucket grid on the torus for nearest-neighbour queries.
struct TorusGrid {
    n: usize,
    cell: f64,
    buckets: Vec<Vec<u32>>,
}

impl TorusGrid {
    fn new(points: &[Point], side: f64) -> Self {
        let per_cell = 2.0;
        let n = ((points.len() as f64 / per_cell).sqrt().floor() as usize).max(1);
        let cell = side / n as f64;
        let mut buckets = vec![Vec::new(); n * n];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::cell_of(p, cell, n);
            buckets[cy * n + cx].push(i as u32);
        }
        Self { n, cell, buckets }
    }

    fn cell_of(p: &Point, cell: f64, n: usize) -> (usize, usize) {
        (((p.x / cell) as usize).min(n - 1), ((p.y / cell) as usize).min(n - 1))
    }

    fn nearest(&self, points: &[Point], window: &Window, q: Point) -> Option<(usize, f64)> {
        if points.is_empty() {
            return None;
        }
        let n = self.n as isize;
        let (cx, cy) = Self::cell_of(&q, self.cell, self.n);
        let mut best: Option<(usize, f64)> = None;
        let mut r: isize = 0;
        loop {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let x = (cx as isize + dx).rem_euclid(n) as usize;
                    let y = (cy as isize + dy).rem_euclid(n) as usize;
                    for &i in &self.buckets[y * self.n + x] {
                        let d2 = window.dist2(q, points[i as usize]);
                        if best.is_none_or(|(_, b)| d2 < b) {
                            best = Some((i as usize, d2));
                        }
                    }
                }
            }
            let covered = 2 * r + 1 >= n;
            if covered {
                break;
            }
            if let Some((_, b)) = best {
                // anything outside ring r is at least r cells away
                let reach = r as f64 * self.cell;
                if b <= reach * reach {
                    break;
                }
            }
            r += 1;
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}

/// Attach every user to the BS with the strongest average received power;
/// cache-miss users may only use the macro tier.
pub fn associate(drop: &mut DropSample, config: &NetworkConfig) {
    let window = drop.window;
    let grids = [
        TorusGrid::new(&drop.bs[0], window.side),
        TorusGrid::new(&drop.bs[1], window.side),
    ];
    drop.serving = drop
        .users
        .iter()
        .zip(&drop.hit)
        .map(|(&u, &hit)| {
            let allowed: &[Tier] = if config.mode == Mode::Cached && !hit {
                &[Tier::Macro]
            } else {
                &Tier::ALL
            };
            let mut best: Option<(f64, Serving)> = None;
            for &t in allowed {
                let i = t.index();
                if let Some((bs, d)) = grids[i].nearest(&drop.bs[i], &window, u) {
                    let p = config.tier(t);
                    let power = p.power * d.powf(-p.alpha);
                    if best.is_none_or(|(b, _)| power > b) {
                        best = Some((
                            power,
                            Serving {
                                tier: t,
                                bs,
                                distance: d,
                            },
                        ));
                    }
                }
            }
            best.map(|(_, s)| s)
        })
        .collect();
}

/// Mark BSs with users as active and let each pick min(M_k, users) of them.
pub fn schedule<R: Rng>(drop: &mut DropSample, config: &NetworkConfig, rng: &mut R) {
    let mut attached: [Vec<Vec<usize>>; 2] = [vec![Vec::new(); drop.bs[0].len()], vec![Vec::new(); drop.bs[1].len()]];
    for (u, s) in drop.serving.iter().enumerate() {
        if let Some(s) = s {
            attached[s.tier.index()][s.bs].push(u);
        }
    }
    drop.scheduled.clear();
    for t in Tier::ALL {
        let m = config.tier(t).antennas as usize;
        let lists = &attached[t.index()];
        drop.active[t.index()] = lists.iter().map(|l| !l.is_empty()).collect();
        for list in lists {
            if list.len() <= m {
                drop.scheduled.extend_from_slice(list);
            } else {
                drop.scheduled
                    .extend(sample(rng, list.len(), m).into_iter().map(|i| list[i]));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserRate {
    pub user: usize,
    pub tier: Tier,
    /// `Some(hit)` in cached mode.
    pub hit: Option<bool>,
    pub sinr: f64,
    /// nats/s/Hz, after the backhaul cap where it applies.
    pub rate: f64,
}

fn gain_sampler(antennas: u32) -> Option<Gamma<f64>> {
    if antennas == 1 {
        None
    } else {
        let m = antennas as f64;
        Some(Gamma::new(m, 1.0 / m).expect("shape and scale are positive"))
    }
}

/// SINRs and rates for the given associated users, each as if served in
/// this slot by its BS while every other active BS interferes.
pub fn rates_for_users<R: Rng>(
    drop: &DropSample,
    config: &NetworkConfig,
    users: &[usize],
    rng: &mut R,
) -> Vec<UserRate> {
    let w = drop.window;
    let gains = [
        gain_sampler(config.tiers[0].antennas),
        gain_sampler(config.tiers[1].antennas),
    ];
    let active: [Vec<Point>; 2] = [0, 1].map(|i| {
        drop.bs[i]
            .iter()
            .zip(&drop.active[i])
            .filter(|(_, &a)| a)
            .map(|(p, _)| *p)
            .collect()
    });
    let active_index: [Vec<usize>; 2] = [0, 1].map(|i| {
        drop.active[i]
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(k, _)| k)
            .collect()
    });
    let half_alpha = [config.tiers[0].alpha / 2.0, config.tiers[1].alpha / 2.0];
    users
        .iter()
        .filter_map(|&u| {
            let s = drop.serving[u]?;
            let k = config.tier(s.tier);
            let h: f64 = Exp1.sample(rng);
            let signal = k.power / k.antennas as f64 * h * s.distance.powf(-k.alpha);
            let mut interference = 0.0;
            for i in 0..2 {
                let p = config.tiers[i].power;
                for (n, &b) in active[i].iter().enumerate() {
                    if i == s.tier.index() && active_index[i][n] == s.bs {
                        continue;
                    }
                    let g = match &gains[i] {
                        Some(gamma) => gamma.sample(rng),
                        None => Exp1.sample(rng),
                    };
                    interference += p * g * w.dist2(drop.users[u], b).powf(-half_alpha[i]);
                }
            }
            let sinr = signal / (interference + config.noise_power);
            let mut rate = sinr.ln_1p();
            if config.mode == Mode::Conventional && s.tier == Tier::Small {
                rate = rate.min(config.backhaul);
            }
            Some(UserRate {
                user: u,
                tier: s.tier,
                hit: (config.mode == Mode::Cached).then_some(drop.hit[u]),
                sinr,
                rate,
            })
        })
        .collect()
}

/// Rates of every scheduled user.
pub fn realize_rates<R: Rng>(drop: &DropSample, config: &NetworkConfig, rng: &mut R) -> Vec<UserRate> {
    rates_for_users(drop, config, &drop.scheduled, rng)
}

/// Rates of up to `n` associated users picked uniformly at random, for
/// typical-user class means free of scheduling bias.
pub fn probe_rates<R: Rng>(drop: &DropSample, config: &NetworkConfig, n: usize, rng: &mut R) -> Vec<UserRate> {
    let attached: Vec<usize> = (0..drop.users.len()).filter(|&u| drop.serving[u].is_some()).collect();
    let picked: Vec<usize> = if attached.len() <= n {
        attached
    } else {
        let mut idx = sample(rng, attached.len(), n).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| attached[i]).collect()
    };
    rates_for_users(drop, config, &picked, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub drops: usize,
    pub seed: u64,
    pub expected_macros: f64,
    /// Scheduled users per tier whose rates enter the ASE estimate of a
    /// drop (scaled up to the full count); 0 means all of them.
    pub ase_probes: usize,
    /// Randomly chosen associated users per drop for class means; 0 skips.
    pub class_probes: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            drops: 500,
            seed: 1,
            expected_macros: 100.0,
            ase_probes: 128,
            class_probes: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Per-user class means; cached mode splits macro users into hits and misses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassRates {
    pub macro_users: Option<Stat>,
    pub small_users: Option<Stat>,
    pub macro_hit: Option<Stat>,
    pub miss: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub mode: Mode,
    /// nats/s/Hz/m².
    pub ase: Stat,
    pub rates: ClassRates,
    /// Fraction of BSs with at least one user, per tier.
    pub active_fraction: [Option<Stat>; 2],
    /// Share of users attached to the macro tier.
    pub macro_association: Option<Stat>,
    pub drops: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default)]
struct DropTally {
    ase: f64,
    // (sum, count) pairs
    macro_users: (f64, f64),
    small_users: (f64, f64),
    macro_hit: (f64, f64),
    miss: (f64, f64),
    active: [(f64, f64); 2],
    macro_assoc: (f64, f64),
    scheduled: usize,
}

/// Neumaier-compensated sum.
fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean_stat(values: &[f64]) -> Stat {
    let n = values.len();
    let mean = stable_sum(values.iter().copied()) / n as f64;
    let var = if n > 1 {
        stable_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64
    } else {
        f64::NAN
    };
    Stat {
        mean,
        std_error: (var / n as f64).sqrt(),
        samples: n,
    }
}

/// Ratio estimator Σs/Σc over drops with a linearized standard error.
fn ratio_stat(pairs: &[(f64, f64)]) -> Option<Stat> {
    let total = stable_sum(pairs.iter().map(|p| p.1));
    if total <= 0.0 {
        return None;
    }
    let n = pairs.len() as f64;
    let mean = stable_sum(pairs.iter().map(|p| p.0)) / total;
    let cbar = total / n;
    let var = stable_sum(pairs.iter().map(|&(s, c)| {
        let e = (s - mean * c) / cbar;
        e * e
    })) / (n - 1.0).max(1.0);
    Some(Stat {
        mean,
        std_error: (var / n).sqrt(),
        samples: total as usize,
    })
}

fn add(acc: &mut (f64, f64), v: f64) {
    acc.0 += v;
    acc.1 += 1.0;
}

fn run_drop(config: &NetworkConfig, window: &Window, opts: &SimOptions, index: usize) -> Result<DropTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let mut drop = sample_drop(config, window, &mut rng)?;
    associate(&mut drop, config);
    schedule(&mut drop, config, &mut rng);

    let mut tally = DropTally {
        scheduled: drop.scheduled.len(),
        ..Default::default()
    };
    // stratified subsample of scheduled users per tier
    let mut total = 0.0;
    for t in Tier::ALL {
        let users: Vec<usize> = drop
            .scheduled
            .iter()
            .copied()
            .filter(|&u| drop.serving[u].is_some_and(|s| s.tier == t))
            .collect();
        if users.is_empty() {
            continue;
        }
        let picked: Vec<usize> = if opts.ase_probes == 0 || users.len() <= opts.ase_probes {
            users.clone()
        } else {
            let mut idx = sample(&mut rng, users.len(), opts.ase_probes).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| users[i]).collect()
        };
        let rates = rates_for_users(&drop, config, &picked, &mut rng);
        let scale = users.len() as f64 / picked.len() as f64;
        total += scale * stable_sum(rates.iter().map(|r| r.rate));
    }
    tally.ase = total / window.area();

    if opts.class_probes > 0 {
        for r in probe_rates(&drop, config, opts.class_probes, &mut rng) {
            match (r.tier, r.hit) {
                (Tier::Macro, hit) => {
                    add(&mut tally.macro_users, r.rate);
                    match hit {
                        Some(true) => add(&mut tally.macro_hit, r.rate),
                        Some(false) => add(&mut tally.miss, r.rate),
                        None => {}
                    }
                }
                (Tier::Small, _) => add(&mut tally.small_users, r.rate),
            }
        }
    }
    for t in Tier::ALL {
        let a = &drop.active[t.index()];
        tally.active[t.index()] = (a.iter().filter(|&&x| x).count() as f64, a.len() as f64);
    }
    tally.macro_assoc = (
        drop.users_on(Tier::Macro) as f64,
        drop.serving.iter().flatten().count() as f64,
    );
    Ok(tally)
}

/// Simulate `opts.drops` independent drops in parallel.
pub fn estimate(config: &NetworkConfig, opts: &SimOptions) -> Result<SimEstimate> {
    if opts.drops < 2 {
        return Err(Error::Simulation("need at least 2 drops".into()));
    }
    let window = Window::for_config(config, opts.expected_macros)?;
    let tallies: Vec<DropTally> = (0..opts.drops)
        .into_par_iter()
        .map(|d| run_drop(config, &window, opts, d))
        .collect::<Result<_>>()?;
    if tallies.iter().all(|t| t.scheduled == 0) {
        return Err(Error::Simulation("no user was scheduled in any drop".into()));
    }
    let pairs = |f: fn(&DropTally) -> (f64, f64)| tallies.iter().map(f).collect::<Vec<_>>();
    let ase: Vec<f64> = tallies.iter().map(|t| t.ase).collect();
    Ok(SimEstimate {
        mode: config.mode,
        ase: mean_stat(&ase),
        rates: ClassRates {
            macro_users: ratio_stat(&pairs(|t| t.macro_users)),
            small_users: ratio_stat(&pairs(|t| t.small_users)),
            macro_hit: ratio_stat(&pairs(|t| t.macro_hit)),
            miss: ratio_stat(&pairs(|t| t.miss)),
        },
        active_fraction: [ratio_stat(&pairs(|t| t.active[0])), ratio_stat(&pairs(|t| t.active[1]))],
        macro_association: ratio_stat(&pairs(|t| t.macro_assoc)),
        drops: opts.drops,
        seed: opts.seed,
    })
}

/// RNG used for drop `index` of a run seeded with `seed`.
pub fn drop_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Expected number of points of density `density` in `window`.
pub fn expected_count(density: f64, window: &Window) -> f64 {
    density * window.area()
}
