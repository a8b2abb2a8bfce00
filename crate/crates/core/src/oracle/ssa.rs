use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cme::{EstimateMethod, StationaryEstimate};
use super::OracleError;
use crate::network::ReactionNetwork;
use crate::rational::to_f64;

/// Total propensity above which a step is rejected.
pub const PROPENSITY_LIMIT: f64 = 1e15;
pub const MAX_JUMPS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `times[0] = 0`, then the jump times.
    pub times: Vec<f64>,
    /// `states[i]` holds on `[times[i], times[i + 1])`.
    pub states: Vec<Vec<u64>>,
    /// Reaction fired at each jump.
    pub reactions: Vec<usize>,
    pub seed: u64,
    pub t_end: f64,
}

impl Trajectory {
    pub fn initial_state(&self) -> &[u64] {
        &self.states[0]
    }

    pub fn num_jumps(&self) -> usize {
        self.reactions.len()
    }

    /// Holding intervals `(state, start, end)`, the last one cut at `t_end`.
    pub fn intervals(&self) -> impl Iterator<Item = (&[u64], f64, f64)> + '_ {
        self.states.iter().enumerate().map(move |(i, s)| {
            let end = self.times.get(i + 1).copied().unwrap_or(self.t_end);
            (s.as_slice(), self.times[i], end)
        })
    }
}

/// Direct-method SSA on `[0, t_end]`.
pub fn gillespie_simulate(net: &ReactionNetwork, x0: &[u64], t_end: f64, seed: u64) -> Result<Trajectory, OracleError> {
    if x0.len() != net.dim() {
        return Err(OracleError::InvalidInput(format!("initial state has {} entries, expected {}", x0.len(), net.dim())));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(OracleError::InvalidInput(format!("end time must be positive, got {t_end}")));
    }
    let rates: Vec<f64> = net.reactions().iter().map(|r| to_f64(&r.rate)).collect();
    let changes: Vec<Vec<i64>> = net.reactions().iter().map(|r| r.change()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut traj = Trajectory { times: vec![0.0], states: vec![x.clone()], reactions: Vec::new(), seed, t_end };
    let mut props = vec![0.0; rates.len()];
    loop {
        let mut total = 0.0;
        for (k, p) in props.iter_mut().enumerate() {
            // identity reactions never change the state
            *p = if changes[k].iter().all(|&c| c == 0) { 0.0 } else { net.propensity_f64(k, &x, rates[k]) };
            total += *p;
        }
        if total.is_nan() || total > PROPENSITY_LIMIT {
            return Err(OracleError::PropensityOverflow { time: t, total });
        }
        if total == 0.0 {
            break;
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        let next = t - u.ln() / total;
        if next >= t_end {
            break;
        }
        if next <= t {
            // holding time below float resolution; time cannot advance
            return Err(OracleError::PropensityOverflow { time: t, total });
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, &p) in props.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                chosen = Some(k);
                if target < acc {
                    break;
                }
            }
        }
        let k = chosen.expect("positive total propensity");
        for (i, &c) in changes[k].iter().enumerate() {
            x[i] = x[i].checked_add_signed(c).ok_or(OracleError::CountOverflow(i))?;
        }
        t = next;
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.reactions.push(k);
        if traj.reactions.len() >= MAX_JUMPS {
            return Err(OracleError::JumpLimit(MAX_JUMPS));
        }
    }
    Ok(traj)
}

/// Runs one trajectory per `(x0, seed)` pair on separate threads.
pub fn simulate_replicas(
    net: &ReactionNetwork,
    runs: &[(Vec<u64>, u64)],
    t_end: f64,
) -> Vec<Result<Trajectory, OracleError>> {
    std::thread::scope(|s| {
        let handles: Vec<_> =
            runs.iter().map(|(x0, seed)| s.spawn(move || gillespie_simulate(net, x0, t_end, *seed))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

/// Time-weighted average of `f` over the trajectory.
pub fn time_average(traj: &Trajectory, f: impl Fn(&[u64]) -> f64) -> f64 {
    window_average(traj, &f, 0.0, traj.t_end)
}

fn window_average(traj: &Trajectory, f: &impl Fn(&[u64]) -> f64, lo: f64, hi: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, a, b) in traj.intervals() {
        let w = b.min(hi) - a.max(lo);
        if w > 0.0 {
            num += f(s) * w;
            den += w;
        }
    }
    if den == 0.0 {
        return f(traj.initial_state());
    }
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeans {
    pub mean: f64,
    pub standard_error: f64,
    pub batches: usize,
}

/// Splits `[0, t_end]` into equal windows and reports the mean of the
/// window averages with its standard error.
pub fn batch_means(traj: &Trajectory, f: impl Fn(&[u64]) -> f64, batches: usize) -> BatchMeans {
    let n = batches.max(2);
    let width = traj.t_end / n as f64;
    let means: Vec<f64> =
        (0..n).map(|b| window_average(traj, &f, b as f64 * width, (b + 1) as f64 * width)).collect();
    let mean = means.iter().sum::<f64>() / n as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    BatchMeans { mean, standard_error: (var / n as f64).sqrt(), batches: n }
}

/// Occupation fractions of the visited states.
pub fn time_average_distribution(traj: &Trajectory, species: &[String]) -> StationaryEstimate {
    let mut occupancy: std::collections::BTreeMap<&[u64], f64> = Default::default();
    for (s, a, b) in traj.intervals() {
        *occupancy.entry(s).or_default() += b - a;
    }
    let total: f64 = occupancy.values().sum();
    let (states, probabilities): (Vec<Vec<u64>>, Vec<f64>) =
        occupancy.into_iter().map(|(s, w)| (s.to_vec(), if total > 0.0 { w / total } else { 0.0 })).unzip();
    let sum: f64 = probabilities.iter().sum();
    StationaryEstimate {
        method: EstimateMethod::TimeAverage,
        species: species.to_vec(),
        states,
        probabilities,
        deficit: 1.0 - sum,
        boundary_mass: 0.0,
        residual: None,
        exact: false,
        truncation_too_small: false,
    }
}

/// CSV with header `t,<species...>`, one row per state change.
pub fn write_csv(traj: &Trajectory, species: &[String], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "t,{}", species.join(","))?;
    for (s, t, _) in traj.intervals() {
        let row: Vec<String> = s.iter().map(u64::to_string).collect();
        writeln!(out, "{t},{}", row.join(","))?;
    }
    Ok(())
}
