//! Run metrics and their CSV forms.

use std::io::Write;

use serde::Serialize;

use super::{Policy, SimState, TaskStatus};
use crate::model::{CustomerId, TIME_EPS};

/// Width of a wait-time histogram bin, seconds.
pub const WAIT_BIN_S: f64 = 60.0;

/// Jain's fairness index. All-zero (and empty) vectors count as perfectly fair.
pub fn jain_index(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || sq <= 0.0 {
        return 1.0;
    }
    sum * sum / (x.len() as f64 * sq)
}

/// State of the run at one replanning tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub round: usize,
    pub t_s: f64,
    pub xbar: Vec<f64>,
    pub completed: Vec<usize>,
    pub expired: Vec<usize>,
}

impl SeriesPoint {
    pub fn capture(sim: &SimState, round: usize) -> Self {
        let customers = &sim.trace.customers;
        let k = customers.len();
        let credit = sim.credit_until(sim.clock);
        let minutes = sim.clock / 60.0;
        let xbar = credit
            .iter()
            .map(|&c| if minutes > 0.0 { c as f64 / minutes } else { 0.0 })
            .collect();
        let mut completed = vec![0; k];
        let mut expired = vec![0; k];
        for (id, s) in &sim.status {
            let Some(ci) = customers.iter().position(|c| c == &sim.tasks[id].customer) else { continue };
            match s {
                TaskStatus::Completed => completed[ci] += 1,
                TaskStatus::Expired => expired[ci] += 1,
                _ => {}
            }
        }
        Self {
            round,
            t_s: sim.clock,
            xbar,
            completed,
            expired,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CustomerMetrics {
    pub customer: CustomerId,
    pub xbar: f64,
    pub arrived: usize,
    pub completed: usize,
    pub expired: usize,
    /// Completed credit over arrived credit; zero when nothing arrived.
    pub completion_fraction: f64,
    pub mean_wait_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub policy: Policy,
    pub duration_s: f64,
    pub customers: Vec<CustomerMetrics>,
    pub total_throughput: f64,
    pub jain: f64,
    #[serde(skip)]
    pub series: Vec<SeriesPoint>,
    /// (customer index, wait seconds) for every completed pickup or single task.
    #[serde(skip)]
    pub waits: Vec<(usize, f64)>,
}

impl Metrics {
    pub fn from_sim(policy: Policy, sim: &SimState, series: Vec<SeriesPoint>) -> Self {
        let customers = &sim.trace.customers;
        let k = customers.len();
        let index = |c: &CustomerId| customers.iter().position(|x| x == c);
        let mut arrived = vec![0usize; k];
        let mut arrived_credit = vec![0u64; k];
        for t in sim.arrived_tasks() {
            if let Some(ci) = index(&t.customer) {
                arrived[ci] += 1;
                arrived_credit[ci] += u64::from(t.credit(sim.rides));
            }
        }
        let credit = sim.credit_until(sim.clock);
        let waits: Vec<(usize, f64)> = sim
            .completions()
            .iter()
            .filter(|c| c.has_wait)
            .filter_map(|c| index(&c.customer).map(|ci| (ci, c.service_start_s - c.request_s)))
            .collect();
        let last = series.last().cloned();
        let xbar = last.as_ref().map_or_else(|| vec![0.0; k], |p| p.xbar.clone());
        let per = (0..k)
            .map(|ci| {
                let w: Vec<f64> = waits.iter().filter(|(c, _)| *c == ci).map(|(_, w)| *w).collect();
                CustomerMetrics {
                    customer: customers[ci].clone(),
                    xbar: xbar[ci],
                    arrived: arrived[ci],
                    completed: last.as_ref().map_or(0, |p| p.completed[ci]),
                    expired: last.as_ref().map_or(0, |p| p.expired[ci]),
                    completion_fraction: if arrived_credit[ci] > 0 {
                        credit[ci] as f64 / arrived_credit[ci] as f64
                    } else {
                        0.0
                    },
                    mean_wait_s: (!w.is_empty()).then(|| w.iter().sum::<f64>() / w.len() as f64),
                }
            })
            .collect();
        Self {
            policy,
            duration_s: sim.clock,
            customers: per,
            total_throughput: xbar.iter().sum(),
            jain: jain_index(&xbar),
            series,
            waits,
        }
    }

    pub fn xbar(&self) -> Vec<f64> {
        self.customers.iter().map(|c| c.xbar).collect()
    }
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    round: usize,
    customer: &'a str,
    xbar: f64,
    completed: usize,
    expired: usize,
    jain_total: f64,
}

/// `round,customer,xbar,completed,expired,jain_total`, one row per tick and customer.
pub fn write_metrics_csv(w: impl Write, m: &Metrics) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in &m.series {
        let jain = jain_index(&p.xbar);
        for (ci, c) in m.customers.iter().enumerate() {
            out.serialize(MetricsRow {
                round: p.round,
                customer: c.customer.as_str(),
                xbar: p.xbar[ci],
                completed: p.completed[ci],
                expired: p.expired[ci],
                jain_total: jain,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct WaitRow<'a> {
    customer: &'a str,
    bin_start_s: f64,
    bin_end_s: f64,
    count: usize,
}

/// `customer,bin_start_s,bin_end_s,count` with fixed-width bins from zero to
/// the longest wait.
pub fn write_wait_histogram(w: impl Write, m: &Metrics) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let max = m.waits.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    let bins = if m.waits.is_empty() {
        0
    } else {
        ((max + TIME_EPS) / WAIT_BIN_S).floor() as usize + 1
    };
    for (ci, c) in m.customers.iter().enumerate() {
        let mut counts = vec![0usize; bins];
        for (k, wait) in &m.waits {
            if *k == ci {
                let b = ((wait.max(0.0) + TIME_EPS) / WAIT_BIN_S).floor() as usize;
                counts[b.min(bins - 1)] += 1;
            }
        }
        for (b, n) in counts.into_iter().enumerate() {
            out.serialize(WaitRow {
                customer: c.customer.as_str(),
                bin_start_s: b as f64 * WAIT_BIN_S,
                bin_end_s: (b + 1) as f64 * WAIT_BIN_S,
                count: n,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SeriesRow<'a> {
    t_s: f64,
    customer: &'a str,
    xbar: f64,
}

/// `t_s,customer,xbar` for plotting throughput over time.
pub fn write_xbar_series(w: impl Write, m: &Metrics) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in &m.series {
        for (ci, c) in m.customers.iter().enumerate() {
            out.serialize(SeriesRow {
                t_s: p.t_s,
                customer: c.customer.as_str(),
                xbar: p.xbar[ci],
            })?;
        }
    }
    out.flush()?;
    Ok(())
}
