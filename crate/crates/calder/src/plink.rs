//! Partition link: the boundary actor between software partitions and the
//! simulated accelerator.
//!
//! Plink is scheduled like an ordinary actor on the first software thread.
//! Each step it drains host-side channels into boundary buffers, flushes a
//! batch to the device (helper thread) when a buffer fills or its producers
//! have gone quiet, and on kernel completion feeds the returned tokens into
//! host-side consumer channels. It never blocks its scheduler thread: kernel
//! runs execute on the helper and completion is polled.

use std::collections::VecDeque;
use std::sync::mpsc::{Receiver, Sender, TryRecvError};

use serde::{Deserialize, Serialize};

use crate::hwsim::KernelRunStats;
use crate::ring::{Consumer, Producer};

/// Bytes per token on the wire: tokens are 64-bit scalars.
pub const TOKEN_BYTES: u64 = 8;

/// Default boundary buffer capacity: the 1 MiB equivalent in tokens.
pub const DEFAULT_BOUNDARY_TOKENS: usize = (1 << 20) / TOKEN_BYTES as usize;

/// A measured (or synthetic) transfer-time curve: ns as a piecewise-linear
/// function of transfer size in tokens, with `xi(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    /// (size in tokens, ns) points, strictly increasing in size.
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        points.dedup_by(|a, b| a.0 == b.0);
        Curve { points }
    }

    /// Straight line through the origin: `ns_per_token * n`.
    pub fn linear(ns_per_token: f64) -> Self {
        Curve {
            points: vec![(1.0, ns_per_token), (2.0, 2.0 * ns_per_token)],
        }
    }

    /// Evaluate at `n` tokens: interpolates between points, extrapolates the
    /// outermost segments, and anchors `eval(0) = 0`.
    pub fn eval(&self, n: f64) -> f64 {
        if n <= 0.0 || self.points.is_empty() {
            return 0.0;
        }
        if self.points.len() == 1 {
            let (s, v) = self.points[0];
            return v * n / s;
        }
        // find the segment [i, i+1] containing n, clamping to the ends
        let pts = &self.points;
        let seg = if n <= pts[0].0 {
            // anchor through the origin below the first point
            return pts[0].1 * n / pts[0].0;
        } else {
            match pts.iter().position(|&(s, _)| s >= n) {
                Some(i) => i.max(1) - 1,
                None => pts.len() - 2,
            }
        };
        let (x0, y0) = pts[seg];
        let (x1, y1) = pts[seg + 1];
        y0 + (y1 - y0) * (n - x0) / (x1 - x0)
    }

    /// Isotonic regression (pool adjacent violators) over the point values:
    /// the smoothed curve is nondecreasing in size.
    pub fn isotonic(&self) -> Curve {
        let mut vals: Vec<(f64, f64)> = self.points.clone(); // (value, weight-pooled size span)
        let mut blocks: Vec<(f64, f64, Vec<usize>)> = Vec::new(); // (sum, count, members)
        for (i, &(_, y)) in vals.iter().enumerate() {
            blocks.push((y, 1.0, vec![i]));
            while blocks.len() >= 2 {
                let n = blocks.len();
                let mean_last = blocks[n - 1].0 / blocks[n - 1].1;
                let mean_prev = blocks[n - 2].0 / blocks[n - 2].1;
                if mean_prev <= mean_last {
                    break;
                }
                let (s, c, mut m) = blocks.pop().unwrap();
                let (s2, c2, m2) = blocks.pop().unwrap();
                let mut merged = m2;
                merged.append(&mut m);
                blocks.push((s + s2, c + c2, merged));
            }
        }
        for (sum, count, members) in blocks {
            let mean = sum / count;
            for i in members {
                vals[i].1 = mean;
            }
        }
        Curve { points: vals }
    }
}

/// Best-case time to write `n` tokens over boundary buffers of capacity `b`
/// tokens: one transfer when the batch fits, else full-buffer transfers plus
/// a remainder, with `xi(0) = 0`.
pub fn transfer_time_write(n: u64, b: u64, xi_w: &Curve) -> f64 {
    debug_assert!(b >= 1);
    if n <= b {
        xi_w.eval(n as f64)
    } else {
        xi_w.eval(b as f64) * (n / b) as f64 + xi_w.eval((n % b) as f64)
    }
}

/// Read-side counterpart of [`transfer_time_write`].
pub fn transfer_time_read(n: u64, b: u64, xi_r: &Curve) -> f64 {
    transfer_time_write(n, b, xi_r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferOp {
    Write,
    Read,
    KernelStart,
}

/// One boundary operation with its cost-model time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferRecord {
    pub op: TransferOp,
    pub connection: String,
    pub tokens: u64,
    pub bytes: u64,
    pub model_ns: f64,
}

/// Batches flowing to the device helper: `(input stage index, tokens)`.
pub struct KernelRequest {
    pub batches: Vec<(usize, Vec<i64>)>,
}

pub struct KernelResponse {
    pub outputs: Vec<(usize, Vec<i64>)>,
    pub stats: Option<KernelRunStats>,
    pub error: Option<String>,
}

struct BoundaryIn {
    key: String,
    consumer: Consumer,
    staged: Vec<i64>,
    /// Total tokens ever seen from the producer at the previous step.
    last_seen: u64,
}

struct BoundaryOut {
    key: String,
    producer: Producer,
    outbox: VecDeque<i64>,
}

/// What a plink step did; any true field counts as scheduler progress.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlinkProgress {
    pub moved_tokens: bool,
    pub launched_kernel: bool,
    pub completed_kernel: bool,
}

impl PlinkProgress {
    pub fn any(&self) -> bool {
        self.moved_tokens || self.launched_kernel || self.completed_kernel
    }
}

pub struct PlinkActor {
    ins: Vec<BoundaryIn>,
    outs: Vec<BoundaryOut>,
    capacity: usize,
    to_device: Sender<KernelRequest>,
    from_device: Receiver<KernelResponse>,
    running: bool,
    launched_initial: bool,
    device_autonomous: bool,
    xi_w: Curve,
    xi_r: Curve,
    pub kernel_calls: u64,
    pub transfer_log: Vec<TransferRecord>,
}

impl PlinkActor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ins: Vec<(String, Consumer)>,
        outs: Vec<(String, Producer)>,
        capacity: usize,
        device_autonomous: bool,
        to_device: Sender<KernelRequest>,
        from_device: Receiver<KernelResponse>,
        xi_w: Curve,
        xi_r: Curve,
    ) -> Self {
        PlinkActor {
            ins: ins
                .into_iter()
                .map(|(key, consumer)| BoundaryIn {
                    key,
                    consumer,
                    staged: Vec::new(),
                    last_seen: 0,
                })
                .collect(),
            outs: outs
                .into_iter()
                .map(|(key, producer)| BoundaryOut {
                    key,
                    producer,
                    outbox: VecDeque::new(),
                })
                .collect(),
            capacity: capacity.max(1),
            to_device,
            from_device,
            running: false,
            launched_initial: false,
            device_autonomous,
            xi_w,
            xi_r,
            kernel_calls: 0,
            transfer_log: Vec::new(),
        }
    }

    /// Pre-fire refresh of every boundary endpoint.
    pub fn refresh(&mut self) {
        for b in &mut self.ins {
            b.consumer.refresh();
        }
        for b in &mut self.outs {
            b.producer.refresh();
        }
    }

    /// Publish every boundary endpoint; returns newly visible tokens + frees.
    pub fn publish(&mut self) -> u64 {
        let mut delta = 0;
        for b in &mut self.ins {
            delta += b.consumer.publish();
        }
        for b in &mut self.outs {
            delta += b.producer.publish();
        }
        delta
    }

    pub fn kernel_in_flight(&self) -> bool {
        self.running
    }

    /// Tokens currently held inside plink (staged batches plus undelivered
    /// outputs); nonzero means the boundary is not drained.
    pub fn held_tokens(&self) -> u64 {
        let staged: usize = self.ins.iter().map(|b| b.staged.len()).sum();
        let boxed: usize = self.outs.iter().map(|b| b.outbox.len()).sum();
        (staged + boxed) as u64
    }

    pub fn held_for(&self, key: &str) -> u64 {
        let staged: usize = self
            .ins
            .iter()
            .filter(|b| b.key == key)
            .map(|b| b.staged.len())
            .sum();
        let boxed: usize = self
            .outs
            .iter()
            .filter(|b| b.key == key)
            .map(|b| b.outbox.len())
            .sum();
        (staged + boxed) as u64
    }

    /// One nonblocking scheduler step.
    pub fn step(&mut self) -> Result<PlinkProgress, String> {
        let mut progress = PlinkProgress::default();

        // deliver returned tokens to host-side consumers
        for out in &mut self.outs {
            while !out.outbox.is_empty() && out.producer.space() > 0 {
                let v = out.outbox.pop_front().unwrap();
                out.producer.push(v);
                progress.moved_tokens = true;
            }
        }

        // poll the device
        if self.running {
            match self.from_device.try_recv() {
                Ok(resp) => {
                    self.running = false;
                    progress.completed_kernel = true;
                    if let Some(e) = resp.error {
                        return Err(e);
                    }
                    for (idx, tokens) in resp.outputs {
                        if !tokens.is_empty() {
                            let out = &mut self.outs[idx];
                            self.transfer_log.push(TransferRecord {
                                op: TransferOp::Read,
                                connection: out.key.clone(),
                                tokens: tokens.len() as u64,
                                bytes: tokens.len() as u64 * TOKEN_BYTES,
                                model_ns: transfer_time_read(
                                    tokens.len() as u64,
                                    self.capacity as u64,
                                    &self.xi_r,
                                ),
                            });
                            out.outbox.extend(tokens);
                            progress.moved_tokens = true;
                        }
                    }
                }
                Err(TryRecvError::Empty) => {}
                Err(TryRecvError::Disconnected) => {
                    return Err("device helper thread terminated unexpectedly".into());
                }
            }
        }

        // drain host producers into boundary buffers
        let mut arrivals_since_last = false;
        for b in &mut self.ins {
            while b.staged.len() < self.capacity && b.consumer.available() > 0 {
                b.staged.push(b.consumer.pop());
                progress.moved_tokens = true;
            }
            let total_seen = b.consumer.total_popped() + b.consumer.available() as u64;
            if total_seen != b.last_seen {
                arrivals_since_last = true;
                b.last_seen = total_seen;
            }
        }

        // flush policy: a full buffer, quiet producers with data pending, or
        // the one-time initial start for devices with autonomous actors
        if !self.running {
            let any_staged = self.ins.iter().any(|b| !b.staged.is_empty());
            let any_full = self.ins.iter().any(|b| b.staged.len() >= self.capacity);
            let must_initial = self.device_autonomous && !self.launched_initial;
            if must_initial || any_full || (any_staged && !arrivals_since_last) {
                let mut batches = Vec::new();
                for (idx, b) in self.ins.iter_mut().enumerate() {
                    if b.staged.is_empty() {
                        continue;
                    }
                    let tokens = std::mem::take(&mut b.staged);
                    self.transfer_log.push(TransferRecord {
                        op: TransferOp::Write,
                        connection: b.key.clone(),
                        tokens: tokens.len() as u64,
                        bytes: tokens.len() as u64 * TOKEN_BYTES,
                        model_ns: transfer_time_write(
                            tokens.len() as u64,
                            self.capacity as u64,
                            &self.xi_w,
                        ),
                    });
                    batches.push((idx, tokens));
                }
                self.transfer_log.push(TransferRecord {
                    op: TransferOp::KernelStart,
                    connection: String::new(),
                    tokens: 0,
                    bytes: 0,
                    model_ns: 0.0,
                });
                self.to_device
                    .send(KernelRequest { batches })
                    .map_err(|_| "device helper thread gone before kernel start".to_string())?;
                self.running = true;
                self.launched_initial = true;
                self.kernel_calls += 1;
                progress.launched_kernel = true;
            }
        }

        Ok(progress)
    }

    /// Consumer-side totals per connection, for run accounting.
    pub fn consumer_totals(&self) -> Vec<(String, u64)> {
        self.ins
            .iter()
            .map(|b| (b.key.clone(), b.consumer.total_popped()))
            .collect()
    }

    pub fn producer_totals(&self) -> Vec<(String, u64)> {
        self.outs
            .iter()
            .map(|b| (b.key.clone(), b.producer.total_pushed()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_curve(pairs: &[(f64, f64)]) -> Curve {
        Curve::new(pairs.to_vec())
    }

    #[test]
    fn tau_write_matches_hand_computed_values() {
        let xi = Curve::linear(10.0); // xi(k) = 10k
        assert_eq!(transfer_time_write(3, 4, &xi), 30.0);
        assert_eq!(transfer_time_write(10, 4, &xi), 100.0); // 40*2 + 20
        assert_eq!(transfer_time_write(8, 4, &xi), 80.0); // zero remainder
        assert_eq!(transfer_time_write(0, 4, &xi), 0.0);
    }

    #[test]
    fn tau_read_matches_hand_computed_values() {
        // xi(k) = k^2 via explicit points (piecewise linear through them)
        let xi = step_curve(&[(1.0, 1.0), (2.0, 4.0), (3.0, 9.0), (4.0, 16.0), (5.0, 25.0)]);
        assert_eq!(transfer_time_read(0, 5, &xi), 0.0);
        assert_eq!(transfer_time_read(5, 5, &xi), 25.0);
        assert_eq!(transfer_time_read(7, 3, &xi), 9.0 * 2.0 + 1.0);
    }

    #[test]
    fn tau_monotone_in_n_for_nondecreasing_xi() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        for _ in 0..200 {
            let b = rng.gen_range(1u64..50);
            let mut y = 0.0f64;
            let points: Vec<(f64, f64)> = (1..=b)
                .map(|s| {
                    y += rng.gen_range(0.0..10.0);
                    (s as f64, y)
                })
                .collect();
            let xi = Curve::new(points);
            let mut prev = 0.0;
            for n in 0..(3 * b) {
                let t = transfer_time_write(n, b, &xi);
                assert!(
                    t + 1e-9 >= prev,
                    "tau must be nondecreasing: tau({n},{b}) = {t} < {prev}"
                );
                prev = t;
            }
        }
    }

    #[test]
    fn curve_interpolates_and_extrapolates() {
        let c = step_curve(&[(2.0, 20.0), (4.0, 40.0)]);
        assert_eq!(c.eval(0.0), 0.0);
        assert_eq!(c.eval(1.0), 10.0); // anchored through origin
        assert_eq!(c.eval(3.0), 30.0);
        assert_eq!(c.eval(8.0), 80.0); // extrapolation
    }

    #[test]
    fn isotonic_smoothing_is_monotone() {
        let c = step_curve(&[(1.0, 5.0), (2.0, 3.0), (3.0, 8.0), (4.0, 7.0), (5.0, 9.0)]);
        let s = c.isotonic();
        for w in s.points.windows(2) {
            assert!(w[0].1 <= w[1].1 + 1e-12);
        }
        // means preserved within pooled blocks
        assert_eq!(s.points[0].1, 4.0);
        assert_eq!(s.points[1].1, 4.0);
    }
}
