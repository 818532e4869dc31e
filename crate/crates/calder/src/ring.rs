//! Lock-less single-producer single-consumer ring channels with deferred
//! counter publication.
//!
//! Each channel carries two monotonically nondecreasing published counters:
//! total tokens ever written and total tokens ever consumed. Handles work
//! against private copies: the producer appends tokens and the consumer pops
//! them without touching the shared counters; new tokens and freed slots
//! become visible to the other side only when the owning thread calls
//! `publish`, which is how the scheduler realizes "threads only see newly
//! written or freed tokens after the publication step".
//!
//! Safety contract: the producer writes slot `w mod cap` only while
//! `w - published_read < cap`, and the consumer reads slot `r mod cap` only
//! while `r < published_write`; token stores are plain writes ordered before
//! the Release store of the counter, and the opposite side reads the counter
//! with Acquire before touching the slot.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

#[repr(align(64))]
struct PaddedCounter(AtomicU64);

/// Shared channel storage. Token slots are `i64` wire values.
pub struct RingChannel {
    buf: Box<[UnsafeCell<i64>]>,
    cap: usize,
    /// Published count of tokens ever written.
    write: PaddedCounter,
    /// Published count of tokens ever consumed (slots freed).
    read: PaddedCounter,
}

// Slots are only written by the unique producer while unreachable by the
// consumer per the counter protocol above.
unsafe impl Sync for RingChannel {}
unsafe impl Send for RingChannel {}

impl RingChannel {
    pub fn with_capacity(cap: usize) -> Arc<Self> {
        assert!(cap > 0, "channel capacity must be positive");
        let buf: Vec<UnsafeCell<i64>> = (0..cap).map(|_| UnsafeCell::new(0)).collect();
        Arc::new(RingChannel {
            buf: buf.into_boxed_slice(),
            cap,
            write: PaddedCounter(AtomicU64::new(0)),
            read: PaddedCounter(AtomicU64::new(0)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    /// Published occupancy; always within `[0, capacity]`.
    pub fn occupancy_published(&self) -> usize {
        let w = self.write.0.load(Ordering::Acquire);
        let r = self.read.0.load(Ordering::Acquire);
        (w - r) as usize
    }

    pub fn published_write(&self) -> u64 {
        self.write.0.load(Ordering::Acquire)
    }

    pub fn published_read(&self) -> u64 {
        self.read.0.load(Ordering::Acquire)
    }
}

/// Producer endpoint. Owned by exactly one thread at a time.
pub struct Producer {
    ch: Arc<RingChannel>,
    /// Local write counter: includes unpublished appends.
    local_write: u64,
    /// Snapshot of the published read counter from the last refresh.
    cached_read: u64,
    /// Most recently published value of `local_write`.
    published: u64,
    /// Optional capture of every token pushed, in order.
    pub trace: Option<Vec<i64>>,
}

/// Consumer endpoint. Owned by exactly one thread at a time.
pub struct Consumer {
    ch: Arc<RingChannel>,
    local_read: u64,
    cached_write: u64,
    published: u64,
}

/// Create the two endpoints of a channel.
pub fn channel(cap: usize) -> (Producer, Consumer) {
    let ch = RingChannel::with_capacity(cap);
    endpoints(ch)
}

pub fn endpoints(ch: Arc<RingChannel>) -> (Producer, Consumer) {
    (
        Producer {
            ch: Arc::clone(&ch),
            local_write: 0,
            cached_read: 0,
            published: 0,
            trace: None,
        },
        Consumer {
            ch,
            local_read: 0,
            cached_write: 0,
            published: 0,
        },
    )
}

impl Producer {
    /// Pre-fire: snapshot how many slots the consumer has published as free.
    pub fn refresh(&mut self) {
        self.cached_read = self.ch.read.0.load(Ordering::Acquire);
    }

    /// Free slots under the current snapshot (unpublished own writes count
    /// as occupied).
    pub fn space(&self) -> usize {
        self.ch.cap - (self.local_write - self.cached_read) as usize
    }

    /// Append one token. Panics if no space is visible; callers check
    /// `space()` first (the controller tests output-space conditions).
    pub fn push(&mut self, value: i64) {
        assert!(
            self.space() > 0,
            "ring overflow: push without visible space"
        );
        let slot = (self.local_write % self.ch.cap as u64) as usize;
        unsafe { *self.ch.buf[slot].get() = value };
        self.local_write += 1;
        if let Some(t) = &mut self.trace {
            t.push(value);
        }
    }

    /// Publish all local appends. Returns the number of newly visible tokens.
    pub fn publish(&mut self) -> u64 {
        let delta = self.local_write - self.published;
        if delta > 0 {
            debug_assert!(
                self.local_write - self.ch.read.0.load(Ordering::Acquire) <= self.ch.cap as u64,
                "published occupancy would exceed capacity"
            );
            self.ch.write.0.store(self.local_write, Ordering::Release);
            self.published = self.local_write;
        }
        delta
    }

    pub fn total_pushed(&self) -> u64 {
        self.local_write
    }

    pub fn channel(&self) -> &Arc<RingChannel> {
        &self.ch
    }
}

impl Consumer {
    /// Pre-fire: snapshot how many tokens the producer has published.
    pub fn refresh(&mut self) {
        self.cached_write = self.ch.write.0.load(Ordering::Acquire);
    }

    /// Tokens readable under the current snapshot.
    pub fn available(&self) -> usize {
        (self.cached_write - self.local_read) as usize
    }

    /// Read the token at `offset` without consuming.
    pub fn peek(&self, offset: usize) -> i64 {
        assert!(offset < self.available(), "peek past published tokens");
        let slot = ((self.local_read + offset as u64) % self.ch.cap as u64) as usize;
        unsafe { *self.ch.buf[slot].get() }
    }

    /// Consume one token.
    pub fn pop(&mut self) -> i64 {
        let v = self.peek(0);
        self.local_read += 1;
        v
    }

    /// Publish all local consumptions (frees slots for the producer).
    /// Returns the number of newly freed slots.
    pub fn publish(&mut self) -> u64 {
        let delta = self.local_read - self.published;
        if delta > 0 {
            self.ch.read.0.store(self.local_read, Ordering::Release);
            self.published = self.local_read;
        }
        delta
    }

    pub fn total_popped(&self) -> u64 {
        self.local_read
    }

    pub fn channel(&self) -> &Arc<RingChannel> {
        &self.ch
    }
}
