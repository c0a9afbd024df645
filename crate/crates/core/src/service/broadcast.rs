//! Fan-out of outbound lines to viewers with bounded per-viewer queues.
//!
//! Each viewer holds at most one pending snapshot; a newer snapshot
//! replaces an undelivered older one. Other messages queue in order up to
//! [`MAX_PENDING_EVENTS`]. Lines are handed out in sequence order, so a
//! viewer never sees a sequence number go backwards.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use super::session::{Audience, Delivery};

pub const MAX_PENDING_EVENTS: usize = 1024;

pub type ViewerId = u64;

#[derive(Debug, Default)]
struct Pending {
    snapshot: Option<(u64, Arc<str>)>,
    events: VecDeque<(u64, Arc<str>)>,
    closed: bool,
    skipped_snapshots: u64,
}

#[derive(Debug, Default)]
pub struct ViewerQueue {
    pending: Mutex<Pending>,
    ready: Condvar,
}

pub enum Next {
    Line(Arc<str>),
    Idle,
    Closed,
}

impl ViewerQueue {
    fn offer(&self, delivery: &Delivery) {
        let mut p = self.pending.lock().expect("viewer queue poisoned");
        if p.closed {
            return;
        }
        let item = (delivery.seq, delivery.line.clone());
        if delivery.kind == "state_snapshot" {
            if p.snapshot.replace(item).is_some() {
                p.skipped_snapshots += 1;
            }
        } else if p.events.len() >= MAX_PENDING_EVENTS {
            // hopelessly behind; drop the connection rather than buffer forever
            p.closed = true;
        } else {
            p.events.push_back(item);
        }
        self.ready.notify_all();
    }

    pub fn close(&self) {
        self.pending.lock().expect("viewer queue poisoned").closed = true;
        self.ready.notify_all();
    }

    pub fn pending_snapshots(&self) -> usize {
        usize::from(self.pending.lock().expect("viewer queue poisoned").snapshot.is_some())
    }

    pub fn skipped_snapshots(&self) -> u64 {
        self.pending.lock().expect("viewer queue poisoned").skipped_snapshots
    }

    /// Removes the lowest-sequence pending line without blocking.
    pub fn try_next(&self) -> Next {
        let mut p = self.pending.lock().expect("viewer queue poisoned");
        Self::pop(&mut p)
    }

    /// Waits up to `timeout` for a line.
    pub fn next_timeout(&self, timeout: Duration) -> Next {
        let mut p = self.pending.lock().expect("viewer queue poisoned");
        if p.snapshot.is_none() && p.events.is_empty() && !p.closed {
            p = self.ready.wait_timeout(p, timeout).expect("viewer queue poisoned").0;
        }
        Self::pop(&mut p)
    }

    fn pop(p: &mut Pending) -> Next {
        let snap_seq = p.snapshot.as_ref().map(|s| s.0);
        let event_seq = p.events.front().map(|e| e.0);
        match (snap_seq, event_seq) {
            (Some(s), Some(e)) if e < s => Next::Line(p.events.pop_front().expect("front exists").1),
            (Some(_), _) => Next::Line(p.snapshot.take().expect("snapshot exists").1),
            (None, Some(_)) => Next::Line(p.events.pop_front().expect("front exists").1),
            (None, None) if p.closed => Next::Closed,
            (None, None) => Next::Idle,
        }
    }
}

#[derive(Debug, Default)]
struct Registry {
    viewers: BTreeMap<ViewerId, Arc<ViewerQueue>>,
    latest_snapshot: Option<Delivery>,
    next_id: ViewerId,
}

/// Shared between the simulation loop and connection handlers.
#[derive(Debug, Default)]
pub struct Broadcaster {
    registry: Mutex<Registry>,
}

impl Broadcaster {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a viewer whose first line is the latest full snapshot.
    pub fn join(&self) -> (ViewerId, Arc<ViewerQueue>) {
        let mut reg = self.registry.lock().expect("registry poisoned");
        let id = reg.next_id;
        reg.next_id += 1;
        let queue = Arc::new(ViewerQueue::default());
        if let Some(snapshot) = &reg.latest_snapshot {
            queue.offer(snapshot);
        }
        reg.viewers.insert(id, queue.clone());
        (id, queue)
    }

    pub fn leave(&self, id: ViewerId) {
        if let Some(q) = self.registry.lock().expect("registry poisoned").viewers.remove(&id) {
            q.close();
        }
    }

    pub fn viewer_count(&self) -> usize {
        self.registry.lock().expect("registry poisoned").viewers.len()
    }

    /// Routes one delivery; `sender` receives `Audience::Sender` messages.
    pub fn publish(&self, delivery: &Delivery, sender: Option<ViewerId>) {
        let mut reg = self.registry.lock().expect("registry poisoned");
        match delivery.audience {
            Audience::Everyone => {
                if delivery.kind == "state_snapshot" {
                    reg.latest_snapshot = Some(delivery.clone());
                }
                for q in reg.viewers.values() {
                    q.offer(delivery);
                }
            }
            Audience::Sender => {
                if let Some(q) = sender.and_then(|id| reg.viewers.get(&id)) {
                    q.offer(delivery);
                }
            }
        }
    }

    pub fn close_all(&self) {
        let reg = self.registry.lock().expect("registry poisoned");
        for q in reg.viewers.values() {
            q.close();
        }
    }
}
