use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::MeasurementEvent;

#[derive(Debug, PartialEq)]
struct Head {
    t: f64,
    priority: u8,
    stream: usize,
}

impl Eq for Head {}

impl Ord for Head {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.priority.cmp(&other.priority))
            .then(self.stream.cmp(&other.stream))
    }
}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// K-way merge of individually ordered streams.
///
/// Output order is `(t, priority)` with IMU < detection < width on ties; remaining ties
/// keep input order (lower stream index first, then position within the stream), so the
/// result equals a stable sort of the concatenated inputs. Each event's `source` is set
/// to the index of the stream it came from.
pub fn merge_streams(streams: Vec<Vec<MeasurementEvent>>) -> Vec<MeasurementEvent> {
    let total = streams.iter().map(Vec::len).sum();
    let mut iters: Vec<_> = streams.into_iter().map(|s| s.into_iter().peekable()).collect();
    let mut heap = BinaryHeap::with_capacity(iters.len());
    for (i, it) in iters.iter_mut().enumerate() {
        if let Some(e) = it.peek() {
            heap.push(Reverse(head(e, i)));
        }
    }
    let mut out = Vec::with_capacity(total);
    while let Some(Reverse(h)) = heap.pop() {
        let it = &mut iters[h.stream];
        let mut event = it.next().expect("heap entry implies a pending event");
        event.source = h.stream;
        out.push(event);
        if let Some(next) = it.peek() {
            heap.push(Reverse(head(next, h.stream)));
        }
    }
    out
}

fn head(e: &MeasurementEvent, stream: usize) -> Head {
    Head {
        t: e.t(),
        priority: e.measurement.priority(),
        stream,
    }
}
