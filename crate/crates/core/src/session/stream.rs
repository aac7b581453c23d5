//! Sequenced server-push feeds with a replay buffer.
//!
//! Every event gets a per-feed sequence number starting at 1. A consumer
//! subscribes with the last sequence it saw and receives the backlog followed
//! by live events. Live delivery goes through a bounded channel; a consumer
//! that falls `capacity` events behind is dropped and has to resubscribe.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use tokio::sync::mpsc::{self, error::TryRecvError, error::TrySendError};

use crate::aggregation::AggregatedEvent;
use crate::model::{AnonUserId, ReactionType, Timestamp};
use crate::moderation::ModerationVerdict;
use crate::session::record::ModerationEvent;

pub const DEFAULT_STREAM_BUFFER: usize = 1024;
pub const KEEPALIVE_SECS: u64 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamRole {
    Presenter,
    Researcher,
}

impl std::str::FromStr for StreamRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "presenter" => Ok(StreamRole::Presenter),
            "researcher" => Ok(StreamRole::Researcher),
            other => Err(format!("unknown stream role {other:?}")),
        }
    }
}

/// Accepted submission as seen on the researcher feed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionNotice {
    pub user: AnonUserId,
    pub kind: ReactionType,
    pub at: Timestamp,
    pub verdict: ModerationVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", content = "data", rename_all = "snake_case")]
pub enum StreamPayload {
    Aggregated(AggregatedEvent),
    Reaction(ReactionNotice),
    Moderation(ModerationEvent),
    /// Terminal marker; nothing follows it.
    End { ended_at: Timestamp },
}

impl StreamPayload {
    pub fn event_name(&self) -> &'static str {
        match self {
            StreamPayload::Aggregated(_) => "aggregated",
            StreamPayload::Reaction(_) => "reaction",
            StreamPayload::Moderation(_) => "moderation",
            StreamPayload::End { .. } => "end",
        }
    }

    /// JSON of the inner data only, as carried in an event-stream `data:` line.
    pub fn data_json(&self) -> String {
        let result = match self {
            StreamPayload::Aggregated(e) => serde_json::to_string(e),
            StreamPayload::Reaction(n) => serde_json::to_string(n),
            StreamPayload::Moderation(m) => serde_json::to_string(m),
            StreamPayload::End { ended_at } => {
                serde_json::to_string(&serde_json::json!({ "ended_at": ended_at }))
            }
        };
        result.expect("stream payloads serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub payload: StreamPayload,
}

impl StreamEvent {
    pub fn is_end(&self) -> bool {
        matches!(self.payload, StreamPayload::End { .. })
    }

    /// One frame of the text event-stream protocol.
    pub fn to_sse_frame(&self) -> String {
        format!(
            "id: {}\nevent: {}\ndata: {}\n\n",
            self.seq,
            self.payload.event_name(),
            self.payload.data_json()
        )
    }
}

/// One feed (presenter or researcher) of one session.
#[derive(Debug)]
pub struct StreamHub {
    history: Vec<StreamEvent>,
    subscribers: Vec<mpsc::Sender<StreamEvent>>,
    capacity: usize,
    closed: bool,
}

impl StreamHub {
    pub fn new(capacity: usize) -> Self {
        StreamHub {
            history: Vec::new(),
            subscribers: Vec::new(),
            capacity: capacity.max(1),
            closed: false,
        }
    }

    pub fn last_seq(&self) -> u64 {
        self.history.last().map(|e| e.seq).unwrap_or(0)
    }

    pub fn history(&self) -> &[StreamEvent] {
        &self.history
    }

    pub fn subscriber_count(&self) -> usize {
        self.subscribers.len()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn publish(&mut self, payload: StreamPayload) -> u64 {
        debug_assert!(!self.closed, "publish after close");
        let event = StreamEvent {
            seq: self.last_seq() + 1,
            payload,
        };
        let seq = event.seq;
        self.subscribers.retain(|tx| match tx.try_send(event.clone()) {
            Ok(()) => true,
            Err(TrySendError::Full(_)) | Err(TrySendError::Closed(_)) => false,
        });
        self.history.push(event);
        seq
    }

    pub fn subscribe(&mut self, last_seq: u64) -> Subscription {
        let start = usize::try_from(last_seq).unwrap_or(usize::MAX).min(self.history.len());
        let backlog: VecDeque<StreamEvent> = self.history[start..].iter().cloned().collect();
        let rx = if self.closed {
            None
        } else {
            let (tx, rx) = mpsc::channel(self.capacity);
            self.subscribers.push(tx);
            Some(rx)
        };
        Subscription { backlog, rx }
    }

    /// Publish the terminal marker and drop all live senders.
    pub fn close(&mut self, ended_at: Timestamp) {
        if self.closed {
            return;
        }
        self.publish(StreamPayload::End { ended_at });
        self.closed = true;
        self.subscribers.clear();
    }
}

#[derive(Debug, PartialEq)]
pub enum TryNext {
    Event(StreamEvent),
    Empty,
    /// Either the terminal marker was already delivered or this consumer was
    /// dropped for falling behind.
    Disconnected,
}

#[derive(Debug)]
pub struct Subscription {
    backlog: VecDeque<StreamEvent>,
    rx: Option<mpsc::Receiver<StreamEvent>>,
}

impl Subscription {
    pub fn backlog_len(&self) -> usize {
        self.backlog.len()
    }

    pub async fn next(&mut self) -> Option<StreamEvent> {
        if let Some(e) = self.backlog.pop_front() {
            return Some(e);
        }
        self.rx.as_mut()?.recv().await
    }

    pub fn try_next(&mut self) -> TryNext {
        if let Some(e) = self.backlog.pop_front() {
            return TryNext::Event(e);
        }
        match self.rx.as_mut() {
            None => TryNext::Disconnected,
            Some(rx) => match rx.try_recv() {
                Ok(e) => TryNext::Event(e),
                Err(TryRecvError::Empty) => TryNext::Empty,
                Err(TryRecvError::Disconnected) => TryNext::Disconnected,
            },
        }
    }

    /// Blocks the current thread. Must not be called from async code.
    pub fn blocking_next(&mut self) -> Option<StreamEvent> {
        if let Some(e) = self.backlog.pop_front() {
            return Some(e);
        }
        self.rx.as_mut()?.blocking_recv()
    }

    /// Everything currently available without blocking.
    pub fn drain(&mut self) -> Vec<StreamEvent> {
        let mut out = Vec::new();
        while let TryNext::Event(e) = self.try_next() {
            out.push(e);
        }
        out
    }
}
