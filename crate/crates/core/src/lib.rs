//! Anonymous live-reaction pipeline.
//!
//! Participants submit typed reactions; the service moderates them, groups
//! same-type reactions into short windows and pushes one event per reaction to
//! the presenter, with a haptic descriptor attached to the first reaction of
//! each window. Analytics and persisted records are derived from the same log.

pub mod aggregation;
pub mod analytics;
pub mod borda;
pub mod error;
pub mod haptics;
pub mod model;
pub mod moderation;
pub mod session;

pub use aggregation::{AggregatedEvent, AggregationEngine, AggregationWindow, Aggregator};
pub use analytics::{AnalyticsConfig, AnalyticsSnapshot};
pub use borda::{borda_count, BordaBallot, BordaResult};
pub use error::{ServiceError, StoreError};
pub use haptics::{haptic_sequence_for, scale_sequence, HapticPulse, HapticSequence, IntensityScaling};
pub use model::{
    generate_session_id, AnonUserId, ParticipantToken, PresenterToken, Reaction, ReactionType, SessionId,
    Timestamp,
};
pub use moderation::{assess, cooldown_remaining, Escalation, ModerationConfig, ModerationVerdict, UserModerationState};
pub use session::clock::{Clock, ManualClock, SystemClock};
pub use session::record::{FileStore, MemoryStore, RecordStore, SessionRecord};
pub use session::stream::{StreamEvent, StreamPayload, StreamRole, Subscription};
pub use session::{ServiceConfig, SessionService, SessionStatus};
