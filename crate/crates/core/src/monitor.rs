use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

/// Hook through which long-running trainers report progress and learn about
/// cancellation. Checked between units of work (epochs, generations, folds).
pub trait Monitor: Sync {
    fn cancelled(&self) -> bool {
        false
    }

    /// Fraction of the current unit of work completed, in `[0, 1]`.
    fn progress(&self, _fraction: f64) {}
}

/// Monitor that never cancels and drops progress.
pub struct Silent;

impl Monitor for Silent {}

#[derive(Clone, Debug, Default)]
pub struct CancelFlag(Arc<AtomicBool>);

impl CancelFlag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

impl Monitor for CancelFlag {
    fn cancelled(&self) -> bool {
        self.is_cancelled()
    }
}

/// Maps a sub-task's progress into the slice `[start, start + width]` of a
/// parent monitor.
pub(crate) struct Scaled<'a> {
    pub parent: &'a dyn Monitor,
    pub start: f64,
    pub width: f64,
}

impl Monitor for Scaled<'_> {
    fn cancelled(&self) -> bool {
        self.parent.cancelled()
    }

    fn progress(&self, fraction: f64) {
        self.parent.progress(self.start + self.width * fraction.clamp(0.0, 1.0));
    }
}

/// Forwards cancellation but drops progress; for work running concurrently
/// whose progress is reported by the caller.
pub(crate) struct CancelOnly<'a>(pub &'a dyn Monitor);

impl Monitor for CancelOnly<'_> {
    fn cancelled(&self) -> bool {
        self.0.cancelled()
    }
}
