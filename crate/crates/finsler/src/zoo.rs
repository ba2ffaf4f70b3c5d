//! Metric catalog (placeholder during bring-up).
