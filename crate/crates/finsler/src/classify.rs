//! Classification scans (placeholder during bring-up).
