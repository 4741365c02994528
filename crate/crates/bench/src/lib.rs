//! Empty library; this crate exists for its criterion bench targets.
