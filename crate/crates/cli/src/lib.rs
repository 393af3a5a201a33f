//! File formats, demo generation and the command implementations behind the
//! `propsim` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod demo;
pub mod formats;
