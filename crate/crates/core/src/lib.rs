//! A small language for describing program constructs, their concrete
//! syntax, and bug-fixing patterns over them, with an engine that matches,
//! fixes, reverses and seeds those patterns on program trees.

pub mod catalog;
pub mod cli;
pub mod engine;
pub mod registry;
pub mod spec_lang;
pub mod tree;
