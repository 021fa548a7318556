pub mod catalog;
pub mod commands;
pub mod formats;
