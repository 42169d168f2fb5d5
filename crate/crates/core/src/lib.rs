pub mod contract;
pub mod harness;
pub mod instrument;
pub mod lexer;
pub mod binder;
pub mod spec_lang;
pub mod vm;
