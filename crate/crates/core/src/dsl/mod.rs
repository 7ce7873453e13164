//! Textual concrete syntax: lexer, parser and canonical printer.
//!
//! ```
//! use lightrocks::dsl;
//!
//! let src = "skill S { start s0; end done; action A { start a; end b; \
//!            exec tool.release() until tool.width >= 0.05; } \
//!            on self.s0 -> A.a; on A.b -> self.done; }";
//! let (file, diags) = dsl::parse(src, "s.lr");
//! assert!(diags.is_empty());
//! let printed = dsl::print(&file);
//! let (again, _) = dsl::parse(&printed, "s.lr");
//! assert_eq!(dsl::print(&again), printed);
//! ```

mod lexer;
mod parser;
mod printer;

pub use parser::{parse, parse_condition, parse_expr};
pub use printer::{condition as print_condition, expr as print_expr, number as print_number, print, print_component, value as print_value};
