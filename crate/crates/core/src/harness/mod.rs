//! Plumbing behind the `ictmc` command-line tool: model files, queries and
//! the method comparison table.

pub mod model;
pub mod query;
pub mod table;

pub use model::{load_model, parse_model, serialize_model, ModelError, ModelFile};
pub use query::{
    parse_queries, reports_to_csv, run_batch, run_query, GambleSpec, Horizon, Method, QueryError, QueryReport,
    QuerySpec, RunConfig,
};
pub use table::{reproduce_table, table_to_csv, TableRow};
