//! Rule-based classification of research papers against the UN
//! Sustainable Development Goals.
//!
//! Each goal owns a set of Boolean sub-queries. A paper's consolidated
//! metadata is normalized once, matched against every sub-query, and each
//! goal is scored as the fraction of its sub-queries that matched. Goals
//! are ranked by that score and the top N are returned together with the
//! ids of the sub-queries that produced them.
//!
//! ```
//! use sdgmap_core::{engine, library, text};
//!
//! let lib = library::parse_native(
//!     "sdg_id\tsubquery_id\tlabel\tquery\n\
//!      1\tpov-1\tpoverty\tpoverty AND (alleviat* OR eradicat*)\n\
//!      4\tedu-1\tschooling\t\"primary school*\" OR teacher*\n",
//!     "demo",
//! )
//! .unwrap();
//! let compiled = library::CompiledLibrary::compile(lib);
//! let doc = text::normalize("Eradicating extreme poverty through cash transfers");
//! let result = engine::rank(&engine::classify(&doc, &compiled), engine::TopN::default());
//! assert_eq!(result.ranked[0].sdg.get(), 1);
//! assert_eq!(result.ranked[0].matched_subqueries, ["pov-1"]);
//! ```

pub mod analytics;
pub mod engine;
pub mod export;
pub mod ingest;
pub mod library;
pub mod query;
pub mod sdg;
pub mod text;

pub use engine::{classify, rank, ClassificationResult, MatchReport, Score, TopN};
pub use library::{load_library, CompiledLibrary, QueryLibrary};
pub use query::{parse_query, QueryAst};
pub use sdg::SdgId;
pub use text::{normalize, NormalizedDoc};
