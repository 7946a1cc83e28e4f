//! Fact-checking briefs for claims: passage, entity and question-answering
//! briefs, a dataset toolkit with annotation validation, evaluation metrics,
//! and a study workbench for timed human fact checks.

pub mod backend_stub;
pub mod claim;
pub mod corpus;
pub mod dataset;
pub mod entity;
pub mod index;
pub mod metrics;
pub mod qabrief;
pub mod retrieval;
pub mod search;
pub mod text;
pub mod workbench;

pub use claim::{Claim, Difficulty, Label, LabelMap};
pub use corpus::{ingest_corpus, segment, Corpus, CorpusError, CorpusStats, Document, Passage};
pub use dataset::stats::{compute_stats, Stats};
pub use dataset::validate::{validate_answer, Profile, Rule, ValidationReport, Violation};
pub use dataset::workflow::{advance_workflow, WorkflowEvent, WorkflowState};
pub use dataset::{validate_questions, validate_record, ClaimRecord, Dataset, DatasetError, Split};
pub use entity::{generate_entity_brief, AliasTable, EntityBrief, EntityEntry, EntityMention};
pub use index::{Index, IndexError};
pub use metrics::{bleu, token_f1, EvalPair, OutcomeRecord};
pub use qabrief::{Answer, AnswerType, QaBrief, QaBriefer, QaPair, QgMode, Question};
pub use retrieval::{generate_passage_brief, Bm25Params, Bm25Retriever, PassageBrief, Retriever};
pub use search::{Blocklist, SearchProxy, SearchResult};
pub use workbench::{Condition, Session, StudyPlan, Workbench};
