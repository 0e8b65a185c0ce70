//! Corpus → vocabulary → slices → embeddings → attention pooling → training
//! → metrics, driven by a [`Config`].

use ndarray::Array2;

use crate::config::{Config, ProviderKind};
use crate::corpus::{build_vocabulary, slice_by_time, Corpus, TimeSliceIndex};
use crate::embed::{embed_corpus, EmbeddingMatrix, EmbeddingProvider, LocalEmbedder, RemoteEmbedder};
use crate::error::{Error, Result};
use crate::metrics::{evaluation_report, MetricsReport};
use crate::model::{forward, slice_topic_state, train, Checkpoint, TopicAssignments, TrainOutcome};
use crate::temporal::{attention_weights, temporal_pool};

/// Everything upstream of the trainable parameters.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub corpus: Corpus,
    pub dropped_by_vocabulary: usize,
    pub slices: TimeSliceIndex,
    pub embeddings: EmbeddingMatrix,
    pub pooled: Array2<f64>,
}

pub fn provider_for(cfg: &Config, corpus: &Corpus) -> Result<Box<dyn EmbeddingProvider>> {
    Ok(match cfg.provider {
        ProviderKind::Local => Box::new(LocalEmbedder::new(corpus.vocabulary(), cfg.embed_dim, cfg.embed_seed)?),
        ProviderKind::Remote => Box::new(RemoteEmbedder {
            endpoint: cfg
                .endpoint
                .clone()
                .ok_or_else(|| Error::InvalidArgument("provider = remote needs `endpoint`".into()))?,
            dim: cfg.embed_dim,
            batch_size: cfg.embed_batch_size,
            timeout: cfg.embed_timeout(),
        }),
    })
}

pub fn prepare(corpus: &Corpus, cfg: &Config) -> Result<Prepared> {
    let (corpus, dropped_by_vocabulary) = build_vocabulary(corpus, &cfg.vocab_config())?;
    let slices = slice_by_time(&corpus, cfg.num_slices)?;
    let provider = provider_for(cfg, &corpus)?;
    let embeddings = embed_corpus(&corpus, provider.as_ref(), cfg.embed_batch_size)?;
    let attention = attention_weights(&embeddings, &slices, &cfg.decay_config()?)?;
    let pooled = temporal_pool(&embeddings, &attention)?;
    Ok(Prepared {
        corpus,
        dropped_by_vocabulary,
        slices,
        embeddings,
        pooled,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub outcome: TrainOutcome,
    pub report: MetricsReport,
}

impl RunOutput {
    pub fn checkpoint(&self, cfg: &Config) -> Checkpoint {
        let ts = &self.outcome.assignments.theta_slice;
        Checkpoint {
            params: self.outcome.params.clone(),
            last_state: ts.row(ts.nrows() - 1).to_owned(),
            config_echo: cfg.to_text(),
            vocabulary: self.prepared.corpus.vocabulary().terms().to_vec(),
        }
    }
}

/// Prepares, trains and evaluates on one corpus.
pub fn run(corpus: &Corpus, cfg: &Config) -> Result<RunOutput> {
    let prepared = prepare(corpus, cfg)?;
    let outcome = train(&prepared.corpus, &prepared.pooled, &prepared.slices, &cfg.train_config())?;
    let TopicAssignments {
        theta_doc,
        theta_slice,
    } = &outcome.assignments;
    let report = evaluation_report(&prepared.corpus, theta_doc, theta_slice, &outcome.params.phi)?;
    Ok(RunOutput {
        prepared,
        outcome,
        report,
    })
}

/// Scores a corpus with a saved model, rebuilding the upstream stages from
/// the configuration stored in the checkpoint.
pub fn evaluate_checkpoint(corpus: &Corpus, ckpt: &Checkpoint) -> Result<(MetricsReport, TopicAssignments)> {
    let cfg = Config::parse(&ckpt.config_echo)?;
    let prepared = prepare(corpus, &cfg)?;
    if prepared.corpus.vocabulary().terms() != ckpt.vocabulary.as_slice() {
        return Err(Error::ShapeMismatch(
            "corpus vocabulary differs from the checkpoint's vocabulary".into(),
        ));
    }
    let theta_doc = forward(&prepared.pooled, &ckpt.params)?;
    let theta_slice = slice_topic_state(&theta_doc, &prepared.slices)?;
    let report = evaluation_report(&prepared.corpus, &theta_doc, &theta_slice, &ckpt.params.phi)?;
    Ok((
        report,
        TopicAssignments {
            theta_doc,
            theta_slice,
        },
    ))
}
