//! Synthetic oracle corpora, recovery scoring and parameter sweeps.

mod synth;

use std::fmt::Write as _;

pub use synth::{
    align_phi_columns, generate_synthetic, recovery_score, GroundTruth, RecoveryScore, SyntheticCorpus,
    SyntheticParams, SyntheticSpec,
};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::pipeline::{run, RunOutput};

/// Runs the pipeline on a synthetic corpus, with the topic and slice counts
/// taken from the generator so the model matches the ground truth's shape.
pub fn run_synthetic(syn: &SyntheticCorpus, spec: &SyntheticSpec, base: &Config) -> Result<RunOutput> {
    let cfg = Config {
        k: spec.k,
        num_slices: spec.num_slices,
        ..base.clone()
    };
    run(&syn.to_corpus()?, &cfg)
}

/// Scores a finished synthetic run against its generator.
pub fn score_run(out: &RunOutput, syn: &SyntheticCorpus, spec: &SyntheticSpec) -> Result<RecoveryScore> {
    let phi = align_phi_columns(
        &out.outcome.params.phi,
        out.prepared.corpus.vocabulary().terms(),
        &syn.truth.terms,
    );
    recovery_score(&out.outcome.params.a, &phi, &spec.a_true, &spec.phi_true)
}

pub const DIM_SWEEP_HEADER: &str = "embed_dim,coherence,diversity";
pub const SEQLEN_SWEEP_HEADER: &str = "num_slices,perplexity,diversity,coherence,stability";

pub fn dim_row(dim: usize, report: &MetricsReport) -> String {
    format!("{dim},{:.6},{:.6}", report.coherence, report.diversity)
}

pub fn seqlen_row(num_slices: usize, report: &MetricsReport) -> String {
    format!(
        "{num_slices},{:.6},{:.6},{:.6},{:.6}",
        report.perplexity, report.diversity, report.coherence, report.stability
    )
}

fn table(header: &str, rows: &[String]) -> String {
    let mut s = String::new();
    writeln!(s, "{header}").unwrap();
    for r in rows {
        writeln!(s, "{r}").unwrap();
    }
    s
}

/// One synthetic corpus, one full run per embedding dimension, same seed.
pub fn sweep_dim(params: &SyntheticParams, base: &Config, dims: &[usize]) -> Result<String> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let spec = params.build()?;
    let syn = generate_synthetic(&spec)?;
    let rows = dims
        .iter()
        .map(|&d| {
            let cfg = Config { embed_dim: d, ..base.clone() };
            Ok(dim_row(d, &run_synthetic(&syn, &spec, &cfg)?.report))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table(DIM_SWEEP_HEADER, &rows))
}

/// One synthetic corpus per length, generated with that many slices.
pub fn sweep_seqlen(params: &SyntheticParams, base: &Config, lengths: &[usize]) -> Result<String> {
    if lengths.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let rows = lengths
        .iter()
        .map(|&n| {
            let spec = SyntheticParams { num_slices: n, ..params.clone() }.build()?;
            let syn = generate_synthetic(&spec)?;
            Ok(seqlen_row(n, &run_synthetic(&syn, &spec, base)?.report))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table(SEQLEN_SWEEP_HEADER, &rows))
}
