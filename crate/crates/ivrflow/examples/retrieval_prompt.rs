//! BM25 retrieval over the knowledge base and the classification prompt
//! built from it.
//!
//! ```bash
//! cargo run --example retrieval_prompt
//! ```

use ivrflow::asr::{Transcript, TranscriptSource};
use ivrflow::nlu::{build_prompt, retrieve};
use ivrflow::synth;

fn main() {
    let config = synth::test_config(8);
    let utterance = format!(
        "менің {} бойынша мәселем бар",
        config.taxonomy.classes()[0].keywords[0]
    );
    let transcript = Transcript::new(&utterance, "kk", TranscriptSource::MockIdentity);

    println!("utterance: {utterance}");
    println!();
    let hits = retrieve(transcript.tokens(), &config.knowledge, config.rag_k);
    println!("top-{} knowledge docs by BM25:", config.rag_k);
    for (doc_id, score) in &hits {
        let doc = config.knowledge.get(doc_id).expect("retrieved doc exists");
        println!("  {score:>7.4}  {doc_id}: {}", doc.text);
    }
    println!();

    let docs: Vec<_> = hits
        .iter()
        .filter_map(|(id, _)| config.knowledge.get(id))
        .collect();
    let prompt = build_prompt(
        &transcript,
        &docs,
        &config.taxonomy,
        &config.prompt_template,
    );
    println!("prompt for the remote classifier:");
    println!("---");
    println!("{prompt}");
    println!("---");
}
