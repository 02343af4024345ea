//! `extract-graph`: run the OIE chain over a dataset and dump per-document
//! graphs, causal masks, and linearized graph text.

use anyhow::Result;
use causal_attn::corpus::Document;
use causal_attn::oie::{
    build_graph, derive_causal_mask, extract_triplets, linearized_text, resolve_coref_lite,
    write_graph_dump, write_mask_dump, DocFreq,
};
use rayon::prelude::*;
use std::io::Write;

use super::{create_file, finish_file, init_threads, prepare_out_dir, read_dataset, require_path, sanitize_id};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    init_threads(cfg);
    let out = prepare_out_dir(cfg)?;
    let data_path = require_path(&cfg.data, "data")?;
    let dataset = read_dataset(data_path, None, "extract")?;
    // IDF statistics come from the corpus being extracted; training bakes its
    // own statistics into the model bundle instead.
    let stats = DocFreq::build(&dataset);

    let graphs_dir = out.join("graphs");
    let masks_dir = out.join("masks");
    std::fs::create_dir_all(&graphs_dir)?;
    std::fs::create_dir_all(&masks_dir)?;

    let per_doc: Vec<(String, Vec<u8>, Vec<u8>, String, usize, usize)> = dataset
        .documents
        .par_iter()
        .map(|doc: &Document| -> causal_attn::Result<_> {
            let triplets = extract_triplets(doc);
            let clusters = resolve_coref_lite(doc);
            let graph = build_graph(
                doc,
                &triplets,
                &clusters,
                cfg.merge_threshold,
                cfg.dedup_threshold,
                &stats,
            )?;
            let mask = derive_causal_mask(&graph, doc)?;
            let mut graph_dump = Vec::new();
            write_graph_dump(&graph, &mut graph_dump)?;
            let mut mask_dump = Vec::new();
            write_mask_dump(&mask, &mut mask_dump)?;
            let text = linearized_text(&graph);
            Ok((doc.doc_id.clone(), graph_dump, mask_dump, text, graph.nodes.len(), graph.edges.len()))
        })
        .collect::<causal_attn::Result<_>>()?;

    let mut linearized = create_file(&out.join("linearized.tsv"))?;
    let mut total_nodes = 0usize;
    let mut total_edges = 0usize;
    for (doc_id, graph_dump, mask_dump, text, nodes, edges) in &per_doc {
        let stem = sanitize_id(doc_id);
        std::fs::write(graphs_dir.join(format!("{stem}.txt")), graph_dump)?;
        std::fs::write(masks_dir.join(format!("{stem}.txt")), mask_dump)?;
        writeln!(linearized, "{doc_id}\t{text}")?;
        total_nodes += nodes;
        total_edges += edges;
    }
    finish_file(linearized)?;

    println!(
        "extracted {} docs → {} nodes, {} edges; dumps in {}",
        per_doc.len(),
        total_nodes,
        total_edges,
        out.display()
    );
    Ok(())
}
