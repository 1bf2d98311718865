use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use serde_json::json;

use kge_core::config::{EvalMode, ExperimentConfig};
use kge_core::graph::{degree_priors, load_knowledge_graph, save_split, save_vocabulary, DatasetPaths, LoadOptions, Split};
use kge_core::inference::{evaluate_link_prediction, scorer_registry, CandidateGenerator, Direction, FilterIndex, Query, ScorerContext, TypingCache};
use kge_core::models::ScoringModel;
use kge_core::rng::{stream, streams};
use kge_core::synthetic::{generate, SyntheticConfig};
use kge_core::training::{load_checkpoint, save_checkpoint, KgeTrainer};
use kge_core::typing::{evaluate_typing, load_typing_checkpoint, save_typing_checkpoint, TypingNetwork, TypingTrainer};
use kge_core::KnowledgeGraph;

fn load_graph(cfg: &ExperimentConfig) -> Result<KnowledgeGraph> {
    let Some(dir) = &cfg.dataset else {
        bail!("no dataset configured (set `dataset = DIR` or pass --dataset DIR)");
    };
    let start = Instant::now();
    let kg = load_knowledge_graph(&DatasetPaths::from_dir(dir), LoadOptions { unknown: cfg.unknown })?;
    info!(
        "loaded {} entities, {} relations, {}/{}/{} triples in {:.1}s",
        kg.entity_count(),
        kg.relation_count(),
        kg.train().len(),
        kg.valid().len(),
        kg.test().len(),
        start.elapsed().as_secs_f64()
    );
    Ok(kg)
}

fn prepare_output(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let echo = cfg.write_echo(&cfg.output)?;
    info!("effective config written to {}", echo.display());
    Ok(cfg.output.clone())
}

fn checkpoint_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.checkpoint.clone().unwrap_or_else(|| cfg.output.join("model.ckpt"))
}

fn typing_checkpoint_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.typing_checkpoint.clone().unwrap_or_else(|| cfg.output.join("typing.ckpt"))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn train_kge(cfg: &ExperimentConfig) -> Result<()> {
    let kg = load_graph(cfg)?;
    let out = prepare_output(cfg)?;
    let mut model = ScoringModel::new(&cfg.model_spec(), kg.entity_count(), kg.relation_count(), &mut stream(cfg.seed, streams::INIT))?;
    info!("{} with {} parameters", model.kind(), model.param_count());
    let mut trainer = KgeTrainer::new(&model, cfg.train_config())?;
    let log_path = out.join("train_kge.jsonl");
    let mut log = BufWriter::new(File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    for _ in 0..cfg.epochs {
        let stats = trainer.train_epoch(&mut model, &kg)?;
        let mut line = serde_json::to_value(&stats)?;
        if cfg.eval_every > 0 && stats.epoch % cfg.eval_every == 0 && !kg.valid().is_empty() {
            let report = evaluate_link_prediction(&model.prepare(), &kg, Split::Valid, &cfg.filter_splits, None)?;
            line["valid_mrr"] = json!(report.metrics.mrr);
            line["valid_hits10"] = json!(report.metrics.hits_at(10));
        }
        info!("epoch {} loss {:.5}", stats.epoch, stats.loss);
        writeln!(log, "{line}")?;
    }
    log.flush()?;
    let ckpt = checkpoint_path(cfg);
    save_checkpoint(&model, &ckpt)?;
    info!("checkpoint written to {}", ckpt.display());
    Ok(())
}

pub fn train_typing(cfg: &ExperimentConfig) -> Result<()> {
    let kg = load_graph(cfg)?;
    let out = prepare_output(cfg)?;
    let mut net = TypingNetwork::new(cfg.typing_architecture(kg.relation_count()), &mut stream(cfg.seed, streams::INIT))?;
    let mut trainer = TypingTrainer::new(&net, cfg.typing_train_config())?;
    let log_path = out.join("train_typing.jsonl");
    let mut log = BufWriter::new(File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    for _ in 0..cfg.typing_epochs {
        let stats = trainer.train_epoch(&mut net, &kg)?;
        let mut line = serde_json::to_value(&stats)?;
        if cfg.eval_every > 0 && stats.epoch % cfg.eval_every == 0 && !kg.valid().is_empty() {
            let m = evaluate_typing(&net, &kg, Split::Valid, &cfg.subgraph_config(), cfg.seed)?;
            line["valid_mrr"] = json!(m.mrr);
            line["valid_hits5"] = json!(m.hits_at_5);
        }
        info!("typing epoch {} loss {:.5} ({} skipped)", stats.epoch, stats.loss, stats.skipped);
        writeln!(log, "{line}")?;
    }
    log.flush()?;
    let ckpt = typing_checkpoint_path(cfg);
    save_typing_checkpoint(&net, &ckpt)?;
    info!("typing checkpoint written to {}", ckpt.display());
    Ok(())
}

/// Candidate generator for ftai mode, with the typing cache build time.
fn build_generator<'g>(cfg: &ExperimentConfig, kg: &'g KnowledgeGraph) -> Result<(CandidateGenerator<'g>, f64)> {
    let start = Instant::now();
    let typing = if cfg.candidate_scorer.eq_ignore_ascii_case("degree") {
        None
    } else {
        let path = typing_checkpoint_path(cfg);
        let net = load_typing_checkpoint(&path).with_context(|| format!("loading typing checkpoint {}", path.display()))?;
        Some(Arc::new(TypingCache::build(&net, kg, &cfg.subgraph_config(), cfg.seed)?))
    };
    let ctx = ScorerContext {
        priors: Arc::new(degree_priors(kg, cfg.prior_smoothing).entity),
        typing,
    };
    let scorer = scorer_registry().create(&cfg.candidate_scorer, &ctx)?;
    let generator = CandidateGenerator::new(kg, cfg.candidate_config(), scorer)?;
    Ok((generator, start.elapsed().as_secs_f64() * 1e3))
}

fn load_model(cfg: &ExperimentConfig, kg: &KnowledgeGraph) -> Result<ScoringModel> {
    let path = checkpoint_path(cfg);
    let model = load_checkpoint(&path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if model.entity_count() != kg.entity_count() || model.relation_count() != kg.relation_count() {
        bail!(
            "checkpoint has {}/{} entities/relations but the dataset has {}/{}",
            model.entity_count(),
            model.relation_count(),
            kg.entity_count(),
            kg.relation_count()
        );
    }
    Ok(model)
}

pub fn eval_lp(cfg: &ExperimentConfig) -> Result<()> {
    let kg = load_graph(cfg)?;
    let out = prepare_output(cfg)?;
    let model = load_model(cfg, &kg)?;
    let scorer = model.prepare();
    let (report, setup_ms) = match cfg.mode {
        EvalMode::Full => (evaluate_link_prediction(&scorer, &kg, cfg.eval_split, &cfg.filter_splits, None)?, 0.0),
        EvalMode::Ftai => {
            let (generator, ms) = build_generator(cfg, &kg)?;
            (evaluate_link_prediction(&scorer, &kg, cfg.eval_split, &cfg.filter_splits, Some(&generator))?, ms)
        }
    };
    let m = &report.metrics;
    let doc = json!({
        "mode": m.mode,
        "budget": m.budget,
        "mrr": m.mrr,
        "hits": {"1": m.hits_at(1), "3": m.hits_at(3), "10": m.hits_at(10)},
        "mean_query_ms": m.mean_query_ms,
        "mean_candidates": m.mean_candidates,
        "recall_at_budget": m.recall_at_budget,
        "queries": m.queries,
        "split": cfg.eval_split.name(),
        "candidate_scorer": (cfg.mode == EvalMode::Ftai).then(|| cfg.candidate_scorer.clone()),
        "pool": (cfg.mode == EvalMode::Ftai).then(|| cfg.pool.name()),
        "typing_cache_ms": setup_ms,
    });
    write_json(&out.join("metrics.json"), &doc)?;
    emit(&format!("{}\n", serde_json::to_string(&doc)?))
}

pub fn eval_typing(cfg: &ExperimentConfig) -> Result<()> {
    let kg = load_graph(cfg)?;
    let out = prepare_output(cfg)?;
    let path = typing_checkpoint_path(cfg);
    let net = load_typing_checkpoint(&path).with_context(|| format!("loading typing checkpoint {}", path.display()))?;
    let m = evaluate_typing(&net, &kg, cfg.eval_split, &cfg.subgraph_config(), cfg.seed)?;
    let doc = json!({
        "split": cfg.eval_split.name(),
        "mrr": m.mrr,
        "hits": {"1": m.hits_at_1, "5": m.hits_at_5},
        "queries": m.queries,
    });
    write_json(&out.join("typing_metrics.json"), &doc)?;
    emit(&format!("{}\n", serde_json::to_string(&doc)?))
}

pub fn infer(cfg: &ExperimentConfig, queries: &Path, top: usize) -> Result<()> {
    let kg = load_graph(cfg)?;
    let out = prepare_output(cfg)?;
    let model = load_model(cfg, &kg)?;
    let scorer = model.prepare();
    let generator = match cfg.mode {
        EvalMode::Ftai => Some(build_generator(cfg, &kg)?.0),
        EvalMode::Full => None,
    };
    let filter = FilterIndex::build(&kg, &cfg.filter_splits);
    let r = kg.relation_count() as u32;
    let reader = BufReader::new(File::open(queries).with_context(|| format!("opening {}", queries.display()))?);
    let answers_path = out.join("answers.jsonl");
    let mut w = BufWriter::new(File::create(&answers_path)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            bail!("{}:{}: expected entity<TAB>relation<TAB>direction", queries.display(), i + 1);
        }
        let known = kg
            .entities()
            .get(fields[0])
            .with_context(|| format!("{}:{}: unknown entity {:?}", queries.display(), i + 1, fields[0]))?;
        let relation = kg
            .relations()
            .get(fields[1])
            .with_context(|| format!("{}:{}: unknown relation {:?}", queries.display(), i + 1, fields[1]))?;
        let direction: Direction = fields[2].parse()?;
        let query = Query { known, relation, direction };
        let start = Instant::now();
        let pool: Vec<u32> = match &generator {
            Some(g) => g.generate(&query)?.candidates,
            None => (0..kg.entity_count() as u32).collect(),
        };
        let known_true = filter.answers(&query, r);
        let mut scored: Vec<(f64, u32)> = pool
            .into_iter()
            .filter(|e| known_true.binary_search(e).is_err())
            .map(|e| {
                let t = query.triple(e);
                (scorer.score(t.head, t.relation, t.tail), e)
            })
            .collect();
        scored.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(top);
        let answers: Vec<_> = scored
            .iter()
            .map(|(s, e)| json!({"entity": kg.entities().label(*e), "score": s}))
            .collect();
        let doc = json!({
            "entity": fields[0],
            "relation": fields[1],
            "direction": if direction == Direction::Tail { "tail" } else { "head" },
            "answers": answers,
            "ms": start.elapsed().as_secs_f64() * 1e3,
        });
        writeln!(w, "{doc}")?;
    }
    w.flush()?;
    info!("answers written to {}", answers_path.display());
    Ok(())
}

pub fn stats(cfg: &ExperimentConfig) -> Result<()> {
    let kg = load_graph(cfg)?;
    let out = prepare_output(cfg)?;
    let hist: Vec<_> = kg
        .degree_histogram()
        .into_iter()
        .map(|(lo, hi, n)| json!({"min_degree": lo, "max_degree": hi, "entities": n}))
        .collect();
    let doc = json!({
        "entities": kg.entity_count(),
        "relations": kg.relation_count(),
        "train": kg.train().len(),
        "valid": kg.valid().len(),
        "test": kg.test().len(),
        "duplicates_removed": kg.duplicates_removed(),
        "degree_histogram": hist,
    });
    write_json(&out.join("stats.json"), &doc)?;
    let mut text = format!(
        "entities   {}\nrelations  {}\ntrain      {}\nvalid      {}\ntest       {}\ndegree histogram:\n",
        kg.entity_count(),
        kg.relation_count(),
        kg.train().len(),
        kg.valid().len(),
        kg.test().len()
    );
    for (lo, hi, n) in kg.degree_histogram() {
        text.push_str(&format!("  [{lo:>6}, {hi:>6}]  {n}\n"));
    }
    emit(&text)
}

/// Writes to stdout. A closed pipe (`kge stats | head`) is not an error:
/// the artifacts are already on disk.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn synth(cfg: &ExperimentConfig, entities: usize, relations: usize) -> Result<()> {
    let syn = generate(&SyntheticConfig {
        entities,
        relations,
        seed: cfg.seed,
        ..SyntheticConfig::default()
    })?;
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let kg = &syn.graph;
    save_split(kg, kg.train(), &dir.join("train.txt"))?;
    save_split(kg, kg.valid(), &dir.join("valid.txt"))?;
    save_split(kg, kg.test(), &dir.join("test.txt"))?;
    save_vocabulary(kg.entities(), &dir.join("entities.dict"))?;
    save_vocabulary(kg.relations(), &dir.join("relations.dict"))?;
    info!("synthetic dataset with {} train triples written to {}", kg.train().len(), dir.display());
    Ok(())
}
