use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use redund_core::allocation::{
    budget_diversity_curve, greedy_allocate, human_hours_saved, perfect_allocate, perfect_order,
    priority_from_scores, random_allocate, random_order, wp_curve, AllocationPlan, DiversityCurve, Strategy, WpMode,
};
use redund_core::diversity::{AnnotationSet, DiversityTable};
use redund_core::eval::{agreement_matrix, emit_report, pr_curve, DiversityRow, ReportFormat};
use redund_core::mask::{encode_rle, read_gray, read_pbm};
use redund_core::scoring::{
    aggregate_votes, feng_unambiguity, label_from_drawings, ordering_to_scores, read_detections, read_label_file,
    read_scores, read_subitizing, sos_priority_order, write_scores, Ambiguity, Expansion, ScoringModel, TrainConfig,
    VOTES_PER_IMAGE,
};
use redund_core::service::{
    annotation_sets, method_scores, read_manifest, write_manifest, AnnotationEntry, ImageRecord, Service,
    ServiceConfig, SystemClock,
};
use redund_core::synth::{annotation_corpus, blob_corpus, write_corpus, AnnotationCorpusConfig, BlobCorpusConfig};
use redund_core::Measure;

use crate::cli::*;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(&a),
        Command::Synth(a) => synth(&a),
        Command::Train(a) => train(&a),
        Command::Score(a) => score(&a),
        Command::Plan(a) => plan(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Curve(a) => curve(&a),
        Command::Serve(a) => serve(&a),
        Command::Report(a) => report(&a),
    }
}

fn manifest_dir(manifest: &Path) -> &Path {
    manifest.parent().unwrap_or(Path::new("."))
}

fn load_manifest(path: &Path) -> Result<Vec<ImageRecord>> {
    read_manifest(path).with_context(|| format!("reading manifest {}", path.display()))
}

fn known_ids(records: &[ImageRecord]) -> BTreeSet<String> {
    records.iter().map(|r| r.image_id.clone()).collect()
}

fn ids(records: &[ImageRecord]) -> Vec<String> {
    records.iter().map(|r| r.image_id.clone()).collect()
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.images)
        .with_context(|| format!("listing {}", a.images.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
        })
        .collect();
    files.sort();
    let base = manifest_dir(&a.out).canonicalize().unwrap_or_else(|_| manifest_dir(&a.out).to_path_buf());
    let mut records = Vec::with_capacity(files.len());
    for f in &files {
        let id = f.file_stem().and_then(|s| s.to_str()).context("non-UTF-8 file name")?;
        let img = read_gray(f).with_context(|| format!("reading {}", f.display()))?;
        let abs = f.canonicalize()?;
        let path = abs.strip_prefix(&base).map(Path::to_path_buf).unwrap_or(abs.clone());
        let mut r = ImageRecord::new(id, img.width, img.height, path);
        r.source = a.source.clone();
        records.push(r);
    }
    if let Some(dir) = &a.masks {
        attach_masks(&mut records, dir)?;
    }
    write_manifest(&records, &a.out)?;
    println!("{} images written to {}", records.len(), a.out.display());
    Ok(())
}

/// Attaches `<image_id>_<k>.pbm` files in `k` order.
fn attach_masks(records: &mut [ImageRecord], dir: &Path) -> Result<()> {
    let mut found: BTreeMap<String, Vec<(usize, PathBuf)>> = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.extension().and_then(|e| e.to_str()) != Some("pbm") {
            continue;
        }
        let stem = p.file_stem().and_then(|s| s.to_str()).context("non-UTF-8 file name")?;
        let (id, k) = stem
            .rsplit_once('_')
            .and_then(|(id, k)| k.parse::<usize>().ok().map(|k| (id.to_string(), k)))
            .with_context(|| format!("mask file {} is not named <image_id>_<k>.pbm", p.display()))?;
        found.entry(id).or_default().push((k, p));
    }
    let index: BTreeMap<String, usize> = records.iter().enumerate().map(|(i, r)| (r.image_id.clone(), i)).collect();
    for (id, mut masks) in found {
        let &i = index.get(&id).with_context(|| format!("masks for unknown image {id}"))?;
        masks.sort();
        for (t, (_, p)) in masks.iter().enumerate() {
            let m = read_pbm(p).with_context(|| format!("reading {}", p.display()))?;
            records[i].annotations.push(AnnotationEntry {
                worker_id: "imported".into(),
                timestamp: t as u64 + 1,
                mask: encode_rle(&m),
            });
        }
        records[i].validate()?;
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let corpus = match a.kind {
        SynthKind::Annotations => {
            let d = AnnotationCorpusConfig::default();
            annotation_corpus(&AnnotationCorpusConfig {
                images: a.images.unwrap_or(d.images),
                ambiguous_fraction: a.ambiguous_fraction.unwrap_or(d.ambiguous_fraction),
                seed: a.seed,
                ..d
            })?
        }
        SynthKind::Blobs => {
            let d = BlobCorpusConfig::default();
            blob_corpus(&BlobCorpusConfig {
                images: a.images.unwrap_or(d.images),
                ambiguous_fraction: a.ambiguous_fraction.unwrap_or(d.ambiguous_fraction),
                seed: a.seed,
                ..d
            })?
        }
    };
    let manifest = write_corpus(&a.out, &corpus)?;
    println!("{} images; manifest {}", corpus.len(), manifest.display());
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrRow {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
    pub average_precision: f64,
}

fn pr_rows(scores: &BTreeMap<String, f64>, labels: &BTreeMap<String, Ambiguity>) -> Result<(f64, Vec<PrRow>)> {
    let c = pr_curve(scores, labels)?;
    let rows = c
        .points
        .iter()
        .map(|p| PrRow {
            threshold: p.threshold,
            recall: p.recall,
            precision: p.precision,
            average_precision: c.average_precision,
        })
        .collect();
    Ok((c.average_precision, rows))
}

fn train(a: &TrainArgs) -> Result<()> {
    if !(a.split > 0.0 && a.split <= 1.0) {
        bail!("--split must be in (0, 1]");
    }
    let records = load_manifest(&a.manifest)?;
    let labels = read_label_file(&a.labels)?;
    let dir = manifest_dir(&a.manifest);
    let labelled: Vec<&ImageRecord> = records.iter().filter(|r| labels.contains_key(&r.image_id)).collect();
    if labelled.len() < labels.len() {
        log::warn!("{} labels refer to images outside the manifest", labels.len() - labelled.len());
    }
    let order = random_order(&labelled.iter().map(|r| r.image_id.clone()).collect::<Vec<_>>(), a.seed);
    let n_train = ((order.len() as f64) * a.split).round() as usize;
    let train_ids: BTreeSet<&String> = order[..n_train].iter().collect();
    let by_id: BTreeMap<&String, &ImageRecord> = labelled.iter().map(|r| (&r.image_id, *r)).collect();

    let load = |id: &String| read_gray(&by_id[id].resolved_path(dir)).with_context(|| format!("reading image {id}"));
    let mut images = Vec::new();
    let mut train_labels = Vec::new();
    for id in &order[..n_train] {
        images.push(load(id)?);
        train_labels.push(labels[id]);
    }
    let config = TrainConfig {
        iterations: a.iterations,
        folds: a.folds,
        seed: a.seed,
        expansion: if a.quadratic { Expansion::Quadratic } else { Expansion::Linear },
        ..Default::default()
    };
    let model = ScoringModel::fit_images(&images, &train_labels, a.pca_dims, &config)?;
    model.save(&a.model)?;
    println!(
        "trained on {} images; lambda {}; model {}",
        n_train,
        model.training.chosen_lambda,
        a.model.display()
    );

    let held_out: Vec<&String> = order.iter().filter(|id| !train_ids.contains(id)).collect();
    if !held_out.is_empty() {
        let mut scores = BTreeMap::new();
        let mut truth = BTreeMap::new();
        for id in held_out {
            scores.insert(id.clone(), model.score_image(&load(id)?)?);
            truth.insert(id.clone(), labels[id]);
        }
        let (ap, rows) = pr_rows(&scores, &truth)?;
        println!("held-out AP {ap:.4} on {} images", scores.len());
        if let Some(path) = &a.report {
            emit_report(&rows, path, ReportFormat::from_path(path))?;
        }
    } else if a.report.is_some() {
        log::warn!("no held-out images; report not written");
    }
    Ok(())
}

fn score(a: &ScoreArgs) -> Result<()> {
    let mut records = load_manifest(&a.manifest)?;
    let known = known_ids(&records);
    let scores: BTreeMap<String, f64> = if let Some(model) = &a.model {
        let model = ScoringModel::load(model)?;
        let dir = manifest_dir(&a.manifest);
        records
            .iter()
            .map(|r| Ok((r.image_id.clone(), model.score_image(&read_gray(&r.resolved_path(dir))?)?)))
            .collect::<Result<_>>()?
    } else if let Some(path) = &a.scores {
        read_scores(path, Some(&known))?
    } else if let Some(path) = &a.detections {
        read_detections(path, Some(&known))?
            .into_iter()
            .map(|(id, w)| Ok((id, feng_unambiguity(&w)?)))
            .collect::<Result<_>>()?
    } else if let Some(path) = &a.subitizing {
        ordering_to_scores(&sos_priority_order(&read_subitizing(path, Some(&known))?)?)
    } else {
        bail!("one of --model, --scores, --detections, --subitizing is required");
    };
    if let Some(missing) = known.iter().find(|id| !scores.contains_key(*id)) {
        bail!("no score for image {missing}");
    }
    if a.out.is_none() && !a.update_manifest {
        bail!("nothing to do: give --out and/or --update-manifest");
    }
    if let Some(out) = &a.out {
        write_scores(&scores, out)?;
    }
    if a.update_manifest {
        for r in &mut records {
            r.scores.insert(a.method.clone(), scores[&r.image_id]);
        }
        write_manifest(&records, &a.manifest)?;
    }
    println!("scored {} images with {}", scores.len(), a.method);
    Ok(())
}

fn load_scores(source: &ScoreSource, records: &[ImageRecord]) -> Result<BTreeMap<String, f64>> {
    let known = known_ids(records);
    if let Some(path) = &source.scores {
        Ok(read_scores(path, Some(&known))?)
    } else if let Some(method) = &source.method {
        Ok(method_scores(records, method)?)
    } else if let Some(path) = &source.subitizing {
        Ok(ordering_to_scores(&sos_priority_order(&read_subitizing(path, Some(&known))?)?))
    } else {
        bail!("scores are required: give --scores, --method or --subitizing")
    }
}

fn sos_scores(source: &ScoreSource, records: &[ImageRecord]) -> Result<BTreeMap<String, f64>> {
    let path = source.subitizing.as_ref().context("the sos strategy needs --subitizing")?;
    let order = sos_priority_order(&read_subitizing(path, Some(&known_ids(records)))?)?;
    Ok(ordering_to_scores(&order))
}

fn table_for(records: &[ImageRecord], extra: usize) -> Result<(BTreeMap<String, AnnotationSet>, DiversityTable)> {
    let sets = annotation_sets(records, 1 + extra)?;
    let table = DiversityTable::from_sets(&sets)?;
    Ok((sets, table))
}

fn wp_mode(strategy: Strategy) -> Option<WpMode> {
    match strategy {
        Strategy::WpBb => Some(WpMode::Bb),
        Strategy::WpSeg => Some(WpMode::Seg),
        _ => None,
    }
}

/// Plan for one of the budget-driven strategies.
fn plan_for(
    strategy: Strategy,
    records: &[ImageRecord],
    source: &ScoreSource,
    table: Option<&DiversityTable>,
    budget: usize,
    extra: usize,
    measure: Measure,
    seed: u64,
) -> Result<AllocationPlan> {
    let batch = ids(records);
    let mut plan = match strategy {
        Strategy::Greedy => greedy_allocate(&batch, &load_scores(source, records)?, budget, extra)?,
        Strategy::StatusQuo => random_allocate(&batch, budget, extra, seed),
        Strategy::Perfect => match table {
            Some(t) => perfect_allocate(t, budget, extra, measure)?,
            None => perfect_allocate(&table_for(records, extra)?.1, budget, extra, measure)?,
        },
        Strategy::Sos => greedy_allocate(&batch, &sos_scores(source, records)?, budget, extra)?,
        Strategy::WpBb | Strategy::WpSeg => {
            bail!("{strategy} is driven by agreement thresholds, not a budget; use `curve`")
        }
    };
    plan.strategy = strategy.as_str().to_string();
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub rank: usize,
    pub image_id: String,
    pub strategy: String,
    pub budget: usize,
    pub extra: usize,
}

fn plan(a: &PlanArgs) -> Result<()> {
    let records = load_manifest(&a.manifest)?;
    let p = plan_for(a.strategy, &records, &a.source, None, a.budget, a.extra, a.measure, a.seed)?;
    let rows: Vec<PlanRow> = p
        .selected
        .iter()
        .enumerate()
        .map(|(i, id)| PlanRow {
            rank: i + 1,
            image_id: id.clone(),
            strategy: p.strategy.clone(),
            budget: p.budget,
            extra: p.extra,
        })
        .collect();
    emit_report(&rows, &a.output.out, a.output.format())?;
    let avoided = (records.len() - p.selected.len()) * a.extra;
    println!(
        "{} of {} images selected; {} redundant annotations; {:.2} worker hours saved versus full redundancy",
        p.selected.len(),
        records.len(),
        p.selected.len() * a.extra,
        human_hours_saved(avoided)
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub strategy: String,
    pub measure: Measure,
    pub budget: usize,
    pub extra: usize,
    pub seeds_used: usize,
    pub captured: f64,
    pub full_total: f64,
    pub captured_fraction: f64,
    pub redundant_annotations: usize,
    pub hours_saved: f64,
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let records = load_manifest(&a.manifest)?;
    let (_, table) = table_for(&records, a.extra)?;
    let full = table.full_total(a.extra, a.measure)?;
    let mut rows = Vec::new();
    for &strategy in &a.strategy {
        let seeds: Vec<u64> = if strategy == Strategy::StatusQuo {
            (0..a.seeds.max(1) as u64).map(|s| a.seed + s).collect()
        } else {
            vec![a.seed]
        };
        let mut captured = 0.0;
        let mut selected = 0;
        for &seed in &seeds {
            let p = plan_for(strategy, &records, &a.source, Some(&table), a.budget, a.extra, a.measure, seed)?;
            captured += table.total(&p)?.total(a.measure);
            selected = p.selected.len();
        }
        captured /= seeds.len() as f64;
        rows.push(SimulationRow {
            strategy: strategy.as_str().to_string(),
            measure: a.measure,
            budget: a.budget,
            extra: a.extra,
            seeds_used: seeds.len(),
            captured,
            full_total: full,
            captured_fraction: if full > 0.0 { captured / full } else { 1.0 },
            redundant_annotations: selected * a.extra,
            hours_saved: human_hours_saved((records.len() - selected) * a.extra),
        });
    }
    emit_report(&rows, &a.output.out, a.output.format())?;
    for r in &rows {
        println!("{:<12} {:.4}", r.strategy, r.captured_fraction);
    }
    Ok(())
}

pub fn curve_for(
    strategy: Strategy,
    records: &[ImageRecord],
    source: &ScoreSource,
    extra: usize,
    measure: Measure,
    seed: u64,
    seeds: usize,
    thresholds: &[f64],
) -> Result<DiversityCurve> {
    let (sets, table) = table_for(records, extra)?;
    let batch = ids(records);
    let name = strategy.as_str();
    let curve = match strategy {
        Strategy::Greedy => {
            let order = priority_from_scores(&batch, &load_scores(source, records)?)?;
            budget_diversity_curve(name, &[order], &table, extra, measure)?
        }
        Strategy::StatusQuo => {
            let orders: Vec<Vec<String>> = (0..seeds.max(1) as u64).map(|s| random_order(&batch, seed + s)).collect();
            budget_diversity_curve(name, &orders, &table, extra, measure)?
        }
        Strategy::Perfect => budget_diversity_curve(name, &[perfect_order(&table, extra, measure)?], &table, extra, measure)?,
        Strategy::Sos => {
            let order = priority_from_scores(&batch, &sos_scores(source, records)?)?;
            budget_diversity_curve(name, &[order], &table, extra, measure)?
        }
        Strategy::WpBb | Strategy::WpSeg => {
            let mode = wp_mode(strategy).expect("W&P strategy");
            wp_curve(&sets, &table, thresholds, mode, measure, extra)?
        }
    };
    Ok(curve)
}

fn curve(a: &CurveArgs) -> Result<()> {
    let records = load_manifest(&a.manifest)?;
    let c = curve_for(a.strategy, &records, &a.source, a.extra, a.measure, a.seed, a.seeds, &a.thresholds)?;
    emit_report(&c.rows(), &a.output.out, a.output.format())?;
    println!("{} points written to {}", c.points.len(), a.output.out.display());
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<()> {
    let config: ServiceConfig = match &a.config {
        Some(p) => serde_json::from_slice(&std::fs::read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => ServiceConfig::default(),
    };
    if config.workers.is_empty() {
        log::warn!("no worker profiles configured; every worker will be rejected");
    }
    let service = Arc::new(Service::open(config, Box::new(SystemClock), &a.log)?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.addr).await?;
        println!("listening on {}", listener.local_addr()?);
        axum::serve(listener, crate::server::router(service))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub images: usize,
    /// Cells are fractions of all images (joint normalization).
    pub normalization: String,
    pub judger_u_drawer_u: f64,
    pub judger_u_drawer_a: f64,
    pub judger_a_drawer_u: f64,
    pub judger_a_drawer_a: f64,
    pub overall_agreement: f64,
}

fn report(a: &ReportArgs) -> Result<()> {
    let records = load_manifest(&a.manifest)?;
    let (out, format) = (&a.output.out, a.output.format());
    match a.kind {
        ReportKind::Diversity => {
            let mut rows = Vec::new();
            for r in records.iter().filter(|r| !r.annotations.is_empty()) {
                for (i, d) in r.annotation_set()?.scores()?.into_iter().enumerate() {
                    rows.push(DiversityRow {
                        image_id: r.image_id.clone(),
                        annotation_index: i,
                        region_diversity: d.region,
                        boundary_diversity: d.boundary,
                    });
                }
            }
            emit_report(&rows, out, format)?;
        }
        ReportKind::Pr => {
            let labels = read_label_file(a.labels.as_ref().context("--labels is required for pr")?)?;
            let scores: BTreeMap<String, f64> = load_scores(&a.source, &records)?
                .into_iter()
                .filter(|(id, _)| labels.contains_key(id))
                .collect();
            let (ap, rows) = pr_rows(&scores, &labels)?;
            emit_report(&rows, out, format)?;
            println!("AP {ap:.4}");
        }
        ReportKind::Agreement => {
            let judger: BTreeMap<String, Ambiguity> = match &a.labels {
                Some(p) => read_label_file(p)?,
                None => records
                    .iter()
                    .filter(|r| r.votes.len() == VOTES_PER_IMAGE)
                    .map(|r| Ok((r.image_id.clone(), aggregate_votes(&r.vote_records())?.label)))
                    .collect::<Result<_>>()?,
            };
            let mut drawer = BTreeMap::new();
            for r in records.iter().filter(|r| r.annotations.len() >= 2 && judger.contains_key(&r.image_id)) {
                let set = r.annotation_set()?;
                drawer.insert(r.image_id.clone(), label_from_drawings(&r.image_id, set.masks())?.label);
            }
            let judger: BTreeMap<String, Ambiguity> =
                judger.into_iter().filter(|(id, _)| drawer.contains_key(id)).collect();
            if judger.is_empty() {
                bail!("no image has both a judger label and at least two drawings");
            }
            let m = agreement_matrix(&judger, &drawer)?;
            let rows = vec![AgreementRow {
                images: m.images,
                normalization: "joint".into(),
                judger_u_drawer_u: m.uu,
                judger_u_drawer_a: m.ua,
                judger_a_drawer_u: m.au,
                judger_a_drawer_a: m.aa,
                overall_agreement: m.overall_agreement,
            }];
            emit_report(&rows, out, format)?;
            println!("overall agreement {:.4} over {} images", m.overall_agreement, m.images);
        }
    }
    Ok(())
}
