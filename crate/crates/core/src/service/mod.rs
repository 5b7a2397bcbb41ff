//! Task server for the two crowd jobs (five-image ambiguity votes and
//! single-object segmentations) and the adaptive redundancy round.
//!
//! Every state change is first appended to the event log and then applied
//! to the in-memory state, under one lock. Replaying the log therefore
//! rebuilds the exact state. Assignments older than the timeout go back to
//! open the next time a worker asks for work.

mod events;
mod manifest;
mod state;

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

pub use events::{parse_log, read_log, BatchImage, Event, TaskKind};
pub use manifest::{
    annotation_sets, format_manifest, method_scores, parse_manifest, read_manifest, write_manifest,
    AnnotationEntry, ImageRecord, VoteEntry,
};
pub use state::{Batch, ImageState, ServiceState, Task, TaskState};

use crate::allocation::{greedy_allocate, AllocationPlan};
use crate::error::{Error, Result};
use crate::mask::{encode_rle, rasterize_polygon, PolygonOutline};
use crate::scoring::{aggregate_votes, VoteRecord, VOTES_PER_IMAGE};

/// Images per vote task.
pub const IMAGES_PER_VOTE_TASK: usize = 5;

pub trait Clock: Send + Sync {
    /// Milliseconds since the Unix epoch.
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }
}

/// Hand-driven clock for tests and simulations.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        Self(AtomicU64::new(start_ms))
    }

    pub fn advance(&self, by: Duration) {
        self.0.fetch_add(by.as_millis() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerProfile {
    pub worker_id: String,
    pub completed_tasks: u64,
    pub approval_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub min_completed_tasks: u64,
    pub min_approval_rate: f64,
    pub assignment_timeout_secs: u64,
    pub workers: Vec<WorkerProfile>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            min_completed_tasks: 100,
            min_approval_rate: 0.92,
            assignment_timeout_secs: 30 * 60,
            workers: Vec::new(),
        }
    }
}

impl ServiceConfig {
    pub fn is_eligible(&self, p: &WorkerProfile) -> bool {
        p.completed_tasks >= self.min_completed_tasks && p.approval_rate >= self.min_approval_rate
    }
}

/// What a worker receives from [`Service::next_task`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub task_id: u64,
    pub batch_id: u64,
    pub kind: TaskKind,
    pub round: u32,
    pub images: Vec<BatchImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStatus {
    pub batch_id: u64,
    pub kind: TaskKind,
    pub extra: usize,
    pub images: usize,
    pub tasks_open: usize,
    pub tasks_assigned: usize,
    pub tasks_done: usize,
    pub labels: usize,
    pub annotations: usize,
    pub round_one_complete: bool,
    pub plan: Option<AllocationPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub plan: AllocationPlan,
    pub opened: Vec<u64>,
}

struct Inner {
    state: ServiceState,
    log: Option<File>,
    events: Vec<Event>,
}

pub struct Service {
    config: ServiceConfig,
    workers: BTreeMap<String, WorkerProfile>,
    clock: Box<dyn Clock>,
    inner: Mutex<Inner>,
}

impl Service {
    /// In-memory service with no log file.
    pub fn in_memory(config: ServiceConfig, clock: Box<dyn Clock>) -> Self {
        Self::build(config, clock, ServiceState::default(), Vec::new(), None)
    }

    /// Opens (or creates) the log at `log_path` and replays it.
    pub fn open(config: ServiceConfig, clock: Box<dyn Clock>, log_path: &Path) -> Result<Self> {
        let events = if log_path.exists() { read_log(log_path)? } else { Vec::new() };
        let state = ServiceState::replay(&events)?;
        let file = OpenOptions::new().create(true).append(true).open(log_path)?;
        Ok(Self::build(config, clock, state, events, Some(file)))
    }

    fn build(
        config: ServiceConfig,
        clock: Box<dyn Clock>,
        state: ServiceState,
        events: Vec<Event>,
        log: Option<File>,
    ) -> Self {
        let workers = config.workers.iter().map(|w| (w.worker_id.clone(), w.clone())).collect();
        Self {
            config,
            workers,
            clock,
            inner: Mutex::new(Inner { state, log, events }),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn state(&self) -> ServiceState {
        self.inner.lock().state.clone()
    }

    pub fn events(&self) -> Vec<Event> {
        self.inner.lock().events.clone()
    }

    fn commit(inner: &mut Inner, events: Vec<Event>) -> Result<()> {
        if let Some(f) = inner.log.as_mut() {
            let mut buf = String::new();
            for e in &events {
                buf.push_str(&serde_json::to_string(e)?);
                buf.push('\n');
            }
            f.write_all(buf.as_bytes())?;
            f.flush()?;
        }
        for e in events {
            inner.state.apply(&e)?;
            inner.events.push(e);
        }
        Ok(())
    }

    /// Reads the manifest, checks every image file exists, and opens the
    /// first-round tasks.
    pub fn create_batch(&self, manifest: &Path, kind: TaskKind, extra: usize) -> Result<(u64, Vec<u64>)> {
        let records = read_manifest(manifest)?;
        let dir = manifest.parent().unwrap_or(Path::new("."));
        let mut images = Vec::with_capacity(records.len());
        for r in &records {
            let path = r.resolved_path(dir);
            if !path.is_file() {
                return Err(Error::MissingImage(path));
            }
            images.push(BatchImage {
                image_id: r.image_id.clone(),
                width: r.width,
                height: r.height,
                source: r.source.clone(),
                path,
            });
        }
        self.create_batch_from_images(images, kind, extra)
    }

    /// Vote batches get one task per group of five images (the last group
    /// may be smaller); segment batches one task per image.
    pub fn create_batch_from_images(
        &self,
        images: Vec<BatchImage>,
        kind: TaskKind,
        extra: usize,
    ) -> Result<(u64, Vec<u64>)> {
        if images.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut seen = std::collections::BTreeSet::new();
        for img in &images {
            if !seen.insert(img.image_id.as_str()) {
                return Err(Error::DuplicateImage(img.image_id.clone()));
            }
        }
        let at = self.clock.now_ms();
        let mut inner = self.inner.lock();
        let batch_id = inner.state.next_batch_id();
        let mut task_id = inner.state.next_task_id();
        let groups: Vec<Vec<String>> = match kind {
            TaskKind::Vote => images
                .chunks(IMAGES_PER_VOTE_TASK)
                .map(|c| c.iter().map(|i| i.image_id.clone()).collect())
                .collect(),
            TaskKind::Segment => images.iter().map(|i| vec![i.image_id.clone()]).collect(),
        };
        let mut events = vec![Event::BatchCreated {
            batch_id,
            kind,
            extra,
            images,
            at,
        }];
        let mut opened = Vec::new();
        for image_ids in groups {
            events.push(Event::TaskOpened {
                task_id,
                batch_id,
                kind,
                image_ids,
                round: 1,
                at,
            });
            opened.push(task_id);
            task_id += 1;
        }
        Self::commit(&mut inner, events)?;
        log::info!("batch {batch_id}: {} {kind} tasks opened", opened.len());
        Ok((batch_id, opened))
    }

    fn check_eligible(&self, worker_id: &str) -> Result<()> {
        match self.workers.get(worker_id) {
            Some(p) if self.config.is_eligible(p) => Ok(()),
            _ => Err(Error::IneligibleWorker(worker_id.to_string())),
        }
    }

    fn expired_events(&self, state: &ServiceState, now: u64) -> Vec<Event> {
        let timeout = self.config.assignment_timeout_secs.saturating_mul(1000);
        state
            .tasks
            .values()
            .filter_map(|t| match &t.state {
                TaskState::Assigned { at, .. } if now.saturating_sub(*at) >= timeout => {
                    Some(Event::TaskExpired { task_id: t.task_id, at: now })
                }
                _ => None,
            })
            .collect()
    }

    /// Returns expired assignments to the open pool.
    pub fn expire_stale(&self) -> Result<usize> {
        let now = self.clock.now_ms();
        let mut inner = self.inner.lock();
        let expired = self.expired_events(&inner.state, now);
        let n = expired.len();
        Self::commit(&mut inner, expired)?;
        Ok(n)
    }

    /// Assigns the oldest open task that shows the worker no image it has
    /// already seen for that task kind.
    pub fn next_task(&self, worker_id: &str) -> Result<Option<TaskView>> {
        self.check_eligible(worker_id)?;
        let now = self.clock.now_ms();
        let mut inner = self.inner.lock();
        let mut events = self.expired_events(&inner.state, now);
        Self::commit(&mut inner, std::mem::take(&mut events))?;

        let state = &inner.state;
        let Some(task) = state.tasks.values().find(|t| {
            t.state == TaskState::Open && !t.image_ids.iter().any(|id| state.has_touched(worker_id, t.kind, id))
        }) else {
            return Ok(None);
        };
        let task = task.clone();
        events.push(Event::TaskAssigned {
            task_id: task.task_id,
            worker_id: worker_id.to_string(),
            at: now,
        });
        // Vote groups are replicated until five workers have taken them.
        if task.kind == TaskKind::Vote {
            let replicas = state
                .tasks
                .values()
                .filter(|t| t.batch_id == task.batch_id && t.image_ids == task.image_ids)
                .count();
            if replicas < VOTES_PER_IMAGE {
                events.push(Event::TaskOpened {
                    task_id: state.next_task_id(),
                    batch_id: task.batch_id,
                    kind: task.kind,
                    image_ids: task.image_ids.clone(),
                    round: task.round,
                    at: now,
                });
            }
        }
        let batch = state.batch(task.batch_id)?;
        let images = task
            .image_ids
            .iter()
            .map(|id| {
                batch
                    .images
                    .iter()
                    .find(|i| &i.image_id == id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownImage(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::commit(&mut inner, events)?;
        Ok(Some(TaskView {
            task_id: task.task_id,
            batch_id: task.batch_id,
            kind: task.kind,
            round: task.round,
            images,
        }))
    }

    fn assigned_task(state: &ServiceState, task_id: u64, worker_id: &str, kind: TaskKind) -> Result<Task> {
        let task = state.task(task_id)?;
        if task.kind != kind {
            return Err(Error::WrongKind {
                task_id,
                actual: task.kind.to_string(),
            });
        }
        match &task.state {
            TaskState::Assigned { worker_id: w, .. } if w == worker_id => Ok(task.clone()),
            _ => Err(Error::NotAssigned {
                task_id,
                worker_id: worker_id.to_string(),
            }),
        }
    }

    /// Stores one vote per task image; an image's label is aggregated as
    /// soon as it has five votes.
    pub fn submit_vote(&self, task_id: u64, worker_id: &str, votes: &[bool]) -> Result<()> {
        let at = self.clock.now_ms();
        let mut inner = self.inner.lock();
        let state = &inner.state;
        let task = Self::assigned_task(state, task_id, worker_id, TaskKind::Vote)?;
        if votes.len() != task.image_ids.len() {
            return Err(Error::VoteCountMismatch {
                expected: task.image_ids.len(),
                actual: votes.len(),
            });
        }
        let mut labels = Vec::new();
        for (id, &vote) in task.image_ids.iter().zip(votes) {
            let img = &state.images[id];
            if img.votes.len() >= VOTES_PER_IMAGE {
                return Err(Error::VoteCapReached(id.clone()));
            }
            if img.votes.len() + 1 == VOTES_PER_IMAGE {
                let mut records: Vec<VoteRecord> = img
                    .votes
                    .iter()
                    .map(|v| VoteRecord {
                        image_id: id.clone(),
                        worker_id: v.worker_id.clone(),
                        vote: v.vote,
                    })
                    .collect();
                records.push(VoteRecord {
                    image_id: id.clone(),
                    worker_id: worker_id.to_string(),
                    vote,
                });
                labels.push(aggregate_votes(&records)?);
            }
        }
        let mut events = vec![
            Event::VotesSubmitted {
                task_id,
                worker_id: worker_id.to_string(),
                votes: votes.to_vec(),
                at,
            },
            Event::TaskDone { task_id, at },
        ];
        events.extend(labels.into_iter().map(|l| Event::LabelMaterialized {
            image_id: l.image_id,
            label: l.label,
            at,
        }));
        Self::commit(&mut inner, events)
    }

    /// Rasterizes the single submitted outline and stores it as the image's
    /// next annotation.
    pub fn submit_segmentation(&self, task_id: u64, worker_id: &str, polygons: &[PolygonOutline]) -> Result<()> {
        let at = self.clock.now_ms();
        let mut inner = self.inner.lock();
        let state = &inner.state;
        let task = Self::assigned_task(state, task_id, worker_id, TaskKind::Segment)?;
        if polygons.len() != 1 {
            return Err(Error::MultiplePolygons(polygons.len()));
        }
        let image_id = task.image_ids[0].clone();
        let img = &state.images[&image_id];
        let cap = 1 + state.batch(task.batch_id)?.extra;
        if img.annotations.len() >= cap {
            return Err(Error::AnnotationCapReached { image_id, cap });
        }
        let mask = rasterize_polygon(&polygons[0], img.width, img.height)?;
        if mask.count() == 0 {
            return Err(Error::EmptyRasterization);
        }
        let timestamp = img.annotations.last().map_or(at, |a| at.max(a.timestamp + 1));
        let events = vec![
            Event::AnnotationSubmitted {
                task_id,
                worker_id: worker_id.to_string(),
                image_id,
                timestamp,
                mask: encode_rle(&mask),
            },
            Event::TaskDone { task_id, at },
        ];
        Self::commit(&mut inner, events)
    }

    /// Records `scores` under `method`, greedily selects `budget` images and
    /// opens `extra` (the batch's level) new segment tasks for each.
    pub fn run_adaptive_round(
        &self,
        batch_id: u64,
        method: &str,
        scores: &BTreeMap<String, f64>,
        budget: usize,
    ) -> Result<RoundOutcome> {
        let at = self.clock.now_ms();
        let mut inner = self.inner.lock();
        let state = &inner.state;
        let batch = state.batch(batch_id)?;
        if batch.kind != TaskKind::Segment {
            return Err(Error::parse(format!("batch {batch_id} is not a segment batch")));
        }
        if batch.plan.is_some() {
            return Err(Error::RoundAlreadyRun(batch_id));
        }
        if let Some(img) = batch.images.iter().find(|i| state.images[&i.image_id].annotations.is_empty()) {
            return Err(Error::RoundOneIncomplete(img.image_id.clone()));
        }
        let ids: Vec<String> = batch.images.iter().map(|i| i.image_id.clone()).collect();
        let batch_scores: BTreeMap<String, f64> = ids
            .iter()
            .map(|id| {
                scores
                    .get(id)
                    .map(|&s| (id.clone(), s))
                    .ok_or_else(|| Error::MissingScore(id.clone()))
            })
            .collect::<Result<_>>()?;
        let plan = greedy_allocate(&ids, &batch_scores, budget, batch.extra)?;
        let mut events = vec![
            Event::ScoresRecorded {
                batch_id,
                method: method.to_string(),
                scores: batch_scores,
                at,
            },
            Event::RoundPlanned {
                batch_id,
                plan: plan.clone(),
                at,
            },
        ];
        let mut task_id = state.next_task_id();
        let mut opened = Vec::new();
        for id in &plan.selected {
            for _ in 0..batch.extra {
                events.push(Event::TaskOpened {
                    task_id,
                    batch_id,
                    kind: TaskKind::Segment,
                    image_ids: vec![id.clone()],
                    round: 2,
                    at,
                });
                opened.push(task_id);
                task_id += 1;
            }
        }
        Self::commit(&mut inner, events)?;
        log::info!("batch {batch_id}: adaptive round opened {} tasks", opened.len());
        Ok(RoundOutcome { plan, opened })
    }

    pub fn batch_status(&self, batch_id: u64) -> Result<BatchStatus> {
        let inner = self.inner.lock();
        let state = &inner.state;
        let batch = state.batch(batch_id)?;
        let tasks: Vec<&Task> = state.tasks.values().filter(|t| t.batch_id == batch_id).collect();
        let count = |f: fn(&TaskState) -> bool| tasks.iter().filter(|t| f(&t.state)).count();
        let images: Vec<&ImageState> = batch.images.iter().map(|i| &state.images[&i.image_id]).collect();
        Ok(BatchStatus {
            batch_id,
            kind: batch.kind,
            extra: batch.extra,
            images: batch.images.len(),
            tasks_open: count(|s| *s == TaskState::Open),
            tasks_assigned: count(|s| matches!(s, TaskState::Assigned { .. })),
            tasks_done: count(|s| matches!(s, TaskState::Done { .. })),
            labels: images.iter().filter(|i| i.label.is_some()).count(),
            annotations: images.iter().map(|i| i.annotations.len()).sum(),
            round_one_complete: images.iter().all(|i| !i.annotations.is_empty()),
            plan: batch.plan.clone(),
        })
    }

    /// Manifest records of the batch's images with everything collected so
    /// far.
    pub fn batch_report(&self, batch_id: u64) -> Result<Vec<ImageRecord>> {
        let inner = self.inner.lock();
        let state = &inner.state;
        let batch = state.batch(batch_id)?;
        Ok(batch
            .images
            .iter()
            .map(|i| {
                let img = &state.images[&i.image_id];
                ImageRecord {
                    image_id: i.image_id.clone(),
                    width: i.width,
                    height: i.height,
                    source: i.source.clone(),
                    path: i.path.clone(),
                    votes: img.votes.clone(),
                    annotations: img.annotations.clone(),
                    scores: batch
                        .scores
                        .iter()
                        .filter_map(|(m, s)| s.get(&i.image_id).map(|&v| (m.clone(), v)))
                        .collect(),
                }
            })
            .collect())
    }

    pub fn label(&self, image_id: &str) -> Option<crate::scoring::Ambiguity> {
        self.inner.lock().state.images.get(image_id).and_then(|i| i.label)
    }
}

#[cfg(test)]
mod tests;
