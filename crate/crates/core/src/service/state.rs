//! Server state as a fold over the event log.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::events::{BatchImage, Event, TaskKind};
use super::manifest::{AnnotationEntry, VoteEntry};
use crate::allocation::AllocationPlan;
use crate::error::{Error, Result};
use crate::scoring::Ambiguity;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum TaskState {
    Open,
    Assigned { worker_id: String, at: u64 },
    Done { worker_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: u64,
    pub batch_id: u64,
    pub kind: TaskKind,
    pub image_ids: Vec<String>,
    /// 1 for the initial pass, 2 for adaptive redundancy.
    pub round: u32,
    pub state: TaskState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub batch_id: u64,
    pub kind: TaskKind,
    pub extra: usize,
    pub images: Vec<BatchImage>,
    pub scores: BTreeMap<String, BTreeMap<String, f64>>,
    pub plan: Option<AllocationPlan>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageState {
    pub width: usize,
    pub height: usize,
    pub votes: Vec<VoteEntry>,
    pub label: Option<Ambiguity>,
    pub annotations: Vec<AnnotationEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServiceState {
    pub batches: BTreeMap<u64, Batch>,
    pub tasks: BTreeMap<u64, Task>,
    pub images: BTreeMap<String, ImageState>,
    /// Images each worker has been handed, per task kind.
    pub touched: BTreeMap<String, BTreeMap<TaskKind, BTreeSet<String>>>,
    pub events_applied: u64,
}

impl ServiceState {
    pub fn replay(events: &[Event]) -> Result<Self> {
        let mut s = Self::default();
        for e in events {
            s.apply(e)?;
        }
        Ok(s)
    }

    pub fn next_batch_id(&self) -> u64 {
        self.batches.keys().next_back().map_or(1, |k| k + 1)
    }

    pub fn next_task_id(&self) -> u64 {
        self.tasks.keys().next_back().map_or(1, |k| k + 1)
    }

    pub fn task(&self, task_id: u64) -> Result<&Task> {
        self.tasks.get(&task_id).ok_or(Error::UnknownTask(task_id))
    }

    pub fn batch(&self, batch_id: u64) -> Result<&Batch> {
        self.batches.get(&batch_id).ok_or(Error::UnknownBatch(batch_id))
    }

    pub fn has_touched(&self, worker_id: &str, kind: TaskKind, image_id: &str) -> bool {
        self.touched
            .get(worker_id)
            .and_then(|k| k.get(&kind))
            .is_some_and(|s| s.contains(image_id))
    }

    fn task_mut(&mut self, task_id: u64) -> Result<&mut Task> {
        self.tasks.get_mut(&task_id).ok_or(Error::UnknownTask(task_id))
    }

    fn image_mut(&mut self, image_id: &str) -> Result<&mut ImageState> {
        self.images
            .get_mut(image_id)
            .ok_or_else(|| Error::UnknownImage(image_id.to_string()))
    }

    fn assigned_to(&self, task_id: u64, worker: &str) -> Result<()> {
        match &self.task(task_id)?.state {
            TaskState::Assigned { worker_id, .. } if worker_id == worker => Ok(()),
            _ => Err(Error::NotAssigned {
                task_id,
                worker_id: worker.to_string(),
            }),
        }
    }

    /// Applies one event, rejecting events inconsistent with the state.
    pub fn apply(&mut self, event: &Event) -> Result<()> {
        match event {
            Event::BatchCreated {
                batch_id,
                kind,
                extra,
                images,
                ..
            } => {
                if self.batches.contains_key(batch_id) {
                    return Err(Error::parse(format!("batch {batch_id} created twice")));
                }
                for img in images {
                    let st = self.images.entry(img.image_id.clone()).or_insert_with(|| ImageState {
                        width: img.width,
                        height: img.height,
                        ..Default::default()
                    });
                    if (st.width, st.height) != (img.width, img.height) {
                        return Err(Error::DimensionMismatch {
                            left: (st.width, st.height),
                            right: (img.width, img.height),
                        });
                    }
                }
                self.batches.insert(
                    *batch_id,
                    Batch {
                        batch_id: *batch_id,
                        kind: *kind,
                        extra: *extra,
                        images: images.clone(),
                        scores: BTreeMap::new(),
                        plan: None,
                    },
                );
            }
            Event::TaskOpened {
                task_id,
                batch_id,
                kind,
                image_ids,
                round,
                ..
            } => {
                self.batch(*batch_id)?;
                if self.tasks.contains_key(task_id) {
                    return Err(Error::parse(format!("task {task_id} opened twice")));
                }
                self.tasks.insert(
                    *task_id,
                    Task {
                        task_id: *task_id,
                        batch_id: *batch_id,
                        kind: *kind,
                        image_ids: image_ids.clone(),
                        round: *round,
                        state: TaskState::Open,
                    },
                );
            }
            Event::TaskAssigned { task_id, worker_id, at } => {
                let task = self.task_mut(*task_id)?;
                if task.state != TaskState::Open {
                    return Err(Error::parse(format!("task {task_id} assigned while not open")));
                }
                task.state = TaskState::Assigned {
                    worker_id: worker_id.clone(),
                    at: *at,
                };
                let (kind, ids) = (task.kind, task.image_ids.clone());
                self.touched
                    .entry(worker_id.clone())
                    .or_default()
                    .entry(kind)
                    .or_default()
                    .extend(ids);
            }
            Event::TaskExpired { task_id, .. } => {
                let task = self.task_mut(*task_id)?;
                if !matches!(task.state, TaskState::Assigned { .. }) {
                    return Err(Error::parse(format!("task {task_id} expired while not assigned")));
                }
                task.state = TaskState::Open;
            }
            Event::VotesSubmitted {
                task_id,
                worker_id,
                votes,
                ..
            } => {
                self.assigned_to(*task_id, worker_id)?;
                let ids = self.task(*task_id)?.image_ids.clone();
                if ids.len() != votes.len() {
                    return Err(Error::VoteCountMismatch {
                        expected: ids.len(),
                        actual: votes.len(),
                    });
                }
                for (id, &vote) in ids.iter().zip(votes) {
                    self.image_mut(id)?.votes.push(VoteEntry {
                        worker_id: worker_id.clone(),
                        vote,
                    });
                }
            }
            Event::LabelMaterialized { image_id, label, .. } => {
                self.image_mut(image_id)?.label = Some(*label);
            }
            Event::AnnotationSubmitted {
                task_id,
                worker_id,
                image_id,
                timestamp,
                mask,
            } => {
                self.assigned_to(*task_id, worker_id)?;
                let img = self.image_mut(image_id)?;
                if (mask.width, mask.height) != (img.width, img.height) {
                    return Err(Error::DimensionMismatch {
                        left: (img.width, img.height),
                        right: (mask.width, mask.height),
                    });
                }
                img.annotations.push(AnnotationEntry {
                    worker_id: worker_id.clone(),
                    timestamp: *timestamp,
                    mask: mask.clone(),
                });
            }
            Event::TaskDone { task_id, .. } => {
                let task = self.task_mut(*task_id)?;
                let TaskState::Assigned { worker_id, .. } = &task.state else {
                    return Err(Error::parse(format!("task {task_id} finished while not assigned")));
                };
                task.state = TaskState::Done {
                    worker_id: worker_id.clone(),
                };
            }
            Event::ScoresRecorded {
                batch_id,
                method,
                scores,
                ..
            } => {
                let batch = self.batches.get_mut(batch_id).ok_or(Error::UnknownBatch(*batch_id))?;
                batch.scores.insert(method.clone(), scores.clone());
            }
            Event::RoundPlanned { batch_id, plan, .. } => {
                let batch = self.batches.get_mut(batch_id).ok_or(Error::UnknownBatch(*batch_id))?;
                if batch.plan.is_some() {
                    return Err(Error::RoundAlreadyRun(*batch_id));
                }
                batch.plan = Some(plan.clone());
            }
        }
        self.events_applied += 1;
        Ok(())
    }
}
