use super::*;
use crate::mask::PixelMask;
use crate::scoring::Ambiguity;

fn worker(id: &str, completed: u64, approval: f64) -> WorkerProfile {
    WorkerProfile {
        worker_id: id.into(),
        completed_tasks: completed,
        approval_rate: approval,
    }
}

fn config(n: usize) -> ServiceConfig {
    let mut workers: Vec<_> = (0..n).map(|i| worker(&format!("w{i}"), 500, 0.99)).collect();
    workers.push(worker("novice", 500, 0.9));
    ServiceConfig {
        workers,
        ..Default::default()
    }
}

fn images(n: usize) -> Vec<BatchImage> {
    (0..n)
        .map(|i| BatchImage {
            image_id: format!("img{i:03}"),
            width: 4,
            height: 4,
            source: "test".into(),
            path: format!("img{i:03}.pgm").into(),
        })
        .collect()
}

fn service(workers: usize) -> Service {
    Service::in_memory(config(workers), Box::new(ManualClock::new(1_000)))
}

fn square() -> PolygonOutline {
    PolygonOutline::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]).unwrap()
}

#[test]
fn batch_grouping() {
    let s = service(1);
    assert_eq!(s.create_batch_from_images(images(10), TaskKind::Segment, 4).unwrap().1.len(), 10);
    let (b, tasks) = s.create_batch_from_images(images(10), TaskKind::Vote, 0).unwrap();
    assert_eq!(tasks.len(), 2);
    let (b7, tasks7) = s.create_batch_from_images(images(7), TaskKind::Vote, 0).unwrap();
    let st = s.state();
    let sizes: Vec<usize> = tasks7.iter().map(|t| st.tasks[t].image_ids.len()).collect();
    assert_eq!(sizes, vec![5, 2]);
    assert!(b7 > b);
}

#[test]
fn eligibility_and_empty_queue() {
    let s = service(1);
    assert_eq!(s.next_task("w0").unwrap(), None);
    assert!(matches!(s.next_task("novice"), Err(Error::IneligibleWorker(_))));
    assert!(matches!(s.next_task("stranger"), Err(Error::IneligibleWorker(_))));
}

#[test]
fn segmentation_flow() {
    let s = service(3);
    let (batch, _) = s.create_batch_from_images(images(1), TaskKind::Segment, 1).unwrap();
    let t = s.next_task("w0").unwrap().unwrap();
    assert_eq!(t.kind, TaskKind::Segment);
    assert_eq!(s.next_task("w1").unwrap(), None);
    assert!(matches!(
        s.submit_segmentation(t.task_id, "w0", &[square(), square()]),
        Err(Error::MultiplePolygons(2))
    ));
    assert!(matches!(s.submit_segmentation(t.task_id, "w1", &[square()]), Err(Error::NotAssigned { .. })));
    assert!(matches!(s.submit_vote(t.task_id, "w0", &[true]), Err(Error::WrongKind { .. })));
    let sliver = PolygonOutline::new(vec![[0.1, 0.1], [0.3, 0.1], [0.3, 0.3]]).unwrap();
    assert!(matches!(s.submit_segmentation(t.task_id, "w0", &[sliver]), Err(Error::EmptyRasterization)));
    s.submit_segmentation(t.task_id, "w0", &[square()]).unwrap();
    assert!(matches!(s.submit_segmentation(t.task_id, "w0", &[square()]), Err(Error::NotAssigned { .. })));

    let report = s.batch_report(batch).unwrap();
    let mask = crate::mask::decode_rle(&report[0].annotations[0].mask).unwrap();
    assert_eq!(mask, PixelMask::from_fn(4, 4, |x, y| x < 2 && y < 2).unwrap());
    assert!(s.batch_status(batch).unwrap().round_one_complete);
}

#[test]
fn vote_replicas_and_labels() {
    let s = service(7);
    let (batch, _) = s.create_batch_from_images(images(2), TaskKind::Vote, 0).unwrap();
    let answers = [true, true, false, true, false];
    for (i, &a) in answers.iter().enumerate() {
        let w = format!("w{i}");
        let t = s.next_task(&w).unwrap().unwrap();
        assert_eq!(t.images.len(), 2);
        // the same worker never sees these images again
        assert_eq!(s.next_task(&w).unwrap(), None);
        assert!(matches!(
            s.submit_vote(t.task_id, &w, &[a]),
            Err(Error::VoteCountMismatch { expected: 2, actual: 1 })
        ));
        if i < 4 {
            assert_eq!(s.label("img000"), None);
        }
        s.submit_vote(t.task_id, &w, &[a, !a]).unwrap();
    }
    assert_eq!(s.label("img000"), Some(Ambiguity::Unambiguous));
    assert_eq!(s.label("img001"), Some(Ambiguity::Ambiguous));
    assert_eq!(s.next_task("w5").unwrap(), None);
    let status = s.batch_status(batch).unwrap();
    assert_eq!((status.tasks_done, status.labels), (5, 2));

    // a second batch over the same images cannot add a sixth vote
    s.create_batch_from_images(images(2), TaskKind::Vote, 0).unwrap();
    let t = s.next_task("w6").unwrap().unwrap();
    assert!(matches!(s.submit_vote(t.task_id, "w6", &[true, true]), Err(Error::VoteCapReached(_))));
}

#[test]
fn assignments_expire() {
    let clock = std::sync::Arc::new(ManualClock::new(0));
    struct Shared(std::sync::Arc<ManualClock>);
    impl Clock for Shared {
        fn now_ms(&self) -> u64 {
            self.0.now_ms()
        }
    }
    let s = Service::in_memory(config(2), Box::new(Shared(clock.clone())));
    s.create_batch_from_images(images(1), TaskKind::Segment, 0).unwrap();
    let t = s.next_task("w0").unwrap().unwrap();
    clock.advance(Duration::from_secs(29 * 60));
    assert_eq!(s.next_task("w1").unwrap(), None);
    clock.advance(Duration::from_secs(60));
    let again = s.next_task("w1").unwrap().unwrap();
    assert_eq!(again.task_id, t.task_id);
    assert!(matches!(s.submit_segmentation(t.task_id, "w0", &[square()]), Err(Error::NotAssigned { .. })));
    s.submit_segmentation(t.task_id, "w1", &[square()]).unwrap();
}

#[test]
fn adaptive_round() {
    let s = service(6);
    let (batch, _) = s.create_batch_from_images(images(3), TaskKind::Segment, 4).unwrap();
    let scores: BTreeMap<String, f64> =
        [("img000", 0.9), ("img001", 0.1), ("img002", 0.5)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assert!(matches!(s.run_adaptive_round(batch, "oracle", &scores, 1), Err(Error::RoundOneIncomplete(_))));
    for i in 0..3 {
        let w = format!("w{i}");
        let t = s.next_task(&w).unwrap().unwrap();
        s.submit_segmentation(t.task_id, &w, &[square()]).unwrap();
    }
    let out = s.run_adaptive_round(batch, "oracle", &scores, 1).unwrap();
    assert_eq!(out.plan.selected, vec!["img001".to_string()]);
    assert_eq!(out.opened.len(), 4);
    let st = s.state();
    assert!(out.opened.iter().all(|t| st.tasks[t].image_ids == vec!["img001".to_string()]));
    assert!(matches!(s.run_adaptive_round(batch, "oracle", &scores, 1), Err(Error::RoundAlreadyRun(_))));
    assert_eq!(s.batch_report(batch).unwrap()[1].scores["oracle"], 0.1);
}

#[test]
fn adaptive_round_budgets() {
    for (budget, expected) in [(0usize, 0usize), (5, 20)] {
        let s = service(1);
        let (batch, _) = s.create_batch_from_images(images(5), TaskKind::Segment, 4).unwrap();
        for _ in 0..5 {
            let t = s.next_task("w0");
            // one worker cannot take two tasks for the same image, but all
            // five images differ
            let t = t.unwrap().unwrap();
            s.submit_segmentation(t.task_id, "w0", &[square()]).unwrap();
        }
        let scores = (0..5).map(|i| (format!("img{i:03}"), i as f64)).collect();
        let out = s.run_adaptive_round(batch, "m", &scores, budget).unwrap();
        assert_eq!(out.opened.len(), expected);
    }
}

#[test]
fn annotation_cap() {
    let s = service(4);
    s.create_batch_from_images(images(1), TaskKind::Segment, 0).unwrap();
    let t = s.next_task("w0").unwrap().unwrap();
    s.submit_segmentation(t.task_id, "w0", &[square()]).unwrap();
    // a second batch with the same image and extra 0 allows only one mask
    s.create_batch_from_images(images(1), TaskKind::Segment, 0).unwrap();
    let t = s.next_task("w1").unwrap().unwrap();
    assert!(matches!(
        s.submit_segmentation(t.task_id, "w1", &[square()]),
        Err(Error::AnnotationCapReached { cap: 1, .. })
    ));
}

#[test]
fn log_replay_reconstructs_state() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let before = {
        let s = Service::open(config(3), Box::new(ManualClock::new(5)), &log).unwrap();
        s.create_batch_from_images(images(3), TaskKind::Segment, 1).unwrap();
        let t = s.next_task("w0").unwrap().unwrap();
        s.submit_segmentation(t.task_id, "w0", &[square()]).unwrap();
        s.next_task("w1").unwrap().unwrap();
        s.state()
    };
    let events = read_log(&log).unwrap();
    assert_eq!(ServiceState::replay(&events).unwrap(), before);
    let reopened = Service::open(config(3), Box::new(ManualClock::new(5)), &log).unwrap();
    assert_eq!(reopened.state(), before);
    // new ids continue after the replayed ones
    let (_, tasks) = reopened.create_batch_from_images(images(1), TaskKind::Vote, 0).unwrap();
    assert_eq!(tasks, vec![4]);
}

#[test]
fn concurrent_workers_get_distinct_tasks() {
    let s = std::sync::Arc::new(service(20));
    s.create_batch_from_images(images(40), TaskKind::Segment, 0).unwrap();
    let handles: Vec<_> = (0..20)
        .map(|i| {
            let s = s.clone();
            std::thread::spawn(move || {
                let w = format!("w{i}");
                let mut got = Vec::new();
                while let Some(t) = s.next_task(&w).unwrap() {
                    got.push(t.task_id);
                    s.submit_segmentation(t.task_id, &w, &[square()]).unwrap();
                }
                got
            })
        })
        .collect();
    let mut all: Vec<u64> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
    all.sort();
    assert_eq!(all, (1..=40).collect::<Vec<_>>());
}
