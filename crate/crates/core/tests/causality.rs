//! Happened-before from an explicit transitive closure over process order
//! and message edges, checked against the simulator's vector clocks and the
//! replay clock.

use std::collections::HashMap;

use repcl::clock::{compare, ClockConfig, Ordering};
use repcl::sim::{self, EventKind, SimConfig, Trace};

fn closure(t: &Trace) -> Vec<Vec<bool>> {
    let k = t.events.len();
    let mut reach = vec![vec![false; k]; k];
    let mut last: HashMap<usize, usize> = HashMap::new();
    let mut send_at: HashMap<u64, usize> = HashMap::new();
    for (j, e) in t.events.iter().enumerate() {
        let mut direct = Vec::new();
        if let Some(&p) = last.get(&e.proc) {
            direct.push(p);
        }
        match e.kind {
            EventKind::Send => {
                send_at.insert(e.msg_id.unwrap(), j);
            }
            EventKind::Recv => direct.push(send_at[&e.msg_id.unwrap()]),
            EventKind::Local => {}
        }
        last.insert(e.proc, j);
        // Events are in a valid execution order, so predecessors are complete.
        for p in direct {
            reach[p][j] = true;
            for row in reach.iter_mut() {
                if row[p] {
                    row[j] = true;
                }
            }
        }
    }
    reach
}

fn check(t: &Trace) {
    let reach = closure(t);
    let cfg = t.clock();
    for (i, e) in t.events.iter().enumerate() {
        for (j, f) in t.events.iter().enumerate() {
            assert_eq!(reach[i][j], e.happened_before(f), "vc oracle disagrees at ({i}, {j})");
            if reach[i][j] {
                assert_eq!(compare(&e.repcl, &f.repcl, cfg), Ordering::Before, "({i}, {j})");
            }
        }
    }
}

#[test]
fn dense_small_systems() {
    for (seed, (n, e, i)) in [(2, 40, 4), (3, 16, 2), (5, 100, 10), (8, 64, 8)].into_iter().enumerate() {
        let clock = ClockConfig::new(n, e, i).unwrap();
        let t = sim::run(&SimConfig::new(clock, 4_000.0, 3, 60_000, seed as u64)).unwrap();
        assert!(t.events.len() > 200, "{}", t.events.len());
        check(&t);
    }
}

#[test]
fn jittered_delays() {
    let clock = ClockConfig::new(6, 200, 8).unwrap();
    let mut cfg = SimConfig::new(clock, 2_000.0, 8, 100_000, 77);
    cfg.jitter = 400;
    let t = sim::run(&cfg).unwrap();
    check(&t);
}

#[test]
fn figure2() {
    check(&sim::figure2_trace(5).unwrap());
    check(&sim::figure2_trace(20).unwrap());
}
