//! Single-threaded generation throughput.

use std::time::Instant;

use serde::Serialize;

use crate::metal::{draw_wire_cell_with, Execution, MetalSpec};
use crate::via::{generate_via_cell_with, ViaSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub cell: String,
    pub area_um2: f64,
    pub seconds: f64,
    pub throughput_um2_per_s: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn time_runs(reps: usize, mut f: impl FnMut()) -> f64 {
    median(
        (0..reps.max(1))
            .map(|_| {
                let t = Instant::now();
                f();
                t.elapsed().as_secs_f64()
            })
            .collect(),
    )
}

fn result(cell: &str, total_x: i64, total_y: i64, seconds: f64) -> BenchResult {
    let area_um2 = total_x as f64 * total_y as f64 / 1e6;
    // guard against a zero reading from a coarse clock
    let seconds = seconds.max(1e-9);
    BenchResult { cell: cell.to_string(), area_um2, seconds, throughput_um2_per_s: area_um2 / seconds }
}

pub fn bench_metal(name: &str, spec: &MetalSpec, reps: usize) -> BenchResult {
    let secs = time_runs(reps, || {
        std::hint::black_box(draw_wire_cell_with(spec, Execution::Serial).expect("valid spec"));
    });
    result(name, spec.total_x, spec.total_y, secs)
}

pub fn bench_via(name: &str, spec: &ViaSpec, reps: usize) -> BenchResult {
    let secs = time_runs(reps, || {
        std::hint::black_box(generate_via_cell_with(spec, Execution::Serial).expect("valid spec"));
    });
    result(name, spec.m1.total_x, spec.m1.total_y, secs)
}

pub fn to_csv(rows: &[BenchResult]) -> String {
    let mut s = String::from("cell,area_um2,seconds,throughput_um2_per_s\n");
    for r in rows {
        s.push_str(&format!("{},{},{:.6},{:.1}\n", r.cell, r.area_um2, r.seconds, r.throughput_um2_per_s));
    }
    s
}
