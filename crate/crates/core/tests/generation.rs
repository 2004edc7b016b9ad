use layoutforge::drc::{check_metal, check_via, check_via_layout, via_density_stats, ViolationKind};
use layoutforge::faults::{expected_kinds, inject_metal, inject_via, run_campaign, FaultKind, FaultTarget};
use layoutforge::metal::{draw_wire_cell_with, Execution, MetalSpec, Orientation};
use layoutforge::via::{generate_via_cell, remove_pitch_conflicts, ViaCandidateMatrix, ViaSpec};
use proptest::prelude::*;

fn metal(wire_cd: i64, pitch: i64, t2t: (i64, i64, i64), len: (i64, i64), side: i64, seed: u64) -> MetalSpec {
    MetalSpec {
        wire_cd,
        track_pitch: pitch,
        min_t2t: t2t.0,
        max_t2t: t2t.1,
        min_length: len.0,
        max_length: len.1,
        t2t_grid: t2t.2,
        total_x: side,
        total_y: side,
        origin: (0, 0),
        orientation: Orientation::Horizontal,
        layer: 1,
        seed,
    }
}

fn via(side: i64, density: f64, seed: u64) -> ViaSpec {
    let m1 = metal(70, 140, (70, 600, 10), (140, 1400), side, seed);
    let m2 = MetalSpec { orientation: Orientation::Vertical, layer: 3, seed: seed ^ 0xABCD, ..m1.clone() };
    ViaSpec {
        via_x: 70,
        via_y: 70,
        density,
        enclosure_x: 20,
        enclosure_y: 20,
        pitch_x: 140,
        pitch_y: 140,
        m1,
        m2,
        via_layer: 2,
        seed: seed.wrapping_mul(31),
    }
}

fn metal_strategy() -> impl Strategy<Value = MetalSpec> {
    (
        1i64..60,
        0i64..60,
        0i64..50,
        1i64..20,
        0i64..40,
        1i64..200,
        0i64..400,
        500i64..4000,
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(cd, extra, min_t2t, grid, t2t_steps, min_len, extra_len, side, seed, vertical)| {
            let mut s = metal(cd, cd + extra, (min_t2t, min_t2t + grid * t2t_steps, grid), (min_len, min_len + extra_len), side, seed);
            if vertical {
                s.orientation = Orientation::Vertical;
                s.total_x = side / 2 + 1;
            }
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_metal_specs_are_clean(spec in metal_strategy()) {
        let cell = draw_wire_cell_with(&spec, Execution::Serial).unwrap();
        let rep = check_metal(&cell, &spec);
        prop_assert!(rep.clean, "{}", rep.to_text());
        let par = draw_wire_cell_with(&spec, Execution::Parallel).unwrap();
        prop_assert_eq!(cell, par);
    }

    #[test]
    fn random_via_layouts_are_clean(seed in any::<u64>(), density in 0.0f64..=1.0, side in 1000i64..6000) {
        let spec = via(side, density, seed);
        let out = generate_via_cell(&spec).unwrap();
        let rep = check_via_layout(&out.m1, &out.m2, &out.via, &spec);
        prop_assert!(rep.clean, "{}", rep.to_text());
        let s = out.stats;
        prop_assert!(s.after_pitch <= s.after_density && s.after_density <= s.candidates);
        prop_assert_eq!(out.via.shapes().len(), s.after_pitch);
        let d = via_density_stats(&out.m1, &out.m2, &out.via, &spec);
        prop_assert_eq!(d.candidate_count, s.candidates);
        prop_assert_eq!(d.via_count, s.after_pitch);
    }

    #[test]
    fn pitch_pruning_leaves_no_adjacent_pair(bits in prop::collection::vec(prop::collection::vec(0u8..2, 1..12), 1..12)) {
        let cols = bits[0].len();
        let rows: Vec<Vec<u8>> = bits.into_iter().map(|mut r| { r.resize(cols, 0); r }).collect();
        let m = ViaCandidateMatrix::from_rows(&rows);
        let k = remove_pitch_conflicts(&m);
        for i in 0..k.rows() {
            for j in 0..k.cols() {
                if k.get(i, j) {
                    prop_assert!(m.get(i, j));
                    prop_assert!(i == 0 || !k.get(i - 1, j));
                    prop_assert!(j == 0 || !k.get(i, j - 1));
                }
            }
        }
        prop_assert_eq!(remove_pitch_conflicts(&k), k.clone());
    }
}

#[test]
fn every_metal_fault_is_caught() {
    let spec = metal(16, 32, (12, 200, 5), (44, 100), 3000, 9);
    let cell = draw_wire_cell_with(&spec, Execution::Serial).unwrap();
    assert!(check_metal(&cell, &spec).clean);
    for idx in (0..cell.shapes().len()).step_by(37) {
        for kind in FaultKind::ALL {
            let rep = check_metal(&inject_metal(&cell, &spec, idx, kind), &spec);
            let want = expected_kinds(FaultTarget::Metal, kind);
            assert!(rep.violations.iter().any(|v| want.contains(&v.kind)), "{kind:?} at {idx}: {}", rep.to_text());
        }
    }
}

#[test]
fn every_via_fault_is_caught() {
    let spec = via(4000, 0.5, 3);
    let out = generate_via_cell(&spec).unwrap();
    assert!(!out.via.shapes().is_empty());
    for idx in 0..out.via.shapes().len() {
        for kind in FaultKind::ALL {
            let rep = check_via(&out.m1, &out.m2, &inject_via(&out.via, &spec, idx, kind), &spec);
            let want = expected_kinds(FaultTarget::Via, kind);
            assert!(rep.violations.iter().any(|v| want.contains(&v.kind)), "{kind:?} at {idx}: {}", rep.to_text());
        }
    }
}

#[test]
fn grown_via_is_uncoverable_not_a_panic() {
    let spec = via(3000, 1.0, 4);
    let out = generate_via_cell(&spec).unwrap();
    let rep = check_via(&out.m1, &out.m2, &inject_via(&out.via, &spec, 0, FaultKind::Grow), &spec);
    assert!(rep.count(ViolationKind::ViaSize) >= 1);
    assert!(rep.count(ViolationKind::ViaUncovered) >= 1);
}

#[test]
fn campaign_rate() {
    let m = metal(16, 32, (12, 200, 5), (44, 100), 4000, 2);
    let cell = draw_wire_cell_with(&m, Execution::Serial).unwrap();
    let v = via(4000, 0.4, 8);
    let vias = generate_via_cell(&v).unwrap();
    let c = run_campaign(&cell, &m, &vias, &v, 200, 1);
    assert_eq!(c.injections.len(), 200);
    assert_eq!(c.injections.iter().filter(|i| i.target == FaultTarget::Via).count(), 100);
    assert!(c.detection_rate() >= 0.99, "{}", c.detection_rate());
}
