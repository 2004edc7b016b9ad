use layoutforge::features::ccas::{
    ccas_sample, circle_points, discretize, max_spaced, mutual_information, select_by_information, Direction,
};
use layoutforge::features::dct::{dct2, idct2, unzigzag, zigzag, zigzag_order};
use layoutforge::features::{feature_tensor, rasterize_clip, read_tensors, reconstruct, write_tensors, FeatureTensor, RasterClip};
use layoutforge::geom::{Cell, Rect, Shape};
use proptest::prelude::*;

fn block(n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (Just(n), prop::collection::vec(-10.0f64..10.0, n * n))
}

fn sized_block() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=16).prop_flat_map(block)
}

fn clip_from(rows: usize, grid: Vec<u8>) -> RasterClip {
    RasterClip { rows, cols: rows, grid, pixel_size: 1, origin: (0, 0), label: None }
}

proptest! {
    #[test]
    fn dct_round_trip_and_energy((n, x) in sized_block()) {
        let c = dct2(&x, n);
        let back = idct2(&c, n);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = c.iter().map(|v| v * v).sum();
        prop_assert!((ex - ec).abs() <= 1e-9 * ex.max(1e-300));
    }

    #[test]
    fn zigzag_is_invertible((n, x) in sized_block()) {
        let z = zigzag(&x, n);
        prop_assert_eq!(unzigzag(&z, n), x);
    }

    #[test]
    fn truncated_pipeline_matches_projection(seed_bits in prop::collection::vec(0u8..2, 16 * 16), keep in 1usize..=64) {
        let clip = clip_from(16, seed_bits);
        let t = feature_tensor(&clip, 2, keep).unwrap();
        prop_assert_eq!(t.values.len(), 2 * 2 * keep);
        let rec = reconstruct(&t, 8);
        // Dropped coefficients carry exactly the lost energy.
        let err: f64 = rec.iter().zip(&clip.grid).map(|(a, &b)| (a - b as f64).powi(2)).sum();
        let mut dropped = 0.0;
        for br in 0..2 {
            for bc in 0..2 {
                let mut blk = vec![0.0; 64];
                for r in 0..8 {
                    for c in 0..8 {
                        blk[r * 8 + c] = clip.get(br * 8 + r, bc * 8 + c) as f64;
                    }
                }
                dropped += zigzag(&dct2(&blk, 8), 8)[keep..].iter().map(|v| v * v).sum::<f64>();
            }
        }
        prop_assert!((err - dropped).abs() <= 1e-9 * (1.0 + dropped));
    }

    #[test]
    fn mi_is_symmetric_and_bounded(a in prop::collection::vec(0usize..4, 2..300), seed in any::<u64>()) {
        let b: Vec<usize> = a.iter().enumerate().map(|(i, &v)| (v + (seed as usize >> (i % 32)) % 3) % 5).collect();
        let ab = mutual_information(&a, &b).unwrap();
        let ba = mutual_information(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab >= 0.0);
        let aa = mutual_information(&a, &a).unwrap();
        prop_assert!(ab <= aa + 1e-12);
    }

    #[test]
    fn selection_keeps_spacing(mi in prop::collection::vec(0.0f64..1.0, 1..80), d in 0usize..5, pick in 0.0f64..1.0, max in any::<bool>()) {
        let cap = max_spaced(mi.len(), d);
        let n_c = 1 + ((cap - 1) as f64 * pick) as usize;
        let dir = if max { Direction::Maximize } else { Direction::Minimize };
        let sel = select_by_information(&mi, n_c, d, dir).unwrap();
        prop_assert_eq!(sel.len(), n_c);
        for w in sel.windows(2) {
            prop_assert!(w[1] > w[0] + d);
        }
        prop_assert!(sel.iter().all(|&i| (1..=mi.len()).contains(&i)));
        prop_assert!(select_by_information(&mi, cap + 1, d, dir).is_err());
    }

    #[test]
    fn discretize_stays_in_range(v in -1.0f64..2.0, bins in 1usize..64) {
        prop_assert!(discretize(v, bins) < bins);
    }
}

#[test]
fn zigzag_order_is_a_permutation() {
    for n in 1..=16 {
        let order = zigzag_order(n);
        let mut seen = vec![false; n * n];
        for (r, c) in order {
            assert!(!seen[r * n + c]);
            seen[r * n + c] = true;
        }
        assert!(seen.into_iter().all(|s| s));
    }
    let order = zigzag_order(3);
    assert_eq!(order, vec![(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (1, 2), (2, 1), (2, 2)]);
}

#[test]
fn constant_block_has_only_dc() {
    let c = dct2(&[1.0; 64], 8);
    assert!((c[0] - 8.0).abs() < 1e-12);
    assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn mi_reference_values() {
    let y: Vec<usize> = (0..100).map(|i| i % 2).collect();
    assert_eq!(mutual_information(&[0; 100], &y).unwrap(), 0.0);
    assert!((mutual_information(&y, &y).unwrap() - std::f64::consts::LN_2).abs() <= 1e-12);
    // x uniform on 4 values, y its low bit: I = ln 2
    let x: Vec<usize> = (0..400).map(|i| i % 4).collect();
    let yb: Vec<usize> = x.iter().map(|v| v & 1).collect();
    assert!((mutual_information(&x, &yb).unwrap() - std::f64::consts::LN_2).abs() <= 1e-12);
}

#[test]
fn circle_points_lie_on_the_ring() {
    for r in 1..=50i64 {
        let pts = circle_points(r);
        assert!(!pts.is_empty());
        for &(dx, dy) in &pts {
            let d2 = dx * dx + dy * dy;
            assert!((d2 as f64).sqrt() > r as f64 - 1.0 && (d2 as f64).sqrt() < r as f64 + 1.0, "r={r} ({dx},{dy})");
        }
        let mut dedup = pts.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), pts.len());
    }
}

#[test]
fn ccas_of_full_and_empty_clips() {
    let full = clip_from(20, vec![1; 400]);
    assert!(ccas_sample(&full, 10).unwrap().iter().all(|&v| v == 1.0));
    let empty = clip_from(20, vec![0; 400]);
    assert!(ccas_sample(&empty, 10).unwrap().iter().all(|&v| v == 0.0));
    assert!(ccas_sample(&full, 11).is_err());
}

#[test]
fn rasterize_samples_pixel_centers() {
    let bbox = Rect::new(0, 0, 100, 100).unwrap();
    let cell = Cell::new("C", bbox, vec![Shape { layer: 1, rect: Rect::new(10, 0, 30, 10).unwrap() }]).unwrap();
    let clip = rasterize_clip(&cell, Rect::new(0, 0, 40, 40).unwrap(), 10).unwrap();
    assert_eq!((clip.rows, clip.cols), (4, 4));
    assert_eq!(clip.grid, vec![0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
    assert!(rasterize_clip(&cell, Rect::new(0, 0, 45, 40).unwrap(), 10).is_err());
}

#[test]
fn tensor_file_round_trip() {
    let a = FeatureTensor { blocks: 2, keep: 3, values: (0..12).map(|v| v as f64 * 0.5 - 1.0).collect() };
    let b = FeatureTensor { blocks: 2, keep: 3, values: vec![f64::MIN_POSITIVE; 12] };
    let mut buf = Vec::new();
    write_tensors(&[a.clone(), b.clone()], &mut buf).unwrap();
    assert_eq!(buf.len(), 12 + 2 * 12 * 8);
    assert_eq!(&buf[..12], &[2, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0]);
    assert_eq!(read_tensors(buf.as_slice()).unwrap(), vec![a, b]);
    assert!(read_tensors(&buf[..buf.len() - 1]).is_err());
}
