mod oracle;

use oracle::TestRng;
use refine_core::raster::{BinaryMask, RgbImage};
use refine_core::region::{extract_regions, partition_region};
use refine_core::watershed::{
    find_markers, segment_extended_region, segment_extended_region_with, watershed_flood,
    GradientField, SegmentMap, WatershedError, WatershedOptions,
};

fn random_field(rng: &mut TestRng, w: usize, h: usize) -> GradientField {
    let domain = if rng.chance(50) {
        BinaryMask::full(w, h)
    } else {
        rng.blobby_mask(w, h, 3)
    };
    // few distinct levels so plateaus and ties are common
    let levels = 1 + rng.below(6);
    let values = (0..w * h).map(|_| rng.below(levels) as f32 * 0.5).collect();
    GradientField::new(values, domain)
}

fn is_partition_of_domain(seg: &SegmentMap, domain: &BinaryMask) -> bool {
    seg.labels().iter().zip(domain.bits()).all(|(&l, &d)| {
        if d {
            (1..=seg.segment_count()).contains(&l)
        } else {
            l == 0
        }
    })
}

#[test]
fn flood_matches_naive_reference() {
    let mut rng = TestRng::new(2024);
    for case in 0..30 {
        let g = random_field(&mut rng, 16, 16);
        let markers = find_markers(&g);
        let (oracle_markers, oracle_count) = oracle::markers(16, 16, g.values(), g.domain().bits());
        assert_eq!(markers.labels(), &oracle_markers[..], "markers case {case}");
        assert_eq!(markers.segment_count(), oracle_count);

        let fast = watershed_flood(&g, &markers).unwrap();
        let slow = oracle::naive_flood(16, 16, g.values(), g.domain().bits(), markers.labels());
        assert_eq!(fast.labels(), &slow[..], "flood case {case}");
        assert!(is_partition_of_domain(&fast, g.domain()));
        for (i, &m) in markers.labels().iter().enumerate() {
            if m != 0 {
                assert_eq!(fast.labels()[i], m, "marker pixel relabelled");
            }
        }
    }
}

#[test]
fn flood_matches_reference_with_arbitrary_seeds() {
    let mut rng = TestRng::new(9);
    for _ in 0..30 {
        let g = random_field(&mut rng, 16, 16);
        // sparse seeds, one per domain component so every pixel is reachable
        let (comp, n) = oracle::bfs_components(16, 16, g.domain().bits());
        let mut seeds = vec![0u32; 256];
        for c in 1..=n {
            let px: Vec<usize> = (0..256).filter(|&i| comp[i] == c).collect();
            for k in 0..1 + rng.below(3) {
                let i = px[rng.below(px.len() as u64) as usize];
                if seeds[i] == 0 {
                    seeds[i] = c * 4 + k as u32;
                }
            }
        }
        let fast = watershed_flood(&g, &SegmentMap::from_labels(16, 16, seeds.clone())).unwrap();
        let slow = oracle::naive_flood(16, 16, g.values(), g.domain().bits(), &seeds);
        assert_eq!(fast.labels(), &slow[..]);
    }
}

#[test]
fn flood_is_deterministic() {
    let mut rng = TestRng::new(31);
    let g = random_field(&mut rng, 16, 16);
    let m = find_markers(&g);
    assert_eq!(
        watershed_flood(&g, &m).unwrap(),
        watershed_flood(&g, &m).unwrap()
    );
}

#[test]
fn segments_are_connected() {
    let mut rng = TestRng::new(8);
    for _ in 0..30 {
        let g = random_field(&mut rng, 16, 16);
        let seg = watershed_flood(&g, &find_markers(&g)).unwrap();
        for l in 1..=seg.segment_count() {
            let sel = seg.segment_mask(l);
            let (_, parts) = oracle::bfs_components(16, 16, sel.bits());
            assert_eq!(parts, 1, "segment {l} split");
        }
    }
}

fn step_image(w: usize, h: usize, split: usize) -> RgbImage {
    let px: Vec<[u8; 3]> = (0..w * h)
        .map(|i| {
            if i % w < split {
                [200, 30, 30]
            } else {
                [30, 30, 200]
            }
        })
        .collect();
    RgbImage::from_pixels(w, h, &px).unwrap()
}

#[test]
fn uniform_region_gives_one_segment() {
    let img = RgbImage::filled(30, 30, [140, 70, 35]).unwrap();
    let m = BinaryMask::from_fn(30, 30, |x, y| (8..22).contains(&x) && (8..22).contains(&y));
    let p = partition_region(&extract_regions(&m).regions[0], 3, 3);
    let seg = segment_extended_region(&img, &p).unwrap();
    assert_eq!(seg.segment_count(), 1);
    assert_eq!(seg.coverage(), p.extended_mask());
}

#[test]
fn two_color_step_gives_two_segments_on_the_edge() {
    let (w, h, split) = (40, 30, 20);
    let img = step_image(w, h, split);
    let m = BinaryMask::from_fn(w, h, |x, y| (8..32).contains(&x) && (6..24).contains(&y));
    let p = partition_region(&extract_regions(&m).regions[0], 3, 3);
    for smooth in [false, true] {
        let seg = segment_extended_region_with(
            &img,
            &p,
            WatershedOptions {
                smooth_gradient: smooth,
            },
        )
        .unwrap();
        assert_eq!(seg.segment_count(), 2, "smooth={smooth}");
        // every row crosses from one label to the other within one pixel of the edge
        for y in 0..p.window.height {
            let row: Vec<u32> = (0..p.window.width)
                .map(|x| seg.label(x, y))
                .filter(|&l| l != 0)
                .collect();
            if row.is_empty() {
                continue;
            }
            let first_x =
                (0..p.window.width).find(|&x| seg.label(x, y) != 0).unwrap() + p.window.x0;
            let change = row
                .windows(2)
                .position(|w| w[0] != w[1])
                .map(|i| first_x + i + 1);
            let edge = change.expect("row must straddle the edge");
            assert!(edge.abs_diff(split) <= 1, "row {y}: boundary at {edge}");
        }
    }
}

#[test]
fn zero_radii_segments_cover_region_only() {
    let img = step_image(20, 20, 10);
    let m = BinaryMask::from_fn(20, 20, |x, y| (4..16).contains(&x) && (4..16).contains(&y));
    let p = partition_region(&extract_regions(&m).regions[0], 0, 0);
    let seg = segment_extended_region(&img, &p).unwrap();
    assert_eq!(p.to_frame(&seg.coverage()), m);
}

#[test]
fn degenerate_partition_is_an_error() {
    let img = RgbImage::filled(10, 10, [1, 2, 3]).unwrap();
    let mut m = BinaryMask::new(10, 10);
    m.set(4, 4, true);
    let p = partition_region(&extract_regions(&m).regions[0], 1, 1);
    assert_eq!(
        segment_extended_region(&img, &p),
        Err(WatershedError::DegeneratePartition(1))
    );
}
