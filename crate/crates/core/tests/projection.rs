mod oracle;

use oracle::TestRng;
use refine_core::projection::{assemble_final_mask, project_segments};
use refine_core::raster::BinaryMask;
use refine_core::region::{extract_regions, partition_region, RegionPartition};
use refine_core::watershed::SegmentMap;

/// Random labelling of the partition domain into `k` labels, compacted so
/// that every label 1..=M occurs.
fn random_segments(rng: &mut TestRng, p: &RegionPartition, k: u64) -> SegmentMap {
    let dom = p.extended_mask();
    let raw: Vec<u32> = dom
        .bits()
        .iter()
        .map(|&d| if d { 1 + rng.below(k) as u32 } else { 0 })
        .collect();
    let mut remap = vec![0u32; k as usize + 1];
    let mut next = 0;
    let labels = raw
        .iter()
        .map(|&l| {
            if l == 0 {
                return 0;
            }
            if remap[l as usize] == 0 {
                next += 1;
                remap[l as usize] = next;
            }
            remap[l as usize]
        })
        .collect();
    SegmentMap::from_labels(dom.width(), dom.height(), labels)
}

fn random_partitions(rng: &mut TestRng, want: usize) -> Vec<RegionPartition> {
    let mut out = Vec::new();
    while out.len() < want {
        let m = rng.blobby_mask(32, 32, 2);
        for r in &extract_regions(&m).regions {
            out.push(partition_region(
                r,
                rng.below(4) as usize,
                rng.below(4) as usize,
            ));
        }
    }
    out.truncate(want);
    out
}

#[test]
fn acceptance_equals_brute_force() {
    let mut rng = TestRng::new(1234);
    for (case, p) in random_partitions(&mut rng, 120).iter().enumerate() {
        let k = 1 + rng.below(12);
        let seg = random_segments(&mut rng, p, k);
        let refined = project_segments(&seg, p);
        let expected = oracle::accepted_segments(seg.labels(), seg.width(), &p.true_fg);
        assert_eq!(
            refined.accepted,
            expected.into_iter().collect::<Vec<_>>(),
            "case {case}"
        );

        let union: BinaryMask = refined
            .accepted
            .iter()
            .fold(BinaryMask::new(seg.width(), seg.height()), |acc, &l| {
                acc.union(&seg.segment_mask(l))
            });
        assert_eq!(refined.accepted_pixels, union);
        assert_eq!(refined.final_pixels, p.true_fg.union(&union));
        assert!(p.true_fg.is_subset_of(&refined.final_pixels));
        assert!(refined.final_pixels.is_subset_of(&p.extended_mask()));
    }
}

#[test]
fn merging_into_an_accepted_segment_never_shrinks() {
    let mut rng = TestRng::new(55);
    for p in random_partitions(&mut rng, 40) {
        let seg = random_segments(&mut rng, &p, 6);
        let before = project_segments(&seg, &p);
        let Some(&keep) = before.accepted.first() else {
            continue;
        };
        for victim in 1..=seg.segment_count() {
            let merged: Vec<u32> = seg
                .labels()
                .iter()
                .map(|&l| if l == victim { keep } else { l })
                .collect();
            let after = project_segments(
                &SegmentMap::from_labels(seg.width(), seg.height(), merged),
                &p,
            );
            assert!(before.final_pixels.is_subset_of(&after.final_pixels));
        }
    }
}

#[test]
fn aligned_segments_reproduce_the_region() {
    let m = BinaryMask::from_fn(30, 30, |x, y| (8..22).contains(&x) && (5..25).contains(&y));
    let p = partition_region(&extract_regions(&m).regions[0], 3, 3);
    let labels = p
        .region
        .bits()
        .iter()
        .zip(p.extended_mask().bits())
        .map(|(&r, &d)| {
            if r {
                1
            } else if d {
                2
            } else {
                0
            }
        })
        .collect();
    let seg = SegmentMap::from_labels(p.window.width, p.window.height, labels);
    let refined = project_segments(&seg, &p);
    assert_eq!(refined.accepted, vec![1]);
    assert_eq!(assemble_final_mask(&[refined], &[], (30, 30)), m);
}
