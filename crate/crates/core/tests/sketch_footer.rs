mod common;

use common::{consecutive, path_in, tempdir, write_groups};
use parquet::file::reader::{FileReader, SerializedFileReader};
use proptest::prelude::*;
use zonetwin::pq::RecordingReader;
use zonetwin::sketch::{
    extract_sketch, extract_sketch_from, read_filter_values, uncompressed_row_size, Sketch, SketchError,
};
use zonetwin::synth::{generate_dataset, DatasetSpec, Profile};

/// Min/max per row group computed from decoded values.
fn brute_force_zones(path: &std::path::Path, col: &str) -> Vec<(i64, i64, u64)> {
    read_filter_values(path, col)
        .unwrap()
        .iter()
        .map(|v| (*v.iter().min().unwrap(), *v.iter().max().unwrap(), v.len() as u64))
        .collect()
}

fn zones(s: &Sketch) -> Vec<(i64, i64, u64)> {
    s.row_groups.iter().map(|r| (r.min_val, r.max_val, r.rows)).collect()
}

#[test]
fn three_row_groups_of_ten() {
    let dir = tempdir();
    let p = path_in(&dir, "t.parquet");
    write_groups(&p, &consecutive(30, 10), 1, 0);
    let s = extract_sketch(&p, "k").unwrap();
    assert_eq!(zones(&s), vec![(0, 9, 10), (10, 19, 10), (20, 29, 10)]);
    assert_eq!(zones(&s), brute_force_zones(&p, "k"));
    assert_eq!(
        (s.total_rows, s.num_row_groups, s.rows_per_group, s.column_count),
        (30, 3, 10, 2)
    );
    assert_eq!(s.codec, "ZSTD");
    assert!(s.row_groups.iter().all(|r| r.compressed_size > 0));
}

#[test]
fn single_row_group() {
    let dir = tempdir();
    let p = path_in(&dir, "one.parquet");
    write_groups(&p, &[vec![3, 5, 5, 8]], 0, 0);
    let s = extract_sketch(&p, "k").unwrap();
    assert_eq!(s.num_row_groups, 1);
    assert_eq!(zones(&s), vec![(3, 8, 4)]);
}

#[test]
fn short_final_group_is_accepted() {
    let dir = tempdir();
    let p = path_in(&dir, "tail.parquet");
    write_groups(&p, &consecutive(25, 10), 0, 0);
    let s = extract_sketch(&p, "k").unwrap();
    assert_eq!(s.row_counts(), vec![10, 10, 5]);
    assert_eq!(s.total_rows, 25);
}

#[test]
fn desk_scale_dataset_layout() {
    let dir = tempdir();
    let p = path_in(&dir, "tpch.parquet");
    let info = generate_dataset(&DatasetSpec::new(Profile::TpchLike, 100_000, 10_000), &p).unwrap();
    let s = extract_sketch(&p, &info.filter_column).unwrap();
    assert_eq!(
        (s.total_rows, s.num_row_groups, s.rows_per_group),
        (100_000, 10, 10_000)
    );
    assert_eq!(s.column_count, 9);
    assert_eq!(zones(&s), brute_force_zones(&p, &info.filter_column));
}

#[test]
fn reads_only_the_footer() {
    let dir = tempdir();
    let p = path_in(&dir, "f.parquet");
    write_groups(&p, &consecutive(50_000, 5_000), 3, 1);
    let reader = RecordingReader::open(&p).unwrap();
    extract_sketch_from(&reader, "k").unwrap();

    let meta = SerializedFileReader::new(std::fs::File::open(&p).unwrap()).unwrap();
    let data_end = meta
        .metadata()
        .row_groups()
        .iter()
        .flat_map(|rg| rg.columns())
        .map(|c| {
            let (start, len) = c.byte_range();
            start + len
        })
        .max()
        .unwrap();
    let ranges = reader.ranges();
    assert!(!ranges.is_empty());
    for (start, end) in ranges {
        assert!(
            start >= data_end,
            "read [{start}, {end}) overlaps column data ending at {data_end}"
        );
    }
}

#[test]
fn sizes_fit_in_file() {
    let dir = tempdir();
    let p = path_in(&dir, "s.parquet");
    write_groups(&p, &consecutive(20_000, 3_000), 4, 2);
    let s = extract_sketch(&p, "k").unwrap();
    let file_len = std::fs::metadata(&p).unwrap().len();
    assert!(s.total_compressed_size() <= file_len);
    assert!(s.total_compressed_size() > file_len / 2);
}

#[test]
fn uncompressed_row_size_matches_footer_fields() {
    let dir = tempdir();
    let p = path_in(&dir, "u.parquet");
    write_groups(&p, &consecutive(1_000, 100), 2, 3);
    let reader = SerializedFileReader::new(std::fs::File::open(&p).unwrap()).unwrap();
    let total: i64 = reader
        .metadata()
        .row_groups()
        .iter()
        .map(|rg| rg.columns().iter().map(|c| c.uncompressed_size()).sum::<i64>())
        .sum();
    let expected = (total as u64).div_ceil(1_000);
    assert_eq!(uncompressed_row_size(&p).unwrap(), expected);
    // Three 8-byte columns plus page framing.
    assert!(expected >= 24);
    assert_eq!(extract_sketch(&p, "k").unwrap().uncompressed_row_size, expected);
}

#[test]
fn error_cases() {
    let dir = tempdir();
    let unsorted = path_in(&dir, "unsorted.parquet");
    write_groups(&unsorted, &[vec![0, 5], vec![3, 9]], 0, 0);
    assert!(matches!(
        extract_sketch(&unsorted, "k"),
        Err(SketchError::NotSorted {
            row_group: 1,
            min: 3,
            prev_max: 5
        })
    ));
    assert!(matches!(
        extract_sketch(&unsorted, "nope"),
        Err(SketchError::MissingColumn(_))
    ));

    let ragged = path_in(&dir, "ragged.parquet");
    write_groups(&ragged, &[vec![0, 1], vec![2, 3, 4], vec![5, 6]], 0, 0);
    assert!(matches!(
        extract_sketch(&ragged, "k"),
        Err(SketchError::RaggedRowGroups {
            row_group: 1,
            rows: 3,
            expected: 2
        })
    ));

    let missing = path_in(&dir, "missing.parquet");
    assert!(matches!(extract_sketch(&missing, "k"), Err(SketchError::Io(_))));

    let garbage = path_in(&dir, "garbage.parquet");
    std::fs::write(&garbage, b"not a parquet file").unwrap();
    assert!(matches!(extract_sketch(&garbage, "k"), Err(SketchError::Parquet(_))));
}

#[test]
fn sketch_json_round_trip_from_file() {
    let dir = tempdir();
    let p = path_in(&dir, "j.parquet");
    write_groups(&p, &consecutive(100, 25), 1, 0);
    let s = extract_sketch(&p, "k").unwrap();
    let j = path_in(&dir, "s.json");
    s.save(&j).unwrap();
    assert_eq!(Sketch::load(&j).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn footer_matches_values(
        per in 1usize..40,
        k in 1usize..8,
        tail in 1usize..40,
        steps in proptest::collection::vec(0i64..5, 400),
        start in -1_000i64..1_000,
    ) {
        let tail = tail.min(per);
        let n = per * (k - 1) + tail;
        let mut v = start;
        let values: Vec<i64> = steps.iter().cycle().take(n).map(|s| { v += s; v }).collect();
        let groups: Vec<Vec<i64>> = values.chunks(per).map(|c| c.to_vec()).collect();
        let dir = tempdir();
        let p = path_in(&dir, "p.parquet");
        write_groups(&p, &groups, 1, 9);
        let s = extract_sketch(&p, "k").unwrap();
        prop_assert_eq!(zones(&s), brute_force_zones(&p, "k"));
        prop_assert_eq!(s.total_rows, n as u64);
        prop_assert!(s.validate().is_ok());
    }
}
