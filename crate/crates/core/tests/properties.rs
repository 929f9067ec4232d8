mod props;

fn suite(name: &str) {
    if let Err(e) = props::run_suite(name, 256) {
        panic!("{name}: {e}");
    }
}

#[test]
fn rank_order_is_a_strict_total_order() {
    suite("rank_order");
}

#[test]
fn worst_future_rank_never_rises_with_age() {
    suite("worst_rank_monotone");
}

#[test]
fn recycling_matches_rank_direction() {
    suite("recycle_counts");
}

#[test]
fn busy_period_iterates_bracket_the_fixed_point() {
    suite("busy_period_bracketing");
}

#[test]
fn clips_of_a_partition_add_up_to_the_mean() {
    suite("clip_partition");
}

#[test]
fn new_load_grows_with_the_bound() {
    suite("new_load_monotone");
}

#[test]
fn every_listed_suite_runs() {
    for name in props::SUITES {
        props::run_suite(name, 1).unwrap();
    }
    assert!(props::run_suite("nope", 1).is_err());
}
