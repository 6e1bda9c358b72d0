mod common;

use common::props::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn monitor_value_after_restart_is_its_first_term(case in cases(3.0)) {
        monitor_restarts_from_its_first_term(&case)?;
    }

    #[test]
    fn no_threshold_no_restart(case in cases(3.0)) {
        infinite_threshold_never_restarts(&case)?;
    }

    #[test]
    fn restart_continues_like_a_fresh_solver(case in cases(2.0)) {
        after_a_restart_the_run_is_a_fresh_start(&case)?;
    }
}
