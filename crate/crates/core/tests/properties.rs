mod props;

fn check(f: props::Check, cases: u32) {
    if let Err(e) = f(cases) {
        panic!("{e}");
    }
}

#[test]
fn hilbert_analytic_signal() {
    check(props::hilbert_analytic_signal, 256);
}

#[test]
fn fractional_delay_composes() {
    check(props::fractional_delay_composes, 256);
}

#[test]
fn frequency_shift_power() {
    check(props::frequency_shift_power, 256);
}

#[test]
fn group_delay_tracks_delay() {
    check(props::group_delay_tracks_delay, 256);
}

#[test]
fn resample_round_trip() {
    check(props::resample_round_trip, 256);
}

#[test]
fn transmitter_skews_compose() {
    check(props::transmitter_skews_compose, 8);
}

#[test]
fn estimate_scale_phase_invariance() {
    check(props::estimate_scale_phase_invariance, 8);
}

#[test]
fn foe_error_bound() {
    check(props::foe_error_bound, 12);
}

#[test]
fn evm_snr_identity() {
    check(props::evm_snr_identity, 12);
}

#[test]
fn ber_matches_closed_form() {
    check(props::ber_matches_closed_form, 12);
}

#[test]
fn reconstruction_scale_invariance() {
    check(props::reconstruction_scale_invariance, 6);
}

#[test]
fn summary_ordering() {
    check(props::summary_ordering, 128);
}
