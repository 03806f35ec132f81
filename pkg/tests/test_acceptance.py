"""Acceptance gate: every capability claim runs here with its budget.

Each test executes one check from :mod:`dyntopic.acceptance` and prints
the check's PASS/FAIL line straight to the terminal (bypassing capture)
so a plain ``pytest -v`` run shows one verdict line per claim.
"""

from dyntopic import acceptance


def _gate(check, budget_s, capsys):
    result = check()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
    assert result.seconds < budget_s, (
        "check %s took %.2fs, budget %.0fs"
        % (result.name, result.seconds, budget_s)
    )
    return result


def test_nmf_objective_never_increases(capsys):
    _gate(acceptance.check_nmf_monotonicity, 5.0, capsys)


def test_ncpd_monotone_and_recovers_planted_rank(capsys):
    _gate(acceptance.check_ncpd_monotonic_recovery, 20.0, capsys)


def test_solvers_match_enumeration_oracle(capsys):
    _gate(acceptance.check_solver_oracles, 30.0, capsys)


def test_implicit_gram_coding_matches_materialized(capsys):
    _gate(acceptance.check_coding_equivalence, 10.0, capsys)


def test_online_nmf_tracks_batch_on_stationary_stream(capsys):
    _gate(acceptance.check_online_batch_agreement, 60.0, capsys)


def test_tensor_model_pins_pulse_topic_better_than_matrix(capsys):
    _gate(acceptance.check_pulse_topic_claim, 120.0, capsys)


def test_online_cp_surrogate_descends(capsys):
    _gate(acceptance.check_mm_descent, 10.0, capsys)


def test_online_fits_hold_one_slice_and_constant_state(capsys):
    _gate(acceptance.check_memory_contracts, 5.0, capsys)


def test_text_pipeline_reproduces_hand_fixtures(capsys):
    _gate(acceptance.check_preprocessing_fixtures, 1.0, capsys)


def test_cli_fits_are_bitwise_deterministic(capsys):
    _gate(acceptance.check_fit_determinism, 60.0, capsys)


def test_run_all_honors_name_filter():
    results = acceptance.run_all(["preprocessing-fixtures"])
    assert [r.name for r in results] == ["preprocessing-fixtures"]


def test_result_line_formats_verdict():
    ok = acceptance.CheckResult("demo", True, "fine", 0.1234)
    bad = acceptance.CheckResult("demo", False, "broken", 2.0)
    assert ok.line() == "PASS demo (0.12s): fine"
    assert bad.line() == "FAIL demo (2.00s): broken"
