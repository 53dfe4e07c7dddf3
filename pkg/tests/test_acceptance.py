"""Acceptance criteria at their stated sizes, tolerances and time budgets.

Each test prints one ``criterion N PASS|FAIL`` line (also collected into the
terminal summary) before asserting.
"""
import hashlib
import time

import transcrit.experiments as E
from transcrit.cli import main

CFG = E.SuiteConfig()


def judge(log, number, title, checks, budget):
    t = time.perf_counter()
    rows = [r for fn in checks for r in fn(CFG)]
    elapsed = time.perf_counter() - t
    ok = all(r.status == "pass" for r in rows) and elapsed < budget
    detail = "; ".join(f"{r.claim}: {r.status} ({r.measured})" for r in rows)
    line = (f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} "
            f"[{elapsed:.1f} s / {budget} s] {detail}")
    print(line)
    log(line)
    assert ok, line


def test_criterion_01_conjugacy(criterion_log):
    judge(criterion_log, 1, "chart steps conjugate to the Euler step",
          [E.check_conjugacy], 10)


def test_criterion_02_round_trips(criterion_log):
    judge(criterion_log, 2, "chart changes invert to 2 ulp", [E.check_round_trips], 5)


def test_criterion_03_conserved_products(criterion_log):
    judge(criterion_log, 3, "chart products conserved", [E.check_conserved_products], 5)


def test_criterion_04_residual_order(criterion_log):
    judge(criterion_log, 4, "invariance residual order (2, 1)",
          [E.check_residual_order], 10)


def test_criterion_05_eigenvalues(criterion_log):
    judge(criterion_log, 5, "fixed-point multipliers and resonance",
          [E.check_eigenvalues], 5)


def test_criterion_06_transition_time(criterion_log):
    judge(criterion_log, 6, "K1 passage length above the lower bound",
          [E.check_transition_time], 60)


def test_criterion_07_k2_passages(criterion_log):
    judge(criterion_log, 7, "K2 passages exit through the regime's set",
          [E.check_k2_passages], 120)


def test_criterion_08_exit_height(criterion_log):
    judge(criterion_log, 8, "exit-height exponent in band", [E.check_exit_height], 120)


def test_criterion_09_contraction(criterion_log):
    judge(criterion_log, 9, "width contraction affine in 1/(nu delta)",
          [E.check_contraction], 120)


def test_criterion_10_closeness(criterion_log):
    judge(criterion_log, 10, "closeness constants stable", [E.check_closeness], 60)


def test_criterion_11_euler_order(criterion_log):
    judge(criterion_log, 11, "Euler order one and exact diagonal",
          [E.check_euler_order, E.check_canard], 30)


def test_criterion_12_determinism(tmp_path, criterion_log):
    digests, times, codes = [], [], []
    for k in range(2):
        out = tmp_path / f"run{k}"
        t = time.perf_counter()
        codes.append(main(["verify", "--out", str(out)]))
        times.append(time.perf_counter() - t)
        digests.append(tuple(hashlib.sha256((out / name).read_bytes()).hexdigest()
                             for name in ("report.csv", "report.txt")))
    ok = digests[0] == digests[1] and codes[0] == codes[1] and max(times) < 300
    line = (f"criterion 12 {'PASS' if ok else 'FAIL'}: repeated verify reports identical "
            f"[{max(times):.1f} s / 300 s per run] sha256 {digests[0][0][:16]} vs "
            f"{digests[1][0][:16]}, exit codes {codes}")
    print(line)
    criterion_log(line)
    assert ok, line
