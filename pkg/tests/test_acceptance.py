"""Every acceptance criterion at its stated tolerance, one PASS/FAIL line each.

Run under pytest, or directly: python tests/test_acceptance.py [criterion ...]
"""
import sys

import pytest

from tfbec import harness


def _summary(res):
    return f"{'PASS' if res.passed else 'FAIL'} {res.id} ({res.runtime:.1f} s)"


@pytest.mark.slow
@pytest.mark.parametrize("cid", list(harness.CRITERIA))
def test_criterion(cid):
    res = harness.reproduce(cid, echo=False)
    detail = list(res.lines())
    print("\n".join(detail))
    try:
        from conftest import ACCEPTANCE_LINES
        ACCEPTANCE_LINES.append(_summary(res))
    except ImportError:
        pass
    failed = [line.strip() for line in detail[1:] if line.lstrip().startswith("FAIL")]
    if not res.passed:
        pytest.fail("; ".join(failed), pytrace=False)


def main(argv):
    ids = argv or list(harness.CRITERIA)
    ok = True
    for cid in ids:
        res = harness.reproduce(cid, echo=False)
        for line in list(res.lines())[1:]:
            print(line)
        print(_summary(res))
        ok &= res.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
