"""Rewrite tests/golden from the current build: ``python tests/regen_golden.py``.

Review the diff before committing; golden files are the reference outputs.
"""

import contextlib
import io
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from cli_cases import CASES, golden_name  # noqa: E402

from deltacalc.cli import main  # noqa: E402

GOLDEN = pathlib.Path(__file__).parent / "golden"


def capture(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue()


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    for cmd, argv in CASES.items():
        code, text = capture(argv)
        if code != 0:
            raise SystemExit(f"{cmd} exited {code}")
        (GOLDEN / golden_name(cmd)).write_text(text)
        print("wrote", golden_name(cmd))
