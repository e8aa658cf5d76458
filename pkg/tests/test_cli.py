import csv
import json

import pytest

from svlab import __version__
from svlab.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def _read_csv(path):
    lines = path.read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    body = list(csv.reader(l for l in lines if not l.startswith("#")))
    return header, body


def test_moments_writes_csv_with_provenance(tmp_path):
    code = main(["moments", "--preset", "heston", "--a", "1", "--sigma", "1", "--g", "0.5",
                 "--max-m", "2", "--max-n", "1", "--t-points", "5", "--out", str(tmp_path),
                 "--quiet"])
    assert code == EXIT_OK
    header, body = _read_csv(tmp_path / "moments.csv")
    assert header[0] == f"# svlab {__version__}"
    man = json.loads(header[1].removeprefix("# manifest "))
    assert man["command"] == "moments" and man["spec"]["a"] == 1.0
    assert body[0] == ["t", "m", "n", "value", "status"]
    rows = {(r[0], r[1], r[2]): float(r[3]) for r in body[1:]}
    # <X^2> grows as sigma t for the Heston preset
    assert rows["10.0", "2", "0"] == pytest.approx(10.0)
    assert (tmp_path / "manifest.json").exists()


def test_open_chain_is_numerical_failure(tmp_path, capsys):
    code = main(["moments", "--preset", "geometric-ou", "--out", str(tmp_path)])
    assert code == EXIT_NUMERIC
    assert "ChainDoesNotClose" in capsys.readouterr().err


def test_stability_guard_exit_code(tmp_path, capsys):
    code = main(["simulate", "--preset", "ou", "--a", "1", "--dt", "0.2", "--t-end", "2",
                 "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "StabilityGuard" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["frobnicate"],
    ["simulate", "--preset", "no-such-model"],
    ["verify", "--suite", "acceptance", "--criteria", "one"],
    ["moments", "--config", "/nonexistent/file.cfg"],
])
def test_usage_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_USAGE


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text("# Stein-Stein\npreset = stein-stein\na = 2\nsigma = 1.5\ng = 0.5\n")
    out = tmp_path / "out"
    code = main(["stationary", "--config", str(cfg), "--sigma", "3", "--max-n", "2",
                 "--out", str(out), "--quiet"])
    assert code == EXIT_OK
    header, body = _read_csv(out / "stationary_moments.csv")
    man = json.loads(header[1].removeprefix("# manifest "))
    assert man["spec"]["a"] == 2.0 and man["spec"]["sigma"] == 3.0
    n2 = next(r for r in body[1:] if r[0] == "2")
    # Gaussian law: sigma^2 + g^2 / (2a)
    assert float(n2[1]) == pytest.approx(9.0 + 0.0625, rel=1e-6)


def test_bad_config_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("preset heston\n")
    assert main(["moments", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_USAGE


def test_simulate_is_thread_independent(tmp_path):
    base = ["simulate", "--preset", "heston", "--dt", "0.01", "--t-end", "2", "--paths", "20",
            "--seed", "5", "--quiet"]
    for threads in (1, 3):
        assert main(base + ["--threads", str(threads), "--out", str(tmp_path / f"t{threads}")]) == 0
    one = (tmp_path / "t1" / "paths.csv").read_bytes()
    assert one == (tmp_path / "t3" / "paths.csv").read_bytes()
    _, body = _read_csv(tmp_path / "t1" / "paths.csv")
    assert body[0] == ["t", "path_id", "x", "s"]
    assert len({r[1] for r in body[1:]}) == 20


def test_short_time_log_ratio_small(tmp_path):
    code = main(["short-time", "--preset", "stein-stein", "--a", "1", "--sigma", "1",
                 "--g", "0.5", "--points", "9", "--out", str(tmp_path), "--quiet"])
    assert code == EXIT_OK
    _, body = _read_csv(tmp_path / "short_time.csv")
    assert body[0] == ["dx", "pdf_quadrature", "pdf_asymptote", "log_ratio"]
    # the last rows lie inside the tail window
    assert all(abs(float(r[3])) < 0.05 for r in body[-3:])


@pytest.mark.slow
def test_verify_model_suite_passes(tmp_path):
    code = main(["verify", "--preset", "heston", "--a", "1", "--sigma", "1", "--g", "0.5",
                 "--seed", "7", "--paths", "400", "--t-end", "30", "--out", str(tmp_path),
                 "--quiet"])
    assert code == EXIT_OK
    _, body = _read_csv(tmp_path / "verify.csv")
    assert len(body) > 3
