from __future__ import annotations

import json

import numpy as np
import pytest

from src.cli import EXIT_INPUT, EXIT_OK, EXIT_USAGE, main, parse_dims, parse_shapes
from src.errors import InvalidParameterError
from src.io.network_file import save_input, save_network
from src.io.outputs import dump_report, load_report
from src.model.network import random_network

from .nets import identity_network, seeded_anchor


@pytest.fixture
def problem(tmp_path):
    model = save_network(identity_network(), tmp_path / "net.json")
    x = save_input(np.array([1.0, 0.0]), 0, tmp_path / "x.json")
    return model, x


def test_verify_single_method(tmp_path, problem, capsys):
    model, x = problem
    out = tmp_path / "report.json"
    code = main(["verify", "--model", str(model), "--input", str(x), "--p", "inf", "--method", "fast-lin", "--target", "runner-up", "--out", str(out)])
    assert code == EXIT_OK
    report = load_report(out)
    assert len(report.certificates) == 1
    assert report.certificates[0].radius == pytest.approx(0.5, abs=1e-4)
    assert "[verify] fast-lin" in capsys.readouterr().out
    assert dump_report(report) == out.read_text(encoding="utf-8")


def test_verify_all_untargeted(tmp_path, problem):
    model, x = problem
    out = tmp_path / "report.json"
    assert main(["verify", "--model", str(model), "--input", str(x), "--method", "all", "--untargeted", "--out", str(out)]) == EXIT_OK
    report = load_report(out)
    assert [c.method for c in report.certificates] == ["fast-lin", "fast-lip", "op-norm"]
    assert all(c.target_class is None for c in report.certificates)
    assert report.mode == "untargeted"


def test_bad_norm_is_usage_error(problem, capsys):
    model, x = problem
    assert main(["verify", "--model", str(model), "--input", str(x), "--p", "3"]) == EXIT_USAGE
    assert "[error]" in capsys.readouterr().err


def test_bad_target_is_usage_error(problem):
    model, x = problem
    assert main(["verify", "--model", str(model), "--input", str(x), "--target", "0"]) == EXIT_USAGE


def test_missing_model_is_input_error(tmp_path, problem):
    _, x = problem
    assert main(["verify", "--model", str(tmp_path / "missing.json"), "--input", str(x)]) == EXIT_INPUT


def test_malformed_model_is_input_error(tmp_path, problem):
    _, x = problem
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"layers": [{"weights": [[1.0]]}]}), encoding="utf-8")
    assert main(["verify", "--model", str(bad), "--input", str(x)]) == EXIT_INPUT


def test_oversized_weight_is_input_error(tmp_path, problem):
    _, x = problem
    bad = tmp_path / "huge.json"
    bad.write_text('{"layers": [{"weights": [[1' + "0" * 400 + ', 0.0], [0.0, 1.0]], "bias": [0.0, 0.0]}]}', encoding="utf-8")
    assert main(["verify", "--model", str(bad), "--input", str(x)]) == EXIT_INPUT


def test_input_dimension_mismatch(tmp_path, problem):
    model, _ = problem
    x = save_input([1.0, 0.0, 0.0], None, tmp_path / "x3.json")
    assert main(["verify", "--model", str(model), "--input", str(x)]) == EXIT_INPUT


def test_compare_reports_gaps(tmp_path, problem, capsys):
    model, x = problem
    out = tmp_path / "compare.json"
    code = main(["compare", "--model", str(model), "--input", str(x), "--method", "all", "--resolution", "401", "--out", str(out)])
    assert code == EXIT_OK
    report = load_report(out)
    methods = [row.method for row in report.comparisons]
    assert methods == ["fast-lin", "fast-lip", "op-norm", "best"]
    for row in report.comparisons:
        assert row.gap_attack is not None and row.gap_attack >= 1.0
        assert row.gap_grid is not None and row.gap_grid >= 1.0
    assert all(row.sample_check for row in report.comparisons if row.method != "best")
    assert (tmp_path / "compare.parquet").exists() and (tmp_path / "compare.csv").exists()
    assert "[compare]" in capsys.readouterr().out


def test_compare_attack_not_found(tmp_path, capsys):
    net_path = tmp_path / "flat.json"
    net_path.write_text(
        json.dumps({"layers": [{"weights": [[0.0, 0.0], [0.0, 0.0]], "bias": [1.0, 0.0]}]}), encoding="utf-8"
    )
    x = save_input([0.0, 0.0], 0, tmp_path / "x.json")
    code = main(["compare", "--model", str(net_path), "--input", str(x), "--budget", "500", "--resolution", "11"])
    assert code == EXIT_OK
    assert "attack not-found" in capsys.readouterr().out


def test_bench_rows(tmp_path):
    out = tmp_path / "bench.json"
    code = main(["bench", "--shapes", "1x8,2x8", "--input-dim", "4", "--classes", "3", "--out", str(out)])
    assert code == EXIT_OK
    assert len(load_report(out).rows) == 2


def test_bench_speedup_column(tmp_path):
    out = tmp_path / "bench.json"
    args = ["bench", "--shapes", "1x8", "--input-dim", "4", "--classes", "4", "--untargeted", "--threads", "2", "--out", str(out)]
    assert main(args) == EXIT_OK
    row = load_report(out).rows[0]
    assert row["threads"] == 2 and "speedup" in row


def test_bench_is_reproducible(tmp_path):
    radii = []
    for name in ("a.json", "b.json"):
        main(["bench", "--shapes", "1x8", "--input-dim", "4", "--classes", "3", "--seed", "3", "--out", str(tmp_path / name)])
        radii.append(load_report(tmp_path / name).rows[0]["radius"])
    assert radii[0] == radii[1]


def test_gen_writes_network_and_input(tmp_path):
    net_path, x_path = tmp_path / "net.json", tmp_path / "x.json"
    assert main(["gen", "--dims", "2,20,20,2", "--seed", "1", "--out", str(net_path), "--input-out", str(x_path)]) == EXIT_OK
    assert main(["verify", "--model", str(net_path), "--input", str(x_path), "--method", "fast-lip"]) == EXIT_OK


def test_gen_requires_out():
    assert main(["gen", "--dims", "2,3"]) == EXIT_USAGE


def test_parsers():
    assert parse_dims("2,20,2") == [2, 20, 2]
    assert parse_shapes("2x1024, 3x1024") == [(2, 1024), (3, 1024)]
    with pytest.raises(InvalidParameterError):
        parse_dims("2")
    with pytest.raises(InvalidParameterError):
        parse_shapes("2by3")


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(3))
def test_compare_seven_layer_network(tmp_path, seed):
    net = random_network([2] + [16] * 6 + [3], seed)
    x0 = seeded_anchor(net, seed)
    model = save_network(net, tmp_path / "deep.json")
    x = save_input(x0, None, tmp_path / "x.json")
    out = tmp_path / "compare.json"
    code = main(["compare", "--model", str(model), "--input", str(x), "--method", "all", "--seed", str(seed), "--out", str(out)])
    assert code == EXIT_OK
    rows = {row.method: row for row in load_report(out).comparisons}
    for method in ("op-norm", "fast-lin"):
        row = rows[method]
        assert row.sample_check is True
        if row.attack_upper is not None:
            assert row.certified <= row.attack_upper
        if row.grid_min is not None:
            assert row.certified <= row.grid_min
