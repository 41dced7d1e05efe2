import math

import pytest

from renyi_ci import dsbs
from renyi_ci.cli import CSV_HEADER, InputError, main, parse_input

DSBS_FILE = """\
# DSBS with crossover 0.2
x_size = 2
y_size = 2
pxy = 0.4 0.1
      0.1 0.4
"""


def write(tmp_path, text, name="in.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def values(out):
    return dict(line.split(": ", 1) for line in out.strip().splitlines())


# --- input parsing ---


def test_parse_matrix_over_lines():
    spec = parse_input(DSBS_FILE)
    assert (spec.x_size, spec.y_size) == (2, 2)
    assert spec.pxy == pytest.approx((0.4, 0.1, 0.1, 0.4))


def test_parse_dsbs_shorthand():
    spec = parse_input("dsbs.crossover_p = 0.2\n")
    assert spec.dsbs == dsbs.from_crossover(0.2)
    assert spec.joint().probs[0, 1] == pytest.approx(0.1)


@pytest.mark.parametrize(
    "text, message",
    [
        ("x_size = 2\ny_size = 2\npxy = 0.5 0.5 -0.1 0.1\n", r"line 3: pxy\[2\] = -0.1 is not a probability"),
        ("x_size = 2\ny_size = 2\npxy = 0.5 0.5 0.1\n", "has 3 entries"),
        ("x_size = 2\ny_size = 2\npxy = 0.5 0.5 0.1 0.1\n", "sums to"),
        ("x_size = two\ny_size = 2\npxy = 0.25 0.25 0.25 0.25\n", "line 1: field 'x_size'"),
        ("x_size = 1\ny_size = 2\npxy = 0.5 0.5\ncolour = red\n", "line 4: unknown key"),
        ("x_size = 1\ny_size = 2\n0.5 0.5\n", "line 3: expected"),
        ("x_size = 1\nx_size = 1\n", "duplicate"),
        ("x_size = 1\ny_size = 2\n", "needs 'pxy'"),
        ("dsbs.crossover_p = 0.7\n", "crossover"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(InputError, match=message):
        parse_input(text)


def test_bad_input_exits_one(tmp_path, capsys):
    path = write(tmp_path, "x_size = 2\ny_size = 2\npxy = 0.5 0.5 -0.1 0.1\n")
    assert main(["bounds", path]) == 1
    assert "pxy[2]" in capsys.readouterr().err
    assert main(["bounds", str(tmp_path / "missing.txt")]) == 1
    assert main(["bounds", write(tmp_path, DSBS_FILE), "--restarts", "0"]) == 1


# --- bounds ---


def test_bounds_on_product(tmp_path, capsys):
    path = write(tmp_path, "x_size = 2\ny_size = 2\npxy = 0.18 0.12 0.42 0.28\n")
    assert main(["bounds", path, "--restarts", "2"]) == 0
    out = values(capsys.readouterr().out)
    assert float(out["value"]) <= 1e-6
    assert out["converged"] == "true" and out["unit"] == "nats"


def test_bounds_on_dsbs(tmp_path, capsys):
    path = write(tmp_path, DSBS_FILE)
    assert main(["bounds", path, "--s", "1", "--w-card", "2", "--restarts", "4"]) == 0
    out = values(capsys.readouterr().out)
    assert float(out["value"]) == pytest.approx(dsbs.ub_value(dsbs.from_crossover(0.2), 1.0), abs=1e-4)


def test_bounds_tinf_and_bits(tmp_path, capsys):
    path = write(tmp_path, "dsbs.crossover_p = 0.2\n")
    assert main(["bounds", path, "--which", "tinf", "--w-card", "2", "--restarts", "4", "--bits"]) == 0
    out = values(capsys.readouterr().out)
    expected = dsbs.t_infinity_value(dsbs.from_crossover(0.2)) / math.log(2)
    assert out["unit"] == "bits" and out["s"] == "inf"
    assert float(out["value"]) == pytest.approx(expected, abs=1e-4)


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    path = write(tmp_path, DSBS_FILE)
    monkeypatch.setenv("RENYI_CI_SEED", "11")
    main(["bounds", path, "--w-card", "2", "--restarts", "1"])
    assert values(capsys.readouterr().out)["seed"] == "11"
    main(["bounds", path, "--w-card", "2", "--restarts", "1", "--seed", "3"])
    assert values(capsys.readouterr().out)["seed"] == "3"


# --- sweep ---


def test_sweep_csv_format(tmp_path, capsys):
    assert main(["dsbs-sweep", "--mode", "over_s", "--grid", "0.5,1", "--restarts", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    cells = lines[2].split(",")
    assert float(cells[0]) == 1.0
    params = dsbs.from_crossover(0.2)
    assert float(cells[1]) == pytest.approx(dsbs.wyner_value(params), abs=1e-11)
    assert float(cells[2]) == pytest.approx(dsbs.ub_value(params, 1.0), abs=1e-3)
    assert float(cells[4]) == pytest.approx(dsbs.t_infinity_value(params), abs=1e-11)
    assert cells[5:] == ["true", "true"]


def test_sweep_over_p_linspace(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["dsbs-sweep", "--mode", "over_p", "--start", "0.1", "--stop", "0.3", "--num", "2", "--restarts", "2", "--out", str(out)])
    assert code == 0
    assert len(out.read_text().splitlines()) == 3


def test_sweep_grid_errors(capsys):
    assert main(["dsbs-sweep", "--mode", "over_s"]) == 1
    assert main(["dsbs-sweep", "--mode", "over_s", "--grid", "1,x"]) == 1


def test_sweep_bad_point_is_recorded(capsys):
    code = main(["dsbs-sweep", "--mode", "over_p", "--grid", "0.2,0.7", "--restarts", "1"])
    assert code == 2
    last = capsys.readouterr().out.splitlines()[-1]
    assert last.endswith(",,,,,false,false")


def test_sweep_is_byte_identical(tmp_path):
    args = ["dsbs-sweep", "--mode", "over_s", "--grid", "0.5,1", "--restarts", "2", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main([*args, "--out", str(a)])
    main([*args, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


# --- verify ---


def test_verify_reports_suites(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split()[1] for line in lines] == ["core", "coupling", "bounds", "dsbs"]
    assert all(line.split()[2] == "PASS" for line in lines)
