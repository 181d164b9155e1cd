import pytest

from succex import bundled_dataset_path
from succex.cli import main


def _simulate(tmp_path, *extra):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--out", str(out), *extra]) == 0
    return out


def test_simulate_and_fit(tmp_path, capsys):
    data = _simulate(tmp_path, "--n", "2000", "--xi", "0.2", "--t-end", "20")
    assert main(["fit", str(data), "--location-form", "constant", "--scale-form", "constant"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("name,value,se\n") and "xi," in out


def test_theta_and_compare(tmp_path, capsys):
    long = _simulate(tmp_path, "--process", "demand", "--n", "1500", "--xi", "0.3", "--phi", "0.9")
    short = tmp_path / "short.csv"
    short.write_text("".join(open(long).readlines()[:401]))
    assert main(["theta", "--example", "--set", "k_max=3"]) == 0
    assert capsys.readouterr().out.startswith("k,theta")
    assert main(["compare", str(short), str(long), "--k", "2,3", "--set", "k_fit_max=3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 3 * 2


def test_exit_codes(tmp_path, capsys):
    assert main(["fit", "--example", "--set", "nope=1"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("t,value\n1,2\n2,oops\n")
    assert main(["fit", str(bad)]) == 3
    assert "bad.csv:3:" in capsys.readouterr().err
    assert main(["fit", str(tmp_path / "missing.csv")]) == 3
    gumbel = _simulate(tmp_path, "--n", "2000", "--xi", "0")
    assert main(["run", str(gumbel), "--out", str(tmp_path / "o")]) == 4
    assert "[step A3]" in capsys.readouterr().err
    with pytest.raises(SystemExit) as err:
        main(["run", "--example"])
    assert err.value.code == 2


def test_run_writes_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", bundled_dataset_path(), "--out", str(out), "--set", "k_max=8", "--set", "k_fit_max=6",
                 "--set", "samples_per_param=2", "--set", "quantile_years=2"])
    assert code == 0
    manifest = (out / "manifest.txt").read_text()
    for section in ("[config]", "[metadata]", "[files]"):
        assert section in manifest
    for name in ("params.csv", "theta.csv", "returns.csv", "gof.csv", "figures/gtk.svg"):
        assert (out / name).is_file()
    header = (out / "params.csv").read_text().splitlines()[0]
    assert header.startswith("k,method,location_form,scale_form,mu0")
