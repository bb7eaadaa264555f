import io
import json
import sys

import pytest

from braidflow.cli import (
    EXIT_CONFIG,
    EXIT_GATE,
    EXIT_OK,
    ConfigError,
    ExperimentConfig,
    list_registry,
    main,
    read_config,
    reduce_words,
)


def _write(path, text):
    path.write_text(text)
    return path


def _run(tmp_path, body, name="exp.cfg", *extra):
    cfg = _write(tmp_path / name, body)
    return main(["run", str(cfg), "--output", str(tmp_path / "out"), *extra])


def _report(tmp_path, name):
    return json.loads((tmp_path / "out" / f"{name}.json").read_text())


def test_list_names_surfaces_and_quasimorphisms(capsys):
    assert main(["list"]) == EXIT_OK
    text = capsys.readouterr().out
    surfaces = text.split("flows:")[0].split()[1:]
    assert len(surfaces) >= 3
    assert "rademacher" in text and "brooks:<pattern>" in text
    assert text == list_registry()


def test_missing_seed_is_a_config_error(tmp_path, capsys):
    assert _run(tmp_path, "experiment = gg\n") == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


@pytest.mark.parametrize("body", [
    "experiment = gg\nseed = 1\nsamplez = 3\n",
    "experiment = nonsense\nseed = 1\n",
    "experiment = gg\nseed = x\n",
    "experiment = gg\nseed = 1\nhamiltonian = missing.ham\n",
    "experiment = gg\nseed = 1\ntol.nothing = 1\n",
    "experiment = gg\nseed = 1\nquasimorphism = nope\n",
])
def test_bad_configs_exit_3(tmp_path, body):
    assert _run(tmp_path, body) == EXIT_CONFIG


def test_usage_errors_exit_3():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_CONFIG


def test_include_and_override(tmp_path):
    _write(tmp_path / "base.cfg", "samples = 10\nk = 2\n# comment\n")
    (tmp_path / "sub").mkdir()
    _write(tmp_path / "sub" / "x.cfg", "include ../base.cfg\nk = 5\nseed = 2\n")
    assert read_config(tmp_path / "sub" / "x.cfg") == {"samples": "10", "k": "5", "seed": "2"}


def test_include_cycle_detected(tmp_path):
    _write(tmp_path / "a.cfg", "include = b.cfg\n")
    _write(tmp_path / "b.cfg", "include a.cfg\n")
    with pytest.raises(ConfigError):
        read_config(tmp_path / "a.cfg")


def test_config_ranges_and_defaults():
    cfg = ExperimentConfig.from_mapping({"experiment": "growth", "seed": "0", "m": "1..4",
                                         "deltas": "0.5, 0.25", "tol.energy_rel": "1e-7"})
    assert cfg.m == [1, 2, 3, 4] and cfg.deltas == [0.5, 0.25]
    assert cfg.tol.energy_rel == 1e-7
    assert "output" not in cfg.as_dict() and cfg.as_dict()["tolerances"] == {"energy_rel": 1e-7}


def test_calabi_check_writes_artifacts(tmp_path):
    body = ("experiment = calabi-check\nseed = 3\nsamples = 200\nk = 4\n"
            "hamiltonian = disc_radial_bump, disc_offcenter_bump\nname = cal\n")
    assert _run(tmp_path, body) == EXIT_OK
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == ["cal.csv", "cal.json", "cal.plt"]
    rep = _report(tmp_path, "cal")
    assert rep["status"] == "ok" and rep["seed"] == 3 and len(rep["config_hash"]) == 64
    assert rep["results"]["max_relative_deviation"] >= 0
    lines = (out / "cal.csv").read_text().splitlines()
    assert lines[0] == "flow,estimate,std_error,calabi,ratio" and len(lines) == 3
    assert 'plot "cal.csv"' in (out / "cal.plt").read_text()


def test_reports_identical_across_thread_counts(tmp_path, monkeypatch):
    body = "experiment = gg\nseed = 9\nsamples = 300\nk = 2\nm = 1,2\nhamiltonian = disc_double_bump\n"
    texts = []
    for threads in ("1", "4"):
        monkeypatch.setenv("BRAIDFLOW_THREADS", threads)
        assert _run(tmp_path, body) == EXIT_OK
        texts.append((tmp_path / "out" / "gg.json").read_bytes())
    assert texts[0] == texts[1]


def test_energy_gate_failure_exits_2(tmp_path):
    body = "experiment = gg\nseed = 1\nsamples = 20\nk = 1\ntol.energy_rel = 1e-30\n"
    assert _run(tmp_path, body) == EXIT_GATE
    rep = _report(tmp_path, "gg")
    assert rep["status"] == "gate_failure" and "EnergyGateError" in rep["error"]


def test_hamiltonian_file_flag(tmp_path):
    ham = _write(tmp_path / "bump.ham",
                 "surface = disc\nexpression = 0.2*(1 - (x^2 + y^2)/0.64)^4\nname = poly\n")
    # this polynomial does not vanish outside its disc: rejected
    assert _run(tmp_path, "experiment = gg\nseed = 1\n", "a.cfg", "--hamiltonian", str(ham)) == EXIT_CONFIG
    good = _write(tmp_path / "rot.ham", "surface = sphere\nexpression = z\nduration = 6.283185307179586\n")
    body = "experiment = gg\nseed = 1\nsamples = 50\nk = 1\nn = 2\n"
    assert _run(tmp_path, body, "b.cfg", "--hamiltonian", str(good)) == EXIT_OK
    assert _report(tmp_path, "gg")["results"]["reports"][0]["estimate"] != 0


def test_growth_with_certificates(tmp_path):
    body = ("experiment = growth\nseed = 0\nsamples = 100\nk = 1\nm = 1..3\n"
            "hamiltonian = disc_radial_bump\nquasimorphism = lk12\nn = 2\nC = 2\nfactors = 1,2\n")
    assert _run(tmp_path, body) == EXIT_OK
    res = _report(tmp_path, "growth")["results"]
    assert len(res["certificates"]) == 6
    assert all(c["inputs"]["C_is_hypothesis"] for c in res["certificates"])
    assert set(res["fit"]) == {"slope", "intercept", "r2", "slope_std_error"}


def test_decomposition_and_continuity_runs(tmp_path):
    body = ("experiment = decomposition\nseed = 0\nhamiltonian = sphere_height\npoints = 2\nk = 3\n"
            "base_duration = 6.283185307179586\n")
    assert _run(tmp_path, body) == EXIT_OK
    pts = _report(tmp_path, "decomposition")["results"]["points"]
    assert [p["m_over_k"] for p in pts] == [1.0, 1.0]
    body = "experiment = continuity\nseed = 0\nsamples = 60\nk = 1\ndeltas = 0, 0.1\n"
    assert _run(tmp_path, body) == EXIT_OK
    rows = _report(tmp_path, "continuity")["results"]["rows"]
    assert rows[0]["difference"] == 0.0 and len(rows) == 2


def test_lipschitz_probe_run(tmp_path):
    body = ("experiment = lipschitz-probe\nseed = 0\nsamples = 50\nk = 1\np = 2\n"
            "hamiltonian = disc_radial_bump, disc_offcenter_bump\n")
    assert _run(tmp_path, body) == EXIT_OK
    res = _report(tmp_path, "lipschitz-probe")["results"]
    assert res["max_ratio"] == max(r["ratio"] for r in res["rows"])


def test_combo_file_quasimorphism(tmp_path):
    _write(tmp_path / "eta.combo",
           "member rademacher\nmember expsum\nmember brooks:1,2,1,2,1,-2\n"
           "n=2\n1 1\n2 1 1 2\n")
    body = ("experiment = gg\nseed = 0\nsamples = 30\nk = 1\nn = 3\n"
            "hamiltonian = disc_radial_bump\nquasimorphism = combo:eta.combo\n")
    assert _run(tmp_path, body) == EXIT_OK
    assert _report(tmp_path, "gg")["results"]["reports"][0]["estimate"] == 0.0


def test_reduce_word_examples():
    text = ("n=3 sphere=0\n1 2 1 -2 -1 -2\n1 -1\n"
            "n=4 genus=2\n1 2 -1 -2 3 4 -3 -4 2\n1 2 -1 2\n")
    assert reduce_words(text) == ("n=3 sphere=0\n\nn=3 sphere=0\n\n"
                                  "n=4 genus=2\n2\nn=4 genus=2\n1 2 -1 2\n")
    # delta_3 is trivial on the sphere
    assert reduce_words("n=3 sphere=1\n1 2 2 1\n") == "n=3 sphere=1\n\n"


def test_reduce_word_cli(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO("n=3 sphere=0\n1 2 -1\n"))
    assert main(["reduce-word"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("n=3 sphere=0\n")
    monkeypatch.setattr(sys, "stdin", io.StringIO("1 2\n"))
    assert main(["reduce-word"]) == EXIT_CONFIG


def test_trace_cli(tmp_path, capsys):
    ev = tmp_path / "ev.csv"
    code = main(["trace", "--flow", "disc_rotation", "--duration", "6.283185307179586",
                 "--points=-0.5,0.01;0.5,0", "--events", str(ev)])
    assert code == EXIT_OK
    assert capsys.readouterr().out == "n=2 sphere=0\n1 1\n"
    assert len(ev.read_text().splitlines()) == 3
    assert main(["trace", "--flow", "disc_rotation", "--points", "0.1,0;0.1,0"]) == EXIT_GATE
