import pytest

from beltrami_lab.config import SCHEMA, SCHEMA_PATH, ConfigError, load_config, parse_config
from beltrami_lab.grid import Grid, write_bfld

GOOD = """\
[grid]
n = 128
half_side = 4.0

[solver]
tolerance = 1e-9
max_iterations = 80

[coefficients]
family = radial-stretch
k = 0.3

[probe]
s = 0.3
p = 4
kappa = 0.3
q_grid = 1.8, 2.5 3.5
refinement_levels = 64, 128
"""


def test_parse_good():
    cfg = parse_config(GOOD)
    assert cfg.grid == Grid(128, 4.0)
    assert cfg.solver.tolerance == 1e-9 and cfg.solver.max_iterations == 80
    assert cfg.family.kind == "radial-stretch" and cfg.family.k == 0.3
    assert cfg.probe.q_grid == (1.8, 2.5, 3.5) or list(cfg.probe.q_grid) == [1.8, 2.5, 3.5]
    assert list(cfg.probe.refinement_levels) == [64, 128]
    assert cfg.probe.half_side == 4.0


def _err(text, **kw):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, **kw)
    return exc.value


def test_bad_q_grid_names_key_and_line():
    e = _err(GOOD.replace("1.8, 2.5 3.5", "0.5, 2.0"))
    assert "q_grid entries must exceed 1" in str(e)
    assert (e.section, e.key, e.line) == ("probe", "q_grid", 17)
    assert str(e).startswith("[probe] q_grid (line 17): ")


@pytest.mark.parametrize("edit, section, key", [
    (("n = 128", "n = 100"), "grid", "n"),
    (("n = 128", "n = lots"), "grid", "n"),
    (("half_side = 4.0", "half_side = 0.5"), "grid", "half_side"),
    (("tolerance = 1e-9", "tolerance = 2"), "solver", "tolerance"),
    (("family = radial-stretch", "family = annulus"), "coefficients", "family"),
    (("k = 0.3", "k = 1.5"), "coefficients", "k"),
    (("kappa = 0.3", "kappa = 1.2"), "probe", "kappa"),
    (("refinement_levels = 64, 128", "refinement_levels = 128, 64"), "probe", "refinement_levels"),
    (("s = 0.3", "colour = red"), "probe", "colour"),
    (("p = 4\n", ""), "probe", "p"),
])
def test_errors_name_section_and_key(edit, section, key):
    e = _err(GOOD.replace(*edit))
    assert e.section == section and e.key == key


def test_unknown_section_and_missing_section(tmp_path):
    e = _err(GOOD + "\n[plot]\ncolour = red\n")
    assert e.section == "plot" and e.line == 20
    with pytest.raises(ConfigError, match="missing required section \\[grid\\]"):
        parse_config("[coefficients]\nfamily = radial-stretch\nk = 0.3\n", require=("grid",))
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("n = 3\n")
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.cfg")


def test_family_variants(tmp_path):
    g = Grid(64, 4.0)
    write_bfld(tmp_path / "mu.bfld", g.zeros())
    cfg_text = "[coefficients]\nfamily = custom\nmu_path = mu.bfld\n"
    (tmp_path / "c.cfg").write_text(cfg_text)
    cfg = load_config(tmp_path / "c.cfg")
    assert cfg.family.kind == "custom" and cfg.family.path == str(tmp_path / "mu.bfld")
    e = _err("[coefficients]\nfamily = custom\nmu_path = missing.bfld\n", base_dir=tmp_path)
    assert e.key == "mu_path" and e.line == 3
    cfg = parse_config("[coefficients]\nfamily = mollified\nbase = disk-indicator\nk = 0.4\nn_moll = 4\n")
    assert cfg.family.describe() == "mollified(disk-indicator(k=0.4), n_moll=4)"
    assert _err("[coefficients]\nfamily = mollified\nbase = disk-indicator\nk = 0.4\n").key == "n_moll"
    assert _err("[coefficients]\nfamily = disk-indicator\n").key == "k"
    e = _err("[probe]\ns = 0.3\np = 4\nkappa = 0.3\nq_grid = 2\nrefinement_levels = 64\n")
    assert "[coefficients]" in str(e)


def test_schema_file_documents_every_key():
    text = SCHEMA_PATH.read_text()
    for section, keys in SCHEMA.items():
        assert f"[{section}]" in text
        for key in keys:
            assert f"\n  {key} " in text, key


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.cfg"))
    assert files
    for f in files:
        load_config(f)
