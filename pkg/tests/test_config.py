import json
import math

import numpy as np
import pytest

from subshift_ifs.config import (
    ConfigError,
    FactorPairConfig,
    SystemConfig,
    load_config,
    named_configs,
    parse_config,
    parse_number,
)
from subshift_ifs.symbolic import enumerate_language

EXPECTED = {
    "cantor-full", "common-fixed-point", "eg2egs-r04", "even-sofic", "ex12infty", "golden",
    "golden-even-factor", "identical-attractor-F", "identical-attractor-G", "koch",
    "rooted-required", "two-fixed-points",
}

BASE = {
    "box": {"lo": [0], "hi": [1]},
    "maps": [{"a": "1/3", "b": 0}, {"a": "1/3", "b": "2/3"}],
    "subshift": {"kind": "full"},
}


def with_(**kw):
    raw = json.loads(json.dumps(BASE))
    raw.update(kw)
    return raw


def test_bundled_configs_present():
    assert EXPECTED <= set(named_configs())


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_bundled_config_round_trip(name, tmp_path):
    cfg = load_config(name)
    canon = cfg.canonical()
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(canon))
    again = load_config(path)
    assert again.canonical() == canon
    assert again.digest() == cfg.digest()
    if isinstance(cfg, SystemConfig):
        for f, g in zip(cfg.system.maps, again.system.maps):
            assert f == g
        assert enumerate_language(cfg.system.shift, 5) == enumerate_language(again.system.shift, 5)


def test_parse_number():
    assert parse_number("1/3") == 1 / 3
    assert parse_number("sqrt(3)/6") == math.sqrt(3) / 6
    assert parse_number("-2**-2") == -0.25
    assert parse_number(7) == 7.0
    for bad in ["__import__('os')", "1/0", "x", True, None, "1e999"]:
        with pytest.raises(ConfigError):
            parse_number(bad)


def test_koch_config_maps():
    cfg = load_config("koch")
    g2 = cfg.system.maps.of(2)
    assert np.allclose(g2(np.zeros(2)), [1 / 3, 0])
    assert cfg.system.dim == 2 and cfg.eps == 2e-3 and cfg.tol == 8e-3


def test_alphabet_defaults_to_map_count():
    cfg = parse_config(BASE)
    assert cfg.system.shift.alphabet == 2


@pytest.mark.parametrize(
    "raw",
    [
        with_(subshift={"kind": "full", "alphabet": 3}),
        with_(maps=[{"a": 1.0, "b": 0}]),
        with_(maps=[{"a": 0.5, "b": 0.6}, {"a": 0.5, "b": 0}]),
        with_(numeric={"epsilon": 1e-3, "tol": 1e-3}),
        with_(numeric={"bogus": 1}),
        with_(flags={"sparkly": True}),
        with_(subshift={"kind": "nonsense"}),
        with_(subshift={"kind": "sft", "forbidden": ["13"]}),
        with_(box={"lo": [0, 0], "hi": [1, 1]}),
        {"maps": BASE["maps"], "subshift": BASE["subshift"]},
    ],
    ids=["alphabet", "expanding", "box-escape", "tol", "numeric-key", "flag", "kind", "symbol", "dimension", "no-box"],
)
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config("no-such-config")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_factor_pair_config():
    cfg = load_config("golden-even-factor")
    assert isinstance(cfg, FactorPairConfig)
    assert cfg.phi2 is None
    assert cfg.code.table == {(1,): 2, (2,): 1, (3,): 1}
    assert cfg.source.system.shift.alphabet == 3


def test_digest_ignores_key_order_and_defaults():
    a = parse_config(BASE)
    b = parse_config(with_(numeric={"epsilon": 1e-4}))
    c = parse_config(dict(reversed(list(BASE.items()))))
    assert a.digest() == b.digest() == c.digest()
    assert a.digest() != parse_config(with_(numeric={"epsilon": 2e-4})).digest()


def test_all_subshift_kinds_parse():
    kinds = [
        {"kind": "sft", "forbidden": ["22"]},
        {"kind": "sofic", "edges": [["A", "A", 2], ["A", "B", 1], ["B", "A", 1]]},
        {"kind": "coded", "generators": ["12", "1"]},
        {"kind": "coded_truncated", "families": [{"prefix": "2", "repeat": "11"}], "max_length": 7},
        {"kind": "orbit_closure", "transient": "2", "period": "1"},
    ]
    for rec in kinds:
        cfg = parse_config(with_(subshift=rec))
        assert enumerate_language(cfg.system.shift, 3)
    p = parse_config(with_(maps=[{"a": 0.1, "b": 0}] * 4,
                           subshift={"kind": "power", "power": 2, "base": {"kind": "full", "alphabet": 2}}))
    assert p.system.shift.alphabet == 4
