import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from helpers import models
from patchgrowth import ModelFileError, PatchModel, PiecewiseMatrixPath, catalog, modelfile

GOOD = {
    "name": "demo",
    "n": 2,
    "breakpoints": ["0", "1/3"],
    "segments": [
        {"r": [1, "-0.5"], "L": [[-1, 0], [1, 0]]},
        {"r": [-2, 2], "L": [[0, 1], [0, -1]]},
    ],
}


def mutate(path, value):
    doc = json.loads(json.dumps(GOOD))
    target = doc
    for key in path[:-1]:
        target = target[key]
    if value is KeyError:
        del target[path[-1]]
    else:
        target[path[-1]] = value
    return doc


def test_parse_good():
    model = modelfile.parse_model(GOOD)
    assert model.name == "demo"
    assert model.growth.breakpoints == (Fraction(0), Fraction(1, 3))
    assert np.allclose(model.growth_means(), [1 / 3 - 4 / 3, -0.5 / 3 + 4 / 3])


@pytest.mark.parametrize(
    "path, value, where",
    [
        (["n"], KeyError, "n"),
        (["n"], 0, "n"),
        (["breakpoints", 0], "1/4", "breakpoints[0]"),
        (["breakpoints", 1], "1/0", "breakpoints[1]"),
        (["breakpoints", 1], "abc", "breakpoints[1]"),
        (["breakpoints", 1], 1, "breakpoints[1]"),
        (["segments", 1, "L", 0, 1], -1, "segments[1].L[0][1]"),
        (["segments", 0, "L", 1, 0], 2, "segments[0].L"),
        (["segments", 1, "r"], [1, 2, 3], "segments[1].r"),
        (["segments", 0, "r", 1], True, "segments[0].r[1]"),
        (["segments", 0, "L"], KeyError, "segments[0].L"),
        (["segments"], [], "segments"),
    ],
)
def test_first_violation_has_path(path, value, where):
    with pytest.raises(ModelFileError) as exc:
        modelfile.parse_model(mutate(path, value))
    assert exc.value.path == where
    assert str(exc.value).startswith(where)


def test_invalid_json():
    with pytest.raises(ModelFileError):
        modelfile.loads("{not json")


def test_growth_only():
    doc = {"n": 2, "breakpoints": [0, "0.5"], "segments": [{"r": [2, -1]}, {"r": [-1, 2]}]}
    growth = modelfile.parse_model(doc, growth_only=True)
    assert isinstance(growth, PiecewiseMatrixPath)
    assert growth.breakpoints[1] == Fraction(1, 2)
    with pytest.raises(ModelFileError):
        modelfile.parse_model(doc)


@pytest.mark.parametrize("entry", catalog(), ids=lambda e: e.name)
def test_catalog_round_trip(entry, tmp_path):
    model = entry.build()
    path = tmp_path / "m.json"
    modelfile.dump(model, path)
    back = modelfile.load(path)
    assert back == model
    assert back.growth.breakpoints == model.growth.breakpoints
    assert all(isinstance(b, Fraction) for b in back.growth.breakpoints)
    assert back.name == entry.name


@settings(max_examples=40, deadline=None)
@given(models())
def test_random_round_trip(model):
    back = modelfile.loads(modelfile.dumps(model))
    assert isinstance(back, PatchModel)
    assert back == model


def test_dump_is_stable():
    model = catalog()[0].build()
    assert modelfile.dumps(model) == modelfile.dumps(modelfile.loads(modelfile.dumps(model)))
