import doctest
import importlib

import pytest

MODULES = ["matrixcore", "pathmodel", "monodromy", "simplexflow", "limits"]


@pytest.mark.parametrize("name", MODULES)
def test_docstring_examples(name):
    module = importlib.import_module(f"patchgrowth.{name}")
    result = doctest.testmod(module, optionflags=doctest.NORMALIZE_WHITESPACE | doctest.ELLIPSIS)
    assert result.attempted > 0
    assert result.failed == 0
