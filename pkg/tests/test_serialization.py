import math
import os

import numpy as np
import pandas as pd

from baxtertq.model import ModelKind, RootFamily, RootSet
from baxtertq.serialization import dumps, read_json, to_jsonable, write_csv, write_json


class TestToJsonable:

    def test_complex_pairs(self):
        assert to_jsonable(1 - 2j) == [1.0, -2.0]
        assert to_jsonable(np.complex128(0.5j)) == [0.0, 0.5]

    def test_non_finite(self):
        assert to_jsonable(math.nan) is None
        assert to_jsonable(np.float64(np.inf)) is None
        assert to_jsonable(complex(1, math.nan)) == [1.0, None]

    def test_enums_and_numpy(self):
        assert to_jsonable(ModelKind.TODA2) == "toda2"
        assert to_jsonable(np.int64(3)) == 3
        assert to_jsonable(np.array([1.0, 2.0])) == [1.0, 2.0]
        assert to_jsonable(True) is True

    def test_root_sets(self):
        assert to_jsonable(RootSet([0.25, -0.25j], RootFamily.DELTA)) == [[0.25, 0.0], [0.0, -0.25]]

    def test_to_dict_objects(self):
        class Report():
            def to_dict(self):
                return {1: 2j}

        assert to_jsonable([Report()]) == [{"1": [0.0, 2.0]}]

    def test_dumps_is_sorted(self):
        assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


class TestFiles:

    def test_json_round_trip(self, tmp_path):
        path = os.path.join(tmp_path, "nested", "out.json")
        write_json({"xi": 1 + 1j, "ok": True}, path)
        assert read_json(path) == {"xi": [1.0, 1.0], "ok": True}

    def test_csv(self, tmp_path):
        path = os.path.join(tmp_path, "grid.csv")
        write_csv(pd.DataFrame({"node": [0, 1], "value": [0.5, 1.5]}), path)
        assert pd.read_csv(path)["value"].tolist() == [0.5, 1.5]

    def test_no_temporary_files_left(self, tmp_path):
        write_json({"a": 1}, os.path.join(tmp_path, "a.json"))
        write_json({"a": 2}, os.path.join(tmp_path, "a.json"))
        assert os.listdir(tmp_path) == ["a.json"]
        assert read_json(os.path.join(tmp_path, "a.json")) == {"a": 2}
