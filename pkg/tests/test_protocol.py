import json
import subprocess
import sys

import numpy as np
import pytest

from maineffects.benchmarks import get_function
from maineffects.predictors import PredictorError, SubprocessPredictor

SERVE = [sys.executable, "-m", "maineffects", "serve-oracle", "--function"]


@pytest.fixture
def oracle_simple1():
    sp = SubprocessPredictor(SERVE + ["simple-1"], 2)
    yield sp
    sp.close()


class TestSubprocessPredictor:
    def test_values_match_registry_bitwise(self, oracle_simple1):
        fn = get_function("simple-1")
        pts = np.random.default_rng(0).uniform(-0.2, 1.2, (1000, 2))
        via_wire = oracle_simple1.predict_batch(pts)
        assert np.array_equal(via_wire, fn.evaluate_unit(pts))

    def test_chunking_is_transparent(self):
        fn = get_function("simple-2")
        pts = np.random.default_rng(1).uniform(0, 1, (2500, 4))
        with SubprocessPredictor(SERVE + ["simple-2"], 4, batch_limit=256) as chunked:
            small = chunked.predict_batch(pts)
            assert chunked._next_id == 10  # ceil(2500/256) requests
        with SubprocessPredictor(SERVE + ["simple-2"], 4, batch_limit=4096) as oneshot:
            big = oneshot.predict_batch(pts)
        assert np.array_equal(small, big)
        assert np.array_equal(small, fn.evaluate_unit(pts))

    def test_query_counter(self, oracle_simple1):
        oracle_simple1.predict_batch(np.zeros((3, 2)))
        oracle_simple1.predict_batch(np.zeros((5, 2)))
        assert oracle_simple1.queries == 8

    def test_empty_batch_never_hits_the_wire(self, oracle_simple1):
        before = oracle_simple1._next_id
        assert len(oracle_simple1.predict_batch([])) == 0
        assert oracle_simple1._next_id == before

    def test_nonexistent_command(self):
        with pytest.raises(PredictorError, match="no-such-predictor"):
            SubprocessPredictor(["no-such-predictor-binary"], 2)

    def test_death_mid_session_surfaces(self):
        sp = SubprocessPredictor(SERVE + ["simple-1"], 2)
        sp._proc.kill()
        sp._proc.wait()
        with pytest.raises(PredictorError, match="exited|closed its stdin"):
            sp.predict_batch([[0.1, 0.2]])

    def test_foreign_echo_server(self, tmp_path):
        # a third-party predictor speaking the protocol: value = 2*x0 - x1
        script = tmp_path / "echo_server.py"
        script.write_text(
            "import json, sys\n"
            "for line in sys.stdin:\n"
            "    msg = json.loads(line)\n"
            "    if msg['type'] == 'hello':\n"
            "        print(json.dumps({'type': 'ready'}), flush=True)\n"
            "    elif msg['type'] == 'predict':\n"
            "        vals = [2 * p[0] - p[1] for p in msg['points']]\n"
            "        print(json.dumps({'type': 'result', 'id': msg['id'],"
            " 'values': vals}), flush=True)\n"
            "    elif msg['type'] == 'bye':\n"
            "        break\n"
        )
        pts = np.random.default_rng(3).uniform(-5, 5, (200, 2))
        with SubprocessPredictor([sys.executable, str(script)], 2) as sp:
            got = sp.predict_batch(pts)
        assert np.array_equal(got, 2 * pts[:, 0] - pts[:, 1])

    def test_wrong_id_is_protocol_violation(self, tmp_path):
        script = tmp_path / "bad_id.py"
        script.write_text(
            "import json, sys\n"
            "for line in sys.stdin:\n"
            "    msg = json.loads(line)\n"
            "    if msg['type'] == 'hello':\n"
            "        print(json.dumps({'type': 'ready'}), flush=True)\n"
            "    elif msg['type'] == 'predict':\n"
            "        print(json.dumps({'type': 'result', 'id': 999,"
            " 'values': [0.0] * len(msg['points'])}), flush=True)\n"
        )
        sp = SubprocessPredictor([sys.executable, str(script)], 2)
        with pytest.raises(PredictorError, match="protocol violation"):
            sp.predict_batch([[0.0, 0.0]])

    def test_wrong_value_count_rejected(self, tmp_path):
        script = tmp_path / "short.py"
        script.write_text(
            "import json, sys\n"
            "for line in sys.stdin:\n"
            "    msg = json.loads(line)\n"
            "    if msg['type'] == 'hello':\n"
            "        print(json.dumps({'type': 'ready'}), flush=True)\n"
            "    elif msg['type'] == 'predict':\n"
            "        print(json.dumps({'type': 'result', 'id': msg['id'],"
            " 'values': [0.0]}), flush=True)\n"
        )
        sp = SubprocessPredictor([sys.executable, str(script)], 2)
        with pytest.raises(PredictorError, match="returned 1 values for 3"):
            sp.predict_batch(np.zeros((3, 2)))


class RawSession:
    """Drive serve-oracle line by line without the client abstraction."""

    def __init__(self, function):
        self.proc = subprocess.Popen(SERVE + [function], stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, text=True, bufsize=1)

    def send_line(self, line):
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def send(self, obj):
        self.send_line(json.dumps(obj))

    def recv(self):
        return json.loads(self.proc.stdout.readline())

    def close(self):
        if self.proc.poll() is None:
            self.proc.kill()
        self.proc.wait()


class TestServeOracleSessions:
    def test_handshake_then_predict_then_bye(self):
        s = RawSession("simple-1")
        try:
            s.send({"type": "hello", "dims": 2})
            assert s.recv() == {"type": "ready"}
            s.send({"type": "predict", "id": 0, "points": [[0.5, 0.2]]})
            reply = s.recv()
            assert reply["type"] == "result" and reply["id"] == 0
            assert reply["values"] == [0.45]
            s.send({"type": "bye"})
            assert s.proc.wait(timeout=5) == 0
        finally:
            s.close()

    def test_predict_before_hello(self):
        s = RawSession("simple-1")
        try:
            s.send({"type": "predict", "id": 0, "points": [[0.5, 0.2]]})
            reply = s.recv()
            assert reply["type"] == "error"
            assert "handshake required" in reply["message"]
        finally:
            s.close()

    def test_wrong_dims_refused(self):
        s = RawSession("simple-1")
        try:
            s.send({"type": "hello", "dims": 7})
            reply = s.recv()
            assert reply["type"] == "error" and "dimension 2" in reply["message"]
        finally:
            s.close()

    def test_malformed_line_keeps_session_alive(self):
        s = RawSession("simple-1")
        try:
            s.send({"type": "hello", "dims": 2})
            assert s.recv()["type"] == "ready"
            s.send_line("{not json at all")
            reply = s.recv()
            assert reply["type"] == "error" and reply["id"] is None
            s.send({"type": "predict", "id": 1, "points": [[0.0, 1.0]]})
            reply = s.recv()
            assert reply == {"type": "result", "id": 1, "values": [1.0]}
        finally:
            s.close()

    def test_unknown_type_and_bad_points(self):
        s = RawSession("simple-1")
        try:
            s.send({"type": "hello", "dims": 2})
            assert s.recv()["type"] == "ready"
            s.send({"type": "train", "id": 4})
            assert s.recv()["type"] == "error"
            s.send({"type": "predict", "id": 5, "points": [[1.0, 2.0, 3.0]]})
            reply = s.recv()
            assert reply["type"] == "error" and reply["id"] == 5
            s.send({"type": "predict", "id": 6, "points": [[0.0, 0.0]]})
            assert s.recv()["type"] == "result"
        finally:
            s.close()

    def test_eof_exits_cleanly(self):
        s = RawSession("simple-1")
        s.proc.stdin.close()
        assert s.proc.wait(timeout=5) == 0
        s.close()
