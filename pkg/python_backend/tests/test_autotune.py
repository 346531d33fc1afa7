"""
Auto-tuner 테스트
모의 시계로 측정 시간을 고정해 round-robin, 선택, 강제 alternative, dump 형식 확인
"""

import pytest

from core.exceptions import ParameterError
from engine.autotune import TunerState, tune_key, tuned_execute


class ScriptedClock:
    """alternative별로 정해진 소요 시간을 돌려주는 시계"""

    def __init__(self):
        self.now = 0.0
        self.pending = 0.0

    def __call__(self):
        self.now += self.pending
        self.pending = 0.0
        return self.now


def _alternatives(clock, costs, calls):
    def make(alt_id):
        def run():
            calls.append(alt_id)
            clock.pending = costs[alt_id]
            return alt_id
        return alt_id, run
    return [make(alt_id) for alt_id in costs]


@pytest.mark.unit
class TestTuneKey:

    def test_same_shapes_same_key(self):
        assert tune_key([(2, 3), (3, 4)], ["f32", "i16"]) == tune_key([(2, 3), (3, 4)], ["f32", "i16"])

    def test_row_count_changes_key(self):
        assert tune_key([(2, 3), (3, 4)], ["f32", "i16"]) != tune_key([(5, 3), (3, 4)], ["f32", "i16"])

    def test_empty_alternatives(self):
        with pytest.raises(ParameterError):
            tune_key([(2, 3)], [])


@pytest.mark.unit
class TestTunedExecute:

    def test_round_robin_then_commit_to_fastest(self):
        # Given: i16가 f32보다 빠른 시계
        clock = ScriptedClock()
        state = TunerState(budget=3, clock=clock)
        key = tune_key([(4, 8), (8, 8)], ["f32", "i16"])
        calls = []
        alternatives = _alternatives(clock, {"f32": 0.002, "i16": 0.001}, calls)

        # When: 예산(3회씩)을 넘겨 10번 실행
        results = [tuned_execute(state, key, alternatives) for _ in range(10)]

        # Then: 처음 6번은 번갈아, 이후는 i16 고정
        assert calls[:6] == ["f32", "i16"] * 3
        assert calls[6:] == ["i16"] * 4
        assert state.chosen(key) == "i16"
        assert results == calls

    def test_tie_goes_to_first_alternative(self):
        clock = ScriptedClock()
        state = TunerState(budget=2, clock=clock)
        key = tune_key([(1, 1)], ["a", "b"])
        calls = []
        alternatives = _alternatives(clock, {"a": 0.5, "b": 0.5}, calls)
        for _ in range(4):
            tuned_execute(state, key, alternatives)
        assert state.chosen(key) == "a"

    def test_forced_alternative_skips_measurement(self):
        clock = ScriptedClock()
        state = TunerState(budget=2, clock=clock, force_alt="i16")
        key = tune_key([(1, 1)], ["f32", "i16"])
        calls = []
        alternatives = _alternatives(clock, {"f32": 0.1, "i16": 0.2}, calls)
        for _ in range(3):
            tuned_execute(state, key, alternatives)
        assert calls == ["i16"] * 3
        assert state.dump() == []

    def test_unknown_forced_alternative(self):
        state = TunerState(force_alt="i8")
        with pytest.raises(ParameterError):
            tuned_execute(state, tune_key([(1, 1)], ["f32"]), [("f32", lambda: 1)])

    def test_failing_alternative_propagates_and_is_not_recorded(self):
        state = TunerState(budget=2)
        key = tune_key([(1, 1)], ["bad", "good"])

        def bad():
            raise RuntimeError("kernel failed")

        with pytest.raises(RuntimeError):
            tuned_execute(state, key, [("bad", bad), ("good", lambda: 1)])
        assert [m.count for m in state.measurements(key)] == [0, 0]

    def test_mismatched_alternatives_for_key(self):
        state = TunerState(budget=2)
        key = tune_key([(1, 1)], ["f32", "i16"])
        tuned_execute(state, key, [("f32", lambda: 1), ("i16", lambda: 2)])
        with pytest.raises(ParameterError):
            tuned_execute(state, key, [("i16", lambda: 2), ("f32", lambda: 1)])

    def test_budget_must_be_positive(self):
        with pytest.raises(ParameterError):
            TunerState(budget=0)


@pytest.mark.unit
class TestDump:

    def test_dump_lines(self, tmp_path):
        clock = ScriptedClock()
        state = TunerState(budget=1, clock=clock)
        key = tune_key([(2, 2)], ["f32", "i16"])
        alternatives = _alternatives(clock, {"f32": 0.004, "i16": 0.001}, [])
        tuned_execute(state, key, alternatives)
        tuned_execute(state, key, alternatives)

        lines = state.dump()
        assert lines == [f"{key.digest} f32 4.000 1 no", f"{key.digest} i16 1.000 1 yes"]

        path = tmp_path / "tuner.txt"
        state.write_dump(path)
        assert path.read_text(encoding="utf-8").splitlines() == lines


@pytest.mark.unit
class TestDefaultBudget:

    def test_commits_after_one_hundred_measurements_each(self):
        # Given: 기본 예산 TunerState()
        clock = ScriptedClock()
        state = TunerState(clock=clock)
        key = tune_key([(16, 64), (64, 64)], ["f32", "i16"])
        calls = []
        alternatives = _alternatives(clock, {"f32": 0.003, "i16": 0.002}, calls)

        # When: 199번 실행
        for _ in range(199):
            tuned_execute(state, key, alternatives)

        # Then: 아직 측정 단계 (100 / 99)
        assert state.chosen(key) is None
        assert [m.count for m in state.measurements(key)] == [100, 99]

        # When: 200번째 실행
        tuned_execute(state, key, alternatives)

        # Then: 정확히 100 / 100에서 고정, 이후 측정 없음
        assert state.chosen(key) == "i16"
        assert [m.count for m in state.measurements(key)] == [100, 100]
        for _ in range(10):
            tuned_execute(state, key, alternatives)
        assert [m.count for m in state.measurements(key)] == [100, 100]
        assert calls[200:] == ["i16"] * 10


@pytest.mark.unit
class TestPerShapeChoice:

    def test_each_shape_commits_to_its_own_fastest(self):
        # Given: 작은 행렬은 f32, 큰 행렬은 i16이 빠른 shape 의존 비용
        costs = {
            (1, 64): {"f32": 0.001, "i16": 0.004},
            (256, 64): {"f32": 0.050, "i16": 0.020},
        }
        clock = ScriptedClock()
        state = TunerState(clock=clock)
        keys = {rows: tune_key([rows, (64, 64)], ["f32", "i16"]) for rows in costs}
        executed = {rows: [] for rows in costs}

        # When: 두 shape를 번갈아 250번씩 실행
        for _ in range(250):
            for rows, key in keys.items():
                tuned_execute(state, key, _alternatives(clock, costs[rows], executed[rows]))

        # Then: shape별로 다른 선택
        assert state.chosen(keys[(1, 64)]) == "f32"
        assert state.chosen(keys[(256, 64)]) == "i16"

        # 고정 이후 비용: 혼합 선택이 어느 한쪽 고정 선택보다 싸다
        mixed = sum(costs[rows][state.chosen(key)] for rows, key in keys.items())
        hard = {alt: sum(c[alt] for c in costs.values()) for alt in ("f32", "i16")}
        assert mixed < min(hard.values())
