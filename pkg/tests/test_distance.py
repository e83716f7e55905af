import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duplexkit.evaluation.distance import (
    KERNEL,
    EmptyReferenceError,
    cer,
    levenshtein,
    levenshtein_py,
)


def dp_oracle(a: str, b: str) -> int:
    """Full-matrix reference DP, deliberately naive."""
    la, lb = len(a), len(b)
    D = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        D[i][0] = i
    for j in range(lb + 1):
        D[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            D[i][j] = min(D[i - 1][j] + 1, D[i][j - 1] + 1,
                          D[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return D[la][lb]


class TestCer:
    def test_identical_strings(self):
        assert cer("同樣的句子", "同樣的句子") == 0.0

    def test_single_substitution(self):
        assert cer("abc", "axc") == pytest.approx(1 / 3)

    def test_empty_hypothesis(self):
        assert cer("ab", "") == 1.0

    def test_can_exceed_one(self):
        assert cer("a", "xyz") > 1.0

    def test_empty_reference_rejected(self):
        with pytest.raises(EmptyReferenceError):
            cer("", "anything")

    def test_whitespace_stripped_by_default(self):
        assert cer("你 好 嗎", "你好嗎") == 0.0
        assert cer("你 好 嗎", "你好嗎", strip_whitespace=False) > 0.0

    def test_whitespace_only_reference_rejected(self):
        with pytest.raises(EmptyReferenceError):
            cer("   ", "x")


class TestKernels:
    def test_kernel_selection_matches_extension_presence(self):
        try:
            import duplexkit._editdist  # noqa: F401
            have_extension = True
        except ImportError:
            have_extension = False
        assert KERNEL == ("compiled" if have_extension else "pure")

    def test_pure_fallback_selected_without_extension(self):
        # probe in a subprocess so the in-process module identity stays intact
        import subprocess
        import sys

        code = (
            "import sys; sys.modules['duplexkit._editdist'] = None\n"
            "from duplexkit.evaluation import distance\n"
            "print(distance.KERNEL, distance.levenshtein('kitten', 'sitting'))\n"
        )
        out = subprocess.run([sys.executable, "-c", code],
                             capture_output=True, text=True, check=True)
        assert out.stdout.split() == ["pure", "3"]

    def test_exhaustive_small_three_symbol(self):
        strings = [""]
        for n in (1, 2, 3):
            strings += ["".join(p) for p in itertools.product("abc", repeat=n)]
        for a in strings:
            for b in strings:
                expected = dp_oracle(a, b)
                assert levenshtein(a, b) == expected
                assert levenshtein_py(a, b) == expected

    @settings(max_examples=400)
    @given(st.text(alphabet="abc", max_size=8),
           st.text(alphabet="abc", max_size=8))
    def test_matches_oracle_three_symbols_len8(self, a, b):
        assert levenshtein(a, b) == dp_oracle(a, b)

    @settings(max_examples=200)
    @given(st.text(max_size=40), st.text(max_size=40))
    def test_compiled_equals_pure_on_unicode(self, a, b):
        assert levenshtein(a, b) == levenshtein_py(a, b)

    @given(st.text(max_size=20), st.text(max_size=20))
    def test_metric_axioms(self, a, b):
        d = levenshtein(a, b)
        assert d == levenshtein(b, a)
        assert (d == 0) == (a == b)
        assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))

    @given(st.text(min_size=1, max_size=30))
    def test_cer_fixed_points(self, r):
        try:
            assert cer(r, r) == 0.0
            assert cer(r, "") == 1.0
        except EmptyReferenceError:
            assert not "".join(r.split())  # whitespace-only reference

    def test_long_strings_heap_path(self):
        a = "x" * 400
        b = "x" * 395 + "y" * 5
        assert levenshtein(a, b) == 5
