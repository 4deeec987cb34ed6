import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from confined_growth.errors import InputError
from confined_growth.estimators import (
    CogrowthEstimator,
    GrowthRateEstimator,
    GrowthTightnessAnalyzer,
)
from confined_growth.validation import check_counts, check_radius, check_words
from confined_growth.words import parse_word

LOG3 = math.log(3)


class TestGrowthRateEstimator:
    def test_params_roundtrip(self):
        est = GrowthRateEstimator(window=(3, 9), kind="ball")
        assert est.get_params() == {"window": (3, 9), "kind": "ball"}
        c = clone(est)
        assert c.get_params() == est.get_params() and c is not est
        est.set_params(kind="sphere")
        assert est.kind == "sphere"

    def test_fit_predict_tree(self):
        counts = [1] + [4 * 3 ** (k - 1) for k in range(1, 13)]
        est = GrowthRateEstimator().fit(counts)
        assert est.rate_ == pytest.approx(LOG3, abs=0.02)
        assert est.window_ == (6, 12)
        balls = np.log(np.cumsum(counts))
        pred = est.predict([10, 11, 12])
        assert np.allclose(pred, balls[10:13], atol=0.01)

    def test_column_input(self):
        counts = np.array([1, 4, 12, 36, 108, 324, 972, 2916]).reshape(-1, 1)
        assert GrowthRateEstimator().fit(counts).rate_ > 1.0

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            GrowthRateEstimator().predict([1])


class TestCogrowthEstimator:
    def test_zmod2(self, zmod2):
        est = CogrowthEstimator(max_len=18).fit(zmod2)
        assert est.rate_ == pytest.approx(LOG3, abs=1e-9)
        assert len(est.loop_counts_) == 19

    def test_rejects_non_graph(self):
        with pytest.raises(InputError):
            CogrowthEstimator().fit([1, 2, 3])


class TestAnalyzer:
    def test_fit_zkernel(self, zkernel):
        an = GrowthTightnessAnalyzer(radius=10, max_len=16, P=["b"]).fit(zkernel)
        assert an.confinement_.holds
        assert an.certificate_.certified
        assert an.inequalities_["all_hold"]
        assert an.quotient_rate_.rate < an.certificate_.bound

    def test_transform_rows(self, zkernel, tree):
        an = GrowthTightnessAnalyzer(radius=8, max_len=12).fit(zkernel)
        X = an.transform([zkernel, tree])
        assert X.shape == (2, 4)
        assert X[0, 2] == pytest.approx(math.log(8) / 2)
        assert math.isnan(X[1, 2])
        assert X[1, 0] == pytest.approx(LOG3, abs=0.02)
        assert np.all(X[:, 3] == pytest.approx(LOG3))

    def test_get_params(self):
        an = GrowthTightnessAnalyzer(P=["b"])
        assert set(an.get_params()) == {"radius", "max_len", "P", "tol", "budget"}


class TestValidation:
    def test_counts(self):
        assert check_counts([1, 2, 3]).tolist() == [1, 2, 3]
        with pytest.raises(InputError):
            check_counts([1, -1])
        with pytest.raises(InputError):
            check_counts([[1, 2], [3, 4]])
        with pytest.raises(InputError):
            check_counts(["x"])

    def test_radius(self):
        assert check_radius(3) == 3
        for bad in (-1, 2.5, True):
            with pytest.raises(InputError):
                check_radius(bad)

    def test_words(self):
        ws = check_words(["abA", parse_word("b", 2)], 2)
        assert [str(w) for w in ws] == ["abA", "b"]
        with pytest.raises(InputError):
            check_words([parse_word("c", 3)], 2)
        with pytest.raises(InputError):
            check_words([3], 2)
