import math

import numpy as np
import pytest

import powerset_align as pa


def test_exact_cell_examples():
    q = np.array([[0.5, 0.1], [-0.3, 0.4]])
    t2r, r2t = pa.exact_cell(q)
    assert t2r == pytest.approx(0.5, abs=1e-15)
    assert r2t == pytest.approx(0.35, abs=1e-15)
    assert pa.lambda_bound(q, 0.0) <= r2t <= pa.lambda_bound(q, 1.0)


def test_log_exponential_sum():
    assert pa.log_exponential_sum([0.5], 0.5) == pytest.approx(1.3132616875182228, rel=1e-15)
    q = [0.3, -0.2, 0.7]
    direct = math.log(sum(math.exp(sum(v for k, v in enumerate(q) if s >> k & 1) / 0.25) for s in range(8)))
    assert pa.log_exponential_sum(q, 0.25) == pytest.approx(direct, rel=1e-12)


def test_cell_kernels_track_exact():
    rng = np.random.default_rng(3)
    q = rng.uniform(-1, 1, size=(6, 4))
    t2r, r2t = pa.exact_cell(q)
    assert pa.nla_t1_cell(q, "relu", 0.01) == pytest.approx(t2r, abs=1e-12)
    tau = 1e-3
    t2 = pa.nla_t2_cell(q, "tanh", tau, 1.0)
    assert abs(t2 - pa.lambda_bound(q, 1.0)) <= tau * (6 * math.log(2) + math.log(4))


def test_batch_roundtrip_and_matrices():
    batch = pa.generate_batch(batch_size=3, grid=(3, 3), tokens=4, dim=8, masks=5, seed=11)
    assert len(batch) == 3
    again = pa.Batch.from_jsonl(batch.to_jsonl())
    assert again.to_jsonl() == batch.to_jsonl()
    assert batch.s0_block(0, 1).shape == (5, 4)

    q = pa.exact(batch)
    assert set(q) == {"t2r", "r2t", "bar"}
    np.testing.assert_allclose(q["bar"], q["t2r"] + q["r2t"], rtol=0, atol=1e-12)
    for variant in ("t1", "t2", "sbar"):
        assert pa.nla(batch, variant=variant, tau=0.01).shape == (3, 3)
    np.testing.assert_allclose(pa.nla(batch, variant="t1", act="relu", tau=0.5), q["t2r"], atol=1e-12)

    batch.resample_masks(21, 0)
    with pytest.raises(pa.CapExceeded):
        pa.exact(batch)
    assert pa.nla(batch).shape == (3, 3)


def test_losses():
    x = np.array([[0.5, 1.0], [0.2, 0.9]])
    assert pa.phi_gamma(x, 0.2) == pytest.approx(0.35, abs=1e-15)
    assert pa.triplet_loss(x, 0.2) == pytest.approx(0.5, abs=1e-15)
    eye = np.eye(2)
    assert pa.clip_loss(eye, eye, 1.0) == pytest.approx(0.31326168751822286, rel=1e-14)
    with pytest.raises(ValueError):
        pa.phi_gamma(np.zeros((2, 3)), 0.2)


def test_trees():
    assert pa.normalize_tree("(S  (NP a dog)\n(VP sits))") == "(S (NP a dog) (VP sits))"
    with pytest.raises(pa.ParseError, match="byte 8"):
        pa.normalize_tree("(S (NP a")


def test_verify_reports_every_check():
    rows = pa.verify(trials=3, seed=1)
    names = {r["name"] for r in rows}
    assert {"t1_relu_exact", "powerset_sum_identity", "t2_lse_sandwich"} <= names
    for r in rows:
        assert r["evaluated"] > 0
        if r["name"] != "t2_alpha_grid":
            assert r["failures"] == 0
