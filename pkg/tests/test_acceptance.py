"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
happen; they are also repeated in the terminal summary.
"""

import time

import numpy as np

from arsvd.compress import arsvd_compress, fixed_rank_truncate, reconstruction_error
from arsvd.entropy import entropy_profile, normalize_spectrum, rank_for_spectrum, select_rank
from arsvd.formats import decode_container, encode_container, load_model, save_model
from arsvd.harness import BlobSpec, ExperimentConfig, make_blobs, step_spectrum_model, teacher_dataset
from arsvd.linalg import svd
from arsvd.model import (
    FlopMeter,
    compress_model,
    compress_model_fixed_rank,
    evaluate,
    forward,
    predict,
)
from arsvd.train import train_mlp

from gradcheck import gradient_check
from oracles import brute_force_rank, nonincreasing_spectra, prefix_entropies, uniform_rank

TAUS = [round(0.1 * i, 1) for i in range(1, 11)]
VERDICTS = {}


def verdict(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    VERDICTS[number] = line
    print(line)
    assert ok, detail


def test_criterion_01_svd_correctness():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = dict(orth=0.0, recon=0.0, energy=0.0)
    ordered = True
    for _ in range(200):
        m, n = rng.integers(1, 33, size=2)
        w = rng.standard_normal((m, n))
        u, s, vt = svd(w)
        r = min(m, n)
        norm = np.linalg.norm(w)
        worst["orth"] = max(worst["orth"], np.abs(u.T @ u - np.eye(r)).max(),
                            np.abs(vt @ vt.T - np.eye(r)).max())
        worst["recon"] = max(worst["recon"], np.abs((u * s) @ vt - w).max() / max(1.0, norm))
        worst["energy"] = max(worst["energy"], abs(np.sum(s**2) - norm**2) / norm**2)
        ordered &= bool(np.all(s >= 0) and np.all(np.diff(s) <= 0))
    elapsed = time.perf_counter() - start
    ok = (worst["orth"] <= 1e-8 and worst["recon"] <= 1e-8 and worst["energy"] <= 1e-8
          and ordered and elapsed < 30)
    verdict(1, ok, f"200 matrices, orth {worst['orth']:.1e}, recon {worst['recon']:.1e}, "
                   f"energy {worst['energy']:.1e}, ordered {ordered}, {elapsed:.1f}s")


def test_criterion_02_oracle_equivalence():
    start = time.perf_counter()
    cases = mismatches = 0
    for s in nonincreasing_spectra([0, 0.5, 1, 2, 4], 12):
        h = prefix_entropies(s)
        profile = entropy_profile(normalize_spectrum(np.array(s, dtype=float)))
        for tau in TAUS:
            cases += 1
            if select_rank(profile, tau).k != brute_force_rank(s, tau, prefix=h):
                mismatches += 1
    elapsed = time.perf_counter() - start
    verdict(2, mismatches == 0 and elapsed < 60,
            f"{cases} cases, {mismatches} mismatches, {elapsed:.1f}s")


def test_criterion_03_invariances():
    rng = np.random.default_rng(3)
    scale_bad = 0
    for _ in range(100):
        m, n = rng.integers(2, 25, size=2)
        w = rng.standard_normal((m, n)) * rng.uniform(0.2, 2.0, size=n)
        c = 10.0 ** rng.uniform(-6, 6)
        tau = rng.choice(TAUS)
        scale_bad += arsvd_compress(w, tau)[1].k != arsvd_compress(c * w, tau)[1].k
    base_bad = mono_bad = 0
    for _ in range(500):
        s = np.sort(rng.exponential(size=rng.integers(1, 40)) ** rng.uniform(1, 4))[::-1]
        ks = [rank_for_spectrum(s, tau).k for tau in TAUS]
        base_bad += ks != [rank_for_spectrum(s, tau, log=np.log2).k for tau in TAUS]
        mono_bad += any(b < a for a, b in zip(ks, ks[1:]))
    total = scale_bad + base_bad + mono_bad
    verdict(3, total == 0, f"scale {scale_bad}/100, log base {base_bad}/500, "
                           f"monotonicity {mono_bad}/500 violations")


def test_criterion_04_uniform_closed_form():
    bad = [(r, tau) for r in range(2, 65) for tau in TAUS
           if rank_for_spectrum(np.ones(r), tau).k != uniform_rank(r, tau)]
    verdict(4, not bad, f"{63 * len(TAUS)} cases, mismatches {bad[:5]}")


def test_criterion_05_eckart_young():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        m, n = rng.integers(2, 30, size=2)
        w = rng.standard_normal((m, n))
        k = int(rng.integers(1, min(m, n)))
        tail = np.linalg.svd(w, compute_uv=False)[k:]
        err = reconstruction_error(w, fixed_rank_truncate(w, k))
        worst = max(worst, abs(err**2 - np.sum(tail**2)) / np.sum(tail**2))
    verdict(5, worst <= 1e-6, f"100 cases, worst relative residual gap {worst:.1e}")


def test_criterion_06_factored_forward(fixture_models):
    model, _, _, Xte, _ = fixture_models[0]
    positive = all(svd(layer.w).s[-1] > 0 for layer in model.layers)
    cmodel, log, _ = compress_model(model, 1.0)
    gap = np.abs(forward(cmodel, Xte) - forward(model, Xte)).max()
    dense_meter, fact_meter = FlopMeter(), FlopMeter()
    forward(model, Xte[0], dense_meter)
    forward(cmodel, Xte[0], fact_meter)
    flops_ok = all(
        dense_meter.per_layer[r.layer_index] == r.m * r.n
        and fact_meter.per_layer[r.layer_index] == r.k * (r.m + r.n) + r.k
        for r in log
    )
    verdict(6, positive and gap <= 1e-6 and flops_ok,
            f"positive spectra {positive}, max score gap {gap:.1e}, exact FLOP counts {flops_ok}")


def test_criterion_07_gradient_check(fixture_models):
    model, Xtr, ytr, _, _ = fixture_models[0]
    errors = gradient_check(model, Xtr[:32], ytr[:32], n_params=240, step=1e-5,
                            weight_decay=ExperimentConfig().weight_decay)
    verdict(7, len(errors) >= 200 and errors.max() <= 1e-4,
            f"{len(errors)} parameters, max relative error {errors.max():.1e}")


def test_criterion_08_desk_scale_analog():
    config = ExperimentConfig()
    start = time.perf_counter()
    lines, ok = [], True
    for seed in config.seeds:
        Xtr, ytr, Xte, yte = make_blobs(BlobSpec(seed=seed))
        model = train_mlp(Xtr, ytr, config.train_config(seed), 10).model
        cmodel, _, report = compress_model(model, 0.9)
        dense_m, comp_m = evaluate(model, Xte, yte, 1), evaluate(cmodel, Xte, yte, 1)
        reduction = report.totals()["param_reduction"]
        d_acc = comp_m.accuracy - dense_m.accuracy
        d_f1 = comp_m.macro_f1 - dense_m.macro_f1
        flops = all(r.flops_after < r.flops_before for r in report.layers)
        flops &= all(comp_m.flops_per_layer[i] < dense_m.flops_per_layer[i]
                     for i in range(len(model.layers)))
        ok &= reduction >= 0.25 and abs(d_acc) <= 0.02 and abs(d_f1) <= 0.03 and flops
        lines.append(f"seed {seed}: ranks {report.ranks} reduction {100 * reduction:.1f}% "
                     f"acc {dense_m.accuracy:.3f}->{comp_m.accuracy:.3f} "
                     f"F1 delta {d_f1:+.4f} fewer FLOPs {flops}")
    elapsed = time.perf_counter() - start
    verdict(8, ok and elapsed < 300, "; ".join(lines) + f"; {elapsed:.0f}s")


def test_criterion_09_adaptive_vs_fixed():
    dims = [64, 256, 128, 10]
    identical, wins, lines = True, 0, []
    for seed in (0, 1, 2):
        model = step_spectrum_model(dims, seed, eps=1e-9)
        X, y = teacher_dataset(model, 2000, seed + 100)
        cmodel, log, _ = compress_model(model, 0.9)
        ranks = [r.k for r in log]
        matched, _, _ = compress_model_fixed_rank(model, ranks)
        identical &= all(a.factors.equals(b.factors) for a, b in zip(cmodel.layers, matched.layers))
        identical &= bool(np.array_equal(forward(cmodel, X), forward(matched, X)))
        mean_k = int(np.floor(np.mean(ranks) + 0.5))
        fixed, _, _ = compress_model_fixed_rank(model, mean_k)
        acc_a = float(np.mean(predict(cmodel, X) == y))
        acc_f = float(np.mean(predict(fixed, X) == y))
        won = acc_f <= acc_a + 0.005
        wins += won
        lines.append(f"seed {seed}: ranks {ranks} vs k={mean_k}, acc {acc_a:.3f} vs {acc_f:.3f}"
                     f"{'' if won else ' (inequality fails)'}")
    verdict(9, identical and wins >= 1,
            f"matched-rank bit-identical {identical}; " + "; ".join(lines))


def test_criterion_10_round_trips(tmp_path, fixture_models):
    rng = np.random.default_rng(10)
    tensors = {"a": rng.standard_normal((3, 5)), "b": rng.standard_normal(7), "c": np.array(2.0)}
    data = encode_container(tensors)
    back = decode_container(data)
    container_ok = encode_container(back) == data and all(
        back[k].tobytes() == v.tobytes() and back[k].shape == v.shape for k, v in tensors.items()
    )
    cmodel, _, _ = compress_model(fixture_models[0][0], 0.9)
    save_model(cmodel, tmp_path / "c.artn")
    loaded = load_model(tmp_path / "c.artn")
    factors_ok = all(a.factors.equals(b.factors) for a, b in zip(cmodel.layers, loaded.layers))
    X = rng.standard_normal((100, 64))
    inference_ok = forward(loaded, X).tobytes() == forward(cmodel, X).tobytes()
    verdict(10, container_ok and factors_ok and inference_ok,
            f"container {container_ok}, model factors {factors_ok}, inference {inference_ok}")
