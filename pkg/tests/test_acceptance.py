"""Acceptance gate: nine shipping criteria, one test and one verdict each.

Each test exercises the public API or the CLI exactly as a user would and
records a PASS/FAIL line through the criteria fixture; the conftest prints
the collected lines in the terminal summary. Tolerances and time budgets
sit next to the checks they guard.

The compiled kernels are touched once up front so JIT compilation on a
cold cache is not billed to whichever criterion happens to run first.
"""

import contextlib
import io
import math
import os
import struct
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from setenc import (Gaussian1D, GmmModel, InstanceSet, cli,
                    dtvd_closed_form, encode_d3, encode_fv, encode_hybrid,
                    encode_vlad, misclassification_area, mpm_closed_form,
                    plan_dimensions, read_codebook, read_gmm, read_svec,
                    std_normal_cdf, tvd_numeric, write_codebook, write_gmm,
                    write_svec)
from setenc.codebook import Codebook
from setenc.encoders import _fv_raw

GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    from setenc import _kernels
    pts = np.zeros((2, 2))
    centers = np.array([[0.0, 0.0], [1.0, 1.0]])
    idx, _ = _kernels.nearest_centers(pts, centers)
    _kernels.cluster_mean_std(pts, idx, 2)
    _kernels.vlad_sums(pts, idx, centers)
    _kernels.gmm_log_joint(pts, centers, np.ones((2, 2)), np.zeros(2))
    _kernels.fv_accumulate(pts, np.full((2, 2), 0.5), centers,
                           np.ones((2, 2)))


# --------------------------------------------------------------------------
# Closed-form separation measure (criteria 1 and 2)
# --------------------------------------------------------------------------

def _random_tuple(rng, equal_sigma):
    mu_x, mu_y = rng.uniform(-5.0, 5.0, size=2)
    if equal_sigma:
        s = float(rng.uniform(0.05, 3.0))
        return mu_x, s, mu_y, s
    sx, sy = rng.uniform(0.05, 3.0, size=2)
    return mu_x, float(sx), mu_y, float(sy)


def test_criterion_1_closed_form_identity(criteria):
    with criteria.check(
            1, "closed form matches the threshold-area identity (1e-10) "
               "and both cdf forms agree (1e-12), 10000 tuples, < 5 s"
    ) as failures:
        rng = np.random.default_rng(1001)
        start = time.perf_counter()
        worst_identity = 0.0
        worst_forms = 0.0
        for _ in range(10000):
            mu_x, sx, mu_y, sy = _random_tuple(rng, equal_sigma=False)
            if mu_x == mu_y:
                continue
            px = Gaussian1D(mu_x, sx)
            py = Gaussian1D(mu_y, sy)
            value = dtvd_closed_form(px, py)
            t = mpm_closed_form(px, py).threshold
            identity = 2.0 - 2.0 * misclassification_area(px, py, t)
            worst_identity = max(worst_identity, abs(value - identity))
            phi_form = 4.0 * std_normal_cdf((mu_y - mu_x) / (sx + sy)) - 2.0
            erf_form = 2.0 * math.erf(
                (mu_y - mu_x) / (math.sqrt(2.0) * (sx + sy)))
            worst_forms = max(worst_forms,
                              abs(phi_form - erf_form),
                              abs(value - erf_form))
        elapsed = time.perf_counter() - start
        if worst_identity > 1e-10:
            failures.append(f"identity gap {worst_identity:.3e} > 1e-10")
        if worst_forms > 1e-12:
            failures.append(f"form disagreement {worst_forms:.3e} > 1e-12")
        if elapsed >= 5.0:
            failures.append(f"took {elapsed:.2f} s, budget 5 s")


def test_criterion_2_quadrature_agreement(criteria):
    with criteria.check(
            2, "equal-sigma |closed form| = 2 * quadrature tvd (1e-6); "
               "unequal-sigma bounded by it (+1e-9), 1000 tuples each, "
               "< 60 s"
    ) as failures:
        rng = np.random.default_rng(1002)
        start = time.perf_counter()
        worst_equal = 0.0
        for _ in range(1000):
            mu_x, sx, mu_y, sy = _random_tuple(rng, equal_sigma=True)
            px = Gaussian1D(mu_x, sx)
            py = Gaussian1D(mu_y, sy)
            gap = abs(abs(dtvd_closed_form(px, py))
                      - 2.0 * tvd_numeric(px, py))
            worst_equal = max(worst_equal, gap)
        worst_excess = 0.0
        for _ in range(1000):
            mu_x, sx, mu_y, sy = _random_tuple(rng, equal_sigma=False)
            if sx == sy:
                continue
            px = Gaussian1D(mu_x, sx)
            py = Gaussian1D(mu_y, sy)
            excess = (abs(dtvd_closed_form(px, py))
                      - 2.0 * tvd_numeric(px, py))
            worst_excess = max(worst_excess, excess)
        elapsed = time.perf_counter() - start
        if worst_equal > 1e-6:
            failures.append(f"equal-sigma gap {worst_equal:.3e} > 1e-6")
        if worst_excess > 1e-9:
            failures.append(f"bound violated by {worst_excess:.3e} > 1e-9")
        if elapsed >= 60.0:
            failures.append(f"took {elapsed:.2f} s, budget 60 s")


# --------------------------------------------------------------------------
# Mixture-gradient check (criterion 3)
# --------------------------------------------------------------------------

def test_criterion_3_fv_gradients(criteria):
    with criteria.check(
            3, "raw mixture-gradient blocks match finite-difference "
               "log-likelihood gradients (rel 1e-4), 100 instances, < 30 s"
    ) as failures:
        rng = np.random.default_rng(1003)
        start = time.perf_counter()
        worst = 0.0

        def rel(a, f):
            return abs(a - f) / max(abs(a) + abs(f), 1e-3)

        for _ in range(100):
            d = int(rng.integers(1, 6))
            k = int(rng.integers(1, 5))
            n = int(rng.integers(1, 51))
            means = rng.normal(scale=2.0, size=(k, d))
            stds = rng.uniform(0.4, 1.6, size=(k, d))
            weights = rng.uniform(0.2, 1.0, size=k)
            weights /= weights.sum()
            model = GmmModel(weights=weights, means=means, stds=stds)
            vectors = rng.normal(scale=2.0, size=(n, d))
            f_w, f_mu, f_sg = _fv_raw(InstanceSet(vectors=vectors), model)
            w_list = weights.tolist()
            m_list = [row.tolist() for row in means]
            s_list = [row.tolist() for row in stds]
            for comp in range(k):
                analytic_w = f_w[comp] * math.sqrt(weights[comp])
                fd_w = oracles.fd_loglik_grad_logw(
                    vectors, w_list, m_list, s_list, comp)
                worst = max(worst, rel(analytic_w, fd_w))
                for j in range(d):
                    analytic_mu = (f_mu[comp, j] * math.sqrt(weights[comp])
                                   / stds[comp, j])
                    fd_mu = oracles.fd_loglik_grad_mu(
                        vectors, w_list, m_list, s_list, comp, j)
                    worst = max(worst, rel(analytic_mu, fd_mu))
                    analytic_sg = (f_sg[comp, j]
                                   * math.sqrt(2.0 * weights[comp])
                                   / stds[comp, j])
                    fd_sg = oracles.fd_loglik_grad_sigma(
                        vectors, w_list, m_list, s_list, comp, j)
                    worst = max(worst, rel(analytic_sg, fd_sg))
        elapsed = time.perf_counter() - start
        if worst > 1e-4:
            failures.append(f"worst relative error {worst:.3e} > 1e-4")
        if elapsed >= 30.0:
            failures.append(f"took {elapsed:.2f} s, budget 30 s")


# --------------------------------------------------------------------------
# Reference agreement and invariances (criteria 4 and 5)
# --------------------------------------------------------------------------

def _case_models(rng, d, force_empty):
    k = int(rng.integers(1, 6))
    means = rng.normal(scale=2.0, size=(k, d))
    if force_empty and k > 1:
        # A center this remote never wins a nearest-center vote.
        means[-1] = 1e4
    stds = rng.uniform(0.3, 1.5, size=(k, d))
    return Codebook(means=means, stds=stds)


def test_criterion_4_d3_reference(criteria):
    with criteria.check(
            4, "encode_d3 matches the independent reference to 1e-10 on "
               "100 instances with empty and singleton clusters"
    ) as failures:
        rng = np.random.default_rng(1004)
        worst = 0.0
        saw_empty_cluster = saw_singleton = False
        for case in range(100):
            d = int(rng.integers(1, 5))
            cb = _case_models(rng, d, force_empty=(case % 3 == 0))
            if case % 11 == 0:
                vectors = np.zeros((0, d))
            elif case % 4 == 0:
                vectors = rng.normal(scale=2.5, size=(1, d))
            else:
                vectors = rng.normal(scale=2.5,
                                     size=(int(rng.integers(2, 30)), d))
            enc = encode_d3(vectors, cb)
            want, want_degenerate = oracles.d3_reference(
                vectors, cb.means, cb.stds)
            worst = max(worst,
                        float(np.abs(enc.values - np.asarray(want)).max()))
            if enc.degenerate != want_degenerate:
                failures.append(f"case {case}: degenerate flag mismatch")
            if vectors.shape[0] >= 1:
                dist = ((vectors[:, None, :] - cb.means[None, :, :]) ** 2
                        ).sum(axis=2)
                counts = np.bincount(dist.argmin(axis=1), minlength=cb.k)
                saw_empty_cluster |= bool((counts == 0).any())
                saw_singleton |= bool((counts == 1).any())
        if worst > 1e-10:
            failures.append(f"worst deviation {worst:.3e} > 1e-10")
        if not saw_empty_cluster:
            failures.append("no empty-cluster case was generated")
        if not saw_singleton:
            failures.append("no singleton-cluster case was generated")


def test_criterion_5_norm_and_permutation(criteria):
    with criteria.check(
            5, "unit norm (1e-9) and permutation invariance (1e-12) over "
               "1000 encoder cases"
    ) as failures:
        rng = np.random.default_rng(1005)
        worst_norm = 0.0
        worst_perm = 0.0
        cases = 0
        for _ in range(250):
            d = int(rng.integers(1, 5))
            cb = _case_models(rng, d, force_empty=False)
            gk = int(rng.integers(1, 5))
            gw = rng.uniform(0.2, 1.0, size=gk)
            gw /= gw.sum()
            gm = GmmModel(weights=gw,
                          means=rng.normal(scale=2.0, size=(gk, d)),
                          stds=rng.uniform(0.3, 1.5, size=(gk, d)))
            vectors = rng.normal(scale=2.0,
                                 size=(int(rng.integers(2, 25)), d))
            perm = rng.permutation(vectors.shape[0])
            encoders = (
                lambda v: encode_d3(v, cb),
                lambda v: encode_vlad(v, cb),
                lambda v: encode_fv(v, gm),
                lambda v: encode_hybrid(v, [("d3", cb), ("fv", gm)]),
            )
            for encode in encoders:
                a = encode(vectors)
                b = encode(vectors[perm])
                cases += 1
                if not a.degenerate:
                    worst_norm = max(
                        worst_norm,
                        abs(float(np.linalg.norm(a.values)) - 1.0))
                worst_perm = max(
                    worst_perm, float(np.abs(a.values - b.values).max()))
        if cases != 1000:
            failures.append(f"ran {cases} cases instead of 1000")
        if worst_norm > 1e-9:
            failures.append(f"worst norm deviation {worst_norm:.3e} > 1e-9")
        if worst_perm > 1e-12:
            failures.append(f"worst permutation gap {worst_perm:.3e} "
                            f"> 1e-12")


# --------------------------------------------------------------------------
# End-to-end pipelines (criteria 6, 7 and 9)
# --------------------------------------------------------------------------

def _cli(argv):
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        rc = cli.main(argv)
    if rc != 0:
        raise AssertionError(f"cli {' '.join(argv)} exited {rc}")
    return buffer.getvalue()


def _run_pipeline(root, mode):
    """Generate, train, encode, evaluate; return artifacts and timings."""
    start = time.perf_counter()
    corpus = root / "corpus"
    _cli(["gen-synthetic", "--classes", "3", "--entities-per-class", "100",
          "--vectors-per-entity", "200", "--dim", "8", "--mode", mode,
          "--seed", "7", "--train-fraction", "0.7", "--out", str(corpus)])
    train_manifest = str(corpus / "manifest-train.tsv")
    plan = plan_dimensions(8, 8)
    models = root / "models"
    models.mkdir()
    cb_full = models / "cb-full.d3cb"
    cb_half = models / "cb-half.d3cb"
    gm_full = models / "gm-full.d3gm"
    gm_half = models / "gm-half.d3gm"
    _cli(["train-codebook", "--manifest", train_manifest,
          "--k", str(plan.d3_k), "--seed", "0", "--out", str(cb_full)])
    _cli(["train-codebook", "--manifest", train_manifest,
          "--k", str(plan.hybrid[0][1]), "--seed", "0",
          "--out", str(cb_half)])
    _cli(["train-gmm", "--manifest", train_manifest,
          "--k", str(plan.fv_k), "--seed", "0", "--out", str(gm_full)])
    _cli(["train-gmm", "--manifest", train_manifest,
          "--k", str(plan.hybrid[1][1]), "--seed", "0",
          "--out", str(gm_half)])
    method_args = {
        "d3": ["--codebook", str(cb_full)],
        "vlad": ["--codebook", str(cb_full)],
        "fv": ["--gmm", str(gm_full)],
        "hybrid": ["--codebook", str(cb_half), "--gmm", str(gm_half)],
    }
    enc = root / "enc"
    enc.mkdir()
    for method, extra in method_args.items():
        for split in ("train", "test"):
            _cli(["encode", "--method", method,
                  "--manifest", str(corpus / f"manifest-{split}.tsv"),
                  *extra, "--out", str(enc / f"{method}-{split}.svec")])
    eval_lines = {}
    accuracies = {}
    for method in method_args:
        line = _cli(["eval",
                     "--train-encodings", str(enc / f"{method}-train.svec"),
                     "--train-manifest", train_manifest,
                     "--test-encodings", str(enc / f"{method}-test.svec"),
                     "--test-manifest", str(corpus / "manifest-test.tsv"),
                     "--encoder", method, "--k", "8"]).strip()
        eval_lines[method] = line
        accuracies[method] = float(line.split(",")[2])
    mi_dir = root / "mi"
    mi_dir.mkdir()
    medians = {}
    for method in ("d3", "vlad"):
        all_enc = enc / f"{method}-all.svec"
        _cli(["encode", "--method", method,
              "--manifest", str(corpus / "manifest.tsv"),
              *method_args[method], "--out", str(all_enc)])
        _cli(["mi-report", "--encodings", str(all_enc),
              "--manifest", str(corpus / "manifest.tsv"),
              "--out", str(mi_dir / f"{method}.csv"),
              "--quantile-out", str(mi_dir / f"{method}-q.csv")])
        rows = (mi_dir / f"{method}.csv").read_text().splitlines()[1:]
        scores = np.array([float(row.split(",")[1]) for row in rows])
        medians[method] = float(np.median(scores))
    return {
        "root": root,
        "elapsed": time.perf_counter() - start,
        "eval_lines": eval_lines,
        "accuracies": accuracies,
        "medians": medians,
    }


@pytest.fixture(scope="session")
def pipelines(tmp_path_factory, _warm_kernels):
    runs = {}
    for mode in ("mean-shift", "variance-shift"):
        for rep in (1, 2):
            root = tmp_path_factory.mktemp(f"accept-{mode}-rep{rep}")
            runs[mode, rep] = _run_pipeline(root, mode)
    return runs


def test_criterion_6_synthetic_recognition(criteria, pipelines):
    run = pipelines["mean-shift", 1]
    with criteria.check(
            6, "mean-shift corpus: d3, vlad, fv and hybrid all reach 95% "
               "test accuracy, pipeline < 60 s"
    ) as failures:
        for method, acc in sorted(run["accuracies"].items()):
            if acc < 0.95:
                failures.append(f"{method} accuracy {acc:.4f} < 0.95")
        if run["elapsed"] >= 60.0:
            failures.append(f"pipeline took {run['elapsed']:.1f} s, "
                            f"budget 60 s")


def test_criterion_7_discriminability(criteria, pipelines):
    run = pipelines["variance-shift", 1]
    with criteria.check(
            7, "variance-shift corpus: d3 median per-dimension MI beats "
               "vlad, hybrid within 1 point of its best part"
    ) as failures:
        d3_mi = run["medians"]["d3"]
        vlad_mi = run["medians"]["vlad"]
        if not d3_mi > vlad_mi:
            failures.append(
                f"median MI d3 {d3_mi:.4f} <= vlad {vlad_mi:.4f}")
        bound = max(run["accuracies"]["d3"], run["accuracies"]["fv"]) - 0.01
        if run["accuracies"]["hybrid"] < bound:
            failures.append(
                f"hybrid accuracy {run['accuracies']['hybrid']:.4f} < "
                f"{bound:.4f}")
        if run["elapsed"] >= 60.0:
            failures.append(f"pipeline took {run['elapsed']:.1f} s, "
                            f"budget 60 s")


def test_criterion_9_determinism(criteria, pipelines):
    with criteria.check(
            9, "repeating both pipelines yields bitwise-identical models, "
               "encodings and accuracy lines"
    ) as failures:
        for mode in ("mean-shift", "variance-shift"):
            first = pipelines[mode, 1]
            second = pipelines[mode, 2]
            if first["eval_lines"] != second["eval_lines"]:
                failures.append(f"{mode}: accuracy lines differ")
            files_a = {p.relative_to(first["root"]): p
                       for p in sorted(first["root"].rglob("*"))
                       if p.is_file()}
            files_b = {p.relative_to(second["root"]): p
                       for p in sorted(second["root"].rglob("*"))
                       if p.is_file()}
            if files_a.keys() != files_b.keys():
                failures.append(f"{mode}: artifact sets differ")
                continue
            mismatched = [str(rel) for rel in files_a
                          if files_a[rel].read_bytes()
                          != files_b[rel].read_bytes()]
            if mismatched:
                failures.append(
                    f"{mode}: {len(mismatched)} artifacts differ "
                    f"(first: {mismatched[0]})")


# --------------------------------------------------------------------------
# Serialization (criterion 8)
# --------------------------------------------------------------------------

def test_criterion_8_formats(criteria, tmp_path):
    with criteria.check(
            8, "golden-file byte equality for SVEC/D3CB/D3GM; corrupt "
               "files exit with code 3"
    ) as failures:
        golden_svec = (GOLDEN / "sample.svec").read_bytes()
        out = tmp_path / "rt.svec"
        write_svec(out, read_svec(GOLDEN / "sample.svec"))
        if out.read_bytes() != golden_svec:
            failures.append("svec round trip changed bytes")
        out = tmp_path / "rt.d3cb"
        write_codebook(out, read_codebook(GOLDEN / "sample.d3cb"))
        if out.read_bytes() != (GOLDEN / "sample.d3cb").read_bytes():
            failures.append("codebook round trip changed bytes")
        out = tmp_path / "rt.d3gm"
        write_gmm(out, read_gmm(GOLDEN / "sample.d3gm"))
        if out.read_bytes() != (GOLDEN / "sample.d3gm").read_bytes():
            failures.append("gmm round trip changed bytes")

        bad_svec = tmp_path / "bad.svec"
        bad_svec.write_bytes(b"XXXX" + golden_svec[4:])
        proc = subprocess.run(
            [sys.executable, "-m", "setenc.cli", "mi-report",
             "--encodings", str(bad_svec),
             "--manifest", str(bad_svec),
             "--out", str(tmp_path / "mi.csv")],
            capture_output=True, text=True, env=os.environ.copy())
        if proc.returncode != 3:
            failures.append(
                f"corrupt svec exited {proc.returncode}, expected 3")

        entity = tmp_path / "e0.svec"
        write_svec(entity, np.ones((2, 2)))
        manifest = tmp_path / "m.tsv"
        manifest.write_text("0\te0.svec\n")
        bad_cb = tmp_path / "bad.d3cb"
        bad_cb.write_bytes((GOLDEN / "sample.d3cb").read_bytes()[:-8])
        proc = subprocess.run(
            [sys.executable, "-m", "setenc.cli", "encode",
             "--method", "d3", "--manifest", str(manifest),
             "--codebook", str(bad_cb),
             "--out", str(tmp_path / "enc.svec")],
            capture_output=True, text=True, env=os.environ.copy())
        if proc.returncode != 3:
            failures.append(
                f"corrupt codebook exited {proc.returncode}, expected 3")
