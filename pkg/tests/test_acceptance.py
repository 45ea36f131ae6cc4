"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget."""

import time
from fractions import Fraction

import numpy as np

from qsflow.cocycle import StepFunction, check_cocycle_identity, eval_cocycle_element, integrate_cocycle
from qsflow.carmodel import ExclusionSpec, verify_amplitude_addition
from qsflow.opcore import SpaceDims, random_complex, random_hermitian, random_unitary
from qsflow.perturb import (
    BlockCoefficient,
    classify_contractive,
    make_isometric_coefficient,
    perturbed_generator,
    perturbed_generator_blocks,
    qF,
    random_contractive_coefficient,
    weyl_coefficient,
    weyl_shift_check,
)
from qsflow.stdgen import build_inner_generator, generator_residual, validate_standard_form
from qsflow.toyfock import InnerFlowSpec, cross_validate
from qsflow.wordalg import balanced_generators, gauge_perturb_check, load_builtin, mc_randomized_action
from qsflow.wordalg.torus import TorusElement, lattice_adjoint_apply, lattice_apply, lattice_residual

from conftest import ACCEPTANCE, maxabs


def record(k, ok, line):
    ACCEPTANCE[k] = (bool(ok), line)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {line}")
    assert ok, line


def random_inner(r, d, n, scale=1.0):
    return build_inner_generator(random_hermitian(d, r, scale), random_complex((d * n, d), r, scale))


def random_step(r, n, T=1.0, pieces=3):
    cuts = np.sort(r.uniform(0, T, size=pieces - 1))
    durs = np.diff(np.concatenate([[0.0], cuts, [T]]))
    return StepFunction(tuple((float(d), random_complex(n, r)) for d in durs if d > 1e-9))


def test_criterion_01_standard_form():
    r = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        d, n = int(r.choice([2, 3, 4])), int(r.choice([1, 2, 3]))
        rep = validate_standard_form(random_inner(r, d, n), 1e-10)
        worst = max(worst, max(rep.residuals.values()))
    dt = time.perf_counter() - t0
    record(1, worst < 1e-10 and dt < 10, f"max residual {worst:.2e} (< 1e-10) over 100 generators, {dt:.1f}s (< 10s)")


def test_criterion_02_psi_consistency():
    r = np.random.default_rng(202)
    t0 = time.perf_counter()
    agree = 0.0
    for _ in range(100):
        d, n = int(r.integers(1, 4)), int(r.integers(1, 4))
        phi = random_inner(r, d, n)
        D = d * (n + 1)
        F = BlockCoefficient.from_matrix(random_complex((D, D), r), phi.dims)
        G = BlockCoefficient.from_matrix(random_complex((D, D), r), phi.dims)
        agree = max(agree, generator_residual(perturbed_generator(phi, F, G), perturbed_generator_blocks(phi, F, G)))
    std, unit, qmax = 0.0, 0.0, 0.0
    for _ in range(100):
        d, n = int(r.integers(1, 4)), int(r.integers(1, 4))
        phi = random_inner(r, d, n)
        F = make_isometric_coefficient(random_hermitian(d, r), random_complex((d * n, d), r),
                                       random_unitary(d * n, r))
        qmax = max(qmax, maxabs(qF(F)), maxabs(qF(F.adjoint())))
        psi = perturbed_generator(phi, F, F)
        std = max(std, max(validate_standard_form(psi, 1e-9).residuals.values()))
        unit = max(unit, maxabs(psi(np.eye(d))))
    dt = time.perf_counter() - t0
    ok = agree < 1e-10 and std < 1e-9 and unit < 1e-10 and qmax < 1e-12 and dt < 30
    record(2, ok, f"formula agreement {agree:.2e} (< 1e-10), standard form {std:.2e} (< 1e-9), "
                  f"psi(1) {unit:.2e} (< 1e-10), {dt:.1f}s (< 30s)")


def test_criterion_03_weyl_shift():
    r = np.random.default_rng(303)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        d, n = int(r.integers(1, 4)), int(r.integers(1, 4))
        phi = random_inner(r, d, n)
        res = weyl_shift_check(phi, float(r.normal()), random_complex(n, r), random_unitary(n, r),
                               random_complex(n, r), random_complex(n, r))
        worst = max(worst, res)
    dt = time.perf_counter() - t0
    record(3, worst < 1e-10 and dt < 10, f"max shift residual {worst:.2e} (< 1e-10) over 50 cases, {dt:.1f}s (< 10s)")


def test_criterion_04_q_calculus():
    r = np.random.default_rng(404)
    t0 = time.perf_counter()
    disagree, m_res, n_contractive = 0, 0.0, 0
    for i in range(200):
        d, n = int(r.integers(1, 4)), int(r.integers(1, 3))
        dims = SpaceDims(d, n)
        family = i % 4
        if family == 0:
            F = BlockCoefficient.from_matrix(random_complex((dims.big, dims.big), r, 0.5), dims)
        elif family == 1:
            F = random_contractive_coefficient(dims, r)
        elif family == 2:
            F = make_isometric_coefficient(random_hermitian(d, r), random_complex((d * n, d), r),
                                           random_unitary(d * n, r))
        else:
            # small perturbation of an isometric coefficient: either side of the boundary
            base = make_isometric_coefficient(random_hermitian(d, r), random_complex((d * n, d), r),
                                              random_unitary(d * n, r))
            F = BlockCoefficient.from_matrix(base.matrix + random_complex((dims.big, dims.big), r, 0.05), dims)
        rep = classify_contractive(F)
        disagree += rep.is_contractive != rep.block_contractive
        if rep.is_contractive:
            n_contractive += 1
            m_res = max(m_res, rep.m_residual)
    q_iso = 0.0
    for _ in range(50):
        d, n = int(r.integers(1, 4)), int(r.integers(1, 4))
        F = make_isometric_coefficient(random_hermitian(d, r), random_complex((d * n, d), r),
                                       random_unitary(d * n, r))
        C = weyl_coefficient(float(r.normal()), random_complex(n, r), random_unitary(n, r), d=d)
        q_iso = max(q_iso, np.linalg.norm(qF(F), 2), np.linalg.norm(qF(C), 2))
    dt = time.perf_counter() - t0
    ok = disagree == 0 and m_res < 1e-8 and q_iso < 1e-12 and dt < 20
    record(4, ok, f"{disagree} route disagreements in 200, m-identity residual {m_res:.2e} (< 1e-8) "
                  f"over {n_contractive} contractive, |q| of isometric/Weyl {q_iso:.2e} (< 1e-12), {dt:.1f}s (< 20s)")


def test_criterion_05_cocycle_laws():
    r = np.random.default_rng(505)
    t0 = time.perf_counter()
    defect = refine = integ = 0.0
    for _ in range(50):
        d, n = int(r.integers(1, 4)), int(r.integers(1, 3))
        phi = random_inner(r, d, n)
        f, g = random_step(r, n, pieces=4), random_step(r, n, pieces=4)
        s = float(r.uniform(0, 1))
        defect = max(defect, check_cocycle_identity(phi, f, g, s, 1.0 - s))
        k = eval_cocycle_element(phi, f, g, 1.0).superop
        halves = []
        for dur, v in f.segments:
            halves += [(dur / 2, v), (dur / 2, v)]
        refine = max(refine, maxabs(k - eval_cocycle_element(phi, StepFunction(tuple(halves)), g, 1.0).superop))
        integ = max(integ, maxabs(k - integrate_cocycle(phi, f, g, 1.0)))
    dt = time.perf_counter() - t0
    ok = defect < 1e-9 and refine < 1e-12 and integ < 1e-8 and dt < 30
    record(5, ok, f"cocycle defect {defect:.2e} (< 1e-9), refinement {refine:.2e} (< 1e-12), "
                  f"integrator {integ:.2e} (< 1e-8), {dt:.1f}s (< 30s)")


def test_criterion_06_feynman_kac():
    r = np.random.default_rng(606)
    t0 = time.perf_counter()
    dims = SpaceDims(2, 1)
    spec = InnerFlowSpec(random_hermitian(2, r, 0.5), random_complex((2, 2), r, 0.7))
    F = weyl_coefficient(0.4, [0.3 + 0.2j], [[np.exp(0.7j)]], d=2)
    x = random_hermitian(2, r) + np.eye(2)
    f = StepFunction(((0.5, random_complex(1, r, 0.5)), (0.5, random_complex(1, r, 0.5))))
    g = StepFunction(((0.25, random_complex(1, r, 0.5)), (0.75, random_complex(1, r, 0.5))))
    u, v = random_complex(2, r), random_complex(2, r)
    Ns = [64, 128, 256, 512]
    checks = {
        "full": (spec, F),
        "flow-only": (spec, BlockCoefficient.zero(dims)),
        "multiplier-only": (InnerFlowSpec.trivial(dims), F),
    }
    parts, ok = [], True
    for name, (sp, coef) in checks.items():
        tab = cross_validate(sp, coef, coef, x, f, g, 1.0, Ns, u, v)
        good = tab.monotone(0.1) and tab.fitted_order >= 0.5 and tab.errors[-1] < 5e-2
        ok &= good
        parts.append(f"{name}: order {tab.fitted_order:.2f}, err@512 {tab.errors[-1]:.1e}")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    record(6, ok, "; ".join(parts) + f" (monotone, order >= 0.5, err < 5e-2), {dt:.1f}s (< 60s)")


def test_criterion_07_exclusion():
    r = np.random.default_rng(707)
    t0 = time.perf_counter()
    dres = tres = 0.0
    broken = 0
    for m in (2, 3):
        for _ in range(20):
            spec = ExclusionSpec(m, r.normal(size=m), random_complex((m, m), r), random_complex((m, m), r))
            rep = verify_amplitude_addition(spec, 1e-9)
            dres, tres = max(dres, rep.delta_residual), max(tres, rep.tau_residual)
            broken += not rep.symmetric
    dt = time.perf_counter() - t0
    ok = dres < 1e-12 and tres < 1e-9 and broken >= 5 and dt < 60
    record(7, ok, f"delta {dres:.2e} (< 1e-12), tau {tres:.2e} (< 1e-9), "
                  f"{broken} asymmetric instances (>= 5), {dt:.1f}s (< 60s)")


def test_criterion_08_balance():
    t0 = time.perf_counter()
    expected = {
        "rotation-algebra": {"U": True, "V": True, "Z": False},
        "cuntz-N": {"s1": True, "s2": True},
        "free-sphere": dict.fromkeys(["z1", "z2", "z3"], True),
        "twisted-sphere": dict.fromkeys(["z1", "z2", "z3"], True),
        "halflib-sphere": dict.fromkeys(["z1", "z2", "z3"], True),
        "twisted-halflib-sphere": dict.fromkeys(["z1", "z2", "z3"], True),
        "real-sphere": dict.fromkeys(["x1", "x2", "x3"], False),
    }
    wrong = [name for name, want in expected.items() if balanced_generators(load_builtin(name)) != want]
    dt = time.perf_counter() - t0
    record(8, not wrong and dt < 1, f"{len(expected) - len(wrong)}/{len(expected)} presentations classified "
                                    f"as expected, {dt:.2f}s (< 1s)")


def test_criterion_09_torus():
    r = np.random.default_rng(909)
    th = Fraction(1, 7)
    t0 = time.perf_counter()
    U, V = TorusElement.U(th), TorusElement.V(th)
    comm = (U * V).max_abs_diff(U.lam * (V * U))

    def rand_elem():
        out = TorusElement(th)
        for _ in range(3):
            m, n = (int(v) for v in r.integers(-2, 3, size=2))
            out = out + TorusElement.monomial(th, m, n, complex(r.normal(), r.normal()))
        return out

    ident = 0.0
    for i in range(200):
        a, b, c = rand_elem(), rand_elem(), rand_elem()
        if i % 2 == 0:
            ident = max(ident, lattice_residual((a * b) * c,
                                                lambda e: lattice_apply(a, lattice_apply(b, lattice_apply(c, e)))))
            ident = max(ident, ((a * b) * c).max_abs_diff(a * (b * c)))
        else:
            ident = max(ident, lattice_residual(a.adjoint(), lambda e: lattice_adjoint_apply(a, e)))
            ident = max(ident, (a * b).adjoint().max_abs_diff(b.adjoint() * a.adjoint()))
    gauge, control = 0.0, np.inf
    for _ in range(10):
        ns = []
        for _ in range(2):
            x = rand_elem()
            ns.append(0.5 * (x + x.adjoint()))
        betas = r.normal(size=2)
        gauge = max(gauge, gauge_perturb_check(betas, ns, 3))
        control = min(control, gauge_perturb_check(betas, ns, 3, drop_dn_term=True))
    dt = time.perf_counter() - t0
    ok = comm < 1e-14 and ident < 1e-12 and gauge < 1e-12 and control > 0.1 and dt < 30
    record(9, ok, f"UV - lambda VU {comm:.1e}, 200 identities {ident:.2e} (< 1e-12), sum of squares "
                  f"{gauge:.2e} (< 1e-12), negative control >= {control:.2f} (> 0.1), {dt:.1f}s (< 30s)")


def test_criterion_10_randomized_action():
    r = np.random.default_rng(1010)
    t0 = time.perf_counter()
    worst_z = 0.0
    for k in range(10):
        m, n = int(r.integers(0, 3)), int(r.integers(0, 3))
        c1, c2 = complex(*r.normal(scale=0.6, size=2)), complex(*r.normal(scale=0.6, size=2))
        t = float(r.uniform(0.2, 2.0))
        res = mc_randomized_action(m, n, c1, c2, t, 100_000, seed=5000 + k)
        worst_z = max(worst_z, res.z_score)
    errs = [mc_randomized_action(1, 1, 0.8, 0.5, 1.0, p, seed=77).stderr for p in (1000, 10_000, 100_000)]
    ratios = [(hi / lo) / np.sqrt(10) for hi, lo in zip(errs[:-1], errs[1:])]
    scale_ok = all(1 / 1.5 <= q <= 1.5 for q in ratios)
    dt = time.perf_counter() - t0
    ok = worst_z < 3 and scale_ok and dt < 30
    record(10, ok, f"max |z| {worst_z:.2f} (< 3) over 10 sets, stderr ratio / sqrt(10) "
                   f"{', '.join(f'{q:.2f}' for q in ratios)} (within 1.5x), {dt:.1f}s (< 30s)")
