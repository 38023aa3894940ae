import itertools
import math

import numpy as np
import pytest

from qcodebound import channel as chmod
from qcodebound import gfsym, simkit
from qcodebound.errors import ResourceError, ValidationError
from qcodebound.gfsym import SymplecticSubspace, SymplecticVector

L_EX = SymplecticSubspace.from_strings(["0101"])
J0_EX = [SymplecticVector.from_string(s) for s in ("0000", "1000")]


def pauli_fidelity_oracle(psi, P, n, L, leaders):
    """Classical bookkeeping: N_x is mapped back by the leader sharing its syndrome."""
    d = P.d
    basis = chmod.standard_error_basis(d)
    by_syn = {gfsym.syndrome(r, L): r for r in leaders}
    total = 0.0
    for x in gfsym.all_vectors(n, d):
        px = math.prod(P[s] for s in x.symbols)
        if px == 0:
            continue
        r = by_syn[gfsym.syndrome(x, L)]
        op = chmod.tensor_error_operator(r, basis).conj().T @ chmod.tensor_error_operator(x, basis)
        total += px * abs(np.vdot(psi, op @ psi)) ** 2
    return total


def damping_code(g):
    ch2 = chmod.tensor_power(chmod.amplitude_damping(g), 2)
    codes = simkit.build_codes(L_EX, J0_EX)
    return ch2, codes, [simkit.build_recovery(c) for c in codes]


class TestCodes:
    def test_damping_codes(self):
        c0, c1 = simkit.build_codes(L_EX, J0_EX)
        assert np.allclose(c0.projector(), np.diag([1, 0, 0, 1]))
        assert np.allclose(c1.projector(), np.diag([0, 1, 1, 0]))
        assert np.allclose([c0.syndrome, c1.syndrome], [[1], [-1]])

    @pytest.mark.parametrize("n,k,d", [(2, 1, 2), (3, 1, 2), (3, 2, 2), (2, 1, 3), (2, 2, 3)])
    def test_eigenspaces_partition(self, n, k, d):
        for L in itertools.islice(gfsym.enumerate_self_orthogonal(n, k, d), 6):
            codes = simkit.build_codes(L)
            assert len(codes) == d**k
            total = sum(c.projector() for c in codes)
            assert np.allclose(total, np.eye(d**n), atol=1e-10)
            for c in codes:
                assert c.K == d ** (n - k)
                for g, tau in zip(c.generators(), c.syndrome):
                    assert np.allclose(g @ c.code_basis, tau * c.code_basis, atol=1e-10)
                assert simkit.build_recovery(c).tp_error() < 1e-10

    def test_dense_cap(self):
        L = SymplecticSubspace.from_strings(["01" + "00" * 6])
        with pytest.raises(ResourceError, match="dense simulation cap"):
            simkit.build_codes(L)

    def test_not_self_orthogonal(self):
        with pytest.raises(ValueError):
            simkit.build_codes(SymplecticSubspace.from_strings(["1000", "0100"]))


class TestDampingCode:
    @pytest.mark.parametrize("g", [0.05, 0.3, 0.5])
    def test_closed_forms(self, g):
        ch2, codes, recs = damping_code(g)
        for c, r in zip(codes, recs):
            mf = simkit.min_fidelity(c, ch2, r, seed=1, starts=8)
            ma = simkit.min_avg_fidelity(c, ch2, r, seed=1, starts=8)
            assert abs(mf.value - (1 - g)) < 1e-6
            assert abs(ma.value - (1 - g / 2)) < 1e-6
            assert simkit.entanglement_fidelity(c, ch2, r) == pytest.approx(1 - 3 * g / 4, abs=1e-12)
            F, Fa = simkit.exact_fidelities(c, ch2, r)
            assert (F, Fa) == pytest.approx((1 - g, 1 - g / 2), abs=1e-9)

    def test_state_fidelity_closed_form(self):
        g = 0.3
        ch2, codes, recs = damping_code(g)
        psi = np.array([0.6, 0, 0, 0.8])
        assert simkit.state_fidelity(psi, ch2, recs[0]) == pytest.approx(1 - 0.64 * g, abs=1e-12)

    def test_ensemble_check(self):
        rep = simkit.ensemble_check(L_EX, chmod.amplitude_damping(0.3), leaders=J0_EX, starts=8)
        assert rep.rhs == pytest.approx(0.225, abs=1e-12)
        assert [str(x) for x in rep.correctable] == ["0000", "0101", "1000", "1101"]
        assert rep.verdict == "confirmed"

    def test_subcode(self):
        ch2, codes, recs = damping_code(0.3)
        res = simkit.extract_subcode(codes[0], ch2, recs[0], starts=8)
        assert res.basis.shape[1] == 1
        assert 1 - res.min_fidelity_upper <= 2 * (1 - res.avg_fidelity_upper) + 1e-6


class TestPauliExactness:
    @pytest.mark.parametrize(
        "L,d,p",
        [(["0101"], 2, 0.05), (["0101"], 2, 0.2), (["010101", "101000"], 2, 0.1), (["0101"], 3, 0.1)],
    )
    def test_state_fidelity_matches_classical_oracle(self, L, d, p):
        L = SymplecticSubspace.from_strings(L, d)
        n = L.n
        P = chmod.ErrorDistribution.depolarizing(p, d)
        chn = chmod.tensor_power(chmod.pauli_channel(P), n)
        rng = np.random.default_rng(7)
        leaders = gfsym.min_entropy_coset_leaders(L)
        J = simkit.enlarge_correctable_set(L, leaders)
        pj = simkit.correctable_probability(P, n, J)
        for code in simkit.build_codes(L, leaders):
            rec = simkit.build_recovery(code)
            assert simkit.entanglement_fidelity(code, chn, rec) == pytest.approx(pj, abs=1e-10)
            for _ in range(5):
                psi = simkit.random_code_state(code, rng)
                f = simkit.state_fidelity(psi, chn, rec)
                assert f == pytest.approx(pauli_fidelity_oracle(psi, P, n, L, leaders), abs=1e-10)
                assert f >= pj - 1e-10
                assert pj >= simkit.correctable_probability(P, n, leaders) - 1e-15
                assert simkit.residual_lower_bound(psi, chn, J) == pytest.approx(pj, abs=1e-10)

    def test_ensemble_depolarizing(self):
        rep = simkit.ensemble_check(L_EX, chmod.depolarizing(0.05), starts=8)
        assert rep.verdict == "confirmed"
        assert rep.best_entanglement_fidelity == pytest.approx(1 - rep.rhs, abs=1e-10)

    def test_identity_channel(self):
        rep = simkit.ensemble_check(L_EX, chmod.identity_channel(), starts=4)
        for r in rep.per_code:
            assert r.min_fidelity == pytest.approx(1, abs=1e-9)
            assert r.entanglement_fidelity == pytest.approx(1, abs=1e-12)
        assert rep.rhs == pytest.approx(0, abs=1e-15)


class TestResidualBound:
    @pytest.mark.parametrize("seed", range(20))
    def test_soundness(self, seed):
        rng = np.random.default_rng(seed)
        n = 1 + seed % 3
        fam = list(gfsym.enumerate_self_orthogonal(n, 1, 2))
        L = fam[int(rng.integers(len(fam)))]
        chn = chmod.tensor_power(chmod.random_channel(2, rng, rank=2), n)
        code = simkit.build_codes(L)[0]
        rec = simkit.build_recovery(code)
        psi = simkit.random_code_state(code, rng)
        J = simkit.enlarge_correctable_set(L, code.leaders)
        assert simkit.state_fidelity(psi, chn, rec) >= simkit.residual_lower_bound(psi, chn, J) - 1e-8

    def test_fidelity_ordering(self):
        rng = np.random.default_rng(2)
        chn = chmod.tensor_power(chmod.random_channel(2, rng), 2)
        code = simkit.build_codes(L_EX)[0]
        rep = simkit.fidelity_report(code, chn, simkit.build_recovery(code), starts=8)
        assert rep.min_fidelity <= rep.min_avg_fidelity_upper + 1e-9
        assert rep.entanglement_fidelity <= rep.min_avg_fidelity_upper + 1e-7


class TestStabilizerText:
    def test_parse(self):
        L, leaders = simkit.parse_stabilizer_text("# example\n0101\n\nleaders:\n0000\n1000\n")
        assert L == L_EX and leaders == J0_EX

    def test_no_leaders(self):
        L, leaders = simkit.parse_stabilizer_text("0101\n")
        assert leaders is None

    @pytest.mark.parametrize("text", ["", "0102\n", "01\n0101\n", "1000\n0100\n", "0101\nleaders:\nleaders:\n"])
    def test_rejects(self, text):
        with pytest.raises(ValidationError):
            simkit.parse_stabilizer_text(text)

    def test_qutrit(self):
        L, _ = simkit.parse_stabilizer_text("1020\n", d=3)
        assert L.d == 3 and L.dim == 1
