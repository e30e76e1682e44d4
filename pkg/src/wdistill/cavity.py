"""Cavity-QED realization of the distillation protocol.

Atoms carry the entanglement (|g> = 0, |e> = 1); each acting party's ancilla
is a single cavity mode prepared in vacuum. Sending atom k through its cavity
for the right interaction time realizes the amplitude rescaling through
resonant Rabi oscillation: |c_k| cos(eps * dt_k) = min|c_i|. Detecting every
cavity in vacuum post-selects the W state; the leftover e^{+-i w dt/2}
phases are recorded per step and repaired by classical Ramsey-zone pulses.

hbar = 1 throughout. The closed-form propagator requires exact resonance
(w = w0); off-resonant dynamics are reachable only through the generic
eigendecomposition propagator and sit outside the protocol.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCoefficientError,
    ToleranceError,
    TruncationError,
    UnsupportedModeError,
    ValidationError,
)
from .protocol import (
    FIDELITY_TOL,
    PROB_MATCH_TOL,
    DistillationReport,
    WPrimeSpec,
    analytic_success_probability,
    make_w_state,
    measure_all_branches,
    min_coefficient_index,
)
from .statevec import StateVector, SubsystemLayout, apply_local, fidelity

RESONANCE_TOL = 1e-12


class AtomicWPrimeSpec(WPrimeSpec):
    """Coefficient specification over atomic levels, |g> = 0 and |e> = 1."""


@dataclass(frozen=True)
class JCParams:
    """Jaynes-Cummings model parameters and the retained Fock-space cutoff."""

    omega: float
    omega0: float
    epsilon: float
    fock_cutoff: int = 1

    def __post_init__(self):
        for name in ("omega", "omega0", "epsilon"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.epsilon < 0:
            raise ValidationError(f"coupling epsilon must be >= 0, got {self.epsilon}")
        if int(self.fock_cutoff) < 1:
            raise ValidationError(f"fock_cutoff must be >= 1, got {self.fock_cutoff}")
        object.__setattr__(self, "fock_cutoff", int(self.fock_cutoff))

    @property
    def is_resonant(self) -> bool:
        return abs(self.omega - self.omega0) <= RESONANCE_TOL * max(abs(self.omega), 1.0)


@dataclass(frozen=True)
class CavityStepPlan:
    """Interaction time for one party's atom-cavity pass.

    accrued_phases records the angles of the phase factors the pass imprints:
    +omega*dt/2 on terms where the atom stays ground over vacuum, -omega*dt/2
    on the term with the atom excited. Populated only when omega is known at
    planning time.
    """

    k: int
    delta_t: float
    accrued_phases: dict[str, float] | None = None


def _jc_index(fock_dim: int, atom: int, n: int) -> int:
    # (atom tensor fock) ordering, atom bit most significant
    return atom * fock_dim + n


def jc_hamiltonian(params: JCParams) -> np.ndarray:
    """Atom-cavity Hamiltonian w a+a + w0 Sz + eps (a S+ + a+ S-), truncated.

    Dimension 2*(fock_cutoff+1) on (atom tensor fock) ordering; Sz has
    eigenvalues +-1/2 so bare atomic energies are +-w0/2.
    """
    d = params.fock_cutoff + 1
    h = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    for n in range(d):
        h[_jc_index(d, 0, n), _jc_index(d, 0, n)] = params.omega * n - params.omega0 / 2
        h[_jc_index(d, 1, n), _jc_index(d, 1, n)] = params.omega * n + params.omega0 / 2
    for n in range(d - 1):
        g = params.epsilon * math.sqrt(n + 1)
        h[_jc_index(d, 0, n + 1), _jc_index(d, 1, n)] = g
        h[_jc_index(d, 1, n), _jc_index(d, 0, n + 1)] = g
    return h


def jc_propagator_closed(params: JCParams, t: float) -> np.ndarray:
    """exp(-i H t) at resonance, assembled sector by sector.

    |g,0> picks up e^{+i w t/2}; each excitation sector {|e,n>, |g,n+1>}
    Rabi-oscillates at eps*sqrt(n+1) under a common e^{-i w (n+1/2) t}; the
    dangling |e,cutoff> level is uncoupled in the truncated space.
    """
    if not params.is_resonant:
        raise UnsupportedModeError(
            "closed-form propagator requires resonance (omega == omega0); "
            "use linalg.propagator on jc_hamiltonian for off-resonant dynamics"
        )
    d = params.fock_cutoff + 1
    t = float(t)
    u = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    u[_jc_index(d, 0, 0), _jc_index(d, 0, 0)] = cmath.exp(0.5j * params.omega * t)
    for n in range(d - 1):
        theta = params.epsilon * math.sqrt(n + 1) * t
        common = cmath.exp(-1j * params.omega * (n + 0.5) * t)
        e_n, g_n1 = _jc_index(d, 1, n), _jc_index(d, 0, n + 1)
        u[e_n, e_n] = common * math.cos(theta)
        u[g_n1, g_n1] = common * math.cos(theta)
        u[g_n1, e_n] = -1j * common * math.sin(theta)
        u[e_n, g_n1] = -1j * common * math.sin(theta)
    top = _jc_index(d, 1, d - 1)
    u[top, top] = cmath.exp(-1j * params.omega * (d - 0.5) * t)
    return u


def optimal_interaction_time(
    spec: WPrimeSpec, k: int, epsilon: float, omega: float | None = None
) -> CavityStepPlan:
    """Interaction time dt_k = arccos(min|c_i| / |c_k|) / eps for party k.

    Passing omega fills in the accrued phase-factor angles for the ledger.
    """
    if epsilon <= 0:
        raise ValidationError(f"coupling epsilon must be positive, got {epsilon}")
    if not 0 <= k < spec.n:
        raise ValidationError(f"party index {k} out of range")
    if spec.coeffs[k] == 0:
        raise DegenerateCoefficientError(f"coefficient {k} is zero")
    j = min_coefficient_index(spec.coeffs)
    if k == j:
        raise ValidationError(f"party {k} holds the minimal coefficient and must not interact")
    ratio = min(abs(c) for c in spec.coeffs) / abs(spec.coeffs[k])
    delta_t = math.acos(min(1.0, ratio)) / epsilon
    phases = None
    if omega is not None:
        half = 0.5 * float(omega) * delta_t
        phases = {"unaffected": +half, "acting": -half}
    return CavityStepPlan(k=k, delta_t=delta_t, accrued_phases=phases)


def ramsey_phase(state: StateVector, site: int, phi: float) -> StateVector:
    """Classical Ramsey-zone pulse: diag(1, e^{i phi}) on an atomic site."""
    if not 0 <= site < state.layout.n_sites:
        raise ValidationError(f"site {site} out of range")
    if state.layout.dims[site] != 2:
        raise ValidationError(f"site {site} is not a two-level atom")
    gate = np.array([[1.0, 0.0], [0.0, cmath.exp(1j * float(phi))]], dtype=np.complex128)
    return apply_local(state, gate, (site,))


def physical_plan(spec: WPrimeSpec, params: JCParams) -> tuple[int, tuple[CavityStepPlan, ...]]:
    """Skipped-party index and per-party interaction times, ascending order."""
    for i, c in enumerate(spec.coeffs):
        if c == 0:
            raise DegenerateCoefficientError(f"coefficient {i} is zero")
    j = min_coefficient_index(spec.coeffs)
    plans = tuple(
        optimal_interaction_time(spec, k, params.epsilon, omega=params.omega)
        for k in range(spec.n)
        if k != j
    )
    return j, plans


def evolved_physical_state(
    spec: WPrimeSpec, params: JCParams
) -> tuple[StateVector, int, tuple[int, ...], tuple[CavityStepPlan, ...]]:
    """Atoms + cavities after every atom-cavity pass, before photodetection.

    Returns (state, skipped index j, cavity sites in measurement order,
    step plans). Shared by the physical runner and the trajectory sampler.
    """
    if not params.is_resonant:
        raise UnsupportedModeError("physical protocol requires resonant parameters")
    if params.fock_cutoff < 1:
        raise TruncationError("fock_cutoff must hold at least one photon")
    j, plans = physical_plan(spec, params)
    n = spec.n
    fock_dim = params.fock_cutoff + 1
    users = [p.k for p in plans]
    labels = tuple(f"atom{i + 1}" for i in range(n)) + tuple(f"cav{k + 1}" for k in users)
    layout = SubsystemLayout((2,) * n + (fock_dim,) * (n - 1), labels)
    amps = np.zeros(layout.size, dtype=np.complex128)
    for m, c in enumerate(spec.coeffs):
        occ = [0] * layout.n_sites
        occ[m] = 1
        amps[layout.ravel(occ)] = c
    state = StateVector(layout, amps)
    cavity_sites = tuple(n + i for i in range(n - 1))
    for plan_k, cav in zip(plans, cavity_sites):
        u = jc_propagator_closed(params, plan_k.delta_t)
        state = apply_local(state, u, (plan_k.k, cav))
    return state, j, cavity_sites, plans


def run_physical(spec: WPrimeSpec, params: JCParams) -> DistillationReport:
    """Run the cavity scheme exactly: evolve, photodetect, Ramsey-repair.

    The success probability must match N*min|c_i|^2 and the repaired output
    must reach fidelity 1 with the W state; breaches raise ToleranceError.
    """
    state, j, cavity_sites, plans = evolved_physical_state(spec, params)
    records, success_prob, success_atoms = measure_all_branches(state, cavity_sites, spec.n)

    total = sum(r.probability for r in records)
    if abs(total - 1.0) > PROB_MATCH_TOL:
        raise ToleranceError(f"branch probabilities sum to {total!r}, not 1")
    analytic = analytic_success_probability(spec)
    if abs(success_prob - analytic) > PROB_MATCH_TOL:
        raise ToleranceError(
            f"physical success probability {success_prob!r} deviates from analytic {analytic!r}"
        )
    if success_atoms is None:
        raise ToleranceError("vacuum branch has zero probability for a valid specification")

    # Ledger-derived repair: step k left the excited term of atom k carrying
    # arg(c_k) - omega*dt_k relative to the spectator terms.
    corrected = success_atoms
    for plan_k in plans:
        phi = params.omega * plan_k.delta_t - cmath.phase(spec.coeffs[plan_k.k])
        corrected = ramsey_phase(corrected, plan_k.k, phi)
    corrected = ramsey_phase(corrected, j, -cmath.phase(spec.coeffs[j]))
    head = corrected.amps[corrected.layout.ravel((1,) + (0,) * (spec.n - 1))]
    if abs(head) == 0.0:
        raise ToleranceError("amplitude of |10...0> vanished after repair")
    corrected = StateVector(corrected.layout, corrected.amps * (head.conjugate() / abs(head)))

    fid = fidelity(corrected, make_w_state(spec.n))
    if abs(fid - 1.0) > FIDELITY_TOL:
        raise ToleranceError(f"repaired output fidelity {fid!r} is not 1 within {FIDELITY_TOL}")
    return DistillationReport(
        success_probability_exact=success_prob,
        success_probability_analytic=analytic,
        branch_records=tuple(records),
        final_state=corrected,
        fidelity_with_w=fid,
        min_index=j,
        cavity_steps=plans,
    )
