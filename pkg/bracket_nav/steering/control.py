"""
Non-resonant frequency assignment and the sampled oscillatory feedback

    u_k(t, x) = sum_S1 a_i phi_i^k + eps^-1/2 sum_S2 sqrt|a_j1j2| phi_j1j2^k(t)
                + eps^-2/3 sum_S3 cbrt(a_l1l2l3) phi_l1l2l3^k(t)

with a(x) = -gamma F(x)^-1 grad P(x).
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .conf import steering_setting
from .exceptions import FrequencyAssignmentError, ScenarioError
from .system import build_bracket_matrix, coefficients_at

logger = logging.getLogger(__name__)

SIGNS = (1, -1)


def s2_amplitude(k):
    return 2.0 * math.sqrt(math.pi * k)


def s3_amplitude(k1, k2):
    return 2.0 * np.cbrt(2.0 * math.pi ** 2 * (k1 + k2) * (k2 - k1))


@dataclass(frozen=True)
class FrequencyAssignment:
    k2: Dict[Tuple[int, int], int] = field(default_factory=dict)
    k3: Dict[Tuple[int, int, int], Tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        k2 = {tuple(pair): int(k) for pair, k in dict(self.k2).items()}
        k3 = {tuple(triple): (int(ks[0]), int(ks[1])) for triple, ks in dict(self.k3).items()}
        for pair, k in k2.items():
            if k <= 0:
                raise FrequencyAssignmentError('K%s must be a positive integer, got %d' % (_label(pair), k))
        for triple, (k1, k2_) in k3.items():
            if k1 == 0 or k2_ == 0:
                raise FrequencyAssignmentError('K1/K2 for triple %s must be nonzero' % (triple,))
            if k1 + k2_ == 0 or k2_ - k1 == 0:
                raise FrequencyAssignmentError('K3 = K1+K2 and K4 = K2-K1 must be nonzero for triple %s'
                                               % (triple,))
        object.__setattr__(self, 'k2', k2)
        object.__setattr__(self, 'k3', k3)

    @classmethod
    def from_values(cls, basis, values):
        """Builds an assignment from a flat tuple (K for each S2 pair, then K1, K2 for each S3 triple)."""
        values = list(values)
        pairs = dict(zip(basis.s2, values[:len(basis.s2)]))
        rest = values[len(basis.s2):]
        triples = {triple: (rest[2 * i], rest[2 * i + 1]) for i, triple in enumerate(basis.s3)}
        return cls(k2=pairs, k3=triples)

    def triple_frequencies(self, triple):
        """(K1, K2, K3, K4) of a triple."""
        k1, k2 = self.k3[tuple(triple)]
        return k1, k2, k1 + k2, k2 - k1

    @property
    def max_frequency(self):
        values = [abs(k) for k in self.k2.values()]
        for triple in self.k3:
            values.extend(abs(k) for k in self.triple_frequencies(triple))
        return max(values, default=1)

    def calibration_residuals(self):
        """
        |amplitude product x iterated-integral coefficient - 1| for every
        pair and triple; zero in exact arithmetic.
        """
        residuals = {}
        for pair, k in self.k2.items():
            residuals[pair] = abs(s2_amplitude(k) ** 2 / (4.0 * math.pi * k) - 1.0)
        for triple, (k1, k2) in self.k3.items():
            cube = s3_amplitude(k1, k2) ** 3
            residuals[triple] = abs(cube / (16.0 * math.pi ** 2 * (k2 ** 2 - k1 ** 2)) - 1.0)
        return residuals

    def to_document(self):
        return {
            'pairs': [{'pair': list(pair), 'k': k} for pair, k in self.k2.items()],
            'triples': [{'triple': list(triple), 'k1': k1, 'k2': k2} for triple, (k1, k2) in self.k3.items()],
        }


@dataclass(frozen=True)
class ControlParams:
    epsilon: float
    gamma: float

    def __post_init__(self):
        if not (self.epsilon > 0 and self.gamma > 0):
            raise ScenarioError('epsilon and gamma must be positive, got %r, %r' % (self.epsilon, self.gamma))


@dataclass
class NonresonanceReport:
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


def _label(entry):
    return ''.join(str(i) for i in entry)


def validate_nonresonance(fa, basis):
    report = NonresonanceReport()
    if set(fa.k2) != set(basis.s2) or set(fa.k3) != set(basis.s3):
        report.violations.append('assignment covers %s/%s but the basis has S2=%s, S3=%s'
                                 % (sorted(fa.k2), sorted(fa.k3), list(basis.s2), list(basis.s3)))
        return report

    for a, b in itertools.combinations(basis.s2, 2):
        if abs(fa.k2[a]) == abs(fa.k2[b]):
            report.violations.append('|K%s| = |K%s| = %d' % (_label(a), _label(b), abs(fa.k2[a])))

    triple_values = {abs(k) for t in basis.s3 for k in fa.triple_frequencies(t)}
    for pair in basis.s2:
        if abs(fa.k2[pair]) in triple_values:
            report.violations.append('|K%s| = %d coincides with a triple frequency' % (_label(pair), fa.k2[pair]))

    for triple in basis.s3:
        k1, k2 = (abs(k) for k in fa.k3[triple])
        if k1 == k2:
            report.violations.append('triple %s: |K1| = |K2|' % _label(triple))
        if k1 == 2 * k2:
            report.violations.append('triple %s: |K1| = 2|K2|' % _label(triple))
        if 2 * k1 == k2:
            report.violations.append('triple %s: 2|K1| = |K2|' % _label(triple))

    # relations among frequencies of one triple are covered by the checks above
    items = [(triple, s, k) for triple in basis.s3 for s, k in enumerate(fa.triple_frequencies(triple), start=1)]
    seen = set()
    for (ta, sa, ka), (tb, sb, kb), (tc, sc, kc) in itertools.product(items, repeat=3):
        if ta == tb == tc:
            continue
        for c1, c2, c3 in itertools.product(SIGNS, repeat=3):
            if c1 * ka + c2 * kb == c3 * kc:
                key = tuple(sorted({ta, tb, tc}))
                if key not in seen:
                    seen.add(key)
                    report.violations.append('resonance between triples %s: %+dK%d,%s %+dK%d,%s = %+dK%d,%s'
                                             % ([_label(t) for t in key], c1, sa, _label(ta), c2, sb, _label(tb),
                                                c3, sc, _label(tc)))
    return report


def assign_frequencies(basis, seed=None, max_magnitude=None):
    """
    Smallest-magnitude positive integers passing validate_nonresonance,
    enumerated by (max magnitude, lexicographic tuple). seed picks the
    seed-th passing assignment in that order (default the first).
    """
    if max_magnitude is None:
        max_magnitude = steering_setting('MAX_FREQUENCY')
    unknowns = len(basis.s2) + 2 * len(basis.s3)
    if unknowns == 0:
        return FrequencyAssignment()
    skip = seed or 0
    for magnitude in range(1, max_magnitude + 1):
        for values in itertools.product(range(1, magnitude + 1), repeat=unknowns):
            if max(values) != magnitude:
                continue
            try:
                candidate = FrequencyAssignment.from_values(basis, values)
            except FrequencyAssignmentError:
                continue
            if validate_nonresonance(candidate, basis).passed:
                if skip == 0:
                    logger.debug('assigned frequencies %s', values)
                    return candidate
                skip -= 1
    raise FrequencyAssignmentError('no non-resonant assignment with magnitudes up to %d' % max_magnitude)


def eval_phi(fa, basis, k, t, epsilon, signs=None):
    """
    Unit-coefficient contributions of every basis element to control
    channel k at time(s) t, in basis order. signs holds sign(a_j1j2) per S2 pair.
    """
    t = np.asarray(t, dtype=float)
    if signs is None:
        signs = (1.0,) * len(basis.s2)
    rows = [np.full(t.shape, float(k == i)) for i in basis.s1]
    for (j1, j2), sign in zip(basis.s2, signs):
        kk = fa.k2[(j1, j2)]
        omega = 2.0 * math.pi * kk / epsilon
        rows.append(s2_amplitude(kk) * ((k == j1) * sign * np.cos(omega * t) + (k == j2) * np.sin(omega * t)))
    for triple in basis.s3:
        l1, l2, l3 = triple
        k1, k2 = fa.k3[triple]
        c = np.cos(2.0 * math.pi * k1 * t / epsilon)
        s = np.sin(2.0 * math.pi * k2 * t / epsilon)
        rows.append(s3_amplitude(k1, k2) * ((k == l1) * c + (k == l2) * s + (k == l3) * c * s))
    return np.stack(rows)


@dataclass(frozen=True)
class EpochControl:
    """Controls of one epoch: trigonometric polynomials with coefficients frozen at x_hold."""

    coefficients: np.ndarray
    basis: object
    frequencies: FrequencyAssignment
    params: ControlParams
    m: int

    def at(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        eps = self.params.epsilon
        u = np.zeros((t.size, self.m))
        a = iter(self.coefficients)
        for i in self.basis.s1:
            u[:, i - 1] += next(a)
        for j1, j2 in self.basis.s2:
            coefficient = next(a)
            kk = self.frequencies.k2[(j1, j2)]
            amplitude = eps ** -0.5 * math.sqrt(abs(coefficient)) * s2_amplitude(kk)
            omega = 2.0 * math.pi * kk / eps
            u[:, j1 - 1] += amplitude * np.sign(coefficient) * np.cos(omega * t)
            u[:, j2 - 1] += amplitude * np.sin(omega * t)
        for triple in self.basis.s3:
            coefficient = next(a)
            l1, l2, l3 = triple
            k1, k2 = self.frequencies.k3[triple]
            amplitude = eps ** (-2.0 / 3.0) * np.cbrt(coefficient) * s3_amplitude(k1, k2)
            c = np.cos(2.0 * math.pi * k1 * t / eps)
            s = np.sin(2.0 * math.pi * k2 * t / eps)
            u[:, l1 - 1] += amplitude * c
            u[:, l2 - 1] += amplitude * s
            u[:, l3 - 1] += amplitude * c * s
        return u

    @property
    def is_zero(self):
        return not np.any(self.coefficients)


@dataclass(frozen=True)
class ControlLaw:
    system: object
    basis: object
    potential: object
    frequencies: FrequencyAssignment
    params: ControlParams

    def coefficients(self, x_hold):
        grad = self.potential.gradient(x_hold)
        return coefficients_at(self.system, self.basis, grad, self.params.gamma, x_hold)

    def epoch(self, x_hold):
        return EpochControl(self.coefficients(x_hold), self.basis, self.frequencies, self.params, self.system.m)

    def __call__(self, t, x_hold):
        return self.epoch(x_hold).at(t)[0]


def eval_control(vfs, basis, nf, fa, params, t, x_hold):
    return ControlLaw(vfs, basis, nf, fa, params)(t, x_hold)


def control_bound(fa, basis, coefficients, epsilon):
    """Explicit bound on sup_t sum_k |u_k(t)| over an epoch with coefficients a."""
    a = iter(np.abs(coefficients))
    bound = sum(next(a) for _ in basis.s1)
    for pair in basis.s2:
        bound += 4.0 * math.sqrt(math.pi * abs(fa.k2[pair]) * next(a) / epsilon)
    for triple in basis.s3:
        k1, k2 = fa.k3[triple]
        bound += 6.0 * np.cbrt(2.0 * math.pi ** 2 * abs(k2 ** 2 - k1 ** 2) * next(a) / epsilon ** 2)
    return float(bound)


def control_bound_constants(fa, basis, gamma, alpha):
    """C1, C2, C3 of U <= C1|grad P| + C2 eps^-1/2 |grad P|^1/2 + C3 eps^-2/3 |grad P|^1/3."""
    c1 = gamma * alpha * math.sqrt(len(basis.s1))
    # Hoelder: sum sqrt(K_p a_p) <= (sum K_p^(2/3))^(3/4) |a|^(1/2), likewise with exponents 2/5, 5/6 for S3
    pairs = sum(abs(fa.k2[p]) ** (2.0 / 3.0) for p in basis.s2) ** 0.75
    spread = sum(abs(k2 ** 2 - k1 ** 2) ** 0.4 for k1, k2 in (fa.k3[t] for t in basis.s3)) ** (5.0 / 6.0)
    c2 = 4.0 * math.sqrt(math.pi * gamma * alpha) * pairs
    c3 = 6.0 * np.cbrt(2.0 * math.pi ** 2 * gamma * alpha) * spread
    return c1, c2, float(c3)


def gradient_control_bound(law, x_hold):
    """The C1/C2/C3 form of control_bound with alpha = ||F(x_hold)^-1||."""
    grad_norm = float(np.linalg.norm(law.potential.gradient(x_hold)))
    matrix = build_bracket_matrix(law.system, law.basis, x_hold)
    alpha = float(np.linalg.norm(np.linalg.inv(matrix.columns), 2))
    c1, c2, c3 = control_bound_constants(law.frequencies, law.basis, law.params.gamma, alpha)
    eps = law.params.epsilon
    return c1 * grad_norm + c2 * eps ** -0.5 * grad_norm ** 0.5 + c3 * eps ** (-2.0 / 3.0) * np.cbrt(grad_norm)


@dataclass(frozen=True)
class OpenLoopSignal:
    triple: Tuple[int, int, int]
    k1: int
    k2: int
    epsilon: float
    m: int

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        l1, l2, l3 = self.triple
        c = np.cos(2.0 * math.pi * self.k1 * t / self.epsilon)
        s = np.sin(2.0 * math.pi * self.k2 * t / self.epsilon)
        u = np.zeros((t.size, self.m))
        u[:, l1 - 1] += c
        u[:, l2 - 1] += s
        u[:, l3 - 1] += c * s
        return u

    @property
    def leading_coefficient(self):
        """eps^3 / (16 pi^2 (K2^2 - K1^2)); infinite when |K1| = |K2|."""
        spread = self.k2 ** 2 - self.k1 ** 2
        if spread == 0:
            return math.inf
        return self.epsilon ** 3 / (16.0 * math.pi ** 2 * spread)


FULL_TRIPLE = 'full-triple'
REPEATED_INDEX = 'repeated-index'


def remark1_primitive(triple, frequencies, epsilon, variant=FULL_TRIPLE, m=None):
    """
    Unit-amplitude open-loop signals over [0, epsilon] generating
    [[f_l1, f_l2], f_l3]. frequencies is a FrequencyAssignment holding the
    triple or a plain (K1, K2) pair.
    """
    triple = tuple(int(i) for i in triple)
    if isinstance(frequencies, FrequencyAssignment):
        k1, k2 = frequencies.k3[triple]
    else:
        k1, k2 = (int(k) for k in frequencies)
    l1, l2, l3 = triple
    if variant == FULL_TRIPLE and len(set(triple)) != 3:
        raise ValueError('full-triple variant needs three distinct indices, got %s' % (triple,))
    if variant == REPEATED_INDEX and (l1 == l2 or l3 not in (l1, l2)):
        raise ValueError('repeated-index variant needs l3 in {l1, l2} and l1 != l2, got %s' % (triple,))
    if variant not in (FULL_TRIPLE, REPEATED_INDEX):
        raise ValueError('unknown variant %r' % variant)
    return OpenLoopSignal(triple, k1, k2, float(epsilon), m or max(triple))
