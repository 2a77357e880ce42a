"""Bits-back coding with ANS for a discrete latent-variable model.

The model has a prior over latents ``z``, a likelihood table per latent and
an approximate posterior table per observation. :func:`bb_ans` composes the
three encoders on the host; :func:`dsl_codec` runs the same construction
through the ``bbAns`` definition in the stdlib, and the two must agree bit
for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .ans import CategoricalTable, make_encoder
from .bijection import Bijection
from .interp import Env, Family, resolve_fexpr
from .values import Int, Pair

MAX_CARDINALITY = 256


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class LatentModel:
    precision: int
    prior: CategoricalTable
    likelihood: tuple[CategoricalTable, ...]  # indexed by latent
    posterior: tuple[CategoricalTable, ...]  # indexed by observation

    @property
    def K(self) -> int:
        return self.prior.n

    @property
    def V(self) -> int:
        return self.likelihood[0].n

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "prior": list(self.prior.freqs),
            "likelihood": [list(t.freqs) for t in self.likelihood],
            "posterior": [list(t.freqs) for t in self.posterior],
        }

    def hash(self) -> bytes:
        """8-byte identifier binding compressed files to this exact model."""
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).digest()[:8]

    def marginal(self) -> list[float]:
        """Quantized marginal P(x) = sum_z P(z) P(x|z)."""
        pz = self.prior.probs()
        return [sum(pz[k] * self.likelihood[k].probs()[v] for k in range(self.K))
                for v in range(self.V)]


def _table(freqs, precision: int, what: str) -> CategoricalTable:
    if not isinstance(freqs, list) or not all(isinstance(f, int) for f in freqs):
        raise ModelError(f"{what}: expected a list of integers")
    try:
        return CategoricalTable(precision, tuple(freqs))
    except ValueError as e:
        raise ModelError(f"{what}: {e}") from None


def model_from_json(obj: dict) -> LatentModel:
    try:
        precision = obj["precision"]
        prior, lik, post = obj["prior"], obj["likelihood"], obj["posterior"]
    except (KeyError, TypeError) as e:
        raise ModelError(f"missing field {e}") from None
    if not isinstance(precision, int):
        raise ModelError("precision must be an integer")
    if not isinstance(prior, list) or not isinstance(lik, list) or not isinstance(post, list):
        raise ModelError("prior, likelihood and posterior must be lists")
    K = len(prior)
    if not 1 <= K <= MAX_CARDINALITY:
        raise ModelError(f"K = {K} out of range [1, {MAX_CARDINALITY}]")
    if len(lik) != K:
        raise ModelError(f"likelihood has {len(lik)} rows, expected K = {K}")
    V = len(lik[0]) if isinstance(lik[0], list) else 0
    if not 1 <= V <= MAX_CARDINALITY:
        raise ModelError(f"V = {V} out of range [1, {MAX_CARDINALITY}]")
    if len(post) != V:
        raise ModelError(f"posterior has {len(post)} rows, expected V = {V}")
    p = _table(prior, precision, "prior")
    likelihood = tuple(_table(row, precision, f"likelihood[{k}]") for k, row in enumerate(lik))
    posterior = tuple(_table(row, precision, f"posterior[{v}]") for v, row in enumerate(post))
    if any(t.n != V for t in likelihood):
        raise ModelError("likelihood rows differ in length")
    if any(t.n != K for t in posterior):
        raise ModelError(f"posterior rows must have K = {K} entries")
    return LatentModel(precision, p, likelihood, posterior)


def load_model(path) -> LatentModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"malformed model file: {e}") from None
    return model_from_json(obj)


def demo_model_path() -> Path:
    return Path(__file__).with_name("data") / "demo_model.json"


def load_demo_model() -> LatentModel:
    return load_model(demo_model_path())


def exact_posterior(model: LatentModel) -> LatentModel:
    """Replace Q with the posterior of the quantized joint, quantized to the model precision.

    When every posterior entry is a multiple of 2^-precision (true of the demo
    model by construction) the result is exact.
    """
    total = 1 << model.precision
    rows = []
    for v in range(model.V):
        joint = [model.prior.freqs[k] * model.likelihood[k].freqs[v] for k in range(model.K)]
        s = sum(joint)
        exact = [Fraction(j * total, s) for j in joint]
        if all(q.denominator == 1 and q >= 1 for q in exact):
            rows.append(CategoricalTable(model.precision, tuple(int(q) for q in exact)))
        else:
            rows.append(CategoricalTable.from_probs([float(q) for q in exact], model.precision))
    return replace(model, posterior=tuple(rows))


def negative_elbo(model: LatentModel, xs: Sequence[int]) -> float:
    """Average over ``xs`` of E_Q[-log2 P(z) - log2 P(x|z) + log2 Q(z|x)], in bits."""
    if len(xs) == 0:
        return 0.0
    pz = model.prior.probs()
    lik = [t.probs() for t in model.likelihood]
    per_symbol = []
    for v in range(model.V):
        q = model.posterior[v].probs()
        per_symbol.append(sum(q[k] * (-math.log2(pz[k]) - math.log2(lik[k][v]) + math.log2(q[k]))
                              for k in range(model.K)))
    counts = [0] * model.V
    for x in xs:
        if not 0 <= x < model.V:
            raise ValueError(f"symbol {x} out of range [0, {model.V})")
        counts[x] += 1
    return sum(c * e for c, e in zip(counts, per_symbol)) / len(xs)


# -- encoders ------------------------------------------------------------------------


def prior_encoder(model: LatentModel) -> Bijection:
    return make_encoder(model.prior, name="pz")


def likelihood_family(model: LatentModel) -> Family:
    encs = [make_encoder(t, name=f"pxz[{k}]") for k, t in enumerate(model.likelihood)]
    return Family(lambda z: encs[z.payload], name="pxz")


def posterior_family(model: LatentModel) -> Family:
    encs = [make_encoder(t, name=f"qzx[{v}]") for v, t in enumerate(model.posterior)]
    return Family(lambda x: encs[x.payload], name="qzx")


def bb_ans(pz: Bijection, pxz: Family, qzx: Family) -> Bijection:
    """Host-level composition: an encoder ``(Msg , x) <-> Msg``."""

    def forward(v):
        c, x = v.left, v.right
        step = qzx.at(x).backward(c)          # borrow z from the message
        c, z = step.left, step.right
        c = pxz.at(z).forward(Pair(c, x))
        return pz.forward(Pair(c, z))

    def backward(c):
        step = pz.backward(c)
        c, z = step.left, step.right
        step = pxz.at(z).backward(c)
        c, x = step.left, step.right
        c = qzx.at(x).forward(Pair(c, z))     # give the borrowed bits back
        return Pair(c, x)

    return Bijection(forward, backward, "bb_ans")


def host_codec(model: LatentModel) -> Bijection:
    return bb_ans(prior_encoder(model), likelihood_family(model), posterior_family(model))


def dsl_codec(model: LatentModel, env: Env | None = None) -> Bijection:
    """The stdlib ``bbAns`` definition, interpreted, with the model's encoders as arguments."""
    from .stdlib import load_stdlib

    if env is None:
        env = Env(load_stdlib(), debug=False)
    env = env.with_params(pz=prior_encoder(model), pxz=likelihood_family(model),
                          qzx=posterior_family(model))
    return resolve_fexpr("bbAns pz pxz qzx", env)


def symbols_to_values(xs: Sequence[int]) -> list:
    return [Int(x) for x in xs]
