"""Canonical story domains and their parameterized generators."""

from __future__ import annotations

from ..model import TaskInstance
from . import aladdin, secret_agent, western
from .aladdin import AladdinParams
from .secret_agent import SecretAgentParams
from .western import WesternParams

DOMAIN_IDS = ("secret_agent", "aladdin", "western")

GeneratorParams = SecretAgentParams | AladdinParams | WesternParams


def canonical(domain_id: str) -> TaskInstance:
    builders = {
        "secret_agent": secret_agent.canonical,
        "aladdin": aladdin.canonical,
        "western": western.canonical,
    }
    try:
        return builders[domain_id]()
    except KeyError:
        raise ValueError(f"unknown domain {domain_id!r}; expected one of {DOMAIN_IDS}") from None


def generate(params: GeneratorParams) -> TaskInstance:
    if isinstance(params, SecretAgentParams):
        return secret_agent.generate(params)
    if isinstance(params, AladdinParams):
        return aladdin.generate(params)
    if isinstance(params, WesternParams):
        return western.generate(params)
    raise TypeError(f"unsupported generator params {params!r}")


def params_from_dict(d: dict) -> GeneratorParams:
    d = dict(d)
    kind = d.pop("domain")
    cls = {"secret_agent": SecretAgentParams, "aladdin": AladdinParams, "western": WesternParams}.get(kind)
    if cls is None:
        raise ValueError(f"unknown domain {kind!r}")
    return cls(**d)


gen_secret_agent = secret_agent.generate
gen_aladdin = aladdin.generate
gen_western = western.generate

__all__ = [
    "DOMAIN_IDS", "GeneratorParams", "SecretAgentParams", "AladdinParams", "WesternParams",
    "canonical", "generate", "params_from_dict", "gen_secret_agent", "gen_aladdin", "gen_western",
]
