"""Build the working system (store, index, providers) from a Config."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from ..index import LocalHashEmbedder, VectorIndex
from ..planner import MockPlannerProvider
from ..providers import HttpChatProvider, HttpEmbeddingProvider
from ..qa import MockSynthesisProvider
from ..evalsuite import ScriptedJudgeProvider, SystemHandle
from ..store import PeakStore
from .config import Config


@dataclass
class WiredSystem:
    config: Config
    store: PeakStore
    index: VectorIndex
    embedder: object
    planner_provider: object
    synth_provider: object
    judge_provider: object

    def handle(self) -> SystemHandle:
        return SystemHandle(
            store=self.store,
            index=self.index,
            embedder=self.embedder,
            planner_provider=self.planner_provider,
            synth_provider=self.synth_provider,
            judge_provider=self.judge_provider,
            row_limit=self.config.row_limit,
            leg_timeout=self.config.leg_timeout_s,
        )

    def component_health(self) -> dict[str, bool]:
        health = {
            "store": self.store.path.exists(),
            "index": len(self.index) > 0,
        }
        for name, provider in (
            ("planner_provider", self.planner_provider),
            ("synth_provider", self.synth_provider),
            ("embedder", self.embedder),
        ):
            check = getattr(provider, "healthcheck", None)
            health[name] = bool(check()) if check else True
        return health


def build_embedder(config: Config):
    if config.provider == "remote":
        return HttpEmbeddingProvider(
            endpoint=config.embed_endpoint,
            dim=config.embed_dim,
            model=config.model,
            api_key=config.api_key,
        )
    return LocalHashEmbedder(dim=config.embed_dim)


def wire_system(config: Config, require_index: bool = True) -> WiredSystem:
    config.validate()
    store = PeakStore(config.store_file)
    store.init_schema()
    if config.index_file.exists():
        index = VectorIndex.load(config.index_file)
    elif require_index:
        raise ConfigError(
            f"index file not found: {config.index_file} (run build-index first)"
        )
    else:
        index = VectorIndex(dim=config.embed_dim, provider_tag="empty")
    embedder = build_embedder(config)
    if config.provider == "remote":
        planner_provider = HttpChatProvider(
            config.planner_endpoint, model=config.model, api_key=config.api_key
        )
        synth_provider = HttpChatProvider(
            config.synth_endpoint, model=config.model, api_key=config.api_key
        )
        judge_provider = (
            HttpChatProvider(config.judge_endpoint, model=config.model, api_key=config.api_key)
            if config.judge_endpoint
            else ScriptedJudgeProvider(1.0)
        )
    else:
        planner_provider = MockPlannerProvider()
        synth_provider = MockSynthesisProvider()
        judge_provider = ScriptedJudgeProvider(1.0)
    return WiredSystem(
        config=config,
        store=store,
        index=index,
        embedder=embedder,
        planner_provider=planner_provider,
        synth_provider=synth_provider,
        judge_provider=judge_provider,
    )
