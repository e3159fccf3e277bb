"""Live steering service.

Each connection gets its own session: a single simulated agent driven by a
frozen checkpoint at 50 control ticks per second (wall-clock paced by a
configurable slowdown; pacing 0 runs unpaced, for tests). The client
receives one ``hello`` with the skill roster, then one ``state`` message
per tick. Inbound messages switch the active skill directly, route
free-text commands through the language scorer, reset, or pause/resume;
every inbound message is acknowledged by the next state (or an error)
within one tick. ``t`` counts emitted ticks, so it is strictly increasing
for the session's lifetime even across resets and pauses.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass

import numpy as np

from . import language, wire
from .envs import VecEnv
from .language import CaptionSet, NoRouteError
from .sim import SimParams
from .skills import ReferenceDataset
from .training import CheckpointBundle, CheckpointError

log = logging.getLogger(__name__)


@dataclass
class ServiceSettings:
    host: str = "127.0.0.1"
    port: int = 8765
    slowdown: float = 1.0
    stochastic: bool = False
    nli_endpoint: str | None = None
    language_backend: str = language.BACKEND_BUILTIN
    seed: int = 0

    @property
    def pace(self) -> float:
        """Seconds of wall clock per control tick (0 disables pacing)."""
        return 0.02 * self.slowdown


class SessionRuntime:
    """State machine of one steering session, transport-agnostic."""

    def __init__(
        self,
        bundle: CheckpointBundle,
        dataset: ReferenceDataset,
        sim_params: SimParams = SimParams(),
        settings: ServiceSettings = ServiceSettings(),
    ):
        if bundle.num_skills != dataset.num_skills:
            raise CheckpointError(
                f"checkpoint has {bundle.num_skills} skills, "
                f"dataset manifest has {dataset.num_skills}"
            )
        self.bundle = bundle
        self.dataset = dataset
        self.settings = settings
        self.captions = CaptionSet.from_labels(bundle.skills)
        self.rng = np.random.default_rng(settings.seed)
        self.env = VecEnv(
            1, dataset, self.rng, sim_params,
            reset_mode="default", auto_reset=False,
        )
        self.active_skill = 0
        self.env.set_skills([0])
        self.routed_from = None
        self.paused = False
        self.tick = 0
        self.last_r_s = 0.0
        self.dt = sim_params.control_dt

    # -- inbound ------------------------------------------------------------

    def handle_message(self, msg: dict) -> dict | None:
        """Apply one inbound message; an error dict means it was rejected
        (the session survives), None means the next state acknowledges it."""
        mtype = msg["type"]
        if mtype == "set_skill":
            skill_id = msg["skill_id"]
            if not 0 <= skill_id < self.bundle.num_skills:
                return wire.error_message(
                    "bad-skill", f"skill_id {skill_id} out of range"
                )
            self.active_skill = int(skill_id)
            self.env.set_skills([self.active_skill])
            self.routed_from = None
            return None
        if mtype == "command":
            try:
                routed = language.route_command(
                    msg["text"], self.captions,
                    backend=self.settings.language_backend,
                    endpoint=self.settings.nli_endpoint,
                )
            except NoRouteError as exc:
                return wire.error_message("no-route", str(exc))
            except language.BackendError as exc:
                return wire.error_message("backend", str(exc))
            self.active_skill = routed
            self.env.set_skills([routed])
            self.routed_from = msg["text"]
            return None
        if mtype == "reset":
            self._reset_agent()
            return None
        if mtype == "pause":
            self.paused = True
            return None
        if mtype == "resume":
            self.paused = False
            return None
        return wire.error_message("bad-type", f"unhandled message type '{mtype}'")

    def _reset_agent(self):
        self.env.reset_env(0)
        self.env.set_skills([self.active_skill])  # reset keeps the skill
        self.last_r_s = 0.0

    # -- outbound -----------------------------------------------------------

    def step(self) -> list[dict]:
        """Advance one control tick; returns the messages to emit."""
        out_msgs = []
        if not self.paused:
            obs = self.env.observe_policy_base()
            action = self.bundle.policy.act(
                obs, [self.active_skill],
                rng=self.rng, stochastic=self.settings.stochastic,
            )
            result = self.env.step(action)
            if result.diverged[0]:
                self._reset_agent()
                out_msgs.append(wire.error_message(
                    "diverged", "simulation diverged; agent auto-reset"
                ))
            else:
                self.last_r_s = float(self.bundle.disc.style_reward(
                    result.disc_t, result.disc_next, [self.active_skill]
                )[0])
        self.tick += 1
        out_msgs.append(self._state_message())
        return out_msgs

    def _state_message(self) -> dict:
        return wire.state_message(
            t=self.tick * self.dt,
            root_pos=self.env.pos[0],
            root_heading=float(self.env.heading[0]),
            joint_pos=self.env.q[0],
            active_skill=self.active_skill,
            r_s=self.last_r_s,
            routed_from=self.routed_from,
        )

    def hello(self) -> dict:
        return wire.hello_message(self.bundle.skills)


async def run_session(websocket, make_runtime, pace: float):
    """Drive one connection: hello, then the tick loop. Malformed or
    rejected messages produce error messages; the session survives."""
    try:
        runtime = make_runtime()
    except CheckpointError as exc:
        await websocket.send(wire.encode_message(
            wire.error_message("incompatible", str(exc))
        ))
        await websocket.close()
        return
    await websocket.send(wire.encode_message(runtime.hello()))

    inbound: asyncio.Queue = asyncio.Queue()

    async def reader():
        async for raw in websocket:
            await inbound.put(raw)

    reader_task = asyncio.create_task(reader())
    try:
        while not reader_task.done():
            processed = 0
            while not inbound.empty():
                raw = inbound.get_nowait()
                processed += 1
                try:
                    msg = wire.decode_message(raw)
                except wire.WireError as exc:
                    await websocket.send(wire.encode_message(
                        wire.error_message("bad-message", str(exc))
                    ))
                    continue
                if msg["type"] not in wire.INBOUND_TYPES:
                    await websocket.send(wire.encode_message(
                        wire.error_message("bad-type", f"'{msg['type']}' is not inbound")
                    ))
                    continue
                err = runtime.handle_message(msg)
                if err is not None:
                    await websocket.send(wire.encode_message(err))
            if not runtime.paused or processed:
                for msg in runtime.step():
                    await websocket.send(wire.encode_message(msg))
            if pace > 0:
                await asyncio.sleep(pace)
            else:
                await asyncio.sleep(0)
    finally:
        reader_task.cancel()


async def serve(
    bundle: CheckpointBundle,
    dataset: ReferenceDataset,
    settings: ServiceSettings = ServiceSettings(),
    sim_params: SimParams = SimParams(),
    ready: asyncio.Event | None = None,
    sockets_out: list | None = None,
):
    """Accept steering sessions until cancelled. Each session gets an
    independent runtime; the checkpoint is shared read-only."""
    from websockets.asyncio.server import serve as ws_serve

    def make_runtime():
        return SessionRuntime(bundle, dataset, sim_params, settings)

    async def handler(websocket):
        try:
            await run_session(websocket, make_runtime, settings.pace)
        except Exception:  # connection drops are routine
            log.debug("session ended", exc_info=True)

    async with ws_serve(handler, settings.host, settings.port) as server:
        if sockets_out is not None:
            sockets_out.extend(server.sockets)
        if ready is not None:
            ready.set()
        log.info("steering service on ws://%s:%d", settings.host, settings.port)
        await asyncio.get_running_loop().create_future()


def serve_forever(bundle, dataset, settings=ServiceSettings(), sim_params=SimParams()):
    asyncio.run(serve(bundle, dataset, settings, sim_params))
