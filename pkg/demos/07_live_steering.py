"""Live steering session end to end, without a browser.

Trains a quick controller, starts the steering service on an ephemeral
port, and drives it over a real websocket: direct skill switches, a
free-text command routed by the builtin scorer, pause/resume, reset.
The browser console under frontend/ speaks exactly this protocol.
"""

import asyncio
import tempfile

from csi import service, skills, wire
from csi.service import ServiceSettings
from csi.training import TrainConfig, Trainer, load_checkpoint_bundle

dataset = skills.generate_reference_dataset(
    skills.skill_table_subset(["walk-forward", "walk-backward", "turn-left", "idle"])
)
print("training a quick controller (300k steps)...")
cfg = TrainConfig(seed=0, total_steps=300_000, checkpoint_interval=0)
result = Trainer(cfg, dataset, tempfile.mkdtemp(prefix="csi_demo_live_")).train()
bundle = load_checkpoint_bundle(result.checkpoint_dir)
print(f"done in {result.wall_seconds:.0f}s\n")


async def drive():
    from websockets.asyncio.client import connect

    settings = ServiceSettings(port=0, slowdown=0.05)   # 20x real time
    ready = asyncio.Event()
    sockets = []
    server = asyncio.create_task(
        service.serve(bundle, dataset, settings, ready=ready, sockets_out=sockets)
    )
    await ready.wait()
    port = sockets[0].getsockname()[1]
    print(f"service on ws://127.0.0.1:{port}")

    async with connect(f"ws://127.0.0.1:{port}") as ws:
        hello = wire.decode_message(await ws.recv())
        print("hello roster:", [s["name"] for s in hello["skills"]])

        async def watch(n, note):
            print(f"--- {note}")
            shown = 0
            while shown < n:
                msg = wire.decode_message(await ws.recv())
                if msg["type"] != "state":
                    print(f"  {msg['type']}: {msg.get('detail', '')}")
                    continue
                shown += 1
                if shown % max(1, n // 3) == 0:
                    routed = f" routed_from={msg['routed_from']!r}" if "routed_from" in msg else ""
                    print(f"  t={msg['t']:7.2f} skill={msg['active_skill']} "
                          f"pos=({msg['root_pos'][0]:+.2f},{msg['root_pos'][1]:+.2f}) "
                          f"r_s={msg['r_s']:.3f}{routed}")

        await watch(30, "walking forward (default skill)")
        await ws.send(wire.encode_message({"type": "set_skill", "skill_id": 2}))
        await watch(30, "set_skill 2 (turn-left)")
        await ws.send(wire.encode_message({"type": "command", "text": "stand still"}))
        await watch(30, 'command "stand still" (routes to idle)')
        await ws.send(wire.encode_message({"type": "reset"}))
        await watch(15, "reset (skill kept, pose zeroed)")
        await ws.send(wire.encode_message({"type": "command", "text": "gibberish xyzzy"}))
        await watch(10, "unroutable command (error, skill kept)")

    server.cancel()


asyncio.run(drive())
print("\nsession closed cleanly")
