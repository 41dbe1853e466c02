"""Entry point for a pod running as its own OS process.

Reads a JSON config written by the deployer, builds the pod group, prints
one ``READY {...}`` line with the bound ports, then waits for SIGTERM or
SIGINT and shuts the pod down.
"""

from __future__ import annotations

import json
import signal
import sys
import threading

from ..vnf.base import TargetRef
from .pods import PodGroup
from .topology import PodPlan


def main(argv=None) -> int:
    argv = sys.argv if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m wavecore.orchestrator.podmain CONFIG.json",
              file=sys.stderr)
        return 2
    with open(argv[1], "r", encoding="utf-8") as fh:
        config = json.load(fh)

    targets = {
        name: TargetRef(pod, host, int(port))
        for name, (pod, host, port) in config.get("targets", {}).items()
    }
    pod = PodGroup(
        PodPlan(**config["plan"]),
        daemon_host=config["daemon_host"],
        daemon_port=int(config["daemon_port"]),
        store_endpoints=[(h, int(p)) for h, p in config["store_endpoints"]],
        mode=config.get("mode", "wave"),
        identity=config.get("identity", "ip"),
        targets=targets,
        extras=config.get("extras", {}),
    )
    print("READY " + json.dumps(pod.describe()), flush=True)

    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    stop.wait()
    pod.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
