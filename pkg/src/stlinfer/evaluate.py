"""Model and formula evaluation plus report emission.

The network predicts the positive class when its output is strictly
positive; an output of exactly 0 counts as a negative prediction, the
same convention exact robustness uses for satisfaction.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Tuple, Union

import numpy as np

from .network import ActivationParams, ModelParams, NetworkShape, SlotSpec, network_output
from .stl import Formula, Signal, TemporalOp, robustness
from .trainer import TrainReport

__all__ = [
    "network_mcr",
    "sign_agreement",
    "emit_report",
    "load_model",
]


def network_mcr(
    params: ModelParams,
    shape: NetworkShape,
    p: ActivationParams,
    samples: Iterable[Tuple[Signal, int]],
) -> float:
    """Misclassification rate of the network's output sign."""
    n = 0
    wrong = 0
    for sig, label in samples:
        out = network_output(sig.values, params, shape, p)
        if (out > 0.0) != (label == 1):
            wrong += 1
        n += 1
    if n == 0:
        raise ValueError("cannot compute a misclassification rate on an empty dataset")
    return wrong / n


def sign_agreement(
    params: ModelParams,
    shape: NetworkShape,
    p: ActivationParams,
    formula: Formula,
    samples: Iterable[Tuple[Signal, int]],
) -> float:
    """Fraction of samples where the network's output sign matches the
    formula's exact robustness sign.

    With snapped parameters (integral windows, binary gates, slope <= 1)
    and activation parameters passing the soundness bound this is 1.0.
    """
    n = 0
    agree = 0
    for sig, _ in samples:
        out = network_output(sig.values, params, shape, p)
        rob = robustness(sig, formula, 0)
        if (out > 0.0) == (rob > 0.0):
            agree += 1
        n += 1
    if n == 0:
        raise ValueError("cannot compute sign agreement on an empty dataset")
    return agree / n


def emit_report(report: TrainReport, outdir: Union[str, Path]) -> dict:
    """Write report.json (deterministic), curves.csv (with wall-clock
    seconds) and formula.txt (the pruned formula) into `outdir`."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report.canonical_dict(), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )

    curves_path = out / "curves.csv"
    rows = ["epoch,loss,mcr,seconds"]
    for e, (l, m, s) in enumerate(zip(report.losses, report.train_mcr, report.epoch_seconds)):
        rows.append(f"{e},{l!r},{m!r},{s:.6f}")
    curves_path.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")

    formula_path = out / "formula.txt"
    formula_path.write_text(report.simplified_text + "\n", encoding="utf-8", newline="\n")

    return {"report": report_path, "curves": curves_path, "formula": formula_path}


def load_model(path: Union[str, Path]) -> Tuple[ModelParams, NetworkShape, ActivationParams]:
    """Read back the parameters, shape and activation from a report.json."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        shape = NetworkShape(
            slots=tuple(
                SlotSpec(int(a), int(s), TemporalOp(op)) for a, s, op in payload["shape"]["slots"]
            ),
            m=int(payload["shape"]["m"]),
        )
        params = ModelParams(
            np.array(payload["params"]["b"], dtype=np.float64),
            np.array(payload["params"]["t1"], dtype=np.float64),
            np.array(payload["params"]["t2"], dtype=np.float64),
            np.array(payload["params"]["M"], dtype=np.float64),
        )
        act = payload["activation"]
        p = ActivationParams(
            beta=float(act["beta"]),
            h=float(act["h"]),
            eps=float(act["eps"]),
            slope=float(act["slope"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"{path}: not a valid model report: {e}") from None
    return params, shape, p
