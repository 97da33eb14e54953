"""Print the archetype confusion matrix for the canonical scenario.

Usage: ``python tools/calibrate_sensor.py [sessions_per_bias] [seed]``.
"""

import sys
import tempfile
import time
from importlib import resources

from cogdecoy.agent import BiasProfile
from cogdecoy.harness import ExperimentConfig, evaluate_sensor_accuracy, per_bias_accuracy, run_batch
from cogdecoy.range_model import BIASES


def main(argv):
    per_bias = int(argv[0]) if argv else 20
    seed = int(argv[1]) if len(argv) > 1 else 0
    scenario = str(resources.files("cogdecoy").joinpath("data/canonical_scenario.json"))
    cohort = [(BiasProfile.archetype(b), 1) for b in BIASES]
    with tempfile.TemporaryDirectory() as out:
        start = time.perf_counter()
        cfg = ExperimentConfig(scenario, per_bias * len(BIASES), cohort, seed, out, conditions=("trigger",))
        acc, matrix = evaluate_sensor_accuracy(run_batch(cfg))
        elapsed = time.perf_counter() - start
    print("truth\\inferred " + " ".join(f"{b.value[:6]:>7}" for b in BIASES))
    for b, row in zip(BIASES, matrix):
        print(f"{b.value:<15}" + " ".join(f"{n:>7}" for n in row))
    print(f"accuracy {acc:.3f} in {elapsed:.1f}s")
    print({k: round(v, 3) for k, v in per_bias_accuracy(matrix).items() if v is not None})


if __name__ == "__main__":
    main(sys.argv[1:])
