"""Write the constant all-zeros prediction for every record of a dataset.

Scoring these against the targets gives the no-information reference that
trained models are compared to.
"""

import argparse
from pathlib import Path

import numpy as np

from echomap_trainer.data import SampleSet


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dataset", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    samples = SampleSet(args.dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    zeros = np.zeros((samples.output_dim, samples.output_dim), dtype=np.uint8)
    for rid in samples.record_ids:
        np.save(out / f"{rid}.pred", zeros)
    print(f"wrote {len(samples.record_ids)} zero predictions -> {out}")


if __name__ == "__main__":
    main()
