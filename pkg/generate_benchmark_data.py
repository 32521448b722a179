"""Write the CSV datasets the shipped configs can read into ``data/``.

Diabetes and Breast Cancer come from scikit-learn; the synthetic tables are
regenerated from their configs. Malware and USPS must be supplied by the
user as ``data/malware.csv`` and ``data/usps.csv`` (schemas are in ``data/``).
"""
import argparse
from pathlib import Path

from geoclip.data import export_bundled, gen_synthetic_classification, gen_synthetic_regression
from geoclip.io import write_csv


def create_benchmark_data(out_dir: Path, seed: int = 0):
    written = [
        export_bundled("diabetes", out_dir / "diabetes.csv"),
        export_bundled("breast_cancer", out_dir / "breast_cancer.csv"),
        write_csv(gen_synthetic_regression(seed=seed), out_dir / "synthetic_regression.csv"),
        write_csv(gen_synthetic_classification(seed=seed), out_dir / "synthetic400.csv"),
    ]
    for name in ("malware", "usps"):
        if not (out_dir / f"{name}.csv").exists():
            print(f"Note: {out_dir / (name + '.csv')} not found; supply it to run configs/{name}*.ini")
    return written


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data", help="Output directory (default: data)")
    parser.add_argument("--seed", type=int, default=0, help="Seed of the synthetic tables")
    args = parser.parse_args()

    for path in create_benchmark_data(Path(args.out), args.seed):
        print(f"Generated {path}")
