"""
Regenerate the comparison datasets for the shipped presets.

Writes CSV files (each with a .meta.json sidecar) into the output directory:
    tails_P2.csv       exact tails vs every estimate, anisotropic 4-simplex
    tails_P3.csv       same for the isotropic 8-simplex, with the complex bound
    mincard_P*.csv     minimum cardinalities over an eps grid, one per preset
    sumjn_N20.csv      sum_{j>=J} j^20 e^{-j} against its bounds

Run from the repository root:
    python scripts/run_figures.py --out-dir figures --workers 4
"""
import argparse
import os
import sys
from pathlib import Path

EPS_GRID = '0.01,0.02,0.05,0.1,0.2,0.3,0.5,1,2,4'


def main():
    script_dir = Path(__file__).resolve().parent
    app_dir = script_dir.parent / "qsiset"
    sys.path.insert(0, str(app_dir))

    from cli import main as cli_main
    from services.presets import list_presets

    parser = argparse.ArgumentParser(description='Regenerate comparison datasets')
    parser.add_argument('--out-dir', default='figures')
    parser.add_argument('--workers', default='1')
    parser.add_argument('--levels', default='0..40', help='Level range for the P2 tail dataset')
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    def out(name):
        return os.path.join(args.out_dir, name)

    runs = [
        ['tail', '--model', 'P2', '--levels', args.levels, '--workers', args.workers, '--out', out('tails_P2.csv')],
        ['tail', '--model', 'P3', '--levels', '0..20', '--workers', args.workers, '--out', out('tails_P3.csv')],
        ['sumjn', '--N', '20', '--levels', '1..40', '--out', out('sumjn_N20.csv')],
    ]
    for preset in list_presets():
        runs.append(['mincard', '--model', preset, '--eps', EPS_GRID, '--out', out(f'mincard_{preset}.csv')])

    failures = 0
    for command in runs:
        print(f"qsiset {' '.join(command)}")
        code = cli_main(command)
        if code != 0:
            print(f"  exited with {code}")
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
