"""Command-line entry point mirroring :class:`ExtractionSpec`."""

from __future__ import annotations

import json
import sys

import click

from .extract import ExtractionError, ExtractionSpec, extract


@click.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Trained torch model (TorchScript or pickled nn.Module).")
@click.option("--layer", required=True,
              help="Named module whose output is the feature vector.")
@click.option("--data", "data_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Dataset .npz with 'images' and 'labels' arrays.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--mcd-passes", type=int, default=100, show_default=True,
              help="Stochastic forward passes with dropout active.")
@click.option("--no-mcd", is_flag=True, default=False,
              help="Skip the stochastic-pass export.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False),
              help="Knowledge base JSON; class count is checked against the "
                   "model output width.")
def main(model_path, layer, data_path, out_dir, mcd_passes, no_mcd, seed,
         kb_path) -> None:
    """Extract features, softmax outputs, predictions, and dropout passes."""
    try:
        spec = ExtractionSpec(model_path=model_path, layer=layer,
                              data_path=data_path, out_dir=out_dir,
                              mcd_passes=None if no_mcd else mcd_passes,
                              seed=seed, kb_path=kb_path)
        paths = extract(spec)
    except ExtractionError as exc:
        click.echo(json.dumps({"code": 2, "message": str(exc)}), err=True)
        sys.exit(2)
    click.echo(f"wrote {len(paths)} files to {out_dir}")


if __name__ == "__main__":
    main()
