"""
CLI command → handler registry.

Each handler has the signature:
    def handle_*(args: argparse.Namespace, cfg: Settings) -> int
and returns the process exit code.
"""
from artictwin.commands.evaluate import handle_eval, handle_eval_variance
from artictwin.commands.pipeline import handle_pipeline
from artictwin.commands.stages import handle_coarse, handle_refine, handle_segment
from artictwin.commands.synth import handle_synth

REGISTRY: dict = {
    "synth": handle_synth,
    "coarse": handle_coarse,
    "refine": handle_refine,
    "segment": handle_segment,
    "eval": handle_eval,
    "eval variance": handle_eval_variance,
    "pipeline": handle_pipeline,
}

__all__ = ["REGISTRY"]
