"""Component ablations: each row switches parts of the method off and
averages BER / PSNR / SSIM over a set of covers."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .embedder import EmbedConfig, EmbedResult, embed
from .fnn import FixedDecoder
from .keystream import StegoKey, random_message


@dataclass(frozen=True)
class AblationRow:
    name: str
    use_cost: bool
    type2: bool
    type3: bool
    two_stage: bool
    iterative_quantize: bool = True

    def apply(self, cfg: EmbedConfig) -> EmbedConfig:
        w = cfg.weights
        w = replace(w, lambda_2=w.lambda_2 if self.type2 else 0.0,
                    lambda_3=w.lambda_3 if self.type3 else 0.0)
        return replace(cfg, weights=w, use_cost=self.use_cost, two_stage=self.two_stage,
                       iterative_quantize=self.iterative_quantize)


# the component table: last row is the full method
COMPONENT_ROWS = (
    AblationRow("baseline", False, False, False, False, iterative_quantize=False),
    AblationRow("no-cost", False, True, True, True),
    AblationRow("no-type2", True, False, True, True),
    AblationRow("no-type3", True, True, False, True),
    AblationRow("one-stage", True, True, True, False),
    AblationRow("full", True, True, True, True),
)
# quantizing only once, after the optimisation
QUANTIZATION_ROWS = (
    AblationRow("one-stage-final-quant", True, True, True, False, iterative_quantize=False),
    AblationRow("two-stage-final-quant", True, True, True, True, iterative_quantize=False),
)

REPORT_FIELDS = ("name", "cost", "type2", "type3", "two_stage", "iter_quant",
                 "ber", "ber_nokey", "ber_wrong", "psnr", "ssim")


@dataclass
class AblationResult:
    row: AblationRow
    ber: float
    ber_nokey: float
    ber_wrong: float
    psnr: float
    ssim: float
    runs: list

    def as_dict(self) -> dict:
        r = self.row
        return dict(name=r.name, cost=r.use_cost, type2=r.type2, type3=r.type3,
                    two_stage=r.two_stage, iter_quant=r.iterative_quantize, ber=self.ber,
                    ber_nokey=self.ber_nokey, ber_wrong=self.ber_wrong, psnr=self.psnr, ssim=self.ssim)


def summarize(row: AblationRow, runs: list[EmbedResult]) -> AblationResult:
    return AblationResult(
        row=row,
        ber=float(np.mean([r.ber_correct for r in runs])),
        ber_nokey=float(np.mean([r.ber_nokey for r in runs])),
        ber_wrong=float(np.mean([r.ber_wrong for r in runs])),
        psnr=float(np.mean([r.psnr for r in runs])),  # inf if any stego equals its cover
        ssim=float(np.mean([r.ssim for r in runs])),
        runs=runs,
    )


def run_ablation(covers, keys: list[StegoKey], decoder: FixedDecoder, base: EmbedConfig,
                 rows=COMPONENT_ROWS, done: dict | None = None, progress=None) -> list[AblationResult]:
    """Embed every cover under every row. ``done`` maps row names to already computed runs."""
    if len(keys) != len(covers):
        raise ValueError("need one key per cover")
    out = []
    for row in rows:
        if done and row.name in done:
            runs = done[row.name]
        else:
            cfg = row.apply(base)
            runs = []
            for cover, key in zip(covers, keys):
                msg = random_message(key, (decoder.payload_depth,) + np.shape(cover)[1:])
                runs.append(embed(cover, msg, key, decoder, cfg))
                if progress is not None:
                    progress(row.name, len(runs))
        out.append(summarize(row, runs))
    return out


def format_table(results: list[AblationResult]) -> str:
    mark = lambda b: "x" if b else "-"  # noqa: E731
    lines = [f"{'row':<22} cost t2 t3 2st iq   BER%   noKey%  wrong%   PSNR   SSIM"]
    for res in results:
        r = res.row
        lines.append(f"{r.name:<22} {mark(r.use_cost):>4} {mark(r.type2):>2} {mark(r.type3):>2} "
                     f"{mark(r.two_stage):>3} {mark(r.iterative_quantize):>2} "
                     f"{100 * res.ber:6.2f} {100 * res.ber_nokey:8.2f} {100 * res.ber_wrong:7.2f} "
                     f"{res.psnr:6.2f} {res.ssim:6.3f}")
    return "\n".join(lines)
