"""Command-line interface: embed, extract, evaluate, cost-map, steganalyze,
ablate and selftest.

Exit status is 0 on success, 1 for user errors (bad flags, unreadable
files, inconsistent configuration) and 2 for internal failures.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, ablation, selftest, steganalysis, synthetic
from .config import (KEY_ENV, PASSPHRASE_ENV, ConfigError, RunConfig, frame_payload,
                     parse_assignments, resolve_key, unframe_payload)
from .cost import hill_cost
from .embedder import TRACE_FIELDS, EmbedError, embed, extract
from .fnn import WeightFileError
from .image import dequantize, load_png_bytes, save_png
from .keystream import StegoKey, random_message
from .png import PNGError

log = logging.getLogger("keyfnns")

EVALUATE_FIELDS = ("image", "bpp", "ber_correct", "ber_nokey", "ber_wrong", "psnr", "ssim")
USER_ERRORS = (ConfigError, PNGError, WeightFileError, OSError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


# argument groups -----------------------------------------------------------

def _add_key_args(p):
    g = p.add_argument_group("key (falls back to $%s, then $%s)" % (KEY_ENV, PASSPHRASE_ENV))
    g.add_argument("--key", help="256-bit key as 64 hex digits")
    g.add_argument("--passphrase", help="passphrase hashed (SHA-256) into the key")


def _add_config_args(p):
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="file of 'key = value' lines (see `keyfnns config`)")
    g.add_argument("--preset", choices=["paper"],
                   help="reset all optimisation settings to the published defaults")
    g.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE",
                   help="override one config field (repeatable)")
    g.add_argument("--bpp", type=int, help="payload depth D in bits per pixel")
    g.add_argument("--epochs", type=int, help="number of outer epochs E")
    g.add_argument("--no-early-exit", action="store_true",
                   help="always run all E epochs")
    g.add_argument("--decoder", choices=["seeded", "periodic"], help="built-in decoder network")
    g.add_argument("--decoder-seed", help="seed text or 64 hex digits for the seeded decoder")
    g.add_argument("--weights", help="decoder weight file (overrides --decoder)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="keyfnns", description="Key-based fixed-neural-network image steganography.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("embed", help="hide a payload in a cover PNG")
    e.add_argument("--cover", required=True)
    e.add_argument("--out", required=True, help="stego PNG to write")
    e.add_argument("--payload", default=None,
                   help="file to hide, or 'random' for a key-derived random bit tensor")
    e.add_argument("--trace", help="CSV of per-iteration loss values")
    _add_key_args(e)
    _add_config_args(e)

    x = sub.add_parser("extract", help="recover a payload from a stego PNG")
    x.add_argument("--stego", required=True)
    x.add_argument("--out", required=True, help="file for the recovered payload")
    x.add_argument("--raw", action="store_true",
                   help="write every decoded bit (packed, MSB first) instead of the framed payload")
    x.add_argument("--no-key", action="store_true", help="decode without any key")
    _add_key_args(x)
    _add_config_args(x)

    v = sub.add_parser("evaluate", help="embed random payloads into a directory of covers")
    v.add_argument("--covers", required=True, help="directory of cover PNGs")
    v.add_argument("--out", required=True, help="CSV of per-image results")
    v.add_argument("--stegos", help="also write the stego PNGs to this directory")
    v.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    _add_key_args(v)
    _add_config_args(v)

    c = sub.add_parser("cost-map", help="write the perturbation cost of a cover")
    c.add_argument("--cover", required=True)
    c.add_argument("--out", required=True, help="grayscale PNG (channel-mean cost scaled to T)")
    c.add_argument("--raw", help="raw little-endian float64 dump, shape (3, H, W), C order")
    c.add_argument("--t", type=float, default=0.5, help="truncation threshold t")
    c.add_argument("--T", type=float, default=3.0, help="truncated cost value T")

    s = sub.add_parser("steganalyze", help="ROC of the fused LSB detector on covers vs stegos")
    s.add_argument("--covers", required=True, help="directory of cover PNGs")
    s.add_argument("--stegos", required=True, help="directory of stego PNGs")
    s.add_argument("--out", required=True, help="ROC points as CSV (fpr, tpr, threshold)")
    s.add_argument("--dat", help="gnuplot data file (AUC in the header comment)")
    s.add_argument("--scores", help="per-image detector scores as CSV")
    s.add_argument("--threshold", type=float, default=steganalysis.DEFAULT_THRESHOLD)

    a = sub.add_parser("ablate", help="component ablation table over a set of covers")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--covers", help="directory of cover PNGs")
    src.add_argument("--synthetic", type=int, metavar="N", help="use N procedural covers")
    a.add_argument("--size", type=int, default=64, help="side of the procedural covers")
    a.add_argument("--out", help="CSV report")
    a.add_argument("--quantization-rows", action="store_true",
                   help="add the two final-quantization-only rows")
    _add_key_args(a)
    _add_config_args(a)

    g = sub.add_parser("config", help="print the effective configuration")
    _add_config_args(g)

    sub.add_parser("selftest", help="run the built-in oracle checks")
    return p


# helpers --------------------------------------------------------------------

def run_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = RunConfig.load(args.config, cfg)
    if args.preset == "paper":
        cfg = cfg.with_published_defaults()
    changes = parse_assignments(args.set)
    for flag, name in (("bpp", "bpp"), ("epochs", "epochs"), ("decoder", "decoder"),
                       ("decoder_seed", "decoder_seed"), ("weights", "weights")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[name] = value
    if args.no_early_exit:
        changes["early_exit"] = False
    for name in ("payload", "trace"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    return cfg.updated(**changes)


def _key(args, cfg: RunConfig, required=True) -> StegoKey | None:
    key = resolve_key(args.key, args.passphrase, cfg.key_env)
    if key is None and required:
        raise ConfigError(f"a key is required: use --key, --passphrase, ${cfg.key_env} or ${PASSPHRASE_ENV}")
    return key


def _pngs(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise ConfigError(f"{directory}: not a directory")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise ConfigError(f"{directory}: no PNG files")
    return files


def _message(cfg: RunConfig, key: StegoKey, hw) -> np.ndarray:
    shape = (cfg.bpp,) + tuple(hw)
    if cfg.payload == "random":
        return random_message(key, shape)
    with open(cfg.payload, "rb") as fh:
        data = fh.read()
    return frame_payload(data, key, shape)


def _write_trace(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
        w.writeheader()
        w.writerows(rows)


# commands -------------------------------------------------------------------

def cmd_embed(args) -> int:
    cfg = run_config(args)
    key = _key(args, cfg)
    cover = load_png_bytes(args.cover)
    decoder = cfg.build_decoder()
    msg = _message(cfg, key, cover.shape[1:])
    result = embed(cover, msg, key, decoder, cfg.embed_config())
    save_png(result.stego, args.out)
    if cfg.trace:
        _write_trace(cfg.trace, result.trace)
    print(f"wrote {args.out}: ber={result.ber_correct:.6f} ber_nokey={result.ber_nokey:.4f} "
          f"ber_wrong={result.ber_wrong:.4f} psnr={result.psnr:.2f} ssim={result.ssim:.4f} "
          f"epochs={result.epochs_run}")
    return 0


def cmd_extract(args) -> int:
    cfg = run_config(args)
    key = None if args.no_key else _key(args, cfg)
    stego = load_png_bytes(args.stego)
    bits = extract(stego, key, cfg.build_decoder())
    if args.raw:
        data = np.packbits(bits.ravel()).tobytes()
    else:
        data = unframe_payload(bits)
        if data is None:
            log.warning("no valid payload length in the decoded bits; writing the raw bit tensor")
            data = np.packbits(bits.ravel()).tobytes()
    with open(args.out, "wb") as fh:
        fh.write(data)
    print(f"wrote {len(data)} bytes to {args.out}")
    return 0


def _evaluate_one(job):
    path, cfg_text, key_hex, stego_dir = job
    cfg = RunConfig.from_text(cfg_text)
    key = StegoKey.from_hex(key_hex)
    cover = load_png_bytes(path)
    decoder = cfg.build_decoder()
    msg = random_message(key, (cfg.bpp,) + cover.shape[1:])
    res = embed(cover, msg, key, decoder, cfg.embed_config())
    if stego_dir:
        save_png(res.stego, Path(stego_dir) / Path(path).name)
    return dict(image=Path(path).name, bpp=cfg.bpp, ber_correct=res.ber_correct,
                ber_nokey=res.ber_nokey, ber_wrong=res.ber_wrong, psnr=res.psnr, ssim=res.ssim)


def cmd_evaluate(args) -> int:
    cfg = run_config(args)
    key = _key(args, cfg)
    files = _pngs(args.covers)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    cfg.build_decoder()  # fail early on a bad model source
    if args.stegos:
        os.makedirs(args.stegos, exist_ok=True)
    jobs = [(str(f), cfg.to_text(), key.hex(), args.stegos) for f in files]
    if args.workers == 1:
        rows = [_evaluate_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_evaluate_one, jobs))
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=EVALUATE_FIELDS)
        w.writeheader()
        w.writerows(rows)
    means = {k: float(np.mean([r[k] for r in rows])) for k in EVALUATE_FIELDS[2:]}
    print(f"{len(rows)} images: " + " ".join(f"{k}={v:.4f}" for k, v in means.items()))
    return 0


def cmd_cost_map(args) -> int:
    cover = dequantize(load_png_bytes(args.cover))
    w = hill_cost(cover, args.t, args.T)
    gray = np.clip(np.floor(w.mean(axis=0) / args.T * 255.0 + 0.5), 0, 255).astype(np.uint8)
    save_png(gray, args.out)
    if args.raw:
        with open(args.raw, "wb") as fh:
            fh.write(w.astype("<f8").tobytes(order="C"))
    print(f"cost range [{w.min():.4g}, {w.max():.4g}], {np.mean(w == args.T):.1%} truncated to T")
    return 0


def cmd_steganalyze(args) -> int:
    rows = []
    for label, directory in (("cover", args.covers), ("stego", args.stegos)):
        for f in _pngs(directory):
            sc = steganalysis.score(load_png_bytes(f))
            rows.append(dict(image=f.name, set=label, chi_square=sc.chi_square, rs=sc.rs,
                             sample_pairs=sc.sample_pairs, fused=sc.fused))
    neg = [r["fused"] for r in rows if r["set"] == "cover"]
    pos = [r["fused"] for r in rows if r["set"] == "stego"]
    curve = steganalysis.roc(neg, pos)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr", "threshold"])
        for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
            w.writerow([repr(float(f)), repr(float(t)), repr(float(th))])
    if args.dat:
        with open(args.dat, "w") as fh:
            fh.write(f"# ROC of the fused detector, AUC = {curve.auc:.6f}\n# fpr tpr\n")
            for f, t in zip(curve.fpr, curve.tpr):
                fh.write(f"{f:.6f} {t:.6f}\n")
    if args.scores:
        with open(args.scores, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    flagged = lambda xs: np.mean(np.asarray(xs) >= args.threshold)  # noqa: E731
    print(f"AUC={curve.auc:.4f}; flagged at threshold {args.threshold}: "
          f"covers {flagged(neg):.1%}, stegos {flagged(pos):.1%}")
    return 0


def cmd_ablate(args) -> int:
    cfg = run_config(args)
    key = _key(args, cfg)
    if args.covers:
        covers = [load_png_bytes(f) for f in _pngs(args.covers)]
    else:
        if args.synthetic < 1:
            raise ConfigError("--synthetic must be >= 1")
        covers = synthetic.corpus(args.synthetic, args.size)
    keys = [key] * len(covers)
    rows = ablation.COMPONENT_ROWS + (ablation.QUANTIZATION_ROWS if args.quantization_rows else ())
    results = ablation.run_ablation(covers, keys, cfg.build_decoder(), cfg.embed_config(), rows,
                                    progress=lambda name, n: log.info("%s: %d/%d", name, n, len(covers)))
    print(ablation.format_table(results))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=ablation.REPORT_FIELDS)
            w.writeheader()
            w.writerows(r.as_dict() for r in results)
    return 0


def cmd_config(args) -> int:
    sys.stdout.write(run_config(args).to_text())
    return 0


def cmd_selftest(args) -> int:
    return 0 if selftest.run() else 2


COMMANDS = {"embed": cmd_embed, "extract": cmd_extract, "evaluate": cmd_evaluate,
            "cost-map": cmd_cost_map, "steganalyze": cmd_steganalyze, "ablate": cmd_ablate,
            "config": cmd_config, "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except EmbedError as exc:
        log.error("embedding failed after %d iterations: %s", len(exc.trace), exc)
        return 2
    except USER_ERRORS as exc:
        log.error("%s", exc)
        return 1
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return 2


if __name__ == "__main__":
    sys.exit(main())
