import argparse
import json
import logging
import sys

from cli.commands import COMMANDS, EXIT_CODES, run_command
from cli.run_config import load_run_config
from tensoray_errors import FileFormatError, TensorayError


def parse_descriptor(text):
    """Phantom / attenuation descriptor given as a JSON object or as a bare kind name ('none' for no attenuation)"""
    if text is None:
        return None
    text = text.strip()
    if text.lower() == "none":
        return "none"
    if text.startswith("{"):
        return json.loads(text)
    return {"kind": text}


def build_parser():
    p = argparse.ArgumentParser(description="Tensor tomography on the disk: forward data, range tests and "
                                            "reconstruction from (attenuated) X-ray data")
    p.add_argument("--cmd", required=True, choices=[COMMANDS.FORWARD, COMMANDS.RANGE_TEST, COMMANDS.RECONSTRUCT,
                                                    COMMANDS.ROUNDTRIP, COMMANDS.VERIFY_H], help="Command to run")
    p.add_argument("--config", help="JSON configuration file (default: built-in defaults)")
    p.add_argument("--phantom", help="Phantom kind or JSON descriptor, overrides the configuration")
    p.add_argument("--attenuation", help="Attenuation kind, JSON descriptor or 'none', overrides the configuration")
    p.add_argument("--out", help="Output directory, overrides the configuration")
    p.add_argument("--fan", help="Fan data file read by range-test and reconstruct (default: <out>/FAN_DATA/fan.bin)")
    p.add_argument("--psi-rule", help="Gauge of the reconstruction: poisson_default (non-attenuated default) or "
                                      "radial_blend (the only gauge with an attenuation)")
    p.add_argument("--seed", type=int, help="Seed of the noise generator")
    p.add_argument("--progress", action="store_true", help="Display progress bars")
    p.add_argument("-v", "--verbose", action="store_true", help="Log at INFO level")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        attenuation = parse_descriptor(args.attenuation)
        overrides = {"phantom": parse_descriptor(args.phantom), "output_dir": args.out, "psi_rule": args.psi_rule,
                     "seed": args.seed, "show_progress": True if args.progress else None,
                     "attenuation": None if attenuation == "none" else attenuation}
        config = load_run_config(args.config, overrides)
        if attenuation == "none":
            config.attenuation = None
    except json.JSONDecodeError as e:
        print(f"CONFIGURATION ERROR: malformed JSON descriptor: {e}")
        return EXIT_CODES.CONFIG
    except (FileFormatError, OSError) as e:
        print(f"I/O ERROR: {e}")
        return EXIT_CODES.IO
    except TensorayError as e:
        print(f"CONFIGURATION ERROR: {e}")
        return EXIT_CODES.CONFIG

    print(f"CONFIG DICT: {config.echo()}\n")
    return run_command(args.cmd, config, args.fan)


if __name__ == '__main__':
    sys.exit(main())
